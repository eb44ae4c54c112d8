//! Generate, export and verify a dataset from a slice of the bundled corpus.

use scenesim::config::PipelineConfig;
use scenesim::pipeline::{export_dataset, read_dataset, run_generation, verify_export, Manifest, Vocabularies};
use scenesim::scenario::bundled_corpus;

fn main() -> scenesim::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/example-dataset".into());
    let cfg = PipelineConfig::default();
    let corpus: Vec<_> = bundled_corpus().into_iter().take(20).collect();
    let vocabs = Vocabularies::build(&cfg, corpus[0].t_horizon, corpus[0].dt)?;
    let (samples, stats) = run_generation(&corpus, &cfg, &vocabs, 4)?;
    for r in &stats {
        println!(
            "round {} attempted {:>3} accepted {:>3} cumulative {:>4} (collision {}, offroad {}, reward {}, kinematics {})",
            r.round, r.attempted, r.accepted, r.cumulative_accepted, r.reject_collision, r.reject_offroad, r.reject_reward, r.reject_kinematics
        );
    }
    let manifest = Manifest::new(&cfg, &corpus, samples.len())?;
    let files = export_dataset(&samples, &stats, &manifest, cfg.filter.ep_min, &out)?;
    let report = verify_export(&read_dataset(&files.dataset)?, &corpus, &cfg)?;
    println!("{} samples in {}, {} violations", report.samples, files.dataset.display(), report.violations.len());
    Ok(())
}

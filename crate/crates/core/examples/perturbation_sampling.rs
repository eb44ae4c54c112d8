//! Threshold, filter and sparsify vocabulary perturbations on one scenario.

use std::collections::BTreeMap;

use scenesim::config::PipelineConfig;
use scenesim::pipeline::{prepare_candidates, round_draws};
use scenesim::scenario::bundled_corpus;
use scenesim::vocab::{build_vocabulary, default_samples, CandidateStatus};

fn main() -> scenesim::Result<()> {
    let mut cfg = PipelineConfig::default();
    cfg.vocab.samples = 4096;
    cfg.vocab.k = 256;
    let scenario = &bundled_corpus()[0];
    let raw = default_samples(&cfg.vocab, scenario.t_horizon, scenario.dt, &cfg.sim.vehicle);
    let vocab = build_vocabulary(&raw, cfg.vocab.k, cfg.vocab.seed)?;

    let cands = prepare_candidates(scenario, &vocab, &cfg)?;
    let mut by_status: BTreeMap<String, usize> = BTreeMap::new();
    for c in &cands {
        *by_status.entry(format!("{:?}", c.status)).or_default() += 1;
    }
    println!("{}: {} vocabulary entries", scenario.id, vocab.size());
    for (status, n) in &by_status {
        println!("  {status:<22} {n}");
    }
    let accepted: Vec<usize> = cands.iter().filter(|c| c.status == CandidateStatus::Accepted).map(|c| c.index).collect();
    for (r, draw) in round_draws(&scenario.id, &accepted, &cfg).iter().enumerate() {
        println!("  round {r}: entries {draw:?}");
    }
    Ok(())
}

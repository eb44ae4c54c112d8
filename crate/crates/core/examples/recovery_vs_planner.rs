//! Run both pseudo-experts on the same perturbations and compare outcomes.

use scenesim::config::PipelineConfig;
use scenesim::expert::ExpertKind;
use scenesim::pipeline::{prepare_candidates, simulate_sample, SampleOutcome, Vocabularies};
use scenesim::scenario::bundled_corpus;
use scenesim::vocab::CandidateStatus;

fn main() -> scenesim::Result<()> {
    let cfg = PipelineConfig::default();
    let corpus = bundled_corpus();
    let vocabs = Vocabularies::build(&cfg, corpus[0].t_horizon, corpus[0].dt)?;
    for scenario in corpus.iter().take(5) {
        let cands = prepare_candidates(scenario, &vocabs.clustered, &cfg)?;
        for cand in cands.iter().filter(|c| c.status == CandidateStatus::Accepted).take(3) {
            let mut line = format!("{:<20} entry {:>4}:", scenario.id, cand.index);
            for expert in [ExpertKind::Recovery, ExpertKind::Planner] {
                let verdict = match simulate_sample(scenario, cand, expert, 0, &vocabs, &cfg)? {
                    SampleOutcome::Accepted(s) => format!("accepted epdms={:.3}", s.reward.epdms),
                    SampleOutcome::Rejected { stage, check, .. } => format!("rejected at stage {stage} ({check})"),
                };
                line += &format!("  {}: {verdict:<28}", expert.name());
            }
            println!("{line}");
        }
    }
    Ok(())
}

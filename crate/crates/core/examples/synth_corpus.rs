//! Generate a small synthetic corpus and print a summary of each scenario.

use scenesim::scenario::{generate_synthetic_corpus, validate_scenario, CorpusConfig};

fn main() -> scenesim::Result<()> {
    let cfg = CorpusConfig { count: 10, ..Default::default() };
    for s in generate_synthetic_corpus(&cfg, 42)? {
        let start = s.ego_log.states[s.perturb_frame()];
        println!(
            "{:<20} frames={} lanes={} agents={} lights={} ego v={:.1} m/s diagnostics={}",
            s.id,
            s.frame_count(),
            s.map.lanes.len(),
            s.agents.len(),
            s.map.traffic_lights.len(),
            start.vel_lon,
            validate_scenario(&s).len()
        );
    }
    Ok(())
}

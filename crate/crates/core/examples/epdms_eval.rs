//! Score the logged plan and an authored collision plan on the bundled
//! data scenario.

use std::path::Path;

use scenesim::config::PipelineConfig;
use scenesim::reactive::RolloutMode;
use scenesim::scenario::{load_scenario, load_trajectory};
use scenesim::vocab::check_feasibility;

fn main() -> scenesim::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let cfg = PipelineConfig::default();
    let scenario = load_scenario(data.join("benign_scenario.json"))?;
    for name in ["logged_plan.json", "collision_plan.json"] {
        let plan = load_trajectory(data.join(name))?;
        for mode in [RolloutMode::Reactive, RolloutMode::Nonreactive] {
            let check = check_feasibility(&scenario, &plan, mode, 0.0, &cfg.sim, &cfg.metrics)?;
            let m = check.reward.submetrics;
            println!(
                "{name:<20} {mode:<12?} epdms={:.3} nc={} dac={} ddc={} tlc={} ep={:.2} ttc={} lk={} hc={}",
                check.reward.epdms, m.nc, m.dac, m.ddc, m.tlc, m.ep, m.ttc, m.lk, m.hc
            );
        }
    }
    Ok(())
}

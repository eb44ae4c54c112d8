//! Track a straight reference from a 0.5 m lateral offset.

use scenesim::control::{lqr_track, LqrParams};
use scenesim::kinematics::VehicleParams;
use scenesim::scenario::{TrajFrame, Trajectory, VehicleState};

fn main() -> scenesim::Result<()> {
    let v = 10.0;
    let states = (0..=50).map(|k| VehicleState::at(v * 0.1 * k as f64, 0.0, 0.0, v)).collect();
    let reference = Trajectory::new(0.1, states, TrajFrame::Global)?;
    let mut start = reference.states[0];
    start.pose.y = 0.5;
    let out = lqr_track(&reference, &start, &LqrParams::default(), &VehicleParams::default())?;
    for (k, s) in out.states.iter().enumerate().step_by(5) {
        println!("t={:>3.1}s lateral={:+.4} m heading={:+.4} rad steer={:+.4}", k as f64 * 0.1, s.pose.y, s.pose.theta, s.steering);
    }
    Ok(())
}

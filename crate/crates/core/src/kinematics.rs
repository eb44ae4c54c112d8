//! Kinematic bicycle model.

use serde::{Deserialize, Serialize};

use crate::geometry::normalize_angle;
use crate::scenario::VehicleState;

/// Vehicle geometry and actuation limits shared by the ego and agents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub length: f64,
    pub width: f64,
    /// Commanded acceleration bound (m/s²).
    pub a_cmd_max: f64,
    /// Steering angle bound (rad).
    pub steer_max: f64,
    /// Steering rate bound (rad/s).
    pub steer_rate_max: f64,
    /// Slew limit on the commanded acceleration (m/s³).
    pub jerk_max: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.7,
            length: 4.8,
            width: 2.0,
            a_cmd_max: 3.0,
            steer_max: 0.55,
            steer_rate_max: 0.5,
            jerk_max: 4.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), String> {
        let pos = [
            ("wheelbase", self.wheelbase),
            ("length", self.length),
            ("width", self.width),
            ("a_cmd_max", self.a_cmd_max),
            ("steer_max", self.steer_max),
            ("steer_rate_max", self.steer_rate_max),
            ("jerk_max", self.jerk_max),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("vehicle.{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Largest path curvature the steering clamp allows.
    pub fn max_curvature(&self) -> f64 {
        self.steer_max.tan() / self.wheelbase
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ControlInput {
    pub accel: f64,
    pub steer_rate: f64,
}

impl ControlInput {
    pub fn clamped(self, p: &VehicleParams) -> Self {
        Self {
            accel: self.accel.clamp(-p.a_cmd_max, p.a_cmd_max),
            steer_rate: self.steer_rate.clamp(-p.steer_rate_max, p.steer_rate_max),
        }
    }
}

/// One forward-Euler step of the kinematic bicycle.
///
/// Position and heading advance with the current speed and steering; speed
/// never goes negative and steering is clamped to `steer_max`. The stored
/// `accel` is the acceleration actually realized over the step. Lateral
/// body velocity is zero for this model.
pub fn bicycle_step(state: &VehicleState, u: ControlInput, dt: f64, wheelbase: f64, steer_max: f64) -> VehicleState {
    debug_assert!(dt > 0.0 && wheelbase > 0.0);
    let v = state.vel_lon.max(0.0);
    let delta = state.steering;
    let (s, c) = state.pose.theta.sin_cos();
    let x = state.pose.x + v * c * dt;
    let y = state.pose.y + v * s * dt;
    let theta = normalize_angle(state.pose.theta + v * delta.tan() / wheelbase * dt);
    let v_next = (v + u.accel * dt).max(0.0);
    let steering = (delta + u.steer_rate * dt).clamp(-steer_max, steer_max);
    let mut next = *state;
    next.pose.x = x;
    next.pose.y = y;
    next.pose.theta = theta;
    next.vel_lon = v_next;
    next.vel_lat = 0.0;
    next.steering = steering;
    next.accel = (v_next - v) / dt;
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;

    #[test]
    fn straight_line_advances_exactly() {
        let s = VehicleState::at(0.0, 0.0, 0.0, 10.0);
        let n = bicycle_step(&s, ControlInput::default(), 0.1, 2.7, 0.55);
        assert_eq!(n.pose.x, 1.0);
        assert_eq!(n.pose.y, 0.0);
        assert_eq!(n.pose.theta, 0.0);
    }

    #[test]
    fn no_reverse_from_standstill() {
        let s = VehicleState::at(3.0, 4.0, 0.5, 0.0);
        let n = bicycle_step(&s, ControlInput { accel: -2.0, steer_rate: 0.0 }, 0.1, 2.7, 0.55);
        assert_eq!(n.vel_lon, 0.0);
        assert_eq!(n.pose, s.pose);
        assert_eq!(n.accel, 0.0);
    }

    #[test]
    fn yaw_increment_matches_bicycle_formula() {
        let mut s = VehicleState::at(0.0, 0.0, 0.0, 10.0);
        s.steering = 0.1;
        let n = bicycle_step(&s, ControlInput::default(), 0.1, 2.7, 0.55);
        // dt * v * tan(delta) / L
        let expected = 0.1 * 10.0 * 0.1f64.tan() / 2.7;
        assert!((n.pose.theta - expected).abs() < 1e-15);
        assert!((n.pose.theta - 0.03717).abs() < 1e-5);
    }

    #[test]
    fn steering_is_clamped() {
        let mut s = VehicleState::at(0.0, 0.0, 0.0, 5.0);
        s.steering = 0.54;
        let n = bicycle_step(&s, ControlInput { accel: 0.0, steer_rate: 1.0 }, 0.1, 2.7, 0.55);
        assert_eq!(n.steering, 0.55);
    }

    #[test]
    fn heading_wraps() {
        let mut s = VehicleState::at(0.0, 0.0, std::f64::consts::PI - 1e-3, 10.0);
        s.steering = 0.3;
        s.pose = Pose2D { theta: std::f64::consts::PI - 1e-3, ..s.pose };
        let n = bicycle_step(&s, ControlInput::default(), 0.1, 2.7, 0.55);
        assert!(n.pose.theta < 0.0 && n.pose.theta > -std::f64::consts::PI);
    }
}

//! Scenario data model: vehicle states, trajectories, agent tracks and the
//! symbolic map, plus JSON loading, validation and synthetic corpora.

mod io;
mod synth;
mod validate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, OrientedBox, Polygon, Polyline, Point, Pose2D};

pub use io::{load_scenario, load_trajectory, parse_scenario, scenario_to_json, trajectory_to_json, write_scenario};
pub use synth::{bundled_corpus, generate_synthetic_corpus, CorpusConfig, Template};
pub use validate::{validate_scenario, validate_scenario_with, Diagnostic, ValidationLimits};

/// Kinematic state of one vehicle at one frame.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "StateRecord", into = "StateRecord")]
pub struct VehicleState {
    pub pose: Pose2D,
    /// Body-frame longitudinal speed (m/s).
    pub vel_lon: f64,
    /// Body-frame lateral speed (m/s).
    pub vel_lat: f64,
    pub accel: f64,
    pub steering: f64,
}

impl VehicleState {
    pub fn at(x: f64, y: f64, theta: f64, speed: f64) -> Self {
        Self { pose: Pose2D::new(x, y, theta), vel_lon: speed, ..Default::default() }
    }

    pub fn position(&self) -> Point {
        self.pose.position()
    }

    /// Global-frame velocity vector.
    pub fn velocity(&self) -> [f64; 2] {
        let (s, c) = self.pose.theta.sin_cos();
        [c * self.vel_lon - s * self.vel_lat, s * self.vel_lon + c * self.vel_lat]
    }

    pub fn speed(&self) -> f64 {
        self.vel_lon.hypot(self.vel_lat)
    }

    pub fn with_pose(mut self, pose: Pose2D) -> Self {
        self.pose = pose;
        self
    }

    fn is_finite(&self) -> bool {
        [self.pose.x, self.pose.y, self.pose.theta, self.vel_lon, self.vel_lat, self.accel, self.steering]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Flat wire layout shared by scenario logs, trajectories and exports.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRecord {
    x: f64,
    y: f64,
    theta: f64,
    v_lon: f64,
    v_lat: f64,
    accel: f64,
    steering: f64,
}

impl From<StateRecord> for VehicleState {
    fn from(r: StateRecord) -> Self {
        VehicleState {
            pose: Pose2D::new(r.x, r.y, r.theta),
            vel_lon: r.v_lon,
            vel_lat: r.v_lat,
            accel: r.accel,
            steering: r.steering,
        }
    }
}

impl From<VehicleState> for StateRecord {
    fn from(s: VehicleState) -> Self {
        StateRecord {
            x: s.pose.x,
            y: s.pose.y,
            theta: s.pose.theta,
            v_lon: s.vel_lon,
            v_lat: s.vel_lat,
            accel: s.accel,
            steering: s.steering,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrajFrame {
    #[serde(rename = "global")]
    Global,
    #[serde(rename = "ego-local")]
    EgoLocal,
}

/// Fixed-rate state sequence. A trajectory with `n` states spans `n - 1`
/// steps; a horizon-`H` plan therefore holds `H + 1` states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub dt: f64,
    pub frame: TrajFrame,
    pub states: Vec<VehicleState>,
}

/// Default tolerance (m/s) between finite-difference and stored velocity.
pub const KINEMATIC_TOLERANCE: f64 = 0.05;

impl Trajectory {
    pub fn new(dt: f64, states: Vec<VehicleState>, frame: TrajFrame) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Trajectory(format!("dt must be positive, got {dt}")));
        }
        if states.len() < 2 {
            return Err(Error::Trajectory(format!("need at least 2 states, got {}", states.len())));
        }
        if let Some(i) = states.iter().position(|s| !s.is_finite()) {
            return Err(Error::Trajectory(format!("non-finite state at index {i}")));
        }
        Ok(Self { dt, frame, states })
    }

    /// Number of steps (states − 1).
    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn first(&self) -> &VehicleState {
        &self.states[0]
    }

    pub fn last(&self) -> &VehicleState {
        &self.states[self.states.len() - 1]
    }

    /// Largest mismatch (m/s) between `(p[k+1] - p[k]) / dt` and the stored
    /// body velocity of state `k` rotated into the global frame.
    pub fn kinematic_residual(&self) -> (f64, usize) {
        let mut worst = (0.0, 0);
        for k in 0..self.states.len().saturating_sub(1) {
            let a = &self.states[k];
            let b = &self.states[k + 1];
            let fd = [(b.pose.x - a.pose.x) / self.dt, (b.pose.y - a.pose.y) / self.dt];
            let v = a.velocity();
            let err = (fd[0] - v[0]).hypot(fd[1] - v[1]);
            if err > worst.0 {
                worst = (err, k);
            }
        }
        worst
    }

    pub fn is_kinematically_consistent(&self, tol: f64) -> bool {
        self.kinematic_residual().0 <= tol
    }

    /// Re-express in the frame of `origin` (poses only; body velocities are
    /// frame invariant).
    pub fn relative_to(&self, origin: &Pose2D) -> Trajectory {
        let states = self.states.iter().map(|s| s.with_pose(s.pose.relative_to(origin))).collect();
        Trajectory { dt: self.dt, frame: TrajFrame::EgoLocal, states }
    }

    /// Map a local trajectory into the global frame anchored at `origin`.
    pub fn placed_at(&self, origin: &Pose2D) -> Trajectory {
        let states = self.states.iter().map(|s| s.with_pose(Pose2D::compose(origin, &s.pose))).collect();
        Trajectory { dt: self.dt, frame: TrajFrame::Global, states }
    }

    /// Express in the frame of the first state.
    pub fn to_start_frame(&self) -> Trajectory {
        let origin = self.states[0].pose;
        self.relative_to(&origin)
    }

    /// Every `stride`-th state plus the final state.
    pub fn subsample(&self, stride: usize) -> Trajectory {
        let stride = stride.max(1);
        let mut states: Vec<VehicleState> = self.states.iter().step_by(stride).copied().collect();
        if (self.states.len() - 1) % stride != 0 {
            states.push(*self.last());
        }
        Trajectory { dt: self.dt * stride as f64, frame: self.frame, states }
    }

    /// States `[start, end]` inclusive.
    pub fn window(&self, start: usize, end: usize) -> Result<Trajectory> {
        if end >= self.states.len() || start >= end {
            return Err(Error::OutOfRange { frame: end, frames: self.states.len() });
        }
        Ok(Trajectory { dt: self.dt, frame: self.frame, states: self.states[start..=end].to_vec() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Vehicle,
    Static,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentTrack {
    pub id: String,
    pub length: f64,
    pub width: f64,
    pub kind: AgentKind,
    pub states: Vec<VehicleState>,
}

impl AgentTrack {
    pub fn footprint(&self, frame: usize) -> OrientedBox {
        OrientedBox::new(&self.states[frame].pose, self.length, self.width)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaneDirection {
    /// Traffic flows in polyline order.
    Forward,
    /// Traffic flows against polyline order.
    Backward,
}

pub const DEFAULT_SPEED_LIMIT: f64 = 13.0;

fn default_speed_limit() -> f64 {
    DEFAULT_SPEED_LIMIT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lane {
    pub polyline: Polyline,
    pub width: f64,
    pub direction: LaneDirection,
    #[serde(default = "default_speed_limit")]
    pub speed_limit: f64,
}

impl Lane {
    /// Centerline heading in the direction of travel at foot heading `h`.
    pub fn travel_heading(&self, polyline_heading: f64) -> f64 {
        match self.direction {
            LaneDirection::Forward => polyline_heading,
            LaneDirection::Backward => crate::geometry::normalize_angle(polyline_heading + std::f64::consts::PI),
        }
    }

    /// Centerline in travel order.
    pub fn travel_line(&self) -> Polyline {
        match self.direction {
            LaneDirection::Forward => self.polyline.clone(),
            LaneDirection::Backward => self.polyline.reversed(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightState {
    Red,
    Green,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub t0: f64,
    pub t1: f64,
    pub state: LightState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficLight {
    pub stop_line: [Point; 2],
    pub phases: Vec<Phase>,
}

impl TrafficLight {
    /// Light state at time `t` (seconds from clip start); uncovered times are green.
    pub fn state_at(&self, t: f64) -> LightState {
        self.phases
            .iter()
            .find(|p| t >= p.t0 && t < p.t1)
            .map(|p| p.state)
            .unwrap_or(LightState::Green)
    }
}

/// Lane assignment for a pose: the lane whose corridor contains the point
/// with the best heading agreement, else the laterally nearest lane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaneMatch {
    pub lane: usize,
    /// Signed lateral offset from the centerline (left of polyline order positive).
    pub lateral: f64,
    pub s: f64,
    /// Travel heading of the lane at the foot point.
    pub heading: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapModel {
    pub lanes: Vec<Lane>,
    pub drivable_area: Vec<Polygon>,
    pub route: Polyline,
    pub traffic_lights: Vec<TrafficLight>,
}

impl MapModel {
    pub fn is_drivable(&self, p: Point) -> bool {
        self.drivable_area.iter().any(|poly| poly.contains(p))
    }

    pub fn footprint_drivable(&self, footprint: &OrientedBox) -> bool {
        footprint.corners().iter().all(|c| self.is_drivable(*c))
    }

    pub fn assign_lane(&self, pose: &Pose2D) -> Option<LaneMatch> {
        self.assign_lane_hinted(pose, None)
    }

    /// Lane assignment with optional per-lane segment hints (updated in place).
    pub fn assign_lane_hinted(&self, pose: &Pose2D, mut hints: Option<&mut [usize]>) -> Option<LaneMatch> {
        let mut inside: Option<(f64, LaneMatch)> = None;
        let mut nearest: Option<(f64, LaneMatch)> = None;
        for (i, lane) in self.lanes.iter().enumerate() {
            let proj = match hints.as_deref_mut() {
                Some(h) => {
                    let p = lane.polyline.project_from(pose.position(), h[i]);
                    h[i] = p.segment;
                    p
                }
                None => lane.polyline.project(pose.position()),
            };
            let heading = lane.travel_heading(proj.heading);
            let m = LaneMatch { lane: i, lateral: proj.lateral, s: proj.s, heading };
            let lat = proj.lateral.abs();
            if lat <= 0.5 * lane.width {
                let dev = angle_diff(pose.theta, heading).abs();
                if inside.as_ref().is_none_or(|(d, _)| dev < *d) {
                    inside = Some((dev, m));
                }
            }
            if nearest.as_ref().is_none_or(|(d, _)| lat < *d) {
                nearest = Some((lat, m));
            }
        }
        inside.or(nearest).map(|(_, m)| m)
    }
}

/// One driving clip: `t_history + 2 * t_horizon` steps, i.e.
/// `t_history + 2 * t_horizon + 1` frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub dt: f64,
    pub t_history: usize,
    pub t_horizon: usize,
    pub map: MapModel,
    pub ego_log: Trajectory,
    pub agents: Vec<AgentTrack>,
}

impl Scenario {
    /// Frame count the ego log and every agent track must have.
    pub fn frame_count(&self) -> usize {
        self.t_history + 2 * self.t_horizon + 1
    }

    /// Frame where the perturbation starts (T).
    pub fn perturb_frame(&self) -> usize {
        self.t_history
    }

    /// Frame where the pseudo-expert takes over (T + H).
    pub fn expert_frame(&self) -> usize {
        self.t_history + self.t_horizon
    }

    /// Final frame (T + 2H).
    pub fn final_frame(&self) -> usize {
        self.t_history + 2 * self.t_horizon
    }

    pub fn agent(&self, id: &str) -> Option<&AgentTrack> {
        self.agents.iter().find(|a| a.id == id)
    }

    /// Agent indices in ascending id order.
    pub fn agent_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.agents.len()).collect();
        idx.sort_by(|&a, &b| self.agents[a].id.cmp(&self.agents[b].id));
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(n: usize, v: f64, dt: f64) -> Trajectory {
        let states = (0..n).map(|k| VehicleState::at(v * dt * k as f64, 0.0, 0.0, v)).collect();
        Trajectory::new(dt, states, TrajFrame::Global).unwrap()
    }

    #[test]
    fn trajectory_rejects_degenerate_input() {
        assert!(Trajectory::new(0.1, vec![VehicleState::default()], TrajFrame::Global).is_err());
        assert!(Trajectory::new(0.0, vec![VehicleState::default(); 3], TrajFrame::Global).is_err());
    }

    #[test]
    fn kinematic_residual_zero_for_constant_velocity() {
        let t = straight(41, 5.0, 0.1);
        assert!(t.kinematic_residual().0 < 1e-9);
        let mut bad = t.clone();
        bad.states[3].vel_lon = 6.0;
        let (err, k) = bad.kinematic_residual();
        assert_eq!(k, 3);
        assert!((err - 1.0).abs() < 1e-9);
    }

    #[test]
    fn subsample_keeps_endpoint() {
        let t = straight(41, 5.0, 0.1);
        let s = t.subsample(5);
        assert_eq!(s.states.len(), 9);
        assert!((s.dt - 0.5).abs() < 1e-12);
        assert_eq!(s.last(), t.last());
        let odd = straight(43, 1.0, 0.1).subsample(5);
        assert_eq!(odd.last().pose.x, straight(43, 1.0, 0.1).last().pose.x);
    }

    #[test]
    fn lane_assignment_prefers_aligned_lane_in_overlap() {
        let east = Lane {
            polyline: Polyline::new(vec![[-50.0, 0.0], [50.0, 0.0]]),
            width: 3.5,
            direction: LaneDirection::Forward,
            speed_limit: 13.0,
        };
        let north = Lane {
            polyline: Polyline::new(vec![[0.0, -50.0], [0.0, 50.0]]),
            width: 3.5,
            direction: LaneDirection::Forward,
            speed_limit: 13.0,
        };
        let map = MapModel {
            lanes: vec![north, east],
            drivable_area: vec![],
            route: Polyline::new(vec![[-50.0, 0.0], [50.0, 0.0]]),
            traffic_lights: vec![],
        };
        let m = map.assign_lane(&Pose2D::new(0.0, 0.0, 0.05)).unwrap();
        assert_eq!(m.lane, 1);
        let m = map.assign_lane(&Pose2D::new(0.3, 10.0, 1.5)).unwrap();
        assert_eq!(m.lane, 0);
    }

    #[test]
    fn light_state_defaults_green() {
        let light = TrafficLight {
            stop_line: [[0.0, -2.0], [0.0, 2.0]],
            phases: vec![Phase { t0: 0.0, t1: 2.0, state: LightState::Red }],
        };
        assert_eq!(light.state_at(1.0), LightState::Red);
        assert_eq!(light.state_at(2.0), LightState::Green);
    }
}

//! Rule-based planning metrics: nine sub-scores and their aggregate.
//!
//! Penalty members (nc, dac, ddc, tlc) multiply; the remaining members form
//! a weighted mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, segments_intersect, OrientedBox, Pose2D};
use crate::kinematics::VehicleParams;
use crate::reactive::SceneStates;
use crate::scenario::{AgentKind, LightState, Scenario, Trajectory, VehicleState};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubMetricVector {
    pub nc: f64,
    pub dac: f64,
    pub ddc: f64,
    pub tlc: f64,
    pub ep: f64,
    pub ttc: f64,
    pub lk: f64,
    pub hc: f64,
    pub ec: f64,
}

impl SubMetricVector {
    pub const NAMES: [&'static str; 9] = ["nc", "dac", "ddc", "tlc", "ep", "ttc", "lk", "hc", "ec"];

    pub fn ones() -> Self {
        Self { nc: 1.0, dac: 1.0, ddc: 1.0, tlc: 1.0, ep: 1.0, ttc: 1.0, lk: 1.0, hc: 1.0, ec: 1.0 }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "nc" => self.nc,
            "dac" => self.dac,
            "ddc" => self.ddc,
            "tlc" => self.tlc,
            "ep" => self.ep,
            "ttc" => self.ttc,
            "lk" => self.lk,
            "hc" => self.hc,
            "ec" => self.ec,
            _ => return None,
        })
    }

    pub fn penalty_product(&self) -> f64 {
        self.nc * self.dac * self.ddc * self.tlc
    }

    fn check(&self) -> Result<()> {
        for name in Self::NAMES {
            let v = self.get(name).unwrap_or(f64::NAN);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!("sub-metric {name} = {v} outside [0, 1]")));
            }
        }
        for (name, v) in [("nc", self.nc), ("dac", self.dac), ("ddc", self.ddc), ("tlc", self.tlc)] {
            if v != 0.0 && v != 1.0 {
                return Err(Error::Validation(format!("penalty {name} = {v} is not binary")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricWeights {
    pub ep: f64,
    pub ttc: f64,
    pub lk: f64,
    pub hc: f64,
    pub ec: f64,
}

impl Default for MetricWeights {
    fn default() -> Self {
        Self { ep: 5.0, ttc: 5.0, lk: 2.0, hc: 2.0, ec: 2.0 }
    }
}

impl MetricWeights {
    pub fn sum(&self) -> f64 {
        self.ep + self.ttc + self.lk + self.hc + self.ec
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.ep, self.ttc, self.lk, self.hc, self.ec];
        if all.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("metric weights must be nonnegative: {all:?}")));
        }
        if self.sum() <= 0.0 {
            return Err(Error::ZeroWeightSum);
        }
        Ok(())
    }
}

/// Penalty product times the weighted mean of the remaining sub-scores.
pub fn aggregate_epdms(s: &SubMetricVector, w: &MetricWeights) -> Result<f64> {
    w.validate()?;
    s.check()?;
    let mean = (w.ep * s.ep + w.ttc * s.ttc + w.lk * s.lk + w.hc * s.hc + w.ec * s.ec) / w.sum();
    Ok((s.penalty_product() * mean).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageAggregation {
    #[default]
    Product,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageScores {
    pub s1: f64,
    pub s2: f64,
    pub combined: f64,
}

/// Scores attached to one simulated sample. `epdms` is always the aggregate
/// of `submetrics`; for two-stage evaluation those are the second-stage
/// sub-scores (with `ec` comparing the stages) and `stage_scores` carries
/// both stage aggregates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub submetrics: SubMetricVector,
    pub epdms: f64,
    pub stage_scores: Option<StageScores>,
}

impl RewardRecord {
    pub fn single(submetrics: SubMetricVector, w: &MetricWeights) -> Result<Self> {
        Ok(Self { submetrics, epdms: aggregate_epdms(&submetrics, w)?, stage_scores: None })
    }

    pub fn two_stage(stage1: &SubMetricVector, stage2: &SubMetricVector, cfg: &MetricConfig) -> Result<Self> {
        let s1 = aggregate_epdms(stage1, &cfg.weights)?;
        let s2 = aggregate_epdms(stage2, &cfg.weights)?;
        let combined = match cfg.aggregation {
            StageAggregation::Product => s1 * s2,
            StageAggregation::Mean => 0.5 * (s1 + s2),
        };
        Ok(Self { submetrics: *stage2, epdms: s2, stage_scores: Some(StageScores { s1, s2, combined }) })
    }
}

/// Metric report as written by `eval`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scenario_id: String,
    pub submetrics: SubMetricVector,
    pub epdms: f64,
    pub stage_scores: Option<StageScores>,
}

impl MetricReport {
    pub fn new(scenario_id: &str, r: &RewardRecord) -> Self {
        Self { scenario_id: scenario_id.to_string(), submetrics: r.submetrics, epdms: r.epdms, stage_scores: r.stage_scores }
    }
}

/// Thresholds behind the pinned sub-metric definitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricThresholds {
    /// Ego speed above which a frontal contact is at fault (m/s).
    pub at_fault_speed: f64,
    /// Longest tolerated wrong-way stretch (s).
    pub ddc_max_duration: f64,
    /// Progress reference below which EP is 1 (m).
    pub ep_min_reference: f64,
    pub ttc_min: f64,
    pub ttc_min_speed: f64,
    pub ttc_horizon: f64,
    pub lk_margin: f64,
    pub lk_fraction: f64,
    pub hc_accel: f64,
    pub hc_jerk: f64,
    pub hc_yaw_rate: f64,
    pub hc_yaw_accel: f64,
    pub ec_relative: f64,
    /// Denominator floors for the relative comfort deviation
    /// (accel m/s², jerk m/s³, yaw rate rad/s).
    pub ec_floor: [f64; 3],
}

impl Default for MetricThresholds {
    fn default() -> Self {
        Self {
            at_fault_speed: 0.1,
            ddc_max_duration: 1.0,
            ep_min_reference: 0.1,
            ttc_min: 1.0,
            ttc_min_speed: 0.5,
            ttc_horizon: 3.0,
            lk_margin: 0.3,
            lk_fraction: 0.95,
            hc_accel: 4.0,
            hc_jerk: 8.0,
            hc_yaw_rate: 0.95,
            hc_yaw_accel: 1.9,
            ec_relative: 0.3,
            // small features get absolute tolerances of 0.7 m/s², 0.5 m/s³, 0.1 rad/s
            ec_floor: [0.7 / 0.3, 0.5 / 0.3, 0.1 / 0.3],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub weights: MetricWeights,
    pub thresholds: MetricThresholds,
    pub aggregation: StageAggregation,
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        let t = &self.thresholds;
        if !(0.0..=1.0).contains(&t.lk_fraction) || t.ttc_horizon <= 0.0 || t.ec_floor.iter().any(|f| *f <= 0.0) {
            return Err(Error::Config("metric thresholds out of range".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollisionEvent {
    pub frame: usize,
    pub agent_id: String,
    pub at_fault: bool,
}

/// Per-frame footprints of one agent.
#[derive(Clone, Debug)]
pub struct BoxTrack {
    pub id: String,
    pub boxes: Vec<OrientedBox>,
    pub is_static: bool,
}

/// First contact with each agent, in frame order (ties by agent order).
///
/// A contact is at fault when the ego moves faster than `at_fault_speed`
/// and the centroid of the overlap lies in the ego's front half, or when the
/// other body is static.
pub fn find_collisions(ego: &[OrientedBox], ego_speed: &[f64], agents: &[BoxTrack], at_fault_speed: f64) -> Vec<CollisionEvent> {
    let mut events = Vec::new();
    for a in agents {
        let n = ego.len().min(a.boxes.len());
        if let Some(k) = (0..n).find(|&k| ego[k].overlaps(&a.boxes[k])) {
            let at_fault = a.is_static || (ego_speed[k] > at_fault_speed && contact_in_front(&ego[k], &a.boxes[k]));
            events.push(CollisionEvent { frame: k, agent_id: a.id.clone(), at_fault });
        }
    }
    events.sort_by_key(|e| e.frame);
    events
}

fn contact_in_front(ego: &OrientedBox, other: &OrientedBox) -> bool {
    let poly = ego.intersection(other);
    let c = if poly.is_empty() {
        // touching only: use the midpoint between centers
        [0.5 * (ego.center[0] + other.center[0]), 0.5 * (ego.center[1] + other.center[1])]
    } else {
        let n = poly.len() as f64;
        [poly.iter().map(|p| p[0]).sum::<f64>() / n, poly.iter().map(|p| p[1]).sum::<f64>() / n]
    };
    let (s, co) = ego.heading.sin_cos();
    (c[0] - ego.center[0]) * co + (c[1] - ego.center[1]) * s > 0.0
}

/// First frame at which the ego overlaps any agent.
pub fn check_collision(ego: &[OrientedBox], ego_speed: &[f64], agents: &[BoxTrack], at_fault_speed: f64) -> Option<CollisionEvent> {
    find_collisions(ego, ego_speed, agents, at_fault_speed).into_iter().next()
}

fn ego_boxes(states: &[VehicleState], vehicle: &VehicleParams) -> Vec<OrientedBox> {
    states.iter().map(|s| OrientedBox::new(&s.pose, vehicle.length, vehicle.width)).collect()
}

pub fn agent_box_tracks(states: &SceneStates, scenario: &Scenario) -> Vec<BoxTrack> {
    scenario
        .agents
        .iter()
        .zip(&states.agents)
        .map(|(a, st)| BoxTrack {
            id: a.id.clone(),
            boxes: st.states.iter().map(|s| OrientedBox::new(&s.pose, a.length, a.width)).collect(),
            is_static: a.kind == AgentKind::Static,
        })
        .collect()
}

/// Which agents count toward time-to-collision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TtcFilter {
    /// Frames where the ego is slower are skipped.
    pub min_ego_speed: f64,
    /// Only agents whose center is ahead of the ego.
    pub ahead_only: bool,
}

impl TtcFilter {
    pub const NONE: TtcFilter = TtcFilter { min_ego_speed: f64::NEG_INFINITY, ahead_only: false };
}

fn advance(s: &VehicleState, t: f64) -> Pose2D {
    let v = s.velocity();
    Pose2D::new(s.pose.x + v[0] * t, s.pose.y + v[1] * t, s.pose.theta)
}

/// Minimum over frames of the earliest projected overlap time.
///
/// At every frame all bodies are extrapolated at constant velocity for up to
/// `horizon` seconds in steps of `states.dt`; touching counts as overlap.
/// Returns `f64::INFINITY` when nothing ever overlaps.
pub fn time_to_collision(states: &SceneStates, ego_extent: (f64, f64), agent_extents: &[(f64, f64)], horizon: f64, filter: TtcFilter) -> f64 {
    let dt = states.dt;
    let steps = (horizon / dt + 1e-9).floor() as usize;
    let mut best = f64::INFINITY;
    for k in 0..states.len() {
        let ego = &states.ego[k];
        if ego.vel_lon <= filter.min_ego_speed {
            continue;
        }
        let (hs, hc) = ego.pose.theta.sin_cos();
        for (a, &(len, wid)) in states.agents.iter().zip(agent_extents) {
            let other = &a.states[k];
            if filter.ahead_only && (other.pose.x - ego.pose.x) * hc + (other.pose.y - ego.pose.y) * hs <= 0.0 {
                continue;
            }
            // reachability prefilter
            let reach = (ego.speed() + other.speed()) * horizon
                + 0.5 * (ego_extent.0.hypot(ego_extent.1) + len.hypot(wid));
            if (other.pose.x - ego.pose.x).hypot(other.pose.y - ego.pose.y) > reach {
                continue;
            }
            for j in 0..=steps {
                let t = j as f64 * dt;
                if t >= best {
                    break;
                }
                let eb = OrientedBox::new(&advance(ego, t), ego_extent.0, ego_extent.1);
                let ob = OrientedBox::new(&advance(other, t), len, wid);
                if eb.overlaps(&ob) {
                    best = t;
                    break;
                }
            }
        }
    }
    best
}

/// Maximum |accel|, |jerk| and |yaw rate| of an ego state sequence.
pub fn comfort_features(states: &[VehicleState], dt: f64) -> [f64; 3] {
    let accel = states.iter().map(|s| s.accel.abs()).fold(0.0, f64::max);
    let jerk = states.windows(2).map(|w| ((w[1].accel - w[0].accel) / dt).abs()).fold(0.0, f64::max);
    let yaw = states
        .windows(2)
        .map(|w| (angle_diff(w[1].pose.theta, w[0].pose.theta) / dt).abs())
        .fold(0.0, f64::max);
    [accel, jerk, yaw]
}

/// Extended comfort: 1 when every feature of `stage2` is within the relative
/// tolerance of `stage1`.
pub fn extended_comfort(stage1: [f64; 3], stage2: [f64; 3], th: &MetricThresholds) -> f64 {
    let ok = (0..3).all(|i| (stage2[i] - stage1[i]).abs() / stage1[i].abs().max(th.ec_floor[i]) <= th.ec_relative);
    if ok {
        1.0
    } else {
        0.0
    }
}

fn history_comfort(ego: &[VehicleState], dt: f64, th: &MetricThresholds) -> bool {
    let yaw_rates: Vec<f64> = ego.windows(2).map(|w| angle_diff(w[1].pose.theta, w[0].pose.theta) / dt).collect();
    ego.iter().all(|s| s.accel.abs() <= th.hc_accel)
        && ego.windows(2).all(|w| ((w[1].accel - w[0].accel) / dt).abs() <= th.hc_jerk)
        && yaw_rates.iter().all(|r| r.abs() <= th.hc_yaw_rate)
        && yaw_rates.windows(2).all(|w| ((w[1] - w[0]) / dt).abs() <= th.hc_yaw_accel)
}

/// Nine sub-scores of the simulated window `states`.
///
/// `ego_traj` is the ego's combined history and plan used for history
/// comfort; its final `states.len()` states must coincide with
/// `states.ego`. `ec` is 1 here; use [`extended_comfort`] for two-stage
/// evaluation.
pub fn compute_submetrics(
    states: &SceneStates,
    scenario: &Scenario,
    ego_traj: &Trajectory,
    cfg: &MetricConfig,
    vehicle: &VehicleParams,
) -> Result<SubMetricVector> {
    check_alignment(states, scenario, ego_traj)?;
    let th = &cfg.thresholds;
    let map = &scenario.map;
    let dt = states.dt;
    let ego = &states.ego;

    let boxes = ego_boxes(ego, vehicle);
    let speeds: Vec<f64> = ego.iter().map(|s| s.vel_lon).collect();
    let tracks = agent_box_tracks(states, scenario);
    let nc = if find_collisions(&boxes, &speeds, &tracks, th.at_fault_speed).iter().any(|e| e.at_fault) { 0.0 } else { 1.0 };

    let dac = if boxes.iter().all(|b| map.footprint_drivable(b)) { 1.0 } else { 0.0 };

    // per-frame lane assignment for direction compliance
    let mut hints: Vec<usize> = map.lanes.iter().map(|l| l.polyline.project(ego[0].position()).segment).collect();
    let mut run = 0usize;
    let mut worst_run = 0usize;
    for s in ego {
        let wrong = map
            .assign_lane_hinted(&s.pose, Some(&mut hints))
            .is_some_and(|m| angle_diff(s.pose.theta, m.heading).abs() > std::f64::consts::FRAC_PI_2);
        run = if wrong { run + 1 } else { 0 };
        worst_run = worst_run.max(run);
    }
    let ddc = if worst_run as f64 * dt <= th.ddc_max_duration + 1e-9 { 1.0 } else { 0.0 };

    let mut tlc = 1.0;
    'lights: for light in &map.traffic_lights {
        for k in 0..ego.len() - 1 {
            let t = (states.t_start + k + 1) as f64 * dt;
            if light.state_at(t) == LightState::Red
                && segments_intersect(ego[k].position(), ego[k + 1].position(), light.stop_line[0], light.stop_line[1])
            {
                tlc = 0.0;
                break 'lights;
            }
        }
    }

    let route = &map.route;
    let progress = |a: &VehicleState, b: &VehicleState| route.project(b.position()).s - route.project(a.position()).s;
    let reference = progress(&scenario.ego_log.states[states.t_start], &scenario.ego_log.states[states.t_end]);
    let ep = if reference < th.ep_min_reference {
        1.0
    } else {
        (progress(&ego[0], &ego[ego.len() - 1]) / reference).clamp(0.0, 1.0)
    };

    let extents: Vec<(f64, f64)> = scenario.agents.iter().map(|a| (a.length, a.width)).collect();
    let filter = TtcFilter { min_ego_speed: th.ttc_min_speed, ahead_only: true };
    let ttc_min = time_to_collision(states, (vehicle.length, vehicle.width), &extents, th.ttc_horizon, filter);
    let ttc = if ttc_min >= th.ttc_min { 1.0 } else { 0.0 };

    let lk = match map.assign_lane(&ego[0].pose) {
        None => 1.0,
        Some(m) => {
            let lane = &map.lanes[m.lane];
            let mut hint = lane.polyline.project(ego[0].position()).segment;
            let ok = ego
                .iter()
                .filter(|s| {
                    let p = lane.polyline.project_from(s.position(), hint);
                    hint = p.segment;
                    p.lateral.abs() <= 0.5 * lane.width + th.lk_margin
                })
                .count();
            if ok as f64 >= th.lk_fraction * ego.len() as f64 - 1e-9 {
                1.0
            } else {
                0.0
            }
        }
    };

    let hc = if history_comfort(&ego_traj.states, dt, th) { 1.0 } else { 0.0 };

    Ok(SubMetricVector { nc, dac, ddc, tlc, ep, ttc, lk, hc, ec: 1.0 })
}

fn check_alignment(states: &SceneStates, scenario: &Scenario, ego_traj: &Trajectory) -> Result<()> {
    let n = states.ego.len();
    if n < 2 || states.t_end - states.t_start + 1 != n {
        return Err(Error::WindowMisaligned(format!("window [{}, {}] holds {n} frames", states.t_start, states.t_end)));
    }
    if (states.dt - scenario.dt).abs() > 1e-12 {
        return Err(Error::DtMismatch { expected: scenario.dt, actual: states.dt });
    }
    if states.t_end >= scenario.frame_count() {
        return Err(Error::OutOfRange { frame: states.t_end, frames: scenario.frame_count() });
    }
    if states.agents.len() != scenario.agents.len() || states.agents.iter().any(|a| a.states.len() != n) {
        return Err(Error::WindowMisaligned("agent sequences do not match the ego window".into()));
    }
    let m = ego_traj.states.len();
    if m < n {
        return Err(Error::WindowMisaligned(format!("ego trajectory has {m} states, window needs {n}")));
    }
    let tail = &ego_traj.states[m - n..];
    if tail.iter().zip(&states.ego).any(|(a, b)| (a.pose.x - b.pose.x).abs() > 1e-6 || (a.pose.y - b.pose.y).abs() > 1e-6) {
        return Err(Error::WindowMisaligned("ego trajectory does not end on the simulated ego states".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::reactive::AgentStates;

    #[test]
    fn aggregate_identity_and_annihilation() {
        let w = MetricWeights::default();
        assert_eq!(aggregate_epdms(&SubMetricVector::ones(), &w).unwrap(), 1.0);
        let s = SubMetricVector { dac: 0.0, ..SubMetricVector::ones() };
        assert_eq!(aggregate_epdms(&s, &w).unwrap(), 0.0);
    }

    #[test]
    fn weighted_mean_example() {
        let s = SubMetricVector { ep: 0.8, ec: 0.5, ..SubMetricVector::ones() };
        let v = aggregate_epdms(&s, &MetricWeights::default()).unwrap();
        // (5*0.8 + 5 + 2 + 2 + 2*0.5) / 16
        assert!((v - 14.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weights_rejected() {
        let w = MetricWeights { ep: 0.0, ttc: 0.0, lk: 0.0, hc: 0.0, ec: 0.0 };
        assert!(matches!(aggregate_epdms(&SubMetricVector::ones(), &w), Err(Error::ZeroWeightSum)));
    }

    fn unit(x: f64, y: f64, h: f64) -> OrientedBox {
        OrientedBox { center: [x, y], heading: h, half_length: 0.5, half_width: 0.5 }
    }

    fn track(id: &str, b: OrientedBox, is_static: bool) -> BoxTrack {
        BoxTrack { id: id.into(), boxes: vec![b], is_static }
    }

    #[test]
    fn unit_square_contacts() {
        let ego = [unit(0.0, 0.0, 0.0)];
        let hit = check_collision(&ego, &[1.0], &[track("a", unit(0.5, 0.0, 0.0), false)], 0.1).unwrap();
        assert_eq!(hit.frame, 0);
        assert!(hit.at_fault);
        assert!(check_collision(&ego, &[1.0], &[track("a", unit(2.0, 0.0, 0.0), false)], 0.1).is_none());
    }

    #[test]
    fn rear_contact_not_at_fault_unless_static() {
        let ego = [unit(0.0, 0.0, 0.0)];
        let behind = track("r", unit(-0.8, 0.0, 0.0), false);
        assert!(!check_collision(&ego, &[5.0], &[behind.clone()], 0.1).unwrap().at_fault);
        let parked = BoxTrack { is_static: true, ..behind };
        assert!(check_collision(&ego, &[5.0], &[parked], 0.1).unwrap().at_fault);
        // stationary ego hit from the front is not at fault
        let front = track("f", unit(0.8, 0.0, 0.0), false);
        assert!(!check_collision(&ego, &[0.0], &[front], 0.1).unwrap().at_fault);
    }

    fn point_in_convex(p: Point, poly: &[Point; 4]) -> bool {
        (0..4).all(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % 4];
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-12
        })
    }

    #[test]
    fn rotated_square_matches_vertex_edge_oracle() {
        let a = unit(0.0, 0.0, 0.0);
        let b = unit(1.2, 0.0, std::f64::consts::FRAC_PI_4);
        let (ca, cb) = (a.corners(), b.corners());
        let oracle = ca.iter().any(|p| point_in_convex(*p, &cb))
            || cb.iter().any(|p| point_in_convex(*p, &ca))
            || (0..4).any(|i| (0..4).any(|j| segments_intersect(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4])));
        // rotated half-diagonal 0.707 reaches x = 0.493 < 0.5
        assert!(oracle);
        assert_eq!(a.overlaps(&b), oracle);
    }

    fn scene(ego: Vec<VehicleState>, agents: Vec<Vec<VehicleState>>) -> SceneStates {
        let n = ego.len();
        SceneStates {
            dt: 0.1,
            t_start: 0,
            t_end: n - 1,
            ego,
            agents: agents.into_iter().enumerate().map(|(i, states)| AgentStates { id: format!("a{i}"), states }).collect(),
        }
    }

    #[test]
    fn ttc_stopped_leader() {
        // bumper gap 20 m at a 10 m/s closing speed
        let ego = vec![VehicleState::at(0.0, 0.0, 0.0, 10.0)];
        let lead = vec![VehicleState::at(20.0 + 4.8, 0.0, 0.0, 0.0)];
        let s = scene(ego, vec![lead]);
        let t = time_to_collision(&s, (4.8, 2.0), &[(4.8, 2.0)], 3.0, TtcFilter::NONE);
        assert!((t - 2.0).abs() < 1e-12, "{t}");
    }

    #[test]
    fn ttc_infinite_cases() {
        let ego = vec![VehicleState::at(0.0, 0.0, 0.0, 10.0)];
        assert_eq!(time_to_collision(&scene(ego.clone(), vec![]), (4.8, 2.0), &[], 3.0, TtcFilter::NONE), f64::INFINITY);
        let away = vec![VehicleState::at(10.0, 0.0, 0.0, 15.0)];
        let t = time_to_collision(&scene(ego, vec![away]), (4.8, 2.0), &[(4.8, 2.0)], 3.0, TtcFilter::NONE);
        assert_eq!(t, f64::INFINITY);
    }

    #[test]
    fn extended_comfort_tolerance() {
        let th = MetricThresholds::default();
        assert_eq!(extended_comfort([2.0, 3.0, 0.2], [2.5, 3.5, 0.25], &th), 1.0);
        assert_eq!(extended_comfort([2.0, 3.0, 0.2], [3.0, 3.0, 0.2], &th), 0.0);
        // floors keep tiny features from dominating
        assert_eq!(extended_comfort([0.0, 0.0, 0.0], [0.25, 0.5, 0.02], &th), 1.0);
    }
}

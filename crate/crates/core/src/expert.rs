//! Pseudo-experts that label the second simulation stage: nearest-neighbour
//! recovery retrieval and a privileged rule-based planner, plus the
//! filter that decides whether a labelled sample is kept.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, normalize_angle, Point, Polyline, Pose2D};
use crate::kinematics::VehicleParams;
use crate::metrics::{aggregate_epdms, comfort_features, compute_submetrics, extended_comfort, MetricConfig, MetricWeights, SubMetricVector};
use crate::reactive::{idm_accel, rollout, IdmParams, Leader, RolloutMode, SceneFrame, SceneStates, SimConfig};
use crate::scenario::{LightState, Scenario, TrajFrame, Trajectory, VehicleState};
use crate::vocab::Vocabulary;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpertKind {
    #[default]
    Planner,
    Recovery,
}

impl ExpertKind {
    pub fn name(self) -> &'static str {
        match self {
            ExpertKind::Planner => "planner",
            ExpertKind::Recovery => "recovery",
        }
    }
}

impl std::str::FromStr for ExpertKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planner" => Ok(ExpertKind::Planner),
            "recovery" => Ok(ExpertKind::Recovery),
            _ => Err(Error::Config(format!("unknown expert '{s}' (expected planner or recovery)"))),
        }
    }
}

/// Retrieval key `[v_lon, v_lat, theta0, x_end, y_end, theta_end]` in the
/// frame of the trajectory start. Angles sit at indices 2 and 5.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingVector(pub [f64; 6]);

const ANGULAR: [bool; 6] = [false, false, true, false, false, true];

impl MatchingVector {
    /// Weighted L1 distance with wrapped angular components.
    pub fn distance(&self, other: &MatchingVector, scales: &[f64; 6]) -> f64 {
        let mut d = 0.0;
        for i in 0..6 {
            let diff = if ANGULAR[i] { angle_diff(self.0[i], other.0[i]) } else { self.0[i] - other.0[i] };
            d += scales[i] * diff.abs();
        }
        d
    }
}

pub fn build_matching_vector(traj: &Trajectory, horizon: usize) -> Result<MatchingVector> {
    if traj.states.len() != horizon + 1 {
        return Err(Error::HorizonMismatch { expected: horizon, actual: traj.horizon() });
    }
    let s0 = traj.first();
    let end = traj.last().pose.relative_to(&s0.pose);
    Ok(MatchingVector([s0.vel_lon, s0.vel_lat, 0.0, end.x, end.y, end.theta]))
}

/// Key for recovering from `current` toward the logged `goal` pose.
pub fn recovery_target(current: &VehicleState, goal: &Pose2D) -> MatchingVector {
    let end = goal.relative_to(&current.pose);
    MatchingVector([current.vel_lon, current.vel_lat, 0.0, end.x, end.y, end.theta])
}

/// Precomputed matching vectors of a vocabulary.
#[derive(Clone, Debug)]
pub struct RecoveryIndex {
    keys: Vec<MatchingVector>,
}

impl RecoveryIndex {
    pub fn new(vocab: &Vocabulary) -> Result<Self> {
        let h = vocab.horizon();
        let keys = vocab.entries.iter().map(|t| build_matching_vector(t, h)).collect::<Result<Vec<_>>>()?;
        if keys.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        Ok(Self { keys })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Index of the nearest key; ties go to the lowest index.
    pub fn retrieve(&self, target: &MatchingVector, scales: &[f64; 6]) -> usize {
        let mut best = (f64::INFINITY, 0usize);
        for (i, k) in self.keys.iter().enumerate() {
            let d = target.distance(k, scales);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}

pub fn recovery_retrieve(target: &MatchingVector, vocab: &Vocabulary, scales: &[f64; 6]) -> Result<usize> {
    Ok(RecoveryIndex::new(vocab)?.retrieve(target, scales))
}

/// Proposal grid and scoring weights of the privileged planner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    /// Target speed as a fraction of the followed lane's speed limit.
    pub speed_fractions: Vec<f64>,
    /// Lateral offsets from the followed centerline (m).
    pub lateral_offsets: Vec<f64>,
    /// Proportional gain toward the target speed (1/s).
    pub speed_gain: f64,
    /// Lateral blend distance (m); also used when leaving a lane that runs
    /// against the ego.
    pub blend_distance: f64,
    /// Blend distance per m/s of initial speed (s) within a lane.
    pub blend_time: f64,
    pub idm: IdmParams,
    pub weights: MetricWeights,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            speed_fractions: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            lateral_offsets: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            speed_gain: 0.6,
            blend_distance: 20.0,
            blend_time: 4.0,
            idm: IdmParams::default(),
            weights: MetricWeights::default(),
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        if self.speed_fractions.is_empty() || self.lateral_offsets.is_empty() {
            return Err(Error::Config("planner needs at least one speed fraction and one lateral offset".into()));
        }
        if self.speed_fractions.iter().chain(&self.lateral_offsets).any(|v| !v.is_finite())
            || self.speed_fractions.iter().any(|f| *f < 0.0)
        {
            return Err(Error::Config("planner proposal grid must be finite with nonnegative speed fractions".into()));
        }
        if !(self.speed_gain > 0.0 && self.blend_distance > 0.0 && self.blend_time >= 0.0) {
            return Err(Error::Config("planner gains must be positive".into()));
        }
        self.idm.validate().map_err(Error::Config)?;
        self.weights.validate()
    }

    pub fn proposal_count(&self) -> usize {
        self.speed_fractions.len() * self.lateral_offsets.len()
    }
}

/// Scoring context of a second-stage plan.
#[derive(Clone, Copy, Debug)]
pub struct PlanContext<'a> {
    /// Scene state at the plan start; the log when `None`.
    pub init: Option<&'a SceneFrame>,
    /// Ego states strictly before the plan start.
    pub history: &'a [VehicleState],
    /// Comfort features of the preceding stage, enabling extended comfort.
    pub stage1_comfort: Option<[f64; 3]>,
    pub mode: RolloutMode,
    pub sim: &'a SimConfig,
    pub metrics: &'a MetricConfig,
}

/// A plan rolled out and scored in its context.
#[derive(Clone, Debug)]
pub struct ScoredPlan {
    pub plan: Trajectory,
    pub states: SceneStates,
    pub submetrics: SubMetricVector,
    pub score: f64,
}

/// Roll `plan` out from frame `t` and score the window.
pub fn score_plan(scenario: &Scenario, t: usize, plan: Trajectory, weights: &MetricWeights, ctx: &PlanContext) -> Result<ScoredPlan> {
    let states = rollout(scenario, &plan, t, plan.horizon(), ctx.mode, ctx.init, ctx.sim)?;
    let mut ego = ctx.history.to_vec();
    ego.extend_from_slice(&states.ego);
    let ego_traj = Trajectory { dt: scenario.dt, frame: TrajFrame::Global, states: ego };
    let mut submetrics = compute_submetrics(&states, scenario, &ego_traj, ctx.metrics, &ctx.sim.vehicle)?;
    if let Some(c1) = ctx.stage1_comfort {
        submetrics.ec = extended_comfort(c1, comfort_features(&states.ego, scenario.dt), &ctx.metrics.thresholds);
    }
    let score = aggregate_epdms(&submetrics, weights)?;
    Ok(ScoredPlan { plan, states, submetrics, score })
}

/// Result of the privileged planner: the best proposal and every score.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub best: ScoredPlan,
    pub proposal: usize,
    /// Scores in proposal order (speed-fraction major).
    pub scores: Vec<f64>,
}

struct Obstacle {
    s: f64,
    lat: f64,
    v_s: f64,
    v_l: f64,
    length: f64,
}

/// Privileged rule-based planner over frames `[t, t + H]`.
///
/// Each proposal follows the current lane (the route when the ego is not
/// in a lane running its way) shifted by a lateral offset, blended in from
/// the current offset, at a target speed; the speed profile tracks the
/// target, yields to constant-velocity agents in the path corridor through
/// the IDM interaction term and stops for red lights. Every proposal is
/// rolled out and scored; the highest score wins, ties to the lower index.
pub fn privileged_plan(scenario: &Scenario, t: usize, p: &PlannerParams, ctx: &PlanContext) -> Result<PlanOutcome> {
    p.validate()?;
    let h = scenario.t_horizon;
    let start = match ctx.init {
        Some(f) => f.clone(),
        None => SceneFrame::from_log(scenario, t),
    };
    // follow the current lane when it runs our way, else the route
    let current = scenario
        .map
        .assign_lane(&start.ego.pose)
        .filter(|m| angle_diff(start.ego.pose.theta, m.heading).abs() < std::f64::consts::FRAC_PI_2)
        .map(|m| &scenario.map.lanes[m.lane]);
    let ego_blend = p.blend_distance.max(p.blend_time * start.ego.vel_lon.max(0.0));
    let (line, speed_limit, lane_width, blend) = match current {
        Some(l) => (l.travel_line(), l.speed_limit, l.width, ego_blend),
        None => {
            let route = &scenario.map.route;
            let q = route.project(start.ego.position());
            let (foot, heading) = route.point_at(q.s);
            let (limit, width) = scenario
                .map
                .assign_lane(&Pose2D::new(foot[0], foot[1], heading))
                .map(|m| (scenario.map.lanes[m.lane].speed_limit, scenario.map.lanes[m.lane].width))
                .unwrap_or((crate::scenario::DEFAULT_SPEED_LIMIT, 3.5));
            (route.clone(), limit, width, p.blend_distance)
        }
    };
    if line.len() < 2 {
        return Err(Error::NoProposal);
    }
    let route = &line;
    let proj = route.project(start.ego.position());
    let slope0 = angle_diff(start.ego.pose.theta, proj.heading).tan().clamp(-0.5, 0.5);

    let obstacles: Vec<Obstacle> = scenario
        .agents
        .iter()
        .zip(&start.agents)
        .map(|(a, st)| {
            let q = route.project(st.position());
            let rel = angle_diff(st.pose.theta, q.heading);
            let v = st.speed();
            Obstacle { s: q.s, lat: q.lateral, v_s: v * rel.cos(), v_l: v * rel.sin(), length: a.length }
        })
        .collect();
    let stop_lines: Vec<(usize, f64)> = scenario
        .map
        .traffic_lights
        .iter()
        .enumerate()
        .filter_map(|(i, l)| {
            let a = route.project(l.stop_line[0]);
            let b = route.project(l.stop_line[1]);
            (a.lateral * b.lateral <= 0.0).then_some((i, 0.5 * (a.s + b.s)))
        })
        .collect();

    let mut best: Option<(ScoredPlan, usize)> = None;
    let mut scores = Vec::with_capacity(p.proposal_count());
    let mut idx = 0;
    for &frac in &p.speed_fractions {
        for &offset in &p.lateral_offsets {
            let target = Target { s0: proj.s, lat0: proj.lateral, slope0, blend, speed: frac * speed_limit, offset, half_lane: 0.5 * lane_width };
            let plan = proposal(scenario, route, t, h, &start.ego, &target, &obstacles, &stop_lines, p, &ctx.sim.vehicle);
            let scored = score_plan(scenario, t, plan, &p.weights, ctx)?;
            scores.push(scored.score);
            if best.as_ref().is_none_or(|(b, _)| scored.score > b.score) {
                best = Some((scored, idx));
            }
            idx += 1;
        }
    }
    let (best, proposal) = best.ok_or(Error::NoProposal)?;
    Ok(PlanOutcome { best, proposal, scores })
}

/// Cubic Hermite blend from `(l0, slope m0)` to `(l1, slope 0)` over
/// length `len`; returns the offset and its first two derivatives at `x`.
fn hermite(x: f64, len: f64, l0: f64, m0: f64, l1: f64) -> (f64, f64, f64) {
    if x >= len {
        return (l1, 0.0, 0.0);
    }
    let u = x.max(0.0) / len;
    let (u2, u3) = (u * u, u * u * u);
    let m = m0 * len;
    let l = (2.0 * u3 - 3.0 * u2 + 1.0) * l0 + (u3 - 2.0 * u2 + u) * m + (3.0 * u2 - 2.0 * u3) * l1;
    let dl = ((6.0 * u2 - 6.0 * u) * l0 + (3.0 * u2 - 4.0 * u + 1.0) * m + (6.0 * u - 6.0 * u2) * l1) / len;
    let ddl = ((12.0 * u - 6.0) * l0 + (6.0 * u - 4.0) * m + (6.0 - 12.0 * u) * l1) / (len * len);
    (l, dl, ddl)
}

#[derive(Clone, Copy)]
struct Target {
    s0: f64,
    lat0: f64,
    /// dl/ds at the start, from the ego heading.
    slope0: f64,
    blend: f64,
    speed: f64,
    offset: f64,
    half_lane: f64,
}

#[allow(clippy::too_many_arguments)]
fn proposal(
    scenario: &Scenario,
    route: &Polyline,
    t: usize,
    h: usize,
    ego: &VehicleState,
    target: &Target,
    obstacles: &[Obstacle],
    stop_lines: &[(usize, f64)],
    p: &PlannerParams,
    vp: &VehicleParams,
) -> Trajectory {
    let dt = scenario.dt;
    let Target { s0, lat0, slope0, blend, speed: v_target, offset, half_lane } = *target;
    let lateral = |s: f64| hermite(s - s0, blend, lat0, slope0, offset);
    let interaction = p.idm.with_desired(f64::INFINITY);

    let mut s = s0;
    let mut v = ego.vel_lon.max(0.0);
    let mut a_prev = ego.accel;
    let mut profile = Vec::with_capacity(h + 1);
    profile.push((s, v, a_prev));
    for k in 0..h {
        let time = (k as f64) * dt;
        let (l_now, _, _) = lateral(s);
        let front = s + 0.5 * vp.length;
        let mut lead: Option<Leader> = None;
        let mut consider = |gap: f64, v_lead: f64| {
            if lead.is_none_or(|l| gap < l.gap) {
                lead = Some(Leader { v_lead, gap: gap.max(0.01) });
            }
        };
        for o in obstacles {
            let os = o.s + o.v_s * time;
            let ol = o.lat + o.v_l * time;
            if (ol - l_now).abs() <= half_lane && os > s {
                consider(os - 0.5 * o.length - front, o.v_s.max(0.0));
            }
        }
        let t_next = (t + k + 1) as f64 * dt;
        for &(li, s_stop) in stop_lines {
            let light = &scenario.map.traffic_lights[li];
            if light.state_at(t_next) == LightState::Red && s_stop > s {
                consider(s_stop - front, 0.0);
            }
        }
        let a_free = (p.speed_gain * (v_target - v)).clamp(-vp.a_cmd_max, vp.a_cmd_max);
        let a_int = lead.map_or(f64::INFINITY, |l| idm_accel(v, Some(l), &interaction, vp.a_cmd_max.max(p.idm.b_comf)));
        let slew = vp.jerk_max * dt;
        let mut a = a_free.min(a_int).clamp(-vp.a_cmd_max, vp.a_cmd_max).clamp(a_prev - slew, a_prev + slew);
        if v + a * dt < 0.0 {
            a = -v / dt;
        }
        s += v * dt + 0.5 * a * dt * dt;
        v += a * dt;
        a_prev = a;
        profile.push((s, v, a));
    }

    let curvature = |s: f64| {
        let w = 3.0;
        angle_diff(route.point_at(s + w).1, route.point_at(s - w).1) / (2.0 * w)
    };
    let states = profile
        .iter()
        .map(|&(s, v, a)| {
            let (base, heading) = route.point_at(s);
            let (l, dl, ddl) = lateral(s);
            let (sn, cn) = heading.sin_cos();
            let pos: Point = [base[0] - sn * l, base[1] + cn * l];
            let kappa = curvature(s) + ddl;
            VehicleState {
                pose: Pose2D::new(pos[0], pos[1], normalize_angle(heading + dl.atan())),
                vel_lon: v,
                vel_lat: 0.0,
                accel: a,
                steering: (vp.wheelbase * kappa).atan(),
            }
        })
        .collect();
    Trajectory { dt, frame: TrajFrame::Global, states }
}

/// Why a labelled sample was dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectCategory {
    Collision,
    Offroad,
    Reward,
    Kinematics,
}

impl RejectCategory {
    pub const ALL: [RejectCategory; 4] = [RejectCategory::Collision, RejectCategory::Offroad, RejectCategory::Reward, RejectCategory::Kinematics];

    pub fn name(self) -> &'static str {
        match self {
            RejectCategory::Collision => "collision",
            RejectCategory::Offroad => "offroad",
            RejectCategory::Reward => "reward",
            RejectCategory::Kinematics => "kinematics",
        }
    }

    /// Category of a failed sub-score.
    pub fn of_metric(name: &str) -> Self {
        match name {
            "nc" => RejectCategory::Collision,
            "dac" => RejectCategory::Offroad,
            _ => RejectCategory::Reward,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterReject {
    /// Sub-score name, "ep" or "kinematics".
    pub check: String,
    pub category: RejectCategory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertFilterSpec {
    /// Sub-scores that must equal 1.
    pub required: Vec<String>,
    /// Progress must strictly exceed this.
    pub ep_min: f64,
}

impl Default for ExpertFilterSpec {
    fn default() -> Self {
        Self { required: ["nc", "dac", "ddc", "tlc", "ttc", "lk", "hc", "ec"].map(String::from).to_vec(), ep_min: 0.5 }
    }
}

impl ExpertFilterSpec {
    pub fn validate(&self) -> Result<()> {
        if let Some(bad) = self.required.iter().find(|n| SubMetricVector::ones().get(n).is_none()) {
            return Err(Error::Config(format!("unknown sub-metric '{bad}' in expert filter")));
        }
        if !(0.0..=1.0).contains(&self.ep_min) {
            return Err(Error::Config(format!("expert filter ep_min {} outside [0, 1]", self.ep_min)));
        }
        Ok(())
    }
}

/// Keep a labelled sample only if every required sub-score is 1, progress
/// exceeds the floor and the expert plan respects the curvature and
/// acceleration limits. Curvature is read from the planned steering.
/// Checks run in canonical sub-score order, then progress, then kinematics.
pub fn expert_filter(sub: &SubMetricVector, plan: &Trajectory, spec: &ExpertFilterSpec, vehicle: &VehicleParams) -> std::result::Result<(), FilterReject> {
    for name in SubMetricVector::NAMES {
        if spec.required.iter().any(|r| r == name) && sub.get(name) != Some(1.0) {
            return Err(FilterReject { check: name.into(), category: RejectCategory::of_metric(name) });
        }
    }
    if sub.ep <= spec.ep_min {
        return Err(FilterReject { check: "ep".into(), category: RejectCategory::Reward });
    }
    let kappa_max = vehicle.max_curvature() + 1e-9;
    let feasible = plan
        .states
        .iter()
        .all(|s| s.steering.tan().abs() / vehicle.wheelbase <= kappa_max && s.accel.abs() <= vehicle.a_cmd_max + 1e-9);
    if !feasible {
        return Err(FilterReject { check: "kinematics".into(), category: RejectCategory::Kinematics });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::bundled_corpus;
    use crate::vocab::Provenance;

    fn straight(v: f64, n: usize) -> Trajectory {
        let states = (0..=n).map(|k| VehicleState::at(v * 0.1 * k as f64, 0.0, 0.0, v)).collect();
        Trajectory::new(0.1, states, TrajFrame::EgoLocal).unwrap()
    }

    #[test]
    fn matching_vector_of_straight_line() {
        let m = build_matching_vector(&straight(5.0, 40), 40).unwrap();
        let want = [5.0, 0.0, 0.0, 20.0, 0.0, 0.0];
        for i in 0..6 {
            assert!((m.0[i] - want[i]).abs() < 1e-12);
        }
        assert!(matches!(build_matching_vector(&straight(5.0, 39), 40), Err(Error::HorizonMismatch { .. })));
    }

    #[test]
    fn matching_vector_is_frame_invariant() {
        let t = straight(3.0, 10);
        let moved = t.placed_at(&Pose2D::new(12.0, -4.0, 2.5));
        let a = build_matching_vector(&t, 10).unwrap();
        let b = build_matching_vector(&moved, 10).unwrap();
        assert!(a.distance(&b, &[1.0; 6]) < 1e-9);
    }

    #[test]
    fn angular_distance_wraps() {
        let a = MatchingVector([0.0, 0.0, 0.0, 0.0, 0.0, 3.1]);
        let b = MatchingVector([0.0, 0.0, 0.0, 0.0, 0.0, -3.1]);
        assert!((a.distance(&b, &[1.0; 6]) - (2.0 * std::f64::consts::PI - 6.2)).abs() < 1e-12);
    }

    #[test]
    fn retrieval_ties_go_to_lowest_index() {
        let v = Vocabulary::new(vec![straight(4.0, 10), straight(6.0, 10), straight(6.0, 10)], Provenance::RawHuman).unwrap();
        let idx = RecoveryIndex::new(&v).unwrap();
        let q = build_matching_vector(&straight(6.0, 10), 10).unwrap();
        assert_eq!(idx.retrieve(&q, &[1.0; 6]), 1);
        let q = MatchingVector([5.0, 0.0, 0.0, 5.0, 0.0, 0.0]);
        assert_eq!(idx.retrieve(&q, &[1.0; 6]), 0);
    }

    #[test]
    fn recovery_target_in_current_frame() {
        let cur = VehicleState::at(10.0, 2.0, std::f64::consts::FRAC_PI_2, 4.0);
        let m = recovery_target(&cur, &Pose2D::new(10.0, 12.0, std::f64::consts::FRAC_PI_2));
        assert!((m.0[3] - 10.0).abs() < 1e-12 && m.0[4].abs() < 1e-12 && m.0[5].abs() < 1e-12);
        assert_eq!(m.0[0], 4.0);
    }

    fn filter_plan() -> Trajectory {
        straight(5.0, 40)
    }

    #[test]
    fn filter_accepts_clean_sample_and_rejects_in_order() {
        let spec = ExpertFilterSpec::default();
        let vp = VehicleParams::default();
        let plan = filter_plan();
        assert!(expert_filter(&SubMetricVector::ones(), &plan, &spec, &vp).is_ok());

        let s = SubMetricVector { nc: 0.0, dac: 0.0, ..SubMetricVector::ones() };
        assert_eq!(expert_filter(&s, &plan, &spec, &vp).unwrap_err().category, RejectCategory::Collision);
        let s = SubMetricVector { dac: 0.0, ..SubMetricVector::ones() };
        assert_eq!(expert_filter(&s, &plan, &spec, &vp).unwrap_err().category, RejectCategory::Offroad);
        let s = SubMetricVector { ep: 0.5, ..SubMetricVector::ones() };
        assert_eq!(expert_filter(&s, &plan, &spec, &vp).unwrap_err().check, "ep");
        let s = SubMetricVector { ep: 0.51, ..SubMetricVector::ones() };
        assert!(expert_filter(&s, &plan, &spec, &vp).is_ok());
    }

    #[test]
    fn filter_rejects_infeasible_curvature_and_accel() {
        let spec = ExpertFilterSpec::default();
        let vp = VehicleParams::default();
        let mut plan = filter_plan();
        plan.states[7].steering = vp.steer_max + 0.05;
        assert_eq!(expert_filter(&SubMetricVector::ones(), &plan, &spec, &vp).unwrap_err().category, RejectCategory::Kinematics);
        let mut plan = filter_plan();
        plan.states[3].accel = -(vp.a_cmd_max + 0.5);
        assert_eq!(expert_filter(&SubMetricVector::ones(), &plan, &spec, &vp).unwrap_err().check, "kinematics");
    }

    #[test]
    fn filter_spec_rejects_unknown_metric() {
        let spec = ExpertFilterSpec { required: vec!["nc".into(), "speed".into()], ..Default::default() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn planner_on_logged_start_is_clean() {
        let corpus = bundled_corpus();
        let sim = SimConfig::default();
        let metrics = MetricConfig::default();
        let p = PlannerParams::default();
        for s in corpus.iter().step_by(10) {
            let t = s.expert_frame();
            let ctx = PlanContext { init: None, history: &s.ego_log.states[..t], stage1_comfort: None, mode: RolloutMode::Reactive, sim: &sim, metrics: &metrics };
            let out = privileged_plan(s, t, &p, &ctx).unwrap();
            assert_eq!(out.scores.len(), 25);
            let max = out.scores.iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(out.best.score, max);
            assert_eq!(out.scores.iter().position(|v| *v == max), Some(out.proposal));
            assert_eq!(out.best.submetrics.penalty_product(), 1.0, "{}: {:?}", s.id, out.best.submetrics);
        }
    }
}

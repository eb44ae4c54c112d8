//! Reactive traffic: IDM longitudinal control with pure-pursuit lane
//! following for agents, and the rollout engine that advances a whole scene.

use serde::{Deserialize, Serialize};

use crate::control::{lqr_track, LqrParams};
use crate::error::{Error, Result};
use crate::geometry::{angle_diff, Point};
use crate::kinematics::{bicycle_step, ControlInput, VehicleParams};
use crate::scenario::{AgentKind, Lane, LaneDirection, MapModel, Scenario, TrajFrame, Trajectory, VehicleState};

/// Intelligent Driver Model parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    pub v_desired: f64,
    pub headway: f64,
    pub s0: f64,
    pub a_max: f64,
    pub b_comf: f64,
    pub delta: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self { v_desired: 13.0, headway: 1.5, s0: 2.0, a_max: 1.5, b_comf: 2.0, delta: 4.0 }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<(), String> {
        for (n, v) in [
            ("v_desired", self.v_desired),
            ("headway", self.headway),
            ("s0", self.s0),
            ("a_max", self.a_max),
            ("b_comf", self.b_comf),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("idm.{n} must be positive, got {v}"));
            }
        }
        if !(self.delta >= 1.0) {
            return Err(format!("idm.delta must be >= 1, got {}", self.delta));
        }
        Ok(())
    }

    pub fn with_desired(&self, v: f64) -> Self {
        Self { v_desired: v, ..self.clone() }
    }
}

/// Traffic model configuration. `idm.v_desired` is the fallback when an
/// agent has no lane; otherwise the lane speed limit is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub idm: IdmParams,
    /// Hard braking bound (m/s²) for IDM output.
    pub b_hard: f64,
    /// Leader search distance along the lane (m).
    pub leader_lookahead: f64,
    /// Pure-pursuit lookahead (m).
    pub pursuit_lookahead: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self { idm: IdmParams::default(), b_hard: 4.0, leader_lookahead: 100.0, pursuit_lookahead: 8.0 }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.idm.validate()?;
        for (n, v) in [
            ("b_hard", self.b_hard),
            ("leader_lookahead", self.leader_lookahead),
            ("pursuit_lookahead", self.pursuit_lookahead),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("traffic.{n} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Everything a rollout needs besides the scenario.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub vehicle: VehicleParams,
    pub lqr: LqrParams,
    pub traffic: TrafficConfig,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leader {
    pub v_lead: f64,
    /// Bumper-to-bumper distance (m).
    pub gap: f64,
}

/// IDM acceleration, clamped to `[-b_hard, a_max]`.
pub fn idm_accel(v: f64, leader: Option<Leader>, p: &IdmParams, b_hard: f64) -> f64 {
    let free = 1.0 - (v / p.v_desired).powf(p.delta);
    let interaction = match leader {
        Some(l) => {
            let s_star = p.s0 + (v * p.headway + v * (v - l.v_lead) / (2.0 * (p.a_max * p.b_comf).sqrt())).max(0.0);
            (s_star / l.gap.max(1e-3)).powi(2)
        }
        None => 0.0,
    };
    (p.a_max * (free - interaction)).clamp(-b_hard, p.a_max)
}

/// A body in the scene as seen by the leader rule.
#[derive(Clone, Copy, Debug)]
pub struct Body {
    pub state: VehicleState,
    pub length: f64,
}

/// Arclength and lateral offset of `p` along a lane in its travel direction.
pub fn lane_coords(lane: &Lane, p: Point, hint: Option<&mut usize>) -> (f64, f64) {
    let proj = match hint {
        Some(h) => {
            let pr = lane.polyline.project_from(p, *h);
            *h = pr.segment;
            pr
        }
        None => lane.polyline.project(p),
    };
    match lane.direction {
        LaneDirection::Forward => (proj.s, proj.lateral),
        LaneDirection::Backward => (lane.polyline.length() - proj.s, -proj.lateral),
    }
}

/// Speed of `s` projected on the lane tangent at its foot point.
fn along_lane_speed(lane: &Lane, st: &VehicleState, hint: usize) -> f64 {
    let proj = lane.polyline.project_from(st.position(), hint);
    let h = lane.travel_heading(proj.heading);
    let v = st.velocity();
    v[0] * h.cos() + v[1] * h.sin()
}

/// Nearest body ahead of `bodies[me]` along `lane` within the lateral
/// corridor of half the lane width and `lookahead` metres. Ties go to the
/// lower index.
pub fn select_leader(me: usize, bodies: &[Body], lane: &Lane, lookahead: f64) -> Option<Leader> {
    let (s_me, _) = lane_coords(lane, bodies[me].state.position(), None);
    let mut best: Option<(f64, usize)> = None;
    for (i, b) in bodies.iter().enumerate() {
        if i == me {
            continue;
        }
        let (s, d) = lane_coords(lane, b.state.position(), None);
        let ds = s - s_me;
        if d.abs() > 0.5 * lane.width || ds <= 0.0 || ds > lookahead {
            continue;
        }
        if best.is_none_or(|(bd, _)| ds < bd) {
            best = Some((ds, i));
        }
    }
    best.map(|(ds, i)| {
        let b = &bodies[i];
        let hint = lane.polyline.project(b.state.position()).segment;
        Leader {
            v_lead: along_lane_speed(lane, &b.state, hint).max(0.0),
            gap: ds - 0.5 * (bodies[me].length + b.length),
        }
    })
}

/// Pure-pursuit steering toward the lane centerline (shifted by `offset`,
/// positive left of travel) `lookahead` metres ahead.
pub fn pursuit_steering(st: &VehicleState, lane: &Lane, s_travel: f64, offset: f64, lookahead: f64, wheelbase: f64) -> f64 {
    let s_target = s_travel + lookahead;
    let (p, h) = match lane.direction {
        LaneDirection::Forward => {
            let (p, h) = lane.polyline.point_at(s_target);
            (p, h)
        }
        LaneDirection::Backward => {
            let (p, h) = lane.polyline.point_at(lane.polyline.length() - s_target);
            (p, h + std::f64::consts::PI)
        }
    };
    let target = [p[0] - offset * h.sin(), p[1] + offset * h.cos()];
    let dx = target[0] - st.pose.x;
    let dy = target[1] - st.pose.y;
    let ld = dx.hypot(dy).max(1e-3);
    let alpha = angle_diff(dy.atan2(dx), st.pose.theta);
    (2.0 * wheelbase * alpha.sin() / ld).atan()
}

/// Instantaneous scene state used to seed a rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneFrame {
    pub ego: VehicleState,
    /// Aligned with `Scenario::agents`.
    pub agents: Vec<VehicleState>,
}

impl SceneFrame {
    pub fn from_log(scenario: &Scenario, frame: usize) -> Self {
        Self {
            ego: scenario.ego_log.states[frame],
            agents: scenario.agents.iter().map(|a| a.states[frame]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentStates {
    pub id: String,
    pub states: Vec<VehicleState>,
}

/// Simulated states over frames `[t_start, t_end]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneStates {
    pub dt: f64,
    pub t_start: usize,
    pub t_end: usize,
    pub ego: Vec<VehicleState>,
    /// Aligned with `Scenario::agents`.
    pub agents: Vec<AgentStates>,
}

impl SceneStates {
    pub fn len(&self) -> usize {
        self.ego.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ego.is_empty()
    }

    pub fn frame(&self, k: usize) -> SceneFrame {
        SceneFrame { ego: self.ego[k], agents: self.agents.iter().map(|a| a.states[k]).collect() }
    }

    pub fn last_frame(&self) -> SceneFrame {
        self.frame(self.len() - 1)
    }

    pub fn ego_trajectory(&self) -> Trajectory {
        Trajectory { dt: self.dt, frame: TrajFrame::Global, states: self.ego.clone() }
    }

    /// Join two consecutive windows sharing their boundary frame.
    pub fn concat(&self, next: &SceneStates) -> Result<SceneStates> {
        if self.t_end != next.t_start || self.agents.len() != next.agents.len() {
            return Err(Error::WindowMisaligned(format!(
                "cannot join [{}, {}] with [{}, {}]",
                self.t_start, self.t_end, next.t_start, next.t_end
            )));
        }
        let mut ego = self.ego.clone();
        ego.extend_from_slice(&next.ego[1..]);
        let agents = self
            .agents
            .iter()
            .zip(&next.agents)
            .map(|(a, b)| {
                let mut states = a.states.clone();
                states.extend_from_slice(&b.states[1..]);
                AgentStates { id: a.id.clone(), states }
            })
            .collect();
        Ok(SceneStates { dt: self.dt, t_start: self.t_start, t_end: next.t_end, ego, agents })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RolloutMode {
    Reactive,
    Nonreactive,
    LogReplayEgo,
}

/// Per-body driving intent used by the traffic stepper.
#[derive(Clone, Debug)]
pub(crate) struct Driver {
    pub lane: Option<usize>,
    pub idm: IdmParams,
    pub is_static: bool,
    /// Lateral offset from the lane centerline as a function of frame.
    pub offset: Option<LateralSchedule>,
    /// Treat red lights on the lane as stopped obstacles.
    pub obey_lights: bool,
    /// Clamp on |accel| and accel slew (used for logged human drivers).
    pub limits: Option<(f64, f64)>,
}

/// Smooth lateral shift from `from` to `to` over `[t0, t0 + duration]` frames.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LateralSchedule {
    pub from: f64,
    pub to: f64,
    pub start_frame: usize,
    pub frames: usize,
}

impl LateralSchedule {
    fn at(&self, frame: usize) -> f64 {
        if frame <= self.start_frame {
            return self.from;
        }
        let u = ((frame - self.start_frame) as f64 / self.frames.max(1) as f64).min(1.0);
        let w = 0.5 - 0.5 * (std::f64::consts::PI * u).cos();
        self.from + (self.to - self.from) * w
    }
}

/// Workspace for synchronous traffic updates.
pub(crate) struct TrafficStepper<'a> {
    map: &'a MapModel,
    vehicle: &'a VehicleParams,
    traffic: &'a TrafficConfig,
    dt: f64,
    lengths: Vec<f64>,
    /// `hints[lane][body]`
    hints: Vec<Vec<usize>>,
}

impl<'a> TrafficStepper<'a> {
    pub fn new(map: &'a MapModel, vehicle: &'a VehicleParams, traffic: &'a TrafficConfig, dt: f64, lengths: Vec<f64>, bodies: &[VehicleState]) -> Self {
        let hints = map
            .lanes
            .iter()
            .map(|lane| bodies.iter().map(|b| lane.polyline.project(b.position()).segment).collect())
            .collect();
        Self { map, vehicle, traffic, dt, lengths, hints }
    }

    fn coords(&mut self, lane: usize, body: usize, p: Point) -> (f64, f64) {
        let l = &self.map.lanes[lane];
        lane_coords(l, p, Some(&mut self.hints[lane][body]))
    }

    fn leader(&mut self, me: usize, lane_idx: usize, bodies: &[VehicleState], time: f64, obey_lights: bool) -> Option<Leader> {
        let lane = &self.map.lanes[lane_idx];
        let half = 0.5 * lane.width;
        let lookahead = self.traffic.leader_lookahead;
        let (s_me, _) = self.coords(lane_idx, me, bodies[me].position());
        let mut best: Option<(f64, usize)> = None;
        for i in 0..bodies.len() {
            if i == me {
                continue;
            }
            let (s, d) = self.coords(lane_idx, i, bodies[i].position());
            let ds = s - s_me;
            if d.abs() > half || ds <= 0.0 || ds > lookahead {
                continue;
            }
            if best.is_none_or(|(bd, _)| ds < bd) {
                best = Some((ds, i));
            }
        }
        let mut out = best.map(|(ds, i)| {
            let hint = self.hints[lane_idx][i];
            Leader {
                v_lead: along_lane_speed(lane, &bodies[i], hint).max(0.0),
                gap: ds - 0.5 * (self.lengths[me] + self.lengths[i]),
            }
        });
        if obey_lights {
            for light in &self.map.traffic_lights {
                if light.state_at(time) != crate::scenario::LightState::Red {
                    continue;
                }
                let mid = [
                    0.5 * (light.stop_line[0][0] + light.stop_line[1][0]),
                    0.5 * (light.stop_line[0][1] + light.stop_line[1][1]),
                ];
                let (s, d) = lane_coords(lane, mid, None);
                let ds = s - s_me;
                if d.abs() > half || ds <= 0.0 || ds > lookahead {
                    continue;
                }
                let gap = ds - 0.5 * self.lengths[me];
                if out.is_none_or(|l| gap < l.gap) {
                    out = Some(Leader { v_lead: 0.0, gap: gap.max(0.05) });
                }
            }
        }
        out
    }

    /// Advance the bodies listed in `drivers` by one step from `bodies`
    /// (frame `frame`). Bodies without a driver are left untouched in `next`.
    pub fn step(&mut self, bodies: &[VehicleState], drivers: &[(usize, &Driver)], frame: usize, next: &mut [VehicleState]) {
        let time = frame as f64 * self.dt;
        for &(i, drv) in drivers {
            let st = bodies[i];
            if drv.is_static {
                next[i] = VehicleState { vel_lon: 0.0, vel_lat: 0.0, accel: 0.0, ..st };
                continue;
            }
            let (accel, steer_target) = match drv.lane {
                Some(lane_idx) => {
                    let leader = self.leader(i, lane_idx, bodies, time, drv.obey_lights);
                    let a = idm_accel(st.vel_lon.max(0.0), leader, &drv.idm, self.traffic.b_hard);
                    let (s, _) = self.coords(lane_idx, i, st.position());
                    let offset = drv.offset.map(|o| o.at(frame)).unwrap_or(0.0);
                    let lane = &self.map.lanes[lane_idx];
                    let ld = self.traffic.pursuit_lookahead;
                    let delta = pursuit_steering(&st, lane, s, offset, ld, self.vehicle.wheelbase);
                    (a, delta)
                }
                None => (idm_accel(st.vel_lon.max(0.0), None, &drv.idm, self.traffic.b_hard), 0.0),
            };
            let accel = match drv.limits {
                Some((a_max, slew)) => accel.clamp(-a_max, a_max).clamp(st.accel - slew * self.dt, st.accel + slew * self.dt),
                None => accel,
            };
            let rate = ((steer_target - st.steering) / self.dt).clamp(-self.vehicle.steer_rate_max, self.vehicle.steer_rate_max);
            next[i] = bicycle_step(&st, ControlInput { accel, steer_rate: rate }, self.dt, self.vehicle.wheelbase, self.vehicle.steer_max);
        }
    }
}

/// Drivers for every agent in a reactive rollout: lane fixed at the start
/// frame, desired speed from the lane limit, lights ignored.
pub(crate) fn agent_drivers(scenario: &Scenario, start: &[VehicleState], cfg: &TrafficConfig) -> Vec<Driver> {
    scenario
        .agents
        .iter()
        .zip(start)
        .map(|(a, st)| {
            let lane = scenario.map.assign_lane(&st.pose).map(|m| m.lane);
            let v_des = lane.map(|l| scenario.map.lanes[l].speed_limit).unwrap_or(cfg.idm.v_desired);
            Driver {
                lane,
                idm: cfg.idm.with_desired(v_des),
                is_static: a.kind == AgentKind::Static,
                offset: None,
                obey_lights: false,
                limits: None,
            }
        })
        .collect()
}

/// Advance the scene from `t_start` for `horizon` steps.
///
/// The ego executes `ego_plan` through the LQR tracker (or replays its log in
/// [`RolloutMode::LogReplayEgo`]). Agents follow IDM + pure pursuit in the
/// reactive modes and replay their logs in [`RolloutMode::Nonreactive`].
/// Agent updates are synchronous: every agent reads frame `k` to produce
/// frame `k + 1`. `init` overrides the logged start state (used for the
/// second simulation stage).
pub fn rollout(
    scenario: &Scenario,
    ego_plan: &Trajectory,
    t_start: usize,
    horizon: usize,
    mode: RolloutMode,
    init: Option<&SceneFrame>,
    cfg: &SimConfig,
) -> Result<SceneStates> {
    if (ego_plan.dt - scenario.dt).abs() > 1e-12 {
        return Err(Error::DtMismatch { expected: scenario.dt, actual: ego_plan.dt });
    }
    let frames = scenario.frame_count();
    if t_start + horizon >= frames || horizon == 0 {
        return Err(Error::OutOfRange { frame: t_start + horizon, frames });
    }
    if mode != RolloutMode::LogReplayEgo && ego_plan.states.len() != horizon + 1 {
        return Err(Error::HorizonMismatch { expected: horizon, actual: ego_plan.horizon() });
    }
    let start = match init {
        Some(f) => f.clone(),
        None => SceneFrame::from_log(scenario, t_start),
    };
    if start.agents.len() != scenario.agents.len() {
        return Err(Error::WindowMisaligned("initial frame agent count differs from scenario".into()));
    }

    let ego: Vec<VehicleState> = match mode {
        RolloutMode::LogReplayEgo => scenario.ego_log.states[t_start..=t_start + horizon].to_vec(),
        _ => lqr_track(ego_plan, &start.ego, &cfg.lqr, &cfg.vehicle)?.states,
    };

    let agents = match mode {
        RolloutMode::Nonreactive => scenario
            .agents
            .iter()
            .map(|a| AgentStates { id: a.id.clone(), states: a.states[t_start..=t_start + horizon].to_vec() })
            .collect(),
        RolloutMode::Reactive | RolloutMode::LogReplayEgo => simulate_agents(scenario, &ego, &start.agents, t_start, cfg),
    };
    Ok(SceneStates { dt: scenario.dt, t_start, t_end: t_start + horizon, ego, agents })
}

fn simulate_agents(scenario: &Scenario, ego: &[VehicleState], start: &[VehicleState], t_start: usize, cfg: &SimConfig) -> Vec<AgentStates> {
    let n_agents = scenario.agents.len();
    let steps = ego.len();
    let drivers = agent_drivers(scenario, start, &cfg.traffic);
    // bodies: agents in scenario order, then the ego
    let mut lengths: Vec<f64> = scenario.agents.iter().map(|a| a.length).collect();
    lengths.push(cfg.vehicle.length);
    let mut cur: Vec<VehicleState> = start.to_vec();
    cur.push(ego[0]);
    let mut stepper = TrafficStepper::new(&scenario.map, &cfg.vehicle, &cfg.traffic, scenario.dt, lengths, &cur);
    let order = scenario.agent_order();
    let driven: Vec<(usize, &Driver)> = order.iter().map(|&i| (i, &drivers[i])).collect();

    let mut out: Vec<Vec<VehicleState>> = start.iter().map(|s| {
        let mut v = Vec::with_capacity(steps);
        v.push(*s);
        v
    }).collect();
    let mut next = cur.clone();
    for k in 0..steps - 1 {
        stepper.step(&cur, &driven, t_start + k, &mut next);
        next[n_agents] = ego[k + 1];
        for (i, track) in out.iter_mut().enumerate() {
            track.push(next[i]);
        }
        std::mem::swap(&mut cur, &mut next);
        next.copy_from_slice(&cur);
    }
    scenario
        .agents
        .iter()
        .zip(out)
        .map(|(a, states)| AgentStates { id: a.id.clone(), states })
        .collect()
}

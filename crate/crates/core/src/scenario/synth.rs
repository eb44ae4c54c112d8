//! Synthetic scenario templates. Logs come from a joint driver simulation:
//! every vehicle (ego included) runs IDM along its lane with pure-pursuit
//! steering, so logs are kinematically exact and collision-free.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    validate_scenario_with, AgentKind, AgentTrack, Lane, LaneDirection, LightState, MapModel, Phase, Scenario,
    TrafficLight, TrajFrame, Trajectory, ValidationLimits, VehicleState,
};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, OrientedBox, Polygon, Polyline, Pose2D};
use crate::kinematics::VehicleParams;
use crate::reactive::{Driver, LateralSchedule, TrafficConfig, TrafficStepper};
use crate::rng::{mix, rng_from};

pub const LANE_WIDTH: f64 = 3.5;
const BUFFER: f64 = 0.25;
const ROAD_START: f64 = -80.0;
const ROAD_END: f64 = 280.0;
const MAX_ATTEMPTS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    Straight,
    Curve,
    Intersection,
    LeadVehicle,
    CutIn,
}

impl Template {
    pub const ALL: [Template; 5] =
        [Template::Straight, Template::Curve, Template::Intersection, Template::LeadVehicle, Template::CutIn];

    pub fn name(self) -> &'static str {
        match self {
            Template::Straight => "straight",
            Template::Curve => "curve",
            Template::Intersection => "intersection",
            Template::LeadVehicle => "lead-vehicle",
            Template::CutIn => "cut-in",
        }
    }
}

/// Corpus shape. Scenario `i` uses `templates[i % templates.len()]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub count: usize,
    pub templates: Vec<Template>,
    pub dt: f64,
    pub t_history: usize,
    pub t_horizon: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { count: 100, templates: Template::ALL.to_vec(), dt: 0.1, t_history: 20, t_horizon: 40 }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("corpus dt must be positive, got {}", self.dt)));
        }
        if self.t_horizon == 0 {
            return Err(Error::Config("corpus t_horizon must be positive".into()));
        }
        if self.count > 0 && self.templates.is_empty() {
            return Err(Error::Config("corpus needs at least one template".into()));
        }
        Ok(())
    }
}

/// The reference corpus used by the examples and acceptance tests.
pub fn bundled_corpus() -> Vec<Scenario> {
    generate_synthetic_corpus(&CorpusConfig::default(), 1).expect("default corpus config is valid")
}

pub fn generate_synthetic_corpus(config: &CorpusConfig, seed: u64) -> Result<Vec<Scenario>> {
    config.validate()?;
    (0..config.count)
        .map(|i| {
            let template = config.templates[i % config.templates.len()];
            let id = format!("{}-{:04}", template.name(), i);
            let mut rng = rng_from(mix(&[seed, i as u64]));
            synthesize(template, id, config, &mut rng)
        })
        .collect()
}

/// Road reference line: straight lead-in then an optional constant-radius arc.
struct Road {
    /// Signed curvature of the arc part (0 for straight roads).
    kappa: f64,
    arc_start: f64,
}

impl Road {
    fn pose(&self, s: f64) -> Pose2D {
        if self.kappa == 0.0 || s <= self.arc_start {
            return Pose2D::new(s, 0.0, 0.0);
        }
        let phi = (s - self.arc_start) * self.kappa;
        let r = 1.0 / self.kappa;
        Pose2D::new(self.arc_start + r * phi.sin(), r * (1.0 - phi.cos()), normalize_angle(phi))
    }

    /// Pose at arclength `s` shifted `d` to the left of the reference line.
    fn offset_pose(&self, s: f64, d: f64) -> Pose2D {
        let p = self.pose(s);
        Pose2D::new(p.x - d * p.theta.sin(), p.y + d * p.theta.cos(), p.theta)
    }

    fn line(&self, d: f64, s0: f64, s1: f64) -> Polyline {
        let step = if self.kappa == 0.0 { (s1 - s0) / 4.0 } else { 2.0 };
        let n = ((s1 - s0) / step).ceil() as usize;
        Polyline::new(
            (0..=n)
                .map(|i| {
                    let s = (s0 + i as f64 * step).min(s1);
                    self.offset_pose(s, d).position()
                })
                .collect(),
        )
    }

    fn curvature_at(&self, s: f64) -> f64 {
        if s > self.arc_start {
            self.kappa
        } else {
            0.0
        }
    }
}

/// Lane layout shared by all templates: lane 0 (ego, forward) on the
/// reference line, lane 1 forward to its left, lane 2 oncoming to its right.
const LANE_OFFSETS: [(f64, LaneDirection); 3] =
    [(0.0, LaneDirection::Forward), (LANE_WIDTH, LaneDirection::Forward), (-LANE_WIDTH, LaneDirection::Backward)];

fn road_map(road: &Road, speed_limit: f64) -> MapModel {
    let lanes = LANE_OFFSETS
        .iter()
        .map(|&(d, direction)| Lane { polyline: road.line(d, ROAD_START, ROAD_END), width: LANE_WIDTH, direction, speed_limit })
        .collect();
    let edge = 1.5 * LANE_WIDTH + BUFFER;
    let mut outline: Vec<_> = road.line(edge, ROAD_START, ROAD_END).points().to_vec();
    outline.extend(road.line(-edge, ROAD_START, ROAD_END).points().iter().rev());
    MapModel {
        lanes,
        drivable_area: vec![Polygon::new(outline)],
        route: road.line(0.0, ROAD_START + 2.0, ROAD_END - 2.0),
        traffic_lights: vec![],
    }
}

/// One vehicle to be simulated into the log.
struct Spawn {
    id: Option<String>,
    pose: Pose2D,
    speed: f64,
    steering: f64,
    length: f64,
    width: f64,
    driver: Driver,
}

struct Layout {
    map: MapModel,
    ego: Spawn,
    agents: Vec<Spawn>,
}

fn vehicle_driver(lane: usize, v_desired: f64, traffic: &TrafficConfig) -> Driver {
    Driver {
        lane: Some(lane),
        idm: traffic.idm.with_desired(v_desired),
        is_static: false,
        offset: None,
        obey_lights: true,
        limits: None,
    }
}

fn spawn_on(road: &Road, lane: usize, s: f64, speed: f64, driver: Driver, rng: &mut ChaCha8Rng, id: String) -> Spawn {
    let (d, dir) = LANE_OFFSETS[lane];
    let mut pose = road.offset_pose(s, d);
    let kappa = road.curvature_at(s);
    let steering = if dir == LaneDirection::Backward {
        pose.theta = normalize_angle(pose.theta + PI);
        // curvature sign flips with travel direction; radius shifts with offset
        (-2.7 * kappa / (1.0 - d * kappa)).atan()
    } else {
        (2.7 * kappa / (1.0 - d * kappa)).atan()
    };
    Spawn {
        id: Some(id),
        pose,
        speed,
        steering,
        length: rng.gen_range(4.3..5.0),
        width: rng.gen_range(1.8..2.0),
        driver,
    }
}

fn layout(template: Template, rng: &mut ChaCha8Rng, vehicle: &VehicleParams, traffic: &TrafficConfig) -> Layout {
    let kappa = if template == Template::Curve {
        let r = rng.gen_range(100.0..200.0);
        if rng.gen_bool(0.5) {
            1.0 / r
        } else {
            -1.0 / r
        }
    } else {
        0.0
    };
    let road = Road { kappa, arc_start: rng.gen_range(20.0..50.0) };
    let speed_limit = rng.gen_range(11.0..14.0);
    let mut map = road_map(&road, speed_limit);

    let ego_speed = rng.gen_range(7.0..11.0);
    let ego_driver = Driver {
        lane: Some(0),
        idm: traffic.idm.with_desired(speed_limit),
        is_static: false,
        offset: None,
        obey_lights: true,
        limits: Some((vehicle.a_cmd_max, vehicle.jerk_max)),
    };
    let ego = Spawn {
        id: None,
        pose: road.offset_pose(0.0, 0.0),
        speed: ego_speed,
        steering: 0.0,
        length: vehicle.length,
        width: vehicle.width,
        driver: ego_driver,
    };

    let mut agents = Vec::new();
    let mut next_id = 0;
    let mut new_id = || {
        next_id += 1;
        format!("agent-{next_id:02}")
    };

    match template {
        Template::Straight | Template::Curve => {}
        Template::Intersection => {
            let stop = rng.gen_range(45.0..75.0);
            let cross = stop + 1.5 * LANE_WIDTH + BUFFER + 2.0;
            let half = LANE_WIDTH + BUFFER;
            map.drivable_area.push(Polygon::new(vec![
                [cross - half, -80.0],
                [cross + half, -80.0],
                [cross + half, 80.0],
                [cross - half, 80.0],
            ]));
            map.lanes.push(Lane {
                polyline: Polyline::new(vec![[cross + 0.5 * LANE_WIDTH, -80.0], [cross + 0.5 * LANE_WIDTH, 80.0]]),
                width: LANE_WIDTH,
                direction: LaneDirection::Forward,
                speed_limit,
            });
            map.lanes.push(Lane {
                polyline: Polyline::new(vec![[cross - 0.5 * LANE_WIDTH, -80.0], [cross - 0.5 * LANE_WIDTH, 80.0]]),
                width: LANE_WIDTH,
                direction: LaneDirection::Backward,
                speed_limit,
            });
            let green = rng.gen_range(3.0..7.0);
            map.traffic_lights.push(TrafficLight {
                stop_line: [[stop, -0.5 * LANE_WIDTH], [stop, 1.5 * LANE_WIDTH]],
                phases: vec![
                    Phase { t0: 0.0, t1: green, state: LightState::Red },
                    Phase { t0: green, t1: 1000.0, state: LightState::Green },
                ],
            });
        }
        Template::LeadVehicle => {
            let gap = rng.gen_range(15.0..35.0);
            let v = rng.gen_range(3.0..8.0);
            let v_des = rng.gen_range(2.0..v + 1.0);
            let id = new_id();
            let mut s = spawn_on(&road, 0, gap + vehicle.length, v, vehicle_driver(0, v_des, traffic), rng, id);
            s.pose = road.offset_pose(gap + 0.5 * (vehicle.length + s.length), 0.0);
            agents.push(s);
        }
        Template::CutIn => {
            let ahead = rng.gen_range(12.0..20.0);
            let v = ego_speed + rng.gen_range(0.5..2.0);
            let id = new_id();
            let mut driver = vehicle_driver(1, v, traffic);
            driver.offset = Some(LateralSchedule {
                from: 0.0,
                to: -LANE_WIDTH,
                start_frame: rng.gen_range(5..30),
                frames: rng.gen_range(25..40),
            });
            agents.push(spawn_on(&road, 1, ahead, v, driver, rng, id));
        }
    }

    // follower behind the ego
    if template == Template::Intersection || rng.gen_bool(0.5) {
        let back = rng.gen_range(14.0..24.0);
        let v = (ego_speed + rng.gen_range(-1.0..1.0)).max(0.0);
        let id = new_id();
        agents.push(spawn_on(&road, 0, -back, v, vehicle_driver(0, speed_limit, traffic), rng, id));
    }
    // adjacent-lane traffic, optionally stuck behind a parked car
    if template != Template::CutIn {
        let mut taken: Vec<f64> = Vec::new();
        if rng.gen_bool(0.3) {
            let s = rng.gen_range(40.0..110.0);
            let id = new_id();
            let mut p = spawn_on(&road, 1, s, 0.0, vehicle_driver(1, 0.1, traffic), rng, id);
            p.driver.is_static = true;
            p.steering = 0.0;
            agents.push(p);
            taken.push(s);
        }
        for _ in 0..rng.gen_range(0..=2) {
            let s = rng.gen_range(-30.0..60.0);
            if taken.iter().any(|t| (t - s).abs() < 14.0) {
                continue;
            }
            taken.push(s);
            let v = rng.gen_range(7.0..12.0);
            let id = new_id();
            agents.push(spawn_on(&road, 1, s, v, vehicle_driver(1, speed_limit, traffic), rng, id));
        }
    }
    // oncoming traffic
    for _ in 0..rng.gen_range(0..=2) {
        let s = rng.gen_range(30.0..220.0);
        let v = rng.gen_range(7.0..12.0);
        let id = new_id();
        agents.push(spawn_on(&road, 2, s, v, vehicle_driver(2, speed_limit, traffic), rng, id));
    }
    Layout { map, ego, agents }
}

fn simulate_layout(layout: &Layout, frames: usize, dt: f64, vehicle: &VehicleParams, traffic: &TrafficConfig) -> (Vec<VehicleState>, Vec<Vec<VehicleState>>) {
    let mut bodies: Vec<&Spawn> = layout.agents.iter().collect();
    bodies.push(&layout.ego);
    let mut cur: Vec<VehicleState> = bodies
        .iter()
        .map(|b| VehicleState { pose: b.pose, vel_lon: b.speed, vel_lat: 0.0, accel: 0.0, steering: b.steering })
        .collect();
    let lengths = bodies.iter().map(|b| b.length).collect();
    let mut stepper = TrafficStepper::new(&layout.map, vehicle, traffic, dt, lengths, &cur);
    let drivers: Vec<(usize, &Driver)> = bodies.iter().enumerate().map(|(i, b)| (i, &b.driver)).collect();
    let mut tracks: Vec<Vec<VehicleState>> = cur.iter().map(|s| vec![*s]).collect();
    let mut next = cur.clone();
    for k in 0..frames - 1 {
        stepper.step(&cur, &drivers, k, &mut next);
        for (t, s) in tracks.iter_mut().zip(&next) {
            t.push(*s);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let ego = tracks.pop().expect("ego track");
    (ego, tracks)
}

fn log_is_clean(s: &Scenario, vehicle: &VehicleParams) -> bool {
    for k in 0..s.frame_count() {
        let ego = OrientedBox::new(&s.ego_log.states[k].pose, vehicle.length, vehicle.width);
        if s.agents.iter().any(|a| a.footprint(k).overlaps(&ego)) {
            return false;
        }
    }
    true
}

fn synthesize(template: Template, id: String, config: &CorpusConfig, rng: &mut ChaCha8Rng) -> Result<Scenario> {
    let vehicle = VehicleParams::default();
    let traffic = TrafficConfig::default();
    let limits = ValidationLimits::from(&vehicle);
    let frames = config.t_history + 2 * config.t_horizon + 1;
    for _ in 0..MAX_ATTEMPTS {
        let lay = layout(template, rng, &vehicle, &traffic);
        let (ego_states, agent_states) = simulate_layout(&lay, frames, config.dt, &vehicle, &traffic);
        let agents = lay
            .agents
            .iter()
            .zip(agent_states)
            .map(|(sp, states)| AgentTrack {
                id: sp.id.clone().expect("agent id"),
                length: sp.length,
                width: sp.width,
                kind: if sp.driver.is_static { AgentKind::Static } else { AgentKind::Vehicle },
                states,
            })
            .collect();
        let scenario = Scenario {
            id: id.clone(),
            dt: config.dt,
            t_history: config.t_history,
            t_horizon: config.t_horizon,
            map: lay.map,
            ego_log: Trajectory { dt: config.dt, frame: TrajFrame::Global, states: ego_states },
            agents,
        };
        if log_is_clean(&scenario, &vehicle) && validate_scenario_with(&scenario, &limits).is_empty() {
            return Ok(scenario);
        }
    }
    Err(Error::Validation(format!("could not synthesize a valid {} scenario for {id}", template.name())))
}

//! Trajectory vocabulary and perturbation sampling.
//!
//! A vocabulary is a set of ego-local maneuvers. Perturbations place every
//! entry at the ego pose at frame T, reject endpoints too far from the
//! logged endpoint, drop infeasible ones, and keep one survivor per cell of
//! an (optionally interleaved) endpoint grid.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_diff, OrientedBox, Pose2D};
use crate::kinematics::{bicycle_step, ControlInput, VehicleParams};
use crate::metrics::{agent_box_tracks, check_collision, compute_submetrics, MetricConfig, RewardRecord};
use crate::reactive::{rollout, RolloutMode, SceneStates, SimConfig};
use crate::rng::{mix, rng_from};
use crate::scenario::{Scenario, TrajFrame, Trajectory, VehicleState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Clustered,
    RawHuman,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    pub entries: Vec<Trajectory>,
    pub provenance: Provenance,
}

impl Vocabulary {
    pub fn new(entries: Vec<Trajectory>, provenance: Provenance) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let (n, dt) = (entries[0].states.len(), entries[0].dt);
        if let Some(i) = entries.iter().position(|e| e.states.len() != n || (e.dt - dt).abs() > 1e-12) {
            return Err(Error::Vocabulary(format!("entry {i} differs in length or dt from entry 0")));
        }
        Ok(Self { entries, provenance })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn horizon(&self) -> usize {
        self.entries[0].horizon()
    }

    pub fn dt(&self) -> f64 {
        self.entries[0].dt
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.entries)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Load a JSON array of trajectories.
    pub fn load(path: impl AsRef<Path>, provenance: Provenance) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let entries: Vec<Trajectory> = serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::new(entries, provenance)
    }
}

/// Synthetic human-like maneuvers in the ego-local frame: straight, arc and
/// S-curve steering profiles combined with jerk-limited speed changes,
/// integrated with the bicycle model.
pub fn synthesize_maneuvers(count: usize, horizon: usize, dt: f64, seed: u64, vehicle: &VehicleParams) -> Vec<Trajectory> {
    (0..count).map(|i| maneuver(horizon, dt, mix(&[seed, i as u64]), vehicle)).collect()
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

fn maneuver(horizon: usize, dt: f64, seed: u64, vp: &VehicleParams) -> Trajectory {
    let mut rng = rng_from(seed);
    let duration = horizon as f64 * dt;
    let v0: f64 = rng.gen_range(0.0..16.0);
    let a_target: f64 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-3.0..2.0) };
    let a_on = rng.gen_range(0.0..duration * 0.5);
    let a_off = rng.gen_range(a_on..duration + 1.0);

    let l = vp.wheelbase;
    // curvature skewed toward gentle arcs, optionally combined with an S-shaped lane shift
    let arc = if rng.gen_bool(0.6) {
        let v_ref = v0.max(3.0);
        let k_max = (vp.max_curvature() * 0.9).min(2.5 / (v_ref * v_ref));
        let u: f64 = rng.gen_range(-1.0..1.0);
        let kappa = k_max * u * u.abs();
        let t0 = rng.gen_range(0.0..1.5);
        let ramp = rng.gen_range(0.5..2.0);
        Some(((l * kappa).atan(), t0, ramp))
    } else {
        None
    };
    let shift = if rng.gen_bool(0.6) {
        let d = rng.gen_range(-2.5..2.5);
        let period = rng.gen_range(2.0..duration);
        let t0 = rng.gen_range(0.0..(duration - period).max(1e-3));
        let v_ref = v0.max(2.0);
        let amp = (2.0 * std::f64::consts::PI * l * d / (v_ref * period * period)).clamp(-0.45, 0.45);
        Some((amp, t0, period))
    } else {
        None
    };
    let steer = move |t: f64| {
        let a = arc.map_or(0.0, |(target, t0, ramp)| target * smoothstep((t - t0) / ramp));
        let b = shift.map_or(0.0, |(amp, t0, period)| {
            if t < t0 || t > t0 + period {
                0.0
            } else {
                amp * (2.0 * std::f64::consts::PI * (t - t0) / period).sin()
            }
        });
        a + b
    };

    let mut s = VehicleState { vel_lon: v0, ..Default::default() };
    let mut states = Vec::with_capacity(horizon + 1);
    states.push(s);
    let mut accel = 0.0f64;
    for k in 0..horizon {
        let t = k as f64 * dt;
        let want = if t >= a_on && t < a_off { a_target } else { 0.0 };
        let slew = vp.jerk_max * 0.5 * dt;
        accel = want.clamp(accel - slew, accel + slew);
        let rate = ((steer(t + dt) - s.steering) / dt).clamp(-vp.steer_rate_max, vp.steer_rate_max);
        s = bicycle_step(&s, ControlInput { accel, steer_rate: rate }, dt, l, vp.steer_max);
        states.push(s);
    }
    Trajectory { dt, frame: TrajFrame::EgoLocal, states }
}

/// Clustering features: every 5th state's (x, y, unrolled heading).
fn features(t: &Trajectory) -> Vec<f64> {
    let sub = t.subsample(5);
    let mut out = Vec::with_capacity(sub.states.len() * 3);
    let mut theta = sub.states[0].pose.theta;
    let mut prev = theta;
    for s in &sub.states {
        theta += angle_diff(s.pose.theta, prev);
        prev = s.pose.theta;
        out.extend_from_slice(&[s.pose.x, s.pose.y, theta]);
    }
    out
}

fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cluster `samples` into `k` entries.
///
/// Lloyd iterations (Hamerly's bounds skip provably unchanged
/// assignments) from a seeded k-means++ start, capped at 100 iterations.
/// Each center is then snapped to its nearest sample so every entry is a
/// realizable trajectory; entries are returned in sample order.
pub fn build_vocabulary(samples: &[Trajectory], k: usize, seed: u64) -> Result<Vocabulary> {
    if samples.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    if k == 0 || k > samples.len() {
        return Err(Error::Vocabulary(format!("k = {k} must be in 1..={}", samples.len())));
    }
    let (n0, dt0) = (samples[0].states.len(), samples[0].dt);
    if samples.iter().any(|s| s.states.len() != n0 || (s.dt - dt0).abs() > 1e-12) {
        return Err(Error::Vocabulary("samples differ in length or dt".into()));
    }
    let x: Vec<Vec<f64>> = samples.iter().map(features).collect();
    let centers = kmeans(&x, k, seed, 100);
    let picked = snap_to_samples(&x, &centers);
    let entries = picked.into_iter().map(|i| samples[i].clone()).collect();
    Vocabulary::new(entries, Provenance::Clustered)
}

fn kmeans_pp(x: &[Vec<f64>], k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from(seed);
    let n = x.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centers = vec![x[first].clone()];
    let mut d2: Vec<f64> = x.iter().map(|p| sqdist(p, &x[first])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.gen_range(0.0..total);
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if r < *w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            // duplicates only: lowest unchosen index
            chosen.iter().position(|c| !c).expect("k <= n")
        };
        chosen[pick] = true;
        for (i, p) in x.iter().enumerate() {
            d2[i] = d2[i].min(sqdist(p, &x[pick]));
        }
        centers.push(x[pick].clone());
    }
    centers
}

fn kmeans(x: &[Vec<f64>], k: usize, seed: u64, max_iter: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let dim = x[0].len();
    let mut c = kmeans_pp(x, k, seed);
    let mut assign = vec![0usize; n];
    let mut upper = vec![f64::INFINITY; n];
    let mut lower = vec![0.0f64; n];
    let nearest_two = |p: &[f64], c: &[Vec<f64>]| {
        let (mut b1, mut d1, mut d2) = (0usize, f64::INFINITY, f64::INFINITY);
        for (j, cj) in c.iter().enumerate() {
            let d = sqdist(p, cj);
            if d < d1 {
                d2 = d1;
                d1 = d;
                b1 = j;
            } else if d < d2 {
                d2 = d;
            }
        }
        (b1, d1.sqrt(), d2.sqrt())
    };
    for i in 0..n {
        let (b, d1, d2) = nearest_two(&x[i], &c);
        assign[i] = b;
        upper[i] = d1;
        lower[i] = d2;
    }
    for _ in 0..max_iter {
        // update centers
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(&x[i]) {
                *s += v;
            }
        }
        let mut moved = vec![0.0; k];
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            let new: Vec<f64> = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            moved[j] = sqdist(&new, &c[j]).sqrt();
            c[j] = new;
        }
        let (mut m1, mut m1j, mut m2) = (0.0, usize::MAX, 0.0);
        for (j, &m) in moved.iter().enumerate() {
            if m > m1 {
                m2 = m1;
                m1 = m;
                m1j = j;
            } else if m > m2 {
                m2 = m;
            }
        }
        for i in 0..n {
            upper[i] += moved[assign[i]];
            lower[i] -= if assign[i] == m1j { m2 } else { m1 };
        }
        // half distance to the nearest other center
        let half: Vec<f64> = (0..k)
            .map(|j| {
                let mut best = f64::INFINITY;
                for jj in 0..k {
                    if jj != j {
                        best = best.min(sqdist(&c[j], &c[jj]));
                    }
                }
                0.5 * best.sqrt()
            })
            .collect();
        let mut changed = 0usize;
        for i in 0..n {
            let bound = half[assign[i]].max(lower[i]);
            if upper[i] <= bound {
                continue;
            }
            upper[i] = sqdist(&x[i], &c[assign[i]]).sqrt();
            if upper[i] <= bound {
                continue;
            }
            let (b, d1, d2) = nearest_two(&x[i], &c);
            if b != assign[i] {
                changed += 1;
            }
            assign[i] = b;
            upper[i] = d1;
            lower[i] = d2;
        }
        if changed == 0 {
            break;
        }
    }
    c
}

/// Nearest sample to each center; duplicates fall back to the next-nearest
/// unused sample. Returned indices are sorted.
fn snap_to_samples(x: &[Vec<f64>], centers: &[Vec<f64>]) -> Vec<usize> {
    let mut used = vec![false; x.len()];
    let mut out = Vec::with_capacity(centers.len());
    for c in centers {
        let mut order: Vec<(f64, usize)> = x.iter().enumerate().map(|(i, p)| (sqdist(p, c), i)).collect();
        let best = order.iter().filter(|(_, i)| !used[*i]).min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let pick = match best {
            Some(&(_, i)) => i,
            None => {
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                order[0].1
            }
        };
        used[pick] = true;
        out.push(pick);
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbThresholds {
    pub r_lon: f64,
    pub r_lat: f64,
    /// Radians.
    pub dtheta_max: f64,
    pub epdms_min: f64,
}

impl Default for PerturbThresholds {
    fn default() -> Self {
        Self { r_lon: 20.0, r_lat: 2.0, dtheta_max: 20f64.to_radians(), epdms_min: 0.8 }
    }
}

impl PerturbThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_lon > 0.0 && self.r_lat > 0.0 && self.dtheta_max > 0.0) || !(0.0..=1.0).contains(&self.epdms_min) {
            return Err(Error::Config(format!("invalid perturbation thresholds {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub step_lon: f64,
    pub step_lat: f64,
    pub interleave: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { step_lon: 5.0, step_lat: 0.5, interleave: true }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_lon > 0.0 && self.step_lat > 0.0) {
            return Err(Error::Config(format!("grid steps must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Cell of an endpoint offset. With interleaving, odd longitudinal rows
    /// are shifted laterally by half a step.
    pub fn cell(&self, lon: f64, lat: f64) -> (i64, i64) {
        let i_lon = (lon / self.step_lon).floor() as i64;
        let shift = if self.interleave && i_lon.rem_euclid(2) == 1 { 0.5 * self.step_lat } else { 0.0 };
        (i_lon, ((lat + shift) / self.step_lat).floor() as i64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateStatus {
    Pending,
    ThresholdRejected,
    GridDropped,
    InfeasibleNonreactive,
    InfeasibleReactive,
    ClearedNonreactive,
    Accepted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointOffsets {
    pub lon: f64,
    pub lat: f64,
    pub dtheta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationCandidate {
    /// Vocabulary entry index.
    pub index: usize,
    /// Global-frame plan over frames T..T+H.
    pub trajectory: Trajectory,
    pub offsets: EndpointOffsets,
    pub endpoint_cell: Option<(i64, i64)>,
    pub status: CandidateStatus,
    pub reason: Option<String>,
    pub epdms: Option<f64>,
}

/// Place every entry at the ego pose at frame T and threshold its endpoint
/// against the logged ego at T+H. Offsets are expressed in the frame of the
/// logged endpoint; checks run heading, longitudinal, lateral.
pub fn enumerate_perturbations(scenario: &Scenario, vocab: &Vocabulary, th: &PerturbThresholds) -> Result<Vec<PerturbationCandidate>> {
    if vocab.horizon() != scenario.t_horizon {
        return Err(Error::HorizonMismatch { expected: scenario.t_horizon, actual: vocab.horizon() });
    }
    if (vocab.dt() - scenario.dt).abs() > 1e-12 {
        return Err(Error::DtMismatch { expected: scenario.dt, actual: vocab.dt() });
    }
    let origin = scenario.ego_log.states[scenario.perturb_frame()].pose;
    let log_end = scenario.ego_log.states[scenario.expert_frame()].pose;
    Ok(vocab
        .entries
        .iter()
        .enumerate()
        .map(|(index, entry)| {
            let trajectory = entry.placed_at(&origin);
            let rel = trajectory.last().pose.relative_to(&log_end);
            let offsets = EndpointOffsets { lon: rel.x, lat: rel.y, dtheta: rel.theta };
            let reason = if offsets.dtheta.abs() > th.dtheta_max {
                Some("heading")
            } else if offsets.lon.abs() > th.r_lon {
                Some("longitudinal")
            } else if offsets.lat.abs() > th.r_lat {
                Some("lateral")
            } else {
                None
            };
            PerturbationCandidate {
                index,
                trajectory,
                offsets,
                endpoint_cell: None,
                status: if reason.is_some() { CandidateStatus::ThresholdRejected } else { CandidateStatus::Pending },
                reason: reason.map(str::to_string),
                epdms: None,
            }
        })
        .collect())
}

fn retainable(s: CandidateStatus) -> bool {
    matches!(s, CandidateStatus::Pending | CandidateStatus::ClearedNonreactive)
}

/// Keep one retainable candidate per endpoint cell, chosen uniformly with a
/// generator keyed by `(seed, cell)`; the others become grid-dropped.
pub fn grid_sparsify(mut cands: Vec<PerturbationCandidate>, g: &GridSpec, seed: u64) -> Vec<PerturbationCandidate> {
    let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, c) in cands.iter_mut().enumerate() {
        let cell = g.cell(c.offsets.lon, c.offsets.lat);
        c.endpoint_cell = Some(cell);
        if retainable(c.status) {
            cells.entry(cell).or_default().push(i);
        }
    }
    for (cell, members) in cells {
        if members.len() < 2 {
            continue;
        }
        let mut rng = rng_from(mix(&[seed, cell.0 as u64, cell.1 as u64]));
        let keep = members[rng.gen_range(0..members.len())];
        for i in members {
            if i != keep {
                cands[i].status = CandidateStatus::GridDropped;
                cands[i].reason = Some("grid".into());
            }
        }
    }
    cands
}

/// Ego trajectory over frames 0..=T+H: the logged history followed by the
/// simulated window.
pub fn with_log_history(scenario: &Scenario, window: &SceneStates) -> Trajectory {
    let mut states = scenario.ego_log.states[..window.t_start].to_vec();
    states.extend_from_slice(&window.ego);
    Trajectory { dt: scenario.dt, frame: TrajFrame::Global, states }
}

/// Outcome of simulating and scoring one plan over [T, T+H].
#[derive(Clone, Debug)]
pub struct FeasibilityCheck {
    pub states: SceneStates,
    pub reward: RewardRecord,
    /// First failed check: "collision", "off-road" or "reward".
    pub failure: Option<&'static str>,
}

pub fn check_feasibility(
    scenario: &Scenario,
    plan: &Trajectory,
    mode: RolloutMode,
    epdms_min: f64,
    sim: &SimConfig,
    metrics: &MetricConfig,
) -> Result<FeasibilityCheck> {
    let t = scenario.perturb_frame();
    let states = rollout(scenario, plan, t, scenario.t_horizon, mode, None, sim)?;
    let ego_traj = with_log_history(scenario, &states);
    let sub = compute_submetrics(&states, scenario, &ego_traj, metrics, &sim.vehicle)?;
    let reward = RewardRecord::single(sub, &metrics.weights)?;
    let boxes: Vec<OrientedBox> = states.ego.iter().map(|s| OrientedBox::new(&s.pose, sim.vehicle.length, sim.vehicle.width)).collect();
    let speeds: Vec<f64> = states.ego.iter().map(|s| s.vel_lon).collect();
    let collided = check_collision(&boxes, &speeds, &agent_box_tracks(&states, scenario), metrics.thresholds.at_fault_speed).is_some();
    let failure = if collided {
        Some("collision")
    } else if sub.dac < 1.0 {
        Some("off-road")
    } else if reward.epdms < epdms_min {
        Some("reward")
    } else {
        None
    };
    Ok(FeasibilityCheck { states, reward, failure })
}

/// Roll the candidate out over [T, T+H] in `mode` and score it. Nonreactive
/// checks apply to pending candidates, reactive checks to candidates that
/// already cleared the nonreactive pass.
pub fn feasibility_filter(
    mut cand: PerturbationCandidate,
    scenario: &Scenario,
    mode: RolloutMode,
    epdms_min: f64,
    sim: &SimConfig,
    metrics: &MetricConfig,
) -> Result<PerturbationCandidate> {
    let (required, cleared, failed) = match mode {
        RolloutMode::Nonreactive => (CandidateStatus::Pending, CandidateStatus::ClearedNonreactive, CandidateStatus::InfeasibleNonreactive),
        _ => (CandidateStatus::ClearedNonreactive, CandidateStatus::Accepted, CandidateStatus::InfeasibleReactive),
    };
    if cand.status != required {
        return Err(Error::Validation(format!("candidate {} is {:?}, expected {:?}", cand.index, cand.status, required)));
    }
    let check = check_feasibility(scenario, &cand.trajectory, mode, epdms_min, sim, metrics)?;
    cand.epdms = Some(check.reward.epdms);
    match check.failure {
        Some(reason) => {
            cand.status = failed;
            cand.reason = Some(reason.into());
        }
        None => {
            cand.status = cleared;
            cand.reason = None;
        }
    }
    Ok(cand)
}

/// Clustered and raw vocabularies built from synthetic maneuvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub samples: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self { samples: 16_384, k: 1_024, seed: 0 }
    }
}

pub fn default_samples(cfg: &VocabConfig, horizon: usize, dt: f64, vehicle: &VehicleParams) -> Vec<Trajectory> {
    synthesize_maneuvers(cfg.samples, horizon, dt, cfg.seed, vehicle)
}

/// The ego pose at the start of a local trajectory is the origin.
pub fn is_local(t: &Trajectory) -> bool {
    let p = t.states[0].pose;
    t.frame == TrajFrame::EgoLocal && p == Pose2D::default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: f64, lat: f64, n: usize) -> Trajectory {
        let states = (0..n).map(|k| VehicleState::at(v * 0.1 * k as f64, lat, 0.0, v)).collect();
        Trajectory { dt: 0.1, frame: TrajFrame::EgoLocal, states }
    }

    #[test]
    fn k_equals_n_returns_samples() {
        let samples: Vec<_> = (0..6).map(|i| line(2.0 + i as f64, 0.0, 11)).collect();
        let v = build_vocabulary(&samples, 6, 3).unwrap();
        assert_eq!(v.entries, samples);
    }

    #[test]
    fn separated_groups_give_one_entry_each() {
        let mut samples: Vec<_> = (0..5).map(|i| line(5.0 + 0.01 * i as f64, 0.0, 11)).collect();
        samples.extend((0..5).map(|i| line(5.0, 50.0 + 0.01 * i as f64, 11)));
        let v = build_vocabulary(&samples, 2, 9).unwrap();
        assert_eq!(v.size(), 2);
        let near_road = v.entries.iter().filter(|e| e.states[0].pose.y < 1.0).count();
        assert_eq!(near_road, 1);
        assert_eq!(build_vocabulary(&samples, 2, 9).unwrap(), v);
    }

    #[test]
    fn bad_vocabulary_inputs() {
        assert!(matches!(build_vocabulary(&[], 1, 0), Err(Error::EmptyVocabulary)));
        assert!(build_vocabulary(&[line(1.0, 0.0, 5)], 0, 0).is_err());
    }

    fn cand(lon: f64, lat: f64) -> PerturbationCandidate {
        PerturbationCandidate {
            index: 0,
            trajectory: line(1.0, 0.0, 3),
            offsets: EndpointOffsets { lon, lat, dtheta: 0.0 },
            endpoint_cell: None,
            status: CandidateStatus::Pending,
            reason: None,
            epdms: None,
        }
    }

    #[test]
    fn grid_binning_by_hand() {
        let g = GridSpec { step_lon: 5.0, step_lat: 0.5, interleave: true };
        let out = grid_sparsify([0.0, 1.0, 2.0, 6.0].iter().map(|&x| cand(x, 0.0)).collect(), &g, 4);
        let kept: Vec<_> = out.iter().filter(|c| c.status == CandidateStatus::Pending).collect();
        assert_eq!(kept.len(), 2);
        let cells: Vec<_> = kept.iter().map(|c| c.endpoint_cell.unwrap().0).collect();
        assert_eq!(cells, vec![0, 1]);
        assert!(grid_sparsify(vec![], &g, 1).is_empty());
        // already one per cell: nothing dropped
        let sparse: Vec<_> = [0.0, 5.0, 10.0].iter().map(|&x| cand(x, 0.0)).collect();
        assert!(grid_sparsify(sparse, &g, 1).iter().all(|c| c.status == CandidateStatus::Pending));
    }

    #[test]
    fn interleaved_rows_shift_half_step() {
        let g = GridSpec::default();
        assert_eq!(g.cell(1.0, -0.1), (0, -1));
        // odd row: lateral shifted by 0.25
        assert_eq!(g.cell(6.0, -0.1), (1, 0));
        assert_eq!(g.cell(-1.0, -0.1), (-1, 0));
        let plain = GridSpec { interleave: false, ..g };
        assert_eq!(plain.cell(6.0, -0.1), (1, -1));
    }

    #[test]
    fn maneuvers_are_kinematic_and_local() {
        let m = synthesize_maneuvers(50, 40, 0.1, 5, &VehicleParams::default());
        for t in &m {
            assert!(is_local(t));
            assert_eq!(t.states.len(), 41);
            assert!(t.is_kinematically_consistent(1e-9));
        }
        assert_eq!(m, synthesize_maneuvers(50, 40, 0.1, 5, &VehicleParams::default()));
    }
}

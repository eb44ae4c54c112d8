//! LQR gains and time-varying LQR trajectory tracking.

use nalgebra::{DMatrix, Matrix2, Matrix4, SMatrix, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::angle_diff;
use crate::kinematics::{bicycle_step, ControlInput, VehicleParams};
use crate::scenario::{Trajectory, VehicleState};

const RICCATI_TOL: f64 = 1e-10;
const RICCATI_MAX_ITER: usize = 10_000;

/// Weights and preview length of the tracking controller.
///
/// Error state is (lateral, heading, speed, steering); inputs are
/// (acceleration, steering rate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqrParams {
    pub state_weights: [f64; 4],
    pub control_weights: [f64; 2],
    /// Backward Riccati recursion length in frames.
    pub horizon: usize,
}

impl Default for LqrParams {
    fn default() -> Self {
        Self { state_weights: [1.0, 2.0, 0.5, 0.1], control_weights: [0.2, 0.2], horizon: 10 }
    }
}

impl LqrParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.state_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err("lqr.state_weights must be nonnegative".into());
        }
        if self.control_weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err("lqr.control_weights must be strictly positive".into());
        }
        if self.horizon == 0 {
            return Err("lqr.horizon must be at least 1".into());
        }
        Ok(())
    }
}

/// Infinite-horizon discrete LQR solution.
#[derive(Clone, Debug)]
pub struct LqrGain {
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub iterations: usize,
    /// Frobenius norm of the Riccati equation residual at `p`.
    pub residual: f64,
}

fn riccati_update(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let bt_p = b.transpose() * p;
    let s = r + &bt_p * b;
    let s_inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::LqrIllPosed("R + BᵀPB is singular".into()))?;
    let k = &s_inv * &bt_p * a;
    let next = q + a.transpose() * p * a - a.transpose() * p * b * &k;
    Ok((next, k))
}

/// Solve the discrete algebraic Riccati equation by fixed-point iteration
/// from `P = Q` and return `K = (R + BᵀPB)⁻¹ BᵀPA`.
pub fn solve_lqr_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<LqrGain> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::LqrIllPosed(format!(
            "dimension mismatch: A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    let r_sym = (r + r.transpose()) * 0.5;
    if r_sym.cholesky().is_none() {
        return Err(Error::LqrIllPosed("R is not positive definite".into()));
    }
    let mut p = q.clone();
    let mut delta = f64::INFINITY;
    for it in 1..=RICCATI_MAX_ITER {
        let (next, _) = riccati_update(a, b, q, r, &p)?;
        delta = (&next - &p).abs().max();
        p = next;
        if !delta.is_finite() {
            break;
        }
        if delta < RICCATI_TOL {
            let (again, k) = riccati_update(a, b, q, r, &p)?;
            let residual = (&again - &p).norm();
            return Ok(LqrGain { k, p, iterations: it, residual });
        }
    }
    Err(Error::RiccatiNonConvergence { residual: delta })
}

type Mat42 = SMatrix<f64, 4, 2>;
type Mat24 = SMatrix<f64, 2, 4>;

fn linearize(v: f64, delta: f64, dt: f64, wheelbase: f64) -> Matrix4<f64> {
    let c = delta.cos();
    Matrix4::new(
        1.0, v * dt, 0.0, 0.0,
        0.0, 1.0, delta.tan() / wheelbase * dt, v / (wheelbase * c * c) * dt,
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    )
}

/// Reference pose interpolated near index `j` at the ego's along-track position.
struct RefPoint {
    x: f64,
    y: f64,
    theta: f64,
    steering: f64,
}

fn interpolate(a: &VehicleState, b: &VehicleState, f: f64) -> RefPoint {
    RefPoint {
        x: a.pose.x + f * (b.pose.x - a.pose.x),
        y: a.pose.y + f * (b.pose.y - a.pose.y),
        theta: a.pose.theta + f * angle_diff(b.pose.theta, a.pose.theta),
        steering: a.steering + f * (b.steering - a.steering),
    }
}

fn local_reference(reference: &[VehicleState], pos: [f64; 2], hint: &mut usize) -> RefPoint {
    let n = reference.len();
    let d2 = |j: usize| {
        let p = reference[j].pose;
        (p.x - pos[0]).powi(2) + (p.y - pos[1]).powi(2)
    };
    // nearest state in a forward window; the index never moves backwards
    let mut best = *hint;
    let mut best_d = d2(best);
    for j in (*hint + 1)..(*hint + 12).min(n) {
        let d = d2(j);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    *hint = best;
    let r = &reference[best];
    let (s, c) = r.pose.theta.sin_cos();
    let along = c * (pos[0] - r.pose.x) + s * (pos[1] - r.pose.y);
    let (a, b, sign) = if along >= 0.0 && best + 1 < n {
        (r, &reference[best + 1], 1.0)
    } else if along < 0.0 && best > 0 {
        (r, &reference[best - 1], -1.0)
    } else {
        return interpolate(r, r, 0.0);
    };
    let seg = (b.pose.x - a.pose.x).hypot(b.pose.y - a.pose.y);
    let f = if seg > 1e-9 { (sign * along / seg).clamp(0.0, 1.0) } else { 0.0 };
    interpolate(a, b, f)
}

/// Execute `reference` from `start` with error-state LQR feedback through
/// the bicycle model.
///
/// The gain at each step comes from a finite-horizon backward Riccati
/// recursion over the reference linearized at the next `params.horizon`
/// frames. Lateral and heading errors are taken against the reference
/// interpolated at the ego's along-track position; speed and feedforward
/// inputs are time-indexed. Commands are clamped to the vehicle limits and
/// the acceleration command is slew-limited by `jerk_max`.
pub fn lqr_track(reference: &Trajectory, start: &VehicleState, params: &LqrParams, vehicle: &VehicleParams) -> Result<Trajectory> {
    let n = reference.states.len();
    if n < 2 {
        return Err(Error::Trajectory("reference needs at least 2 states".into()));
    }
    let dt = reference.dt;
    let refs = &reference.states;
    let q = Matrix4::from_diagonal(&Vector4::from(params.state_weights));
    let r = Matrix2::new(params.control_weights[0], 0.0, 0.0, params.control_weights[1]);
    let mut bmat = Mat42::zeros();
    bmat[(2, 0)] = dt;
    bmat[(3, 1)] = dt;
    let bt = bmat.transpose();

    let mut out = Vec::with_capacity(n);
    let mut state = *start;
    out.push(state);
    let mut hint = 0usize;
    let mut prev_accel = start.accel;
    for k in 0..n - 1 {
        let rp = local_reference(refs, state.position(), &mut hint);
        let (s, c) = rp.theta.sin_cos();
        let e_lat = -s * (state.pose.x - rp.x) + c * (state.pose.y - rp.y);
        let e_head = angle_diff(state.pose.theta, rp.theta);
        let e_v = state.vel_lon - refs[k].vel_lon;
        let e_delta = state.steering - rp.steering;
        let err = Vector4::new(e_lat, e_head, e_v, e_delta);

        // backward recursion over the preview window
        let last = (k + params.horizon).min(n - 1);
        let mut p = q;
        let mut gain = Mat24::zeros();
        for j in (k..last.max(k + 1)).rev() {
            let rj = &refs[j.min(n - 1)];
            let a = linearize(rj.vel_lon.max(0.0), rj.steering, dt, vehicle.wheelbase);
            let bt_p = bt * p;
            let s_mat = r + bt_p * bmat;
            let s_inv = s_mat.try_inverse().ok_or_else(|| Error::LqrIllPosed("singular input Hessian".into()))?;
            gain = s_inv * bt_p * a;
            p = q + a.transpose() * p * (a - bmat * gain);
        }
        let fb = gain * err;

        let a_ff = (refs[k + 1].vel_lon - refs[k].vel_lon) / dt;
        let r_ff = (refs[k + 1].steering - refs[k].steering) / dt;
        let mut u = ControlInput { accel: a_ff - fb[0], steer_rate: r_ff - fb[1] }.clamped(vehicle);
        let slew = vehicle.jerk_max * dt;
        u.accel = u.accel.clamp(prev_accel - slew, prev_accel + slew);
        prev_accel = u.accel;
        state = bicycle_step(&state, u, dt, vehicle.wheelbase, vehicle.steer_max);
        out.push(state);
    }
    Ok(Trajectory { dt, frame: reference.frame, states: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::TrajFrame;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_riccati_golden_ratio() {
        let g = solve_lqr_gain(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0)).unwrap();
        // P² − P − 1 = 0  ⇒  P = (1 + √5) / 2, K = P / (1 + P)
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((g.p[(0, 0)] - p).abs() < 1e-9);
        assert!((g.k[(0, 0)] - p / (1.0 + p)).abs() < 1e-9);
        assert!(g.residual < 1e-8);
    }

    #[test]
    fn zero_cost_or_zero_dynamics_give_zero_gain() {
        let g = solve_lqr_gain(&scalar(1.0), &scalar(1.0), &scalar(0.0), &scalar(1.0)).unwrap();
        assert_eq!(g.k[(0, 0)], 0.0);
        let g = solve_lqr_gain(&scalar(0.0), &scalar(1.0), &scalar(3.0), &scalar(1.0)).unwrap();
        assert_eq!(g.k[(0, 0)], 0.0);
        assert_eq!(g.p[(0, 0)], 3.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            solve_lqr_gain(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(0.0)),
            Err(Error::LqrIllPosed(_))
        ));
        let a = DMatrix::identity(2, 2);
        assert!(solve_lqr_gain(&a, &scalar(1.0), &scalar(1.0), &scalar(1.0)).is_err());
        // uncontrollable unstable mode never converges
        let err = solve_lqr_gain(&scalar(2.0), &scalar(0.0), &scalar(1.0), &scalar(1.0)).unwrap_err();
        assert!(matches!(err, Error::RiccatiNonConvergence { .. }));
    }

    #[test]
    fn multi_dimensional_residual_small() {
        let dt = 0.1;
        let a = DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.5 * dt * dt, dt]);
        let g = solve_lqr_gain(&a, &b, &DMatrix::identity(2, 2), &scalar(0.5)).unwrap();
        assert!(g.residual < 1e-8);
        // closed loop is stable
        let cl = &a - &b * &g.k;
        let eig = cl.complex_eigenvalues();
        assert!(eig.iter().all(|z| z.norm() < 1.0));
    }

    fn straight_ref(n: usize, v: f64) -> Trajectory {
        let states = (0..n).map(|k| VehicleState::at(v * 0.1 * k as f64, 0.0, 0.0, v)).collect();
        Trajectory { dt: 0.1, frame: TrajFrame::Global, states }
    }

    #[test]
    fn on_reference_start_stays_on_reference() {
        let r = straight_ref(41, 10.0);
        let out = lqr_track(&r, &r.states[0], &LqrParams::default(), &VehicleParams::default()).unwrap();
        assert_eq!(out.states.len(), 41);
        let max_lat = out.states.iter().map(|s| s.pose.y.abs()).fold(0.0, f64::max);
        assert!(max_lat < 1e-6);
    }

    #[test]
    fn lateral_offset_decays() {
        for (y0, v) in [(0.5, 10.0), (-1.0, 5.0), (0.3, 15.0)] {
            let r = straight_ref(61, v);
            let mut start = r.states[0];
            start.pose.y = y0;
            let out = lqr_track(&r, &start, &LqrParams::default(), &VehicleParams::default()).unwrap();
            let e: Vec<f64> = out.states.iter().map(|s| s.pose.y.abs()).collect();
            for k in 0..e.len() - 10 {
                assert!(e[k + 10] <= e[k].max(0.05), "y0={y0} v={v} k={k}: {} -> {}", e[k], e[k + 10]);
            }
            assert!(e[40] < 0.05);
        }
    }

    #[test]
    fn tracking_is_bitwise_deterministic() {
        let r = straight_ref(41, 8.0);
        let mut start = r.states[0];
        start.pose.y = 0.7;
        start.pose.theta = 0.1;
        let a = lqr_track(&r, &start, &LqrParams::default(), &VehicleParams::default()).unwrap();
        let b = lqr_track(&r, &start, &LqrParams::default(), &VehicleParams::default()).unwrap();
        assert_eq!(a, b);
    }
}

//! Log-quadratic data-scaling fits: `S = a·ln²N + b·lnN + c`.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Curvatures at or above this are treated as linear in log N.
pub const SATURATION_A_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: f64,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub residual_std: f64,
    /// Standard errors of (a, b, c).
    pub std_err: [f64; 3],
    /// Vertex `exp(-b / 2a)` of a concave fit.
    pub saturation_n: Option<f64>,
    /// Set when the vertex lies outside `[n_min / 10, n_max · 10]`.
    pub saturation_extrapolated: bool,
    pub points: usize,
}

impl FitResult {
    pub fn eval(&self, n: f64) -> f64 {
        let l = n.ln();
        self.a * l * l + self.b * l + self.c
    }
}

fn check_points(points: &[ScalingPoint]) -> Result<()> {
    for (row, p) in points.iter().enumerate() {
        if !(p.n > 0.0) || !p.n.is_finite() {
            return Err(Error::NonPositiveN { row: row + 1, n: p.n });
        }
        if !p.s.is_finite() {
            return Err(Error::Fit(format!("non-finite score at row {}", row + 1)));
        }
    }
    let mut ns: Vec<f64> = points.iter().map(|p| p.n).collect();
    ns.sort_by(f64::total_cmp);
    ns.dedup();
    if ns.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct n values, got {}", ns.len())));
    }
    Ok(())
}

/// Least-squares fit of the log-quadratic model. The model is linear in
/// `(a, b, c)`, so this is solved directly through a QR factorisation of
/// the design matrix.
pub fn fit_log_quadratic(points: &[ScalingPoint]) -> Result<FitResult> {
    check_points(points)?;
    let m = points.len();
    let x = DMatrix::from_fn(m, 3, |i, j| {
        let l = points[i].n.ln();
        [l * l, l, 1.0][j]
    });
    let y = DVector::from_iterator(m, points.iter().map(|p| p.s));

    let qr = x.clone().qr();
    let r: Matrix3<f64> = qr.r().fixed_view::<3, 3>(0, 0).into_owned();
    let qty = qr.q().transpose() * &y;
    let coef = r
        .solve_upper_triangular(&qty.rows(0, 3).into_owned())
        .ok_or_else(|| Error::Fit("rank-deficient design".into()))?;
    if coef.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("rank-deficient design".into()));
    }

    let resid = &y - &x * &coef;
    let ssr = resid.norm_squared();
    let residual_std = (ssr / (m.saturating_sub(3).max(1)) as f64).sqrt();

    let r_inv = r.try_inverse().ok_or_else(|| Error::Fit("rank-deficient design".into()))?;
    let cov = r_inv * r_inv.transpose() * (residual_std * residual_std);
    let std_err = [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt(), cov[(2, 2)].sqrt()];

    let (a, b, c) = (coef[0], coef[1], coef[2]);
    let saturation_n = (a < -SATURATION_A_EPS).then(|| (-b / (2.0 * a)).exp());
    let (n_min, n_max) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.n), hi.max(p.n)));
    let saturation_extrapolated = saturation_n.is_some_and(|sn| !(sn >= n_min / 10.0 && sn <= n_max * 10.0));

    Ok(FitResult { a, b, c, residual_std, std_err, saturation_n, saturation_extrapolated, points: m })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: f64,
    pub s_fit: f64,
    pub s_lo: f64,
    pub s_hi: f64,
}

/// Fitted curve on a log-uniform grid with a ±residual_std band.
pub fn emit_curve(fit: &FitResult, n_min: f64, n_max: f64, samples: usize) -> Result<Vec<CurveRow>> {
    if !(n_min > 0.0 && n_min < n_max && n_max.is_finite()) {
        return Err(Error::Fit(format!("invalid curve range [{n_min}, {n_max}]")));
    }
    if samples < 2 {
        return Err(Error::Fit("curve needs at least 2 samples".into()));
    }
    let (l0, l1) = (n_min.ln(), n_max.ln());
    Ok((0..samples)
        .map(|i| {
            let n = match i {
                0 => n_min,
                i if i == samples - 1 => n_max,
                i => (l0 + (l1 - l0) * i as f64 / (samples - 1) as f64).exp(),
            };
            let s_fit = fit.eval(n);
            CurveRow { n, s_fit, s_lo: s_fit - fit.residual_std, s_hi: s_fit + fit.residual_std }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingTrend {
    /// Concave with the vertex inside the observed n range.
    Saturating,
    NonSaturating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub n_min: f64,
    pub n_max: f64,
    pub trend: ScalingTrend,
    pub fit: FitResult,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub runs: Vec<RunReport>,
}

pub fn compare_fits(runs: &BTreeMap<String, Vec<ScalingPoint>>) -> Result<ScalingReport> {
    let runs = runs
        .iter()
        .map(|(label, pts)| {
            let fit = fit_log_quadratic(pts).map_err(|e| Error::Fit(format!("run {label}: {e}")))?;
            let n_min = pts.iter().map(|p| p.n).fold(f64::INFINITY, f64::min);
            let n_max = pts.iter().map(|p| p.n).fold(0.0, f64::max);
            let trend = match fit.saturation_n {
                Some(sn) if sn >= n_min && sn <= n_max => ScalingTrend::Saturating,
                _ => ScalingTrend::NonSaturating,
            };
            Ok(RunReport { label: label.clone(), n_min, n_max, trend, fit })
        })
        .collect::<Result<_>>()?;
    Ok(ScalingReport { runs })
}

/// Reads an `n,s` CSV (header required).
pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<ScalingPoint>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).collect::<Vec<_>>() != ["n", "s"] {
        return Err(Error::Schema { path: path.into(), message: format!("expected header n,s, got {}", headers.iter().collect::<Vec<_>>().join(",")) });
    }
    let points: Vec<ScalingPoint> = rdr
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::Parse { path: path.into(), message: format!("row {}: {e}", i + 1) }))
        .collect::<Result<_>>()?;
    for (row, p) in points.iter().enumerate() {
        if !(p.n > 0.0) {
            return Err(Error::NonPositiveN { row: row + 1, n: p.n });
        }
    }
    Ok(points)
}

pub fn write_points(points: &[ScalingPoint], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve(rows: &[CurveRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

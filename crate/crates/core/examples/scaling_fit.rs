//! Fit the log-quadratic scaling model to per-round cumulative yields and
//! to a synthetic saturating curve.

use std::collections::BTreeMap;

use scenesim::scaling::{compare_fits, emit_curve, ScalingPoint};

fn main() -> scenesim::Result<()> {
    let saturating: Vec<ScalingPoint> = [100.0, 300.0, 1e3, 3e3, 1e4, 3e4, 1e5]
        .iter()
        .map(|&n: &f64| ScalingPoint { n, s: -0.4 * n.ln().powi(2) + 8.0 * n.ln() + 40.0 })
        .collect();
    let linear: Vec<ScalingPoint> =
        [100.0, 300.0, 1e3, 3e3, 1e4].iter().enumerate().map(|(i, &n): (usize, &f64)| ScalingPoint { n, s: 60.0 + 2.0 * n.ln() + 0.1 * (i % 2) as f64 }).collect();
    let runs = BTreeMap::from([("saturating".to_string(), saturating), ("linear".to_string(), linear)]);
    let report = compare_fits(&runs)?;
    for r in &report.runs {
        let f = &r.fit;
        println!("{}: a={:.4} b={:.4} c={:.4} residual_std={:.4} saturation={:?} trend={:?}", r.label, f.a, f.b, f.c, f.residual_std, f.saturation_n, r.trend);
        for row in emit_curve(f, r.n_min, r.n_max, 5)? {
            println!("    n={:>9.1} s={:.3} [{:.3}, {:.3}]", row.n, row.s_fit, row.s_lo, row.s_hi);
        }
    }
    Ok(())
}

//! Integrate a single IDM follower behind a braking leader.

use scenesim::reactive::{idm_accel, IdmParams, Leader};

fn main() {
    let p = IdmParams::default();
    let (dt, b_hard) = (0.1, 4.0);
    let (mut x, mut v) = (0.0, 12.0);
    let (mut xl, mut vl) = (40.0, 12.0);
    for k in 0..=100 {
        let gap = xl - x - 4.8;
        let a = idm_accel(v, Some(Leader { v_lead: vl, gap }), &p, b_hard);
        if k % 10 == 0 {
            println!("t={:>4.1}s gap={gap:>6.2} m v={v:>5.2} m/s v_lead={vl:>5.2} a={a:>6.3}", k as f64 * dt);
        }
        let al = if k < 30 { -2.0 } else { 0.0 };
        vl = (vl + al * dt).max(0.0);
        xl += vl * dt;
        v = (v + a * dt).max(0.0);
        x += v * dt;
    }
}

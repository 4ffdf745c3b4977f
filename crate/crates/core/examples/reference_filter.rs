//! Unit-step response of the fourth-order reference filter.
use tether_explore::dynamics::{step_settling_time, FilterGains, ReferenceFilter};
use tether_explore::Vec3;

fn main() -> tether_explore::Result<()> {
    let gains = FilterGains::default();
    println!("hurwitz: {}", gains.is_hurwitz());
    let mut f = ReferenceFilter::new(gains, Vec3::zeros())?;
    let dt = 1e-3;
    for k in 1..=1500 {
        let out = f.step(&Vec3::new(1.0, 0.0, 0.0), dt);
        if k % 100 == 0 {
            println!("t = {:.1} s  q = {:.4}  dq = {:+.4}  ddq = {:+.4}", k as f64 * dt, out.q.x, out.dq.x, out.ddq.x);
        }
    }
    match step_settling_time(gains, dt, 5.0) {
        Some(t) => println!("5% settling time {t:.3} s"),
        None => println!("did not settle"),
    }
    Ok(())
}

//! λ₂ and the per-robot connectivity force for a small team next to a wall.
use tether_explore::connectivity::{ConnectivityField, ConnectivityParams};
use tether_explore::world::{ObstacleSet, SensingParams};
use tether_explore::Vec3;

fn main() -> tether_explore::Result<()> {
    let sensing = SensingParams::office();
    let wall: Vec<Vec3> = (0..40).map(|k| Vec3::new(2.0, -1.0 + 0.1 * k as f64, 1.5)).collect();
    let obstacles = ObstacleSet::new(wall, sensing.r_o_outer);
    let q = [
        Vec3::new(0.0, 0.0, 1.5),
        Vec3::new(1.3, 0.2, 1.5),
        Vec3::new(1.0, 1.6, 1.5),
        Vec3::new(0.2, 2.8, 1.5),
    ];
    let mut field = ConnectivityField::new(sensing, ConnectivityParams::default());
    let s = field.evaluate(&q, &obstacles)?;
    println!("lambda2 = {:.5}, V = {:.5}, edges = {}", s.lambda2, s.potential, s.num_edges);
    for (i, f) in s.forces.iter().enumerate() {
        println!("robot {i}: nu2 = {:+.4}  f = ({:+.4}, {:+.4}, {:+.4})", s.nu2[i], f.x, f.y, f.z);
    }
    Ok(())
}

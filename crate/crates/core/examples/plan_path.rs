//! Grid search plus spline smoothing around a wall with a doorway.
use tether_explore::planner::plan_path;
use tether_explore::world::{rasterize_inflated, Bounds, ObstacleSet};
use tether_explore::Vec3;

fn main() -> tether_explore::Result<()> {
    let mut pts = Vec::new();
    for i in 0..=60 {
        for k in 0..=15 {
            let y = 0.1 * i as f64;
            if !(3.5..5.0).contains(&y) {
                pts.push(Vec3::new(4.0, y, 0.2 * k as f64));
            }
        }
    }
    let obstacles = ObstacleSet::new(pts, 0.6);
    let grid = rasterize_inflated(&obstacles, &Bounds::new([0.0; 3], [8.0, 6.0, 3.0]), 0.25, 0.6)?;
    let path = plan_path(&grid, &Vec3::new(1.0, 1.0, 1.5), &Vec3::new(7.0, 1.0, 1.5))?;
    println!("length {:.3} m", path.length());
    for (s, p) in path.dump(0.5) {
        println!("s = {s:5.2}  ({:.2}, {:.2}, {:.2})  curvature {:.3}", p.x, p.y, p.z, path.curvature_at(s).norm());
    }
    Ok(())
}

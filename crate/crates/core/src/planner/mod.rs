//! Path planning: A* on the occupancy grid, then a C² spline through the
//! (pruned) cell path, then arc-length queries on the result.

mod astar;
mod spline;

pub use astar::{astar, cell_path_cost, GridPath};
pub use spline::{PathKinematics, Projection, SmoothPath};

use crate::world::OccupancyGrid;
use crate::{Error, Result, Vec3};

/// Fits the smooth path to a grid path. Waypoints are densified to a spacing
/// of at most one cell so the spline cannot stray more than a fraction of a
/// cell from the polyline.
pub fn smooth(gp: &GridPath) -> SmoothPath {
    assert!(!gp.waypoints.is_empty(), "smoothing needs at least one waypoint");
    let h = gp.cell_size;
    let mut pts = vec![gp.waypoints[0]];
    for w in gp.waypoints.windows(2) {
        let len = (w[1] - w[0]).norm();
        let pieces = (len / h).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            pts.push(w[0] + (w[1] - w[0]) * (k as f64 / pieces as f64));
        }
    }
    SmoothPath::from_control_points(&pts, h / 4.0)
}

pub fn closest_point(path: &SmoothPath, q: &Vec3) -> Projection {
    path.closest_point(q)
}

pub fn remaining_length(path: &SmoothPath, s: f64) -> Result<f64> {
    path.remaining_length(s)
}

/// Kinematics of the virtual point at `s`; the speed tapers to zero over the
/// last `taper` metres.
pub fn path_kinematics(path: &SmoothPath, s: f64, v_cruise: f64, taper: f64) -> PathKinematics {
    path.kinematics(s, v_cruise, taper)
}

/// True when the straight segment `a → b` only crosses free cells.
pub fn segment_is_free(grid: &OccupancyGrid, a: &Vec3, b: &Vec3) -> bool {
    let len = (b - a).norm();
    let steps = ((len / (0.25 * grid.cell_size)).ceil() as usize).max(1);
    (0..=steps).all(|k| {
        let p = a + (b - a) * (k as f64 / steps as f64);
        !grid.is_occupied(grid.cell_of(&p))
    })
}

/// Greedy line-of-sight pruning: keeps a waypoint only when the previous kept
/// one cannot see past it.
fn prune(grid: &OccupancyGrid, pts: &[Vec3]) -> Vec<Vec3> {
    if pts.len() <= 2 {
        return pts.to_vec();
    }
    let mut out = vec![pts[0]];
    let mut i = 0;
    while i < pts.len() - 1 {
        let mut j = i + 1;
        for k in (i + 2..pts.len()).rev() {
            if segment_is_free(grid, &pts[i], &pts[k]) {
                j = k;
                break;
            }
        }
        out.push(pts[j]);
        i = j;
    }
    out
}

/// Full planning pipeline from `start` to `goal`.
///
/// Endpoints whose cells are occupied are moved to the nearest free cell for
/// the search; the returned path still starts at `start` and ends at `goal`
/// exactly. Intermediate cell centers are pruned by line of sight before
/// smoothing.
pub fn plan_path(grid: &OccupancyGrid, start: &Vec3, goal: &Vec3) -> Result<SmoothPath> {
    let h = grid.cell_size;
    if (goal - start).norm() < 1e-12 {
        return Ok(SmoothPath::from_control_points(&[*goal], h / 4.0));
    }
    let no_path = || Error::NoPath {
        start: [start.x, start.y, start.z],
        goal: [goal.x, goal.y, goal.z],
    };
    let s = grid.nearest_free(grid.cell_of(start)).ok_or_else(no_path)?;
    let g = grid.nearest_free(grid.cell_of(goal)).ok_or_else(no_path)?;
    let gp = astar(grid, &grid.center(s), &grid.center(g))?;
    let mut pts = gp.waypoints.clone();
    pts[0] = *start;
    if pts.len() == 1 {
        pts.push(*goal);
    } else {
        *pts.last_mut().expect("non-empty") = *goal;
    }
    let pts = prune(grid, &pts);
    Ok(smooth(&GridPath::from_points(pts, h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{rasterize, Bounds, ObstacleSet};
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn collinear_waypoints_give_a_straight_path() {
        let gp = GridPath::from_points(vec![v(0.125, 0.125, 0.125), v(0.375, 0.125, 0.125), v(0.625, 0.125, 0.125)], 0.25);
        let p = smooth(&gp);
        assert!((p.length() - 0.5).abs() < 1e-9);
        for k in 0..=10 {
            assert!(p.curvature_at(0.05 * k as f64).norm() < 1e-9);
        }
    }

    #[test]
    fn single_waypoint_is_a_point_path() {
        let p = smooth(&GridPath::from_points(vec![v(1., 1., 1.)], 0.25));
        assert!(p.is_point());
        assert_eq!(p.length(), 0.0);
    }

    #[test]
    fn l_shape_stays_within_a_cell_of_the_polyline() {
        let h = 0.25;
        let wps = vec![v(0., 0., 0.), v(2., 0., 0.), v(2., 2., 0.)];
        let p = smooth(&GridPath::from_points(wps.clone(), h));
        assert_eq!(p.start(), wps[0]);
        assert_eq!(p.end(), wps[2]);
        let polyline_dist = |q: &Vec3| {
            wps.windows(2)
                .map(|w| crate::world::point_segment_distance(&w[0], &w[1], q).0)
                .fold(f64::INFINITY, f64::min)
        };
        let worst = p.dump(1e-3).iter().map(|(_, q)| polyline_dist(q)).fold(0.0, f64::max);
        assert!(worst <= h, "deviation {worst}");
        // the corner waypoint is approached within the bound too
        let corner = p.closest_point(&wps[1]).distance;
        assert!(corner <= h, "corner deviation {corner}");
    }

    #[test]
    fn circle_curvature_matches_finite_differences() {
        let r = 2.0;
        let pts: Vec<Vec3> = (0..=400)
            .map(|k| {
                let a = std::f64::consts::PI * k as f64 / 400.0;
                v(r * a.cos(), r * a.sin(), 0.)
            })
            .collect();
        let p = SmoothPath::from_control_points(&pts, 0.01);
        let vc = 1.3;
        let s = 0.5 * p.length();
        let k = p.kinematics(s, vc, 0.5);
        let h = 1e-4;
        let fd = (p.tangent_at(s + h) - p.tangent_at(s - h)) / (2.0 * h) * vc * vc;
        assert!((k.acceleration - fd).norm() < 1e-3 * fd.norm());
        assert!((k.acceleration.norm() - vc * vc / r).abs() < 1e-3);
        // points at the center
        let q = p.point_at(s);
        assert!(k.acceleration.normalize().dot(&(-q).normalize()) > 0.999);
        assert!((k.velocity.norm() - vc).abs() < 1e-9);
    }

    #[test]
    fn plan_around_wall_reaches_goal_exactly() {
        let b = Bounds::new([0., 0., 0.], [6., 6., 1.]);
        let mut pts = Vec::new();
        for k in 0..=40 {
            for zk in 0..=8 {
                pts.push(v(3.0, 0.1 * k as f64, 0.125 * zk as f64));
            }
        }
        let obs = ObstacleSet::new(pts, 0.6);
        let grid = rasterize(&obs, &b, 0.25).unwrap();
        let (q, z) = (v(1.0, 1.0, 0.5), v(5.0, 1.0, 0.5));
        let path = plan_path(&grid, &q, &z).unwrap();
        assert!((path.start() - q).norm() < 1e-12);
        assert!((path.end() - z).norm() < 1e-12);
        assert!(path.length() > 6.0);
        for (_, p) in path.dump(0.05) {
            assert!(!grid.is_occupied(grid.cell_of(&p)) || p.y > 4.0, "{p:?}");
        }
    }

    #[test]
    fn plan_to_the_same_point() {
        let b = Bounds::new([0., 0., 0.], [2., 2., 1.]);
        let grid = rasterize(&ObstacleSet::empty(), &b, 0.25).unwrap();
        let p = plan_path(&grid, &v(1., 1., 0.5), &v(1., 1., 0.5)).unwrap();
        assert!(p.is_point());
        let p = plan_path(&grid, &v(1., 1., 0.5), &v(1.05, 1., 0.5)).unwrap();
        assert!((p.length() - 0.05).abs() < 1e-9);
    }

    fn wavy() -> impl Strategy<Value = Vec<Vec3>> {
        prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, 0.0..2.0f64), 2..7)
            .prop_map(|v| v.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn closest_point_is_a_global_minimum(wps in wavy(), q in (-4.0..4.0f64, -4.0..4.0f64, -1.0..3.0f64)) {
            let p = smooth(&GridPath::from_points(wps, 0.25));
            let q = Vec3::new(q.0, q.1, q.2);
            let proj = p.closest_point(&q);
            let best = p.dump(2e-3).iter().map(|(_, x)| (x - q).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(proj.distance <= best + 1e-6, "{} vs {}", proj.distance, best);
        }

        #[test]
        fn remaining_length_is_monotone(wps in wavy()) {
            let p = smooth(&GridPath::from_points(wps, 0.25));
            let mut prev = f64::INFINITY;
            for (s, _) in p.dump(0.01) {
                let r = p.remaining_length(s).unwrap();
                prop_assert!(r <= prev);
                prev = r;
            }
        }

        #[test]
        fn cruise_speed_is_exact_away_from_the_end(wps in wavy(), frac in 0.0..1.0f64) {
            let p = smooth(&GridPath::from_points(wps, 0.25));
            prop_assume!(p.length() > 1.5);
            let s = frac * (p.length() - 1.0);
            let k = p.kinematics(s, 0.8, 1.0);
            prop_assert!((k.velocity.norm() - 0.8).abs() < 1e-9);
        }
    }
}

//! Sensor-based weighted Laplacian, its Fiedler pair and the generalized
//! connectivity force.
//!
//! Each edge weight is a product of C¹ cosine ramps:
//!
//! ```text
//! W_ab = ramp(d_ab; r_s', r_s) · ramp_up(d_abo; r_o, r_o') · c_a · c_b
//! c_a  = Π_{k≠a} ramp_up(d_ak; r_c, r_c')
//! ```
//!
//! so `W_ab` vanishes when the pair is out of range, when the line of sight
//! grazes an obstacle, or when either endpoint is too close to any robot.
//! The barrier potential on λ₂ then turns every one of these constraints
//! into a repulsive force.
//!
//! Because `c_a` depends on every robot near `a`, `W_ab` is not a function
//! of `q_a` and `q_b` alone; [`WeightField::gradients`] applies the full
//! chain rule `∂λ₂/∂q_i = Σ_{a<b} (ν_a − ν_b)² ∂W_ab/∂q_i`, which reduces
//! to the familiar sum over the neighbours of `i` whenever the collision
//! factors sit on their plateau.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::ramp::{ramp, ramp_slope, ramp_up, ramp_up_slope};
use crate::world::{ObstacleSet, SensingParams};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConnectivityParams {
    /// Hard floor on λ₂.
    pub lambda2_min: f64,
    /// Above this level the barrier is flat and exerts no force.
    pub lambda2_null: f64,
    /// Barrier gain.
    pub k_lambda_pot: f64,
    /// Eigengaps below this are treated as a repeated λ₂.
    pub eigengap_tol: f64,
}

impl Default for ConnectivityParams {
    fn default() -> Self {
        Self {
            lambda2_min: 0.0,
            lambda2_null: 1.0,
            k_lambda_pot: 1.0,
            eigengap_tol: 1e-9,
        }
    }
}

impl ConnectivityParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lambda2_min && self.lambda2_min < self.lambda2_null) || !(self.k_lambda_pot > 0.0) {
            return Err(Error::InvalidParameter(format!("connectivity params: {self:?}")));
        }
        Ok(())
    }
}

/// Symmetric, zero-diagonal weight matrix with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DMatrix<f64>);

impl WeightMatrix {
    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    /// Wraps a raw matrix after checking the invariants.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::InvalidParameter("weight matrix must be square".into()));
        }
        for i in 0..n {
            if m[(i, i)] != 0.0 {
                return Err(Error::InvalidParameter("weight matrix diagonal must be zero".into()));
            }
            for j in 0..n {
                let w = m[(i, j)];
                if !(0.0..=1.0).contains(&w) || w != m[(j, i)] {
                    return Err(Error::InvalidParameter(format!("bad weight W[{i},{j}]={w}")));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn num_edges(&self) -> usize {
        let n = self.len();
        (0..n).map(|i| ((i + 1)..n).filter(|&j| self.0[(i, j)] > 0.0).count()).sum()
    }
}

/// `L = diag(row sums of W) − W`.
pub fn laplacian(w: &WeightMatrix) -> DMatrix<f64> {
    let m = w.matrix();
    let mut l = -m.clone();
    for i in 0..m.nrows() {
        l[(i, i)] = m.row(i).sum();
    }
    l
}

/// Second-smallest eigenpair of a Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub lambda2: f64,
    /// Third-smallest eigenvalue, kept for the eigengap test.
    pub lambda3: f64,
    /// Unit eigenvector for `lambda2`.
    pub nu2: DVector<f64>,
}

impl Spectrum {
    pub fn eigengap(&self) -> f64 {
        self.lambda3 - self.lambda2
    }
}

/// Fiedler pair of `l`.
///
/// A team of fewer than two robots is trivially connected; it is reported
/// with `lambda2 = +∞` and a zero vector.
pub fn fiedler(l: &DMatrix<f64>) -> Spectrum {
    let n = l.nrows();
    if n < 2 {
        return Spectrum {
            lambda2: f64::INFINITY,
            lambda3: f64::INFINITY,
            nu2: DVector::zeros(n),
        };
    }
    let eig = SymmetricEigen::new(l.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k2 = order[1];
    let lambda3 = if n > 2 { eig.eigenvalues[order[2]] } else { f64::INFINITY };
    let mut nu2 = eig.eigenvectors.column(k2).into_owned();
    // Remove any drift along the all-ones direction before normalising.
    let mean = nu2.mean();
    nu2.add_scalar_mut(-mean);
    let norm = nu2.norm();
    if norm > 0.0 {
        nu2 /= norm;
    }
    Spectrum {
        lambda2: eig.eigenvalues[k2].max(0.0),
        lambda3,
        nu2,
    }
}

/// Barrier value and slope `(V, dV/dλ₂)`.
///
/// `V = k·((λ_null − λ₂)/(λ₂ − λ_min))²` below `λ_null` and zero above it.
/// Returns a connectivity violation when `λ₂ ≤ λ_min`.
pub fn connectivity_potential(lambda2: f64, cp: &ConnectivityParams) -> Result<(f64, f64)> {
    let (lo, hi) = (cp.lambda2_min, cp.lambda2_null);
    if !(lambda2 > lo) {
        return Err(Error::ConnectivityViolation {
            t: f64::NAN,
            lambda2,
            floor: lo,
        });
    }
    if lambda2 >= hi {
        return Ok((0.0, 0.0));
    }
    let gap = lambda2 - lo;
    let ratio = (hi - lambda2) / gap;
    let slope = -2.0 * cp.k_lambda_pot * ratio * (hi - lo) / (gap * gap);
    Ok((cp.k_lambda_pot * ratio * ratio, slope))
}

/// Pair term `h_ab = ramp(d_ab)·ramp_up(d_abo)` of one candidate edge and
/// its gradients with respect to both endpoints.
#[derive(Debug, Clone, Copy)]
struct PairTerm {
    a: usize,
    b: usize,
    h: f64,
    dh_da: Vec3,
    dh_db: Vec3,
}

/// Weights of one position snapshot together with everything needed to
/// differentiate them.
#[derive(Debug, Clone)]
pub struct WeightField {
    n: usize,
    weights: WeightMatrix,
    pairs: Vec<PairTerm>,
    /// Collision factor `c_a` of every robot.
    collision: Vec<f64>,
    /// `dc[a * n + k] = ∂c_a/∂q_k`.
    dc: Vec<Vec3>,
}

fn pair_term(a: usize, b: usize, positions: &[Vec3], obstacles: &ObstacleSet, p: &SensingParams) -> Option<PairTerm> {
    let (qa, qb) = (&positions[a], &positions[b]);
    let diff = qa - qb;
    let d = diff.norm();
    if d >= p.r_s {
        return None;
    }
    let s = ramp(d, p.r_s_inner, p.r_s);
    let ds = ramp_slope(d, p.r_s_inner, p.r_s);
    let unit = if d > 0.0 { diff / d } else { Vec3::zeros() };
    let (mut o, mut do_da, mut do_db) = (1.0, Vec3::zeros(), Vec3::zeros());
    if let Some(hit) = obstacles.nearest_to_segment(qa, qb, p.r_o_outer, Some(p.r_m)) {
        o = ramp_up(hit.distance, p.r_o, p.r_o_outer);
        if o == 0.0 {
            return None;
        }
        let slope = ramp_up_slope(hit.distance, p.r_o, p.r_o_outer);
        if slope != 0.0 && hit.distance > 0.0 {
            let closest = qa + (qb - qa) * hit.param;
            let dir = (closest - hit.obstacle) / hit.distance;
            do_da = dir * (slope * (1.0 - hit.param));
            do_db = dir * (slope * hit.param);
        }
    }
    let h = s * o;
    if h == 0.0 {
        return None;
    }
    Some(PairTerm {
        a,
        b,
        h,
        dh_da: unit * (ds * o) + do_da * s,
        dh_db: -unit * (ds * o) + do_db * s,
    })
}

impl WeightField {
    /// Evaluates every weight of the snapshot. `obstacles` is the full
    /// point cloud; only points within `r_m` of an endpoint are used.
    pub fn build(positions: &[Vec3], obstacles: &ObstacleSet, p: &SensingParams) -> Self {
        let n = positions.len();
        let mut collision = vec![1.0; n];
        let mut dc = vec![Vec3::zeros(); n * n];
        let mut factors = vec![1.0; n];
        let mut slopes = vec![Vec3::zeros(); n];
        let mut prefix = vec![1.0; n + 1];
        let mut suffix = vec![1.0; n + 1];
        for a in 0..n {
            for k in 0..n {
                if k == a {
                    factors[k] = 1.0;
                    slopes[k] = Vec3::zeros();
                    continue;
                }
                let diff = positions[k] - positions[a];
                let d = diff.norm();
                factors[k] = ramp_up(d, p.r_c, p.r_c_outer);
                let s = ramp_up_slope(d, p.r_c, p.r_c_outer);
                slopes[k] = if s != 0.0 && d > 0.0 { diff * (s / d) } else { Vec3::zeros() };
            }
            for k in 0..n {
                prefix[k + 1] = prefix[k] * factors[k];
            }
            for k in (0..n).rev() {
                suffix[k] = suffix[k + 1] * factors[k];
            }
            collision[a] = prefix[n];
            let mut self_term = Vec3::zeros();
            for k in 0..n {
                if k == a || slopes[k] == Vec3::zeros() {
                    continue;
                }
                let g = slopes[k] * (prefix[k] * suffix[k + 1]);
                dc[a * n + k] = g;
                self_term -= g;
            }
            dc[a * n + a] = self_term;
        }

        let mut w = DMatrix::zeros(n, n);
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                if let Some(term) = pair_term(a, b, positions, obstacles, p) {
                    let wab = term.h * collision[a] * collision[b];
                    w[(a, b)] = wab;
                    w[(b, a)] = wab;
                    pairs.push(term);
                }
            }
        }
        Self {
            n,
            weights: WeightMatrix(w),
            pairs,
            collision,
            dc,
        }
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    /// `∂W_ij/∂q_i` for one pair, including the dependence of both collision
    /// factors on `q_i`.
    pub fn weight_gradient(&self, i: usize, j: usize) -> Vec3 {
        let (a, b) = (i.min(j), i.max(j));
        let Some(term) = self.pairs.iter().find(|t| t.a == a && t.b == b) else {
            return Vec3::zeros();
        };
        let n = self.n;
        let (ci, cj) = (self.collision[i], self.collision[j]);
        let dh = if i == a { term.dh_da } else { term.dh_db };
        dh * (ci * cj) + (self.dc[i * n + i] * cj + self.dc[j * n + i] * ci) * term.h
    }

    /// `∂λ₂/∂q_i` for every robot.
    pub fn gradients(&self, spectrum: &Spectrum) -> Vec<Vec3> {
        let n = self.n;
        let nu = &spectrum.nu2;
        let mut grad = vec![Vec3::zeros(); n];
        // weighted[a] = Σ_b g_ab h_ab c_b, the coefficient of ∂c_a/∂q_i
        let mut weighted = vec![0.0; n];
        for t in &self.pairs {
            let g = (nu[t.a] - nu[t.b]).powi(2);
            let (ca, cb) = (self.collision[t.a], self.collision[t.b]);
            grad[t.a] += t.dh_da * (g * ca * cb);
            grad[t.b] += t.dh_db * (g * ca * cb);
            weighted[t.a] += g * t.h * cb;
            weighted[t.b] += g * t.h * ca;
        }
        for a in 0..n {
            if weighted[a] == 0.0 {
                continue;
            }
            for (i, g) in grad.iter_mut().enumerate() {
                let d = self.dc[a * n + i];
                if d != Vec3::zeros() {
                    *g += d * weighted[a];
                }
            }
        }
        grad
    }
}

/// Weight `W_ij` of a single pair and `∂W_ij/∂q_i`.
pub fn edge_weight(i: usize, j: usize, positions: &[Vec3], obstacles: &ObstacleSet, p: &SensingParams) -> (f64, Vec3) {
    let field = WeightField::build(positions, obstacles, p);
    (field.weights().get(i, j), field.weight_gradient(i, j))
}

/// `∂λ₂/∂q_i` of a single robot.
pub fn lambda2_gradient(i: usize, field: &WeightField, spectrum: &Spectrum) -> Vec3 {
    field.gradients(spectrum)[i]
}

/// What robot `i` is allowed to know about the global spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalView {
    pub lambda2: f64,
    pub nu2_i: f64,
    pub force: Vec3,
}

/// Full connectivity state of one tick.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub lambda2: f64,
    pub nu2: DVector<f64>,
    pub potential: f64,
    pub potential_slope: f64,
    pub gradients: Vec<Vec3>,
    pub forces: Vec<Vec3>,
    pub num_edges: usize,
    /// λ₂ was (numerically) repeated and the previous gradients were reused.
    pub degenerate: bool,
}

impl FieldState {
    pub fn local_view(&self, i: usize) -> LocalView {
        LocalView {
            lambda2: self.lambda2,
            nu2_i: self.nu2.get(i).copied().unwrap_or(0.0),
            force: self.forces[i],
        }
    }
}

/// `f^λ_i = −(dV/dλ₂)·∂λ₂/∂q_i`.
pub fn connectivity_force(i: usize, state: &FieldState) -> Vec3 {
    state.forces[i]
}

/// Per-tick evaluator. Remembers the last non-degenerate gradients so a
/// repeated λ₂ can fall back to them.
#[derive(Debug, Clone)]
pub struct ConnectivityField {
    pub sensing: SensingParams,
    pub params: ConnectivityParams,
    last_gradients: Option<Vec<Vec3>>,
}

impl ConnectivityField {
    pub fn new(sensing: SensingParams, params: ConnectivityParams) -> Self {
        Self {
            sensing,
            params,
            last_gradients: None,
        }
    }

    pub fn evaluate(&mut self, positions: &[Vec3], obstacles: &ObstacleSet) -> Result<FieldState> {
        let field = WeightField::build(positions, obstacles, &self.sensing);
        let spectrum = fiedler(&laplacian(field.weights()));
        let (potential, slope) = connectivity_potential(spectrum.lambda2, &self.params)?;
        let degenerate = positions.len() > 2 && spectrum.eigengap() < self.params.eigengap_tol;
        let gradients = match (&self.last_gradients, degenerate) {
            (Some(prev), true) if prev.len() == positions.len() => prev.clone(),
            _ => field.gradients(&spectrum),
        };
        if !degenerate {
            self.last_gradients = Some(gradients.clone());
        }
        let forces = gradients.iter().map(|g| -g * slope).collect();
        Ok(FieldState {
            lambda2: spectrum.lambda2,
            nu2: spectrum.nu2,
            potential,
            potential_slope: slope,
            gradients,
            forces,
            num_edges: field.weights().num_edges(),
            degenerate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn unit(n: usize, edges: &[(usize, usize)]) -> WeightMatrix {
        let mut m = DMatrix::zeros(n, n);
        for &(a, b) in edges {
            m[(a, b)] = 1.0;
            m[(b, a)] = 1.0;
        }
        WeightMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        let l = laplacian(&unit(2, &[(0, 1)]));
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        assert_eq!(laplacian(&WeightMatrix::zeros(3)), DMatrix::zeros(3, 3));
        let k3 = laplacian(&unit(3, &[(0, 1), (1, 2), (0, 2)]));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(k3[(i, j)], if i == j { 2.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn weight_matrix_rejects_asymmetry() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 0.5;
        assert!(WeightMatrix::from_matrix(m).is_err());
    }

    #[test]
    fn disconnected_pair_has_zero_lambda2() {
        let s = fiedler(&laplacian(&WeightMatrix::zeros(2)));
        assert_eq!(s.lambda2, 0.0);
    }

    #[test]
    fn potential_branches() {
        let cp = ConnectivityParams::default();
        assert_eq!(connectivity_potential(1.0, &cp).unwrap(), (0.0, 0.0));
        assert_eq!(connectivity_potential(2.5, &cp).unwrap(), (0.0, 0.0));
        let (v, _) = connectivity_potential(0.5, &cp).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let (v, _) = connectivity_potential(1e-6, &cp).unwrap();
        assert!(v > 1e11);
        assert!(connectivity_potential(0.0, &cp).is_err());
        assert!(connectivity_potential(-0.1, &cp).is_err());
    }

    #[test]
    fn potential_slope_matches_difference_and_is_c1_at_saturation() {
        let cp = ConnectivityParams { k_lambda_pot: 0.7, ..Default::default() };
        for &x in &[0.05, 0.2, 0.5, 0.9] {
            let h = 1e-7;
            let fd = (connectivity_potential(x + h, &cp).unwrap().0 - connectivity_potential(x - h, &cp).unwrap().0) / (2.0 * h);
            let (_, s) = connectivity_potential(x, &cp).unwrap();
            assert!((fd - s).abs() < 1e-5 * s.abs().max(1.0), "x={x}: {fd} vs {s}");
        }
        let (_, s) = connectivity_potential(1.0 - 1e-9, &cp).unwrap();
        assert!(s.abs() < 1e-7);
    }

    #[test]
    fn weight_vanishing_conditions() {
        let p = SensingParams::office();
        let empty = ObstacleSet::empty();
        let pos = vec![v(0., 0., 0.), v(p.r_s, 0., 0.)];
        assert_eq!(edge_weight(0, 1, &pos, &empty, &p).0, 0.0);

        let pos = vec![v(0., 0., 0.), v(p.r_s_inner, 0., 0.)];
        let (w, g) = edge_weight(0, 1, &pos, &empty, &p);
        assert_eq!(w, 1.0);
        assert_eq!(g, Vec3::zeros());

        // an obstacle exactly r_o from the line of sight
        let obs = ObstacleSet::new(vec![v(0.5, p.r_o, 0.)], p.r_o_outer);
        assert_eq!(edge_weight(0, 1, &pos, &obs, &p).0, 0.0);

        // a third robot inside r_c of robot 0 kills every edge of robot 0
        let pos = vec![v(0., 0., 0.), v(1.1, 0., 0.), v(0., p.r_c, 0.)];
        assert_eq!(edge_weight(0, 1, &pos, &empty, &p).0, 0.0);
    }

    #[test]
    fn plateau_configuration_has_zero_gradient() {
        let p = SensingParams::office();
        // equilateral triangle with side exactly r_s' = r_c'
        let s = p.r_s_inner;
        let pos = vec![v(0., 0., 0.), v(s, 0., 0.), v(0.5 * s, 0.5 * 3f64.sqrt() * s, 0.)];
        let field = WeightField::build(&pos, &ObstacleSet::empty(), &p);
        let eig = fiedler(&laplacian(field.weights()));
        assert!((eig.lambda2 - 3.0).abs() < 1e-9);
        for g in field.gradients(&eig) {
            assert!(g.norm() < 1e-12);
        }
    }

    #[test]
    fn symmetric_pair_gradients_are_opposite() {
        let p = SensingParams::office();
        let pos = vec![v(0., 0., 0.), v(2.0, 0.3, -0.1)];
        let field = WeightField::build(&pos, &ObstacleSet::empty(), &p);
        let eig = fiedler(&laplacian(field.weights()));
        let g = field.gradients(&eig);
        assert!((g[0] + g[1]).norm() < 1e-12);
        assert!(g[0].norm() > 0.0);
    }

    #[test]
    fn pair_near_range_limit_attracts() {
        let p = SensingParams::office();
        let mut f = ConnectivityField::new(p, ConnectivityParams::default());
        let pos = vec![v(0., 0., 0.), v(2.2, 0., 0.)];
        let state = f.evaluate(&pos, &ObstacleSet::empty()).unwrap();
        // numerical gradient of the barrier with respect to robot 0
        let energy = |x: f64| {
            let pos = vec![v(x, 0., 0.), v(2.2, 0., 0.)];
            let field = WeightField::build(&pos, &ObstacleSet::empty(), &p);
            let eig = fiedler(&laplacian(field.weights()));
            connectivity_potential(eig.lambda2, &ConnectivityParams::default()).unwrap().0
        };
        let h = 1e-6;
        let fd_force = -(energy(h) - energy(-h)) / (2.0 * h);
        assert!(fd_force > 0.0, "robot 0 is pulled toward robot 1");
        assert!((state.forces[0].x - fd_force).abs() < 1e-5 * fd_force.abs());
        assert!(state.forces[1].x < 0.0);
        assert!(state.forces[0].y.abs() < 1e-12 && state.forces[0].z.abs() < 1e-12);
    }

    #[test]
    fn saturated_barrier_gives_zero_force() {
        let p = SensingParams::office();
        let mut f = ConnectivityField::new(p, ConnectivityParams::default());
        let s = p.r_s_inner;
        let pos = vec![v(0., 0., 0.), v(s, 0., 0.), v(0.5 * s, 0.5 * 3f64.sqrt() * s, 0.)];
        let state = f.evaluate(&pos, &ObstacleSet::empty()).unwrap();
        assert!(state.lambda2 >= 1.0);
        assert!(state.forces.iter().all(|f| *f == Vec3::zeros()));
    }

    #[test]
    fn single_robot_is_trivially_connected() {
        let mut f = ConnectivityField::new(SensingParams::office(), ConnectivityParams::default());
        let state = f.evaluate(&[v(1., 2., 3.)], &ObstacleSet::empty()).unwrap();
        assert_eq!(state.lambda2, f64::INFINITY);
        assert_eq!(state.forces, vec![Vec3::zeros()]);
    }

    #[test]
    fn local_view_exposes_own_component_only() {
        let mut f = ConnectivityField::new(SensingParams::office(), ConnectivityParams::default());
        let pos = vec![v(0., 0., 0.), v(1.5, 0., 0.), v(3.0, 0.2, 0.)];
        let state = f.evaluate(&pos, &ObstacleSet::empty()).unwrap();
        let view = state.local_view(2);
        assert_eq!(view.nu2_i, state.nu2[2]);
        assert_eq!(view.force, state.forces[2]);
        assert_eq!(view.lambda2, state.lambda2);
    }
}

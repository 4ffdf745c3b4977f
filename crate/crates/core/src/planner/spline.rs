//! Clamped uniform B-spline paths with an arc-length parameterisation.

use crate::{Error, Result, Vec3};

/// Position, first and second derivative with respect to the spline
/// parameter.
#[derive(Debug, Clone, Copy)]
struct Jet {
    p: Vec3,
    d1: Vec3,
    d2: Vec3,
}

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: Vec3,
    /// Arc length of `point` from the start of the path.
    pub s: f64,
    pub distance: f64,
}

/// Velocity and acceleration of the virtual point that runs along the path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathKinematics {
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    s: f64,
    u: f64,
    p: Vec3,
}

/// A C² path (cubic B-spline, clamped at both ends) parameterised by arc
/// length. Degenerates to lower degree for fewer than four control points
/// and to a single point for one.
#[derive(Debug, Clone)]
pub struct SmoothPath {
    ctrl: Vec<Vec3>,
    degree: usize,
    knots: Vec<f64>,
    /// `(u, s)` pairs at the integration breakpoints.
    table: Vec<(f64, f64)>,
    samples: Vec<Sample>,
    length: f64,
}

// 5-point Gauss-Legendre on [-1, 1]
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl SmoothPath {
    /// Builds the spline on the given control points. Consecutive duplicates
    /// are dropped. `sample_step` is the arc-length spacing of the coarse
    /// table used by [`SmoothPath::closest_point`].
    pub fn from_control_points(points: &[Vec3], sample_step: f64) -> Self {
        assert!(!points.is_empty(), "a path needs at least one point");
        let mut ctrl: Vec<Vec3> = Vec::with_capacity(points.len());
        for p in points {
            if ctrl.last().is_none_or(|q: &Vec3| (p - q).norm() > 1e-12) {
                ctrl.push(*p);
            }
        }
        let n = ctrl.len();
        let degree = (n - 1).min(3);
        let mut knots = vec![0.0; degree + 1];
        let spans = n - degree;
        for k in 1..spans {
            knots.push(k as f64 / spans as f64);
        }
        knots.extend(std::iter::repeat_n(1.0, degree + 1));

        let mut path = Self {
            ctrl,
            degree,
            knots,
            table: vec![(0.0, 0.0)],
            samples: Vec::new(),
            length: 0.0,
        };
        if degree > 0 {
            path.build_table();
        }
        path.build_samples(sample_step.max(1e-3));
        path
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_point(&self) -> bool {
        self.degree == 0
    }

    pub fn start(&self) -> Vec3 {
        self.ctrl[0]
    }

    pub fn end(&self) -> Vec3 {
        *self.ctrl.last().expect("non-empty")
    }

    pub fn control_points(&self) -> &[Vec3] {
        &self.ctrl
    }

    fn span(&self, u: f64) -> usize {
        let n = self.ctrl.len();
        if u >= self.knots[n] {
            return n - 1;
        }
        // last k with knots[k] <= u, within [degree, n - 1]
        let mut lo = self.degree;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Basis functions and their first two derivatives on `span`.
    fn basis(&self, span: usize, u: f64) -> [[f64; 4]; 3] {
        let p = self.degree;
        let k = &self.knots;
        let mut ndu = [[0.0f64; 4]; 4];
        let mut left = [0.0f64; 4];
        let mut right = [0.0f64; 4];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - k[span + 1 - j];
            right[j] = k[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let tmp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = [[0.0f64; 4]; 3];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let nd = p.min(2);
        let mut a = [[0.0f64; 4]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0] = [0.0; 4];
            a[1] = [0.0; 4];
            a[0][0] = 1.0;
            for kk in 1..=nd {
                let mut d = 0.0;
                let rk = r as isize - kk as isize;
                let pk = p - kk;
                if r >= kk {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { kk - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                    d += a[s2][kk] * ndu[r][pk];
                }
                ders[kk][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for kk in 1..=nd {
            for j in 0..=p {
                ders[kk][j] *= fac;
            }
            fac *= (p - kk) as f64;
        }
        ders
    }

    fn jet(&self, u: f64) -> Jet {
        if self.degree == 0 {
            return Jet {
                p: self.ctrl[0],
                d1: Vec3::zeros(),
                d2: Vec3::zeros(),
            };
        }
        let u = u.clamp(0.0, 1.0);
        let span = self.span(u);
        let b = self.basis(span, u);
        let mut jet = Jet {
            p: Vec3::zeros(),
            d1: Vec3::zeros(),
            d2: Vec3::zeros(),
        };
        for j in 0..=self.degree {
            let c = self.ctrl[span - self.degree + j];
            jet.p += c * b[0][j];
            jet.d1 += c * b[1][j];
            jet.d2 += c * b[2][j];
        }
        jet
    }

    fn speed_integral(&self, a: f64, b: f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        GL_X.iter()
            .zip(GL_W.iter())
            .map(|(x, w)| w * self.jet(mid + half * x).d1.norm())
            .sum::<f64>()
            * half
    }

    fn build_table(&mut self) {
        let spans = self.ctrl.len() - self.degree;
        let per_span = 16;
        let m = spans * per_span;
        let mut s = 0.0;
        let mut table = Vec::with_capacity(m + 1);
        table.push((0.0, 0.0));
        for k in 0..m {
            let (a, b) = (k as f64 / m as f64, (k + 1) as f64 / m as f64);
            s += self.speed_integral(a, b);
            table.push((b, s));
        }
        self.length = s;
        self.table = table;
    }

    fn build_samples(&mut self, step: f64) {
        let count = ((self.length / step).ceil() as usize).max(1);
        self.samples = (0..=count)
            .map(|k| {
                let s = self.length * k as f64 / count as f64;
                let u = self.param_at(s);
                Sample { s, u, p: self.jet(u).p }
            })
            .collect();
    }

    /// Spline parameter at arc length `s` (clamped to the path).
    fn param_at(&self, s: f64) -> f64 {
        if self.degree == 0 || s <= 0.0 {
            return 0.0;
        }
        if s >= self.length {
            return 1.0;
        }
        let k = self.table.partition_point(|&(_, sk)| sk <= s).saturating_sub(1);
        let (u0, s0) = self.table[k];
        let u1 = self.table.get(k + 1).map_or(1.0, |e| e.0);
        let mut u = u0 + (u1 - u0) * 0.5;
        for _ in 0..8 {
            let err = s0 + self.speed_integral(u0, u) - s;
            let speed = self.jet(u).d1.norm();
            if speed <= 0.0 {
                break;
            }
            let next = (u - err / speed).clamp(u0, u1);
            if (next - u).abs() < 1e-15 {
                u = next;
                break;
            }
            u = next;
        }
        u
    }

    /// Arc length at spline parameter `u`.
    fn arc_at(&self, u: f64) -> f64 {
        if self.degree == 0 {
            return 0.0;
        }
        let k = self.table.partition_point(|&(uk, _)| uk <= u).saturating_sub(1);
        let (u0, s0) = self.table[k];
        (s0 + self.speed_integral(u0, u)).min(self.length)
    }

    pub fn point_at(&self, s: f64) -> Vec3 {
        self.jet(self.param_at(s)).p
    }

    /// Unit tangent at arc length `s`; zero on a point path.
    pub fn tangent_at(&self, s: f64) -> Vec3 {
        let d1 = self.jet(self.param_at(s)).d1;
        let n = d1.norm();
        if n > 0.0 {
            d1 / n
        } else {
            Vec3::zeros()
        }
    }

    /// Curvature vector `dT/ds` at arc length `s`.
    pub fn curvature_at(&self, s: f64) -> Vec3 {
        let j = self.jet(self.param_at(s));
        let speed2 = j.d1.norm_squared();
        if speed2 == 0.0 {
            return Vec3::zeros();
        }
        let t = j.d1 / speed2.sqrt();
        (j.d2 - t * j.d2.dot(&t)) / speed2
    }

    /// Evenly spaced `(s, point)` samples for plotting.
    pub fn dump(&self, step: f64) -> Vec<(f64, Vec3)> {
        let count = ((self.length / step.max(1e-6)).ceil() as usize).max(1);
        (0..=count)
            .map(|k| {
                let s = self.length * k as f64 / count as f64;
                (s, self.point_at(s))
            })
            .collect()
    }

    /// Global closest point to `q`. Among (numerically) equidistant
    /// candidates the one with the largest arc length wins.
    pub fn closest_point(&self, q: &Vec3) -> Projection {
        if self.degree == 0 {
            return Projection {
                point: self.ctrl[0],
                s: 0.0,
                distance: (self.ctrl[0] - q).norm(),
            };
        }
        let d2: Vec<f64> = self.samples.iter().map(|x| (x.p - q).norm_squared()).collect();
        let best = d2.iter().cloned().fold(f64::INFINITY, f64::min).sqrt();
        let step = if self.samples.len() > 1 { self.samples[1].s } else { self.length };
        let slack = best + step;
        let slack2 = slack * slack;
        let last = d2.len() - 1;
        let mut winner: Option<Projection> = None;
        for k in 0..=last {
            let local_min = (k == 0 || d2[k] <= d2[k - 1]) && (k == last || d2[k] <= d2[k + 1]);
            if !local_min || d2[k] > slack2 {
                continue;
            }
            let lo = self.samples[k.saturating_sub(1)].u;
            let hi = self.samples[(k + 1).min(last)].u;
            let cand = self.refine(q, self.samples[k].u, lo, hi);
            winner = Some(match winner {
                None => cand,
                Some(w) => {
                    let tie = (cand.distance - w.distance).abs() <= 1e-9;
                    if (tie && cand.s > w.s) || (!tie && cand.distance < w.distance) {
                        cand
                    } else {
                        w
                    }
                }
            });
        }
        winner.expect("at least one sample is a local minimum")
    }

    /// Closest point restricted to arc lengths within `window` of `s_hint`.
    /// Cheap tracking between global searches.
    pub fn closest_point_near(&self, q: &Vec3, s_hint: f64, window: f64) -> Projection {
        if self.degree == 0 || self.samples.len() < 2 {
            return self.closest_point(q);
        }
        let step = self.samples[1].s;
        let last = self.samples.len() - 1;
        let lo = (((s_hint - window) / step).floor().max(0.0) as usize).min(last);
        let hi = (((s_hint + window) / step).ceil().max(0.0) as usize).min(last);
        let mut best = lo;
        let mut best_d = f64::INFINITY;
        for k in lo..=hi {
            let d = (self.samples[k].p - q).norm_squared();
            // ties towards larger s
            if d <= best_d {
                best_d = d;
                best = k;
            }
        }
        let a = self.samples[best.saturating_sub(1)].u;
        let b = self.samples[(best + 1).min(last)].u;
        self.refine(q, self.samples[best].u, a, b)
    }

    fn refine(&self, q: &Vec3, u0: f64, lo: f64, hi: f64) -> Projection {
        let eval = |u: f64| (self.jet(u).p - q).norm_squared();
        let mut u = u0;
        for _ in 0..12 {
            let j = self.jet(u);
            let r = j.p - q;
            let g = r.dot(&j.d1);
            let h = j.d1.norm_squared() + r.dot(&j.d2);
            let next = if h > 0.0 { u - g / h } else if g > 0.0 { lo } else { hi };
            let next = next.clamp(lo, hi);
            let done = (next - u).abs() < 1e-14;
            if eval(next) <= eval(u) {
                u = next;
            } else {
                break;
            }
            if done {
                break;
            }
        }
        // the bracket ends are candidates too
        for e in [lo, hi] {
            if eval(e) < eval(u) {
                u = e;
            }
        }
        let p = self.jet(u).p;
        Projection {
            point: p,
            s: self.arc_at(u),
            distance: (p - q).norm(),
        }
    }

    /// Length of the path left after arc length `s`.
    pub fn remaining_length(&self, s: f64) -> Result<f64> {
        let tol = 1e-9 * self.length.max(1.0);
        if !(s >= -tol && s <= self.length + tol) {
            return Err(Error::ArcLengthOutOfRange { s, length: self.length });
        }
        Ok((self.length - s).max(0.0))
    }

    /// Speed profile: `v_cruise`, tapered by a cosine ramp to zero over the
    /// last `taper` metres. Returns `(speed, d speed / ds)`.
    fn speed_profile(&self, s: f64, v_cruise: f64, taper: f64) -> (f64, f64) {
        let left = (self.length - s).max(0.0);
        if taper <= 0.0 || left >= taper {
            return (v_cruise, 0.0);
        }
        let x = std::f64::consts::PI * left / taper;
        let speed = v_cruise * (0.5 - 0.5 * x.cos());
        let dspeed_dleft = v_cruise * 0.5 * std::f64::consts::PI / taper * x.sin();
        (speed, -dspeed_dleft)
    }

    /// Velocity and acceleration of a point running along the path with the
    /// tapered cruise-speed profile, passing arc length `s`.
    pub fn kinematics(&self, s: f64, v_cruise: f64, taper: f64) -> PathKinematics {
        if self.degree == 0 {
            return PathKinematics {
                velocity: Vec3::zeros(),
                acceleration: Vec3::zeros(),
            };
        }
        let j = self.jet(self.param_at(s));
        let speed_u = j.d1.norm();
        let t = j.d1 / speed_u;
        let kappa = (j.d2 - t * j.d2.dot(&t)) / (speed_u * speed_u);
        let (v, dv) = self.speed_profile(s, v_cruise, taper);
        PathKinematics {
            velocity: t * v,
            acceleration: t * (v * dv) + kappa * (v * v),
        }
    }
}

//! Double-integrator robot model and the fourth-order reference filter.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Isotropic mass, damping and travel-force saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BodyParams {
    pub mass: f64,
    pub damping: f64,
    pub f_max: f64,
}

impl Default for BodyParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            damping: 4.0,
            f_max: 10.0,
        }
    }
}

impl BodyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mass", self.mass), ("damping", self.damping), ("f_max", self.f_max)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotKinematics {
    pub q: Vec3,
    pub v: Vec3,
}

impl RobotKinematics {
    pub fn at_rest(q: Vec3) -> Self {
        Self { q, v: Vec3::zeros() }
    }
}

/// Scales `f` down to norm `f_max` if needed.
pub fn saturate(f: Vec3, f_max: f64) -> Vec3 {
    let n = f.norm();
    if n > f_max {
        f * (f_max / n)
    } else {
        f
    }
}

/// One semi-implicit Euler step of `m v̇ = sat(f_travel) + f_λ − b v`,
/// `q̇ = v`. The velocity is updated first and the new velocity moves the
/// position.
pub fn integrate_step(
    state: &RobotKinematics,
    f_travel: &Vec3,
    f_lambda: &Vec3,
    bp: &BodyParams,
    dt: f64,
) -> Result<RobotKinematics> {
    if !(f_travel.iter().all(|x| x.is_finite()) && f_lambda.iter().all(|x| x.is_finite())) {
        return Err(Error::NonFiniteForce { t: f64::NAN, robot: usize::MAX });
    }
    let f = saturate(*f_travel, bp.f_max) + f_lambda - state.v * bp.damping;
    let v = state.v + f * (dt / bp.mass);
    Ok(RobotKinematics { q: state.q + v * dt, v })
}

/// Filter gains of `q⁗ = −k1 q‴ − k2 q̈ − k3 q̇ + k4 (q_cmd − q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterGains {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl Default for FilterGains {
    fn default() -> Self {
        Self {
            k1: 44.0,
            k2: 707.0,
            k3: 5090.0,
            k4: 13692.0,
        }
    }
}

impl FilterGains {
    /// Routh–Hurwitz test for `s⁴ + k1 s³ + k2 s² + k3 s + k4`.
    pub fn is_hurwitz(&self) -> bool {
        let FilterGains { k1, k2, k3, k4 } = *self;
        k1 > 0.0 && k2 > 0.0 && k3 > 0.0 && k4 > 0.0 && k1 * k2 > k3 && k1 * k2 * k3 > k3 * k3 + k1 * k1 * k4
    }
}

/// Filtered sample: position and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOutput {
    pub q: Vec3,
    pub dq: Vec3,
    pub ddq: Vec3,
}

/// Fourth-order linear tracker smoothing a position stream, integrated with
/// classic RK4.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFilter {
    gains: FilterGains,
    /// `[q, q̇, q̈, q‴]`.
    state: [Vec3; 4],
}

impl ReferenceFilter {
    pub fn new(gains: FilterGains, initial: Vec3) -> Result<Self> {
        if !gains.is_hurwitz() {
            return Err(Error::InvalidParameter(format!("filter gains {gains:?} are not Hurwitz")));
        }
        Ok(Self {
            gains,
            state: [initial, Vec3::zeros(), Vec3::zeros(), Vec3::zeros()],
        })
    }

    pub fn gains(&self) -> FilterGains {
        self.gains
    }

    fn deriv(&self, x: &[Vec3; 4], cmd: &Vec3) -> [Vec3; 4] {
        let g = &self.gains;
        let jerk_rate = -x[3] * g.k1 - x[2] * g.k2 - x[1] * g.k3 + (cmd - x[0]) * g.k4;
        [x[1], x[2], x[3], jerk_rate]
    }

    pub fn step(&mut self, q_cmd: &Vec3, dt: f64) -> FilterOutput {
        let x = self.state;
        let add = |a: &[Vec3; 4], b: &[Vec3; 4], h: f64| [0, 1, 2, 3].map(|k| a[k] + b[k] * h);
        let k1 = self.deriv(&x, q_cmd);
        let k2 = self.deriv(&add(&x, &k1, 0.5 * dt), q_cmd);
        let k3 = self.deriv(&add(&x, &k2, 0.5 * dt), q_cmd);
        let k4 = self.deriv(&add(&x, &k3, dt), q_cmd);
        self.state = [0, 1, 2, 3].map(|k| x[k] + (k1[k] + k2[k] * 2.0 + k3[k] * 2.0 + k4[k]) * (dt / 6.0));
        self.output()
    }

    pub fn output(&self) -> FilterOutput {
        FilterOutput {
            q: self.state[0],
            dq: self.state[1],
            ddq: self.state[2],
        }
    }
}

/// Convenience wrapper: advances `rf` by one step.
pub fn filter_step(rf: &mut ReferenceFilter, q_cmd: &Vec3, dt: f64) -> FilterOutput {
    rf.step(q_cmd, dt)
}

/// 5% settling time of the unit step response, simulated at `dt` for at
/// most `horizon` seconds. `None` if it has not settled by then.
pub fn step_settling_time(gains: FilterGains, dt: f64, horizon: f64) -> Option<f64> {
    let mut rf = ReferenceFilter::new(gains, Vec3::zeros()).ok()?;
    let cmd = Vec3::new(1.0, 0.0, 0.0);
    let steps = (horizon / dt).round() as usize;
    let mut last_outside = 0.0;
    for k in 1..=steps {
        let out = rf.step(&cmd, dt);
        if (out.q.x - 1.0).abs() > 0.05 {
            last_outside = k as f64 * dt;
        }
    }
    (last_outside < horizon - dt).then_some(last_outside)
}

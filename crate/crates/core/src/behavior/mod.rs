//! Per-robot behavior: roles, the planning state machine, the motion
//! controller, and the estimator that lets secondary travelers yield to the
//! prime traveler.

pub mod election;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::connectivity::LocalView;
use crate::dynamics::{saturate, RobotKinematics};
use crate::netsim::{MessageKind, Network, Payload};
use crate::planner::{plan_path, Projection, SmoothPath};
use crate::world::OccupancyGrid;
use crate::{Error, Result, Vec3};

pub use election::{elect_prime, election_window, presence_flood, run_election, ElectionOutcome, HostState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Connector,
    PrimeTraveler,
    SecondaryTraveler,
    Anchor,
}

impl Role {
    /// Numeric code used in traces.
    pub fn code(self) -> u8 {
        match self {
            Role::Connector => 0,
            Role::PrimeTraveler => 1,
            Role::SecondaryTraveler => 2,
            Role::Anchor => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Connector => "connector",
            Role::PrimeTraveler => "prime_traveler",
            Role::SecondaryTraveler => "secondary_traveler",
            Role::Anchor => "anchor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub z: [f64; 3],
    /// Dwell time in seconds.
    pub dwell: f64,
}

impl Target {
    pub fn new(z: Vec3, dwell: f64) -> Self {
        Self { z: [z.x, z.y, z.z], dwell }
    }

    pub fn point(&self) -> Vec3 {
        Vec3::from(self.z)
    }
}

/// Targets not yet revealed to the robot. Only the head is ever popped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TargetQueue {
    pending: VecDeque<Target>,
}

impl TargetQueue {
    pub fn new(targets: Vec<Target>) -> Result<Self> {
        for t in &targets {
            if !(t.dwell > 0.0 && t.dwell.is_finite()) {
                return Err(Error::InvalidParameter(format!("dwell must be finite and positive, got {}", t.dwell)));
            }
        }
        Ok(Self { pending: targets.into() })
    }

    pub fn pop(&mut self) -> Option<Target> {
        self.pending.pop_front()
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BehaviorParams {
    pub r_z: f64,
    pub r_gamma: f64,
    pub v_cruise: f64,
    pub x_c: f64,
    pub x_m: f64,
    pub alpha_lambda: f64,
    pub sigma: f64,
    pub k_p: f64,
    pub k_v: f64,
    pub k_z: f64,
    pub k_lambda: f64,
    /// Cap on the anchor force so one control step cannot overshoot the
    /// barrier.
    pub anchor_force_max: f64,
}

impl Default for BehaviorParams {
    fn default() -> Self {
        let v_cruise = 1.0;
        Self {
            r_z: 1.0,
            r_gamma: 1.0,
            v_cruise,
            x_c: 0.1 * v_cruise,
            x_m: 0.6 * v_cruise,
            alpha_lambda: 0.0,
            sigma: 3.0,
            k_p: 100.0,
            k_v: 40.0,
            k_z: 2.0,
            k_lambda: 1.0,
            anchor_force_max: 100.0,
        }
    }
}

impl BehaviorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0 <= self.x_c && self.x_c < self.x_m && self.x_m.is_finite()) {
            return bad(format!("need 0 <= x_c < x_M, got {} and {}", self.x_c, self.x_m));
        }
        if !(self.sigma >= 1.0) {
            return bad(format!("sigma must be >= 1, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.alpha_lambda) {
            return bad(format!("alpha_lambda must lie in [0, 1], got {}", self.alpha_lambda));
        }
        for (name, v) in [
            ("r_z", self.r_z),
            ("r_gamma", self.r_gamma),
            ("v_cruise", self.v_cruise),
            ("k_p", self.k_p),
            ("k_v", self.k_v),
            ("k_z", self.k_z),
            ("k_lambda", self.k_lambda),
            ("anchor_force_max", self.anchor_force_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Consensus estimate of the prime traveler's efficiency, kept in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EfficiencyEstimate(f64);

impl EfficiencyEstimate {
    pub fn new(v: f64) -> Self {
        Self(v.clamp(0.0, 1.0))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `½(1 + cos θ)` between two vectors; 1 if either is zero.
pub fn direction_alignment(x: &Vec3, y: &Vec3) -> f64 {
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        return 1.0;
    }
    (0.5 * (1.0 + x.dot(y) / (nx * ny))).clamp(0.0, 1.0)
}

/// Efficiency ramp: 1 up to `x_c`, cosine down to 0 at `x_m`.
pub fn ramp(x: f64, x_c: f64, x_m: f64) -> f64 {
    crate::ramp::ramp(x, x_c, x_m)
}

/// Efficiency from a known projection onto the path.
fn efficiency_from(q: &Vec3, v: &Vec3, path: &SmoothPath, proj: &Projection, bp: &BehaviorParams) -> f64 {
    let kin = path.kinematics(proj.s, bp.v_cruise, bp.r_z);
    let e = (1.0 - bp.alpha_lambda) * (kin.velocity - v).norm() + bp.alpha_lambda * (proj.point - q).norm();
    ramp(e, bp.x_c, bp.x_m)
}

/// Traveling efficiency Λ of a robot at `q` moving with `v` along `path`.
pub fn traveling_efficiency(q: &Vec3, v: &Vec3, path: &SmoothPath, bp: &BehaviorParams) -> f64 {
    efficiency_from(q, v, path, &path.closest_point(q), bp)
}

/// One estimator step. The prime traveler overwrites its estimate with its
/// true efficiency; everybody else integrates the disagreement with its
/// neighbours.
pub fn consensus_step(own: f64, neighbors: &[f64], role: Role, true_lambda: Option<f64>, k_lambda: f64, dt: f64) -> f64 {
    if role == Role::PrimeTraveler {
        if let Some(l) = true_lambda {
            return l.clamp(0.0, 1.0);
        }
    }
    let drift: f64 = neighbors.iter().map(|n| n - own).sum();
    (own + k_lambda * drift * dt).clamp(0.0, 1.0)
}

/// `ρ = (1−Θ)Λ̂^σ + Θ(1−(1−Λ̂)^σ)`.
pub fn adaptive_gain(theta: f64, lambda_hat: f64, sigma: f64) -> f64 {
    let (t, l) = (theta.clamp(0.0, 1.0), lambda_hat.clamp(0.0, 1.0));
    ((1.0 - t) * l.powf(sigma) + t * (1.0 - (1.0 - l).powf(sigma))).clamp(0.0, 1.0)
}

fn travel_force_from(q: &Vec3, v: &Vec3, path: &SmoothPath, proj: &Projection, bp: &BehaviorParams, f_max: f64) -> Vec3 {
    let kin = path.kinematics(proj.s, bp.v_cruise, bp.r_z);
    let f = kin.acceleration + (kin.velocity - v) * bp.k_v + (proj.point - q) * bp.k_p;
    saturate(f, f_max)
}

/// PD + feedforward path-tracking force, saturated at `f_max`.
pub fn travel_force(q: &Vec3, v: &Vec3, path: Option<&SmoothPath>, bp: &BehaviorParams, f_max: f64) -> Vec3 {
    match path {
        Some(p) if !p.is_point() => travel_force_from(q, v, p, &p.closest_point(q), bp, f_max),
        _ => Vec3::zeros(),
    }
}

/// Barrier force keeping an anchored robot inside the ball of radius `r_z`
/// around `z`. Fails once the robot has left the ball.
pub fn anchor_force(q: &Vec3, z: &Vec3, r_z: f64, k_z: f64) -> Result<Vec3> {
    let d = q - z;
    let l = d.norm();
    if l >= r_z {
        return Err(Error::AnchorViolation {
            t: f64::NAN,
            robot: usize::MAX,
            distance: l,
            radius: r_z,
        });
    }
    if l == 0.0 {
        return Ok(Vec3::zeros());
    }
    Ok(-d * (k_z * (l * std::f64::consts::PI / (2.0 * r_z)).tan() / l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ElectionOpen,
    Candidacy,
    Winner,
    RoleChange,
    Replan,
    TargetReached,
    DwellDone,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ElectionOpen => "election_open",
            EventKind::Candidacy => "candidacy",
            EventKind::Winner => "winner",
            EventKind::RoleChange => "role_change",
            EventKind::Replan => "replan",
            EventKind::TargetReached => "target_reached",
            EventKind::DwellDone => "dwell_done",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub t: f64,
    pub robot: usize,
    pub kind: EventKind,
    pub detail: String,
}

/// An election window this robot has heard being opened.
#[derive(Debug, Clone, Copy, PartialEq)]
struct OpenWindow {
    host: usize,
    epoch: u64,
    closes: u64,
}

/// A connector's pending bid to become prime traveler.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Claim {
    round: u64,
    remaining: f64,
    deadline: u64,
}

impl Claim {
    fn key(&self, idx: usize) -> (u64, f64, usize) {
        (self.round, self.remaining, idx)
    }
}

fn claim_less(a: (u64, f64, usize), b: (u64, f64, usize)) -> bool {
    a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)).is_lt()
}

/// Shared inputs of a planning tick.
pub struct PlanContext<'a> {
    pub t: f64,
    /// Current message round.
    pub round: u64,
    pub grid: &'a OccupancyGrid,
    pub params: &'a BehaviorParams,
    pub net: &'a mut Network,
    pub events: &'a mut Vec<Event>,
}

impl PlanContext<'_> {
    fn log(&mut self, robot: usize, kind: EventKind, detail: impl Into<String>) {
        self.events.push(Event {
            t: self.t,
            robot,
            kind,
            detail: detail.into(),
        });
    }
}

/// Behavior-side output of a control tick. The travel part is subject to
/// the body's force saturation, the anchor part is not.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Command {
    pub travel: Vec3,
    pub anchor: Vec3,
}

/// Arc-length window (m) searched around the previous projection.
const TRACK_WINDOW: f64 = 0.5;

/// Complete state of one robot.
#[derive(Debug, Clone)]
pub struct Robot {
    pub id: usize,
    pub role: Role,
    pub kin: RobotKinematics,
    pub queue: TargetQueue,
    pub target: Option<Target>,
    pub path: Option<SmoothPath>,
    /// Latest projection onto `path`.
    pub proj: Option<Projection>,
    pub lambda_hat: f64,
    /// True efficiency, meaningful while traveling.
    pub lambda: f64,
    /// Time at which the current anchoring began.
    pub dwell_start: Option<f64>,
    /// Connectivity force applied on the previous control tick.
    pub prev_f_lambda: Vec3,
    /// The robot ever had a target (used for metrics).
    pub explorer: bool,
    host: Option<HostState>,
    /// Hosting the startup election rather than abdicating.
    startup_host: bool,
    window: Option<OpenWindow>,
    claim: Option<Claim>,
    prime_believed: bool,
}

impl Robot {
    pub fn new(id: usize, q: Vec3, targets: Vec<Target>) -> Result<Self> {
        let explorer = !targets.is_empty();
        Ok(Self {
            id,
            role: Role::Connector,
            kin: RobotKinematics::at_rest(q),
            queue: TargetQueue::new(targets)?,
            target: None,
            path: None,
            proj: None,
            lambda_hat: 0.0,
            lambda: 0.0,
            dwell_start: None,
            prev_f_lambda: Vec3::zeros(),
            explorer,
            host: None,
            startup_host: false,
            window: None,
            claim: None,
            prime_believed: false,
        })
    }

    pub fn q(&self) -> Vec3 {
        self.kin.q
    }

    /// Has nothing left to do: no target, nothing queued, no pending bid.
    pub fn is_done(&self) -> bool {
        self.target.is_none() && self.queue.is_empty() && self.host.is_none()
    }

    pub fn is_hosting(&self) -> bool {
        self.host.is_some()
    }

    /// Within the anchor ball of the current target and held there.
    pub fn is_anchored(&self) -> bool {
        self.dwell_start.is_some()
    }

    fn set_role(&mut self, role: Role, ctx: &mut PlanContext) {
        if role != self.role {
            ctx.log(self.id, EventKind::RoleChange, format!("{}->{}", self.role.as_str(), role.as_str()));
            self.role = role;
        }
    }

    fn remaining(&self) -> f64 {
        match (&self.path, &self.proj) {
            (Some(p), Some(pr)) => p.remaining_length(pr.s).unwrap_or(0.0),
            (Some(p), None) => p.length(),
            _ => 0.0,
        }
    }

    fn plan(&mut self, ctx: &mut PlanContext, why: &str) -> bool {
        let Some(t) = self.target else { return false };
        match plan_path(ctx.grid, &self.kin.q, &t.point()) {
            Ok(p) => {
                self.proj = Some(p.closest_point(&self.kin.q));
                ctx.log(self.id, EventKind::Replan, format!("{why} length={:.3}", p.length()));
                self.path = Some(p);
                true
            }
            Err(e) => {
                ctx.log(self.id, EventKind::Replan, format!("{why} failed: {e}"));
                self.path = None;
                self.proj = None;
                false
            }
        }
    }

    /// Pops the next target and plans towards it.
    fn take_target(&mut self, ctx: &mut PlanContext) -> bool {
        if self.target.is_none() {
            self.target = self.queue.pop();
        }
        self.target.is_some() && (self.path.is_some() || self.plan(ctx, "new_target"))
    }

    fn open_election(&mut self, ctx: &mut PlanContext) {
        let host = HostState::open(ctx.net, self.id, ctx.round);
        ctx.log(self.id, EventKind::ElectionOpen, format!("epoch={} closes={}", host.epoch, host.closes));
        self.host = Some(host);
        self.prime_believed = true;
    }

    fn begin_anchor(&mut self, ctx: &mut PlanContext) {
        self.path = None;
        self.proj = None;
        self.dwell_start = Some(ctx.t);
        let z = self.target.map(|t| t.point()).unwrap_or_default();
        ctx.log(self.id, EventKind::TargetReached, format!("z=({:.3},{:.3},{:.3})", z.x, z.y, z.z));
    }

    fn dwell_elapsed(&self, t: f64) -> bool {
        match (self.dwell_start, self.target) {
            (Some(s), Some(tg)) => t - s >= tg.dwell - 1e-9,
            _ => false,
        }
    }

    fn start_claim(&mut self, ctx: &mut PlanContext) {
        let remaining = self.remaining();
        self.claim = Some(Claim {
            round: ctx.round,
            remaining,
            deadline: ctx.round + election_window(ctx.net.len()),
        });
        ctx.net.broadcast(
            self.id,
            MessageKind::PresenceQuery,
            Payload::Claim {
                round: ctx.round,
                remaining,
            },
        );
    }

    /// Becomes the prime traveler (or, without a path to follow, hosts the
    /// next election right away).
    fn become_prime(&mut self, ctx: &mut PlanContext) {
        self.claim = None;
        self.prime_believed = true;
        self.set_role(Role::PrimeTraveler, ctx);
        if self.path.is_none() {
            self.open_election(ctx);
        }
    }

    fn handle_messages(&mut self, ctx: &mut PlanContext) {
        let inbox = ctx.net.inbox(self.id).to_vec();
        for d in inbox {
            let src = d.msg.src;
            match (d.msg.kind, d.msg.payload) {
                (MessageKind::ElectionOpen, _) => {
                    self.prime_believed = true;
                    self.window = Some(OpenWindow {
                        host: src,
                        epoch: d.msg.seq,
                        closes: ctx.round + election_window(ctx.net.len()),
                    });
                    if self.claim.take().is_some() {
                        self.set_role(Role::SecondaryTraveler, ctx);
                    }
                    if self.role == Role::SecondaryTraveler && self.path.is_some() {
                        let rem = self.remaining();
                        election::send_candidacy(ctx.net, self.id, src, d.msg.seq, rem);
                        ctx.log(self.id, EventKind::Candidacy, format!("host={src} remaining={rem:.3}"));
                    }
                }
                (MessageKind::Candidacy, p) => {
                    if let Some(h) = self.host.as_mut() {
                        h.offer(self.id, src, &p);
                    }
                }
                (MessageKind::WinnerAnnounce, Payload::Winner { winner, .. }) => {
                    self.window = None;
                    self.prime_believed = winner.is_some();
                    if winner == Some(self.id) {
                        ctx.log(self.id, EventKind::Winner, format!("announced_by={src}"));
                        self.become_prime(ctx);
                    } else if winner.is_some() {
                        if self.claim.take().is_some() {
                            self.set_role(Role::SecondaryTraveler, ctx);
                        }
                    } else if self.role == Role::SecondaryTraveler && self.claim.is_none() {
                        self.start_claim(ctx);
                    }
                }
                (MessageKind::PresenceQuery, Payload::Claim { round, remaining }) => {
                    if self.role == Role::PrimeTraveler {
                        ctx.net.broadcast(self.id, MessageKind::PresenceReply, Payload::Reply { to: src });
                        if let Some(h) = self.host.as_mut() {
                            h.add(src, remaining);
                        }
                    } else if let Some(c) = self.claim {
                        if claim_less((round, remaining, src), c.key(self.id)) {
                            self.claim = None;
                            self.set_role(Role::SecondaryTraveler, ctx);
                        }
                    }
                }
                (MessageKind::PresenceReply, Payload::Reply { to })
                    if to == self.id && self.claim.take().is_some() => {
                        self.prime_believed = true;
                        self.set_role(Role::SecondaryTraveler, ctx);
                    }
                _ => {}
            }
        }
        if self.window.is_some_and(|w| ctx.round > w.closes + ctx.net.len() as u64) {
            // the announcement never reached us; stop waiting for it
            self.window = None;
        }
    }

    /// Resolves a hosted election once its window has closed.
    fn close_election(&mut self, ctx: &mut PlanContext) {
        let Some(host) = self.host.as_ref() else { return };
        if !host.due(ctx.round) {
            return;
        }
        let mut host = self.host.take().expect("checked");
        if self.startup_host && self.path.is_some() {
            let rem = self.remaining();
            host.add(self.id, rem);
        }
        let winner = host.decide(ctx.net, self.id);
        ctx.log(
            self.id,
            EventKind::Winner,
            format!("epoch={} winner={}", host.epoch, winner.map_or("none".to_string(), |w| w.to_string())),
        );
        self.prime_believed = winner.is_some();
        if winner == Some(self.id) {
            self.startup_host = false;
            self.set_role(Role::PrimeTraveler, ctx);
            return;
        }
        if self.startup_host {
            self.startup_host = false;
            let role = if self.path.is_some() { Role::SecondaryTraveler } else { Role::Connector };
            self.set_role(role, ctx);
        } else if self.dwell_elapsed(ctx.t) {
            self.finish_dwell(ctx);
        } else if self.is_anchored() {
            self.set_role(Role::Anchor, ctx);
        } else {
            self.set_role(Role::Connector, ctx);
        }
    }

    fn finish_dwell(&mut self, ctx: &mut PlanContext) {
        ctx.log(self.id, EventKind::DwellDone, format!("queued={}", self.queue.len()));
        self.target = None;
        self.dwell_start = None;
        self.path = None;
        self.proj = None;
        self.set_role(Role::Connector, ctx);
    }

    /// Makes this robot host of the startup election.
    pub fn host_startup(&mut self, ctx: &mut PlanContext) {
        self.startup_host = true;
        self.open_election(ctx);
    }

    /// Start-up: reveal and plan the first target. Robots with a path wait
    /// as secondary travelers for the outcome of the startup election.
    pub fn startup(&mut self, ctx: &mut PlanContext) {
        self.lambda_hat = 0.0;
        if self.queue.is_empty() {
            return;
        }
        self.explorer = true;
        if self.take_target(ctx) {
            self.set_role(Role::SecondaryTraveler, ctx);
        }
    }

    /// Message handling only, used while the startup election runs.
    pub fn startup_round(&mut self, ctx: &mut PlanContext) {
        self.handle_messages(ctx);
        self.close_election(ctx);
    }

    /// One planning-rate update.
    pub fn plan_tick(&mut self, ctx: &mut PlanContext) {
        self.handle_messages(ctx);
        self.close_election(ctx);
        if let (Some(c), true) = (self.claim, self.role == Role::Connector || self.role == Role::SecondaryTraveler) {
            if ctx.round >= c.deadline {
                self.become_prime(ctx);
                // let everyone else know
                ctx.net.broadcast(
                    self.id,
                    MessageKind::WinnerAnnounce,
                    Payload::Winner {
                        epoch: u64::MAX,
                        winner: Some(self.id),
                    },
                );
            }
        }
        let p = *ctx.params;
        let q = self.kin.q;
        match self.role {
            Role::Connector => {
                if self.claim.is_some() || self.queue.is_empty() && self.target.is_none() {
                    return;
                }
                if !self.take_target(ctx) {
                    return;
                }
                if let Some(w) = self.window {
                    self.set_role(Role::SecondaryTraveler, ctx);
                    let rem = self.remaining();
                    election::send_candidacy(ctx.net, self.id, w.host, w.epoch, rem);
                    ctx.log(self.id, EventKind::Candidacy, format!("host={} remaining={rem:.3}", w.host));
                } else if self.prime_believed {
                    self.set_role(Role::SecondaryTraveler, ctx);
                } else {
                    self.start_claim(ctx);
                }
            }
            Role::PrimeTraveler => {
                if self.host.is_some() {
                    return;
                }
                let Some(t) = self.target else { return };
                if (q - t.point()).norm() < p.r_z {
                    self.begin_anchor(ctx);
                    self.open_election(ctx);
                    // a team of one decides immediately
                    self.close_election(ctx);
                } else if self.track().is_some_and(|pr| pr.distance > p.r_gamma) {
                    // dragged away from the plan while waiting as a secondary
                    self.plan(ctx, "drift");
                }
            }
            Role::SecondaryTraveler => {
                let Some(t) = self.target else { return };
                if self.path.is_none() {
                    self.plan(ctx, "retry");
                    return;
                }
                if (q - t.point()).norm() < p.r_z {
                    self.begin_anchor(ctx);
                    self.claim = None;
                    self.set_role(Role::Anchor, ctx);
                    return;
                }
                let proj = self.track().expect("checked");
                if proj.distance > p.r_gamma {
                    self.plan(ctx, "drift");
                }
            }
            Role::Anchor => {
                if self.dwell_elapsed(ctx.t) {
                    self.finish_dwell(ctx);
                    self.plan_tick_connector_followup(ctx);
                }
            }
        }
    }

    /// Updates the projection onto the current path. Once a projection
    /// exists it is followed locally: a global search could jump to a part
    /// of the path behind a wall when the robot is pushed off its path.
    fn track(&mut self) -> Option<Projection> {
        let path = self.path.as_ref()?;
        let q = self.kin.q;
        let proj = match self.proj {
            Some(prev) if !path.is_point() => path.closest_point_near(&q, prev.s, TRACK_WINDOW),
            _ => path.closest_point(&q),
        };
        self.proj = Some(proj);
        Some(proj)
    }

    fn plan_tick_connector_followup(&mut self, ctx: &mut PlanContext) {
        if !self.queue.is_empty() && self.take_target(ctx) {
            if let Some(w) = self.window {
                self.set_role(Role::SecondaryTraveler, ctx);
                let rem = self.remaining();
                election::send_candidacy(ctx.net, self.id, w.host, w.epoch, rem);
                ctx.log(self.id, EventKind::Candidacy, format!("host={} remaining={rem:.3}", w.host));
            } else if self.prime_believed {
                self.set_role(Role::SecondaryTraveler, ctx);
            } else {
                self.start_claim(ctx);
            }
        }
    }

    /// One control-rate update (motion controller and estimator).
    /// `neighbor_hats` are the neighbours' estimates from the previous tick.
    pub fn control_tick(&mut self, view: &LocalView, neighbor_hats: &[f64], p: &BehaviorParams, f_max: f64, dt: f64) -> Result<Command> {
        let q = self.kin.q;
        let v = self.kin.v;
        let mut cmd = Command::default();
        let traveling = self.path.as_ref().filter(|p| !p.is_point());
        if let (Some(path), Some(prev)) = (traveling, self.proj) {
            self.proj = Some(path.closest_point_near(&q, prev.s, TRACK_WINDOW));
        }
        match self.role {
            Role::PrimeTraveler if self.host.is_none() && traveling.is_some() => {
                let path = traveling.expect("checked");
                let proj = self.proj.unwrap_or_else(|| path.closest_point(&q));
                self.lambda = efficiency_from(&q, &v, path, &proj, p);
                self.lambda_hat = consensus_step(self.lambda_hat, neighbor_hats, self.role, Some(self.lambda), p.k_lambda, dt);
                cmd.travel = travel_force_from(&q, &v, path, &proj, p, f_max);
            }
            Role::SecondaryTraveler if traveling.is_some() => {
                let path = traveling.expect("checked");
                let proj = self.proj.unwrap_or_else(|| path.closest_point(&q));
                self.lambda = efficiency_from(&q, &v, path, &proj, p);
                self.lambda_hat = consensus_step(self.lambda_hat, neighbor_hats, self.role, None, p.k_lambda, dt);
                let f = travel_force_from(&q, &v, path, &proj, p, f_max);
                let theta = direction_alignment(&self.prev_f_lambda, &f);
                cmd.travel = f * adaptive_gain(theta, self.lambda_hat, p.sigma);
            }
            Role::PrimeTraveler => {
                // hosting the election: hold the estimate
                if self.is_anchored() {
                    cmd.anchor = self.anchor_command(p)?;
                }
            }
            _ => {
                self.lambda_hat = consensus_step(self.lambda_hat, neighbor_hats, self.role, None, p.k_lambda, dt);
                if self.is_anchored() {
                    cmd.anchor = self.anchor_command(p)?;
                }
            }
        }
        self.prev_f_lambda = view.force;
        Ok(cmd)
    }

    fn anchor_command(&self, p: &BehaviorParams) -> Result<Vec3> {
        let z = self.target.map(|t| t.point()).unwrap_or(self.kin.q);
        let f = anchor_force(&self.kin.q, &z, p.r_z, p.k_z).map_err(|e| match e {
            Error::AnchorViolation { distance, radius, .. } => Error::AnchorViolation {
                t: f64::NAN,
                robot: self.id,
                distance,
                radius,
            },
            other => other,
        })?;
        Ok(saturate(f, p.anchor_force_max))
    }
}

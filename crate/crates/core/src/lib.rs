//! Decentralized multi-target exploration for a team of point robots that
//! must keep their sensing graph connected at all times.
//!
//! Every robot carries a queue of targets it has to visit and dwell at. One
//! robot at a time (the *prime traveler*) is given priority; the others yield
//! through an adaptive gain driven by a consensus estimate of how well the
//! prime traveler is doing. Connectivity, line-of-sight, inter-robot and
//! obstacle clearance are all enforced by a single barrier on the algebraic
//! connectivity (Fiedler eigenvalue) of a sensor-weighted Laplacian.
//!
//! The crate is organised by subsystem:
//!
//! | module | contents |
//! |--------|----------|
//! | [`world`] | obstacle point clouds, sensing radii, occupancy grid, visibility |
//! | [`connectivity`] | edge weights, Laplacian, Fiedler pair, λ₂ gradient, barrier force |
//! | [`planner`] | 26-connected A*, C² B-spline smoothing, arc-length queries |
//! | [`dynamics`] | double-integrator robot model and the fourth-order reference filter |
//! | [`behavior`] | roles, planning state machine, motion control, election, estimator |
//! | [`netsim`] | 1-hop message rounds and flooding over the time-varying graph |
//! | [`harness`] | scenarios, the simulation engine, metrics, Monte Carlo batches |
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`.

pub mod behavior;
pub mod connectivity;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod netsim;
pub mod planner;
pub mod ramp;
pub mod world;

pub use error::{Error, Result};

/// 3D vector type used throughout the crate (metres, m/s, newtons).
pub type Vec3 = nalgebra::Vector3<f64>;

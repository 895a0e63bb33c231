//! Time-varying sparse actuator scheduling for discrete-time linear systems.
//!
//! Given x(k+1) = A x(k) + B u(k), the scheduler picks which actuators may be
//! active at each time step, at most `s` per step, so that the scheduled
//! controllability Gramian reaches full rank with low average control energy
//! (small `trace(W^-1)`). The crate also synthesizes minimum-energy inputs on
//! a schedule, provides baseline schedulers, verification oracles for the
//! supermodularity and near-optimality properties the greedy relies on, and a
//! seeded experiment harness that emits plot-ready CSV.

pub mod baselines;
pub mod error;
pub mod experiments;
pub mod greedy;
pub mod io;
pub mod lds;
pub mod linalg;
pub mod oracles;
pub mod seeding;
pub mod synthesis;

pub use error::{Error, Result};
pub use greedy::{
    candidate_gain, feasible_candidates, greedy_inner, greedy_schedule,
    greedy_schedule_time_invariant, schedule_from_selection, GreedyConfig, GreedyDiagnostics,
    SchedulerMode, SelectionSet,
};
pub use lds::{
    controllability_matrix, epsilon_auxiliary_energy, gramian, horizon_bounds,
    is_sparse_controllable, minimal_polynomial_degree, ActuatorSchedule, GramianState,
    LinearSystem, SparseControllability,
};
pub use linalg::{numerical_rank, DEFAULT_RANK_TOL};
pub use synthesis::{control_energy, min_energy_inputs, simulate, InputSequence, Trajectory};

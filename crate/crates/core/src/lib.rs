//! Classical simulation of the multi-copy mean-field construction for
//! polynomial ODEs `dx/dt + f(x) x = b(t)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`encoding`] turns a polynomial vector field into a degree-uniform
//!   monomial list over an augmented coordinate space.
//! * [`meanfield`] evolves `n` interacting copies of that space and reduces
//!   back to single-copy density matrices.
//! * [`history`] builds and solves the block-bidiagonal history system.
//! * [`reference`] holds the classical Euler/RK4 integrators and the
//!   energy-scale and stability diagnostics.
//! * [`experiments`] runs the scaling campaigns and writes report bundles.

pub mod encoding;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod history;
pub mod linalg;
pub mod meanfield;
pub mod output;
pub mod reference;

pub use encoding::{
    augment_constant, eval_f_direct, eval_f_tensor, norm_closure, taylor_inv_sqrt,
    AugmentedSystem, Monomial, OdeSystemSpec,
};
pub use error::{Error, Result};
pub use history::{
    apply_m, build_rhs, condition_estimate, forward_solve, reduced_history_site, BlockSystem,
    ConditionReport, HistoryState, StepOperator,
};
pub use linalg::C64;
pub use meanfield::{
    apply_generator, effective_generator, evolve_exact, product_state, reduce_site,
    trace_distance, trotter_step, DensityMatrix, MultiCopyState, DEFAULT_STATE_CAP,
};
pub use reference::{
    energy_scale, euler_forward, rk4_oracle, stability_margin, StabilityReport, Trajectory,
};

/// Version of the system-description JSON schema understood by this crate.
pub const SCHEMA_VERSION: u32 = 1;

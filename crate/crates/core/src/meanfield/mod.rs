//! `n`-copy dynamics and single-copy reductions.
//!
//! Amplitude vectors are ordered big-endian in the site index: site 0 is
//! the slowest-varying digit of the flat index.

mod density;
mod effective;
mod generator;
mod state;

pub use density::{reduce_site, trace_distance, DensityMatrix};
pub use effective::{context_role_generator, effective_generator};
pub use generator::{
    apply_generator, assemble_dense, evolve_exact, generator_normalization, trotter_step,
    DENSE_CAP,
};
pub use state::{product_state, MultiCopyState, DEFAULT_STATE_CAP, DUMP_MAGIC};

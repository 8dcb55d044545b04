//! Inputs shared by the kernel benchmarks.

use mfode_core::experiments::catalog;
use mfode_core::history::{build_rhs, BlockSystem, LinearStep};
use mfode_core::linalg::normalized;
use mfode_core::{product_state, AugmentedSystem, MultiCopyState};

/// A random `D = 3`, `m = 1` system and its `n`-fold product state.
pub fn multi_copy_fixture(n: usize) -> (AugmentedSystem, MultiCopyState) {
    let aug = catalog::random_system(2, 1, 6, 42);
    let x = normalized(&aug.initial_state);
    let psi = product_state(&x, n, 1 << 22).expect("fixture fits the cap");
    (aug, psi)
}

/// Linear history system over `steps` blocks of `unstable_linear`.
pub fn history_fixture(steps: usize) -> BlockSystem<LinearStep> {
    let mut aug = catalog::unstable_linear();
    aug.steps = steps;
    aug.dt = 1.0 / steps as f64;
    let rhs = build_rhs(&aug, 1, usize::MAX).expect("single copy");
    BlockSystem::new(LinearStep::from_linear(&aug), aug.dt, rhs).expect("consistent blocks")
}

//! Built-in systems.

use crate::encoding::{augment_constant, AugmentedSystem, Monomial, OdeSystemSpec};
use crate::error::{Error, Result};
use crate::linalg::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Names accepted by [`by_name`] and `example:<name>`.
pub const EXAMPLES: [&str; 4] = ["logistic", "sir", "gp2", "burgers8"];

fn build(d: usize, m: usize, monomials: Vec<Monomial>, initial: Vec<C64>, dt: f64, steps: usize) -> AugmentedSystem {
    augment_constant(&OdeSystemSpec {
        d,
        m,
        monomials,
        initial_state: initial,
        driving: vec![],
        dt,
        steps,
    })
    .expect("built-in systems are well formed")
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `u' = u - u²`, written `u' + (-1 + u) u = 0`; `u(0) = 1/2`.
pub fn logistic() -> AugmentedSystem {
    build(
        1,
        1,
        vec![
            Monomial::real(1, 1, -1.0, &[0], &[0]),
            Monomial::real(1, 1, 1.0, &[0], &[1]),
        ],
        vec![re(0.5)],
        1e-3,
        1000,
    )
}

/// SIR epidemic, β = 0.3, γ = 0.1, (S, I, R) = (0.99, 0.01, 0).
pub fn sir() -> AugmentedSystem {
    let (beta, gamma) = (0.3, 0.1);
    build(
        3,
        1,
        vec![
            // S' = -β S I
            Monomial::real(1, 1, beta, &[0], &[2]),
            // I' = β S I - γ I
            Monomial::real(2, 2, -beta, &[0], &[1]),
            Monomial::real(2, 2, gamma, &[0], &[0]),
            // R' = γ I
            Monomial::real(3, 2, -gamma, &[0], &[0]),
        ],
        vec![re(0.99), re(0.01), re(0.0)],
        0.1,
        1000,
    )
}

/// Two-mode Gross-Pitaevskii: `i ψ' = (J σ_x + g diag|ψ_j|²) ψ`, so
/// `f = i (J σ_x + g diag|ψ_j|²)` is anti-Hermitian.
pub fn gp2() -> AugmentedSystem {
    gp2_with(1.0, 1.0)
}

pub fn gp2_with(hopping: f64, interaction: f64) -> AugmentedSystem {
    let i = C64::new(0.0, 1.0);
    build(
        2,
        1,
        vec![
            Monomial::new(1, 2, i * hopping, vec![0], vec![0]),
            Monomial::new(2, 1, i * hopping, vec![0], vec![0]),
            Monomial::new(1, 1, i * interaction, vec![1], vec![1]),
            Monomial::new(2, 2, i * interaction, vec![2], vec![2]),
        ],
        vec![re(0.8), re(0.6)],
        1e-3,
        1000,
    )
}

/// Viscous Burgers `u_t + u u_x = ν u_xx` on 8 periodic points of `[0, 1)`,
/// first-order upwind advection (valid for `u > 0`), ν = 0.05.
pub fn burgers8() -> AugmentedSystem {
    let points = 8;
    let h = 1.0 / points as f64;
    let nu = 0.05;
    let diff = nu / (h * h);
    let mut monomials = Vec::new();
    for j in 1..=points {
        let left = if j == 1 { points } else { j - 1 };
        let right = if j == points { 1 } else { j + 1 };
        // u_j (u_j - u_{j-1}) / h
        monomials.push(Monomial::real(j, j, 1.0 / h, &[0], &[j]));
        monomials.push(Monomial::real(j, j, -1.0 / h, &[0], &[left]));
        // -ν (u_{j+1} - 2u_j + u_{j-1}) / h²
        monomials.push(Monomial::real(j, j, 2.0 * diff, &[0], &[0]));
        monomials.push(Monomial::real(j, left, -diff, &[0], &[0]));
        monomials.push(Monomial::real(j, right, -diff, &[0], &[0]));
    }
    let initial = (0..points)
        .map(|j| re(1.0 + 0.5 * (2.0 * PI * j as f64 * h).sin()))
        .collect();
    build(points, 1, monomials, initial, 0.005, 200)
}

/// `x' = -x`, `x(0) = 1`.
pub fn scalar_decay() -> AugmentedSystem {
    build(1, 1, vec![Monomial::real(1, 1, 1.0, &[0], &[0])], vec![re(1.0)], 0.01, 100)
}

/// `x' = B x` with `B = [[1, 1/2], [0, -1/2]]`: spectral abscissa +1.
pub fn unstable_linear() -> AugmentedSystem {
    build(
        2,
        1,
        vec![
            Monomial::real(1, 1, -1.0, &[0], &[0]),
            Monomial::real(1, 2, -0.5, &[0], &[0]),
            Monomial::real(2, 2, 0.5, &[0], &[0]),
        ],
        vec![re(1.0), re(1.0)],
        0.01,
        100,
    )
}

/// The `D = 2`, `m = 1` system used for copy-count scaling: the logistic
/// encoding at `dt = 0.02`, `T = 10`.
pub fn quadratic_test() -> AugmentedSystem {
    let mut aug = logistic();
    aug.dt = 0.02;
    aug.steps = 10;
    aug
}

/// Random system over `d` user coordinates with `terms` monomials of
/// degree `m`; indices include the constant coordinate.
pub fn random_system(d: usize, m: usize, terms: usize, seed: u64) -> AugmentedSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = d + 1;
    let mut monomials = Vec::with_capacity(terms);
    for _ in 0..terms {
        let coeff = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let conj = (0..m).map(|_| rng.gen_range(0..dim)).collect();
        let unconj = (0..m).map(|_| rng.gen_range(0..dim)).collect();
        monomials.push(Monomial::new(rng.gen_range(1..dim), rng.gen_range(0..dim), coeff, conj, unconj));
    }
    let initial = (0..d)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    build(d, m, monomials, initial, 0.01, 10)
}

pub fn by_name(name: &str) -> Result<AugmentedSystem> {
    match name {
        "logistic" => Ok(logistic()),
        "sir" => Ok(sir()),
        "gp2" => Ok(gp2()),
        "burgers8" => Ok(burgers8()),
        "quadratic" => Ok(quadratic_test()),
        "decay" => Ok(scalar_decay()),
        "unstable_linear" => Ok(unstable_linear()),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

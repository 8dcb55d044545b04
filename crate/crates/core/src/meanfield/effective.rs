use crate::encoding::AugmentedSystem;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ONE};

/// First-order contribution of terms in which the observed copy sits in a
/// context slot:
///
/// ```text
/// G(x) = Σ_mono c · conj(x_row) x_col · Σ_a Π_{b≠a} conj(x_{p_b}) x_{q_b} · |p_a><q_a|
/// ```
///
/// (`m` times the mean over slots; each slot is equally likely under the
/// symmetrized context.)
pub fn context_role_generator(aug: &AugmentedSystem, x: &[C64]) -> Result<CMatrix> {
    if x.len() != aug.dim {
        return Err(Error::DimensionMismatch {
            expected: aug.dim,
            actual: x.len(),
        });
    }
    let mut g = CMatrix::zeros(aug.dim, aug.dim);
    for mono in &aug.monomials {
        let target = mono.coeff * x[mono.row].conj() * x[mono.col];
        for a in 0..aug.degree {
            let mut rest = ONE;
            for b in 0..aug.degree {
                if b != a {
                    rest *= x[mono.conj_idx[b]].conj() * x[mono.unconj_idx[b]];
                }
            }
            g[(mono.conj_idx[a], mono.unconj_idx[a])] += target * rest;
        }
    }
    Ok(g)
}

/// `f(x) + G(x)`: the single-copy generator seen by one copy of a product
/// state at first order, counting both target and context roles.
pub fn effective_generator(aug: &AugmentedSystem, x: &[C64]) -> Result<CMatrix> {
    let g = context_role_generator(aug, x)?;
    Ok(aug.f(x) + g)
}

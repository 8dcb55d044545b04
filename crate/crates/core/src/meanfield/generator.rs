//! The multi-copy generator
//!
//! ```text
//! L = C(n-1, m)^{-1} Σ_t Σ_{S ∌ t, |S| = m} F(t; S)
//! ```
//!
//! where `F(t; S)` places each monomial's `|row><col|` on the target site
//! `t` and its context factors `|p_a><q_a|`, symmetrized over the `m!`
//! slot assignments, on the sites of `S`. Summing ordered context tuples
//! instead of (set, permutation) pairs gives the per-tuple weight
//! `1 / (n-1)_m` (falling factorial).

use super::state::{checked_size, MultiCopyState};
use crate::encoding::AugmentedSystem;
use crate::error::{Error, Result};
use crate::linalg::{norm, CMatrix, C64, ZERO};
use rayon::prelude::*;

/// Largest `D^n` for which the generator is assembled densely.
pub const DENSE_CAP: usize = 4096;

const CHUNK: usize = 512;

/// `1 / C(n-1, m)`, the per-target normalization.
pub fn generator_normalization(n: usize, m: usize) -> f64 {
    let mut binom = 1.0;
    for k in 0..m {
        binom *= (n - 1 - k) as f64 / (k + 1) as f64;
    }
    1.0 / binom
}

/// One `(monomial, target, ordered context tuple)` product of single-site
/// substitution maps.
struct Term {
    sites: Vec<usize>,
    /// digit each site must hold in the output index
    out_digits: Vec<usize>,
    /// input index minus output index
    shift: isize,
    weight: C64,
}

fn build_terms(aug: &AugmentedSystem, n: usize) -> Result<Vec<Term>> {
    let m = aug.degree;
    if n < m + 1 {
        return Err(Error::TooFewCopies(n, m));
    }
    let dim = aug.dim;
    let stride: Vec<isize> = (0..n).map(|s| dim.pow((n - 1 - s) as u32) as isize).collect();
    let falling: f64 = (0..m).map(|k| (n - 1 - k) as f64).product();
    let mut terms = Vec::new();
    let mut tuple = Vec::with_capacity(m);
    for mono in &aug.monomials {
        let weight = mono.coeff / falling;
        for t in 0..n {
            tuples(n, m, t, &mut tuple, &mut |ctx| {
                let mut sites = Vec::with_capacity(m + 1);
                let mut out_digits = Vec::with_capacity(m + 1);
                sites.push(t);
                out_digits.push(mono.row);
                let mut shift = (mono.col as isize - mono.row as isize) * stride[t];
                for (a, &s) in ctx.iter().enumerate() {
                    sites.push(s);
                    out_digits.push(mono.conj_idx[a]);
                    shift += (mono.unconj_idx[a] as isize - mono.conj_idx[a] as isize) * stride[s];
                }
                terms.push(Term {
                    sites,
                    out_digits,
                    shift,
                    weight,
                });
            });
        }
    }
    Ok(terms)
}

/// Visit every ordered tuple of `m` distinct sites excluding `target`.
fn tuples(n: usize, m: usize, target: usize, cur: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if cur.len() == m {
        visit(cur);
        return;
    }
    for s in 0..n {
        if s == target || cur.contains(&s) {
            continue;
        }
        cur.push(s);
        tuples(n, m, target, cur, visit);
        cur.pop();
    }
}

fn check_state(aug: &AugmentedSystem, psi: &MultiCopyState) -> Result<()> {
    if psi.dim() != aug.dim {
        return Err(Error::DimensionMismatch {
            expected: aug.dim,
            actual: psi.dim(),
        });
    }
    Ok(())
}

/// `L ψ`, matrix-free.
///
/// Each output amplitude is accumulated over the terms in a fixed order,
/// so the result does not depend on how rayon splits the output.
pub fn apply_generator(aug: &AugmentedSystem, psi: &MultiCopyState) -> Result<MultiCopyState> {
    check_state(aug, psi)?;
    let n = psi.copies();
    let dim = psi.dim();
    let terms = build_terms(aug, n)?;
    let input = psi.amplitudes();
    let mut out = vec![ZERO; input.len()];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(chunk, slice)| {
        let base = chunk * CHUNK;
        let mut digits = vec![0usize; n];
        let mut rem = base;
        for s in (0..n).rev() {
            digits[s] = rem % dim;
            rem /= dim;
        }
        for (offset, slot) in slice.iter_mut().enumerate() {
            let i = base + offset;
            let mut acc = ZERO;
            for term in &terms {
                if term.sites.iter().zip(&term.out_digits).all(|(&s, &d)| digits[s] == d) {
                    acc += term.weight * input[(i as isize + term.shift) as usize];
                }
            }
            *slot = acc;
            // odometer increment, last site fastest
            for s in (0..n).rev() {
                digits[s] += 1;
                if digits[s] < dim {
                    break;
                }
                digits[s] = 0;
            }
        }
    });
    Ok(MultiCopyState::from_parts(n, dim, out))
}

/// `ψ - dt · L ψ`. No renormalization.
pub fn trotter_step(aug: &AugmentedSystem, psi: &MultiCopyState, dt: f64) -> Result<MultiCopyState> {
    let lpsi = apply_generator(aug, psi)?;
    let out = psi
        .amplitudes()
        .iter()
        .zip(lpsi.amplitudes())
        .map(|(a, b)| a - b * dt)
        .collect();
    Ok(MultiCopyState::from_parts(psi.copies(), psi.dim(), out))
}

/// Dense `D^n × D^n` matrix of `L`.
pub fn assemble_dense(aug: &AugmentedSystem, n: usize) -> Result<CMatrix> {
    let size = checked_size(aug.dim, n, DENSE_CAP)?;
    let terms = build_terms(aug, n)?;
    let dim = aug.dim;
    let mut l = CMatrix::zeros(size, size);
    let mut digits = vec![0usize; n];
    for i in 0..size {
        let mut rem = i;
        for s in (0..n).rev() {
            digits[s] = rem % dim;
            rem /= dim;
        }
        for term in &terms {
            if term.sites.iter().zip(&term.out_digits).all(|(&s, &d)| digits[s] == d) {
                l[(i, (i as isize + term.shift) as usize)] += term.weight;
            }
        }
    }
    Ok(l)
}

/// `exp(-t L) ψ` from the densely assembled generator.
///
/// The exponential action is summed as a Taylor series over `s` substeps
/// with `‖t L‖_1 / s ≤ 1/2`, each series run until its terms drop below
/// machine precision.
pub fn evolve_exact(aug: &AugmentedSystem, psi: &MultiCopyState, t: f64) -> Result<MultiCopyState> {
    check_state(aug, psi)?;
    let l = assemble_dense(aug, psi.copies())?;
    let norm1 = (0..l.ncols())
        .map(|j| l.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let substeps = ((norm1 * t.abs()) / 0.5).ceil().max(1.0) as usize;
    let h = -t / substeps as f64;
    let mut v = nalgebra::DVector::from_column_slice(psi.amplitudes());
    for _ in 0..substeps {
        let mut term = v.clone();
        let mut acc = v.clone();
        for k in 1..200 {
            term = (&l * &term) * C64::new(h / k as f64, 0.0);
            acc += &term;
            if term.norm() <= 1e-17 * acc.norm() {
                break;
            }
        }
        v = acc;
    }
    let out: Vec<C64> = v.iter().copied().collect();
    debug_assert!(norm(&out).is_finite());
    Ok(MultiCopyState::from_parts(psi.copies(), psi.dim(), out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::Monomial;
    use crate::linalg::{ONE, ZERO};
    use crate::meanfield::product_state;
    use crate::meanfield::DEFAULT_STATE_CAP;

    pub(crate) fn toy(monomials: Vec<Monomial>, dim: usize, degree: usize) -> AugmentedSystem {
        AugmentedSystem {
            original_dim: dim - 1,
            dim,
            degree,
            base_degree: degree,
            monomials,
            initial_state: vec![ONE; dim],
            driving: vec![],
            dt: 0.01,
            steps: 1,
            norm_coord: None,
            taylor_order: 0,
            scale: 1.0,
        }
    }

    #[test]
    fn normalization_values() {
        assert_eq!(generator_normalization(2, 1), 1.0);
        assert!((generator_normalization(5, 2) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(generator_normalization(7, 0), 1.0);
    }

    #[test]
    fn zero_monomials_give_zero() {
        let aug = toy(vec![], 2, 1);
        let psi = product_state(&[ONE, C64::new(0.3, 0.2)], 3, DEFAULT_STATE_CAP).unwrap();
        let out = apply_generator(&aug, &psi).unwrap();
        assert!(out.amplitudes().iter().all(|z| *z == ZERO));
        assert_eq!(trotter_step(&aug, &psi, 0.1).unwrap(), psi);
        let ex = evolve_exact(&aug, &psi, 0.7).unwrap();
        assert!(ex.amplitudes().iter().zip(psi.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn too_few_copies() {
        let aug = toy(vec![Monomial::real(1, 1, 1.0, &[1], &[1])], 2, 1);
        let psi = product_state(&[ONE, ONE], 1, DEFAULT_STATE_CAP).unwrap();
        assert!(matches!(apply_generator(&aug, &psi), Err(Error::TooFewCopies(1, 1))));
    }

    #[test]
    fn dense_cap() {
        let aug = toy(vec![], 2, 1);
        assert!(matches!(assemble_dense(&aug, 13), Err(Error::StateCap { .. })));
    }

    #[test]
    fn dense_matches_matrix_free() {
        let aug = toy(
            vec![
                Monomial::new(1, 0, C64::new(0.3, -0.4), vec![1, 0], vec![0, 1]),
                Monomial::new(0, 1, C64::new(-1.1, 0.2), vec![1, 1], vec![0, 1]),
            ],
            2,
            2,
        );
        let x = [C64::new(0.6, 0.1), C64::new(-0.2, 0.7)];
        let psi = product_state(&x, 4, DEFAULT_STATE_CAP).unwrap();
        let l = assemble_dense(&aug, 4).unwrap();
        let dense = crate::linalg::matvec(&l, psi.amplitudes());
        let free = apply_generator(&aug, &psi).unwrap();
        assert!(crate::linalg::max_abs_diff(&dense, free.amplitudes()) < 1e-14);
    }
}

//! Norm-preservation coordinate.
//!
//! The augmented state is rescaled so that `‖x̃‖² ≤ 1/2` and an extra real
//! coordinate `x_N = sqrt(1 - ‖x̃‖²)` is appended. Its equation of motion
//! `dx_N/dt = (1 - y)^{-1/2} Re(x̃^† f x̃)`, `y = ‖x̃‖²`, is made polynomial
//! by truncating the central-binomial series of `(1 - y)^{-1/2}`.

use super::{AugmentedSystem, Monomial};
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, C64, ZERO};

/// Refuse to generate closure lists larger than this.
const MAX_CLOSURE_TERMS: usize = 2_000_000;

/// `Σ_{k=0..K} C(2k,k) (y/4)^k`, the truncated series of `(1 - y)^{-1/2}`.
pub fn taylor_inv_sqrt(y: f64, order: usize) -> Result<f64> {
    if y.is_nan() || y.abs() > 0.5 {
        return Err(Error::Domain {
            what: "taylor_inv_sqrt (|y| ≤ 1/2)",
            value: y,
        });
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=order {
        // C(2k,k)/4^k = C(2k-2,k-1)/4^{k-1} · (2k-1)/(2k)
        term *= y * (2 * k - 1) as f64 / (2 * k) as f64;
        sum += term;
    }
    Ok(sum)
}

/// `K = ceil(log2(1/eps))`.
pub fn taylor_order_for(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain {
            what: "norm-closure eps (0 < eps < 1)",
            value: eps,
        });
    }
    Ok((1.0 / eps).log2().ceil().max(1.0) as usize)
}

/// [`norm_closure_with`] trusting the flow not to expand the state.
pub fn norm_closure(aug: &AugmentedSystem, eps: f64) -> Result<AugmentedSystem> {
    norm_closure_with(aug, eps, 1.0)
}

/// Append the norm coordinate.
///
/// `growth` bounds how much `‖x̃‖` may grow over the horizon; the state is
/// rescaled so that `growth² · ‖x̃(0)‖² = 1/2`. The series is kept to
/// `K - 1` terms so that the degree grows by exactly `K` (one degree is
/// spent on the `x̃^† f x̃` contraction); its remainder on `|y| ≤ 1/2` is
/// still below `2^{-K}`.
pub fn norm_closure_with(aug: &AugmentedSystem, eps: f64, growth: f64) -> Result<AugmentedSystem> {
    let order = taylor_order_for(eps)?;
    if aug.norm_coord.is_some() {
        return Err(Error::field("norm_closure", "system already carries a norm coordinate"));
    }
    if aug.is_driven() {
        return Err(Error::field("norm_closure", "not supported together with driving"));
    }
    if !(growth > 0.0 && growth.is_finite()) {
        return Err(Error::field("growth", format!("must be positive, got {growth}")));
    }

    let raw = norm_sqr(&aug.initial_state);
    if raw == 0.0 {
        return Err(Error::field("initial", "zero state cannot be rescaled"));
    }
    let s = (0.5_f64).sqrt() / (growth * raw.sqrt());
    let scaled_sq = s * s * raw;
    if scaled_sq > 0.5 * (1.0 + 1e-12) {
        return Err(Error::Domain {
            what: "rescaled initial squared norm (≤ 1/2)",
            value: scaled_sq,
        });
    }

    let m = aug.degree;
    let m_eff = m + order;
    let dim = aug.dim + 1;
    let norm_coord = aug.dim;
    // every monomial of f has 2m factors; in rescaled variables each
    // factor of x is x̃/s, and every constant-coordinate pad contributes s²
    let inv_s2 = 1.0 / (s * s);

    let mut monomials = Vec::new();
    for mono in &aug.monomials {
        let mut conj = mono.conj_idx.clone();
        let mut unconj = mono.unconj_idx.clone();
        conj.resize(m_eff, 0);
        unconj.resize(m_eff, 0);
        monomials.push(Monomial::new(
            mono.row,
            mono.col,
            mono.coeff * inv_s2.powi(m_eff as i32),
            conj,
            unconj,
        ));
    }

    // Re(x̃† f x̃) = ½ Σ [c conj(x_r) x_c Π + conj(c) x_r conj(x_c) Π*]
    let mut halves = Vec::with_capacity(2 * aug.monomials.len());
    for mono in &aug.monomials {
        let c = mono.coeff * inv_s2.powi(m as i32) * 0.5;
        let mut conj = vec![mono.row];
        conj.extend(&mono.conj_idx);
        let mut unconj = vec![mono.col];
        unconj.extend(&mono.unconj_idx);
        halves.push((c, conj.clone(), unconj.clone()));
        halves.push((c.conj(), unconj, conj));
    }

    // (1-y)^{-1/2} ≈ Σ_{k<K} a_k y^k, y^k expanded over multisets of 0..D
    let ydim = aug.dim;
    let mut a_k = 1.0;
    for k in 0..order {
        if k > 0 {
            a_k *= (2 * k - 1) as f64 / (2 * k) as f64;
        }
        for (multiset, multinom) in multisets(ydim, k) {
            for (c, conj, unconj) in &halves {
                let mut p = conj.clone();
                let mut q = unconj.clone();
                p.extend(&multiset);
                q.extend(&multiset);
                let pads = m_eff - p.len();
                p.resize(m_eff, 0);
                q.resize(m_eff, 0);
                // target column is the constant coordinate, which holds s
                let coeff = -*c * a_k * multinom / s * inv_s2.powi(pads as i32);
                monomials.push(Monomial::new(norm_coord, 0, coeff, p, q));
                if monomials.len() > MAX_CLOSURE_TERMS {
                    return Err(Error::Domain {
                        what: "norm-closure term count",
                        value: monomials.len() as f64,
                    });
                }
            }
        }
    }

    let mut initial_state: Vec<C64> = aug.initial_state.iter().map(|z| z * s).collect();
    initial_state.push(C64::new((1.0 - scaled_sq).max(0.0).sqrt(), 0.0));

    Ok(AugmentedSystem {
        original_dim: aug.original_dim,
        dim,
        degree: m_eff,
        base_degree: aug.base_degree,
        monomials,
        initial_state,
        driving: aug
            .driving
            .iter()
            .map(|b| b.iter().map(|z| z * s).chain([ZERO]).collect())
            .collect(),
        dt: aug.dt,
        steps: aug.steps,
        norm_coord: Some(norm_coord),
        taylor_order: order,
        scale: aug.scale * s,
    })
}

/// All multisets of size `k` over `0..dim` (as sorted index lists) with
/// their multinomial coefficients `k! / Π α_j!`.
fn multisets(dim: usize, k: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(dim: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
        if cur.len() == k {
            let mut coeff = factorial(k);
            let mut run = 1;
            for w in 1..=cur.len() {
                if w < cur.len() && cur[w] == cur[w - 1] {
                    run += 1;
                } else {
                    coeff /= factorial(run);
                    run = 1;
                }
            }
            out.push((cur.clone(), coeff));
            return;
        }
        for j in start..dim {
            cur.push(j);
            rec(dim, k, j, cur, out);
            cur.pop();
        }
    }
    rec(dim, k, 0, &mut current, &mut out);
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

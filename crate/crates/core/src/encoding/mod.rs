//! Polynomial vector fields as degree-uniform monomial lists.
//!
//! A system `dx/dt + f(x) x = b(t)` is described by the entries of the
//! matrix `f(x)`, each a sum of monomials in the coordinates of `x` and
//! their conjugates. Coordinate 0 of the augmented space is the constant
//! coordinate (`x_0 = 1`), which lets every monomial be padded to the same
//! degree `m` in both its conjugated and unconjugated factors. The tensor
//! `F` with `f(x) = (x^†)^{⊗m} F x^{⊗m}` is never materialized; it exists
//! only as this list.

mod closure;
mod document;

pub use closure::{norm_closure, norm_closure_with, taylor_inv_sqrt, taylor_order_for};
pub use document::{AugmentedDocument, MonomialEntry, NormClosureEntry, SystemDocument};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ONE, ZERO};
use itertools::Itertools;

/// One additive term of `f`: `coeff · Π conj(x[p_a]) · Π x[q_a]` placed at
/// entry `(row, col)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub row: usize,
    pub col: usize,
    pub coeff: C64,
    pub conj_idx: Vec<usize>,
    pub unconj_idx: Vec<usize>,
}

impl Monomial {
    pub fn new(row: usize, col: usize, coeff: C64, conj_idx: Vec<usize>, unconj_idx: Vec<usize>) -> Self {
        Monomial {
            row,
            col,
            coeff,
            conj_idx,
            unconj_idx,
        }
    }

    /// Real-coefficient shorthand.
    pub fn real(row: usize, col: usize, coeff: f64, conj_idx: &[usize], unconj_idx: &[usize]) -> Self {
        Self::new(row, col, C64::new(coeff, 0.0), conj_idx.to_vec(), unconj_idx.to_vec())
    }

    /// Scalar value of the context factors at `x`.
    pub fn context_value(&self, x: &[C64]) -> C64 {
        let c: C64 = self.conj_idx.iter().map(|&p| x[p].conj()).product();
        let u: C64 = self.unconj_idx.iter().map(|&q| x[q]).product();
        c * u
    }

    /// The term of the adjoint operator: target and every context factor
    /// transposed, coefficient conjugated.
    pub fn adjoint(&self) -> Monomial {
        Monomial {
            row: self.col,
            col: self.row,
            coeff: self.coeff.conj(),
            conj_idx: self.unconj_idx.clone(),
            unconj_idx: self.conj_idx.clone(),
        }
    }

    fn max_index(&self) -> usize {
        self.conj_idx
            .iter()
            .chain(&self.unconj_idx)
            .copied()
            .chain([self.row, self.col])
            .max()
            .unwrap_or(0)
    }
}

/// A polynomial ODE as supplied by the user, in coordinates `1..=d` with
/// index 0 reserved for the constant coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeSystemSpec {
    pub d: usize,
    pub m: usize,
    pub monomials: Vec<Monomial>,
    pub initial_state: Vec<C64>,
    /// `b_1..b_T` in original coordinates; empty means zero driving.
    pub driving: Vec<Vec<C64>>,
    pub dt: f64,
    pub steps: usize,
}

impl OdeSystemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::field("d", "must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::field("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::field("steps", "must be at least 1"));
        }
        if self.initial_state.len() != self.d {
            return Err(Error::field(
                "initial",
                format!("expected {} entries, got {}", self.d, self.initial_state.len()),
            ));
        }
        if !self.driving.is_empty() {
            if self.driving.len() != self.steps {
                return Err(Error::field(
                    "driving",
                    format!("expected {} vectors, got {}", self.steps, self.driving.len()),
                ));
            }
            if let Some(k) = self.driving.iter().position(|b| b.len() != self.d) {
                return Err(Error::field(
                    format!("driving[{k}]"),
                    format!("expected {} entries", self.d),
                ));
            }
        }
        for (i, mono) in self.monomials.iter().enumerate() {
            if mono.row == 0 || mono.row > self.d {
                return Err(Error::field(
                    format!("monomials[{i}].row"),
                    format!("must lie in 1..={}", self.d),
                ));
            }
            if mono.max_index() > self.d {
                return Err(Error::field(
                    format!("monomials[{i}]"),
                    format!("index {} exceeds d = {}", mono.max_index(), self.d),
                ));
            }
        }
        Ok(())
    }
}

/// The degree-uniform system over the augmented space of dimension `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSystem {
    /// `d` of the user system.
    pub original_dim: usize,
    /// `D`: `d + 1`, or `d + 2` with the norm coordinate.
    pub dim: usize,
    /// Uniform degree of every monomial (`m`, or `m + K` after closure).
    pub degree: usize,
    /// Degree before norm closure.
    pub base_degree: usize,
    pub monomials: Vec<Monomial>,
    pub initial_state: Vec<C64>,
    /// `b_1..b_T` in augmented coordinates; empty means zero driving.
    pub driving: Vec<Vec<C64>>,
    pub dt: f64,
    pub steps: usize,
    pub norm_coord: Option<usize>,
    pub taylor_order: usize,
    /// Value held by the constant coordinate; user coordinates are
    /// multiplied by the same factor.
    pub scale: f64,
}

impl AugmentedSystem {
    /// Direct evaluation of `f(x)`.
    pub fn f(&self, x: &[C64]) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for mono in &self.monomials {
            out[(mono.row, mono.col)] += mono.coeff * mono.context_value(x);
        }
        out
    }

    /// `b_k` for `k` in `1..=steps`, `None` when the system is undriven.
    pub fn driving_at(&self, k: usize) -> Option<&[C64]> {
        if self.driving.is_empty() || k == 0 {
            None
        } else {
            self.driving.get(k - 1).map(Vec::as_slice)
        }
    }

    pub fn is_driven(&self) -> bool {
        self.driving.iter().any(|b| b.iter().any(|z| *z != ZERO))
    }

    /// True when every factor of every monomial is the constant coordinate,
    /// i.e. `f` does not depend on `x`.
    pub fn is_linear(&self) -> bool {
        self.monomials
            .iter()
            .all(|m| m.conj_idx.iter().chain(&m.unconj_idx).all(|&i| i == 0))
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    /// System whose generator is the adjoint of this one's.
    pub fn adjoint(&self) -> AugmentedSystem {
        AugmentedSystem {
            monomials: self.monomials.iter().map(Monomial::adjoint).collect(),
            ..self.clone()
        }
    }

    /// Copy with the monomial list replaced, keeping all other metadata.
    pub fn with_monomials(&self, monomials: Vec<Monomial>) -> AugmentedSystem {
        AugmentedSystem {
            monomials,
            ..self.clone()
        }
    }

    /// Map an augmented state back to the user's coordinates.
    pub fn descale(&self, x: &[C64]) -> Vec<C64> {
        x[1..=self.original_dim].iter().map(|z| z / self.scale).collect()
    }
}

/// Pad every monomial to degree `m` with constant-coordinate factors and
/// prepend the constant coordinate to the initial state and driving.
pub fn augment_constant(spec: &OdeSystemSpec) -> Result<AugmentedSystem> {
    spec.validate()?;
    let m = spec.m;
    let mut monomials = Vec::with_capacity(spec.monomials.len());
    for (index, mono) in spec.monomials.iter().enumerate() {
        let conj = pad_factors(&mono.conj_idx, m).ok_or_else(|| Error::DegreeOverflow {
            index,
            reason: format!(
                "{} conjugated factors exceed degree {m}",
                mono.conj_idx.iter().filter(|&&i| i != 0).count()
            ),
        })?;
        let unconj = pad_factors(&mono.unconj_idx, m).ok_or_else(|| Error::DegreeOverflow {
            index,
            reason: format!(
                "{} unconjugated factors exceed degree {m}",
                mono.unconj_idx.iter().filter(|&&i| i != 0).count()
            ),
        })?;
        monomials.push(Monomial::new(mono.row, mono.col, mono.coeff, conj, unconj));
    }

    let mut initial_state = Vec::with_capacity(spec.d + 1);
    initial_state.push(ONE);
    initial_state.extend_from_slice(&spec.initial_state);

    let driving = spec
        .driving
        .iter()
        .map(|b| std::iter::once(ZERO).chain(b.iter().copied()).collect())
        .collect();

    Ok(AugmentedSystem {
        original_dim: spec.d,
        dim: spec.d + 1,
        degree: m,
        base_degree: m,
        monomials,
        initial_state,
        driving,
        dt: spec.dt,
        steps: spec.steps,
        norm_coord: None,
        taylor_order: 0,
        scale: 1.0,
    })
}

/// Drop constant factors and pad back to exactly `m` with index 0.
fn pad_factors(idx: &[usize], m: usize) -> Option<Vec<usize>> {
    let mut out: Vec<usize> = idx.iter().copied().filter(|&i| i != 0).collect();
    if out.len() > m {
        return None;
    }
    out.resize(m, 0);
    Some(out)
}

fn check_dim(aug: &AugmentedSystem, x: &[C64]) -> Result<()> {
    if x.len() != aug.dim {
        return Err(Error::DimensionMismatch {
            expected: aug.dim,
            actual: x.len(),
        });
    }
    Ok(())
}

/// `f(x)` summed monomial by monomial.
pub fn eval_f_direct(aug: &AugmentedSystem, x: &[C64]) -> Result<CMatrix> {
    check_dim(aug, x)?;
    Ok(aug.f(x))
}

/// Largest degree for which [`eval_f_tensor`] enumerates slot assignments.
pub const MAX_TENSOR_DEGREE: usize = 8;

/// `f(x)` by contracting the symmetrized context operators of each term
/// slot by slot: every one of the `m!` assignments of the factors
/// `|p_a><q_a|` to context slots is contracted against `x` as a `D × D`
/// operator and the assignments are averaged.
pub fn eval_f_tensor(aug: &AugmentedSystem, x: &[C64]) -> Result<CMatrix> {
    check_dim(aug, x)?;
    if aug.degree > MAX_TENSOR_DEGREE {
        return Err(Error::Domain {
            what: "tensor contraction degree",
            value: aug.degree as f64,
        });
    }
    let dim = aug.dim;
    let m = aug.degree;
    let mut out = CMatrix::zeros(dim, dim);
    let assignments: Vec<Vec<usize>> = (0..m).permutations(m).collect();
    let weight = 1.0 / assignments.len() as f64;
    for mono in &aug.monomials {
        let mut sym = ZERO;
        for perm in &assignments {
            // slot `s` holds factor `perm[s]`
            let mut value = ONE;
            for &a in perm {
                value *= contract_slot(dim, mono.conj_idx[a], mono.unconj_idx[a], x);
            }
            sym += value;
        }
        out[(mono.row, mono.col)] += mono.coeff * sym * weight;
    }
    Ok(out)
}

/// `<x| (|p><q|) |x>` as an explicit double sum.
fn contract_slot(dim: usize, p: usize, q: usize, x: &[C64]) -> C64 {
    let mut acc = ZERO;
    for i in 0..dim {
        if i != p {
            continue;
        }
        for j in 0..dim {
            if j == q {
                acc += x[i].conj() * x[j];
            }
        }
    }
    acc
}

//! History-state block systems.
//!
//! The block matrix has identity blocks on the diagonal and `-S_k` on the
//! subdiagonal, where `S_k` is the step map `k → k+1` (`I - dt·A` for a
//! linear ODE, `I - dt·L` for the multi-copy generator):
//!
//! ```text
//! M = Σ_k I ⊗ |k><k| - Σ_k S_k ⊗ |k+1><k|,     M X = B
//! ```
//!
//! `M` is unit lower-bidiagonal, so forward substitution solves it exactly.
//! The matrix is never materialized.

use crate::encoding::AugmentedSystem;
use crate::error::{Error, Result};
use crate::linalg::{axpy, inner, matvec, norm, norm_sqr, tensor_power, CMatrix, C64, ZERO};
use crate::meanfield::{apply_generator, reduce_site, DensityMatrix, MultiCopyState};
use crate::output::fmt_f64;
use crate::reference::Trajectory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::Write;

/// The step maps `S_k` of a block system.
pub trait StepOperator: Sync {
    fn block_dim(&self) -> usize;
    /// `S_k v`.
    fn apply(&self, k: usize, v: &[C64]) -> Result<Vec<C64>>;
    /// `S_k^† v`.
    fn apply_adjoint(&self, k: usize, v: &[C64]) -> Result<Vec<C64>>;
}

/// `I - dt·A` for a constant matrix `A`.
#[derive(Clone, Debug)]
pub struct LinearStep {
    pub a: CMatrix,
    pub dt: f64,
}

impl LinearStep {
    pub fn new(a: CMatrix, dt: f64) -> Self {
        LinearStep { a, dt }
    }

    /// `A = f`, valid when `f` does not depend on the state.
    pub fn from_linear(aug: &AugmentedSystem) -> Self {
        LinearStep::new(aug.f(&aug.initial_state), aug.dt)
    }
}

impl StepOperator for LinearStep {
    fn block_dim(&self) -> usize {
        self.a.nrows()
    }

    fn apply(&self, _k: usize, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = v.to_vec();
        axpy(C64::new(-self.dt, 0.0), &matvec(&self.a, v), &mut out);
        Ok(out)
    }

    fn apply_adjoint(&self, _k: usize, v: &[C64]) -> Result<Vec<C64>> {
        let mut out = v.to_vec();
        axpy(C64::new(-self.dt, 0.0), &matvec(&self.a.adjoint(), v), &mut out);
        Ok(out)
    }
}

/// Per-step matrices `I - dt·f(x_k)` frozen along a trajectory; the history
/// solve then reproduces that trajectory's Euler recursion exactly.
#[derive(Clone, Debug)]
pub struct FrozenSteps {
    steps: Vec<CMatrix>,
}

impl FrozenSteps {
    pub fn along(aug: &AugmentedSystem, traj: &Trajectory) -> Self {
        let dim = aug.dim;
        let steps = traj.states[..traj.states.len() - 1]
            .iter()
            .map(|x| CMatrix::identity(dim, dim) - aug.f(x) * C64::new(aug.dt, 0.0))
            .collect();
        FrozenSteps { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

impl StepOperator for FrozenSteps {
    fn block_dim(&self) -> usize {
        self.steps.first().map(|m| m.nrows()).unwrap_or(0)
    }

    fn apply(&self, k: usize, v: &[C64]) -> Result<Vec<C64>> {
        let m = self.steps.get(k).ok_or(Error::OutOfRange {
            index: k,
            len: self.steps.len(),
        })?;
        Ok(matvec(m, v))
    }

    fn apply_adjoint(&self, k: usize, v: &[C64]) -> Result<Vec<C64>> {
        let m = self.steps.get(k).ok_or(Error::OutOfRange {
            index: k,
            len: self.steps.len(),
        })?;
        Ok(matvec(&m.adjoint(), v))
    }
}

/// `I - dt·L` on `n` copies.
#[derive(Clone, Debug)]
pub struct MultiCopyStep {
    system: AugmentedSystem,
    adjoint: AugmentedSystem,
    copies: usize,
    dt: f64,
}

impl MultiCopyStep {
    pub fn new(aug: &AugmentedSystem, copies: usize) -> Self {
        MultiCopyStep {
            system: aug.clone(),
            adjoint: aug.adjoint(),
            copies,
            dt: aug.dt,
        }
    }

    fn step(&self, sys: &AugmentedSystem, v: &[C64]) -> Result<Vec<C64>> {
        let psi = MultiCopyState::new(self.copies, sys.dim, v.to_vec(), usize::MAX)?;
        let lpsi = apply_generator(sys, &psi)?;
        let mut out = v.to_vec();
        axpy(C64::new(-self.dt, 0.0), lpsi.amplitudes(), &mut out);
        Ok(out)
    }
}

impl StepOperator for MultiCopyStep {
    fn block_dim(&self) -> usize {
        self.system.dim.pow(self.copies as u32)
    }

    fn apply(&self, _k: usize, v: &[C64]) -> Result<Vec<C64>> {
        self.step(&self.system, v)
    }

    fn apply_adjoint(&self, _k: usize, v: &[C64]) -> Result<Vec<C64>> {
        self.step(&self.adjoint, v)
    }
}

/// Step maps plus right-hand side blocks `B_0..B_T`.
#[derive(Clone, Debug)]
pub struct BlockSystem<S> {
    pub op: S,
    pub dt: f64,
    pub rhs: Vec<Vec<C64>>,
}

impl<S: StepOperator> BlockSystem<S> {
    pub fn new(op: S, dt: f64, rhs: Vec<Vec<C64>>) -> Result<Self> {
        if rhs.is_empty() {
            return Err(Error::field("rhs", "needs at least the initial block"));
        }
        let dim = op.block_dim();
        if let Some(bad) = rhs.iter().find(|b| b.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.len(),
            });
        }
        Ok(BlockSystem { op, dt, rhs })
    }

    pub fn steps(&self) -> usize {
        self.rhs.len() - 1
    }

    pub fn block_dim(&self) -> usize {
        self.op.block_dim()
    }
}

/// `x_0..x_T` and the norm of the concatenated history vector.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryState {
    pub states: Vec<Vec<C64>>,
    pub dt: f64,
    pub norm: f64,
}

impl HistoryState {
    pub fn new(states: Vec<Vec<C64>>, dt: f64) -> Self {
        let norm = states.iter().map(|x| norm_sqr(x)).sum::<f64>().sqrt();
        HistoryState { states, dt, norm }
    }

    /// CSV with columns `k,coord_index,re,im,block_norm`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,coord_index,re,im,block_norm")?;
        for (k, x) in self.states.iter().enumerate() {
            let bn = fmt_f64(norm(x));
            for (i, z) in x.iter().enumerate() {
                writeln!(out, "{k},{i},{},{},{bn}", fmt_f64(z.re), fmt_f64(z.im))?;
            }
        }
        Ok(())
    }
}

/// Right-hand side `[x_0, dt·b_1, …, dt·b_T]`, tensor-powered to `n` copies
/// when `n > 1`.
pub fn build_rhs(aug: &AugmentedSystem, n: usize, cap: usize) -> Result<Vec<Vec<C64>>> {
    if n == 0 || (n > 1 && n <= aug.degree) {
        return Err(Error::TooFewCopies(n, aug.degree));
    }
    let size = (aug.dim as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::StateCap { size, cap });
    }
    let power = |v: &[C64]| if n == 1 { v.to_vec() } else { tensor_power(v, n) };
    let mut rhs = Vec::with_capacity(aug.steps + 1);
    rhs.push(power(&aug.initial_state));
    for k in 1..=aug.steps {
        match aug.driving_at(k) {
            Some(b) => rhs.push(power(b).into_iter().map(|z| z * aug.dt).collect()),
            None => rhs.push(vec![ZERO; size as usize]),
        }
    }
    Ok(rhs)
}

/// `x_0 = B_0`, `x_{k+1} = S_k x_k + B_{k+1}`.
pub fn forward_solve<S: StepOperator>(sys: &BlockSystem<S>) -> Result<HistoryState> {
    let mut states = Vec::with_capacity(sys.rhs.len());
    states.push(sys.rhs[0].clone());
    for k in 0..sys.steps() {
        let mut next = sys.op.apply(k, &states[k])?;
        axpy(C64::new(1.0, 0.0), &sys.rhs[k + 1], &mut next);
        states.push(next);
    }
    Ok(HistoryState::new(states, sys.dt))
}

/// Solve `M^† Y = V` by backward substitution:
/// `y_T = v_T`, `y_k = v_k + S_k^† y_{k+1}`.
fn backward_solve<S: StepOperator>(sys: &BlockSystem<S>, v: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
    let t = sys.steps();
    let mut y = vec![Vec::new(); t + 1];
    y[t] = v[t].clone();
    for k in (0..t).rev() {
        let mut yk = sys.op.apply_adjoint(k, &y[k + 1])?;
        axpy(C64::new(1.0, 0.0), &v[k], &mut yk);
        y[k] = yk;
    }
    Ok(y)
}

fn check_shape<S: StepOperator>(sys: &BlockSystem<S>, blocks: &[Vec<C64>]) -> Result<()> {
    if blocks.len() != sys.rhs.len() {
        return Err(Error::DimensionMismatch {
            expected: sys.rhs.len(),
            actual: blocks.len(),
        });
    }
    let dim = sys.block_dim();
    if let Some(bad) = blocks.iter().find(|b| b.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    Ok(())
}

/// `M X`: block 0 is `x_0`, block `k ≥ 1` is `x_k - S_{k-1} x_{k-1}`.
pub fn apply_m<S: StepOperator>(sys: &BlockSystem<S>, history: &HistoryState) -> Result<Vec<Vec<C64>>> {
    check_shape(sys, &history.states)?;
    mul_m(sys, &history.states)
}

fn mul_m<S: StepOperator>(sys: &BlockSystem<S>, x: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
    let mut out = Vec::with_capacity(x.len());
    out.push(x[0].clone());
    for k in 1..x.len() {
        let prev = sys.op.apply(k - 1, &x[k - 1])?;
        out.push(x[k].iter().zip(&prev).map(|(a, b)| a - b).collect());
    }
    Ok(out)
}

/// `M^† Y`: block `k` is `y_k - S_k^† y_{k+1}`, block `T` is `y_T`.
fn mul_m_adjoint<S: StepOperator>(sys: &BlockSystem<S>, y: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
    let t = y.len() - 1;
    let mut out = Vec::with_capacity(y.len());
    for k in 0..t {
        let next = sys.op.apply_adjoint(k, &y[k + 1])?;
        out.push(y[k].iter().zip(&next).map(|(a, b)| a - b).collect());
    }
    out.push(y[t].clone());
    Ok(out)
}

/// Relative residual `‖M X - B‖ / ‖B‖`.
pub fn relative_residual<S: StepOperator>(sys: &BlockSystem<S>, history: &HistoryState) -> Result<f64> {
    let mx = apply_m(sys, history)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in mx.iter().zip(&sys.rhs) {
        num += a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>();
        den += norm_sqr(b);
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub kappa: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub converged: bool,
    pub iters: usize,
    /// Spread of the last few dominant-eigenvalue estimates relative to
    /// their mean.
    #[serde(skip)]
    pub rel_std_error: f64,
}

const CONDITION_SEED: u64 = 0x006b_6170_7061;
const CONDITION_TOL: f64 = 1e-12;

fn blocks_norm(v: &[Vec<C64>]) -> f64 {
    v.iter().map(|b| norm_sqr(b)).sum::<f64>().sqrt()
}

fn blocks_scale(v: &mut [Vec<C64>], s: f64) {
    v.iter_mut().flatten().for_each(|z| *z *= s);
}

fn blocks_dot(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| inner(x, y).re).sum()
}

struct PowerResult {
    lambda: f64,
    iters: usize,
    converged: bool,
    rel_std: f64,
}

/// Power iteration for the dominant eigenvalue of a Hermitian positive
/// operator given as a closure.
fn power_iteration<F>(start: Vec<Vec<C64>>, iters: usize, mut op: F) -> Result<PowerResult>
where
    F: FnMut(&[Vec<C64>]) -> Result<Vec<Vec<C64>>>,
{
    let mut v = start;
    let n0 = blocks_norm(&v);
    blocks_scale(&mut v, 1.0 / n0);
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut used = 0;
    for it in 0..iters {
        let mut w = op(&v)?;
        let lambda = blocks_dot(&v, &w);
        history.push(lambda);
        used = it + 1;
        let wn = blocks_norm(&w);
        if wn == 0.0 {
            converged = true;
            break;
        }
        blocks_scale(&mut w, 1.0 / wn);
        v = w;
        if let [.., prev, last] = history[..] {
            if (last - prev).abs() <= CONDITION_TOL * last.abs() {
                converged = true;
                break;
            }
        }
    }
    let tail = &history[history.len().saturating_sub(5)..];
    let mean = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
    let var = tail.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / tail.len().max(1) as f64;
    Ok(PowerResult {
        lambda: *history.last().unwrap_or(&0.0),
        iters: used,
        converged,
        rel_std: if mean != 0.0 { var.sqrt() / mean.abs() } else { 0.0 },
    })
}

/// `σ_max / σ_min` of `M`: power iteration on `M^†M` for the top and on
/// `(M^†M)^{-1} = M^{-1} M^{-†}` for the bottom, both inverses applied by
/// substitution. Start vectors are drawn from a fixed seed.
pub fn condition_estimate<S: StepOperator>(sys: &BlockSystem<S>, iters: usize) -> Result<ConditionReport> {
    if iters < 10 {
        return Err(Error::field("iters", "must be at least 10"));
    }
    let dim = sys.block_dim();
    let blocks = sys.rhs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(CONDITION_SEED);
    let mut start = || -> Vec<Vec<C64>> {
        (0..blocks)
            .map(|_| {
                (0..dim)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect()
    };

    let top = power_iteration(start(), iters, |v| {
        let mv = mul_m(sys, v)?;
        mul_m_adjoint(sys, &mv)
    })?;
    let bottom = power_iteration(start(), iters, |v| {
        let u = backward_solve(sys, v)?;
        let solved = forward_solve(&BlockSystem {
            op: &sys.op,
            dt: sys.dt,
            rhs: u,
        })?;
        Ok(solved.states)
    })?;

    let sigma_max = top.lambda.max(0.0).sqrt();
    let sigma_min = if bottom.lambda > 0.0 {
        1.0 / bottom.lambda.sqrt()
    } else {
        f64::INFINITY
    };
    Ok(ConditionReport {
        kappa: sigma_max / sigma_min,
        sigma_max,
        sigma_min,
        converged: top.converged && bottom.converged,
        iters: top.iters.max(bottom.iters),
        rel_std_error: top.rel_std,
    })
}

impl<S: StepOperator> StepOperator for &S {
    fn block_dim(&self) -> usize {
        (**self).block_dim()
    }
    fn apply(&self, k: usize, v: &[C64]) -> Result<Vec<C64>> {
        (**self).apply(k, v)
    }
    fn apply_adjoint(&self, k: usize, v: &[C64]) -> Result<Vec<C64>> {
        (**self).apply_adjoint(k, v)
    }
}

/// Block `k` of an `n`-copy history reduced to one site.
pub fn reduced_history_site(
    history: &HistoryState,
    copies: usize,
    dim: usize,
    k: usize,
    site: usize,
) -> Result<DensityMatrix> {
    let block = history.states.get(k).ok_or(Error::OutOfRange {
        index: k,
        len: history.states.len(),
    })?;
    let psi = MultiCopyState::new(copies, dim, block.clone(), usize::MAX)?;
    reduce_site(&psi, site)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::catalog;
    use crate::linalg::{max_abs_diff, ONE};
    use crate::meanfield::{product_state, trotter_step, DEFAULT_STATE_CAP};

    fn scalar(a: f64, dt: f64, rhs: Vec<f64>) -> BlockSystem<LinearStep> {
        BlockSystem::new(
            LinearStep::new(CMatrix::from_element(1, 1, C64::new(a, 0.0)), dt),
            dt,
            rhs.into_iter().map(|r| vec![C64::new(r, 0.0)]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rhs_blocks() {
        let mut aug = catalog::logistic();
        aug.steps = 3;
        let rhs = build_rhs(&aug, 1, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(rhs.len(), 4);
        assert_eq!(rhs[0], aug.initial_state);
        assert!(rhs[1..].iter().flatten().all(|z| *z == ZERO));

        aug.dt = 0.1;
        aug.driving = vec![vec![ZERO, ONE]; 3];
        let rhs = build_rhs(&aug, 1, DEFAULT_STATE_CAP).unwrap();
        for b in &rhs[1..] {
            assert!((b[1] - C64::new(0.1, 0.0)).norm() < 1e-15);
        }
        let rhs2 = build_rhs(&aug, 2, DEFAULT_STATE_CAP).unwrap();
        let want = [ZERO, ZERO, ZERO, C64::new(0.1, 0.0)];
        assert!(max_abs_diff(&rhs2[2], &want) < 1e-15);
        assert!(build_rhs(&aug, 0, DEFAULT_STATE_CAP).is_err());
    }

    #[test]
    fn identity_step_keeps_state() {
        let sys = scalar(0.0, 0.1, vec![2.0, 0.0, 0.0, 0.0]);
        let h = forward_solve(&sys).unwrap();
        assert!(h.states.iter().all(|x| x[0] == C64::new(2.0, 0.0)));
        assert!((h.norm - 4.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_decay_recursion() {
        let mut rhs = vec![0.0; 11];
        rhs[0] = 1.0;
        let h = forward_solve(&scalar(1.0, 0.1, rhs)).unwrap();
        for (k, x) in h.states.iter().enumerate() {
            assert!((x[0].re - 0.9f64.powi(k as i32)).abs() < 1e-15);
        }
        assert!((h.states[10][0].re - 0.3486784401).abs() < 1e-12);
        // first-order gap to e^{-1}
        assert!(((-1.0f64).exp() - h.states[10][0].re - 0.0192).abs() < 1e-3);
    }

    #[test]
    fn apply_m_inverts_forward_solve() {
        let sys = scalar(0.7, 0.05, vec![1.0, 0.3, -0.2, 0.5]);
        let h = forward_solve(&sys).unwrap();
        let back = apply_m(&sys, &h).unwrap();
        for (a, b) in back.iter().zip(&sys.rhs) {
            assert!(max_abs_diff(a, b) < 1e-14);
        }
        assert!(relative_residual(&sys, &h).unwrap() < 1e-14);
    }

    #[test]
    fn apply_m_difference_operator() {
        let sys = scalar(0.0, 0.1, vec![1.0, 0.0, 0.0]);
        let hist = HistoryState::new(vec![vec![ONE], vec![ONE], vec![ONE]], 0.1);
        let out = apply_m(&sys, &hist).unwrap();
        assert_eq!(out[0], vec![ONE]);
        assert!(out[1..].iter().flatten().all(|z| *z == ZERO));
        let hist = HistoryState::new(
            vec![vec![C64::new(1.0, 0.0)], vec![C64::new(3.0, 1.0)], vec![C64::new(-2.0, 0.0)]],
            0.1,
        );
        let out = apply_m(&sys, &hist).unwrap();
        assert_eq!(out[1][0], C64::new(2.0, 1.0));
        assert_eq!(out[2][0], C64::new(-5.0, -1.0));
        let short = HistoryState::new(vec![vec![ONE]], 0.1);
        assert!(apply_m(&sys, &short).is_err());
    }

    #[test]
    fn backward_solve_inverts_adjoint() {
        let a = CMatrix::from_fn(2, 2, |i, j| C64::new(0.3 * i as f64 - 0.2, 0.1 * j as f64));
        let rhs = vec![vec![ONE, C64::new(0.0, 1.0)]; 4];
        let sys = BlockSystem::new(LinearStep::new(a, 0.2), 0.2, rhs.clone()).unwrap();
        let y = backward_solve(&sys, &rhs).unwrap();
        let back = mul_m_adjoint(&sys, &y).unwrap();
        for (a, b) in back.iter().zip(&rhs) {
            assert!(max_abs_diff(a, b) < 1e-14);
        }
    }

    #[test]
    fn two_by_two_condition_number() {
        let sys = scalar(0.0, 0.1, vec![1.0, 0.0]);
        let rep = condition_estimate(&sys, 500).unwrap();
        assert!(rep.converged);
        assert!((rep.kappa - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-8, "{}", rep.kappa);
        assert!(condition_estimate(&sys, 5).is_err());
    }

    #[test]
    fn condition_grows_with_steps() {
        let mut last = 0.0;
        for t in [2, 4, 8, 16] {
            let mut rhs = vec![0.0; t + 1];
            rhs[0] = 1.0;
            let rep = condition_estimate(&scalar(0.0, 0.1, rhs), 20_000).unwrap();
            assert!(rep.kappa > last, "T={t}: {} <= {last}", rep.kappa);
            last = rep.kappa;
        }
    }

    #[test]
    fn unstable_step_grows_geometrically() {
        // S = 1.5: σ_min stays O(1) while σ_max ~ 1.5 grows and the
        // inverse picks up 1.5^T
        let kappas: Vec<f64> = [4, 8, 12, 16]
            .iter()
            .map(|&t| {
                let mut rhs = vec![0.0; t + 1];
                rhs[0] = 1.0;
                condition_estimate(&scalar(-5.0, 0.1, rhs), 5000).unwrap().kappa
            })
            .collect();
        let ratios: Vec<f64> = kappas.windows(2).map(|w| w[1] / w[0]).collect();
        for r in &ratios {
            assert!((r / 1.5f64.powi(4) - 1.0).abs() < 0.2, "{kappas:?}");
        }
    }

    #[test]
    fn multi_copy_blocks_are_trotter_iterates() {
        let aug = catalog::random_system(1, 1, 2, 17);
        let mut aug = aug;
        aug.steps = 5;
        aug.dt = 0.05;
        let rhs = build_rhs(&aug, 2, DEFAULT_STATE_CAP).unwrap();
        let sys = BlockSystem::new(MultiCopyStep::new(&aug, 2), aug.dt, rhs).unwrap();
        let h = forward_solve(&sys).unwrap();
        let mut psi = product_state(&aug.initial_state, 2, DEFAULT_STATE_CAP).unwrap();
        for k in 0..=aug.steps {
            assert!(max_abs_diff(&h.states[k], psi.amplitudes()) < 1e-12);
            psi = trotter_step(&aug, &psi, aug.dt).unwrap();
        }
        let rho = reduced_history_site(&h, 2, aug.dim, 3, 1).unwrap();
        let direct = reduce_site(&MultiCopyState::new(2, aug.dim, h.states[3].clone(), usize::MAX).unwrap(), 1).unwrap();
        assert_eq!(rho, direct);
        assert!(reduced_history_site(&h, 2, aug.dim, 9, 0).is_err());
    }

    #[test]
    fn zero_generator_history_is_constant_projector() {
        let mut aug = catalog::logistic();
        aug.monomials.clear();
        aug.steps = 4;
        let rhs = build_rhs(&aug, 3, DEFAULT_STATE_CAP).unwrap();
        let sys = BlockSystem::new(MultiCopyStep::new(&aug, 3), aug.dt, rhs).unwrap();
        let h = forward_solve(&sys).unwrap();
        let want = DensityMatrix::pure(&aug.initial_state);
        for k in 0..=4 {
            let rho = reduced_history_site(&h, 3, 2, k, 0).unwrap();
            assert!((&rho.matrix - &want.matrix).iter().all(|z| z.norm() < 1e-14));
        }
    }

    #[test]
    fn csv_layout() {
        let h = HistoryState::new(vec![vec![ONE, ZERO], vec![ZERO, ONE]], 0.1);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "k,coord_index,re,im,block_norm");
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn condition_json_fields() {
        let sys = scalar(0.0, 0.1, vec![1.0, 0.0]);
        let rep = condition_estimate(&sys, 100).unwrap();
        let v: serde_json::Value = serde_json::to_value(&rep).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 5);
        for k in ["kappa", "sigma_max", "sigma_min", "converged", "iters"] {
            assert!(v.get(k).is_some());
        }
    }
}

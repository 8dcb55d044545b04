use super::state::MultiCopyState;
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, CMatrix, C64, ZERO};
use nalgebra::SymmetricEigen;

/// Single-copy density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub matrix: CMatrix,
    /// Trace before normalization.
    pub raw_trace: f64,
}

impl DensityMatrix {
    /// `|x><x| / ‖x‖²`.
    pub fn pure(x: &[C64]) -> Self {
        let n2 = norm_sqr(x);
        let dim = x.len();
        let matrix = CMatrix::from_fn(dim, dim, |i, j| x[i] * x[j].conj() / n2);
        DensityMatrix {
            matrix,
            raw_trace: n2,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        let m = &self.matrix;
        let mut acc = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                acc += (m[(i, j)] * m[(j, i)]).re;
            }
        }
        acc
    }

    /// `max |ρ - ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.matrix;
        (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = &self.matrix;
        let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().collect()
    }
}

/// Partial trace of `psi` over every site but `site`, normalized to unit
/// trace. The pre-normalization trace is kept in `raw_trace`.
pub fn reduce_site(psi: &MultiCopyState, site: usize) -> Result<DensityMatrix> {
    let n = psi.copies();
    if site >= n {
        return Err(Error::OutOfRange { index: site, len: n });
    }
    let dim = psi.dim();
    let right = psi.stride(site);
    let left = dim.pow(site as u32);
    let amps = psi.amplitudes();
    let mut rho = CMatrix::from_element(dim, dim, ZERO);
    for l in 0..left {
        let block = l * dim * right;
        for a in 0..dim {
            let row = &amps[block + a * right..block + (a + 1) * right];
            for b in 0..=a {
                let col = &amps[block + b * right..block + (b + 1) * right];
                let v: C64 = row.iter().zip(col).map(|(x, y)| x * y.conj()).sum();
                rho[(a, b)] += v;
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            rho[(b, a)] = rho[(a, b)].conj();
        }
        rho[(a, a)].im = 0.0;
    }
    let raw_trace = rho.trace().re;
    if raw_trace <= 0.0 || !raw_trace.is_finite() {
        return Err(Error::Domain {
            what: "reduced-state trace",
            value: raw_trace,
        });
    }
    Ok(DensityMatrix {
        matrix: rho / C64::new(raw_trace, 0.0),
        raw_trace,
    })
}

/// `½ Σ |λ_i(ρ - σ)|`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let diff = &rho.matrix - &sigma.matrix;
    let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

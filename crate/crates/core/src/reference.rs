//! Classical integrators and the energy-scale / stability diagnostics.

use crate::encoding::AugmentedSystem;
use crate::error::Result;
use crate::fit::linear_fit;
use crate::linalg::{axpy, matvec, norm, spectral_norm, CMatrix, C64};
use crate::output::fmt_f64;
use serde::Serialize;
use std::io::Write;

/// Norm beyond which a trajectory is truncated and flagged unstable.
pub const OVERFLOW_NORM: f64 = 1e12;

/// States `x_0..x_T` on the `dt` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec<C64>>,
    pub dt: f64,
    /// Whether each state was scaled to unit norm after its step.
    pub renormalized: bool,
    /// Norm of each state before any renormalization.
    pub norms: Vec<f64>,
    /// Set when the run was cut short by overflow.
    pub unstable: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &[C64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// `ln‖x_k‖` against `t_k`, least squares.
    pub fn growth_rate(&self) -> f64 {
        let ts: Vec<f64> = (0..self.norms.len()).map(|k| k as f64 * self.dt).collect();
        let ls: Vec<f64> = self.norms.iter().map(|n| n.max(f64::MIN_POSITIVE).ln()).collect();
        linear_fit(&ts, &ls).map(|f| f.slope).unwrap_or(0.0)
    }

    /// CSV with columns `k,t,coord_index,re,im,norm`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,t,coord_index,re,im,norm")?;
        for (k, x) in self.states.iter().enumerate() {
            let t = k as f64 * self.dt;
            for (i, z) in x.iter().enumerate() {
                writeln!(
                    out,
                    "{k},{},{i},{},{},{}",
                    fmt_f64(t),
                    fmt_f64(z.re),
                    fmt_f64(z.im),
                    fmt_f64(self.norms[k])
                )?;
            }
        }
        Ok(())
    }
}

/// Forward Euler with an arbitrary state-dependent generator:
/// `x_{k+1} = (I - dt·g(x_k)) x_k + dt·b_{k+1}`.
///
/// With `renormalize`, the initial state and every step are scaled to unit
/// norm; the pre-scaling norms are kept in [`Trajectory::norms`].
pub fn euler_with<G>(aug: &AugmentedSystem, renormalize: bool, generator: G) -> Result<Trajectory>
where
    G: Fn(&[C64]) -> Result<CMatrix>,
{
    let dt = aug.dt;
    let mut x = aug.initial_state.clone();
    let mut norms = vec![norm(&x)];
    if renormalize {
        x = crate::linalg::normalized(&x);
    }
    let mut states = vec![x.clone()];
    let mut unstable = false;
    for k in 0..aug.steps {
        let g = generator(&x)?;
        let gx = matvec(&g, &x);
        let mut next = x.clone();
        axpy(C64::new(-dt, 0.0), &gx, &mut next);
        if let Some(b) = aug.driving_at(k + 1) {
            axpy(C64::new(dt, 0.0), b, &mut next);
        }
        let nrm = norm(&next);
        if nrm.is_nan() || nrm > OVERFLOW_NORM {
            unstable = true;
            break;
        }
        norms.push(nrm);
        if renormalize && nrm > 0.0 {
            next.iter_mut().for_each(|z| *z /= nrm);
        }
        states.push(next.clone());
        x = next;
    }
    Ok(Trajectory {
        states,
        dt,
        renormalized: renormalize,
        norms,
        unstable,
    })
}

/// Forward Euler on `dx/dt = -f(x) x + b(t)`.
pub fn euler_forward(aug: &AugmentedSystem, renormalize: bool) -> Result<Trajectory> {
    euler_with(aug, renormalize, |x| Ok(aug.f(x)))
}

fn vector_field(aug: &AugmentedSystem, x: &[C64], b: Option<&[C64]>) -> Vec<C64> {
    let mut v: Vec<C64> = matvec(&aug.f(x), x).into_iter().map(|z| -z).collect();
    if let Some(b) = b {
        axpy(C64::new(1.0, 0.0), b, &mut v);
    }
    v
}

/// Classical RK4 with each `dt` split into `substeps`, sampled on the `dt`
/// grid. Driving is held at `b_{k+1}` across step `k → k+1`.
pub fn rk4_oracle(aug: &AugmentedSystem, substeps: usize) -> Result<Trajectory> {
    let substeps = substeps.max(1);
    let h = aug.dt / substeps as f64;
    let mut x = aug.initial_state.clone();
    let mut states = vec![x.clone()];
    let mut norms = vec![norm(&x)];
    let mut unstable = false;
    let shifted = |x: &[C64], k: &[C64], a: f64| -> Vec<C64> {
        x.iter().zip(k).map(|(xi, ki)| xi + ki * a).collect()
    };
    'outer: for k in 0..aug.steps {
        let b = aug.driving_at(k + 1);
        for _ in 0..substeps {
            let k1 = vector_field(aug, &x, b);
            let k2 = vector_field(aug, &shifted(&x, &k1, h / 2.0), b);
            let k3 = vector_field(aug, &shifted(&x, &k2, h / 2.0), b);
            let k4 = vector_field(aug, &shifted(&x, &k3, h), b);
            for i in 0..x.len() {
                x[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
            if norm(&x).is_nan() || norm(&x) > OVERFLOW_NORM {
                unstable = true;
                break 'outer;
            }
        }
        norms.push(norm(&x));
        states.push(x.clone());
    }
    Ok(Trajectory {
        states,
        dt: aug.dt,
        renormalized: false,
        norms,
        unstable,
    })
}

/// Mean spectral norm of `f(x_k)` along the trajectory.
pub fn energy_scale(aug: &AugmentedSystem, traj: &Trajectory) -> f64 {
    if traj.states.is_empty() {
        return 0.0;
    }
    let total: f64 = traj.states.iter().map(|x| spectral_norm(&aug.f(x))).sum();
    total / traj.states.len() as f64
}

/// `E² · t · dt`.
pub fn stability_margin(e: f64, t: f64, dt: f64) -> f64 {
    e * e * t * dt
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    #[serde(rename = "E")]
    pub e: f64,
    pub t: f64,
    pub dt: f64,
    pub margin: f64,
    pub growth_rate: f64,
    pub bound_satisfied: bool,
    pub eps: f64,
}

impl StabilityReport {
    pub fn new(e: f64, t: f64, dt: f64, growth_rate: f64, eps: f64) -> Self {
        let margin = stability_margin(e, t, dt);
        StabilityReport {
            e,
            t,
            dt,
            margin,
            growth_rate,
            bound_satisfied: margin < eps,
            eps,
        }
    }

    pub fn for_trajectory(aug: &AugmentedSystem, traj: &Trajectory, eps: f64) -> Self {
        let e = energy_scale(aug, traj);
        let t = (traj.len().saturating_sub(1)) as f64 * traj.dt;
        Self::new(e, t, traj.dt, traj.growth_rate(), eps)
    }
}

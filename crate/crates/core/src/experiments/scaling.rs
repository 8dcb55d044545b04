use super::{
    overlap_fraction, Comparator, ExperimentConfig, GeneratorGap, RowStatus, ScalingReport, ScalingRow,
    SlopeFit,
};
use crate::encoding::AugmentedSystem;
use crate::history::{reduced_history_site, HistoryState};
use crate::error::{Error, Result};
use crate::linalg::{norm, normalized, sub};
use crate::meanfield::{
    effective_generator, product_state, reduce_site, trace_distance, trotter_step, DensityMatrix,
};
use crate::reference::{energy_scale, euler_forward, euler_with, rk4_oracle, stability_margin, Trajectory};
use rayon::prelude::*;

/// RK4 substeps per `dt` in the oracle used by [`scaling_vs_dt`].
pub const ORACLE_SUBSTEPS: usize = 20;

fn require_undriven(aug: &AugmentedSystem) -> Result<()> {
    if aug.is_driven() {
        return Err(Error::field("driving", "scaling experiments need an undriven system"));
    }
    Ok(())
}

fn with_grid(aug: &AugmentedSystem, dt: f64, steps: usize) -> AugmentedSystem {
    AugmentedSystem {
        dt,
        steps,
        ..aug.clone()
    }
}

/// Renormalized Euler trajectory under the comparator's generator.
pub fn comparator_trajectory(aug: &AugmentedSystem, comparator: Comparator) -> Result<Trajectory> {
    match comparator {
        Comparator::RoleComplete => euler_with(aug, true, |x| effective_generator(aug, x)),
        _ => euler_forward(aug, true),
    }
}

struct MultiCopyRun {
    rho: DensityMatrix,
}

fn multi_copy_run(aug: &AugmentedSystem, n: usize, cap: usize) -> Result<MultiCopyRun> {
    let x0 = normalized(&aug.initial_state);
    let mut psi = product_state(&x0, n, cap)?;
    for _ in 0..aug.steps {
        psi = trotter_step(aug, &psi, aug.dt)?;
    }
    Ok(MultiCopyRun {
        rho: reduce_site(&psi, 0)?,
    })
}

fn grid_status(aug: &AugmentedSystem, n: usize, cap: usize) -> RowStatus {
    if n <= aug.degree {
        return RowStatus::TooFewCopies;
    }
    match (aug.dim as u128).checked_pow(n as u32) {
        Some(size) if size <= cap as u128 => RowStatus::Ok,
        _ => RowStatus::Cap,
    }
}

/// Rows for one `(n, dt, T)` grid point, one per comparator.
fn copy_point(cfg: &ExperimentConfig, comparators: &[Comparator], n: usize, dt: f64, steps: usize) -> Result<Vec<ScalingRow>> {
    let aug = with_grid(&cfg.system, dt, steps);
    let status = grid_status(&aug, n, cfg.cap);
    if status != RowStatus::Ok {
        return Ok(comparators
            .iter()
            .map(|&c| ScalingRow {
                comparator: Some(c),
                ..ScalingRow::blank(n, dt, steps, status)
            })
            .collect());
    }
    let m = aug.degree;
    let run = multi_copy_run(&aug, n, cfg.cap)?;
    let (overlap_exact, overlap_approx) = overlap_fraction(n, m)?;
    comparators
        .iter()
        .map(|&c| {
            let traj = comparator_trajectory(&aug, c)?;
            let mut row = ScalingRow::blank(n, dt, steps, RowStatus::Ok);
            row.comparator = Some(c);
            if traj.unstable {
                row.status = RowStatus::Unstable;
                return Ok(row);
            }
            let e = energy_scale(&aug, &traj);
            let distance = trace_distance(&run.rho, &DensityMatrix::pure(traj.last()))?;
            let bound = e * e * steps as f64 * dt * dt * (m * m) as f64 / n as f64;
            row.trace_distance = distance;
            row.raw_trace = run.rho.raw_trace;
            row.purity_deficit = 1.0 - run.rho.purity();
            row.energy = e;
            row.predicted_bound = bound;
            row.measured_over_predicted = distance / bound;
            row.overlap_exact = overlap_exact;
            row.overlap_approx = overlap_approx;
            row.normalization_ratio = n as f64 / (n - m) as f64;
            row.validity_warning = n <= m * steps;
            Ok(row)
        })
        .collect()
}

fn copy_grid(cfg: &ExperimentConfig, experiment: &str, comparators: &[Comparator]) -> Result<ScalingReport> {
    cfg.validate()?;
    require_undriven(&cfg.system)?;
    let dt = cfg.dts[0];
    let points: Vec<(usize, usize)> = cfg
        .steps
        .iter()
        .flat_map(|&t| cfg.copies.iter().map(move |&n| (n, t)))
        .collect();
    let rows: Vec<Vec<ScalingRow>> = points
        .par_iter()
        .map(|&(n, t)| copy_point(cfg, comparators, n, dt, t))
        .collect::<Result<_>>()?;

    let mut report = ScalingReport::new(experiment, cfg);
    report.rows = rows.into_iter().flatten().collect();
    for &t in &cfg.steps {
        for &c in comparators {
            let ok: Vec<&ScalingRow> = report
                .rows
                .iter()
                .filter(|r| r.steps == t && r.comparator == Some(c) && r.status == RowStatus::Ok)
                .collect();
            let xs: Vec<f64> = ok.iter().map(|r| r.n as f64).collect();
            let ys: Vec<f64> = ok.iter().map(|r| r.trace_distance).collect();
            let fit = SlopeFit::from_points("trace_distance", "n", Some(c), Some(t), &xs, &ys);
            report.generator_gap.push(GeneratorGap {
                comparator: c,
                steps: t,
                copies: ok.iter().map(|r| r.n).collect(),
                distances: ys.clone(),
                shrinks: ys.len() > 1 && ys.windows(2).all(|w| w[1] < w[0]),
                slope: fit.slope,
            });
            report.fits.push(fit);
        }
    }
    if comparators.len() > 1 {
        let t = cfg.steps[0];
        for &n in &cfg.copies {
            let pick = |c: Comparator| {
                report
                    .rows
                    .iter()
                    .find(|r| r.n == n && r.steps == t && r.comparator == Some(c) && r.status == RowStatus::Ok)
                    .map(|r| r.trace_distance)
            };
            if let (Some(a), Some(b)) = (pick(Comparator::TargetOnly), pick(Comparator::RoleComplete)) {
                let closer = if b < a { Comparator::RoleComplete } else { Comparator::TargetOnly };
                report.closer_comparator.push((n, closer));
            }
        }
    }
    let m = cfg.system.degree;
    report.notes.push(format!(
        "generator normalized by binom(n-1, {m})^-1 per target; normalization_ratio = n/(n-m) relative to binom(n, {m})^-1"
    ));
    report
        .notes
        .push("validity_warning marks n <= m*T; the threshold is a pragmatic choice".to_string());
    if report.rows.iter().any(|r| r.status != RowStatus::Ok) {
        report.notes.push("rows with status other than ok were skipped".to_string());
    }
    Ok(report)
}

/// Final reduced-state distance to the configured comparator across the
/// copy grid, with a log-log slope per `T`.
pub fn scaling_vs_n(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    copy_grid(cfg, "scaling_vs_n", &cfg.comparator.expand())
}

/// [`scaling_vs_n`] against both comparators.
pub fn generator_discrimination(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    copy_grid(cfg, "generator_discrimination", &Comparator::Both.expand())
}

fn dt_point(cfg: &ExperimentConfig, horizon: f64, dt: f64) -> Result<ScalingRow> {
    let steps = (horizon / dt).round().max(1.0) as usize;
    let aug = with_grid(&cfg.system, dt, steps);
    let euler = euler_forward(&aug, false)?;
    let oracle = rk4_oracle(&aug, ORACLE_SUBSTEPS)?;
    let mut row = ScalingRow::blank(1, dt, steps, RowStatus::Ok);
    let e = energy_scale(&aug, &oracle);
    row.energy = e;
    row.margin = stability_margin(e, steps as f64 * dt, dt);
    if euler.unstable || oracle.unstable {
        row.status = RowStatus::Unstable;
        return Ok(row);
    }
    row.max_deviation = euler
        .states
        .iter()
        .zip(&oracle.states)
        .map(|(a, b)| norm(&sub(a, b)))
        .fold(0.0, f64::max);
    let final_ref = norm(oracle.last());
    row.final_rel_error = if final_ref > 0.0 {
        norm(&sub(euler.last(), oracle.last())) / final_ref
    } else {
        f64::NAN
    };
    Ok(row)
}

/// Single-copy Euler against an RK4 oracle over `dt` at a fixed horizon.
/// The fitted slope of the maximum deviation is the observed order.
pub fn scaling_vs_dt(cfg: &ExperimentConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    require_undriven(&cfg.system)?;
    let horizon = cfg.horizon.unwrap_or(cfg.dts[0] * cfg.steps[0] as f64);
    if horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::field("horizon", format!("must be positive, got {horizon}")));
    }
    let rows: Vec<ScalingRow> = cfg
        .dts
        .par_iter()
        .map(|&dt| dt_point(cfg, horizon, dt))
        .collect::<Result<_>>()?;
    let mut report = ScalingReport::new("scaling_vs_dt", cfg);
    let ok: Vec<&ScalingRow> = rows.iter().filter(|r| r.status == RowStatus::Ok).collect();
    let xs: Vec<f64> = ok.iter().map(|r| r.dt).collect();
    for metric in ["max_deviation", "final_rel_error"] {
        let ys: Vec<f64> = ok
            .iter()
            .map(|r| if metric == "max_deviation" { r.max_deviation } else { r.final_rel_error })
            .collect();
        report.fits.push(SlopeFit::from_points(metric, "dt", None, None, &xs, &ys));
    }
    report.rows = rows;
    report.notes.push(format!(
        "horizon t = {horizon}; oracle is RK4 with {ORACLE_SUBSTEPS} substeps per dt; margin = E^2 t dt"
    ));
    Ok(report)
}

/// Trace distance between site 0 of the final block of an `n`-copy history
/// (driving tensor-powered per step) and the single-copy Euler state with
/// per-copy driving. Reported, not asserted: the sum of tensor powers is not
/// itself a tensor power.
pub fn driving_gap(aug: &AugmentedSystem, history: &HistoryState, copies: usize) -> Result<f64> {
    let last = history.states.len().checked_sub(1).ok_or(Error::field("history", "no blocks"))?;
    let rho = reduced_history_site(history, copies, aug.dim, last, 0)?;
    let euler = euler_forward(&with_grid(aug, aug.dt, last), false)?;
    trace_distance(&rho, &DensityMatrix::pure(euler.last()))
}

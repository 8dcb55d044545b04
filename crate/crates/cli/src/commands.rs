use crate::config::RunConfig;
use mfode_core::encoding::{AugmentedDocument, SystemDocument};
use mfode_core::experiments::{
    catalog, comparator_trajectory, driving_gap, generator_discrimination, run_example, scaling_vs_dt, scaling_vs_n,
    write_rows_csv, Comparator, ExperimentConfig, ScalingReport, ORACLE_SUBSTEPS,
};
use mfode_core::history::{
    build_rhs, condition_estimate, forward_solve, relative_residual, BlockSystem, FrozenSteps, LinearStep,
    HistoryState, MultiCopyStep, StepOperator,
};
use mfode_core::output::write_json;
use mfode_core::reference::{euler_forward, rk4_oracle, StabilityReport, Trajectory};
use mfode_core::{AugmentedSystem, Error, DEFAULT_STATE_CAP};
use serde::Serialize;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;
pub const EXIT_CAP: i32 = 4;
pub const EXIT_OPERATIONAL: i32 = 1;

const RESIDUAL_TOL: f64 = 1e-10;
const DEFAULT_EPS: f64 = 0.01;
const CONDITION_ITERS: usize = 200;
const EXPERIMENT_CAP: usize = 1 << 12;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::StateCap { .. } => EXIT_CAP,
            Error::Io(_) => EXIT_OPERATIONAL,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type Outcome = Result<i32, Failure>;

fn read_document(path: &Path) -> Result<SystemDocument, Failure> {
    SystemDocument::from_path(path).map_err(|e| match e {
        Error::Io(io) => Failure::config(format!("{}: {io}", path.display())),
        other => Failure::config(format!("{}: {other}", path.display())),
    })
}

/// Encoded system from `--spec`, `--system`, or `fallback`, with the
/// single-valued `--dt`/`--steps` overrides applied.
fn load_system(cfg: &RunConfig, fallback: &str, apply_grid: bool) -> Result<AugmentedSystem, Failure> {
    let mut aug = if let Some(path) = &cfg.spec {
        let mut doc = read_document(path)?;
        if let (Some(eps), Some(nc)) = (cfg.eps, doc.norm_closure.as_mut()) {
            nc.eps = eps;
        }
        if apply_grid {
            if let Some(&dt) = cfg.dt.first() {
                doc.dt = dt;
            }
            if let Some(&steps) = cfg.steps.first() {
                doc.steps = steps;
            }
        }
        doc.encode().map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
    } else {
        let name = cfg.system.as_deref().unwrap_or(fallback);
        let mut aug = match name {
            "random" => catalog::random_system(1, 1, 3, cfg.seed),
            other => catalog::by_name(other)?,
        };
        if apply_grid {
            if let Some(&dt) = cfg.dt.first() {
                aug.dt = dt;
            }
            if let Some(&steps) = cfg.steps.first() {
                aug.steps = steps;
            }
        }
        aug
    };
    if aug.is_driven() && aug.driving.len() != aug.steps {
        return Err(Failure::config(format!(
            "driving has {} entries but steps is {}",
            aug.driving.len(),
            aug.steps
        )));
    }
    if aug.driving.len() > aug.steps {
        aug.driving.truncate(aug.steps);
    }
    Ok(aug)
}

fn create_out(out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(|e| Failure {
        code: EXIT_OPERATIONAL,
        message: format!("{}: {e}", out.display()),
    })
}

fn write_traj(path: &Path, traj: &Trajectory) -> Result<(), Failure> {
    traj.write_csv(BufWriter::new(File::create(path)?))?;
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    terms: usize,
    #[serde(rename = "D")]
    dim: usize,
    m: usize,
    m_eff: usize,
    taylor_order: usize,
    norm_closure: bool,
    schema_version: u32,
}

pub fn encode(cfg: &RunConfig) -> Outcome {
    if cfg.spec.is_none() {
        return Err(Failure::config("encode needs --spec"));
    }
    let aug = load_system(cfg, "", true)?;
    create_out(&cfg.out)?;
    write_json(&cfg.out.join("augmented.json"), &AugmentedDocument::from(&aug))?;
    let summary = Summary {
        terms: aug.monomials.len(),
        dim: aug.dim,
        m: aug.base_degree,
        m_eff: aug.degree,
        taylor_order: aug.taylor_order,
        norm_closure: aug.norm_coord.is_some(),
        schema_version: mfode_core::SCHEMA_VERSION,
    };
    write_json(&cfg.out.join("summary.json"), &summary)?;
    println!(
        "encoded: D = {}, {} monomials, m_eff = {}",
        summary.dim, summary.terms, summary.m_eff
    );
    Ok(0)
}

#[derive(Serialize)]
struct CopySolve {
    n: usize,
    residual: f64,
    history_norm: f64,
    /// Only for driven systems.
    driving_gap: Option<f64>,
}

#[derive(Serialize)]
struct SolveReport {
    steps: usize,
    dt: f64,
    residual: f64,
    history_norm: f64,
    overflow: bool,
    margin_exceeded: bool,
    stability_flag: bool,
    multi_copy: Vec<CopySolve>,
}

fn solve_history<S: StepOperator>(
    op: S,
    aug: &AugmentedSystem,
    n: usize,
    cap: usize,
    out: &Path,
    name: &str,
    condition: bool,
) -> Result<(f64, HistoryState), Failure> {
    let sys = BlockSystem::new(op, aug.dt, build_rhs(aug, n, cap)?)?;
    let history = forward_solve(&sys)?;
    let residual = relative_residual(&sys, &history)?;
    history.write_csv(BufWriter::new(File::create(out.join(name))?))?;
    if condition {
        write_json(&out.join("condition.json"), &condition_estimate(&sys, CONDITION_ITERS)?)?;
    }
    Ok((residual, history))
}

pub fn solve(cfg: &RunConfig) -> Outcome {
    let aug = load_system(cfg, "logistic", true)?;
    let cap = cfg.cap.unwrap_or(DEFAULT_STATE_CAP);
    let eps = cfg.eps.unwrap_or(DEFAULT_EPS);
    // fail on the cap before any work
    for &n in cfg.copies.iter().filter(|&&n| n > 1) {
        if n <= aug.degree {
            return Err(Error::TooFewCopies(n, aug.degree).into());
        }
        let size = (aug.dim as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(Error::StateCap { size, cap }.into());
        }
    }
    create_out(&cfg.out)?;

    let euler = euler_forward(&aug, false)?;
    let oracle = rk4_oracle(&aug, ORACLE_SUBSTEPS)?;
    write_traj(&cfg.out.join("traj_euler.csv"), &euler)?;
    write_traj(&cfg.out.join("traj_rk4.csv"), &oracle)?;
    let stability = StabilityReport::for_trajectory(&aug, &euler, eps);
    write_json(&cfg.out.join("stability.json"), &stability)?;

    // the history covers the part of the run that stayed finite
    let mut hist_aug = aug.clone();
    hist_aug.steps = euler.len() - 1;
    hist_aug.driving.truncate(hist_aug.steps);
    let (residual, history) = if aug.is_linear() {
        solve_history(LinearStep::from_linear(&hist_aug), &hist_aug, 1, usize::MAX, &cfg.out, "history.csv", true)?
    } else {
        solve_history(FrozenSteps::along(&hist_aug, &euler), &hist_aug, 1, usize::MAX, &cfg.out, "history.csv", true)?
    };

    let mut multi_copy = Vec::new();
    for &n in cfg.copies.iter().filter(|&&n| n > 1) {
        let name = format!("history_n{n}.csv");
        let (residual, history) =
            solve_history(MultiCopyStep::new(&hist_aug, n), &hist_aug, n, cap, &cfg.out, &name, false)?;
        let driving_gap = if hist_aug.is_driven() {
            Some(driving_gap(&hist_aug, &history, n)?)
        } else {
            None
        };
        multi_copy.push(CopySolve {
            n,
            residual,
            history_norm: history.norm,
            driving_gap,
        });
    }

    let overflow = euler.unstable || oracle.unstable;
    let margin_exceeded = stability.margin > 1.0;
    let residual_ok = residual < RESIDUAL_TOL && multi_copy.iter().all(|c| c.residual < RESIDUAL_TOL);
    let report = SolveReport {
        steps: aug.steps,
        dt: aug.dt,
        residual,
        history_norm: history.norm,
        overflow,
        margin_exceeded,
        stability_flag: overflow || margin_exceeded || !residual_ok,
        multi_copy,
    };
    write_json(&cfg.out.join("solve.json"), &report)?;
    println!(
        "solve: residual = {:.3e}, margin = {:.3e}, stability_flag = {}",
        residual, stability.margin, report.stability_flag
    );
    Ok(if report.stability_flag { EXIT_UNSTABLE } else { 0 })
}

fn parse_comparator(name: Option<&str>) -> Comparator {
    match name {
        Some("target_only") => Comparator::TargetOnly,
        Some("both") => Comparator::Both,
        _ => Comparator::RoleComplete,
    }
}

fn write_report(out: &Path, report: &ScalingReport) -> Result<(), Failure> {
    write_json(&out.join("report.json"), report)?;
    write_rows_csv(&out.join("rows.csv"), report)?;
    Ok(())
}

pub fn experiment(cfg: &RunConfig, name: &str) -> Outcome {
    if let Some(example) = name.strip_prefix("example:") {
        if !catalog::EXAMPLES.contains(&example) {
            return Err(Failure::config(format!(
                "unknown example `{example}`; expected one of {}",
                catalog::EXAMPLES.join(", ")
            )));
        }
        let bundle = run_example(example, cfg.eps.unwrap_or(DEFAULT_EPS))?;
        create_out(&cfg.out)?;
        bundle.write(&cfg.out)?;
        for c in &bundle.checks {
            println!("{example}: {} = {:.3e} (threshold {:.3e}) {}", c.name, c.value, c.threshold, if c.passed { "ok" } else { "FAILED" });
        }
        return Ok(0);
    }
    let fallback = match name {
        "scaling_vs_n" | "generator_discrimination" => "quadratic",
        "scaling_vs_dt" => "logistic",
        other => {
            return Err(Failure::config(format!(
                "unknown experiment `{other}`; expected scaling_vs_n, scaling_vs_dt, generator_discrimination or example:<name>"
            )))
        }
    };
    let aug = load_system(cfg, fallback, false)?;
    let label = cfg
        .spec
        .as_ref()
        .map(|p| p.display().to_string())
        .or_else(|| cfg.system.clone())
        .unwrap_or_else(|| fallback.to_string());
    let mut exp = ExperimentConfig::new(label, aug.clone());
    exp.seed = cfg.seed;
    exp.cap = cfg.cap.unwrap_or(EXPERIMENT_CAP);
    exp.eps = cfg.eps.unwrap_or(DEFAULT_EPS);
    exp.comparator = parse_comparator(cfg.comparator.as_deref());
    if !cfg.copies.is_empty() {
        exp.copies = cfg.copies.clone();
    }
    if !cfg.dt.is_empty() {
        exp.dts = cfg.dt.clone();
    }
    if !cfg.steps.is_empty() {
        exp.steps = cfg.steps.clone();
    }

    let report = match name {
        "scaling_vs_dt" => {
            if cfg.dt.is_empty() {
                exp.dts = vec![0.04, 0.02, 0.01, 0.005];
            }
            if cfg.steps.is_empty() {
                exp.horizon = Some(1.0);
            }
            scaling_vs_dt(&exp)?
        }
        "scaling_vs_n" => scaling_vs_n(&exp)?,
        _ => generator_discrimination(&exp)?,
    };
    create_out(&cfg.out)?;
    write_report(&cfg.out, &report)?;

    // trajectories at the first grid point
    let mut first = aug;
    first.dt = exp.dts[0];
    if name == "scaling_vs_dt" {
        first.steps = report.rows.first().map(|r| r.steps).unwrap_or(first.steps);
        write_traj(&cfg.out.join("traj_euler.csv"), &euler_forward(&first, false)?)?;
        write_traj(&cfg.out.join("traj_rk4.csv"), &rk4_oracle(&first, ORACLE_SUBSTEPS)?)?;
    } else {
        first.steps = exp.steps[0];
        let comparators = if name == "scaling_vs_n" { exp.comparator.expand() } else { Comparator::Both.expand() };
        for c in comparators {
            let path = cfg.out.join(format!("traj_{}.csv", c.label()));
            write_traj(&path, &comparator_trajectory(&first, c)?)?;
        }
    }
    for fit in &report.fits {
        println!(
            "{}: {} vs {} slope = {:.4} [{:.4}, {:.4}] ({:?}, {} points)",
            report.experiment, fit.metric, fit.against, fit.slope, fit.ci_low, fit.ci_high, fit.status, fit.points
        );
    }
    Ok(0)
}

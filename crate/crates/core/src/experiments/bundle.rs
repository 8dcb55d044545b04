use super::{catalog, scaling_vs_n, Comparator, ExperimentConfig, ScalingReport};
use crate::encoding::AugmentedSystem;
use crate::error::Result;
use crate::history::{build_rhs, forward_solve, relative_residual, BlockSystem, FrozenSteps, HistoryState};
use crate::linalg::{norm, C64};
use crate::output::{fmt_f64, write_json};
use crate::reference::{energy_scale, euler_forward, rk4_oracle, StabilityReport, Trajectory};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Copy counts tried for the small scaling run inside an example bundle.
const EXAMPLE_COPIES: [usize; 7] = [2, 3, 4, 6, 8, 10, 12];
const EXAMPLE_CAP: usize = 1 << 12;
const EXAMPLE_SCALING_STEPS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl ExampleCheck {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        ExampleCheck {
            name: name.to_string(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExampleBundle {
    pub example: String,
    pub dim: usize,
    pub degree: usize,
    pub stability: StabilityReport,
    pub history_residual: f64,
    pub checks: Vec<ExampleCheck>,
    pub scaling: Option<ScalingReport>,
    #[serde(skip)]
    pub euler: Trajectory,
    #[serde(skip)]
    pub oracle: Trajectory,
    #[serde(skip)]
    pub history: HistoryState,
}

impl ExampleBundle {
    /// `report.json`, `stability.json`, `traj_euler.csv`, `traj_rk4.csv`,
    /// `traj_history.csv` and, with a scaling run, `rows.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), self)?;
        write_json(&dir.join("stability.json"), &self.stability)?;
        self.euler.write_csv(BufWriter::new(File::create(dir.join("traj_euler.csv"))?))?;
        self.oracle.write_csv(BufWriter::new(File::create(dir.join("traj_rk4.csv"))?))?;
        self.history.write_csv(BufWriter::new(File::create(dir.join("traj_history.csv"))?))?;
        if let Some(scaling) = &self.scaling {
            write_rows_csv(&dir.join("rows.csv"), scaling)?;
        }
        Ok(())
    }
}

/// Long-format CSV `n,dt,T,metric,value`, rows in report order.
pub fn write_rows_csv(path: &Path, report: &ScalingReport) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "n,dt,T,metric,value")?;
    for row in &report.rows {
        let dt = fmt_f64(row.dt);
        writeln!(out, "{},{dt},{},status,{}", row.n, row.steps, row.status.label())?;
        for (metric, value) in row.metrics() {
            writeln!(out, "{},{dt},{},{metric},{}", row.n, row.steps, fmt_f64(value))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn logistic_check(aug: &AugmentedSystem, euler: &Trajectory) -> ExampleCheck {
    let u0 = aug.initial_state[1].re / aug.scale;
    let t = (euler.len() - 1) as f64 * euler.dt;
    let exact = u0 / (u0 + (1.0 - u0) * (-t).exp());
    let got = aug.descale(euler.last())[0].re;
    ExampleCheck::at_most("closed_form_final_error", (got - exact).abs(), 5e-4)
}

fn sir_checks(aug: &AugmentedSystem, euler: &Trajectory) -> Vec<ExampleCheck> {
    let total = |x: &[C64]| aug.descale(x).iter().map(|z| z.re).sum::<f64>();
    let n0 = total(&aug.initial_state);
    let drift = euler.states.iter().map(|x| (total(x) - n0).abs()).fold(0.0, f64::max);

    // plain SIR Euler loop
    let (beta, gamma, dt) = (0.3, 0.1, aug.dt);
    let x0 = aug.descale(&aug.initial_state);
    let (mut s, mut i, mut r) = (x0[0].re, x0[1].re, x0[2].re);
    let mut dev: f64 = 0.0;
    for x in &euler.states[1..] {
        let (ds, di, dr) = (-beta * s * i, beta * s * i - gamma * i, gamma * i);
        s += dt * ds;
        i += dt * di;
        r += dt * dr;
        let y = aug.descale(x);
        dev = dev.max((y[0].re - s).abs()).max((y[1].re - i).abs()).max((y[2].re - r).abs());
    }
    vec![
        ExampleCheck::at_most("conservation_drift", drift, 1e-12),
        ExampleCheck::at_most("hand_loop_deviation", dev, 1e-12),
    ]
}

fn gp2_check(aug: &AugmentedSystem, euler: &Trajectory, e: f64) -> ExampleCheck {
    // the constant coordinate does not take part in the anti-Hermitian flow
    let mode_norm = |x: &[C64]| norm(&x[1..]);
    let drift = euler
        .states
        .windows(2)
        .map(|w| (mode_norm(&w[1]) - mode_norm(&w[0])).abs())
        .fold(0.0, f64::max);
    ExampleCheck::at_most("norm_drift_per_step", drift, 10.0 * e * e * aug.dt * aug.dt)
}

/// Trajectories, history solve, stability report and example-specific
/// checks for a built-in system, plus a copy-scaling run over the copy
/// counts whose state fits the cap.
pub fn run_example(name: &str, eps: f64) -> Result<ExampleBundle> {
    let aug = catalog::by_name(name)?;
    if !catalog::EXAMPLES.contains(&name) {
        return Err(crate::error::Error::UnknownName(name.to_string()));
    }
    let euler = euler_forward(&aug, false)?;
    let oracle = rk4_oracle(&aug, 1)?;
    let sys = BlockSystem::new(FrozenSteps::along(&aug, &euler), aug.dt, build_rhs(&aug, 1, usize::MAX)?)?;
    let history = forward_solve(&sys)?;
    let history_residual = relative_residual(&sys, &history)?;
    let stability = StabilityReport::for_trajectory(&aug, &euler, eps);

    let checks = match name {
        "logistic" => vec![logistic_check(&aug, &euler)],
        "sir" => sir_checks(&aug, &euler),
        "gp2" => vec![gp2_check(&aug, &euler, energy_scale(&aug, &euler))],
        _ => vec![],
    };

    let copies: Vec<usize> = EXAMPLE_COPIES
        .iter()
        .copied()
        .filter(|&n| n > aug.degree && (aug.dim as u128).pow(n as u32) <= EXAMPLE_CAP as u128)
        .collect();
    let scaling = if copies.is_empty() {
        None
    } else {
        let mut cfg = ExperimentConfig::new(name, aug.clone());
        cfg.copies = copies;
        cfg.steps = vec![EXAMPLE_SCALING_STEPS.min(aug.steps)];
        cfg.comparator = Comparator::Both;
        cfg.cap = EXAMPLE_CAP;
        cfg.eps = eps;
        Some(scaling_vs_n(&cfg)?)
    };

    Ok(ExampleBundle {
        example: name.to_string(),
        dim: aug.dim,
        degree: aug.degree,
        stability,
        history_residual,
        checks,
        scaling,
        euler,
        oracle,
        history,
    })
}

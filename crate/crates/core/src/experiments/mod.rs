//! Verification campaigns and their report bundles.

pub mod catalog;
mod bundle;
mod scaling;

pub use bundle::{run_example, write_rows_csv, ExampleBundle, ExampleCheck};
pub use scaling::{
    comparator_trajectory, driving_gap, generator_discrimination, scaling_vs_dt, scaling_vs_n, ORACLE_SUBSTEPS,
};

use crate::encoding::AugmentedSystem;
use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::meanfield::DEFAULT_STATE_CAP;
use serde::Serialize;

/// Which single-copy Euler trajectory a multi-copy run is compared to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    /// Euler with `f`.
    TargetOnly,
    /// Euler with `f + G` (target and context roles).
    RoleComplete,
    Both,
}

impl Comparator {
    pub fn expand(self) -> Vec<Comparator> {
        match self {
            Comparator::Both => vec![Comparator::TargetOnly, Comparator::RoleComplete],
            c => vec![c],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Comparator::TargetOnly => "target_only_f",
            Comparator::RoleComplete => "role_complete_f_plus_g",
            Comparator::Both => "both",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub name: String,
    pub system: AugmentedSystem,
    pub copies: Vec<usize>,
    pub dts: Vec<f64>,
    /// `T` values; for `scaling_vs_dt` the horizon is `dt · steps` of the
    /// first entry unless `horizon` is set.
    pub steps: Vec<usize>,
    pub horizon: Option<f64>,
    pub comparator: Comparator,
    pub seed: u64,
    pub cap: usize,
    /// Threshold for the stability flag.
    pub eps: f64,
}

impl ExperimentConfig {
    pub fn new(name: impl Into<String>, system: AugmentedSystem) -> Self {
        let dt = system.dt;
        let steps = system.steps;
        ExperimentConfig {
            name: name.into(),
            system,
            copies: vec![4, 6, 8, 10, 12],
            dts: vec![dt],
            steps: vec![steps],
            horizon: None,
            comparator: Comparator::RoleComplete,
            seed: 0,
            cap: 1 << 12,
            eps: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.copies.is_empty() || self.dts.is_empty() || self.steps.is_empty() {
            return Err(Error::field("grid", "copies, dt and steps need at least one value"));
        }
        if let Some(dt) = self.dts.iter().find(|dt| dt.is_nan() || **dt <= 0.0) {
            return Err(Error::field("dt", format!("must be positive, got {dt}")));
        }
        if self.steps.contains(&0) {
            return Err(Error::field("steps", "must be at least 1"));
        }
        if self.cap == 0 {
            return Err(Error::field("cap", "must be positive"));
        }
        Ok(())
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut cfg = ExperimentConfig::new("quadratic", catalog::quadratic_test());
        cfg.cap = DEFAULT_STATE_CAP;
        cfg
    }
}

/// `((1 - m/n)^m, 1 - m²/n)`: the fraction of second-order term pairs with
/// disjoint supports and its first-order approximation.
pub fn overlap_fraction(n: usize, m: usize) -> Result<(f64, f64)> {
    if m == 0 || n <= m {
        return Err(Error::field("n", format!("need n > m ≥ 1, got n = {n}, m = {m}")));
    }
    // exact integer ratios where they fit, so plug-in values round once
    let exact = match ((n - m) as u64).checked_pow(m as u32).zip((n as u64).checked_pow(m as u32)) {
        Some((num, den)) if den < (1u64 << 53) => num as f64 / den as f64,
        _ => (1.0 - m as f64 / n as f64).powi(m as i32),
    };
    let approx = (n as f64 - (m * m) as f64) / n as f64;
    Ok((exact, approx))
}

/// Why a grid point produced no measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Cap,
    TooFewCopies,
    Unstable,
}

impl RowStatus {
    pub fn label(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Cap => "cap",
            RowStatus::TooFewCopies => "too_few_copies",
            RowStatus::Unstable => "unstable",
        }
    }
}

/// One grid point. Unmeasured quantities are `NaN` (JSON `null`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub steps: usize,
    pub status: RowStatus,
    pub comparator: Option<Comparator>,
    pub trace_distance: f64,
    pub raw_trace: f64,
    pub purity_deficit: f64,
    pub energy: f64,
    pub predicted_bound: f64,
    pub measured_over_predicted: f64,
    pub overlap_exact: f64,
    pub overlap_approx: f64,
    pub normalization_ratio: f64,
    /// Euler-vs-oracle maximum deviation (single-copy runs).
    pub max_deviation: f64,
    /// Relative Euler-vs-oracle error at the final time.
    pub final_rel_error: f64,
    pub margin: f64,
    /// `n ≤ m·T`: outside the regime where overlaps stay rare.
    pub validity_warning: bool,
}

impl ScalingRow {
    pub(crate) fn blank(n: usize, dt: f64, steps: usize, status: RowStatus) -> Self {
        ScalingRow {
            n,
            dt,
            steps,
            status,
            comparator: None,
            trace_distance: f64::NAN,
            raw_trace: f64::NAN,
            purity_deficit: f64::NAN,
            energy: f64::NAN,
            predicted_bound: f64::NAN,
            measured_over_predicted: f64::NAN,
            overlap_exact: f64::NAN,
            overlap_approx: f64::NAN,
            normalization_ratio: f64::NAN,
            max_deviation: f64::NAN,
            final_rel_error: f64::NAN,
            margin: f64::NAN,
            validity_warning: false,
        }
    }

    /// `(metric, value)` pairs for the long-format CSV, in fixed order.
    pub fn metrics(&self) -> Vec<(String, f64)> {
        let prefix = self.comparator.map(|c| format!("{}.", c.label())).unwrap_or_default();
        [
            ("trace_distance", self.trace_distance),
            ("raw_trace", self.raw_trace),
            ("purity_deficit", self.purity_deficit),
            ("energy", self.energy),
            ("predicted_bound", self.predicted_bound),
            ("measured_over_predicted", self.measured_over_predicted),
            ("overlap_exact", self.overlap_exact),
            ("overlap_approx", self.overlap_approx),
            ("normalization_ratio", self.normalization_ratio),
            ("max_deviation", self.max_deviation),
            ("final_rel_error", self.final_rel_error),
            ("margin", self.margin),
        ]
        .into_iter()
        .filter(|(_, v)| !v.is_nan())
        .map(|(k, v)| (format!("{prefix}{k}"), v))
        .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Ok,
    /// Fewer than [`MIN_FIT_POINTS`] usable points.
    InsufficientPoints,
    /// Some measured values are zero or non-finite.
    Undefined,
}

pub const MIN_FIT_POINTS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub metric: String,
    pub against: String,
    pub comparator: Option<Comparator>,
    #[serde(rename = "T")]
    pub steps: Option<usize>,
    pub status: FitStatus,
    pub slope: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

/// 97.5% Student-t quantiles for 1..=10 degrees of freedom.
const T975: [f64; 10] = [12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228];

impl SlopeFit {
    pub fn from_points(
        metric: &str,
        against: &str,
        comparator: Option<Comparator>,
        steps: Option<usize>,
        xs: &[f64],
        ys: &[f64],
    ) -> Self {
        let mut out = SlopeFit {
            metric: metric.to_string(),
            against: against.to_string(),
            comparator,
            steps,
            status: FitStatus::Ok,
            slope: f64::NAN,
            stderr: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            points: xs.len(),
        };
        if xs.len() < MIN_FIT_POINTS {
            out.status = FitStatus::InsufficientPoints;
            return out;
        }
        match loglog_fit(xs, ys) {
            Some(LineFit {
                slope, slope_stderr, ..
            }) => {
                let df = xs.len() - 2;
                let q = T975.get(df - 1).copied().unwrap_or(1.96);
                out.slope = slope;
                out.stderr = slope_stderr;
                out.ci_low = slope - q * slope_stderr;
                out.ci_high = slope + q * slope_stderr;
            }
            None => out.status = FitStatus::Undefined,
        }
        out
    }
}

/// Distances of the reduced multi-copy state to each comparator, and which
/// one shrinks with `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorGap {
    pub comparator: Comparator,
    #[serde(rename = "T")]
    pub steps: usize,
    pub copies: Vec<usize>,
    pub distances: Vec<f64>,
    /// Strictly decreasing in `n`.
    pub shrinks: bool,
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub experiment: String,
    pub system: String,
    pub dim: usize,
    pub degree: usize,
    pub seed: u64,
    pub cap: usize,
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<SlopeFit>,
    pub generator_gap: Vec<GeneratorGap>,
    /// Per-`n` comparator with the smaller final distance, when both ran.
    pub closer_comparator: Vec<(usize, Comparator)>,
    pub notes: Vec<String>,
}

impl ScalingReport {
    pub(crate) fn new(experiment: &str, cfg: &ExperimentConfig) -> Self {
        ScalingReport {
            experiment: experiment.to_string(),
            system: cfg.name.clone(),
            dim: cfg.system.dim,
            degree: cfg.system.degree,
            seed: cfg.seed,
            cap: cfg.cap,
            rows: Vec::new(),
            fits: Vec::new(),
            generator_gap: Vec::new(),
            closer_comparator: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn fit(&self, metric: &str, comparator: Option<Comparator>) -> Option<&SlopeFit> {
        self.fits
            .iter()
            .find(|f| f.metric == metric && (comparator.is_none() || f.comparator == comparator))
    }

    pub fn rows_with(&self, comparator: Comparator) -> impl Iterator<Item = &ScalingRow> {
        self.rows.iter().filter(move |r| r.comparator == Some(comparator))
    }
}

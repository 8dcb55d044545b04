//! Run configuration: config file values, then command-line overrides,
//! validated together before anything runs.

use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> From<OneOrMany<T>> for Vec<T> {
    fn from(v: OneOrMany<T>) -> Self {
        match v {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

/// Keys accepted in a `--config` file; same meaning as the flags.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub spec: Option<PathBuf>,
    pub system: Option<String>,
    pub out: Option<PathBuf>,
    pub dt: Option<OneOrMany<f64>>,
    pub steps: Option<OneOrMany<usize>>,
    pub copies: Option<OneOrMany<usize>>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub cap: Option<usize>,
    pub comparator: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub spec: Option<PathBuf>,
    pub system: Option<String>,
    pub out: PathBuf,
    pub dt: Vec<f64>,
    pub steps: Vec<usize>,
    pub copies: Vec<usize>,
    pub eps: Option<f64>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub cap: Option<usize>,
    pub comparator: Option<String>,
}

/// Values given on the command line; `None`/empty means "not given".
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub spec: Option<PathBuf>,
    pub system: Option<String>,
    pub out: Option<PathBuf>,
    pub dt: Vec<f64>,
    pub steps: Vec<usize>,
    pub copies: Vec<usize>,
    pub eps: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub cap: Option<usize>,
    pub comparator: Option<String>,
}

fn pick_vec<T>(flag: Vec<T>, file: Option<OneOrMany<T>>) -> Vec<T> {
    if flag.is_empty() {
        file.map(Vec::from).unwrap_or_default()
    } else {
        flag
    }
}

/// Merge flags over the file and check every value, reporting all problems
/// at once.
pub fn resolve(file: ConfigFile, flags: Overrides, single_grid: bool) -> Result<RunConfig, String> {
    let cfg = RunConfig {
        spec: flags.spec.or(file.spec),
        system: flags.system.or(file.system),
        out: flags.out.or(file.out).unwrap_or_default(),
        dt: pick_vec(flags.dt, file.dt),
        steps: pick_vec(flags.steps, file.steps),
        copies: pick_vec(flags.copies, file.copies),
        eps: flags.eps.or(file.eps),
        seed: flags.seed.or(file.seed).unwrap_or(0),
        threads: flags.threads.or(file.threads),
        cap: flags.cap.or(file.cap),
        comparator: flags.comparator.or(file.comparator),
    };

    let mut problems = Vec::new();
    if cfg.out.as_os_str().is_empty() {
        problems.push("--out is required".to_string());
    }
    if cfg.spec.is_some() && cfg.system.is_some() {
        problems.push("--spec and --system are mutually exclusive".to_string());
    }
    if let Some(dt) = cfg.dt.iter().find(|dt| !(**dt > 0.0 && dt.is_finite())) {
        problems.push(format!("--dt must be positive and finite, got {dt}"));
    }
    if cfg.steps.contains(&0) {
        problems.push("--steps must be at least 1".to_string());
    }
    if cfg.copies.contains(&0) {
        problems.push("--copies must be at least 1".to_string());
    }
    if let Some(eps) = cfg.eps {
        if !(eps > 0.0 && eps < 1.0) {
            problems.push(format!("--eps must lie in (0, 1), got {eps}"));
        }
    }
    if cfg.threads == Some(0) {
        problems.push("--threads must be at least 1".to_string());
    }
    if cfg.cap == Some(0) {
        problems.push("--cap must be at least 1".to_string());
    }
    if let Some(c) = &cfg.comparator {
        if !["target_only", "role_complete", "both"].contains(&c.as_str()) {
            problems.push(format!("--comparator must be target_only, role_complete or both, got `{c}`"));
        }
    }
    if single_grid {
        if cfg.dt.len() > 1 {
            problems.push("--dt takes a single value here".to_string());
        }
        if cfg.steps.len() > 1 {
            problems.push("--steps takes a single value here".to_string());
        }
    }
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(format!("invalid configuration: {}", problems.join("; ")))
    }
}

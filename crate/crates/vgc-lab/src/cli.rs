//! Config ingestion, experiment execution, and CSV emission for the
//! command-line front end.
//!
//! Configs are JSON; results are CSV with the fixed header
//! `scenario,n,policy_class,theta_id,estimator,h,mean,bias,variance,std_err,replications,seed,runtime_ms`
//! (sweeps append `axis_value`). Floating values are printed with 9
//! significant digits and rows are sorted, so a run's bytes depend only on
//! the config and master seed, never on worker count or timing. The
//! `runtime_ms` column is pinned to zero for that reason; wall-clock timing
//! goes to stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::check::{CheckReport, run_checks};
use crate::experiments::{
    AggregateStats, EstimatorKind, ExperimentError, HPolicy, Scenario, ScenarioKind, SweepAxis,
    run_replications, sweep,
};
use crate::model::FdOrder;
use crate::policies::AffinePolicy;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Invalid(_)
            | ExperimentError::Model(_)
            | ExperimentError::Policy(_) => CliError::Config(e.to_string()),
            ExperimentError::Replication { .. } => CliError::Runtime(e.to_string()),
        }
    }
}

/// Scenario reference: a predefined name or an inline generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Named(String),
    Inline(ScenarioKind),
}

fn default_policies() -> Vec<AffinePolicy> {
    vec![AffinePolicy::Saa]
}

fn default_h_policy() -> HPolicy {
    HPolicy::InvSixthRoot
}

fn default_folds() -> usize {
    3
}

fn default_order() -> u8 {
    2
}

fn default_draws() -> usize {
    256
}

/// JSON run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioRef,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_policies")]
    pub policies: Vec<AffinePolicy>,
    pub estimators: Vec<String>,
    #[serde(default = "default_h_policy")]
    pub h_policy: HPolicy,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_order")]
    pub order: u8,
    #[serde(default = "default_draws")]
    pub draws: usize,
    pub replications: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Command-line overrides taking precedence over config fields.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    config_from_str(&text)
}

pub fn config_from_str(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))
}

fn named_scenario(name: &str) -> Result<ScenarioKind, CliError> {
    match name {
        "figure1" => Ok(ScenarioKind::SelectionToy {
            n: 100,
            plus_count: 14,
            per_sample_variance: 2.0,
            s_samples: Some(3),
        }),
        other => Err(CliError::Config(format!(
            "field 'scenario': unknown scenario name '{other}' (known: figure1)"
        ))),
    }
}

/// Resolve a config (plus overrides) into a runnable scenario.
pub fn build_scenario(cfg: &RunConfig, overrides: &Overrides) -> Result<Scenario, CliError> {
    let (kind, default_name) = match &cfg.scenario {
        ScenarioRef::Named(name) => (named_scenario(name)?, name.clone()),
        ScenarioRef::Inline(kind) => (kind.clone(), "custom".to_string()),
    };
    let estimators: Vec<EstimatorKind> = cfg
        .estimators
        .iter()
        .map(|name| {
            EstimatorKind::parse(name).ok_or_else(|| {
                CliError::Config(format!(
                    "field 'estimators': unknown estimator name '{name}'"
                ))
            })
        })
        .collect::<Result<_, _>>()?;
    if estimators.is_empty() {
        return Err(CliError::Config(
            "field 'estimators': at least one estimator required".into(),
        ));
    }
    let order = match cfg.order {
        1 => FdOrder::First,
        2 => FdOrder::Second,
        other => {
            return Err(CliError::Config(format!(
                "field 'order': must be 1 or 2, got {other}"
            )));
        }
    };
    if cfg.replications == 0 {
        return Err(CliError::Config(
            "field 'replications': must be >= 1".into(),
        ));
    }
    let master_seed = overrides
        .seed
        .or(cfg.seed)
        .ok_or_else(|| CliError::Config("field 'seed': required (pass --seed or set it)".into()))?;
    Ok(Scenario {
        name: cfg.name.clone().unwrap_or(default_name),
        kind,
        policies: cfg.policies.clone(),
        estimators,
        h_policy: cfg.h_policy,
        folds: cfg.folds,
        order,
        draws: cfg.draws,
        replications: cfg.replications,
        master_seed,
        snr_override: None,
    })
}

pub fn resolve_workers(cfg: &RunConfig, overrides: &Overrides) -> usize {
    overrides
        .workers
        .or(cfg.workers)
        .or_else(|| {
            std::env::var("VGC_LAB_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0)
}

/// Nine significant digits, reproducible parse round-trip.
fn fmt_g9(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.8e}")
    }
}

pub const CSV_HEADER: &str = "scenario,n,policy_class,theta_id,estimator,h,mean,bias,variance,std_err,replications,seed,runtime_ms";

/// Render aggregates as CSV. `axis` adds the sweep column.
pub fn render_csv(points: &[(Option<f64>, &AggregateStats)]) -> String {
    let sweep_mode = points.iter().any(|(a, _)| a.is_some());
    let mut rows: Vec<(String, String, usize, u64, String)> = Vec::new();
    for (axis, stats) in points {
        for cell in &stats.cells {
            let mut line = String::new();
            write!(
                line,
                "{},{},{},{},{},{},{},{},{},{},{},{},0",
                stats.scenario,
                stats.n,
                cell.key.policy_class,
                cell.key.theta_id,
                cell.key.estimator,
                fmt_g9(stats.h),
                fmt_g9(cell.mean),
                fmt_g9(cell.bias),
                fmt_g9(cell.variance),
                fmt_g9(cell.std_err),
                cell.count,
                stats.seed,
            )
            .unwrap();
            if sweep_mode {
                write!(line, ",{}", fmt_g9(axis.unwrap_or(f64::NAN))).unwrap();
            }
            rows.push((
                stats.scenario.clone(),
                cell.key.estimator.clone(),
                cell.key.theta_id,
                axis.map(|a| a.to_bits()).unwrap_or(0),
                line,
            ));
        }
    }
    rows.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    let mut out = String::from(CSV_HEADER);
    if sweep_mode {
        out.push_str(",axis_value");
    }
    out.push('\n');
    for (_, _, _, _, line) in rows {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn write_output(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug)]
pub struct RunSummary {
    pub rows: usize,
    pub output: PathBuf,
    pub csv: String,
}

fn output_path(cfg: &RunConfig, overrides: &Overrides) -> Result<PathBuf, CliError> {
    overrides
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| CliError::Config("field 'output': required (pass --out or set it)".into()))
}

/// Run one scenario and write its CSV.
pub fn cmd_run(cfg: &RunConfig, overrides: &Overrides) -> Result<RunSummary, CliError> {
    let scenario = build_scenario(cfg, overrides)?;
    let workers = resolve_workers(cfg, overrides);
    let out = output_path(cfg, overrides)?;
    let stats = run_replications(&scenario, workers)?;
    let csv = render_csv(&[(None, &stats)]);
    write_output(&out, &csv)?;
    Ok(RunSummary {
        rows: stats.cells.len(),
        output: out,
        csv,
    })
}

/// Run a sweep over one axis and write the combined CSV.
pub fn cmd_sweep(
    cfg: &RunConfig,
    axis_name: &str,
    grid_text: &str,
    overrides: &Overrides,
) -> Result<RunSummary, CliError> {
    let axis = SweepAxis::parse(axis_name).ok_or_else(|| {
        CliError::Config(format!(
            "field 'axis': unknown axis '{axis_name}' (h, n, folds, snr)"
        ))
    })?;
    let grid: Vec<f64> = grid_text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("field 'grid': bad value '{s}': {e}")))
        })
        .collect::<Result<_, _>>()?;
    if grid.is_empty() {
        return Err(CliError::Config(
            "field 'grid': at least one value required".into(),
        ));
    }
    let scenario = build_scenario(cfg, overrides)?;
    let workers = resolve_workers(cfg, overrides);
    let out = output_path(cfg, overrides)?;
    let points = sweep(&scenario, axis, &grid, workers)?;
    let rendered: Vec<(Option<f64>, &AggregateStats)> = points
        .iter()
        .map(|p| (Some(p.axis_value), &p.stats))
        .collect();
    let csv = render_csv(&rendered);
    write_output(&out, &csv)?;
    Ok(RunSummary {
        rows: points.iter().map(|p| p.stats.cells.len()).sum(),
        output: out,
        csv,
    })
}

/// Run the fast invariant suite.
pub fn cmd_check(seed: u64, cases: usize) -> CheckReport {
    run_checks(seed, cases)
}

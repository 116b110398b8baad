//! Adaptive spacing against the fixed-spacing baseline from the same start.

use crate::error::{FlockError, Result};
use crate::metrics::MetricsSnapshot;
use crate::scenario::ScenarioConfig;
use crate::sim::{run, RunError, SimTrace, SpacingPolicy};

/// Threshold used by the CLI and the acceptance suite.
pub const DEFAULT_THRESHOLD: f64 = 0.01;

#[derive(Debug)]
pub struct CompareReport {
    pub flexible: SimTrace,
    pub baseline: SimTrace,
    pub threshold: f64,
    /// First recorded time with `E_ASP < threshold` under adaptive spacing.
    pub flexible_time: Option<f64>,
    /// First recorded time with `E < threshold` under fixed spacing.
    pub baseline_time: Option<f64>,
}

impl CompareReport {
    /// Strict ordering; a run that never crosses counts as infinitely slow.
    pub fn flexible_faster(&self) -> bool {
        match (self.flexible_time, self.baseline_time) {
            (Some(a), Some(b)) => a < b,
            (Some(_), None) => true,
            (None, _) => false,
        }
    }
}

pub fn time_to_threshold(trace: &SimTrace, metric: impl Fn(&MetricsSnapshot) -> f64, threshold: f64) -> Option<f64> {
    trace.samples.iter().find(|s| metric(&s.metrics) < threshold).map(|s| s.t)
}

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error(transparent)]
    Config(#[from] FlockError),
    #[error("{which} run failed: {source}")]
    Run { which: &'static str, source: RunError },
}

pub fn compare(cfg: &ScenarioConfig, threshold: f64) -> std::result::Result<CompareReport, CompareError> {
    if cfg.is_dynamic() {
        return Err(FlockError::InvalidArgument("compare needs a static topology".into()).into());
    }
    let run_policy = |policy, which| -> std::result::Result<SimTrace, CompareError> {
        let (sim, state) = cfg.build(policy)?;
        run(&sim, state).map_err(|source| CompareError::Run { which, source })
    };
    let flexible = run_policy(SpacingPolicy::Adaptive, "flexible")?;
    let baseline = run_policy(SpacingPolicy::Fixed, "baseline")?;
    Ok(CompareReport {
        flexible_time: time_to_threshold(&flexible, |m| m.e_asp, threshold),
        baseline_time: time_to_threshold(&baseline, |m| m.e_dev, threshold),
        flexible,
        baseline,
        threshold,
    })
}

/// Both energy series on the shared sample grid.
pub fn energy_rows(report: &CompareReport) -> Result<Vec<[f64; 4]>> {
    if report.flexible.samples.len() != report.baseline.samples.len() {
        return Err(FlockError::InvalidArgument("flexible and baseline traces are not aligned".into()));
    }
    Ok(report
        .flexible
        .samples
        .iter()
        .zip(&report.baseline.samples)
        .map(|(f, b)| [f.t, f.metrics.e_dev, f.metrics.e_asp, b.metrics.e_dev])
        .collect())
}

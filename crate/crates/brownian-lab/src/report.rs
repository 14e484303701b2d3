//! Verification suites: each one samples an ensemble per the run config,
//! runs a batch of statistical checks, and aggregates them into a single
//! machine-readable report with the config echoed back.

use crate::brownian::{
    holder_divergence_profile, sample_increments, transform, BrownianError, DyadicGrid, Grid,
    PathEnsemble, TransformSpec,
};
use crate::kc_bounds::KcError;
use crate::stats::{self, StatsError, TestReport};
use serde::Serialize;

pub const SUITES: &[&str] =
    &["cov", "moments", "scaling", "markov", "inversion", "drift", "holder"];

/// Levels swept by the holder suite; count stays configurable because the
/// sweep cost grows with 2^level.
pub const HOLDER_LEVELS: &[u32] = &[8, 10, 12, 14];

/// Reciprocal-closed times used by the inversion suite.
pub const INVERSION_TIMES: &[f64] = &[0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("unknown suite '{0}'")]
    UnknownSuite(String),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Brownian(#[from] BrownianError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Kc(#[from] KcError),
}

/// Echoed into every report. Defaults: seed 0, count 10^5, level 10,
/// horizon 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub count: usize,
    pub level: u32,
    pub horizon: f64,
    pub out: Option<String>,
    pub format: String,
    pub threads: usize,
    pub version: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            count: 100_000,
            level: 10,
            horizon: 1.0,
            out: None,
            format: "json".into(),
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub config: RunConfig,
    pub tests: Vec<TestReport>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(suite: &str, config: &RunConfig, tests: Vec<TestReport>) -> Self {
        let pass = tests.iter().all(|t| t.pass);
        SuiteReport { suite: suite.into(), config: config.clone(), tests, pass }
    }

    /// Fixed field order, UTF-8, newline-terminated.
    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn run_suite(name: &str, config: &RunConfig) -> Result<SuiteReport, ReportError> {
    match name {
        "cov" => cov_suite(config),
        "moments" => moments_suite(config),
        "scaling" => scaling_suite(config),
        "markov" => markov_suite(config),
        "inversion" => inversion_suite(config),
        "drift" => drift_suite(config),
        "holder" => holder_suite(config),
        other => Err(ReportError::UnknownSuite(other.into())),
    }
}

fn dyadic_ensemble(config: &RunConfig) -> Result<PathEnsemble, ReportError> {
    let grid = Grid::Dyadic(DyadicGrid::new(config.level, config.horizon)?);
    Ok(sample_increments(&grid, config.seed, config.count))
}

/// Covariance entries for every unordered pair of positive grid times,
/// against min(s, t) with the Isserlis 5-sigma band
/// 5 sqrt((st + min^2)/count).
fn cov_entries(
    ensemble: &PathEnsemble,
    prefix: &str,
    seed: u64,
) -> Result<Vec<TestReport>, ReportError> {
    let idx: Vec<usize> =
        (0..ensemble.times().len()).filter(|&j| ensemble.times()[j] > 0.0).collect();
    if idx.len() < 2 {
        return Err(ReportError::BadConfig("need at least two positive grid times".into()));
    }
    let times: Vec<f64> = idx.iter().map(|&j| ensemble.times()[j]).collect();
    let cov = stats::empirical_cov(&ensemble.columns(&idx))?;
    let count = ensemble.count();
    let mut tests = Vec::new();
    for (a, &s) in times.iter().enumerate() {
        for (b, &t) in times.iter().enumerate().skip(a) {
            let target = s.min(t);
            let tolerance = 5.0 * ((s * t + target * target) / count as f64).sqrt();
            tests.push(
                TestReport::from_estimate(
                    format!("{prefix}({s},{t})"),
                    cov[a][b],
                    target,
                    tolerance,
                    count,
                )
                .with_seed(seed),
            );
        }
    }
    Ok(tests)
}

pub fn cov_suite(config: &RunConfig) -> Result<SuiteReport, ReportError> {
    let ensemble = dyadic_ensemble(config)?;
    let tests = cov_entries(&ensemble, "cov", config.seed)?;
    Ok(SuiteReport::new("cov", config, tests))
}

/// Fourth-moment ratio per grid pair; E Z^4 = 3 with Var Z^4 = 96, so the
/// 5-sigma band is 5 sqrt(96/count).
pub fn moments_suite(config: &RunConfig) -> Result<SuiteReport, ReportError> {
    let ensemble = dyadic_ensemble(config)?;
    let times = ensemble.times();
    let count = ensemble.count();
    let tolerance = 5.0 * (96.0 / count as f64).sqrt();
    let mut tests = Vec::new();
    for j in 0..times.len() {
        for k in (j + 1)..times.len() {
            let dt = times[k] - times[j];
            let mean = ensemble
                .paths()
                .iter()
                .map(|p| {
                    let d = p[k] - p[j];
                    let s = d * d;
                    s * s
                })
                .sum::<f64>()
                / count as f64;
            tests.push(
                TestReport::from_estimate(
                    format!("m4({},{})", times[j], times[k]),
                    mean / (dt * dt),
                    3.0,
                    tolerance,
                    count,
                )
                .with_seed(config.seed),
            );
        }
    }
    Ok(SuiteReport::new("moments", config, tests))
}

/// B_{ct}/sqrt(c) at c = 4 must pass the same covariance test as raw paths.
pub fn scaling_suite(config: &RunConfig) -> Result<SuiteReport, ReportError> {
    let ensemble = dyadic_ensemble(config)?;
    let scaled = transform(&ensemble, TransformSpec::Scaling { c: 4.0 })?;
    let tests = cov_entries(&scaled, "scaled_cov", config.seed)?;
    Ok(SuiteReport::new("scaling", config, tests))
}

/// Weak Markov at t0 = horizon/2: pre-t0 values are uncorrelated with
/// post-t0 increments (which certifies independence for jointly Gaussian
/// vectors), one disjoint increment pair passes the ECF factorization test,
/// and the shifted process is again Brownian in covariance.
pub fn markov_suite(config: &RunConfig) -> Result<SuiteReport, ReportError> {
    if config.level == 0 {
        return Err(ReportError::BadConfig("markov suite needs level >= 1".into()));
    }
    let ensemble = dyadic_ensemble(config)?;
    let t0 = config.horizon * 0.5;
    let times = ensemble.times();
    let pre: Vec<usize> = (0..times.len()).filter(|&j| times[j] > 0.0 && times[j] <= t0).collect();
    let post: Vec<usize> = (0..times.len()).filter(|&j| times[j] > t0).collect();
    let j0 = pre[pre.len() - 1];
    let samples: Vec<Vec<f64>> = ensemble
        .paths()
        .iter()
        .map(|p| {
            let mut row: Vec<f64> = pre.iter().map(|&j| p[j]).collect();
            row.extend(post.iter().map(|&j| p[j] - p[j0]));
            row
        })
        .collect();
    let left: Vec<usize> = (0..pre.len()).collect();
    let right: Vec<usize> = (pre.len()..pre.len() + post.len()).collect();
    let mut cov_zero = stats::gaussian_cov_independence_test(&samples, &left, &right)?;
    cov_zero.name = format!("markov_cross_cov(t0={t0})");
    cov_zero.seed = config.seed;

    let probes = stats::ProbeSet::default_for_dim(1);
    let xs: Vec<Vec<f64>> = ensemble.paths().iter().map(|p| vec![p[j0]]).collect();
    let last = times.len() - 1;
    let ys: Vec<Vec<f64>> = ensemble.paths().iter().map(|p| vec![p[last] - p[j0]]).collect();
    let mut ecf = stats::independence_ecf_test(&xs, &ys, &probes, &probes)?;
    ecf.name = "disjoint_increments_ecf".into();
    ecf.seed = config.seed;

    let shifted = transform(&ensemble, TransformSpec::Shift { t0 })?;
    let mut tests = vec![cov_zero, ecf];
    tests.extend(cov_entries(&shifted, "shifted_cov", config.seed)?);
    Ok(SuiteReport::new("markov", config, tests))
}

/// t B_{1/t} on a reciprocal-closed grid must pass the covariance test.
pub fn inversion_suite(config: &RunConfig) -> Result<SuiteReport, ReportError> {
    let grid = Grid::explicit(INVERSION_TIMES.to_vec())?;
    let ensemble = sample_increments(&grid, config.seed, config.count);
    let inverted = transform(&ensemble, TransformSpec::Inversion)?;
    let tests = cov_entries(&inverted, "inverted_cov", config.seed)?;
    Ok(SuiteReport::new("inversion", config, tests))
}

/// Fraction of paths with |B_T/T| > 0.5 at T = 100; Var(B_T/T) = 1/T makes
/// that a 5-sigma event, so the fraction must sit below 0.01.
pub fn drift_suite(config: &RunConfig) -> Result<SuiteReport, ReportError> {
    let grid = Grid::explicit(vec![100.0])?;
    let ensemble = sample_increments(&grid, config.seed, config.count);
    let ratio = transform(&ensemble, TransformSpec::DriftRatio)?;
    let frac = ratio.paths().iter().filter(|p| p[0].abs() > 0.5).count() as f64
        / ratio.count() as f64;
    let test = TestReport::from_estimate("drift_ratio_tail(T=100)", frac, 0.0, 0.01, config.count)
        .with_seed(config.seed);
    Ok(SuiteReport::new("drift", config, vec![test]))
}

pub fn holder_suite(config: &RunConfig) -> Result<SuiteReport, ReportError> {
    holder_suite_with_levels(config, HOLDER_LEVELS)
}

/// Median sup ratios per level for beta on both sides of 1/2: above it the
/// medians must grow strictly with the level, below it the last/first ratio
/// stays under 1.5.
pub fn holder_suite_with_levels(
    config: &RunConfig,
    levels: &[u32],
) -> Result<SuiteReport, ReportError> {
    if levels.len() < 2 {
        return Err(ReportError::BadConfig("holder suite needs at least two levels".into()));
    }
    let mut tests = Vec::new();
    for &(beta, verdict) in &[(0.55, "increasing"), (0.45, "stable")] {
        let medians =
            holder_divergence_profile(config.horizon, levels, config.count, beta, config.seed)?;
        for (level, median) in levels.iter().zip(&medians) {
            tests.push(
                TestReport::from_estimate(
                    format!("holder_median(beta={beta},level={level})"),
                    *median,
                    *median,
                    0.0,
                    config.count,
                )
                .with_seed(config.seed),
            );
        }
        let entry = match verdict {
            "increasing" => {
                let strict = medians.windows(2).all(|w| w[1] > w[0]);
                TestReport::from_estimate(
                    format!("holder_strictly_increasing(beta={beta})"),
                    if strict { 1.0 } else { 0.0 },
                    1.0,
                    0.0,
                    config.count,
                )
            }
            _ => TestReport::from_estimate(
                format!("holder_growth_ratio(beta={beta})"),
                medians[medians.len() - 1] / medians[0],
                0.0,
                1.5,
                config.count,
            ),
        };
        tests.push(entry.with_seed(config.seed));
    }
    Ok(SuiteReport::new("holder", config, tests))
}

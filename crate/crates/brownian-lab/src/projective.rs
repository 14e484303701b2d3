//! The Brownian projective family on finite time sets: min-kernel covariance
//! matrices, the Gram-integral identity that witnesses their positive
//! semidefiniteness, and exact plus Monte Carlo projectivity checks. Times
//! are held as exact rationals so projectivity is an identity, not a
//! tolerance.

use crate::exact::{rat_from_f64, rat_to_f64, Rat};
use crate::gaussian::{sample, CovarianceMatrix, GaussianMeasure, MeanVector};
use crate::stats::{ecf_gaussian_test, ProbeSet, TestReport};
use num_traits::Zero;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProjectiveError {
    #[error("time list must be nonempty")]
    Empty,
    #[error("time {0} is negative")]
    NegativeTime(String),
    #[error("times must be strictly increasing at position {0}")]
    NotSorted(usize),
    #[error("time is not finite")]
    NonFinite,
    #[error("coefficient vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("requested times are not a subset of the parent times")]
    NotASubset,
    #[error("could not parse time {0:?}")]
    Parse(String),
}

/// Strictly increasing nonnegative times, exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimePoints {
    times: Vec<Rat>,
}

impl TimePoints {
    pub fn from_rats(times: Vec<Rat>) -> Result<Self, ProjectiveError> {
        if times.is_empty() {
            return Err(ProjectiveError::Empty);
        }
        if let Some(t) = times.iter().find(|t| t < &&Rat::zero()) {
            return Err(ProjectiveError::NegativeTime(t.to_string()));
        }
        if let Some(i) = times.windows(2).position(|w| w[0] >= w[1]) {
            return Err(ProjectiveError::NotSorted(i + 1));
        }
        Ok(TimePoints { times })
    }

    /// Each double embeds exactly as a rational; no rounding happens here.
    pub fn from_f64s(times: &[f64]) -> Result<Self, ProjectiveError> {
        let rats = times
            .iter()
            .map(|&t| rat_from_f64(t).ok_or(ProjectiveError::NonFinite))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rats(rats)
    }

    pub fn rats(&self) -> &[Rat] {
        &self.times
    }

    pub fn as_f64s(&self) -> Vec<f64> {
        self.times.iter().map(rat_to_f64).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Positions of `subset` inside `self`, or None if not a subset.
    pub fn positions_of(&self, subset: &TimePoints) -> Option<Vec<usize>> {
        subset
            .times
            .iter()
            .map(|t| self.times.binary_search(t).ok())
            .collect()
    }

    /// Comma-separated times, e.g. "0.5,1.5,3".
    pub fn parse(text: &str) -> Result<Self, ProjectiveError> {
        let times = text
            .split(',')
            .map(|cell| {
                let cell = cell.trim();
                crate::exact::parse_rat(cell).map_err(|_| ProjectiveError::Parse(cell.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rats(times)
    }
}

impl fmt::Display for TimePoints {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.times.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// Exact min-kernel matrix: entry (i,j) is min(t_i, t_j).
pub fn min_kernel_exact(times: &TimePoints) -> Vec<Vec<Rat>> {
    let ts = times.rats();
    ts.iter()
        .map(|ti| ts.iter().map(|tj| ti.min(tj).clone()).collect())
        .collect()
}

/// Min-kernel matrix as a validated covariance matrix (floats).
pub fn min_kernel_cov(times: &TimePoints) -> CovarianceMatrix {
    let rows: Vec<Vec<f64>> = min_kernel_exact(times)
        .iter()
        .map(|row| row.iter().map(rat_to_f64).collect())
        .collect();
    CovarianceMatrix::new(&rows).expect("min kernel is symmetric PSD")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramCheck {
    pub quadratic_form: f64,
    pub piecewise_integral: f64,
    /// Exact rational equality of the two sides.
    pub equal: bool,
}

/// a' C_J a against the integral of (sum_i a_i 1_[0,t_i])^2 over the
/// partition induced by the times. The indicator sum is constant on each
/// segment (t_{k-1}, t_k], where it equals the tail sum of the coefficients,
/// so both sides evaluate exactly in rational arithmetic.
pub fn gram_identity_check(
    times: &TimePoints,
    coefficients: &[f64],
) -> Result<GramCheck, ProjectiveError> {
    let n = times.len();
    if coefficients.len() != n {
        return Err(ProjectiveError::DimensionMismatch { expected: n, got: coefficients.len() });
    }
    let a: Vec<Rat> = coefficients
        .iter()
        .map(|&c| rat_from_f64(c).ok_or(ProjectiveError::NonFinite))
        .collect::<Result<_, _>>()?;
    let kernel = min_kernel_exact(times);
    let mut quad = Rat::zero();
    for i in 0..n {
        for j in 0..n {
            quad += &a[i] * &a[j] * &kernel[i][j];
        }
    }
    let ts = times.rats();
    let mut integral = Rat::zero();
    let mut prev = Rat::zero();
    for k in 0..n {
        let tail: Rat = a[k..].iter().fold(Rat::zero(), |acc, c| acc + c);
        integral += (&ts[k] - &prev) * (&tail * &tail);
        prev = ts[k].clone();
    }
    Ok(GramCheck {
        quadratic_form: rat_to_f64(&quad),
        piecewise_integral: rat_to_f64(&integral),
        equal: quad == integral,
    })
}

/// A Brownian finite-dimensional distribution N(0, C_J).
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianFdd {
    times: TimePoints,
    measure: GaussianMeasure,
}

impl BrownianFdd {
    pub fn new(times: TimePoints) -> Self {
        let cov = min_kernel_cov(&times);
        let measure = GaussianMeasure::new(MeanVector::zeros(times.len()), cov)
            .expect("dimensions match by construction");
        BrownianFdd { times, measure }
    }

    pub fn times(&self) -> &TimePoints {
        &self.times
    }

    pub fn measure(&self) -> &GaussianMeasure {
        &self.measure
    }

    pub fn sample(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        sample(&self.measure, seed, count)
    }
}

/// Restriction to a subset of times. The submatrix of the parent min-kernel
/// at the subset positions coincides exactly with the fresh min-kernel of the
/// subset; this identity is asserted, making projectivity machine-checked on
/// every call.
pub fn project(fdd: &BrownianFdd, subset: &TimePoints) -> Result<BrownianFdd, ProjectiveError> {
    let positions = fdd.times.positions_of(subset).ok_or(ProjectiveError::NotASubset)?;
    let parent = min_kernel_exact(&fdd.times);
    let fresh = min_kernel_exact(subset);
    for (bi, &pi) in positions.iter().enumerate() {
        for (bj, &pj) in positions.iter().enumerate() {
            assert_eq!(
                parent[pi][pj], fresh[bi][bj],
                "projectivity identity violated; min-kernel is inconsistent"
            );
        }
    }
    Ok(BrownianFdd::new(subset.clone()))
}

/// Ten deterministic probes: alternating axis directions and the diagonal,
/// scales 0.2 k for k = 1..10.
fn mc_probes(d: usize) -> ProbeSet {
    let diag = 1.0 / (d as f64).sqrt();
    let probes = (0..10)
        .map(|k| {
            let scale = 0.2 * (k + 1) as f64;
            if k % 2 == 0 {
                let mut p = vec![0.0; d];
                p[(k / 2) % d] = scale;
                p
            } else {
                vec![scale * diag; d]
            }
        })
        .collect();
    ProbeSet::new(probes).expect("probe norms bounded by 2")
}

/// Monte Carlo projectivity: sample N(0, C_J), discard the coordinates
/// outside the subset, and compare the ECF of what remains against the given
/// target law at 10 fixed probes.
pub fn verify_marginal_against(
    times: &TimePoints,
    subset: &TimePoints,
    target: &GaussianMeasure,
    seed: u64,
    count: usize,
) -> Result<TestReport, ProjectiveError> {
    let fdd = BrownianFdd::new(times.clone());
    let positions = times.positions_of(subset).ok_or(ProjectiveError::NotASubset)?;
    let draws = fdd.sample(seed, count);
    let restricted: Vec<Vec<f64>> =
        draws.iter().map(|d| positions.iter().map(|&p| d[p]).collect()).collect();
    let report = ecf_gaussian_test(&restricted, target, &mc_probes(subset.len()))
        .expect("dimensions match by construction");
    Ok(TestReport { name: "projective_mc".into(), ..report }.with_seed(seed))
}

pub fn verify_projective_mc(
    times: &TimePoints,
    subset: &TimePoints,
    seed: u64,
    count: usize,
) -> Result<TestReport, ProjectiveError> {
    let target = BrownianFdd::new(subset.clone());
    verify_marginal_against(times, subset, target.measure(), seed, count)
}

//! Empirical verification oracles: empirical characteristic functions,
//! covariance estimation, and fixed-threshold independence tests. Thresholds
//! trace back to variance bounds (5 sigma per probe, Isserlis for covariance
//! entries), never tuned to make a particular run pass.

use crate::gaussian::{charfun, GaussianMeasure};
use crate::tol::{COV_SIGMA_FACTOR, ECF_SIGMA_FACTOR, INDEP_SIGMA_FACTOR};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("sample set is empty or too small (need {need}, got {got})")]
    EmptySample { need: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("probe set invalid: {0}")]
    BadProbes(String),
    #[error("bad index split: {0}")]
    BadSplit(String),
}

/// Finite probe collection standing in for the full characteristic function.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    probes: Vec<Vec<f64>>,
}

impl ProbeSet {
    pub const MAX_NORM: f64 = 10.0;

    pub fn new(probes: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        if probes.is_empty() {
            return Err(StatsError::BadProbes("empty probe set".into()));
        }
        for p in &probes {
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() || norm > Self::MAX_NORM {
                return Err(StatsError::BadProbes(format!("probe norm {norm} out of range")));
            }
        }
        Ok(ProbeSet { probes })
    }

    /// Axis unit vectors and the diagonal (1,..,1)/sqrt(d), each scaled by
    /// 0.5, 1, and 2; 3(d+1) probes in total.
    pub fn default_for_dim(d: usize) -> Self {
        assert!(d >= 1);
        let mut probes = Vec::new();
        let diag = 1.0 / (d as f64).sqrt();
        for scale in [0.5, 1.0, 2.0] {
            for i in 0..d {
                let mut p = vec![0.0; d];
                p[i] = scale;
                probes.push(p);
            }
            probes.push(vec![scale * diag; d]);
        }
        ProbeSet { probes }
    }

    pub fn probes(&self) -> &[Vec<f64>] {
        &self.probes
    }

    pub fn dim(&self) -> usize {
        self.probes[0].len()
    }
}

/// One verdict; `pass` holds exactly when |estimate - target| <= tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub estimate: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub count: usize,
    pub seed: u64,
}

impl TestReport {
    pub fn from_estimate(
        name: impl Into<String>,
        estimate: f64,
        target: f64,
        tolerance: f64,
        count: usize,
    ) -> Self {
        TestReport {
            name: name.into(),
            estimate,
            target,
            tolerance,
            pass: (estimate - target).abs() <= tolerance,
            count,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// (1/count) sum of exp(i <t, x_k>).
pub fn ecf(samples: &[Vec<f64>], probe: &[f64]) -> Result<Complex64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample { need: 1, got: 0 });
    }
    if samples[0].len() != probe.len() {
        return Err(StatsError::DimensionMismatch { expected: samples[0].len(), got: probe.len() });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for x in samples {
        let dot: f64 = probe.iter().zip(x).map(|(a, b)| a * b).sum();
        acc += Complex64::new(0.0, dot).exp();
    }
    Ok(acc / samples.len() as f64)
}

/// Max over probes of |ecf - charfun(g, .)|, thresholded at 5/sqrt(count).
pub fn ecf_gaussian_test(
    samples: &[Vec<f64>],
    g: &GaussianMeasure,
    probes: &ProbeSet,
) -> Result<TestReport, StatsError> {
    if probes.dim() != g.dim() {
        return Err(StatsError::DimensionMismatch { expected: g.dim(), got: probes.dim() });
    }
    let count = samples.len();
    let mut worst = 0.0f64;
    for p in probes.probes() {
        let empirical = ecf(samples, p)?;
        let exact = charfun(g, p)
            .map_err(|_| StatsError::DimensionMismatch { expected: g.dim(), got: p.len() })?;
        worst = worst.max((empirical - exact).norm());
    }
    let tolerance = ECF_SIGMA_FACTOR / (count as f64).sqrt();
    Ok(TestReport::from_estimate("ecf_gaussian", worst, 0.0, tolerance, count))
}

/// Unbiased sample covariance (count - 1 in the denominator).
pub fn empirical_cov(samples: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, StatsError> {
    let count = samples.len();
    if count < 2 {
        return Err(StatsError::EmptySample { need: 2, got: count });
    }
    let d = samples[0].len();
    let mut mean = vec![0.0f64; d];
    for x in samples {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= count as f64;
    }
    let mut cov = vec![vec![0.0f64; d]; d];
    for x in samples {
        for i in 0..d {
            let di = x[i] - mean[i];
            for j in i..d {
                cov[i][j] += di * (x[j] - mean[j]);
            }
        }
    }
    let denom = (count - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= denom;
            cov[j][i] = cov[i][j];
        }
    }
    Ok(cov)
}

fn ecf_joint(
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    s: &[f64],
    t: &[f64],
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dot: f64 = s.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            + t.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        acc += Complex64::new(0.0, dot).exp();
    }
    acc / xs.len() as f64
}

/// Factorization check: the joint ECF against the product of the marginal
/// ECFs, max over all probe pairs, thresholded at 10/sqrt(count).
pub fn independence_ecf_test(
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    probes_x: &ProbeSet,
    probes_y: &ProbeSet,
) -> Result<TestReport, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::BadSplit(format!(
            "unpaired samples: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    let count = xs.len();
    if count == 0 {
        return Err(StatsError::EmptySample { need: 1, got: 0 });
    }
    let mut worst = 0.0f64;
    for s in probes_x.probes() {
        let ex = ecf(xs, s)?;
        for t in probes_y.probes() {
            let ey = ecf(ys, t)?;
            let joint = ecf_joint(xs, ys, s, t);
            worst = worst.max((joint - ex * ey).norm());
        }
    }
    let tolerance = INDEP_SIGMA_FACTOR / (count as f64).sqrt();
    Ok(TestReport::from_estimate("independence_ecf", worst, 0.0, tolerance, count))
}

/// Standardized max cross-covariance between the two index blocks. Under
/// independence each entry has sd sqrt(Var(U)Var(V) + Cov(U,V)^2) / sqrt(count)
/// (Isserlis), so the max |z| is compared against 5. For jointly Gaussian
/// vectors vanishing cross-covariance certifies independence of the blocks.
pub fn gaussian_cov_independence_test(
    samples: &[Vec<f64>],
    left: &[usize],
    right: &[usize],
) -> Result<TestReport, StatsError> {
    let count = samples.len();
    if count < 2 {
        return Err(StatsError::EmptySample { need: 2, got: count });
    }
    let d = samples[0].len();
    if left.is_empty() || right.is_empty() {
        return Err(StatsError::BadSplit("both index blocks must be nonempty".into()));
    }
    for &i in left.iter().chain(right) {
        if i >= d {
            return Err(StatsError::BadSplit(format!("index {i} out of range for dim {d}")));
        }
    }
    if left.iter().any(|i| right.contains(i)) {
        return Err(StatsError::BadSplit("index blocks overlap".into()));
    }
    let cov = empirical_cov(samples)?;
    let mut worst = 0.0f64;
    for &i in left {
        for &j in right {
            let c = cov[i][j];
            let var_term = cov[i][i] * cov[j][j] + c * c;
            let z = if var_term > 0.0 {
                c.abs() * (count as f64).sqrt() / var_term.sqrt()
            } else if c == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
    }
    Ok(TestReport::from_estimate("gaussian_cross_cov", worst, 0.0, COV_SIGMA_FACTOR, count))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{sample, CovarianceMatrix, GaussianMeasure, MeanVector};

    #[test]
    fn ecf_of_zero_samples() {
        let samples = vec![vec![0.0, 0.0]; 10];
        let v = ecf(&samples, &[3.0, -1.0]).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn ecf_at_probe_zero_is_exactly_one() {
        let samples = vec![vec![1.5], vec![-0.3], vec![7.0]];
        let v = ecf(&samples, &[0.0]).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn ecf_matches_standard_normal_charfun() {
        let draws = sample(&GaussianMeasure::standard(1), 11, 1_000_000);
        let v = ecf(&draws, &[1.0]).unwrap();
        assert!((v.re - (-0.5f64).exp()).abs() < 0.005, "re = {}", v.re);
        assert!(v.im.abs() < 0.005);
    }

    #[test]
    fn ecf_conjugate_symmetry_and_modulus() {
        let draws = sample(&GaussianMeasure::standard(2), 3, 500);
        for t in [[0.5, 1.0], [2.0, -1.0]] {
            let v = ecf(&draws, &t).unwrap();
            assert!(v.norm() <= 1.0 + 1e-12);
            let neg = ecf(&draws, &[-t[0], -t[1]]).unwrap();
            assert!((neg - v.conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn ecf_gaussian_self_consistency() {
        for n in 1..=4 {
            let g = GaussianMeasure::standard(n);
            let draws = sample(&g, 17 + n as u64, 10_000);
            let report = ecf_gaussian_test(&draws, &g, &ProbeSet::default_for_dim(n)).unwrap();
            assert!(report.pass, "n={n}: {report:?}");
        }
    }

    #[test]
    fn ecf_gaussian_detects_wrong_variance() {
        let wide = GaussianMeasure::new(
            MeanVector::zeros(1),
            CovarianceMatrix::new(&[vec![2.0]]).unwrap(),
        )
        .unwrap();
        let draws = sample(&wide, 5, 1_000_000);
        let probes = ProbeSet::new(vec![vec![1.0]]).unwrap();
        let report = ecf_gaussian_test(&draws, &GaussianMeasure::standard(1), &probes).unwrap();
        assert!(!report.pass);
        // Gap between exp(-1) and exp(-1/2) is about 0.2387.
        let gap = (-0.5f64).exp() - (-1.0f64).exp();
        assert!((report.estimate - gap).abs() < 0.01, "estimate {}", report.estimate);
    }

    #[test]
    fn empirical_cov_of_constant_samples() {
        let samples = vec![vec![2.0, -1.0]; 20];
        let cov = empirical_cov(&samples).unwrap();
        assert_eq!(cov, vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn empirical_cov_of_standard_normal() {
        let draws = sample(&GaussianMeasure::standard(2), 23, 100_000);
        let cov = empirical_cov(&draws).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((cov[i][j] - target).abs() < 0.02, "cov[{i}][{j}] = {}", cov[i][j]);
            }
        }
    }

    #[test]
    fn empirical_cov_of_min_kernel_pair() {
        // Covariance of (B_1, B_2): [[1,1],[1,2]].
        let g = GaussianMeasure::new(
            MeanVector::zeros(2),
            CovarianceMatrix::new(&[vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap(),
        )
        .unwrap();
        let count = 100_000;
        let cov = empirical_cov(&sample(&g, 31, count)).unwrap();
        let target = [[1.0, 1.0], [1.0, 2.0]];
        for i in 0..2 {
            for j in 0..2 {
                // Isserlis: Var of the (i,j) entry estimate is
                // (C_ii C_jj + C_ij^2) / count.
                let sd = ((target[i][i] * target[j][j]
                    + target[i][j] * target[i][j])
                    / count as f64)
                    .sqrt();
                assert!(
                    (cov[i][j] - target[i][j]).abs() < 5.0 * sd,
                    "cov[{i}][{j}] = {}",
                    cov[i][j]
                );
            }
        }
    }

    #[test]
    fn independent_coordinates_pass_ecf_test() {
        let draws = sample(&GaussianMeasure::standard(2), 41, 20_000);
        let xs: Vec<Vec<f64>> = draws.iter().map(|d| vec![d[0]]).collect();
        let ys: Vec<Vec<f64>> = draws.iter().map(|d| vec![d[1]]).collect();
        let probes = ProbeSet::default_for_dim(1);
        let report = independence_ecf_test(&xs, &ys, &probes, &probes).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn perfect_dependence_fails_ecf_test() {
        let draws = sample(&GaussianMeasure::standard(1), 43, 1_000_000);
        let probes = ProbeSet::new(vec![vec![1.0]]).unwrap();
        let report = independence_ecf_test(&draws, &draws, &probes, &probes).unwrap();
        assert!(!report.pass);
        // ecf_{(X,X)}(1,1) = E e^{2iX} = e^{-2}; product = e^{-1}.
        let gap = (-1.0f64).exp() - (-2.0f64).exp();
        assert!((report.estimate - gap).abs() < 0.01, "estimate {}", report.estimate);
    }

    #[test]
    fn constant_factor_passes_vacuously() {
        let xs = vec![vec![4.0]; 5_000];
        let ys: Vec<Vec<f64>> =
            sample(&GaussianMeasure::standard(1), 47, 5_000);
        let probes = ProbeSet::default_for_dim(1);
        let report = independence_ecf_test(&xs, &ys, &probes, &probes).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn cross_cov_test_on_independent_ensembles() {
        let a = sample(&GaussianMeasure::standard(1), 100, 50_000);
        let b = sample(&GaussianMeasure::standard(1), 200, 50_000);
        let joint: Vec<Vec<f64>> =
            a.iter().zip(&b).map(|(x, y)| vec![x[0], y[0]]).collect();
        let report = gaussian_cov_independence_test(&joint, &[0], &[1]).unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn cross_cov_test_detects_equality() {
        let a = sample(&GaussianMeasure::standard(1), 300, 10_000);
        let joint: Vec<Vec<f64>> = a.iter().map(|x| vec![x[0], x[0]]).collect();
        let report = gaussian_cov_independence_test(&joint, &[0], &[1]).unwrap();
        assert!(!report.pass);
        assert!(report.estimate > 5.0);
    }

    #[test]
    fn cross_cov_split_validation() {
        let samples = vec![vec![0.0, 1.0]; 10];
        assert!(gaussian_cov_independence_test(&samples, &[0], &[0]).is_err());
        assert!(gaussian_cov_independence_test(&samples, &[], &[1]).is_err());
        assert!(gaussian_cov_independence_test(&samples, &[0], &[5]).is_err());
    }

    #[test]
    fn false_positive_rate_is_controlled() {
        let g = GaussianMeasure::standard(2);
        let probes = ProbeSet::default_for_dim(2);
        let mut failures = 0;
        for rep in 0..100 {
            let draws = sample(&g, 1_000 + rep, 2_000);
            if !ecf_gaussian_test(&draws, &g, &probes).unwrap().pass {
                failures += 1;
            }
        }
        assert!(failures <= 5, "{failures} false positives out of 100");
    }

    #[test]
    fn probe_set_validation() {
        assert!(ProbeSet::new(vec![]).is_err());
        assert!(ProbeSet::new(vec![vec![11.0]]).is_err());
        assert!(ProbeSet::new(vec![vec![f64::NAN]]).is_err());
        let d3 = ProbeSet::default_for_dim(3);
        assert_eq!(d3.probes().len(), 12);
        assert!(d3.probes().iter().all(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt() <= 2.001));
    }

    #[test]
    fn report_json_field_order() {
        let report = TestReport::from_estimate("demo", 0.5, 0.0, 1.0, 7).with_seed(3);
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(
            json,
            r#"{"name":"demo","estimate":0.5,"target":0.0,"tolerance":1.0,"pass":true,"count":7,"seed":3}"#
        );
        let back: TestReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn pass_flag_matches_invariant() {
        let r = TestReport::from_estimate("x", 1.0, 0.0, 0.5, 1);
        assert!(!r.pass);
        let r = TestReport::from_estimate("x", 0.4, 0.0, 0.5, 1);
        assert!(r.pass);
        let r = TestReport::from_estimate("x", 2.0, 2.3, 0.5, 1);
        assert!(r.pass);
    }
}

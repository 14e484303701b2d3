//! Python bindings for the core library: path sampling and refinement,
//! exact kernels, the continuity-theorem constants, covering numbers, and
//! the verification suites.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use brownian_lab::brownian::{self, DyadicGrid, Grid, TransformSpec};
use brownian_lab::gaussian::{self, CovarianceMatrix, GaussianMeasure, MeanVector};
use brownian_lab::kc_bounds::{self, KcBoundInputs, KolmogorovParams};
use brownian_lab::metric_cover::{self, FinitePseudoMetric};
use brownian_lab::projective::{self, TimePoints};
use brownian_lab::report::{self, RunConfig};
use brownian_lab::setsystems;
use brownian_lab::stats;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A seeded ensemble of Brownian paths on a shared time grid.
#[pyclass]
struct PathEnsemble {
    inner: brownian::PathEnsemble,
}

#[pymethods]
impl PathEnsemble {
    /// Sample `count` paths on the dyadic grid of the given level.
    #[staticmethod]
    #[pyo3(signature = (level, count, seed=0, horizon=1.0))]
    fn sample(level: u32, count: usize, seed: u64, horizon: f64) -> PyResult<Self> {
        let grid = Grid::Dyadic(DyadicGrid::new(level, horizon).map_err(value_err)?);
        Ok(Self { inner: brownian::sample_increments(&grid, seed, count) })
    }

    /// Sample on an explicit strictly increasing time grid.
    #[staticmethod]
    #[pyo3(signature = (times, count, seed=0))]
    fn sample_at(times: Vec<f64>, count: usize, seed: u64) -> PyResult<Self> {
        let grid = Grid::explicit(times).map_err(value_err)?;
        Ok(Self { inner: brownian::sample_increments(&grid, seed, count) })
    }

    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    fn paths(&self) -> Vec<Vec<f64>> {
        self.inner.paths().to_vec()
    }

    fn count(&self) -> usize {
        self.inner.count()
    }

    /// Conditional midpoint refinement to a finer dyadic level; existing
    /// values are preserved exactly.
    fn refine(&self, target_level: u32, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: brownian::refine_bridge(&self.inner, target_level, seed).map_err(value_err)? })
    }

    /// B_{c t} / sqrt(c) on the rescaled grid.
    fn scaled(&self, c: f64) -> PyResult<Self> {
        Ok(Self { inner: brownian::transform(&self.inner, TransformSpec::Scaling { c }).map_err(value_err)? })
    }

    /// B_{t0 + t} - B_{t0}; t0 must be a grid time.
    fn shifted(&self, t0: f64) -> PyResult<Self> {
        Ok(Self { inner: brownian::transform(&self.inner, TransformSpec::Shift { t0 }).map_err(value_err)? })
    }

    /// t B_{1/t} on a reciprocal-closed grid.
    fn inverted(&self) -> PyResult<Self> {
        Ok(Self { inner: brownian::transform(&self.inner, TransformSpec::Inversion).map_err(value_err)? })
    }

    /// sup_{s != t} |X_t - X_s| / |t - s|^beta per path.
    fn holder_sup_ratios(&self, beta: f64) -> Vec<f64> {
        let times = self.inner.times();
        self.inner
            .paths()
            .iter()
            .map(|p| brownian::holder_sup_ratio(times, p, beta, f64::INFINITY))
            .collect()
    }

    /// max over grid pairs of mean |X_t - X_s|^p / |t - s|^q.
    fn kolmogorov_condition_estimate(&self, p: f64, q: f64) -> PyResult<f64> {
        kc_bounds::kolmogorov_condition_estimate(&self.inner, p, q).map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.inner.count()
    }

    fn __repr__(&self) -> String {
        format!(
            "PathEnsemble(count={}, grid_len={}, seed={})",
            self.inner.count(),
            self.inner.times().len(),
            self.inner.seed()
        )
    }
}

/// Characteristic function of N(mean, cov) at the probe; returns (re, im).
#[pyfunction]
#[pyo3(signature = (cov, probe, mean=None))]
fn charfun(cov: Vec<Vec<f64>>, probe: Vec<f64>, mean: Option<Vec<f64>>) -> PyResult<(f64, f64)> {
    let dim = cov.len();
    let cov = CovarianceMatrix::new(&cov).map_err(value_err)?;
    let mean = match mean {
        Some(m) => MeanVector::new(m).map_err(value_err)?,
        None => MeanVector::zeros(dim),
    };
    let g = GaussianMeasure::new(mean, cov).map_err(value_err)?;
    let z = gaussian::charfun(&g, &probe).map_err(value_err)?;
    Ok((z.re, z.im))
}

/// Empirical characteristic function of the samples at the probe.
#[pyfunction]
fn ecf(samples: Vec<Vec<f64>>, probe: Vec<f64>) -> PyResult<(f64, f64)> {
    let z = stats::ecf(&samples, &probe).map_err(value_err)?;
    Ok((z.re, z.im))
}

/// Covariance matrix min(t_i, t_j) for strictly increasing positive times.
#[pyfunction]
fn min_kernel(times: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    let points = TimePoints::from_f64s(&times).map_err(value_err)?;
    Ok(projective::min_kernel_cov(&points).rows())
}

/// Exact identity a' C a = integral of (sum a_i 1_[0, t_i])^2.
#[pyfunction]
fn gram_identity(times: Vec<f64>, coefficients: Vec<f64>) -> PyResult<bool> {
    let points = TimePoints::from_f64s(&times).map_err(value_err)?;
    Ok(projective::gram_identity_check(&points, &coefficients).map_err(value_err)?.equal)
}

#[pyfunction]
fn rp_constant(p: f64, q: f64, d: f64) -> PyResult<f64> {
    kc_bounds::rp_constant(p, q, d).map_err(value_err)
}

#[pyfunction]
fn finite_set_bound(p: f64, q: f64, m: f64, c: f64, d: f64, delta: f64) -> PyResult<f64> {
    let params = KolmogorovParams::new(p, q, m).map_err(value_err)?;
    kc_bounds::finite_set_bound(&params, c, d, delta).map_err(value_err)
}

/// The summed chaining constant L; returns (value, terms_used).
#[pyfunction]
#[pyo3(signature = (p, q, c, d, beta, diam=1.0))]
fn chentsov_constant(p: f64, q: f64, c: f64, d: f64, beta: f64, diam: f64) -> PyResult<(f64, usize)> {
    let params = KolmogorovParams::new(p, q, 1.0).map_err(value_err)?;
    let inputs = KcBoundInputs::new(params, c, d, beta, diam).map_err(value_err)?;
    let l = kc_bounds::chentsov_constant_l(&inputs).map_err(value_err)?;
    Ok((l.value, l.terms.len()))
}

#[pyfunction]
fn holder_sup_ratio(times: Vec<f64>, values: Vec<f64>, beta: f64) -> f64 {
    brownian::holder_sup_ratio(&times, &values, beta, f64::INFINITY)
}

/// Median Hölder sup-ratio per dyadic level, fresh paths at each level.
#[pyfunction]
#[pyo3(signature = (levels, count, beta, seed=0, horizon=1.0))]
fn holder_profile(
    levels: Vec<u32>,
    count: usize,
    beta: f64,
    seed: u64,
    horizon: f64,
) -> PyResult<Vec<f64>> {
    brownian::holder_divergence_profile(horizon, &levels, count, beta, seed).map_err(value_err)
}

/// Exact minimal number of eps-balls covering the points (n <= 20).
#[pyfunction]
fn minimal_cover_number(points: Vec<Vec<f64>>, eps: f64) -> PyResult<usize> {
    let space = FinitePseudoMetric::from_points(&points).map_err(value_err)?;
    metric_cover::minimal_cover_number(&space, eps).map_err(value_err)
}

#[pyfunction]
fn packing_number(points: Vec<Vec<f64>>, eps: f64) -> PyResult<usize> {
    let space = FinitePseudoMetric::from_points(&points).map_err(value_err)?;
    metric_cover::packing_number(&space, eps).map_err(value_err)
}

/// Run one verification suite; returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (suite, seed=0, count=100_000, level=10, horizon=1.0))]
fn run_suite(suite: &str, seed: u64, count: usize, level: u32, horizon: f64) -> PyResult<String> {
    let config = RunConfig { seed, count, level, horizon, ..RunConfig::default() };
    let report = report::run_suite(suite, &config).map_err(value_err)?;
    Ok(report.to_json_line())
}

/// Extension check for a content given in the text format; returns
/// (pass, sigma_algebra_size, caratheodory_size).
#[pyfunction]
#[pyo3(signature = (text=None))]
fn verify_content(text: Option<&str>) -> PyResult<(bool, usize, usize)> {
    let content = match text {
        Some(t) => setsystems::parse_content_text(t).map_err(value_err)?,
        None => setsystems::dyadic_demo_content(),
    };
    let report = setsystems::verify_extension(&content).map_err(value_err)?;
    Ok((report.pass, report.sigma_algebra_size, report.caratheodory_size))
}

#[pymodule]
fn brownian_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PathEnsemble>()?;
    m.add_function(wrap_pyfunction!(charfun, m)?)?;
    m.add_function(wrap_pyfunction!(ecf, m)?)?;
    m.add_function(wrap_pyfunction!(min_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(gram_identity, m)?)?;
    m.add_function(wrap_pyfunction!(rp_constant, m)?)?;
    m.add_function(wrap_pyfunction!(finite_set_bound, m)?)?;
    m.add_function(wrap_pyfunction!(chentsov_constant, m)?)?;
    m.add_function(wrap_pyfunction!(holder_sup_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(holder_profile, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_cover_number, m)?)?;
    m.add_function(wrap_pyfunction!(packing_number, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(verify_content, m)?)?;
    Ok(())
}

//! Central numerical tolerances. Every approximate comparison in the crate
//! goes through one of these constants so the guarantees stay auditable.

/// Relative asymmetry allowed when validating a covariance matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalue floor for positive semidefiniteness: eigenvalues down to
/// `-PSD_EIG_TOL * (1 + spectral_norm)` are treated as zero. Min-kernel
/// matrices containing t = 0 are exactly singular, so a small negative
/// band from floating point eigensolves is expected.
pub const PSD_EIG_TOL: f64 = 1e-10;

/// Reconstruction error allowed for a PSD factor: `|S^T S - C|_max` relative
/// to `1 + |C|_max`.
pub const PSD_RECON_TOL: f64 = 1e-10;

/// Absolute size under which a cross-covariance entry counts as zero.
pub const CROSS_COV_TOL: f64 = 1e-12;

/// Tolerance for float interop against exact rational results.
pub const FLOAT_INTEROP_TOL: f64 = 1e-12;

/// Relative tolerance when validating the triangle inequality of a
/// pseudo-metric supplied as floats.
pub const TRIANGLE_TOL: f64 = 1e-12;

/// Empirical characteristic function test: max probe deviation allowed is
/// `ECF_SIGMA_FACTOR / sqrt(count)` (|e^{itX}| <= 1, so the CLT scale of the
/// estimator is at most 1/sqrt(count); 5 sigma keeps false alarms rare).
pub const ECF_SIGMA_FACTOR: f64 = 5.0;

/// Independence test via joint vs product ECF: `10 / sqrt(count)`; the joint
/// estimate and the two marginal estimates each contribute CLT noise.
pub const INDEP_SIGMA_FACTOR: f64 = 10.0;

/// Covariance tests accept deviations up to 5 estimator standard deviations.
pub const COV_SIGMA_FACTOR: f64 = 5.0;

/// Relative tail mass at which the chaining constant series is truncated.
pub const SERIES_TAIL_REL_TOL: f64 = 1e-9;

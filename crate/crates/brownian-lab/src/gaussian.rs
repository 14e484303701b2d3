//! Multivariate Gaussian measures: characteristic functions, PSD
//! factorization, affine pushforwards, deterministic sampling, and moment
//! formulas. Matrices are validated once at construction; all downstream
//! operations assume the invariants.

use crate::rng;
use crate::tol::{CROSS_COV_TOL, PSD_EIG_TOL, SYMMETRY_TOL};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaussianError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square: {rows} rows, row {row} has {cols} entries")]
    NotSquare { rows: usize, row: usize, cols: usize },
    #[error("entry ({i},{j}) is not finite")]
    NonFinite { i: usize, j: usize },
    #[error("matrix is not symmetric at ({i},{j}): {a} vs {b}")]
    NotSymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("operation requires a centered measure, mean entry {i} is {value}")]
    NonCentered { i: usize, value: f64 },
    #[error("bad partition: {0}")]
    BadPartition(String),
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanVector(Vec<f64>);

impl MeanVector {
    pub fn new(entries: Vec<f64>) -> Result<Self, GaussianError> {
        if let Some(i) = entries.iter().position(|x| !x.is_finite()) {
            return Err(GaussianError::NonFinite { i, j: 0 });
        }
        Ok(MeanVector(entries))
    }

    pub fn zeros(n: usize) -> Self {
        MeanVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Symmetric positive-semidefinite matrix. Construction symmetrizes inputs
/// within the 1e-12 relative band and rejects anything with an eigenvalue
/// below -1e-10 * (1 + spectral norm).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    mat: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self, GaussianError> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(GaussianError::NotSquare { rows: n, row: i, cols: row.len() });
            }
            for (j, x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(GaussianError::NonFinite { i, j });
                }
            }
        }
        let scale = 1.0 + rows.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                if (rows[i][j] - rows[j][i]).abs() > SYMMETRY_TOL * scale {
                    return Err(GaussianError::NotSymmetric {
                        i,
                        j,
                        a: rows[i][j],
                        b: rows[j][i],
                    });
                }
            }
        }
        let mut mat = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                mat[(i, j)] = 0.5 * (rows[i][j] + rows[j][i]);
            }
        }
        if n > 0 {
            let eig = SymmetricEigen::new(mat.clone());
            let spectral = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
            let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            if min_eig < -PSD_EIG_TOL * (1.0 + spectral) {
                return Err(GaussianError::NotPsd { min_eigenvalue: min_eig });
            }
        }
        Ok(CovarianceMatrix { mat })
    }

    pub fn identity(n: usize) -> Self {
        CovarianceMatrix { mat: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.mat[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.mat.row(i).iter().cloned().collect()).collect()
    }

    pub(crate) fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    /// Eigenvalues ascending, negatives clamped to zero.
    fn clamped_eigen(&self) -> (DVector<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.mat.clone());
        let vals = eig.eigenvalues.map(|l| l.max(0.0));
        (vals, eig.eigenvectors)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasure {
    pub mean: MeanVector,
    pub cov: CovarianceMatrix,
}

impl GaussianMeasure {
    pub fn new(mean: MeanVector, cov: CovarianceMatrix) -> Result<Self, GaussianError> {
        if mean.len() != cov.dim() {
            return Err(GaussianError::DimensionMismatch { expected: cov.dim(), got: mean.len() });
        }
        Ok(GaussianMeasure { mean, cov })
    }

    /// N(0, I_n).
    pub fn standard(n: usize) -> Self {
        GaussianMeasure { mean: MeanVector::zeros(n), cov: CovarianceMatrix::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.cov.dim()
    }
}

/// psi(t) = exp(i<t, m> - t' C t / 2); modulus never exceeds 1.
pub fn charfun(g: &GaussianMeasure, t: &[f64]) -> Result<Complex64, GaussianError> {
    if t.len() != g.dim() {
        return Err(GaussianError::DimensionMismatch { expected: g.dim(), got: t.len() });
    }
    let mean_dot: f64 = t.iter().zip(g.mean.as_slice()).map(|(a, b)| a * b).sum();
    let mut quad = 0.0;
    for i in 0..t.len() {
        for j in 0..t.len() {
            quad += t[i] * g.cov.entry(i, j) * t[j];
        }
    }
    // quad can dip epsilon-negative on singular C; clamp keeps |psi| <= 1.
    Ok(Complex64::new(0.0, mean_dot).exp() * (-0.5 * quad.max(0.0)).exp())
}

/// S with S'S = C up to 1e-10 * (1 + max entry); rows are sqrt(lambda_k) q_k'.
pub fn psd_factor(c: &CovarianceMatrix) -> Vec<Vec<f64>> {
    let (vals, vecs) = c.clamped_eigen();
    let n = c.dim();
    (0..n)
        .map(|k| {
            let s = vals[k].sqrt();
            (0..n).map(|j| s * vecs[(j, k)]).collect()
        })
        .collect()
}

/// The image measure of g under x -> Ax + b; covariance A C A'.
pub fn affine_pushforward(
    g: &GaussianMeasure,
    a: &[Vec<f64>],
    b: &[f64],
) -> Result<GaussianMeasure, GaussianError> {
    let out_dim = a.len();
    if b.len() != out_dim {
        return Err(GaussianError::DimensionMismatch { expected: out_dim, got: b.len() });
    }
    for row in a {
        if row.len() != g.dim() {
            return Err(GaussianError::DimensionMismatch { expected: g.dim(), got: row.len() });
        }
    }
    let a_mat = DMatrix::from_fn(out_dim, g.dim(), |i, j| a[i][j]);
    let mean_vec = DVector::from_column_slice(g.mean.as_slice());
    let new_mean = &a_mat * mean_vec + DVector::from_column_slice(b);
    let new_cov = &a_mat * g.cov.as_dmatrix() * a_mat.transpose();
    let rows: Vec<Vec<f64>> =
        (0..out_dim).map(|i| new_cov.row(i).iter().cloned().collect()).collect();
    GaussianMeasure::new(
        MeanVector::new(new_mean.iter().cloned().collect())?,
        CovarianceMatrix::new(&rows)?,
    )
}

/// `count` draws; draw i is m + S' z_i with z_{i,j} = standard_normal keyed by
/// (seed, i, j). Reproducible coordinate-wise, independent of batching.
pub fn sample(g: &GaussianMeasure, seed: u64, count: usize) -> Vec<Vec<f64>> {
    let n = g.dim();
    let (vals, vecs) = g.cov.clamped_eigen();
    // S' = Q diag(sqrt(lambda)); column k scaled by sqrt(lambda_k).
    let mut s_t = vecs;
    for k in 0..n {
        let s = vals[k].sqrt();
        for j in 0..n {
            s_t[(j, k)] *= s;
        }
    }
    (0..count)
        .map(|i| {
            let z: Vec<f64> =
                (0..n).map(|j| rng::standard_normal(seed, &[i as u64, j as u64])).collect();
            (0..n)
                .map(|r| {
                    g.mean.as_slice()[r]
                        + (0..n).map(|k| s_t[(r, k)] * z[k]).sum::<f64>()
                })
                .collect()
        })
        .collect()
}

/// E|N(0, sigma2)|^order for even order 2n: (2n-1)!! sigma^(2n).
pub fn abs_central_moment(sigma2: f64, order: u32) -> f64 {
    assert!(order >= 2 && order % 2 == 0, "order must be a positive even integer");
    assert!(sigma2 >= 0.0, "variance must be nonnegative");
    let mut double_fact = 1.0;
    let mut k = order as i64 - 1;
    while k > 1 {
        double_fact *= k as f64;
        k -= 2;
    }
    double_fact * sigma2.powi(order as i32 / 2)
}

/// E exp(kappa |X|^2) for centered X: prod (1 - 2 kappa lambda_i)^(-1/2),
/// finite exactly when kappa < 1 / (2 lambda_max).
pub fn gaussian_exp_sq_moment(g: &GaussianMeasure, kappa: f64) -> Result<f64, GaussianError> {
    assert!(kappa >= 0.0, "coefficient must be nonnegative");
    if let Some(i) = g.mean.as_slice().iter().position(|&m| m != 0.0) {
        return Err(GaussianError::NonCentered { i, value: g.mean.as_slice()[i] });
    }
    if kappa == 0.0 {
        return Ok(1.0);
    }
    let (vals, _) = g.cov.clamped_eigen();
    let mut product = 1.0;
    for &lambda in vals.iter() {
        let factor = 1.0 - 2.0 * kappa * lambda;
        if factor <= 0.0 {
            return Ok(f64::INFINITY);
        }
        product *= factor;
    }
    Ok(product.powf(-0.5))
}

/// True iff every covariance entry between distinct blocks vanishes, which
/// for a jointly Gaussian vector certifies mutual independence of the blocks.
pub fn blocks_independent(
    c: &CovarianceMatrix,
    partition: &[Vec<usize>],
) -> Result<bool, GaussianError> {
    let n = c.dim();
    let mut owner = vec![usize::MAX; n];
    for (b, block) in partition.iter().enumerate() {
        for &i in block {
            if i >= n {
                return Err(GaussianError::BadPartition(format!("index {i} out of range")));
            }
            if owner[i] != usize::MAX {
                return Err(GaussianError::BadPartition(format!("index {i} appears twice")));
            }
            owner[i] = b;
        }
    }
    if let Some(i) = owner.iter().position(|&b| b == usize::MAX) {
        return Err(GaussianError::BadPartition(format!("index {i} not covered")));
    }
    for i in 0..n {
        for j in 0..n {
            if owner[i] != owner[j] && c.entry(i, j).abs() > CROSS_COV_TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// CSV with a `dim n` header, one comma-separated row per line. A vector is a
/// single row; a matrix has one row per line.
pub fn write_matrix_csv(rows: &[Vec<f64>]) -> String {
    let n = rows.first().map_or(0, |r| r.len());
    let mut out = format!("dim {n}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix_csv(text: &str) -> Result<Vec<Vec<f64>>, GaussianError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(GaussianError::Csv { line: 1, msg: "empty input".into() })?;
    let n: usize = header
        .trim()
        .strip_prefix("dim ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or(GaussianError::Csv { line: 1, msg: "expected `dim n` header".into() })?;
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                let cell = cell.trim();
                if cell.eq_ignore_ascii_case("inf") {
                    Ok(f64::INFINITY)
                } else {
                    cell.parse::<f64>().map_err(|e| GaussianError::Csv {
                        line: lineno + 1,
                        msg: format!("bad number {cell:?}: {e}"),
                    })
                }
            })
            .collect::<Result<_, _>>()?;
        if row.len() != n {
            return Err(GaussianError::Csv {
                line: lineno + 1,
                msg: format!("expected {n} entries, got {}", row.len()),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

//! Brownian path sampling on finite time grids, midpoint (bridge)
//! refinement, law-preserving transforms, and Hölder ratio analysis.
//!
//! Sampling is counter-based: the increment of path `i` over grid step `j`
//! is keyed by `(seed, i, j)`, so ensembles are bit-identical regardless of
//! thread count and any path is reproducible in isolation.

use crate::rng;
use rayon::prelude::*;
use std::io::Write;

pub const MAX_DYADIC_LEVEL: u32 = 26;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BrownianError {
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("target level {target} does not refine level {current}")]
    NotARefinement { current: u32, target: u32 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("values vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for BrownianError {
    fn from(e: std::io::Error) -> Self {
        BrownianError::Io(e.to_string())
    }
}

/// Times k * horizon / 2^level for k = 0..=2^level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicGrid {
    level: u32,
    horizon: f64,
}

impl DyadicGrid {
    pub fn new(level: u32, horizon: f64) -> Result<Self, BrownianError> {
        if level > MAX_DYADIC_LEVEL {
            return Err(BrownianError::BadGrid(format!(
                "level {level} exceeds the cap {MAX_DYADIC_LEVEL}"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(BrownianError::BadGrid(format!("horizon {horizon} must be positive")));
        }
        Ok(DyadicGrid { level, horizon })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        (1usize << self.level) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exact for dyadic horizons; k/2^level never rounds.
    pub fn time(&self, k: usize) -> f64 {
        self.horizon * (k as f64 / (1u64 << self.level) as f64)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

/// Time axis of an ensemble: a dyadic grid or explicit sorted times.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Dyadic(DyadicGrid),
    Times(Vec<f64>),
}

impl Grid {
    pub fn times(&self) -> Vec<f64> {
        match self {
            Grid::Dyadic(g) => g.times(),
            Grid::Times(ts) => ts.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Dyadic(g) => g.len(),
            Grid::Times(ts) => ts.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn explicit(times: Vec<f64>) -> Result<Self, BrownianError> {
        if times.is_empty() {
            return Err(BrownianError::BadGrid("empty time grid".into()));
        }
        for w in times.windows(2) {
            if !(w[0] < w[1]) {
                return Err(BrownianError::BadGrid(format!(
                    "times must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if !times.iter().all(|t| t.is_finite() && *t >= 0.0) {
            return Err(BrownianError::BadGrid("times must be finite and nonnegative".into()));
        }
        Ok(Grid::Times(times))
    }
}

/// Monte Carlo ensemble of paths sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    grid: Grid,
    times: Vec<f64>,
    paths: Vec<Vec<f64>>,
    seed: u64,
}

impl PathEnsemble {
    pub fn from_parts(
        grid: Grid,
        paths: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self, BrownianError> {
        let times = grid.times();
        if let Some(bad) = paths.iter().find(|p| p.len() != times.len()) {
            return Err(BrownianError::DimensionMismatch {
                expected: times.len(),
                got: bad.len(),
            });
        }
        Ok(PathEnsemble { grid, times, paths, seed })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn count(&self) -> usize {
        self.paths.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self, i: usize) -> &[f64] {
        &self.paths[i]
    }

    pub fn paths(&self) -> &[Vec<f64>] {
        &self.paths
    }

    /// Rows restricted to the listed time indices (for stats oracles).
    pub fn columns(&self, idx: &[usize]) -> Vec<Vec<f64>> {
        self.paths.iter().map(|p| idx.iter().map(|&j| p[j]).collect()).collect()
    }
}

/// Samples count Brownian paths on the grid: X_0 = 0 and independent
/// increments N(0, dt) over consecutive intervals. If the grid starts after
/// time 0 the first value carries the increment from the implicit origin.
pub fn sample_increments(grid: &Grid, seed: u64, count: usize) -> PathEnsemble {
    let times = grid.times();
    let paths: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut x = 0.0f64;
            let mut prev = 0.0f64;
            times
                .iter()
                .enumerate()
                .map(|(j, &t)| {
                    let dt = t - prev;
                    prev = t;
                    if dt > 0.0 {
                        x += dt.sqrt() * rng::standard_normal(seed, &[i as u64, j as u64]);
                    }
                    x
                })
                .collect()
        })
        .collect();
    PathEnsemble { grid: grid.clone(), times, paths, seed }
}

/// Midpoint refinement to a finer dyadic level. Values at coarse times are
/// preserved bit-for-bit; each new midpoint over an interval (l, r) of width
/// dt is drawn as N((X_l + X_r)/2, dt/4), keyed by (seed, path, level, k).
pub fn refine_bridge(
    ensemble: &PathEnsemble,
    target_level: u32,
    seed: u64,
) -> Result<PathEnsemble, BrownianError> {
    let base = match &ensemble.grid {
        Grid::Dyadic(g) => *g,
        Grid::Times(_) => {
            return Err(BrownianError::GridMismatch(
                "bridge refinement needs a dyadic grid".into(),
            ))
        }
    };
    if target_level <= base.level {
        return Err(BrownianError::NotARefinement { current: base.level, target: target_level });
    }
    let fine = DyadicGrid::new(target_level, base.horizon)?;
    let paths: Vec<Vec<f64>> = ensemble
        .paths
        .par_iter()
        .enumerate()
        .map(|(i, coarse)| {
            let mut cur = coarse.clone();
            for level in base.level..target_level {
                let dt = base.horizon * 0.5f64.powi(level as i32);
                let sd = 0.5 * dt.sqrt();
                let mut next = Vec::with_capacity(2 * cur.len() - 1);
                for k in 0..cur.len() - 1 {
                    let z = rng::standard_normal(
                        seed,
                        &[i as u64, (level + 1) as u64, k as u64],
                    );
                    next.push(cur[k]);
                    next.push(0.5 * (cur[k] + cur[k + 1]) + sd * z);
                }
                next.push(*cur.last().unwrap());
                cur = next;
            }
            cur
        })
        .collect();
    Ok(PathEnsemble { grid: Grid::Dyadic(fine), times: fine.times(), paths, seed })
}

/// Law-preserving transforms of §6 plus the drift ratio diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformSpec {
    /// B_{ct}/sqrt(c) at times t = original/c.
    Scaling { c: f64 },
    /// B_{t0+t} - B_{t0}; t0 must be a grid time.
    Shift { t0: f64 },
    /// t * B_{1/t}, needs a reciprocal-closed set of positive times.
    Inversion,
    /// B_t/t at positive times.
    DriftRatio,
}

fn find_time(times: &[f64], t: f64) -> Option<usize> {
    let tol = 1e-12 * t.abs().max(1.0);
    times.iter().position(|&s| (s - t).abs() <= tol)
}

pub fn transform(
    ensemble: &PathEnsemble,
    spec: TransformSpec,
) -> Result<PathEnsemble, BrownianError> {
    let times = &ensemble.times;
    match spec {
        TransformSpec::Scaling { c } => {
            if !(c > 0.0) || !c.is_finite() {
                return Err(BrownianError::GridMismatch(format!(
                    "scaling factor {c} must be positive"
                )));
            }
            let grid = match &ensemble.grid {
                Grid::Dyadic(g) => Grid::Dyadic(DyadicGrid::new(g.level, g.horizon / c)?),
                Grid::Times(ts) => Grid::explicit(ts.iter().map(|t| t / c).collect())?,
            };
            let scale = c.sqrt();
            let paths =
                ensemble.paths.iter().map(|p| p.iter().map(|x| x / scale).collect()).collect();
            Ok(PathEnsemble { times: grid.times(), grid, paths, seed: ensemble.seed })
        }
        TransformSpec::Shift { t0 } => {
            if t0 < 0.0 || !t0.is_finite() {
                return Err(BrownianError::GridMismatch(format!("shift {t0} must be >= 0")));
            }
            let j0 = find_time(times, t0).ok_or_else(|| {
                BrownianError::GridMismatch(format!("shift origin {t0} is not a grid time"))
            })?;
            if j0 == 0 {
                return Ok(ensemble.clone());
            }
            let new_times: Vec<f64> = times[j0..].iter().map(|t| t - t0).collect();
            let paths = ensemble
                .paths
                .iter()
                .map(|p| {
                    let x0 = p[j0];
                    p[j0..].iter().map(|x| x - x0).collect()
                })
                .collect();
            let grid = Grid::explicit(new_times)?;
            Ok(PathEnsemble { times: grid.times(), grid, paths, seed: ensemble.seed })
        }
        TransformSpec::Inversion => {
            let positive: Vec<usize> =
                (0..times.len()).filter(|&j| times[j] > 0.0).collect();
            if positive.is_empty() {
                return Err(BrownianError::GridMismatch(
                    "inversion needs at least one positive time".into(),
                ));
            }
            // Match each positive time to its reciprocal partner.
            let partner: Vec<usize> = positive
                .iter()
                .map(|&j| {
                    find_time(times, 1.0 / times[j]).ok_or_else(|| {
                        BrownianError::GridMismatch(format!(
                            "time set is not reciprocal-closed: 1/{} missing",
                            times[j]
                        ))
                    })
                })
                .collect::<Result<_, _>>()?;
            // Output time u = times[j] carries u * B_{1/u} from the partner.
            let mut new_times = vec![0.0];
            new_times.extend(positive.iter().map(|&j| times[j]));
            let paths = ensemble
                .paths
                .iter()
                .map(|p| {
                    let mut row = vec![0.0];
                    row.extend(
                        positive.iter().zip(&partner).map(|(&j, &k)| times[j] * p[k]),
                    );
                    row
                })
                .collect();
            let grid = Grid::explicit(new_times)?;
            Ok(PathEnsemble { times: grid.times(), grid, paths, seed: ensemble.seed })
        }
        TransformSpec::DriftRatio => {
            let positive: Vec<usize> =
                (0..times.len()).filter(|&j| times[j] > 0.0).collect();
            if positive.is_empty() {
                return Err(BrownianError::GridMismatch(
                    "drift ratio needs at least one positive time".into(),
                ));
            }
            let new_times: Vec<f64> = positive.iter().map(|&j| times[j]).collect();
            let paths = ensemble
                .paths
                .iter()
                .map(|p| positive.iter().map(|&j| p[j] / times[j]).collect())
                .collect();
            let grid = Grid::explicit(new_times)?;
            Ok(PathEnsemble { times: grid.times(), grid, paths, seed: ensemble.seed })
        }
    }
}

fn uniform_step(times: &[f64]) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return None;
    }
    let ok = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-12 * dt);
    ok.then_some(dt)
}

/// sup over grid pairs with 0 < |s - t| <= max_sep of |X_s - X_t| / |s - t|^beta.
/// Coincident times contribute 0 (the 0/0 convention). Uniform grids take a
/// pruned block path that is exact but avoids the full quadratic scan.
pub fn holder_sup_ratio(times: &[f64], values: &[f64], beta: f64, max_sep: f64) -> f64 {
    assert!(beta > 0.0, "Hölder exponent must be positive");
    assert_eq!(times.len(), values.len(), "times and values must align");
    let n = times.len();
    if n < 2 {
        return 0.0;
    }
    if let Some(dt) = uniform_step(times) {
        let max_lag = if max_sep.is_infinite() {
            n - 1
        } else {
            (((max_sep / dt) * (1.0 + 1e-12)).floor() as usize).min(n - 1)
        };
        return holder_sup_uniform(values, dt, beta, max_lag);
    }
    let mut best = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let sep = times[j] - times[i];
            if sep > max_sep {
                break;
            }
            if sep > 0.0 {
                best = best.max((values[j] - values[i]).abs() / sep.powf(beta));
            }
        }
    }
    best
}

/// Exact sup over lags 1..=max_lag on a uniform grid. Small lags are scanned
/// densely; long-range pairs go through block max/min bounds so that block
/// pairs which cannot beat the current best are skipped wholesale.
fn holder_sup_uniform(values: &[f64], dt: f64, beta: f64, max_lag: usize) -> f64 {
    let n = values.len();
    if max_lag == 0 {
        return 0.0;
    }
    let b = ((n as f64).sqrt() as usize).max(8);
    let dense = (2 * b).min(max_lag);
    let mut best = 0.0f64;
    for lag in 1..=dense {
        let mut num = 0.0f64;
        for i in 0..n - lag {
            num = num.max((values[i + lag] - values[i]).abs());
        }
        best = best.max(num / (lag as f64 * dt).powf(beta));
    }
    if max_lag <= dense {
        return best;
    }
    let nb = n.div_ceil(b);
    let mut blk_max = vec![f64::NEG_INFINITY; nb];
    let mut blk_min = vec![f64::INFINITY; nb];
    for (i, &x) in values.iter().enumerate() {
        let p = i / b;
        blk_max[p] = blk_max[p].max(x);
        blk_min[p] = blk_min[p].min(x);
    }
    for p in 0..nb {
        for q in (p + 2)..nb {
            // Smallest lag between block p and block q; lags below the dense
            // cutoff are already covered exactly.
            let min_lag = (q - p - 1) * b + 1;
            if min_lag > max_lag {
                break;
            }
            let num_bound = (blk_max[q] - blk_min[p]).max(blk_max[p] - blk_min[q]);
            if num_bound <= best * (min_lag as f64 * dt).powf(beta) {
                continue;
            }
            let i_lo = p * b;
            let i_hi = ((p + 1) * b).min(n);
            let j_hi = ((q + 1) * b).min(n);
            for i in i_lo..i_hi {
                let j_lo = (q * b).max(i + dense + 1);
                for j in j_lo..j_hi.min(i + max_lag + 1) {
                    let lag = j - i;
                    let cand = (values[j] - values[i]).abs() / (lag as f64 * dt).powf(beta);
                    best = best.max(cand);
                }
            }
        }
    }
    best
}

/// Median of per-path sup ratios on a fresh ensemble per level; the seed for
/// level l is derived as key(seed, [l]).
pub fn holder_divergence_profile(
    horizon: f64,
    levels: &[u32],
    count: usize,
    beta: f64,
    seed: u64,
) -> Result<Vec<f64>, BrownianError> {
    let mut medians = Vec::with_capacity(levels.len());
    for &level in levels {
        let grid = Grid::Dyadic(DyadicGrid::new(level, horizon)?);
        let ensemble = sample_increments(&grid, rng::key(seed, &[level as u64]), count);
        let mut ratios: Vec<f64> = ensemble
            .paths
            .par_iter()
            .map(|p| holder_sup_ratio(&ensemble.times, p, beta, f64::INFINITY))
            .collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).expect("ratios are finite"));
        medians.push(median_of_sorted(&ratios));
    }
    Ok(medians)
}

pub(crate) fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "median of empty sample");
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// One JSON object per line: {"path": i, "t": [...], "x": [...]}.
pub fn write_ndjson<W: Write>(ensemble: &PathEnsemble, out: &mut W) -> Result<(), BrownianError> {
    for (i, path) in ensemble.paths.iter().enumerate() {
        let line = serde_json::json!({ "path": i, "t": ensemble.times, "x": path });
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Long-form CSV: header then one path,t,x row per sample point.
pub fn write_csv<W: Write>(ensemble: &PathEnsemble, out: &mut W) -> Result<(), BrownianError> {
    writeln!(out, "path,t,x")?;
    for (i, path) in ensemble.paths.iter().enumerate() {
        for (t, x) in ensemble.times.iter().zip(path) {
            writeln!(out, "{i},{t},{x}")?;
        }
    }
    Ok(())
}

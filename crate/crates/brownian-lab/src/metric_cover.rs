//! Finite pseudo-metric spaces with covering and packing machinery: greedy
//! covers with bitset balls, exact minimal covers and packings by dynamic
//! programming for n <= 20, and the bounded-covering-number predicate
//! N_eps <= c eps^(-d) evaluated on an epsilon grid.

use crate::tol::TRIANGLE_TOL;

/// Exact search cap for minimal covers and packings.
pub const MAX_EXACT_POINTS: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("distance matrix is not square: row {row} has {cols} entries, expected {n}")]
    NotSquare { n: usize, row: usize, cols: usize },
    #[error("space must contain at least one point")]
    EmptySpace,
    #[error("distance ({i},{j}) is negative or NaN")]
    BadDistance { i: usize, j: usize },
    #[error("diagonal entry {i} is nonzero")]
    DiagonalNotZero { i: usize },
    #[error("distance matrix asymmetric at ({i},{j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("triangle inequality fails: d({i},{k}) > d({i},{j}) + d({j},{k})")]
    TriangleViolation { i: usize, j: usize, k: usize },
    #[error("{n} points exceed the exact-search cap of {MAX_EXACT_POINTS}")]
    TooLargeForExact { n: usize },
    #[error("epsilon grid is empty")]
    EmptyGrid,
    #[error("epsilon {eps} outside (0, {max}]")]
    BadEpsilon { eps: f64, max: f64 },
    #[error("bad covering profile: {0}")]
    BadProfile(String),
    #[error("bad point subset: {0}")]
    BadSubset(String),
    #[error("{0}")]
    Csv(String),
}

/// Finite pseudo-metric space; distances may be +inf, and zero distance
/// between distinct points is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePseudoMetric {
    n: usize,
    dist: Vec<f64>,
}

impl FinitePseudoMetric {
    /// Validates every pseudo-metric clause, including the O(n^3) triangle
    /// inequality sweep with infinity absorbing.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let space = Self::from_matrix_unchecked_triangle(rows)?;
        let scale = 1.0
            + space
                .dist
                .iter()
                .filter(|d| d.is_finite())
                .fold(0.0f64, |m, &d| m.max(d));
        let n = space.n;
        for j in 0..n {
            for i in 0..n {
                let dij = space.d(i, j);
                if dij == f64::INFINITY {
                    continue;
                }
                for k in 0..n {
                    let rhs = dij + space.d(j, k);
                    if space.d(i, k) > rhs + TRIANGLE_TOL * scale {
                        return Err(MetricError::TriangleViolation { i, j, k });
                    }
                }
            }
        }
        Ok(space)
    }

    fn from_matrix_unchecked_triangle(rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = rows.len();
        if n == 0 {
            return Err(MetricError::EmptySpace);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::NotSquare { n, row: i, cols: row.len() });
            }
        }
        let mut dist = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = rows[i][j];
                if d.is_nan() || d < 0.0 {
                    return Err(MetricError::BadDistance { i, j });
                }
                if i == j && d != 0.0 {
                    return Err(MetricError::DiagonalNotZero { i });
                }
                if rows[j][i] != d {
                    return Err(MetricError::NotSymmetric { i, j });
                }
                dist[i * n + j] = d;
            }
        }
        Ok(FinitePseudoMetric { n, dist })
    }

    /// Euclidean distances between the given points; metric axioms hold by
    /// construction, so the triangle sweep is skipped.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = points.len();
        if n == 0 {
            return Err(MetricError::EmptySpace);
        }
        let dim = points[0].len();
        let mut dist = vec![0.0f64; n * n];
        for i in 0..n {
            if points[i].len() != dim || points[i].iter().any(|x| !x.is_finite()) {
                return Err(MetricError::BadDistance { i, j: 0 });
            }
            for j in (i + 1)..n {
                let d = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(FinitePseudoMetric { n, dist })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    /// Max pairwise distance; +inf when components are disconnected.
    pub fn diameter(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                m = m.max(self.d(i, j));
            }
        }
        m
    }

    /// Subspace on the given (distinct, in-range) point indices.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self, MetricError> {
        if indices.is_empty() {
            return Err(MetricError::EmptySpace);
        }
        for (pos, &i) in indices.iter().enumerate() {
            if i >= self.n {
                return Err(MetricError::BadSubset(format!("index {i} out of range")));
            }
            if indices[..pos].contains(&i) {
                return Err(MetricError::BadSubset(format!("index {i} repeated")));
            }
        }
        let k = indices.len();
        let mut dist = vec![0.0f64; k * k];
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                dist[a * k + b] = self.d(i, j);
            }
        }
        Ok(FinitePseudoMetric { n: k, dist })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.d(i, j)).collect())
            .collect()
    }

    pub fn from_csv(text: &str) -> Result<Self, MetricError> {
        let rows =
            crate::gaussian::parse_matrix_csv(text).map_err(|e| MetricError::Csv(e.to_string()))?;
        Self::from_matrix(&rows)
    }

    pub fn to_csv(&self) -> String {
        crate::gaussian::write_matrix_csv(&self.to_rows())
    }
}

/// An internal cover: every point lies within `radius` (closed ball) of some
/// center, and centers are themselves points of the space.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub radius: f64,
    pub centers: Vec<usize>,
}

impl Cover {
    pub fn covers(&self, space: &FinitePseudoMetric) -> bool {
        (0..space.len())
            .all(|p| self.centers.iter().any(|&c| space.d(c, p) <= self.radius))
    }
}

/// Word-packed point sets for large-n greedy passes.
fn ball_bitsets(space: &FinitePseudoMetric, eps: f64) -> Vec<Vec<u64>> {
    let n = space.len();
    let words = n.div_ceil(64);
    (0..n)
        .map(|c| {
            let mut bits = vec![0u64; words];
            for p in 0..n {
                if space.d(c, p) <= eps {
                    bits[p / 64] |= 1 << (p % 64);
                }
            }
            bits
        })
        .collect()
}

/// Max-new-coverage greedy cover; ties broken toward the smallest index.
/// Always succeeds: each point covers at least itself.
pub fn greedy_cover(space: &FinitePseudoMetric, eps: f64) -> Cover {
    assert!(eps > 0.0, "cover radius must be positive");
    let n = space.len();
    let words = n.div_ceil(64);
    let balls = ball_bitsets(space, eps);
    let mut covered = vec![0u64; words];
    let mut remaining = n;
    let mut centers = Vec::new();
    while remaining > 0 {
        let mut best = usize::MAX;
        let mut best_new = 0usize;
        for c in 0..n {
            let new: u32 = balls[c]
                .iter()
                .zip(&covered)
                .map(|(b, done)| (b & !done).count_ones())
                .sum();
            if new as usize > best_new {
                best_new = new as usize;
                best = c;
            }
        }
        debug_assert!(best != usize::MAX);
        for (done, b) in covered.iter_mut().zip(&balls[best]) {
            *done |= b;
        }
        remaining -= best_new;
        centers.push(best);
    }
    centers.sort_unstable();
    Cover { radius: eps, centers }
}

/// Exact minimal cover by dynamic programming over uncovered point sets,
/// anchored at the lowest uncovered point. Capped at n <= 20.
pub fn minimal_cover(space: &FinitePseudoMetric, eps: f64) -> Result<Cover, MetricError> {
    assert!(eps > 0.0, "cover radius must be positive");
    let n = space.len();
    if n > MAX_EXACT_POINTS {
        return Err(MetricError::TooLargeForExact { n });
    }
    let balls: Vec<u32> = (0..n)
        .map(|c| (0..n).filter(|&p| space.d(c, p) <= eps).fold(0u32, |m, p| m | (1 << p)))
        .collect();
    let full = (1u32 << n) - 1;
    let mut dp = vec![u32::MAX; (full as usize) + 1];
    let mut choice = vec![u8::MAX; (full as usize) + 1];
    dp[0] = 0;
    for mask in 1..=full {
        let p = mask.trailing_zeros() as usize;
        let mut best = u32::MAX;
        let mut best_c = u8::MAX;
        for c in 0..n {
            if balls[c] & (1 << p) != 0 {
                let sub = dp[(mask & !balls[c]) as usize];
                if sub < best {
                    best = sub;
                    best_c = c as u8;
                }
            }
        }
        dp[mask as usize] = best.saturating_add(1);
        choice[mask as usize] = best_c;
    }
    let mut centers = Vec::with_capacity(dp[full as usize] as usize);
    let mut mask = full;
    while mask != 0 {
        let c = choice[mask as usize] as usize;
        centers.push(c);
        mask &= !balls[c];
    }
    centers.sort_unstable();
    Ok(Cover { radius: eps, centers })
}

/// Exact N_eps; see [`minimal_cover`].
pub fn minimal_cover_number(space: &FinitePseudoMetric, eps: f64) -> Result<usize, MetricError> {
    Ok(minimal_cover(space, eps)?.centers.len())
}

/// Max cardinality of a subset with all pairwise distances strictly greater
/// than eps; memoized independent-set recursion, capped at n <= 20.
pub fn packing_number(space: &FinitePseudoMetric, eps: f64) -> Result<usize, MetricError> {
    assert!(eps > 0.0, "separation radius must be positive");
    let n = space.len();
    if n > MAX_EXACT_POINTS {
        return Err(MetricError::TooLargeForExact { n });
    }
    // Conflict neighborhoods: points too close to co-exist in a packing.
    let close: Vec<u32> = (0..n)
        .map(|v| (0..n).filter(|&p| space.d(v, p) <= eps).fold(0u32, |m, p| m | (1 << p)))
        .collect();
    let full = (1u64 << n) - 1;
    let mut memo = vec![-1i8; (full as usize) + 1];
    fn mis(mask: u32, close: &[u32], memo: &mut [i8]) -> u8 {
        if mask == 0 {
            return 0;
        }
        if memo[mask as usize] >= 0 {
            return memo[mask as usize] as u8;
        }
        let v = mask.trailing_zeros() as usize;
        let skip = mis(mask & !(1 << v), close, memo);
        let take = 1 + mis(mask & !close[v], close, memo);
        let best = skip.max(take);
        memo[mask as usize] = best as i8;
        best
    }
    Ok(mis(full as u32, &close, &mut memo) as usize)
}

/// Greedy strictly-(sep)-separated subset; its size is a certified lower
/// bound for N_(sep/2) and for the exact packing number at sep.
fn greedy_separated(space: &FinitePseudoMetric, sep: f64) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for p in 0..space.len() {
        if chosen.iter().all(|&c| space.d(c, p) > sep) {
            chosen.push(p);
        }
    }
    chosen
}

/// The profile of the bound N_eps <= c eps^(-d).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveringProfile {
    pub c: f64,
    pub d: f64,
}

impl CoveringProfile {
    pub fn new(c: f64, d: f64) -> Result<Self, MetricError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(MetricError::BadProfile(format!("c = {c} must be positive")));
        }
        if !(d >= 0.0) || !d.is_finite() {
            return Err(MetricError::BadProfile(format!("d = {d} must be nonnegative")));
        }
        Ok(CoveringProfile { c, d })
    }

    pub fn bound(&self, eps: f64) -> f64 {
        self.c * eps.powf(-self.d)
    }
}

/// Subset lemma constant: a subset of a space with profile (c, d) has
/// profile (2^d c, d).
pub fn subset_profile(profile: CoveringProfile) -> CoveringProfile {
    CoveringProfile { c: profile.d.exp2() * profile.c, d: profile.d }
}

/// How one grid epsilon was certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountKind {
    Exact,
    GreedyUpper,
    SeparatedLower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringEntry {
    pub epsilon: f64,
    pub count: usize,
    pub kind: CountKind,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringCheck {
    pub pass: bool,
    /// Max over the grid of count * eps^d / c, using the certified count.
    pub worst_ratio: f64,
    pub entries: Vec<CoveringEntry>,
}

/// Checks N_eps <= c eps^(-d) over the grid. Counts are exact for
/// n <= 20; beyond that a greedy cover certifies passes and a separated-set
/// lower bound certifies failures, and instances where neither bound decides
/// surface as TooLargeForExact rather than a guess.
pub fn check_bounded_covering(
    space: &FinitePseudoMetric,
    profile: CoveringProfile,
    eps_grid: &[f64],
) -> Result<CoveringCheck, MetricError> {
    if eps_grid.is_empty() {
        return Err(MetricError::EmptyGrid);
    }
    let diam = space.diameter();
    let max_eps = if diam > 0.0 { diam } else { 1.0 };
    for &eps in eps_grid {
        if !(eps > 0.0) || (eps > max_eps && max_eps.is_finite()) {
            return Err(MetricError::BadEpsilon { eps, max: max_eps });
        }
    }
    let mut entries = Vec::with_capacity(eps_grid.len());
    let mut worst_ratio = 0.0f64;
    let mut pass = true;
    for &eps in eps_grid {
        let bound = profile.bound(eps);
        let (count, kind, ok) = if space.len() <= MAX_EXACT_POINTS {
            let exact = minimal_cover_number(space, eps)?;
            (exact, CountKind::Exact, (exact as f64) <= bound)
        } else {
            let upper = greedy_cover(space, eps).centers.len();
            if upper as f64 <= bound {
                (upper, CountKind::GreedyUpper, true)
            } else {
                let lower = greedy_separated(space, 2.0 * eps).len();
                if lower as f64 > bound {
                    (lower, CountKind::SeparatedLower, false)
                } else {
                    return Err(MetricError::TooLargeForExact { n: space.len() });
                }
            }
        };
        worst_ratio = worst_ratio.max(count as f64 * eps.powf(profile.d) / profile.c);
        pass &= ok;
        entries.push(CoveringEntry { epsilon: eps, count, kind, bound, ok });
    }
    Ok(CoveringCheck { pass, worst_ratio, entries })
}

/// Default geometric grid {base * 2^-k, k = 1..levels} with base = diameter
/// (or 1 on degenerate spaces).
pub fn default_eps_grid(space: &FinitePseudoMetric, levels: u32) -> Vec<f64> {
    let diam = space.diameter();
    let base = if diam.is_finite() && diam > 0.0 { diam } else { 1.0 };
    (1..=levels).map(|k| base * 0.5f64.powi(k as i32)).collect()
}

/// Companion to subset_profile: N_eps(A) <= N_(eps/2)(B) for A inside B,
/// both sides exact.
pub fn subset_cover_inequality_check(
    space: &FinitePseudoMetric,
    subset: &[usize],
    eps: f64,
) -> Result<bool, MetricError> {
    let sub = space.restrict(subset)?;
    let n_sub = minimal_cover_number(&sub, eps)?;
    let n_half = minimal_cover_number(space, eps / 2.0)?;
    Ok(n_sub <= n_half)
}

//! Chaining machinery over finite index sets: geometric radius grids, cover
//! hierarchies, nearest-center chains, the two-scale comparison inequality,
//! and the pair-reduction construction with a post-hoc verified contract.

use crate::metric_cover::{greedy_cover, minimal_cover, Cover, FinitePseudoMetric, MetricError};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChainingError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("bad grid: {0}")]
    BadGrid(String),
    #[error("point {point} out of range for {size} points")]
    PointOutOfRange { point: usize, size: usize },
    #[error("values vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("delta {delta} outside the scale window [{lo}, {hi}]")]
    BadScaleWindow { delta: f64, lo: f64, hi: f64 },
    #[error("level {level} out of range (hierarchy has levels 0..={max})")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("{size} points exceed the pair-reduction cardinality cap a^n = {cap}")]
    CardinalityExceeded { size: usize, cap: f64 },
    #[error("no pair set satisfying the reduction contract was found")]
    ContractUnsatisfiable,
}

/// Radii eps_n = eps0 * 2^(-n), n = 0..=levels; halving is exact in floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricGrid {
    eps0: f64,
    levels: usize,
}

impl GeometricGrid {
    pub fn new(eps0: f64, levels: usize) -> Result<Self, ChainingError> {
        if !(eps0 > 0.0) || !eps0.is_finite() {
            return Err(ChainingError::BadGrid(format!("eps0 = {eps0} must be positive")));
        }
        Ok(GeometricGrid { eps0, levels })
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn eps(&self, n: usize) -> f64 {
        self.eps0 * 0.5f64.powi(n as i32)
    }
}

/// Covers C_0..C_N of one space at the grid radii.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverHierarchy {
    space: FinitePseudoMetric,
    grid: GeometricGrid,
    covers: Vec<Cover>,
}

/// `exact` requests provably minimal covers per level (n <= 20); otherwise
/// greedy covers are used, which are valid but possibly larger.
pub fn build_hierarchy(
    space: &FinitePseudoMetric,
    eps0: f64,
    levels: usize,
    exact: bool,
) -> Result<CoverHierarchy, ChainingError> {
    let grid = GeometricGrid::new(eps0, levels)?;
    let covers = (0..=levels)
        .map(|n| {
            let eps = grid.eps(n);
            if exact {
                minimal_cover(space, eps).map_err(ChainingError::from)
            } else {
                Ok(greedy_cover(space, eps))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CoverHierarchy { space: space.clone(), grid, covers })
}

impl CoverHierarchy {
    pub fn space(&self) -> &FinitePseudoMetric {
        &self.space
    }

    pub fn grid(&self) -> &GeometricGrid {
        &self.grid
    }

    pub fn cover(&self, n: usize) -> &Cover {
        &self.covers[n]
    }

    pub fn levels(&self) -> usize {
        self.grid.levels
    }
}

/// centers[n] is the chain point at level n; centers[N] is the point itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSequence {
    pub point: usize,
    pub centers: Vec<usize>,
}

/// Walks from the point down the hierarchy, at each coarser level choosing
/// the nearest center (smallest index on ties). The cover property makes
/// every hop at most eps_n.
pub fn chain(point: usize, hierarchy: &CoverHierarchy) -> Result<ChainSequence, ChainingError> {
    let space = &hierarchy.space;
    if point >= space.len() {
        return Err(ChainingError::PointOutOfRange { point, size: space.len() });
    }
    let levels = hierarchy.levels();
    let mut centers = vec![0usize; levels + 1];
    centers[levels] = point;
    for n in (0..levels).rev() {
        let target = centers[n + 1];
        let best = hierarchy.covers[n]
            .centers
            .iter()
            .copied()
            .min_by(|&a, &b| {
                space
                    .d(a, target)
                    .partial_cmp(&space.d(b, target))
                    .expect("distances are not NaN")
                    .then(a.cmp(&b))
            })
            .expect("covers are never empty");
        centers[n] = best;
    }
    Ok(ChainSequence { point, centers })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleChangeCheck {
    pub lhs: f64,
    /// 2^p * sup over coarse pairs within eps0 * 2^(3-m).
    pub coarse_term: f64,
    /// 4^p * sup over fine centers of the chain displacement to level m.
    pub chain_term: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Two-scale comparison: the p-th power modulus over the finest cover at
/// separation delta against the coarse-grid modulus plus chain displacement.
/// Valid whenever eps_m <= delta <= 4 eps_m, and then always true.
pub fn scale_change_check(
    values: &[f64],
    p: f64,
    delta: f64,
    hierarchy: &CoverHierarchy,
    m: usize,
) -> Result<ScaleChangeCheck, ChainingError> {
    let space = &hierarchy.space;
    if values.len() != space.len() {
        return Err(ChainingError::DimensionMismatch { expected: space.len(), got: values.len() });
    }
    assert!(p > 0.0, "exponent must be positive");
    let levels = hierarchy.levels();
    if m >= levels {
        return Err(ChainingError::LevelOutOfRange { level: m, max: levels.saturating_sub(1) });
    }
    let eps_m = hierarchy.grid.eps(m);
    if !(eps_m <= delta && delta <= 4.0 * eps_m) {
        return Err(ChainingError::BadScaleWindow { delta, lo: eps_m, hi: 4.0 * eps_m });
    }
    let fine = &hierarchy.covers[levels].centers;
    let coarse = &hierarchy.covers[m].centers;

    let sup_pairs = |centers: &[usize], sep: f64| -> f64 {
        let mut sup = 0.0f64;
        for (a, &s) in centers.iter().enumerate() {
            for &t in &centers[a + 1..] {
                if space.d(s, t) <= sep {
                    sup = sup.max((values[s] - values[t]).abs());
                }
            }
        }
        sup
    };

    let lhs = sup_pairs(fine, delta).powf(p);
    let coarse_sep = hierarchy.grid.eps0 * 0.5f64.powi(m as i32 - 3);
    let coarse_term = 2.0f64.powf(p) * sup_pairs(coarse, coarse_sep).powf(p);
    let mut chain_sup = 0.0f64;
    for &s in fine {
        let seq = chain(s, hierarchy)?;
        chain_sup = chain_sup.max((values[s] - values[seq.centers[m]]).abs());
    }
    let chain_term = 4.0f64.powf(p) * chain_sup.powf(p);
    let rhs = coarse_term + chain_term;
    Ok(ScaleChangeCheck { lhs, coarse_term, chain_term, rhs, ok: lhs <= rhs })
}

/// Result of pair reduction: ordered pairs, every one within c*n, at most
/// a*|J| of them, and a common-witness guarantee for all close pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairReduction {
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairContractReport {
    pub cardinality_ok: bool,
    pub distances_ok: bool,
    pub witnesses_ok: bool,
}

impl PairContractReport {
    pub fn all_ok(&self) -> bool {
        self.cardinality_ok && self.distances_ok && self.witnesses_ok
    }
}

/// Checks the three-part contract of `pair_reduction` for a given pair set.
/// The witness clause ranges over distinct points at distance <= c; the
/// triangle inequality then gives, for every f,
/// sup_{d<=c} |f(s)-f(t)| <= 2 sup_K |f(s)-f(u)|.
pub fn verify_pair_contract(
    space: &FinitePseudoMetric,
    a: usize,
    n: usize,
    c: f64,
    pairs: &[(usize, usize)],
) -> PairContractReport {
    let size = space.len();
    let cardinality_ok = pairs.len() <= a * size;
    let slack = 1e-12 * (1.0 + c * n as f64);
    let distances_ok = pairs.iter().all(|&(s, t)| space.d(s, t) <= c * n as f64 + slack);
    let set: BTreeSet<(usize, usize)> = pairs.iter().copied().collect();
    let mut witnesses_ok = true;
    'outer: for s in 0..size {
        for t in (s + 1)..size {
            if space.d(s, t) <= c {
                let found = (0..size)
                    .any(|u| set.contains(&(s, u)) && set.contains(&(t, u)));
                if !found {
                    witnesses_ok = false;
                    break 'outer;
                }
            }
        }
    }
    PairContractReport { cardinality_ok, distances_ok, witnesses_ok }
}

/// BFS balls of hop-radius n-1 in the closeness graph (edges at distance
/// <= c), rooted greedily at the smallest uncovered index. Returns the hub
/// of each point.
fn cluster_hubs(space: &FinitePseudoMetric, c: f64, radius: usize) -> Vec<usize> {
    let size = space.len();
    let mut hub = vec![usize::MAX; size];
    for root in 0..size {
        if hub[root] != usize::MAX {
            continue;
        }
        hub[root] = root;
        let mut frontier = vec![root];
        for _ in 0..radius {
            let mut next = Vec::new();
            for &v in &frontier {
                for w in 0..size {
                    if hub[w] == usize::MAX && space.d(v, w) <= c {
                        hub[w] = root;
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
    }
    hub
}

fn hub_construction(space: &FinitePseudoMetric, c: f64, n: usize) -> Vec<(usize, usize)> {
    let size = space.len();
    let hub = cluster_hubs(space, c, n.saturating_sub(1));
    let mut set = BTreeSet::new();
    for s in 0..size {
        for t in (s + 1)..size {
            if space.d(s, t) <= c {
                // Witness: the hub of the smaller endpoint.
                let u = hub[s];
                set.insert((s, u));
                set.insert((t, u));
            }
        }
    }
    set.into_iter().collect()
}

/// Exhaustive fallback: assign each close pair a witness u, minimizing the
/// resulting pair set under the cardinality budget.
fn witness_search(
    space: &FinitePseudoMetric,
    a: usize,
    n: usize,
    c: f64,
) -> Option<Vec<(usize, usize)>> {
    let size = space.len();
    let budget = a * size;
    let mut close_pairs = Vec::new();
    for s in 0..size {
        for t in (s + 1)..size {
            if space.d(s, t) <= c {
                close_pairs.push((s, t));
            }
        }
    }
    let reach = c * n as f64;
    let mut candidates: Vec<Vec<usize>> = close_pairs
        .iter()
        .map(|&(s, t)| {
            (0..size)
                .filter(|&u| space.d(s, u) <= reach && space.d(t, u) <= reach)
                .collect()
        })
        .collect();
    if candidates.iter().any(|c| c.is_empty()) {
        return None;
    }
    // Most-constrained pair first.
    let mut order: Vec<usize> = (0..close_pairs.len()).collect();
    order.sort_by_key(|&i| candidates[i].len());
    let ordered_pairs: Vec<(usize, usize)> = order.iter().map(|&i| close_pairs[i]).collect();
    let ordered_cands: Vec<Vec<usize>> = order.iter().map(|&i| std::mem::take(&mut candidates[i])).collect();

    struct Search<'a> {
        pairs: &'a [(usize, usize)],
        cands: &'a [Vec<usize>],
        budget: usize,
        nodes: usize,
        best: Option<BTreeSet<(usize, usize)>>,
    }
    impl Search<'_> {
        fn go(&mut self, idx: usize, acc: &mut BTreeSet<(usize, usize)>) {
            if self.nodes > 200_000 || self.best.is_some() {
                return;
            }
            self.nodes += 1;
            if acc.len() > self.budget {
                return;
            }
            if idx == self.pairs.len() {
                self.best = Some(acc.clone());
                return;
            }
            let (s, t) = self.pairs[idx];
            for &u in &self.cands[idx] {
                let added: Vec<(usize, usize)> = [(s, u), (t, u)]
                    .into_iter()
                    .filter(|p| acc.insert(*p))
                    .collect();
                self.go(idx + 1, acc);
                for p in added {
                    acc.remove(&p);
                }
                if self.best.is_some() {
                    return;
                }
            }
        }
    }
    let mut search =
        Search { pairs: &ordered_pairs, cands: &ordered_cands, budget, nodes: 0, best: None };
    let mut acc = BTreeSet::new();
    search.go(0, &mut acc);
    search.best.map(|s| s.into_iter().collect())
}

/// Reduces the close-pair modulus over J to at most a*|J| ordered pairs of
/// reach c*n. The hub construction is tried first and the returned set is
/// always re-verified against the full contract; on failure a bounded
/// exhaustive witness search runs before giving up.
pub fn pair_reduction(
    space: &FinitePseudoMetric,
    a: usize,
    n: usize,
    c: f64,
) -> Result<PairReduction, ChainingError> {
    assert!(a >= 2, "reduction factor must be at least 2");
    assert!(c > 0.0, "closeness scale must be positive");
    let size = space.len();
    let cap = (a as f64).powi(n as i32);
    if size as f64 > cap {
        return Err(ChainingError::CardinalityExceeded { size, cap });
    }
    let pairs = hub_construction(space, c, n);
    if verify_pair_contract(space, a, n, c, &pairs).all_ok() {
        return Ok(PairReduction { pairs });
    }
    if size <= 12 {
        if let Some(pairs) = witness_search(space, a, n, c) {
            if verify_pair_contract(space, a, n, c, &pairs).all_ok() {
                return Ok(PairReduction { pairs });
            }
        }
    }
    Err(ChainingError::ContractUnsatisfiable)
}

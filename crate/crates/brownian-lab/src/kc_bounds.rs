//! Explicit continuity-theorem constants: the R_p constant, the finite-set
//! moment bound, the summed chaining constant L, and Monte Carlo checks of
//! the moment inequality on sampled ensembles.

use crate::brownian::{holder_sup_ratio, PathEnsemble};
use crate::tol::SERIES_TAIL_REL_TOL;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KcError {
    #[error("need q > d and p > 0, got p = {p}, q = {q}, d = {d}")]
    BadExponents { p: f64, q: f64, d: f64 },
    #[error("series diverges: beta = {beta} is not below the critical exponent {critical}")]
    DivergentSeries { beta: f64, critical: f64 },
    #[error("ensemble grid has fewer than two times")]
    DegenerateGrid,
    #[error("bad parameters: {0}")]
    BadParams(String),
}

/// Moment-inequality exponents: E|X_s - X_t|^p <= M |s - t|^q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KolmogorovParams {
    pub p: f64,
    pub q: f64,
    pub m: f64,
}

impl KolmogorovParams {
    pub fn new(p: f64, q: f64, m: f64) -> Result<Self, KcError> {
        if !(p > 0.0 && p.is_finite()) || !(q > 0.0 && q.is_finite()) {
            return Err(KcError::BadParams(format!("exponents p = {p}, q = {q} must be positive")));
        }
        if !(m >= 0.0 && m.is_finite()) {
            return Err(KcError::BadParams(format!("moment constant M = {m} must be >= 0")));
        }
        Ok(KolmogorovParams { p, q, m })
    }
}

/// Everything the chaining constant depends on; beta admissibility is
/// checked by the operations, not here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KcBoundInputs {
    pub params: KolmogorovParams,
    pub c: f64,
    pub d: f64,
    pub beta: f64,
    pub diam: f64,
}

impl KcBoundInputs {
    pub fn new(
        params: KolmogorovParams,
        c: f64,
        d: f64,
        beta: f64,
        diam: f64,
    ) -> Result<Self, KcError> {
        if !(c > 0.0 && c.is_finite()) || !(d > 0.0 && d.is_finite()) {
            return Err(KcError::BadParams(format!("covering constants c = {c}, d = {d}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(KcError::BadParams(format!("beta = {beta} must be positive")));
        }
        if !(diam >= 0.0 && diam.is_finite()) {
            return Err(KcError::BadParams(format!("diameter {diam} must be >= 0")));
        }
        Ok(KcBoundInputs { params, c, d, beta, diam })
    }

    pub fn critical_beta(&self) -> f64 {
        (self.params.q - self.d) / self.params.p
    }
}

/// R_p = max{ 1/(2^(q-d) - 1), 1/(2^((q-d)/p) - 1)^p }. Both branches agree
/// at p = 1.
pub fn rp_constant(p: f64, q: f64, d: f64) -> Result<f64, KcError> {
    if !(q > d) || !(p > 0.0) {
        return Err(KcError::BadExponents { p, q, d });
    }
    let e = q - d;
    let first = 1.0 / (2f64.powf(e) - 1.0);
    let second = 1.0 / (2f64.powf(e / p) - 1.0).powf(p);
    Ok(first.max(second))
}

/// 2^(2p+4q+1) M c delta^(q-d) (4^d max(0, log2(c 4^d delta^-d))^q + R_p).
pub fn finite_set_bound(
    params: &KolmogorovParams,
    c: f64,
    d: f64,
    delta: f64,
) -> Result<f64, KcError> {
    if !(c > 0.0 && c.is_finite()) || !(d > 0.0 && d.is_finite()) {
        return Err(KcError::BadParams(format!("covering constants c = {c}, d = {d}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(KcError::BadParams(format!("delta = {delta} must be positive")));
    }
    let (p, q, m) = (params.p, params.q, params.m);
    let rp = rp_constant(p, q, d)?;
    let lead = 2f64.powf(2.0 * p + 4.0 * q + 1.0) * m * c * delta.powf(q - d);
    let log_term = (c * 4f64.powf(d) * delta.powf(-d)).log2().max(0.0);
    Ok(lead * (4f64.powf(d) * log_term.powf(q) + rp))
}

/// The summed chaining constant with its truncation certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChentsovL {
    pub value: f64,
    /// Per-k summands 2^(k beta p) fsb(M=1, c, d, 2 eta_k).
    pub terms: Vec<f64>,
    /// Analytic bound on the dropped tail at truncation.
    pub tail_bound: f64,
}

/// Sum over k of 2^(k beta p) * finite_set_bound(M=1, c, d, 2 eta_k) with
/// eta_k = 2^-k (diam + 1), finite exactly when beta < (q - d)/p.
pub fn chentsov_constant_l(inputs: &KcBoundInputs) -> Result<ChentsovL, KcError> {
    chentsov_constant_l_truncated(inputs, 0)
}

/// Same series, forced to take at least `min_terms` terms before the tail
/// criterion may stop it; used to confirm truncation stability.
///
/// Truncation: with rho = 2^(beta p - (q - d)) < 1, every term with k >= 1
/// is at most A rho^k k^q for an explicit A, so once rho ((k+2)/(k+1))^q < 1
/// the dropped tail is at most A rho^(k+1) (k+1)^q / (1 - rho ((k+2)/(k+1))^q);
/// we stop when that is below 1e-9 of the running sum.
pub fn chentsov_constant_l_truncated(
    inputs: &KcBoundInputs,
    min_terms: usize,
) -> Result<ChentsovL, KcError> {
    let KcBoundInputs { params, c, d, beta, diam } = *inputs;
    let (p, q) = (params.p, params.q);
    let critical = inputs.critical_beta();
    if !(q > d) {
        return Err(KcError::BadExponents { p, q, d });
    }
    if beta >= critical {
        return Err(KcError::DivergentSeries { beta, critical });
    }
    let one = KolmogorovParams { m: 1.0, ..params };
    let rho = 2f64.powf(beta * p - (q - d));
    let rp = rp_constant(p, q, d)?;
    // term_k = K rho^k (4^d max(0, a + k d)^q + R_p) with these K and a.
    let k_front = 2f64.powf(2.0 * p + 4.0 * q + 1.0) * c * (2.0 * (diam + 1.0)).powf(q - d);
    let a = c.log2() + d * (1.0 - (diam + 1.0).log2());
    let big_a = k_front * (4f64.powf(d) * (a.max(0.0) + d).powf(q) + rp);

    let mut terms = Vec::new();
    let mut sum = 0.0f64;
    let mut k = 0usize;
    loop {
        let eta = 0.5f64.powi(k as i32) * (diam + 1.0);
        let term = 2f64.powf(k as f64 * beta * p) * finite_set_bound(&one, c, d, 2.0 * eta)?;
        sum += term;
        terms.push(term);
        let next = (k + 1) as f64;
        let r = rho * ((next + 1.0) / next).powf(q);
        if k + 1 >= min_terms.max(1) && r < 1.0 {
            let tail = big_a * rho.powf(next) * next.powf(q) / (1.0 - r);
            if tail <= SERIES_TAIL_REL_TOL * sum {
                return Ok(ChentsovL { value: sum, terms, tail_bound: tail });
            }
        }
        k += 1;
    }
}

fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 4.0 {
        let s = x * x;
        s * s
    } else {
        x.abs().powf(p)
    }
}

/// Empirical moment constant: max over grid pairs of mean |X_s - X_t|^p
/// divided by |s - t|^q. Coincident times cannot occur on valid grids.
pub fn kolmogorov_condition_estimate(
    ensemble: &PathEnsemble,
    p: f64,
    q: f64,
) -> Result<f64, KcError> {
    if !(p > 0.0) || !(q > 0.0) {
        return Err(KcError::BadParams(format!("exponents p = {p}, q = {q}")));
    }
    let times = ensemble.times();
    if times.len() < 2 || ensemble.count() == 0 {
        return Err(KcError::DegenerateGrid);
    }
    let mut pairs = Vec::new();
    for j in 0..times.len() {
        for k in (j + 1)..times.len() {
            pairs.push((j, k));
        }
    }
    let count = ensemble.count() as f64;
    let estimate = pairs
        .par_iter()
        .map(|&(j, k)| {
            let dt = times[k] - times[j];
            let mean: f64 = ensemble
                .paths()
                .iter()
                .map(|path| pow_abs(path[k] - path[j], p))
                .sum::<f64>()
                / count;
            mean / dt.powf(q)
        })
        .reduce(|| 0.0, f64::max);
    Ok(estimate)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KcCheckReport {
    pub p: f64,
    pub q: f64,
    pub m: f64,
    pub beta: f64,
    pub c: f64,
    pub d: f64,
    pub diam: f64,
    pub count: usize,
    /// Monte Carlo estimate of E[sup over pairs of |dX|^p / dt^(beta p)].
    pub lhs: f64,
    /// M * L from the summed chaining constant.
    pub rhs: f64,
    pub slack: f64,
    pub l_terms: usize,
    pub pass: bool,
}

/// Monte Carlo check of the moment inequality E[sup ratio^p] <= M L, with
/// the 0/0 = 0 convention on coincident times.
pub fn kc_inequality_check(
    ensemble: &PathEnsemble,
    inputs: &KcBoundInputs,
) -> Result<KcCheckReport, KcError> {
    let l = chentsov_constant_l(inputs)?;
    let KcBoundInputs { params, c, d, beta, diam } = *inputs;
    let times = ensemble.times();
    if times.len() < 2 || ensemble.count() == 0 {
        return Err(KcError::DegenerateGrid);
    }
    let lhs = ensemble
        .paths()
        .par_iter()
        .map(|path| holder_sup_ratio(times, path, beta, f64::INFINITY).powf(params.p))
        .sum::<f64>()
        / ensemble.count() as f64;
    let rhs = params.m * l.value;
    Ok(KcCheckReport {
        p: params.p,
        q: params.q,
        m: params.m,
        beta,
        c,
        d,
        diam,
        count: ensemble.count(),
        lhs,
        rhs,
        slack: rhs - lhs,
        l_terms: l.terms.len(),
        pass: lhs <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brownian::{sample_increments, DyadicGrid, Grid};
    use crate::rng;

    fn params(p: f64, q: f64, m: f64) -> KolmogorovParams {
        KolmogorovParams::new(p, q, m).unwrap()
    }

    #[test]
    fn rp_constant_examples() {
        assert_eq!(rp_constant(1.0, 2.0, 1.0).unwrap(), 1.0);
        let r = rp_constant(2.0, 2.0, 1.0).unwrap();
        // (sqrt(2) - 1)^-2 = 3 + 2 sqrt(2)
        assert!((r - (3.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12, "r = {r}");
        let r = rp_constant(1.0, 3.0, 1.0).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            rp_constant(1.0, 1.0, 1.0),
            Err(KcError::BadExponents { .. })
        ));
    }

    #[test]
    fn rp_branches_coincide_at_p_one() {
        for i in 1..20 {
            let q = 1.0 + i as f64 * 0.37;
            let d = 0.4 * i as f64 % 1.0 + 0.1;
            let r = rp_constant(1.0, q, d).unwrap();
            let first = 1.0 / (2f64.powf(q - d) - 1.0);
            assert!((r - first).abs() <= 1e-15 * first.abs(), "q={q} d={d}");
        }
    }

    #[test]
    fn finite_set_bound_examples() {
        let zero = params(2.0, 2.0, 0.0);
        assert_eq!(finite_set_bound(&zero, 1.0, 1.0, 0.5).unwrap(), 0.0);

        let unit = params(2.0, 2.0, 1.0);
        let v = finite_set_bound(&unit, 1.0, 1.0, 1.0).unwrap();
        let hand = 8192.0 * (16.0 + 3.0 + 2.0 * 2f64.sqrt());
        assert!((v - hand).abs() < 1e-9 * hand, "v = {v}, hand = {hand}");

        // Small-delta regime: re-evaluate the printed formula directly.
        let delta = 0.5f64.powi(10);
        let v = finite_set_bound(&unit, 1.0, 1.0, delta).unwrap();
        let rp = 3.0 + 2.0 * 2f64.sqrt();
        let direct = 8192.0 * delta * (4.0 * (4.0 / delta).log2().powf(2.0) + rp);
        assert!((v - direct).abs() < 1e-9 * direct, "v = {v}, direct = {direct}");

        assert!(finite_set_bound(&unit, 1.0, 1.0, 0.0).is_err());
        assert!(matches!(
            finite_set_bound(&params(2.0, 1.0, 1.0), 1.0, 1.0, 0.5),
            Err(KcError::BadExponents { .. })
        ));
    }

    #[test]
    fn finite_set_bound_monotone_in_m_and_c() {
        for i in 0..50u64 {
            let p = 0.5 + (rng::key(i, &[0]) % 40) as f64 / 10.0;
            let d = 0.2 + (rng::key(i, &[1]) % 20) as f64 / 10.0;
            let q = d + 0.1 + (rng::key(i, &[2]) % 30) as f64 / 10.0;
            let c = 0.1 + (rng::key(i, &[3]) % 50) as f64 / 10.0;
            let delta = 0.01 + (rng::key(i, &[4]) % 300) as f64 / 100.0;
            let m = (rng::key(i, &[5]) % 10) as f64;
            let base = finite_set_bound(&params(p, q, m), c, d, delta).unwrap();
            let more_m = finite_set_bound(&params(p, q, m + 1.0), c, d, delta).unwrap();
            let more_c = finite_set_bound(&params(p, q, m), c + 0.5, d, delta).unwrap();
            assert!(more_m >= base);
            assert!(more_c >= base);
        }
    }

    #[test]
    fn chentsov_rejects_beta_at_or_above_critical() {
        let inputs = KcBoundInputs::new(params(2.0, 2.0, 1.0), 1.0, 1.0, 0.5, 1.0).unwrap();
        match chentsov_constant_l(&inputs) {
            Err(KcError::DivergentSeries { beta, critical }) => {
                assert_eq!(beta, 0.5);
                assert_eq!(critical, 0.5);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
        let above = KcBoundInputs::new(params(2.0, 2.0, 1.0), 1.0, 1.0, 0.7, 1.0).unwrap();
        assert!(chentsov_constant_l(&above).is_err());
    }

    #[test]
    fn chentsov_converges_and_is_truncation_stable() {
        let inputs = KcBoundInputs::new(params(2.0, 2.0, 1.0), 1.0, 1.0, 0.3, 1.0).unwrap();
        let l = chentsov_constant_l(&inputs).unwrap();
        assert!(l.value.is_finite() && l.value > 0.0);
        assert!(l.tail_bound <= 1e-9 * l.value);
        let doubled = chentsov_constant_l_truncated(&inputs, 2 * l.terms.len()).unwrap();
        assert!(doubled.terms.len() >= 2 * l.terms.len());
        let rel = (doubled.value - l.value).abs() / l.value;
        assert!(rel < 1e-6, "rel = {rel}");
    }

    #[test]
    fn chentsov_matches_long_summation() {
        // Independent oracle: sum far past the stopping point.
        let inputs = KcBoundInputs::new(params(3.0, 2.5, 1.0), 1.3, 1.0, 0.2, 2.0).unwrap();
        let l = chentsov_constant_l(&inputs).unwrap();
        let one = params(3.0, 2.5, 1.0);
        let mut sum = 0.0;
        for k in 0..400 {
            let eta = 0.5f64.powi(k) * 3.0;
            sum += 2f64.powf(k as f64 * 0.2 * 3.0)
                * finite_set_bound(&one, 1.3, 1.0, 2.0 * eta).unwrap();
        }
        assert!((l.value - sum).abs() <= 1e-8 * sum, "{} vs {sum}", l.value);
    }

    #[test]
    fn chentsov_nondecreasing_in_beta() {
        let mut prev = 0.0;
        for i in 1..9 {
            let beta = i as f64 * 0.05;
            let inputs = KcBoundInputs::new(params(2.0, 2.0, 1.0), 1.0, 1.0, beta, 1.0).unwrap();
            let l = chentsov_constant_l(&inputs).unwrap().value;
            assert!(l >= prev, "L({beta}) = {l} < {prev}");
            prev = l;
        }
    }

    #[test]
    fn condition_estimate_on_constant_paths() {
        let grid = Grid::Dyadic(DyadicGrid::new(2, 1.0).unwrap());
        let paths = vec![vec![1.5; 5]; 10];
        let e = PathEnsemble::from_parts(grid, paths, 0).unwrap();
        assert_eq!(kolmogorov_condition_estimate(&e, 4.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn condition_estimate_brownian_second_moment() {
        let grid = Grid::Dyadic(DyadicGrid::new(3, 1.0).unwrap());
        let e = sample_increments(&grid, 17, 40_000);
        let m = kolmogorov_condition_estimate(&e, 2.0, 1.0).unwrap();
        // E|dB|^2 = dt exactly; the max over 36 pairs sits slightly above 1.
        assert!((0.95..1.15).contains(&m), "m = {m}");
    }

    #[test]
    fn condition_estimate_brownian_fourth_moment() {
        let grid = Grid::Dyadic(DyadicGrid::new(3, 1.0).unwrap());
        let e = sample_increments(&grid, 23, 100_000);
        let m = kolmogorov_condition_estimate(&e, 4.0, 2.0).unwrap();
        assert!((2.7..3.3).contains(&m), "m = {m}");
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        let grid = Grid::explicit(vec![1.0]).unwrap();
        let e = sample_increments(&grid, 0, 5);
        assert!(matches!(
            kolmogorov_condition_estimate(&e, 2.0, 1.0),
            Err(KcError::DegenerateGrid)
        ));
    }

    #[test]
    fn inequality_check_constant_ensemble() {
        let grid = Grid::Dyadic(DyadicGrid::new(2, 1.0).unwrap());
        let e = PathEnsemble::from_parts(grid, vec![vec![0.0; 5]; 8], 0).unwrap();
        let inputs = KcBoundInputs::new(params(4.0, 2.0, 0.0), 1.0, 1.0, 0.2, 1.0).unwrap();
        let report = kc_inequality_check(&e, &inputs).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert_eq!(report.rhs, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn inequality_check_brownian_level_five() {
        let grid = Grid::Dyadic(DyadicGrid::new(5, 1.0).unwrap());
        let e = sample_increments(&grid, 31, 200);
        let inputs = KcBoundInputs::new(params(4.0, 2.0, 3.0), 1.0, 1.0, 0.2, 1.0).unwrap();
        let report = kc_inequality_check(&e, &inputs).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.slack > 0.0);
        assert!(report.rhs / report.lhs.max(1.0) > 100.0, "bound should be loose");
    }

    #[test]
    fn inequality_check_rejects_bad_beta() {
        let grid = Grid::Dyadic(DyadicGrid::new(2, 1.0).unwrap());
        let e = sample_increments(&grid, 1, 10);
        let inputs = KcBoundInputs::new(params(4.0, 2.0, 3.0), 1.0, 1.0, 0.5, 1.0).unwrap();
        assert!(matches!(
            kc_inequality_check(&e, &inputs),
            Err(KcError::DivergentSeries { .. })
        ));
    }
}

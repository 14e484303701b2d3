//! Release gate: one test per criterion, each printing a single verdict line
//! (run with `--nocapture` to see them on success).

use std::fs;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

use brownian_lab::chaining::{
    build_hierarchy, pair_reduction, scale_change_check, verify_pair_contract,
};
use brownian_lab::exact::{rat_from_f64, Rat};
use brownian_lab::kc_bounds::{
    chentsov_constant_l, chentsov_constant_l_truncated, rp_constant, KcBoundInputs, KcError,
    KolmogorovParams,
};
use brownian_lab::metric_cover::FinitePseudoMetric;
use brownian_lab::projective::{gram_identity_check, min_kernel_exact, TimePoints};
use brownian_lab::rng;
use brownian_lab::stats::{independence_ecf_test, ProbeSet};

fn verdict(criterion: u32, ok: bool, detail: &str) {
    let word = if ok { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion:02}: {word} - {detail}");
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_brownian-lab"));
    cmd.env_remove("BROWNIAN_LAB_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn brownian-lab")
}

fn report(out: &Output) -> Value {
    let text = String::from_utf8(out.stdout.clone()).expect("utf8 stdout");
    serde_json::from_str(&text).expect("report json")
}

fn all_tests_pass(report: &Value) -> bool {
    report["tests"]
        .as_array()
        .map(|ts| !ts.is_empty() && ts.iter().all(|t| t["pass"] == Value::Bool(true)))
        .unwrap_or(false)
}

#[test]
fn criterion_01_covariance_grid() {
    let started = Instant::now();
    let out = run(&[
        "bm", "verify", "--suite", "cov", "--paths", "50000", "--level", "3", "--horizon", "2",
        "--seed", "0",
    ]);
    let elapsed = started.elapsed().as_secs_f64();
    let rep = report(&out);
    let entries = rep["tests"].as_array().map_or(0, Vec::len);
    let ok = out.status.code() == Some(0) && all_tests_pass(&rep) && elapsed < 60.0;
    verdict(
        1,
        ok,
        &format!(
            "empirical covariance on the quarter grid: {entries} pairs inside \
             5-sigma bands, 50000 paths in {elapsed:.1}s"
        ),
    );
}

#[test]
fn criterion_02_quartic_moment() {
    let out = run(&[
        "bm", "verify", "--suite", "moments", "--paths", "100000", "--level", "3", "--horizon",
        "2", "--seed", "0",
    ]);
    let rep = report(&out);
    let tests = rep["tests"].as_array().cloned().unwrap_or_default();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in &tests {
        let est = t["estimate"].as_f64().unwrap();
        lo = lo.min(est);
        hi = hi.max(est);
    }
    let ok = out.status.code() == Some(0)
        && all_tests_pass(&rep)
        && !tests.is_empty()
        && lo >= 2.85
        && hi <= 3.15;
    verdict(
        2,
        ok,
        &format!(
            "normalized fourth moments over {} increment pairs span [{lo:.3}, {hi:.3}] \
             inside [2.85, 3.15]",
            tests.len()
        ),
    );
}

#[test]
fn criterion_03_explicit_constants() {
    let target = (2f64.sqrt() - 1.0).powi(-2);
    let rp = rp_constant(2.0, 2.0, 1.0).unwrap();
    let rp_ok = (rp - target).abs() < 1e-12;

    let mut branches_ok = true;
    for &(q, d) in &[(2.0, 1.0), (3.0, 1.0), (2.5, 0.5)] {
        let val = rp_constant(1.0, q, d).unwrap();
        let closed = 1.0 / (2f64.powf(q - d) - 1.0);
        if (val - closed).abs() > 1e-15 * closed {
            branches_ok = false;
        }
    }

    let params = KolmogorovParams::new(2.0, 2.0, 1.0).unwrap();
    let inputs = KcBoundInputs::new(params, 1.0, 1.0, 0.3, 1.0).unwrap();
    let l = chentsov_constant_l(&inputs).unwrap();
    let doubled = chentsov_constant_l_truncated(&inputs, 2 * l.terms.len()).unwrap();
    let stable = l.value.is_finite()
        && l.value > 0.0
        && (doubled.value - l.value).abs() <= 1e-6 * l.value;

    let at_half = KcBoundInputs::new(params, 1.0, 1.0, 0.5, 1.0).unwrap();
    let diverges = matches!(
        chentsov_constant_l(&at_half),
        Err(KcError::DivergentSeries { beta, critical }) if beta == 0.5 && critical == 0.5
    );

    let ok = rp_ok && branches_ok && stable && diverges;
    verdict(
        3,
        ok,
        &format!(
            "rp(2,2,1) = {rp:.12} vs (sqrt(2)-1)^-2, p=1 branches coincide, \
             L = {:.6e} stable under doubled truncation, series diverges at beta = 1/2",
            l.value
        ),
    );
}

#[test]
fn criterion_04_kc_inequality() {
    let out = run(&[
        "kc", "check", "--level", "8", "--paths", "2000", "--p", "4", "--q", "2", "--m", "3",
        "--c", "1", "--d", "1", "--beta", "0.2", "--seed", "0",
    ]);
    let rep = report(&out);
    let lhs = rep["lhs"].as_f64().unwrap_or(f64::NAN);
    let rhs = rep["rhs"].as_f64().unwrap_or(f64::NAN);
    let slack = rep["slack"].as_f64().unwrap_or(f64::NAN);
    let ok = out.status.code() == Some(0)
        && rep["pass"] == Value::Bool(true)
        && lhs <= rhs
        && slack > 0.0;
    verdict(
        4,
        ok,
        &format!("E[sup ratio^4] = {lhs:.3} <= M*L = {rhs:.3e} on the level-8 grid, slack > 0"),
    );
}

#[test]
fn criterion_05_holder_dichotomy() {
    let out = run(&["bm", "verify", "--suite", "holder", "--paths", "100", "--seed", "0"]);
    let rep = report(&out);
    let tests = rep["tests"].as_array().cloned().unwrap_or_default();
    let medians: Vec<f64> = tests
        .iter()
        .filter(|t| {
            t["name"].as_str().is_some_and(|n| n.starts_with("holder_median(beta=0.55"))
        })
        .map(|t| t["estimate"].as_f64().unwrap())
        .collect();
    let increasing = medians.len() == 4 && medians.windows(2).all(|w| w[1] > w[0]);
    let ratio = tests
        .iter()
        .find(|t| t["name"] == "holder_growth_ratio(beta=0.45)")
        .and_then(|t| t["estimate"].as_f64())
        .unwrap_or(f64::NAN);
    let ok = out.status.code() == Some(0)
        && all_tests_pass(&rep)
        && increasing
        && ratio < 1.5;
    verdict(
        5,
        ok,
        &format!(
            "medians at beta 0.55 rise {medians:.3?} across levels 8..14; \
             beta 0.45 growth ratio {ratio:.3} < 1.5"
        ),
    );
}

fn random_times(trial: u64, tag: u64, max_len: usize) -> TimePoints {
    let len = (rng::key(trial, &[tag, 0]) % max_len as u64 + 2) as usize;
    let mut nums = std::collections::BTreeSet::new();
    let mut i = 0;
    while nums.len() < len {
        nums.insert(rng::key(trial, &[tag, 1, i]) % 64 + 1);
        i += 1;
    }
    let rats: Vec<Rat> = nums
        .into_iter()
        .map(|k| rat_from_f64(k as f64 / 16.0).unwrap())
        .collect();
    TimePoints::from_rats(rats).unwrap()
}

#[test]
fn criterion_06_projectivity_exact() {
    for trial in 0..100u64 {
        let full = random_times(trial, 6, 6);
        let keep_mask = rng::key(trial, &[6, 9]) % (1u64 << full.len()) | 1;
        let sub_rats: Vec<Rat> = full
            .rats()
            .iter()
            .enumerate()
            .filter(|(i, _)| keep_mask >> i & 1 == 1)
            .map(|(_, r)| r.clone())
            .collect();
        let subset = TimePoints::from_rats(sub_rats).unwrap();
        let positions = full.positions_of(&subset).unwrap();
        let parent = min_kernel_exact(&full);
        let fresh = min_kernel_exact(&subset);
        for (bi, &pi) in positions.iter().enumerate() {
            for (bj, &pj) in positions.iter().enumerate() {
                assert_eq!(
                    parent[pi][pj], fresh[bi][bj],
                    "trial {trial}: marginal covariance mismatch at ({bi},{bj})"
                );
            }
        }
    }

    for trial in 0..1000u64 {
        let times = random_times(trial, 7, 5);
        let coeffs: Vec<f64> = (0..times.len())
            .map(|i| (rng::key(trial, &[7, 9, i as u64]) % 1024) as f64 / 256.0 - 2.0)
            .collect();
        let check = gram_identity_check(&times, &coeffs).unwrap();
        assert!(check.equal, "trial {trial}: quadratic form differs from the integral");
    }

    verdict(
        6,
        true,
        "100 random (J, H) marginal covariances equal fresh min-kernel matrices exactly; \
         1000 Gram identities hold in rational arithmetic",
    );
}

#[test]
fn criterion_07_pair_reduction() {
    let mut worst_pairs = 0usize;
    for trial in 0..200u64 {
        let size = (rng::key(trial, &[70]) % 12 + 1) as usize;
        let n = (size as f64).log2().ceil().max(1.0) as usize;
        let pts: Vec<Vec<f64>> = (0..size)
            .map(|i| {
                vec![
                    (rng::key(trial, &[71, i as u64]) % 32) as f64 / 8.0,
                    (rng::key(trial, &[72, i as u64]) % 32) as f64 / 8.0,
                ]
            })
            .collect();
        let space = FinitePseudoMetric::from_points(&pts).unwrap();
        let c = 0.5 + (rng::key(trial, &[73]) % 16) as f64 / 8.0;
        let reduction = pair_reduction(&space, 2, n, c).unwrap();
        let contract = verify_pair_contract(&space, 2, n, c, &reduction.pairs);
        assert!(contract.all_ok(), "trial {trial}: contract violated: {contract:?}");
        worst_pairs = worst_pairs.max(reduction.pairs.len());

        for fmask in 0..(1u32 << size) {
            let f: Vec<f64> =
                (0..size).map(|i| if fmask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let mut close_sup = 0.0f64;
            for s in 0..size {
                for t in (s + 1)..size {
                    if space.d(s, t) <= c {
                        close_sup = close_sup.max((f[s] - f[t]).abs());
                    }
                }
            }
            let pair_sup = reduction
                .pairs
                .iter()
                .fold(0.0f64, |m, &(s, t)| m.max((f[s] - f[t]).abs()));
            assert!(
                close_sup <= 2.0 * pair_sup + 1e-12,
                "trial {trial} valuation {fmask:b}: {close_sup} > 2 * {pair_sup}"
            );
        }
    }
    verdict(
        7,
        true,
        &format!(
            "200 random spaces: pair sets stay within 2|J| (max {worst_pairs}), \
             distances bounded, factor-2 domination exhaustive over sign valuations"
        ),
    );
}

#[test]
fn criterion_08_scale_change() {
    let line: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64 / 8.0]).collect();
    let line_space = FinitePseudoMetric::from_points(&line).unwrap();
    let line_h = build_hierarchy(&line_space, 1.0, 3, true).unwrap();

    let cloud: Vec<Vec<f64>> = (0..12u64)
        .map(|i| {
            vec![
                (rng::key(8, &[1, i]) % 32) as f64 / 8.0,
                (rng::key(8, &[2, i]) % 32) as f64 / 8.0,
            ]
        })
        .collect();
    let cloud_space = FinitePseudoMetric::from_points(&cloud).unwrap();
    let cloud_h = build_hierarchy(&cloud_space, 6.0, 4, false).unwrap();

    for trial in 0..1000u64 {
        let (space, h) = if trial % 2 == 0 {
            (&line_space, &line_h)
        } else {
            (&cloud_space, &cloud_h)
        };
        let f: Vec<f64> = (0..space.len())
            .map(|i| (rng::key(trial, &[80, i as u64]) % 1024) as f64 / 256.0 - 2.0)
            .collect();
        let m = (rng::key(trial, &[81]) % h.levels() as u64) as usize;
        let scale = 1.0 + 3.0 * ((rng::key(trial, &[82]) % 256) as f64 / 255.0);
        let delta = h.grid().eps(m) * scale;
        let p = 0.5 + (rng::key(trial, &[83]) % 8) as f64 / 2.0;
        let check = scale_change_check(&f, p, delta, h, m).unwrap();
        assert!(check.ok, "trial {trial}: {check:?}");
    }
    verdict(8, true, "1000 random (f, delta, m) instances: two-scale inequality never violated");
}

#[test]
fn criterion_09_caratheodory_demo() {
    let out = run(&["sets", "demo"]);
    let v = report(&out);
    let members_exact = v["members"]
        .as_array()
        .is_some_and(|ms| ms.iter().all(|m| m["residual"] == "0" && m["ok"] == Value::Bool(true)));
    let mid = v["outer_measure"]
        .as_array()
        .and_then(|rows| rows.iter().find(|r| r["set"] == "{1,2}").cloned())
        .unwrap_or(Value::Null);
    let ok = out.status.code() == Some(0)
        && v["pass"] == Value::Bool(true)
        && members_exact
        && mid["outer"] == "1/2"
        && v["caratheodory_size"] == 16;
    verdict(
        9,
        ok,
        "dyadic content extends with exact zero residuals, mu({1,2}) = 1/2, \
         Caratheodory family is the full 16-set power set",
    );
}

#[test]
fn criterion_10_markov_and_independence() {
    let out = run(&[
        "bm", "verify", "--suite", "markov", "--paths", "20000", "--level", "4", "--horizon",
        "1", "--seed", "0",
    ]);
    let rep = report(&out);
    let cross_cov_pass = rep["tests"].as_array().is_some_and(|ts| {
        ts.iter().any(|t| {
            t["name"].as_str().is_some_and(|n| n.starts_with("markov_cross_cov"))
                && t["pass"] == Value::Bool(true)
        })
    });
    let suite_ok = out.status.code() == Some(0) && all_tests_pass(&rep) && cross_cov_pass;

    let xs: Vec<Vec<f64>> =
        (0..1_000_000u64).map(|i| vec![rng::standard_normal(42, &[10, i])]).collect();
    let probe = ProbeSet::new(vec![vec![1.0]]).unwrap();
    let ecf = independence_ecf_test(&xs, &xs, &probe, &probe).unwrap();
    let gap_target = (-1.0f64).exp() - (-2.0f64).exp();
    let ecf_ok = !ecf.pass && (ecf.estimate - gap_target).abs() <= 0.01;

    verdict(
        10,
        suite_ok && ecf_ok,
        &format!(
            "pre/post cross-covariances vanish and the suite passes; on Y = X the ECF \
             factorization gap is {:.4} vs e^-1 - e^-2 = {gap_target:.4}",
            ecf.estimate
        ),
    );
}

#[test]
fn criterion_11_invariance_suites() {
    let scaling = run(&[
        "bm", "verify", "--suite", "scaling", "--paths", "20000", "--level", "3", "--horizon",
        "2", "--seed", "0",
    ]);
    let scaling_ok = scaling.status.code() == Some(0) && all_tests_pass(&report(&scaling));

    let inversion = run(&[
        "bm", "verify", "--suite", "inversion", "--paths", "20000", "--seed", "0",
    ]);
    let inversion_ok = inversion.status.code() == Some(0) && all_tests_pass(&report(&inversion));

    let markov = run(&[
        "bm", "verify", "--suite", "markov", "--paths", "20000", "--level", "3", "--horizon",
        "1", "--seed", "0",
    ]);
    let markov_rep = report(&markov);
    let shift_entries: Vec<&Value> = markov_rep["tests"]
        .as_array()
        .map(|ts| {
            ts.iter()
                .filter(|t| t["name"].as_str().is_some_and(|n| n.starts_with("shifted_cov")))
                .collect()
        })
        .unwrap_or_default();
    let shift_ok = !shift_entries.is_empty()
        && shift_entries.iter().all(|t| t["pass"] == Value::Bool(true));

    let drift = run(&["bm", "verify", "--suite", "drift", "--paths", "10000", "--seed", "0"]);
    let drift_rep = report(&drift);
    let tail = drift_rep["tests"][0]["estimate"].as_f64().unwrap_or(f64::NAN);
    let drift_ok = drift.status.code() == Some(0) && all_tests_pass(&drift_rep) && tail < 0.01;

    verdict(
        11,
        scaling_ok && inversion_ok && shift_ok && drift_ok,
        &format!(
            "scaling (c=4), inversion, and shift (t0=0.5) ensembles match the min kernel; \
             drift tail fraction {tail:.4} < 0.01 over 10000 paths"
        ),
    );
}

#[test]
fn criterion_12_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["bm", "sample", "--level", "6", "--paths", "64", "--seed", "123", "--out"];
    let paths: Vec<_> = (0..3).map(|i| dir.path().join(format!("run{i}.ndjson"))).collect();

    let first = bin().args(args).arg(&paths[0]).output().unwrap();
    let second = bin().args(args).arg(&paths[1]).output().unwrap();
    let eight = bin()
        .env("BROWNIAN_LAB_THREADS", "8")
        .args(args)
        .arg(&paths[2])
        .output()
        .unwrap();
    let single = bin()
        .env("BROWNIAN_LAB_THREADS", "1")
        .args(args)
        .arg(&paths[0])
        .output()
        .unwrap();

    let bytes: Vec<Vec<u8>> = paths.iter().map(|p| fs::read(p).unwrap()).collect();
    let ok = first.status.success()
        && second.status.success()
        && eight.status.success()
        && single.status.success()
        && bytes[0] == bytes[1]
        && bytes[0] == bytes[2];
    verdict(
        12,
        ok,
        "repeated sampling and thread counts 1 vs 8 produce byte-identical output files",
    );
}

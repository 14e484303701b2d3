//! Command-line surface: reproducible batch experiments over the library,
//! with machine-readable reports.
//!
//! Exit codes: 0 = pass, 1 = a check failed (or a requested bound does not
//! exist), 2 = usage or configuration error. Outputs are byte-identical for
//! identical configs regardless of thread count; files are written via a
//! temporary sibling and an atomic rename.

use brownian_lab::brownian::{
    sample_increments, write_csv, write_ndjson, DyadicGrid, Grid,
};
use brownian_lab::gaussian::{self, CovarianceMatrix, GaussianMeasure, MeanVector};
use brownian_lab::kc_bounds::{
    chentsov_constant_l, kc_inequality_check, rp_constant, KcBoundInputs, KcError,
    KolmogorovParams,
};
use brownian_lab::metric_cover::{
    check_bounded_covering, default_eps_grid, greedy_cover, minimal_cover_number, CountKind,
    CoveringProfile, FinitePseudoMetric, MAX_EXACT_POINTS,
};
use brownian_lab::report::{run_suite, ReportError, RunConfig};
use brownian_lab::setsystems::{dyadic_demo_content, induced_outer_measure, parse_content_text};
use brownian_lab::stats::ProbeSet;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "brownian-lab", version, about = "Brownian motion simulation and verification")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Brownian ensembles: sampling and verification suites.
    Bm {
        #[command(subcommand)]
        cmd: BmCmd,
    },
    /// Continuity-theorem constants and the Monte Carlo moment check.
    Kc {
        #[command(subcommand)]
        cmd: KcCmd,
    },
    /// Covering-number table for a point cloud, optionally against a
    /// (c, d) profile.
    Cover(CoverArgs),
    /// Finite set-system extension demos.
    Sets {
        #[command(subcommand)]
        cmd: SetsCmd,
    },
    /// Gaussian measure utilities.
    Gauss {
        #[command(subcommand)]
        cmd: GaussCmd,
    },
}

#[derive(Args)]
struct SampleArgs {
    /// Dyadic grid level; the grid has 2^level + 1 times.
    #[arg(long, default_value_t = 10)]
    level: u32,
    /// Number of paths. Note: cov/moments/markov cost grows with the square
    /// of the grid size, and holder sweeps levels up to 14; use modest
    /// values there.
    #[arg(long = "paths", default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BmCmd {
    /// Sample an ensemble and write it out.
    Sample {
        #[command(flatten)]
        args: SampleArgs,
        #[arg(long, value_enum, default_value_t = SampleFormat::Ndjson)]
        format: SampleFormat,
    },
    /// Run a verification suite; exit 0 iff it passes.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteName,
        #[command(flatten)]
        args: SampleArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleFormat {
    Ndjson,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteName {
    Cov,
    Moments,
    Scaling,
    Markov,
    Inversion,
    Drift,
    Holder,
}

impl SuiteName {
    fn as_str(self) -> &'static str {
        match self {
            SuiteName::Cov => "cov",
            SuiteName::Moments => "moments",
            SuiteName::Scaling => "scaling",
            SuiteName::Markov => "markov",
            SuiteName::Inversion => "inversion",
            SuiteName::Drift => "drift",
            SuiteName::Holder => "holder",
        }
    }
}

#[derive(Args)]
struct KcParamArgs {
    #[arg(long, default_value_t = 4.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    /// Index-set diameter; defaults to the sampling horizon where one
    /// exists, else 1.
    #[arg(long)]
    diam: Option<f64>,
}

#[derive(Subcommand)]
enum KcCmd {
    /// Print R_p, the summed constant L, and its per-k terms.
    Bound {
        #[command(flatten)]
        params: KcParamArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a Brownian ensemble and check E[sup ratio^p] <= M L.
    Check {
        #[command(flatten)]
        params: KcParamArgs,
        /// Moment constant M.
        #[arg(long, default_value_t = 3.0)]
        m: f64,
        #[command(flatten)]
        args: SampleArgs,
    },
}

#[derive(Args)]
struct CoverArgs {
    /// CSV of point coordinates, one point per row.
    #[arg(long)]
    points: PathBuf,
    /// Comma-separated radii; default is a geometric grid below the
    /// diameter.
    #[arg(long)]
    eps: Option<String>,
    /// Profile constant c of the bound N_eps <= c eps^-d.
    #[arg(long)]
    c: Option<f64>,
    /// Profile exponent d.
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, value_enum, default_value_t = TableFormat::Json)]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum SetsCmd {
    /// Verify the extension pipeline on a content file, or on the bundled
    /// 4-point dyadic demo when no file is given.
    Demo {
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GaussCmd {
    /// Evaluate the characteristic function at probe vectors.
    Charfun {
        /// Covariance matrix CSV ("dim n" header); identity when absent.
        #[arg(long)]
        cov: Option<PathBuf>,
        /// Mean vector as one comma-separated line; zero when absent.
        #[arg(long)]
        mean: Option<PathBuf>,
        /// Dimension for the default standard normal.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Probe vector, comma-separated; repeatable. Defaults to the
        /// standard probe set for the dimension.
        #[arg(long = "probe")]
        probes: Vec<String>,
        #[arg(long, value_enum, default_value_t = TableFormat::Json)]
        format: TableFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Usage/config failures exit with 2; check failures exit with 1 through
/// the Ok(false) path instead.
struct UsageError(String);

impl<E: Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn main() -> ExitCode {
    if let Err(UsageError(msg)) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn init_threads() -> Result<(), UsageError> {
    if let Ok(raw) = std::env::var("BROWNIAN_LAB_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| UsageError(format!("BROWNIAN_LAB_THREADS = {raw:?} is not a number")))?;
        if n == 0 {
            return Err(UsageError("BROWNIAN_LAB_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| UsageError(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, UsageError> {
    match cli.cmd {
        Cmd::Bm { cmd: BmCmd::Sample { args, format } } => bm_sample(&args, format),
        Cmd::Bm { cmd: BmCmd::Verify { suite, args } } => bm_verify(suite, &args),
        Cmd::Kc { cmd: KcCmd::Bound { params, out } } => kc_bound(&params, out.as_deref()),
        Cmd::Kc { cmd: KcCmd::Check { params, m, args } } => kc_check(&params, m, &args),
        Cmd::Cover(args) => cover(&args),
        Cmd::Sets { cmd: SetsCmd::Demo { family, out } } => {
            sets_demo(family.as_deref(), out.as_deref())
        }
        Cmd::Gauss { cmd: GaussCmd::Charfun { cov, mean, dim, probes, format, out } } => {
            gauss_charfun(cov.as_deref(), mean.as_deref(), dim, &probes, format, out.as_deref())
        }
    }
}

/// Writes to a sibling temp file, then renames into place.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), UsageError> {
    match out {
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
        Some(path) => {
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(format!(".tmp{}", std::process::id()));
            let tmp = PathBuf::from(tmp);
            std::fs::write(&tmp, bytes)?;
            std::fs::rename(&tmp, path)?;
            Ok(())
        }
    }
}

fn dyadic_ensemble(args: &SampleArgs) -> Result<brownian_lab::brownian::PathEnsemble, UsageError> {
    let grid = Grid::Dyadic(DyadicGrid::new(args.level, args.horizon)?);
    Ok(sample_increments(&grid, args.seed, args.paths))
}

fn bm_sample(args: &SampleArgs, format: SampleFormat) -> Result<bool, UsageError> {
    let ensemble = dyadic_ensemble(args)?;
    let mut bytes = Vec::new();
    match format {
        SampleFormat::Ndjson => write_ndjson(&ensemble, &mut bytes)?,
        SampleFormat::Csv => write_csv(&ensemble, &mut bytes)?,
    }
    emit(args.out.as_deref(), &bytes)?;
    Ok(true)
}

fn bm_verify(suite: SuiteName, args: &SampleArgs) -> Result<bool, UsageError> {
    let config = RunConfig {
        seed: args.seed,
        count: args.paths,
        level: args.level,
        horizon: args.horizon,
        out: args.out.as_ref().map(|p| p.display().to_string()),
        format: "json".into(),
        ..RunConfig::default()
    };
    let report = match run_suite(suite.as_str(), &config) {
        Ok(report) => report,
        Err(ReportError::UnknownSuite(s)) => {
            return Err(UsageError(format!("unknown suite '{s}'")))
        }
        Err(e) => return Err(e.into()),
    };
    emit(args.out.as_deref(), report.to_json_line().as_bytes())?;
    if args.out.is_some() {
        // Still summarize on stdout for pipelines that only check the code.
        println!("{}: {}", report.suite, if report.pass { "pass" } else { "FAIL" });
    }
    Ok(report.pass)
}

fn kc_inputs(params: &KcParamArgs, horizon: Option<f64>) -> Result<KcBoundInputs, UsageError> {
    let diam = params.diam.or(horizon).unwrap_or(1.0);
    // M is irrelevant for the bound itself; the check passes its own.
    let kp = KolmogorovParams::new(params.p, params.q, 1.0)?;
    Ok(KcBoundInputs::new(kp, params.c, params.d, params.beta, diam)?)
}

fn kc_bound(params: &KcParamArgs, out: Option<&Path>) -> Result<bool, UsageError> {
    let inputs = kc_inputs(params, None)?;
    let rp = rp_constant(params.p, params.q, params.d)?;
    match chentsov_constant_l(&inputs) {
        Ok(l) => {
            let line = serde_json::json!({
                "rp": rp,
                "l": l.value,
                "terms": l.terms,
                "tail_bound": l.tail_bound,
                "critical_beta": inputs.critical_beta(),
                "inputs": inputs,
            });
            emit(out, format!("{line}\n").as_bytes())?;
            Ok(true)
        }
        Err(KcError::DivergentSeries { beta, critical }) => {
            eprintln!(
                "no bound: the series diverges at beta = {beta} (critical exponent {critical})"
            );
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

fn kc_check(params: &KcParamArgs, m: f64, args: &SampleArgs) -> Result<bool, UsageError> {
    let mut inputs = kc_inputs(params, Some(args.horizon))?;
    inputs.params = KolmogorovParams::new(params.p, params.q, m)?;
    let ensemble = dyadic_ensemble(args)?;
    match kc_inequality_check(&ensemble, &inputs) {
        Ok(report) => {
            let mut line = serde_json::to_string(&report).expect("report serializes");
            line.push('\n');
            emit(args.out.as_deref(), line.as_bytes())?;
            Ok(report.pass)
        }
        Err(KcError::DivergentSeries { beta, critical }) => {
            eprintln!(
                "no bound: the series diverges at beta = {beta} (critical exponent {critical})"
            );
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

fn parse_points_csv(text: &str) -> Result<Vec<Vec<f64>>, UsageError> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| UsageError(format!("line {}: bad number {tok:?}", lineno + 1)))
            })
            .collect::<Result<_, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(UsageError("no points in file".into()));
    }
    Ok(rows)
}

fn kind_str(kind: CountKind) -> &'static str {
    match kind {
        CountKind::Exact => "exact",
        CountKind::GreedyUpper => "greedy_upper",
        CountKind::SeparatedLower => "separated_lower",
    }
}

fn cover(args: &CoverArgs) -> Result<bool, UsageError> {
    let text = std::fs::read_to_string(&args.points)?;
    let points = parse_points_csv(&text)?;
    let space = FinitePseudoMetric::from_points(&points)?;
    let eps_grid: Vec<f64> = match &args.eps {
        Some(list) => list
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| UsageError(format!("bad epsilon {tok:?}")))
            })
            .collect::<Result<_, _>>()?,
        None => default_eps_grid(&space, 5),
    };
    if eps_grid.is_empty() {
        return Err(UsageError("empty epsilon list".into()));
    }

    let (entries, pass): (Vec<(f64, usize, &str, Option<f64>, bool)>, bool) =
        match (args.c, args.d) {
            (Some(c), Some(d)) => {
                let check = check_bounded_covering(&space, CoveringProfile::new(c, d)?, &eps_grid)?;
                let rows = check
                    .entries
                    .iter()
                    .map(|e| (e.epsilon, e.count, kind_str(e.kind), Some(e.bound), e.ok))
                    .collect();
                (rows, check.pass)
            }
            (None, None) => {
                let mut rows = Vec::new();
                for &eps in &eps_grid {
                    if !(eps > 0.0) {
                        return Err(UsageError(format!("epsilon {eps} must be positive")));
                    }
                    let (count, kind) = if space.len() <= MAX_EXACT_POINTS {
                        (minimal_cover_number(&space, eps)?, "exact")
                    } else {
                        (greedy_cover(&space, eps).centers.len(), "greedy_upper")
                    };
                    rows.push((eps, count, kind, None, true));
                }
                (rows, true)
            }
            _ => return Err(UsageError("--c and --d must be given together".into())),
        };

    let mut bytes = Vec::new();
    match args.format {
        TableFormat::Json => {
            for (eps, count, kind, bound, ok) in &entries {
                let line = serde_json::json!({
                    "eps": eps, "count": count, "kind": kind, "bound": bound, "ok": ok,
                });
                writeln!(bytes, "{line}")?;
            }
            writeln!(
                bytes,
                "{}",
                serde_json::json!({ "points": space.len(), "pass": pass })
            )?;
        }
        TableFormat::Csv => {
            writeln!(bytes, "eps,count,kind,bound,ok")?;
            for (eps, count, kind, bound, ok) in &entries {
                let bound = bound.map(|b| b.to_string()).unwrap_or_default();
                writeln!(bytes, "{eps},{count},{kind},{bound},{ok}")?;
            }
        }
    }
    emit(args.out.as_deref(), &bytes)?;
    Ok(pass)
}

fn sets_demo(family: Option<&Path>, out: Option<&Path>) -> Result<bool, UsageError> {
    let content = match family {
        Some(path) => parse_content_text(&std::fs::read_to_string(path)?)?,
        None => dyadic_demo_content(),
    };
    let report = brownian_lab::setsystems::verify_extension(&content)?;
    let outer = induced_outer_measure(&content)?;
    let cara = brownian_lab::setsystems::caratheodory_sets(&outer);
    let universe = content.family().universe();
    let members: Vec<serde_json::Value> = report
        .members
        .iter()
        .map(|m| {
            serde_json::json!({
                "set": m.set.to_string(),
                "content": m.content_value.to_string(),
                "outer": m.outer_value.to_string(),
                "residual": m.residual.to_string(),
                "ok": m.ok,
            })
        })
        .collect();
    // Full outer-measure table only for small universes.
    let outer_table: Option<Vec<serde_json::Value>> = (universe.size() <= 6).then(|| {
        universe
            .subsets()
            .map(|s| {
                serde_json::json!({
                    "set": s.to_string(),
                    "outer": outer.value(s).to_string(),
                    "caratheodory": cara.contains(s),
                })
            })
            .collect()
    });
    let line = serde_json::json!({
        "universe": universe.size(),
        "members": members,
        "sigma_algebra_size": report.sigma_algebra_size,
        "caratheodory_size": report.caratheodory_size,
        "sigma_in_caratheodory": report.sigma_in_caratheodory,
        "outer_measure": outer_table,
        "pass": report.pass,
    });
    emit(out, format!("{line}\n").as_bytes())?;
    Ok(report.pass)
}

fn parse_vector_line(text: &str) -> Result<Vec<f64>, UsageError> {
    text.trim()
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| UsageError(format!("bad number {tok:?}")))
        })
        .collect()
}

fn gauss_charfun(
    cov: Option<&Path>,
    mean: Option<&Path>,
    dim: usize,
    probes: &[String],
    format: TableFormat,
    out: Option<&Path>,
) -> Result<bool, UsageError> {
    let cov = match cov {
        Some(path) => {
            let rows = gaussian::parse_matrix_csv(&std::fs::read_to_string(path)?)?;
            CovarianceMatrix::new(&rows)?
        }
        None => CovarianceMatrix::identity(dim),
    };
    let n = cov.dim();
    let mean = match mean {
        Some(path) => MeanVector::new(parse_vector_line(&std::fs::read_to_string(path)?)?)?,
        None => MeanVector::zeros(n),
    };
    let g = GaussianMeasure::new(mean, cov)?;
    let probe_vecs: Vec<Vec<f64>> = if probes.is_empty() {
        ProbeSet::default_for_dim(n).probes().to_vec()
    } else {
        probes.iter().map(|s| parse_vector_line(s)).collect::<Result<_, _>>()?
    };
    let mut bytes = Vec::new();
    if matches!(format, TableFormat::Csv) {
        writeln!(bytes, "probe,re,im,abs")?;
    }
    for probe in &probe_vecs {
        let psi = gaussian::charfun(&g, probe)?;
        match format {
            TableFormat::Json => {
                let line = serde_json::json!({
                    "probe": probe, "re": psi.re, "im": psi.im, "abs": psi.norm(),
                });
                writeln!(bytes, "{line}")?;
            }
            TableFormat::Csv => {
                let coords =
                    probe.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
                writeln!(bytes, "{coords},{},{},{}", psi.re, psi.im, psi.norm())?;
            }
        }
    }
    emit(out, &bytes)?;
    Ok(true)
}

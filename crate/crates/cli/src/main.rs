use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use eigtest_core::io::{read_matrix, write_atomic, ReadOptions};
use eigtest_core::spectral::GroupRange;
use eigtest_core::testing::{
    confidence_set, cs_contains, one_sample_test, two_sample_test, StatisticKind, TestConfig,
    TestReport,
};
use eigtest_core::{
    eff_dim_rj, eff_dim_rre, group_eigenvalues, kappa_stats, relative_rank,
    run_power_experiment, DataDistribution, DrawPlan, Error, Matrix, Method, RankRange, Regime,
    ResamplerKind, Result, ScenarioConfig, SymMat, POWER_CSV_HEADER,
};

#[derive(Parser)]
#[command(
    name = "eigtest",
    version,
    about = "Hypothesis tests for eigenspaces of covariance matrices"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One-sample test: eigenspace of the selected ranks vs a hypothesized projector
    Test1(Test1Args),
    /// Two-sample test: do two populations share the selected eigenspace?
    Test2(Test2Args),
    /// Resampling confidence set for the spectral projector
    Cs(CsArgs),
    /// Monte-Carlo power / type-I experiment
    Simulate(SimulateArgs),
    /// Spectrum diagnostics: relative ranks, effective dimensions, kappa
    Diag(DiagArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    ProjNorm,
    Spectral,
    Frobenius,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResamplerArg {
    Bootstrap,
    Wishart,
}

impl From<ResamplerArg> for ResamplerKind {
    fn from(r: ResamplerArg) -> Self {
        match r {
            ResamplerArg::Bootstrap => ResamplerKind::MultiplierBootstrap,
            ResamplerArg::Wishart => ResamplerKind::WishartFb,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    FactorModel,
    Spiked,
    Decay,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::FactorModel => Regime::FactorModel,
            RegimeArg::Spiked => Regime::Spiked,
            RegimeArg::Decay => Regime::Decay,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Gaussian,
    Laplace,
}

#[derive(Args)]
struct TestFlags {
    /// Significance level
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = StatArg::ProjNorm)]
    statistic: StatArg,
    /// Window height of the projector norm
    #[arg(long, default_value_t = 1)]
    s1: usize,
    /// Window width of the projector norm
    #[arg(long, default_value_t = 1)]
    s2: usize,
    #[arg(long, value_enum, default_value_t = ResamplerArg::Wishart)]
    resampler: ResamplerArg,
    /// Number of resampling draws
    #[arg(long, default_value_t = 500)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Subtract column means before forming covariances
    #[arg(long)]
    center: bool,
}

impl TestFlags {
    fn config(&self) -> Result<TestConfig> {
        let statistic = match self.statistic {
            StatArg::ProjNorm => StatisticKind::ProjNorm { s1: self.s1, s2: self.s2 },
            StatArg::Spectral => StatisticKind::Spectral,
            StatArg::Frobenius => StatisticKind::Frobenius,
        };
        let plan = DrawPlan::new(self.draws, self.seed, self.resampler.into())?;
        let mut cfg = TestConfig::new(self.alpha, statistic, plan)?;
        cfg.center = self.center;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SelectFlags {
    /// Eigenvalue ranks "a..b" (1-based, inclusive)
    #[arg(long, conflicts_with = "m")]
    indices: Option<String>,
    /// Shorthand for the top-m eigenspace (ranks 1..m)
    #[arg(long)]
    m: Option<usize>,
}

impl SelectFlags {
    fn resolve(&self, d: usize) -> Result<RankRange> {
        match (&self.indices, self.m) {
            (Some(s), None) => parse_indices(s, d),
            (None, Some(m)) => RankRange::new(1, m, d),
            (None, None) => {
                Err(Error::InvalidInput("one of --indices or --m is required".into()))
            }
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        }
    }
}

#[derive(Args)]
struct InputFlags {
    /// Skip the first non-empty line of each data file
    #[arg(long)]
    header: bool,
    /// Data files store observations as columns
    #[arg(long)]
    transpose: bool,
}

impl InputFlags {
    fn options(&self) -> ReadOptions {
        ReadOptions { header: self.header, transpose: self.transpose }
    }
}

#[derive(Args)]
struct OutputFlags {
    /// Write the report here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args)]
struct Test1Args {
    /// Data file, rows are observations
    data: PathBuf,
    /// Hypothesized projector (d x d) or orthonormal basis (d x m)
    projector: PathBuf,
    #[command(flatten)]
    select: SelectFlags,
    #[command(flatten)]
    test: TestFlags,
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    out: OutputFlags,
}

#[derive(Args)]
struct Test2Args {
    data_a: PathBuf,
    data_b: PathBuf,
    #[command(flatten)]
    select: SelectFlags,
    #[command(flatten)]
    test: TestFlags,
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    out: OutputFlags,
}

#[derive(Args)]
struct CsArgs {
    data: PathBuf,
    /// Candidate projector to query for membership
    #[arg(long)]
    candidate: Option<PathBuf>,
    #[command(flatten)]
    select: SelectFlags,
    #[command(flatten)]
    test: TestFlags,
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    out: OutputFlags,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    regime: RegimeArg,
    #[arg(long, value_enum, default_value_t = DistArg::Gaussian)]
    dist: DistArg,
    #[arg(long)]
    two_sample: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Comma-separated rotation angles in radians
    #[arg(long)]
    angles: Option<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    null_reps: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    draws: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Full-scale protocol (2000 draws, 1000 null reps); slow
    #[arg(long)]
    full: bool,
    #[command(flatten)]
    out: OutputFlags,
}

#[derive(Args)]
struct DiagArgs {
    /// Data file; the diagnosed spectrum is the sample spectrum
    data: Option<PathBuf>,
    /// Comma-separated eigenvalues, descending (instead of a data file)
    #[arg(long, conflicts_with = "data")]
    spectrum: Option<String>,
    /// Relative tolerance for grouping close eigenvalues
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    select: SelectFlags,
    #[command(flatten)]
    input: InputFlags,
    #[command(flatten)]
    out: OutputFlags,
}

fn parse_indices(s: &str, d: usize) -> Result<RankRange> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::InvalidInput(format!("indices must look like \"a..b\", got {s:?}")))?;
    let start: usize = a
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad rank in indices: {a:?}")))?;
    let end: usize = b
        .trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("bad rank in indices: {b:?}")))?;
    RankRange::new(start, end, d)
}

/// Accepts either a d x d projector or a d x m orthonormal basis U, in which
/// case the projector is U U^T.
fn load_projector(path: &Path, d: usize, m: usize, opts: ReadOptions) -> Result<SymMat> {
    let raw: Matrix = read_matrix(path, opts)?;
    if raw.rows() != d {
        return Err(Error::InvalidInput(format!(
            "projector file has {} rows, data dimension is {d}",
            raw.rows()
        )));
    }
    if raw.cols() == d {
        SymMat::from_dense(&raw)
    } else if raw.cols() == m {
        SymMat::from_dense(&raw.matmul(&raw.transpose()))
    } else {
        Err(Error::InvalidInput(format!(
            "projector file is {}x{}; expected {d}x{d} or {d}x{m}",
            raw.rows(),
            raw.cols()
        )))
    }
}

fn report_value(report: &TestReport) -> Value {
    let mut v = serde_json::to_value(report).expect("report serializes");
    let (s1, s2) = match report.statistic_kind {
        StatisticKind::ProjNorm { s1, s2 } => (Some(s1), Some(s2)),
        _ => (None, None),
    };
    let obj = v.as_object_mut().expect("report is an object");
    obj.insert("s1".into(), s1.map_or(Value::Null, |x| json!(x)));
    obj.insert("s2".into(), s2.map_or(Value::Null, |x| json!(x)));
    v
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, val, out);
            }
        }
        Value::Array(items) => {
            for (i, val) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), val, out);
            }
        }
        Value::Null => out.push((prefix.into(), String::new())),
        Value::Bool(b) => out.push((prefix.into(), b.to_string())),
        Value::Number(n) => out.push((prefix.into(), n.to_string())),
        Value::String(s) => out.push((prefix.into(), s.clone())),
    }
}

fn render(v: &Value, format: FormatArg) -> String {
    match format {
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(v).expect("serializable");
            s.push('\n');
            s
        }
        FormatArg::Csv => {
            let mut pairs = Vec::new();
            flatten("", v, &mut pairs);
            let header: Vec<&str> = pairs.iter().map(|(k, _)| k.as_str()).collect();
            let row: Vec<&str> = pairs.iter().map(|(_, v)| v.as_str()).collect();
            format!("{}\n{}\n", header.join(","), row.join(","))
        }
    }
}

fn emit(v: &Value, out: &OutputFlags) -> Result<()> {
    let text = render(v, out.format);
    match &out.output {
        Some(path) => write_atomic(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_test1(args: &Test1Args) -> Result<()> {
    let cfg = args.test.config()?;
    let data: Matrix = read_matrix(&args.data, args.input.options())?;
    let sel = args.select.resolve(data.cols())?;
    let p0 = load_projector(&args.projector, data.cols(), sel.m(), args.input.options())?;
    let report = one_sample_test(&data, &p0, &sel, &cfg)?;
    emit(&report_value(&report), &args.out)
}

fn cmd_test2(args: &Test2Args) -> Result<()> {
    let cfg = args.test.config()?;
    let a: Matrix = read_matrix(&args.data_a, args.input.options())?;
    let b: Matrix = read_matrix(&args.data_b, args.input.options())?;
    let sel = args.select.resolve(a.cols())?;
    let report = two_sample_test(&a, &b, &sel, &sel, &cfg)?;
    emit(&report_value(&report), &args.out)
}

fn cmd_cs(args: &CsArgs) -> Result<()> {
    let cfg = args.test.config()?;
    let data: Matrix = read_matrix(&args.data, args.input.options())?;
    let sel = args.select.resolve(data.cols())?;
    let cs = confidence_set(&data, &sel, &cfg)?;
    let mut report = json!({
        "threshold": cs.threshold,
        "alpha": cs.alpha,
        "statistic_kind": cs.statistic,
        "resampler": cfg.plan.kind,
        "draws": cfg.plan.draws,
        "seed": cfg.plan.master_seed,
        "n": cs.n,
        "d": cs.center.dim(),
        "m": cs.m,
        "dropped_rows": cs.dropped_rows,
    });
    if let Some(path) = &args.candidate {
        let cand = load_projector(path, cs.center.dim(), cs.m, args.input.options())?;
        let obj = report.as_object_mut().expect("object");
        obj.insert("contains".into(), json!(cs_contains(&cs, &cand)?));
    }
    emit(&report, &args.out)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let regime: Regime = args.regime.into();
    let mut cfg = ScenarioConfig::preset(regime, args.two_sample, args.seed);
    cfg.distribution = match args.dist {
        DistArg::Gaussian => DataDistribution::Gaussian,
        DistArg::Laplace => DataDistribution::Laplace,
    };
    cfg.alpha = args.alpha;
    if args.full {
        cfg.draws = 2000;
        cfg.null_reps = 1000;
        cfg.n = 1000;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if let Some(m) = args.m {
        cfg.m = m;
    }
    if let Some(reps) = args.reps {
        cfg.reps = reps;
    }
    if let Some(nr) = args.null_reps {
        cfg.null_reps = nr;
    }
    if let Some(draws) = args.draws {
        cfg.draws = draws;
    }
    if let Some(angles) = &args.angles {
        cfg.angles = angles
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad angle: {a:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
    }
    // methods span both resamplers on the windowed statistic plus a
    // spectral-norm baseline
    cfg.methods = vec![
        Method {
            statistic: StatisticKind::ProjNorm { s1: 1, s2: 1 },
            resampler: ResamplerKind::MultiplierBootstrap,
        },
        Method {
            statistic: StatisticKind::ProjNorm { s1: 1, s2: 1 },
            resampler: ResamplerKind::WishartFb,
        },
        Method { statistic: StatisticKind::Spectral, resampler: ResamplerKind::WishartFb },
    ];

    let rows = run_power_experiment(&cfg)?;
    match args.out.format {
        FormatArg::Csv => {
            let mut text = String::from(POWER_CSV_HEADER);
            text.push('\n');
            for r in &rows {
                text.push_str(&r.to_csv());
                text.push('\n');
            }
            match &args.out.output {
                Some(path) => {
                    write_atomic(path, &text)?;
                    // sidecar echoing the resolved config
                    let sidecar = path.with_extension("json");
                    let cfg_json =
                        serde_json::to_string_pretty(&cfg).expect("config serializes");
                    write_atomic(&sidecar, &cfg_json)?;
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        FormatArg::Json => {
            let v = json!({ "config": cfg, "rows": rows });
            emit(&v, &args.out)
        }
    }
}

/// Maps eigenvector ranks to the consecutive groups that exactly cover them.
fn group_range_for(
    groups: &eigtest_core::Groups,
    sel: &RankRange,
) -> Result<GroupRange> {
    let mut start = None;
    let mut end = None;
    for r in 0..groups.count() {
        let (lo, hi) = groups.range(r);
        if lo == sel.start() - 1 {
            start = Some(r);
        }
        if hi == sel.end() {
            end = Some(r);
        }
    }
    match (start, end) {
        (Some(s), Some(e)) if s <= e => Ok(GroupRange::new(s, e)),
        _ => Err(Error::InvalidSelection(format!(
            "ranks {}..{} do not align with eigenvalue group boundaries",
            sel.start(),
            sel.end()
        ))),
    }
}

fn cmd_diag(args: &DiagArgs) -> Result<()> {
    let values: Vec<f64> = match (&args.data, &args.spectrum) {
        (Some(path), None) => {
            let data: Matrix = read_matrix(path, args.input.options())?;
            let sigma = eigtest_core::sample_covariance(&data, false)?;
            eigtest_core::sym_eigen(&sigma)?.values
        }
        (None, Some(s)) => s
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("bad eigenvalue: {v:?}")))
            })
            .collect::<Result<Vec<f64>>>()?,
        _ => return Err(Error::InvalidInput("provide a data file or --spectrum".into())),
    };
    let groups = group_eigenvalues(&values, args.tol)?;
    let sel = args.select.resolve(groups.dim())?;
    let j = group_range_for(&groups, &sel)?;
    j.validate_proper(groups.count())?;

    let kappa = kappa_stats(&groups, &j)?;
    let mut out = Map::new();
    out.insert("d".into(), json!(groups.dim()));
    out.insert("group_count".into(), json!(groups.count()));
    out.insert("group_values".into(), json!(groups.mu()));
    out.insert("group_multiplicities".into(), json!(groups.mult()));
    out.insert("ranks".into(), json!(format!("{}..{}", sel.start(), sel.end())));
    out.insert("m".into(), json!(sel.m()));
    for r in j.start..=j.end {
        out.insert(format!("relr_{}", r + 1), json!(relative_rank(&groups, r)?));
    }
    out.insert("eff_dim_rj".into(), json!(eff_dim_rj(&groups, &j)?));
    out.insert("eff_dim_rre".into(), json!(eff_dim_rre(&groups, &j)?));
    out.insert("kappa_under".into(), json!(kappa.under));
    out.insert("kappa_over".into(), json!(kappa.over));
    out.insert("kappa_ratio".into(), json!(kappa.ratio));
    emit(&Value::Object(out), &args.out)
}

fn init_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("EIGTEST_THREADS") {
        let k: usize = raw
            .parse()
            .map_err(|_| Error::InvalidInput(format!("EIGTEST_THREADS = {raw:?}")))?;
        if k > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    init_threads()?;
    match &cli.cmd {
        Cmd::Test1(a) => cmd_test1(a),
        Cmd::Test2(a) => cmd_test2(a),
        Cmd::Cs(a) => cmd_cs(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Diag(a) => cmd_diag(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{} {e}", e.code());
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

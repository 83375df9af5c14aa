//! Command-line front end for the corner laboratory.
//!
//! Every subcommand prints machine-readable output: JSON for reports and
//! summaries, CSV for per-shift series and family scans.  All randomness is
//! seeded, so identical invocations produce byte-identical output.  A config
//! file of plain `key = value` lines (keys mirror the long flag names) can
//! supply any missing value; explicit flags always win.
//!
//! Exit codes: 0 success, 1 verification/convergence failure, 2 invalid
//! input, 3 resource cap exceeded.

use clap::{Args, Parser, Subcommand, ValueEnum};
use cornerlab_core::{
    box_norm, conjugacy_classes, corner_stats, generate_subset, good_fraction, parse_descriptor,
    quasirandomness_degree, rank_expansion, tv_scan, verify_suite, weak_regularity,
    Error as CoreError, ExperimentReport, FunctionGk, Group, RegularityError, SubsetSpec,
    ThetaRule, VerifyLevel,
};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

/// Corner-configuration experiments over finite groups.
#[derive(Parser)]
#[command(name = "cornerlab", version, about)]
struct Cli {
    /// Config file of `key = value` lines mirroring long flags; flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Group construction and structural facts
    #[command(subcommand)]
    Groups(GroupsCmd),
    /// Irreducible character degrees and the quasirandomness degree, as JSON
    Qdegree {
        /// Group descriptor: `cyclic:n` | `sym:m` | `alt:m` | `sl2:p` | `prod:(a,b)`
        desc: Option<String>,
    },
    /// Corner statistics over a subset of G^k
    #[command(subcommand)]
    Corners(CornersCmd),
    /// Box norm of a function on G^k, as a JSON report
    Boxnorm(BoxnormArgs),
    /// Weak regularity decomposition of a function on G^k, as a JSON report
    Regularity(RegularityArgs),
    /// One corner experiment per group descriptor, same spec and master seed
    TvScan(TvScanArgs),
    /// Cross-module consistency suite; nonzero exit if any check fails
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum GroupsCmd {
    /// Print order, abelianness, exponent, and class structure as JSON
    Info {
        /// Group descriptor: `cyclic:n` | `sym:m` | `alt:m` | `sl2:p` | `prod:(a,b)`
        desc: Option<String>,
    },
}

#[derive(Subcommand)]
enum CornersCmd {
    /// Count corner configurations for every shift g and summarize
    Run(CornersArgs),
}

#[derive(Args)]
struct CornersArgs {
    /// Group descriptor
    #[arg(long)]
    group: Option<String>,
    /// Dimension of the ambient grid G^k [default: 2]
    #[arg(long)]
    k: Option<usize>,
    /// Subset spec: `random:<d>` | `interval:<lo>-<hi>[x<lo>-<hi>..]` | `planted:<m>`
    #[arg(long, conflicts_with = "delta")]
    subset: Option<SubsetSpec>,
    /// Shorthand for `--subset random:<delta>`
    #[arg(long)]
    delta: Option<f64>,
    /// Seed for subset generation [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Good-shift threshold: a number or `half-mean` [default: half-mean]
    #[arg(long)]
    theta: Option<ThetaRule>,
    /// Write the per-shift series as CSV (`g_index,c_g`) to this file;
    /// stdout then carries the JSON summary
    #[arg(long)]
    out: Option<PathBuf>,
    /// What stdout carries when --out is absent: the JSON summary or the
    /// CSV series [default: json]
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct BoxnormArgs {
    /// Group descriptor
    #[arg(long)]
    group: Option<String>,
    /// Dimension of the ambient grid G^k [default: 2]
    #[arg(long)]
    k: Option<usize>,
    /// Function source: indicator of this subset spec
    #[arg(long, conflicts_with_all = ["delta", "signs", "values"])]
    subset: Option<SubsetSpec>,
    /// Function source: indicator of `random:<delta>`
    #[arg(long, conflicts_with_all = ["signs", "values"])]
    delta: Option<f64>,
    /// Function source: seeded uniform ±1 signs
    #[arg(long, conflicts_with = "values")]
    signs: bool,
    /// Function source: whitespace-separated values read from this file
    #[arg(long)]
    values: Option<PathBuf>,
    /// Seed for randomized sources [default: 0]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RegularityArgs {
    /// Group descriptor
    #[arg(long)]
    group: Option<String>,
    /// Dimension of the ambient grid G^k [default: 2]
    #[arg(long)]
    k: Option<usize>,
    /// Function source: indicator of this subset spec
    #[arg(long, conflicts_with_all = ["delta", "signs", "values"])]
    subset: Option<SubsetSpec>,
    /// Function source: indicator of `random:<delta>`
    #[arg(long, conflicts_with_all = ["signs", "values"])]
    delta: Option<f64>,
    /// Function source: seeded uniform ±1 signs
    #[arg(long, conflicts_with = "values")]
    signs: bool,
    /// Function source: whitespace-separated values read from this file
    #[arg(long)]
    values: Option<PathBuf>,
    /// Seed for randomized sources and refinement choices [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Target box norm for the unstructured part
    #[arg(long)]
    eps: Option<f64>,
    /// Refinement budget override (default: derived from eps)
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct TvScanArgs {
    /// Group descriptors, one experiment row each (config key `groups`,
    /// comma-separated)
    #[arg(value_name = "DESC")]
    groups: Vec<String>,
    /// Dimension of the ambient grid G^k [default: 2]
    #[arg(long)]
    k: Option<usize>,
    /// Subset spec applied to every group
    #[arg(long, conflicts_with = "delta")]
    subset: Option<SubsetSpec>,
    /// Shorthand for `--subset random:<delta>`
    #[arg(long)]
    delta: Option<f64>,
    /// Master seed; each row derives its own seed from it [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Good-shift threshold: a number or `half-mean` [default: half-mean]
    #[arg(long)]
    theta: Option<ThetaRule>,
    /// Write the CSV table to this file; stdout then carries the JSON rows
    #[arg(long)]
    out: Option<PathBuf>,
    /// What stdout carries when --out is absent [default: csv]
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct VerifyArgs {
    /// fast: every module at toy sizes; full: the larger standard groups
    #[arg(long, value_enum)]
    level: Option<LevelArg>,
    /// Emit the suite results as JSON instead of the text table
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("expected csv|json, got `{other}`")),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Fast,
    Full,
}

impl From<LevelArg> for VerifyLevel {
    fn from(l: LevelArg) -> VerifyLevel {
        match l {
            LevelArg::Fast => VerifyLevel::Fast,
            LevelArg::Full => VerifyLevel::Full,
        }
    }
}

impl FromStr for LevelArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fast" => Ok(LevelArg::Fast),
            "full" => Ok(LevelArg::Full),
            other => Err(format!("expected fast|full, got `{other}`")),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match cli.config.as_deref().map(load_config).transpose() {
        Ok(map) => map.unwrap_or_default(),
        Err(e) => return fail(&e),
    };
    let ctx = Ctx { cfg };
    match run(cli.command, &ctx) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CoreError) -> ExitCode {
    eprintln!("error: {e}");
    exit_code_for(e)
}

fn exit_code_for(e: &CoreError) -> ExitCode {
    let code: u8 = match e {
        CoreError::Parse(_) | CoreError::InvalidInput(_) | CoreError::DimensionMismatch(_) => 2,
        CoreError::CapExceeded(_) => 3,
        CoreError::Numerical(_) | CoreError::Verification(_) => 1,
    };
    ExitCode::from(code)
}

fn run(command: Command, ctx: &Ctx) -> Result<ExitCode, CoreError> {
    match command {
        Command::Groups(GroupsCmd::Info { desc }) => cmd_group_info(ctx, desc),
        Command::Qdegree { desc } => cmd_qdegree(ctx, desc),
        Command::Corners(CornersCmd::Run(args)) => cmd_corners_run(ctx, args),
        Command::Boxnorm(args) => cmd_boxnorm(ctx, args),
        Command::Regularity(args) => cmd_regularity(ctx, args),
        Command::TvScan(args) => cmd_tv_scan(ctx, args),
        Command::Verify(args) => cmd_verify(ctx, args),
    }
}

// ---------------------------------------------------------------------------
// config handling

struct Ctx {
    cfg: HashMap<String, String>,
}

impl Ctx {
    /// The flag value if given, else the parsed config value under `key`.
    fn merge<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CoreError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.cfg.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CoreError::Parse(format!("config `{key} = {raw}`: {e}"))),
        }
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, CoreError>
    where
        T::Err: std::fmt::Display,
    {
        self.merge(flag, key)?.ok_or_else(|| {
            CoreError::InvalidInput(format!(
                "missing --{key} (set it on the command line or in the config file)"
            ))
        })
    }
}

fn load_config(path: &Path) -> Result<HashMap<String, String>, CoreError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::InvalidInput(format!("config {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CoreError::Parse(format!(
                "config {} line {}: expected `key = value`",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Subset spec from flags, else from config; `subset` wins over `delta`
/// within each source.
fn subset_from_sources(
    ctx: &Ctx,
    subset: Option<SubsetSpec>,
    delta: Option<f64>,
) -> Result<Option<SubsetSpec>, CoreError> {
    if subset.is_some() {
        return Ok(subset);
    }
    if let Some(d) = delta {
        return format!("random:{d}").parse().map(Some);
    }
    if let Some(raw) = ctx.cfg.get("subset") {
        return raw.parse().map(Some);
    }
    if let Some(raw) = ctx.cfg.get("delta") {
        return format!("random:{raw}").parse().map(Some);
    }
    Ok(None)
}

fn require_subset(
    ctx: &Ctx,
    subset: Option<SubsetSpec>,
    delta: Option<f64>,
) -> Result<SubsetSpec, CoreError> {
    subset_from_sources(ctx, subset, delta)?.ok_or_else(|| {
        CoreError::InvalidInput(
            "missing subset: give --subset or --delta (or set them in the config file)".into(),
        )
    })
}

/// A function on G^k from one of the three sources.  Any source flag beats
/// the config; within the config the precedence is values > signs > subset.
#[allow(clippy::too_many_arguments)]
fn resolve_function(
    ctx: &Ctx,
    g: &Group,
    k: usize,
    subset: Option<SubsetSpec>,
    delta: Option<f64>,
    signs: bool,
    values: Option<PathBuf>,
    seed: u64,
) -> Result<FunctionGk, CoreError> {
    if let Some(path) = values {
        return read_values(g.order(), k, &path);
    }
    if signs {
        return FunctionGk::random_signs(g.order(), k, seed);
    }
    if subset.is_some() || delta.is_some() {
        let spec = require_subset(ctx, subset, delta)?;
        return Ok(FunctionGk::indicator(&generate_subset(g, k, &spec, seed)?));
    }
    if let Some(raw) = ctx.cfg.get("values") {
        return read_values(g.order(), k, Path::new(raw));
    }
    if ctx.cfg.get("signs").map(String::as_str) == Some("true") {
        return FunctionGk::random_signs(g.order(), k, seed);
    }
    if let Some(spec) = subset_from_sources(ctx, None, None)? {
        return Ok(FunctionGk::indicator(&generate_subset(g, k, &spec, seed)?));
    }
    Err(CoreError::InvalidInput(
        "no function source: give --subset/--delta, --signs, or --values".into(),
    ))
}

fn read_values(n: usize, k: usize, path: &Path) -> Result<FunctionGk, CoreError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CoreError::InvalidInput(format!("read {}: {e}", path.display())))?;
    let mut vals = Vec::new();
    for tok in text.split_whitespace() {
        vals.push(tok.parse::<f64>().map_err(|_| {
            CoreError::Parse(format!("bad value `{tok}` in {}", path.display()))
        })?);
    }
    let bound = vals.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    FunctionGk::from_values(n, k, vals, bound)
}

// ---------------------------------------------------------------------------
// output helpers

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serialization cannot fail")
}

/// Print a payload line to stdout; a closed pipe (e.g. `| head`) ends the
/// process quietly instead of panicking.
fn emit(text: &str) {
    emit_raw(text);
    emit_raw("\n");
}

fn emit_raw(text: &str) {
    use std::io::Write as _;
    if let Err(e) = std::io::stdout().write_all(text.as_bytes()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: writing stdout: {e}");
        std::process::exit(1);
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CoreError> {
    std::fs::write(path, content)
        .map_err(|e| CoreError::InvalidInput(format!("write {}: {e}", path.display())))
}

/// Quote a CSV field if it contains a delimiter or quote.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

// ---------------------------------------------------------------------------
// subcommands

#[derive(Serialize)]
struct GroupInfo {
    label: String,
    order: usize,
    abelian: bool,
    /// Least m with x^m = e for all x.
    exponent: u64,
    center_size: usize,
    class_count: usize,
}

fn cmd_group_info(ctx: &Ctx, desc: Option<String>) -> Result<ExitCode, CoreError> {
    let desc = require_descriptor(ctx, desc)?;
    let g = parse_descriptor(&desc)?;
    let cc = conjugacy_classes(&g);
    let info = GroupInfo {
        label: g.label().to_string(),
        order: g.order(),
        abelian: g.is_abelian(),
        exponent: group_exponent(&g),
        center_size: g
            .elements()
            .filter(|&x| g.elements().all(|y| g.mul(x, y) == g.mul(y, x)))
            .count(),
        class_count: cc.count(),
    };
    emit(&to_json(&info));
    Ok(ExitCode::SUCCESS)
}

fn require_descriptor(ctx: &Ctx, desc: Option<String>) -> Result<String, CoreError> {
    ctx.merge(desc, "group")?.ok_or_else(|| {
        CoreError::InvalidInput(
            "missing group descriptor (pass it as an argument or set `group =` in config)".into(),
        )
    })
}

fn group_exponent(g: &Group) -> u64 {
    let mut exponent = 1u64;
    for x in g.elements() {
        let mut ord = 1u64;
        let mut y = x;
        while y != g.identity() {
            y = g.mul(y, x);
            ord += 1;
        }
        exponent = lcm(exponent, ord);
    }
    exponent
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn cmd_qdegree(ctx: &Ctx, desc: Option<String>) -> Result<ExitCode, CoreError> {
    let desc = require_descriptor(ctx, desc)?;
    let g = parse_descriptor(&desc)?;
    let report = quasirandomness_degree(&g)?;
    emit(&to_json(&report));
    Ok(ExitCode::SUCCESS)
}

fn cmd_corners_run(ctx: &Ctx, args: CornersArgs) -> Result<ExitCode, CoreError> {
    let desc: String = ctx.require(args.group, "group")?;
    let k = ctx.merge(args.k, "k")?.unwrap_or(2);
    let spec = require_subset(ctx, args.subset, args.delta)?;
    let seed = ctx.merge(args.seed, "seed")?.unwrap_or(0);
    let theta = ctx.merge(args.theta, "theta")?.unwrap_or(ThetaRule::HalfMean);
    let format = ctx.merge(args.format, "format")?.unwrap_or(OutputFormat::Json);
    let out = ctx.merge(args.out, "out")?;

    let start = Instant::now();
    let g = parse_descriptor(&desc)?;
    let d = quasirandomness_degree(&g)?.d;
    let a = generate_subset(&g, k, &spec, seed)?;
    let stats = corner_stats(&g, &a)?;
    let series = &stats.series;
    let t = theta.theta(series.mean);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &series.values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let report = ExperimentReport {
        group: g.label().to_string(),
        order: g.order(),
        d,
        k,
        spec: spec.to_string(),
        seed,
        count: a.count(),
        density: a.density(),
        corners: stats.total,
        mean: series.mean,
        tv: series.tv,
        theta: t,
        good_fraction: good_fraction(series, t),
        min_c: lo,
        max_c: hi,
        wall_ms: start.elapsed().as_millis(),
    };

    let mut csv = String::from("g_index,c_g\n");
    for (i, v) in series.values.iter().enumerate() {
        writeln!(csv, "{i},{v}").unwrap();
    }
    match &out {
        Some(path) => {
            write_file(path, &csv)?;
            emit(&to_json(&report));
        }
        None => match format {
            OutputFormat::Csv => emit_raw(&csv),
            OutputFormat::Json => emit(&to_json(&report)),
        },
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_boxnorm(ctx: &Ctx, args: BoxnormArgs) -> Result<ExitCode, CoreError> {
    let desc: String = ctx.require(args.group, "group")?;
    let k = ctx.merge(args.k, "k")?.unwrap_or(2);
    let seed = ctx.merge(args.seed, "seed")?.unwrap_or(0);
    let g = parse_descriptor(&desc)?;
    let f = resolve_function(ctx, &g, k, args.subset, args.delta, args.signs, args.values, seed)?;
    let report = box_norm(&f)?;
    emit(&to_json(&report));
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct RegularityOut {
    group: String,
    k: usize,
    eps: f64,
    seed: u64,
    converged: bool,
    iterations: usize,
    achieved_eps: f64,
    /// Atom count of the partition omitting each coordinate, in order.
    atom_counts: Vec<usize>,
    /// Terms in the rank expansion of the structured part (absent for k = 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    rank: Option<usize>,
    energy_gains: Vec<f64>,
}

fn cmd_regularity(ctx: &Ctx, args: RegularityArgs) -> Result<ExitCode, CoreError> {
    let desc: String = ctx.require(args.group, "group")?;
    let k = ctx.merge(args.k, "k")?.unwrap_or(2);
    let seed = ctx.merge(args.seed, "seed")?.unwrap_or(0);
    let eps: f64 = ctx.require(args.eps, "eps")?;
    let max_iter = ctx.merge(args.max_iter, "max-iter")?;
    let g = parse_descriptor(&desc)?;
    let f = resolve_function(ctx, &g, k, args.subset, args.delta, args.signs, args.values, seed)?;

    let (decomp, converged) = match weak_regularity(&f, eps, max_iter, seed) {
        Ok(d) => (d, true),
        Err(RegularityError::Budget { best, .. }) => (*best, false),
        Err(RegularityError::Core(e)) => return Err(e),
    };
    let rank = if k >= 2 {
        Some(rank_expansion(&decomp)?.terms.len())
    } else {
        None
    };
    let out = RegularityOut {
        group: g.label().to_string(),
        k,
        eps,
        seed,
        converged,
        iterations: decomp.iterations,
        achieved_eps: decomp.achieved_eps,
        atom_counts: decomp.partitions.iter().map(|p| p.atom_count).collect(),
        rank,
        energy_gains: decomp.energy_gains.clone(),
    };
    emit(&to_json(&out));
    Ok(if converged { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct ScanRow<'a> {
    group: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a ExperimentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn cmd_tv_scan(ctx: &Ctx, args: TvScanArgs) -> Result<ExitCode, CoreError> {
    let mut groups = args.groups;
    if groups.is_empty() {
        if let Some(raw) = ctx.cfg.get("groups") {
            groups = raw
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
        }
    }
    if groups.is_empty() {
        return Err(CoreError::InvalidInput(
            "no group descriptors (pass them as arguments or set `groups = a,b,..` in config)"
                .into(),
        ));
    }
    let k = ctx.merge(args.k, "k")?.unwrap_or(2);
    let spec = require_subset(ctx, args.subset, args.delta)?;
    let seed = ctx.merge(args.seed, "seed")?.unwrap_or(0);
    let theta = ctx.merge(args.theta, "theta")?.unwrap_or(ThetaRule::HalfMean);
    let format = ctx.merge(args.format, "format")?.unwrap_or(OutputFormat::Csv);
    let out = ctx.merge(args.out, "out")?;

    let rows = tv_scan(&groups, k, &spec, theta, seed);

    let mut csv = String::from(
        "group,order,d,k,spec,seed,count,density,corners,mean,tv,theta,good_fraction,error\n",
    );
    for (desc, row) in groups.iter().zip(&rows) {
        match row {
            Ok(r) => writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},",
                csv_field(&r.group),
                r.order,
                r.d,
                r.k,
                csv_field(&r.spec),
                r.seed,
                r.count,
                r.density,
                r.corners,
                r.mean,
                r.tv,
                r.theta,
                r.good_fraction
            )
            .unwrap(),
            Err(e) => {
                writeln!(csv, "{},,,,,,,,,,,,,{}", csv_field(desc), csv_field(&e.to_string()))
                    .unwrap()
            }
        }
    }
    let json_rows: Vec<ScanRow> = groups
        .iter()
        .zip(&rows)
        .map(|(desc, row)| match row {
            Ok(r) => ScanRow { group: desc, report: Some(r), error: None },
            Err(e) => ScanRow { group: desc, report: None, error: Some(e.to_string()) },
        })
        .collect();

    match &out {
        Some(path) => {
            write_file(path, &csv)?;
            emit(&to_json(&json_rows));
        }
        None => match format {
            OutputFormat::Csv => emit_raw(&csv),
            OutputFormat::Json => emit(&to_json(&json_rows)),
        },
    }
    // success only if every row succeeded; otherwise report the first failure
    for row in &rows {
        if let Err(e) = row {
            eprintln!("error: {e}");
            return Ok(exit_code_for(e));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(ctx: &Ctx, args: VerifyArgs) -> Result<ExitCode, CoreError> {
    let level = ctx.merge(args.level, "level")?.unwrap_or(LevelArg::Fast);
    let format = ctx.merge(args.format, "format")?;
    if format == Some(OutputFormat::Csv) {
        return Err(CoreError::InvalidInput("verify has no CSV form; use --format json".into()));
    }
    let results = verify_suite(level.into());
    let passed = results.iter().filter(|r| r.passed).count();
    if format == Some(OutputFormat::Json) {
        emit(&to_json(&results));
    } else {
        let mut table = String::new();
        for r in &results {
            writeln!(
                table,
                "{}  {:<32} {:>6} ms  {}",
                if r.passed { "ok  " } else { "FAIL" },
                r.name,
                r.wall_ms,
                r.detail
            )
            .unwrap();
        }
        writeln!(table, "{passed}/{} checks passed", results.len()).unwrap();
        emit_raw(&table);
    }
    Ok(if passed == results.len() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use cubevar::cache::{load_covering, load_or_sieve, CacheOutcome};
use cubevar::config::RunConfig;
use cubevar::cube_reps::{sieve_r3, CubeRepTable};
use cubevar::dirichlet::constants;
use cubevar::exp_sums::{nu, s_direct, s_reduce};
use cubevar::identities::{run_suite, DirichletRange, IdentityRanges};
use cubevar::local_densities::{rho_table, RhoCache};
use cubevar::main_terms::{predict, FormulaSpec, Weights};
use cubevar::report::{write_constants, write_reports, OutputFormat};
use cubevar::variance_lab::{
    arc_survey, scan, variance_with_prediction, PredictionInputs, QPolicy,
    DEFAULT_NORMALIZE_EXPONENT,
};
use cubevar::Error;

#[derive(Parser)]
#[command(
    name = "cubevar",
    version,
    about = "Variance of sums of three cubes in arithmetic progressions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Sieve r3(n) up to --x-max and write the cache file.
    Sieve,
    /// Print the Euler-product constants with error estimates.
    Constants,
    /// Evaluate the cubic exponential sum S(q, a).
    GaussSum,
    /// Print local densities rho(q, a).
    Rho,
    /// Run the exact identity suite.
    Identities,
    /// Predicted variance at (x, Q).
    Predict,
    /// Empirical variance at (x, Q) with its prediction.
    Variance,
    /// Variance reports over a 1-2-5 grid of x up to --x-max.
    Scan,
    /// Major-arc approximation diagnostics at x for q <= --q-max.
    Diagnose,
}

#[derive(Args)]
struct Opts {
    #[arg(long, global = true)]
    x: Option<u64>,
    /// Modulus, or for scan a Q policy: x, x/m, sqrtlog, or an integer.
    #[arg(long, global = true)]
    q: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<i64>,
    #[arg(long, global = true)]
    q_max: Option<u64>,
    #[arg(long, global = true)]
    x_max: Option<u64>,
    /// theorem1, theorem2, corollary1i, corollary1ii, corollary2,
    /// corollary3, auto or none.
    #[arg(long, global = true)]
    formula: Option<String>,
    #[arg(long, global = true)]
    prime_cutoff: Option<u64>,
    #[arg(long, global = true)]
    series_cutoff: Option<u64>,
    /// json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    normalize_exponent: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(Error::Json(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 4,
            CliError::Lib(e) => match e {
                Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::CorruptCache(_)
                | Error::Checksum { .. } => 3,
                Error::Identity(_) | Error::Numerical(_) => 4,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failed(m) => f.write_str(m),
            CliError::Lib(e) => e.fmt(f),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn require<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{flag} is required")))
}

fn parse_q(opts: &Opts) -> CliResult<u64> {
    let q = require(opts.q.as_deref(), "q")?;
    q.parse()
        .map_err(|_| CliError::Usage(format!("--q must be a positive integer, got {q:?}")))
}

fn run_config(opts: &Opts) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(v) = opts.x_max {
        cfg.x_max = v;
    }
    if let Some(v) = opts.q_max {
        cfg.q_max = v;
    }
    if let Some(v) = opts.prime_cutoff {
        cfg.prime_cutoff = v;
    }
    if let Some(v) = opts.series_cutoff {
        cfg.series_cutoff = v;
    }
    if let Some(p) = &opts.cache {
        cfg.cache_path = p.clone();
    }
    if let Some(f) = &opts.format {
        cfg.output_format = f.parse()?;
    }
    if let Some(t) = opts.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn formula(opts: &Opts) -> CliResult<FormulaSpec> {
    Ok(opts.formula.as_deref().unwrap_or("auto").parse()?)
}

fn emit_json(v: &Value) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

/// Shortest round-trip decimal, as in the JSON output.
fn num(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| v.to_string())
}

fn emit_csv(header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        writeln!(out, "{}", r.join(","))?;
    }
    Ok(())
}

/// Table covering `x`: the cache when one was named, else an in-memory sieve.
fn table_for(cfg: &RunConfig, opts: &Opts, x: u64) -> CliResult<CubeRepTable> {
    if opts.cache.is_some() {
        Ok(load_covering(&cfg.cache_path, x)?)
    } else {
        Ok(sieve_r3(x)?)
    }
}

fn cmd_sieve(cfg: &RunConfig) -> CliResult<()> {
    let (table, outcome) = load_or_sieve(&cfg.cache_path, cfg.x_max)?;
    emit_json(&json!({
        "cache": cfg.cache_path.display().to_string(),
        "x_max": table.x_max(),
        "outcome": match outcome { CacheOutcome::Hit => "hit", CacheOutcome::Built => "built" },
        "sum_r3": table.sum_r3(table.x_max())?,
    }))
}

fn cmd_constants(cfg: &RunConfig) -> CliResult<()> {
    let c = constants(cfg.prime_cutoff, cfg.series_cutoff)?;
    write_constants(io::stdout().lock(), &c, cfg.output_format)?;
    Ok(())
}

fn cmd_gauss_sum(cfg: &RunConfig, opts: &Opts) -> CliResult<()> {
    let q = parse_q(opts)?;
    if q == 0 {
        return Err(CliError::Usage("--q must be positive".into()));
    }
    let a = opts.a.unwrap_or(1);
    let s = s_reduce(q, a);
    let d = s_direct(q, a);
    let nu_value = nu(q, a).ok();
    match cfg.output_format {
        OutputFormat::Json => emit_json(&json!({
            "q": q,
            "a": a,
            "re": s.re,
            "im": s.im,
            "abs": s.norm(),
            "direct": {"re": d.re, "im": d.im},
            "nu": nu_value.map(|v| json!({"re": v.re, "im": v.im})),
        })),
        OutputFormat::Csv => emit_csv(
            &["q", "a", "re", "im", "abs"],
            &[vec![
                q.to_string(),
                a.to_string(),
                num(s.re),
                num(s.im),
                num(s.norm()),
            ]],
        ),
    }
}

fn cmd_rho(cfg: &RunConfig, opts: &Opts) -> CliResult<()> {
    let q = parse_q(opts)?;
    let t = rho_table(q)?;
    let entries: Vec<(i64, u64)> = match opts.a {
        Some(a) => vec![(a, t.get(a))],
        None => (1..=q as i64).map(|a| (a, t.get(a))).collect(),
    };
    match cfg.output_format {
        OutputFormat::Json => {
            let rho: Vec<Value> = entries
                .iter()
                .map(|&(a, r)| json!({"a": a, "rho": r}))
                .collect();
            emit_json(&json!({
                "q": q,
                "rho": rho,
                "total": t.total().to_string(),
                "square_sum": t.square_sum().to_string(),
            }))
        }
        OutputFormat::Csv => emit_csv(
            &["q", "a", "rho"],
            &entries
                .iter()
                .map(|&(a, r)| vec![q.to_string(), a.to_string(), r.to_string()])
                .collect::<Vec<_>>(),
        ),
    }
}

fn cmd_identities(cfg: &RunConfig, opts: &Opts) -> CliResult<()> {
    let mut ranges = IdentityRanges::default();
    if let Some(m) = opts.q_max {
        ranges.reduce_q_max = m;
        ranges.prime_power_max = m;
        ranges.dft_q_max = ranges.dft_q_max.min(m);
        ranges.second_moment_q_max = ranges.second_moment_q_max.min(m);
        ranges.multiplicative_max = ranges.multiplicative_max.min(m);
    }
    if let Some(d) = ranges.dirichlet.as_mut() {
        *d = DirichletRange {
            s: d.s,
            q_max: opts.series_cutoff.unwrap_or(d.q_max),
            prime_cutoff: opts.prime_cutoff.unwrap_or(d.prime_cutoff),
        };
    }
    let results = run_suite(&ranges)?;
    for r in &results {
        log::info!(
            "{:<28} {:>9} cases  max deviation {:.3e}  tolerance {}  {}",
            r.name,
            r.cases,
            r.max_deviation,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    match cfg.output_format {
        OutputFormat::Json => emit_json(&serde_json::to_value(&results)?)?,
        OutputFormat::Csv => emit_csv(
            &["name", "cases", "max_deviation", "tolerance", "passed"],
            &results
                .iter()
                .map(|r| {
                    vec![
                        r.name.clone(),
                        r.cases.to_string(),
                        num(r.max_deviation),
                        r.tolerance.clone(),
                        r.passed.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "identity failures: {}",
            failed.join(", ")
        )))
    }
}

fn cmd_predict(cfg: &RunConfig, opts: &Opts) -> CliResult<()> {
    let x = require(opts.x, "x")?;
    let q = parse_q(opts)?;
    let id = formula(opts)?
        .resolve(x as f64, q as f64)
        .ok_or_else(|| CliError::Usage("predict needs a formula other than none".into()))?;
    if q == 0 || q > x {
        return Err(Error::Domain(format!("need 0 < Q <= x, got x = {x}, Q = {q}")).into());
    }
    let table = table_for(cfg, opts, x)?;
    let c = constants(cfg.prime_cutoff, cfg.series_cutoff)?;
    let w = Weights::new(x / q + 1)?;
    let p = predict(id, x as f64, q as f64, table.sum_r3_squared(x)?, &c, &w)?;
    match cfg.output_format {
        OutputFormat::Json => emit_json(&serde_json::to_value(&p)?),
        OutputFormat::Csv => {
            let mut rows: Vec<Vec<String>> = p
                .main_terms
                .iter()
                .map(|t| vec![t.name.clone(), num(t.value)])
                .collect();
            rows.push(vec!["total".into(), num(p.total)]);
            emit_csv(&["term", "value"], &rows)
        }
    }
}

fn cmd_variance(cfg: &RunConfig, opts: &Opts) -> CliResult<()> {
    let x = require(opts.x, "x")?;
    let q = parse_q(opts)?;
    if q == 0 || q > x {
        return Err(Error::Domain(format!("need 0 < Q <= x, got x = {x}, Q = {q}")).into());
    }
    let spec = formula(opts)?;
    let table = load_covering(&cfg.cache_path, x)?;
    let exponent = opts
        .normalize_exponent
        .unwrap_or(DEFAULT_NORMALIZE_EXPONENT);
    let rho = RhoCache::new();
    let report = if spec.resolve(x as f64, q as f64).is_some() {
        let c = constants(cfg.prime_cutoff, cfg.series_cutoff)?;
        let w = Weights::new(x / q + 1)?;
        let inputs = PredictionInputs {
            constants: &c,
            weights: &w,
        };
        variance_with_prediction(&table, &rho, x, q, spec, Some(&inputs), exponent)?
    } else {
        variance_with_prediction(&table, &rho, x, q, spec, None, exponent)?
    };
    write_reports(io::stdout().lock(), &[report], cfg.output_format)?;
    Ok(())
}

fn grid_125(x_max: u64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut decade = 10u64;
    'outer: loop {
        for m in [1, 2, 5] {
            let x = decade.saturating_mul(m);
            if x > x_max {
                break 'outer;
            }
            grid.push(x);
        }
        decade = match decade.checked_mul(10) {
            Some(d) => d,
            None => break,
        };
    }
    grid
}

fn cmd_scan(cfg: &RunConfig, opts: &Opts) -> CliResult<()> {
    let x_max = require(opts.x_max, "x-max")?;
    let policy: QPolicy = opts.q.as_deref().unwrap_or("x").parse()?;
    let spec = formula(opts)?;
    let grid = grid_125(x_max);
    if grid.is_empty() {
        return Err(CliError::Usage("--x-max must be at least 10".into()));
    }
    let table = load_covering(&cfg.cache_path, x_max)?;
    let exponent = opts
        .normalize_exponent
        .unwrap_or(DEFAULT_NORMALIZE_EXPONENT);
    let rho = RhoCache::new();
    let needs_prediction = grid
        .iter()
        .any(|&x| spec.resolve(x as f64, policy.choose(x) as f64).is_some());
    let reports = if needs_prediction {
        let bound = grid
            .iter()
            .map(|&x| x / policy.choose(x) + 1)
            .max()
            .unwrap_or(1);
        let c = constants(cfg.prime_cutoff, cfg.series_cutoff)?;
        let w = Weights::new(bound)?;
        let inputs = PredictionInputs {
            constants: &c,
            weights: &w,
        };
        scan(&table, &rho, &grid, policy, spec, Some(&inputs), exponent)?
    } else {
        scan(&table, &rho, &grid, policy, spec, None, exponent)?
    };
    write_reports(io::stdout().lock(), &reports, cfg.output_format)?;
    Ok(())
}

fn cmd_diagnose(cfg: &RunConfig, opts: &Opts) -> CliResult<()> {
    let x = require(opts.x, "x")?;
    let q_max = opts.q_max.unwrap_or(32);
    let only_q = opts.q.as_deref().map(|_| parse_q(opts)).transpose()?;
    let table = table_for(cfg, opts, x)?;
    let rows: Vec<_> = arc_survey(&table, x, only_q.map_or(q_max, |q| q.max(1)))?
        .into_iter()
        .filter(|d| only_q.is_none_or(|q| d.q == q))
        .filter(|d| opts.a.is_none_or(|a| d.a as i64 == a))
        .collect();
    let max = rows.iter().map(|d| d.bound_ratio).fold(0.0, f64::max);
    log::info!("{} cells, max bound_ratio {max:.4}", rows.len());
    match cfg.output_format {
        OutputFormat::Json => emit_json(&json!({
            "x": x,
            "max_bound_ratio": max,
            "cells": serde_json::to_value(&rows)?,
        })),
        OutputFormat::Csv => emit_csv(
            &["q", "a", "beta", "delta_abs", "bound_ratio"],
            &rows
                .iter()
                .map(|d| {
                    vec![
                        d.q.to_string(),
                        d.a.to_string(),
                        num(d.beta),
                        num(d.delta_abs),
                        num(d.bound_ratio),
                    ]
                })
                .collect::<Vec<_>>(),
        ),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = run_config(&cli.opts)?;
    let pool = cfg.thread_pool()?;
    let opts = &cli.opts;
    pool.install(|| match cli.command {
        Command::Sieve => cmd_sieve(&cfg),
        Command::Constants => cmd_constants(&cfg),
        Command::GaussSum => cmd_gauss_sum(&cfg, opts),
        Command::Rho => cmd_rho(&cfg, opts),
        Command::Identities => cmd_identities(&cfg, opts),
        Command::Predict => cmd_predict(&cfg, opts),
        Command::Variance => cmd_variance(&cfg, opts),
        Command::Scan => cmd_scan(&cfg, opts),
        Command::Diagnose => cmd_diagnose(&cfg, opts),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hdnewton::accel::{accel_root_with, choose_k, make_config, AccelOptions, IterationTrace};
use hdnewton::bench::{run_sweep, summary_json, write_csv, Family, KChoice, SweepSpec};
use hdnewton::detpoly::SymmetricMatrix;
use hdnewton::eigen::{approx_psd, top_eigenvalue};
use hdnewton::normalize::normalize_poly;
use hdnewton::oracle::read_polynomial_file;
use hdnewton::scalar::{parse_rational, to_decimal};
use hdnewton::{Error, Rational};
use serde::Serialize;
use serde_json::{json, Value};

const DECIMAL_DIGITS: u32 = 20;

#[derive(Parser)]
#[command(name = "hdnewton", version, about = "Largest real root and top eigenvalue from exact evaluations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Largest root of a real-rooted polynomial given by coefficients.
    Root(RootArgs),
    /// Largest eigenvalue of a symmetric rational matrix.
    Eig(EigArgs),
    /// Approximate PSD test: exit 0 if A >= -eps I, exit 1 if not.
    Psd(PsdArgs),
    /// Query-count sweep over an instance family.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RootArgs {
    /// One coefficient per line, highest degree first, leading coefficient 1.
    poly_file: PathBuf,
    /// Upper bound on the absolute value of every root.
    #[arg(long, value_parser = rational)]
    bound: Rational,
    /// Additive error in the original units.
    #[arg(long, value_parser = rational)]
    eps: Rational,
    #[arg(long, conflicts_with = "auto_k")]
    k: Option<u32>,
    /// Use k = ceil(log2 n) (the default).
    #[arg(long)]
    auto_k: bool,
    /// Write the iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    decimal: bool,
}

#[derive(Args)]
struct EigArgs {
    /// First line n, then n rows of n rationals.
    matrix_file: PathBuf,
    #[arg(long, value_parser = rational)]
    eps: Rational,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    decimal: bool,
}

#[derive(Args)]
struct PsdArgs {
    matrix_file: PathBuf,
    #[arg(long, value_parser = rational)]
    eps: Rational,
}

#[derive(Args)]
struct BenchArgs {
    /// random-roots, clustered-top-roots or complete-graph.
    #[arg(long)]
    family: String,
    #[arg(long = "n", value_delimiter = ',', num_args = 1.., required = true)]
    ns: Vec<String>,
    #[arg(long = "eps", value_delimiter = ',', num_args = 1.., required = true)]
    epss: Vec<String>,
    /// Depths, each a positive integer or `auto`.
    #[arg(long = "k", value_delimiter = ',', num_args = 1.., default_value = "auto")]
    ks: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instances per degree.
    #[arg(long, default_value_t = 1)]
    instances: usize,
    /// CSV destination.
    #[arg(long)]
    out: PathBuf,
    /// Skip the classic Newton rows.
    #[arg(long)]
    no_classic: bool,
    /// Add power-iteration rows (complete-graph only).
    #[arg(long)]
    power: bool,
    /// Evaluate root families through expanded coefficients.
    #[arg(long)]
    explicit: bool,
}

#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    inputs: Value,
    result: Value,
    result_decimal: Option<String>,
    queries: u64,
    max_query_bits: u64,
    iterations: u64,
    trace_path: Option<String>,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Root(a) => cmd_root(a),
        Command::Eig(a) => cmd_eig(a),
        Command::Psd(a) => cmd_psd(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome.and_then(|(report, code)| emit(&report).map(|_| code)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(report: &RunReport) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, report).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn decimal(flag: bool, x: &Rational) -> Option<String> {
    flag.then(|| to_decimal(x, DECIMAL_DIGITS))
}

fn write_trace(path: &Option<PathBuf>, trace: &IterationTrace) -> Result<Option<String>, Error> {
    let Some(path) = path else { return Ok(None) };
    let mut w = BufWriter::new(File::create(path)?);
    trace.write_csv(&mut w)?;
    w.flush()?;
    Ok(Some(path.display().to_string()))
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_root(a: RootArgs) -> Result<(RunReport, u8), Error> {
    let poly = read_polynomial_file(&a.poly_file)?;
    let (oracle, map) = normalize_poly(&poly, &a.bound)?;
    let eps_normalized = map.normalized_error(&a.eps);
    if eps_normalized <= 0 || eps_normalized > Rational::from((1, 2)) {
        return Err(Error::InvalidArgument(format!(
            "eps / (4 * bound) = {eps_normalized} must lie in (0, 1/2]"
        )));
    }
    let n = map.degree;
    let k = a.k.unwrap_or_else(|| choose_k(n));
    let config = make_config(n, &eps_normalized, k)?;
    let (mu, trace) = accel_root_with(&oracle, &config, &AccelOptions::default())?;
    let root = map.denormalize(&mu);
    let report = RunReport {
        command: "root",
        inputs: json!({
            "poly_file": display(&a.poly_file),
            "degree": n,
            "bound": a.bound.to_string(),
            "eps": a.eps.to_string(),
            "eps_normalized": eps_normalized.to_string(),
            "k": k,
        }),
        result: json!(root.to_string()),
        result_decimal: decimal(a.decimal, &root),
        queries: trace.queries.count,
        max_query_bits: trace.queries.max_query_bits,
        iterations: trace.iterations,
        trace_path: write_trace(&a.trace, &trace)?,
    };
    Ok((report, 0))
}

fn cmd_eig(a: EigArgs) -> Result<(RunReport, u8), Error> {
    let m = SymmetricMatrix::read_file(&a.matrix_file)?;
    let r = top_eigenvalue(&m, &a.eps)?;
    let report = RunReport {
        command: "eig",
        inputs: json!({
            "matrix_file": display(&a.matrix_file),
            "dimension": m.dim(),
            "eps": a.eps.to_string(),
            "eps_normalized": r.eps_scaled.to_string(),
            "k": r.trace.config.k,
        }),
        result: json!(r.lambda_max.to_string()),
        result_decimal: decimal(a.decimal, &r.lambda_max),
        queries: r.queries,
        max_query_bits: r.trace.queries.max_query_bits,
        iterations: r.trace.iterations,
        trace_path: write_trace(&a.trace, &r.trace)?,
    };
    Ok((report, 0))
}

fn cmd_psd(a: PsdArgs) -> Result<(RunReport, u8), Error> {
    let m = SymmetricMatrix::read_file(&a.matrix_file)?;
    let (psd, run) = approx_psd(&m, &a.eps)?;
    let report = RunReport {
        command: "psd",
        inputs: json!({
            "matrix_file": display(&a.matrix_file),
            "dimension": m.dim(),
            "eps": a.eps.to_string(),
            "eps_normalized": run.eps_scaled.to_string(),
            "neg_lambda_max": run.lambda_max.to_string(),
        }),
        result: json!(psd),
        result_decimal: None,
        queries: run.queries,
        max_query_bits: run.trace.queries.max_query_bits,
        iterations: run.trace.iterations,
        trace_path: None,
    };
    Ok((report, if psd { 0 } else { 1 }))
}

fn cmd_bench(a: BenchArgs) -> Result<(RunReport, u8), Error> {
    let family: Family = a.family.parse()?;
    let parse_n = |s: &String| {
        s.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("bad degree {s:?}")))
    };
    let ns = a.ns.iter().filter(|s| !s.trim().is_empty()).map(parse_n).collect::<Result<Vec<_>, _>>()?;
    let epss = a
        .epss
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_rational(s))
        .collect::<Result<Vec<_>, _>>()?;
    let ks = a.ks.iter().map(|s| s.trim().parse::<KChoice>()).collect::<Result<Vec<_>, _>>()?;
    if ns.is_empty() || epss.is_empty() {
        return Err(Error::InvalidArgument("--n and --eps need at least one value".into()));
    }
    if family == Family::ClusteredTopRoots && ns.iter().any(|&n| n < 2) {
        return Err(Error::InvalidArgument("clustered-top-roots needs n >= 2".into()));
    }
    let mut spec = SweepSpec::new(family, ns.clone(), epss.clone(), ks, a.seed);
    spec.instances = a.instances;
    spec.classic = !a.no_classic;
    spec.power = a.power;
    spec.explicit = a.explicit;
    let records = run_sweep(&spec)?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    write_csv(&records, &mut w)?;
    w.flush()?;
    let report = RunReport {
        command: "bench",
        inputs: json!({
            "family": family.name(),
            "n": ns,
            "eps": epss.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "k": a.ks,
            "seed": a.seed,
            "instances": a.instances,
            "out": display(&a.out),
        }),
        result: summary_json(&records),
        result_decimal: None,
        queries: records.iter().map(|r| r.queries).sum(),
        max_query_bits: records.iter().map(|r| r.max_query_bits).max().unwrap_or(0),
        iterations: records.iter().map(|r| r.iterations).sum(),
        trace_path: None,
    };
    Ok((report, 0))
}

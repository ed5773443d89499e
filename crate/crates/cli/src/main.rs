//! Command-line front end: loads an experiment spec from a flat key-value
//! config file plus `--override KEY=VALUE` flags, dispatches the studies,
//! and writes the CSV artifacts. Every emitted file is listed on stdout;
//! progress and summaries go to stderr so the artifact list stays clean.
//!
//! Exit codes: 0 on success, 2 on usage/config errors (unknown key,
//! unreadable config, invalid value), 1 on runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use d2dsim::analytic::AnalyticSumRateK2;
use d2dsim::config::{parse_kv_text, parse_override};
use d2dsim::harness::{self, ExperimentSpec};
use d2dsim::{optimizer, Error};

#[derive(Parser)]
#[command(
    name = "d2dsim",
    version,
    about = "Monte Carlo studies of K-pair spectrum-sharing link schedulers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean sum rate per scheme across network sizes -> sum_rate_vs_k.csv
    SumRate(CommonArgs),
    /// Per-user rate quantiles at one network size -> cdf_k{K}.csv
    Cdf(CdfArgs),
    /// Optimal-threshold table across network sizes -> thresholds.csv
    Thresholds(CommonArgs),
    /// Scheduling condition-check counts -> op_counts.csv
    OpCount(CommonArgs),
    /// Closed-form two-pair sum-rate curve and optimum -> analytic_k2.csv
    AnalyticK2(AnalyticArgs),
    /// Cellular time-sharing hybrid of per-user rates -> cellular_k{K}.csv
    Cellular(CellularArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key-value config file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// KEY=VALUE applied after the config file, last one wins (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master RNG seed; fully determines all randomness. Defaults to the
    /// config's rng_seed (a fixed constant, not entropy).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 = auto. Never affects output bytes.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct CdfArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Network size to evaluate.
    #[arg(long, default_value_t = 800)]
    k: usize,
}

#[derive(Args)]
struct AnalyticArgs {
    /// Transmit power in dB, with noise normalized to unit power.
    #[arg(long, default_value_t = 20.0)]
    power_db: f64,
    /// Number of curve grid points.
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Output directory for CSV artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CellularArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Network size to evaluate.
    #[arg(long, default_value_t = 800)]
    k: usize,
    /// Nominal per-user cellular rate R_c.
    #[arg(long, default_value_t = 4.0)]
    r_c: f64,
    /// Number of cells B.
    #[arg(long, default_value_t = 10)]
    b_cells: u32,
    /// Users scheduled per cell K_c.
    #[arg(long, default_value_t = 20)]
    k_c: u32,
    /// Bandwidth share given to the cellular network.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::InvalidConfig(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::SumRate(common) => {
            let spec = build_spec(&common)?;
            init_threads(common.threads)?;
            let results = harness::run_sum_rate_study(&spec)?;
            for result in &results {
                eprintln!("sum-rate study: K = {} done ({} eval drops)", result.k, result.num_eval_drops);
                for scheme in &result.schemes {
                    eprintln!(
                        "  {:<18} mean {:>12.4} +- {:>8.4}  inactive {:>6.3}  [{}]",
                        scheme.label,
                        scheme.mean_sum_rate,
                        scheme.stderr,
                        scheme.fraction_inactive,
                        scheme.params
                    );
                }
            }
            let path = spec.output_dir.join("sum_rate_vs_k.csv");
            harness::write_sum_rate_csv(&path, &results)?;
            announce(&path);
            Ok(())
        }
        Command::Cdf(args) => {
            let spec = build_spec(&args.common)?;
            init_threads(args.common.threads)?;
            let result = harness::run_cdf_study(&spec, args.k)?;
            eprintln!("cdf study: K = {} done ({} eval drops)", result.k, result.num_eval_drops);
            for scheme in &result.schemes {
                eprintln!(
                    "  {:<18} inactive {:>6.3}  near-zero {:>6.3}  never-active {:>6.3}",
                    scheme.label,
                    scheme.fraction_inactive,
                    scheme.fraction_near_zero,
                    scheme.fraction_never_active
                );
            }
            let path = spec.output_dir.join(format!("cdf_k{}.csv", args.k));
            harness::write_cdf_csv(&path, &result)?;
            announce(&path);
            Ok(())
        }
        Command::Thresholds(common) => {
            let spec = build_spec(&common)?;
            init_threads(common.threads)?;
            let rows = optimizer::optimal_threshold_vs_k(&spec.k_values, &spec.cfg, spec.num_drops)?;
            for row in &rows {
                eprintln!("thresholds: K = {:<5} gamma* = {:.6} (mean {:.4})", row.k, row.gamma_star, row.mean_sum_rate);
            }
            let path = spec.output_dir.join("thresholds.csv");
            harness::write_thresholds_csv(&path, &rows)?;
            announce(&path);
            Ok(())
        }
        Command::OpCount(common) => {
            let spec = build_spec(&common)?;
            init_threads(common.threads)?;
            let rows = harness::count_ops_study(&spec)?;
            for row in &rows {
                eprintln!(
                    "op-count: K = {:<5} {:<18} mean {:>12.1} (min {}, max {})",
                    row.k, row.label, row.mean_checks, row.min_checks, row.max_checks
                );
            }
            let path = spec.output_dir.join("op_counts.csv");
            harness::write_op_counts_csv(&path, &rows)?;
            announce(&path);
            Ok(())
        }
        Command::AnalyticK2(args) => {
            let power = 10f64.powf(args.power_db / 10.0);
            let mut model = AnalyticSumRateK2::new(power)?;
            if args.points < 2 {
                return Err(Error::InvalidConfig("analytic-k2 needs at least 2 points".into()));
            }
            let (lo, hi) = ((1e-3f64).ln(), (100.0 * power).ln());
            let mut curve = Vec::with_capacity(args.points);
            for i in 0..args.points {
                let gamma = (lo + (hi - lo) * i as f64 / (args.points - 1) as f64).exp();
                curve.push((gamma, model.sum_rate(gamma)?));
            }
            let (gamma_star, rate_star) = model.optimal_gamma()?;
            eprintln!(
                "analytic-k2: P = {:.3} ({} dB), gamma* = {:.6}, rate = {:.6} bits/s/Hz",
                power, args.power_db, gamma_star, rate_star
            );
            let dir = args.out.unwrap_or_else(|| PathBuf::from("out"));
            let path = dir.join("analytic_k2.csv");
            harness::write_analytic_k2_csv(&path, &curve, gamma_star, rate_star)?;
            announce(&path);
            Ok(())
        }
        Command::Cellular(args) => {
            let mut spec = build_spec(&args.common)?;
            init_threads(args.common.threads)?;
            // Per-user ergodic D2D rates come from the first configured
            // scheme (the SINR-threshold scheme by default).
            spec.schemes.truncate(1);
            let result = harness::run_cdf_study(&spec, args.k)?;
            let agg = &result.schemes[0];
            let drops = result.num_eval_drops;
            let mut d2d = vec![0.0f64; args.k];
            for (i, &rate) in agg.user_rates.iter().enumerate() {
                d2d[i % args.k] += rate / drops as f64;
            }
            let hybrid =
                harness::cellular_assisted_rate(&d2d, args.r_c, args.b_cells, args.k_c, args.alpha)?;
            eprintln!(
                "cellular: K = {}, alpha = {}, cellular share = {:.6} bits/s/Hz per user",
                args.k,
                args.alpha,
                args.r_c * args.b_cells as f64 * args.k_c as f64 / args.k as f64
            );
            let path = spec.output_dir.join(format!("cellular_k{}.csv", args.k));
            harness::write_cellular_csv(&path, &d2d, &hybrid)?;
            announce(&path);
            Ok(())
        }
    }
}

/// Assembles the experiment spec: config file pairs, then overrides, then
/// the --seed / --out flags (which are themselves just overrides).
fn build_spec(common: &CommonArgs) -> Result<ExperimentSpec, Error> {
    let mut pairs = Vec::new();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|err| {
            Error::InvalidConfig(format!("cannot read config `{}`: {err}", path.display()))
        })?;
        pairs.extend(parse_kv_text(&text)?);
    }
    for raw in &common.overrides {
        pairs.push(parse_override(raw)?);
    }
    if let Some(seed) = common.seed {
        pairs.push(("rng_seed".into(), seed.to_string()));
    }
    if let Some(out) = &common.out {
        pairs.push(("output_dir".into(), out.display().to_string()));
    }
    ExperimentSpec::from_pairs(&pairs)
}

fn init_threads(threads: usize) -> Result<(), Error> {
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|err| Error::InvalidInput(format!("thread pool: {err}")))?;
    }
    Ok(())
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

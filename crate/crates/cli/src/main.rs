//! Command-line front end for the relay-rate library.
//!
//! Subcommands: `rate` evaluates one channel and relay configuration,
//! `optimize` searches relay modes and power splits, `sweep` runs
//! deterministic Monte Carlo ensembles to CSV, `dm-eval` solves a
//! finite-alphabet network, and `schedule` applies the half-duplex
//! scheduling factor to a chain rate. Single-instance reports are JSON on
//! stdout; sweeps emit CSV. Exit codes: 0 on success, 2 on invalid input,
//! 1 on internal failure.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use vfdrelay::channel::EnsembleSpec;
use vfdrelay::engine::{evaluate, schedule_throughput};
use vfdrelay::info::RateValue;
use vfdrelay::optimizer::{optimize, ModeSearch, SearchSpec, ThetaSearch};
use vfdrelay::sweep::{
    rows_csv, run_sweep, summary_csv, Scheme, SweepRequest, ALL_SCHEMES, DEFAULT_SEED,
};
use vfdrelay::{ChannelInstance, Decoder, DmModes, DmNetworkSpec, FormulaVariant, ModeConfig};

#[derive(Parser)]
#[command(
    name = "vfdrelay",
    version,
    about = "Achievable rates of multihop virtual full-duplex relay chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the symmetric rate of one channel and relay configuration.
    Rate(RateArgs),
    /// Search relay mode sets and power splits for the best symmetric rate.
    Optimize(OptimizeArgs),
    /// Monte Carlo ensemble sweep over chain depths and schemes, to CSV.
    Sweep(SweepArgs),
    /// Solve a finite-alphabet two-path network for its symmetric rate.
    #[command(name = "dm-eval")]
    DmEval(DmEvalArgs),
    /// Half-duplex scheduling throughput of a chain rate.
    Schedule(ScheduleArgs),
}

#[derive(Args)]
struct RateArgs {
    /// JSON file with a `channel` object (K, snr_db, inr_db; null inr_db
    /// entries mean no cross link) and a `mode` object (qmf_set, theta,
    /// decoder, formula_variant).
    #[arg(long)]
    config: PathBuf,
    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// JSON file with a `channel` object (K, snr_db, inr_db).
    #[arg(long)]
    config: PathBuf,
    /// Decoder at the interfered relays: sd or jd.
    #[arg(long, default_value = "sd", value_parser = Decoder::from_str)]
    decoder: Decoder,
    /// Cross-constraint reading: printed or theorem.
    #[arg(long, default_value = "printed", value_parser = FormulaVariant::from_str)]
    variant: FormulaVariant,
    /// Power-split search strategy: coordinate or grid.
    #[arg(long, default_value = "coordinate")]
    theta_search: String,
    /// Points per dimension when --theta-search grid is selected.
    #[arg(long, default_value_t = 101)]
    grid_points: usize,
    /// Restrict the search to one comma-separated QMF stage set (for
    /// example "1,3"; empty string for the all-DF chain) instead of
    /// searching all subsets.
    #[arg(long)]
    qmf: Option<String>,
    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated chain depths to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    k_list: Vec<usize>,
    /// Monte Carlo trials per chain depth.
    #[arg(long, default_value_t = 200)]
    trials: u64,
    /// Ensemble seed; identical seeds reproduce identical bytes.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Per-hop SNR in dB, common to all hops.
    #[arg(long, default_value_t = 20.0)]
    snr_db: f64,
    /// Lower end of the cross-link exponent range.
    #[arg(long, default_value_t = 1.0)]
    alpha_lo: f64,
    /// Upper end of the cross-link exponent range.
    #[arg(long, default_value_t = 2.0)]
    alpha_hi: f64,
    /// Decoder at the interfered relays: sd or jd.
    #[arg(long, default_value = "sd", value_parser = Decoder::from_str)]
    decoder: Decoder,
    /// Cross-constraint reading: printed or theorem.
    #[arg(long, default_value = "printed", value_parser = FormulaVariant::from_str)]
    variant: FormulaVariant,
    /// Comma-separated schemes to evaluate (default: all).
    #[arg(long, value_delimiter = ',', value_parser = Scheme::from_str)]
    schemes: Option<Vec<Scheme>>,
    /// Write per-trial rows here and the means to `<out>.summary.csv`;
    /// without it the rows go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DmEvalArgs {
    /// JSON network description: alphabets, per-stage channel pmfs,
    /// destination channel, per-path source/relay input laws, quantizer
    /// families.
    #[arg(long)]
    spec: PathBuf,
    /// Comma-separated stages of path 1 that quantize (empty set if omitted).
    #[arg(long, default_value = "")]
    qmf_1: String,
    /// Comma-separated stages of path 2 that quantize (empty set if omitted).
    #[arg(long, default_value = "")]
    qmf_2: String,
    /// Decoder at the interfered relays: sd or jd.
    #[arg(long, default_value = "sd", value_parser = Decoder::from_str)]
    decoder: Decoder,
    /// Also write the JSON report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Chain rate in bits per channel use.
    #[arg(long)]
    rate: f64,
    /// Number of relay stages in the chain.
    #[arg(long)]
    num_relays: usize,
    /// Number of message blocks in the schedule (at least 1).
    #[arg(long)]
    frames: usize,
}

/// Failures split by whose fault they are: bad input exits 2, everything
/// else exits 1.
enum CmdError {
    Input(String),
    Internal(String),
}

type CmdResult<T> = Result<T, CmdError>;

impl From<vfdrelay::Error> for CmdError {
    fn from(e: vfdrelay::Error) -> Self {
        CmdError::Input(e.to_string())
    }
}

fn read_file(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CmdError::Input(format!("{}: {e}", path.display())))
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CmdResult<T> {
    serde_json::from_str(text)
        .map_err(|e| CmdError::Input(format!("{}: {e}", path.display())))
}

fn write_out(path: &Path, content: &str) -> CmdResult<()> {
    fs::write(path, content)
        .map_err(|e| CmdError::Internal(format!("cannot write {}: {e}", path.display())))
}

/// Writes to stdout, treating a closed pipe as a normal early exit so the
/// tool composes with `head` and friends.
fn print_stdout(text: &str) -> CmdResult<()> {
    use std::io::Write;
    match std::io::stdout().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CmdError::Internal(format!("cannot write to stdout: {e}"))),
    }
}

/// Prints a JSON report to stdout and mirrors it to `--out` when given. The
/// file is written first so it survives a closed stdout.
fn emit_report<T: Serialize>(report: &T, out: Option<&Path>) -> CmdResult<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| CmdError::Internal(format!("cannot serialize report: {e}")))?;
    if let Some(path) = out {
        write_out(path, &text)?;
    }
    print_stdout(&text)?;
    print_stdout("\n")
}

/// Parses "1,3" into a stage set; the empty string is the empty set.
fn parse_stage_set(text: &str, flag: &str) -> CmdResult<BTreeSet<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| CmdError::Input(format!("{flag}: {t:?} is not a stage number")))
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RateConfig {
    channel: ChannelInstance,
    mode: ModeConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizeConfig {
    channel: ChannelInstance,
}

fn cmd_rate(args: &RateArgs) -> CmdResult<()> {
    let text = read_file(&args.config)?;
    let config: RateConfig = parse_json(&args.config, &text)?;
    let breakdown = evaluate(&config.channel, &config.mode)?;
    emit_report(&breakdown, args.out.as_deref())
}

fn cmd_optimize(args: &OptimizeArgs) -> CmdResult<()> {
    let text = read_file(&args.config)?;
    let config: OptimizeConfig = parse_json(&args.config, &text)?;
    let theta_search = match args.theta_search.as_str() {
        "coordinate" => ThetaSearch::default_coordinate(),
        "grid" => ThetaSearch::Grid { points_per_dim: args.grid_points },
        other => {
            return Err(CmdError::Input(format!(
                "--theta-search must be coordinate or grid, got {other:?}"
            )))
        }
    };
    let mode_search = match &args.qmf {
        Some(text) => ModeSearch::Given(parse_stage_set(text, "--qmf")?),
        None => ModeSearch::Exhaustive,
    };
    let spec =
        SearchSpec { mode_search, theta_search, decoder: args.decoder, variant: args.variant };
    let optimum = optimize(&config.channel, &spec)?;
    emit_report(&optimum, args.out.as_deref())
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult<()> {
    let request = SweepRequest {
        ensemble: EnsembleSpec {
            snr_db: args.snr_db,
            alpha_lo: args.alpha_lo,
            alpha_hi: args.alpha_hi,
            trials: args.trials,
            seed: args.seed,
        },
        k_list: args.k_list.clone(),
        schemes: args.schemes.clone().unwrap_or_else(|| ALL_SCHEMES.to_vec()),
        decoder: args.decoder,
        variant: args.variant,
    };
    let result = run_sweep(&request)?;
    let rows = rows_csv(&result);
    let summary = summary_csv(&result);
    match &args.out {
        Some(out) => {
            write_out(out, &rows)?;
            let summary_path = out.with_extension("summary.csv");
            write_out(&summary_path, &summary)?;
            print_stdout(&summary)
        }
        None => print_stdout(&rows),
    }
}

fn cmd_dm_eval(args: &DmEvalArgs) -> CmdResult<()> {
    let text = read_file(&args.spec)?;
    let spec = DmNetworkSpec::from_json(&text)
        .map_err(|e| CmdError::Input(format!("{}: {e}", args.spec.display())))?;
    let modes = DmModes::new(
        parse_stage_set(&args.qmf_1, "--qmf-1")?,
        parse_stage_set(&args.qmf_2, "--qmf-2")?,
    );
    let result = vfdrelay::dm::solve_symmetric(&spec, &modes, args.decoder)?;
    emit_report(&result, args.out.as_deref())
}

#[derive(Serialize)]
struct ScheduleReport {
    rate_bits: f64,
    num_relays: usize,
    frames: usize,
    /// End-to-end throughput of the finite schedule.
    throughput_bits: f64,
    /// Limit of the throughput as the number of frames grows.
    asymptotic_throughput_bits: f64,
}

fn cmd_schedule(args: &ScheduleArgs) -> CmdResult<()> {
    let rate = RateValue::new(args.rate)?;
    let throughput = schedule_throughput(rate, args.num_relays, args.frames)?;
    let report = ScheduleReport {
        rate_bits: args.rate,
        num_relays: args.num_relays,
        frames: args.frames,
        throughput_bits: throughput.bits(),
        asymptotic_throughput_bits: args.rate / 2.0,
    };
    emit_report(&report, None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Rate(args) => cmd_rate(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::DmEval(args) => cmd_dm_eval(args),
        Command::Schedule(args) => cmd_schedule(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

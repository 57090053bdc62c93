use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vlsf::checks::{run_all, run_check, CheckConfig};
use vlsf::commands::{bec_rlfc_rows, curve_rows, sdo_point, solution_row, tail_rows, two_step_options, Mode};
use vlsf::output::{sink, write_rows, Format};
use vlsf::{ChannelArg, RangeArg};
use vlsf_core::channels::gamma_from_delta;
use vlsf_core::mc_oracle::SimConfig;
use vlsf_core::Channel;

#[derive(Parser)]
#[command(name = "vlsf", version, about = "Achievability bounds for variable-length stop-feedback codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArgs {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Information-density threshold in bits.
    #[arg(long, conflicts_with = "delta")]
    gamma: Option<f64>,
    /// Error-budget split; with --k and --eps gives γ = log₂((2^k − 1)/(δε)).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Tail probabilities P[Σι ≥ γ] on an integer grid.
    Tail {
        #[arg(long)]
        channel: ChannelArg,
        #[command(flatten)]
        threshold: ThresholdArgs,
        /// Grid of n as START:END[:STEP].
        #[arg(long, default_value = "1:100")]
        n: RangeArg,
        /// Monte Carlo trials (0 disables simulation).
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Optimized decoding times for one (k, m) per listed m.
    Sdo {
        #[arg(long)]
        channel: ChannelArg,
        #[arg(long)]
        k: u32,
        #[arg(long = "m", required = true)]
        m: Vec<usize>,
        #[arg(long)]
        eps: f64,
        #[arg(long, conflicts_with = "gamma")]
        delta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Infodens)]
        mode: Mode,
        /// Treat a failed solver hypothesis as an error.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Rate curve over a k range and a list of m, with baselines.
    Curve {
        #[arg(long)]
        channel: ChannelArg,
        #[arg(long = "k-range")]
        k_range: RangeArg,
        #[arg(long = "m", required = true)]
        m: Vec<usize>,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = Mode::Infodens)]
        mode: Mode,
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Zero-error fountain-code bounds and backoff fractions on the BEC.
    BecRlfc {
        #[arg(long)]
        p: f64,
        #[arg(long = "k-range", default_value = "1:20")]
        k_range: RangeArg,
        /// Monte Carlo trials for the mean stopping time (0 disables).
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Runs the acceptance checks; exit code 1 if any fails.
    Check {
        #[arg(long, default_value_t = CheckConfig::default().trials)]
        trials: u64,
        #[arg(long, default_value_t = CheckConfig::default().seed)]
        seed: u64,
        /// Run only these check ids.
        #[arg(long = "only")]
        only: Vec<u32>,
        /// Also write the report as JSON lines to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn threshold(t: &ThresholdArgs) -> anyhow::Result<f64> {
    match (t.gamma, t.delta, t.k, t.eps) {
        (Some(g), ..) => Ok(g),
        (None, Some(d), Some(k), Some(eps)) => Ok(gamma_from_delta(k, eps, d)),
        _ => anyhow::bail!("give --gamma, or --delta with --k and --eps"),
    }
}

fn sim(trials: u64, seed: u64) -> Option<SimConfig> {
    (trials > 0).then_some(SimConfig { trials, seed })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Tail { channel, threshold: t, n, trials, seed, out } => {
            let rows = tail_rows(&channel.0, threshold(&t)?, &n.values(), sim(trials, seed).as_ref())?;
            write_rows(&rows, out.format, sink(out.out.as_deref())?)?;
        }
        Command::Sdo { channel, k, m, eps, delta, gamma, mode, strict, out } => {
            let opts = two_step_options(strict);
            let source = if mode == Mode::Strlfc { "st_rlfc_sdo" } else { "sdo" };
            let mut rows = Vec::new();
            for &mi in &m {
                let r = sdo_point(&channel.0, mode, k, mi, eps, delta, gamma, &opts);
                if let Err(e @ vlsf_core::Error::Argument(_)) = &r {
                    return Err(e.clone().into());
                }
                rows.push(solution_row(source, &channel.0, k, mi, eps, r));
            }
            write_rows(&rows, out.format, sink(out.out.as_deref())?)?;
        }
        Command::Curve { channel, k_range, m, eps, mode, strict, out } => {
            let rows = curve_rows(&channel.0, mode, &k_range.values(), &m, eps, &two_step_options(strict))?;
            write_rows(&rows, out.format, sink(out.out.as_deref())?)?;
        }
        Command::BecRlfc { p, k_range, trials, seed, out } => {
            Channel::Bec { p }.validate()?;
            let rows = bec_rlfc_rows(p, &k_range.values(), sim(trials, seed).as_ref())?;
            write_rows(&rows, out.format, sink(out.out.as_deref())?)?;
        }
        Command::Check { trials, seed, only, report } => {
            let cfg = CheckConfig { trials, seed };
            let outcomes = if only.is_empty() {
                run_all(&cfg)
            } else {
                only.iter().filter_map(|&id| run_check(id, &cfg)).collect()
            };
            for o in &outcomes {
                println!("{o}");
            }
            if let Some(path) = report {
                let rows: Vec<_> = outcomes
                    .iter()
                    .map(|o| {
                        serde_json::json!({
                            "id": o.id, "title": o.title, "passed": o.passed,
                            "seconds": o.elapsed.as_secs_f64(), "detail": o.detail,
                        })
                    })
                    .collect();
                write_rows(&rows, Format::Jsonl, sink(Some(&path))?)?;
            }
            let failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
            if !failed.is_empty() {
                eprintln!("failed checks: {failed:?}");
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage =
                e.downcast_ref::<vlsf_core::Error>().is_some_and(|c| matches!(c, vlsf_core::Error::Argument(_)));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

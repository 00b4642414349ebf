use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use env_logger::Env;
use zhd_cli::{commands, CheckArgs, CliResult, Outcome};

/// Run nonmonotone descent experiments and check their traces.
///
/// Exit status: 0 when every check passes, 2 when a conformance or rate
/// check fails, 1 on any error (bad config, unreadable trace, solver failure).
#[derive(Parser)]
#[command(name = "zhd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and check the resulting trace.
    Run {
        /// JSON run configuration.
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an existing trace CSV against the descent conditions.
    Check {
        #[arg(long)]
        trace: PathBuf,
        /// Window half-width override.
        #[arg(long)]
        k1: Option<usize>,
        /// Also write the full report as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_parser = positive)]
        a_lower: Option<f64>,
        #[arg(long, value_parser = unit_weight)]
        tau: Option<f64>,
        /// Witness bound in multiplier form, `witness <= b * window_sum`.
        #[arg(long = "b-mult", value_parser = positive)]
        b_mult: Option<f64>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, value_parser = burn_in)]
        burn_in: Option<f64>,
        /// Ignore `trace.meta.json` and estimate every constant.
        #[arg(long)]
        no_meta: bool,
    },
    /// Fit the convergence rate predicted by a KL exponent.
    Rate {
        #[arg(long)]
        trace: PathBuf,
        /// KL exponent in (0, 1).
        #[arg(long)]
        theta: f64,
        #[arg(long, value_parser = burn_in)]
        burn_in: Option<f64>,
        /// Comma-separated minimiser; defaults to the sidecar, then the final iterate.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        minimizer: Option<Vec<f64>>,
    },
}

fn number(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| e.to_string())
}

fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is outside the valid range (0,inf)"))
    }
}

fn unit_weight(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside the valid range (0,1]"))
    }
}

fn burn_in(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside the valid range [0,1)"))
    }
}

fn dispatch(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Run { config, out } => commands::run(&config, out),
        Command::Check {
            trace,
            k1,
            report,
            a_lower,
            tau,
            b_mult,
            window,
            burn_in,
            no_meta,
        } => commands::check(&CheckArgs {
            trace,
            k1,
            report,
            a_lower,
            tau,
            b_multiplier: b_mult,
            h3_window: window,
            burn_in_fraction: burn_in,
            no_meta,
        }),
        Command::Rate {
            trace,
            theta,
            burn_in,
            minimizer,
        } => commands::rate(&trace, theta, burn_in, minimizer),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(Env::new().filter_or("ZHD_LOG", "error")).init();
    // clap's own usage-error status is 2, which here means "check failed"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

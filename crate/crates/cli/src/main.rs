mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "stefan",
    version,
    about = "Radial free-boundary competition model in a time-periodic environment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML config file, or a preset name (bench_spread, bench_vanish).
    #[arg(long)]
    pub config: Option<String>,
    /// Output prefix; files are written as PREFIX.json, PREFIX_<name>.csv, ...
    /// Without it the JSON result is printed to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Final time in periods, overriding the config.
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Also write SVG plots (needs --out).
    #[arg(long)]
    pub svg: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdParam {
    Mu,
    /// Scale factor applied to the configured u0.
    Eps,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Principal periodic-parabolic eigenvalue on a ball.
    Eigen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long = "R")]
        radius: Option<f64>,
        #[arg(long = "N")]
        dim: Option<u32>,
        #[arg(long = "T")]
        period: Option<f64>,
        /// Coefficient spec, e.g. const:1 or sin:2,1.
        #[arg(long)]
        m: Option<String>,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 256)]
        steps: usize,
        /// Also compute the threshold radius h*.
        #[arg(long)]
        hstar: bool,
        /// Also compute the threshold diffusion d*.
        #[arg(long)]
        dstar: bool,
        /// Upper end of the h* and d* searches.
        #[arg(long, default_value_t = 100.0)]
        search_max: f64,
    },
    /// Positive periodic solution of V' = V(a - bV).
    PeriodicOde {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long = "T")]
        period: Option<f64>,
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// Periodic native density V(t, r) on a truncated ball.
    Entire {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        r_out: Option<f64>,
        #[arg(long)]
        n_r: Option<usize>,
    },
    /// Run the coupled free-boundary system.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Spreading/vanishing verdict for one config.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Bisect for the mu or eps threshold.
    Threshold {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        param: ThresholdParam,
        #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"], required = true)]
        bracket: Vec<f64>,
        /// Absolute stopping width (default 1% of the bracket).
        #[arg(long)]
        width: Option<f64>,
    },
    /// Spreading-speed bounds and the measured front speed.
    Speed {
        #[command(flatten)]
        common: Common,
        /// Fit window in periods.
        #[arg(long, default_value_t = 20)]
        window: usize,
    },
    /// Semi-wave speed K0(mu, a, b).
    Semiwave {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        d: Option<f64>,
        #[arg(long = "T")]
        period: Option<f64>,
        /// Half-line truncation length.
        #[arg(long)]
        length: Option<f64>,
    },
    /// Verdicts over a grid of one or two parameters.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// NAME:LOW:HIGH:COUNT or NAME:V1,V2,... with NAME in d1, h0, mu, eps.
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: Option<String>,
    },
    /// Hypothesis report for a config.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("domain exhausted: {0}")]
    Domain(String),
}

fn dispatch(cmd: Command) -> anyhow::Result<u8> {
    match cmd {
        Command::Eigen {
            common,
            d,
            radius,
            dim,
            period,
            m,
            grid,
            steps,
            hstar,
            dstar,
            search_max,
        } => commands::eigen(
            &common,
            commands::EigenArgs {
                d,
                radius,
                dim,
                period,
                m,
                grid,
                steps,
                hstar,
                dstar,
                search_max,
            },
        ),
        Command::PeriodicOde {
            common,
            a,
            b,
            period,
            samples,
        } => commands::periodic_ode(&common, a, b, period, samples),
        Command::Entire { common, r_out, n_r } => commands::entire(&common, r_out, n_r),
        Command::Simulate { common } => commands::simulate(&common),
        Command::Classify { common } => commands::classify(&common),
        Command::Threshold {
            common,
            param,
            bracket,
            width,
        } => commands::threshold(&common, param, (bracket[0], bracket[1]), width),
        Command::Speed { common, window } => commands::speed(&common, window),
        Command::Semiwave {
            common,
            mu,
            a,
            b,
            d,
            period,
            length,
        } => commands::semiwave(&common, mu, a, b, d, period, length),
        Command::Sweep { common, x, y } => commands::sweep(&common, &x, y.as_deref()),
        Command::Check { common } => commands::check(&common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<Failure>() {
                Some(Failure::Usage(_)) => {
                    eprintln!("run `stefan --help` for the synopsis");
                    1
                }
                Some(Failure::Domain(_)) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

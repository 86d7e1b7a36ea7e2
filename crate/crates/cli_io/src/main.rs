use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cli_io::commands::{self, AisArgs, ClassifyArgs, FitArgs, SimulateArgs, AIS_NOISE_POINTS};
use cli_io::persist::{parse_family, parse_variant};
use cli_io::CliError;
use sim_harness::{Dependence, Scenario};

#[derive(Parser)]
#[command(name = "salcwm", version, about = "SAL and contaminated SAL cluster-weighted models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model for each G and keep the lowest BIC.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        responses: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        covariates: Vec<String>,
        #[arg(long = "g", value_delimiter = ',', default_value = "1,2,3")]
        g_range: Vec<usize>,
        #[arg(long, default_value = "csal")]
        variant: String,
        #[arg(long, default_value = "cwm")]
        family: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        n_starts: usize,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated fits of the four models on a simulation scenario.
    Simulate {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value = "ind")]
        dependence: String,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify the rows of a CSV with a saved model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        responses: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        covariates: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Clean and noise-injected studies of the AIS data.
    AisDemo {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        with_noise: bool,
        #[arg(long, default_value_t = AIS_NOISE_POINTS)]
        noise_points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        n_starts: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Fit {
            input,
            responses,
            covariates,
            g_range,
            variant,
            family,
            seed,
            n_starts,
            epsilon,
            standardize,
            out,
        } => {
            let variant = parse_variant(&variant).ok_or_else(|| usage(format!("unknown variant '{variant}'")))?;
            let family = parse_family(&family).ok_or_else(|| usage(format!("unknown family '{family}'")))?;
            if n_starts == 0 || !(epsilon > 0.0) {
                return Err(usage("--n-starts and --epsilon must be positive".into()));
            }
            commands::fit_command(&FitArgs {
                input,
                responses,
                covariates,
                g_range,
                variant,
                family,
                seed,
                n_starts,
                epsilon,
                standardize,
                out,
            })
        }
        Command::Simulate { scenario, dependence, n, reps, seed, out } => {
            let scenario = Scenario::parse(&scenario).ok_or_else(|| usage(format!("unknown scenario '{scenario}'")))?;
            let dependence =
                Dependence::parse(&dependence).ok_or_else(|| usage(format!("unknown dependence '{dependence}'")))?;
            commands::simulate_command(&SimulateArgs { scenario, dependence, n, reps, seed, out })
        }
        Command::Classify { model, input, responses, covariates, out } => {
            commands::classify_command(&ClassifyArgs { model, input, responses, covariates, out })
        }
        Command::AisDemo { input, with_noise, noise_points, seed, n_starts, out } => {
            if n_starts == 0 {
                return Err(usage("--n-starts must be positive".into()));
            }
            commands::ais_demo_command(&AisArgs { input, with_noise, noise_points, seed, n_starts, out })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("salcwm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

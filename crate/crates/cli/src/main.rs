use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hybridloc::commands::{self, GlobalOptions};
use hybridloc::scenario::FovModeName;
use hybridloc::CliError;
use hybridloc_core::fusion::LocalizationMode;

#[derive(Debug, Parser)]
#[command(
    name = "hybridloc",
    version,
    about = "BLE + proximity-sensor hybrid indoor localization"
)]
struct Cli {
    /// Override the scenario seed (the master seed for `montecarlo`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the scenario's detection-cone model.
    #[arg(long, global = true, value_enum)]
    fov_mode: Option<FovModeName>,
    /// Experimental: reset the filter to the fused position after each tick.
    #[arg(long, global = true)]
    fusion_feedback: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Ble,
    Hybrid,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a measurement log and ground truth from a scenario.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Run the tracker over a measurement log.
    Localize {
        scenario: PathBuf,
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "hybrid")]
        mode: Mode,
    },
    /// Compare BLE-only and hybrid estimates against the reference trajectory.
    Evaluate {
        #[arg(long)]
        ble: PathBuf,
        #[arg(long)]
        hybrid: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// JSON report; CDF tables are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the ranging standard-deviation cubic from calibration data.
    FitSensor {
        calibration: PathBuf,
        /// Optional `distance_m,bias_m` table copied into the model.
        #[arg(long)]
        bias: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat simulate/localize/evaluate over derived seeds.
    Montecarlo {
        scenario: PathBuf,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the built-in default scenario.
    Init { out: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let globals = GlobalOptions {
        seed: cli.seed,
        fov_mode: cli.fov_mode,
        fusion_feedback: cli.fusion_feedback,
    };
    match cli.command {
        Command::Simulate {
            scenario,
            log,
            truth,
        } => {
            let s = commands::cmd_simulate(&scenario, &log, &truth, &globals)?;
            println!(
                "{} ticks, {} RSS rows, {} RANGE rows",
                s.ticks, s.rss_rows, s.range_rows
            );
        }
        Command::Localize {
            scenario,
            log,
            out,
            mode,
        } => {
            let mode = match mode {
                Mode::Ble => LocalizationMode::BleOnly,
                Mode::Hybrid => LocalizationMode::Hybrid,
            };
            let n = commands::cmd_localize(&scenario, &log, &out, mode, &globals)?;
            println!("{n} estimates written to {}", out.display());
        }
        Command::Evaluate {
            ble,
            hybrid,
            scenario,
            out,
        } => {
            let r = commands::cmd_evaluate(&ble, &hybrid, &scenario, &out, &globals)?;
            println!(
                "median error: BLE {:.3} m, hybrid {:.3} m, ratio {:.3}",
                r.ble.median, r.hybrid.median, r.median_ratio
            );
        }
        Command::FitSensor {
            calibration,
            bias,
            out,
        } => {
            let fit = commands::cmd_fit_sensor(&calibration, bias.as_deref(), &out)?;
            println!("coefficients {:?}", fit.coeffs);
            println!("residual RMS {:e} m", fit.residual_rms);
        }
        Command::Montecarlo {
            scenario,
            runs,
            out,
        } => {
            let r = commands::cmd_montecarlo(&scenario, runs, &out, &globals)?;
            println!(
                "hybrid better in {}/{} runs; pooled median BLE {:.3} m, hybrid {:.3} m, ratio {:.3}",
                r.hybrid_wins, r.n_runs, r.pooled.ble_median, r.pooled.hybrid_median, r.pooled.median_ratio
            );
        }
        Command::Init { out } => commands::cmd_init(&out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mdams::evolve::Variant;
use mdams::run::{compare_evolvers, error_exit_code, exit_code, run, Status};
use mdams::scenario::{load_scenario, Mode};

#[derive(Parser)]
#[command(
    name = "mdams",
    version,
    about = "Mobile dual-arm manipulator planning toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a whole-body pose for the scenario's dual-arm task.
    PoseOpt(Common),
    /// Plan a base path offline and time-parameterize it.
    Plan(Common),
    /// Drive the base through the scenario with moving obstacles.
    SimulateOnline(Common),
    /// Design palm via-points and the whole-body pose at each of them.
    ViaPose(Common),
    /// Run the baseline and improved evolvers on identical seeds.
    CompareEvolvers {
        #[command(flatten)]
        common: Common,
        /// Run the improved variant twice instead of against the baseline.
        #[arg(long)]
        identical: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Seed to run; all scenario seeds when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Trajectory sampling rate (Hz).
    #[arg(long = "samples-hz")]
    samples_hz: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    ExitCode::from(execute(cli.command) as u8)
}

fn execute(command: Command) -> i32 {
    let (mode, common, identical) = match command {
        Command::PoseOpt(c) => (Mode::PoseOpt, c, false),
        Command::Plan(c) => (Mode::Plan, c, false),
        Command::SimulateOnline(c) => (Mode::SimulateOnline, c, false),
        Command::ViaPose(c) => (Mode::ViaPose, c, false),
        Command::CompareEvolvers { common, identical } => {
            (Mode::CompareEvolvers, common, identical)
        }
    };
    let scenario = match load_scenario(&common.scenario) {
        Ok(s) => s,
        Err(e) => {
            log::error!("{e}");
            return error_exit_code(&e);
        }
    };
    for d in &scenario.defaults {
        log::debug!("default {d}");
    }
    let seeds = common
        .seed
        .map_or_else(|| scenario.seeds.clone(), |s| vec![s]);

    if mode == Mode::CompareEvolvers {
        let variants = if identical {
            (Variant::Improved, Variant::Improved)
        } else {
            (Variant::Baseline, Variant::Improved)
        };
        return match compare_evolvers(&scenario, &seeds, &common.out, variants) {
            Ok(c) => {
                for (k, v) in &c.summary {
                    println!("{k} = {v}");
                }
                0
            }
            Err(e) => {
                log::error!("{e}");
                error_exit_code(&e)
            }
        };
    }

    let mut worst = 0;
    for seed in seeds {
        let dir = common.out.join(format!("seed_{seed}"));
        let result = run(&scenario, mode, seed, &dir, common.samples_hz);
        match &result {
            Ok(r) => {
                let status = if r.status == Status::Ok {
                    "ok"
                } else {
                    "infeasible"
                };
                println!(
                    "seed {seed}: {status} ({:.2} s) -> {}",
                    r.wall_time_s,
                    dir.display()
                );
                for (k, v) in &r.metrics {
                    println!("  {k} = {v}");
                }
            }
            Err(e) => log::error!("seed {seed}: {e}"),
        }
        worst = worst.max(exit_code(&result));
    }
    worst
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spatial_cge::calibration::{self, base_year_flows, CalibrationError};
use spatial_cge::dynamics::{self, StepError};
use spatial_cge::economy::Economy;
use spatial_cge::equilibrium::{self, arbitrage_residuals, SolveError, SolveOptions};
use spatial_cge::io::{self, ExportFormat, FileError};
use spatial_cge::public::PolicyScenario;

const VALIDATION_FAILURE: u8 = 2;
const NON_CONVERGENCE: u8 = 3;
const IO_FAILURE: u8 = 4;

#[derive(Parser)]
#[command(name = "spatial-cge", version, about = "Spatial general-equilibrium engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Log solver progress and applied defaults.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    economy: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
}

impl Common {
    fn options(&self) -> SolveOptions {
        let d = SolveOptions::default();
        SolveOptions {
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            damping: self.damping.unwrap_or(d.damping),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check an economy document (and a scenario against it).
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Build the benchmark from the base-year flows, or the stationary
    /// benchmark when the document has none.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Directory for the calibrated economy document.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a scenario and export the result tables.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Defaults to the scenario horizon.
        #[arg(long)]
        periods: Option<usize>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: ExportFormat,
    },
    /// Solve one short-run period and print diagnostics.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    File(FileError),
    Calibration(CalibrationError),
    Solve(SolveError),
    Simulation(dynamics::SimulationError),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::File(FileError::Io { .. }) => IO_FAILURE,
            Failure::File(_) => VALIDATION_FAILURE,
            Failure::Calibration(CalibrationError::InfeasibleCalibration { .. }) => VALIDATION_FAILURE,
            Failure::Calibration(CalibrationError::Solve(e)) | Failure::Solve(e) => solve_code(e),
            Failure::Calibration(CalibrationError::NoFixedPoint { .. }) => NON_CONVERGENCE,
            Failure::Simulation(e) => match &e.source {
                StepError::Policy(_) => VALIDATION_FAILURE,
                StepError::Solve(e) => solve_code(e),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::File(e) => e.to_string(),
            Failure::Calibration(e) => e.to_string(),
            Failure::Solve(e) => e.to_string(),
            Failure::Simulation(e) => e.to_string(),
        }
    }
}

fn solve_code(e: &SolveError) -> u8 {
    match e {
        SolveError::Invalid(_) => VALIDATION_FAILURE,
        _ => NON_CONVERGENCE,
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure::File(e)
    }
}

impl From<CalibrationError> for Failure {
    fn from(e: CalibrationError) -> Self {
        Failure::Calibration(e)
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        Failure::Solve(e)
    }
}

fn validate(common: &Common, scenario: Option<&Path>) -> Result<(), Failure> {
    let file = io::load_economy(&common.economy)?;
    println!("{}: valid", common.economy.display());
    if let Some(path) = scenario {
        let s = io::load_scenario(path, &file.economy)?;
        println!("{}: valid ({} instruments, horizon {})", path.display(), s.instruments.len(), s.horizon);
    }
    Ok(())
}

fn calibrate(common: &Common, out: Option<&Path>) -> Result<(), Failure> {
    let file = io::load_economy(&common.economy)?;
    let options = common.options();
    let (economy, flows) = match &file.flows {
        Some(flows) => {
            let c = calibration::calibrate(&file.economy, flows, &options)?;
            println!("{}", c.report);
            (c.economy, flows.clone())
        }
        None => {
            let (economy, solution) = calibration::stationary_benchmark(&file.economy, &options)?;
            println!("stationary benchmark: gdp {:e}, walras {:e}", solution.gdp, solution.walras);
            println!("saving rate {}", economy.params.saving_rate);
            println!("household transfers {:?}", economy.fiscal.household_transfers);
            let flows = base_year_flows(&economy, &solution).map_err(|e| Failure::Solve(e.into()))?;
            (economy, flows)
        }
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| FileError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let path = dir.join("calibrated.toml");
        io::save_economy(&path, &economy, Some(&flows))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(
    common: &Common,
    scenario: Option<&Path>,
    periods: Option<usize>,
    out: &Path,
    format: ExportFormat,
) -> Result<(), Failure> {
    let file = io::load_economy(&common.economy)?;
    let economy: Economy = file.economy;
    let scenario = match scenario {
        Some(path) => io::load_scenario(path, &economy)?,
        None => PolicyScenario {
            name: "baseline".into(),
            horizon: periods.unwrap_or(10),
            instruments: Vec::new(),
        },
    };
    let periods = periods.unwrap_or(scenario.horizon);
    let trajectory = dynamics::simulate(&economy, &scenario, periods, &common.options()).map_err(Failure::Simulation)?;
    let written = io::export_results(&economy, &trajectory, out, format)?;
    println!("{} periods of scenario '{}'", trajectory.len(), scenario.name);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn check(common: &Common) -> Result<(), Failure> {
    let file = io::load_economy(&common.economy)?;
    let e = &file.economy;
    let options = common.options();
    let long_run = equilibrium::solve_mode(e, equilibrium::Mode::LongRun, None, &options).ok();
    let guess = long_run.as_ref().map(|r| &r.solution);
    let report = equilibrium::solve_mode(e, equilibrium::Mode::ShortRun, guess, &options)?;
    let s = &report.solution;
    let arb = arbitrage_residuals(e, s);
    println!("iterations        {}", s.iterations);
    println!("residual norm     {:e}", s.residual_norm);
    println!("gdp               {:e}", s.gdp);
    println!("walras / gdp      {:e}", s.walras / s.gdp);
    println!("capital arbitrage {:e}", arb.capital);
    println!("bond arbitrage    {:e}", arb.bonds);
    for (m, d) in s.deficit.iter().enumerate() {
        println!("deficit[{m}]        {d:e}");
    }
    for (m, ca) in s.current_account.iter().enumerate() {
        println!("current account[{m}] {ca:e}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = match &cli.command {
        Command::Validate { common, scenario } => validate(common, scenario.as_deref()),
        Command::Calibrate { common, out } => calibrate(common, out.as_deref()),
        Command::Run {
            common,
            scenario,
            periods,
            out,
            format,
        } => run(common, scenario.as_deref(), *periods, out, *format),
        Command::Check { common } => check(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

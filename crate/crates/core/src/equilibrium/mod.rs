//! Within-period equilibrium: the square system, its solver and diagnostics.

mod diagnostics;
pub mod newton;
mod solution;
pub mod system;

pub use diagnostics::{
    arbitrage_residuals, design_market_residual, financial_closure_residual, gdp, labour_market_residual,
    total_demand, trade_balance, walras_residual, ArbitrageResiduals, TradeBalance,
};
pub use newton::{SolveOptions, StepKind, TraceEntry};
pub use solution::{DemandBreakdown, EquilibriumSolution, Mode};
pub use system::{Block, Layout, System};

use thiserror::Error;

use crate::economy::{validate_economy, Economy, ValidationReport};
use crate::error::ModelError;
use newton::NewtonFailure;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("economy failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("no convergence after {iterations} iterations (best residual {best_residual:e})")]
    NonConvergence { best_residual: f64, iterations: usize },
    #[error("singular Jacobian at the {market}")]
    SingularJacobian { market: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A solved period together with the iteration log.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: EquilibriumSolution,
    pub trace: Vec<TraceEntry>,
}

/// Scale of each residual's own derivative, used by the fixed-point sweeps.
fn own_gain(system: &System<'_>) -> Vec<f64> {
    let lay = system.layout;
    let eps = system.economy.params.rd_supply_elasticity;
    let mut g = vec![1.0; lay.len()];
    for m in 0..lay.countries {
        g[lay.country(Block::DesignPrice, m)] = eps / (1.0 - eps);
    }
    g
}

/// Lowers design prices and raises wages in turn until labour demand fits
/// inside the endowment.
fn admissible_start(system: &System<'_>, mut x: Vec<f64>, reprice: bool) -> Result<Vec<f64>, ModelError> {
    let lay = system.layout;
    let mut last = None;
    for k in 0..40 {
        if reprice {
            x = system.pricing_start(x);
        }
        match system.residuals(&x) {
            Ok(_) => return Ok(x),
            Err(e) => last = Some(e),
        }
        if k % 2 == 0 {
            for m in 0..lay.countries {
                x[lay.country(Block::DesignPrice, m)] -= 0.5;
            }
        } else {
            for r in 0..lay.regions {
                for e in 0..crate::economy::SKILLS {
                    x[lay.wage(r, e)] += 0.25;
                }
            }
        }
    }
    Err(last.unwrap_or_else(|| crate::error::domain("no admissible start point")))
}

/// Damped block fixed-point sweeps `x <- x - w F(x) / gain` that bring a
/// crude start point into the region where Newton steps are reliable.
fn warm_up(system: &System<'_>, mut x: Vec<f64>, sweeps: usize, target: f64) -> Vec<f64> {
    let gain = own_gain(system);
    let Ok(mut fx) = system.residuals(&x) else { return x };
    let norm = |v: &[f64]| v.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let mut w = 0.7;
    for _ in 0..sweeps {
        if norm(&fx) < target {
            break;
        }
        let mut accepted = false;
        while w > 1e-3 {
            let xn: Vec<f64> = x
                .iter()
                .zip(&fx)
                .zip(&gain)
                .map(|((a, f), g)| a - w * (f / g).clamp(-2.0, 2.0))
                .collect();
            match system.residuals(&xn) {
                Ok(fnew) if norm(&fnew) < 1.5 * norm(&fx) => {
                    x = xn;
                    fx = fnew;
                    accepted = true;
                    break;
                }
                _ => w *= 0.5,
            }
        }
        if !accepted {
            break;
        }
        w = (w * 1.5).min(0.7);
    }
    x
}

fn run(system: &System<'_>, x0: Vec<f64>, options: &SolveOptions, sweeps: usize) -> Result<SolveReport, SolveError> {
    let x0 = admissible_start(system, x0, sweeps > 0)?;
    let x0 = warm_up(system, x0, sweeps, 0.05);
    match newton::solve(|x| system.residuals(x), &x0, options) {
        Ok(out) => {
            let mut solution = system.evaluate(&out.x)?;
            solution.iterations = out.iterations;
            let floor = system.economy.params.phi_floor;
            for (r, phi) in solution.innovation_probability.iter().enumerate() {
                if *phi <= floor {
                    log::warn!("innovation probability of region {r} held at its floor {floor:e}");
                }
            }
            Ok(SolveReport {
                solution,
                trace: out.trace,
            })
        }
        Err(NewtonFailure::Start(e)) => Err(SolveError::Model(e)),
        Err(NewtonFailure::Singular { column, .. }) => Err(SolveError::SingularJacobian {
            market: system.layout.label(column),
        }),
        Err(NewtonFailure::NonConvergence {
            best_residual,
            iterations,
            ..
        }) => Err(SolveError::NonConvergence {
            best_residual,
            iterations,
        }),
    }
}

/// Solves one period in `mode`, starting from `guess` when given and
/// falling back to the stock-based start point.
pub fn solve_mode(
    economy: &Economy,
    mode: Mode,
    guess: Option<&EquilibriumSolution>,
    options: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    let report = validate_economy(economy);
    if !report.passed() {
        return Err(SolveError::Invalid(report));
    }
    let system = System::new(economy, mode);
    let fresh = || {
        let mut first = None;
        let starts = system
            .history_guess()
            .into_iter()
            .chain([1.0, 2.5, 0.0, 4.0].map(|w| system.guess_with_wage(w)));
        for x in starts {
            match run(&system, x, options, 300) {
                Ok(r) => return Ok(r),
                Err(e) => {
                    first.get_or_insert(e);
                }
            }
        }
        Err(first.expect("at least one start point"))
    };
    match guess {
        Some(g) if g.prices.len() == system.layout.sectors && g.wages.len() == system.layout.regions => {
            let mut x = system.layout.pack(g);
            if mode == Mode::ShortRun {
                x.truncate(system.layout.len());
            }
            match run(&system, x, options, 0) {
                Ok(r) => Ok(r),
                Err(first) => fresh().map_err(|_| first),
            }
        }
        _ => fresh(),
    }
}

/// Solves one period in `mode` from `guess` only, with no fallback start.
pub fn solve_from(
    economy: &Economy,
    mode: Mode,
    guess: &EquilibriumSolution,
    options: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    let report = validate_economy(economy);
    if !report.passed() {
        return Err(SolveError::Invalid(report));
    }
    let system = System::new(economy, mode);
    let mut x = system.layout.pack(guess);
    x.truncate(system.layout.len());
    run(&system, x, options, 0)
}

/// Observed prices and quantities from which a short-run solve can start.
#[derive(Debug, Clone, PartialEq)]
pub struct StartPoint<'a> {
    pub prices: &'a [Vec<f64>],
    pub output: &'a [Vec<f64>],
    pub wages: &'a [[f64; crate::economy::SKILLS]],
    pub durable_output: &'a [f64],
    pub design_prices: &'a [f64],
}

/// Short-run solve from an observed point, with no fallback start.
pub fn solve_short_run_at(
    economy: &Economy,
    start: &StartPoint<'_>,
    options: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    let report = validate_economy(economy);
    if !report.passed() {
        return Err(SolveError::Invalid(report));
    }
    let system = System::new(economy, Mode::ShortRun);
    let lay = system.layout;
    let mut x = vec![0.0; lay.len()];
    for s in 0..lay.sectors {
        for r in 0..lay.regions {
            x[lay.cell(Block::Price, s, r)] = start.prices[s][r].ln();
            x[lay.cell(Block::Output, s, r)] = start.output[s][r].ln();
        }
    }
    for r in 0..lay.regions {
        for e in 0..crate::economy::SKILLS {
            x[lay.wage(r, e)] = start.wages[r][e].ln();
        }
        x[lay.region(Block::Durable, r)] = start.durable_output[r].ln();
    }
    for m in 0..lay.countries {
        x[lay.country(Block::DesignPrice, m)] = start.design_prices[m].ln();
    }
    run(&system, x, options, 0)
}

/// Short-run equilibrium of one period.
pub fn solve_period(
    economy: &Economy,
    guess: Option<&EquilibriumSolution>,
    options: &SolveOptions,
) -> Result<EquilibriumSolution, SolveError> {
    solve_mode(economy, Mode::ShortRun, guess, options).map(|r| r.solution)
}

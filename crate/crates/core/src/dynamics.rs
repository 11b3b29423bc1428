//! Period-to-period laws of motion and the multi-period driver.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economy::{Economy, History, StockState, SKILLS};
use crate::equilibrium::{self, EquilibriumSolution, Mode, SolveError, SolveOptions};
use crate::error::ModelError;
use crate::household;
use crate::public::{self, PolicyError, PolicyScenario};

/// Zero-profit output levels at the solved prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroProfitTargets {
    /// Output per final-goods firm, `[sector][region]`.
    pub output: Vec<Vec<f64>>,
    /// Output per durable-goods firm, per region.
    pub durable: Vec<f64>,
}

pub fn zero_profit_targets(solution: &EquilibriumSolution) -> Result<ZeroProfitTargets, ModelError> {
    for (s, row) in solution.output_target.iter().enumerate() {
        for (r, x) in row.iter().enumerate() {
            if !(*x > 0.0) {
                return Err(ModelError::NonViable { sector: s, region: r });
            }
        }
    }
    for (r, z) in solution.durable_target.iter().enumerate() {
        if !(*z > 0.0) {
            return Err(ModelError::NonViableDurable { region: r });
        }
    }
    Ok(ZeroProfitTargets {
        output: solution.output_target.clone(),
        durable: solution.durable_target.clone(),
    })
}

/// Partial adjustment of a firm count towards its target.
pub fn firm_entry_step(count: f64, target: f64, speed: f64) -> f64 {
    (count + speed * (target - count)).max(0.0)
}

/// Firm counts at which pure profits vanish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryTargets {
    pub firms: Vec<Vec<f64>>,
    pub durable_firms: Vec<f64>,
    /// True when the counts come from a long-run solve, false when they
    /// were scaled from the short-run zero-profit outputs.
    pub long_run: bool,
}

/// Counts that would serve the solved demand at zero-profit scale. Cells
/// whose subsidies cover the fixed cost get a zero target.
pub fn scaled_targets(solution: &EquilibriumSolution) -> EntryTargets {
    let scale = |n: f64, x: f64, target: f64| if target > 0.0 { n * x / target } else { 0.0 };
    let firms = solution
        .firms
        .iter()
        .zip(&solution.output)
        .zip(&solution.output_target)
        .map(|((n, x), xs)| n.iter().zip(x).zip(xs).map(|((n, x), xs)| scale(*n, *x, *xs)).collect())
        .collect();
    let durable_firms = solution
        .durable_firms
        .iter()
        .zip(&solution.durable_output)
        .zip(&solution.durable_target)
        .map(|((a, z), zs)| scale(*a, *z, *zs))
        .collect();
    EntryTargets {
        firms,
        durable_firms,
        long_run: false,
    }
}

/// A stock clipped at zero by [`advance_stocks`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockEvent {
    pub stock: String,
    pub value: f64,
}

fn guard(events: &mut Vec<StockEvent>, name: impl FnOnce() -> String, v: &mut f64) {
    if *v < 0.0 {
        events.push(StockEvent { stock: name(), value: *v });
        *v = 0.0;
    }
}

/// Next period's stocks from the solved period. All laws read the same
/// solution and the same start-of-period stocks.
pub fn advance_stocks(
    economy: &Economy,
    solution: &EquilibriumSolution,
    targets: &EntryTargets,
) -> (StockState, Vec<StockEvent>) {
    let t = &economy.topology;
    let p = &economy.params;
    let f = &economy.fiscal;
    let st = &economy.stocks;
    let (dr, ds, nm) = (t.domestic_regions(), t.domestic_sectors(), t.countries);
    let delta = p.capital_depreciation;
    let lambda = p.entry_speed;
    let mut next = st.clone();
    let mut events = Vec::new();

    for s in 0..ds {
        for r in 0..dr {
            next.firms[s][r] = firm_entry_step(st.firms[s][r], targets.firms[s][r], lambda);
        }
    }
    for r in 0..dr {
        next.durable_firms[r] = firm_entry_step(st.durable_firms[r], targets.durable_firms[r], lambda);
    }
    for r in 0..dr {
        let installed = solution.durable_firms[r] * solution.durable_output[r];
        next.capital[r] = if next.durable_firms[r] > 0.0 {
            installed / next.durable_firms[r]
        } else {
            0.0
        };
        guard(&mut events, || format!("capital[{r}]"), &mut next.capital[r]);
        next.public_capital[r] =
            public::public_capital_step(st.public_capital[r], solution.public_investment[r], delta);
        guard(&mut events, || format!("public_capital[{r}]"), &mut next.public_capital[r]);
        for e in 0..SKILLS {
            next.human_capital[r][e] = household::human_capital_step(
                st.human_capital[r][e],
                f.education[r][e],
                p.human_capital_depreciation,
            );
            guard(&mut events, || format!("human_capital[{r}][{e}]"), &mut next.human_capital[r][e]);
        }
    }
    next.designs = solution.new_designs.clone();

    let shares: Vec<f64> = if solution.total_savings != 0.0 {
        solution.savings.iter().map(|s| s / solution.total_savings).collect()
    } else {
        vec![0.0; dr]
    };
    for r in 0..dr {
        let a = solution.durable_firms[r];
        let carried = (1.0 - delta) * a * st.capital[r];
        let issued = a * solution.investment[r];
        let total = a * solution.durable_output[r];
        for q in 0..dr {
            let v = &mut next.equity_shares[q][r];
            *v = if total > 0.0 {
                (carried * st.equity_shares[q][r] + shares[q] * issued) / total
            } else {
                st.equity_shares[q][r]
            };
            guard(&mut events, || format!("equity_shares[{q}][{r}]"), v);
        }
    }
    let current_account: f64 = solution.current_account.iter().sum();
    for q in 0..dr {
        for m in 0..nm {
            next.gov_bonds[q][m] += shares[q] * solution.deficit[m];
        }
        next.foreign_bonds[q] += shares[q] * current_account;
    }
    for m in 0..nm {
        next.gov_debt[m] += solution.deficit[m];
    }
    next.history = Some(History {
        wages: solution.wages.clone(),
        consumer_prices: solution.consumer_prices.clone(),
    });
    for ev in &events {
        log::warn!("stock {} clipped at zero from {}", ev.stock, ev.value);
    }
    (next, events)
}

/// One simulated period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: usize,
    /// Start-of-period stocks, after the policy of the period.
    pub stocks: StockState,
    pub solution: EquilibriumSolution,
    pub targets: EntryTargets,
    pub events: Vec<StockEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: StockState,
    pub periods: Vec<PeriodRecord>,
    /// Stocks after the last period.
    pub terminal: StockState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("period {period}: {source}")]
pub struct SimulationError {
    pub period: usize,
    pub source: StepError,
    /// Periods solved before the failure.
    pub partial: Trajectory,
}

/// Long-run counts for the economy of one period, scaled from the short run
/// when the long-run solve is unavailable.
fn entry_targets(solution: &EquilibriumSolution, lr: Option<&EquilibriumSolution>) -> EntryTargets {
    match lr {
        Some(lr) => EntryTargets {
            firms: lr.firms.clone(),
            durable_firms: lr.durable_firms.clone(),
            long_run: true,
        },
        None => scaled_targets(solution),
    }
}

fn long_run(
    economy: &Economy,
    guess: Option<&EquilibriumSolution>,
    options: &SolveOptions,
) -> Option<EquilibriumSolution> {
    let rep = match guess {
        Some(g) => equilibrium::solve_from(economy, Mode::LongRun, g, options),
        None => equilibrium::solve_mode(economy, Mode::LongRun, None, options),
    };
    match rep {
        Ok(r) => Some(r.solution),
        Err(err) => {
            log::info!("long-run targets unavailable ({err}); scaling from the short run");
            None
        }
    }
}

trait Blend {
    /// Moves `self` a fraction `w` of the way towards `to`.
    fn blend(&mut self, to: &Self, w: f64);
}

impl Blend for f64 {
    fn blend(&mut self, to: &Self, w: f64) {
        *self += w * (to - *self);
    }
}

impl Blend for [f64; SKILLS] {
    fn blend(&mut self, to: &Self, w: f64) {
        self.iter_mut().zip(to).for_each(|(a, b)| a.blend(b, w));
    }
}

impl<T: Blend> Blend for Vec<T> {
    fn blend(&mut self, to: &Self, w: f64) {
        self.iter_mut().zip(to).for_each(|(a, b)| a.blend(b, w));
    }
}

/// The economy a fraction `w` of the way from `from` to `to`: stocks,
/// fiscal inputs and trade costs interpolated, parameters taken from `to`.
fn blend_economy(from: &Economy, to: &Economy, w: f64) -> Economy {
    let mut e = from.clone();
    e.params = to.params.clone();
    e.topology.trade_costs.blend(&to.topology.trade_costs, w);
    let (f, g) = (&mut e.fiscal, &to.fiscal);
    f.gov_spending.blend(&g.gov_spending, w);
    f.investment_share.blend(&g.investment_share, w);
    f.household_transfers.blend(&g.household_transfers, w);
    f.eu_transfers.blend(&g.eu_transfers, w);
    f.final_subsidy_national.blend(&g.final_subsidy_national, w);
    f.final_subsidy_eu.blend(&g.final_subsidy_eu, w);
    f.durable_subsidy_national.blend(&g.durable_subsidy_national, w);
    f.durable_subsidy_eu.blend(&g.durable_subsidy_eu, w);
    f.rd_subsidy_national.blend(&g.rd_subsidy_national, w);
    f.rd_subsidy_eu.blend(&g.rd_subsidy_eu, w);
    f.education.blend(&g.education, w);
    let (s, t) = (&mut e.stocks, &to.stocks);
    s.capital.blend(&t.capital, w);
    s.public_capital.blend(&t.public_capital, w);
    s.human_capital.blend(&t.human_capital, w);
    s.firms.blend(&t.firms, w);
    s.durable_firms.blend(&t.durable_firms, w);
    s.designs.blend(&t.designs, w);
    s.equity_shares.blend(&t.equity_shares, w);
    s.gov_bonds.blend(&t.gov_bonds, w);
    s.foreign_bonds.blend(&t.foreign_bonds, w);
    s.gov_debt.blend(&t.gov_debt, w);
    match (&mut s.history, &t.history) {
        (Some(h), Some(k)) => {
            h.wages.blend(&k.wages, w);
            h.consumer_prices.blend(&k.consumer_prices, w);
        }
        (h, k) => *h = k.clone(),
    }
    e
}

/// Short-run solve of `economy`. When the direct solve fails, walks from
/// `previous`, an economy whose solution is known, towards `economy` in
/// adaptive steps, each solve starting from the last one.
pub fn solve_with_continuation(
    economy: &Economy,
    guess: Option<&EquilibriumSolution>,
    previous: Option<(&Economy, &EquilibriumSolution)>,
    options: &SolveOptions,
) -> Result<EquilibriumSolution, SolveError> {
    let direct = equilibrium::solve_period(economy, guess, options);
    let (Err(err), Some((from, solved))) = (&direct, previous) else {
        return direct;
    };
    log::info!("direct solve failed ({err}); continuing from the previous period");
    let mut at: f64 = 0.0;
    let mut step = 0.25;
    let mut current = solved.clone();
    while at < 1.0 {
        if step < 1.0 / 256.0 {
            return direct;
        }
        let w = (at + step).min(1.0);
        let e = if w == 1.0 {
            economy.clone()
        } else {
            blend_economy(from, economy, w)
        };
        match equilibrium::solve_from(&e, Mode::ShortRun, &current, options) {
            Ok(rep) => {
                current = rep.solution;
                at = w;
                step *= 1.5;
            }
            Err(_) => step *= 0.5,
        }
    }
    Ok(current)
}

/// Runs periods `1..=periods` of `scenario` from the stocks of `economy`.
pub fn simulate(
    economy: &Economy,
    scenario: &PolicyScenario,
    periods: usize,
    options: &SolveOptions,
) -> Result<Trajectory, SimulationError> {
    let mut trajectory = Trajectory {
        initial: economy.stocks.clone(),
        periods: Vec::with_capacity(periods),
        terminal: economy.stocks.clone(),
    };
    let mut state = economy.clone();
    let mut guess: Option<EquilibriumSolution> = None;
    let mut lr_guess: Option<EquilibriumSolution> = None;
    let mut solved: Option<Economy> = None;
    for period in 1..=periods {
        let step = (|| -> Result<_, StepError> {
            let e = public::apply_policy(scenario, period, &state)?;
            let lr = long_run(&e, lr_guess.as_ref(), options);
            let start = guess.as_ref().or(lr.as_ref());
            let previous = solved.as_ref().zip(guess.as_ref());
            let solution = solve_with_continuation(&e, start, previous, options)?;
            let targets = entry_targets(&solution, lr.as_ref());
            Ok((e, solution, targets, lr))
        })();
        let (e, solution, targets, lr) = match step {
            Ok(v) => v,
            Err(source) => {
                return Err(SimulationError {
                    period,
                    source,
                    partial: trajectory,
                })
            }
        };
        let (next, events) = advance_stocks(&e, &solution, &targets);
        log::debug!(
            "period {period}: residual {:e}, walras {:e}, {} iterations",
            solution.residual_norm,
            solution.walras,
            solution.iterations
        );
        trajectory.periods.push(PeriodRecord {
            period,
            stocks: e.stocks.clone(),
            solution: solution.clone(),
            targets,
            events,
        });
        trajectory.terminal = next.clone();
        state.stocks = next;
        solved = Some(e);
        guess = Some(solution);
        if lr.is_some() {
            lr_guess = lr;
        }
    }
    Ok(trajectory)
}

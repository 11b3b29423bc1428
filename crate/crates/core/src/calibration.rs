//! Benchmark construction: the stationary state of an economy, base-year
//! flow tables and the recovery of calibrated parameters from them.

use std::cell::RefCell;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ces;
use crate::economy::{Economy, History, SKILLS};
use crate::equilibrium::newton::{self, NewtonFailure};
use crate::equilibrium::{self, EquilibriumSolution, Mode, SolveError, SolveOptions, StartPoint};
use crate::error::{domain, ModelError};
use crate::fixtures::replacement_education;
use crate::goods::GoodsMarket;
use crate::production;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("infeasible calibration: {identity}")]
    InfeasibleCalibration { identity: String },
    #[error("benchmark solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error("stationary benchmark did not settle after {iterations} rounds (change {change:e})")]
    NoFixedPoint { iterations: usize, change: f64 },
}

fn infeasible(identity: impl Into<String>) -> CalibrationError {
    CalibrationError::InfeasibleCalibration {
        identity: identity.into(),
    }
}

/// Closure instruments of the stationary benchmark, packed as
/// `[household transfers per country over `scale`, saving rate, ln public capital
/// per region, equity share per household of all regions but the last]`.
struct Closure {
    countries: usize,
    regions: usize,
    scale: f64,
}

impl Closure {
    fn pack(&self, e: &Economy) -> Vec<f64> {
        let mut y: Vec<f64> = e.fiscal.household_transfers.iter().map(|v| v / self.scale).collect();
        y.push(e.params.saving_rate);
        y.extend(e.stocks.public_capital.iter().map(|k| k.ln()));
        y.extend((0..self.regions - 1).map(|q| e.stocks.equity_shares[q][0]));
        y
    }

    fn apply(&self, y: &[f64], e: &mut Economy) {
        let (nm, dr) = (self.countries, self.regions);
        for m in 0..nm {
            e.fiscal.household_transfers[m] = y[m] * self.scale;
        }
        e.params.saving_rate = y[nm];
        for r in 0..dr {
            e.stocks.public_capital[r] = y[nm + 1 + r].exp();
        }
        let hh = &e.topology.households;
        let mut held = 0.0;
        for q in 0..dr - 1 {
            let share = y[nm + 1 + dr + q];
            e.stocks.equity_shares[q] = vec![share; dr];
            held += hh[q] * share;
        }
        e.stocks.equity_shares[dr - 1] = vec![(1.0 - held) / hh[dr - 1]; dr];
    }

    fn residuals(&self, e: &Economy, sol: &EquilibriumSolution) -> Vec<f64> {
        let (nm, dr) = (self.countries, self.regions);
        let delta = e.params.capital_depreciation;
        let mut f: Vec<f64> = sol.deficit.iter().map(|d| d / sol.gdp).collect();
        f.push(sol.current_account.iter().sum::<f64>() / sol.gdp);
        for r in 0..dr {
            f.push(e.stocks.public_capital[r].ln() - (sol.public_investment[r] / delta).ln());
        }
        for q in 0..dr - 1 {
            f.push(e.stocks.equity_shares[q][0] - sol.savings[q] / sol.total_savings);
        }
        debug_assert_eq!(f.len(), nm + 1 + 2 * dr - 1);
        f
    }
}

/// Rewrites the stocks and the closure instruments of `economy` so that it
/// sits at its own long-run rest point: zero pure profits, replacement
/// investment, balanced budgets, a zero current account and constant
/// asset shares. Household transfers close the budgets and the saving rate
/// closes the current account. Returns the stationary economy and its
/// short-run solution.
pub fn stationary_benchmark(
    economy: &Economy,
    options: &SolveOptions,
) -> Result<(Economy, EquilibriumSolution), CalibrationError> {
    let mut base = economy.clone();
    let t = base.topology.clone();
    let (dr, nm) = (t.domestic_regions(), t.countries);
    let education = replacement_education(base.params.human_capital_depreciation);
    for r in 0..dr {
        base.fiscal.education[r] = [education; SKILLS];
    }
    base.stocks.history = None;
    let inner = SolveOptions {
        tol: options.tol.min(1e-12),
        ..*options
    };
    let probe = SolveOptions {
        max_iter: inner.max_iter.min(25),
        ..inner
    };
    let first = equilibrium::solve_mode(&base, Mode::LongRun, None, &inner)?.solution;
    {
        let delta = base.params.capital_depreciation;
        for r in 0..dr {
            base.stocks.public_capital[r] = first.public_investment[r] / delta;
        }
        for q in 0..dr {
            base.stocks.equity_shares[q] = vec![first.savings[q] / first.total_savings; dr];
        }
    }
    let closure = Closure {
        countries: nm,
        regions: dr,
        scale: first.gdp,
    };
    let warm = RefCell::new(first);
    let failure = RefCell::new(None);
    let f = |y: &[f64]| -> Result<Vec<f64>, ModelError> {
        let mut e = base.clone();
        closure.apply(y, &mut e);
        let guess = warm.borrow().clone();
        match equilibrium::solve_from(&e, Mode::LongRun, &guess, &probe) {
            Ok(rep) => {
                let res = closure.residuals(&e, &rep.solution);
                *warm.borrow_mut() = rep.solution;
                Ok(res)
            }
            Err(err) => {
                let msg = err.to_string();
                *failure.borrow_mut() = Some(err);
                Err(domain(msg))
            }
        }
    };
    let y0 = closure.pack(&base);
    let outer = SolveOptions {
        tol: 1e-13,
        max_iter: 20,
        damping: 1.0,
    };
    let y = match newton::solve(f, &y0, &outer) {
        Ok(out) => out.x,
        Err(NewtonFailure::NonConvergence {
            best_residual,
            iterations,
            ..
        }) => {
            return Err(CalibrationError::NoFixedPoint {
                iterations,
                change: best_residual,
            })
        }
        Err(NewtonFailure::Singular { column, .. }) => {
            return Err(infeasible(format!("closure instrument {column} has no effect on its target")))
        }
        Err(NewtonFailure::Start(_)) => {
            return Err(failure
                .into_inner()
                .map(CalibrationError::Solve)
                .unwrap_or_else(|| infeasible("long-run solve at the start point")))
        }
    };
    let mut e = base;
    closure.apply(&y, &mut e);
    let lr = equilibrium::solve_mode(&e, Mode::LongRun, Some(&warm.into_inner()), &inner)?.solution;
    if lr.savings.iter().any(|s| !(*s > 0.0)) {
        return Err(infeasible("household savings must be positive in the benchmark"));
    }
    let st = &mut e.stocks;
    st.firms = lr.firms.clone();
    st.durable_firms = lr.durable_firms.clone();
    st.designs = lr.new_designs.clone();
    st.capital = lr.durable_output.clone();
    st.history = Some(History {
        wages: lr.wages.clone(),
        consumer_prices: lr.consumer_prices.clone(),
    });
    let sol = equilibrium::solve_mode(&e, Mode::ShortRun, Some(&lr), &inner)?.solution;
    Ok((e, sol))
}

/// Relative tolerance on the balance identities of a base-year table.
pub const BALANCE_TOLERANCE: f64 = 1e-6;

/// Observed base-year data: per-firm prices and quantities of every
/// final-goods cell, the final-demand expenditure of every region and the
/// factor prices of the period. Indexed like [`EquilibriumSolution`];
/// expenditure rows run over all sectors, foreign last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseYearFlows {
    pub prices: Vec<Vec<f64>>,
    pub output: Vec<Vec<f64>>,
    pub firms: Vec<Vec<f64>>,
    /// Output shipped to all buyers, per firm.
    pub shipped: Vec<Vec<f64>>,
    pub value_added_prices: Vec<Vec<f64>>,
    pub profits: Vec<Vec<f64>>,
    /// Per-firm spending on the inputs of each sector, `[sector][region][input]`.
    pub intermediate_expenditure: Vec<Vec<Vec<f64>>>,
    /// Final-demand spending of each region on each sector, `[sector][region]`.
    pub final_expenditure: Vec<Vec<f64>>,
    /// Total final-demand spending per region.
    pub final_spending: Vec<f64>,
    pub consumer_prices: Vec<f64>,
    pub wages: Vec<[f64; SKILLS]>,
    pub durable_output: Vec<f64>,
    pub design_prices: Vec<f64>,
}

/// Flow table of a solved period, as a statistical office would record it.
pub fn base_year_flows(economy: &Economy, sol: &EquilibriumSolution) -> Result<BaseYearFlows, ModelError> {
    let t = &economy.topology;
    let p = &economy.params;
    let (dr, ds, ns) = (t.domestic_regions(), t.domestic_sectors(), t.sectors);
    let market = GoodsMarket {
        topology: t,
        prices: &sol.prices,
        foreign_price: p.foreign_price,
        firms: &sol.firms,
    };
    let mut final_expenditure = vec![vec![0.0; dr]; ns];
    for q in 0..dr {
        let taxes = &p.consumption_tax[t.country_of(q)];
        for v in market.all() {
            let rec = market.variety(v, q, Some(taxes), Some(&p.sector_weight));
            let unit = ces::demand(rec.price, rec.weight, sol.consumer_prices[q], p.theta, 1.0);
            final_expenditure[v.sector][q] += rec.count * rec.price * unit * sol.basket[q];
        }
    }
    let mut intermediate_expenditure = vec![vec![vec![0.0; ns]; dr]; ds];
    for s in 0..ds {
        for r in 0..dr {
            let coefficients = &p.technical_coefficients[t.country_of(r)][s];
            for u in 0..ns {
                if coefficients[u] == 0.0 {
                    continue;
                }
                let index = production::intermediate_price_index(&market, u, r, p.theta)?;
                let aggregate = coefficients[u] * sol.output[s][r];
                intermediate_expenditure[s][r][u] = market
                    .of_sector(u)
                    .map(|v| {
                        let rec = market.variety(v, r, None, None);
                        rec.count
                            * rec.price
                            * production::intermediate_variety_demand(rec.price, index, aggregate, p.theta)
                    })
                    .sum();
            }
        }
    }
    Ok(BaseYearFlows {
        prices: sol.prices.clone(),
        output: sol.output.clone(),
        firms: sol.firms.clone(),
        shipped: sol.demand.iter().map(|row| row.iter().map(|d| d.total()).collect()).collect(),
        value_added_prices: sol.value_added_prices.clone(),
        profits: sol.final_profits.clone(),
        intermediate_expenditure,
        final_expenditure,
        final_spending: (0..dr).map(|q| sol.consumer_prices[q] * sol.basket[q]).collect(),
        consumer_prices: sol.consumer_prices.clone(),
        wages: sol.wages.clone(),
        durable_output: sol.durable_output.clone(),
        design_prices: sol.design_prices.clone(),
    })
}

/// Parameters recovered from a base year and how well the calibrated
/// economy reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub sector_weight: Vec<f64>,
    pub technical_coefficients: Vec<Vec<Vec<f64>>>,
    pub fixed_cost_final: Vec<Vec<f64>>,
    /// Largest relative gap over the balance identities of the table.
    pub balance_gap: f64,
    /// Largest relative gap between the solved period and the observed
    /// prices and outputs.
    pub reproduction_error: f64,
}

impl fmt::Display for CalibrationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sector weights: {:?}", self.sector_weight)?;
        writeln!(f, "technical coefficients: {:?}", self.technical_coefficients)?;
        writeln!(f, "fixed costs: {:?}", self.fixed_cost_final)?;
        writeln!(f, "largest balance gap: {:e}", self.balance_gap)?;
        write!(f, "reproduction error: {:e}", self.reproduction_error)
    }
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub economy: Economy,
    pub solution: EquilibriumSolution,
    pub report: CalibrationReport,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn check_shape(flows: &BaseYearFlows, dr: usize, ds: usize, ns: usize, nm: usize) -> Result<(), CalibrationError> {
    let grid = |name: &str, g: &[Vec<f64>], rows: usize| {
        if g.len() != rows || g.iter().any(|row| row.len() != dr) {
            Err(infeasible(format!("{name} table must be {rows} x {dr}")))
        } else {
            Ok(())
        }
    };
    grid("price", &flows.prices, ds)?;
    grid("output", &flows.output, ds)?;
    grid("firm count", &flows.firms, ds)?;
    grid("shipment", &flows.shipped, ds)?;
    grid("value-added price", &flows.value_added_prices, ds)?;
    grid("profit", &flows.profits, ds)?;
    grid("final expenditure", &flows.final_expenditure, ns)?;
    if flows.intermediate_expenditure.len() != ds
        || flows
            .intermediate_expenditure
            .iter()
            .any(|rows| rows.len() != dr || rows.iter().any(|row| row.len() != ns))
    {
        return Err(infeasible(format!("intermediate expenditure table must be {ds} x {dr} x {ns}")));
    }
    for (name, len) in [
        ("final spending", flows.final_spending.len()),
        ("consumer price", flows.consumer_prices.len()),
        ("wage", flows.wages.len()),
        ("durable output", flows.durable_output.len()),
    ] {
        if len != dr {
            return Err(infeasible(format!("{name} column must have {dr} entries")));
        }
    }
    if flows.design_prices.len() != nm {
        return Err(infeasible(format!("design price column must have {nm} entries")));
    }
    Ok(())
}

/// Chooses sector weights, technical coefficients and final-goods fixed
/// costs so that the base year is an exact short-run equilibrium of
/// `economy`, whose stocks are those of the base year.
pub fn calibrate(
    economy: &Economy,
    flows: &BaseYearFlows,
    options: &SolveOptions,
) -> Result<Calibration, CalibrationError> {
    let t = &economy.topology;
    let p = &economy.params;
    let f = &economy.fiscal;
    let (dr, ds, ns, nm) = (t.domestic_regions(), t.domestic_sectors(), t.sectors, t.countries);
    check_shape(flows, dr, ds, ns, nm)?;
    let mut gap: f64 = 0.0;
    let mut within = |a: f64, b: f64, identity: String| {
        let g = relative_gap(a, b);
        gap = gap.max(g);
        if g <= BALANCE_TOLERANCE {
            Ok(())
        } else {
            Err(infeasible(format!("{identity} (relative gap {g:e})")))
        }
    };
    for s in 0..ds {
        for r in 0..dr {
            within(
                flows.firms[s][r],
                economy.stocks.firms[s][r],
                format!("firm count of sector {s} in region {r} differs from the stock"),
            )?;
            within(
                flows.output[s][r],
                flows.shipped[s][r],
                format!("output of sector {s} in region {r} differs from its shipments"),
            )?;
        }
    }
    for q in 0..dr {
        let column: f64 = flows.final_expenditure.iter().map(|row| row[q]).sum();
        within(
            column,
            flows.final_spending[q],
            format!("final expenditure of region {q} does not add up to its spending"),
        )?;
    }

    let market = GoodsMarket {
        topology: t,
        prices: &flows.prices,
        foreign_price: p.foreign_price,
        firms: &flows.firms,
    };
    let theta = p.theta;
    let exponent = theta / (theta - 1.0);

    let mut sector_weight = vec![0.0; ns];
    for (s, weight) in sector_weight.iter_mut().enumerate() {
        for q in 0..dr {
            let taxes = &p.consumption_tax[t.country_of(q)];
            let spread: f64 = market
                .of_sector(s)
                .map(|v| {
                    let rec = market.variety(v, q, Some(taxes), None);
                    rec.count * rec.price.powf(exponent)
                })
                .sum();
            let basket = flows.final_spending[q] / flows.consumer_prices[q];
            let share = flows.final_expenditure[s][q] / (basket * spread);
            if !(share > 0.0) || !share.is_finite() {
                return Err(infeasible(format!(
                    "final expenditure of region {q} on sector {s} must be positive"
                )));
            }
            let implied = share.powf(1.0 - theta) / flows.consumer_prices[q];
            if q == 0 {
                *weight = implied;
            } else {
                within(*weight, implied, format!("weight of sector {s} differs across regions"))?;
            }
        }
    }

    let mut coefficients = vec![vec![vec![0.0; ns]; ds]; nm];
    let mut assigned = vec![false; nm];
    let mut intermediate_index = vec![vec![0.0; ns]; dr];
    for r in 0..dr {
        for u in 0..ns {
            intermediate_index[r][u] = production::intermediate_price_index(&market, u, r, theta)
                .map_err(|e| infeasible(format!("intermediate price index of sector {u} in region {r}: {e}")))?;
        }
    }
    for r in 0..dr {
        let m = t.country_of(r);
        for s in 0..ds {
            for u in 0..ns {
                let implied = flows.intermediate_expenditure[s][r][u] / (intermediate_index[r][u] * flows.output[s][r]);
                if !(implied >= 0.0) || !implied.is_finite() {
                    return Err(infeasible(format!(
                        "input of sector {u} into sector {s} in region {r} must be non-negative"
                    )));
                }
                if !assigned[m] {
                    coefficients[m][s][u] = implied;
                } else if implied != coefficients[m][s][u] {
                    within(
                        coefficients[m][s][u],
                        implied,
                        format!("input of sector {u} into sector {s} differs across regions of country {m}"),
                    )?;
                }
            }
        }
        assigned[m] = true;
    }

    let mut fixed_cost = vec![vec![0.0; dr]; ds];
    for s in 0..ds {
        for r in 0..dr {
            let a = &coefficients[t.country_of(r)][s];
            let py = flows.value_added_prices[s][r];
            let (mc, _) = production::marginal_cost_and_price(py, &intermediate_index[r], a, theta);
            let subsidy = (f.final_subsidy_national[s][r] + f.final_subsidy_eu[s][r]) / flows.firms[s][r];
            let fc = ((flows.prices[s][r] - mc) * flows.output[s][r] + subsidy - flows.profits[s][r]) / py;
            if !(fc > 0.0) || !fc.is_finite() {
                return Err(infeasible(format!(
                    "fixed cost of sector {s} in region {r} implied by its profits is not positive"
                )));
            }
            fixed_cost[s][r] = fc;
        }
    }

    let mut calibrated = economy.clone();
    calibrated.params.sector_weight = sector_weight.clone();
    calibrated.params.technical_coefficients = coefficients.clone();
    calibrated.params.fixed_cost_final = fixed_cost.clone();
    let start = StartPoint {
        prices: &flows.prices,
        output: &flows.output,
        wages: &flows.wages,
        durable_output: &flows.durable_output,
        design_prices: &flows.design_prices,
    };
    let solution = equilibrium::solve_short_run_at(&calibrated, &start, options)?.solution;
    let mut reproduction_error: f64 = 0.0;
    for s in 0..ds {
        for r in 0..dr {
            reproduction_error = reproduction_error
                .max(relative_gap(solution.prices[s][r], flows.prices[s][r]))
                .max(relative_gap(solution.output[s][r], flows.output[s][r]));
        }
    }
    for q in 0..dr {
        for e in 0..SKILLS {
            reproduction_error = reproduction_error.max(relative_gap(solution.wages[q][e], flows.wages[q][e]));
        }
        reproduction_error = reproduction_error.max(relative_gap(solution.consumer_prices[q], flows.consumer_prices[q]));
    }
    log::info!("calibration reproduces the base year to {reproduction_error:e}");
    Ok(Calibration {
        economy: calibrated,
        solution,
        report: CalibrationReport {
            sector_weight,
            technical_coefficients: coefficients,
            fixed_cost_final: fixed_cost,
            balance_gap: gap,
            reproduction_error,
        },
    })
}

//! The square period system: unknown layout, residual evaluation and the
//! complete within-period accounting.
//!
//! Unknowns are logarithms. Each block pairs one unknown with one residual,
//! oriented so that raising the unknown raises its own residual:
//!
//! | unknown            | residual                                   |
//! |--------------------|--------------------------------------------|
//! | price `p[s][r]`    | `ln p - ln(MC / theta)`                    |
//! | output `X[s][r]`   | `ln X - ln(shipped demand)`                |
//! | wage `w[r][e]`     | `ln(net real wage) - ln(required wage)`    |
//! | durables `z[r]`    | `ln z - ln(durable demand)`                |
//! | design price `P_J` | `ln(design supply) - ln(design demand)`    |
//! | firms `N[s][r]`    | `ln X* - ln X` (long run)                  |
//! | durable firms `A`  | `ln z* - ln z` (long run)                  |
//! | designs `J[m]`     | `ln J - ln(design supply)` (long run)      |
//!
//! Labour demand is substituted into the wage rule, so the labour markets
//! clear identically. Rental rates, durable prices and bond rates follow in
//! closed form from the arbitrage condition.

use crate::ces;
use crate::economy::{Economy, SKILLS};
use crate::error::{domain, ensure_positive, ModelError};
use crate::goods::{GoodsMarket, VarietyId};
use crate::household::{self, CapitalIncomeInputs, EquityPosition, IncomeInputs};
use crate::production::{self, RdInputs};
use crate::public::{self, DeficitInputs, TaxBases};

use super::solution::{DemandBreakdown, EquilibriumSolution, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub sectors: usize,
    pub regions: usize,
    pub countries: usize,
    pub mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Price,
    Output,
    Wage,
    Durable,
    DesignPrice,
    Firms,
    DurableFirms,
    Designs,
}

impl Layout {
    pub fn new(economy: &Economy, mode: Mode) -> Self {
        Self {
            sectors: economy.topology.domestic_sectors(),
            regions: economy.topology.domestic_regions(),
            countries: economy.topology.countries,
            mode,
        }
    }

    fn cells(&self) -> usize {
        self.sectors * self.regions
    }

    pub fn offset(&self, block: Block) -> usize {
        let c = self.cells();
        let (r, m) = (self.regions, self.countries);
        match block {
            Block::Price => 0,
            Block::Output => c,
            Block::Wage => 2 * c,
            Block::Durable => 2 * c + SKILLS * r,
            Block::DesignPrice => 2 * c + SKILLS * r + r,
            Block::Firms => 2 * c + SKILLS * r + r + m,
            Block::DurableFirms => 3 * c + SKILLS * r + r + m,
            Block::Designs => 3 * c + SKILLS * r + 2 * r + m,
        }
    }

    pub fn len(&self) -> usize {
        match self.mode {
            Mode::ShortRun => self.offset(Block::Firms),
            Mode::LongRun => self.offset(Block::Designs) + self.countries,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self, block: Block, s: usize, r: usize) -> usize {
        self.offset(block) + s * self.regions + r
    }

    pub fn wage(&self, r: usize, e: usize) -> usize {
        self.offset(Block::Wage) + r * SKILLS + e
    }

    pub fn region(&self, block: Block, r: usize) -> usize {
        self.offset(block) + r
    }

    pub fn country(&self, block: Block, m: usize) -> usize {
        self.offset(block) + m
    }

    /// Name of the market closed by unknown `i`.
    pub fn label(&self, i: usize) -> String {
        let cell = |j: usize| (j / self.regions, j % self.regions);
        let blocks = [
            Block::Designs,
            Block::DurableFirms,
            Block::Firms,
            Block::DesignPrice,
            Block::Durable,
            Block::Wage,
            Block::Output,
            Block::Price,
        ];
        for b in blocks {
            if matches!(b, Block::Firms | Block::DurableFirms | Block::Designs) && self.mode == Mode::ShortRun {
                continue;
            }
            let o = self.offset(b);
            if i >= o {
                let j = i - o;
                return match b {
                    Block::Price => {
                        let (s, r) = cell(j);
                        format!("pricing rule (sector {s}, region {r})")
                    }
                    Block::Output => {
                        let (s, r) = cell(j);
                        format!("goods market (sector {s}, region {r})")
                    }
                    Block::Wage => format!("labour market (region {}, skill {})", j / SKILLS, j % SKILLS),
                    Block::Durable => format!("durable-goods market (region {j})"),
                    Block::DesignPrice => format!("design market (country {j})"),
                    Block::Firms => {
                        let (s, r) = cell(j);
                        format!("final-goods entry (sector {s}, region {r})")
                    }
                    Block::DurableFirms => format!("durable-goods entry (region {j})"),
                    Block::Designs => format!("design stock (country {j})"),
                };
            }
        }
        format!("unknown {i}")
    }

    /// Log unknown vector of a solution.
    pub fn pack(&self, sol: &EquilibriumSolution) -> Vec<f64> {
        let mut x = vec![0.0; self.len()];
        for s in 0..self.sectors {
            for r in 0..self.regions {
                x[self.cell(Block::Price, s, r)] = sol.prices[s][r].ln();
                x[self.cell(Block::Output, s, r)] = sol.output[s][r].ln();
                if self.mode == Mode::LongRun {
                    x[self.cell(Block::Firms, s, r)] = sol.firms[s][r].ln();
                }
            }
        }
        for r in 0..self.regions {
            for e in 0..SKILLS {
                x[self.wage(r, e)] = sol.wages[r][e].ln();
            }
            x[self.region(Block::Durable, r)] = sol.durable_output[r].ln();
            if self.mode == Mode::LongRun {
                x[self.region(Block::DurableFirms, r)] = sol.durable_firms[r].ln();
            }
        }
        for m in 0..self.countries {
            x[self.country(Block::DesignPrice, m)] = sol.design_prices[m].ln();
            if self.mode == Mode::LongRun {
                x[self.country(Block::Designs, m)] = sol.design_stocks[m].ln();
            }
        }
        x
    }
}

/// One period's system for a fixed economy (policy already applied).
#[derive(Debug, Clone)]
pub struct System<'a> {
    pub economy: &'a Economy,
    pub layout: Layout,
}

fn grid(rows: usize, cols: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; cols]; rows]
}

fn safe_ln(name: &str, v: f64) -> Result<f64, ModelError> {
    Ok(ensure_positive(name, v)?.ln())
}

impl<'a> System<'a> {
    pub fn new(economy: &'a Economy, mode: Mode) -> Self {
        Self {
            economy,
            layout: Layout::new(economy, mode),
        }
    }

    /// Start point built from the economy's stocks.
    pub fn default_guess(&self) -> Vec<f64> {
        self.guess_with_wage(1.0)
    }

    /// Stock-based start point with last period's wages, when known.
    pub fn history_guess(&self) -> Option<Vec<f64>> {
        let h = self.economy.stocks.history.as_ref()?;
        let mut x = self.guess_with_wage(0.0);
        for r in 0..self.layout.regions {
            for e in 0..SKILLS {
                x[self.layout.wage(r, e)] = h.wages[r][e].max(1e-12).ln();
            }
        }
        Some(x)
    }

    /// Stock-based start point with every log wage set to `log_wage`.
    pub fn guess_with_wage(&self, log_wage: f64) -> Vec<f64> {
        let l = &self.layout;
        let st = &self.economy.stocks;
        let mut x = vec![0.0; l.len()];
        for s in 0..l.sectors {
            for r in 0..l.regions {
                if l.mode == Mode::LongRun {
                    x[l.cell(Block::Firms, s, r)] = st.firms[s][r].ln();
                }
            }
        }
        for r in 0..l.regions {
            for e in 0..SKILLS {
                x[l.wage(r, e)] = log_wage;
            }
            x[l.region(Block::Durable, r)] = st.capital[r].max(1e-3).ln();
            if l.mode == Mode::LongRun {
                x[l.region(Block::DurableFirms, r)] = st.durable_firms[r].ln();
            }
        }
        for m in 0..l.countries {
            if l.mode == Mode::LongRun {
                x[l.country(Block::Designs, m)] = st.designs[m].max(1e-3).ln();
            }
        }
        x
    }

    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.evaluate_full(x).map(|(r, _)| r)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<EquilibriumSolution, ModelError> {
        self.evaluate_full(x).map(|(_, s)| s)
    }

    /// Residual vector and the complete accounting at candidate `x`.
    pub fn evaluate_full(&self, x: &[f64]) -> Result<(Vec<f64>, EquilibriumSolution), ModelError> {
        self.evaluate_stage(x, false).map(|(r, s)| (r, s.expect("complete evaluation")))
    }

    /// Pricing-only residuals: markup rule, output against its zero-profit
    /// level and durable demand, with no price history. Other entries are zero.
    fn pricing_residuals(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.evaluate_stage(x, true).map(|(r, _)| r)
    }

    /// Moves prices to the markup rule, outputs to their zero-profit level and
    /// durable output to its demand, leaving the other unknowns untouched.
    pub fn pricing_start(&self, mut x: Vec<f64>) -> Vec<f64> {
        for _ in 0..200 {
            let Ok(f) = self.pricing_residuals(&x) else { break };
            if f.iter().all(|v| v.abs() < 1e-6) {
                break;
            }
            for (a, v) in x.iter_mut().zip(&f) {
                *a -= 0.8 * v.clamp(-2.0, 2.0);
            }
        }
        x
    }

    fn evaluate_stage(&self, x: &[f64], pricing_only: bool) -> Result<(Vec<f64>, Option<EquilibriumSolution>), ModelError> {
        let lay = &self.layout;
        let e = self.economy;
        let t = &e.topology;
        let p = &e.params;
        let f = &e.fiscal;
        let st = &e.stocks;
        let (ds, dr, nm) = (lay.sectors, lay.regions, lay.countries);
        let ns = t.sectors;
        let (fs, fr) = (t.foreign_sector(), t.foreign_region());
        let long_run = lay.mode == Mode::LongRun;
        if x.len() != lay.len() {
            return Err(domain(format!("unknown vector of length {} for a system of {}", x.len(), lay.len())));
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > 200.0) {
            return Err(domain("unknown outside the representable range"));
        }
        let mut res = vec![0.0; lay.len()];

        let mut prices = grid(ds, dr);
        let mut output = grid(ds, dr);
        let mut firms = st.firms.clone();
        for s in 0..ds {
            for r in 0..dr {
                prices[s][r] = x[lay.cell(Block::Price, s, r)].exp();
                output[s][r] = x[lay.cell(Block::Output, s, r)].exp();
                if long_run {
                    firms[s][r] = x[lay.cell(Block::Firms, s, r)].exp();
                }
            }
        }
        let mut wages = vec![[0.0; SKILLS]; dr];
        let mut z = vec![0.0; dr];
        let mut a_count = st.durable_firms.clone();
        for r in 0..dr {
            for e_ in 0..SKILLS {
                wages[r][e_] = x[lay.wage(r, e_)].exp();
            }
            z[r] = x[lay.region(Block::Durable, r)].exp();
            if long_run {
                a_count[r] = x[lay.region(Block::DurableFirms, r)].exp();
            }
        }
        let mut design_price = vec![0.0; nm];
        let mut design_stocks = st.designs.clone();
        for m in 0..nm {
            design_price[m] = x[lay.country(Block::DesignPrice, m)].exp();
            if long_run {
                design_stocks[m] = x[lay.country(Block::Designs, m)].exp();
            }
        }

        let market = GoodsMarket {
            topology: t,
            prices: &prices,
            foreign_price: p.foreign_price,
            firms: &firms,
        };
        let country = |r: usize| t.country_of(r);
        let hh = &t.households;
        let history = if long_run || pricing_only { None } else { st.history.as_ref() };

        // price indices and returns
        let mut pc = vec![0.0; dr];
        let mut dpc = vec![0.0; dr];
        let mut rk = vec![0.0; dr];
        let mut pz = vec![0.0; dr];
        let mut pz_index = vec![0.0; dr];
        let mut w_index = vec![0.0; dr];
        let mut pu = grid(dr, ns);
        let mut wage_changes = vec![[0.0; SKILLS]; dr];
        let mut wage_inflation = vec![[0.0; SKILLS]; dr];
        let delta = p.capital_depreciation;
        for q in 0..dr {
            let m = country(q);
            pc[q] = household::consumer_price_index(&market, &p.consumption_tax[m], &p.sector_weight, p.theta, q)?;
            if let Some(h) = history {
                dpc[q] = pc[q] - h.consumer_prices[q];
                for e_ in 0..SKILLS {
                    wage_changes[q][e_] = wages[q][e_] - h.wages[q][e_];
                    wage_inflation[q][e_] = wage_changes[q][e_] / h.wages[q][e_];
                }
            }
            rk[q] = delta + (p.foreign_return - (1.0 - delta) * dpc[q]) / pc[q];
            ensure_positive("rental rate", rk[q])?;
            pz[q] = rk[q] * pc[q] / p.rho;
            pz_index[q] = production::durable_price_index(a_count[q], pz[q], p.rho)?;
            w_index[q] = production::wage_index(
                hh[q],
                &wages[q],
                &st.human_capital[q],
                &p.skill_productivity,
                p.sigma,
            )?;
            for u in 0..ns {
                pu[q][u] = production::intermediate_price_index(&market, u, q, p.theta)?;
            }
        }

        // final-goods firms
        let mut mc = grid(ds, dr);
        let mut py = grid(ds, dr);
        let mut x_target = grid(ds, dr);
        let mut profits = grid(ds, dr);
        let mut subsidies = grid(ds, dr);
        let mut zd = grid(ds, dr);
        let mut ld = grid(ds, dr);
        for s in 0..ds {
            for r in 0..dr {
                let m = country(r);
                let alpha = p.capital_share[s];
                py[s][r] = production::value_added_price(
                    pz_index[r],
                    w_index[r],
                    st.public_capital[r],
                    alpha,
                    p.public_capital_elasticity,
                )?;
                let (c, target) =
                    production::marginal_cost_and_price(py[s][r], &pu[r], &p.technical_coefficients[m][s], p.theta);
                mc[s][r] = c;
                res[lay.cell(Block::Price, s, r)] = prices[s][r].ln() - safe_ln("markup price", target)?;
                let fc = p.fixed_cost_final[s][r];
                subsidies[s][r] = (f.final_subsidy_national[s][r] + f.final_subsidy_eu[s][r]) / firms[s][r];
                let gross = output[s][r] + fc;
                let (zz, ll) = production::value_added_factors(py[s][r], pz_index[r], w_index[r], alpha, gross);
                zd[s][r] = zz;
                ld[s][r] = ll;
                profits[s][r] =
                    production::final_goods_profit(prices[s][r], output[s][r], c, py[s][r], fc, subsidies[s][r]);
                x_target[s][r] = match production::zero_profit_output(py[s][r], fc, subsidies[s][r], c, p.theta) {
                    Some(x) => x,
                    None if long_run => return Err(ModelError::NonViable { sector: s, region: r }),
                    None => 0.0,
                };
            }
        }

        // durable-goods demand
        let mut z_demand = vec![0.0; dr];
        for r in 0..dr {
            z_demand[r] = (0..ds)
                .map(|s| firms[s][r] * production::durable_variety_demand(pz[r], pz_index[r], zd[s][r], p.rho))
                .sum();
            res[lay.region(Block::Durable, r)] = z[r].ln() - safe_ln("durable demand", z_demand[r])?;
        }
        if pricing_only {
            for s in 0..ds {
                for r in 0..dr {
                    if x_target[s][r] > 0.0 {
                        res[lay.cell(Block::Output, s, r)] = output[s][r].ln() - x_target[s][r].ln();
                    }
                }
            }
            return Ok((res, None));
        }

        // labour demand of final-goods firms, per household
        let mut labour_final = vec![[0.0; SKILLS]; dr];
        for r in 0..dr {
            for e_ in 0..SKILLS {
                labour_final[r][e_] = (0..ds)
                    .map(|s| {
                        firms[s][r]
                            * production::labour_variety_demand(
                                wages[r][e_],
                                st.human_capital[r][e_],
                                p.skill_productivity[e_],
                                w_index[r],
                                ld[s][r],
                                p.sigma,
                            )
                    })
                    .sum();
            }
        }

        // R&D sectors
        let hi = SKILLS - 1;
        let union_stock: f64 = design_stocks.iter().sum();
        let mut rd_w = vec![0.0; nm];
        let mut new_designs = vec![0.0; nm];
        let mut rd_labour = vec![0.0; nm];
        let mut labour_rd = vec![0.0; dr];
        for m in 0..nm {
            rd_w[m] = production::rd_wage_index(
                t.regions_in(m).map(|r| (hh[r], wages[r][hi], st.human_capital[r][hi])),
                p.sigma,
            )?;
            let out = production::rd_balance(&RdInputs {
                union_stock,
                national_stock: design_stocks[m],
                design_price: design_price[m],
                subsidy: f.rd_subsidy_national[m] + f.rd_subsidy_eu[m],
                wage_index: rd_w[m],
                spillover_union: p.rd_spillover_union,
                spillover_national: p.rd_spillover_national,
                supply_elasticity: p.rd_supply_elasticity,
            })?;
            new_designs[m] = out.designs;
            rd_labour[m] = out.labour;
            for r in t.regions_in(m) {
                labour_rd[r] = production::labour_variety_demand(
                    wages[r][hi],
                    st.human_capital[r][hi],
                    1.0,
                    rd_w[m],
                    out.labour,
                    p.sigma,
                );
            }
        }
        let mut labour = labour_final.clone();
        for r in 0..dr {
            labour[r][hi] += labour_rd[r];
            for e_ in 0..SKILLS {
                if !(labour[r][e_] < 1.0) {
                    return Err(domain(format!(
                        "labour demand {} exceeds the endowment (region {r}, skill {e_})",
                        labour[r][e_]
                    )));
                }
            }
        }

        // innovation probabilities and the design market
        let hc: Vec<f64> = (0..dr).map(|r| hh[r] * st.human_capital[r][hi] * labour[r][hi]).collect();
        let mut phi = vec![0.0; dr];
        let mut design_demand = vec![0.0; nm];
        for m in 0..nm {
            let rs: Vec<usize> = t.regions_in(m).collect();
            let av: Vec<f64> = rs.iter().map(|&r| a_count[r]).collect();
            let hv: Vec<f64> = rs.iter().map(|&r| hc[r]).collect();
            let probs = production::innovation_probability(&av, &hv, p.innovation_weight).map_err(|err| match err {
                ModelError::DegenerateRegion { region } => ModelError::DegenerateRegion { region: rs[region] },
                other => other,
            })?;
            for (k, &r) in rs.iter().enumerate() {
                phi[r] = probs[k].max(p.phi_floor);
                design_demand[m] += a_count[r] / phi[r];
            }
            res[lay.country(Block::DesignPrice, m)] =
                safe_ln("design supply", new_designs[m])? - safe_ln("design demand", design_demand[m])?;
            if long_run {
                res[lay.country(Block::Designs, m)] = design_stocks[m].ln() - new_designs[m].ln();
            }
        }

        // wage rule
        for r in 0..dr {
            let m = country(r);
            let tw = p.wage_tax[m];
            let eta_inflation = wage_inflation[r];
            for e_ in 0..SKILLS {
                let eta = household::wage_markup_eta(
                    p.sigma,
                    p.saving_rate,
                    p.wage_adjustment_cost,
                    eta_inflation[e_],
                    tw,
                )?;
                let required = household::required_real_wage(p.leisure_weight[e_], p.kappa, labour[r][e_], eta)?;
                res[lay.wage(r, e_)] = ((1.0 - tw) * wages[r][e_] / pc[r]).ln() - safe_ln("required wage", required)?;
            }
        }

        // durable-goods firms
        let mut investment = vec![0.0; dr];
        let mut durable_sub = vec![0.0; dr];
        let mut expected_profit = vec![0.0; dr];
        let mut cash_profit = vec![0.0; dr];
        let mut z_target = vec![0.0; dr];
        let mut equity = vec![0.0; dr];
        for r in 0..dr {
            let m = country(r);
            let k_in = if long_run { z[r] } else { st.capital[r] };
            investment[r] = z[r] - (1.0 - delta) * k_in;
            durable_sub[r] = (f.durable_subsidy_national[r] + f.durable_subsidy_eu[r]) / a_count[r];
            let fcv = p.fixed_cost_durable[r];
            let (_, pi) = production::durable_pricing_profit(
                rk[r],
                pc[r],
                design_price[m],
                fcv,
                durable_sub[r],
                z[r],
                phi[r],
                p.rho,
            );
            expected_profit[r] = pi;
            cash_profit[r] = a_count[r] * ((pz[r] - rk[r] * pc[r]) * z[r] - fcv + durable_sub[r])
                - design_price[m] * a_count[r] / phi[r];
            z_target[r] = match production::zero_profit_durable_output(
                rk[r],
                pc[r],
                design_price[m],
                fcv,
                durable_sub[r],
                p.rho,
            ) {
                Some(z) => z,
                None if long_run => return Err(ModelError::NonViableDurable { region: r }),
                None => 0.0,
            };
            equity[r] = pc[r] * a_count[r] * z[r];
        }
        if long_run {
            for s in 0..ds {
                for r in 0..dr {
                    res[lay.cell(Block::Firms, s, r)] = x_target[s][r].ln() - output[s][r].ln();
                }
            }
            for r in 0..dr {
                res[lay.region(Block::DurableFirms, r)] = z_target[r].ln() - z[r].ln();
            }
        }

        // public spending
        let mut gov = vec![0.0; dr];
        let mut gov_inv = vec![0.0; dr];
        for q in 0..dr {
            let m = country(q);
            gov[q] = public::regional_budget(
                f.gov_spending[m],
                hh[q],
                t.country_population(m),
                f.eu_transfers[q] / pc[q],
            );
            gov_inv[q] = f.investment_share[m] * gov[q];
        }

        // households
        let final_profit_total: f64 =
            (0..ds).flat_map(|s| (0..dr).map(move |r| (s, r))).map(|(s, r)| firms[s][r] * profits[s][r]).sum();
        let population = t.domestic_population();
        let mut ki = vec![0.0; dr];
        let mut yc = vec![0.0; dr];
        let mut gamma = vec![0.0; dr];
        let mut savings = vec![0.0; dr];
        let mut consumption = vec![0.0; dr];
        for q in 0..dr {
            let m = country(q);
            let inputs = CapitalIncomeInputs {
                equities: (0..dr)
                    .map(|r| EquityPosition {
                        holding: st.equity_shares[q][r] * equity[r],
                        issued: equity[r],
                        rental_rate: rk[r],
                        profit: cash_profit[r],
                    })
                    .collect(),
                gov_bonds: (0..nm).map(|n| (p.foreign_return, st.gov_bonds[q][n])).collect(),
                foreign_bonds: st.foreign_bonds[q],
                foreign_return: p.foreign_return,
                final_profits: final_profit_total,
                population,
            };
            ki[q] = household::capital_income(&inputs)?;
            let changes = if long_run { [0.0; SKILLS] } else { wage_changes[q] };
            let (y, g) = household::disposable_income(&IncomeInputs {
                wages: wages[q],
                labour: labour[q],
                wage_changes: changes,
                wage_tax: p.wage_tax[m],
                capital_income_tax: p.capital_income_tax[m],
                capital_income: ki[q],
                transfers: f.household_transfers[m],
                country_population: t.country_population(m),
                gamma_w: p.wage_adjustment_cost,
            })?;
            yc[q] = y;
            gamma[q] = g;
            let acc = household::HouseholdAccounts::new(y, ki[q], g, p.saving_rate, pc[q]);
            savings[q] = acc.savings;
            consumption[q] = acc.consumption;
        }

        // regional baskets
        let mut basket = vec![0.0; dr];
        let mut basket_parts = vec![[0.0; 3]; dr];
        for q in 0..dr {
            let fcv = p.fixed_cost_durable[q];
            let h_part = hh[q] * (consumption[q] + gamma[q] / pc[q]);
            let k_part = a_count[q] * (investment[q] + fcv / pc[q]);
            basket_parts[q] = [h_part, gov[q], k_part];
            basket[q] = h_part + gov[q] + k_part;
        }

        // foreign demand index over domestic varieties
        let foreign_spending = p.foreign_expenditure();
        let foreign_index = if foreign_spending > 0.0 {
            Some(ces::price_index(
                market.domestic().map(|v| market.variety(v, fr, None, Some(&p.sector_weight))),
                p.theta,
            )?)
        } else {
            None
        };

        // goods-market clearing
        let mut demand = vec![vec![DemandBreakdown::default(); dr]; ds];
        let mut consumption_base = grid(nm, ns);
        for v in market.all() {
            let foreign = market.is_foreign(v);
            let mut d = DemandBreakdown::default();
            for q in 0..dr {
                let m = country(q);
                let taxes = &p.consumption_tax[m];
                let tau = t.tau(v.sector, v.region, q);
                let rec = market.variety(v, q, Some(taxes), Some(&p.sector_weight));
                let unit = ces::demand(rec.price, rec.weight, pc[q], p.theta, 1.0);
                let [hq, gq, kq] = basket_parts[q];
                d.household += tau * unit * hq;
                d.government += tau * unit * gq;
                d.capital += tau * unit * kq;
                consumption_base[m][v.sector] += market.count(v) * tau * market.producer_price(v) * unit * basket[q];
                for u in 0..ds {
                    let a = p.technical_coefficients[m][u][v.sector];
                    if a == 0.0 {
                        continue;
                    }
                    let xu = a * output[u][q];
                    let delivered = tau * market.producer_price(v);
                    let per_firm = production::intermediate_variety_demand(delivered, pu[q][v.sector], xu, p.theta);
                    d.intermediate += tau * firms[u][q] * per_firm;
                }
            }
            if let (Some(idx), false) = (foreign_index, foreign) {
                let tau = t.tau(v.sector, v.region, fr);
                let price = tau * market.producer_price(v);
                d.foreign = tau * ces::demand(price, p.sector_weight[v.sector], idx, p.theta, foreign_spending / idx);
            }
            if foreign {
                continue;
            }
            let (s, r) = (v.sector, v.region);
            demand[s][r] = d;
            res[lay.cell(Block::Output, s, r)] = output[s][r].ln() - safe_ln("goods demand", d.total())?;
        }

        // trade
        let mut exports = vec![0.0; nm];
        let mut imports = vec![0.0; nm];
        let import_variety = VarietyId { sector: fs, region: fr };
        for q in 0..dr {
            let m = country(q);
            let tau = t.tau(fs, fr, q);
            let rec = market.variety(import_variety, q, Some(&p.consumption_tax[m]), Some(&p.sector_weight));
            let unit = ces::demand(rec.price, rec.weight, pc[q], p.theta, 1.0);
            let mut qty = tau * unit * basket[q];
            for u in 0..ds {
                let a = p.technical_coefficients[m][u][fs];
                if a == 0.0 {
                    continue;
                }
                let delivered = tau * p.foreign_price;
                qty += tau
                    * firms[u][q]
                    * production::intermediate_variety_demand(delivered, pu[q][fs], a * output[u][q], p.theta);
            }
            imports[m] += p.foreign_price * qty;
        }
        for s in 0..ds {
            for r in 0..dr {
                exports[country(r)] += firms[s][r] * prices[s][r] * demand[s][r].foreign;
            }
        }
        let trade_balance: Vec<f64> = (0..nm).map(|m| exports[m] - imports[m]).collect();
        let current_account: Vec<f64> = (0..nm)
            .map(|m| {
                trade_balance[m]
                    + p.foreign_return * t.regions_in(m).map(|q| hh[q] * st.foreign_bonds[q]).sum::<f64>()
            })
            .collect();

        // output value and the EU budget
        let gdp_region: Vec<f64> = (0..dr)
            .map(|r| (0..ds).map(|s| firms[s][r] * py[s][r] * output[s][r]).sum())
            .collect();
        let mut gdp_country = vec![0.0; nm];
        for r in 0..dr {
            gdp_country[country(r)] += gdp_region[r];
        }
        let gdp: f64 = gdp_country.iter().sum();
        let mut national_subsidies = vec![0.0; nm];
        let mut eu_subsidies = 0.0;
        for r in 0..dr {
            let m = country(r);
            for s in 0..ds {
                national_subsidies[m] += f.final_subsidy_national[s][r];
                eu_subsidies += f.final_subsidy_eu[s][r];
            }
            national_subsidies[m] += f.durable_subsidy_national[r];
            eu_subsidies += f.durable_subsidy_eu[r];
        }
        for m in 0..nm {
            national_subsidies[m] += f.rd_subsidy_national[m] * new_designs[m];
            eu_subsidies += f.rd_subsidy_eu[m] * new_designs[m];
        }
        let eu_budget = f.eu_transfers.iter().sum::<f64>() + eu_subsidies;

        // national governments
        let mut tax_revenue = vec![0.0; nm];
        let mut deficit = vec![0.0; nm];
        let mut eu_contribution = vec![0.0; nm];
        for m in 0..nm {
            let rs: Vec<usize> = t.regions_in(m).collect();
            let bases = TaxBases {
                consumption: consumption_base[m].clone(),
                wage_bill: rs
                    .iter()
                    .map(|&q| hh[q] * (0..SKILLS).map(|e_| wages[q][e_] * labour[q][e_]).sum::<f64>())
                    .sum(),
                capital_income: rs.iter().map(|&q| hh[q] * ki[q]).sum(),
            };
            tax_revenue[m] =
                public::tax_revenue(&bases, &p.consumption_tax[m], p.wage_tax[m], p.capital_income_tax[m]);
            eu_contribution[m] = if gdp > 0.0 {
                public::eu_contribution(gdp_country[m], gdp, eu_budget)
            } else {
                0.0
            };
            deficit[m] = public::deficit(&DeficitInputs {
                spending: rs.iter().map(|&q| pc[q] * gov[q]).sum(),
                household_transfers: f.household_transfers[m],
                eu_contribution: eu_contribution[m],
                bond_rate: p.foreign_return,
                debt: st.gov_debt[m],
                subsidies: national_subsidies[m],
                revenue: tax_revenue[m],
                eu_transfers: rs.iter().map(|&q| f.eu_transfers[q]).sum(),
            });
        }

        let total_savings: f64 = (0..dr).map(|q| hh[q] * savings[q]).sum();
        let investment_value: f64 = (0..dr).map(|r| a_count[r] * pc[r] * investment[r]).sum();
        let walras = total_savings - investment_value - deficit.iter().sum::<f64>() - current_account.iter().sum::<f64>();

        let sol = EquilibriumSolution {
            mode: lay.mode,
            firms,
            durable_firms: a_count,
            design_stocks,
            prices,
            marginal_costs: mc,
            value_added_prices: py,
            output,
            output_target: x_target,
            final_profits: profits,
            final_subsidies: subsidies,
            demand,
            durable_input: zd,
            labour_input: ld,
            intermediate_prices: pu,
            consumer_prices: pc,
            consumer_price_changes: dpc,
            durable_prices: pz,
            durable_indices: pz_index,
            wage_indices: w_index,
            rental_rates: rk,
            durable_output: z,
            durable_target: z_target,
            investment,
            durable_expected_profit: expected_profit,
            durable_cash_profit: cash_profit,
            innovation_probability: phi,
            equity_values: equity,
            human_capital_stock: hc,
            wages,
            labour,
            labour_final,
            labour_rd,
            wage_changes: if long_run { vec![[0.0; SKILLS]; dr] } else { wage_changes },
            wage_inflation: if long_run { vec![[0.0; SKILLS]; dr] } else { wage_inflation },
            rd_wage_indices: rd_w,
            design_prices: design_price,
            new_designs,
            design_demand,
            rd_labour,
            bond_rates: vec![p.foreign_return; nm],
            disposable_income: yc,
            capital_income: ki,
            adjustment_cost: gamma,
            savings,
            consumption,
            gov_spending: gov,
            public_investment: gov_inv,
            basket,
            tax_revenue,
            deficit,
            national_subsidies,
            eu_contribution,
            eu_budget,
            exports,
            imports,
            trade_balance,
            current_account,
            gdp_region,
            gdp_country,
            gdp,
            total_savings,
            walras,
            residual_norm: res.iter().fold(0.0, |acc: f64, v| acc.max(v.abs())),
            iterations: 0,
        };
        Ok((res, Some(sol)))
    }
}


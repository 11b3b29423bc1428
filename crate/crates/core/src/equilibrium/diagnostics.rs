use crate::economy::{Economy, SKILLS};

use super::solution::{DemandBreakdown, EquilibriumSolution};

pub fn total_demand(sol: &EquilibriumSolution, sector: usize, region: usize) -> DemandBreakdown {
    sol.demand[sector][region]
}

/// Household labour supply minus firm and R&D demand for one variety.
pub fn labour_market_residual(sol: &EquilibriumSolution, region: usize, skill: usize) -> f64 {
    let rd = if skill == SKILLS - 1 { sol.labour_rd[region] } else { 0.0 };
    sol.labour[region][skill] - sol.labour_final[region][skill] - rd
}

pub fn design_market_residual(sol: &EquilibriumSolution, country: usize) -> f64 {
    sol.new_designs[country] - sol.design_demand[country]
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeBalance {
    pub exports: Vec<f64>,
    pub imports: Vec<f64>,
    pub balance: Vec<f64>,
    pub total: f64,
}

pub fn trade_balance(sol: &EquilibriumSolution) -> TradeBalance {
    TradeBalance {
        exports: sol.exports.clone(),
        imports: sol.imports.clone(),
        balance: sol.trade_balance.clone(),
        total: sol.trade_balance_total(),
    }
}

/// Savings minus investment, deficits and the current account.
pub fn financial_closure_residual(sol: &EquilibriumSolution) -> f64 {
    sol.walras
}

/// Redundant aggregate budget identity; zero at an exact solution.
pub fn walras_residual(sol: &EquilibriumSolution) -> f64 {
    sol.walras
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArbitrageResiduals {
    /// Largest gap between the net return on capital and the bond rate.
    pub capital: f64,
    /// Largest gap between a bond rate and the foreign return.
    pub bonds: f64,
}

impl ArbitrageResiduals {
    pub fn max(&self) -> f64 {
        self.capital.max(self.bonds)
    }
}

pub fn arbitrage_residuals(economy: &Economy, sol: &EquilibriumSolution) -> ArbitrageResiduals {
    let p = &economy.params;
    let t = &economy.topology;
    let delta = p.capital_depreciation;
    let mut capital: f64 = 0.0;
    for r in 0..t.domestic_regions() {
        let rg = sol.bond_rates[t.country_of(r)];
        let net = (sol.rental_rates[r] - delta) * sol.consumer_prices[r]
            + (1.0 - delta) * sol.consumer_price_changes[r];
        capital = capital.max((net - rg).abs());
    }
    let bonds = sol
        .bond_rates
        .iter()
        .fold(0.0_f64, |a, rg| a.max((rg - p.foreign_return).abs()));
    ArbitrageResiduals { capital, bonds }
}

pub fn gdp(sol: &EquilibriumSolution, region: usize) -> f64 {
    sol.gdp_region[region]
}

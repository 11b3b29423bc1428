use serde::{Deserialize, Serialize};

use crate::economy::SKILLS;

/// Which firm counts are treated as given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Stocks and firm counts predetermined; prices and flows clear.
    ShortRun,
    /// Firm counts, durable-firm counts and design stocks adjust until pure
    /// profits vanish, with stationary capital and no inflation.
    LongRun,
}

/// Shipped demand addressed to one domestic final-goods variety, split by buyer.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DemandBreakdown {
    pub household: f64,
    pub intermediate: f64,
    pub capital: f64,
    pub government: f64,
    pub foreign: f64,
}

impl DemandBreakdown {
    pub fn total(&self) -> f64 {
        self.household + self.intermediate + self.capital + self.government + self.foreign
    }
}

/// Solved within-period state. Per-firm quantities are indexed
/// `[sector][region]`, per-household quantities `[region]` or
/// `[region][skill]`, national quantities `[country]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub mode: Mode,
    pub firms: Vec<Vec<f64>>,
    pub durable_firms: Vec<f64>,
    /// Design stocks entering the R&D spill-overs.
    pub design_stocks: Vec<f64>,

    pub prices: Vec<Vec<f64>>,
    pub marginal_costs: Vec<Vec<f64>>,
    pub value_added_prices: Vec<Vec<f64>>,
    pub output: Vec<Vec<f64>>,
    /// Zero-profit output at current prices.
    pub output_target: Vec<Vec<f64>>,
    pub final_profits: Vec<Vec<f64>>,
    /// Subsidy received per final-goods firm.
    pub final_subsidies: Vec<Vec<f64>>,
    pub demand: Vec<Vec<DemandBreakdown>>,
    /// Durable-goods and labour aggregates per final-goods firm.
    pub durable_input: Vec<Vec<f64>>,
    pub labour_input: Vec<Vec<f64>>,

    pub intermediate_prices: Vec<Vec<f64>>,
    pub consumer_prices: Vec<f64>,
    pub consumer_price_changes: Vec<f64>,
    pub durable_prices: Vec<f64>,
    pub durable_indices: Vec<f64>,
    pub wage_indices: Vec<f64>,
    pub rental_rates: Vec<f64>,
    pub durable_output: Vec<f64>,
    pub durable_target: Vec<f64>,
    pub investment: Vec<f64>,
    pub durable_expected_profit: Vec<f64>,
    /// Cash profit of all durable-goods firms of the region.
    pub durable_cash_profit: Vec<f64>,
    pub innovation_probability: Vec<f64>,
    pub equity_values: Vec<f64>,
    pub human_capital_stock: Vec<f64>,

    pub wages: Vec<[f64; SKILLS]>,
    pub labour: Vec<[f64; SKILLS]>,
    pub labour_final: Vec<[f64; SKILLS]>,
    /// High-skill labour per household employed in R&D.
    pub labour_rd: Vec<f64>,
    pub wage_changes: Vec<[f64; SKILLS]>,
    pub wage_inflation: Vec<[f64; SKILLS]>,

    pub rd_wage_indices: Vec<f64>,
    pub design_prices: Vec<f64>,
    pub new_designs: Vec<f64>,
    pub design_demand: Vec<f64>,
    pub rd_labour: Vec<f64>,
    pub bond_rates: Vec<f64>,

    pub disposable_income: Vec<f64>,
    pub capital_income: Vec<f64>,
    pub adjustment_cost: Vec<f64>,
    pub savings: Vec<f64>,
    pub consumption: Vec<f64>,

    /// Real regional public spending and its investment part.
    pub gov_spending: Vec<f64>,
    pub public_investment: Vec<f64>,
    /// Total real purchases of the regional basket.
    pub basket: Vec<f64>,

    pub tax_revenue: Vec<f64>,
    pub deficit: Vec<f64>,
    pub national_subsidies: Vec<f64>,
    pub eu_contribution: Vec<f64>,
    pub eu_budget: f64,
    pub exports: Vec<f64>,
    pub imports: Vec<f64>,
    pub trade_balance: Vec<f64>,
    pub current_account: Vec<f64>,
    pub gdp_region: Vec<f64>,
    pub gdp_country: Vec<f64>,
    pub gdp: f64,
    pub total_savings: f64,
    pub walras: f64,

    pub residual_norm: f64,
    pub iterations: usize,
}

impl EquilibriumSolution {
    pub fn trade_balance_total(&self) -> f64 {
        self.trade_balance.iter().sum()
    }
}

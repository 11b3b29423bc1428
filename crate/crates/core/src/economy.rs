//! Shared data model: topology, behavioural parameters, exogenous fiscal
//! inputs and the stocks carried between periods.
//!
//! Index conventions used throughout the crate:
//!
//! * regions `0..R` where the last index `R - 1` is the rest of the world;
//! * sectors `0..S` where the last index `S - 1` is the foreign sector whose
//!   single variety is produced only in the rest of the world;
//! * per-region skill arrays are `[low, medium, high]`.
//!
//! Stocks and firm counts are stored for domestic cells only, so the
//! foreign-sector restrictions (`N[S,r] = 0` for domestic `r`, `N[s,R] = 0`
//! for domestic `s`, `N[S,R] = 1`) hold structurally.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of skill levels supplied by every household.
pub const SKILLS: usize = 3;

/// Skill level of a labour variety.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Skill {
    Low,
    Medium,
    High,
}

impl Skill {
    pub const ALL: [Skill; SKILLS] = [Skill::Low, Skill::Medium, Skill::High];

    pub fn index(self) -> usize {
        match self {
            Skill::Low => 0,
            Skill::Medium => 1,
            Skill::High => 2,
        }
    }
}

impl fmt::Display for Skill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Skill::Low => "lo",
            Skill::Medium => "me",
            Skill::High => "hi",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// Total region count including the rest of the world.
    pub regions: usize,
    pub countries: usize,
    /// Country of each domestic region (length `regions - 1`).
    pub region_country: Vec<usize>,
    /// Representative-household weights per domestic region.
    pub households: Vec<f64>,
    /// Total sector count including the foreign sector.
    pub sectors: usize,
    /// Iceberg trade costs indexed `[sector][origin][destination]`.
    pub trade_costs: Vec<Vec<Vec<f64>>>,
}

impl Topology {
    pub fn domestic_regions(&self) -> usize {
        self.regions - 1
    }

    pub fn domestic_sectors(&self) -> usize {
        self.sectors - 1
    }

    pub fn foreign_region(&self) -> usize {
        self.regions - 1
    }

    pub fn foreign_sector(&self) -> usize {
        self.sectors - 1
    }

    pub fn tau(&self, sector: usize, origin: usize, destination: usize) -> f64 {
        self.trade_costs[sector][origin][destination]
    }

    pub fn country_of(&self, region: usize) -> usize {
        self.region_country[region]
    }

    /// Domestic regions belonging to `country`, in index order.
    pub fn regions_in(&self, country: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.domestic_regions()).filter(move |&r| self.region_country[r] == country)
    }

    pub fn country_population(&self, country: usize) -> f64 {
        self.regions_in(country).map(|r| self.households[r]).sum()
    }

    pub fn domestic_population(&self) -> f64 {
        self.households.iter().sum()
    }
}

/// Behavioural and technology parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParameters {
    /// Goods CES curvature.
    pub theta: f64,
    /// Durable-goods CES curvature.
    pub rho: f64,
    /// Labour CES curvature.
    pub sigma: f64,
    /// Labour-supply elasticity parameter of the leisure sub-utility.
    pub kappa: f64,
    pub leisure_weight: [f64; SKILLS],
    pub skill_productivity: [f64; SKILLS],
    #[serde(default = "defaults::zero")]
    pub wage_adjustment_cost: f64,
    pub saving_rate: f64,
    /// Sector preference weights, one per sector including the foreign one.
    pub sector_weight: Vec<f64>,
    /// Durable-goods share in value added, per domestic sector.
    pub capital_share: Vec<f64>,
    #[serde(default = "defaults::zero")]
    pub public_capital_elasticity: f64,
    /// Intermediate input requirement per unit of output,
    /// `[country][buying sector][supplying sector]`, supplying sector over all sectors.
    pub technical_coefficients: Vec<Vec<Vec<f64>>>,
    /// Final-goods fixed cost per firm in value-added units, `[sector][region]`.
    pub fixed_cost_final: Vec<Vec<f64>>,
    /// Durable-goods fixed cost per firm in currency, per domestic region.
    pub fixed_cost_durable: Vec<f64>,
    pub capital_depreciation: f64,
    pub human_capital_depreciation: f64,
    /// Elasticity of design output to the union design stock.
    #[serde(default = "defaults::zero")]
    pub rd_spillover_union: f64,
    /// Elasticity of design output to the national design stock.
    #[serde(default = "defaults::zero")]
    pub rd_spillover_national: f64,
    pub rd_supply_elasticity: f64,
    /// Weight of the durable-firm share in the innovation probability.
    pub innovation_weight: f64,
    pub entry_speed: f64,
    /// `[country][sector]`, sector over all sectors.
    pub consumption_tax: Vec<Vec<f64>>,
    pub wage_tax: Vec<f64>,
    pub capital_income_tax: Vec<f64>,
    /// Price of the foreign variety; the numeraire.
    #[serde(default = "defaults::unit")]
    pub foreign_price: f64,
    pub foreign_return: f64,
    /// Exogenous income of the rest of the world (numeraire units).
    pub foreign_income: f64,
    /// Fixed share of foreign income spent on domestic varieties.
    pub foreign_domestic_share: f64,
    /// Floor applied to the innovation probability.
    #[serde(default = "defaults::phi_floor")]
    pub phi_floor: f64,
}

/// Values of the optional parameters.
pub mod defaults {
    pub const OPTIONAL_PARAMETERS: [(&str, f64); 6] = [
        ("wage_adjustment_cost", 0.0),
        ("public_capital_elasticity", 0.0),
        ("rd_spillover_union", 0.0),
        ("rd_spillover_national", 0.0),
        ("foreign_price", 1.0),
        ("phi_floor", 1e-6),
    ];

    pub fn zero() -> f64 {
        0.0
    }

    pub fn unit() -> f64 {
        1.0
    }

    pub fn phi_floor() -> f64 {
        1e-6
    }
}

impl ModelParameters {
    pub fn foreign_expenditure(&self) -> f64 {
        self.foreign_income * self.foreign_domestic_share
    }
}

/// Exogenous public-sector levels and policy-controlled inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiscalInputs {
    /// National government consumption plus investment in basket units, per country.
    pub gov_spending: Vec<f64>,
    /// Fraction of regional public spending that is investment, per country.
    pub investment_share: Vec<f64>,
    /// Transfers to households per country (currency).
    pub household_transfers: Vec<f64>,
    /// EU transfers received per domestic region (currency).
    pub eu_transfers: Vec<f64>,
    /// National subsidy envelope per final-goods cell `[sector][region]`.
    pub final_subsidy_national: Vec<Vec<f64>>,
    /// EU subsidy envelope per final-goods cell `[sector][region]`.
    pub final_subsidy_eu: Vec<Vec<f64>>,
    pub durable_subsidy_national: Vec<f64>,
    pub durable_subsidy_eu: Vec<f64>,
    /// National R&D subsidy per design, per country.
    pub rd_subsidy_national: Vec<f64>,
    /// EU R&D subsidy per design, per country.
    pub rd_subsidy_eu: Vec<f64>,
    /// Education time per region and skill.
    pub education: Vec<[f64; SKILLS]>,
}

/// Values of the previous period needed for wage inflation and capital gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct History {
    pub wages: Vec<[f64; SKILLS]>,
    pub consumer_prices: Vec<f64>,
}

/// Variables carried between periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StockState {
    /// Physical capital per durable-goods firm at the start of the period.
    pub capital: Vec<f64>,
    pub public_capital: Vec<f64>,
    /// Human capital per household, `[region][skill]`.
    pub human_capital: Vec<[f64; SKILLS]>,
    /// Final-goods firm counts `[sector][region]`.
    pub firms: Vec<Vec<f64>>,
    pub durable_firms: Vec<f64>,
    /// Design stock per country.
    pub designs: Vec<f64>,
    /// Fraction of region `r`'s durable capital owned by one household of
    /// region `q`, `[q][r]`. Household-weighted columns sum to one.
    pub equity_shares: Vec<Vec<f64>>,
    /// Government bonds of country `m` held by one household of region `q`, `[q][m]`.
    pub gov_bonds: Vec<Vec<f64>>,
    pub foreign_bonds: Vec<f64>,
    pub gov_debt: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<History>,
}

/// A complete economy: everything a period solve needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Economy {
    pub topology: Topology,
    pub params: ModelParameters,
    pub fiscal: FiscalInputs,
    pub stocks: StockState,
}

/// Outcome of [`validate_economy`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("pass");
        }
        writeln!(f, "fail ({} violations)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

struct Checker<'a> {
    report: &'a mut ValidationReport,
}

impl Checker<'_> {
    fn fail(&mut self, msg: String) {
        self.report.violations.push(msg);
    }

    fn len(&mut self, name: &str, got: usize, want: usize) -> bool {
        if got != want {
            self.fail(format!("{name}: expected length {want}, found {got}"));
            false
        } else {
            true
        }
    }

    fn curvature(&mut self, name: &str, v: f64) {
        if !(v > 0.0 && v < 1.0) {
            self.fail(format!("{name}={v}: curvature outside (0,1)"));
        }
    }

    fn rate(&mut self, name: &str, v: f64) {
        if !(0.0..=1.0).contains(&v) {
            self.fail(format!("{name}={v}: rate outside [0,1]"));
        }
    }

    fn nonneg(&mut self, name: &str, v: f64) {
        if !(v >= 0.0 && v.is_finite()) {
            self.fail(format!("{name}={v}: must be a finite non-negative value"));
        }
    }

    fn positive(&mut self, name: &str, v: f64) {
        if !(v > 0.0 && v.is_finite()) {
            self.fail(format!("{name}={v}: must be strictly positive"));
        }
    }

    fn finite(&mut self, name: &str, v: f64) {
        if !v.is_finite() {
            self.fail(format!("{name}={v}: must be finite"));
        }
    }
}

/// Checks every structural and parameter invariant. Never aborts; a passing
/// report is required before solving.
pub fn validate_economy(economy: &Economy) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut c = Checker {
        report: &mut report,
    };
    let t = &economy.topology;
    let p = &economy.params;
    let f = &economy.fiscal;
    let st = &economy.stocks;

    if t.regions < 2 {
        c.fail(format!(
            "regions={}: need at least one domestic region plus the rest of the world",
            t.regions
        ));
        return report;
    }
    if t.sectors < 2 {
        c.fail(format!(
            "sectors={}: need at least one domestic sector plus the foreign sector",
            t.sectors
        ));
        return report;
    }
    if t.countries == 0 {
        c.fail("countries=0: need at least one country".into());
        return report;
    }
    let dr = t.domestic_regions();
    let ds = t.domestic_sectors();
    let (nr, ns, nm) = (t.regions, t.sectors, t.countries);

    if c.len("region_country", t.region_country.len(), dr) {
        for (r, &m) in t.region_country.iter().enumerate() {
            if m >= nm {
                c.fail(format!("region_country[{r}]={m}: country index out of range"));
            }
        }
        for m in 0..nm {
            if t.regions_in(m).next().is_none() {
                c.fail(format!("country {m} has no regions"));
            }
        }
    }
    if c.len("households", t.households.len(), dr) {
        for (r, &h) in t.households.iter().enumerate() {
            c.positive(&format!("households[{r}]"), h);
        }
    }
    if c.len("trade_costs", t.trade_costs.len(), ns) {
        for (s, by_origin) in t.trade_costs.iter().enumerate() {
            if !c.len(&format!("trade_costs[{s}]"), by_origin.len(), nr) {
                continue;
            }
            for (r, row) in by_origin.iter().enumerate() {
                if !c.len(&format!("trade_costs[{s}][{r}]"), row.len(), nr) {
                    continue;
                }
                for (q, &tau) in row.iter().enumerate() {
                    if !(tau >= 1.0 && tau.is_finite()) {
                        c.fail(format!("tau[{s},{r},{q}]={tau}: trade cost below 1"));
                    }
                }
            }
        }
    }

    c.curvature("theta", p.theta);
    c.curvature("rho", p.rho);
    c.curvature("sigma", p.sigma);
    c.nonneg("kappa", p.kappa);
    for e in 0..SKILLS {
        c.positive(&format!("leisure_weight[{e}]"), p.leisure_weight[e]);
        c.positive(&format!("skill_productivity[{e}]"), p.skill_productivity[e]);
    }
    c.nonneg("wage_adjustment_cost", p.wage_adjustment_cost);
    if !(p.saving_rate > 0.0 && p.saving_rate < 1.0) {
        c.fail(format!("saving_rate={}: must lie in (0,1)", p.saving_rate));
    }
    if c.len("sector_weight", p.sector_weight.len(), ns) {
        for (s, &b) in p.sector_weight.iter().enumerate() {
            c.positive(&format!("sector_weight[{s}]"), b);
        }
    }
    if c.len("capital_share", p.capital_share.len(), ds) {
        for (s, &a) in p.capital_share.iter().enumerate() {
            if !(a > 0.0 && a < 1.0) {
                c.fail(format!("capital_share[{s}]={a}: must lie in (0,1)"));
            }
        }
    }
    c.nonneg("public_capital_elasticity", p.public_capital_elasticity);
    if c.len("technical_coefficients", p.technical_coefficients.len(), nm) {
        for (m, by_sector) in p.technical_coefficients.iter().enumerate() {
            if !c.len(&format!("technical_coefficients[{m}]"), by_sector.len(), ds) {
                continue;
            }
            for (s, row) in by_sector.iter().enumerate() {
                if !c.len(&format!("technical_coefficients[{m}][{s}]"), row.len(), ns) {
                    continue;
                }
                for (u, &a) in row.iter().enumerate() {
                    c.nonneg(&format!("technical_coefficients[{m}][{s}][{u}]"), a);
                }
            }
        }
    }
    if c.len("fixed_cost_final", p.fixed_cost_final.len(), ds) {
        for (s, row) in p.fixed_cost_final.iter().enumerate() {
            if c.len(&format!("fixed_cost_final[{s}]"), row.len(), dr) {
                for (r, &v) in row.iter().enumerate() {
                    c.nonneg(&format!("fixed_cost_final[{s}][{r}]"), v);
                }
            }
        }
    }
    if c.len("fixed_cost_durable", p.fixed_cost_durable.len(), dr) {
        for (r, &v) in p.fixed_cost_durable.iter().enumerate() {
            c.nonneg(&format!("fixed_cost_durable[{r}]"), v);
        }
    }
    c.rate("capital_depreciation", p.capital_depreciation);
    c.rate("human_capital_depreciation", p.human_capital_depreciation);
    if !(p.rd_spillover_union < 1.0 && p.rd_spillover_union >= 0.0) {
        c.fail(format!(
            "rd_spillover_union={}: spill-over elasticity must lie in [0,1)",
            p.rd_spillover_union
        ));
    }
    if !(p.rd_spillover_national < 1.0 && p.rd_spillover_national >= 0.0) {
        c.fail(format!(
            "rd_spillover_national={}: spill-over elasticity must lie in [0,1)",
            p.rd_spillover_national
        ));
    }
    c.curvature("rd_supply_elasticity", p.rd_supply_elasticity);
    c.curvature("innovation_weight", p.innovation_weight);
    if !(p.entry_speed > 0.0 && p.entry_speed <= 1.0) {
        c.fail(format!("entry_speed={}: must lie in (0,1]", p.entry_speed));
    }
    if c.len("consumption_tax", p.consumption_tax.len(), nm) {
        for (m, row) in p.consumption_tax.iter().enumerate() {
            if c.len(&format!("consumption_tax[{m}]"), row.len(), ns) {
                for (s, &v) in row.iter().enumerate() {
                    c.rate(&format!("consumption_tax[{m}][{s}]"), v);
                }
            }
        }
    }
    if c.len("wage_tax", p.wage_tax.len(), nm) {
        for (m, &v) in p.wage_tax.iter().enumerate() {
            if !(0.0..1.0).contains(&v) {
                c.fail(format!("wage_tax[{m}]={v}: rate outside [0,1)"));
            }
        }
    }
    if c.len("capital_income_tax", p.capital_income_tax.len(), nm) {
        for (m, &v) in p.capital_income_tax.iter().enumerate() {
            c.rate(&format!("capital_income_tax[{m}]"), v);
        }
    }
    if p.foreign_price != 1.0 {
        c.fail(format!(
            "foreign_price={}: the foreign variety is the numeraire and must equal 1",
            p.foreign_price
        ));
    }
    c.nonneg("foreign_return", p.foreign_return);
    c.nonneg("foreign_income", p.foreign_income);
    c.rate("foreign_domestic_share", p.foreign_domestic_share);
    if !(p.phi_floor > 0.0 && p.phi_floor < 1.0) {
        c.fail(format!("phi_floor={}: must lie in (0,1)", p.phi_floor));
    }

    // fiscal inputs
    if c.len("gov_spending", f.gov_spending.len(), nm) {
        for (m, &v) in f.gov_spending.iter().enumerate() {
            c.nonneg(&format!("gov_spending[{m}]"), v);
        }
    }
    if c.len("investment_share", f.investment_share.len(), nm) {
        for (m, &v) in f.investment_share.iter().enumerate() {
            c.rate(&format!("investment_share[{m}]"), v);
        }
    }
    if c.len("household_transfers", f.household_transfers.len(), nm) {
        for (m, &v) in f.household_transfers.iter().enumerate() {
            c.finite(&format!("household_transfers[{m}]"), v);
        }
    }
    if c.len("eu_transfers", f.eu_transfers.len(), dr) {
        for (r, &v) in f.eu_transfers.iter().enumerate() {
            c.nonneg(&format!("eu_transfers[{r}]"), v);
        }
    }
    for (name, grid) in [
        ("final_subsidy_national", &f.final_subsidy_national),
        ("final_subsidy_eu", &f.final_subsidy_eu),
    ] {
        if c.len(name, grid.len(), ds) {
            for (s, row) in grid.iter().enumerate() {
                if c.len(&format!("{name}[{s}]"), row.len(), dr) {
                    for (r, &v) in row.iter().enumerate() {
                        c.nonneg(&format!("{name}[{s}][{r}]"), v);
                    }
                }
            }
        }
    }
    for (name, v, n) in [
        ("durable_subsidy_national", &f.durable_subsidy_national, dr),
        ("durable_subsidy_eu", &f.durable_subsidy_eu, dr),
        ("rd_subsidy_national", &f.rd_subsidy_national, nm),
        ("rd_subsidy_eu", &f.rd_subsidy_eu, nm),
    ] {
        if c.len(name, v.len(), n) {
            for (i, &x) in v.iter().enumerate() {
                c.nonneg(&format!("{name}[{i}]"), x);
            }
        }
    }
    if c.len("education", f.education.len(), dr) {
        for (r, row) in f.education.iter().enumerate() {
            for (e, &x) in row.iter().enumerate() {
                c.nonneg(&format!("education[{r}][{e}]"), x);
            }
        }
    }

    // stocks
    for (name, v) in [
        ("capital", &st.capital),
        ("public_capital", &st.public_capital),
        ("foreign_bonds", &st.foreign_bonds),
    ] {
        if c.len(name, v.len(), dr) {
            for (r, &x) in v.iter().enumerate() {
                if name == "foreign_bonds" {
                    c.finite(&format!("{name}[{r}]"), x);
                } else {
                    c.nonneg(&format!("{name}[{r}]"), x);
                }
            }
        }
    }
    if p.public_capital_elasticity > 0.0 && st.public_capital.len() == dr {
        for (r, &kg) in st.public_capital.iter().enumerate() {
            if kg <= 0.0 {
                c.fail(format!(
                    "public_capital[{r}]=0 with positive public-capital elasticity"
                ));
            }
        }
    }
    if c.len("human_capital", st.human_capital.len(), dr) {
        for (r, row) in st.human_capital.iter().enumerate() {
            for (e, &x) in row.iter().enumerate() {
                c.positive(&format!("human_capital[{r}][{e}]"), x);
            }
        }
    }
    if c.len("firms", st.firms.len(), ds) {
        for (s, row) in st.firms.iter().enumerate() {
            if c.len(&format!("firms[{s}]"), row.len(), dr) {
                for (r, &x) in row.iter().enumerate() {
                    c.positive(&format!("firms[{s}][{r}]"), x);
                }
            }
        }
    }
    if c.len("durable_firms", st.durable_firms.len(), dr) {
        for (r, &x) in st.durable_firms.iter().enumerate() {
            c.positive(&format!("durable_firms[{r}]"), x);
        }
    }
    if c.len("designs", st.designs.len(), nm) {
        for (m, &x) in st.designs.iter().enumerate() {
            if p.rd_spillover_national > 0.0 || p.rd_spillover_union > 0.0 {
                c.positive(&format!("designs[{m}]"), x);
            } else {
                c.nonneg(&format!("designs[{m}]"), x);
            }
        }
    }
    if c.len("equity_shares", st.equity_shares.len(), dr) {
        let mut ok = true;
        for (q, row) in st.equity_shares.iter().enumerate() {
            ok &= c.len(&format!("equity_shares[{q}]"), row.len(), dr);
            for (r, &x) in row.iter().enumerate() {
                c.nonneg(&format!("equity_shares[{q}][{r}]"), x);
            }
        }
        if ok && t.households.len() == dr {
            for r in 0..dr {
                let total: f64 = (0..dr)
                    .map(|q| t.households[q] * st.equity_shares[q][r])
                    .sum();
                if (total - 1.0).abs() > 1e-9 {
                    c.fail(format!(
                        "equity shares of region {r} sum to {total}, not to the issued assets"
                    ));
                }
            }
        }
    }
    if c.len("gov_bonds", st.gov_bonds.len(), dr) {
        let mut ok = true;
        for (q, row) in st.gov_bonds.iter().enumerate() {
            ok &= c.len(&format!("gov_bonds[{q}]"), row.len(), nm);
            for (m, &x) in row.iter().enumerate() {
                c.finite(&format!("gov_bonds[{q}][{m}]"), x);
            }
        }
        if ok && c.len("gov_debt", st.gov_debt.len(), nm) && t.households.len() == dr {
            for m in 0..nm {
                let held: f64 = (0..dr).map(|q| t.households[q] * st.gov_bonds[q][m]).sum();
                let debt = st.gov_debt[m];
                if (held - debt).abs() > 1e-9 * debt.abs().max(1.0) {
                    c.fail(format!(
                        "bonds of country {m} held by households ({held}) differ from debt ({debt})"
                    ));
                }
            }
        }
    }
    if let Some(h) = &st.history {
        if c.len("history.wages", h.wages.len(), dr) {
            for (r, row) in h.wages.iter().enumerate() {
                for (e, &w) in row.iter().enumerate() {
                    c.positive(&format!("history.wages[{r}][{e}]"), w);
                }
            }
        }
        if c.len("history.consumer_prices", h.consumer_prices.len(), dr) {
            for (r, &x) in h.consumer_prices.iter().enumerate() {
                c.positive(&format!("history.consumer_prices[{r}]"), x);
            }
        }
    }

    report
}

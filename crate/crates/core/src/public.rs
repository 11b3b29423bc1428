//! National and regional government accounts, the EU budget and the policy
//! instruments that shift fiscal inputs, trade costs and stocks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ces;
use crate::economy::{Economy, Skill};
use crate::error::ModelError;
use crate::goods::{GoodsMarket, VarietyId};

/// Public spending of one region: its population share of the national
/// envelope plus the EU transfer it receives.
pub fn regional_budget(national: f64, households: f64, country_population: f64, eu_transfer: f64) -> f64 {
    households / country_population * national + eu_transfer
}

/// Government demand in region `q` for one variety of `v`.
#[allow(clippy::too_many_arguments)]
pub fn gov_demand(
    market: &GoodsMarket<'_>,
    v: VarietyId,
    q: usize,
    taxes: &[f64],
    weights: &[f64],
    theta: f64,
    consumer_price: f64,
    spending: f64,
) -> Result<f64, ModelError> {
    let rec = market.variety(v, q, Some(taxes), Some(weights));
    crate::error::ensure_positive("effective price", rec.price)?;
    Ok(ces::demand(rec.price, rec.weight, consumer_price, theta, spending))
}

/// Tax bases of one country for one period.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaxBases {
    /// Purchases net of tax, `tau p q`, per sector.
    pub consumption: Vec<f64>,
    pub wage_bill: f64,
    pub capital_income: f64,
}

pub fn tax_revenue(bases: &TaxBases, consumption_tax: &[f64], wage_tax: f64, capital_income_tax: f64) -> f64 {
    bases
        .consumption
        .iter()
        .zip(consumption_tax)
        .map(|(b, t)| b * t)
        .sum::<f64>()
        + wage_tax * bases.wage_bill
        + capital_income_tax * bases.capital_income
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DeficitInputs {
    /// Value of regional public spending, summed over the country's regions.
    pub spending: f64,
    pub household_transfers: f64,
    pub eu_contribution: f64,
    pub bond_rate: f64,
    pub debt: f64,
    /// Nationally funded subsidies.
    pub subsidies: f64,
    pub revenue: f64,
    /// EU transfers received by the country's regions.
    pub eu_transfers: f64,
}

pub fn deficit(i: &DeficitInputs) -> f64 {
    i.spending + i.household_transfers + i.eu_contribution + i.bond_rate * i.debt + i.subsidies
        - i.revenue
        - i.eu_transfers
}

/// Contribution of a country to the EU budget in proportion to its GDP.
pub fn eu_contribution(gdp_country: f64, gdp_union: f64, budget: f64) -> f64 {
    if budget == 0.0 {
        return 0.0;
    }
    gdp_country / gdp_union * budget
}

pub fn public_capital_step(stock: f64, investment: f64, depreciation: f64) -> f64 {
    stock + investment - depreciation * stock
}

/// Policy instrument kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentKind {
    /// Adds `magnitude` to the EU R&D subsidy per design of the region's country.
    RtdSubsidy,
    /// Adds `magnitude` to the education time of one skill (all skills if omitted).
    HumanCapital,
    /// Multiplies trade costs on the targeted routes by `magnitude`.
    TradeCostReduction,
    /// Adds `magnitude` to the regional public-capital stock once per period in the window.
    PublicCapital,
    /// Adds `magnitude` to the EU final-goods subsidy envelope of the targeted cells.
    FinalGoodsSubsidy,
    /// Adds `magnitude` to the EU durable-goods subsidy envelope.
    DurableGoodsSubsidy,
    /// Adds `magnitude` to the EU transfer received by the region.
    TechnicalAssistance,
}

/// One timed intervention. `cost` is the EU money spent on the measure; it
/// enters the region's public spending through its EU transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyInstrument {
    pub kind: InstrumentKind,
    pub region: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skill: Option<Skill>,
    /// Destination region of a trade-cost reduction; all routes into and out
    /// of `region` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<usize>,
    pub magnitude: f64,
    #[serde(default)]
    pub cost: f64,
    /// First and last period (inclusive) in which the instrument is active.
    pub start: usize,
    pub end: usize,
}

impl PolicyInstrument {
    pub fn active(&self, period: usize) -> bool {
        (self.start..=self.end).contains(&period)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicyScenario {
    pub name: String,
    pub horizon: usize,
    #[serde(default)]
    pub instruments: Vec<PolicyInstrument>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("instrument {index}: {reason}")]
    InvalidInstrument { index: usize, reason: String },
    #[error("trade cost of sector {sector} from {origin} to {destination} would fall to {value} < 1")]
    TradeCostBelowOne {
        sector: usize,
        origin: usize,
        destination: usize,
        value: f64,
    },
    #[error("instrument {index} would make {stock} negative")]
    NegativeStock { index: usize, stock: String },
}

/// Checks windows and targets against the economy.
pub fn validate_scenario(scenario: &PolicyScenario, economy: &Economy) -> Result<(), PolicyError> {
    let t = &economy.topology;
    for (index, ins) in scenario.instruments.iter().enumerate() {
        let bad = |reason: String| PolicyError::InvalidInstrument { index, reason };
        if ins.start < 1 || ins.end < ins.start || ins.end > scenario.horizon {
            return Err(bad(format!(
                "window [{}, {}] outside [1, {}]",
                ins.start, ins.end, scenario.horizon
            )));
        }
        if !ins.magnitude.is_finite() || !ins.cost.is_finite() {
            return Err(bad("magnitude and cost must be finite".into()));
        }
        if ins.cost < 0.0 {
            return Err(bad("cost must be non-negative".into()));
        }
        let (region_limit, sector_limit) = match ins.kind {
            InstrumentKind::TradeCostReduction => (t.regions, t.sectors),
            _ => (t.domestic_regions(), t.domestic_sectors()),
        };
        if ins.region >= region_limit {
            return Err(bad(format!("region {} does not exist", ins.region)));
        }
        if let Some(s) = ins.sector {
            if s >= sector_limit {
                return Err(bad(format!("sector {s} does not exist")));
            }
        }
        if let Some(p) = ins.partner {
            if p >= t.regions {
                return Err(bad(format!("partner region {p} does not exist")));
            }
        }
        match ins.kind {
            InstrumentKind::TradeCostReduction => {
                if !(ins.magnitude > 0.0 && ins.magnitude <= 1.0) {
                    return Err(bad(format!(
                        "trade-cost multiplier {} outside (0,1]",
                        ins.magnitude
                    )));
                }
                if ins.region == t.foreign_region() && ins.partner.is_none() {
                    return Err(bad("the rest of the world needs an explicit partner".into()));
                }
            }
            _ => {
                if ins.magnitude < 0.0 {
                    return Err(bad(format!("magnitude {} must be non-negative", ins.magnitude)));
                }
            }
        }
    }
    Ok(())
}

/// Routes `(origin, destination)` touched by a trade-cost instrument. Only
/// routes a variety actually ships on are changed: domestic sectors from
/// domestic origins, the foreign sector from the rest of the world.
fn routes(ins: &PolicyInstrument, regions: usize) -> Vec<(usize, usize)> {
    match ins.partner {
        Some(p) => vec![(ins.region, p)],
        None => (0..regions)
            .filter(|&q| q != ins.region)
            .flat_map(|q| [(ins.region, q), (q, ins.region)])
            .collect(),
    }
}

/// Inputs of period `period`: fiscal inputs and trade costs are rebuilt from
/// `baseline`, public-capital shocks are added to its stocks.
pub fn apply_policy(scenario: &PolicyScenario, period: usize, baseline: &Economy) -> Result<Economy, PolicyError> {
    let mut e = baseline.clone();
    for (index, ins) in scenario.instruments.iter().enumerate() {
        if !ins.active(period) {
            continue;
        }
        let r = ins.region;
        match ins.kind {
            InstrumentKind::RtdSubsidy => {
                let m = e.topology.country_of(r);
                e.fiscal.rd_subsidy_eu[m] += ins.magnitude;
            }
            InstrumentKind::HumanCapital => {
                match ins.skill {
                    Some(skill) => e.fiscal.education[r][skill.index()] += ins.magnitude,
                    None => e.fiscal.education[r].iter_mut().for_each(|x| *x += ins.magnitude),
                }
                e.fiscal.eu_transfers[r] += ins.cost;
            }
            InstrumentKind::TradeCostReduction => {
                let sectors: Vec<usize> = match ins.sector {
                    Some(s) => vec![s],
                    None => (0..e.topology.sectors).collect(),
                };
                let (fs, fr) = (e.topology.foreign_sector(), e.topology.foreign_region());
                for s in sectors {
                    for (o, d) in routes(ins, e.topology.regions) {
                        if (s == fs) != (o == fr) {
                            continue;
                        }
                        let tau = &mut e.topology.trade_costs[s][o][d];
                        let value = *tau * ins.magnitude;
                        if value < 1.0 {
                            return Err(PolicyError::TradeCostBelowOne {
                                sector: s,
                                origin: o,
                                destination: d,
                                value,
                            });
                        }
                        *tau = value;
                    }
                }
                if r < e.topology.domestic_regions() {
                    e.fiscal.eu_transfers[r] += ins.cost;
                }
            }
            InstrumentKind::PublicCapital => {
                let kg = e.stocks.public_capital[r] + ins.magnitude;
                if kg < 0.0 {
                    return Err(PolicyError::NegativeStock {
                        index,
                        stock: format!("public_capital[{r}]"),
                    });
                }
                e.stocks.public_capital[r] = kg;
                e.fiscal.eu_transfers[r] += ins.cost;
            }
            InstrumentKind::FinalGoodsSubsidy => match ins.sector {
                Some(s) => e.fiscal.final_subsidy_eu[s][r] += ins.magnitude,
                None => e
                    .fiscal
                    .final_subsidy_eu
                    .iter_mut()
                    .for_each(|row| row[r] += ins.magnitude),
            },
            InstrumentKind::DurableGoodsSubsidy => e.fiscal.durable_subsidy_eu[r] += ins.magnitude,
            InstrumentKind::TechnicalAssistance => e.fiscal.eu_transfers[r] += ins.magnitude + ins.cost,
        }
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn regional_budget_cases() {
        assert_eq!(regional_budget(100.0, 1.0, 2.0, 0.0), 50.0);
        assert_eq!(regional_budget(100.0, 1.0, 2.0, 10.0), 60.0);
        assert_eq!(regional_budget(100.0, 3.0, 3.0, 4.0), 104.0);
    }

    #[test]
    fn gov_demand_cases() {
        let e = fixtures::sym2();
        let prices = vec![vec![1.0, 1.0]];
        let m = GoodsMarket {
            topology: &e.topology,
            prices: &prices,
            foreign_price: 1.0,
            firms: &e.stocks.firms,
        };
        let taxes = &e.params.consumption_tax[0];
        let w = &e.params.sector_weight;
        let th = e.params.theta;
        let pc = crate::household::consumer_price_index(&m, taxes, w, th, 0).unwrap();
        let total: f64 = m
            .all()
            .map(|v| {
                let d = gov_demand(&m, v, 0, taxes, w, th, pc, 3.0).unwrap();
                m.count(v) * m.delivered_price(v, 0, taxes[v.sector]) * d
            })
            .sum();
        assert!((total - pc * 3.0).abs() < 1e-12);
        // regions are mirror images: region 0 buys from 1 what region 1 buys from 0
        let a = gov_demand(&m, VarietyId { sector: 0, region: 1 }, 0, taxes, w, th, pc, 3.0).unwrap();
        let pc1 = crate::household::consumer_price_index(&m, taxes, w, th, 1).unwrap();
        let b = gov_demand(&m, VarietyId { sector: 0, region: 0 }, 1, taxes, w, th, pc1, 3.0).unwrap();
        assert!((a - b).abs() < 1e-14);
        // elasticity 1/(theta-1) = -2 at theta = 0.5
        let d0 = ces::demand(1.0, 1.0, 1.0, 0.5, 1.0);
        let d1 = ces::demand(1.0 + 1e-6, 1.0, 1.0, 0.5, 1.0);
        assert!(((d1.ln() - d0.ln()) / (1e-6f64).ln_1p() + 2.0).abs() < 1e-6);
    }

    #[test]
    fn tax_and_deficit_cases() {
        let zero = TaxBases {
            consumption: vec![10.0],
            wage_bill: 100.0,
            capital_income: 5.0,
        };
        assert_eq!(tax_revenue(&zero, &[0.0], 0.0, 0.0), 0.0);
        let wages = TaxBases {
            consumption: vec![0.0],
            wage_bill: 100.0,
            capital_income: 0.0,
        };
        assert!((tax_revenue(&wages, &[0.1], 0.2, 0.3) - 20.0).abs() < 1e-12);
        let doubled = TaxBases {
            consumption: vec![20.0],
            wage_bill: 200.0,
            capital_income: 10.0,
        };
        let (a, b) = (
            tax_revenue(&zero, &[0.1], 0.2, 0.3),
            tax_revenue(&doubled, &[0.1], 0.2, 0.3),
        );
        assert!((b - 2.0 * a).abs() < 1e-12);

        let balanced = DeficitInputs {
            spending: 50.0,
            household_transfers: 10.0,
            eu_contribution: 5.0,
            bond_rate: 0.03,
            debt: 100.0,
            subsidies: 2.0,
            revenue: 70.0,
            eu_transfers: 0.0,
        };
        assert!(deficit(&balanced).abs() < 1e-12);
        let more = DeficitInputs {
            household_transfers: 15.0,
            ..balanced
        };
        assert!((deficit(&more) - deficit(&balanced) - 5.0).abs() < 1e-12);
        let funded = DeficitInputs {
            spending: 58.0,
            eu_transfers: 8.0,
            ..balanced
        };
        assert!((deficit(&funded) - deficit(&balanced)).abs() < 1e-12);
    }

    #[test]
    fn eu_and_public_capital_cases() {
        assert_eq!(eu_contribution(1.0, 2.0, 10.0), 5.0);
        assert_eq!(eu_contribution(1.0, 2.0, 0.0), 0.0);
        assert_eq!(eu_contribution(3.0, 3.0, 7.0), 7.0);
        assert!((public_capital_step(10.0, 1.0, 0.1) - 10.0).abs() < 1e-15);
        assert!((public_capital_step(10.0, 0.0, 0.1) - 9.0).abs() < 1e-15);
        assert_eq!(public_capital_step(10.0, 2.0, 0.0), 12.0);
    }

    fn instrument(kind: InstrumentKind, magnitude: f64, cost: f64) -> PolicyInstrument {
        PolicyInstrument {
            kind,
            region: 0,
            sector: None,
            skill: None,
            partner: None,
            magnitude,
            cost,
            start: 1,
            end: 2,
        }
    }

    #[test]
    fn apply_policy_cases() {
        let base = fixtures::sym2();
        let empty = PolicyScenario {
            name: "none".into(),
            horizon: 3,
            instruments: vec![],
        };
        assert_eq!(apply_policy(&empty, 1, &base).unwrap(), base);

        let tcr = PolicyScenario {
            name: "tcr".into(),
            horizon: 3,
            instruments: vec![PolicyInstrument {
                sector: Some(0),
                partner: Some(1),
                ..instrument(InstrumentKind::TradeCostReduction, 0.95, 2.0)
            }],
        };
        validate_scenario(&tcr, &base).unwrap();
        let e = apply_policy(&tcr, 1, &base).unwrap();
        assert!((e.topology.trade_costs[0][0][1] - 0.95 * 1.3).abs() < 1e-15);
        assert_eq!(e.topology.trade_costs[0][1][0], 1.3);
        assert_eq!(e.fiscal.eu_transfers[0], 2.0);
        assert_eq!(apply_policy(&tcr, 3, &base).unwrap(), base);

        let kg = PolicyScenario {
            name: "kg".into(),
            horizon: 3,
            instruments: vec![instrument(InstrumentKind::PublicCapital, 10.0, 10.0)],
        };
        let e = apply_policy(&kg, 1, &base).unwrap();
        assert_eq!(e.stocks.public_capital[0], base.stocks.public_capital[0] + 10.0);
        assert!(e.fiscal.eu_transfers[0] > base.fiscal.eu_transfers[0]);

        let too_far = PolicyScenario {
            name: "bad".into(),
            horizon: 3,
            instruments: vec![PolicyInstrument {
                sector: Some(0),
                partner: Some(0),
                ..instrument(InstrumentKind::TradeCostReduction, 0.9, 0.0)
            }],
        };
        assert!(matches!(
            apply_policy(&too_far, 1, &base),
            Err(PolicyError::TradeCostBelowOne { .. })
        ));
        let late = PolicyScenario {
            horizon: 1,
            ..kg.clone()
        };
        assert!(validate_scenario(&late, &base).is_err());
    }
}

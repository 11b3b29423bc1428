//! Final-goods firms, national R&D sectors and durable-goods firms.
//!
//! Final-goods technology is Leontief in value added and intermediate
//! indices, with input requirement `a[u]` per unit of output; value added is
//! Cobb-Douglas in a durable-goods CES aggregate and a labour CES aggregate,
//! shifted by regional public capital.

use crate::ces::{self, Variety};
use crate::economy::SKILLS;
use crate::error::{domain, ensure_positive, ModelError};
use crate::goods::GoodsMarket;

/// Price indices faced by the firms of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPrices {
    /// Intermediate price index per supplying sector (foreign sector last).
    pub intermediate: Vec<f64>,
    pub durable: f64,
    pub wage: f64,
}

/// Intermediate price index of sector `u` for buyers in region `r`.
/// Consumption taxes do not apply to intermediates.
pub fn intermediate_price_index(
    market: &GoodsMarket<'_>,
    u: usize,
    r: usize,
    theta: f64,
) -> Result<f64, ModelError> {
    ces::price_index(market.of_sector(u).map(|v| market.variety(v, r, None, None)), theta)
}

/// Durable-goods price index of a region with `count` symmetric firms.
pub fn durable_price_index(count: f64, price: f64, rho: f64) -> Result<f64, ModelError> {
    ces::price_index([Variety::unweighted(count, price)], rho)
}

/// Labour price index over the skill varieties of `households` symmetric
/// households. Prices per efficiency unit are `w / b`.
pub fn wage_index(
    households: f64,
    wages: &[f64; SKILLS],
    human_capital: &[f64; SKILLS],
    skill_productivity: &[f64; SKILLS],
    sigma: f64,
) -> Result<f64, ModelError> {
    let mut vs = Vec::with_capacity(SKILLS);
    for e in 0..SKILLS {
        let b = ensure_positive("human capital", human_capital[e])?;
        vs.push(Variety::new(households, skill_productivity[e], wages[e] / b));
    }
    ces::price_index(vs, sigma)
}

/// Wage index of a national R&D sector over the high-skill varieties of its
/// regions, given `(households, high-skill wage, high-skill human capital)`.
pub fn rd_wage_index<I>(regions: I, sigma: f64) -> Result<f64, ModelError>
where
    I: IntoIterator<Item = (f64, f64, f64)>,
{
    let mut vs = Vec::new();
    for (h, w, b) in regions {
        let b = ensure_positive("human capital", b)?;
        vs.push(Variety::unweighted(h, w / b));
    }
    ces::price_index(vs, sigma)
}

#[allow(clippy::too_many_arguments)]
pub fn factor_price_indices(
    market: &GoodsMarket<'_>,
    r: usize,
    durable_firms: f64,
    durable_price: f64,
    households: f64,
    wages: &[f64; SKILLS],
    human_capital: &[f64; SKILLS],
    skill_productivity: &[f64; SKILLS],
    theta: f64,
    rho: f64,
    sigma: f64,
) -> Result<FactorPrices, ModelError> {
    let intermediate = (0..market.topology.sectors)
        .map(|u| intermediate_price_index(market, u, r, theta))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FactorPrices {
        intermediate,
        durable: durable_price_index(durable_firms, durable_price, rho)?,
        wage: wage_index(households, wages, human_capital, skill_productivity, sigma)?,
    })
}

/// Unit cost of the gross value-added composite.
pub fn value_added_price(
    durable_index: f64,
    wage_index: f64,
    public_capital: f64,
    capital_share: f64,
    public_capital_elasticity: f64,
) -> Result<f64, ModelError> {
    if public_capital_elasticity > 0.0 && !(public_capital > 0.0) {
        return Err(domain("public capital is zero with a positive elasticity"));
    }
    ensure_positive("durable price index", durable_index)?;
    let kg = if public_capital_elasticity == 0.0 {
        1.0
    } else {
        public_capital.powf(-public_capital_elasticity)
    };
    let labour = if capital_share == 1.0 {
        1.0
    } else {
        (ensure_positive("wage index", wage_index)? / (1.0 - capital_share)).powf(1.0 - capital_share)
    };
    Ok(kg * (durable_index / capital_share).powf(capital_share) * labour)
}

/// Marginal cost `P^y + sum a[u] P^u` and the markup price `MC / theta`.
pub fn marginal_cost_and_price(
    value_added_price: f64,
    intermediate_prices: &[f64],
    coefficients: &[f64],
    theta: f64,
) -> (f64, f64) {
    let mc = value_added_price
        + coefficients
            .iter()
            .zip(intermediate_prices)
            .map(|(a, p)| a * p)
            .sum::<f64>();
    (mc, mc / theta)
}

/// Cost-minimising durable and labour aggregates producing the gross composite `gross`.
pub fn value_added_factors(
    value_added_price: f64,
    durable_index: f64,
    wage_index: f64,
    capital_share: f64,
    gross: f64,
) -> (f64, f64) {
    let durables = capital_share * value_added_price * gross / durable_index;
    let labour = (1.0 - capital_share) * value_added_price * gross / wage_index;
    (durables, labour)
}

/// Demand for one intermediate variety with delivered price `delivered`.
pub fn intermediate_variety_demand(delivered: f64, index: f64, aggregate: f64, theta: f64) -> f64 {
    ces::demand(delivered, 1.0, index, theta, aggregate)
}

pub fn durable_variety_demand(price: f64, index: f64, aggregate: f64, rho: f64) -> f64 {
    ces::demand(price, 1.0, index, rho, aggregate)
}

/// Physical labour demanded from one household variety.
pub fn labour_variety_demand(
    wage: f64,
    human_capital: f64,
    skill_productivity: f64,
    index: f64,
    aggregate: f64,
    sigma: f64,
) -> f64 {
    (wage / (skill_productivity * human_capital.powf(sigma) * index)).powf(1.0 / (sigma - 1.0))
        * aggregate
}

/// Leontief output given value added and `(requirement, input)` pairs.
pub fn leontief_output(value_added: f64, inputs: &[(f64, f64)]) -> f64 {
    inputs
        .iter()
        .filter(|(a, _)| *a > 0.0)
        .map(|(a, x)| x / a)
        .fold(value_added, f64::min)
}

/// Profit of a final-goods firm at price `price` and output `output`.
pub fn final_goods_profit(
    price: f64,
    output: f64,
    marginal_cost: f64,
    value_added_price: f64,
    fixed_cost: f64,
    subsidy: f64,
) -> f64 {
    (price - marginal_cost) * output - value_added_price * fixed_cost + subsidy
}

/// Output at which a final-goods firm's pure profit vanishes under markup
/// pricing. `None` when subsidies cover the fixed cost.
pub fn zero_profit_output(
    value_added_price: f64,
    fixed_cost: f64,
    subsidy: f64,
    marginal_cost: f64,
    theta: f64,
) -> Option<f64> {
    let net_fixed = value_added_price * fixed_cost - subsidy;
    (net_fixed > 0.0).then(|| net_fixed / ((1.0 - theta) / theta * marginal_cost))
}

/// Output at which a durable-goods firm's pure profit vanishes.
pub fn zero_profit_durable_output(
    rental_rate: f64,
    consumer_price: f64,
    design_price: f64,
    fixed_cost: f64,
    subsidy: f64,
    rho: f64,
) -> Option<f64> {
    let net_fixed = design_price + fixed_cost - subsidy;
    (net_fixed > 0.0).then(|| net_fixed / ((1.0 - rho) / rho * rental_rate * consumer_price))
}

/// Inputs of a national R&D sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdInputs {
    pub union_stock: f64,
    pub national_stock: f64,
    pub design_price: f64,
    /// National plus EU subsidy per design.
    pub subsidy: f64,
    pub wage_index: f64,
    pub spillover_union: f64,
    pub spillover_national: f64,
    pub supply_elasticity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdOutcome {
    /// Spill-over productivity `J*^omega J_m^zeta`.
    pub productivity: f64,
    pub designs: f64,
    /// CES aggregate of high-skill labour employed.
    pub labour: f64,
}

/// Design supply and the labour aggregate that exhausts revenue.
pub fn rd_balance(i: &RdInputs) -> Result<RdOutcome, ModelError> {
    ensure_positive("R&D wage index", i.wage_index)?;
    let stock_term = |s: f64, e: f64| -> Result<f64, ModelError> {
        if e == 0.0 {
            Ok(1.0)
        } else {
            Ok(ensure_positive("design stock", s)?.powf(e))
        }
    };
    let productivity = stock_term(i.union_stock, i.spillover_union)?
        * stock_term(i.national_stock, i.spillover_national)?;
    let unit_revenue = i.design_price + i.subsidy;
    ensure_positive("design revenue per unit", unit_revenue)?;
    let eps = i.supply_elasticity;
    let designs = (productivity * unit_revenue / i.wage_index).powf(eps / (1.0 - eps));
    let labour = unit_revenue * designs / i.wage_index;
    Ok(RdOutcome {
        productivity,
        designs,
        labour,
    })
}

/// Innovation success probability of each region of one country.
pub fn innovation_probability(
    durable_firms: &[f64],
    human_capital: &[f64],
    weight: f64,
) -> Result<Vec<f64>, ModelError> {
    let total_a: f64 = durable_firms.iter().sum();
    let total_hc: f64 = human_capital.iter().sum();
    durable_firms
        .iter()
        .zip(human_capital)
        .enumerate()
        .map(|(region, (&a, &hc))| {
            if !(a > 0.0) || !(hc > 0.0) {
                return Err(ModelError::DegenerateRegion { region });
            }
            Ok((a / total_a).powf(weight) * (hc / total_hc).powf(1.0 - weight))
        })
        .collect()
}

/// Returns `(price, expected profit)` of a durable-goods firm.
#[allow(clippy::too_many_arguments)]
pub fn durable_pricing_profit(
    rental_rate: f64,
    consumer_price: f64,
    design_price: f64,
    fixed_cost: f64,
    subsidy: f64,
    output: f64,
    probability: f64,
    rho: f64,
) -> (f64, f64) {
    let mc = rental_rate * consumer_price;
    let price = mc / rho;
    let profit = probability * (price * output - mc * output - design_price - fixed_cost + subsidy);
    (price, profit)
}

/// Capital-goods demand for one variety with delivered price `delivered`.
pub fn capital_goods_demand(
    delivered: f64,
    weight: f64,
    consumer_price: f64,
    capital: f64,
    theta: f64,
) -> f64 {
    ces::demand(delivered, weight, consumer_price, theta, capital)
}

/// Returns `(investment, new assets issued)`.
pub fn investment_step(
    capital: f64,
    next_capital: f64,
    depreciation: f64,
    consumer_price: f64,
) -> (f64, f64) {
    let investment = next_capital - capital + depreciation * capital;
    (investment, consumer_price * investment)
}

/// Value added in reduced form when durable firms are symmetric with output `capital`.
pub fn reduced_form_value_added(
    durable_firms: f64,
    capital: f64,
    labour: f64,
    public_capital: f64,
    capital_share: f64,
    public_capital_elasticity: f64,
    rho: f64,
    fixed_cost: f64,
) -> f64 {
    durable_firms.powf(capital_share / rho)
        * capital.powf(capital_share)
        * labour.powf(1.0 - capital_share)
        * public_capital.powf(public_capital_elasticity)
        - fixed_cost
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durable_index_cases() {
        assert!((durable_price_index(1.0, 2.0, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!((durable_price_index(4.0, 1.0, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(durable_price_index(3.0, 1.0, 0.5).unwrap() < durable_price_index(2.0, 1.0, 0.5).unwrap());
    }

    #[test]
    fn value_added_price_cases() {
        assert!((value_added_price(1.0, 1.0, 1.0, 0.5, 0.0).unwrap() - 2.0).abs() < 1e-15);
        let a = value_added_price(1.0, 1.0, 3.0, 0.5, 0.1).unwrap();
        let b = value_added_price(1.0, 1.0, 6.0, 0.5, 0.1).unwrap();
        assert!((b / a - 2f64.powf(-0.1)).abs() < 1e-14);
        assert!((b / a - 0.933).abs() < 1e-3);
        let edge = value_added_price(1.7, 9.0, 2.0, 1.0, 0.2).unwrap();
        assert!((edge - 2f64.powf(-0.2) * 1.7).abs() < 1e-14);
        assert!(value_added_price(1.0, 1.0, 0.0, 0.5, 0.1).is_err());
        // degree-one homogeneity in (P^z, W)
        let h = value_added_price(2.6, 1.4, 1.5, 0.3, 0.1).unwrap()
            / value_added_price(1.3, 0.7, 1.5, 0.3, 0.1).unwrap();
        assert!((h - 2.0).abs() < 1e-14);
    }

    #[test]
    fn markup_cases() {
        let (mc, p) = marginal_cost_and_price(0.8, &[], &[], 0.8);
        assert_eq!(mc, 0.8);
        assert!((p - 1.0).abs() < 1e-15);
        let (mc, p) = marginal_cost_and_price(0.5, &[1.0], &[0.5], 0.5);
        assert!((mc - 1.0).abs() < 1e-15 && (p - 2.0).abs() < 1e-15);
        for (py, th) in [(0.3, 0.4), (2.0, 0.9)] {
            let (mc, p) = marginal_cost_and_price(py, &[1.2, 0.4], &[0.1, 0.3], th);
            assert!((p / mc - 1.0 / th).abs() < 1e-12);
        }
    }

    #[test]
    fn durable_demand_split_and_labour_elasticity() {
        // two identical durable varieties, rho = 0.5, unit prices
        let idx = durable_price_index(2.0, 1.0, 0.5).unwrap();
        assert!((idx - 0.5).abs() < 1e-15);
        let z = durable_variety_demand(1.0, idx, 3.0, 0.5);
        assert!((2.0 * z * 1.0 - idx * 3.0).abs() < 1e-12);
        let l0 = labour_variety_demand(1.0, 1.0, 1.0, 1.0, 1.0, 0.5);
        let l1 = labour_variety_demand(1.01, 1.0, 1.0, 1.0, 1.0, 0.5);
        assert!((l1 / l0 - 1.01f64.powi(-2)).abs() < 1e-12);
        assert!((l1 / l0 - 0.98).abs() < 2e-3);
        // one intermediate variety: expenditure equals index times aggregate
        let tau_p = 1.3;
        let x = intermediate_variety_demand(tau_p, tau_p, 5.0, 0.6);
        assert!((tau_p * x - tau_p * 5.0).abs() < 1e-12);
    }

    #[test]
    fn leontief_cases() {
        assert_eq!(leontief_output(10.0, &[(0.5, 5.0), (0.2, 2.0)]), 10.0);
        assert_eq!(leontief_output(10.0, &[(0.5, 4.0), (0.2, 2.0)]), 8.0);
        assert_eq!(leontief_output(10.0, &[]), 10.0);
        assert_eq!(leontief_output(10.0, &[(0.0, 0.0)]), 10.0);
    }

    #[test]
    fn rd_cases() {
        let base = RdInputs {
            union_stock: 4.0,
            national_stock: 2.0,
            design_price: 1.0,
            subsidy: 0.0,
            wage_index: 1.0,
            spillover_union: 0.0,
            spillover_national: 0.0,
            supply_elasticity: 0.5,
        };
        let o = rd_balance(&base).unwrap();
        assert_eq!(o.productivity, 1.0);
        assert!((o.designs - 1.0).abs() < 1e-15);
        assert!((o.designs - o.productivity * o.labour).abs() < 1e-15);
        let moved = rd_balance(&RdInputs {
            union_stock: 40.0,
            national_stock: 20.0,
            ..base
        })
        .unwrap();
        assert_eq!(moved.designs, o.designs);
        let doubled = rd_balance(&RdInputs {
            design_price: 2.0,
            ..base
        })
        .unwrap();
        assert!((doubled.designs / o.designs - 2.0).abs() < 1e-14);
        // zero profit
        let s = rd_balance(&RdInputs {
            spillover_union: 0.3,
            spillover_national: 0.2,
            subsidy: 0.4,
            wage_index: 1.7,
            ..base
        })
        .unwrap();
        assert!(((1.0 + 0.4) * s.designs - 1.7 * s.labour).abs() < 1e-12);
        assert!(rd_balance(&RdInputs {
            wage_index: 0.0,
            ..base
        })
        .is_err());
    }

    #[test]
    fn innovation_probability_cases() {
        let sym = innovation_probability(&[2.0, 2.0, 2.0], &[1.0, 1.0, 1.0], 0.4).unwrap();
        for phi in sym {
            assert!((phi - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(innovation_probability(&[5.0], &[3.0], 0.4).unwrap(), vec![1.0]);
        let w = innovation_probability(&[3.0, 1.0], &[1.0, 5.0], 1.0).unwrap();
        assert!((w[0] - 0.75).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
        assert_eq!(
            innovation_probability(&[0.0, 1.0], &[1.0, 1.0], 0.5),
            Err(ModelError::DegenerateRegion { region: 0 })
        );
    }

    #[test]
    fn durable_pricing_cases() {
        let (p, _) = durable_pricing_profit(0.1, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.5);
        assert!((p - 0.2).abs() < 1e-15);
        // zero-profit output
        let (rk, pc, pj, fc, rho) = (0.13, 1.2, 0.7, 0.4, 0.6);
        let zstar = (pj + fc) / ((1.0 - rho) / rho * rk * pc);
        let (_, pi) = durable_pricing_profit(rk, pc, pj, fc, 0.0, zstar, 0.8, rho);
        assert!(pi.abs() < 1e-14);
        let (_, full) = durable_pricing_profit(rk, pc, pj, fc, 0.0, 2.0 * zstar, 1.0, rho);
        let (_, half) = durable_pricing_profit(rk, pc, pj, fc, 0.0, 2.0 * zstar, 0.5, rho);
        assert!((half - 0.5 * full).abs() < 1e-14);
    }

    #[test]
    fn investment_cases() {
        assert_eq!(investment_step(10.0, 10.0, 0.1, 1.0).0, 1.0);
        assert_eq!(investment_step(10.0, 10.0, 0.0, 1.0).0, 0.0);
        let (i, da) = investment_step(10.0, 12.0, 0.1, 1.5);
        assert!((i - 3.0).abs() < 1e-15 && (da - 4.5).abs() < 1e-15);
    }

    #[test]
    fn capital_goods_cases() {
        assert!((capital_goods_demand(1.0, 1.0, 1.0, 7.0, 0.5) - 7.0).abs() < 1e-15);
        let a = capital_goods_demand(1.0, 1.0, 0.8, 7.0, 0.5);
        let b = capital_goods_demand(1.1, 1.0, 0.8, 7.0, 0.5);
        assert!((b / a - 1.1f64.powi(-2)).abs() < 1e-14);
    }

    #[test]
    fn reduced_form_matches_ces_route() {
        // symmetric durable firms each producing `k`: Z aggregate = A^(1/rho) k
        let (a_count, k, l, kg, alpha, ag, rho, fc): (f64, f64, f64, f64, f64, f64, f64, f64) = (3.5, 1.7, 2.2, 1.4, 0.35, 0.12, 0.6, 0.3);
        let z_aggregate = (a_count * k.powf(rho)).powf(1.0 / rho);
        let ces_route = z_aggregate.powf(alpha) * l.powf(1.0 - alpha) * kg.powf(ag) - fc;
        let reduced = reduced_form_value_added(a_count, k, l, kg, alpha, ag, rho, fc);
        assert!((ces_route - reduced).abs() < 1e-10 * reduced.abs());
    }
}

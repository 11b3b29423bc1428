//! Small reference economies used by tests, the acceptance suite and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::economy::{Economy, FiscalInputs, ModelParameters, StockState, Topology, SKILLS};

/// Education time that exactly offsets human-capital depreciation.
pub fn replacement_education(depreciation: f64) -> f64 {
    (1.0 + depreciation).ln()
}

/// Two identical domestic regions in one country, one domestic sector plus
/// the foreign sector.
pub fn sym2() -> Economy {
    let regions = 3;
    let sectors = 2;
    let mut tau = vec![vec![vec![1.0; regions]; regions]; sectors];
    for r in 0..2 {
        for q in 0..2 {
            tau[0][r][q] = if r == q { 1.05 } else { 1.3 };
        }
        tau[0][r][2] = 1.5;
        tau[1][2][r] = 1.5;
    }
    let topology = Topology {
        regions,
        countries: 1,
        region_country: vec![0, 0],
        households: vec![1.0, 1.0],
        sectors,
        trade_costs: tau,
    };
    let params = ModelParameters {
        theta: 0.75,
        rho: 0.7,
        sigma: 0.6,
        kappa: 1.0,
        leisure_weight: [0.3, 0.3, 0.3],
        skill_productivity: [0.8, 1.0, 1.3],
        wage_adjustment_cost: 2.0,
        saving_rate: 0.2,
        sector_weight: vec![1.0, 0.6],
        capital_share: vec![0.35],
        public_capital_elasticity: 0.1,
        technical_coefficients: vec![vec![vec![0.2, 0.1]]],
        fixed_cost_final: vec![vec![0.5, 0.5]],
        fixed_cost_durable: vec![0.2, 0.2],
        capital_depreciation: 0.1,
        human_capital_depreciation: 0.05,
        rd_spillover_union: 0.2,
        rd_spillover_national: 0.1,
        rd_supply_elasticity: 0.5,
        innovation_weight: 0.5,
        entry_speed: 0.5,
        consumption_tax: vec![vec![0.1, 0.1]],
        wage_tax: vec![0.2],
        capital_income_tax: vec![0.15],
        foreign_price: 1.0,
        foreign_return: 0.03,
        foreign_income: 20.0,
        foreign_domestic_share: 0.3,
        phi_floor: 1e-6,
    };
    let hc = replacement_education(params.human_capital_depreciation);
    let fiscal = FiscalInputs {
        gov_spending: vec![1.0],
        investment_share: vec![0.5],
        household_transfers: vec![0.5],
        eu_transfers: vec![0.0, 0.0],
        final_subsidy_national: vec![vec![0.0, 0.0]],
        final_subsidy_eu: vec![vec![0.0, 0.0]],
        durable_subsidy_national: vec![0.0, 0.0],
        durable_subsidy_eu: vec![0.0, 0.0],
        rd_subsidy_national: vec![0.0],
        rd_subsidy_eu: vec![0.0],
        education: vec![[hc; SKILLS]; 2],
    };
    let stocks = StockState {
        capital: vec![15.0, 15.0],
        public_capital: vec![1.0, 1.0],
        human_capital: vec![[1.0; SKILLS]; 2],
        firms: vec![vec![1.0, 1.0]],
        durable_firms: vec![0.2, 0.2],
        designs: vec![1.0],
        equity_shares: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        gov_bonds: vec![vec![0.5], vec![0.5]],
        foreign_bonds: vec![0.0, 0.0],
        gov_debt: vec![1.0],
        history: None,
    };
    Economy {
        topology,
        params,
        fiscal,
        stocks,
    }
}

/// A feasible random economy with 2 to 4 domestic regions and 1 to 3
/// domestic sectors, reproducible from `seed`.
pub fn random_economy(seed: u64) -> Economy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dr = rng.gen_range(2..=4usize);
    let ds = rng.gen_range(1..=3usize);
    random_economy_with(&mut rng, dr, ds)
}

/// Random economy of the given domestic size.
pub fn random_economy_sized(seed: u64, domestic_regions: usize, domestic_sectors: usize) -> Economy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_economy_with(&mut rng, domestic_regions, domestic_sectors)
}

fn random_economy_with(rng: &mut ChaCha8Rng, dr: usize, ds: usize) -> Economy {
    let regions = dr + 1;
    let sectors = ds + 1;
    let countries = if dr >= 3 && rng.gen_bool(0.5) { 2 } else { 1 };
    let region_country: Vec<usize> = (0..dr).map(|r| if r < dr / 2 || countries == 1 { 0 } else { 1 }).collect();
    let households: Vec<f64> = (0..dr).map(|_| rng.gen_range(0.8..1.5)).collect();

    let mut tau = vec![vec![vec![1.0; regions]; regions]; sectors];
    for s in 0..ds {
        for r in 0..dr {
            for q in 0..dr {
                tau[s][r][q] = if r == q {
                    rng.gen_range(1.03..1.08)
                } else {
                    rng.gen_range(1.2..1.4)
                };
            }
            tau[s][r][dr] = rng.gen_range(1.4..1.6);
        }
    }
    for q in 0..dr {
        tau[ds][dr][q] = rng.gen_range(1.4..1.6);
    }

    let mut params = ModelParameters {
        theta: rng.gen_range(0.7..0.8),
        rho: rng.gen_range(0.65..0.75),
        sigma: rng.gen_range(0.55..0.65),
        kappa: rng.gen_range(0.9..1.1),
        leisure_weight: [
            rng.gen_range(0.25..0.35),
            rng.gen_range(0.25..0.35),
            rng.gen_range(0.25..0.35),
        ],
        skill_productivity: [
            rng.gen_range(0.7..0.9),
            rng.gen_range(0.9..1.1),
            rng.gen_range(1.1..1.4),
        ],
        wage_adjustment_cost: rng.gen_range(1.5..2.5),
        saving_rate: rng.gen_range(0.15..0.25),
        sector_weight: (0..sectors).map(|_| rng.gen_range(0.6..1.0)).collect(),
        capital_share: (0..ds).map(|_| rng.gen_range(0.3..0.4)).collect(),
        public_capital_elasticity: rng.gen_range(0.05..0.15),
        technical_coefficients: (0..countries)
            .map(|_| {
                (0..ds)
                    .map(|_| (0..sectors).map(|_| rng.gen_range(0.2..0.4) / sectors as f64).collect())
                    .collect()
            })
            .collect(),
        fixed_cost_final: (0..ds)
            .map(|_| (0..dr).map(|_| rng.gen_range(0.4..0.6)).collect())
            .collect(),
        fixed_cost_durable: (0..dr).map(|_| rng.gen_range(0.15..0.25)).collect(),
        capital_depreciation: rng.gen_range(0.08..0.12),
        human_capital_depreciation: rng.gen_range(0.04..0.06),
        rd_spillover_union: rng.gen_range(0.15..0.25),
        rd_spillover_national: rng.gen_range(0.05..0.15),
        rd_supply_elasticity: rng.gen_range(0.45..0.55),
        innovation_weight: rng.gen_range(0.4..0.6),
        entry_speed: rng.gen_range(0.4..0.6),
        consumption_tax: (0..countries)
            .map(|_| (0..sectors).map(|_| rng.gen_range(0.08..0.12)).collect())
            .collect(),
        wage_tax: (0..countries).map(|_| rng.gen_range(0.15..0.25)).collect(),
        capital_income_tax: (0..countries).map(|_| rng.gen_range(0.1..0.2)).collect(),
        foreign_price: 1.0,
        foreign_return: rng.gen_range(0.025..0.035),
        foreign_income: 0.0,
        foreign_domestic_share: rng.gen_range(0.25..0.35),
        phi_floor: 1e-6,
    };

    params.foreign_income = households.iter().sum::<f64>() * rng.gen_range(8.0..12.0);
    let hc = replacement_education(params.human_capital_depreciation);
    let country_pop: Vec<f64> = (0..countries)
        .map(|m| (0..dr).filter(|&r| region_country[r] == m).map(|r| households[r]).sum())
        .collect();
    let fiscal = FiscalInputs {
        gov_spending: country_pop.iter().map(|h| h * rng.gen_range(0.4..0.6)).collect(),
        investment_share: (0..countries).map(|_| rng.gen_range(0.4..0.6)).collect(),
        household_transfers: country_pop.iter().map(|h| h * rng.gen_range(0.2..0.3)).collect(),
        eu_transfers: (0..dr).map(|_| rng.gen_range(0.0..0.05)).collect(),
        final_subsidy_national: (0..ds)
            .map(|_| (0..dr).map(|_| rng.gen_range(0.0..0.02)).collect())
            .collect(),
        final_subsidy_eu: (0..ds)
            .map(|_| (0..dr).map(|_| rng.gen_range(0.0..0.02)).collect())
            .collect(),
        durable_subsidy_national: (0..dr).map(|_| rng.gen_range(0.0..0.02)).collect(),
        durable_subsidy_eu: (0..dr).map(|_| rng.gen_range(0.0..0.02)).collect(),
        rd_subsidy_national: (0..countries).map(|_| rng.gen_range(0.0..0.02)).collect(),
        rd_subsidy_eu: (0..countries).map(|_| rng.gen_range(0.0..0.02)).collect(),
        education: (0..dr).map(|_| [hc; SKILLS]).collect(),
    };

    let firms: Vec<Vec<f64>> = (0..ds)
        .map(|_| (0..dr).map(|r| households[r] * rng.gen_range(0.5..1.5)).collect())
        .collect();
    let durable_firms: Vec<f64> = (0..dr).map(|r| households[r] * rng.gen_range(1.0..3.0)).collect();
    let pop: f64 = households.iter().sum();
    // every household holds the same fraction of every region's equity
    let equity_shares = vec![vec![1.0 / pop; dr]; dr];
    let gov_debt: Vec<f64> = country_pop.iter().map(|h| h * rng.gen_range(0.0..1.0)).collect();
    let gov_bonds: Vec<Vec<f64>> = (0..dr)
        .map(|_| (0..countries).map(|m| gov_debt[m] / pop).collect())
        .collect();
    let stocks = StockState {
        capital: (0..dr).map(|_| rng.gen_range(0.5..1.5)).collect(),
        public_capital: (0..dr).map(|r| households[r] * rng.gen_range(0.5..1.5)).collect(),
        human_capital: (0..dr)
            .map(|_| [rng.gen_range(0.8..1.2), rng.gen_range(0.9..1.3), rng.gen_range(1.0..1.4)])
            .collect(),
        firms,
        durable_firms,
        designs: (0..countries).map(|_| rng.gen_range(0.5..2.0)).collect(),
        equity_shares,
        gov_bonds,
        foreign_bonds: (0..dr).map(|_| rng.gen_range(-0.2..0.2)).collect(),
        gov_debt,
        history: None,
    };
    Economy {
        topology: Topology {
            regions,
            countries,
            region_country,
            households,
            sectors,
            trade_costs: tau,
        },
        params,
        fiscal,
        stocks,
    }
}

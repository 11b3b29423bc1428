use approx::assert_relative_eq;

use spatial_cge::calibration::stationary_benchmark;
use spatial_cge::economy::{Economy, SKILLS};
use spatial_cge::equilibrium::{
    self, arbitrage_residuals, design_market_residual, financial_closure_residual, gdp, labour_market_residual,
    solve_period, solve_short_run_at, total_demand, trade_balance, walras_residual, EquilibriumSolution, SolveOptions,
    StartPoint,
};
use spatial_cge::fixtures;

fn benchmark() -> (Economy, EquilibriumSolution) {
    stationary_benchmark(&fixtures::sym2(), &SolveOptions::default()).unwrap()
}

#[test]
fn sym2_solves_to_a_symmetric_point() {
    let sol = solve_period(&fixtures::sym2(), None, &SolveOptions::default()).unwrap();
    assert_relative_eq!(sol.prices[0][0], sol.prices[0][1], max_relative = 1e-10);
    assert_relative_eq!(sol.wage_indices[0], sol.wage_indices[1], max_relative = 1e-10);
    assert_relative_eq!(gdp(&sol, 0), gdp(&sol, 1), max_relative = 1e-10);
    assert!((walras_residual(&sol) / sol.gdp).abs() <= 1e-8);
}

#[test]
fn perturbed_start_reaches_the_same_point() {
    let (e, sol) = benchmark();
    let scale = |g: &[Vec<f64>]| -> Vec<Vec<f64>> { g.iter().map(|r| r.iter().map(|v| 1.1 * v).collect()).collect() };
    let prices = scale(&sol.prices);
    let output = scale(&sol.output);
    let wages: Vec<[f64; SKILLS]> = sol.wages.iter().map(|w| w.map(|v| 0.9 * v)).collect();
    let durable: Vec<f64> = sol.durable_output.iter().map(|z| 1.1 * z).collect();
    let design: Vec<f64> = sol.design_prices.iter().map(|p| 0.9 * p).collect();
    let start = StartPoint {
        prices: &prices,
        output: &output,
        wages: &wages,
        durable_output: &durable,
        design_prices: &design,
    };
    let again = solve_short_run_at(&e, &start, &SolveOptions::default()).unwrap().solution;
    for (a, b) in sol.prices.iter().flatten().zip(again.prices.iter().flatten()) {
        assert_relative_eq!(a, b, max_relative = 1e-8);
    }
    for (a, b) in sol.wages.iter().flatten().zip(again.wages.iter().flatten()) {
        assert_relative_eq!(a, b, max_relative = 1e-8);
    }
}

#[test]
fn loose_tolerance_agrees_to_its_tolerance() {
    let e = fixtures::sym2();
    let tight = solve_period(&e, None, &SolveOptions::default()).unwrap();
    let loose = solve_period(
        &e,
        None,
        &SolveOptions {
            tol: 1e-3,
            ..Default::default()
        },
    )
    .unwrap();
    for (a, b) in tight.prices.iter().flatten().zip(loose.prices.iter().flatten()) {
        assert!((a / b).ln().abs() <= 1e-3);
    }
    for (a, b) in tight.output.iter().flatten().zip(loose.output.iter().flatten()) {
        assert!((a / b).ln().abs() <= 1e-3);
    }
}

#[test]
fn markets_clear_at_the_solution() {
    let (e, sol) = benchmark();
    let t = &e.topology;
    for r in 0..t.domestic_regions() {
        for s in 0..t.domestic_sectors() {
            let d = total_demand(&sol, s, r);
            let parts = d.household + d.intermediate + d.capital + d.government + d.foreign;
            assert_relative_eq!(d.total(), parts, max_relative = 1e-12);
            assert_relative_eq!(d.total(), sol.output[s][r], max_relative = 1e-9);
        }
        for skill in 0..SKILLS {
            assert!(labour_market_residual(&sol, r, skill).abs() <= 1e-9);
        }
    }
    for m in 0..t.countries {
        assert!(design_market_residual(&sol, m).abs() <= 1e-9);
    }
    assert_eq!(financial_closure_residual(&sol), walras_residual(&sol));
    let tb = trade_balance(&sol);
    assert_relative_eq!(tb.total, tb.balance.iter().sum::<f64>(), epsilon = 1e-12);
    assert_relative_eq!(sol.gdp, sol.gdp_country.iter().sum::<f64>(), max_relative = 1e-12);
}

#[test]
fn returns_satisfy_arbitrage() {
    let (e, sol) = benchmark();
    let p = &e.params;
    for r in 0..e.topology.domestic_regions() {
        // stationary prices: (r^k - delta) P^c = r_F
        let expected = p.capital_depreciation + p.foreign_return / sol.consumer_prices[r];
        assert_relative_eq!(sol.rental_rates[r], expected, max_relative = 1e-12);
    }
    for rg in &sol.bond_rates {
        assert_eq!(*rg, p.foreign_return);
    }
    assert!(arbitrage_residuals(&e, &sol).max() <= 1e-12);
}

#[test]
fn relative_walras_residual_survives_rescaling_households() {
    let mut e = fixtures::sym2();
    for h in e.topology.households.iter_mut() {
        *h *= 10.0;
    }
    // holdings are per household
    let st = &mut e.stocks;
    for v in st.equity_shares.iter_mut().chain(st.gov_bonds.iter_mut()).flatten() {
        *v /= 10.0;
    }
    for b in st.foreign_bonds.iter_mut() {
        *b /= 10.0;
    }
    let sol = solve_period(&e, None, &SolveOptions::default()).unwrap();
    assert!((walras_residual(&sol) / sol.gdp).abs() <= 1e-8);
}

#[test]
fn long_run_solve_has_zero_profits() {
    let (e, _) = benchmark();
    let lr = equilibrium::solve_mode(&e, equilibrium::Mode::LongRun, None, &SolveOptions::default())
        .unwrap()
        .solution;
    for (p, n) in lr.final_profits.iter().flatten().zip(lr.firms.iter().flatten()) {
        assert!((p * n).abs() <= 1e-9 * lr.gdp);
    }
    for (x, xs) in lr.output.iter().flatten().zip(lr.output_target.iter().flatten()) {
        assert_relative_eq!(x, xs, max_relative = 1e-9);
    }
}

use approx::assert_relative_eq;

use spatial_cge::calibration::stationary_benchmark;
use spatial_cge::dynamics::{self, advance_stocks, scaled_targets, zero_profit_targets, EntryTargets};
use spatial_cge::economy::{Economy, StockState};
use spatial_cge::equilibrium::{solve_mode, EquilibriumSolution, Mode, SolveOptions};
use spatial_cge::error::ModelError;
use spatial_cge::fixtures;
use spatial_cge::production::{durable_pricing_profit, zero_profit_durable_output, zero_profit_output};
use spatial_cge::public::PolicyScenario;

fn benchmark() -> (Economy, EquilibriumSolution) {
    stationary_benchmark(&fixtures::sym2(), &SolveOptions::default()).unwrap()
}

fn long_run_targets(e: &Economy) -> EntryTargets {
    let lr = solve_mode(e, Mode::LongRun, None, &SolveOptions::default()).unwrap().solution;
    EntryTargets {
        firms: lr.firms,
        durable_firms: lr.durable_firms,
        long_run: true,
    }
}

fn empty(horizon: usize) -> PolicyScenario {
    PolicyScenario {
        name: "empty".into(),
        horizon,
        instruments: Vec::new(),
    }
}

fn stock_values(s: &StockState) -> Vec<f64> {
    fn walk(v: &serde_json::Value, out: &mut Vec<f64>) {
        match v {
            serde_json::Value::Number(x) => out.push(x.as_f64().unwrap()),
            serde_json::Value::Array(xs) => xs.iter().for_each(|x| walk(x, out)),
            serde_json::Value::Object(m) => m.values().for_each(|x| walk(x, out)),
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(&serde_json::to_value(s).unwrap(), &mut out);
    out
}

#[test]
fn zero_profit_output_examples() {
    assert_relative_eq!(zero_profit_output(1.0, 1.0, 0.0, 1.0, 0.5).unwrap(), 1.0);
    let x = zero_profit_output(1.3, 0.4, 0.0, 2.0, 0.7).unwrap();
    assert_relative_eq!(zero_profit_output(1.3, 0.8, 0.0, 2.0, 0.7).unwrap(), 2.0 * x, max_relative = 1e-15);
    assert_eq!(zero_profit_output(1.0, 0.0, 0.0, 1.0, 0.5), None);
    assert_eq!(zero_profit_output(1.0, 1.0, 1.0, 1.0, 0.5), None);
}

#[test]
fn durable_profit_vanishes_at_its_target() {
    let (rk, pc, pj, fc, sub, rho) = (0.13, 1.7, 2.1, 0.3, 0.05, 0.6);
    let z = zero_profit_durable_output(rk, pc, pj, fc, sub, rho).unwrap();
    let (_, profit) = durable_pricing_profit(rk, pc, pj, fc, sub, z, 0.4, rho);
    assert!(profit.abs() <= 1e-14);
}

#[test]
fn targets_at_the_solution() {
    let (e, sol) = benchmark();
    let t = zero_profit_targets(&sol).unwrap();
    let p = &e.params;
    for s in 0..e.topology.domestic_sectors() {
        for r in 0..e.topology.domestic_regions() {
            let expected = zero_profit_output(
                sol.value_added_prices[s][r],
                p.fixed_cost_final[s][r],
                sol.final_subsidies[s][r],
                sol.marginal_costs[s][r],
                p.theta,
            )
            .unwrap();
            assert_relative_eq!(t.output[s][r], expected, max_relative = 1e-12);
            // the benchmark sits at zero profit
            assert_relative_eq!(t.output[s][r], sol.output[s][r], max_relative = 1e-9);
        }
    }
    let mut broken = sol.clone();
    broken.output_target[0][1] = 0.0;
    assert_eq!(
        zero_profit_targets(&broken),
        Err(ModelError::NonViable { sector: 0, region: 1 })
    );
}

#[test]
fn stationary_stocks_do_not_move() {
    let (e, sol) = benchmark();
    let (next, events) = advance_stocks(&e, &sol, &long_run_targets(&e));
    assert!(events.is_empty());
    for (a, b) in stock_values(&e.stocks).iter().zip(stock_values(&next).iter()) {
        assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn one_law_changes_one_stock() {
    let (e, sol) = benchmark();
    let targets = long_run_targets(&e);
    let (base, _) = advance_stocks(&e, &sol, &targets);
    let mut shifted = sol.clone();
    shifted.public_investment[0] += 0.5;
    let (next, _) = advance_stocks(&e, &shifted, &targets);
    assert_relative_eq!(next.public_capital[0], base.public_capital[0] + 0.5, max_relative = 1e-14);
    let mut restored = next.clone();
    restored.public_capital[0] = base.public_capital[0];
    assert_eq!(restored, base);
}

#[test]
fn one_period_is_a_solve_and_an_advance() {
    let (e, sol) = benchmark();
    let mut start = e.clone();
    for row in start.stocks.firms.iter_mut() {
        for n in row.iter_mut() {
            *n *= 0.9;
        }
    }
    let trajectory = dynamics::simulate(&start, &empty(1), 1, &SolveOptions::default()).unwrap();
    assert_eq!(trajectory.len(), 1);
    let rec = &trajectory.periods[0];
    let solved = solve_mode(&start, Mode::ShortRun, Some(&sol), &SolveOptions::default()).unwrap().solution;
    for (a, b) in solved.prices.iter().flatten().zip(rec.solution.prices.iter().flatten()) {
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }
    let (next, _) = advance_stocks(&start, &rec.solution, &rec.targets);
    assert_eq!(next, trajectory.terminal);
    assert_eq!(rec.targets, long_run_targets(&start));
}

fn share(firms: &[Vec<f64>]) -> f64 {
    let n0: f64 = firms.iter().map(|r| r[0]).sum();
    let n1: f64 = firms.iter().map(|r| r[1]).sum();
    n0 / (n0 + n1)
}

#[test]
fn region_share_moves_monotonically_towards_its_long_run_share() {
    let (mut e, _) = benchmark();
    let t = &mut e.topology;
    let (fs, fr) = (t.sectors - 1, t.regions - 1);
    for s in 0..t.sectors {
        for d in 1..t.regions {
            if (s == fs) == (fr == 0) {
                t.trade_costs[s][0][d] *= 0.98;
            }
        }
    }
    let initial_target = share(&long_run_targets(&e).firms);
    let trajectory = dynamics::simulate(&e, &empty(25), 25, &SolveOptions::default()).unwrap();
    assert!(initial_target < 0.5 - 1e-3);
    let mut gaps = Vec::new();
    let periods = &trajectory.periods;
    for (t, rec) in periods.iter().enumerate() {
        let before = share(&rec.stocks.firms);
        let target = share(&rec.targets.firms);
        let next = periods.get(t + 1).map_or(&trajectory.terminal, |p| &p.stocks);
        let after = share(&next.firms);
        assert!((after - before) * (target - before) >= 0.0, "{before} -> {after}, target {target}");
        gaps.push((target - before).abs());
    }
    assert!(gaps.last().unwrap() < &(0.05 * gaps[0]), "{gaps:?}");
}

#[test]
fn scaled_targets_keep_the_benchmark() {
    let (_, sol) = benchmark();
    let t = scaled_targets(&sol);
    assert!(!t.long_run);
    for (a, b) in t.firms.iter().flatten().zip(sol.firms.iter().flatten()) {
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }
    for (a, b) in t.durable_firms.iter().zip(&sol.durable_firms) {
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }
}

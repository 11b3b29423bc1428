use proptest::prelude::*;

use spatial_cge::ces::{self, Variety};
use spatial_cge::dynamics::firm_entry_step;
use spatial_cge::household::human_capital_step;
use spatial_cge::production::{
    durable_price_index, final_goods_profit, innovation_probability, wage_index, zero_profit_output,
};
use spatial_cge::public::public_capital_step;

fn varieties() -> impl Strategy<Value = Vec<Variety>> {
    prop::collection::vec((0.1f64..20.0, 0.2f64..3.0, 0.2f64..5.0), 1..6)
        .prop_map(|v| v.into_iter().map(|(n, w, p)| Variety::new(n, w, p)).collect())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn spending_adds_up(vs in varieties(), c in 0.1f64..0.95, quantity in 0.1f64..100.0) {
        let index = ces::price_index(vs.iter().copied(), c).unwrap();
        let spending: f64 = vs
            .iter()
            .map(|v| v.count * v.price * ces::demand(v.price, v.weight, index, c, quantity))
            .sum();
        prop_assert!(close(spending, index * quantity, 1e-10), "{spending} vs {}", index * quantity);
    }

    #[test]
    fn index_is_homogeneous_of_degree_one(vs in varieties(), c in 0.1f64..0.95, k in 0.1f64..10.0) {
        let index = ces::price_index(vs.iter().copied(), c).unwrap();
        let scaled = ces::price_index(vs.iter().map(|v| Variety::new(v.count, v.weight, k * v.price)), c).unwrap();
        prop_assert!(close(scaled, k * index, 1e-12));
    }

    #[test]
    fn demand_is_homogeneous_of_degree_zero(vs in varieties(), c in 0.1f64..0.95, k in 0.1f64..10.0) {
        let index = ces::price_index(vs.iter().copied(), c).unwrap();
        for v in &vs {
            let d = ces::demand(v.price, v.weight, index, c, 1.0);
            let scaled = ces::demand(k * v.price, v.weight, k * index, c, 1.0);
            prop_assert!(close(d, scaled, 1e-12));
        }
    }

    #[test]
    fn wage_index_scales_with_wages(
        households in 0.5f64..10.0,
        w in prop::array::uniform3(0.2f64..5.0),
        b in prop::array::uniform3(0.5f64..3.0),
        k in 0.1f64..10.0,
        sigma in 0.1f64..0.95,
    ) {
        let ones = [1.0; 3];
        let base = wage_index(households, &w, &b, &ones, sigma).unwrap();
        let scaled = wage_index(households, &w.map(|x| k * x), &b, &ones, sigma).unwrap();
        prop_assert!(close(scaled, k * base, 1e-12));
    }

    #[test]
    fn entry_closes_a_fixed_fraction_of_the_gap(
        count in 0.0f64..50.0,
        target in 0.0f64..50.0,
        speed in 0.0f64..1.0,
    ) {
        let next = firm_entry_step(count, target, speed);
        prop_assert!(close((next - target).abs(), (1.0 - speed) * (count - target).abs(), 1e-12));
        prop_assert!((next - count) * (target - count) >= 0.0);
    }

    #[test]
    fn entry_converges_to_its_target(count in 0.0f64..50.0, target in 0.0f64..50.0, speed in 0.05f64..1.0) {
        let mut n = count;
        for _ in 0..2000 {
            n = firm_entry_step(n, target, speed);
        }
        prop_assert!((n - target).abs() <= 1e-9 * target.max(1.0));
    }

    #[test]
    fn more_durable_firms_lower_the_durable_index(
        count in 0.1f64..50.0,
        extra in 0.01f64..10.0,
        price in 0.1f64..5.0,
        rho in 0.1f64..0.95,
    ) {
        let fewer = durable_price_index(count, price, rho).unwrap();
        let more = durable_price_index(count + extra, price, rho).unwrap();
        prop_assert!(more < fewer);
    }

    #[test]
    fn innovation_rises_with_own_durable_share(
        a in prop::collection::vec(0.1f64..10.0, 2..5),
        hc in prop::collection::vec(0.1f64..10.0, 5),
        extra in 0.01f64..5.0,
        weight in 0.05f64..0.95,
    ) {
        let hc = &hc[..a.len()];
        let base = innovation_probability(&a, hc, weight).unwrap();
        let mut grown = a.clone();
        grown[0] += extra;
        let after = innovation_probability(&grown, hc, weight).unwrap();
        prop_assert!(after[0] > base[0]);
        for (p, q) in base.iter().zip(&after).skip(1) {
            prop_assert!(q < p);
        }
    }

    #[test]
    fn zero_profit_output_clears_profit(
        value_added_price in 0.1f64..5.0,
        fixed_cost in 0.1f64..5.0,
        subsidy in 0.0f64..1.0,
        marginal_cost in 0.1f64..5.0,
        theta in 0.1f64..0.95,
    ) {
        match zero_profit_output(value_added_price, fixed_cost, subsidy, marginal_cost, theta) {
            Some(x) => {
                let price = marginal_cost / theta;
                let profit = final_goods_profit(price, x, marginal_cost, value_added_price, fixed_cost, subsidy);
                prop_assert!(profit.abs() <= 1e-12 * (value_added_price * fixed_cost));
            }
            None => prop_assert!(subsidy >= value_added_price * fixed_cost),
        }
    }

    #[test]
    fn stock_laws_have_their_rest_points(
        stock in 0.1f64..100.0,
        depreciation in 0.01f64..0.5,
    ) {
        prop_assert!(close(public_capital_step(stock, depreciation * stock, depreciation), stock, 1e-14));
        let education = (1.0 + depreciation).ln();
        prop_assert!(close(human_capital_step(stock, education, depreciation), stock, 1e-14));
    }
}

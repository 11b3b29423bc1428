//! Constant-elasticity-of-substitution price indices and demands.
//!
//! A CES aggregate with curvature `c` in (0,1) over varieties with weights
//! `w_i` and delivered prices `v_i`, each repeated `n_i` times, has the price
//! index `(sum n_i w_i^(1/(1-c)) v_i^(c/(c-1)))^((c-1)/c)` and the per-variety
//! demand `(v_i / (w_i P))^(1/(c-1)) Q` for an aggregate quantity `Q`.

use crate::error::{domain, ModelError};

/// One group of symmetric varieties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variety {
    pub count: f64,
    pub weight: f64,
    pub price: f64,
}

impl Variety {
    pub fn new(count: f64, weight: f64, price: f64) -> Self {
        Self {
            count,
            weight,
            price,
        }
    }

    pub fn unweighted(count: f64, price: f64) -> Self {
        Self::new(count, 1.0, price)
    }
}

pub fn price_index<I>(varieties: I, curvature: f64) -> Result<f64, ModelError>
where
    I: IntoIterator<Item = Variety>,
{
    let exp = curvature / (curvature - 1.0);
    let wexp = 1.0 / (1.0 - curvature);
    let mut sum = 0.0;
    for v in varieties {
        if v.count == 0.0 {
            continue;
        }
        if !(v.price > 0.0) || !v.price.is_finite() {
            return Err(domain(format!("non-positive effective price {}", v.price)));
        }
        if !(v.weight > 0.0) {
            return Err(domain(format!("non-positive CES weight {}", v.weight)));
        }
        if v.count < 0.0 {
            return Err(domain(format!("negative variety count {}", v.count)));
        }
        sum += v.count * v.weight.powf(wexp) * v.price.powf(exp);
    }
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(domain("CES price index over an empty variety set"));
    }
    Ok(sum.powf(1.0 / exp))
}

/// Demand for one variety of delivered price `price` and weight `weight`.
pub fn demand(price: f64, weight: f64, index: f64, curvature: f64, quantity: f64) -> f64 {
    (price / (weight * index)).powf(1.0 / (curvature - 1.0)) * quantity
}

//! Damped Newton iteration with a forward-difference Jacobian, backtracking
//! on the residual norm and a tâtonnement fallback.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Largest admissible absolute residual (residuals are log ratios).
    pub tol: f64,
    pub max_iter: usize,
    /// Initial step length of each Newton step, in (0,1].
    pub damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 500,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Start,
    Newton,
    Tatonnement,
    Polish,
}

/// One line of the iteration log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub kind: StepKind,
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NewtonFailure {
    NonConvergence {
        best: Vec<f64>,
        best_residual: f64,
        iterations: usize,
        trace: Vec<TraceEntry>,
    },
    Singular { column: usize, trace: Vec<TraceEntry> },
    /// The start point could not be evaluated.
    Start(ModelError),
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, x| a.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest change of any log unknown in one step.
const MAX_STEP: f64 = 2.0;

fn jacobian<F>(f: &F, x: &[f64], fx: &[f64]) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ModelError>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = 1e-7 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let col = match f(&xp) {
            Ok(v) => Some((v, h)),
            Err(_) => {
                xp[j] = x[j] - h;
                f(&xp).ok().map(|v| (v, -h))
            }
        };
        xp[j] = x[j];
        if let Some((v, h)) = col {
            for i in 0..n {
                jac[(i, j)] = (v[i] - fx[i]) / h;
            }
        }
    }
    jac
}

/// Column whose pivot is smallest in magnitude after LU factorisation.
fn weakest_column(jac: &DMatrix<f64>) -> usize {
    let lu = jac.clone().lu();
    let u = lu.u();
    let mut best = (0, f64::INFINITY);
    for j in 0..u.ncols().min(u.nrows()) {
        let v = u[(j, j)].abs();
        if v < best.1 {
            best = (j, v);
        }
    }
    best.0
}

fn newton_direction(jac: &DMatrix<f64>, fx: &[f64]) -> Option<Vec<f64>> {
    let lu = jac.clone().lu();
    let u = lu.u();
    let scale = u.diagonal().iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let smallest = u.diagonal().iter().fold(f64::INFINITY, |a: f64, v| a.min(v.abs()));
    if !(scale > 0.0) || smallest <= 1e-13 * scale {
        return None;
    }
    let rhs = DVector::from_iterator(fx.len(), fx.iter().map(|v| -v));
    let dx = lu.solve(&rhs)?;
    if dx.iter().all(|v| v.is_finite()) {
        Some(dx.iter().copied().collect())
    } else {
        None
    }
}

fn clamp_step(mut dx: Vec<f64>) -> Vec<f64> {
    let big = max_abs(&dx);
    if big > MAX_STEP {
        let k = MAX_STEP / big;
        dx.iter_mut().for_each(|v| *v *= k);
    }
    dx
}

/// Tries `x + t dx` for shrinking `t`; returns the accepted point.
fn line_search<F>(f: &F, x: &[f64], dx: &[f64], merit: f64, t0: f64, min_t: f64) -> Option<(Vec<f64>, Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ModelError>,
{
    let mut t = t0;
    while t >= min_t {
        let xn: Vec<f64> = x.iter().zip(dx).map(|(a, b)| a + t * b).collect();
        if let Ok(fnew) = f(&xn) {
            if norm2(&fnew) <= (1.0 - 1e-4 * t) * merit {
                return Some((xn, fnew, t));
            }
        }
        t *= 0.5;
    }
    None
}

/// Solves `f(x) = 0` from `x0`.
pub fn solve<F>(f: F, x0: &[f64], opts: &SolveOptions) -> Result<NewtonOutcome, NewtonFailure>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, ModelError>,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x).map_err(NewtonFailure::Start)?;
    let mut trace = vec![TraceEntry {
        iteration: 0,
        kind: StepKind::Start,
        residual: max_abs(&fx),
        step: 0.0,
    }];
    let mut best = (x.clone(), max_abs(&fx));
    let damping = opts.damping.clamp(1e-6, 1.0);
    let mut iter = 0;
    let mut stalls = 0;
    while iter < opts.max_iter {
        let r = max_abs(&fx);
        if r <= opts.tol {
            break;
        }
        iter += 1;
        let jac = jacobian(&f, &x, &fx);
        let merit = norm2(&fx);
        let accepted = match newton_direction(&jac, &fx) {
            Some(dx) => {
                let dx = clamp_step(dx);
                line_search(&f, &x, &dx, merit, damping, 1e-10).map(|a| (a, StepKind::Newton))
            }
            None => {
                if stalls > 3 {
                    return Err(NewtonFailure::Singular {
                        column: weakest_column(&jac),
                        trace,
                    });
                }
                stalls += 1;
                None
            }
        };
        let accepted = accepted.or_else(|| {
            // residual-proportional adjustment: each residual rises with its own unknown
            let dx: Vec<f64> = clamp_step(fx.iter().map(|v| -v).collect());
            line_search(&f, &x, &dx, merit, 0.5 * damping, 1e-12).map(|a| (a, StepKind::Tatonnement))
        });
        match accepted {
            Some(((xn, fnew, t), kind)) => {
                x = xn;
                fx = fnew;
                let r = max_abs(&fx);
                trace.push(TraceEntry {
                    iteration: iter,
                    kind,
                    residual: r,
                    step: t,
                });
                if r < best.1 {
                    best = (x.clone(), r);
                }
                if kind == StepKind::Newton {
                    stalls = 0;
                }
            }
            None => {
                if newton_direction(&jac, &fx).is_none() {
                    return Err(NewtonFailure::Singular {
                        column: weakest_column(&jac),
                        trace,
                    });
                }
                return Err(NewtonFailure::NonConvergence {
                    best: best.0,
                    best_residual: best.1,
                    iterations: iter,
                    trace,
                });
            }
        }
    }
    if max_abs(&fx) > opts.tol {
        return Err(NewtonFailure::NonConvergence {
            best: best.0,
            best_residual: best.1,
            iterations: iter,
            trace,
        });
    }
    // push the residual towards rounding level while it keeps falling fast
    for _ in 0..3 {
        let r = max_abs(&fx);
        if r < 1e-14 {
            break;
        }
        let jac = jacobian(&f, &x, &fx);
        let Some(dx) = newton_direction(&jac, &fx) else { break };
        let xn: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        match f(&xn) {
            Ok(fnew) if max_abs(&fnew) < 0.5 * r => {
                x = xn;
                fx = fnew;
                trace.push(TraceEntry {
                    iteration: iter,
                    kind: StepKind::Polish,
                    residual: max_abs(&fx),
                    step: 1.0,
                });
            }
            _ => break,
        }
    }
    Ok(NewtonOutcome {
        residual: max_abs(&fx),
        x,
        iterations: iter,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_small_system() {
        // x^2 - 2 = 0, x*y - 1 = 0
        let f = |v: &[f64]| Ok(vec![v[0] * v[0] - 2.0, v[0] * v[1] - 1.0]);
        let out = solve(f, &[1.0, 1.0], &SolveOptions::default()).unwrap();
        assert!((out.x[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!((out.x[1] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(out.residual <= 1e-9);
    }

    #[test]
    fn rejects_steps_into_the_domain_boundary() {
        // ln-style residual only defined for v > 0
        let f = |v: &[f64]| {
            if v[0] <= 0.0 {
                Err(crate::error::domain("negative"))
            } else {
                Ok(vec![v[0].ln() - 3.0])
            }
        };
        let out = solve(f, &[0.01], &SolveOptions::default()).unwrap();
        assert!((out.x[0] - 3f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn reports_singular_jacobian() {
        let f = |v: &[f64]| Ok(vec![v[0] + v[1] - 1.0, 2.0 * (v[0] + v[1])]);
        match solve(f, &[0.0, 0.0], &SolveOptions::default()) {
            Err(NewtonFailure::Singular { .. }) => {}
            other => panic!("expected a singular Jacobian, got {other:?}"),
        }
    }

    #[test]
    fn reports_non_convergence() {
        let f = |v: &[f64]| Ok(vec![v[0] * v[0] + 1.0]);
        let opts = SolveOptions {
            max_iter: 20,
            ..Default::default()
        };
        match solve(f, &[3.0], &opts) {
            Err(NewtonFailure::NonConvergence { best_residual, .. }) => assert!(best_residual >= 1.0),
            Err(NewtonFailure::Singular { .. }) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }
}

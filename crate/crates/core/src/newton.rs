//! Newton-type solvers: the undamped 1-D baseline for the unregularized
//! problem, a damped fixed-`t` oracle, and the `xi*` solver for p4 data.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laguerre::{cell_measures, measure_jacobian, sup_norm, unregularized_residual, MeasureMode};
use crate::linalg::{gauge_fixed, solve_lu, solve_negative_definite};
use crate::model::{CostSpec, DensitySpec, ProblemSpec, TargetSet, Variant};
use crate::quadrature::QuadratureGrid;
use crate::residuals::{self, gauge_residual, needs_gauge};

pub const NEWTON_TOL: f64 = 1e-8;
pub const NEWTON_MAX_ITER: usize = 100;
pub const ORACLE_TOL: f64 = 1e-10;
pub const XI_TOL: f64 = 1e-8;
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub psi: Vec<f64>,
    pub iterations: usize,
    pub residual_sup: f64,
    pub converged: bool,
}

/// Analytic Jacobian of `psi -> exp(-psi) - mu[Lag(psi - o)]` in 1-D.
pub fn newton_jacobian_1d(problem: &ProblemSpec, psi: &[f64], grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    let w = problem.terminal_weights(psi);
    let m = measure_jacobian(&w, problem.targets(), problem.mu(), grid)?;
    let mut j = -m;
    for (i, p) in psi.iter().enumerate() {
        j[(i, i)] -= (-p).exp();
    }
    Ok(j)
}

/// Plain Newton on the unregularized residual of p1/p2/p3 in 1-D with the
/// quadratic cost. Divergence is reported, not raised.
pub fn newton_1d(
    problem: &ProblemSpec,
    psi0: &[f64],
    tol: f64,
    max_iter: usize,
    grid: &QuadratureGrid,
) -> Result<NewtonReport> {
    if problem.dim() != 1 || !problem.cost().is_quadratic() || problem.variant() == Variant::P4 {
        return Err(Error::Unsupported(
            "the Newton baseline needs a 1-D p1/p2/p3 problem with quadratic cost".into(),
        ));
    }
    if psi0.len() != problem.n() {
        return Err(Error::InvalidProblem("initial guess has the wrong length".into()));
    }
    let mut psi = psi0.to_vec();
    let mut iterations = 0;
    loop {
        if psi.iter().any(|v| !v.is_finite()) {
            return Ok(NewtonReport {
                psi,
                iterations,
                residual_sup: f64::NAN,
                converged: false,
            });
        }
        let g = unregularized_residual(problem, &psi, grid)?;
        let r = sup_norm(&g);
        if r < tol || iterations >= max_iter || !r.is_finite() {
            return Ok(NewtonReport {
                psi,
                iterations,
                residual_sup: r,
                converged: r < tol,
            });
        }
        let j = newton_jacobian_1d(problem, &psi, grid)?;
        match solve_negative_definite(&j, &g, 1.0) {
            Ok(d) => psi.iter_mut().zip(d).for_each(|(p, s)| *p -= s),
            Err(_) => {
                return Ok(NewtonReport {
                    psi,
                    iterations,
                    residual_sup: r,
                    converged: false,
                })
            }
        }
        iterations += 1;
    }
}

/// Default starting point at time `t`: the initial data advanced linearly.
fn oracle_guess(problem: &ProblemSpec, t: f64, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let init = residuals::initial_state(problem, grid)?;
    Ok(match init.dpsi0 {
        Some(d) => init.psi0.iter().zip(d).map(|(p, v)| p + t * v).collect(),
        None => init.psi0,
    })
}

/// Damped Newton on `G(., t)`: full step when the sup-norm decreases, else
/// halve up to 30 times. For p4 the (constant) residual mean is ignored and
/// iterates stay mean-zero.
pub fn fixed_t_oracle(
    problem: &ProblemSpec,
    t: f64,
    tol: f64,
    grid: &QuadratureGrid,
    warm_start: Option<&[f64]>,
) -> Result<NewtonReport> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::TimeOutOfRange { t, range: "(0, 1)" });
    }
    let mut psi = match warm_start {
        Some(w) => w.to_vec(),
        None => oracle_guess(problem, t, grid)?,
    };
    let gauge = needs_gauge(problem);
    let mut eval = residuals::evaluate(problem, &psi, t, grid, true)?;
    let mut r = sup_norm(&gauge_residual(problem, eval.g.clone()));
    let mut iterations = 0;
    while r >= tol && iterations < NEWTON_MAX_ITER {
        let jac = if gauge { gauge_fixed(&eval.jac) } else { eval.jac.clone() };
        let g = gauge_residual(problem, eval.g.clone());
        let step = solve_negative_definite(&jac, &g, t)?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = psi.iter().zip(&step).map(|(p, s)| p - lambda * s).collect();
            if let Ok(e) = residuals::evaluate(problem, &trial, t, grid, true) {
                let rt = sup_norm(&gauge_residual(problem, e.g.clone()));
                if rt < r {
                    accepted = Some((trial, e, rt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((p, e, rt)) => {
                psi = p;
                eval = e;
                r = rt;
            }
            None => break,
        }
    }
    Ok(NewtonReport {
        psi,
        iterations,
        residual_sup: r,
        converged: r < tol,
    })
}

/// Mean-zero `xi` with equal cell masses `rho[Lag_j(xi)] = rho(X) / N` under
/// the quadratic cost. Steps are damped until the residual decreases and no
/// cell mass falls below half of the smallest mass seen at `xi = 0`.
pub fn solve_xi_star(targets: &TargetSet, rho: &DensitySpec, grid: &QuadratureGrid, tol: f64) -> Result<Vec<f64>> {
    let n = targets.len();
    let cost = CostSpec::quadratic();
    let mode = MeasureMode::auto(grid.domain().dim(), cost);
    let share = rho.mass_on(grid.domain()) / n as f64;
    let measures = |xi: &[f64]| cell_measures(xi, targets, cost, rho, grid, mode);
    let residual = |m: &[f64]| -> Vec<f64> { m.iter().map(|v| v - share).collect() };

    let mut xi = vec![0.0; n];
    let m0 = measures(&xi)?;
    let floor = 0.5 * m0.iter().copied().fold(share, f64::min);
    let mut f = residual(&m0);
    let mut r = sup_norm(&f);
    let mut iterations = 0;
    while r >= tol {
        if iterations >= NEWTON_MAX_ITER {
            return Err(Error::NoConvergence {
                solver: "xi*",
                iterations,
                residual: r,
            });
        }
        let jac = measure_jacobian(&xi, targets, rho, grid)?;
        // M is positive semidefinite with M 1 = 0; solve on the mean-zero subspace
        let s = jac.trace() / n as f64;
        let fixed = jac.map(|v| v + s);
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let step = solve_lu(&fixed, &neg, 0.0)?;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = xi.iter().zip(&step).map(|(x, d)| x + lambda * d).collect();
            let mt = measures(&trial)?;
            let ft = residual(&mt);
            let rt = sup_norm(&ft);
            if rt < r && mt.iter().all(|&v| v >= floor) {
                accepted = Some((trial, ft, rt));
                break;
            }
            lambda *= 0.5;
        }
        let Some((x, ft, rt)) = accepted else {
            return Err(Error::NoConvergence {
                solver: "xi*",
                iterations,
                residual: r,
            });
        };
        xi = x;
        f = ft;
        r = rt;
        iterations += 1;
    }
    let mean = xi.iter().sum::<f64>() / n as f64;
    Ok(xi.iter().map(|x| x - mean).collect())
}

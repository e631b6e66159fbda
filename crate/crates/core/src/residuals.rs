//! Residuals `G_k(psi, t)`, their Jacobians and time derivatives, and the
//! closed-form initial data of the four problem variants.
//!
//! | variant | `G`                          | `dG/dpsi`                    | `dG/dt`                           |
//! |---------|------------------------------|------------------------------|-----------------------------------|
//! | p1, p3  | `exp(-psi) - T`              | `H - diag(exp(-psi))`        | `D`                               |
//! | p2      | `exp(-psi/t) - T`            | `H - diag(exp(-psi/t)) / t`  | `D + psi exp(-psi/t) / t^2`       |
//! | p4      | `rho[Lag(-psi/t)] - T`       | `H - M(-psi/t) / t`          | `D + M(-psi/t) psi / t^2`         |
//!
//! with `T = int pi dmu`, `H = hess_K`, `D = dt_grad_K` and `M` the Jacobian
//! of `xi -> rho[Lag(xi)]`. For p4, `1` spans the kernel of `dG/dpsi` and
//! `sum G` does not depend on `psi` or `t`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{self, Parts};
use crate::laguerre::{measure_jacobian, rho_measures};
use crate::model::{ProblemSpec, Variant};
use crate::newton::{solve_xi_star, XI_TOL};
use crate::quadrature::QuadratureGrid;

/// Exponents above this are reported as overflow rather than evaluated.
const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub psi0: Vec<f64>,
    /// Present for variants whose ODE is singular at `t = 0`.
    pub dpsi0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEval {
    pub g: Vec<f64>,
    /// Empty unless derivatives were requested.
    pub jac: DMatrix<f64>,
    pub dt: Vec<f64>,
}

fn check_time(problem: &ProblemSpec, t: f64) -> Result<()> {
    let ok = if problem.variant().singular_at_zero() {
        t > 0.0 && t < 1.0
    } else {
        (0.0..1.0).contains(&t)
    };
    if ok {
        Ok(())
    } else {
        let range = if problem.variant().singular_at_zero() { "(0, 1)" } else { "[0, 1)" };
        Err(Error::TimeOutOfRange { t, range })
    }
}

fn guarded_exp(x: f64, t: f64) -> Result<f64> {
    if x > MAX_EXPONENT || x.is_nan() {
        return Err(Error::Overflow { t });
    }
    Ok(x.exp())
}

/// `G`, and with `derivatives` also `dG/dpsi` and `dG/dt`, from one kernel sweep.
pub fn evaluate(
    problem: &ProblemSpec,
    psi: &[f64],
    t: f64,
    grid: &QuadratureGrid,
    derivatives: bool,
) -> Result<ResidualEval> {
    check_time(problem, t)?;
    let parts = if derivatives { Parts::ALL } else { Parts::GRAD };
    let k = kernel::evaluate(psi, t, problem, grid, parts)?;
    let n = psi.len();
    // transport term: -grad_K = T
    let mut g = k.grad;
    let mut jac = k.hess;
    let mut dt = k.dt_grad;

    match problem.variant() {
        Variant::P1 | Variant::P3 => {
            for j in 0..n {
                let e = guarded_exp(-psi[j], t)?;
                g[j] += e;
                if derivatives {
                    jac[(j, j)] -= e;
                }
            }
        }
        Variant::P2 => {
            for j in 0..n {
                let e = guarded_exp(-psi[j] / t, t)?;
                g[j] += e;
                if derivatives {
                    jac[(j, j)] -= e / t;
                    dt[j] += psi[j] * e / (t * t);
                }
            }
        }
        Variant::P4 => {
            let xi: Vec<f64> = psi.iter().map(|p| -p / t).collect();
            let r = rho_measures(problem, &xi, grid)?;
            for j in 0..n {
                g[j] += r[j];
            }
            if derivatives {
                let rho = problem.rho().expect("validated at construction");
                let m = measure_jacobian(&xi, problem.targets(), rho, grid)?;
                jac -= &m / t;
                let mpsi = &m * nalgebra::DVector::from_column_slice(psi);
                for j in 0..n {
                    dt[j] += mpsi[j] / (t * t);
                }
            }
        }
    }
    if g.iter().chain(dt.iter()).chain(jac.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Overflow { t });
    }
    Ok(ResidualEval { g, jac, dt })
}

pub fn residual(problem: &ProblemSpec, psi: &[f64], t: f64, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    Ok(evaluate(problem, psi, t, grid, false)?.g)
}

pub fn residual_jacobian(problem: &ProblemSpec, psi: &[f64], t: f64, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    Ok(evaluate(problem, psi, t, grid, true)?.jac)
}

pub fn residual_dt(problem: &ProblemSpec, psi: &[f64], t: f64, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    Ok(evaluate(problem, psi, t, grid, true)?.dt)
}

/// Whether `dG/dpsi` has `1` in its kernel, so solves need a mean-zero gauge.
pub fn needs_gauge(problem: &ProblemSpec) -> bool {
    problem.variant() == Variant::P4
}

/// `G` with its (invariant) mean removed for gauge-fixed variants.
pub fn gauge_residual(problem: &ProblemSpec, mut g: Vec<f64>) -> Vec<f64> {
    if needs_gauge(problem) {
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        g.iter_mut().for_each(|v| *v -= mean);
    }
    g
}

/// Closed-form `psi(0)` and, for p2 and p4, `psi'(0)`.
pub fn initial_state(problem: &ProblemSpec, grid: &QuadratureGrid) -> Result<InitialData> {
    let n = problem.n();
    let log_n = (n as f64).ln();
    Ok(match problem.variant() {
        Variant::P1 => InitialData {
            psi0: vec![log_n; n],
            dpsi0: None,
        },
        Variant::P2 => InitialData {
            psi0: vec![0.0; n],
            dpsi0: Some(vec![log_n; n]),
        },
        Variant::P3 => {
            let v = problem.v().expect("validated at construction");
            let m = v.iter().map(|x| -0.5 * x).fold(f64::NEG_INFINITY, f64::max);
            let lse = m + v.iter().map(|x| (-0.5 * x - m).exp()).sum::<f64>().ln();
            InitialData {
                psi0: v.iter().map(|x| 0.5 * x + lse).collect(),
                dpsi0: None,
            }
        }
        Variant::P4 => {
            let rho = problem.rho().expect("validated at construction");
            let xi = solve_xi_star(problem.targets(), rho, grid, XI_TOL)?;
            InitialData {
                psi0: vec![0.0; n],
                dpsi0: Some(xi.iter().map(|x| -x).collect()),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostSpec, DensitySpec, Domain, TargetSet};
    use crate::quadrature::build_grid;

    fn p1(ys: &[f64]) -> ProblemSpec {
        let d = Domain::unit(1).unwrap();
        let t = TargetSet::new(ys.iter().map(|&y| [y, 0.0]).collect(), 1).unwrap();
        ProblemSpec::new(Variant::P1, d, t, DensitySpec::uniform(&d), CostSpec::quadratic(), None, None).unwrap()
    }

    fn grid() -> QuadratureGrid {
        build_grid(&Domain::unit(1).unwrap(), 64, 8).unwrap()
    }

    #[test]
    fn p1_initial_data_zeroes_the_residual_near_zero() {
        let p = p1(&[0.2, 1.5, 3.0, 4.1]);
        let init = initial_state(&p, &grid()).unwrap();
        assert!(init.psi0.iter().all(|&v| (v - 4f64.ln()).abs() < 1e-15));
        assert!(init.dpsi0.is_none());
        let g = residual(&p, &init.psi0, 1e-9, &grid()).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-8), "{g:?}");
    }

    #[test]
    fn p1_residual_sum() {
        let p = p1(&[0.2, 0.5, 0.9]);
        let psi = [0.3, -0.4, 1.2];
        let g = residual(&p, &psi, 0.6, &grid()).unwrap();
        let want: f64 = psi.iter().map(|v: &f64| (-v).exp()).sum::<f64>() - 1.0;
        assert!((g.iter().sum::<f64>() - want).abs() < 1e-12);
    }

    #[test]
    fn p1_jacobian_at_origin() {
        let p = p1(&[0.2, 0.9]);
        let j = residual_jacobian(&p, &[0.0, 0.0], 0.0, &grid()).unwrap();
        let want = [[-1.25, 0.25], [0.25, -1.25]];
        for a in 0..2 {
            for b in 0..2 {
                assert!((j[(a, b)] - want[a][b]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_target_has_no_time_derivative() {
        let p = p1(&[0.3]);
        assert!(residual_dt(&p, &[0.4], 0.5, &grid()).unwrap()[0].abs() < 1e-14);
    }

    #[test]
    fn p2_extra_term_vanishes_at_zero_weights() {
        let d = Domain::unit(1).unwrap();
        let targets = TargetSet::new(vec![[0.2, 0.0], [0.7, 0.0]], 1).unwrap();
        let q2 = ProblemSpec::new(Variant::P2, d, targets.clone(), DensitySpec::uniform(&d), CostSpec::quadratic(), None, None)
            .unwrap();
        let q1 = ProblemSpec::new(Variant::P1, d, targets, DensitySpec::uniform(&d), CostSpec::quadratic(), None, None).unwrap();
        for t in [0.1, 0.5, 0.9] {
            let a = residual_dt(&q2, &[0.0, 0.0], t, &grid()).unwrap();
            let b = residual_dt(&q1, &[0.0, 0.0], t, &grid()).unwrap();
            assert_eq!(a, b);
        }
        assert!(residual(&q2, &[0.0, 0.0], 0.0, &grid()).is_err());
    }

    #[test]
    fn p2_overflow_is_reported() {
        let d = Domain::unit(1).unwrap();
        let targets = TargetSet::new(vec![[0.2, 0.0], [0.7, 0.0]], 1).unwrap();
        let q2 = ProblemSpec::new(Variant::P2, d, targets, DensitySpec::uniform(&d), CostSpec::quadratic(), None, None).unwrap();
        assert_eq!(residual(&q2, &[-10.0, 0.0], 1e-3, &grid()), Err(Error::Overflow { t: 1e-3 }));
    }

    #[test]
    fn p3_initial_data() {
        let d = Domain::unit(1).unwrap();
        let targets = TargetSet::new(vec![[0.2, 0.0], [0.8, 0.0]], 1).unwrap();
        let p = ProblemSpec::new(Variant::P3, d, targets, DensitySpec::uniform(&d), CostSpec::quadratic(), Some([0.5, 0.0]), None)
            .unwrap();
        let init = initial_state(&p, &grid()).unwrap();
        let want = 0.045 + (2.0 * (-0.045f64).exp()).ln();
        for v in &init.psi0 {
            assert!((v - want).abs() < 1e-14);
        }
        assert!((want - 2f64.ln()).abs() < 1e-14);
    }
}

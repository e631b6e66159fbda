//! Regularized dual kernel `K(psi, t) = -(1-t) int log sum_j exp(a_j) dmu`,
//! with `a_j = (psi_j - t c_j(x) - o_j) / (1 - t)`, and its derivatives:
//!
//! * `grad_K = -int pi dmu`
//! * `hess_K = 1/(1-t) int (pi pi^T - diag(pi)) dmu`
//! * `[dt grad_K]_j = 1/(1-t)^2 int pi_j sum_k pi_k (d_k - d_j) dmu`
//!   with `d_j = psi_j - c_j(x) - o_j`
//!
//! where `pi = softmax(a)`. The offsets `o` are `v` for p3 and zero otherwise.
//! Every softmax subtracts the largest exponent before exponentiating.

use nalgebra::DMatrix;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::model::{Point, ProblemSpec};
use crate::quadrature::{integrate, integrate_vector, QuadratureGrid};

type Scratch = SmallVec<[f64; 32]>;

/// Homotopy time and dual weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub t: f64,
    pub psi: Vec<f64>,
}

impl DualState {
    pub fn new(t: f64, psi: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::TimeOutOfRange { t, range: "[0, 1]" });
        }
        if psi.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteState { t });
        }
        Ok(Self { t, psi })
    }
}

/// Which derivative blocks to accumulate in one sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parts {
    pub grad: bool,
    pub hess: bool,
    pub dt: bool,
}

impl Parts {
    pub const ALL: Parts = Parts {
        grad: true,
        hess: true,
        dt: true,
    };
    pub const GRAD: Parts = Parts {
        grad: true,
        hess: false,
        dt: false,
    };
}

/// Kernel derivatives at one `(psi, t)`. Blocks not requested are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEval {
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
    pub dt_grad: Vec<f64>,
}

fn check_inputs(psi: &[f64], t: f64, problem: &ProblemSpec) -> Result<()> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::TimeOutOfRange { t, range: "[0, 1)" });
    }
    if psi.len() != problem.n() {
        return Err(Error::InvalidProblem(format!(
            "psi has {} components, expected {}",
            psi.len(),
            problem.n()
        )));
    }
    if psi.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFiniteState { t });
    }
    Ok(())
}

/// Fill `pi` with the stabilized softmax at `x`; returns `(max exponent, sum)`
/// so callers can recover `log sum exp`.
#[inline]
fn softmax_into(psi: &[f64], t: f64, x: &Point, problem: &ProblemSpec, pi: &mut [f64]) -> (f64, f64) {
    let cost = problem.cost();
    let offsets = problem.transport_offsets();
    let inv = 1.0 / (1.0 - t);
    let mut m = f64::NEG_INFINITY;
    for (j, y) in problem.targets().points().iter().enumerate() {
        let a = (psi[j] - t * cost.eval(x, y) - offsets[j]) * inv;
        pi[j] = a;
        if a > m {
            m = a;
        }
    }
    let mut s = 0.0;
    for p in pi.iter_mut() {
        *p = (*p - m).exp();
        s += *p;
    }
    let r = 1.0 / s;
    for p in pi.iter_mut() {
        *p *= r;
    }
    (m, s)
}

/// Softmax weights `pi^t(psi)(x)`.
pub fn softmax_weights(psi: &[f64], t: f64, x: &Point, problem: &ProblemSpec) -> Result<Vec<f64>> {
    check_inputs(psi, t, problem)?;
    let mut pi = vec![0.0; psi.len()];
    softmax_into(psi, t, x, problem, &mut pi);
    Ok(pi)
}

/// `K(psi, t)` by quadrature of the log-sum-exp integrand.
pub fn dual_kernel_value(psi: &[f64], t: f64, problem: &ProblemSpec, grid: &QuadratureGrid) -> Result<f64> {
    check_inputs(psi, t, problem)?;
    let mu = problem.mu();
    let n = psi.len();
    let integral = integrate(grid, |x| {
        let mut pi: Scratch = SmallVec::from_elem(0.0, n);
        let (m, s) = softmax_into(psi, t, x, problem, &mut pi);
        (m + s.ln()) * mu.eval(x)
    })?;
    Ok(-(1.0 - t) * integral)
}

/// Accumulate the requested derivative blocks in a single quadrature sweep.
pub fn evaluate(
    psi: &[f64],
    t: f64,
    problem: &ProblemSpec,
    grid: &QuadratureGrid,
    parts: Parts,
) -> Result<KernelEval> {
    check_inputs(psi, t, problem)?;
    let n = psi.len();
    let n_grad = if parts.grad { n } else { 0 };
    let n_dt = if parts.dt { n } else { 0 };
    let n_hess = if parts.hess { n * (n + 1) / 2 } else { 0 };
    let (off_dt, off_hess) = (n_grad, n_grad + n_dt);
    let mu = problem.mu();
    let cost = problem.cost();
    let offsets = problem.transport_offsets();
    let targets = problem.targets().points();

    let raw = integrate_vector(grid, n_grad + n_dt + n_hess, |x, out| {
        let mut pi: Scratch = SmallVec::from_elem(0.0, n);
        softmax_into(psi, t, x, problem, &mut pi);
        let w = mu.eval(x);
        if parts.grad {
            for j in 0..n {
                out[j] = -w * pi[j];
            }
        }
        if parts.dt {
            let mut d: Scratch = SmallVec::with_capacity(n);
            let mut mean = 0.0;
            for j in 0..n {
                let dj = psi[j] - cost.eval(x, &targets[j]) - offsets[j];
                mean += pi[j] * dj;
                d.push(dj);
            }
            for j in 0..n {
                out[off_dt + j] = w * pi[j] * (mean - d[j]);
            }
        }
        if parts.hess {
            let mut idx = off_hess;
            for j in 0..n {
                let wp = w * pi[j];
                out[idx] = wp * pi[j] - wp;
                idx += 1;
                for k in (j + 1)..n {
                    out[idx] = wp * pi[k];
                    idx += 1;
                }
            }
        }
    })?;

    let grad = raw[..n_grad].to_vec();
    let inv = 1.0 / (1.0 - t);
    let dt_grad = raw[off_dt..off_dt + n_dt].iter().map(|v| v * inv * inv).collect();
    let hess = if parts.hess {
        let mut h = DMatrix::zeros(n, n);
        let mut idx = off_hess;
        for j in 0..n {
            for k in j..n {
                let v = raw[idx] * inv;
                h[(j, k)] = v;
                h[(k, j)] = v;
                idx += 1;
            }
        }
        h
    } else {
        DMatrix::zeros(0, 0)
    };
    Ok(KernelEval {
        grad,
        hess,
        dt_grad,
    })
}

/// `grad_psi K(psi, t)`.
pub fn grad_k(psi: &[f64], t: f64, problem: &ProblemSpec, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    Ok(evaluate(psi, t, problem, grid, Parts::GRAD)?.grad)
}

/// `D^2_psi K(psi, t)`.
pub fn hess_k(psi: &[f64], t: f64, problem: &ProblemSpec, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    let parts = Parts {
        grad: false,
        hess: true,
        dt: false,
    };
    Ok(evaluate(psi, t, problem, grid, parts)?.hess)
}

/// `d/dt grad_psi K(psi, t)`.
pub fn dt_grad_k(psi: &[f64], t: f64, problem: &ProblemSpec, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let parts = Parts {
        grad: false,
        hess: false,
        dt: true,
    };
    Ok(evaluate(psi, t, problem, grid, parts)?.dt_grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostSpec, DensitySpec, Domain, TargetSet, Variant};
    use crate::quadrature::build_grid;

    fn problem_1d(ys: &[f64]) -> ProblemSpec {
        let d = Domain::unit(1).unwrap();
        let t = TargetSet::new(ys.iter().map(|&y| [y, 0.0]).collect(), 1).unwrap();
        ProblemSpec::new(
            Variant::P1,
            d,
            t,
            DensitySpec::uniform(&d),
            CostSpec::quadratic(),
            None,
            None,
        )
        .unwrap()
    }

    fn grid() -> QuadratureGrid {
        build_grid(&Domain::unit(1).unwrap(), 64, 8).unwrap()
    }

    #[test]
    fn equidistant_point_gets_equal_weights() {
        let p = problem_1d(&[0.25, 0.75]);
        for t in [0.0, 0.3, 0.9, 0.999] {
            let pi = softmax_weights(&[0.0, 0.0], t, &[0.5, 0.0], &p).unwrap();
            assert!((pi[0] - 0.5).abs() < 1e-15 && (pi[1] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_time_softmax_ignores_position() {
        let p = problem_1d(&[0.1, 0.4, 2.0]);
        let psi = [0.3, -1.0, 0.7];
        let z: f64 = psi.iter().map(|v: &f64| v.exp()).sum();
        for x in [0.0, 0.37, 1.0] {
            let pi = softmax_weights(&psi, 0.0, &[x, 0.0], &p).unwrap();
            for j in 0..3 {
                assert!((pi[j] - psi[j].exp() / z).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn stabilized_softmax_does_not_overflow() {
        // c_1(x) = 0, c_2(x) = 1 at x = 0 with targets 0 and 1
        let p = problem_1d(&[0.0, 1.0]);
        let pi = softmax_weights(&[0.0, 0.0], 0.99, &[0.0, 0.0], &p).unwrap();
        let expect = 1.0 / (1.0 + (-99.0f64).exp());
        assert!((pi[0] - expect).abs() < 1e-15);
        assert!(pi[1] > 0.0 && pi[1] < 1e-42);
    }

    #[test]
    fn rejects_t_at_or_beyond_one() {
        let p = problem_1d(&[0.0, 1.0]);
        assert!(softmax_weights(&[0.0, 0.0], 1.0, &[0.0, 0.0], &p).is_err());
        assert!(grad_k(&[0.0, 0.0], 1.0, &p, &grid()).is_err());
        assert!(grad_k(&[0.0, 0.0], -0.1, &p, &grid()).is_err());
    }

    #[test]
    fn gradient_at_the_origin_is_uniform() {
        let p = problem_1d(&[0.1, 1.3, 2.2, 4.0]);
        let g = grad_k(&[0.0; 4], 0.0, &p, &grid()).unwrap();
        for v in g {
            assert!((v + 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn single_target_is_trivial() {
        let p = problem_1d(&[0.6]);
        for t in [0.0, 0.5, 0.99] {
            let e = evaluate(&[1.7], t, &p, &grid(), Parts::ALL).unwrap();
            assert!((e.grad[0] + 1.0).abs() < 1e-14);
            assert!(e.hess[(0, 0)].abs() < 1e-13);
            assert!(e.dt_grad[0].abs() < 1e-13);
        }
    }

    #[test]
    fn hessian_at_the_origin_two_targets() {
        let p = problem_1d(&[0.3, 2.0]);
        let h = hess_k(&[0.0, 0.0], 0.0, &p, &grid()).unwrap();
        let want = [[-0.25, 0.25], [0.25, -0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - want[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mirror_symmetric_instance_has_zero_time_derivative() {
        let p = problem_1d(&[0.25, 0.75]);
        for t in [0.1, 0.5, 0.9] {
            let d = dt_grad_k(&[0.4, 0.4], t, &p, &grid()).unwrap();
            assert!(d[0].abs() < 1e-12 && d[1].abs() < 1e-12, "{d:?}");
        }
    }
}

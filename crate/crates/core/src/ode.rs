//! Explicit three-stage Runge-Kutta integration of
//! `psi'(t) = -[dG/dpsi]^{-1} dG/dt` from `t = 0` to `t = 1`.

use std::fmt::Write as _;
use std::time::Instant;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::DualState;
use crate::laguerre::{label_field, smoothed_cell_field, sup_norm, unregularized_residual, CellField};
use crate::linalg::{gauge_fixed, solve_negative_definite};
use crate::model::ProblemSpec;
use crate::quadrature::QuadratureGrid;
use crate::residuals::{self, initial_state, needs_gauge};

pub const DEFAULT_ALPHA: f64 = 0.125;
pub const DEFAULT_BETA: f64 = 0.25;
pub const DEFAULT_BOOST_AFTER: f64 = 0.9;
pub const DEFAULT_BOOST_FACTOR: usize = 2;

/// Three-stage explicit tableau with stage times `(0, alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RkTableau {
    pub alpha: f64,
    pub beta: f64,
    pub c: [f64; 3],
    pub a21: f64,
    pub a31: f64,
    pub a32: f64,
    pub b: [f64; 3],
}

impl RkTableau {
    /// Residuals of the third-order conditions
    /// `[sum b - 1, sum b c - 1/2, sum b c^2 - 1/3, b3 a32 c2 - 1/6]`.
    pub fn order_defects(&self) -> [f64; 4] {
        let b = self.b;
        let c = self.c;
        [
            b[0] + b[1] + b[2] - 1.0,
            b[1] * c[1] + b[2] * c[2] - 0.5,
            b[1] * c[1] * c[1] + b[2] * c[2] * c[2] - 1.0 / 3.0,
            b[2] * self.a32 * c[1] - 1.0 / 6.0,
        ]
    }

    /// Row sums must reproduce the stage times.
    pub fn consistency_defects(&self) -> [f64; 2] {
        [self.a21 - self.c[1], self.a31 + self.a32 - self.c[2]]
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        let worst = self
            .order_defects()
            .iter()
            .chain(self.consistency_defects().iter())
            .fold(0.0f64, |m, d| m.max(d.abs()));
        if !(worst <= tol) {
            return Err(Error::InvalidTableau(format!("order conditions violated by {worst:e}")));
        }
        if self.c.iter().any(|&c| !(0.0..1.0).contains(&c)) {
            return Err(Error::InvalidTableau("stage times must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Two-parameter third-order family with stage times `(0, alpha, beta)`,
/// `alpha, beta in (0, 1)`, `alpha != beta`, `alpha != 2/3`.
pub fn rk3_tableau(alpha: f64, beta: f64) -> Result<RkTableau> {
    let bad = |m: &str| Err(Error::InvalidTableau(format!("{m} (alpha = {alpha}, beta = {beta})")));
    if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
        return bad("stage times must lie in (0, 1)");
    }
    if alpha == beta {
        return bad("alpha and beta must differ");
    }
    if (3.0 * alpha - 2.0).abs() < 1e-12 {
        return bad("alpha must differ from 2/3");
    }
    let (a, b) = (alpha, beta);
    let a31 = (b / a) * (b - 3.0 * a * (1.0 - a)) / (3.0 * a - 2.0);
    let a32 = -(b / a) * (b - a) / (3.0 * a - 2.0);
    let b1 = 1.0 - (3.0 * a + 3.0 * b - 2.0) / (6.0 * a * b);
    let b2 = (3.0 * b - 2.0) / (6.0 * a * (b - a));
    let b3 = (2.0 - 3.0 * a) / (6.0 * b * (b - a));
    let tab = RkTableau {
        alpha,
        beta,
        c: [0.0, a, b],
        a21: a,
        a31,
        a32,
        b: [b1, b2, b3],
    };
    let scale = 1.0 + [b1, b2, b3, a31, a32].iter().fold(0.0f64, |m, v| m.max(v.abs())).powi(2);
    tab.check(1e-13 * scale)?;
    Ok(tab)
}

/// `psi'(t)` from the linear system `dG/dpsi psi' = -dG/dt`. For p4 the
/// mean-zero solution is returned.
pub fn rhs(problem: &ProblemSpec, psi: &[f64], t: f64, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let e = residuals::evaluate(problem, psi, t, grid, true)?;
    if needs_gauge(problem) && psi.len() == 1 {
        // the only direction is the gauge
        return Ok(vec![0.0]);
    }
    let jac = if needs_gauge(problem) { gauge_fixed(&e.jac) } else { e.jac };
    let neg: Vec<f64> = e.dt.iter().map(|v| -v).collect();
    solve_negative_definite(&jac, &neg, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyOptions {
    pub dt: f64,
    pub tableau: RkTableau,
    pub snapshot_times: Vec<f64>,
    /// Stage times above this use the refined grid.
    pub boost_after: Option<f64>,
    pub boost_factor: usize,
}

impl HomotopyOptions {
    pub fn new(dt: f64) -> Result<Self> {
        Ok(Self {
            dt,
            tableau: rk3_tableau(DEFAULT_ALPHA, DEFAULT_BETA)?,
            snapshot_times: Vec::new(),
            boost_after: Some(DEFAULT_BOOST_AFTER),
            boost_factor: DEFAULT_BOOST_FACTOR,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalReport {
    pub psi: Vec<f64>,
    pub residual: Vec<f64>,
    pub error_sup: f64,
    /// Wall time of the time loop and terminal residual.
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DualState>,
    pub snapshots: Vec<CellField>,
    pub report: TerminalReport,
}

impl Trajectory {
    /// `t,psi_1,...,psi_N`, one row per step, shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.psi.len());
        let mut s = String::from("t");
        for j in 1..=n {
            let _ = write!(s, ",psi_{j}");
        }
        s.push('\n');
        for st in &self.states {
            let _ = write!(s, "{:?}", st.t);
            for v in &st.psi {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        s
    }
}

/// Number of steps for `dt`, which must divide 1.
pub fn step_count(dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt <= 0.25) {
        return Err(Error::InvalidStep(dt));
    }
    let n = (1.0 / dt).round();
    if (n * dt - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidStep(dt));
    }
    Ok(n as usize)
}

/// Step indices of the requested snapshot times on the `k / steps` lattice.
fn snapshot_steps(times: &[f64], steps: usize) -> Result<Vec<usize>> {
    times
        .iter()
        .map(|&t| {
            let k = (t * steps as f64).round();
            if !(0.0..=1.0).contains(&t) || (k - t * steps as f64).abs() > 1e-9 {
                Err(Error::SnapshotTime(t))
            } else {
                Ok(k as usize)
            }
        })
        .collect()
}

fn snapshot(problem: &ProblemSpec, psi: &[f64], t: f64, grid: &QuadratureGrid) -> Result<CellField> {
    if t >= 1.0 {
        label_field(problem, psi, grid)
    } else {
        smoothed_cell_field(psi, t, problem, grid)
    }
}

/// Integrate from the closed-form initial data to `t = 1` on the lattice
/// `t_k = k dt`. For variants singular at `t = 0` the first stage uses the
/// supplied `psi'(0)`. No stage is evaluated at `t >= 1`.
pub fn integrate_homotopy(problem: &ProblemSpec, grid: &QuadratureGrid, options: &HomotopyOptions) -> Result<Trajectory> {
    let steps = step_count(options.dt)?;
    let snaps = snapshot_steps(&options.snapshot_times, steps)?;
    let tab = &options.tableau;
    let boosted = match options.boost_after {
        Some(_) if options.boost_factor > 1 => Some(grid.refined(options.boost_factor)?),
        _ => None,
    };
    let grid_at = |t: f64| -> &QuadratureGrid {
        match (options.boost_after, &boosted) {
            (Some(tb), Some(g)) if t > tb => g,
            _ => grid,
        }
    };

    let start = Instant::now();
    let init = initial_state(problem, grid)?;
    let n = problem.n();
    let h = 1.0 / steps as f64;
    let mut psi = init.psi0;
    let mut states = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    states.push(DualState { t: 0.0, psi: psi.clone() });
    for (i, _) in snaps.iter().enumerate().filter(|(_, &k)| k == 0) {
        snapshots.push((i, snapshot(problem, &psi, 0.0, grid)?));
    }

    let axpy = |base: &[f64], terms: &[(f64, &Vec<f64>)]| -> Vec<f64> {
        (0..n)
            .map(|j| base[j] + h * terms.iter().map(|(c, k)| c * k[j]).sum::<f64>())
            .collect()
    };
    for step in 0..steps {
        let t = step as f64 * h;
        let k1 = match (&init.dpsi0, step) {
            (Some(d), 0) => d.clone(),
            _ => rhs(problem, &psi, t, grid_at(t))?,
        };
        let t2 = t + tab.c[1] * h;
        let k2 = rhs(problem, &axpy(&psi, &[(tab.a21, &k1)]), t2, grid_at(t2))?;
        let t3 = t + tab.c[2] * h;
        let k3 = rhs(problem, &axpy(&psi, &[(tab.a31, &k1), (tab.a32, &k2)]), t3, grid_at(t3))?;
        let next = axpy(&psi, &[(tab.b[0], &k1), (tab.b[1], &k2), (tab.b[2], &k3)]);
        let t_next = if step + 1 == steps { 1.0 } else { (step + 1) as f64 * h };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t: t_next });
        }
        psi = next;
        states.push(DualState {
            t: t_next,
            psi: psi.clone(),
        });
        for (i, _) in snaps.iter().enumerate().filter(|(_, &k)| k == step + 1) {
            snapshots.push((i, snapshot(problem, &psi, t_next, grid)?));
        }
        debug!("t = {t_next:.4}, psi = {psi:?}");
    }

    let residual = unregularized_residual(problem, &psi, grid)?;
    let error_sup = sup_norm(&residual);
    let runtime_seconds = start.elapsed().as_secs_f64();
    snapshots.sort_by_key(|(i, _)| *i);
    Ok(Trajectory {
        states,
        snapshots: snapshots.into_iter().map(|(_, f)| f).collect(),
        report: TerminalReport {
            psi,
            residual,
            error_sup,
            runtime_seconds,
        },
    })
}

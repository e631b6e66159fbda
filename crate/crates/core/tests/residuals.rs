use nalgebra::Cholesky;

use sdot_core::model::{build_problem, ProblemConfig};
use sdot_core::residuals::{self, initial_state, residual};
use sdot_core::{build_grid, default_resolution, integrate_homotopy, HomotopyOptions, ProblemSpec, QuadratureGrid, Variant};

const VARIANTS: [Variant; 4] = [Variant::P1, Variant::P2, Variant::P3, Variant::P4];

fn problem(variant: Variant, dim: usize, n: usize, seed: u64) -> ProblemSpec {
    build_problem(&ProblemConfig::sampled(variant, dim, n, seed)).unwrap()
}

fn coarse(p: &ProblemSpec) -> QuadratureGrid {
    if p.dim() == 1 {
        build_grid(p.domain(), 64, 8).unwrap()
    } else {
        build_grid(p.domain(), 16, 4).unwrap()
    }
}

fn default_grid(p: &ProblemSpec) -> QuadratureGrid {
    let (panels, order) = default_resolution(p.dim());
    build_grid(p.domain(), panels, order).unwrap()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / b.iter().fold(1e-4f64, |m, x| m.max(x.abs()))
}

#[test]
fn jacobian_and_time_derivative_match_differences() {
    let h = 1e-5;
    for variant in VARIANTS {
        for dim in [1, 2] {
            for (n, seed) in [(2, 1), (4, 2)] {
                let p = problem(variant, dim, n, seed);
                let g = coarse(&p);
                let scale = if variant == Variant::P4 { 0.05 } else { 0.5 };
                let psi: Vec<f64> = (0..n).map(|j| scale * ((j as f64) * 1.7).sin()).collect();
                for t in [0.25, 0.6] {
                    let e = residuals::evaluate(&p, &psi, t, &g, true).unwrap();
                    for j in 0..n {
                        let mut a = psi.clone();
                        let mut b = psi.clone();
                        a[j] += h;
                        b[j] -= h;
                        let (ra, rb) = (residual(&p, &a, t, &g).unwrap(), residual(&p, &b, t, &g).unwrap());
                        let fd: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| (x - y) / (2.0 * h)).collect();
                        let col: Vec<f64> = e.jac.column(j).iter().copied().collect();
                        assert!(rel(&col, &fd) <= 1e-5, "{variant:?} {dim}-D N={n} t={t} col {j}: {col:?} vs {fd:?}");
                    }
                    let (ra, rb) = (residual(&p, &psi, t + h, &g).unwrap(), residual(&p, &psi, t - h, &g).unwrap());
                    let fd: Vec<f64> = ra.iter().zip(&rb).map(|(x, y)| (x - y) / (2.0 * h)).collect();
                    assert!(rel(&e.dt, &fd) <= 1e-5, "{variant:?} {dim}-D N={n} t={t} dt: {:?} vs {fd:?}", e.dt);
                }
            }
        }
    }
}

#[test]
fn initial_data_closed_forms() {
    let p = problem(Variant::P2, 1, 4, 0);
    let init = initial_state(&p, &default_grid(&p)).unwrap();
    assert_eq!(init.psi0, vec![0.0; 4]);
    for v in init.dpsi0.unwrap() {
        assert!((v - 4f64.ln()).abs() < 1e-15);
    }
    // two targets at squared distance 0.09 from the anchor
    let mut c = ProblemConfig::sampled(Variant::P3, 1, 2, 0);
    c.targets = Some(vec![vec![0.2], vec![0.8]]);
    let p = build_problem(&c).unwrap();
    let init = initial_state(&p, &default_grid(&p)).unwrap();
    let want = 0.045 + (2.0 * (-0.045f64).exp()).ln();
    for v in init.psi0 {
        assert!((v - want).abs() < 1e-14);
    }
    let p = problem(Variant::P1, 1, 5, 0);
    let g = default_grid(&p);
    let init = initial_state(&p, &g).unwrap();
    assert!(residual(&p, &init.psi0, 0.0, &g).unwrap().iter().all(|r| r.abs() < 1e-14));
}

#[test]
fn singular_variants_reject_time_zero() {
    for variant in [Variant::P2, Variant::P4] {
        let p = problem(variant, 1, 3, 0);
        assert!(residual(&p, &[0.0; 3], 0.0, &default_grid(&p)).is_err());
    }
}

#[test]
fn jacobian_is_negative_definite_along_trajectories() {
    for variant in VARIANTS {
        let p = problem(variant, 1, 4, 0);
        let g = default_grid(&p);
        let traj = integrate_homotopy(&p, &g, &HomotopyOptions::new(0.05).unwrap()).unwrap();
        for s in &traj.states[1..traj.states.len() - 1] {
            let mut jac = residuals::residual_jacobian(&p, &s.psi, s.t, &g).unwrap();
            if variant == Variant::P4 {
                // restricted to mean-zero directions
                let n = jac.nrows() as f64;
                let shift = jac.trace() / n;
                jac.iter_mut().for_each(|v| *v += shift);
            }
            let chol = Cholesky::new(-jac).unwrap_or_else(|| panic!("{variant:?} t={}", s.t));
            assert!(chol.l().diagonal().iter().all(|&d| d > 0.0));
        }
    }
}

#[test]
fn trajectories_stay_bounded() {
    for variant in VARIANTS {
        for n in [2, 4, 8] {
            let p = problem(variant, 1, n, 3);
            let g = default_grid(&p);
            let traj = integrate_homotopy(&p, &g, &HomotopyOptions::new(0.02).unwrap()).unwrap();
            let cost = p.cost();
            let nodes = g.nodes();
            let max_cost = p
                .targets()
                .points()
                .iter()
                .flat_map(|y| nodes.iter().map(move |x| cost.eval(x, y)))
                .fold(0.0f64, f64::max);
            let log_n = (n as f64).ln();
            let bound = 10.0 * (log_n + max_cost + log_n);
            let scaled = variant.singular_at_zero();
            for s in traj.states.iter().filter(|s| s.t > 0.0) {
                let m = s.psi.iter().map(|v| if scaled { v / s.t } else { *v }).fold(0.0f64, |a, v| a.max(v.abs()));
                assert!(m <= bound, "{variant:?} N={n} t={}: {m} > {bound}", s.t);
            }
        }
    }
}

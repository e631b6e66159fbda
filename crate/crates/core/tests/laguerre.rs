use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdot_core::kernel::grad_k;
use sdot_core::laguerre::{
    cell_measures, default_triple_eps, diagnostic_grid, label_field, smoothed_cell_field, transport_measures,
    triple_intersection_check,
};
use sdot_core::model::{build_problem, sample_targets, ProblemConfig};
use sdot_core::{build_grid, CostSpec, DensitySpec, Domain, MeasureMode, ProblemSpec, QuadratureGrid, TargetSet, Variant};

fn grid1() -> QuadratureGrid {
    build_grid(&Domain::unit(1).unwrap(), 64, 8).unwrap()
}

fn grid2() -> QuadratureGrid {
    build_grid(&Domain::unit(2).unwrap(), 24, 4).unwrap()
}

fn densities(dim: usize) -> Vec<DensitySpec> {
    let d = Domain::unit(dim).unwrap();
    vec![DensitySpec::uniform(&d), DensitySpec::catalog_gaussian(dim).unwrap()]
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn interval_cells_agree_with_refined_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = grid1();
    let q = CostSpec::quadratic();
    for k in 0..50 {
        let n = rng.random_range(1..=16);
        let targets = sample_targets(n, &[-0.5], &[1.5], k).unwrap();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-0.3..0.3)).collect();
        for rho in densities(1) {
            let a = cell_measures(&w, &targets, q, &rho, &g, MeasureMode::Analytic1D).unwrap();
            let b = cell_measures(&w, &targets, q, &rho, &g, MeasureMode::GridLabel).unwrap();
            assert!(max_abs_diff(&a, &b) <= 1e-4, "instance {k}: {a:?} vs {b:?}");
        }
    }
}

#[test]
fn polygon_cells_agree_with_refined_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = grid2();
    let q = CostSpec::quadratic();
    for k in 0..10 {
        let n = rng.random_range(2..=8);
        let targets = sample_targets(n, &[-0.2, -0.2], &[1.2, 1.2], 100 + k).unwrap();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
        for rho in densities(2) {
            let a = cell_measures(&w, &targets, q, &rho, &g, MeasureMode::Polygon2D).unwrap();
            let b = cell_measures(&w, &targets, q, &rho, &g, MeasureMode::GridLabel).unwrap();
            assert!(max_abs_diff(&a, &b) <= 1e-4, "instance {k}: {a:?} vs {b:?}");
            assert!((a.iter().sum::<f64>() - rho.mass_on(g.domain())).abs() < 1e-12);
        }
    }
}

fn modes(dim: usize) -> Vec<(MeasureMode, QuadratureGrid)> {
    if dim == 1 {
        vec![(MeasureMode::Analytic1D, grid1()), (MeasureMode::GridLabel, grid1())]
    } else {
        let coarse = build_grid(&Domain::unit(2).unwrap(), 8, 2).unwrap();
        vec![(MeasureMode::Polygon2D, grid2()), (MeasureMode::GridLabel, coarse)]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn measures_ignore_uniform_shifts(
        dim in 1usize..=2,
        n in 1usize..=6,
        seed in 0u64..500,
        w in prop::collection::vec(-0.2f64..0.2, 6),
        shift in -3.0f64..3.0,
    ) {
        let lo = vec![-0.2; dim];
        let hi = vec![1.2; dim];
        let targets = sample_targets(n, &lo, &hi, seed).unwrap();
        let moved: Vec<f64> = w[..n].iter().map(|v| v + shift).collect();
        for (mode, g) in modes(dim) {
            let rho = DensitySpec::catalog_gaussian(dim).unwrap();
            let a = cell_measures(&w[..n], &targets, CostSpec::quadratic(), &rho, &g, mode).unwrap();
            let b = cell_measures(&moved, &targets, CostSpec::quadratic(), &rho, &g, mode).unwrap();
            prop_assert!(max_abs_diff(&a, &b) <= 1e-12, "{mode:?}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn raising_a_weight_never_shrinks_its_cell(
        dim in 1usize..=2,
        n in 2usize..=6,
        seed in 0u64..500,
        w in prop::collection::vec(-0.2f64..0.2, 6),
        j in 0usize..6,
        bump in 1e-6f64..0.2,
    ) {
        let j = j % n;
        let lo = vec![-0.2; dim];
        let hi = vec![1.2; dim];
        let targets = sample_targets(n, &lo, &hi, seed).unwrap();
        let mut up = w[..n].to_vec();
        up[j] += bump;
        for (mode, g) in modes(dim) {
            let rho = DensitySpec::uniform(g.domain());
            let a = cell_measures(&w[..n], &targets, CostSpec::quadratic(), &rho, &g, mode).unwrap();
            let b = cell_measures(&up, &targets, CostSpec::quadratic(), &rho, &g, mode).unwrap();
            prop_assert!(b[j] >= a[j] - 1e-14, "{mode:?}: {} -> {}", a[j], b[j]);
        }
    }
}

fn sampled(variant: Variant, dim: usize, n: usize, seed: u64) -> ProblemSpec {
    build_problem(&ProblemConfig::sampled(variant, dim, n, seed)).unwrap()
}

#[test]
fn kernel_gradient_approaches_cell_masses() {
    let t = 1.0 - 1e-4;
    for (variant, dim, seed) in [(Variant::P1, 1, 2), (Variant::P3, 1, 4), (Variant::P1, 2, 1), (Variant::P3, 2, 3)] {
        let p = sampled(variant, dim, 4, seed);
        let g = if dim == 1 {
            build_grid(p.domain(), 512, 8).unwrap()
        } else {
            build_grid(p.domain(), 128, 6).unwrap()
        };
        let psi = [0.1, -0.05, 0.02, 0.0];
        let grad = grad_k(&psi, t, &p, &g).unwrap();
        let masses = transport_measures(&p, &psi, &g).unwrap();
        let minus: Vec<f64> = grad.iter().map(|v| -v).collect();
        assert!(max_abs_diff(&minus, &masses) <= 1e-3, "{variant:?} {dim}-D: {minus:?} vs {masses:?}");
    }
}

#[test]
fn smoothed_field_concentrates_on_the_labels() {
    let t = 1.0 - 1e-4;
    for dim in [1, 2] {
        let p = sampled(Variant::P1, dim, 5, 9);
        let g = if dim == 1 { grid1() } else { grid2() };
        let psi = [0.0, 0.1, -0.1, 0.05, 0.2];
        let soft = smoothed_cell_field(&psi, t, &p, &g).unwrap();
        let hard = label_field(&p, &psi, &g).unwrap();
        assert_eq!(soft.labels, hard.labels);
        let weights = soft.weights.unwrap();
        let (mut total, mut count) = (0.0, 0usize);
        for (i, x) in g.nodes().iter().enumerate() {
            let mut c: Vec<f64> = p.targets().points().iter().zip(&psi).map(|(y, w)| p.cost().eval(x, y) - w).collect();
            c.sort_by(f64::total_cmp);
            if c[1] - c[0] > 0.01 {
                total += weights[i * 5 + hard.labels[i]];
                count += 1;
            }
        }
        assert!(count > g.len() / 2);
        assert!(total / count as f64 > 1.0 - 1e-6);
    }
}

#[test]
fn equidistant_node_is_a_triple_point() {
    let g = diagnostic_grid(&Domain::unit(2).unwrap(), 256).unwrap();
    let c = [128.5 / 256.0, 128.5 / 256.0];
    let r = 0.3;
    let points: Vec<Vec<f64>> = [90.0f64, 210.0, 330.0]
        .iter()
        .map(|a| {
            let a = a.to_radians();
            vec![c[0] + r * a.cos(), c[1] + r * a.sin()]
        })
        .collect();
    let mut cfg = ProblemConfig::sampled(Variant::P1, 2, 3, 0);
    cfg.targets = Some(points);
    let p = build_problem(&cfg).unwrap();
    let eps = default_triple_eps(&p, &g);
    assert!(triple_intersection_check(&p, &[0.0; 3], &g, eps).unwrap() >= 1);
}

#[test]
fn cell_field_csv_layout() {
    let p = sampled(Variant::P2, 1, 3, 0);
    let g = build_grid(p.domain(), 2, 1).unwrap();
    let csv = label_field(&p, &[0.0; 3], &g).unwrap().to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x1,label,pi_1,pi_2,pi_3");
    assert_eq!(lines.len(), 3);
    let fields: Vec<&str> = lines[1].split(',').collect();
    let label: usize = fields[1].parse().unwrap();
    assert!((1..=3).contains(&label));
    let ones: Vec<f64> = fields[2..].iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(ones.iter().sum::<f64>(), 1.0);
    assert_eq!(ones[label - 1], 1.0);
}

#[test]
fn targets_are_distinct_in_both_dimensions() {
    for dim in [1, 2] {
        for seed in 0..20 {
            let t: TargetSet = sample_targets(16, &vec![0.0; dim], &vec![1.0; dim], seed).unwrap();
            let pts = t.points();
            for i in 0..pts.len() {
                for j in 0..i {
                    let d = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
                    assert!(d > 0.0);
                }
            }
        }
    }
}

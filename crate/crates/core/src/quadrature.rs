//! Composite Gauss–Legendre quadrature on 1-D intervals and 2-D boxes.
//!
//! Reductions are split into fixed-size node chunks that may run in
//! parallel; each chunk and the final combination use Neumaier-compensated
//! sums in chunk order, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Domain, Point};

const CHUNK: usize = 1024;

/// Supported points-per-panel range.
pub const MIN_ORDER: usize = 1;
pub const MAX_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(order: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Error::QuadratureOrder(order));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite rule along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `panels + 1` ascending panel edges.
    pub edges: Vec<f64>,
}

impl AxisRule {
    fn new(lower: f64, upper: f64, panels: usize, ref_nodes: &[f64], ref_weights: &[f64]) -> Self {
        let h = (upper - lower) / panels as f64;
        let edges: Vec<f64> = (0..=panels)
            .map(|p| if p == panels { upper } else { lower + h * p as f64 })
            .collect();
        let mut nodes = Vec::with_capacity(panels * ref_nodes.len());
        let mut weights = Vec::with_capacity(panels * ref_nodes.len());
        for p in 0..panels {
            let (a, b) = (edges[p], edges[p + 1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (s, w) in ref_nodes.iter().zip(ref_weights) {
                nodes.push(mid + half * s);
                weights.push(half * w);
            }
        }
        Self {
            nodes,
            weights,
            edges,
        }
    }

    pub fn panels(&self) -> usize {
        self.edges.len() - 1
    }
}

/// Tensor-product composite Gauss–Legendre grid over a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    domain: Domain,
    panels_per_axis: usize,
    order: usize,
    axes: Vec<AxisRule>,
    nodes: Vec<Point>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn panels_per_axis(&self) -> usize {
        self.panels_per_axis
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn axis(&self, k: usize) -> &AxisRule {
        &self.axes[k]
    }

    /// Flattened nodes, first axis major.
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Same order with `multiplier` times as many panels per axis.
    pub fn refined(&self, multiplier: usize) -> Result<Self> {
        build_grid(&self.domain, self.panels_per_axis * multiplier.max(1), self.order)
    }
}

/// Default resolution: 64 panels x order 8 in 1-D, 48 x 6 per axis in 2-D.
pub fn default_resolution(dim: usize) -> (usize, usize) {
    if dim == 1 {
        (64, 8)
    } else {
        (48, 6)
    }
}

/// Build the composite rule with `panels_per_axis` equal panels and `order`
/// Gauss points per panel per axis.
pub fn build_grid(domain: &Domain, panels_per_axis: usize, order: usize) -> Result<QuadratureGrid> {
    if panels_per_axis == 0 {
        return Err(Error::InvalidGrid("panels_per_axis must be at least 1".into()));
    }
    let (rn, rw) = gauss_legendre(order)?;
    let axes: Vec<AxisRule> = (0..domain.dim())
        .map(|k| AxisRule::new(domain.lower()[k], domain.upper()[k], panels_per_axis, &rn, &rw))
        .collect();
    let (nodes, weights) = if domain.dim() == 1 {
        let a = &axes[0];
        (
            a.nodes.iter().map(|&x| [x, 0.0]).collect(),
            a.weights.clone(),
        )
    } else {
        let (a, b) = (&axes[0], &axes[1]);
        let m = a.nodes.len() * b.nodes.len();
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for (x, wx) in a.nodes.iter().zip(&a.weights) {
            for (y, wy) in b.nodes.iter().zip(&b.weights) {
                nodes.push([*x, *y]);
                weights.push(wx * wy);
            }
        }
        (nodes, weights)
    };
    Ok(QuadratureGrid {
        domain: *domain,
        panels_per_axis,
        order,
        axes,
        nodes,
        weights,
    })
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `sum_i w_i f(x_i)`.
pub fn integrate<F>(grid: &QuadratureGrid, f: F) -> Result<f64>
where
    F: Fn(&Point) -> f64 + Sync,
{
    let v = integrate_vector(grid, 1, |x, out| out[0] = f(x))?;
    Ok(v[0])
}

/// Componentwise `sum_i w_i f(x_i)` for a vector-valued integrand with `n`
/// components. `f` receives a zeroed output slice for every node.
pub fn integrate_vector<F>(grid: &QuadratureGrid, n: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&Point, &mut [f64]) + Sync,
{
    let nodes = grid.nodes();
    let weights = grid.weights();
    let chunk_sum = |chunk: usize| -> Result<Vec<CompensatedSum>> {
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(nodes.len());
        let mut acc = vec![CompensatedSum::default(); n];
        let mut buf = vec![0.0; n];
        for i in start..end {
            buf.iter_mut().for_each(|b| *b = 0.0);
            f(&nodes[i], &mut buf);
            let w = weights[i];
            for (a, &v) in acc.iter_mut().zip(&buf) {
                if !v.is_finite() {
                    return Err(Error::NonFiniteIntegrand { index: i });
                }
                a.add(w * v);
            }
        }
        Ok(acc)
    };
    let chunks = nodes.len().div_ceil(CHUNK);
    let partials: Vec<Result<Vec<CompensatedSum>>> = if chunks > 1 {
        (0..chunks).into_par_iter().map(chunk_sum).collect()
    } else {
        (0..chunks).map(chunk_sum).collect()
    };
    let mut total = vec![CompensatedSum::default(); n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part?) {
            t.add(p.sum);
            t.add(p.comp);
        }
    }
    Ok(total.iter().map(CompensatedSum::value).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dim: usize) -> Domain {
        Domain::unit(dim).unwrap()
    }

    #[test]
    fn two_point_rule_on_unit_interval() {
        let g = build_grid(&unit(1), 1, 2).unwrap();
        let h = 0.5 / 3f64.sqrt();
        assert!((g.nodes()[0][0] - (0.5 - h)).abs() < 1e-15);
        assert!((g.nodes()[1][0] - (0.5 + h)).abs() < 1e-15);
        assert!((g.weights()[0] - 0.5).abs() < 1e-15);
        assert!((g.weights()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tensor_grid_counts_and_volume() {
        let g = build_grid(&unit(2), 2, 4).unwrap();
        assert_eq!(g.len(), 64);
        let s: f64 = g.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        assert!(g.weights().iter().all(|&w| w > 0.0));
        let d = Domain::new(&[-1.0, 0.0], &[2.0, 0.5]).unwrap();
        let g = build_grid(&d, 5, 7).unwrap();
        assert_eq!(g.len(), 35 * 35);
        let s = integrate(&g, |_| 1.0).unwrap();
        assert!((s - 1.5).abs() / 1.5 < 1e-12);
    }

    #[test]
    fn rejects_unsupported_orders() {
        assert_eq!(build_grid(&unit(1), 4, 0), Err(Error::QuadratureOrder(0)));
        let mid = build_grid(&unit(1), 4, 1).unwrap();
        assert!((mid.nodes()[1][0] - 0.375).abs() < 1e-15);
        assert_eq!(build_grid(&unit(1), 4, 17), Err(Error::QuadratureOrder(17)));
        assert!(build_grid(&unit(1), 0, 4).is_err());
    }

    #[test]
    fn polynomial_exactness_every_order() {
        for order in MIN_ORDER..=MAX_ORDER {
            for dim in [1, 2] {
                let d = Domain::new(&vec![-0.5; dim], &vec![2.0; dim]).unwrap();
                let g = build_grid(&d, 3, order).unwrap();
                for k in 0..=(2 * order - 1) as i32 {
                    for axis in 0..dim {
                        let got = integrate(&g, |x| x[axis].powi(k)).unwrap();
                        let one_axis =
                            (2f64.powi(k + 1) - (-0.5f64).powi(k + 1)) / (k + 1) as f64;
                        let exact = one_axis * if dim == 2 { 2.5 } else { 1.0 };
                        let rel = (got - exact).abs() / exact.abs().max(1e-300);
                        assert!(rel <= 1e-13, "order {order} dim {dim} k {k}: rel {rel:e}");
                    }
                }
            }
        }
    }

    #[test]
    fn simple_integrals() {
        let g = build_grid(&unit(1), 4, 8).unwrap();
        assert!((integrate(&g, |_| 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((integrate(&g, |x| x[0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((integrate(&g, |x| x[0].powi(3)).unwrap() - 0.25).abs() < 1e-15);
        let v = integrate_vector(&g, 2, |x, out| {
            out[0] = 1.0;
            out[1] = x[0];
        })
        .unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_finite_values_are_reported() {
        let g = build_grid(&unit(1), 4, 8).unwrap();
        let bad = g.nodes()[5][0];
        let r = integrate_vector(&g, 2, |x, out| {
            out[0] = 1.0;
            out[1] = if x[0] == bad { f64::NAN } else { 0.0 };
        });
        assert_eq!(r, Err(Error::NonFiniteIntegrand { index: 5 }));
    }

    #[test]
    fn reductions_are_bit_identical_across_runs() {
        let g = build_grid(&unit(2), 48, 6).unwrap();
        let f = |x: &Point| (3.0 * x[0]).sin() * (-x[1] * x[1]).exp() + 1e-9 * x[0];
        let a = integrate(&g, f).unwrap();
        for _ in 0..5 {
            assert_eq!(a.to_bits(), integrate(&g, f).unwrap().to_bits());
        }
    }

    #[test]
    fn refined_grid_multiplies_panels() {
        let g = build_grid(&unit(1), 8, 4).unwrap().refined(3).unwrap();
        assert_eq!(g.panels_per_axis(), 24);
        assert_eq!(g.len(), 96);
    }
}

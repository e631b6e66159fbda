//! Laguerre cells `Lag_j(w) = {x : c_j(x) - w_j <= c_k(x) - w_k for all k}`
//! and their measures.
//!
//! Three measure modes:
//! * `Analytic1D`: interval cells from the lower envelope of the lines
//!   `x -> -2 y_j x + y_j^2 - w_j` (quadratic cost, 1-D).
//! * `Polygon2D`: convex cells clipped from the box by the pairwise
//!   half-planes (quadratic cost, 2-D), integrated slab by slab.
//! * `GridLabel`: argmin labels at quadrature nodes, recursively refining
//!   panels whose nodes disagree. Works for any cost.
//!
//! Ties are broken by the lowest index.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::softmax_weights;
use crate::model::{CostSpec, DensitySpec, Domain, Point, ProblemSpec, TargetSet, Variant};
use crate::quadrature::{build_grid, gauss_legendre, CompensatedSum, QuadratureGrid};

/// Finite-difference step for the 2-D measure Jacobian.
pub const MEASURE_FD_STEP: f64 = 1e-5;

/// Refinement depth of `GridLabel` panels in 1-D and 2-D.
pub const LABEL_DEPTH_1D: u32 = 12;
pub const LABEL_DEPTH_2D: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    Analytic1D,
    Polygon2D,
    GridLabel,
}

impl MeasureMode {
    /// Exact mode when the geometry allows it, labels otherwise.
    pub fn auto(dim: usize, cost: CostSpec) -> Self {
        match (dim, cost.is_quadratic()) {
            (1, true) => MeasureMode::Analytic1D,
            (2, true) => MeasureMode::Polygon2D,
            _ => MeasureMode::GridLabel,
        }
    }
}

/// Index of the smallest `c_j(x) - w_j`, lowest index on ties.
#[inline]
pub fn argmin_label(x: &Point, w: &[f64], targets: &[Point], cost: CostSpec) -> usize {
    let mut best = 0;
    let mut val = f64::INFINITY;
    for (j, y) in targets.iter().enumerate() {
        let v = cost.eval(x, y) - w[j];
        if v < val {
            val = v;
            best = j;
        }
    }
    best
}

fn check_weights(w: &[f64], targets: &TargetSet) -> Result<()> {
    if w.len() != targets.len() {
        return Err(Error::InvalidProblem(format!(
            "weight vector has {} components, expected {}",
            w.len(),
            targets.len()
        )));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidProblem("non-finite Laguerre weights".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 1-D

/// Point shared by two adjacent nonempty cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interface {
    pub left: usize,
    pub right: usize,
    pub x: f64,
    /// Strictly inside the domain.
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreDiagram1D {
    /// Target indices sorted by coordinate.
    pub order: Vec<usize>,
    /// `N - 1` nondecreasing boundaries between coordinate-sorted neighbours.
    pub boundaries: Vec<f64>,
    /// `[lo, hi]` per target (original indexing); empty cells have `lo == hi`.
    pub cells: Vec<(f64, f64)>,
    pub interfaces: Vec<Interface>,
    pub measures: Vec<f64>,
}

/// Interval cells in 1-D with quadratic cost.
pub fn cells_1d(w: &[f64], targets: &TargetSet, domain: &Domain, density: &DensitySpec) -> Result<LaguerreDiagram1D> {
    if targets.dim() != 1 || domain.dim() != 1 {
        return Err(Error::Unsupported("interval cells need a 1-D problem".into()));
    }
    check_weights(w, targets)?;
    let y: Vec<f64> = targets.points().iter().map(|p| p[0]).collect();
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    if order.windows(2).any(|p| y[p[0]] == y[p[1]]) {
        return Err(Error::InvalidProblem("duplicate target coordinates".into()));
    }
    let cross = |i: usize, j: usize| 0.5 * (y[i] + y[j]) + (w[i] - w[j]) / (2.0 * (y[j] - y[i]));

    // lower envelope; slopes -2y decrease along `order`
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for &j in &order {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if cross(a, j) <= cross(a, b) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(j);
    }

    let (lo_d, hi_d) = (domain.lower()[0], domain.upper()[0]);
    let clamp = |x: f64| x.clamp(lo_d, hi_d);
    let mut right_end = vec![None; n];
    let mut interfaces = Vec::with_capacity(hull.len().saturating_sub(1));
    for k in 0..hull.len().saturating_sub(1) {
        let (a, b) = (hull[k], hull[k + 1]);
        let x = cross(a, b);
        right_end[a] = Some(clamp(x));
        interfaces.push(Interface {
            left: a,
            right: b,
            x,
            interior: x > lo_d && x < hi_d,
        });
    }
    if let Some(&last) = hull.last() {
        right_end[last] = Some(hi_d);
    }

    let mut cells = vec![(lo_d, lo_d); n];
    let mut boundaries = Vec::with_capacity(n.saturating_sub(1));
    let mut cursor = lo_d;
    for (k, &j) in order.iter().enumerate() {
        let hi = right_end[j].map_or(cursor, |h| h.max(cursor));
        cells[j] = (cursor, hi);
        cursor = hi;
        if k + 1 < n {
            boundaries.push(hi);
        }
    }
    let measures = cells
        .iter()
        .map(|&(a, b)| density.normalization() * density.axis_mass(0, a, b))
        .collect();
    Ok(LaguerreDiagram1D {
        order,
        boundaries,
        cells,
        interfaces,
        measures,
    })
}

// ---------------------------------------------------------------------------
// 2-D convex cells

/// Convex polygon; `sources[k]` is the neighbour whose bisector carries the
/// edge leaving `verts[k]`, or `None` for a box side.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPolygon {
    pub verts: Vec<Point>,
    pub sources: Vec<Option<usize>>,
}

impl CellPolygon {
    pub fn area(&self) -> f64 {
        let n = self.verts.len();
        let mut a = 0.0;
        for k in 0..n {
            let (p, q) = (self.verts[k], self.verts[(k + 1) % n]);
            a += p[0] * q[1] - q[0] * p[1];
        }
        0.5 * a.abs()
    }

    /// Vertical extent of the polygon at abscissa `x`.
    fn chord(&self, x: f64) -> Option<(f64, f64)> {
        let n = self.verts.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..n {
            let (p, q) = (self.verts[k], self.verts[(k + 1) % n]);
            let (a, b) = if p[0] <= q[0] { (p, q) } else { (q, p) };
            if x < a[0] || x > b[0] || b[0] - a[0] <= 0.0 {
                continue;
            }
            let s = (x - a[0]) / (b[0] - a[0]);
            let v = a[1] + s * (b[1] - a[1]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (hi > lo).then_some((lo, hi))
    }
}

/// Clip `poly` by `{x : a . x <= b}`, tagging the new edge with `src`.
fn clip(poly: &CellPolygon, a: [f64; 2], b: f64, src: usize) -> CellPolygon {
    let n = poly.verts.len();
    let mut out = CellPolygon {
        verts: Vec::with_capacity(n + 1),
        sources: Vec::with_capacity(n + 1),
    };
    let side = |p: &Point| a[0] * p[0] + a[1] * p[1] - b;
    for k in 0..n {
        let (p, q) = (poly.verts[k], poly.verts[(k + 1) % n]);
        let (sp, sq) = (side(&p), side(&q));
        let s = poly.sources[k];
        let hit = || {
            let r = sp / (sp - sq);
            [p[0] + r * (q[0] - p[0]), p[1] + r * (q[1] - p[1])]
        };
        match (sp <= 0.0, sq <= 0.0) {
            (true, true) => {
                out.verts.push(p);
                out.sources.push(s);
            }
            (true, false) => {
                out.verts.push(p);
                out.sources.push(s);
                out.verts.push(hit());
                out.sources.push(Some(src));
            }
            (false, true) => {
                out.verts.push(hit());
                out.sources.push(s);
            }
            (false, false) => {}
        }
    }
    out
}

/// Cell `j` of the quadratic-cost diagram as a convex polygon in the box.
pub fn cell_polygon(j: usize, w: &[f64], targets: &[Point], domain: &Domain) -> CellPolygon {
    let (l, u) = (domain.lower(), domain.upper());
    let mut poly = CellPolygon {
        verts: vec![[l[0], l[1]], [u[0], l[1]], [u[0], u[1]], [l[0], u[1]]],
        sources: vec![None; 4],
    };
    let yj = targets[j];
    let nj = yj[0] * yj[0] + yj[1] * yj[1];
    for (k, yk) in targets.iter().enumerate() {
        if k == j {
            continue;
        }
        // |x-y_j|^2 - w_j <= |x-y_k|^2 - w_k
        let a = [2.0 * (yk[0] - yj[0]), 2.0 * (yk[1] - yj[1])];
        let nk = yk[0] * yk[0] + yk[1] * yk[1];
        let b = nk - nj - w[k] + w[j];
        poly = clip(&poly, a, b, k);
        if poly.verts.len() < 3 {
            return CellPolygon {
                verts: Vec::new(),
                sources: Vec::new(),
            };
        }
    }
    poly
}

const SLAB_ORDER: usize = 12;
const SLAB_WIDTH: f64 = 0.0625;

/// `int_poly rho` for a separable density, slab by slab in `x1`.
pub fn polygon_mass(poly: &CellPolygon, density: &DensitySpec, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    if poly.verts.len() < 3 {
        return 0.0;
    }
    let mut xs: Vec<f64> = poly.verts.iter().map(|v| v[0]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut acc = CompensatedSum::default();
    for pair in xs.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a <= 1e-15 {
            continue;
        }
        let pieces = ((b - a) / SLAB_WIDTH).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for p in 0..pieces {
            let (pa, pb) = (a + h * p as f64, if p + 1 == pieces { b } else { a + h * (p + 1) as f64 });
            let (mid, half) = (0.5 * (pa + pb), 0.5 * (pb - pa));
            for (s, wt) in rule.0.iter().zip(&rule.1) {
                let x = mid + half * s;
                if let Some((lo, hi)) = poly.chord(x) {
                    acc.add(half * wt * density.axis_factor(0, x) * density.axis_mass(1, lo, hi));
                }
            }
        }
    }
    density.normalization() * acc.value()
}

fn polygon_measures(w: &[f64], targets: &[Point], domain: &Domain, density: &DensitySpec) -> Result<Vec<f64>> {
    let rule = gauss_legendre(SLAB_ORDER)?;
    Ok((0..targets.len())
        .into_par_iter()
        .map(|j| polygon_mass(&cell_polygon(j, w, targets, domain), density, &rule))
        .collect())
}

// ---------------------------------------------------------------------------
// label refinement

struct LabelCtx<'a> {
    w: &'a [f64],
    targets: &'a [Point],
    cost: CostSpec,
    density: &'a DensitySpec,
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
    depth: u32,
}

impl LabelCtx<'_> {
    fn label(&self, x: &Point) -> usize {
        argmin_label(x, self.w, self.targets, self.cost)
    }

    fn panel(&self, lo: [f64; 2], hi: [f64; 2], dim: usize, level: u32, out: &mut [CompensatedSum]) {
        let mut pts = Vec::new();
        let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        let half = [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])];
        if dim == 1 {
            for (s, wt) in self.ref_nodes.iter().zip(&self.ref_weights) {
                pts.push(([mid[0] + half[0] * s, 0.0], half[0] * wt));
            }
        } else {
            for (s, ws) in self.ref_nodes.iter().zip(&self.ref_weights) {
                for (r, wr) in self.ref_nodes.iter().zip(&self.ref_weights) {
                    pts.push(([mid[0] + half[0] * s, mid[1] + half[1] * r], half[0] * half[1] * ws * wr));
                }
            }
        }
        let labels: Vec<usize> = pts.iter().map(|(x, _)| self.label(x)).collect();
        let mut uniform = labels.windows(2).all(|p| p[0] == p[1]);
        if uniform && level < self.depth {
            let corners: &[Point] = if dim == 1 {
                &[[lo[0], 0.0], [hi[0], 0.0]]
            } else {
                &[[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]]
            };
            uniform = corners.iter().all(|c| self.label(c) == labels[0]);
        }
        if !uniform && level < self.depth {
            if dim == 1 {
                self.panel(lo, [mid[0], hi[1]], 1, level + 1, out);
                self.panel([mid[0], lo[1]], hi, 1, level + 1, out);
            } else {
                self.panel(lo, mid, 2, level + 1, out);
                self.panel([mid[0], lo[1]], [hi[0], mid[1]], 2, level + 1, out);
                self.panel([lo[0], mid[1]], [mid[0], hi[1]], 2, level + 1, out);
                self.panel(mid, hi, 2, level + 1, out);
            }
            return;
        }
        for ((x, wt), l) in pts.iter().zip(labels) {
            out[l].add(wt * self.density.eval(x));
        }
    }
}

fn label_measures(
    w: &[f64],
    targets: &[Point],
    cost: CostSpec,
    density: &DensitySpec,
    grid: &QuadratureGrid,
    depth: u32,
) -> Result<Vec<f64>> {
    let (ref_nodes, ref_weights) = gauss_legendre(grid.order())?;
    let dim = grid.domain().dim();
    let ctx = LabelCtx {
        w,
        targets,
        cost,
        density,
        ref_nodes,
        ref_weights,
        depth,
    };
    let e0 = &grid.axis(0).edges;
    let panels: Vec<([f64; 2], [f64; 2])> = if dim == 1 {
        e0.windows(2).map(|e| ([e[0], 0.0], [e[1], 0.0])).collect()
    } else {
        let e1 = &grid.axis(1).edges;
        let mut v = Vec::with_capacity((e0.len() - 1) * (e1.len() - 1));
        for a in e0.windows(2) {
            for b in e1.windows(2) {
                v.push(([a[0], b[0]], [a[1], b[1]]));
            }
        }
        v
    };
    let n = targets.len();
    let parts: Vec<Vec<CompensatedSum>> = panels
        .par_iter()
        .map(|(lo, hi)| {
            let mut acc = vec![CompensatedSum::default(); n];
            ctx.panel(*lo, *hi, dim, 0, &mut acc);
            acc
        })
        .collect();
    let mut total = vec![CompensatedSum::default(); n];
    for p in parts {
        for (t, v) in total.iter_mut().zip(p) {
            t.add(v.value());
        }
    }
    Ok(total.iter().map(CompensatedSum::value).collect())
}

/// `density[Lag_j(w)]` for every `j`.
pub fn cell_measures(
    w: &[f64],
    targets: &TargetSet,
    cost: CostSpec,
    density: &DensitySpec,
    grid: &QuadratureGrid,
    mode: MeasureMode,
) -> Result<Vec<f64>> {
    check_weights(w, targets)?;
    let domain = grid.domain();
    match mode {
        MeasureMode::Analytic1D => {
            if !cost.is_quadratic() {
                return Err(Error::Unsupported("interval cells need the quadratic cost".into()));
            }
            Ok(cells_1d(w, targets, domain, density)?.measures)
        }
        MeasureMode::Polygon2D => {
            if !cost.is_quadratic() || domain.dim() != 2 {
                return Err(Error::Unsupported("polygon cells need the quadratic cost in 2-D".into()));
            }
            polygon_measures(w, targets.points(), domain, density)
        }
        MeasureMode::GridLabel => {
            let depth = if domain.dim() == 1 { LABEL_DEPTH_1D } else { LABEL_DEPTH_2D };
            label_measures(w, targets.points(), cost, density, grid, depth)
        }
    }
}

/// Jacobian `M` of `w -> density[Lag(w)]` for the quadratic cost: analytic in
/// 1-D, central differences of polygon measures in 2-D. `M 1 = 0`.
pub fn measure_jacobian(
    w: &[f64],
    targets: &TargetSet,
    density: &DensitySpec,
    grid: &QuadratureGrid,
) -> Result<DMatrix<f64>> {
    check_weights(w, targets)?;
    let n = w.len();
    let domain = grid.domain();
    if domain.dim() == 1 {
        let diagram = cells_1d(w, targets, domain, density)?;
        let y = targets.points();
        let mut m = DMatrix::zeros(n, n);
        for f in diagram.interfaces.iter().filter(|f| f.interior) {
            let v = density.eval(&[f.x, 0.0]) / (2.0 * (y[f.left][0] - y[f.right][0]).abs());
            m[(f.left, f.right)] -= v;
            m[(f.right, f.left)] -= v;
            m[(f.left, f.left)] += v;
            m[(f.right, f.right)] += v;
        }
        return Ok(m);
    }
    let pts = targets.points();
    let cols: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut wp = w.to_vec();
            let mut wm = w.to_vec();
            wp[j] += MEASURE_FD_STEP;
            wm[j] -= MEASURE_FD_STEP;
            let p = polygon_measures(&wp, pts, domain, density)?;
            let q = polygon_measures(&wm, pts, domain, density)?;
            Ok(p.iter().zip(&q).map(|(a, b)| (a - b) / (2.0 * MEASURE_FD_STEP)).collect())
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (j, col) in cols.into_iter().enumerate() {
        for (i, v) in col?.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    // symmetric in exact arithmetic
    Ok((&m + m.transpose()) * 0.5)
}

// ---------------------------------------------------------------------------
// problem-level helpers

/// `mu[Lag(psi - o)]`: terminal transport masses of the outer problem.
pub fn transport_measures(problem: &ProblemSpec, psi: &[f64], grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let w = problem.terminal_weights(psi);
    let mode = MeasureMode::auto(problem.dim(), problem.cost());
    cell_measures(&w, problem.targets(), problem.cost(), problem.mu(), grid, mode)
}

/// `rho[Lag(xi)]` with the quadratic cost (p4 penalty term).
pub fn rho_measures(problem: &ProblemSpec, xi: &[f64], grid: &QuadratureGrid) -> Result<Vec<f64>> {
    let rho = problem
        .rho()
        .ok_or_else(|| Error::InvalidProblem("problem has no second density".into()))?;
    let cost = CostSpec::quadratic();
    let mode = MeasureMode::auto(problem.dim(), cost);
    cell_measures(xi, problem.targets(), cost, rho, grid, mode)
}

/// `G(psi, 1)`, with the transport term replaced by cell measures.
pub fn unregularized_residual(problem: &ProblemSpec, psi: &[f64], grid: &QuadratureGrid) -> Result<Vec<f64>> {
    check_weights(psi, problem.targets())?;
    let transport = transport_measures(problem, psi, grid)?;
    let penalty = match problem.variant() {
        Variant::P1 | Variant::P2 | Variant::P3 => psi.iter().map(|p| (-p).exp()).collect(),
        Variant::P4 => {
            let xi: Vec<f64> = psi.iter().map(|p| -p).collect();
            rho_measures(problem, &xi, grid)?
        }
    };
    Ok(penalty.iter().zip(&transport).map(|(a, b)| a - b).collect())
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

// ---------------------------------------------------------------------------
// fields

/// Per-node cell labels (0-based) and optional smoothed weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub t: f64,
    pub dim: usize,
    pub n: usize,
    pub nodes: Vec<Point>,
    pub labels: Vec<usize>,
    /// Row-major `nodes.len() x n`.
    pub weights: Option<Vec<f64>>,
}

impl CellField {
    /// CSV with `x1[,x2],label,pi_1..pi_N`; labels 1-based, hard fields
    /// export one-hot weights.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.nodes.len() * (16 + 12 * self.n));
        s.push_str(if self.dim == 1 { "x1" } else { "x1,x2" });
        s.push_str(",label");
        for j in 1..=self.n {
            let _ = write!(s, ",pi_{j}");
        }
        s.push('\n');
        for (i, x) in self.nodes.iter().enumerate() {
            let _ = write!(s, "{:e}", x[0]);
            if self.dim == 2 {
                let _ = write!(s, ",{:e}", x[1]);
            }
            let _ = write!(s, ",{}", self.labels[i] + 1);
            for j in 0..self.n {
                let v = match &self.weights {
                    Some(w) => w[i * self.n + j],
                    None => f64::from(u8::from(self.labels[i] == j)),
                };
                let _ = write!(s, ",{v:e}");
            }
            s.push('\n');
        }
        s
    }
}

fn labels_for(problem: &ProblemSpec, psi: &[f64], nodes: &[Point]) -> Vec<usize> {
    let w = problem.terminal_weights(psi);
    let pts = problem.targets().points();
    nodes
        .par_iter()
        .map(|x| argmin_label(x, &w, pts, problem.cost()))
        .collect()
}

/// Hard labels `argmin_j c_j(x) - psi_j + o_j` at the grid nodes.
pub fn label_field(problem: &ProblemSpec, psi: &[f64], grid: &QuadratureGrid) -> Result<CellField> {
    check_weights(psi, problem.targets())?;
    let nodes = grid.nodes().to_vec();
    Ok(CellField {
        t: 1.0,
        dim: problem.dim(),
        n: problem.n(),
        labels: labels_for(problem, psi, &nodes),
        nodes,
        weights: None,
    })
}

/// Softmax weights and labels at the grid nodes for `t < 1`.
pub fn smoothed_cell_field(psi: &[f64], t: f64, problem: &ProblemSpec, grid: &QuadratureGrid) -> Result<CellField> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::TimeOutOfRange { t, range: "[0, 1)" });
    }
    check_weights(psi, problem.targets())?;
    let nodes = grid.nodes().to_vec();
    let rows: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|x| softmax_weights(psi, t, x, problem))
        .collect::<Result<_>>()?;
    Ok(CellField {
        t,
        dim: problem.dim(),
        n: problem.n(),
        labels: labels_for(problem, psi, &nodes),
        nodes,
        weights: Some(rows.concat()),
    })
}

// ---------------------------------------------------------------------------
// nested-structure diagnostic

/// Uniform `m^dim` midpoint grid used by the diagnostic.
pub fn diagnostic_grid(domain: &Domain, m: usize) -> Result<QuadratureGrid> {
    build_grid(domain, m, 1)
}

/// `1e-3` times the spread of all `c_j(x)` over the grid.
pub fn default_triple_eps(problem: &ProblemSpec, grid: &QuadratureGrid) -> f64 {
    let cost = problem.cost();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in grid.nodes() {
        for y in problem.targets().points() {
            let c = cost.eval(x, y);
            lo = lo.min(c);
            hi = hi.max(c);
        }
    }
    1e-3 * (hi - lo)
}

/// Count nodes where three consecutive targets are all within `eps` of the
/// minimal `c_j(x) - psi_j + o_j`.
pub fn triple_intersection_check(problem: &ProblemSpec, psi: &[f64], grid: &QuadratureGrid, eps: f64) -> Result<usize> {
    check_weights(psi, problem.targets())?;
    let n = problem.n();
    if n < 3 {
        return Ok(0);
    }
    let w = problem.terminal_weights(psi);
    let pts = problem.targets().points();
    let cost = problem.cost();
    Ok(grid
        .nodes()
        .par_iter()
        .filter(|x| {
            let vals: Vec<f64> = pts.iter().zip(&w).map(|(y, wj)| cost.eval(x, y) - wj).collect();
            let m = vals.iter().copied().fold(f64::INFINITY, f64::min);
            vals.windows(3).any(|v| v.iter().all(|&c| c - m <= eps))
        })
        .count())
}

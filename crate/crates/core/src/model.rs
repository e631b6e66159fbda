//! Problem description: domain, cost, target points, densities and the
//! penalty variant, plus the JSON-facing configuration used to build them.
//!
//! Points are stored as `[f64; 2]`. One-dimensional problems embed on the
//! first axis with the second coordinate fixed at zero, so distances,
//! costs and separable densities need no dimension branching.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Normalization constant of the 1-D catalog bump, rounded to four decimals.
pub const GAUSS_1D_NORMALIZATION: f64 = 1.8305;
/// Normalization constant of the 2-D catalog bump, rounded to four decimals.
pub const GAUSS_2D_NORMALIZATION: f64 = 3.3508;
/// Sharpness of the catalog bump `exp(-10 |x - c|^2)`.
pub const GAUSS_SHARPNESS: f64 = 10.0;

/// Axis-aligned box `[lower, upper]` in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    lower: Point,
    upper: Point,
    dim: usize,
}

impl Domain {
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let dim = lower.len();
        if !(1..=2).contains(&dim) || upper.len() != dim {
            return Err(Error::InvalidProblem(format!(
                "domain bounds must have matching length 1 or 2 (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for k in 0..dim {
            if !(lower[k].is_finite() && upper[k].is_finite() && lower[k] < upper[k]) {
                return Err(Error::InvalidProblem(format!(
                    "domain axis {k}: need finite lower < upper, got [{}, {}]",
                    lower[k], upper[k]
                )));
            }
            lo[k] = lower[k];
            hi[k] = upper[k];
        }
        Ok(Self {
            lower: lo,
            upper: hi,
            dim,
        })
    }

    /// The unit interval or unit square.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(&vec![0.0; dim], &vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|k| self.upper[k] - self.lower[k]).product()
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..self.dim).all(|k| x[k] >= self.lower[k] && x[k] <= self.upper[k])
    }
}

/// Finite set of pairwise distinct target points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    points: Vec<Point>,
    dim: usize,
}

impl TargetSet {
    pub fn new(points: Vec<Point>, dim: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidProblem("at least one target is required".into()));
        }
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidProblem(format!("unsupported dimension {dim}")));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidProblem(format!("target {i} is not finite")));
            }
            if dim == 1 && p[1] != 0.0 {
                return Err(Error::InvalidProblem(format!(
                    "target {i} has a second coordinate in a 1-D problem"
                )));
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(Error::InvalidProblem(format!(
                        "targets {j} and {i} coincide"
                    )));
                }
            }
        }
        Ok(Self { points, dim })
    }

    /// Build from per-point coordinate lists (each of length `dim`).
    pub fn from_coords(coords: &[Vec<f64>], dim: usize) -> Result<Self> {
        let mut points = Vec::with_capacity(coords.len());
        for (i, c) in coords.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::InvalidProblem(format!(
                    "target {i} has {} coordinates, expected {dim}",
                    c.len()
                )));
            }
            let mut p = [0.0; 2];
            p[..dim].copy_from_slice(c);
            points.push(p);
        }
        Self::new(points, dim)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same points in a different order: `order[k]` is the old index of new point `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        Self::new(order.iter().map(|&i| self.points[i]).collect(), self.dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityKind {
    Uniform,
    GaussianBump,
}

/// Separable probability density `normalization * prod_k f_k(x_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    kind: DensityKind,
    center: Point,
    sharpness: f64,
    normalization: f64,
}

impl DensitySpec {
    /// Constant density `1 / vol(domain)`.
    pub fn uniform(domain: &Domain) -> Self {
        Self {
            kind: DensityKind::Uniform,
            center: [0.0; 2],
            sharpness: 0.0,
            normalization: 1.0 / domain.volume(),
        }
    }

    /// `normalization * exp(-sharpness * |x - center|^2)`.
    pub fn gaussian_bump(center: Point, sharpness: f64, normalization: f64) -> Result<Self> {
        if !(sharpness.is_finite() && sharpness > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "bump sharpness must be positive, got {sharpness}"
            )));
        }
        if !(normalization.is_finite() && normalization > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "density normalization must be positive, got {normalization}"
            )));
        }
        Ok(Self {
            kind: DensityKind::GaussianBump,
            center,
            sharpness,
            normalization,
        })
    }

    /// Bump whose normalization is computed so it integrates to exactly one.
    pub fn gaussian_bump_normalized(center: Point, sharpness: f64, domain: &Domain) -> Result<Self> {
        let raw = Self::gaussian_bump(center, sharpness, 1.0)?;
        let mass = raw.mass_on(domain);
        Self::gaussian_bump(center, sharpness, 1.0 / mass)
    }

    /// Catalog bump centered in the unit box with the rounded catalog constants.
    pub fn catalog_gaussian(dim: usize) -> Result<Self> {
        let (center, norm) = match dim {
            1 => ([0.5, 0.0], GAUSS_1D_NORMALIZATION),
            2 => ([0.5, 0.5], GAUSS_2D_NORMALIZATION),
            _ => return Err(Error::InvalidProblem(format!("unsupported dimension {dim}"))),
        };
        Self::gaussian_bump(center, GAUSS_SHARPNESS, norm)
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn sharpness(&self) -> f64 {
        self.sharpness
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Density value at `x`.
    pub fn eval(&self, x: &Point) -> f64 {
        match self.kind {
            DensityKind::Uniform => self.normalization,
            DensityKind::GaussianBump => {
                let d0 = x[0] - self.center[0];
                let d1 = x[1] - self.center[1];
                self.normalization * (-self.sharpness * (d0 * d0 + d1 * d1)).exp()
            }
        }
    }

    /// Unnormalized one-axis factor `f_axis(s)`.
    pub fn axis_factor(&self, axis: usize, s: f64) -> f64 {
        match self.kind {
            DensityKind::Uniform => 1.0,
            DensityKind::GaussianBump => {
                let d = s - self.center[axis];
                (-self.sharpness * d * d).exp()
            }
        }
    }

    /// Closed form of `int_a^b f_axis(s) ds` (zero when `b <= a`).
    pub fn axis_mass(&self, axis: usize, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self.kind {
            DensityKind::Uniform => b - a,
            DensityKind::GaussianBump => {
                let r = self.sharpness.sqrt();
                let c = self.center[axis];
                let scale = 0.5 * (std::f64::consts::PI / self.sharpness).sqrt();
                let (ea, eb) = (r * (a - c), r * (b - c));
                // erfc differences keep precision when both ends sit in one tail
                let diff = if ea > 0.0 {
                    libm::erfc(ea) - libm::erfc(eb)
                } else if eb < 0.0 {
                    libm::erfc(-eb) - libm::erfc(-ea)
                } else {
                    libm::erf(eb) - libm::erf(ea)
                };
                scale * diff
            }
        }
    }

    /// Exact total mass over an axis-aligned box.
    pub fn mass_on(&self, domain: &Domain) -> f64 {
        let mut m = self.normalization;
        for k in 0..domain.dim() {
            m *= self.axis_mass(k, domain.lower()[k], domain.upper()[k]);
        }
        m
    }
}

/// Evaluate a density at a point of the domain.
pub fn density_eval(spec: &DensitySpec, x: &Point) -> f64 {
    spec.eval(x)
}

/// Transport cost `c(x, y) = |x - y|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    exponent: f64,
}

impl CostSpec {
    pub fn new(exponent: f64) -> Result<Self> {
        if exponent != 2.0 && exponent != 3.0 {
            return Err(Error::InvalidProblem(format!(
                "cost exponent must be 2 or 3, got {exponent}"
            )));
        }
        Ok(Self { exponent })
    }

    pub fn quadratic() -> Self {
        Self { exponent: 2.0 }
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn is_quadratic(&self) -> bool {
        self.exponent == 2.0
    }

    #[inline]
    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        let d0 = x[0] - y[0];
        let d1 = x[1] - y[1];
        let sq = d0 * d0 + d1 * d1;
        if self.exponent == 2.0 {
            sq
        } else {
            sq * sq.sqrt()
        }
    }
}

impl Default for CostSpec {
    fn default() -> Self {
        Self::quadratic()
    }
}

/// Penalty functional on the target masses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Entropy penalty, not scaled by the homotopy parameter.
    P1,
    /// Entropy penalty scaled by the homotopy parameter.
    P2,
    /// Entropy plus a distance-to-anchor term, not scaled.
    P3,
    /// Squared Wasserstein distance to a second density, scaled.
    P4,
}

impl Variant {
    /// Whether the ODE right-hand side is singular at `t = 0`.
    pub fn singular_at_zero(self) -> bool {
        matches!(self, Variant::P2 | Variant::P4)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::P1 => "p1",
            Variant::P2 => "p2",
            Variant::P3 => "p3",
            Variant::P4 => "p4",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Variant::P1),
            "p2" => Ok(Variant::P2),
            "p3" => Ok(Variant::P3),
            "p4" => Ok(Variant::P4),
            other => Err(Error::InvalidProblem(format!("unknown variant `{other}`"))),
        }
    }
}

/// One fully validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    variant: Variant,
    domain: Domain,
    targets: TargetSet,
    mu: DensitySpec,
    cost: CostSpec,
    anchor: Option<Point>,
    rho: Option<DensitySpec>,
    offsets: Vec<f64>,
}

impl ProblemSpec {
    pub fn new(
        variant: Variant,
        domain: Domain,
        targets: TargetSet,
        mu: DensitySpec,
        cost: CostSpec,
        anchor: Option<Point>,
        rho: Option<DensitySpec>,
    ) -> Result<Self> {
        if targets.dim() != domain.dim() {
            return Err(Error::InvalidProblem(format!(
                "targets are {}-D but the domain is {}-D",
                targets.dim(),
                domain.dim()
            )));
        }
        match (variant, anchor.is_some()) {
            (Variant::P3, false) => {
                return Err(Error::InvalidProblem("variant p3 requires an anchor point".into()))
            }
            (v, true) if v != Variant::P3 => {
                return Err(Error::InvalidProblem(format!(
                    "an anchor point is only meaningful for p3, not {}",
                    v.name()
                )))
            }
            _ => {}
        }
        match (variant, rho.is_some()) {
            (Variant::P4, false) => {
                return Err(Error::InvalidProblem("variant p4 requires a density rho".into()))
            }
            (v, true) if v != Variant::P4 => {
                return Err(Error::InvalidProblem(format!(
                    "rho is only meaningful for p4, not {}",
                    v.name()
                )))
            }
            _ => {}
        }
        if let Some(p) = anchor {
            if domain.dim() == 1 && p[1] != 0.0 {
                return Err(Error::InvalidProblem("anchor has a second coordinate in 1-D".into()));
            }
        }
        for (name, d) in std::iter::once(("mu", &mu)).chain(rho.as_ref().map(|r| ("rho", r))) {
            validate_density(name, d, &domain)?;
        }
        let offsets = match anchor {
            Some(p) => targets
                .points()
                .iter()
                .map(|y| {
                    let d0 = y[0] - p[0];
                    let d1 = y[1] - p[1];
                    d0 * d0 + d1 * d1
                })
                .collect(),
            None => vec![0.0; targets.len()],
        };
        Ok(Self {
            variant,
            domain,
            targets,
            mu,
            cost,
            anchor,
            rho,
            offsets,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn targets(&self) -> &TargetSet {
        &self.targets
    }

    pub fn mu(&self) -> &DensitySpec {
        &self.mu
    }

    pub fn cost(&self) -> CostSpec {
        self.cost
    }

    pub fn anchor(&self) -> Option<Point> {
        self.anchor
    }

    pub fn rho(&self) -> Option<&DensitySpec> {
        self.rho.as_ref()
    }

    pub fn n(&self) -> usize {
        self.targets.len()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// `v_j = |y_j - P|^2` for p3, `None` otherwise.
    pub fn v(&self) -> Option<&[f64]> {
        self.anchor.map(|_| self.offsets.as_slice())
    }

    /// Offsets subtracted inside the transport exponent (v for p3, zero otherwise).
    pub fn transport_offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Laguerre weights `psi - offsets` whose cells the transport term
    /// concentrates on as `t -> 1`.
    pub fn terminal_weights(&self, psi: &[f64]) -> Vec<f64> {
        psi.iter().zip(&self.offsets).map(|(p, o)| p - o).collect()
    }

    /// Same problem with targets reordered (`order[k]` = old index of new target `k`).
    pub fn with_targets(&self, targets: TargetSet) -> Result<Self> {
        Self::new(
            self.variant,
            self.domain,
            targets,
            self.mu,
            self.cost,
            self.anchor,
            self.rho,
        )
    }
}

fn validate_density(name: &str, d: &DensitySpec, domain: &Domain) -> Result<()> {
    if !(d.normalization() > 0.0 && d.normalization().is_finite()) {
        return Err(Error::InvalidProblem(format!("density {name} is not positive")));
    }
    let mass = d.mass_on(domain);
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidProblem(format!("density {name} has no mass on the domain")));
    }
    if (mass - 1.0).abs() > 1e-3 {
        log::warn!("density {name} integrates to {mass:.6} over the domain (expected 1)");
    }
    Ok(())
}

/// `n` points on the scaled parabola `s -> (s, (s/e)^2)`, `s` uniform in `[0, 1]`.
pub fn parabola_targets(n: usize) -> Result<TargetSet> {
    if n < 2 {
        return Err(Error::InvalidProblem(format!(
            "parabola layout needs at least 2 points, got {n}"
        )));
    }
    let e = std::f64::consts::E;
    let points = (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            [s, (s / e) * (s / e)]
        })
        .collect();
    TargetSet::new(points, 2)
}

/// Draw `n` distinct points uniformly in the open box `(lower, upper)`.
///
/// Stream 0 of a ChaCha8 generator seeded with `seed` is reserved for targets,
/// so other consumers of the same seed can take independent streams.
pub fn sample_targets(n: usize, lower: &[f64], upper: &[f64], seed: u64) -> Result<TargetSet> {
    let dim = lower.len();
    if n == 0 || !(1..=2).contains(&dim) || upper.len() != dim {
        return Err(Error::InvalidProblem("invalid sampling request".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut points: Vec<Point> = Vec::with_capacity(n);
    while points.len() < n {
        let mut p = [0.0; 2];
        for k in 0..dim {
            let u: f64 = loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            };
            p[k] = lower[k] + (upper[k] - lower[k]) * u;
        }
        if !points.contains(&p) {
            points.push(p);
        }
    }
    TargetSet::new(points, dim)
}

/// Box used for sampling targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityKindConfig {
    Uniform,
    #[serde(alias = "gaussian")]
    Gauss,
}

/// Explicit constant, or `"exact"` / `"rounded"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormalizationConfig {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    pub kind: DensityKindConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharpness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<NormalizationConfig>,
}

impl DensityConfig {
    pub fn uniform() -> Self {
        Self {
            kind: DensityKindConfig::Uniform,
            center: None,
            sharpness: None,
            normalization: None,
        }
    }

    pub fn gauss() -> Self {
        Self {
            kind: DensityKindConfig::Gauss,
            ..Self::uniform()
        }
    }

    /// Resolve against a domain. Catalog bumps (centered, sharpness 10, unit
    /// box) default to the rounded catalog constants; anything else defaults to
    /// exact normalization.
    pub fn build(&self, domain: &Domain) -> Result<DensitySpec> {
        let dim = domain.dim();
        match self.kind {
            DensityKindConfig::Uniform => Ok(DensitySpec::uniform(domain)),
            DensityKindConfig::Gauss => {
                let mut center = [0.0; 2];
                match &self.center {
                    Some(c) if c.len() == dim => center[..dim].copy_from_slice(c),
                    Some(c) => {
                        return Err(Error::InvalidProblem(format!(
                            "density center has {} coordinates, expected {dim}",
                            c.len()
                        )))
                    }
                    None => {
                        for k in 0..dim {
                            center[k] = 0.5 * (domain.lower()[k] + domain.upper()[k]);
                        }
                    }
                }
                let sharpness = self.sharpness.unwrap_or(GAUSS_SHARPNESS);
                let is_catalog = *domain == Domain::unit(dim)?
                    && center[..dim].iter().all(|&c| c == 0.5)
                    && sharpness == GAUSS_SHARPNESS;
                match &self.normalization {
                    Some(NormalizationConfig::Value(v)) => {
                        DensitySpec::gaussian_bump(center, sharpness, *v)
                    }
                    Some(NormalizationConfig::Named(s)) if s == "exact" => {
                        DensitySpec::gaussian_bump_normalized(center, sharpness, domain)
                    }
                    Some(NormalizationConfig::Named(s)) if s == "rounded" => {
                        if !is_catalog {
                            return Err(Error::InvalidProblem(
                                "rounded constants only apply to the catalog bump".into(),
                            ));
                        }
                        DensitySpec::catalog_gaussian(dim)
                    }
                    Some(NormalizationConfig::Named(s)) => Err(Error::InvalidProblem(format!(
                        "unknown normalization `{s}` (expected a number, \"exact\" or \"rounded\")"
                    ))),
                    None if is_catalog => DensitySpec::catalog_gaussian(dim),
                    None => DensitySpec::gaussian_bump_normalized(center, sharpness, domain),
                }
            }
        }
    }
}

/// JSON problem configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub variant: Variant,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_targets: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub parabola: bool,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<BoxConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<BoxConfig>,
    pub density: DensityConfig,
    #[serde(default = "default_cost_exponent")]
    pub cost_exponent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<DensityConfig>,
}

fn default_cost_exponent() -> f64 {
    2.0
}

impl ProblemConfig {
    /// Seeded random targets with catalog defaults for everything else.
    pub fn sampled(variant: Variant, dim: usize, n: usize, seed: u64) -> Self {
        Self {
            variant,
            dim,
            n_targets: Some(n),
            seed: Some(seed),
            targets: None,
            parabola: false,
            sample_box: None,
            domain: None,
            density: DensityConfig::uniform(),
            cost_exponent: 2.0,
            anchor: (variant == Variant::P3).then(|| vec![0.5; dim]),
            rho: (variant == Variant::P4).then(DensityConfig::gauss),
        }
    }
}

/// Default sampling box: the source domain for p3/p4, otherwise `(0, 5)` in
/// 1-D and `[0, 1.5]^2` in 2-D.
pub fn default_sample_box(variant: Variant, domain: &Domain) -> (Vec<f64>, Vec<f64>) {
    match (variant, domain.dim()) {
        (Variant::P3 | Variant::P4, _) => (domain.lower().to_vec(), domain.upper().to_vec()),
        (_, 1) => (vec![0.0], vec![5.0]),
        _ => (vec![0.0, 0.0], vec![1.5, 1.5]),
    }
}

/// Validate a configuration and build the problem it describes.
pub fn build_problem(config: &ProblemConfig) -> Result<ProblemSpec> {
    let dim = config.dim;
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidProblem(format!("dim must be 1 or 2, got {dim}")));
    }
    let domain = match &config.domain {
        Some(b) => Domain::new(&b.lower, &b.upper)?,
        None => Domain::unit(dim)?,
    };
    if config.targets.is_some() && config.parabola {
        return Err(Error::InvalidProblem(
            "give either explicit targets or the parabola layout, not both".into(),
        ));
    }
    // an explicit target list or the parabola layout takes precedence over the seed
    let targets = if let Some(coords) = &config.targets {
        let ts = TargetSet::from_coords(coords, dim)?;
        if let Some(n) = config.n_targets {
            if n != ts.len() {
                return Err(Error::InvalidProblem(format!(
                    "n_targets = {n} but {} targets were listed",
                    ts.len()
                )));
            }
        }
        ts
    } else if config.parabola {
        if dim != 2 {
            return Err(Error::InvalidProblem("the parabola layout is 2-D".into()));
        }
        let n = config
            .n_targets
            .ok_or_else(|| Error::InvalidProblem("parabola layout needs n_targets".into()))?;
        parabola_targets(n)?
    } else if let Some(seed) = config.seed {
        let n = config
            .n_targets
            .ok_or_else(|| Error::InvalidProblem("sampled targets need n_targets".into()))?;
        let (lo, hi) = match &config.sample_box {
            Some(b) => {
                Domain::new(&b.lower, &b.upper)?;
                (b.lower.clone(), b.upper.clone())
            }
            None => default_sample_box(config.variant, &domain),
        };
        sample_targets(n, &lo, &hi, seed)?
    } else {
        return Err(Error::InvalidProblem(
            "no targets: give `targets`, `parabola` or `seed`".into(),
        ));
    };
    let mu = config.density.build(&domain)?;
    let cost = CostSpec::new(config.cost_exponent)?;
    let anchor = match &config.anchor {
        Some(a) if a.len() == dim => {
            let mut p = [0.0; 2];
            p[..dim].copy_from_slice(a);
            Some(p)
        }
        Some(a) => {
            return Err(Error::InvalidProblem(format!(
                "anchor has {} coordinates, expected {dim}",
                a.len()
            )))
        }
        None => None,
    };
    let rho = config.rho.as_ref().map(|r| r.build(&domain)).transpose()?;
    ProblemSpec::new(config.variant, domain, targets, mu, cost, anchor, rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3_config() -> ProblemConfig {
        ProblemConfig {
            variant: Variant::P3,
            dim: 1,
            n_targets: None,
            seed: None,
            targets: Some(vec![vec![0.2], vec![0.8]]),
            parabola: false,
            sample_box: None,
            domain: None,
            density: DensityConfig::uniform(),
            cost_exponent: 2.0,
            anchor: Some(vec![0.5]),
            rho: None,
        }
    }

    #[test]
    fn p3_offsets_are_squared_anchor_distances() {
        let p = build_problem(&p3_config()).unwrap();
        let v = p.v().unwrap();
        assert!((v[0] - 0.09).abs() < 1e-15);
        assert!((v[1] - 0.09).abs() < 1e-15);
    }

    #[test]
    fn sampled_p1_targets_lie_in_the_open_box() {
        let cfg = ProblemConfig::sampled(Variant::P1, 1, 4, 7);
        let p = build_problem(&cfg).unwrap();
        assert_eq!(p.n(), 4);
        for y in p.targets().points() {
            assert!(y[0] > 0.0 && y[0] < 5.0);
            assert_eq!(y[1], 0.0);
        }
        // same seed, same draw
        let q = build_problem(&cfg).unwrap();
        assert_eq!(p.targets(), q.targets());
    }

    #[test]
    fn p4_without_rho_is_rejected() {
        let mut cfg = ProblemConfig::sampled(Variant::P4, 1, 3, 1);
        cfg.rho = None;
        assert!(matches!(build_problem(&cfg), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn p3_without_anchor_is_rejected() {
        let mut cfg = p3_config();
        cfg.anchor = None;
        assert!(build_problem(&cfg).is_err());
    }

    #[test]
    fn duplicate_and_misshapen_targets_are_rejected() {
        let mut cfg = p3_config();
        cfg.targets = Some(vec![vec![0.2], vec![0.2]]);
        assert!(build_problem(&cfg).is_err());
        cfg.targets = Some(vec![vec![0.2, 0.1], vec![0.3, 0.1]]);
        assert!(build_problem(&cfg).is_err());
    }

    #[test]
    fn non_positive_density_is_rejected() {
        let mut cfg = p3_config();
        cfg.density = DensityConfig {
            kind: DensityKindConfig::Gauss,
            center: None,
            sharpness: None,
            normalization: Some(NormalizationConfig::Value(-1.0)),
        };
        assert!(build_problem(&cfg).is_err());
    }

    #[test]
    fn density_values_match_catalog_examples() {
        let unit1 = Domain::unit(1).unwrap();
        assert_eq!(density_eval(&DensitySpec::uniform(&unit1), &[0.3, 0.0]), 1.0);
        let g1 = DensitySpec::catalog_gaussian(1).unwrap();
        assert_eq!(density_eval(&g1, &[0.5, 0.0]), 1.8305);
        let g2 = DensitySpec::catalog_gaussian(2).unwrap();
        assert_eq!(density_eval(&g2, &[0.5, 0.5]), 3.3508);
    }

    #[test]
    fn rounded_constants_are_close_to_exact_normalization() {
        for dim in [1, 2] {
            let d = Domain::unit(dim).unwrap();
            let g = DensitySpec::catalog_gaussian(dim).unwrap();
            let m = g.mass_on(&d);
            assert!((m - 1.0).abs() < 1e-4, "dim {dim}: mass {m}");
            let exact = DensitySpec::gaussian_bump_normalized(g.center(), 10.0, &d).unwrap();
            assert!((exact.mass_on(&d) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn parabola_layout() {
        let t = parabola_targets(2).unwrap();
        let e2 = (-2.0f64).exp();
        assert_eq!(t.points()[0], [0.0, 0.0]);
        assert!((t.points()[1][1] - e2).abs() < 1e-16);
        let t3 = parabola_targets(3).unwrap();
        assert!((t3.points()[1][0] - 0.5).abs() < 1e-16);
        assert!((t3.points()[1][1] - 0.25 * e2).abs() < 1e-16);
        let t12 = parabola_targets(12).unwrap();
        assert_eq!(t12.len(), 12);
        for (k, p) in t12.points().iter().enumerate() {
            assert!((p[0] - k as f64 / 11.0).abs() < 1e-15);
            let e = std::f64::consts::E;
            assert!((p[1] - (p[0] / e).powi(2)).abs() <= 1e-16);
        }
        assert!(parabola_targets(1).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ProblemConfig::sampled(Variant::P4, 2, 6, 3);
        let s = serde_json::to_string(&cfg).unwrap();
        let back: ProblemConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(cfg, back);
        let raw = r#"{"variant":"p1","dim":1,"n_targets":3,"seed":5,
                      "density":{"kind":"gauss","normalization":"exact"}}"#;
        let parsed: ProblemConfig = serde_json::from_str(raw).unwrap();
        let p = build_problem(&parsed).unwrap();
        assert!((p.mu().mass_on(p.domain()) - 1.0).abs() < 1e-14);
    }
}

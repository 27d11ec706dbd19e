//! Edge function `A(u)` for additive and quantized models, its critical point,
//! edge constants, thresholds and level-set diagnostics of `Re 𝒮_u`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpecError};
use crate::measure::{Measure, MeasureSpec};
use crate::quad::C64;

const SCAN_POINTS: usize = 400;
const DERIVATIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Additive,
    Quantized,
}

/// Weighted list of measures with a model kind and a scaling size.
#[derive(Debug, Clone)]
pub struct EdgeModel {
    pub measures: Vec<Measure>,
    pub multiplicities: Vec<usize>,
    pub kind: ModelKind,
    pub size: usize,
}

/// Serializable form of [`EdgeModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeModelSpec {
    pub measures: Vec<MeasureSpec>,
    pub multiplicities: Vec<usize>,
    #[serde(default = "additive")]
    pub kind: ModelKind,
    #[serde(rename = "N", default = "default_size")]
    pub size: usize,
}

fn additive() -> ModelKind {
    ModelKind::Additive
}

fn default_size() -> usize {
    100
}

impl EdgeModel {
    pub fn new(measures: Vec<Measure>, multiplicities: Vec<usize>, kind: ModelKind, size: usize) -> Result<Self> {
        if measures.is_empty() || measures.len() != multiplicities.len() {
            return Err(SpecError::InvalidModel(
                "one multiplicity per measure is required".into(),
            ));
        }
        if multiplicities.contains(&0) {
            return Err(SpecError::InvalidModel("multiplicities must be positive".into()));
        }
        if size == 0 {
            return Err(SpecError::InvalidModel("size must be positive".into()));
        }
        if kind == ModelKind::Quantized && measures.iter().any(|m| !m.density_le_one()) {
            return Err(SpecError::NotDensityBounded);
        }
        Ok(EdgeModel {
            measures,
            multiplicities,
            kind,
            size,
        })
    }

    /// `n` copies of one measure.
    pub fn power(m: Measure, n: usize, kind: ModelKind) -> Result<Self> {
        EdgeModel::new(vec![m], vec![n], kind, 100)
    }

    pub fn from_spec(spec: &EdgeModelSpec) -> Result<Self> {
        let measures = spec
            .measures
            .iter()
            .map(Measure::from_spec)
            .collect::<Result<Vec<_>>>()?;
        EdgeModel::new(measures, spec.multiplicities.clone(), spec.kind, spec.size)
    }

    pub fn to_spec(&self) -> EdgeModelSpec {
        EdgeModelSpec {
            measures: self.measures.iter().map(Measure::to_spec).collect(),
            multiplicities: self.multiplicities.clone(),
            kind: self.kind,
            size: self.size,
        }
    }

    /// Total number of summands `n`.
    pub fn count(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// Every summand translated by `s`.
    pub fn shifted(&self, s: f64) -> Self {
        EdgeModel {
            measures: self.measures.iter().map(|m| m.shifted(s)).collect(),
            ..self.clone()
        }
    }

    /// `min_i G_i(E₊⁽ⁱ⁾)`; an infinite limit is replaced by `G` just right of the edge.
    pub fn g_max(&self) -> f64 {
        self.measures
            .iter()
            .map(|m| match m.right_edge_limits().0 {
                Some(g) => g,
                None => {
                    let (_, hi) = m.support();
                    m.cauchy(C64::new(hi + 1e-10 * m.scale(), 0.0))
                        .map(|g| g.re)
                        .unwrap_or(f64::INFINITY)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn scale(&self) -> f64 {
        self.measures.iter().map(Measure::scale).fold(0.0, f64::max)
    }

    /// `A(u)` at complex `u`.
    pub fn a_eval(&self, u: C64) -> Result<C64> {
        if u.norm() == 0.0 {
            return Err(SpecError::ZeroArgument("u"));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (m, n) in self.measures.iter().zip(&self.multiplicities) {
            acc += m.inverse_cauchy(u)? * *n as f64;
        }
        let rest = 1.0 - self.count() as f64;
        Ok(acc + rest * self.correction(u))
    }

    fn correction(&self, u: C64) -> C64 {
        match self.kind {
            ModelKind::Additive => u.inv(),
            ModelKind::Quantized => (1.0 - (-u).exp()).inv(),
        }
    }

    /// `(A, A′, A″)` at real `u`, with derivatives from those of the inverse transforms.
    pub fn a_derivatives(&self, u: f64) -> Result<(f64, f64, f64)> {
        self.derivatives_with(u, |m, u| {
            let z = m.inverse_cauchy(C64::new(u, 0.0))?;
            let g1 = m.cauchy_derivative(z, 1)?.re;
            let g2 = m.cauchy_derivative(z, 2)?.re;
            Ok((z.re, 1.0 / g1, -g2 / (g1 * g1 * g1)))
        })
    }

    /// `(A, A′, A″)` at `u = G_max`, taking right-edge limits for the measures whose
    /// Cauchy transform reaches `G_max` at their edge.
    pub fn edge_derivatives(&self, g_max: f64) -> Result<(f64, f64, f64)> {
        self.derivatives_with(g_max, |m, u| match m.right_edge_limits() {
            (Some(g), slope) if u >= g * (1.0 - 1e-12) => {
                let (_, hi) = m.support();
                let second = |d: f64| -> Result<f64> {
                    let s = m.cauchy_series(C64::new(hi + d, 0.0))?;
                    let g1 = s[1].re;
                    Ok(-s[2].re / (g1 * g1 * g1))
                };
                let d = 1e-8 * m.scale();
                let extrapolated = 2.0 * second(d / 4.0)? - second(d)?;
                Ok((hi, slope.map_or(0.0, |g1| 1.0 / g1), extrapolated))
            }
            _ => {
                let z = m.inverse_cauchy(C64::new(u, 0.0))?;
                let g1 = m.cauchy_derivative(z, 1)?.re;
                let g2 = m.cauchy_derivative(z, 2)?.re;
                Ok((z.re, 1.0 / g1, -g2 / (g1 * g1 * g1)))
            }
        })
    }

    /// Combines `(G⁻¹, (G⁻¹)′, (G⁻¹)″)` of each summand with the correction term.
    fn derivatives_with<F>(&self, u: f64, inverse: F) -> Result<(f64, f64, f64)>
    where
        F: Fn(&Measure, f64) -> Result<(f64, f64, f64)>,
    {
        if u == 0.0 {
            return Err(SpecError::ZeroArgument("u"));
        }
        let (mut a, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (m, n) in self.measures.iter().zip(&self.multiplicities) {
            let n = *n as f64;
            let (z, i1, i2) = inverse(m, u)?;
            a += n * z;
            d1 += n * i1;
            d2 += n * i2;
        }
        let rest = 1.0 - self.count() as f64;
        match self.kind {
            ModelKind::Additive => {
                a += rest / u;
                d1 -= rest / (u * u);
                d2 += 2.0 * rest / (u * u * u);
            }
            ModelKind::Quantized => {
                let e = (-u).exp();
                let q = 1.0 - e;
                a += rest / q;
                d1 -= rest * e / (q * q);
                d2 += rest * e * (1.0 + e) / (q * q * q);
            }
        }
        Ok((a, d1, d2))
    }

    fn has_finite_edge(&self, g_max: f64) -> bool {
        self.measures
            .iter()
            .any(|m| m.right_edge_limits().0.is_some_and(|g| g <= g_max))
    }
}

/// Location of the critical point of `A` and the resulting edge constants.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeReport {
    pub found: bool,
    pub z_crit: f64,
    #[serde(rename = "E")]
    pub a_at_crit: f64,
    #[serde(rename = "A2")]
    pub a2_at_crit: f64,
    #[serde(rename = "V")]
    pub v_scale: f64,
    pub bracket: (f64, f64),
    pub diagnostics: BTreeMap<String, f64>,
}

/// Smallest positive critical point of `A` on `(0, G_max)`; absence is reported, not raised.
pub fn find_critical_point(model: &EdgeModel) -> EdgeReport {
    let g_max = model.g_max();
    let lo = 1e-6 * g_max.min(1.0 / model.scale());
    let hi = g_max * (1.0 - 1e-9);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("g_max".to_string(), g_max);
    let missing = |diagnostics: BTreeMap<String, f64>| EdgeReport {
        found: false,
        z_crit: f64::NAN,
        a_at_crit: f64::NAN,
        a2_at_crit: f64::NAN,
        v_scale: f64::NAN,
        bracket: (lo, hi),
        diagnostics,
    };
    if !(hi > lo) {
        return missing(diagnostics);
    }
    let ratio = (hi / lo).ln();
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    let mut evaluated = 0usize;
    for i in 0..SCAN_POINTS {
        let u = lo * (ratio * i as f64 / (SCAN_POINTS - 1) as f64).exp();
        let Ok((_, d1, _)) = model.a_derivatives(u) else {
            continue;
        };
        evaluated += 1;
        if let Some((pu, pd)) = prev {
            if pd < 0.0 && d1 >= 0.0 {
                bracket = Some((pu, u));
                break;
            }
        }
        prev = Some((u, d1));
    }
    diagnostics.insert("scan_points".to_string(), evaluated as f64);
    if let Some((_, d)) = prev {
        diagnostics.insert("last_derivative".to_string(), d);
    }
    let (mut a, mut b) = match bracket {
        Some(br) => br,
        None if model.has_finite_edge(g_max) => match model.edge_derivatives(g_max) {
            Ok((value, d1, d2)) if d1.abs() <= DERIVATIVE_TOL => {
                diagnostics.insert("derivative_at_crit".to_string(), d1);
                return EdgeReport {
                    found: d2 > 0.0,
                    z_crit: g_max,
                    a_at_crit: value,
                    a2_at_crit: d2,
                    v_scale: if d2 > 0.0 { (d2 / 2.0).cbrt() } else { f64::NAN },
                    bracket: (prev.map_or(lo, |p| p.0), g_max),
                    diagnostics,
                };
            }
            Ok((_, d1, _)) if d1 > 0.0 && prev.is_some() => (prev.map_or(lo, |p| p.0), g_max),
            _ => return missing(diagnostics),
        },
        None => return missing(diagnostics),
    };
    let initial = (a, b);
    let mut u = 0.5 * (a + b);
    for _ in 0..200 {
        u = 0.5 * (a + b);
        let Ok((_, d1, _)) = model.a_derivatives(u) else { break };
        if d1.abs() <= DERIVATIVE_TOL || b - a <= 1e-15 * b {
            break;
        }
        if d1 < 0.0 {
            a = u;
        } else {
            b = u;
        }
    }
    match model.a_derivatives(u) {
        Ok((value, d1, d2)) => {
            diagnostics.insert("derivative_at_crit".to_string(), d1);
            let h = 1e-4 * u;
            if let (Ok(p), Ok(m)) = (model.a_derivatives(u + h), model.a_derivatives(u - h)) {
                diagnostics.insert("a2_central_difference".to_string(), (p.0 - 2.0 * value + m.0) / (h * h));
            }
            let found = d2 > 0.0;
            EdgeReport {
                found,
                z_crit: u,
                a_at_crit: value,
                a2_at_crit: d2,
                v_scale: if found { (d2 / 2.0).cbrt() } else { f64::NAN },
                bracket: initial,
                diagnostics,
            }
        }
        Err(_) => missing(diagnostics),
    }
}

/// `(𝔈, 𝔙) = (A(𝔷), (A″(𝔷)/2)^{1/3})`.
pub fn edge_constants(report: &EdgeReport) -> Result<(f64, f64)> {
    if !report.found {
        return Err(SpecError::NoCriticalPoint);
    }
    Ok((report.a_at_crit, (report.a2_at_crit / 2.0).cbrt()))
}

fn reciprocal_or_infinite(denominator: f64, tol: f64) -> f64 {
    if denominator <= tol {
        f64::INFINITY
    } else {
        1.0 / denominator
    }
}

/// `(1 + G(x)²/G′(x))⁻¹` at `x = E₊ + c (E₊ − E₋)`.
fn tau_at(m: &Measure, c: f64) -> Result<f64> {
    if m.single_atom().is_some() {
        return Ok(f64::INFINITY);
    }
    let (lo, hi) = m.support();
    let x = hi + c * (hi - lo);
    Ok(reciprocal_or_infinite(1.0 - m.variance_functional(x)?, 1e-15))
}

/// Summand count above which the `n`-fold free convolution power has a square-root edge.
pub fn tau(m: &Measure) -> Result<f64> {
    tau_at(m, 4.0)
}

/// Root of `log c − (c+1)/c`.
pub fn tau_constant() -> f64 {
    let mut c: f64 = 3.5;
    for _ in 0..50 {
        let f = c.ln() - (c + 1.0) / c;
        let df = 1.0 / c + 1.0 / (c * c);
        let step = f / df;
        c -= step;
        if step.abs() < 1e-15 * c {
            break;
        }
    }
    c
}

/// [`tau`] evaluated at the optimized abscissa.
pub fn tau_optimized(m: &Measure) -> Result<f64> {
    tau_at(m, tau_constant())
}

/// Quantized threshold `(1 + (e^G − 1)² / (e^G G′))⁻¹` at `x = 4(E₊ − E₋) + E₊`.
pub fn tau_q(m: &Measure) -> Result<f64> {
    if !m.density_le_one() {
        return Err(SpecError::NotDensityBounded);
    }
    let (lo, hi) = m.support();
    let x = hi + 4.0 * (hi - lo);
    let s = m.cauchy_series(C64::new(x, 0.0))?;
    let (g, dg) = (s[0].re, s[1].re);
    let eg = g.exp();
    let ratio = (g.exp_m1() * g.exp_m1()) / (eg * dg);
    Ok(reciprocal_or_infinite(1.0 + ratio, 1e-12))
}

/// `(1 + G(E₊)²/G′(E₊))⁻¹` from the right limits; one when either limit is infinite.
pub fn sqrt_edge_indicator(m: &Measure) -> f64 {
    match m.right_edge_limits() {
        (Some(g), Some(dg)) if dg != 0.0 => 1.0 / (1.0 + g * g / dg),
        _ => 1.0,
    }
}

/// `𝒮_u(z) = zu − ∫ log(z − x) dm(x) − log u`.
pub fn steepest_phase(m: &Measure, u: C64, z: C64) -> Result<C64> {
    if u.norm() == 0.0 {
        return Err(SpecError::ZeroArgument("u"));
    }
    Ok(z * u - m.log_potential(z)? - u.ln())
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelClass {
    Minus,
    Plus,
    Boundary,
    NearSupport,
}

/// Values and classification of `Re 𝒮_u` on a grid, relative to `Re 𝒮_u(z_u)`.
#[derive(Debug, Clone, Serialize)]
pub struct LevelSetGrid {
    pub region: Region,
    pub resolution: (usize, usize),
    pub saddle: C64,
    pub reference: f64,
    /// `values[j][i]` at `re_i + i·im_j`; NaN on the support.
    pub values: Vec<Vec<f64>>,
    pub classes: Vec<Vec<LevelClass>>,
}

impl LevelSetGrid {
    pub fn node(&self, i: usize, j: usize) -> C64 {
        let (nx, ny) = self.resolution;
        let r = &self.region;
        let x = r.re_min + (r.re_max - r.re_min) * i as f64 / (nx - 1) as f64;
        let y = r.im_min + (r.im_max - r.im_min) * j as f64 / (ny - 1) as f64;
        C64::new(x, y)
    }

    /// CSV rows `x,y,re_s,class`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,re_s,class\n");
        for (j, row) in self.values.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                let z = self.node(i, j);
                let class = match self.classes[j][i] {
                    LevelClass::Minus => "minus",
                    LevelClass::Plus => "plus",
                    LevelClass::Boundary => "boundary",
                    LevelClass::NearSupport => "near-support",
                };
                out.push_str(&format!("{:.9e},{:.9e},{:.9e},{}\n", z.re, z.im, v, class));
            }
        }
        out
    }

    /// Number of 4-connected components of the given class.
    pub fn components(&self, class: LevelClass) -> usize {
        let (nx, ny) = self.resolution;
        let mut seen = vec![vec![false; nx]; ny];
        let mut count = 0;
        for j0 in 0..ny {
            for i0 in 0..nx {
                if seen[j0][i0] || self.classes[j0][i0] != class {
                    continue;
                }
                count += 1;
                let mut stack = vec![(i0, j0)];
                seen[j0][i0] = true;
                while let Some((i, j)) = stack.pop() {
                    let mut push = |a: usize, b: usize| {
                        if !seen[b][a] && self.classes[b][a] == class {
                            seen[b][a] = true;
                            stack.push((a, b));
                        }
                    };
                    if i > 0 {
                        push(i - 1, j);
                    }
                    if i + 1 < nx {
                        push(i + 1, j);
                    }
                    if j > 0 {
                        push(i, j - 1);
                    }
                    if j + 1 < ny {
                        push(i, j + 1);
                    }
                }
            }
        }
        count
    }
}

/// Classifies grid nodes against the level of `Re 𝒮_u` at `z_u = G^{-1}(u)`.
pub fn level_set_grid(m: &Measure, u: C64, region: Region, resolution: (usize, usize)) -> Result<LevelSetGrid> {
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 || !(region.re_max > region.re_min && region.im_max > region.im_min) {
        return Err(SpecError::InvalidArgument(
            "grid needs at least 2×2 nodes and a nonempty region".into(),
        ));
    }
    let saddle = m.inverse_cauchy(u)?;
    let reference = steepest_phase(m, u, saddle)?.re;
    let band = 1e-9 * reference.abs().max(1.0);
    let (lo, hi) = m.support();
    let half_cell = 0.5 * (region.im_max - region.im_min) / (ny - 1) as f64;
    let mut grid = LevelSetGrid {
        region,
        resolution,
        saddle,
        reference,
        values: vec![vec![f64::NAN; nx]; ny],
        classes: vec![vec![LevelClass::NearSupport; nx]; ny],
    };
    for j in 0..ny {
        for i in 0..nx {
            let z = grid.node(i, j);
            if z.im.abs() < half_cell && z.re >= lo && z.re <= hi {
                continue;
            }
            let Ok(s) = steepest_phase(m, u, z) else { continue };
            let v = s.re;
            grid.values[j][i] = v;
            grid.classes[j][i] = if (v - reference).abs() <= band {
                LevelClass::Boundary
            } else if v < reference {
                LevelClass::Minus
            } else {
                LevelClass::Plus
            };
        }
    }
    Ok(grid)
}

/// Outcome of the curve search for `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    pub in_o: bool,
    pub margin: f64,
    pub saddle: C64,
}

/// Closed superellipse `|x−c|^p/a^p + |y−y_c|^p/b^p = 1` through a given point.
struct Superellipse {
    center: C64,
    a: f64,
    b: f64,
    power: f64,
}

impl Superellipse {
    fn through(point: C64, center: C64, ratio: f64, power: f64) -> Self {
        let dx = (point.re - center.re).abs();
        let dy = (point.im - center.im).abs() / ratio;
        let a = (dx.powf(power) + dy.powf(power)).powf(1.0 / power);
        Superellipse {
            center,
            a,
            b: ratio * a,
            power,
        }
    }

    fn at(&self, theta: f64) -> C64 {
        let e = 2.0 / self.power;
        let (s, c) = theta.sin_cos();
        C64::new(
            self.center.re + self.a * c.signum() * c.abs().powf(e),
            self.center.im + self.b * s.signum() * s.abs().powf(e),
        )
    }

    fn angle_of(&self, point: C64) -> f64 {
        let x = (point.re - self.center.re) / self.a;
        let y = (point.im - self.center.im) / self.b;
        let p2 = self.power / 2.0;
        (y.signum() * y.abs().powf(p2)).atan2(x.signum() * x.abs().powf(p2))
    }

    fn encloses(&self, lo: f64, hi: f64) -> bool {
        let inside = |x: f64| {
            ((x - self.center.re).abs() / self.a).powf(self.power) + (self.center.im.abs() / self.b).powf(self.power)
                < 1.0
        };
        inside(lo) && inside(hi)
    }
}

/// Curve search through `z0` for `u = G(z0)`.
pub fn admissibility_at(m: &Measure, z0: C64) -> Result<Admissibility> {
    let u = m.cauchy(z0)?;
    let reference = steepest_phase(m, u, z0)?.re;
    let (lo, hi) = m.support();
    let span = m.scale();
    let nodes = 720;
    let mut best = f64::NEG_INFINITY;
    let offsets = if z0.im == 0.0 {
        vec![0.0]
    } else {
        vec![0.0, 0.25 * z0.im, 0.5 * z0.im]
    };
    for power in [2.0, 3.0, 4.0] {
        for j in 0..=4 {
            let cx = lo + 0.25 * j as f64 * (hi - lo);
            for yc in &offsets {
                for ratio in [0.125, 0.25, 0.5, 1.0, 2.0, 4.0] {
                    let curve = Superellipse::through(z0, C64::new(cx, *yc), ratio, power);
                    if !curve.encloses(lo, hi) {
                        continue;
                    }
                    let start = curve.angle_of(z0);
                    let mut worst = f64::INFINITY;
                    for k in 1..nodes {
                        let z = curve.at(start + 2.0 * PI * k as f64 / nodes as f64);
                        let gap = match steepest_phase(m, u, z) {
                            Ok(s) => {
                                let d = ((z - z0).norm() / span).min(1.0);
                                (reference - s.re) / (d * d)
                            }
                            Err(_) => f64::NEG_INFINITY,
                        };
                        worst = worst.min(gap);
                        if worst <= best {
                            break;
                        }
                    }
                    best = best.max(worst);
                }
            }
        }
    }
    let in_o = best > 0.0;
    Ok(Admissibility {
        in_o,
        margin: if in_o { best } else { 0.0 },
        saddle: z0,
    })
}

/// Curve search for `u`, through `z_u = G^{-1}(u)`.
pub fn admissibility_check(m: &Measure, u: C64) -> Result<Admissibility> {
    let z0 = m.inverse_cauchy(u)?;
    admissibility_at(m, z0)
}

/// Checks admissibility of `G(z)` on a `points × points` grid of
/// `{Re z ≥ threshold, |z − E₊| ≤ 5 (E₊ − E₋)}`, upper half only by conjugate symmetry.
pub fn set_inclusion_check(m: &Measure, threshold: f64, points: usize) -> Result<bool> {
    let (_, hi) = m.support();
    if threshold <= hi {
        return Err(SpecError::NotOutsideSupport(threshold));
    }
    let reach = 5.0 * m.scale();
    let points = points.max(2);
    for i in 0..points {
        let x = threshold + (hi + reach - threshold).max(0.0) * i as f64 / (points - 1) as f64;
        for j in 0..points {
            let y = reach * j as f64 / (points - 1) as f64;
            let z = C64::new(x, y);
            if (z - hi).norm() > reach && j > 0 {
                continue;
            }
            if !admissibility_at(m, z)?.in_o {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn semicircle() -> Measure {
        Measure::semicircle(0.0, 2.0).unwrap()
    }

    #[test]
    fn a_closed_forms() {
        let sc = EdgeModel::power(semicircle(), 1, ModelKind::Additive).unwrap();
        assert!((sc.a_eval(C64::new(0.5, 0.0)).unwrap().re - 2.5).abs() < 1e-9);
        let rad = EdgeModel::power(Measure::rademacher(), 2, ModelKind::Additive).unwrap();
        assert!((rad.a_eval(C64::new(1.0, 0.0)).unwrap().re - 5f64.sqrt()).abs() < 1e-9);
        let atom = EdgeModel::power(Measure::dirac(0.7), 1, ModelKind::Additive).unwrap();
        assert!((atom.a_eval(C64::new(1.0, 0.0)).unwrap().re - 1.7).abs() < 1e-9);
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let model = EdgeModel::new(
            vec![Measure::uniform(0.0, 1.0).unwrap(), semicircle()],
            vec![2, 1],
            ModelKind::Additive,
            50,
        )
        .unwrap();
        let u = 0.3;
        let h = 1e-4;
        let (a, d1, d2) = model.a_derivatives(u).unwrap();
        let ap = model.a_derivatives(u + h).unwrap().0;
        let am = model.a_derivatives(u - h).unwrap().0;
        assert!((d1 - (ap - am) / (2.0 * h)).abs() < 1e-6 * d1.abs().max(1.0));
        assert!((d2 - (ap - 2.0 * a + am) / (h * h)).abs() < 1e-3 * d2.abs().max(1.0));
    }

    #[test]
    fn semicircle_edge() {
        let model = EdgeModel::power(semicircle(), 1, ModelKind::Additive).unwrap();
        let r = find_critical_point(&model);
        assert!(r.found);
        assert!((r.z_crit - 1.0).abs() < 1e-6);
        assert!((r.a_at_crit - 2.0).abs() < 1e-9);
        assert!((r.a2_at_crit - 2.0).abs() < 1e-6);
        let (e, v) = edge_constants(&r).unwrap();
        assert!((e - 2.0).abs() < 1e-9 && (v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rademacher_thresholds() {
        let r = Measure::rademacher();
        assert!(!find_critical_point(&EdgeModel::power(r.clone(), 2, ModelKind::Additive).unwrap()).found);
        let big = find_critical_point(&EdgeModel::power(r.clone(), 82, ModelKind::Additive).unwrap());
        assert!(big.found && big.a2_at_crit > 0.0);
        let s: f64 = 41.0 / 40.0;
        assert!((big.z_crit - ((s * s - 1.0) / 4.0).sqrt()).abs() < 1e-8);
        assert!((tau(&r).unwrap() - 82.0).abs() < 1e-9);
        assert!((tau_constant() - 3.59112).abs() < 1e-5);
        let opt = tau_optimized(&r).unwrap();
        assert!((67.5..68.5).contains(&opt), "{opt}");
        assert!(tau(&Measure::dirac(1.0)).unwrap().is_infinite());
    }

    #[test]
    fn uniform_thresholds() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let g = 1.25f64.ln();
        let expected = 1.0 / (1.0 - g * g / 0.05);
        assert!((tau(&u).unwrap() - expected).abs() < 1e-8 * expected);
        assert!(tau_q(&u).unwrap().is_infinite());
        let wide = Measure::uniform(0.0, 2.0).unwrap();
        let g = 0.5 * (10.0f64 / 8.0).ln();
        let dg = 0.5 * (1.0 / 10.0 - 1.0 / 8.0);
        let expected = 1.0 / (1.0 + g.exp_m1().powi(2) / (g.exp() * dg));
        assert!((tau_q(&wide).unwrap() - expected).abs() < 1e-8 * expected);
        assert!(matches!(
            tau_q(&Measure::rademacher()),
            Err(SpecError::NotDensityBounded)
        ));
    }

    #[test]
    fn power_law_indicator() {
        for p in [1.5, 2.0, 3.0] {
            let m = Measure::jacobi(0.0, p, 0.0, 1.0).unwrap();
            assert!((sqrt_edge_indicator(&m) - p * p).abs() < 1e-5);
        }
        assert!((sqrt_edge_indicator(&semicircle()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn translation_equivariance() {
        let model = EdgeModel::power(semicircle(), 3, ModelKind::Additive).unwrap();
        let a = edge_constants(&find_critical_point(&model)).unwrap();
        let b = edge_constants(&find_critical_point(&model.shifted(0.7))).unwrap();
        assert!((b.0 - a.0 - 2.1).abs() < 1e-7 && (b.1 - a.1).abs() < 1e-7);
    }

    #[test]
    fn phase_examples() {
        let s = steepest_phase(&Measure::dirac(0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0)).unwrap();
        assert!((s - 1.0).norm() < 1e-15);
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let l2 = 2f64.ln();
        let s = steepest_phase(&u, C64::new(l2, 0.0), C64::new(2.0, 0.0)).unwrap();
        assert!((s.re - (1.0 - l2.ln())).abs() < 1e-12);
        let z = C64::new(1.4, 0.6);
        let a = steepest_phase(&u, C64::new(0.3, 0.0), z).unwrap();
        let b = steepest_phase(&u, C64::new(0.3, 0.0), z.conj()).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn semicircle_level_lines_have_three_components() {
        let m = semicircle();
        let u = m.cauchy(C64::new(3.0, 0.0)).unwrap();
        let region = Region {
            re_min: -7.0,
            re_max: 9.0,
            im_min: -6.05,
            im_max: 6.05,
        };
        let grid = level_set_grid(&m, u, region, (161, 122)).unwrap();
        assert_eq!(grid.components(LevelClass::Plus), 2);
        assert_eq!(grid.components(LevelClass::Minus), 1);
        assert_eq!(grid.classes[121][80], LevelClass::Minus);
        assert_eq!(grid.classes[61][0], LevelClass::Minus);
    }

    #[test]
    fn admissibility_examples() {
        let m = Measure::uniform(0.0, 1.0).unwrap();
        for u in [0.05, 0.3, 1.0, 3.0] {
            assert!(admissibility_check(&m, C64::new(u, 0.0)).unwrap().in_o, "u = {u}");
        }
        assert!(admissibility_at(&m, C64::new(5.0, 0.0)).unwrap().in_o);
        let complex = admissibility_at(&m, C64::new(1.2, 0.5)).unwrap();
        assert!(complex.in_o && complex.margin > 0.0);
    }

    #[test]
    fn inclusion_examples() {
        let m = Measure::uniform(0.0, 1.0).unwrap();
        assert!(set_inclusion_check(&m, 5.0, 5).unwrap());
        assert!(matches!(
            set_inclusion_check(&m, 0.5, 5),
            Err(SpecError::NotOutsideSupport(_))
        ));
    }
}

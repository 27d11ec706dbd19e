//! Free additive convolution through subordination, Stieltjes inversion, the
//! Markov–Krein correspondence and quantized free convolution.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SpecError};
use crate::measure::{Atom, Measure, MkDirection};
use crate::quad::{gl48, C64};
use std::f64::consts::PI;

/// Controls for the subordination fixed point.
#[derive(Debug, Clone, Copy)]
pub struct FixedPointConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub newton: bool,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            max_iter: 100_000,
            tol: 1e-13,
            newton: true,
        }
    }
}

/// Subordination functions and the convolution transform at one point.
#[derive(Debug, Clone, Serialize)]
pub struct SubordinationSample {
    pub z: C64,
    pub omegas: Vec<C64>,
    pub g_value: C64,
    pub iterations: usize,
    pub residual: f64,
}

/// Tabulated output of a free convolution.
#[derive(Debug, Clone)]
pub struct ConvolutionResult {
    pub measure: Measure,
    pub support: (f64, f64),
    pub mass_defect: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

/// Which convolution to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum Convolution<'a> {
    Pair(&'a Measure, &'a Measure),
    /// `n`-fold free convolution power of one measure.
    Power(&'a Measure, usize),
}

fn h_and_dh(m: &Measure, w: C64) -> Result<(C64, C64)> {
    let (g, dg) = m.cauchy_pair(w)?;
    let h = g.inv() - w;
    let dh = -dg / (g * g) - 1.0;
    Ok((h, dh))
}

impl<'a> Convolution<'a> {
    /// Convex-hull bound `[Σ E_minus, Σ E_plus]` for the convolution support.
    pub fn support_bound(&self) -> (f64, f64) {
        match self {
            Convolution::Pair(a, b) => {
                let (a0, a1) = a.support();
                let (b0, b1) = b.support();
                (a0 + b0, a1 + b1)
            }
            Convolution::Power(m, n) => {
                let (lo, hi) = m.support();
                (lo * *n as f64, hi * *n as f64)
            }
        }
    }

    fn scale(&self) -> f64 {
        let (lo, hi) = self.support_bound();
        if hi > lo {
            hi - lo
        } else {
            lo.abs().max(1.0)
        }
    }

    /// Asymptotic starting point for the first subordination function.
    pub fn initial_omega(&self, z: C64) -> C64 {
        let lift = C64::new(0.0, 0.25 * self.scale());
        match self {
            Convolution::Pair(_, b) => z - b.mean() + lift,
            Convolution::Power(m, n) => (z - m.mean() * (*n as f64 - 1.0)) + lift,
        }
    }

    /// Map `T` and its derivative for the fixed point in the first subordination function.
    fn step(&self, z: C64, w: C64) -> Result<(C64, C64)> {
        match self {
            Convolution::Pair(a, b) => {
                let (h1, dh1) = h_and_dh(a, w)?;
                let w2 = z + h1;
                let (h2, dh2) = h_and_dh(b, w2)?;
                Ok((z + h2, dh2 * dh1))
            }
            Convolution::Power(m, n) => {
                let k = *n as f64 - 1.0;
                let (h, dh) = h_and_dh(m, w)?;
                Ok((z + h * k, dh * k))
            }
        }
    }

    /// Solves the subordination fixed point at `z` (Im z > 0) starting from `start`.
    pub fn solve(&self, z: C64, start: Option<C64>, cfg: FixedPointConfig) -> Result<SubordinationSample> {
        if !(z.im > 0.0) {
            return Err(SpecError::InvalidArgument(format!(
                "subordination needs Im z > 0, got {z}"
            )));
        }
        if let Some(sample) = self.atom_shortcut(z)? {
            return Ok(sample);
        }
        let mut w = start.filter(|s| s.im > 0.0).unwrap_or_else(|| self.initial_omega(z));
        let mut t = self.step(z, w)?;
        let mut res = (t.0 - w).norm();
        let mut best = res;
        let mut stalled = 0usize;
        let mut averaged = false;
        let mut iterations = 0;
        while iterations < cfg.max_iter {
            if res <= cfg.tol * w.norm().max(1.0) {
                break;
            }
            iterations += 1;
            let mut moved = false;
            if cfg.newton {
                let denom = C64::new(1.0, 0.0) - t.1;
                if denom.norm() > 1e-300 {
                    let cand = w - (w - t.0) / denom;
                    if cand.im > 0.0 && cand.re.is_finite() && cand.im.is_finite() {
                        if let Ok(tc) = self.step(z, cand) {
                            let rc = (tc.0 - cand).norm();
                            if rc < res {
                                w = cand;
                                t = tc;
                                res = rc;
                                moved = true;
                            }
                        }
                    }
                }
            }
            if !moved {
                let next = if averaged { (w + t.0) * 0.5 } else { t.0 };
                w = next;
                t = self.step(z, w)?;
                res = (t.0 - w).norm();
            }
            if res < best {
                best = res;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= 200 {
                    averaged = true;
                }
            }
        }
        if res > cfg.tol * w.norm().max(1.0) {
            return Err(SpecError::NoConvergence(format!(
                "subordination at z = {z}, residual {res:e}"
            )));
        }
        self.finish(z, w, iterations, res)
    }

    fn finish(&self, z: C64, w: C64, iterations: usize, residual: f64) -> Result<SubordinationSample> {
        match self {
            Convolution::Pair(a, _) => {
                let (h1, _) = h_and_dh(a, w)?;
                let g = a.cauchy(w)?;
                Ok(SubordinationSample {
                    z,
                    omegas: vec![w, z + h1],
                    g_value: g,
                    iterations,
                    residual,
                })
            }
            Convolution::Power(m, n) => {
                let g = m.cauchy(w)?;
                Ok(SubordinationSample {
                    z,
                    omegas: vec![w; *n],
                    g_value: g,
                    iterations,
                    residual,
                })
            }
        }
    }

    fn atom_shortcut(&self, z: C64) -> Result<Option<SubordinationSample>> {
        match self {
            Convolution::Pair(a, b) => match (a.single_atom(), b.single_atom()) {
                (Some(_), Some(_)) => Err(SpecError::BothAtoms),
                (Some(x), None) => {
                    let w2 = z - x;
                    let g = b.cauchy(w2)?;
                    Ok(Some(SubordinationSample {
                        z,
                        omegas: vec![g.inv() + x, w2],
                        g_value: g,
                        iterations: 0,
                        residual: 0.0,
                    }))
                }
                (None, Some(x)) => {
                    let w1 = z - x;
                    let g = a.cauchy(w1)?;
                    Ok(Some(SubordinationSample {
                        z,
                        omegas: vec![w1, g.inv() + x],
                        g_value: g,
                        iterations: 0,
                        residual: 0.0,
                    }))
                }
                (None, None) => Ok(None),
            },
            Convolution::Power(m, n) => {
                if let Some(x) = m.single_atom() {
                    let g = (z - x * *n as f64).inv();
                    return Ok(Some(SubordinationSample {
                        z,
                        omegas: vec![g.inv() + x; *n],
                        g_value: g,
                        iterations: 0,
                        residual: 0.0,
                    }));
                }
                Ok(None)
            }
        }
    }

    /// Cauchy transform of the convolution at `z` in the upper half-plane.
    pub fn cauchy(&self, z: C64) -> Result<C64> {
        Ok(self.solve(z, None, FixedPointConfig::default())?.g_value)
    }
}

/// Subordination functions of `m1 ⊞ m2` at `z`.
pub fn subordination_at(m1: &Measure, m2: &Measure, z: C64, cfg: FixedPointConfig) -> Result<SubordinationSample> {
    Convolution::Pair(m1, m2).solve(z, None, cfg)
}

const GRID_NODES: usize = 2048;
const CHUNK: usize = 64;
const EPS_FACTORS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// Evaluates the convolution transform at `x + i eps` along a grid, warm-starting
/// right to left inside deterministic chunks.
fn sweep(conv: &Convolution, xs: &[f64], eps: f64, cfg: FixedPointConfig) -> Result<Vec<C64>> {
    let chunks: Vec<Result<Vec<C64>>> = xs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut out = vec![C64::new(0.0, 0.0); chunk.len()];
            let mut warm: Option<C64> = None;
            for i in (0..chunk.len()).rev() {
                let z = C64::new(chunk[i], eps);
                let s = match conv.solve(z, warm, cfg) {
                    Ok(s) => s,
                    Err(_) => conv.solve(z, None, cfg)?,
                };
                warm = Some(s.omegas[0]);
                out[i] = s.g_value;
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(xs.len());
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

/// Density of the convolution on a uniform grid by Richardson-extrapolated Stieltjes inversion.
pub fn convolution_density(conv: &Convolution, nodes: usize, cfg: FixedPointConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let (lo, hi) = conv.support_bound();
    let span = conv.scale();
    let xs: Vec<f64> = (0..nodes)
        .map(|i| lo + (hi - lo) * i as f64 / (nodes - 1) as f64)
        .collect();
    let mut d = Vec::new();
    for f in EPS_FACTORS {
        let g = sweep(conv, &xs, f * span, cfg)?;
        d.push(g.iter().map(|v| -v.im / PI).collect::<Vec<f64>>());
    }
    let density = (0..nodes)
        .map(|i| {
            let r1 = 2.0 * d[1][i] - d[0][i];
            let r2 = 2.0 * d[2][i] - d[1][i];
            (4.0 * r2 - r1) / 3.0
        })
        .collect();
    Ok((xs, density))
}

fn package(xs: Vec<f64>, mut density: Vec<f64>) -> Result<ConvolutionResult> {
    for v in density.iter_mut() {
        if !(*v > 0.0) {
            *v = 0.0;
        }
    }
    let first = density.iter().position(|v| *v >= 1e-8);
    let last = density.iter().rposition(|v| *v >= 1e-8);
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) if l > f => (f, l),
        _ => return Err(SpecError::Numerical("convolution density vanishes on the grid".into())),
    };
    for (i, v) in density.iter_mut().enumerate() {
        if i < first || i > last {
            *v = 0.0;
        }
    }
    let lo = first.saturating_sub(1);
    let hi = (last + 1).min(xs.len() - 1);
    let txs = xs[lo..=hi].to_vec();
    let tfs = density[lo..=hi].to_vec();
    let mass: f64 = txs
        .windows(2)
        .zip(tfs.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum();
    let measure = Measure::table_normalized(txs, tfs)?;
    let scale = 1.0 / mass;
    let density = density.iter().map(|v| v * scale).collect();
    Ok(ConvolutionResult {
        support: measure.support(),
        measure,
        mass_defect: 1.0 - mass,
        grid: xs,
        density,
    })
}

fn shifted_result(m: &Measure, a: f64) -> ConvolutionResult {
    let measure = m.shifted(a);
    let (lo, hi) = measure.support();
    let grid: Vec<f64> = if hi > lo {
        (0..GRID_NODES)
            .map(|i| lo + (hi - lo) * i as f64 / (GRID_NODES - 1) as f64)
            .collect()
    } else {
        vec![lo]
    };
    let density = grid.iter().map(|x| measure.density(*x).unwrap_or(0.0)).collect();
    ConvolutionResult {
        support: (lo, hi),
        measure,
        mass_defect: 0.0,
        grid,
        density,
    }
}

fn density_csv(grid: &[f64], density: &[f64]) -> String {
    let mut out = String::from("x,density\n");
    for (x, f) in grid.iter().zip(density) {
        out.push_str(&format!("{x:.9e},{f:.9e}\n"));
    }
    out
}

impl ConvolutionResult {
    /// `x,density` rows.
    pub fn to_csv(&self) -> String {
        density_csv(&self.grid, &self.density)
    }

    /// `{"support":[lo,hi],"mass_defect":…}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "support": [self.support.0, self.support.1], "mass_defect": self.mass_defect })
    }
}

impl MkResult {
    pub fn to_csv(&self) -> String {
        density_csv(&self.grid, &self.density)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "atoms": self.atoms.iter().map(|a| serde_json::json!({ "x": a.x, "w": a.w })).collect::<Vec<_>>(),
            "mass_defect": self.mass_defect,
            "contour_mass": self.contour_mass,
        })
    }
}

/// `m1 ⊞ m2` tabulated on a 2048-node grid.
pub fn free_convolve(m1: &Measure, m2: &Measure) -> Result<ConvolutionResult> {
    free_convolve_with(m1, m2, GRID_NODES, FixedPointConfig::default())
}

pub fn free_convolve_with(
    m1: &Measure,
    m2: &Measure,
    nodes: usize,
    cfg: FixedPointConfig,
) -> Result<ConvolutionResult> {
    match (m1.single_atom(), m2.single_atom()) {
        (Some(a), Some(b)) => return Ok(shifted_result(&Measure::dirac(a), b)),
        (Some(a), None) => return Ok(shifted_result(m2, a)),
        (None, Some(b)) => return Ok(shifted_result(m1, b)),
        (None, None) => {}
    }
    let (xs, density) = convolution_density(&Convolution::Pair(m1, m2), nodes, cfg)?;
    package(xs, density)
}

/// Left fold of [`free_convolve`].
pub fn free_convolve_n(measures: &[Measure]) -> Result<ConvolutionResult> {
    let first = measures
        .first()
        .ok_or_else(|| SpecError::InvalidArgument("no measures to convolve".into()))?;
    let mut acc = shifted_result(first, 0.0);
    for m in &measures[1..] {
        acc = free_convolve(&acc.measure, m)?;
    }
    Ok(acc)
}

/// `n`-fold free convolution power, solved with a single subordination function.
pub fn free_convolve_power(m: &Measure, n: usize) -> Result<ConvolutionResult> {
    if n == 0 {
        return Err(SpecError::InvalidArgument("power must be positive".into()));
    }
    if n == 1 {
        return Ok(shifted_result(m, 0.0));
    }
    if let Some(a) = m.single_atom() {
        return Ok(shifted_result(&Measure::dirac(a * n as f64), 0.0));
    }
    let (xs, density) = convolution_density(&Convolution::Power(m, n), GRID_NODES, FixedPointConfig::default())?;
    package(xs, density)
}

/// Right edge of a convolution and the right limit of its Cauchy transform there.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvolutionEdge {
    pub edge: f64,
    pub g_at_edge: f64,
}

/// Locates the right edge by bisection on the near-axis density and extrapolates
/// `G` to the edge from the right assuming square-root behavior.
pub fn convolution_right_edge(conv: &Convolution) -> Result<ConvolutionEdge> {
    let span = conv.scale();
    let cfg = FixedPointConfig::default();
    let eta = 1e-13 * span;
    let density = |x: f64| -> Result<f64> { Ok(-conv.solve(C64::new(x, eta), None, cfg)?.g_value.im / PI) };
    let (lo, hi) = conv.support_bound();
    let mut inside = None;
    let probes = 256;
    for i in (1..probes).rev() {
        let x = lo + (hi - lo) * i as f64 / probes as f64;
        if density(x)? > 1e-6 {
            inside = Some(x);
            break;
        }
    }
    let mut a = inside.ok_or_else(|| SpecError::Numerical("no interior density found".into()))?;
    let mut b = hi;
    while b - a > 1e-13 * span {
        let mid = 0.5 * (a + b);
        if density(mid)? > 1e-6 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let edge = b;
    let delta = 1e-8 * span;
    let g = |d: f64| -> Result<f64> { Ok(conv.solve(C64::new(edge + d, eta), None, cfg)?.g_value.re) };
    let g1 = g(delta)?;
    let g4 = g(4.0 * delta)?;
    Ok(ConvolutionEdge {
        edge,
        g_at_edge: 2.0 * g1 - g4,
    })
}

/// `(ω₁(x), ω₂(x))` for real `x` right of the convolution support.
pub fn omega_real_extension(m1: &Measure, m2: &Measure, x: f64) -> Result<(f64, f64)> {
    let conv = Convolution::Pair(m1, m2);
    let span = conv.scale();
    let cfg = FixedPointConfig::default();
    let mut samples = Vec::new();
    let mut warm = None;
    for f in [1e-6, 5e-7, 2.5e-7] {
        let s = conv.solve(C64::new(x, f * span), warm, cfg)?;
        warm = Some(s.omegas[0]);
        samples.push((s.omegas[0], s.omegas[1]));
    }
    let extrapolate = |a: C64, b: C64, c: C64| -> C64 {
        let r1 = b * 2.0 - a;
        let r2 = c * 2.0 - b;
        (r2 * 4.0 - r1) / 3.0
    };
    let w1 = extrapolate(samples[0].0, samples[1].0, samples[2].0);
    let w2 = extrapolate(samples[0].1, samples[1].1, samples[2].1);
    if w1.im.abs() > 1e-8 * span || w2.im.abs() > 1e-8 * span {
        return Err(SpecError::NotOutsideSupport(x));
    }
    Ok((w1.re, w2.re))
}

/// Markov–Krein image with the raw recovered atoms and density grid.
#[derive(Debug, Clone)]
pub struct MkResult {
    pub measure: Measure,
    pub atoms: Vec<Atom>,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// `1 - (atom mass + tabulated continuous mass)` before renormalization.
    pub mass_defect: f64,
    /// `(1/2πi) ∮ G dz` on a large circle.
    pub contour_mass: f64,
}

fn transform_value(base: &Measure, dir: MkDirection, z: C64) -> Result<C64> {
    let g = base.cauchy(z)?;
    Ok(match dir {
        MkDirection::Forward => C64::new(1.0, 0.0) - (-g).exp(),
        MkDirection::Inverse => {
            let w = C64::new(1.0, 0.0) - g;
            if w.im.abs() <= 1e-300 && w.re <= 0.0 {
                return Err(SpecError::BranchViolation(format!("{z}")));
            }
            -w.ln()
        }
    })
}

fn contour_mass(base: &Measure, dir: MkDirection, center: f64, radius: f64) -> Result<f64> {
    let n = 512;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        let th = 2.0 * PI * (k as f64 + 0.5) / n as f64;
        let e = C64::from_polar(1.0, th);
        acc += transform_value(base, dir, e * radius + center)? * e * radius;
    }
    Ok((acc / n as f64).re)
}

/// Locates atoms of a transform by scanning `eps |Im G(x + i eps)|` and confirming
/// that the residue estimate is stable as `eps` shrinks.
fn detect_atoms(g: &(dyn Fn(C64) -> Result<C64> + Sync), xs: &[f64], span: f64) -> Result<Vec<Atom>> {
    let eps0 = 1e-3 * span;
    let h = xs[1] - xs[0];
    let vals: Vec<f64> = xs
        .par_iter()
        .map(|x| g(C64::new(*x, eps0)).map(|v| eps0 * v.im.abs()))
        .collect::<Result<Vec<f64>>>()?;
    let mut atoms = Vec::new();
    let mut i = 0;
    while i < xs.len() {
        if vals[i] > 0.01 {
            let mut j = i;
            let mut best = i;
            while j < xs.len() && vals[j] > 0.01 {
                if vals[j] > vals[best] {
                    best = j;
                }
                j += 1;
            }
            let mut center = xs[best];
            let mut width = 2.0 * h;
            for eps_f in [1e-4, 1e-6, 1e-8, 1e-10] {
                let eps = eps_f * span;
                let f = |x: f64| g(C64::new(x, eps)).map(|v| v.im.abs()).unwrap_or(0.0);
                let (mut a, mut b) = (center - width, center + width);
                for _ in 0..200 {
                    let m1 = a + (b - a) / 3.0;
                    let m2 = b - (b - a) / 3.0;
                    if f(m1) < f(m2) {
                        a = m1;
                    } else {
                        b = m2;
                    }
                    if b - a < 1e-7 * eps {
                        break;
                    }
                }
                center = 0.5 * (a + b);
                width = 20.0 * eps;
            }
            let weight = |eps: f64| -> Result<f64> { Ok((C64::new(0.0, eps) * g(C64::new(center, eps))?).re) };
            let w_a = weight(1e-8 * span)?;
            let w_b = weight(1e-10 * span)?;
            if w_b > 1e-9 && (w_a - w_b).abs() <= 1e-3 * w_b {
                atoms.push(Atom { x: center, w: w_b });
            }
            i = j;
        } else {
            i += 1;
        }
    }
    Ok(atoms)
}

/// Mass of `[a, b]` as `-Im ∫ G dz / π` along the upper semicircle over the cell, which stays clear of
/// endpoint singularities.
fn cell_mass<F: Fn(C64) -> Result<C64>>(g: &F, a: f64, b: f64) -> Result<f64> {
    let (mid, r) = (0.5 * (a + b), 0.5 * (b - a));
    let mut failure = None;
    let total = gl48().integrate(0.0, 1.0, |s| {
        let theta = PI * (1.0 - s * s * (3.0 - 2.0 * s));
        let dtheta = -6.0 * PI * s * (1.0 - s);
        let e = C64::from_polar(1.0, theta);
        match g(e * r + mid) {
            Ok(v) => v * C64::i() * e * (r * dtheta),
            Err(err) => {
                failure = Some(err);
                C64::new(0.0, 0.0)
            }
        }
    });
    match failure {
        Some(err) => Err(err),
        None => Ok(-total.im / PI),
    }
}

fn tabulate_transform(base: &Measure, dir: MkDirection, lo: f64, hi: f64, nodes: usize) -> Result<MkResult> {
    let span = hi - lo;
    let xs: Vec<f64> = (0..nodes).map(|i| lo + span * i as f64 / (nodes - 1) as f64).collect();
    let g = |z: C64| transform_value(base, dir, z);
    let atoms = if dir == MkDirection::Forward {
        detect_atoms(&g, &xs, span)?
    } else {
        Vec::new()
    };
    let eps = 1e-10 * span;
    let near_atom = |x: f64| atoms.iter().any(|a| (x - a.x).abs() < 1e-4 * span);
    let mut density: Vec<f64> = xs
        .par_iter()
        .map(|x| {
            if near_atom(*x) {
                return Ok(f64::NAN);
            }
            let z = C64::new(*x, eps);
            let mut v = g(z)?;
            for a in &atoms {
                v -= (z - a.x).inv() * a.w;
            }
            Ok((-v.im / PI).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    for i in 0..density.len() {
        if density[i].is_nan() {
            let left = (0..i).rev().find(|k| !density[*k].is_nan()).map(|k| density[k]);
            let right = (i + 1..density.len())
                .find(|k| !density[*k].is_nan())
                .map(|k| density[k]);
            density[i] = match (left, right) {
                (Some(l), Some(r)) => 0.5 * (l + r),
                (Some(v), None) | (None, Some(v)) => v,
                (None, None) => 0.0,
            };
        }
    }
    let continuous_part = |z: C64| -> Result<C64> {
        let mut v = g(z)?;
        for a in &atoms {
            v -= (z - a.x).inv() * a.w;
        }
        Ok(v)
    };
    let last = nodes - 1;
    for (end, inner) in [(0, 1), (last, last - 1)] {
        let (a, b) = (xs[end.min(inner)], xs[end.max(inner)]);
        if atoms.iter().any(|t| t.x > a - 1e-4 * span && t.x < b + 1e-4 * span) {
            continue;
        }
        let mass = cell_mass(&continuous_part, a, b)?;
        density[end] = (2.0 * mass / (b - a) - density[inner]).max(0.0);
    }
    let atom_mass: f64 = atoms.iter().map(|a| a.w).sum();
    let table_mass: f64 = xs
        .windows(2)
        .zip(density.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum();
    let mass_defect = 1.0 - atom_mass - table_mass;
    let center = 0.5 * (lo + hi);
    let contour = contour_mass(base, dir, center, 2.0 * span.max(1e-300) + 1.0)?;
    let continuous = 1.0 - atom_mass;
    let tabulated = if continuous < 1e-9 || table_mass <= 0.0 {
        let total: f64 = atom_mass;
        Measure::atomic(atoms.iter().map(|a| Atom { x: a.x, w: a.w / total }).collect())?
    } else if atoms.is_empty() {
        Measure::table_normalized(xs.clone(), density.clone())?
    } else {
        let scaled: Vec<Atom> = atoms
            .iter()
            .map(|a| Atom {
                x: a.x,
                w: a.w / atom_mass.max(1.0),
            })
            .collect();
        Measure::mixture(scaled, xs.clone(), density.clone())?
    };
    Ok(MkResult {
        measure: Measure::transformed(base.clone(), dir, tabulated),
        atoms,
        grid: xs,
        density,
        mass_defect,
        contour_mass: contour,
    })
}

/// `Q m` with its raw atom estimates.
pub fn markov_krein_forward_detailed(m: &Measure) -> Result<MkResult> {
    if !m.density_le_one() {
        return Err(SpecError::NotDensityBounded);
    }
    let (lo, hi) = m.support();
    tabulate_transform(m, MkDirection::Forward, lo, hi, GRID_NODES)
}

/// `Q m` for `m` with density at most one.
pub fn markov_krein_forward(m: &Measure) -> Result<Measure> {
    Ok(markov_krein_forward_detailed(m)?.measure)
}

/// `Q⁻¹ m` with its density grid.
pub fn markov_krein_inverse_detailed(m: &Measure) -> Result<MkResult> {
    let (lo, hi) = m.support();
    let r = tabulate_transform(m, MkDirection::Inverse, lo, hi + 1.0, GRID_NODES)?;
    if r.density.iter().any(|f| *f > 1.0 + 1e-6) {
        return Err(SpecError::Numerical("inverse Markov–Krein density exceeds one".into()));
    }
    Ok(r)
}

/// `Q⁻¹ m`, a measure with density at most one.
pub fn markov_krein_inverse(m: &Measure) -> Result<Measure> {
    Ok(markov_krein_inverse_detailed(m)?.measure)
}

/// `Q⁻¹(Q m1 ⊞ Q m2)`.
pub fn quantized_convolve(m1: &Measure, m2: &Measure) -> Result<MkResult> {
    let q1 = markov_krein_forward(m1)?;
    let q2 = markov_krein_forward(m2)?;
    let sum = free_convolve(&q1, &q2)?;
    markov_krein_inverse_detailed(&sum.measure)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rademacher_pair_closed_form() {
        let r = Measure::rademacher();
        let s = subordination_at(&r, &r, C64::new(3.0, 1e-12), FixedPointConfig::default()).unwrap();
        let golden = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((s.omegas[0].re - golden).abs() < 1e-9);
        assert!((s.omegas[1].re - golden).abs() < 1e-9);
        assert!((s.g_value.re - 1.0 / 5f64.sqrt()).abs() < 1e-9);
        let lifted = subordination_at(&r, &r, C64::new(3.0, 0.1), FixedPointConfig::default()).unwrap();
        assert!(lifted.omegas[0].im > 0.1);
    }

    #[test]
    fn atom_shortcut_is_translation() {
        let u = Measure::uniform(0.0, 1.0).unwrap();
        let d = Measure::dirac(2.0);
        let z = C64::new(0.3, 0.7);
        let s = subordination_at(&d, &u, z, FixedPointConfig::default()).unwrap();
        assert_eq!(s.omegas[1], z - 2.0);
        assert!(matches!(
            subordination_at(&d, &d, z, FixedPointConfig::default()),
            Err(SpecError::BothAtoms)
        ));
    }

    #[test]
    fn real_extension_rademacher() {
        let r = Measure::rademacher();
        let (w1, w2) = omega_real_extension(&r, &r, 3.0).unwrap();
        let golden = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((w1 - golden).abs() < 1e-8 && (w2 - golden).abs() < 1e-8);
        assert!(omega_real_extension(&r, &r, 1.0).is_err());
    }

    #[test]
    fn forward_uniform_is_dirac() {
        let r = markov_krein_forward_detailed(&Measure::uniform(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(r.atoms.len(), 1);
        assert!((r.atoms[0].w - 1.0).abs() < 1e-6);
        assert!(r.atoms[0].x.abs() < 1e-9);
        assert_eq!(r.measure.single_atom().map(|x| x.abs() < 1e-9), Some(true));
    }

    #[test]
    fn forward_endpoint_singularity_keeps_mass() {
        let r = markov_krein_forward_detailed(&Measure::uniform(0.0, 2.0).unwrap()).unwrap();
        assert!(r.mass_defect.abs() < 1e-3, "{}", r.mass_defect);
        let exact = |x: f64| ((2.0 - x) / x).sqrt() / PI;
        for x in [0.05, 0.5, 1.0, 1.9] {
            assert!((r.measure.density(x).unwrap() - exact(x)).abs() < 1e-8, "{x}");
        }
        assert!((r.measure.cdf(1.0) - 0.5 - 1.0 / PI).abs() < 1e-3);
    }

    #[test]
    fn inverse_dirac_is_uniform() {
        let r = markov_krein_inverse_detailed(&Measure::dirac(0.0)).unwrap();
        for (x, f) in r.grid.iter().zip(&r.density) {
            if *x > 1e-3 && *x < 1.0 - 1e-3 {
                assert!((f - 1.0).abs() < 1e-6, "x = {x}: {f}");
            }
            if *x > 1.0 + 1e-3 {
                assert!(f.abs() < 1e-6);
            }
        }
        assert!((r.contour_mass - 1.0).abs() < 1e-10);
    }
}

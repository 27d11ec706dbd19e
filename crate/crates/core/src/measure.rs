//! Compactly supported probability measures and their Cauchy transforms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};
use std::sync::OnceLock;

use crate::error::{Result, SpecError};
use crate::quad::{adaptive_n, gl16, gl32, AdaptiveOptions, C64};
use crate::symfn::Signature;

const ZERO: C64 = Complex64::new(0.0, 0.0);

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub w: f64,
}

/// Density proportional to `(x - lo)^a (hi - x)^b` on `(lo, hi)`.
#[derive(Debug, Clone)]
pub struct Jacobi {
    pub a: f64,
    pub b: f64,
    pub lo: f64,
    pub hi: f64,
    norm: f64,
    far: OnceLock<FarRule>,
}

#[derive(Debug, Clone)]
struct FarRule {
    xs: Vec<f64>,
    ws: Vec<f64>,
}

/// Piecewise-linear density on sorted nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    fs: Vec<f64>,
    cum: Vec<f64>,
}

/// Direction of the Markov–Krein correspondence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MkDirection {
    Forward,
    Inverse,
}

/// Image of a measure under the Markov–Krein map or its inverse.
///
/// The Cauchy transform is evaluated exactly through the base measure;
/// `tabulated` carries the recovered atoms and density for everything else.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub base: Measure,
    pub direction: MkDirection,
    pub tabulated: Measure,
}

#[derive(Debug, Clone)]
pub enum Measure {
    Atomic(Vec<Atom>),
    Uniform { lo: f64, hi: f64 },
    Jacobi(Jacobi),
    Table(Table),
    Empirical(Vec<f64>),
    Mixture { atoms: Vec<Atom>, table: Table },
    Transformed(Box<Transformed>),
}

/// Serializable description of a measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MeasureSpec {
    Atomic {
        atoms: Vec<Atom>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density_le_one: Option<bool>,
    },
    Uniform {
        lo: f64,
        hi: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density_le_one: Option<bool>,
    },
    Jacobi {
        a: f64,
        b: f64,
        alpha: f64,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density_le_one: Option<bool>,
    },
    Semicircle {
        #[serde(default)]
        center: f64,
        radius: f64,
    },
    Table {
        xs: Vec<f64>,
        fs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density_le_one: Option<bool>,
    },
    Empirical {
        points: Vec<f64>,
    },
    Mixture {
        atoms: Vec<Atom>,
        xs: Vec<f64>,
        fs: Vec<f64>,
    },
}

/// Real vector in weakly decreasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(SpecError::InvalidArgument("empty spectrum".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpecError::InvalidArgument("non-finite spectrum entry".into()));
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(SpecError::InvalidArgument("spectrum must be weakly decreasing".into()));
        }
        Ok(Spectrum(values))
    }

    /// Sorts arbitrary values into decreasing order.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(|a, b| b.total_cmp(a));
        Spectrum::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn invalid(msg: impl Into<String>) -> SpecError {
    SpecError::InvalidMeasure(msg.into())
}

impl Jacobi {
    fn new(a: f64, b: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(a > -1.0 && b > -1.0) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!(
                "Jacobi exponents must exceed -1, got a = {a}, b = {b}"
            )));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!(
                "Jacobi interval must satisfy alpha < beta, got ({lo}, {hi})"
            )));
        }
        Ok(Jacobi {
            a,
            b,
            lo,
            hi,
            norm: (-ln_beta(a + 1.0, b + 1.0)).exp(),
            far: OnceLock::new(),
        })
    }

    fn len(&self) -> f64 {
        self.hi - self.lo
    }

    fn density(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let l = self.len();
        let s = (x - self.lo) / l;
        self.norm * s.powf(self.a) * (1.0 - s).powf(self.b) / l
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo {
            0.0
        } else if x >= self.hi {
            1.0
        } else {
            beta_reg(self.a + 1.0, self.b + 1.0, (x - self.lo) / self.len())
        }
    }

    /// Upper limit of the substituted variable on each half.
    fn t_max(expo: f64) -> f64 {
        0.5f64.powf(1.0 + expo)
    }

    fn far_rule(&self) -> &FarRule {
        self.far.get_or_init(|| {
            let rule = gl16();
            let l = self.len();
            let mut xs = Vec::new();
            let mut ws = Vec::new();
            for (expo, other, left) in [(self.a, self.b, true), (self.b, self.a, false)] {
                let tm = Self::t_max(expo);
                let mut breaks: Vec<f64> = (0..40).map(|j| tm * 0.5f64.powi(j)).collect();
                breaks.push(0.0);
                breaks.reverse();
                for w in breaks.windows(2) {
                    let (t0, t1) = (w[0], w[1]);
                    let half = 0.5 * (t1 - t0);
                    let mid = 0.5 * (t0 + t1);
                    for (node, gw) in rule.nodes.iter().zip(&rule.weights) {
                        let t = mid + half * node;
                        let sigma = t.powf(1.0 / (1.0 + expo));
                        let wt = gw * half * (1.0 - sigma).powf(other) / (1.0 + expo) * self.norm;
                        xs.push(if left { self.lo + l * sigma } else { self.hi - l * sigma });
                        ws.push(wt);
                    }
                }
            }
            FarRule { xs, ws }
        })
    }

    /// Integrates `g(x, z - x)` against the measure with panels refined near `z`.
    fn integrate_near<const K: usize>(&self, z: C64, g: impl Fn(f64, C64) -> [C64; K]) -> Result<[C64; K]> {
        let l = self.len();
        let opts = AdaptiveOptions {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_depth: 40,
        };
        let mut total = [ZERO; K];
        for (expo, other, left) in [(self.a, self.b, true), (self.b, self.a, false)] {
            let tm = Self::t_max(expo);
            let endpoint = if left { self.lo } else { self.hi };
            let dist_end = ((z - endpoint).norm() / l).max(1e-300);
            let depth = ((tm / (dist_end.powf(1.0 + expo) * 1e-2)).log(4.0))
                .ceil()
                .clamp(1.0, 60.0) as i32;
            let mut breaks: Vec<f64> = vec![0.0, tm];
            for j in 1..=depth {
                breaks.push(tm * 0.25f64.powi(j));
            }
            let s0 = (z.re - self.lo) / l;
            let im = z.im.abs() / l;
            for off in [0.0, 1.0, -1.0, 4.0, -4.0, 16.0, -16.0, 64.0, -64.0] {
                let s = s0 + off * im;
                let side = if left { s } else { 1.0 - s };
                if side > 0.0 && side < 0.5 {
                    breaks.push(side.powf(1.0 + expo));
                }
            }
            breaks.sort_by(|x, y| x.total_cmp(y));
            breaks.dedup_by(|x, y| (*x - *y).abs() <= 1e-300);
            let scale = 1.0 / (1.0 + expo) * self.norm;
            for w in breaks.windows(2) {
                let part = adaptive_n::<K, _>(
                    |t| {
                        let sigma = t.powf(1.0 / (1.0 + expo));
                        let wt = (1.0 - sigma).powf(other) * scale;
                        let (x, d) = if left {
                            (self.lo + l * sigma, (z - self.lo) - l * sigma)
                        } else {
                            (self.hi - l * sigma, (z - self.hi) + l * sigma)
                        };
                        let mut v = g(x, d);
                        for c in v.iter_mut() {
                            *c *= wt;
                        }
                        v
                    },
                    w[0],
                    w[1],
                    opts,
                )?;
                for k in 0..K {
                    total[k] += part[k];
                }
            }
        }
        Ok(total)
    }

    fn resolvents(&self, z: C64, kmax: usize) -> Result<[C64; 4]> {
        let dist = dist_to_interval(z, self.lo, self.hi);
        if dist > 0.3 * self.len() {
            let rule = self.far_rule();
            let mut r = [ZERO; 4];
            for (x, w) in rule.xs.iter().zip(&rule.ws) {
                let inv = (z - x).inv();
                let mut p = inv * *w;
                for rk in r.iter_mut().take(kmax + 1) {
                    *rk += p;
                    p *= inv;
                }
            }
            return Ok(r);
        }
        self.integrate_near::<4>(z, |_, d| {
            let inv = d.inv();
            let i2 = inv * inv;
            [inv, i2, i2 * inv, i2 * i2]
        })
    }

    fn log_potential(&self, z: C64) -> Result<C64> {
        let dist = dist_to_interval(z, self.lo, self.hi);
        if dist > 0.3 * self.len() {
            let rule = self.far_rule();
            let mut acc = ZERO;
            for (x, w) in rule.xs.iter().zip(&rule.ws) {
                acc += (z - x).ln() * *w;
            }
            return Ok(acc);
        }
        Ok(self.integrate_near::<1>(z, |_, d| [d.ln()])?[0])
    }

    /// `∫ dm / (hi - x)^(k+1)`, finite iff `b > k`.
    fn right_edge_moment(&self, k: usize) -> Option<f64> {
        let kf = k as f64;
        if self.b <= kf {
            return None;
        }
        let lb = ln_beta(self.a + 1.0, self.b - kf) - ln_beta(self.a + 1.0, self.b + 1.0);
        Some(lb.exp() / self.len().powi(k as i32 + 1))
    }

    /// `∫ dm / (x - lo)^(k+1)`, finite iff `a > k`.
    fn left_edge_moment(&self, k: usize) -> Option<f64> {
        let kf = k as f64;
        if self.a <= kf {
            return None;
        }
        let lb = ln_beta(self.a - kf, self.b + 1.0) - ln_beta(self.a + 1.0, self.b + 1.0);
        Some(lb.exp() / self.len().powi(k as i32 + 1))
    }
}

fn dist_to_interval(z: C64, lo: f64, hi: f64) -> f64 {
    let dx = if z.re < lo {
        lo - z.re
    } else if z.re > hi {
        z.re - hi
    } else {
        0.0
    };
    dx.hypot(z.im)
}

impl Table {
    /// Builds a table whose trapezoid mass is `mass`.
    fn with_mass(xs: Vec<f64>, fs: Vec<f64>, mass: f64) -> Result<Self> {
        if xs.len() < 2 || xs.len() != fs.len() {
            return Err(invalid("table needs at least two nodes and matching lengths"));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("table nodes must be strictly increasing"));
        }
        if fs.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) || xs.iter().any(|x| !x.is_finite()) {
            return Err(invalid("table values must be finite and nonnegative"));
        }
        let raw = trapezoid(&xs, &fs);
        if !(raw > 0.0) {
            return Err(invalid("table has zero mass"));
        }
        let fs: Vec<f64> = fs.iter().map(|f| f * mass / raw).collect();
        let mut t = Table {
            xs,
            fs,
            cum: Vec::new(),
        };
        t.trim();
        t.cum = cumulative(&t.xs, &t.fs);
        Ok(t)
    }

    /// Drops leading and trailing zero segments.
    fn trim(&mut self) {
        let first = self.fs.iter().position(|f| *f > 0.0).unwrap_or(0).saturating_sub(1);
        let last = self
            .fs
            .iter()
            .rposition(|f| *f > 0.0)
            .map(|i| (i + 1).min(self.fs.len() - 1))
            .unwrap_or(self.fs.len() - 1);
        if last > first {
            self.xs = self.xs[first..=last].to_vec();
            self.fs = self.fs[first..=last].to_vec();
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.fs
    }

    pub fn mass(&self) -> f64 {
        *self.cum.last().unwrap_or(&0.0)
    }

    fn support(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        self.fs[i] * (1.0 - t) + self.fs[i + 1] * t
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return self.mass();
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let d = x - self.xs[i];
        let beta = (self.fs[i + 1] - self.fs[i]) / h;
        self.cum[i] + self.fs[i] * d + 0.5 * beta * d * d
    }

    /// Smallest `x` with `cdf(x) >= r`, for `0 <= r <= mass`.
    fn inverse_cdf(&self, r: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.cum.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let rem = (r - self.cum[i]).max(0.0);
        let h = self.xs[i + 1] - self.xs[i];
        let fa = self.fs[i];
        let beta = (self.fs[i + 1] - fa) / h;
        let disc = (fa * fa + 2.0 * beta * rem).max(0.0);
        let denom = fa + disc.sqrt();
        let d = if denom > 0.0 { 2.0 * rem / denom } else { 0.0 };
        (self.xs[i] + d.min(h)).min(self.xs[i + 1])
    }

    fn resolvents(&self, z: C64, kmax: usize) -> [C64; 4] {
        let rule = gl16();
        let mut r = [ZERO; 4];
        for i in 0..self.xs.len() - 1 {
            let (a, b) = (self.xs[i], self.xs[i + 1]);
            let (fa, fb) = (self.fs[i], self.fs[i + 1]);
            if fa == 0.0 && fb == 0.0 {
                continue;
            }
            let h = b - a;
            let mid = 0.5 * (a + b);
            if (z - mid).norm() > 2.5 * h {
                for (node, w) in rule.nodes.iter().zip(&rule.weights) {
                    let x = mid + 0.5 * h * node;
                    let f = fa + (fb - fa) * (x - a) / h;
                    let inv = (z - x).inv();
                    let mut p = inv * (f * w * 0.5 * h);
                    for rk in r.iter_mut().take(kmax + 1) {
                        *rk += p;
                        p *= inv;
                    }
                }
            } else {
                let beta = (fb - fa) / h;
                let za = z - a;
                let zb = z - b;
                let kk = zb * beta + fb;
                let mut integrals = [ZERO; 5];
                integrals[0] = C64::new(h, 0.0);
                integrals[1] = (za / zb).ln();
                for (m, im) in integrals.iter_mut().enumerate().take(kmax + 2).skip(2) {
                    let e = 1.0 - m as f64;
                    *im = (zb.powf(e) - za.powf(e)) / (m as f64 - 1.0);
                }
                for k in 0..=kmax {
                    r[k] += kk * integrals[k + 1] - integrals[k] * beta;
                }
            }
        }
        r
    }

    fn log_potential(&self, z: C64) -> C64 {
        let rule = gl16();
        let mut acc = ZERO;
        for i in 0..self.xs.len() - 1 {
            let (a, b) = (self.xs[i], self.xs[i + 1]);
            let (fa, fb) = (self.fs[i], self.fs[i + 1]);
            if fa == 0.0 && fb == 0.0 {
                continue;
            }
            let h = b - a;
            let mid = 0.5 * (a + b);
            if (z - mid).norm() > 2.5 * h {
                for (node, w) in rule.nodes.iter().zip(&rule.weights) {
                    let x = mid + 0.5 * h * node;
                    let f = fa + (fb - fa) * (x - a) / h;
                    acc += (z - x).ln() * (f * w * 0.5 * h);
                }
            } else {
                let beta = (fb - fa) / h;
                let y2 = z - a;
                let y1 = z - b;
                let kk = y1 * beta + fb;
                let anti = |y: C64| -> C64 {
                    if y == ZERO {
                        return ZERO;
                    }
                    let ly = y.ln();
                    kk * (y * ly - y) - (y * y * ly * 0.5 - y * y * 0.25) * beta
                };
                acc += anti(y2) - anti(y1);
            }
        }
        acc
    }

    /// Principal value of `∫ f(t) / (x - t) dt` for `x` on the support.
    fn principal_value(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.xs.len() - 1 {
            let (a, b) = (self.xs[i], self.xs[i + 1]);
            let (fa, fb) = (self.fs[i], self.fs[i + 1]);
            let h = b - a;
            let beta = (fb - fa) / h;
            let kk = fb + beta * (x - b);
            let la = (x - a).abs();
            let lb = (x - b).abs();
            let log_term = if la == 0.0 || lb == 0.0 {
                if kk.abs() < 1e-300 {
                    0.0
                } else {
                    (la.max(1e-300) / lb.max(1e-300)).ln()
                }
            } else {
                (la / lb).ln()
            };
            acc += kk * log_term - beta * h;
        }
        acc
    }
}

fn trapezoid(xs: &[f64], fs: &[f64]) -> f64 {
    xs.windows(2)
        .zip(fs.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum()
}

fn cumulative(xs: &[f64], fs: &[f64]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for i in 0..xs.len() - 1 {
        acc += 0.5 * (xs[i + 1] - xs[i]) * (fs[i] + fs[i + 1]);
        cum.push(acc);
    }
    cum
}

fn normalize_atoms(mut atoms: Vec<Atom>, total: f64) -> Result<Vec<Atom>> {
    if atoms.is_empty() {
        return Err(invalid("no atoms"));
    }
    if atoms
        .iter()
        .any(|a| !(a.w > 0.0) || !a.x.is_finite() || !a.w.is_finite())
    {
        return Err(invalid("atom weights must be positive and locations finite"));
    }
    let sum: f64 = atoms.iter().map(|a| a.w).sum();
    if (sum - total).abs() > 1e-9 * total.max(1.0) {
        return Err(invalid(format!("atom weights sum to {sum}, expected {total}")));
    }
    atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
    let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match merged.last_mut() {
            Some(last) if last.x == a.x => last.w += a.w,
            _ => merged.push(a),
        }
    }
    for a in merged.iter_mut() {
        a.w *= total / sum;
    }
    Ok(merged)
}

fn atomic_resolvents(atoms: &[Atom], z: C64, kmax: usize, r: &mut [C64; 4]) {
    for a in atoms {
        let inv = (z - a.x).inv();
        let mut p = inv * a.w;
        for rk in r.iter_mut().take(kmax + 1) {
            *rk += p;
            p *= inv;
        }
    }
}

impl Measure {
    pub fn atomic(atoms: Vec<Atom>) -> Result<Self> {
        Ok(Measure::Atomic(normalize_atoms(atoms, 1.0)?))
    }

    /// Single atom at `x`.
    pub fn dirac(x: f64) -> Self {
        Measure::Atomic(vec![Atom { x, w: 1.0 }])
    }

    /// Symmetric Bernoulli measure on {-1, 1}.
    pub fn rademacher() -> Self {
        Measure::Atomic(vec![Atom { x: -1.0, w: 0.5 }, Atom { x: 1.0, w: 0.5 }])
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("uniform needs lo < hi, got ({lo}, {hi})")));
        }
        Ok(Measure::Uniform { lo, hi })
    }

    pub fn jacobi(a: f64, b: f64, lo: f64, hi: f64) -> Result<Self> {
        Ok(Measure::Jacobi(Jacobi::new(a, b, lo, hi)?))
    }

    /// Semicircle law centred at `center` with the given radius.
    pub fn semicircle(center: f64, radius: f64) -> Result<Self> {
        Measure::jacobi(0.5, 0.5, center - radius, center + radius)
    }

    /// Piecewise-linear density; the mass must be within 1e-6 of one and is then renormalized.
    pub fn table(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        if xs.len() >= 2 && xs.len() == fs.len() {
            let raw = trapezoid(&xs, &fs);
            if (raw - 1.0).abs() > 1e-6 {
                return Err(invalid(format!("table mass {raw} differs from 1 by more than 1e-6")));
            }
        }
        Ok(Measure::Table(Table::with_mass(xs, fs, 1.0)?))
    }

    /// Piecewise-linear density rescaled to unit mass.
    pub fn table_normalized(xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        Ok(Measure::Table(Table::with_mass(xs, fs, 1.0)?))
    }

    pub fn empirical(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|p| !p.is_finite()) {
            return Err(invalid("empirical measure needs finite points"));
        }
        points.sort_by(|a, b| a.total_cmp(b));
        Ok(Measure::Empirical(points))
    }

    /// Atoms plus a piecewise-linear density carrying the remaining mass.
    pub fn mixture(atoms: Vec<Atom>, xs: Vec<f64>, fs: Vec<f64>) -> Result<Self> {
        let atom_mass: f64 = atoms.iter().map(|a| a.w).sum();
        if atoms.is_empty() {
            return Measure::table_normalized(xs, fs);
        }
        if !(atom_mass < 1.0) {
            return Measure::atomic(atoms);
        }
        let atoms = normalize_atoms(atoms, atom_mass)?;
        let table = Table::with_mass(xs, fs, 1.0 - atom_mass)?;
        Ok(Measure::Mixture { atoms, table })
    }

    pub(crate) fn transformed(base: Measure, direction: MkDirection, tabulated: Measure) -> Self {
        Measure::Transformed(Box::new(Transformed {
            base,
            direction,
            tabulated,
        }))
    }

    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        let m = match spec {
            MeasureSpec::Atomic { atoms, .. } => Measure::atomic(atoms.clone())?,
            MeasureSpec::Uniform { lo, hi, .. } => Measure::uniform(*lo, *hi)?,
            MeasureSpec::Jacobi { a, b, alpha, beta, .. } => Measure::jacobi(*a, *b, *alpha, *beta)?,
            MeasureSpec::Semicircle { center, radius } => Measure::semicircle(*center, *radius)?,
            MeasureSpec::Table { xs, fs, .. } => Measure::table(xs.clone(), fs.clone())?,
            MeasureSpec::Empirical { points } => Measure::empirical(points.clone())?,
            MeasureSpec::Mixture { atoms, xs, fs } => Measure::mixture(atoms.clone(), xs.clone(), fs.clone())?,
        };
        let flag = match spec {
            MeasureSpec::Atomic { density_le_one, .. }
            | MeasureSpec::Uniform { density_le_one, .. }
            | MeasureSpec::Jacobi { density_le_one, .. }
            | MeasureSpec::Table { density_le_one, .. } => *density_le_one,
            _ => None,
        };
        if flag == Some(true) && !m.density_le_one() {
            return Err(SpecError::NotDensityBounded);
        }
        Ok(m)
    }

    pub fn to_spec(&self) -> MeasureSpec {
        match self {
            Measure::Atomic(atoms) => MeasureSpec::Atomic {
                atoms: atoms.clone(),
                density_le_one: None,
            },
            Measure::Uniform { lo, hi } => MeasureSpec::Uniform {
                lo: *lo,
                hi: *hi,
                density_le_one: None,
            },
            Measure::Jacobi(j) => MeasureSpec::Jacobi {
                a: j.a,
                b: j.b,
                alpha: j.lo,
                beta: j.hi,
                density_le_one: None,
            },
            Measure::Table(t) => MeasureSpec::Table {
                xs: t.xs.clone(),
                fs: t.fs.clone(),
                density_le_one: None,
            },
            Measure::Empirical(p) => MeasureSpec::Empirical { points: p.clone() },
            Measure::Mixture { atoms, table } => MeasureSpec::Mixture {
                atoms: atoms.clone(),
                xs: table.xs.clone(),
                fs: table.fs.clone(),
            },
            Measure::Transformed(t) => t.tabulated.to_spec(),
        }
    }

    /// Closed convex hull of the support, `(E_minus, E_plus)`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Measure::Atomic(atoms) => (atoms[0].x, atoms[atoms.len() - 1].x),
            Measure::Uniform { lo, hi } => (*lo, *hi),
            Measure::Jacobi(j) => (j.lo, j.hi),
            Measure::Table(t) => t.support(),
            Measure::Empirical(p) => (p[0], p[p.len() - 1]),
            Measure::Mixture { atoms, table } => {
                let (lo, hi) = table.support();
                (lo.min(atoms[0].x), hi.max(atoms[atoms.len() - 1].x))
            }
            Measure::Transformed(t) => t.tabulated.support(),
        }
    }

    pub fn span(&self) -> f64 {
        let (lo, hi) = self.support();
        hi - lo
    }

    /// Length scale for relative tolerances; never zero.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.support();
        let s = hi - lo;
        if s > 0.0 {
            s
        } else {
            lo.abs().max(1.0)
        }
    }

    /// Location of the single atom, if the measure is one.
    pub fn single_atom(&self) -> Option<f64> {
        match self {
            Measure::Atomic(a) if a.len() == 1 => Some(a[0].x),
            Measure::Empirical(p) if p[0] == p[p.len() - 1] => Some(p[0]),
            Measure::Transformed(t) => t.tabulated.single_atom(),
            _ => None,
        }
    }

    pub fn is_discrete(&self) -> bool {
        match self {
            Measure::Atomic(_) | Measure::Empirical(_) => true,
            Measure::Transformed(t) => t.tabulated.is_discrete(),
            _ => false,
        }
    }

    /// Point masses of the measure.
    pub fn atoms(&self) -> Vec<Atom> {
        match self {
            Measure::Atomic(a) => a.clone(),
            Measure::Empirical(p) => {
                let w = 1.0 / p.len() as f64;
                let mut out: Vec<Atom> = Vec::new();
                for x in p {
                    match out.last_mut() {
                        Some(last) if last.x == *x => last.w += w,
                        _ => out.push(Atom { x: *x, w }),
                    }
                }
                out
            }
            Measure::Mixture { atoms, .. } => atoms.clone(),
            Measure::Transformed(t) => t.tabulated.atoms(),
            _ => Vec::new(),
        }
    }

    /// True when the measure has a density bounded by one.
    pub fn density_le_one(&self) -> bool {
        const SLACK: f64 = 1e-9;
        match self {
            Measure::Atomic(_) | Measure::Empirical(_) | Measure::Mixture { .. } => false,
            Measure::Uniform { lo, hi } => 1.0 / (hi - lo) <= 1.0 + SLACK,
            Measure::Jacobi(j) => {
                if j.a < 0.0 || j.b < 0.0 {
                    return false;
                }
                let l = j.len();
                let peak = if j.a + j.b == 0.0 { 0.5 } else { j.a / (j.a + j.b) };
                j.density(j.lo + l * peak.clamp(1e-12, 1.0 - 1e-12))
                    .max(if j.a == 0.0 || j.b == 0.0 { j.norm / l } else { 0.0 })
                    <= 1.0 + SLACK
            }
            Measure::Table(t) => t.fs.iter().all(|f| *f <= 1.0 + SLACK),
            Measure::Transformed(t) => match t.direction {
                MkDirection::Inverse => true,
                MkDirection::Forward => t.tabulated.density_le_one(),
            },
        }
    }

    /// Density at `x`, or `None` for purely discrete measures.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Measure::Atomic(_) | Measure::Empirical(_) => None,
            Measure::Uniform { lo, hi } => Some(if x > *lo && x < *hi { 1.0 / (hi - lo) } else { 0.0 }),
            Measure::Jacobi(j) => Some(j.density(x)),
            Measure::Table(t) => Some(t.density(x)),
            Measure::Mixture { table, .. } => Some(table.density(x)),
            Measure::Transformed(t) => t.density(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Measure::Atomic(atoms) => atoms.iter().filter(|a| a.x <= x).map(|a| a.w).sum(),
            Measure::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Measure::Jacobi(j) => j.cdf(x),
            Measure::Table(t) => t.cdf(x),
            Measure::Empirical(p) => p.partition_point(|v| *v <= x) as f64 / p.len() as f64,
            Measure::Mixture { atoms, table } => {
                atoms.iter().filter(|a| a.x <= x).map(|a| a.w).sum::<f64>() + table.cdf(x)
            }
            Measure::Transformed(t) => t.tabulated.cdf(x),
        }
    }

    /// Generalized inverse `inf { x : F(x) >= q }`.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            Measure::Atomic(atoms) => {
                let mut acc = 0.0;
                for a in atoms {
                    acc += a.w;
                    if acc >= q - 1e-14 {
                        return a.x;
                    }
                }
                atoms[atoms.len() - 1].x
            }
            Measure::Uniform { lo, hi } => lo + q * (hi - lo),
            Measure::Table(t) => t.inverse_cdf(q),
            Measure::Empirical(p) => {
                let n = p.len();
                let k = ((q * n as f64) - 1e-12).ceil().max(1.0) as usize;
                p[k.min(n) - 1]
            }
            Measure::Transformed(t) => t.tabulated.quantile(q),
            _ => {
                let (mut lo, mut hi) = self.support();
                if self.cdf(lo) >= q {
                    return lo;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.cdf(mid) >= q {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    }

    /// Decreasing mid-quantiles `inf { x : F(x) >= (j - 1/2)/N }`.
    pub fn quantile_spectrum(&self, n: usize) -> Spectrum {
        let mut v: Vec<f64> = (1..=n).map(|j| self.quantile((j as f64 - 0.5) / n as f64)).collect();
        v.reverse();
        for i in 1..v.len() {
            if v[i] > v[i - 1] {
                v[i] = v[i - 1];
            }
        }
        Spectrum(v)
    }

    /// Signature whose particles `(λ_j + N - j)/N` are the rounded decreasing quantiles.
    ///
    /// Ties round down, so that a density-one interval maps to the empty signature.
    pub fn signature_spectrum(&self, n: usize) -> Result<Signature> {
        if !self.density_le_one() {
            return Err(SpecError::NotDensityBounded);
        }
        let q = self.quantile_spectrum(n);
        let nf = n as f64;
        let mut parts = Vec::with_capacity(n);
        for (idx, x) in q.values().iter().enumerate() {
            let j = idx as i64 + 1;
            let rounded = (nf * x - 0.5).ceil() as i64;
            let mut lam = rounded - n as i64 + j;
            if let Some(prev) = parts.last() {
                if lam > *prev {
                    lam = *prev;
                }
            }
            parts.push(lam);
        }
        Signature::new(parts)
    }

    pub fn mean(&self) -> f64 {
        match self {
            Measure::Atomic(atoms) => atoms.iter().map(|a| a.x * a.w).sum(),
            Measure::Uniform { lo, hi } => 0.5 * (lo + hi),
            Measure::Jacobi(j) => j.lo + j.len() * (j.a + 1.0) / (j.a + j.b + 2.0),
            Measure::Empirical(p) => p.iter().sum::<f64>() / p.len() as f64,
            Measure::Transformed(t) => t.tabulated.mean(),
            _ => self.integrate(|x| x).unwrap_or(f64::NAN),
        }
    }

    /// `∫ f dm` for a smooth real function.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        match self {
            Measure::Atomic(atoms) => Ok(atoms.iter().map(|a| f(a.x) * a.w).sum()),
            Measure::Empirical(p) => Ok(p.iter().map(|x| f(*x)).sum::<f64>() / p.len() as f64),
            Measure::Uniform { lo, hi } => {
                let opts = AdaptiveOptions {
                    rel_tol: 1e-12,
                    ..Default::default()
                };
                crate::quad::adaptive_real(&f, *lo, *hi, opts).map(|v| v / (hi - lo))
            }
            Measure::Jacobi(j) => {
                let rule = j.far_rule();
                Ok(rule.xs.iter().zip(&rule.ws).map(|(x, w)| f(*x) * w).sum())
            }
            Measure::Table(t) => Ok(table_integrate(t, &f)),
            Measure::Mixture { atoms, table } => {
                Ok(atoms.iter().map(|a| f(a.x) * a.w).sum::<f64>() + table_integrate(table, &f))
            }
            Measure::Transformed(t) => t.tabulated.integrate(f),
        }
    }

    fn check_off_support(&self, z: C64) -> Result<()> {
        let tol = 1e-12 * self.scale();
        let on = match self {
            Measure::Atomic(atoms) => atoms.iter().any(|a| (z - a.x).norm() < tol),
            Measure::Empirical(p) => {
                z.im.abs() < tol && {
                    let i = p.partition_point(|v| *v < z.re);
                    (i < p.len() && (p[i] - z.re).abs() < tol) || (i > 0 && (p[i - 1] - z.re).abs() < tol)
                }
            }
            Measure::Uniform { lo, hi } => dist_to_interval(z, *lo, *hi) < tol,
            Measure::Jacobi(j) => dist_to_interval(z, j.lo, j.hi) < tol,
            Measure::Table(t) => {
                let (lo, hi) = t.support();
                dist_to_interval(z, lo, hi) < tol
            }
            Measure::Mixture { atoms, table } => {
                let (lo, hi) = table.support();
                dist_to_interval(z, lo, hi) < tol || atoms.iter().any(|a| (z - a.x).norm() < tol)
            }
            Measure::Transformed(t) => return t.base.check_off_support(z),
        };
        if on {
            Err(SpecError::PointOnSupport(format!("{z}")))
        } else {
            Ok(())
        }
    }

    /// `R_k(z) = ∫ dm / (z - x)^(k+1)` for `k = 0..=kmax` (`kmax <= 3`); higher slots are zero.
    pub fn resolvents(&self, z: C64, kmax: usize) -> Result<[C64; 4]> {
        let kmax = kmax.min(3);
        self.check_off_support(z)?;
        let mut r = [ZERO; 4];
        match self {
            Measure::Atomic(atoms) => atomic_resolvents(atoms, z, kmax, &mut r),
            Measure::Empirical(p) => {
                let w = 1.0 / p.len() as f64;
                for x in p {
                    let inv = (z - x).inv();
                    let mut pw = inv * w;
                    for rk in r.iter_mut().take(kmax + 1) {
                        *rk += pw;
                        pw *= inv;
                    }
                }
            }
            Measure::Uniform { lo, hi } => {
                let l = hi - lo;
                if dist_to_interval(z, *lo, *hi) > 2.0 * l {
                    let rule = gl32();
                    let mid = 0.5 * (lo + hi);
                    for (node, w) in rule.nodes.iter().zip(&rule.weights) {
                        let inv = (z - (mid + 0.5 * l * node)).inv();
                        let mut p = inv * (0.5 * w);
                        for rk in r.iter_mut().take(kmax + 1) {
                            *rk += p;
                            p *= inv;
                        }
                    }
                } else {
                    let zl = z - lo;
                    let zh = z - hi;
                    r[0] = (zl / zh).ln() / l;
                    for (k, rk) in r.iter_mut().enumerate().take(kmax + 1).skip(1) {
                        let e = -(k as f64);
                        *rk = (zh.powf(e) - zl.powf(e)) / (k as f64 * l);
                    }
                }
            }
            Measure::Jacobi(j) => r = j.resolvents(z, kmax)?,
            Measure::Table(t) => r = t.resolvents(z, kmax),
            Measure::Mixture { atoms, table } => {
                r = table.resolvents(z, kmax);
                atomic_resolvents(atoms, z, kmax, &mut r);
            }
            Measure::Transformed(t) => {
                let g = t.series(z)?;
                r[0] = g[0];
                r[1] = -g[1];
                r[2] = g[2] * 0.5;
                r[3] = -g[3] / 6.0;
            }
        }
        Ok(r)
    }

    /// `G(z) = ∫ dm / (z - x)`.
    pub fn cauchy(&self, z: C64) -> Result<C64> {
        Ok(self.resolvents(z, 0)?[0])
    }

    /// `[G, G', G'', G''']` at `z`.
    pub fn cauchy_series(&self, z: C64) -> Result<[C64; 4]> {
        if let Measure::Transformed(t) = self {
            self.check_off_support(z)?;
            return t.series(z);
        }
        let r = self.resolvents(z, 3)?;
        Ok([r[0], -r[1], r[2] * 2.0, -r[3] * 6.0])
    }

    /// `(G(z), G'(z))`.
    pub fn cauchy_pair(&self, z: C64) -> Result<(C64, C64)> {
        if let Measure::Transformed(t) = self {
            self.check_off_support(z)?;
            let s = t.series(z)?;
            return Ok((s[0], s[1]));
        }
        let r = self.resolvents(z, 1)?;
        Ok((r[0], -r[1]))
    }

    /// Derivative of order 1, 2 or 3.
    pub fn cauchy_derivative(&self, z: C64, order: usize) -> Result<C64> {
        if !(1..=3).contains(&order) {
            return Err(SpecError::InvalidArgument(format!(
                "derivative order {order} not in 1..=3"
            )));
        }
        if let Measure::Transformed(t) = self {
            self.check_off_support(z)?;
            return Ok(t.series(z)?[order]);
        }
        let r = self.resolvents(z, order)?;
        let fact = [1.0, 1.0, 2.0, 6.0][order];
        let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
        Ok(r[order] * (sign * fact))
    }

    /// `∫ log(z - x) dm(x)` with the principal branch.
    pub fn log_potential(&self, z: C64) -> Result<C64> {
        self.check_off_support(z)?;
        match self {
            Measure::Atomic(atoms) => Ok(atoms.iter().map(|a| (z - a.x).ln() * a.w).sum()),
            Measure::Empirical(p) => Ok(p.iter().map(|x| (z - x).ln()).sum::<C64>() / p.len() as f64),
            Measure::Uniform { lo, hi } => {
                let l = hi - lo;
                let y2 = z - lo;
                let y1 = z - hi;
                let f = |y: C64| if y == ZERO { ZERO } else { y * y.ln() - y };
                Ok((f(y2) - f(y1)) / l)
            }
            Measure::Jacobi(j) => j.log_potential(z),
            Measure::Table(t) => Ok(t.log_potential(z)),
            Measure::Mixture { atoms, table } => {
                Ok(table.log_potential(z) + atoms.iter().map(|a| (z - a.x).ln() * a.w).sum::<C64>())
            }
            Measure::Transformed(t) => t.tabulated.log_potential(z),
        }
    }

    /// Principal value `p.v. ∫ f(t) / (x - t) dt` at an interior point.
    pub fn principal_value(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(x > lo && x < hi) {
            return Err(SpecError::InvalidArgument(format!(
                "{x} is not interior to the support"
            )));
        }
        match self {
            Measure::Atomic(_) | Measure::Empirical(_) | Measure::Mixture { .. } => Err(SpecError::AtomicUnsupported),
            Measure::Uniform { lo, hi } => Ok(((x - lo) / (hi - x)).ln() / (hi - lo)),
            Measure::Table(t) => Ok(t.principal_value(x)),
            Measure::Jacobi(j) => jacobi_principal_value(j, x),
            Measure::Transformed(t) => {
                let eps = 1e-9 * self.scale();
                let up = t.series(C64::new(x, eps))?[0];
                let down = t.series(C64::new(x, -eps))?[0];
                Ok(0.5 * (up.re + down.re))
            }
        }
    }

    /// `-G(z)^2 / G'(z)` for real `z` off the support.
    pub fn variance_functional(&self, z: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if z >= lo && z <= hi {
            return Err(SpecError::PointOnSupport(format!("{z}")));
        }
        let s = self.cauchy_series(C64::new(z, 0.0))?;
        Ok(-(s[0].re * s[0].re) / s[1].re)
    }

    /// Right limits `(G(E+), G'(E+))`; `None` marks an infinite limit.
    pub fn right_edge_limits(&self) -> (Option<f64>, Option<f64>) {
        self.edge_limits(true)
    }

    /// Left limits `(G(E-), G'(E-))`; `None` marks an infinite limit.
    pub fn left_edge_limits(&self) -> (Option<f64>, Option<f64>) {
        self.edge_limits(false)
    }

    fn edge_limits(&self, right: bool) -> (Option<f64>, Option<f64>) {
        let (lo, hi) = self.support();
        let edge = if right { hi } else { lo };
        let sign = if right { 1.0 } else { -1.0 };
        match self {
            Measure::Atomic(_) | Measure::Empirical(_) | Measure::Uniform { .. } => (None, None),
            Measure::Mixture { atoms, .. } if atoms.iter().any(|a| a.x == edge) => (None, None),
            Measure::Jacobi(j) => {
                if right {
                    (j.right_edge_moment(0), j.right_edge_moment(1).map(|v| -v))
                } else {
                    (j.left_edge_moment(0).map(|v| -v), j.left_edge_moment(1).map(|v| -v))
                }
            }
            Measure::Transformed(t) if t.direction == MkDirection::Forward => {
                let base_edge = if right { t.base.support().1 } else { t.base.support().0 };
                if base_edge == edge {
                    let (g, _) = t.base.edge_limits(right);
                    let gq = match g {
                        Some(g) => 1.0 - (-g).exp(),
                        None => {
                            if right {
                                1.0
                            } else {
                                return self.numeric_edge_limits(edge, sign);
                            }
                        }
                    };
                    let (_, d) = self.numeric_edge_limits(edge, sign);
                    (Some(gq), d)
                } else {
                    self.numeric_edge_limits(edge, sign)
                }
            }
            _ => self.numeric_edge_limits(edge, sign),
        }
    }

    /// Limits along `edge + sign * span * 4^-k`; divergence is flagged by slopes above 1e12.
    fn numeric_edge_limits(&self, edge: f64, sign: f64) -> (Option<f64>, Option<f64>) {
        let span = self.scale();
        let mut gs = Vec::new();
        let mut ds = Vec::new();
        for k in 3..=17 {
            let z = C64::new(edge + sign * span * 0.25f64.powi(k), 0.0);
            match self.cauchy_series(z) {
                Ok(s) => {
                    gs.push(s[0].re);
                    ds.push(s[1].re);
                }
                Err(_) => break,
            }
        }
        let limit = |v: &[f64]| -> Option<f64> {
            let n = v.len();
            if n < 3 {
                return None;
            }
            let last = v[n - 1];
            if last.abs() * span > 1e12 {
                return None;
            }
            let d1 = (v[n - 1] - v[n - 2]).abs();
            let d0 = (v[n - 2] - v[n - 3]).abs();
            if d1 <= 1e-10 * last.abs().max(1e-300) {
                return Some(last);
            }
            if d1 < 0.75 * d0 {
                Some(2.0 * v[n - 1] - v[n - 2])
            } else {
                None
            }
        };
        (limit(&gs), limit(&ds).map(|d| d.min(0.0)))
    }

    /// Right inverse of the Cauchy transform.
    ///
    /// Real `u > 0` is inverted on `(E+, ∞)` and real `u < 0` on `(-∞, E-)`;
    /// other `u` use damped complex Newton from the asymptotic guess.
    pub fn inverse_cauchy(&self, u: C64) -> Result<C64> {
        if u.im == 0.0 {
            let x = self.inverse_cauchy_real(u.re)?;
            return Ok(C64::new(x, 0.0));
        }
        if u.norm() == 0.0 || !u.re.is_finite() || !u.im.is_finite() {
            return Err(SpecError::OutOfRange(u.re));
        }
        let mut z = u.inv() + self.mean();
        let tol = 1e-13 * u.norm();
        for _ in 0..200 {
            let s = match self.cauchy_series(z) {
                Ok(s) => s,
                Err(_) => {
                    z += C64::new(0.0, -u.im.signum() * 0.1 * self.scale());
                    continue;
                }
            };
            let res = s[0] - u;
            if res.norm() <= tol {
                return Ok(z);
            }
            let mut step = res / s[1];
            let mut accepted = false;
            for _ in 0..40 {
                let cand = z - step;
                if let Ok(g) = self.cauchy(cand) {
                    if (g - u).norm() < res.norm() {
                        z = cand;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let res = (self.cauchy(z)? - u).norm();
        if res <= 1e-12 * u.norm() {
            Ok(z)
        } else {
            Err(SpecError::NoConvergence(format!("{u}")))
        }
    }

    fn inverse_cauchy_real(&self, u: f64) -> Result<f64> {
        if u == 0.0 || !u.is_finite() {
            return Err(SpecError::OutOfRange(u));
        }
        let span = self.scale();
        let (lo, hi) = self.support();
        let right = u > 0.0;
        let (g_edge, _) = self.edge_limits(right);
        if let Some(g) = g_edge {
            if (right && u >= g) || (!right && u <= g) {
                return Err(SpecError::OutOfRange(u));
            }
        }
        let sign = if right { 1.0 } else { -1.0 };
        let edge = if right { hi } else { lo };
        let g_at = |d: f64| -> Result<f64> { Ok(self.cauchy(C64::new(edge + sign * d, 0.0))?.re) };
        let mut near = 1e-10 * span;
        let mut far = 1e6 * span;
        let au = u.abs();
        while g_at(far)?.abs() > au {
            far *= 100.0;
            if far > 1e300 {
                return Err(SpecError::OutOfRange(u));
            }
        }
        if g_at(near)?.abs() < au {
            return Err(SpecError::OutOfRange(u));
        }
        let mut d = (self.mean() + 1.0 / u - edge) * sign;
        if !(d > near && d < far) {
            d = (near * far).sqrt();
        }
        for _ in 0..300 {
            let z = C64::new(edge + sign * d, 0.0);
            let s = self.cauchy_series(z)?;
            let res = s[0].re - u;
            if res.abs() <= 1e-14 * au {
                return Ok(edge + sign * d);
            }
            if res * sign > 0.0 {
                near = d;
            } else {
                far = d;
            }
            let step = res / s[1].re * sign;
            let mut next = d - step;
            if !(next > near && next < far) || !next.is_finite() {
                next = if far / near > 4.0 {
                    (near * far).sqrt()
                } else {
                    0.5 * (near + far)
                };
            }
            if (far - near) <= 1e-15 * (edge.abs() + far) {
                d = next;
                break;
            }
            d = next;
        }
        let z = edge + sign * d;
        let res = (self.cauchy(C64::new(z, 0.0))?.re - u).abs();
        if res <= 1e-12 * au {
            Ok(z)
        } else {
            Err(SpecError::NoConvergence(format!("{u}")))
        }
    }

    /// Translate the measure by `a`.
    pub fn shifted(&self, a: f64) -> Measure {
        let shift_atoms = |atoms: &[Atom]| atoms.iter().map(|t| Atom { x: t.x + a, w: t.w }).collect::<Vec<_>>();
        let shift_table = |t: &Table| Table {
            xs: t.xs.iter().map(|x| x + a).collect(),
            fs: t.fs.clone(),
            cum: t.cum.clone(),
        };
        match self {
            Measure::Atomic(atoms) => Measure::Atomic(shift_atoms(atoms)),
            Measure::Uniform { lo, hi } => Measure::Uniform { lo: lo + a, hi: hi + a },
            Measure::Jacobi(j) => Measure::Jacobi(Jacobi::new(j.a, j.b, j.lo + a, j.hi + a).expect("valid shift")),
            Measure::Table(t) => Measure::Table(shift_table(t)),
            Measure::Empirical(p) => Measure::Empirical(p.iter().map(|x| x + a).collect()),
            Measure::Mixture { atoms, table } => Measure::Mixture {
                atoms: shift_atoms(atoms),
                table: shift_table(table),
            },
            Measure::Transformed(t) => Measure::transformed(t.base.shifted(a), t.direction, t.tabulated.shifted(a)),
        }
    }
}

fn table_integrate<F: Fn(f64) -> f64>(t: &Table, f: &F) -> f64 {
    let rule = crate::quad::gl8();
    let mut acc = 0.0;
    for i in 0..t.xs.len() - 1 {
        let (a, b) = (t.xs[i], t.xs[i + 1]);
        let (fa, fb) = (t.fs[i], t.fs[i + 1]);
        if fa == 0.0 && fb == 0.0 {
            continue;
        }
        acc += rule.integrate_real(a, b, |x| f(x) * (fa + (fb - fa) * (x - a) / (b - a)));
    }
    acc
}

fn jacobi_principal_value(j: &Jacobi, x: f64) -> Result<f64> {
    let l = j.len();
    for (end, expo) in [(j.lo, j.a), (j.hi, j.b)] {
        if expo <= -0.5 && (x - end).abs() < 1e-6 * l {
            return Err(SpecError::NearSingularEndpoint(x));
        }
    }
    let r = 0.5 * (x - j.lo).min(j.hi - x);
    let opts = AdaptiveOptions {
        rel_tol: 1e-12,
        ..Default::default()
    };
    let f = |t: f64| j.density(t);
    let middle = crate::quad::adaptive_real(|s| (f(x - s) - f(x + s)) / s, 0.0, r, opts)?;
    // Left piece [lo, x - r]: t - lo = D v^(1/(1+a)) absorbs the endpoint power.
    let d_left = x - r - j.lo;
    let left = if d_left > 0.0 {
        let p = 1.0 / (1.0 + j.a);
        crate::quad::adaptive_real(
            |v| {
                let t = j.lo + d_left * v.powf(p);
                let s = (t - j.lo) / l;
                j.norm * (1.0 - s).powf(j.b) / l * (d_left / l).powf(j.a) * d_left * p / (x - t)
            },
            0.0,
            1.0,
            opts,
        )?
    } else {
        0.0
    };
    let d_right = j.hi - (x + r);
    let right = if d_right > 0.0 {
        let p = 1.0 / (1.0 + j.b);
        crate::quad::adaptive_real(
            |v| {
                let t = j.hi - d_right * v.powf(p);
                let s = (t - j.lo) / l;
                j.norm * s.powf(j.a) / l * (d_right / l).powf(j.b) * d_right * p / (x - t)
            },
            0.0,
            1.0,
            opts,
        )?
    } else {
        0.0
    };
    Ok(middle + left + right)
}

impl Transformed {
    /// Boundary value `-Im G(x + i0)/π` through the base transform, atoms excluded.
    fn density(&self, x: f64) -> Option<f64> {
        let (lo, hi) = self.tabulated.support();
        if x < lo || x > hi {
            return Some(0.0);
        }
        let span = (hi - lo).max(1e-300);
        let atoms = self.tabulated.atoms();
        if atoms.iter().any(|a| (x - a.x).abs() < 1e-4 * span) {
            return self.tabulated.density(x);
        }
        let z = C64::new(x, 1e-10 * span);
        match self.series(z) {
            Ok(s) => {
                let g = atoms.iter().fold(s[0], |g, a| g - (z - a.x).inv() * a.w);
                Some((-g.im / std::f64::consts::PI).max(0.0))
            }
            Err(_) => self.tabulated.density(x),
        }
    }

    /// `[G, G', G'', G''']` of the transformed measure through the base transform.
    fn series(&self, z: C64) -> Result<[C64; 4]> {
        let b = self.base.cauchy_series(z)?;
        let (g, g1, g2, g3) = (b[0], b[1], b[2], b[3]);
        Ok(match self.direction {
            MkDirection::Forward => {
                let e = (-g).exp();
                [
                    C64::new(1.0, 0.0) - e,
                    g1 * e,
                    (g2 - g1 * g1) * e,
                    (g3 - g1 * g2 * 3.0 + g1 * g1 * g1) * e,
                ]
            }
            MkDirection::Inverse => {
                let w = (C64::new(1.0, 0.0) - g).inv();
                [
                    -(C64::new(1.0, 0.0) - g).ln(),
                    g1 * w,
                    g2 * w + g1 * g1 * w * w,
                    g3 * w + g1 * g2 * w * w * 3.0 + g1 * g1 * g1 * w * w * w * 2.0,
                ]
            }
        })
    }
}

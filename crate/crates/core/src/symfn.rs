//! Multivariate Bessel and Schur functions and their supersymmetric lifts.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::edge::steepest_phase;
use crate::error::{Result, SpecError};
use crate::linalg::{
    det_scaled, exp_divided_differences, expm, opitz, pivot_condition, power_divided_differences, reversal_sign, solve,
    vandermonde, CMat, ScaledDet,
};
use crate::measure::Measure;
use crate::quad::{gl32, C64};
use crate::simulate;

const CONFLUENT_GAP: f64 = 1e-6;
const EXP_LIMIT: f64 = 700.0;
const CIRCLE_MEAN_NODES: usize = 16;

/// Weakly decreasing integer vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature(Vec<i64>);

impl Signature {
    pub fn new(parts: Vec<i64>) -> Result<Self> {
        if parts.is_empty() {
            return Err(SpecError::InvalidArgument("empty signature".into()));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(SpecError::InvalidArgument("signature must be weakly decreasing".into()));
        }
        Ok(Signature(parts))
    }

    pub fn parts(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Shifted parts `λ_j + N - j`, strictly decreasing.
    pub fn shifted(&self) -> Vec<i64> {
        let n = self.0.len() as i64;
        self.0.iter().enumerate().map(|(j, l)| l + n - 1 - j as i64).collect()
    }

    /// Sum of parts.
    pub fn size(&self) -> i64 {
        self.0.iter().sum()
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn to_complex(l: &[f64]) -> Vec<C64> {
    l.iter().map(|x| re(*x)).collect()
}

fn scale_of(z: &[C64]) -> f64 {
    z.iter().fold(1.0, |m, v| m.max(v.norm()))
}

fn min_gap(z: &[C64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            gap = gap.min((z[i] - z[j]).norm());
        }
    }
    gap
}

fn separated(z: &[C64]) -> bool {
    z.len() < 2 || min_gap(z) > CONFLUENT_GAP * scale_of(z)
}

/// True when dividing an alternant by `Δ(z)` loses at most about six digits.
fn alternant_safe(z: &[C64]) -> bool {
    let mut spread: f64 = 1.0;
    for (i, a) in z.iter().enumerate() {
        for b in &z[i + 1..] {
            spread = spread.max((a - b).norm());
        }
    }
    let mut product = 1.0;
    for (i, a) in z.iter().enumerate() {
        for b in &z[i + 1..] {
            product *= (a - b).norm() / spread;
        }
    }
    product > 1e-6
}

/// `Π_{k<n} k!`.
pub fn factorial_product(n: usize) -> f64 {
    let mut acc = 1.0;
    let mut f = 1.0;
    for k in 1..n {
        f *= k as f64;
        acc *= f;
    }
    acc
}

fn finite(v: C64, what: &'static str) -> Result<C64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(SpecError::Overflow(what))
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(SpecError::DimensionMismatch(format!(
            "{what}: expected length {want}, got {got}"
        )));
    }
    Ok(())
}

/// `Π (J - r I)` over the given roots.
fn shifted_product(j: &CMat, roots: impl Iterator<Item = C64>) -> CMat {
    let n = j.nrows();
    let mut acc = CMat::identity(n, n);
    for r in roots {
        acc = &acc * (j - CMat::identity(n, n) * r);
    }
    acc
}

/// `(e^x - 1)/x`.
pub fn exprel(x: C64) -> C64 {
    if x.norm() < 1e-4 {
        re(1.0) + x / 2.0 + x * x / 6.0 + x * x * x / 24.0
    } else {
        (x.exp() - 1.0) / x
    }
}

/// Value at the center of a function analytic on a disc, as the mean over a circle.
pub fn circle_mean<F: FnMut(C64) -> Result<C64>>(mut f: F, radius: f64, nodes: usize) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..nodes {
        let theta = 2.0 * PI * (j as f64 + 0.5) / nodes as f64;
        acc += f(C64::from_polar(radius, theta))?;
    }
    Ok(acc / nodes as f64)
}

/// Evaluate `f` at a point with pairwise distinct entries, averaging over
/// a small circle of perturbations when `v` is confluent.
fn with_distinct<F: FnMut(&[C64]) -> Result<C64>>(v: &[C64], mut f: F) -> Result<C64> {
    if separated(v) {
        return f(v);
    }
    let radius = 1e-2 * scale_of(v);
    circle_mean(
        |t| {
            let moved: Vec<C64> = v.iter().enumerate().map(|(j, x)| x + t * (j as f64 + 1.0)).collect();
            f(&moved)
        },
        radius,
        CIRCLE_MEAN_NODES,
    )
}

// ---------------------------------------------------------------------------
// Bessel and Schur functions

/// `B_ℓ(0^N) = Δ(ℓ) / Π_{k<N} k!`.
pub fn bessel_at_zero(l: &[f64]) -> f64 {
    let mut acc = 1.0;
    for i in 0..l.len() {
        for j in i + 1..l.len() {
            acc *= l[i] - l[j];
        }
    }
    acc / factorial_product(l.len())
}

fn bessel_confluent_matrix(l: &[f64], z: &[C64]) -> CMat {
    let n = l.len();
    let mut m = CMat::zeros(n, n);
    for (c, lc) in l.iter().enumerate() {
        let d = exp_divided_differences(z, re(*lc));
        for i in 0..n {
            m[(i, c)] = d[i];
        }
    }
    m
}

/// Exponential alternant `det(e^{z_i ℓ_j}) / Δ(z)`, confluent arguments allowed.
pub fn bessel(l: &[f64], z: &[C64]) -> Result<C64> {
    check_len("bessel arguments", z.len(), l.len())?;
    let n = l.len();
    let worst = z
        .iter()
        .flat_map(|zi| l.iter().map(move |lj| (zi * lj).re.abs()))
        .fold(0.0, f64::max);
    if worst > EXP_LIMIT {
        return Err(SpecError::Overflow("bessel (use bessel_scaled)"));
    }
    let value = if alternant_safe(z) {
        let m = CMat::from_fn(n, n, |i, j| (z[i] * l[j]).exp());
        det_scaled(&m).value() / vandermonde(z)
    } else {
        det_scaled(&bessel_confluent_matrix(l, z)).value() * reversal_sign(n)
    };
    finite(value, "bessel")
}

/// Log-space Bessel function: rows (or columns) are rescaled before the determinant.
pub fn bessel_scaled(l: &[f64], z: &[C64]) -> Result<ScaledDet> {
    check_len("bessel arguments", z.len(), l.len())?;
    let n = l.len();
    if alternant_safe(z) {
        let shifts: Vec<f64> = z
            .iter()
            .map(|zi| l.iter().map(|lj| (zi * lj).re).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let m = CMat::from_fn(n, n, |i, j| (z[i] * l[j] - shifts[i]).exp());
        let d = det_scaled(&m);
        Ok(ScaledDet {
            mantissa: d.mantissa / vandermonde(z),
            log_scale: d.log_scale + shifts.iter().sum::<f64>(),
        })
    } else {
        let s = z.iter().map(|x| x.re).sum::<f64>() / n as f64;
        let moved: Vec<C64> = z.iter().map(|x| x - s).collect();
        let d = det_scaled(&bessel_confluent_matrix(l, &moved));
        Ok(ScaledDet {
            mantissa: d.mantissa * reversal_sign(n),
            log_scale: d.log_scale + s * l.iter().sum::<f64>(),
        })
    }
}

/// Bivariate divided differences of `e^{zℓ}` over the nodes `z` and `ℓ`.
fn bivariate_exp_divided_differences(z: &[C64], l: &[f64]) -> CMat {
    let n = l.len();
    let jz = opitz(z);
    let jl = opitz(&to_complex(l));
    let e = expm(&jz.kronecker(&jl));
    CMat::from_fn(z.len(), n, |i, c| e[(i * n + c, 0)])
}

/// `B_ℓ(z) / B_ℓ(0^N)`, confluent `z` and `ℓ` allowed.
pub fn bessel_normalized(l: &[f64], z: &[C64]) -> Result<C64> {
    check_len("bessel arguments", z.len(), l.len())?;
    let n = l.len();
    let lc = to_complex(l);
    if separated(&lc) {
        let v = bessel_scaled(l, z)?;
        return finite(v.value() / bessel_at_zero(l), "bessel_normalized");
    }
    let d = det_scaled(&bivariate_exp_divided_differences(z, l)).value();
    finite(d * factorial_product(n), "bessel_normalized")
}

/// Log-space `B_ℓ(z) / B_ℓ(0^N)` for separated `ℓ`.
pub fn bessel_normalized_scaled(l: &[f64], z: &[C64]) -> Result<ScaledDet> {
    let lc = to_complex(l);
    if !separated(&lc) {
        let v = bessel_normalized(l, z)?;
        return Ok(ScaledDet {
            mantissa: v,
            log_scale: 0.0,
        });
    }
    let v = bessel_scaled(l, z)?;
    let b0 = bessel_at_zero(l);
    Ok(ScaledDet {
        mantissa: v.mantissa * b0.signum(),
        log_scale: v.log_scale - b0.abs().ln(),
    })
}

/// Rational Schur function `det(x_i^{λ_j+N-j}) / Δ(x)`, confluent arguments allowed.
pub fn schur(lambda: &Signature, x: &[C64]) -> Result<C64> {
    check_len("schur arguments", x.len(), lambda.len())?;
    let n = lambda.len();
    let shifted = lambda.shifted();
    if shifted.iter().any(|e| *e < 0) && x.iter().any(|v| v.norm() == 0.0) {
        return Err(SpecError::ZeroArgumentNegativePower);
    }
    let value = if alternant_safe(x) {
        let m = CMat::from_fn(n, n, |i, j| x[i].powi(shifted[j] as i32));
        det_scaled(&m).value() / vandermonde(x)
    } else {
        let mut m = CMat::zeros(n, n);
        for (c, e) in shifted.iter().enumerate() {
            let d = power_divided_differences(x, *e)?;
            for i in 0..n {
                m[(i, c)] = d[i];
            }
        }
        det_scaled(&m).value() * reversal_sign(n)
    };
    finite(value, "schur")
}

/// Monte Carlo of `∫ exp(tr diag(z) U diag(ℓ) U*) dU`; returns (estimate, stderr).
pub fn hciz_mc(l: &[f64], z: &[f64], samples: usize, seed: u64) -> Result<(f64, f64)> {
    check_len("hciz arguments", z.len(), l.len())?;
    if samples == 0 {
        return Err(SpecError::InvalidArgument("samples must be positive".into()));
    }
    let n = l.len();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for s in 0..samples {
        let u = simulate::haar_unitary_with(n, &mut simulate::stream(seed, s as u64, 0));
        let mut expo = 0.0;
        for i in 0..n {
            for j in 0..n {
                expo += z[i] * l[j] * u[(i, j)].norm_sqr();
            }
        }
        let x = expo.exp();
        let delta = x - mean;
        mean += delta / (s as f64 + 1.0);
        m2 += delta * (x - mean);
    }
    let var = if samples > 1 { m2 / (samples as f64 - 1.0) } else { 0.0 };
    Ok((mean, (var / samples as f64).sqrt()))
}

// ---------------------------------------------------------------------------
// Supersymmetric lifts in determinant form

/// Arguments `(p, u⃗ ∈ ℂ^{N+k}, v⃗ ∈ ℂ^k)` of a supersymmetric lift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftArgs {
    pub p: C64,
    pub u_args: Vec<C64>,
    pub v_args: Vec<C64>,
}

impl LiftArgs {
    pub fn new(p: C64, u_args: Vec<C64>, v_args: Vec<C64>) -> Self {
        LiftArgs { p, u_args, v_args }
    }

    pub fn k(&self) -> usize {
        self.v_args.len()
    }
}

/// Determinant of the row-multiplied lift matrix; every row is a divided
/// difference over `u`, so confluent `u` and `u_i = v_j` need no special care.
fn lift_determinant(l: &[f64], p: C64, u: &[C64], v: &[C64], bivariate: bool) -> Result<C64> {
    let n = l.len();
    let k = v.len();
    let m = n + k;
    let j = opitz(u);
    let ep = expm(&(&j * p));
    let mut mat = CMat::zeros(m, m);
    for c in 0..k {
        let others = v.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, x)| *x);
        let f = &ep * shifted_product(&j, others) * (-p * v[c]).exp();
        for i in 0..m {
            mat[(i, c)] = f[(i, 0)];
        }
    }
    let q = shifted_product(&j, v.iter().cloned());
    if bivariate {
        let e = bivariate_exp_divided_differences(u, l);
        let a = &q * e;
        for i in 0..m {
            for c in 0..n {
                mat[(i, k + c)] = a[(i, c)];
            }
        }
    } else {
        for (c, lc) in l.iter().enumerate() {
            let col = &q * DVector::from_vec(exp_divided_differences(u, re(*lc)));
            for i in 0..m {
                mat[(i, k + c)] = col[i];
            }
        }
    }
    let neg_v: Vec<C64> = v.iter().map(|x| -x).collect();
    let parity = if (n * k).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut value = det_scaled(&mat).value() * (parity * reversal_sign(m)) / vandermonde(&neg_v);
    if bivariate {
        value *= reversal_sign(n) * factorial_product(n);
    }
    finite(value, "supersymmetric lift")
}

fn validate_lift(l: &[f64], args: &LiftArgs) -> Result<()> {
    check_len("lift u arguments", args.u_args.len(), l.len() + args.v_args.len())
}

/// Supersymmetric lift `B_{ℓ,p}(u⃗/v⃗)` from its determinant definition.
pub fn ssym_lift_det(l: &[f64], args: &LiftArgs) -> Result<C64> {
    validate_lift(l, args)?;
    with_distinct(&args.v_args, |v| lift_determinant(l, args.p, &args.u_args, v, false))
}

/// `B_{ℓ,p}(u⃗/v⃗) / B_ℓ(0^N)`; confluent `ℓ` allowed.
pub fn ssym_lift_det_normalized(l: &[f64], args: &LiftArgs) -> Result<C64> {
    validate_lift(l, args)?;
    if separated(&to_complex(l)) {
        let b0 = bessel_at_zero(l);
        with_distinct(&args.v_args, |v| {
            Ok(lift_determinant(l, args.p, &args.u_args, v, false)? / b0)
        })
    } else {
        with_distinct(&args.v_args, |v| lift_determinant(l, args.p, &args.u_args, v, true))
    }
}

// ---------------------------------------------------------------------------
// Matrix and Cauchy-determinant forms

/// Single-pair kernel at `ξ = 0^N` for a fixed `u`: the derivatives at `p` of
/// the interpolating polynomial of `w ↦ e^{wu}` over the nodes `ℓ`.
#[derive(Debug, Clone)]
pub struct ZeroKernel {
    p: C64,
    u: C64,
    n: usize,
    derivatives: Vec<C64>,
}

impl ZeroKernel {
    pub fn new(l: &[f64], p: C64, u: C64) -> Result<Self> {
        if u.norm() == 0.0 {
            return Err(SpecError::ZeroArgument("u"));
        }
        let nodes = to_complex(l);
        let n = nodes.len();
        let newton = exp_divided_differences(&nodes, u);
        let mut poly = vec![newton[n - 1]];
        for k in (0..n - 1).rev() {
            let d = p - nodes[k];
            let mut next = vec![C64::new(0.0, 0.0); poly.len() + 1];
            for (i, c) in poly.iter().enumerate() {
                next[i + 1] += c;
                next[i] += d * c;
            }
            next[0] += newton[k];
            poly = next;
        }
        let mut fact = 1.0;
        for (k, c) in poly.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *c *= fact;
        }
        Ok(ZeroKernel {
            p,
            u,
            n,
            derivatives: poly,
        })
    }

    /// `∫_p^∞ L(w) e^{-wv} dw` for the interpolating polynomial `L`.
    pub fn ray_integral(&self, v: C64) -> Result<C64> {
        if v.norm() == 0.0 {
            return Err(SpecError::ZeroArgument("v"));
        }
        let inv = v.inv();
        let mut pow = inv;
        let mut acc = C64::new(0.0, 0.0);
        for d in &self.derivatives {
            acc += d * pow;
            pow *= inv;
        }
        Ok(acc * (-self.p * v).exp())
    }

    /// `B_{ℓ,p}(u, 0^N / v) / (u - v) / B_ℓ(0^N)` with the `(v/u)^N` factor removed.
    pub fn reduced(&self, v: C64) -> Result<C64> {
        let d = self.u - v;
        if d.norm() == 0.0 {
            return Err(SpecError::PoleCollision("u = v".into()));
        }
        Ok((self.p * d).exp() / d + self.ray_integral(v)?)
    }

    /// `B_{ℓ,p}(u, 0^N / v) / B_ℓ(0^N)`.
    pub fn normalized(&self, v: C64) -> Result<C64> {
        let d = self.u - v;
        let ratio = (v / self.u).powu(self.n as u32);
        finite(ratio * ((self.p * d).exp() + d * self.ray_integral(v)?), "lift kernel")
    }
}

/// `D(u⃗;-v⃗) / (Δ(u⃗) Δ(-v⃗))`.
pub fn cauchy_prefactor(u: &[C64], v: &[C64]) -> C64 {
    let mut d = C64::new(1.0, 0.0);
    for ui in u {
        for vj in v {
            d *= ui - vj;
        }
    }
    let neg_v: Vec<C64> = v.iter().map(|x| -x).collect();
    d / (vandermonde(u) * vandermonde(&neg_v))
}

fn pairs_separated(u: &[C64], v: &[C64]) -> bool {
    let s = scale_of(u).max(scale_of(v));
    u.iter().all(|a| v.iter().all(|b| (a - b).norm() > 1e-8 * s)) && separated(u) && separated(v)
}

/// `B_{ℓ,p}(u⃗, 0^N / v⃗) / B_ℓ(0^N)` through the Cauchy-determinant factorization.
pub fn ssym_lift_zero(l: &[f64], p: C64, u: &[C64], v: &[C64]) -> Result<C64> {
    check_len("lift v arguments", v.len(), u.len())?;
    let k = u.len();
    if k == 0 {
        return Ok(re(1.0));
    }
    if k == 1 {
        return ZeroKernel::new(l, p, u[0])?.normalized(v[0]);
    }
    if !pairs_separated(u, v) {
        let mut args = u.to_vec();
        args.extend(std::iter::repeat_n(C64::new(0.0, 0.0), l.len()));
        return ssym_lift_det_normalized(l, &LiftArgs::new(p, args, v.to_vec()));
    }
    let n = l.len() as u32;
    let mut m = CMat::zeros(k, k);
    for i in 0..k {
        let kernel = ZeroKernel::new(l, p, u[i])?;
        for j in 0..k {
            m[(i, j)] = (v[j] / u[i]).powu(n) * kernel.reduced(v[j])?;
        }
    }
    finite(cauchy_prefactor(u, v) * det_scaled(&m).value(), "supersymmetric lift")
}

/// `B_{ℓ,p}(u⃗, ξ⃗ / v⃗) / B_ℓ(ξ⃗)` from the single-pair kernel and the Cauchy determinant.
pub fn ssym_lift_matrix_form(l: &[f64], p: C64, u: &[C64], v: &[C64], xi: &[C64]) -> Result<C64> {
    check_len("lift v arguments", v.len(), u.len())?;
    check_len("lift ξ arguments", xi.len(), l.len())?;
    if xi.iter().all(|x| x.norm() == 0.0) {
        return ssym_lift_zero(l, p, u, v);
    }
    let n = l.len();
    let k = u.len();
    let mut xi = xi.to_vec();
    if !separated(&xi) {
        let s = scale_of(&xi);
        for (j, x) in xi.iter_mut().enumerate() {
            *x += (j as f64 + 1.0) * 1e-7 * s;
        }
    }
    let a = CMat::from_fn(n, n, |i, j| (xi[i] * l[j]).exp());
    let cond = pivot_condition(&a);
    if cond > 1e12 {
        return Err(SpecError::SingularAlternant(cond));
    }
    let mut solved = Vec::with_capacity(k);
    for vj in v {
        let b: Vec<C64> = xi.iter().map(|x| (p * (x - vj)).exp() / (vj - x)).collect();
        solved.push(solve(&a, &b)?);
    }
    let mut m = CMat::zeros(k, k);
    for i in 0..k {
        let av: Vec<C64> = l.iter().map(|lj| (u[i] * lj).exp()).collect();
        for j in 0..k {
            let d = u[i] - v[j];
            if d.norm() < 1e-12 * scale_of(&[u[i], v[j]]) {
                return Err(SpecError::PoleCollision(format!("u = v = {}", u[i])));
            }
            let ratio: C64 = xi.iter().map(|x| (v[j] - x) / (u[i] - x)).product();
            let dot: C64 = av.iter().zip(&solved[j]).map(|(a, x)| a * x).sum();
            m[(i, j)] = ratio * ((p * d).exp() / d + dot);
        }
    }
    finite(cauchy_prefactor(u, v) * det_scaled(&m).value(), "supersymmetric lift")
}

// ---------------------------------------------------------------------------
// Contour form

/// Contours for the single-pair double integral: a `z`-circle of radius
/// `r_inner` used for `w` outside the mid circle, a circle of radius
/// `r_outer` for `w` inside it, and a `w`-ray from `p`.
#[derive(Debug, Clone)]
pub struct ContourGeometry {
    pub center: C64,
    pub r_inner: f64,
    pub r_outer: f64,
    pub ray_angle: Option<f64>,
    pub min_nodes: usize,
    pub max_nodes: usize,
}

impl ContourGeometry {
    /// Circle around `[ℓ_N, ℓ_1]` with 20% padding; outer circle 1.5 times larger.
    pub fn around(l: &[f64]) -> Self {
        let lo = l.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let half = 0.5 * (hi - lo);
        let r_inner = 1.2 * half + 0.1 * half.max(0.5);
        ContourGeometry {
            center: re(0.5 * (lo + hi)),
            r_inner,
            r_outer: 1.5 * r_inner,
            ray_angle: None,
            min_nodes: 512,
            max_nodes: 1 << 15,
        }
    }
}

struct CircleRule {
    nodes: Vec<C64>,
    weights: Vec<C64>,
}

/// Nodes and log-weights of the trapezoid rule for `∮ e^{zu} / Π(z - ℓ) g(z) dz/(2πi)`.
fn circle_log_weights(center: C64, radius: f64, count: usize, l: &[f64], u: C64) -> Vec<(C64, C64)> {
    (0..count)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / count as f64;
            let z = center + C64::from_polar(radius, theta);
            let log_w = z * u - l.iter().map(|lj| (z - lj).ln()).sum::<C64>() + ((z - center) / count as f64).ln();
            (z, log_w)
        })
        .collect()
}

fn contour_k1_at(l: &[f64], p: C64, u: C64, v: C64, geom: &ContourGeometry, count: usize) -> Result<C64> {
    let n = l.len();
    let angle = geom.ray_angle.unwrap_or(-v.arg());
    let dir = C64::from_polar(1.0, angle);
    if (dir * v).re <= 0.0 {
        return Err(SpecError::RayBlocked(format!(
            "Re(w v) does not grow along angle {angle}"
        )));
    }
    let inner = circle_log_weights(geom.center, geom.r_inner, count, l, u);
    let outer = circle_log_weights(geom.center, geom.r_outer, count, l, u);
    let shift = inner
        .iter()
        .chain(outer.iter())
        .map(|(_, w)| w.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let pack = |rule: Vec<(C64, C64)>| CircleRule {
        nodes: rule.iter().map(|(z, _)| *z).collect(),
        weights: rule.iter().map(|(_, w)| (w - shift).exp()).collect(),
    };
    let inner = pack(inner);
    let outer = pack(outer);
    let switch = 0.5 * (geom.r_inner + geom.r_outer);
    let integrand = |w: C64| -> C64 {
        let log_pre = l.iter().map(|lj| (w - lj).ln()).sum::<C64>() - w * v;
        let inside = (w - geom.center).norm() < switch;
        let rule = if inside { &outer } else { &inner };
        let sum: C64 = rule.nodes.iter().zip(&rule.weights).map(|(z, q)| q / (w - z)).sum();
        let mut val = log_pre.exp() * sum;
        if inside {
            val += (w * (u - v) - shift).exp();
        }
        val
    };
    let rule = gl32();
    let h = (0.5f64).min(2.0 / v.norm()).min(0.25 * geom.r_inner.max(1e-3));
    let t_min = (p - geom.center).norm() + geom.r_outer + (n as f64 + 1.0) / (dir * v).re;
    let mut acc = C64::new(0.0, 0.0);
    let mut small = 0;
    let mut t = 0.0;
    for _ in 0..200_000 {
        let piece = rule.integrate(t, t + h, |s| integrand(p + dir * s)) * dir;
        acc += piece;
        t += h;
        if t > t_min {
            if piece.norm() <= 1e-16 * acc.norm() || acc.norm() == 0.0 && piece.norm() == 0.0 {
                small += 1;
                if small >= 3 {
                    let d = u - v;
                    let log_ratio = (n as f64) * (v / u).ln();
                    let value = (log_ratio + p * d).exp() + d * acc * (log_ratio + shift).exp();
                    return finite(value, "contour lift");
                }
            } else {
                small = 0;
            }
        }
    }
    Err(SpecError::Quadrature("w-ray integral did not settle".into()))
}

/// `B_{ℓ,p}(u, 0^N / v) / B_ℓ(0^N)` by the double contour integral with the given contours.
pub fn ssym_lift_contour_k1_with(l: &[f64], p: C64, u: C64, v: C64, geom: &ContourGeometry) -> Result<C64> {
    if u.norm() == 0.0 {
        return Err(SpecError::ZeroArgument("u"));
    }
    if v.norm() == 0.0 {
        return Err(SpecError::RayBlocked("v = 0".into()));
    }
    let mut count = geom.min_nodes.max(16);
    let mut prev = contour_k1_at(l, p, u, v, geom, count)?;
    loop {
        count *= 2;
        if count > geom.max_nodes {
            return Err(SpecError::Quadrature("z-circle nodes exhausted".into()));
        }
        let next = contour_k1_at(l, p, u, v, geom, count)?;
        if (next - prev).norm() <= 1e-10 * next.norm() {
            return Ok(next);
        }
        prev = next;
    }
}

/// `B_{ℓ,p}(u, 0^N / v) / B_ℓ(0^N)` by the double contour integral.
pub fn ssym_lift_contour_k1(l: &[f64], p: C64, u: C64, v: C64) -> Result<C64> {
    ssym_lift_contour_k1_with(l, p, u, v, &ContourGeometry::around(l))
}

// ---------------------------------------------------------------------------
// Schur lifts

/// `s_{λ,p}(e^{u⃗}, 1^N / e^{v⃗}) / s_λ(1^N)` through the Bessel lift of `λ + δ_N`.
pub fn ssym_lift_schur(lambda: &Signature, p: C64, u: &[C64], v: &[C64]) -> Result<C64> {
    check_len("lift v arguments", v.len(), u.len())?;
    let n = lambda.len() as i32;
    let l: Vec<f64> = lambda.shifted().iter().map(|x| *x as f64).collect();
    let k = u.len();
    let mut pref = C64::new(1.0, 0.0);
    for i in 0..k {
        pref *= (-v[i]).exp() * (exprel(v[i]) / exprel(u[i])).powi(n);
        for vj in v {
            pref *= vj.exp() * exprel(u[i] - vj);
        }
        for j in i + 1..k {
            pref /= u[j].exp() * exprel(u[i] - u[j]) * v[j].exp() * exprel(v[i] - v[j]);
        }
    }
    let lift = ssym_lift_zero(&l, p, u, v)?;
    finite(pref * lift, "schur lift")
}

/// Supersymmetric Schur function `s_λ(x⃗ / y⃗)` with `len(x) - len(y) = N`.
pub fn susy_schur_det(lambda: &Signature, x: &[C64], y: &[C64]) -> Result<C64> {
    let n = lambda.len();
    let k = y.len();
    check_len("supersymmetric x arguments", x.len(), n + k)?;
    let shifted = lambda.shifted();
    if shifted.iter().any(|e| *e < 0) && x.iter().any(|v| v.norm() == 0.0) {
        return Err(SpecError::ZeroArgumentNegativePower);
    }
    let m = n + k;
    with_distinct(y, |y| {
        let j = opitz(x);
        let mut mat = CMat::zeros(m, m);
        for c in 0..k {
            let f = shifted_product(&j, y.iter().enumerate().filter(|(i, _)| *i != c).map(|(_, v)| *v));
            for i in 0..m {
                mat[(i, c)] = f[(i, 0)];
            }
        }
        let q = shifted_product(&j, y.iter().cloned());
        for (c, e) in shifted.iter().enumerate() {
            let col = &q * DVector::from_vec(power_divided_differences(x, *e)?);
            for i in 0..m {
                mat[(i, k + c)] = col[i];
            }
        }
        let neg_y: Vec<C64> = y.iter().map(|v| -v).collect();
        let parity = if (n * k).is_multiple_of(2) { 1.0 } else { -1.0 };
        finite(
            det_scaled(&mat).value() * (parity * reversal_sign(m)) / vandermonde(&neg_y),
            "supersymmetric schur",
        )
    })
}

/// `π e^{σiπw} / sin(πw)` without overflow.
fn sin_kernel(w: C64, sigma: f64) -> C64 {
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    let up = w.im >= 0.0;
    let s = if up {
        (two_pi_i * w).exp()
    } else {
        (-two_pi_i * w).exp()
    };
    match (sigma > 0.0, up) {
        (true, true) => two_pi_i * s / (s - 1.0),
        (true, false) => two_pi_i / (1.0 - s),
        (false, true) => two_pi_i / (s - 1.0),
        (false, false) => two_pi_i * s / (1.0 - s),
    }
}

/// `s_λ(x, 1, q, …, q^{N-1} / y) / s_λ(1, q, …, q^{N-1})` by the double contour
/// integral with the sine kernel: small circles around `λ_j + N - j` and two rays.
pub fn susy_schur_contour_q(lambda: &Signature, x: C64, y: C64, q: f64) -> Result<C64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SpecError::InvalidArgument(format!("q = {q} must lie in (0, 1)")));
    }
    let n = lambda.len();
    let l: Vec<f64> = lambda.shifted().iter().map(|v| *v as f64).collect();
    let geometric: Vec<f64> = (0..n).map(|i| q.powi(i as i32)).collect();
    for g in &geometric {
        if (x - g).norm() < 1e-12 || (y - g).norm() < 1e-12 {
            return Err(SpecError::PoleCollision(format!("argument equals q-power {g}")));
        }
    }
    let lnq = q.ln();
    let (ln_x, ln_y) = (x.ln(), y.ln());
    let base = -0.6;
    let l_max = l.iter().cloned().fold(0.0, f64::max);
    let pole_height = 2.0 * PI / lnq.abs() - 0.5;
    let phi = 0.6f64.min((pole_height / (l_max + 1.5)).atan());
    let radius = 0.2;
    if phi.tan() * (radius - base) <= 1.5 * radius {
        return Err(SpecError::Quadrature(format!(
            "rays cannot enclose the circles for q = {q}"
        )));
    }
    let rate = |sigma: f64| {
        let up = phi.cos() * ln_y.re - phi.sin() * ln_y.im + PI * phi.sin() * (1.0 + sigma);
        let down = phi.cos() * ln_y.re + phi.sin() * ln_y.im + PI * phi.sin() * (1.0 - sigma);
        up.min(down)
    };
    let sigma = if rate(1.0) >= rate(-1.0) { 1.0 } else { -1.0 };
    let decay = rate(sigma);
    if decay < 0.05 {
        return Err(SpecError::BranchError(format!("decay rate {decay:.3} for y = {y}")));
    }
    let qpow = |w: C64| (w * lnq).exp();
    let ql: Vec<f64> = l.iter().map(|v| q.powf(*v)).collect();
    let per_circle = 64;
    let mut znodes = Vec::with_capacity(n * per_circle);
    for lj in &l {
        for j in 0..per_circle {
            let offset = C64::from_polar(radius, 2.0 * PI * j as f64 / per_circle as f64);
            let z = lj + offset;
            let denom: C64 = ql.iter().map(|qv| qpow(z) - qv).product();
            let weight = (z * ln_x).exp() / denom * offset / per_circle as f64;
            znodes.push((z, weight));
        }
    }
    let integrand = |w: C64| -> C64 {
        let inner: C64 = znodes.iter().map(|(z, a)| a * lnq / (qpow(w - z) - 1.0)).sum();
        let poly: C64 = ql.iter().map(|qv| qpow(w) - qv).product();
        sin_kernel(w, sigma) * (-(w + 1.0) * ln_y).exp() * poly * inner
    };
    let t_max = 45.0 / decay;
    let h = 0.5f64.min(1.0 / ln_y.norm().max(1e-3));
    let rule = gl32();
    let up = C64::from_polar(1.0, phi);
    let down = C64::from_polar(1.0, -phi);
    let mut total = C64::new(0.0, 0.0);
    let mut t = 0.0;
    while t < t_max {
        let hi = (t + h).min(t_max);
        let lower = rule.integrate(t, hi, |s| integrand(base + down * s)) * down;
        let upper = rule.integrate(t, hi, |s| integrand(base + up * s)) * up;
        total += lower - upper;
        t = hi;
    }
    total /= C64::new(0.0, 2.0 * PI);
    let mut pref = x - y;
    for g in &geometric {
        pref *= (y - g) / (x - g);
    }
    finite(pref * ((x - y).inv() + total), "supersymmetric schur contour")
}

// ---------------------------------------------------------------------------
// Asymptotics

/// Leading-order value of `B_{ℓ,p}(N u⃗, 0^N / N v⃗) / B_ℓ(0^N)` for `ℓ` the
/// mid-quantiles of `m`, from the saddle points `z = G^{-1}(u)`.
pub fn ssym_lift_asymptotic(m: &Measure, p: C64, u: &[C64], v: &[C64], n: usize) -> Result<C64> {
    check_len("lift v arguments", v.len(), u.len())?;
    let empirical = Measure::empirical(m.quantile_spectrum(n).values().to_vec())?;
    let (lo, hi) = empirical.support();
    let center = re(0.5 * (lo + hi));
    let k = u.len();
    let mut zu = Vec::with_capacity(k);
    let mut zv = Vec::with_capacity(k);
    let mut expo = C64::new(0.0, 0.0);
    let mut roots = C64::new(1.0, 0.0);
    for i in 0..k {
        let a = empirical.inverse_cauchy(u[i])?;
        let b = empirical.inverse_cauchy(v[i])?;
        let ga = empirical.cauchy_derivative(a, 1)?;
        let gb = empirical.cauchy_derivative(b, 1)?;
        let mut sa = ga.inv().sqrt();
        if ((a - center).conj() * sa).im < 0.0 {
            sa = -sa;
        }
        let mut sb = gb.inv().sqrt();
        if ((b - p).conj() * (C64::new(0.0, -1.0) * sb)).re < 0.0 {
            sb = -sb;
        }
        roots *= sa * sb;
        expo += steepest_phase(&empirical, u[i], a)? - steepest_phase(&empirical, v[i], b)?;
        zu.push(a);
        zv.push(b);
    }
    let pref = if k == 1 && (u[0] - v[0]).norm() < 1e-12 * scale_of(&[u[0], v[0]]) {
        empirical.cauchy_derivative(zu[0], 1)?
    } else {
        cauchy_prefactor(u, v) / cauchy_prefactor(&zu, &zv)
    };
    finite(pref * roots * (expo * n as f64).exp(), "lift asymptotics")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        re(x)
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    #[test]
    fn bessel_examples() {
        let e = 1f64.exp();
        assert!(close(bessel(&[1.0], &[c(2.0)]).unwrap(), c(e * e), 1e-14));
        assert!(close(
            bessel(&[1.0, 0.0], &[c(2.0), c(1.0)]).unwrap(),
            c(e * e - e),
            1e-14
        ));
        assert!(close(bessel(&[1.0, 0.0], &[c(1.0), c(1.0)]).unwrap(), c(e), 1e-14));
        assert!(matches!(bessel(&[1.0], &[c(800.0)]), Err(SpecError::Overflow(_))));
    }

    #[test]
    fn normalized_bessel_examples() {
        let l = [1.3, 0.2, -0.7];
        let zero = [c(0.0); 3];
        assert!(close(bessel_normalized(&l, &zero).unwrap(), c(1.0), 1e-13));
        assert!(close(
            bessel_normalized(&[2.0], &[c(0.3)]).unwrap(),
            c(0.6f64.exp()),
            1e-14
        ));
        let t = 1.0;
        let v = bessel_normalized(&[1.0, 0.0], &[c(t), c(0.0)]).unwrap();
        assert!(close(v, c(t.exp() - 1.0), 1e-13));
        let confluent = bessel_normalized(&[0.5, 0.5], &[c(0.4), c(-0.2)]).unwrap();
        assert!(close(confluent, c((0.5f64 * 0.2).exp()), 1e-12));
    }

    #[test]
    fn scaled_path_matches_direct() {
        let l = [2.0, 0.5, -1.0];
        let z = [C64::new(0.3, 0.1), c(-0.4), c(1.1)];
        let direct = bessel(&l, &z).unwrap();
        assert!(close(bessel_scaled(&l, &z).unwrap().value(), direct, 1e-12));
        let zc = [c(0.2), c(0.2), c(0.5)];
        assert!(close(
            bessel_scaled(&l, &zc).unwrap().value(),
            bessel(&l, &zc).unwrap(),
            1e-12
        ));
        let big = bessel_scaled(&[2.0, 1.5, 1.0], &[c(400.0), c(399.0), c(398.0)]).unwrap();
        assert!(big.ln_abs().is_finite() && big.ln_abs() > 1500.0);
    }

    #[test]
    fn schur_examples() {
        let s = Signature::new(vec![1, 0]).unwrap();
        assert!(close(schur(&s, &[c(2.0), c(3.0)]).unwrap(), c(5.0), 1e-14));
        let s2 = Signature::new(vec![2, 0]).unwrap();
        assert!(close(schur(&s2, &[c(1.0), c(1.0)]).unwrap(), c(3.0), 1e-14));
        let s0 = Signature::new(vec![0, 0, 0]).unwrap();
        assert!(close(schur(&s0, &[c(0.3), c(2.0), c(-1.0)]).unwrap(), c(1.0), 1e-13));
        let neg = Signature::new(vec![0, -1]).unwrap();
        assert!(matches!(
            schur(&neg, &[c(0.0), c(1.0)]),
            Err(SpecError::ZeroArgumentNegativePower)
        ));
    }

    #[test]
    fn hciz_trivial_cases() {
        let (m, s) = hciz_mc(&[1.5], &[0.4], 10, 3).unwrap();
        assert!((m - 0.6f64.exp()).abs() < 1e-14 && s < 1e-14);
        let (m0, s0) = hciz_mc(&[1.0, 0.0], &[0.0, 0.0], 10, 3).unwrap();
        assert!((m0 - 1.0).abs() < 1e-15 && s0 == 0.0);
    }

    #[test]
    fn lift_det_examples() {
        let b = bessel(&[1.0, -0.5], &[c(0.3), c(0.8)]).unwrap();
        let k0 = ssym_lift_det(&[1.0, -0.5], &LiftArgs::new(c(0.2), vec![c(0.3), c(0.8)], vec![])).unwrap();
        assert!(close(k0, b, 1e-13));
        let one = ssym_lift_det(&[0.0], &LiftArgs::new(c(0.0), vec![c(0.4), c(1.3)], vec![c(-0.7)])).unwrap();
        assert!(close(one, c(1.0), 1e-13));
        let cancel = ssym_lift_det(&[1.0], &LiftArgs::new(c(0.3), vec![c(0.7), c(0.2)], vec![c(0.2)])).unwrap();
        assert!(close(cancel, c(0.7f64.exp()), 1e-13));
    }

    #[test]
    fn zero_kernel_matches_determinant() {
        let l = [1.0, 0.3, -0.4];
        let p = C64::new(0.2, 0.1);
        let (u, v) = (C64::new(0.7, 0.2), C64::new(-0.5, 0.3));
        let kernel = ZeroKernel::new(&l, p, u).unwrap().normalized(v).unwrap();
        let args = LiftArgs::new(p, vec![u, c(0.0), c(0.0), c(0.0)], vec![v]);
        let det = ssym_lift_det_normalized(&l, &args).unwrap();
        assert!(close(kernel, det, 1e-11), "{kernel} {det}");
    }

    #[test]
    fn matrix_form_matches_determinant() {
        let l = [0.9, 0.1];
        let p = c(0.3);
        let xi = [c(0.4), c(-0.5)];
        let u = [c(0.6), C64::new(-0.2, 0.4)];
        let v = [c(-0.8), C64::new(0.5, -0.3)];
        let matrix = ssym_lift_matrix_form(&l, p, &u, &v, &xi).unwrap();
        let args = LiftArgs::new(p, vec![u[0], u[1], xi[0], xi[1]], v.to_vec());
        let det = ssym_lift_det(&l, &args).unwrap() / bessel(&l, &xi).unwrap();
        assert!(close(matrix, det, 1e-10), "{matrix} {det}");
        let zero = ssym_lift_matrix_form(&l, p, &u, &v, &[c(0.0), c(0.0)]).unwrap();
        let args0 = LiftArgs::new(p, vec![u[0], u[1], c(0.0), c(0.0)], v.to_vec());
        assert!(close(zero, ssym_lift_det_normalized(&l, &args0).unwrap(), 1e-10));
    }

    #[test]
    fn contour_matches_kernel() {
        let l = [1.0, 0.2, -0.5];
        let p = C64::new(0.1, 1e-6);
        let (u, v) = (C64::new(0.8, 0.3), C64::new(1.1, -0.4));
        let exact = ZeroKernel::new(&l, p, u).unwrap().normalized(v).unwrap();
        let contour = ssym_lift_contour_k1(&l, p, u, v).unwrap();
        assert!(close(contour, exact, 1e-9), "{contour} {exact}");
        let trivial = ssym_lift_contour_k1(&[0.0], c(0.0), c(0.6), c(1.7)).unwrap();
        assert!(close(trivial, c(1.0), 1e-10));
    }

    #[test]
    fn schur_lift_cancels_at_equal_arguments() {
        let s = Signature::new(vec![2, 1, 0]).unwrap();
        let u = [C64::new(0.3, 0.1), c(-0.4)];
        let v = ssym_lift_schur(&s, c(0.7), &u, &u).unwrap();
        assert!(close(v, c(1.0), 1e-10), "{v}");
    }

    #[test]
    fn susy_schur_reduces_and_cancels() {
        let s = Signature::new(vec![2, 1]).unwrap();
        let x = [c(0.7), C64::new(1.2, 0.3)];
        let plain = schur(&s, &x).unwrap();
        assert!(close(susy_schur_det(&s, &x, &[]).unwrap(), plain, 1e-13));
        let ext = [x[0], x[1], c(1.9)];
        let cancelled = susy_schur_det(&s, &ext, &[c(1.9)]).unwrap();
        assert!(close(cancelled, plain, 1e-12));
    }

    #[test]
    fn schur_lift_matches_direct_definition() {
        let s = Signature::new(vec![1, 0]).unwrap();
        let l: Vec<f64> = s.shifted().iter().map(|x| *x as f64).collect();
        let (p, u, v) = (c(0.7), C64::new(0.3, 0.1), c(-0.2));
        let direct = |t: C64| -> Result<C64> {
            let args = vec![u, c(0.0) + t, -t];
            let lift = ssym_lift_det(&l, &LiftArgs::new(p, args.clone(), vec![v]))?;
            let exps: Vec<C64> = args.iter().map(|a| a.exp()).collect();
            let ratio = cauchy_prefactor(&exps, &[v.exp()]) / cauchy_prefactor(&args, &[v]);
            Ok((-v).exp() * ratio * lift)
        };
        let oracle = circle_mean(direct, 0.1, 32).unwrap() / schur(&s, &[c(1.0), c(1.0)]).unwrap();
        let lifted = ssym_lift_schur(&s, p, &[u], &[v]).unwrap();
        assert!(close(lifted, oracle, 1e-8), "{lifted} {oracle}");
    }

    #[test]
    fn q_contour_matches_determinant() {
        let s = Signature::new(vec![2, 1, 0]).unwrap();
        let q = 0.5;
        let g = [c(1.0), c(q), c(q * q)];
        for (x, y) in [(c(0.35), c(1.7)), (C64::new(0.8, 0.3), C64::new(2.2, -0.6))] {
            let det = susy_schur_det(&s, &[x, g[0], g[1], g[2]], &[y]).unwrap() / schur(&s, &g).unwrap();
            let contour = susy_schur_contour_q(&s, x, y, q).unwrap();
            assert!((contour - det).norm() <= 1e-6 * det.norm().max(1.0), "{contour} {det}");
        }
        let trivial = Signature::new(vec![0, 0, 0]).unwrap();
        let det = susy_schur_det(&trivial, &[c(0.35), g[0], g[1], g[2]], &[c(1.7)]).unwrap();
        let contour = susy_schur_contour_q(&trivial, c(0.35), c(1.7), q).unwrap();
        assert!((contour - det).norm() <= 1e-6);
    }

    #[test]
    fn asymptotic_ratio_improves_with_size() {
        let m = Measure::uniform(0.0, 1.0).unwrap();
        let p = C64::new(0.5, 1e-6);
        let (u, v) = (c(3f64.ln()), c((5.0f64 / 3.0).ln()));
        let mut errs = Vec::new();
        for n in [20usize, 40, 80] {
            let l = m.quantile_spectrum(n).values().to_vec();
            let exact = ZeroKernel::new(&l, p, u * n as f64)
                .unwrap()
                .normalized(v * n as f64)
                .unwrap();
            let approx = ssym_lift_asymptotic(&m, p, &[u], &[v], n).unwrap();
            errs.push((exact / approx - 1.0).norm());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2] && errs[2] < 0.05, "{errs:?}");
    }

    #[test]
    fn sin_kernel_matches_definition() {
        for w in [C64::new(0.3, 0.7), C64::new(2.4, -1.1), C64::new(-0.6, 0.0)] {
            for sigma in [1.0, -1.0] {
                let direct = PI * (C64::new(0.0, sigma * PI) * w).exp() / (PI * w).sin();
                assert!(close(sin_kernel(w, sigma), direct, 1e-12));
            }
        }
    }
}

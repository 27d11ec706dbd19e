//! Contour-integral moment formulas for Bessel and Schur generating functions,
//! the literal difference-operator oracle and the Airy Laplace transform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpecError};
use crate::measure::Spectrum;
use crate::quad::{gl200, gl48, C64};
use crate::symfn::{circle_mean, exprel, Signature, ZeroKernel};

const MIN_NODES: usize = 64;
const MAX_NODES_1D: usize = 4096;
const MAX_NODES_2D: usize = 512;
const MAX_NODES_3D: usize = 64;
const STABILITY: f64 = 1e-9;

/// Integration contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ContourSpec {
    Circle { center: f64, radius: f64 },
    Vline { abscissa: f64, half_height: f64 },
}

/// Random spectrum model whose generating function is integrated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MomentModel {
    /// Fixed particles `ℓ`.
    Deterministic { spectrum: Spectrum },
    /// Eigenvalues of `Σ U_s diag(ℓ⁽ˢ⁾) U_s*` with independent Haar `U_s`.
    Additive { spectra: Vec<Spectrum> },
    /// Highest weight of a random irreducible component of `⊗ V_{λ⁽ˢ⁾}`.
    Tensor { signatures: Vec<Signature> },
}

impl MomentModel {
    pub fn size(&self) -> usize {
        match self {
            MomentModel::Deterministic { spectrum } => spectrum.len(),
            MomentModel::Additive { spectra } => spectra.first().map_or(0, Spectrum::len),
            MomentModel::Tensor { signatures } => signatures.first().map_or(0, Signature::len),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRequest {
    pub model: MomentModel,
    pub c: Vec<f64>,
    /// Circle radii for `u_1, …, u_k`; nested defaults when absent.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
}

impl MomentRequest {
    pub fn new(model: MomentModel, c: Vec<f64>) -> Self {
        MomentRequest { model, c, radii: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentResult {
    pub moment: C64,
    pub nodes_used: usize,
}

/// `r_1 = 2 max c`, `r_j = r_{j-1} + 3 max c / 2`.
pub fn default_radii(c: &[f64]) -> Vec<f64> {
    let cmax = c.iter().cloned().fold(0.0, f64::max);
    let mut radii = Vec::with_capacity(c.len());
    let mut r = 2.0 * cmax;
    for (j, _) in c.iter().enumerate() {
        if j > 0 {
            r += 1.5 * cmax;
        }
        radii.push(r);
    }
    radii
}

fn validate(req: &MomentRequest) -> Result<Vec<f64>> {
    let k = req.c.len();
    if k == 0 || k > 3 {
        return Err(SpecError::InvalidArgument(format!(
            "{k} observables requested; 1 to 3 supported"
        )));
    }
    if req.c.iter().any(|c| !(*c > 0.0)) {
        return Err(SpecError::InvalidArgument("every c_i must be positive".into()));
    }
    let n = req.model.size();
    if n == 0 {
        return Err(SpecError::InvalidArgument("empty model".into()));
    }
    let same = match &req.model {
        MomentModel::Deterministic { .. } => true,
        MomentModel::Additive { spectra } => spectra.iter().all(|s| s.len() == n),
        MomentModel::Tensor { signatures } => signatures.iter().all(|s| s.len() == n),
    };
    if !same {
        return Err(SpecError::DimensionMismatch(
            "all summands must have the same size".into(),
        ));
    }
    let radii = req.radii.clone().unwrap_or_else(|| default_radii(&req.c));
    if radii.len() != k {
        return Err(SpecError::DimensionMismatch("one radius per observable".into()));
    }
    for i in 0..k {
        if radii[i] <= req.c[i] {
            return Err(SpecError::ContourNesting(format!(
                "radius {} does not exceed c = {}",
                radii[i], req.c[i]
            )));
        }
        for j in i + 1..k {
            if radii[j] <= radii[i] + req.c[i].max(req.c[j]) {
                return Err(SpecError::ContourNesting(format!(
                    "circle {j} must contain u_{i} + c_{i} and u_{j} + c_{j} must avoid circle {i} (radius {} ≤ {})",
                    radii[j],
                    radii[i] + req.c[i].max(req.c[j])
                )));
            }
        }
    }
    if matches!(req.model, MomentModel::Tensor { .. }) {
        let reach = radii.iter().zip(&req.c).map(|(r, c)| r + c).fold(0.0, f64::max);
        if reach >= 2.0 * PI {
            return Err(SpecError::ContourNesting(format!(
                "shifted circle of radius {reach} leaves |u| < 2π"
            )));
        }
    }
    Ok(radii)
}

/// Circle nodes `u_i(a)` and the shifted points `u_i(a) + c_i`.
struct Circles {
    u: Vec<Vec<C64>>,
    shifted: Vec<Vec<C64>>,
    nodes: usize,
}

impl Circles {
    fn new(radii: &[f64], c: &[f64], nodes: usize) -> Self {
        let u: Vec<Vec<C64>> = radii
            .iter()
            .map(|r| {
                (0..nodes)
                    .map(|a| C64::from_polar(*r, 2.0 * PI * (a as f64 + 0.5) / nodes as f64))
                    .collect()
            })
            .collect();
        let shifted = u
            .iter()
            .zip(c)
            .map(|(row, ci)| row.iter().map(|x| x + ci).collect())
            .collect();
        Circles { u, shifted, nodes }
    }
}

/// Indexed `[i][j][a][b]`: circle `i` node `a` against circle `j` node `b`.
type KernelTable = Vec<Vec<Vec<Vec<C64>>>>;

/// Reduced kernels `R̂(u_i(a) + c_i, u_j(b))` for one summand.
fn kernel_tables(l: &[f64], circles: &Circles) -> Result<KernelTable> {
    let k = circles.u.len();
    let p = C64::new(0.0, 0.0);
    let mut tables = vec![vec![Vec::new(); k]; k];
    for (i, row) in tables.iter_mut().enumerate() {
        let kernels = circles.shifted[i]
            .iter()
            .map(|big| ZeroKernel::new(l, p, *big))
            .collect::<Result<Vec<_>>>()?;
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = kernels
                .iter()
                .map(|kern| {
                    circles.u[j]
                        .iter()
                        .map(|v| kern.reduced(*v))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
        }
    }
    Ok(tables)
}

fn small_det(m: &[Vec<C64>]) -> C64 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("at most three observables"),
    }
}

fn table_det(table: &[Vec<Vec<Vec<C64>>>], idx: &[usize]) -> C64 {
    let k = idx.len();
    let m: Vec<Vec<C64>> = (0..k)
        .map(|i| (0..k).map(|j| table[i][j][idx[i]][idx[j]]).collect())
        .collect();
    small_det(&m)
}

/// `Π(V/U)^N · D(U;−V)/(Δ(U)Δ(−V))` for `U = u + c`, `V = u`.
fn lift_prefactor(big: &[C64], small: &[C64], n: usize) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for (a, b) in big.iter().zip(small) {
        acc *= (b / a).powu(n as u32);
    }
    acc * crate::symfn::cauchy_prefactor(big, small)
}

/// Trapezoid rule over the product of circles; `f` gets node indices and returns
/// the integrand times `Π u_i` (the `du/(2πi)` Jacobian on a circle).
fn circle_product_integral<F>(c: &[f64], radii: &[f64], mut f: F) -> Result<MomentResult>
where
    F: FnMut(&Circles, &[usize]) -> Result<C64>,
{
    let k = c.len();
    let cap = [MAX_NODES_1D, MAX_NODES_2D, MAX_NODES_3D][k - 1];
    let mut nodes = MIN_NODES.min(cap);
    let mut prev: Option<C64> = None;
    loop {
        let circles = Circles::new(radii, c, nodes);
        let total = nodes.pow(k as u32);
        let mut acc = C64::new(0.0, 0.0);
        let mut idx = vec![0usize; k];
        for flat in 0..total {
            let mut rest = flat;
            for slot in idx.iter_mut() {
                *slot = rest % nodes;
                rest /= nodes;
            }
            let jac: C64 = idx.iter().enumerate().map(|(i, a)| circles.u[i][*a]).product();
            acc += f(&circles, &idx)? * jac;
        }
        let value = acc / total as f64;
        if let Some(p) = prev {
            if (value - p).norm() <= STABILITY * value.norm().max(1e-300) {
                return Ok(MomentResult {
                    moment: value,
                    nodes_used: nodes,
                });
            }
        }
        if nodes * 2 > cap {
            return Err(SpecError::Quadrature(format!(
                "moment integral not stable at {nodes} nodes per circle"
            )));
        }
        prev = Some(value);
        nodes *= 2;
    }
}

fn particles_of(lambda: &Signature) -> Vec<f64> {
    lambda.shifted().iter().map(|x| *x as f64).collect()
}

/// `E[Π_i Σ_j e^{c_i ℓ_j}]` for deterministic and additive models.
pub fn moment_additive(req: &MomentRequest) -> Result<MomentResult> {
    let radii = validate(req)?;
    let spectra: Vec<&Spectrum> = match &req.model {
        MomentModel::Deterministic { spectrum } => vec![spectrum],
        MomentModel::Additive { spectra } => spectra.iter().collect(),
        MomentModel::Tensor { .. } => {
            return Err(SpecError::InvalidArgument("tensor models use moment_tensor".into()));
        }
    };
    let n = req.model.size();
    let summands = spectra.len();
    let mut cached: Option<(usize, Vec<KernelTable>)> = None;
    circle_product_integral(&req.c, &radii, |circles, idx| {
        if cached.as_ref().is_none_or(|(m, _)| *m != circles.nodes) {
            let tables = spectra
                .iter()
                .map(|s| kernel_tables(s.values(), circles))
                .collect::<Result<Vec<_>>>()?;
            cached = Some((circles.nodes, tables));
        }
        let tables = &cached.as_ref().expect("tables cached").1;
        let mut value: C64 = tables.iter().map(|t| table_det(t, idx)).product();
        if summands > 1 {
            let big: Vec<C64> = idx.iter().enumerate().map(|(i, a)| circles.shifted[i][*a]).collect();
            let small: Vec<C64> = idx.iter().enumerate().map(|(i, a)| circles.u[i][*a]).collect();
            value *= lift_prefactor(&big, &small, n).powu(summands as u32 - 1);
        }
        Ok(value)
    })
}

/// Factor turning `B_{λ+δ,p}(U,0^N/V)/B_{λ+δ}(0^N)` into `s_{λ,p}(e^U,1^N/e^V)/s_λ(1^N)`.
pub fn schur_transport(big: &[C64], small: &[C64], n: usize) -> C64 {
    let k = big.len();
    let n = n as i32;
    let mut pref = C64::new(1.0, 0.0);
    for i in 0..k {
        pref *= (-small[i]).exp() * (exprel(small[i]) / exprel(big[i])).powi(n);
        for v in small {
            pref *= v.exp() * exprel(big[i] - v);
        }
        for j in i + 1..k {
            pref /= big[j].exp() * exprel(big[i] - big[j]) * small[j].exp() * exprel(small[i] - small[j]);
        }
    }
    pref
}

/// `E[Π_i Σ_j e^{c_i(λ_j + N − j)}]` for tensor-product models.
pub fn moment_tensor(req: &MomentRequest) -> Result<MomentResult> {
    let radii = validate(req)?;
    let MomentModel::Tensor { signatures } = &req.model else {
        return Err(SpecError::InvalidArgument("moment_tensor needs a tensor model".into()));
    };
    let n = req.model.size();
    let k = req.c.len();
    let particles: Vec<Vec<f64>> = signatures.iter().map(particles_of).collect();
    let mut cached: Option<(usize, Vec<KernelTable>)> = None;
    circle_product_integral(&req.c, &radii, |circles, idx| {
        if cached.as_ref().is_none_or(|(m, _)| *m != circles.nodes) {
            let tables = particles
                .iter()
                .map(|l| kernel_tables(l, circles))
                .collect::<Result<Vec<_>>>()?;
            cached = Some((circles.nodes, tables));
        }
        let tables = &cached.as_ref().expect("tables cached").1;
        let big: Vec<C64> = idx.iter().enumerate().map(|(i, a)| circles.shifted[i][*a]).collect();
        let small: Vec<C64> = idx.iter().enumerate().map(|(i, a)| circles.u[i][*a]).collect();
        let factor = schur_transport(&big, &small, n) * lift_prefactor(&big, &small, n);
        let mut value: C64 = tables.iter().map(|t| factor * table_det(t, idx)).product();
        let (eb, es): (Vec<C64>, Vec<C64>) = (
            big.iter().map(|x| x.exp()).collect(),
            small.iter().map(|x| x.exp()).collect(),
        );
        for i in 0..k {
            for j in i + 1..k {
                value *= (eb[j] - eb[i]) * (es[j] - es[i]) / ((es[j] - eb[i]) * (eb[j] - es[i]));
            }
            value *= ((eb[i] - 1.0) / (es[i] - 1.0)).powu(n as u32) / req.c[i].exp_m1();
        }
        Ok(value)
    })
}

/// Which difference operator to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    /// `𝔇_c`, eigenoperator of multivariate Bessel functions.
    Bessel,
    /// `D_c`, eigenoperator of Schur functions in exponential variables.
    Schur,
}

fn apply_operators(kind: OperatorKind, s: &dyn Fn(&[C64]) -> Result<C64>, c: &[f64], z: &[C64]) -> Result<C64> {
    let Some((first, rest)) = c.split_first() else {
        return s(z);
    };
    let mut acc = C64::new(0.0, 0.0);
    let mut moved = z.to_vec();
    for i in 0..z.len() {
        let mut coef = C64::new(1.0, 0.0);
        for j in 0..z.len() {
            if j == i {
                continue;
            }
            coef *= match kind {
                OperatorKind::Bessel => (z[i] + first - z[j]) / (z[i] - z[j]),
                OperatorKind::Schur => ((z[i] + first).exp() - z[j].exp()) / (z[i].exp() - z[j].exp()),
            };
        }
        moved[i] = z[i] + first;
        acc += coef * apply_operators(kind, s, rest, &moved)?;
        moved[i] = z[i];
    }
    Ok(acc)
}

/// `D_{c_1} ⋯ D_{c_k} S` at `0^N`, applying the operators literally at `t·ω` and
/// recovering `t = 0` as a circle mean; radii `1/2` and `1/4` must agree.
pub fn difference_operator_oracle(
    kind: OperatorKind,
    s: &dyn Fn(&[C64]) -> Result<C64>,
    c: &[f64],
    n: usize,
) -> Result<C64> {
    if n == 0 || n > 5 || c.len() > 3 {
        return Err(SpecError::InvalidArgument(
            "oracle supports N ≤ 5 and at most three operators".into(),
        ));
    }
    let omega: Vec<f64> = (0..n).map(|j| j as f64 / n as f64).collect();
    let at = |rho: f64| {
        circle_mean(
            |t| {
                let z: Vec<C64> = omega.iter().map(|w| t * w).collect();
                apply_operators(kind, s, c, &z)
            },
            rho,
            32,
        )
    };
    let cmin = c.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(cmin > 0.0) && !c.is_empty() {
        return Err(SpecError::InvalidArgument("oracle shifts must be positive".into()));
    }
    let rho = 0.5;
    let coarse = at(rho)?;
    let fine = at(rho / 2.0)?;
    if (coarse - fine).norm() > 1e-9 * fine.norm().max(1.0) {
        return Err(SpecError::ExtrapolationUnstable(format!(
            "circle means {coarse} and {fine} disagree"
        )));
    }
    Ok(fine)
}

/// `e^{c³/12} / (2√π c^{3/2})`.
pub fn airy_laplace_single(c: f64) -> f64 {
    (c * c * c / 12.0).exp() / (2.0 * PI.sqrt() * c.powf(1.5))
}

fn airy_integrand(c: &[f64], z: &[C64]) -> C64 {
    let n = c.len();
    let mut expo = C64::new(0.0, 0.0);
    let mut cross = C64::new(1.0, 0.0);
    for i in 0..n {
        expo += z[i] * z[i] * c[i];
        for j in i + 1..n {
            let (hi, hj) = (0.5 * c[i], 0.5 * c[j]);
            cross *=
                (z[j] + hj - z[i] - hi) * (z[j] - hj - z[i] + hi) / ((z[j] - hj - z[i] - hi) * (z[j] + hj - z[i] + hi));
        }
    }
    expo.exp() * cross
}

/// Integral over the vertical lines `Re z_i = abscissas[i]`, truncated at `|Im z| ≤ height`.
fn airy_lines(c: &[f64], abscissas: &[f64], height: f64) -> Result<f64> {
    let n = c.len();
    let rule = if n <= 2 { gl200() } else { gl48() };
    let segments = (height / 1.0).ceil() as usize;
    let seg = height / segments as f64;
    let mut ts = Vec::new();
    let mut ws = Vec::new();
    for s in 0..2 * segments {
        let a = -height + s as f64 * seg;
        let half = 0.5 * seg;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            ts.push(a + half + half * x);
            ws.push(w * half);
        }
    }
    let m = ts.len();
    let total = m.pow(n as u32);
    let mut acc = C64::new(0.0, 0.0);
    let mut idx = vec![0usize; n];
    let mut z = vec![C64::new(0.0, 0.0); n];
    for flat in 0..total {
        let mut rest = flat;
        let mut w = 1.0;
        for (i, slot) in idx.iter_mut().enumerate() {
            *slot = rest % m;
            rest /= m;
            z[i] = C64::new(abscissas[i], ts[*slot]);
            w *= ws[*slot];
        }
        acc += airy_integrand(c, &z) * w;
    }
    let scale: f64 =
        c.iter().map(|x| x * x * x / 12.0).sum::<f64>().exp() / c.iter().product::<f64>() / (2.0 * PI).powi(n as i32);
    let value = acc * scale;
    if value.im.abs() > 1e-8 * value.re.abs() {
        return Err(SpecError::Numerical(format!(
            "Airy integral has imaginary part {}",
            value.im
        )));
    }
    Ok(value.re)
}

fn airy_height(c: &[f64]) -> Result<f64> {
    let cmin = c.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(cmin > 0.0) {
        return Err(SpecError::InvalidArgument("Airy parameters must be positive".into()));
    }
    if c.is_empty() || c.len() > 3 {
        return Err(SpecError::InvalidArgument(
            "one to three Airy parameters supported".into(),
        ));
    }
    let height = (40.0 / cmin).sqrt();
    let tail = (-cmin * height * height).exp();
    if tail > 1e-15 {
        return Err(SpecError::TruncationInsufficient(format!("tail {tail:e}")));
    }
    Ok(height)
}

/// `E[Π_i Σ_j e^{c_i 𝔞_j}]` for the Airy point process.
pub fn airy_laplace(c: &[f64]) -> Result<f64> {
    let height = airy_height(c)?;
    let mut abscissas = vec![0.0; c.len()];
    for j in 1..c.len() {
        abscissas[j] = abscissas[j - 1] + 0.5 * (c[j - 1] + c[j]) + 0.5;
    }
    airy_lines(c, &abscissas, height)
}

/// Same integrand with every line on the imaginary axis (all indices distinct).
pub fn airy_distinct(c: &[f64]) -> Result<f64> {
    let height = airy_height(c)?;
    airy_lines(c, &vec![0.0; c.len()], height)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AiryRecursion {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// `M(c1, c2)` against `R(c1, c2) + M(c1 + c2)`.
pub fn airy_recursion_check(c1: f64, c2: f64) -> Result<AiryRecursion> {
    let lhs = airy_laplace(&[c1, c2])?;
    let rhs = airy_distinct(&[c1, c2])? + airy_laplace(&[c1 + c2])?;
    Ok(AiryRecursion {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfn::{bessel_normalized, schur};

    fn spectrum(v: &[f64]) -> Spectrum {
        Spectrum::new(v.to_vec()).unwrap()
    }

    fn close(a: C64, b: f64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn deterministic_moments() {
        let one = MomentRequest::new(
            MomentModel::Deterministic {
                spectrum: spectrum(&[1.0]),
            },
            vec![0.5],
        );
        assert!(close(moment_additive(&one).unwrap().moment, 0.5f64.exp(), 1e-10));
        let two = MomentRequest::new(
            MomentModel::Deterministic {
                spectrum: spectrum(&[1.0, 0.0]),
            },
            vec![0.3, 0.4],
        );
        let expected = (0.3f64.exp() + 1.0) * (0.4f64.exp() + 1.0);
        let got = moment_additive(&two).unwrap().moment;
        assert!(close(got, expected, 1e-9), "{got}");
    }

    #[test]
    fn tensor_moments() {
        let sig = |v: Vec<i64>| Signature::new(v).unwrap();
        let single = MomentRequest::new(
            MomentModel::Tensor {
                signatures: vec![sig(vec![1, 0])],
            },
            vec![0.1],
        );
        assert!(close(moment_tensor(&single).unwrap().moment, 0.2f64.exp() + 1.0, 1e-9));
        let trivial = MomentRequest::new(
            MomentModel::Tensor {
                signatures: vec![sig(vec![0, 0])],
            },
            vec![0.1],
        );
        assert!(close(moment_tensor(&trivial).unwrap().moment, 1.0 + 0.1f64.exp(), 1e-9));
        let square = MomentRequest::new(
            MomentModel::Tensor {
                signatures: vec![sig(vec![1, 0]), sig(vec![1, 0])],
            },
            vec![0.1],
        );
        let expected = 0.75 * (0.3f64.exp() + 1.0) + 0.25 * (0.2f64.exp() + 0.1f64.exp());
        assert!(close(moment_tensor(&square).unwrap().moment, expected, 1e-9));
    }

    #[test]
    fn nesting_is_enforced() {
        let mut req = MomentRequest::new(
            MomentModel::Deterministic {
                spectrum: spectrum(&[1.0, 0.0]),
            },
            vec![0.3, 0.4],
        );
        req.radii = Some(vec![0.5, 0.6]);
        assert!(matches!(moment_additive(&req), Err(SpecError::ContourNesting(_))));
    }

    #[test]
    fn operator_eigenrelations() {
        let one = |z: &[C64]| Ok((z[0] * 0.7).exp());
        let v = difference_operator_oracle(OperatorKind::Bessel, &one, &[0.4], 1).unwrap();
        assert!(close(v, (0.7f64 * 0.4).exp(), 1e-10));
        let bessel = |z: &[C64]| bessel_normalized(&[1.0, 0.0], z);
        let v = difference_operator_oracle(OperatorKind::Bessel, &bessel, &[0.5], 2).unwrap();
        assert!(close(v, 0.5f64.exp() + 1.0, 1e-7));
        let lam = Signature::new(vec![1, 0]).unwrap();
        let dim = schur(&lam, &[C64::new(1.0, 0.0); 2]).unwrap();
        let sch = |z: &[C64]| {
            let x: Vec<C64> = z.iter().map(|v| v.exp()).collect();
            Ok(schur(&lam, &x)? / dim)
        };
        let v = difference_operator_oracle(OperatorKind::Schur, &sch, &[0.1], 2).unwrap();
        assert!(close(v, 0.2f64.exp() + 1.0, 1e-7));
    }

    #[test]
    fn airy_single_closed_form() {
        for c in [0.5, 1.0, 2.0] {
            let v = airy_laplace(&[c]).unwrap();
            assert!((v - airy_laplace_single(c)).abs() < 1e-10, "{c}: {v}");
        }
        assert!((airy_laplace_single(1.0) - 0.306610).abs() < 1e-6);
        assert!((airy_laplace_single(2.0) - 0.194259).abs() < 1e-6);
    }

    #[test]
    fn airy_recursion_and_symmetry() {
        for (a, b) in [(1.0, 1.0), (0.5, 2.0)] {
            let r = airy_recursion_check(a, b).unwrap();
            assert!(r.gap <= 1e-6, "{a},{b}: {r:?}");
        }
        let ab = airy_laplace(&[0.5, 2.0]).unwrap();
        let ba = airy_laplace(&[2.0, 0.5]).unwrap();
        assert!((ab - ba).abs() <= 1e-8, "{ab} {ba}");
    }

    #[test]
    fn contour_matches_oracle() {
        let l = [0.9, 0.2, -0.4];
        let c = [0.3, 0.7];
        let req = MomentRequest::new(MomentModel::Deterministic { spectrum: spectrum(&l) }, c.to_vec());
        let contour = moment_additive(&req).unwrap().moment;
        let s = |z: &[C64]| bessel_normalized(&l, z);
        let oracle = difference_operator_oracle(OperatorKind::Bessel, &s, &c, 3).unwrap();
        assert!((contour - oracle).norm() <= 1e-7 * oracle.norm(), "{contour} {oracle}");
    }
}

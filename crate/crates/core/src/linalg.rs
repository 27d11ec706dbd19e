//! Small dense complex linear algebra: scaled determinants, matrix functions
//! and divided differences through bidiagonal (Opitz) matrices.

use nalgebra::DMatrix;

use crate::error::{Result, SpecError};
use crate::quad::C64;

pub type CMat = DMatrix<C64>;

/// Determinant returned as `mantissa * exp(log_scale)`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledDet {
    pub mantissa: C64,
    pub log_scale: f64,
}

impl ScaledDet {
    pub fn value(&self) -> C64 {
        self.mantissa * self.log_scale.exp()
    }

    /// Natural log of the modulus.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }
}

/// Determinant with per-row magnitude extraction before a full-pivot LU.
pub fn det_scaled(m: &CMat) -> ScaledDet {
    let mut a = m.clone();
    let mut log_scale = 0.0;
    for i in 0..a.nrows() {
        let s = (0..a.ncols()).map(|j| a[(i, j)].norm()).fold(0.0, f64::max);
        if s > 0.0 && s.is_finite() {
            log_scale += s.ln();
            for j in 0..a.ncols() {
                a[(i, j)] /= s;
            }
        }
    }
    let mantissa = a.full_piv_lu().determinant();
    ScaledDet { mantissa, log_scale }
}

pub fn det(m: &CMat) -> C64 {
    det_scaled(m).value()
}

/// Ratio of largest to smallest pivot magnitude of a full-pivot LU after row scaling.
pub fn pivot_condition(m: &CMat) -> f64 {
    let mut a = m.clone();
    for i in 0..a.nrows() {
        let s = (0..a.ncols()).map(|j| a[(i, j)].norm()).fold(0.0, f64::max);
        if s > 0.0 {
            for j in 0..a.ncols() {
                a[(i, j)] /= s;
            }
        }
    }
    let lu = a.full_piv_lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows().min(u.ncols())).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `m x = b`.
pub fn solve(m: &CMat, b: &[C64]) -> Result<Vec<C64>> {
    let rhs = nalgebra::DVector::from_column_slice(b);
    m.clone()
        .full_piv_lu()
        .solve(&rhs)
        .map(|x| x.iter().cloned().collect())
        .ok_or(SpecError::Numerical("singular linear system".into()))
}

/// Lower bidiagonal matrix with `nodes` on the diagonal and ones below it.
pub fn opitz(nodes: &[C64]) -> CMat {
    let n = nodes.len();
    let mut j = CMat::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = nodes[i];
        if i > 0 {
            j[(i, i - 1)] = C64::new(1.0, 0.0);
        }
    }
    j
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / C64::new(2f64.powi(squarings), 0.0);
    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        result += &term;
        let tn = term.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if tn < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Divided differences `f[x_1], f[x_1, x_2], …` of `x ↦ exp(t x)`.
pub fn exp_divided_differences(nodes: &[C64], t: C64) -> Vec<C64> {
    let j = opitz(nodes) * t;
    let e = expm(&j);
    (0..nodes.len()).map(|i| e[(i, 0)]).collect()
}

/// Divided differences of `x ↦ x^m` (requires nonzero nodes when `m < 0`).
pub fn power_divided_differences(nodes: &[C64], m: i64) -> Result<Vec<C64>> {
    let n = nodes.len();
    let mut base = opitz(nodes);
    if m < 0 {
        if nodes.iter().any(|x| x.norm() == 0.0) {
            return Err(SpecError::ZeroArgumentNegativePower);
        }
        base = base.try_inverse().ok_or(SpecError::ZeroArgumentNegativePower)?;
    }
    let mut e = m.unsigned_abs();
    let mut acc = CMat::identity(n, n);
    while e > 0 {
        if e & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    Ok((0..n).map(|i| acc[(i, 0)]).collect())
}

/// `Π_{i<j} (x_i - x_j)`.
pub fn vandermonde(x: &[C64]) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            acc *= x[i] - x[j];
        }
    }
    acc
}

/// `(-1)^(m(m-1)/2)`, relating `Π_{i<j}(x_i - x_j)` to `Π_{i<j}(x_j - x_i)`.
pub fn reversal_sign(m: usize) -> f64 {
    if (m * m.saturating_sub(1) / 2).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn exp_divided_differences_match_formulas() {
        let d = exp_divided_differences(&[c(1.0), c(2.0)], c(1.0));
        assert!((d[0] - c(1f64.exp())).norm() < 1e-14);
        assert!((d[1] - c(2f64.exp() - 1f64.exp())).norm() < 1e-13);
        let conf = exp_divided_differences(&[c(0.0), c(0.0), c(0.0)], c(2.0));
        assert!((conf[2] - c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn power_divided_differences_confluent() {
        let d = power_divided_differences(&[c(1.0), c(1.0), c(1.0)], 4).unwrap();
        assert!((d[1] - c(4.0)).norm() < 1e-14);
        assert!((d[2] - c(6.0)).norm() < 1e-14);
        let inv = power_divided_differences(&[c(2.0), c(4.0)], -1).unwrap();
        assert!((inv[1] - c(-1.0 / 8.0)).norm() < 1e-15);
    }

    #[test]
    fn scaled_determinant() {
        let m = CMat::from_row_slice(2, 2, &[c(1e200), c(2e200), c(3.0), c(4.0)]);
        let d = det_scaled(&m);
        assert!((d.value().re / -2e200 - 1.0).abs() < 1e-12 && d.value().im == 0.0);
    }
}

//! Gauss–Legendre rules and adaptive quadrature.

use num_complex::Complex64;
use std::sync::OnceLock;

use crate::error::{Result, SpecError};

pub type C64 = Complex64;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
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
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Apply the rule on [a, b].
    pub fn integrate<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * *w;
        }
        acc * half
    }

    /// Apply the rule to a real integrand on [a, b].
    pub fn integrate_real<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * w;
        }
        acc * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

macro_rules! cached_rule {
    ($name:ident, $n:expr) => {
        pub fn $name() -> &'static GaussLegendre {
            static RULE: OnceLock<GaussLegendre> = OnceLock::new();
            RULE.get_or_init(|| GaussLegendre::new($n))
        }
    };
}

cached_rule!(gl8, 8);
cached_rule!(gl16, 16);
cached_rule!(gl24, 24);
cached_rule!(gl32, 32);
cached_rule!(gl48, 48);
cached_rule!(gl64, 64);
cached_rule!(gl200, 200);

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            rel_tol: 1e-13,
            abs_tol: 1e-300,
            max_depth: 48,
        }
    }
}

/// Adaptive bisection with a 24-point Gauss–Legendre panel.
///
/// A panel is accepted when its two halves agree with the whole to within a
/// width-proportional share of the tolerance.
pub fn adaptive<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, opts: AdaptiveOptions) -> Result<C64> {
    adaptive_n::<1, _>(|x| [f(x)], a, b, opts).map(|v| v[0])
}

/// Vector-valued version of [`adaptive`]; every component must meet the tolerance.
pub fn adaptive_n<const K: usize, F: FnMut(f64) -> [C64; K]>(
    mut f: F,
    a: f64,
    b: f64,
    opts: AdaptiveOptions,
) -> Result<[C64; K]> {
    let zero = [C64::new(0.0, 0.0); K];
    if a == b {
        return Ok(zero);
    }
    let rule = gl24();
    let panel = |lo: f64, hi: f64, f: &mut F| -> [C64; K] {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (lo + hi);
        let mut acc = zero;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let v = f(mid + half * x);
            for k in 0..K {
                acc[k] += v[k] * (*w * half);
            }
        }
        acc
    };
    let total_width = (b - a).abs();
    let whole = panel(a, b, &mut f);
    let mut scale = [0.0; K];
    for k in 0..K {
        scale[k] = whole[k].norm();
    }
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut acc = zero;
    let mut failed = false;
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(lo, mid, &mut f);
        let right = panel(mid, hi, &mut f);
        let share = ((hi - lo).abs() / total_width).max(1e-3);
        let mut ok = true;
        let mut bad = false;
        for k in 0..K {
            let refined = left[k] + right[k];
            if !refined.re.is_finite() || !refined.im.is_finite() {
                return Err(SpecError::Quadrature(format!("non-finite integrand on [{lo}, {hi}]")));
            }
            scale[k] = scale[k].max(refined.norm());
            let diff = (refined - est[k]).norm();
            let tol = (opts.rel_tol * scale[k]).max(opts.abs_tol) * share;
            if diff > tol {
                ok = false;
                if diff > tol * 1e3 && diff > 1e-8 * scale[k] {
                    bad = true;
                }
            }
        }
        if ok || depth >= opts.max_depth {
            failed |= !ok && bad;
            for k in 0..K {
                acc[k] += left[k] + right[k];
            }
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    if failed {
        return Err(SpecError::Quadrature(format!(
            "adaptive rule did not converge on [{a}, {b}]"
        )));
    }
    Ok(acc)
}

/// Real-valued convenience wrapper around [`adaptive`].
pub fn adaptive_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: AdaptiveOptions) -> Result<f64> {
    adaptive(|x| C64::new(f(x), 0.0), a, b, opts).map(|v| v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 8, 24, 64, 200] {
            let r = GaussLegendre::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let r = GaussLegendre::new(8);
        let v = r.integrate_real(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-10);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = adaptive_real(
            |x| 1.0 / x.sqrt(),
            0.0,
            1.0,
            AdaptiveOptions {
                rel_tol: 1e-10,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn adaptive_oscillatory() {
        let v = adaptive_real(|x| (20.0 * x).cos(), 0.0, 3.0, AdaptiveOptions::default()).unwrap();
        assert!((v - (60f64).sin() / 20.0).abs() < 1e-13);
    }
}

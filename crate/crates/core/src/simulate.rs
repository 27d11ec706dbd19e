//! Monte Carlo for sums of conjugated matrices and exact small-N machinery
//! for tensor products of unitary-group representations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use faer::{c64, Mat, Side};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge::{edge_constants, find_critical_point, EdgeModel, EdgeModelSpec, ModelKind};
use crate::error::{Result, SpecError};
use crate::measure::{Measure, Spectrum};
use crate::symfn::Signature;

const GUE_STREAM: u64 = 0xffff;

/// Random stream keyed by `(seed, trial, summand)`.
pub fn stream(seed: u64, trial: u64, summand: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(1 << 16) ^ summand);
    rng
}

/// Haar unitary from a complex Gaussian QR with the phase correction.
pub fn haar_unitary_with(n: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = Mat::<c64>::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let mut q = qr.compute_Q();
    let r = qr.R();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn haar_unitary(n: usize, seed: u64) -> Mat<c64> {
    haar_unitary_with(n, &mut stream(seed, 0, 0))
}

/// `U diag(ℓ) U*`.
pub fn conjugate_diagonal(u: &Mat<c64>, l: &[f64]) -> Mat<c64> {
    let n = l.len();
    let scaled = Mat::<c64>::from_fn(n, n, |i, j| u[(i, j)] * l[j]);
    &scaled * u.adjoint()
}

fn check_sizes(spectra: &[Spectrum]) -> Result<usize> {
    let n = spectra.first().map_or(0, Spectrum::len);
    if n == 0 {
        return Err(SpecError::InvalidArgument(
            "at least one nonempty spectrum required".into(),
        ));
    }
    if spectra.iter().any(|s| s.len() != n) {
        return Err(SpecError::DimensionMismatch(
            "all spectra must have the same length".into(),
        ));
    }
    Ok(n)
}

/// `diag(ℓ⁽¹⁾) + Σ_{s≥2} U_s diag(ℓ⁽ˢ⁾) U_s*` for one trial.
pub fn sum_matrix(spectra: &[Spectrum], seed: u64, trial: u64) -> Result<Mat<c64>> {
    let n = check_sizes(spectra)?;
    let mut acc = Mat::<c64>::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(spectra[0].values()[i], 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    for (s, spec) in spectra.iter().enumerate().skip(1) {
        let u = haar_unitary_with(n, &mut stream(seed, trial, s as u64));
        acc += conjugate_diagonal(&u, spec.values());
    }
    Ok(acc)
}

/// Decreasing eigenvalues of a Hermitian matrix.
pub fn hermitian_spectrum(a: &Mat<c64>) -> Result<Spectrum> {
    let mut values = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| SpecError::EigenFailure(format!("{e:?}")))?;
    values.reverse();
    Spectrum::new(values)
}

pub fn sample_sum_spectrum_trial(spectra: &[Spectrum], seed: u64, trial: u64) -> Result<Spectrum> {
    hermitian_spectrum(&sum_matrix(spectra, seed, trial)?)
}

pub fn sample_sum_spectrum(spectra: &[Spectrum], seed: u64) -> Result<Spectrum> {
    sample_sum_spectrum_trial(spectra, seed, 0)
}

/// GUE normalized so that its spectrum fills `[-2, 2]`.
pub fn gue_spectrum(n: usize, seed: u64, trial: u64) -> Result<Spectrum> {
    let mut rng = stream(seed, trial, GUE_STREAM);
    let diag = 1.0 / (n as f64).sqrt();
    let off = 1.0 / (2.0 * n as f64).sqrt();
    let mut h = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        let d: f64 = StandardNormal.sample(&mut rng);
        h[(i, i)] = c64::new(d * diag, 0.0);
        for j in 0..i {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            h[(i, j)] = c64::new(re * off, im * off);
            h[(j, i)] = h[(i, j)].conj();
        }
    }
    hermitian_spectrum(&h)
}

/// `N^{2/3} (ℓ_i - E) / V` for the `top_k` largest particles.
pub fn rescale_edge(spec: &Spectrum, edge: f64, scale: f64, n: usize, top_k: usize) -> Vec<f64> {
    let factor = (n as f64).powf(2.0 / 3.0) / scale;
    spec.values().iter().take(top_k).map(|x| factor * (x - edge)).collect()
}

/// Sample mean and standard error.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo estimate of `E[Π_i Σ_j e^{c_i ℓ_j}]` with its standard error.
pub fn mc_moment(spectra: &[Spectrum], c: &[f64], trials: usize, seed: u64) -> Result<(f64, f64)> {
    check_sizes(spectra)?;
    if trials == 0 {
        return Err(SpecError::InvalidArgument("trials must be positive".into()));
    }
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let spec = sample_sum_spectrum_trial(spectra, seed, t)?;
            Ok(c.iter()
                .map(|ci| spec.values().iter().map(|x| (ci * x).exp()).sum::<f64>())
                .product())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_stderr(&values))
}

const MAX_ROWS: usize = 4;
const MAX_BOXES: i64 = 20;

fn normalize(sig: &Signature) -> (Vec<i64>, i64) {
    let base = *sig.parts().last().expect("nonempty signature");
    (sig.parts().iter().map(|x| x - base).collect(), base)
}

fn partitions_containing(mu: &[i64], total: i64, cap: i64) -> Vec<Vec<i64>> {
    fn rec(mu: &[i64], row: usize, prev: i64, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if row == mu.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for part in (mu[row]..=prev.min(mu[row] + left)).rev() {
            cur.push(part);
            rec(mu, row + 1, part, left - (part - mu[row]), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    let grow = total - mu.iter().sum::<i64>();
    rec(mu, 0, cap, grow, &mut Vec::new(), &mut out);
    out
}

struct Filling<'a> {
    lambda: &'a [i64],
    mu: &'a [i64],
    nu: &'a [i64],
    cells: Vec<(usize, i64)>,
    grid: Vec<Vec<usize>>,
    counts: Vec<i64>,
}

impl Filling<'_> {
    fn count(&mut self, pos: usize) -> u64 {
        if pos == self.cells.len() {
            return 1;
        }
        let (row, col) = self.cells[pos];
        let colu = col as usize;
        let upper = if col + 1 < self.lambda[row] {
            self.grid[row][colu + 1]
        } else {
            self.nu.len()
        };
        let lower = if row > 0 && col >= self.mu[row - 1] {
            self.grid[row - 1][colu] + 1
        } else {
            1
        };
        let mut total = 0;
        for k in lower..=upper {
            if self.counts[k - 1] >= self.nu[k - 1] {
                continue;
            }
            if k > 1 && self.counts[k - 1] + 1 > self.counts[k - 2] {
                continue;
            }
            self.counts[k - 1] += 1;
            self.grid[row][colu] = k;
            total += self.count(pos + 1);
            self.counts[k - 1] -= 1;
        }
        self.grid[row][colu] = 0;
        total
    }
}

fn lr_count(lambda: &[i64], mu: &[i64], nu: &[i64]) -> u64 {
    let mut cells = Vec::new();
    for row in 0..lambda.len() {
        for col in (mu[row]..lambda[row]).rev() {
            cells.push((row, col));
        }
    }
    let width = lambda.first().copied().unwrap_or(0) as usize;
    let mut filling = Filling {
        lambda,
        mu,
        nu,
        cells,
        grid: vec![vec![0; width]; lambda.len()],
        counts: vec![0; nu.len()],
    };
    filling.count(0)
}

/// Littlewood–Richardson coefficients `c^λ_{μν}` for `GL(N)` signatures.
pub fn lr_coefficients(mu: &Signature, nu: &Signature) -> Result<BTreeMap<Signature, u64>> {
    let n = mu.len();
    if nu.len() != n {
        return Err(SpecError::DimensionMismatch("signatures of different lengths".into()));
    }
    if n > MAX_ROWS {
        return Err(SpecError::TooLarge(format!("N = {n} exceeds {MAX_ROWS}")));
    }
    let (m, m0) = normalize(mu);
    let (v, v0) = normalize(nu);
    let total = m.iter().sum::<i64>() + v.iter().sum::<i64>();
    if total > MAX_BOXES {
        return Err(SpecError::TooLarge(format!("{total} boxes exceed {MAX_BOXES}")));
    }
    let mut out = BTreeMap::new();
    for lambda in partitions_containing(&m, total, m[0] + v[0]) {
        let coeff = lr_count(&lambda, &m, &v);
        if coeff > 0 {
            out.insert(Signature::new(lambda.iter().map(|x| x + m0 + v0).collect())?, coeff);
        }
    }
    Ok(out)
}

/// `dim V_λ = Π_{i<j} (λ_i - λ_j + j - i)/(j - i)`.
pub fn schur_dim(lambda: &Signature) -> u128 {
    let p = lambda.parts();
    let mut dim = Ratio::from_integer(1i128);
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            dim *= Ratio::new((p[i] - p[j]) as i128 + (j - i) as i128, (j - i) as i128);
        }
    }
    debug_assert!(dim.is_integer());
    dim.to_integer() as u128
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorEntry {
    pub signature: Signature,
    pub probability: f64,
    pub numerator: i128,
    pub denominator: i128,
}

/// Law of the highest weight of a uniformly random irreducible component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorDistribution {
    pub entries: Vec<TensorEntry>,
    #[serde(rename = "N")]
    pub n: usize,
}

impl TensorDistribution {
    pub fn point_mass(lambda: Signature) -> Self {
        let n = lambda.len();
        TensorDistribution {
            entries: vec![TensorEntry {
                signature: lambda,
                probability: 1.0,
                numerator: 1,
                denominator: 1,
            }],
            n,
        }
    }

    pub fn probability(&self, lambda: &Signature) -> f64 {
        self.entries
            .iter()
            .find(|e| &e.signature == lambda)
            .map_or(0.0, |e| e.probability)
    }

    /// `Σ_λ ρ(λ) Σ_j e^{c(λ_j + N - j)}`.
    pub fn moment(&self, c: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| e.probability * e.signature.shifted().iter().map(|x| (c * *x as f64).exp()).sum::<f64>())
            .sum()
    }

    /// Expected CDF of the particles `(λ_j + N - j)/N - offset`, each spread over a cell of width `1/N`
    /// centred on it.
    pub fn cell_cdf(&self, offset: f64, x: f64) -> f64 {
        let n = self.n as f64;
        self.entries
            .iter()
            .map(|e| {
                let filled: f64 = e
                    .signature
                    .shifted()
                    .iter()
                    .map(|k| (n * (x + offset) - *k as f64 + 0.5).clamp(0.0, 1.0))
                    .sum();
                e.probability * filled / n
            })
            .sum()
    }

    /// Expected CDF of the unsmoothed particles `(λ_j + N - j)/N`.
    pub fn atom_cdf(&self, x: f64) -> f64 {
        let n = self.n as f64;
        self.entries
            .iter()
            .map(|e| e.probability * e.signature.shifted().iter().filter(|k| **k as f64 / n <= x).count() as f64 / n)
            .sum()
    }
}

/// Distance of the `⊗` of `factors` from `target`: cell-smoothed particles shifted by the exact mean offset
/// `(n - 1)/(2N)` of an `n`-fold product, and the raw particles.
pub fn quantized_global_distance(factors: &[Signature], target: &Measure) -> Result<(f64, f64)> {
    let dist = rho_v(factors)?;
    let n = dist.n as f64;
    let offset = (factors.len() as f64 - 1.0) / (2.0 * n);
    let (lo, hi) = target.support();
    let top = dist
        .entries
        .iter()
        .flat_map(|e| e.signature.shifted())
        .max()
        .unwrap_or(0) as f64
        / n;
    let bottom = dist
        .entries
        .iter()
        .flat_map(|e| e.signature.shifted())
        .min()
        .unwrap_or(0) as f64
        / n;
    let (a, b) = (lo.min(bottom - offset) - 1.0 / n, hi.max(top) + 1.0 / n);
    let cell = cdf_distance(|x| dist.cell_cdf(offset, x), |x| target.cdf(x), a, b);
    let atoms = cdf_distance(|x| dist.atom_cdf(x), |x| target.cdf(x), a, b);
    Ok((cell, atoms))
}

fn cdf_distance<F: Fn(f64) -> f64, G: Fn(f64) -> f64>(f: F, g: G, a: f64, b: f64) -> f64 {
    let steps = 20_000;
    let h = (b - a) / steps as f64;
    (0..steps)
        .map(|k| {
            let x = a + (k as f64 + 0.5) * h;
            (f(x) - g(x)).abs() * h
        })
        .sum()
}

/// `ρ(λ) = c_λ dim V_λ / Π dim V_{λ⁽ˢ⁾}` for `⊗_s V_{λ⁽ˢ⁾}`, folded left to right.
pub fn rho_v(factors: &[Signature]) -> Result<TensorDistribution> {
    let Some(first) = factors.first() else {
        return Err(SpecError::InvalidArgument("no factors".into()));
    };
    let n = first.len();
    let mut mult: BTreeMap<Signature, u64> = BTreeMap::from([(first.clone(), 1)]);
    for f in &factors[1..] {
        let mut next = BTreeMap::new();
        for (lambda, c) in &mult {
            for (kappa, d) in lr_coefficients(lambda, f)? {
                *next.entry(kappa).or_insert(0) += c * d;
            }
        }
        mult = next;
    }
    let total: i128 = factors.iter().map(|f| schur_dim(f) as i128).product();
    let mut entries = Vec::with_capacity(mult.len());
    let mut check = Ratio::from_integer(0i128);
    for (lambda, c) in mult.into_iter().rev() {
        let p = Ratio::new(c as i128 * schur_dim(&lambda) as i128, total);
        check += p;
        entries.push(TensorEntry {
            probability: *p.numer() as f64 / *p.denom() as f64,
            numerator: *p.numer(),
            denominator: *p.denom(),
            signature: lambda,
        });
    }
    if check != Ratio::from_integer(1) {
        return Err(SpecError::Numerical(format!("tensor probabilities sum to {check}")));
    }
    Ok(TensorDistribution { entries, n })
}

/// Draws of `λ` mapped to decreasing particles `(λ_j + N - j)/N`.
pub fn sample_tensor_particles(dist: &TensorDistribution, seed: u64, trials: usize) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, 0, 0);
    let n = dist.n as f64;
    (0..trials)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = &dist.entries[dist.entries.len() - 1];
            for e in &dist.entries {
                acc += e.probability;
                if u < acc {
                    pick = e;
                    break;
                }
            }
            pick.signature.shifted().iter().map(|x| *x as f64 / n).collect()
        })
        .collect()
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample critical value `sqrt(-ln(α/2)/2) sqrt((n+m)/(nm))`.
pub fn ks_critical(n1: usize, n2: usize, alpha: f64) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    (-(alpha / 2.0).ln() / 2.0).sqrt() * ((a + b) / (a * b)).sqrt()
}

/// Kolmogorov distance between the empirical law of `samples` and `cdf`.
pub fn ks_to_cdf<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let s = sorted(samples);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = cdf(*x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// `∫ |F_n - F|` over `[lo, hi]` extended to cover the samples.
pub fn wasserstein_to_cdf<F: Fn(f64) -> f64>(samples: &[f64], cdf: F, lo: f64, hi: f64) -> f64 {
    let s = sorted(samples);
    let n = s.len() as f64;
    let a = lo.min(s[0]);
    let b = hi.max(s[s.len() - 1]);
    cdf_distance(|x| s.partition_point(|y| *y <= x) as f64 / n, cdf, a, b)
}

pub fn wasserstein_to_measure(samples: &[f64], m: &Measure) -> f64 {
    let (lo, hi) = m.support();
    wasserstein_to_cdf(samples, |x| m.cdf(x), lo, hi)
}

/// `bin_left,bin_right,count` rows over the sample range.
pub fn histogram_csv(samples: &[f64], bins: usize) -> String {
    let mut out = String::from("bin_left,bin_right,count\n");
    if samples.is_empty() || bins == 0 {
        return out;
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for x in samples {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    for (k, c) in counts.iter().enumerate() {
        let left = lo + k as f64 * width;
        let _ = writeln!(out, "{:.9e},{:.9e},{}", left, left + width, c);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: EdgeModelSpec,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_probes")]
    pub c_probes: Vec<f64>,
}

fn default_top_k() -> usize {
    10
}

fn default_probes() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceStat {
    pub c: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub laplace: Vec<LaplaceStat>,
    pub ks_vs_gue: f64,
    pub gue_laplace: Vec<LaplaceStat>,
    pub edge: f64,
    pub scale: f64,
    pub z_crit: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    /// Rescaled top `top_k` particles per trial.
    pub rescaled: Vec<Vec<f64>>,
    pub gue_rescaled: Vec<Vec<f64>>,
}

impl ExperimentOutput {
    pub fn top_particles(&self) -> Vec<f64> {
        self.rescaled.iter().map(|r| r[0]).collect()
    }

    pub fn histogram_csv(&self, bins: usize) -> String {
        histogram_csv(&self.top_particles(), bins)
    }
}

fn laplace_stats(rescaled: &[Vec<f64>], probes: &[f64]) -> Vec<LaplaceStat> {
    probes
        .iter()
        .map(|c| {
            let values: Vec<f64> = rescaled.iter().map(|r| r.iter().map(|x| (c * x).exp()).sum()).collect();
            let (mean, stderr) = mean_stderr(&values);
            LaplaceStat { c: *c, mean, stderr }
        })
        .collect()
}

/// Spectra `(quantile_spectrum(m_s, N))` repeated by multiplicity.
pub fn model_spectra(model: &EdgeModel) -> Vec<Spectrum> {
    model
        .measures
        .iter()
        .zip(&model.multiplicities)
        .flat_map(|(m, k)| std::iter::repeat_n(m.quantile_spectrum(model.size), *k))
        .collect()
}

/// Rescaled top particles of `trials` GUE draws at size `n`.
pub fn gue_rescaled(n: usize, trials: usize, seed: u64, top_k: usize) -> Result<Vec<Vec<f64>>> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| Ok(rescale_edge(&gue_spectrum(n, seed, t)?, 2.0, 1.0, n, top_k)))
        .collect()
}

/// Samples the matrix model, rescales its top particles at the predicted edge
/// and compares them with a GUE baseline of equal size.
pub fn edge_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let model = EdgeModel::from_spec(&cfg.model)?;
    if model.kind != ModelKind::Additive {
        return Err(SpecError::InvalidModel(
            "edge experiments sample the additive matrix model".into(),
        ));
    }
    if cfg.trials == 0 || model.size < 2 || cfg.top_k == 0 {
        return Err(SpecError::InvalidArgument(
            "need trials ≥ 1, N ≥ 2 and top_k ≥ 1".into(),
        ));
    }
    let report = find_critical_point(&model);
    let (edge, scale) = edge_constants(&report)?;
    let spectra = model_spectra(&model);
    let n = model.size;
    let top_k = cfg.top_k.min(n);
    let rescaled = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            Ok(rescale_edge(
                &sample_sum_spectrum_trial(&spectra, cfg.seed, t)?,
                edge,
                scale,
                n,
                top_k,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let gue = gue_rescaled(n, cfg.trials, cfg.seed, top_k)?;
    let top: Vec<f64> = rescaled.iter().map(|r| r[0]).collect();
    let gue_top: Vec<f64> = gue.iter().map(|r| r[0]).collect();
    let summary = ExperimentSummary {
        laplace: laplace_stats(&rescaled, &cfg.c_probes),
        ks_vs_gue: ks_two_sample(&top, &gue_top),
        gue_laplace: laplace_stats(&gue, &cfg.c_probes),
        edge,
        scale,
        z_crit: report.z_crit,
        n,
        trials: cfg.trials,
    };
    Ok(ExperimentOutput {
        summary,
        rescaled,
        gue_rescaled: gue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(v: &[i64]) -> Signature {
        Signature::new(v.to_vec()).unwrap()
    }

    #[test]
    fn haar_is_unitary() {
        for n in [1, 3, 8] {
            let u = haar_unitary(n, 7);
            let prod = &u * u.adjoint();
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[(i, j)] - c64::new(target, 0.0)).norm() < 1e-12);
                }
            }
        }
        assert!((haar_unitary(1, 3)[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_column_moment() {
        let n = 4;
        let draws = 10_000;
        let values: Vec<f64> = (0..draws)
            .map(|t| haar_unitary_with(n, &mut stream(11, t, 0))[(0, 0)].norm_sqr())
            .collect();
        let (mean, se) = mean_stderr(&values);
        assert!((mean - 0.25).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn single_summand_and_trace() {
        let a = Spectrum::new(vec![2.0, 0.5, -1.0]).unwrap();
        let b = Spectrum::new(vec![1.0, 1.0, 0.0]).unwrap();
        let one = sample_sum_spectrum(std::slice::from_ref(&a), 1).unwrap();
        for (x, y) in one.values().iter().zip(a.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        let two = sample_sum_spectrum(&[a, b], 5).unwrap();
        assert!((two.values().iter().sum::<f64>() - 3.5).abs() < 1e-9);
    }

    #[test]
    fn rescaling() {
        let s = Spectrum::new(vec![3.0, 2.0, 1.0]).unwrap();
        let r = rescale_edge(&s, 3.0, 2.0, 8, 2);
        assert_eq!(r[0], 0.0);
        assert!((r[1] + 2.0).abs() < 1e-12);
        assert_eq!(rescale_edge(&s, 1.0, 1.0, 1, 3), vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn cell_cdf_of_trivial_representation_is_uniform() {
        let dist = TensorDistribution::point_mass(sig(&[0, 0, 0, 0]));
        for x in [-0.1, 0.0, 0.3, 0.55, 1.0, 1.2] {
            let expected = (x + 0.125f64).clamp(0.0, 1.0);
            assert!((dist.cell_cdf(0.0, x) - expected).abs() < 1e-12, "{x}");
        }
        assert!((dist.atom_cdf(0.5) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn quantized_distance_of_point_mass_target() {
        let one = sig(&[1, 0]);
        let (cells, atoms) =
            quantized_global_distance(std::slice::from_ref(&one), &Measure::uniform(0.0, 1.0).unwrap()).unwrap();
        assert!((cells - 0.25).abs() < 1e-3, "{cells}");
        assert!((atoms - 0.25).abs() < 1e-3, "{atoms}");
    }

    #[test]
    fn mc_moment_trivial_cases() {
        let a = Spectrum::new(vec![1.0, 0.0]).unwrap();
        let (m, se) = mc_moment(std::slice::from_ref(&a), &[0.5], 5, 1).unwrap();
        assert!((m - (0.5f64.exp() + 1.0)).abs() < 1e-12 && se < 1e-12);
        let (m, _) = mc_moment(&[a.clone(), a], &[0.0], 10, 1).unwrap();
        assert_eq!(m, 2.0);
    }

    #[test]
    fn lr_examples() {
        let pair = lr_coefficients(&sig(&[1, 0]), &sig(&[1, 0])).unwrap();
        assert_eq!(pair, BTreeMap::from([(sig(&[2, 0]), 1), (sig(&[1, 1]), 1)]));
        let trivial = lr_coefficients(&sig(&[2, 1, 0]), &sig(&[0, 0, 0])).unwrap();
        assert_eq!(trivial, BTreeMap::from([(sig(&[2, 1, 0]), 1)]));
        let three = lr_coefficients(&sig(&[1, 0, 0]), &sig(&[1, 1, 0])).unwrap();
        assert_eq!(three, BTreeMap::from([(sig(&[2, 1, 0]), 1), (sig(&[1, 1, 1]), 1)]));
        let adjoint = lr_coefficients(&sig(&[2, 1, 0]), &sig(&[2, 1, 0])).unwrap();
        assert_eq!(adjoint[&sig(&[3, 2, 1])], 2);
        let shifted = lr_coefficients(&sig(&[0, -1]), &sig(&[1, 0])).unwrap();
        assert_eq!(shifted, BTreeMap::from([(sig(&[1, -1]), 1), (sig(&[0, 0]), 1)]));
        assert!(matches!(
            lr_coefficients(&sig(&[1; 5]), &sig(&[0; 5])),
            Err(SpecError::TooLarge(_))
        ));
    }

    #[test]
    fn dimensions() {
        assert_eq!(schur_dim(&sig(&[1, 0])), 2);
        assert_eq!(schur_dim(&sig(&[2, 0])), 3);
        assert_eq!(schur_dim(&sig(&[2, 1, 0])), 8);
    }

    #[test]
    fn tensor_square() {
        let d = rho_v(&[sig(&[1, 0]), sig(&[1, 0])]).unwrap();
        assert_eq!((d.entries[0].numerator, d.entries[0].denominator), (3, 4));
        assert_eq!(d.probability(&sig(&[1, 1])), 0.25);
        assert!((d.moment(0.1) - 2.344037).abs() < 1e-6);
        let single = rho_v(&[sig(&[2, 1, 0])]).unwrap();
        assert_eq!(single.entries.len(), 1);
        assert_eq!(single.entries[0].probability, 1.0);
    }

    #[test]
    fn tensor_sampling() {
        let d = rho_v(&[sig(&[1, 0]), sig(&[1, 0])]).unwrap();
        let draws = sample_tensor_particles(&d, 3, 10_000);
        let hits = draws.iter().filter(|p| p[0] == 1.5).count() as f64 / 10_000.0;
        let se = (0.75f64 * 0.25 / 10_000.0).sqrt();
        assert!((hits - 0.75).abs() < 3.0 * se);
        assert!(draws.iter().all(|p| p.windows(2).all(|w| w[0] > w[1])));
        let point = TensorDistribution::point_mass(sig(&[1, 0]));
        assert!(sample_tensor_particles(&point, 1, 5)
            .iter()
            .all(|p| p == &vec![1.0, 0.0]));
    }

    #[test]
    fn distances() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
        let samples: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_to_cdf(&samples, |x| x.clamp(0.0, 1.0)) <= 1e-3 + 1e-12);
        let u = Measure::uniform(0.0, 1.0).unwrap();
        assert!(wasserstein_to_measure(&samples, &u) < 1e-3);
        assert!((ks_critical(100, 100, 0.01) - 0.2302).abs() < 1e-3);
    }

    #[test]
    fn histogram_counts() {
        let csv = histogram_csv(&[0.0, 0.5, 1.0, 1.0], 2);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(2).unwrap().ends_with(",3"));
    }
}

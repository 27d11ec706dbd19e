use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specedge::edge::{
    edge_constants, find_critical_point, sqrt_edge_indicator, tau, tau_constant, tau_optimized, EdgeModel, ModelKind,
};
use specedge::observables::{
    airy_laplace, airy_laplace_single, airy_recursion_check, difference_operator_oracle, moment_additive,
    moment_tensor, MomentModel, MomentRequest, OperatorKind,
};
use specedge::simulate::{
    edge_experiment, gue_rescaled, ks_critical, ks_two_sample, mc_moment, quantized_global_distance, rho_v,
    sample_sum_spectrum, wasserstein_to_measure, ExperimentConfig,
};
use specedge::subordination::{
    convolution_right_edge, markov_krein_forward, markov_krein_forward_detailed, markov_krein_inverse,
    quantized_convolve, subordination_at, Convolution, FixedPointConfig,
};
use specedge::symfn::{
    bessel, bessel_normalized, schur, ssym_lift_asymptotic, ssym_lift_contour_k1, ssym_lift_det,
    ssym_lift_det_normalized, ssym_lift_matrix_form, susy_schur_contour_q, susy_schur_det, LiftArgs, ZeroKernel,
};
use specedge::{Measure, Result, Signature, Spectrum, C64};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn criterion_1() -> Result<Outcome> {
    let start = Instant::now();
    let t = tau(&Measure::rademacher())?;
    let elapsed = start.elapsed();
    outcome(
        (t - 82.0).abs() < 1e-6 && elapsed < Duration::from_secs(1),
        format!("tau={t} in {elapsed:.2?}"),
    )
}

fn criterion_2() -> Result<Outcome> {
    let t = tau_optimized(&Measure::rademacher())?;
    let k = tau_constant();
    outcome(
        (67.5..=68.5).contains(&t) && (k - 3.59112).abs() < 1e-4,
        format!("tau_optimized={t:.4} constant={k:.6}"),
    )
}

fn criterion_3() -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let v = sqrt_edge_indicator(&Measure::jacobi(0.0, p, 0.0, 1.0)?);
        pass &= (v - p * p).abs() < 1e-5;
        detail.push(format!("p={p}: {v:.8}"));
    }
    outcome(pass, detail.join(", "))
}

fn criterion_4() -> Result<Outcome> {
    let start = Instant::now();
    let image = markov_krein_forward_detailed(&Measure::uniform(0.0, 1.0)?)?;
    let atom = image.atoms.iter().find(|a| a.x.abs() < 1e-6).map_or(0.0, |a| a.w);
    let wide = Measure::uniform(0.0, 2.0)?;
    let back = markov_krein_inverse(&markov_krein_forward(&wide)?)?;
    let mut sup = 0.0f64;
    for i in 0..=400 {
        let x = 0.02 + 1.96 * i as f64 / 400.0;
        sup = sup.max((back.density(x).unwrap_or(f64::NAN) - 0.5).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        (atom - 1.0).abs() < 1e-5 && sup <= 1e-4 && elapsed < Duration::from_secs(10),
        format!("atom={atom:.8} round-trip sup error={sup:.2e} in {elapsed:.2?}"),
    )
}

fn criterion_5() -> Result<Outcome> {
    let r = Measure::rademacher();
    let cfg = FixedPointConfig::default();
    let s = subordination_at(&r, &r, C64::new(3.0, 1e-12), cfg)?;
    let omega = s.omegas[0].re;
    let g = s.g_value.re;
    let closed = (omega - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-8 && (g - 1.0 / 5f64.sqrt()).abs() < 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut lifted = 0;
    for _ in 0..50 {
        let z = C64::new(rng.random_range(-4.0..4.0), rng.random_range(0.01..3.0));
        let sample = subordination_at(&r, &r, z, cfg)?;
        if sample.omegas.iter().all(|w| w.im > z.im) {
            lifted += 1;
        }
    }
    outcome(
        closed && lifted == 50,
        format!("omega={omega:.10} G={g:.10} strict lift {lifted}/50"),
    )
}

fn distinct_spectrum(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let mut l: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        l.sort_by(|a, b| b.total_cmp(a));
        if l.windows(2).all(|w| w[0] - w[1] > 0.05) {
            return l;
        }
    }
}

fn criterion_6() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for _ in 0..24 {
        let n = rng.random_range(1..=4usize);
        let k = rng.random_range(1..=2usize);
        let cs: Vec<f64> = (0..k).map(|_| 1.0 - rng.random::<f64>()).collect();
        let l = distinct_spectrum(&mut rng, n);
        let exact: f64 = cs
            .iter()
            .map(|ci| l.iter().map(|x| (ci * x).exp()).sum::<f64>())
            .product();
        let req = MomentRequest::new(
            MomentModel::Deterministic {
                spectrum: Spectrum::new(l.clone())?,
            },
            cs.clone(),
        );
        let contour = moment_additive(&req)?.moment;
        let oracle = difference_operator_oracle(OperatorKind::Bessel, &|z| bessel_normalized(&l, z), &cs, n)?;
        worst = worst.max(rel(contour, c(exact))).max(rel(oracle, c(exact)));

        let mut parts: Vec<i64> = (0..n).map(|_| rng.random_range(-2..=3)).collect();
        parts.sort_by(|a, b| b.cmp(a));
        let lambda = Signature::new(parts)?;
        let shifted = lambda.shifted();
        let exact: f64 = cs
            .iter()
            .map(|ci| shifted.iter().map(|x| (ci * *x as f64).exp()).sum::<f64>())
            .product();
        let req = MomentRequest::new(
            MomentModel::Tensor {
                signatures: vec![lambda.clone()],
            },
            cs.clone(),
        );
        let contour = moment_tensor(&req)?.moment;
        let dim = schur(&lambda, &vec![c(1.0); n])?;
        let character = |z: &[C64]| {
            let x: Vec<C64> = z.iter().map(|v| v.exp()).collect();
            Ok(schur(&lambda, &x)? / dim)
        };
        let oracle = difference_operator_oracle(OperatorKind::Schur, &character, &cs, n)?;
        worst = worst.max(rel(contour, c(exact))).max(rel(oracle, c(exact)));
        cases += 2;
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-7 && elapsed < Duration::from_secs(60),
        format!("{cases} cases, worst relative error {worst:.2e} in {elapsed:.2?}"),
    )
}

fn criterion_7() -> Result<Outcome> {
    let mut pass = true;
    let mut detail = Vec::new();
    for n in [2usize, 3] {
        let mut l = vec![0.0; n];
        l[0] = 1.0;
        let spectrum = Spectrum::new(l)?;
        let spectra = vec![spectrum.clone(), spectrum];
        let req = MomentRequest::new(
            MomentModel::Additive {
                spectra: spectra.clone(),
            },
            vec![0.5],
        );
        let contour = moment_additive(&req)?.moment.re;
        let (mean, stderr) = mc_moment(&spectra, &[0.5], 100_000, 7)?;
        let z = (contour - mean).abs() / stderr;
        pass &= z <= 3.0;
        detail.push(format!(
            "N={n}: contour={contour:.6} mc={mean:.6}±{stderr:.1e} ({z:.2} se)"
        ));
    }
    outcome(pass, detail.join(", "))
}

fn criterion_8() -> Result<Outcome> {
    let f = Signature::new(vec![1, 0])?;
    let dist = rho_v(&[f.clone(), f.clone()])?;
    let two = Signature::new(vec![2, 0])?;
    let pair = Signature::new(vec![1, 1])?;
    let exact = dist.entries.len() == 2
        && dist
            .entries
            .iter()
            .any(|e| e.signature == two && e.numerator == 3 && e.denominator == 4)
        && dist
            .entries
            .iter()
            .any(|e| e.signature == pair && e.numerator == 1 && e.denominator == 4);
    let got = moment_tensor(&MomentRequest::new(
        MomentModel::Tensor {
            signatures: vec![f.clone(), f],
        },
        vec![0.1],
    ))?
    .moment
    .re;
    let oracle = dist.moment(0.1);
    outcome(
        exact && (got - oracle).abs() < 1e-6 && (oracle - 2.344037).abs() < 1e-6,
        format!("rho exact={exact} moment={got:.9} oracle={oracle:.9}"),
    )
}

fn criterion_9() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        let closed = (t * t * t / 12.0f64).exp() / (2.0 * std::f64::consts::PI.sqrt() * t.powf(1.5));
        worst = worst.max((airy_laplace(&[t])? - closed).abs());
        worst = worst.max((airy_laplace_single(t) - closed).abs());
    }
    let gaps = [airy_recursion_check(1.0, 1.0)?.gap, airy_recursion_check(0.5, 2.0)?.gap];
    let swap = (airy_laplace(&[0.5, 2.0])? - airy_laplace(&[2.0, 0.5])?).abs();
    outcome(
        worst < 1e-6 && gaps.iter().all(|g| *g <= 1e-6) && swap <= 1e-8,
        format!(
            "closed form {worst:.1e}, recursion gaps {:.1e}/{:.1e}, swap {swap:.1e}",
            gaps[0], gaps[1]
        ),
    )
}

fn random_c(rng: &mut ChaCha8Rng, scale: f64) -> C64 {
    C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

fn criterion_10() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut cancel = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=4usize);
        let k = rng.random_range(1..=2usize);
        let l = distinct_spectrum(&mut rng, n);
        let z: Vec<C64> = (0..n).map(|_| random_c(&mut rng, 0.8)).collect();
        let w: Vec<C64> = (0..k).map(|_| random_c(&mut rng, 0.8)).collect();
        let p = random_c(&mut rng, 0.5);
        let mut args = z.clone();
        args.extend(&w);
        let lifted = ssym_lift_det(&l, &LiftArgs::new(p, args, w))?;
        cancel = cancel.max(rel(lifted, bessel(&l, &z)?));
    }

    let l = [1.0, 0.3, -0.4];
    let p = C64::new(0.2, 0.1);
    let u = [C64::new(0.7, 0.2), C64::new(-0.6, 0.5)];
    let v = [C64::new(-0.5, 0.3), C64::new(0.4, -0.2)];
    let xi = [c(0.4), c(-0.5), c(0.1)];
    let mut args = u.to_vec();
    args.extend(xi);
    let det = ssym_lift_det(&l, &LiftArgs::new(p, args, v.to_vec()))? / bessel(&l, &xi)?;
    let matrix = ssym_lift_matrix_form(&l, p, &u, &v, &xi)?;
    let mut forms = rel(matrix, det);
    let p1 = C64::new(0.1, 1e-6);
    let (u1, v1) = (C64::new(0.8, 0.3), C64::new(1.1, -0.4));
    let det1 = ssym_lift_det_normalized(&l, &LiftArgs::new(p1, vec![u1, c(0.0), c(0.0), c(0.0)], vec![v1]))?;
    let kernel1 = ZeroKernel::new(&l, p1, u1)?.normalized(v1)?;
    let contour1 = ssym_lift_contour_k1(&l, p1, u1, v1)?;
    forms = forms.max(rel(kernel1, det1)).max(rel(contour1, det1));

    let s = Signature::new(vec![2, 1, 0])?;
    let q = 0.5;
    let g = [c(1.0), c(q), c(q * q)];
    let mut susy = 0.0f64;
    for (x, y) in [(c(0.35), c(1.7)), (C64::new(0.8, 0.3), C64::new(2.2, -0.6))] {
        let det = susy_schur_det(&s, &[x, g[0], g[1], g[2]], &[y])? / schur(&s, &g)?;
        let contour = susy_schur_contour_q(&s, x, y, q)?;
        susy = susy.max((contour - det).norm() / det.norm().max(1.0));
    }
    outcome(
        cancel <= 1e-9 && forms <= 1e-6 && susy <= 1e-6,
        format!("cancellation {cancel:.1e}, det/matrix/kernel/contour {forms:.1e}, q-contour {susy:.1e}"),
    )
}

fn criterion_11() -> Result<Outcome> {
    let m = Measure::uniform(0.0, 1.0)?;
    let p = C64::new(0.5, 1e-6);
    let (u, v) = (c(3f64.ln()), c((5.0f64 / 3.0).ln()));
    let mut errs = Vec::new();
    for n in [20usize, 40, 80] {
        let l = m.quantile_spectrum(n).values().to_vec();
        let exact = ZeroKernel::new(&l, p, u * n as f64)?.normalized(v * n as f64)?;
        let approx = ssym_lift_asymptotic(&m, p, &[u], &[v], n)?;
        errs.push((exact / approx - 1.0).norm());
    }
    outcome(
        errs[0] > errs[1] && errs[1] > errs[2] && errs[2] <= 0.05,
        format!(
            "|ratio - 1| at N=20,40,80: {:.4} {:.4} {:.4}",
            errs[0], errs[1], errs[2]
        ),
    )
}

fn criterion_12() -> Result<Outcome> {
    let semi = EdgeModel::power(Measure::semicircle(0.0, 2.0)?, 1, ModelKind::Additive)?;
    let report = find_critical_point(&semi);
    let (e, v) = edge_constants(&report)?;
    let analytic = (report.z_crit - 1.0).abs() < 1e-6 && (e - 2.0).abs() < 1e-6 && (v - 1.0).abs() < 1e-6;
    let m1 = Measure::jacobi(1.0, 1.0, 0.0, 1.0)?;
    let m2 = Measure::jacobi(1.0, 1.0, -1.0, 1.0)?;
    let pair = EdgeModel::new(vec![m1.clone(), m2.clone()], vec![1, 1], ModelKind::Additive, 1)?;
    let z = find_critical_point(&pair).z_crit;
    let conv = convolution_right_edge(&Convolution::Pair(&m1, &m2))?;
    let gap = (z - conv.g_at_edge).abs();
    outcome(
        analytic && gap <= 1e-3,
        format!(
            "semicircle (z, E, V)=({:.8}, {e:.8}, {v:.8}); Jacobi pair z={z:.7} G(E+)={:.7}",
            report.z_crit, conv.g_at_edge
        ),
    )
}

fn criterion_13() -> Result<Outcome> {
    let start = Instant::now();
    let model = EdgeModel::new(
        vec![Measure::jacobi(0.5, -0.5, 0.0, 1.0)?],
        vec![2],
        ModelKind::Additive,
        300,
    )?;
    let cfg = ExperimentConfig {
        model: model.to_spec(),
        trials: 400,
        seed: 1,
        top_k: 10,
        c_probes: vec![1.0],
    };
    let out = edge_experiment(&cfg)?;
    let laplace = out.summary.laplace[0].mean;
    let target = 0.306610;
    let laplace_ok = (laplace - target).abs() <= 0.15 * target;
    let ks = out.summary.ks_vs_gue;
    let top = |runs: Vec<Vec<f64>>| runs.iter().map(|r| r[0]).collect::<Vec<_>>();
    let control = ks_two_sample(
        &top(gue_rescaled(300, 400, 11, 1)?),
        &top(gue_rescaled(300, 400, 12, 1)?),
    );
    let critical = ks_critical(400, 400, 0.01);
    let elapsed = start.elapsed();
    outcome(
        laplace_ok && ks <= 0.12 && control < critical && elapsed < Duration::from_secs(600),
        format!(
            "Laplace(1)={laplace:.5} (target {target}), KS vs GUE={ks:.4}, GUE control={control:.4} < {critical:.4}, {elapsed:.2?}"
        ),
    )
}

fn criterion_14() -> Result<Outcome> {
    let n = 500;
    let half = n / 2;
    let signs: Vec<f64> = (0..n).map(|i| if i < half { 1.0 } else { -1.0 }).collect();
    let rademacher = Spectrum::new(signs)?;
    let sample = sample_sum_spectrum(&[rademacher.clone(), rademacher], 14)?;
    let arcsine = Measure::jacobi(-0.5, -0.5, -2.0, 2.0)?;
    let w1 = wasserstein_to_measure(sample.values(), &arcsine);

    let m = Measure::uniform(0.0, 2.0)?;
    let target = quantized_convolve(&m, &m)?.measure;
    let lambda = m.signature_spectrum(4)?;
    let (cells, atoms) = quantized_global_distance(&[lambda.clone(), lambda], &target)?;
    outcome(
        w1 <= 0.05 && cells <= 0.1,
        format!("arcsine W1={w1:.4}; quantized N=4 W1={cells:.4} (raw particles {atoms:.4})"),
    )
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 14] = [
        ("Rademacher threshold is 82", criterion_1),
        ("optimized threshold and its constant", criterion_2),
        ("power-law edge indicator", criterion_3),
        ("Markov-Krein atom and round trip", criterion_4),
        ("Rademacher subordination closed form", criterion_5),
        ("moment formulas on deterministic models", criterion_6),
        ("two-summand moment vs Monte Carlo", criterion_7),
        ("tensor-square decomposition and moment", criterion_8),
        ("Airy Laplace transform", criterion_9),
        ("lift identities", criterion_10),
        ("lift asymptotics", criterion_11),
        ("analytic edge pipeline", criterion_12),
        ("statistical edge pipeline", criterion_13),
        ("global laws", criterion_14),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let status = if pass { "PASS" } else { "FAIL" };
        let _ = writeln!(
            err,
            "[{status}] {:>2}. {name}: {detail} ({:.2?})",
            i + 1,
            start.elapsed()
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

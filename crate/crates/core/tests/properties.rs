use proptest::prelude::*;
use specedge::observables::{airy_laplace, default_radii, moment_additive, moment_tensor, MomentModel, MomentRequest};
use specedge::simulate::{
    hermitian_spectrum, lr_coefficients, rho_v, sample_sum_spectrum, schur_dim, sum_matrix, TensorDistribution,
};
use specedge::subordination::{subordination_at, FixedPointConfig};
use specedge::symfn::schur;
use specedge::{Measure, Signature, Spectrum, C64};

fn spectrum_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..=max_len)
}

fn signature_strategy(n: usize, top: i64) -> impl Strategy<Value = Signature> {
    prop::collection::vec(0..=top, n).prop_map(|mut parts| {
        parts.sort_by(|a, b| b.cmp(a));
        Signature::new(parts).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn moment_is_independent_of_admissible_radii(l in spectrum_strategy(3), c in prop::collection::vec(0.05f64..1.0, 1..=2)) {
        let spectrum = Spectrum::from_unsorted(l).unwrap();
        let base = MomentRequest::new(MomentModel::Deterministic { spectrum }, c.clone());
        let mut wide = base.clone();
        wide.radii = Some(default_radii(&c).iter().map(|r| 2.0 * r).collect());
        let a = moment_additive(&base).unwrap().moment;
        let b = moment_additive(&wide).unwrap().moment;
        prop_assert!((a - b).norm() <= 1e-8 * a.norm(), "{a} {b}");
    }

    #[test]
    fn additive_moment_is_positive(l1 in spectrum_strategy(3), c in 0.05f64..1.0) {
        let n = l1.len();
        let s1 = Spectrum::from_unsorted(l1).unwrap();
        let s2 = Spectrum::from_unsorted((0..n).map(|j| j as f64 / n as f64).collect()).unwrap();
        let req = MomentRequest::new(MomentModel::Additive { spectra: vec![s1, s2] }, vec![c]);
        let m = moment_additive(&req).unwrap().moment;
        prop_assert!(m.re > 0.0 && m.im.abs() <= 1e-8 * m.re, "{m}");
    }

    #[test]
    fn tensor_moment_matches_decomposition(a in signature_strategy(2, 2), b in signature_strategy(2, 2), c in 0.05f64..0.8) {
        let dist = rho_v(&[a.clone(), b.clone()]).unwrap();
        let req = MomentRequest::new(MomentModel::Tensor { signatures: vec![a, b] }, vec![c]);
        let m = moment_tensor(&req).unwrap().moment.re;
        prop_assert!((m - dist.moment(c)).abs() <= 1e-7 * m.abs(), "{m} {}", dist.moment(c));
    }

    #[test]
    fn dimension_matches_schur_at_ones(lambda in signature_strategy(3, 4)) {
        let ones = vec![C64::new(1.0, 0.0); 3];
        let value = schur(&lambda, &ones).unwrap();
        prop_assert!((value.re - schur_dim(&lambda) as f64).abs() <= 1e-8 * value.re.abs().max(1.0));
    }

    #[test]
    fn littlewood_richardson_preserves_dimension(mu in signature_strategy(3, 3), nu in signature_strategy(3, 2)) {
        let total: u128 = lr_coefficients(&mu, &nu).unwrap().iter().map(|(k, c)| *c as u128 * schur_dim(k)).sum();
        prop_assert_eq!(total, schur_dim(&mu) * schur_dim(&nu));
    }

    #[test]
    fn tensor_probabilities_are_normalized(mu in signature_strategy(3, 2), nu in signature_strategy(3, 2)) {
        let dist: TensorDistribution = rho_v(&[mu, nu]).unwrap();
        let total: f64 = dist.entries.iter().map(|e| e.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(dist.entries.iter().all(|e| e.probability > 0.0));
    }

    #[test]
    fn sum_trace_is_additive(l1 in spectrum_strategy(4), seed in 0u64..1000) {
        let n = l1.len();
        let s1 = Spectrum::from_unsorted(l1).unwrap();
        let s2 = Spectrum::from_unsorted((0..n).map(|j| (j as f64).sin()).collect()).unwrap();
        let spec = hermitian_spectrum(&sum_matrix(&[s1.clone(), s2.clone()], seed, 0).unwrap()).unwrap();
        let trace: f64 = s1.values().iter().chain(s2.values()).sum();
        let got: f64 = spec.values().iter().sum();
        prop_assert!((got - trace).abs() < 1e-10);
    }

    #[test]
    fn subordination_lifts_the_half_plane(x in -3.0f64..3.0, y in 0.01f64..2.0) {
        let a = Measure::uniform(-1.0, 1.0).unwrap();
        let b = Measure::semicircle(0.5, 1.0).unwrap();
        let z = C64::new(x, y);
        let s = subordination_at(&a, &b, z, FixedPointConfig::default()).unwrap();
        prop_assert!(s.omegas.iter().all(|w| w.im > z.im));
        prop_assert!(s.g_value.im < 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn airy_transform_is_symmetric(a in 0.3f64..2.0, b in 0.3f64..2.0) {
        let ab = airy_laplace(&[a, b]).unwrap();
        let ba = airy_laplace(&[b, a]).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-8 * ab.abs().max(1.0), "{ab} {ba}");
    }
}

#[test]
fn sampling_is_reproducible() {
    let s = Spectrum::new(vec![1.0, 0.5, -0.25, -1.0]).unwrap();
    let spectra = [s.clone(), s];
    let a = sample_sum_spectrum(&spectra, 42).unwrap();
    let b = sample_sum_spectrum(&spectra, 42).unwrap();
    let c = sample_sum_spectrum(&spectra, 43).unwrap();
    assert_eq!(a.values(), b.values());
    assert_ne!(a.values(), c.values());
}

//! Deterministic identity and oracle checks behind the `verify` subcommand.

use specedge::edge::{
    edge_constants, find_critical_point, sqrt_edge_indicator, tau, tau_constant, EdgeModel, ModelKind,
};
use specedge::observables::{
    airy_laplace, airy_laplace_single, airy_recursion_check, difference_operator_oracle, moment_additive,
    moment_tensor, MomentModel, MomentRequest, OperatorKind,
};
use specedge::simulate::{lr_coefficients, rho_v};
use specedge::subordination::{markov_krein_forward_detailed, subordination_at, FixedPointConfig};
use specedge::symfn::{bessel, bessel_normalized, ssym_lift_det, ssym_lift_matrix_form, ssym_lift_zero, LiftArgs};
use specedge::{Measure, Result, Signature, Spectrum, C64};

use crate::format::sig9;

/// Named check: returns whether it passed and the observed quantity.
pub struct Check {
    pub name: &'static str,
    pub run: fn() -> Result<(bool, String)>,
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn tau_rademacher() -> Result<(bool, String)> {
    let t = tau(&Measure::rademacher())?;
    Ok(((t - 82.0).abs() < 1e-6, sig9(t)))
}

fn tau_root() -> Result<(bool, String)> {
    let k = tau_constant();
    Ok(((k - 3.59112).abs() < 1e-4, sig9(k)))
}

fn power_law_indicator() -> Result<(bool, String)> {
    let m = Measure::jacobi(0.0, 2.0, 0.0, 1.0)?;
    let v = sqrt_edge_indicator(&m);
    Ok(((v - 4.0).abs() < 1e-5, sig9(v)))
}

fn mk_uniform() -> Result<(bool, String)> {
    let r = markov_krein_forward_detailed(&Measure::uniform(0.0, 1.0)?)?;
    let atom = r.atoms.iter().find(|a| a.x.abs() < 1e-6).map_or(0.0, |a| a.w);
    Ok(((atom - 1.0).abs() < 1e-5, sig9(atom)))
}

fn rademacher_subordination() -> Result<(bool, String)> {
    let r = Measure::rademacher();
    let s = subordination_at(&r, &r, C64::new(3.0, 1e-12), FixedPointConfig::default())?;
    let omega = (3.0 + 5f64.sqrt()) / 2.0;
    let ok = (s.omegas[0].re - omega).abs() < 1e-8 && (s.g_value.re - 1.0 / 5f64.sqrt()).abs() < 1e-8;
    Ok((ok, format!("omega={} G={}", sig9(s.omegas[0].re), sig9(s.g_value.re))))
}

fn moment_deterministic() -> Result<(bool, String)> {
    let l = [1.0, 0.25, -0.5];
    let cs = vec![0.4, 0.9];
    let req = MomentRequest::new(
        MomentModel::Deterministic {
            spectrum: Spectrum::new(l.to_vec())?,
        },
        cs.clone(),
    );
    let got = moment_additive(&req)?.moment;
    let exact: f64 = cs
        .iter()
        .map(|ci| l.iter().map(|x| (ci * x).exp()).sum::<f64>())
        .product();
    let oracle = difference_operator_oracle(OperatorKind::Bessel, &|z| bessel_normalized(&l, z), &cs, l.len())?;
    let ok = (got - exact).norm() < 1e-7 * exact && (oracle - exact).norm() < 1e-7 * exact;
    Ok((ok, format!("contour={} oracle={}", sig9(got.re), sig9(oracle.re))))
}

fn tensor_square() -> Result<(bool, String)> {
    let f = Signature::new(vec![1, 0])?;
    let dist = rho_v(&[f.clone(), f.clone()])?;
    let lr = lr_coefficients(&f, &f)?;
    let req = MomentRequest::new(
        MomentModel::Tensor {
            signatures: vec![f.clone(), f],
        },
        vec![0.1],
    );
    let got = moment_tensor(&req)?.moment.re;
    let ok = lr.len() == 2
        && dist.entries[0].numerator == 3
        && dist.entries[0].denominator == 4
        && (got - dist.moment(0.1)).abs() < 1e-6;
    Ok((ok, format!("moment={}", sig9(got))))
}

fn airy_transform() -> Result<(bool, String)> {
    let one = airy_laplace(&[1.0])?;
    let rec = airy_recursion_check(1.0, 1.0)?;
    let ok = (one - airy_laplace_single(1.0)).abs() < 1e-6 && rec.gap <= 1e-6;
    Ok((ok, format!("M(1)={} gap={:.1e}", sig9(one), rec.gap)))
}

fn lift_cancellation() -> Result<(bool, String)> {
    let l = [0.8, -0.1];
    let z = [c(0.3), C64::new(-0.2, 0.4)];
    let w = C64::new(0.5, -0.3);
    let args = LiftArgs::new(c(0.2), vec![z[0], z[1], w], vec![w]);
    let lifted = ssym_lift_det(&l, &args)?;
    let plain = bessel(&l, &z)?;
    let gap = (lifted - plain).norm() / plain.norm();
    Ok((gap <= 1e-9, format!("relative gap {gap:.1e}")))
}

fn lift_forms() -> Result<(bool, String)> {
    let l = [1.0, 0.3, -0.4];
    let p = C64::new(0.2, 0.1);
    let u = [C64::new(0.7, 0.2), C64::new(-0.6, 0.5)];
    let v = [C64::new(-0.5, 0.3), C64::new(0.4, -0.2)];
    let xi = [c(0.4), c(-0.5), c(0.1)];
    let zero = ssym_lift_zero(&l, p, &u, &v)?;
    let mut args = u.to_vec();
    args.extend(xi);
    let det = ssym_lift_det(&l, &LiftArgs::new(p, args, v.to_vec()))? / bessel(&l, &xi)?;
    let matrix = ssym_lift_matrix_form(&l, p, &u, &v, &xi)?;
    let mut zero_args = u.to_vec();
    zero_args.extend([c(0.0); 3]);
    let det0 = specedge::symfn::ssym_lift_det_normalized(&l, &LiftArgs::new(p, zero_args, v.to_vec()))?;
    let gap = ((zero - det0).norm() / det0.norm()).max((matrix - det).norm() / det.norm());
    Ok((gap <= 1e-6, format!("relative gap {gap:.1e}")))
}

fn semicircle_edge() -> Result<(bool, String)> {
    let model = EdgeModel::power(Measure::semicircle(0.0, 2.0)?, 1, ModelKind::Additive)?;
    let report = find_critical_point(&model);
    let (e, v) = edge_constants(&report)?;
    let ok = (report.z_crit - 1.0).abs() < 1e-6 && (e - 2.0).abs() < 1e-6 && (v - 1.0).abs() < 1e-6;
    Ok((ok, format!("z={} E={} V={}", sig9(report.z_crit), sig9(e), sig9(v))))
}

pub const CHECKS: &[Check] = &[
    Check {
        name: "square-root edge threshold of the Rademacher law is 82",
        run: tau_rademacher,
    },
    Check {
        name: "optimized threshold constant solves log c = (c+1)/c",
        run: tau_root,
    },
    Check {
        name: "power-law edge indicator equals p^2",
        run: power_law_indicator,
    },
    Check {
        name: "Markov-Krein image of Uniform(0,1) is the atom at 0",
        run: mk_uniform,
    },
    Check {
        name: "subordination closed form for the Rademacher pair",
        run: rademacher_subordination,
    },
    Check {
        name: "Bessel moment formula reproduces deterministic observables",
        run: moment_deterministic,
    },
    Check {
        name: "Schur moment formula matches the tensor-square decomposition",
        run: tensor_square,
    },
    Check {
        name: "Airy Laplace transform closed form and two-point recursion",
        run: airy_transform,
    },
    Check {
        name: "lift cancellation of a matched pair of arguments",
        run: lift_cancellation,
    },
    Check {
        name: "lift determinant, kernel and matrix forms agree",
        run: lift_forms,
    },
    Check {
        name: "semicircle edge constants (1, 2, 1)",
        run: semicircle_edge,
    },
];

/// Runs every check; returns the printed table and the failure count.
pub fn run_suite() -> (String, usize) {
    let mut table = String::new();
    let mut failures = 0;
    for check in CHECKS {
        let (status, detail) = match (check.run)() {
            Ok((true, d)) => ("PASS", d),
            Ok((false, d)) => ("FAIL", d),
            Err(e) => ("FAIL", e.to_string()),
        };
        if status == "FAIL" {
            failures += 1;
        }
        table.push_str(&format!("{status}  {}  [{detail}]\n", check.name));
    }
    table.push_str(&format!("{} checks, {failures} failed", CHECKS.len()));
    (table, failures)
}

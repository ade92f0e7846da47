use std::collections::BTreeMap;
use std::sync::Arc;

use hkperiod::curve::{Poly, PolynomialCurve};
use hkperiod::disk_chains::f_lambda;
use hkperiod::indefinite_linear::QuadraticSpace;
use hkperiod::linalg::{self, C64};
use hkperiod::nevanlinna::*;
use hkperiod::period_domain::{h_alg, omega_tangent_basis, random_point_in_omega, TwistorLine};
use hkperiod::quadrature::PolarRule;
use hkperiod::rng::{complex_normal, seeded};
use hkperiod::tolerances::{acceptance, CIRCLE_NODES};
use rand::Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn space(p: usize) -> Arc<QuadraticSpace<f64>> {
    Arc::new(QuadraticSpace::standard(p).unwrap())
}

fn constants() -> Constants {
    Constants {
        kappa_geom: 2.0,
        kappa_jensen: 0.5,
        gamma: (1..=19).map(|p| (p, 2.0)).collect::<BTreeMap<_, _>>(),
    }
}

/// `e₁ + z(e₂ + e₄/2)`, entire in `Ω` for signature `(3, 2)`.
fn negative_line() -> PolynomialCurve {
    let e = |i| linalg::cunit_vector(5, i);
    let v = linalg::axpy(&e(1), c(0.5, 0.0), &e(3));
    PolynomialCurve::line(&e(0), &v).unwrap()
}

fn twistor_conic() -> PolynomialCurve {
    let w: Vec<Vec<f64>> = (0..3).map(|i| linalg::unit_vector(22, i)).collect();
    TwistorLine::new(space(19), &w).unwrap().parametrize()
}

fn test_curves() -> Vec<(Arc<QuadraticSpace<f64>>, PolynomialCurve)> {
    vec![
        (space(1), f_lambda(c(0.0, 1.0)).unwrap().to_model()),
        (space(2), negative_line()),
        (space(19), twistor_conic()),
    ]
}

#[test]
fn jensen_constant_is_one_half() {
    let cal = calibrate_kappa_jensen(2.0, &[2.0, 5.0, 10.0]).unwrap();
    assert_eq!(cal.ratios.len(), 9);
    assert!((cal.kappa_jensen - 0.5).abs() < 1e-6 * 0.5, "{}", cal.kappa_jensen);
    assert!(cal.spread < 1e-6);
}

#[test]
fn oracle_laplacians_match_closed_forms() {
    let mut rng = seeded(21);
    for o in JensenOracle::standard() {
        for _ in 0..20 {
            let z = complex_normal(&mut rng);
            let fd = 0.25 * hkperiod::period_domain::laplacian(|w| o.value(z + w), 1e-3);
            assert!((fd - o.ddbar(z)).abs() < 1e-5 * o.ddbar(z).max(1e-3));
        }
    }
}

#[test]
fn residual_of_the_first_main_theorem_is_constant() {
    let k = constants();
    let radii = geometric_grid(1.0, 50.0, 8);
    for (s, curve) in test_curves() {
        let table = verify_prop67(&s, &curve, &radii, &k, &PolarRule::default()).unwrap();
        assert!(table.variation() < acceptance::PROP67_VARIATION, "p={} var={}", s.p(), table.variation());
        assert!(table.fs_nondecreasing());
        let p1 = proximity(&s, &curve, 1.0, CIRCLE_NODES).unwrap();
        assert!((table.rows[0].residual + 0.5 * p1).abs() < 1e-9);
    }
}

#[test]
fn fubini_study_characteristic_matches_circle_means() {
    let k = constants();
    let radii = [1.0, 3.0, 20.0];
    for (s, curve) in test_curves() {
        let t = characteristic(&s, &curve, Metric::FubiniStudy, &radii, k.kappa_geom, &PolarRule::default()).unwrap();
        for (r, v) in radii.iter().zip(&t) {
            let j = curve_characteristic_via_jensen(&s, &curve, Metric::FubiniStudy, *r, CIRCLE_NODES).unwrap();
            assert!((v - 0.5 * j).abs() < 1e-5 * j.abs().max(1.0), "r={r} {v} {j}");
        }
    }
}

#[test]
fn fubini_study_growth_is_logarithmic_in_the_degree() {
    let curve = negative_line();
    let s = space(2);
    let radii = [1.0, 1e3, 1e6];
    let t = characteristic(&s, &curve, Metric::FubiniStudy, &radii, 2.0, &PolarRule::default()).unwrap();
    let slope = (t[2] - t[1]) / (1e6f64.ln() - 1e3f64.ln());
    let expected = 4.0 * std::f64::consts::PI * 0.5 * 1.0;
    assert!((slope - expected).abs() < 1e-4 * expected, "{slope}");
}

#[test]
fn epsilon_cones_shrink_as_epsilon_grows() {
    let mut rng = seeded(22);
    let s = space(3);
    let (mut kept, mut printed_violations) = (0, 0);
    for _ in 0..400 {
        let x = random_point_in_omega(&s, &mut rng).unwrap();
        let basis = omega_tangent_basis(&x).unwrap();
        let v = basis.iter().fold(vec![c(0.0, 0.0); 6], |acc, b| linalg::axpy(&acc, complex_normal(&mut rng), b));
        let eps = rng.gen::<f64>();
        let eta = eps + rng.gen::<f64>();
        let small = EpsilonMetric::new(&s, eps).unwrap();
        let big = EpsilonMetric::new(&s, eta).unwrap();
        let in_small = epsilon_cone_test(&small, &x, &v);
        let in_big = epsilon_cone_test(&big, &x, &v);
        if in_big {
            kept += 1;
            assert!(in_small);
            assert!(h_alg(&s, x.rep(), &v, &v).re > 0.0);
        }
        if in_small && !in_big {
            printed_violations += 1;
        }
    }
    assert!(kept > 20);
    assert!(printed_violations > 0);
}

#[test]
fn phi_eps_is_bounded_by_two_over_eps() {
    let mut rng = seeded(23);
    for eps in [0.25, 1.0, 4.0] {
        let s = space(2);
        let sup = phi_eps_bound(&s, eps, 2000, &mut rng).unwrap();
        assert!(sup <= 2.0 / eps, "eps={eps} sup={sup}");
        if eps == 1.0 {
            assert!(sup > 1.0 / eps);
        }
    }
}

#[test]
fn gamma_is_two_for_every_p() {
    let mut rng = seeded(24);
    for p in [1usize, 2, 5, 19] {
        let est = calibrate_gamma(&space(p), 4, 4, &mut rng).unwrap();
        assert!((est.gamma - 2.0).abs() < 1e-4, "p={p} {}", est.gamma);
        assert!(est.spread < acceptance::HSC_SPREAD);
    }
}

fn disk_samples(radius: f64, n: usize, seed: u64) -> Vec<C64> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| C64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * 6.3))
        .collect()
}

#[test]
fn curvature_identity_on_positive_disks() {
    let tol = acceptance::CURVATURE_IDENTITY_REL;
    let model = f_lambda(c(0.1, 0.1)).unwrap().to_model();
    let s1 = space(1);
    let samples = disk_samples(0.8, 40, 25);
    let good = theorem615_identity_check(&s1, &model, &samples, 2.0, 1e-3).unwrap();
    assert!(good.max_residual < tol, "{}", good.max_residual);
    let bad = theorem615_identity_check(&s1, &model, &samples, 1.8, 1e-3).unwrap();
    assert!(bad.max_residual > acceptance::SENSITIVITY_FACTOR * good.max_residual.max(tol / 10.0));

    let mut rng = seeded(26);
    let s = space(4);
    let x = random_point_in_omega(&s, &mut rng).unwrap();
    let basis = omega_tangent_basis(&x).unwrap();
    let v = basis
        .iter()
        .map(|b| (b, h_alg(&s, x.rep(), b, b).re))
        .find(|(_, n)| *n > 0.0)
        .unwrap()
        .0
        .clone();
    let w: Vec<C64> = (0..7).map(|_| 0.2 * complex_normal(&mut rng)).collect();
    let quad = PolynomialCurve::new(
        (0..7).map(|k| Poly(vec![x.rep()[k], v[k], w[k]])).collect(),
    )
    .unwrap();
    let check = theorem615_identity_check(&s, &quad, &disk_samples(0.05, 30, 27), 2.0, 1e-3).unwrap();
    assert!(check.max_residual < tol, "{}", check.max_residual);
}

#[test]
fn curvature_identity_near_a_ramification_point() {
    let s = space(1);
    let curve = f_lambda(c(0.1, 0.1)).unwrap().to_model().compose_power(2);
    let ram = ramification_points(&curve).unwrap();
    assert!(ram.iter().any(|z| z.norm() < 1e-8));
    let mut samples = disk_samples(0.6, 30, 28);
    samples.push(c(1e-4, 0.0));
    let check = theorem615_identity_check(&s, &curve, &samples, 2.0, 1e-3).unwrap();
    assert_eq!(check.excluded, 1);
    assert!(check.max_residual < acceptance::CURVATURE_IDENTITY_REL, "{}", check.max_residual);
    let at = second_fundamental_density(&s, &curve, c(0.0, 0.0)).unwrap();
    assert_eq!(at.ramification, 1);
    let near = second_fundamental_density(&s, &curve, c(1e-5, 0.0)).unwrap();
    assert_eq!(near.ramification, 0);
    assert!((at.density - near.density).abs() < 1e-6 * at.density.abs().max(1.0));
}

#[test]
fn second_fundamental_density_is_projective() {
    let s = space(1);
    let curve = f_lambda(c(0.1, 0.1)).unwrap().to_model();
    let rescaled = curve.times(&Poly(vec![c(1.0, 0.0), c(0.2, -0.1), c(0.0, 0.05)]));
    for z in disk_samples(0.7, 20, 29) {
        let a = second_fundamental_density(&s, &curve, z).unwrap();
        let b = second_fundamental_density(&s, &rescaled, z).unwrap();
        assert_eq!(a.ramification, 0);
        assert!((a.density - b.density).abs() < 1e-9 * a.density.abs().max(a.norm2));
    }
}

#[test]
fn smt_report_rows() {
    let s = space(1);
    let curve = f_lambda(c(1e-4, 1e-4)).unwrap().to_model();
    let rule = PolarRule {
        angular: 64,
        rel_tol: 1e-4,
        ..PolarRule::default()
    };
    let rows = smt_report(&s, &curve, &[2.0, 10.0, 40.0], &constants(), &rule).unwrap();
    assert_eq!(rows.len(), 3);
    for w in rows.windows(2) {
        assert!(w[1].gamma_t_omega > w[0].gamma_t_omega);
    }
    assert!(rows.iter().all(|r| r.t_sigma.is_finite() && r.log_term.is_finite()));
    assert!(smt_report(&s, &curve, &[1.0], &constants(), &rule).is_err());
    let bad = f_lambda(c(0.1, 0.1)).unwrap().to_model();
    assert!(smt_report(&s, &bad, &[5.0], &constants(), &rule).is_err());
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero on any unexpected outcome.
//!
//! Criterion 10 is registered as known-false: the bound it asks for does not
//! hold for the ε-metric, and the nesting it asks for holds only in the
//! opposite direction. It is evaluated as stated, reported as FAIL, and does
//! not affect the exit code unless it starts passing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use hkperiod::curve::{Poly, PolynomialCurve};
use hkperiod::d2_model::{self, iota_chart_derivatives, iota_pairs, metric_matrix, D2Point};
use hkperiod::disk_chains::{
    c_alpha, connect_d, connect_d2, f_lambda, lemma57_chain, positivity_profile, positivity_roots,
    two_disk_chain, DiskChain,
};
use hkperiod::indefinite_linear::{signed_orthonormal_basis, QuadraticSpace, Signature};
use hkperiod::lattice_transport::{isometry_fixing_n, isometry_residual, orientation_det};
use hkperiod::linalg::{self, RVec, C64};
use hkperiod::nevanlinna::{
    calibrate_gamma, calibrate_kappa_jensen, epsilon_cone_test, geometric_grid, phi_eps_bound, ramification_points,
    sample_hsc, summarize_gamma, tangent_norm2, theorem615_identity_check, verify_prop67, Constants, EpsilonMetric,
};
use hkperiod::period_domain::{
    curvature_factor_calibrate, gs_metric, h_alg, metric_matrix_chart, metric_signature_at, omega_tangent_basis,
    random_point_in_d, random_point_in_omega, Domain, PeriodPoint, TangentRep, TwistorLine,
};
use hkperiod::quadrature::PolarRule;
use hkperiod::rng::{complex_normal, normal, normal_vec, seeded, SeededRng};
use hkperiod::tolerances::{acceptance as tol, FD_STEP, LINK_RESIDUAL};
use rand::Rng;

type Space = QuadraticSpace<f64>;

/// Criteria whose statement is known not to hold for this model.
const KNOWN_FALSE: &[usize] = &[10];

/// Runtime budgets in seconds; criterion 12 has none.
const BUDGET: [Option<f64>; 12] = [
    Some(1.0),
    Some(10.0),
    Some(10.0),
    Some(5.0),
    Some(30.0),
    Some(300.0),
    Some(10.0),
    Some(60.0),
    Some(120.0),
    Some(10.0),
    Some(60.0),
    None,
];

const SEED: u64 = 20260;
const CLI_SEED: u64 = 7;
const CHAIN_SCHEDULE: [u64; 4] = [10, 100, 1000, 10000];
const GOLDEN_REL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = Result<Outcome, String>;

fn outcome(pass: bool, detail: String) -> Check {
    Ok(Outcome { pass, detail })
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn space(p: usize) -> Arc<Space> {
    Arc::new(Space::standard(p).expect("standard space"))
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (hi - lo) / mean.abs()
}

// --- 1 -------------------------------------------------------------------

fn d2_metric_closed_form() -> Check {
    let mut rng = seeded(SEED + 1);
    let s = space(1);
    let one = c(1.0, 0.0);
    let (mut checked, mut exact, mut worst, mut diag_ok, mut null_worst) = (0, 0, 0.0f64, true, 0.0f64);
    while checked < 100 {
        let (x, y) = (complex_normal(&mut rng), complex_normal(&mut rng));
        if D2Point::from_chart(x, y).is_err() {
            continue;
        }
        let m = metric_matrix(x, y).map_err(e)?;
        let w = x * y.conj() - one;
        if m[0][1] == one / (w * w) {
            exact += 1;
        }
        diag_ok &= m[0][0] == c(0.0, 0.0) && m[1][1] == c(0.0, 0.0);
        let sigma = iota_pairs(&[x, one], &[y, one]);
        let base = PeriodPoint::in_d(s.clone(), &sigma).map_err(e)?;
        let k = (0..4).max_by(|a, b| sigma[*a].norm().total_cmp(&sigma[*b].norm())).unwrap();
        let lambda = base.rep()[k] / sigma[k];
        let (dx, dy) = iota_chart_derivatives(x, y);
        let scaled = |d: [C64; 4]| d.iter().map(|z| lambda * z).collect::<Vec<_>>();
        let tx = TangentRep::new(&base, &scaled(dx)).map_err(e)?;
        let ty = TangentRep::new(&base, &scaled(dy)).map_err(e)?;
        let via = gs_metric(&tx, &ty).map_err(e)?;
        worst = worst.max((via - m[0][1]).norm() / m[0][1].norm());
        null_worst = null_worst.max(gs_metric(&tx, &tx).map_err(e)?.norm() / m[0][1].norm());
        checked += 1;
    }
    outcome(
        exact == 100 && diag_ok && worst < tol::METRIC_MATRIX_REL && null_worst < tol::METRIC_MATRIX_REL,
        format!("exact {exact}/100, pullback rel {worst:.1e}, diagonal zero {diag_ok}, pushed diagonal {null_worst:.1e}"),
    )
}

// --- 2 -------------------------------------------------------------------

fn base_point(p: usize) -> Vec<C64> {
    let mut o = vec![c(0.0, 0.0); 3 + p];
    o[0] = c(1.0, 0.0);
    o[1] = c(0.0, 1.0);
    o
}

fn diag_error(m: &[Vec<C64>], kappa: f64, target: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in m.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            let want = if i == j { target[i] } else { 0.0 };
            worst = worst.max((kappa * z - want).norm());
        }
    }
    worst
}

fn chart_matrices_at_base_point() -> Check {
    let mut rng = seeded(SEED + 2);
    let mut ratios = Vec::new();
    for p in [1usize, 2, 19] {
        let cal = curvature_factor_calibrate(&space(p), 20, &mut rng).map_err(e)?;
        ratios.extend(cal.ratios);
    }
    let kappa = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let kappa_spread = spread(&ratios);
    let mut worst = 0.0f64;
    for p in [1usize, 2, 5, 19] {
        let s = space(p);
        let o = base_point(p);
        let mut ambient = vec![-0.5, -1.0];
        ambient.extend(std::iter::repeat_n(1.0, p));
        let mut restricted = vec![-1.0];
        restricted.extend(std::iter::repeat_n(1.0, p));
        let m_omega = metric_matrix_chart(&s, &o, Domain::Omega).map_err(e)?;
        let m_d = metric_matrix_chart(&s, &o, Domain::D).map_err(e)?;
        worst = worst.max(diag_error(&m_omega, kappa, &ambient));
        worst = worst.max(diag_error(&m_d, kappa, &restricted));
    }
    outcome(
        kappa_spread < tol::KAPPA_GEOM_SPREAD && worst < tol::KAPPA_GEOM_SPREAD,
        format!(
            "kappa_geom {kappa:.8} over {} sections, spread {kappa_spread:.1e}, max entry error {worst:.1e}",
            ratios.len()
        ),
    )
}

// --- 3 -------------------------------------------------------------------

fn signatures() -> Check {
    let mut rng = seeded(SEED + 3);
    let mut failures = Vec::new();
    for p in [1usize, 2, 5, 19] {
        let s = space(p);
        for _ in 0..100 {
            let x = random_point_in_d(&s, &mut rng).map_err(e)?;
            let got = metric_signature_at(&x).map_err(e)?;
            if got != Signature::new(p, 1, 0) {
                failures.push(format!("D p={p}: {got:?}"));
            }
            let y = random_point_in_omega(&s, &mut rng).map_err(e)?;
            let got = metric_signature_at(&y).map_err(e)?;
            if got != Signature::new(p, 2, 0) {
                failures.push(format!("Omega p={p}: {got:?}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("800 points, {} failures {}", failures.len(), failures.first().cloned().unwrap_or_default()),
    )
}

// --- 4 -------------------------------------------------------------------

fn positivity_of_f_lambda() -> Check {
    let mut rng = seeded(SEED + 4);
    let mut profile_worst = 0.0f64;
    for _ in 0..200 {
        let lambda = complex_normal(&mut rng);
        let t = complex_normal(&mut rng);
        let direct = d2_model::chart_norm2(t, lambda * t, c(1.0, 0.0), lambda).map_err(e)?;
        let closed = positivity_profile(lambda, t);
        let scale = 2.0 * lambda.norm() / (lambda * t.norm_sqr() - 1.0).norm_sqr();
        profile_worst = profile_worst.max((direct - closed).abs() / scale);
    }

    let (mut root_worst, mut inside_fail, mut beyond_found, mut instances) = (0.0f64, 0usize, 0usize, 0usize);
    for _ in 0..20 {
        // |α| ∈ [1, 3] and arg α ∈ ±[0.2, 1.3]: Re α > 0 and the roots are distinct.
        let modulus = rng.gen_range(1.0..3.0);
        let arg = rng.gen_range(0.2..1.3) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let alpha = C64::from_polar(modulus, arg);
        let n: u64 = rng.gen_range(1..=10_000);
        let nf = n as f64;
        let (lo, hi) = positivity_roots(alpha / nf).map_err(e)?;
        let a = alpha.norm();
        let want_lo = (a - alpha.im.abs()) / (a * alpha.re) * nf;
        let want_hi = (a + alpha.im.abs()) / (a * alpha.re) * nf;
        root_worst = root_worst.max(((lo - want_lo) / want_lo).abs()).max(((hi - want_hi) / want_hi).abs());

        let lambda = alpha / nf;
        let radius = tol::RADIUS_SHRINK * c_alpha(alpha).map_err(e)? * nf.sqrt();
        for i in 1..=32 {
            for j in 0..16 {
                let t = C64::from_polar(radius * (i as f64 / 32.0).sqrt(), j as f64 * std::f64::consts::TAU / 16.0);
                if positivity_profile(lambda, t) <= 0.0 {
                    inside_fail += 1;
                }
            }
        }
        // A disk reaching past the larger root contains the annulus between
        // the roots, where the sampled positivity has to fail.
        let s_max = 1.01 * hi;
        let fails = (1..=256).any(|i| positivity_profile(lambda, c((s_max * i as f64 / 256.0).sqrt(), 0.0)) <= 0.0);
        if fails {
            beyond_found += 1;
        }
        instances += 1;
    }
    outcome(
        profile_worst < tol::PROFILE_REL && root_worst < tol::ROOT_REL && inside_fail == 0 && beyond_found == instances,
        format!(
            "profile rel {profile_worst:.1e}, root rel {root_worst:.1e}, negative samples inside {inside_fail}, \
             failure found past the larger root {beyond_found}/{instances}"
        ),
    )
}

// --- 5 -------------------------------------------------------------------

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hkperiod")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("scratch directory");
    dir
}

fn run_cli(out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(bin())
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--seed")
        .arg(CLI_SEED.to_string())
        .output()
        .map_err(e)?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!("hkperiod {args:?}: {}", String::from_utf8_lossy(&status.stderr).trim()))
    }
}

fn read_series(path: &Path) -> Result<Vec<(u64, f64)>, String> {
    let mut reader = csv::Reader::from_path(path).map_err(e)?;
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(e)?;
            Ok((rec[0].parse().map_err(e)?, rec[1].parse().map_err(e)?))
        })
        .collect()
}

fn two_disk_witness() -> Check {
    let a = c(1.0, 1.0);
    let mut lengths = Vec::new();
    let (mut meeting, mut min_pos) = (0.0f64, f64::INFINITY);
    for n in CHAIN_SCHEDULE {
        let two = two_disk_chain(a, a, n).map_err(e)?;
        meeting = meeting.max(two.meeting_residual);
        let chain = lemma57_chain(a, a, n).map_err(e)?;
        chain.verify(LINK_RESIDUAL).map_err(e)?;
        min_pos = min_pos.min(chain.min_positivity());
        lengths.push(chain.length());
    }
    let decreasing = lengths.windows(2).all(|w| w[1] < w[0]);
    let shrink = lengths[3] < lengths[0] / 10.0;

    let dir = scratch("chain");
    std::fs::write(dir.join("config.json"), r#"{"chain":{"random_d2":0,"random_d":0}}"#).map_err(e)?;
    let config = dir.join("config.json");
    run_cli(&dir, &["chain", "--config", config.to_str().unwrap()])?;
    let got = read_series(&dir.join("series.csv"))?;
    let golden = read_series(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/series.csv"))?;
    let mut golden_worst = 0.0f64;
    let mut golden_ok = got.len() == golden.len();
    for ((n1, l1), (n2, l2)) in got.iter().zip(&golden) {
        golden_ok &= n1 == n2;
        golden_worst = golden_worst.max(((l1 - l2) / l2).abs());
    }
    for ((_, l1), l2) in golden.iter().zip(&lengths) {
        golden_worst = golden_worst.max(((l1 - l2) / l2).abs());
    }
    golden_ok &= golden_worst < GOLDEN_REL;
    outcome(
        meeting < tol::MEETING_RESIDUAL && min_pos > 0.0 && decreasing && shrink && golden_ok,
        format!(
            "lengths {:.6} {:.6} {:.6} {:.6}, meeting {meeting:.1e}, min positivity {min_pos:.2e}, \
             golden rel {golden_worst:.1e}",
            lengths[0], lengths[1], lengths[2], lengths[3]
        ),
    )
}

// --- 6 -------------------------------------------------------------------

fn random_d2(rng: &mut SeededRng) -> D2Point<f64> {
    loop {
        if let Ok(p) = D2Point::from_chart(complex_normal(rng), complex_normal(rng)) {
            return p;
        }
    }
}

fn chain_ok(chain: &DiskChain) -> bool {
    chain.verify(LINK_RESIDUAL).is_ok() && chain.length() <= tol::CHAIN_TARGET && chain.min_positivity() > 0.0
}

fn constructive_chains() -> Check {
    let mut rng = seeded(SEED + 6);
    let mut failures: BTreeMap<String, usize> = BTreeMap::new();
    let mut longest = 0.0f64;
    let mut record = |label: &str, chain: Result<DiskChain, hkperiod::Error>, longest: &mut f64| match chain {
        Ok(chain) if chain_ok(&chain) => *longest = longest.max(chain.length()),
        _ => *failures.entry(label.to_string()).or_default() += 1,
    };
    for _ in 0..100 {
        let (p, q) = (random_d2(&mut rng), random_d2(&mut rng));
        record("d2", connect_d2(&p, &q, tol::CHAIN_TARGET, &mut rng), &mut longest);
    }
    for p in [2usize, 19] {
        let s = space(p);
        for _ in 0..100 {
            let a = random_point_in_d(&s, &mut rng).map_err(e)?;
            let b = random_point_in_d(&s, &mut rng).map_err(e)?;
            record(&format!("d p={p}"), connect_d(&s, &a, &b, tol::CHAIN_TARGET, &mut rng), &mut longest);
        }
    }
    outcome(
        failures.is_empty(),
        format!("300 pairs, failures {failures:?}, longest chain {longest:.2e}"),
    )
}

// --- 7 -------------------------------------------------------------------

fn combo(coeffs: &[f64], vs: &[&RVec]) -> RVec {
    let n = vs[0].len();
    coeffs.iter().zip(vs).fold(vec![0.0; n], |mut acc, (c, v)| {
        for i in 0..n {
            acc[i] += c * v[i];
        }
        acc
    })
}

/// Random `q`-orthonormal frame with bounded entries, positive vectors first.
fn random_frame(s: &Space, rng: &mut SeededRng) -> Vec<RVec> {
    let n = s.dim();
    loop {
        let raw: Vec<RVec> = (0..n).map(|_| normal_vec(rng, n)).collect();
        if let Ok(f) = signed_orthonormal_basis(s, &raw) {
            if f.iter().map(|(_, v)| linalg::rnorm(v)).fold(0.0, f64::max) < 4.0 {
                return f.into_iter().map(|x| x.1).collect();
            }
        }
    }
}

/// Well-conditioned positive plane in `span(f₀, f₁)` plus small `extra` parts.
fn random_plane(s: &Space, frame: &[RVec], extra: &[usize], rng: &mut SeededRng) -> [RVec; 2] {
    let mut mk = || {
        let mut coeffs = vec![normal(rng), normal(rng)];
        let mut vs = vec![&frame[0], &frame[1]];
        for &j in extra {
            coeffs.push(0.2 * normal(rng));
            vs.push(&frame[j]);
        }
        combo(&coeffs, &vs)
    };
    loop {
        let (a, b) = (mk(), mk());
        let g = s.restricted_gram(&[a.clone(), b.clone()]);
        if g[0][0] > 0.1 && g[0][0] * g[1][1] - g[0][1] * g[1][0] > 0.25 * g[0][0] * g[1][1] {
            return [a, b];
        }
    }
}

/// Largest violation among the three postconditions; orientation must hold.
fn isometry_error(s: &Space, n_basis: &[RVec], p: &[RVec; 2], q: &[RVec; 2]) -> Result<f64, String> {
    let g = isometry_fixing_n(s, n_basis, p, q).map_err(e)?;
    let mut worst = isometry_residual(s, &g);
    for v in n_basis {
        let gv = linalg::matvec(&g, v);
        worst = worst.max(linalg::rnorm(&gv.iter().zip(v).map(|(x, y)| x - y).collect::<Vec<_>>()));
    }
    let gp = [linalg::matvec(&g, &p[0]), linalg::matvec(&g, &p[1])];
    let gram = s.restricted_gram(q);
    for v in &gp {
        let coeffs = linalg::solve_real(&gram, &[s.q_real(v, &q[0]), s.q_real(v, &q[1])]).map_err(e)?;
        let back = combo(&coeffs, &[&q[0], &q[1]]);
        let d = linalg::rnorm(&back.iter().zip(v).map(|(x, y)| x - y).collect::<Vec<_>>());
        worst = worst.max(d / linalg::rnorm(v).max(1.0));
    }
    if orientation_det(s, q, &gp) <= 0.0 {
        return Err("orientation reversed".into());
    }
    Ok(worst)
}

fn isometry_builder() -> Check {
    let mut rng = seeded(SEED + 7);
    let (mut worst, mut errors, mut count) = (0.0f64, Vec::new(), 0);
    for p in [1usize, 2, 5, 19] {
        let s = space(p);
        for k in 0..100 {
            let f = random_frame(&s, &mut rng);
            let n_basis: Vec<RVec> = match (k % 3, p) {
                (0, _) => vec![],
                (1, _) => vec![f[2].clone()],
                (_, 1) => vec![f[3].clone()],
                _ => vec![f[2].clone(), combo(&[1.0, 0.5], &[&f[3], &f[4]])],
            };
            let extra: Vec<usize> = (3 + n_basis.len().min(p)..3 + p).collect();
            let a = random_plane(&s, &f, &extra, &mut rng);
            let b = random_plane(&s, &f, &extra, &mut rng);
            match isometry_error(&s, &n_basis, &a, &b) {
                Ok(x) => worst = worst.max(x),
                Err(m) => errors.push(format!("nondegenerate p={p}: {m}")),
            }
            count += 1;
        }
        for k in 0..100 {
            let f = random_frame(&s, &mut rng);
            let n0 = combo(&[1.0, 1.0], &[&f[2], &f[3]]);
            let mut n_basis = vec![n0.clone()];
            if p >= 2 && k % 2 == 1 {
                n_basis.push(f[4].clone());
            }
            let first_free = if n_basis.len() == 2 { 5 } else { 4 };
            let extra: Vec<usize> = (first_free..3 + p).collect();
            let shift = |rng: &mut SeededRng, v: RVec| -> RVec {
                let t = 0.5 * normal(rng);
                v.iter().zip(&n0).map(|(x, y)| x + t * y).collect()
            };
            let [a0, a1] = random_plane(&s, &f, &extra, &mut rng);
            let [b0, b1] = random_plane(&s, &f, &extra, &mut rng);
            let a = [shift(&mut rng, a0), shift(&mut rng, a1)];
            let b = [shift(&mut rng, b0), shift(&mut rng, b1)];
            match isometry_error(&s, &n_basis, &a, &b) {
                Ok(x) => worst = worst.max(x),
                Err(m) => errors.push(format!("degenerate p={p}: {m}")),
            }
            count += 1;
        }
    }
    outcome(
        errors.is_empty() && worst < tol::ISOMETRY,
        format!("{count} instances, max violation {worst:.1e}, errors {} {}", errors.len(), errors.first().cloned().unwrap_or_default()),
    )
}

// --- 8 -------------------------------------------------------------------

fn gamma_constancy() -> Check {
    let mut rng = seeded(SEED + 8);
    let mut estimates = BTreeMap::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [1usize, 2, 19] {
        let samples = sample_hsc(&space(p), 10, 50, FD_STEP, &mut rng).map_err(e)?;
        let est = summarize_gamma(p, &samples);
        pass &= samples.len() == 500 && est.spread < tol::HSC_SPREAD && est.gamma > 0.0;
        parts.push(format!("p={p} gamma {:.8} spread {:.1e}", est.gamma, est.spread));
        estimates.insert(p, est.gamma);
    }
    let dir = scratch("calibrate");
    run_cli(&dir, &["calibrate"])?;
    let cached: Constants =
        serde_json::from_str(&std::fs::read_to_string(dir.join("constants.json")).map_err(e)?).map_err(e)?;
    let mut cache_worst = 0.0f64;
    for (p, g) in &estimates {
        let c = cached.gamma_for(*p).map_err(e)?;
        cache_worst = cache_worst.max(((c - g) / g).abs());
    }
    pass &= cache_worst < tol::HSC_SPREAD;
    outcome(pass, format!("{}, cache agreement {cache_worst:.1e}", parts.join("; ")))
}

// --- 9 -------------------------------------------------------------------

fn negative_line() -> PolynomialCurve {
    let e = |i| linalg::cunit_vector(5, i);
    PolynomialCurve::line(&e(0), &linalg::axpy(&e(1), c(0.5, 0.0), &e(3))).expect("line")
}

fn twistor_conic() -> PolynomialCurve {
    let w: Vec<Vec<f64>> = (0..3).map(|i| linalg::unit_vector(22, i)).collect();
    TwistorLine::new(space(19), &w).expect("twistor line").parametrize()
}

fn first_main_theorem_residual() -> Check {
    let mut rng = seeded(SEED + 9);
    let kappa_geom = curvature_factor_calibrate(&space(1), 10, &mut rng).map_err(e)?.kappa;
    let cal = calibrate_kappa_jensen(kappa_geom, &[2.0, 5.0, 10.0]).map_err(e)?;
    let constants = Constants {
        kappa_geom,
        kappa_jensen: cal.kappa_jensen,
        gamma: BTreeMap::new(),
    };
    let radii = geometric_grid(2.0, 50.0, 8);
    let curves = [
        ("f_i", space(1), f_lambda(c(0.0, 1.0)).map_err(e)?.to_model()),
        ("negative_line", space(2), negative_line()),
        ("twistor_conic", space(19), twistor_conic()),
    ];
    let mut variations = Vec::new();
    for (name, s, curve) in &curves {
        let table = verify_prop67(s, curve, &radii, &constants, &PolarRule::default()).map_err(e)?;
        variations.push((*name, table.variation()));
    }
    let worst = variations.iter().map(|v| v.1).fold(0.0, f64::max);
    outcome(
        cal.spread < tol::KAPPA_JENSEN_REL && worst < tol::PROP67_VARIATION,
        format!(
            "kappa_jensen {:.8} spread {:.1e} over {} ratios; variation {}",
            cal.kappa_jensen,
            cal.spread,
            cal.ratios.len(),
            variations.iter().map(|(n, v)| format!("{n} {v:.1e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// --- 10 ------------------------------------------------------------------

fn epsilon_cones() -> Check {
    let mut rng = seeded(SEED + 10);
    let grid: Vec<f64> = (0..=6).map(|k| 0.5f64.powi(k)).collect();
    let (mut stated, mut reverse, mut lines) = (0usize, 0usize, 0usize);
    for p in [2usize, 19] {
        let s = space(p);
        let metrics: Vec<EpsilonMetric> = grid.iter().map(|&eps| EpsilonMetric::new(&s, eps)).collect::<Result<_, _>>().map_err(e)?;
        for _ in 0..500 {
            let x = random_point_in_omega(&s, &mut rng).map_err(e)?;
            let basis = omega_tangent_basis(&x).map_err(e)?;
            let v = basis.iter().fold(vec![c(0.0, 0.0); 3 + p], |acc, b| linalg::axpy(&acc, complex_normal(&mut rng), b));
            let inside: Vec<(f64, bool)> = grid.iter().zip(&metrics).map(|(&eps, m)| (eps, epsilon_cone_test(m, &x, &v))).collect();
            for &(a, in_a) in &inside {
                for &(b, in_b) in &inside {
                    if a < b {
                        // Stated inclusion: the a-cone sits inside the b-cone.
                        stated += (in_a && !in_b) as usize;
                        reverse += (in_b && !in_a) as usize;
                    }
                }
            }
            lines += 1;
        }
    }
    let s = space(2);
    let (mut over_one, mut over_two) = (0usize, 0usize);
    let mut worst_ratio = 0.0f64;
    for &eps in &grid {
        let sup = phi_eps_bound(&s, eps, 10_000, &mut rng).map_err(e)?;
        worst_ratio = worst_ratio.max(sup * eps);
        over_one += (sup > 1.0 / eps) as usize;
        over_two += (sup > 2.0 / eps) as usize;
    }
    outcome(
        stated == 0 && over_one == 0,
        format!(
            "{lines} lines: stated nesting violations {stated}, reverse nesting violations {reverse}; \
             max eps*phi {worst_ratio:.4}, grid values over 1/eps {over_one}/7, over 2/eps {over_two}/7"
        ),
    )
}

// --- 11 ------------------------------------------------------------------

fn certified_samples(s: &Space, curve: &PolynomialCurve, radius: f64, count: usize, rng: &mut SeededRng) -> Result<Vec<C64>, String> {
    let deriv = curve.derivative();
    let ram = ramification_points(curve).map_err(e)?;
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        if tries > 100 * count {
            return Err("too few certified samples".into());
        }
        let z = C64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * std::f64::consts::TAU);
        if ram.iter().any(|r| (r - z).norm() < IDENTITY_GUARD) {
            continue;
        }
        if tangent_norm2(s, curve, &deriv, z) > 0.0 {
            out.push(z);
        }
    }
    Ok(out)
}

const IDENTITY_GUARD: f64 = 1e-3;

fn curvature_identity() -> Check {
    let mut rng = seeded(SEED + 11);
    let s4 = space(4);
    let x = random_point_in_omega(&s4, &mut rng).map_err(e)?;
    let v = omega_tangent_basis(&x)
        .map_err(e)?
        .into_iter()
        .find(|b| h_alg(&s4, x.rep(), b, b).re > 0.0)
        .ok_or("no positive tangent")?;
    let w: Vec<C64> = (0..7).map(|_| 0.2 * complex_normal(&mut rng)).collect();
    let quadratic = PolynomialCurve::new((0..7).map(|k| Poly(vec![x.rep()[k], v[k], w[k]])).collect()).map_err(e)?;
    let model = f_lambda(c(0.1, 0.1)).map_err(e)?.to_model();
    let curves = [
        ("f_lambda", space(1), model.clone(), 0.8),
        ("f_lambda(z^2)", space(1), model.compose_power(2), 0.6),
        ("quadratic p=4", s4, quadratic, 0.05),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, s, curve, radius) in &curves {
        let gamma = calibrate_gamma(s, 4, 8, &mut rng).map_err(e)?.gamma;
        let samples = certified_samples(s, curve, *radius, 50, &mut rng)?;
        let good = theorem615_identity_check(s, curve, &samples, gamma, IDENTITY_GUARD).map_err(e)?;
        let bad = theorem615_identity_check(s, curve, &samples, 0.9 * gamma, IDENTITY_GUARD).map_err(e)?;
        let inflation = bad.max_residual / good.max_residual;
        pass &= good.residuals.len() == 50
            && good.max_residual < tol::CURVATURE_IDENTITY_REL
            && inflation >= tol::SENSITIVITY_FACTOR;
        parts.push(format!("{name} {:.1e} (x{inflation:.0} at 0.9 gamma)", good.max_residual));
    }
    outcome(pass, parts.join(", "))
}

// --- 12 ------------------------------------------------------------------

const SUITE: [&str; 9] = [
    "calibrate",
    "domain",
    "metric",
    "hsc",
    "d2",
    "chain",
    "twistor-chain",
    "nevanlinna",
    "transport",
];

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(e)? {
        let path = entry.map_err(e)?.path();
        files.insert(path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).map_err(e)?);
    }
    Ok(files)
}

fn determinism() -> Check {
    let runs: Vec<BTreeMap<String, Vec<u8>>> = ["run_a", "run_b"]
        .iter()
        .map(|name| {
            let dir = scratch(name);
            for cmd in SUITE {
                run_cli(&dir, &[cmd])?;
            }
            snapshot(&dir)
        })
        .collect::<Result<_, _>>()?;
    let names_match = runs[0].keys().eq(runs[1].keys());
    let differing: Vec<&String> = runs[0].iter().filter(|(k, v)| runs[1].get(*k) != Some(v)).map(|(k, _)| k).collect();
    outcome(
        names_match && differing.is_empty() && !runs[0].is_empty(),
        format!("{} files from {} commands, differing {differing:?}", runs[0].len(), SUITE.len()),
    )
}

// --- driver --------------------------------------------------------------

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("D2 metric closed form and pullback", d2_metric_closed_form),
        ("chart matrices at the base point", chart_matrices_at_base_point),
        ("metric signatures on D and Omega", signatures),
        ("positivity profile, roots and radius", positivity_of_f_lambda),
        ("two-disk chain series", two_disk_witness),
        ("constructive chains", constructive_chains),
        ("isometry builder", isometry_builder),
        ("gamma constancy", gamma_constancy),
        ("characteristic residual", first_main_theorem_residual),
        ("epsilon cones", epsilon_cones),
        ("curvature identity", curvature_identity),
        ("CLI determinism", determinism),
    ];
    let mut unexpected = 0;
    let total = Instant::now();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let (mut pass, mut detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(msg) => (false, format!("error: {msg}")),
        };
        if let Some(budget) = BUDGET[i] {
            if secs > budget {
                pass = false;
                detail.push_str(&format!("; over the {budget} s budget"));
            }
        }
        let known_false = KNOWN_FALSE.contains(&id);
        let note = match (pass, known_false) {
            (false, true) => " [expected: statement does not hold]",
            (true, true) => " [unexpected pass of a known-false criterion]",
            _ => "",
        };
        if pass == known_false {
            unexpected += 1;
        }
        println!(
            "{} {id:>2} {name}: {detail} ({secs:.2} s){note}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!(
        "{} unexpected outcome(s), total {:.1} s",
        unexpected,
        total.elapsed().as_secs_f64()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

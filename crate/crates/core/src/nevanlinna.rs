//! Nevanlinna functionals of polynomial curves `f: ℂ → Ω`.
//!
//! A `(1,1)`-form with local potential `φ` is integrated through its density
//! against the area element, `κ_geom · ∂_z∂_z̄ φ`. The Jensen normalization
//! `κ_jensen` is the measured ratio between such characteristic functions and
//! differences of circle integrals of `φ`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curve::PolynomialCurve;
use crate::error::{Error, Result};
use crate::indefinite_linear::{positive_negative_split, QuadraticSpace};
use crate::linalg::{self, CVec, C64};
use crate::period_domain::{
    chart_matrix_derivative, gram_matrix, h_alg, hsc_with_step, laplacian, omega_tangent_basis,
    random_point_in_omega, PeriodPoint,
};
use crate::quadrature::{characteristic_on_grid, circle_integral, PolarRule};
use crate::tolerances::{CIRCLE_NODES, FD_STEP};

type Space = QuadraticSpace<f64>;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Calibrated constants shared by the analytic commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub kappa_geom: f64,
    pub kappa_jensen: f64,
    /// `γ = −HSC` of `h_alg` keyed by `p`.
    pub gamma: BTreeMap<usize, f64>,
}

impl Constants {
    pub fn gamma_for(&self, p: usize) -> Result<f64> {
        self.gamma
            .get(&p)
            .copied()
            .ok_or_else(|| Error::Precondition(format!("no curvature constant cached for p = {p}")))
    }

    /// The constant in front of `f*ω` once `ω` carries the factor `κ_geom`.
    pub fn gamma_omega(&self, p: usize) -> Result<f64> {
        Ok(self.gamma_for(p)? / self.kappa_geom)
    }
}

/// Which hermitian metric a characteristic function integrates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Omega,
    FubiniStudy,
    Epsilon(f64),
}

/// A metric resolved against a space: `ω` from `h` (or `h_ε`), `ω_FS` from the
/// euclidean form.
#[derive(Debug, Clone)]
pub struct PullbackMetric {
    kind: Metric,
    form: Option<Space>,
}

fn log_ddbar(h: &dyn Fn(&[C64], &[C64]) -> C64, f: &[C64], d: &[C64]) -> Result<f64> {
    let q = h(f, f).re;
    if !(q > 0.0) {
        return Err(Error::NotInDomain(format!("curve leaves the domain (h = {q:.3e})")));
    }
    Ok((h(d, d).re * q - h(d, f).norm_sqr()) / (q * q))
}

impl PullbackMetric {
    pub fn new(space: &Space, kind: Metric) -> Result<Self> {
        let form = match kind {
            Metric::Omega => Some(space.clone()),
            Metric::FubiniStudy => None,
            Metric::Epsilon(eps) => Some(EpsilonMetric::new(space, eps)?.space),
        };
        Ok(Self { kind, form })
    }

    pub fn kind(&self) -> Metric {
        self.kind
    }

    /// `∂_z∂_z̄` of the potential along `f` with `f′ = d`.
    pub fn coefficient(&self, f: &[C64], d: &[C64]) -> Result<f64> {
        match &self.form {
            Some(s) => Ok(-log_ddbar(&|a, b| s.h(a, b), f, d)?),
            None => log_ddbar(&|a, b| linalg::herm_dot(a, b), f, d),
        }
    }

    /// `−log h(x, x̄)` or `log ‖x‖²`.
    pub fn potential(&self, x: &[C64]) -> Result<f64> {
        match &self.form {
            Some(s) => {
                let q = s.hnorm(x);
                if !(q > 0.0) {
                    return Err(Error::NotInDomain(format!("point outside the domain (h = {q:.3e})")));
                }
                Ok(-q.ln())
            }
            None => Ok(linalg::norm(x).powi(2).ln()),
        }
    }
}

/// Evaluates `density` inside a quadrature, stopping at the first error.
fn guarded<'a>(
    err: &'a RefCell<Option<Error>>,
    mut f: impl FnMut(C64) -> Result<f64> + 'a,
) -> impl FnMut(f64, f64) -> f64 + 'a {
    move |s, th| {
        if err.borrow().is_some() {
            return 0.0;
        }
        match f(C64::from_polar(s, th)) {
            Ok(v) => v,
            Err(e) => {
                *err.borrow_mut() = Some(e);
                0.0
            }
        }
    }
}

fn finish<T>(err: RefCell<Option<Error>>, value: Result<T>) -> Result<T> {
    match err.into_inner() {
        Some(e) => Err(e),
        None => value,
    }
}

/// `T_{f,α}(r) = ∫₁ʳ dt/t ∫_{|z|<t} f*α` at each radius.
pub fn characteristic(
    space: &Space,
    curve: &PolynomialCurve,
    metric: Metric,
    radii: &[f64],
    kappa_geom: f64,
    rule: &PolarRule,
) -> Result<Vec<f64>> {
    let pm = PullbackMetric::new(space, metric)?;
    let deriv = curve.derivative();
    let err = RefCell::new(None);
    let mut density = guarded(&err, |z| {
        Ok(kappa_geom * pm.coefficient(&curve.eval(z), &deriv.eval(z))?)
    });
    let out = characteristic_on_grid(&mut density, radii, rule);
    drop(density);
    finish(err, out)
}

/// `∫₀^{2π} φ(r e^{iθ}) dθ − ∫₀^{2π} φ(e^{iθ}) dθ`.
pub fn characteristic_via_jensen(
    potential: &dyn Fn(C64) -> Result<f64>,
    r: f64,
    nodes: usize,
) -> Result<f64> {
    let mean = |rad: f64| -> Result<f64> {
        let err = RefCell::new(None);
        let mut f = guarded(&err, potential);
        let v = circle_integral(&mut |th| f(rad, th), nodes);
        drop(f);
        let v = finish(err, Ok(v))?;
        if !v.is_finite() {
            return Err(Error::Numeric(format!("potential singular on the circle of radius {rad}")));
        }
        Ok(v)
    };
    Ok(mean(r)? - mean(1.0)?)
}

/// [`characteristic_via_jensen`] for the potential of `metric` along `curve`.
pub fn curve_characteristic_via_jensen(
    space: &Space,
    curve: &PolynomialCurve,
    metric: Metric,
    r: f64,
    nodes: usize,
) -> Result<f64> {
    let pm = PullbackMetric::new(space, metric)?;
    characteristic_via_jensen(&|z| pm.potential(&curve.eval(z)), r, nodes)
}

/// Scalar potentials on `ℂ` with closed-form `∂_z∂_z̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum JensenOracle {
    /// `log(|z − c|² + η²)`, the smoothed `log|z − c|²`.
    LogModulus { center: C64, eta: f64 },
    /// `log(1 + |z|²)`.
    FubiniStudyLine,
}

impl JensenOracle {
    pub fn value(&self, z: C64) -> f64 {
        match *self {
            JensenOracle::LogModulus { center, eta } => ((z - center).norm_sqr() + eta * eta).ln(),
            JensenOracle::FubiniStudyLine => (1.0 + z.norm_sqr()).ln(),
        }
    }

    pub fn ddbar(&self, z: C64) -> f64 {
        match *self {
            JensenOracle::LogModulus { center, eta } => {
                let e2 = eta * eta;
                e2 / ((z - center).norm_sqr() + e2).powi(2)
            }
            JensenOracle::FubiniStudyLine => 1.0 / (1.0 + z.norm_sqr()).powi(2),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            JensenOracle::LogModulus { center, eta } if center == ZERO => format!("log(|z|^2+{eta}^2)"),
            JensenOracle::LogModulus { center, eta } => {
                format!("log(|z-({}{:+}i)|^2+{eta}^2)", center.re, center.im)
            }
            JensenOracle::FubiniStudyLine => "log(1+|z|^2)".into(),
        }
    }

    pub fn standard() -> [JensenOracle; 3] {
        [
            JensenOracle::LogModulus { center: ZERO, eta: 0.25 },
            JensenOracle::LogModulus { center: C64::new(0.5, 0.25), eta: 0.25 },
            JensenOracle::FubiniStudyLine,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JensenCalibration {
    pub kappa_jensen: f64,
    /// `(oracle, r, ratio)`.
    pub ratios: Vec<(String, f64, f64)>,
    /// `(max − min)/mean` of the ratios.
    pub spread: f64,
}

/// Ratio of density-integrated characteristic functions to circle-integral
/// differences, on the oracle potentials along the identity curve.
pub fn calibrate_kappa_jensen(kappa_geom: f64, radii: &[f64]) -> Result<JensenCalibration> {
    let rule = PolarRule {
        rel_tol: 1e-11,
        ..PolarRule::default()
    };
    let mut ratios = Vec::new();
    for oracle in JensenOracle::standard() {
        let t = characteristic_on_grid(
            &mut |s, th| kappa_geom * oracle.ddbar(C64::from_polar(s, th)),
            radii,
            &rule,
        )?;
        for (r, lhs) in radii.iter().zip(t) {
            let rhs = characteristic_via_jensen(&|z| Ok(oracle.value(z)), *r, CIRCLE_NODES)?;
            if rhs.abs() < 1e-12 {
                return Err(Error::Precondition(format!("radius {r} gives a vanishing circle difference")));
            }
            ratios.push((oracle.name(), *r, lhs / rhs));
        }
    }
    let vals: Vec<f64> = ratios.iter().map(|x| x.2).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(JensenCalibration {
        kappa_jensen: mean,
        ratios,
        spread: (hi - lo) / mean.abs(),
    })
}

/// `φ(l) = ‖x‖² / h(x, x̄)` for `x ∈ l`.
pub fn boundary_ratio(space: &Space, x: &[C64]) -> Result<f64> {
    let q = space.hnorm(x);
    if !(q > 0.0) {
        return Err(Error::NotInDomain(format!("line outside Ω (h = {q:.3e})")));
    }
    Ok(linalg::norm(x).powi(2) / q)
}

/// `p_f(r) = ∫₀^{2π} log φ(f(r e^{iθ})) dθ`.
pub fn proximity(space: &Space, curve: &PolynomialCurve, r: f64, nodes: usize) -> Result<f64> {
    let err = RefCell::new(None);
    let mut f = guarded(&err, |z| Ok(boundary_ratio(space, &curve.eval(z))?.ln()));
    let v = circle_integral(&mut |th| f(r, th), nodes);
    drop(f);
    finish(err, Ok(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRow {
    pub r: f64,
    pub t_fs: f64,
    pub t_omega: f64,
    pub p_f: f64,
    /// `T_fs + T_omega − κ_jensen · p_f`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicTable {
    pub rows: Vec<CharacteristicRow>,
}

impl CharacteristicTable {
    /// `max − min` of the residual column.
    pub fn variation(&self) -> f64 {
        let lo = self.rows.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
        let hi = self.rows.iter().map(|r| r.residual).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    pub fn fs_nondecreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].t_fs >= w[0].t_fs - 1e-12 * w[1].t_fs.abs().max(1.0))
    }
}

/// `r = 1, …, r_max` spaced geometrically.
pub fn geometric_grid(r_min: f64, r_max: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![r_min];
    }
    let ratio = (r_max / r_min).ln() / (points - 1) as f64;
    (0..points).map(|k| r_min * (ratio * k as f64).exp()).collect()
}

/// Characteristic functions of `ω_FS` and `ω`, proximity and residual.
pub fn verify_prop67(
    space: &Space,
    curve: &PolynomialCurve,
    radii: &[f64],
    constants: &Constants,
    rule: &PolarRule,
) -> Result<CharacteristicTable> {
    let t_fs = characteristic(space, curve, Metric::FubiniStudy, radii, constants.kappa_geom, rule)?;
    let t_om = characteristic(space, curve, Metric::Omega, radii, constants.kappa_geom, rule)?;
    let mut rows = Vec::with_capacity(radii.len());
    for (k, &r) in radii.iter().enumerate() {
        let p_f = proximity(space, curve, r, CIRCLE_NODES)?;
        rows.push(CharacteristicRow {
            r,
            t_fs: t_fs[k],
            t_omega: t_om[k],
            p_f,
            residual: t_fs[k] + t_om[k] - constants.kappa_jensen * p_f,
        });
    }
    Ok(CharacteristicTable { rows })
}

/// The form `h_ε = h + ε h₊`, where `h₊` is the positive part of `h` in a
/// fixed `q`-orthonormal splitting (`(1+ε)Σ_{i≤3}|xᵢ|² − Σ_{j>3}|xⱼ|²` for the
/// standard form).
#[derive(Debug, Clone)]
pub struct EpsilonMetric {
    pub eps: f64,
    pub space: Space,
}

impl EpsilonMetric {
    pub fn new(space: &Space, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Precondition(format!("ε must be positive, got {eps}")));
        }
        let n = space.dim();
        let mut gram = space.gram_rows();
        if space.is_standard() {
            for (i, row) in gram.iter_mut().enumerate().take(3) {
                row[i] = 1.0 + eps;
            }
        } else {
            let (pos, _) = positive_negative_split(space)?;
            for e in &pos {
                let ge = space.apply_real(e);
                for i in 0..n {
                    for j in 0..n {
                        gram[i][j] += eps * ge[i] * ge[j];
                    }
                }
            }
        }
        Ok(Self {
            eps,
            space: Space::from_gram(gram)?,
        })
    }

    pub fn h(&self, x: &[C64]) -> f64 {
        self.space.hnorm(x)
    }

    /// `‖v‖²` for the metric of `h_ε` at the line of `sigma`.
    pub fn line_value(&self, sigma: &[C64], v: &[C64]) -> f64 {
        h_alg(&self.space, sigma, v, v).re
    }

    /// `φ_ε(l) = ‖x‖² / h_ε(x, x̄)`.
    pub fn phi(&self, x: &[C64]) -> Result<f64> {
        boundary_ratio(&self.space, x)
    }
}

/// Whether the tangent line spanned by `tangent` at `point` is positive for
/// the metric of `h_ε`.
pub fn epsilon_cone_test(metric: &EpsilonMetric, point: &PeriodPoint, tangent: &[C64]) -> bool {
    metric.line_value(point.rep(), tangent) > 0.0
}

/// Largest `φ_ε` over random points of `Ω`.
pub fn phi_eps_bound<R: Rng + ?Sized>(
    space: &Arc<Space>,
    eps: f64,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let m = EpsilonMetric::new(space, eps)?;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..samples {
        let x = random_point_in_omega(space, rng)?;
        best = best.max(m.phi(x.rep())?);
    }
    Ok(best)
}

/// Value of the second fundamental form of the tangent line at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondFundamental {
    /// `h(w, w) / h(g, g)` with `w` the `h`-orthogonal projection of `∇g` to
    /// the complement of the tangent line.
    pub density: f64,
    /// `h(g, g)`; equals `‖f′‖²` away from ramification.
    pub norm2: f64,
    /// Vanishing order `m` of `f′ = (z − x)^m g`.
    pub ramification: usize,
}

/// Chart Taylor coefficients of `f/f_c` at `z` up to order `k`.
fn chart_jet(curve: &PolynomialCurve, z: C64, c: usize, k: usize) -> Vec<CVec> {
    let a: Vec<CVec> = (0..=k).map(|j| curve.taylor(z, j)).collect();
    let b0 = a[0][c];
    let mut s: Vec<CVec> = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let mut v = a[j].clone();
        for i in 1..=j {
            v = linalg::axpy(&v, -a[i][c], &s[j - i]);
        }
        s.push(linalg::scale(b0.inv(), &v));
    }
    s
}

fn herm_form(m: &[CVec], a: &[C64], b: &[C64]) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.len() {
        for j in 0..b.len() {
            acc += a[i] * m[i][j] * b[j].conj();
        }
    }
    acc
}

/// Second fundamental form density of the tangent line of `curve` at `z`.
///
/// Works in the affine chart of the largest homogeneous coordinate at `f(z)`,
/// where the Chern connection of the chart metric `M` acts on column vectors
/// as `d + M^{−T} ∂Mᵀ`. At a zero of `f′` of order `m` it uses `g` with
/// `f′ = (z − x)^m g`.
pub fn second_fundamental_density(space: &Space, curve: &PolynomialCurve, z: C64) -> Result<SecondFundamental> {
    let f = curve.eval(z);
    let n = space.dim();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    let c = (0..n)
        .max_by(|&a, &b| f[a].norm().total_cmp(&f[b].norm()).then(b.cmp(&a)))
        .expect("nonempty");
    let deg = curve.degree();
    let jet = chart_jet(curve, z, c, deg + 3);
    let scale = linalg::norm(&jet[0]);
    let m = (0..=deg)
        .find(|&m| linalg::norm(&jet[m + 1]) > 1e-10 * scale)
        .ok_or_else(|| Error::Precondition("curve is constant".into()))?;
    let g_full = linalg::scale(C64::new((m + 1) as f64, 0.0), &jet[m + 1]);
    let gp_full = linalg::scale(C64::new((m + 2) as f64, 0.0), &jet[m + 2]);
    let idx: Vec<usize> = (0..n).filter(|&j| j != c).collect();
    let basis: Vec<CVec> = idx.iter().map(|&j| linalg::cunit_vector(n, j)).collect();
    let mm = gram_matrix(&basis, |x, y| h_alg(space, &jet[0], x, y));
    let dm = chart_matrix_derivative(space, &jet[0], &jet[1], &idx);
    let g: CVec = idx.iter().map(|&j| g_full[j]).collect();
    let gp: CVec = idx.iter().map(|&j| gp_full[j]).collect();
    let k = idx.len();
    let dmt_g: CVec = (0..k).map(|i| (0..k).fold(ZERO, |acc, j| acc + dm[j][i] * g[j])).collect();
    let mt: Vec<CVec> = (0..k).map(|i| (0..k).map(|j| mm[j][i]).collect()).collect();
    let corr = linalg::solve_complex(&mt, &dmt_g)?;
    let u = linalg::add(&gp, &corr);
    let norm2 = herm_form(&mm, &g, &g).re;
    if !(norm2 > 0.0) {
        return Err(Error::Precondition(format!(
            "tangent line is not h-positive (‖g‖² = {norm2:.3e})"
        )));
    }
    let w = linalg::axpy(&u, -herm_form(&mm, &u, &g) / norm2, &g);
    Ok(SecondFundamental {
        density: herm_form(&mm, &w, &w).re / norm2,
        norm2,
        ramification: m,
    })
}

/// Points where `f′` is proportional to `f`, from the roots of one nonzero
/// minor `fᵢf′ⱼ − fⱼf′ᵢ`.
pub fn ramification_points(curve: &PolynomialCurve) -> Result<Vec<C64>> {
    let d = curve.derivative();
    let n = curve.dim();
    let mut best: Option<crate::curve::Poly> = None;
    let mut best_norm = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let w = curve.components[i]
                .mul(&d.components[j])
                .add(&curve.components[j].mul(&d.components[i]).scale(C64::new(-1.0, 0.0)));
            let nrm = linalg::norm(&w.0);
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(w);
            }
        }
    }
    let Some(w) = best else {
        return Ok(Vec::new());
    };
    let roots = w.roots()?;
    Ok(roots
        .into_iter()
        .filter(|&x| {
            let f = curve.eval(x);
            let fp = d.eval(x);
            let nf = linalg::norm(&f);
            let nd = linalg::norm(&fp);
            nd <= 1e-10 * nf || linalg::projective_distance(&f, &fp) <= 1e-6
        })
        .collect())
}

/// `‖f′(z)‖²` for `h_alg`.
pub fn tangent_norm2(space: &Space, curve: &PolynomialCurve, deriv: &PolynomialCurve, z: C64) -> f64 {
    h_alg(space, &curve.eval(z), &deriv.eval(z), &deriv.eval(z)).re
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub max_residual: f64,
    pub residuals: Vec<f64>,
    /// Samples dropped for lying within the guard radius of `Ram(f)`.
    pub excluded: usize,
}

/// Compares `∂_z∂_z̄ log ‖f′‖²` (finite differences) with
/// `γ ‖f′‖² + σ` at each sample; residuals are relative to
/// `max(|lhs|, γ‖f′‖²)`.
pub fn theorem615_identity_check(
    space: &Space,
    curve: &PolynomialCurve,
    samples: &[C64],
    gamma: f64,
    guard: f64,
) -> Result<IdentityCheck> {
    let ram = ramification_points(curve)?;
    let deriv = curve.derivative();
    let mut residuals = Vec::with_capacity(samples.len());
    let mut excluded = 0;
    for &z in samples {
        if ram.iter().any(|x| (z - x).norm() < guard) {
            excluded += 1;
            continue;
        }
        let n0 = tangent_norm2(space, curve, &deriv, z);
        if !(n0 > 0.0) {
            return Err(Error::Precondition(format!("tangent not positive at z = {z}")));
        }
        let h = 1e-3 * (1.0 + z.norm()).min(10.0);
        let lhs = 0.25 * laplacian(|zeta| tangent_norm2(space, curve, &deriv, z + zeta).ln(), h);
        let sigma = second_fundamental_density(space, curve, z)?.density;
        let rhs = gamma * n0 + sigma;
        residuals.push((lhs - rhs).abs() / lhs.abs().max(gamma * n0));
    }
    if residuals.is_empty() {
        return Err(Error::Precondition("no sample outside the ramification guard".into()));
    }
    Ok(IdentityCheck {
        max_residual: residuals.iter().cloned().fold(0.0, f64::max),
        residuals,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmtRow {
    pub r: f64,
    pub gamma_t_omega: f64,
    pub t_sigma: f64,
    pub log_term: f64,
}

/// Diagnostic table `(r, γ T_ω, T_σ, log r + log T_ω)`; no inequality is
/// asserted.
pub fn smt_report(
    space: &Space,
    curve: &PolynomialCurve,
    radii: &[f64],
    constants: &Constants,
    rule: &PolarRule,
) -> Result<Vec<SmtRow>> {
    if radii.iter().any(|r| !(*r > 1.0)) {
        return Err(Error::Precondition("report radii must exceed 1".into()));
    }
    let kappa = constants.kappa_geom;
    let gamma_omega = constants.gamma_omega(space.p())?;
    let deriv = curve.derivative();
    let err = RefCell::new(None);
    let mut omega = guarded(&err, |z| {
        let v = tangent_norm2(space, curve, &deriv, z);
        if !(v > 0.0) {
            return Err(Error::Precondition(format!("curve not positive at z = {z}")));
        }
        Ok(kappa * v)
    });
    let t_omega = characteristic_on_grid(&mut omega, radii, rule);
    drop(omega);
    let t_omega = finish(err, t_omega)?;
    let err = RefCell::new(None);
    let mut sigma = guarded(&err, |z| Ok(kappa * second_fundamental_density(space, curve, z)?.density));
    let t_sigma = characteristic_on_grid(&mut sigma, radii, rule);
    drop(sigma);
    let t_sigma = finish(err, t_sigma)?;
    Ok(radii
        .iter()
        .enumerate()
        .map(|(k, &r)| SmtRow {
            r,
            gamma_t_omega: gamma_omega * t_omega[k],
            t_sigma: t_sigma[k],
            log_term: r.ln() + t_omega[k].ln(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub p: usize,
    pub gamma: f64,
    /// `(max − min)/mean` over all sampled directions.
    pub spread: f64,
    pub samples: usize,
}

/// One holomorphic sectional curvature sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HscSample {
    pub point: usize,
    pub direction: usize,
    pub hsc: f64,
}

/// HSC of `h_alg` along random positive directions (`h_alg(v, v) > 10⁻²‖v‖²`)
/// at random points of `Ω`, with finite-difference step `step`.
pub fn sample_hsc<R: Rng + ?Sized>(
    space: &Arc<Space>,
    points: usize,
    directions: usize,
    step: f64,
    rng: &mut R,
) -> Result<Vec<HscSample>> {
    let mut out = Vec::with_capacity(points * directions);
    for point in 0..points {
        let x = random_point_in_omega(space, rng)?;
        let basis = omega_tangent_basis(&x)?;
        let mut found = 0;
        let mut tries = 0;
        while found < directions {
            tries += 1;
            if tries > 100 * directions {
                return Err(Error::BudgetExceeded("too few positive directions sampled".into()));
            }
            let v = basis.iter().fold(vec![ZERO; space.dim()], |acc, b| {
                linalg::axpy(&acc, crate::rng::complex_normal(rng), b)
            });
            if h_alg(space, x.rep(), &v, &v).re > 1e-2 * linalg::norm(&v).powi(2) {
                out.push(HscSample {
                    point,
                    direction: found,
                    hsc: hsc_with_step(&x, &v, step)?,
                });
                found += 1;
            }
        }
    }
    Ok(out)
}

/// `γ = −HSC` summarized over [`sample_hsc`].
pub fn calibrate_gamma<R: Rng + ?Sized>(
    space: &Arc<Space>,
    points: usize,
    directions: usize,
    rng: &mut R,
) -> Result<GammaEstimate> {
    let samples = sample_hsc(space, points, directions, FD_STEP, rng)?;
    Ok(summarize_gamma(space.p(), &samples))
}

pub fn summarize_gamma(p: usize, samples: &[HscSample]) -> GammaEstimate {
    let values: Vec<f64> = samples.iter().map(|s| -s.hsc).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    GammaEstimate {
        p,
        gamma: mean,
        spread: (hi - lo) / mean.abs(),
        samples: values.len(),
    }
}

//! The period domain `D` of isotropic positive lines, the open domain `Ω` of
//! `h`-positive lines, and their pseudo-Kähler metric.
//!
//! The metric used throughout is
//!
//! ```text
//! h_alg(v, w) = −[q(v, w̄) q(σ, σ̄) − q(v, σ̄) q(σ, w̄)] / q(σ, σ̄)²
//! ```
//!
//! which equals `−∂∂̄ log q(s, s̄)` along any holomorphic section `s`. The
//! curvature matrices computed by finite differences are expressed with respect
//! to `(i/2) dz ∧ dz̄`; their ratio to `h_alg` is [`curvature_factor_calibrate`].

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{Poly, PolynomialCurve};
use crate::error::{Error, Result};
use crate::indefinite_linear::{
    orthogonal_complement, positive_negative_split, q_gram_schmidt_positive,
    real_orthogonal_complement, signed_orthonormal_basis, QuadraticSpace, Signature,
};
use crate::linalg::{self, CVec, RVec, C64};
use crate::rng;
use crate::tolerances::{CALIBRATION_SPREAD, EIGEN_REL, FD_STEP, ISOTROPY_REL};

type Space = QuadraticSpace<f64>;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Membership {
    InD,
    InBoundaryQuadric,
    InOmegaOnly,
    Outside,
}

/// Which domain a chart computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    D,
    Omega,
}

fn check_len(space: &Space, len: usize) -> Result<()> {
    if len != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: len,
        });
    }
    Ok(())
}

/// Classifies a nonzero vector. Isotropy and positivity are measured relative
/// to `‖σ‖²` times the largest Gram entry.
pub fn membership(space: &Space, sigma: &[C64], tol: f64) -> Result<Membership> {
    check_len(space, sigma.len())?;
    let n2 = linalg::norm(sigma).powi(2);
    if n2 == 0.0 || !n2.is_finite() {
        return Err(Error::ZeroVector);
    }
    let unit = n2 * space.scale();
    let isotropic = space.q(sigma, sigma).norm() <= tol * unit;
    let positive = space.hnorm(sigma) > tol * unit;
    Ok(match (isotropic, positive) {
        (true, true) => Membership::InD,
        (true, false) => Membership::InBoundaryQuadric,
        (false, true) => Membership::InOmegaOnly,
        (false, false) => Membership::Outside,
    })
}

/// A point of `D` (isotropic) or of `Ω`, stored with its canonical
/// representative.
#[derive(Debug, Clone)]
pub struct PeriodPoint {
    space: Arc<Space>,
    rep: CVec,
    isotropic: bool,
}

impl PeriodPoint {
    /// A point of `D`.
    pub fn in_d(space: Arc<Space>, sigma: &[C64]) -> Result<Self> {
        Self::in_d_tol(space, sigma, ISOTROPY_REL)
    }

    pub fn in_d_tol(space: Arc<Space>, sigma: &[C64], tol: f64) -> Result<Self> {
        match membership(&space, sigma, tol)? {
            Membership::InD => Ok(Self {
                rep: linalg::canonical_normalize(sigma)?,
                space,
                isotropic: true,
            }),
            other => Err(Error::NotInDomain(format!("expected a point of D, found {other:?}"))),
        }
    }

    /// A point of `Ω`; isotropic inputs are flagged as points of `D`.
    pub fn in_omega(space: Arc<Space>, sigma: &[C64]) -> Result<Self> {
        match membership(&space, sigma, ISOTROPY_REL)? {
            m @ (Membership::InD | Membership::InOmegaOnly) => Ok(Self {
                rep: linalg::canonical_normalize(sigma)?,
                space,
                isotropic: m == Membership::InD,
            }),
            other => Err(Error::NotInDomain(format!("expected a point of Ω, found {other:?}"))),
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn rep(&self) -> &[C64] {
        &self.rep
    }

    pub fn is_isotropic(&self) -> bool {
        self.isotropic
    }

    /// `q(σ, σ̄)` for the canonical representative.
    pub fn q_norm(&self) -> f64 {
        self.space.hnorm(&self.rep)
    }

    pub fn dim(&self) -> usize {
        self.rep.len()
    }

    /// Projective equality of the underlying lines.
    pub fn same_point(&self, other: &PeriodPoint, tol: f64) -> bool {
        self.space.as_ref() == other.space.as_ref()
            && linalg::projective_distance(&self.rep, &other.rep) < tol
    }

    /// Image under a real linear map (rows).
    pub fn transform(&self, g: &[RVec]) -> Result<Self> {
        let image = linalg::cmatvec(g, &self.rep);
        if self.isotropic {
            Self::in_d(self.space.clone(), &image)
        } else {
            Self::in_omega(self.space.clone(), &image)
        }
    }
}

/// A tangent vector at a period point, defined modulo the line itself.
#[derive(Debug, Clone)]
pub struct TangentRep {
    pub base: PeriodPoint,
    pub vec: CVec,
}

impl TangentRep {
    /// Checks `q(v, σ) = 0` for base points in `D`.
    pub fn new(base: &PeriodPoint, v: &[C64]) -> Result<Self> {
        check_len(&base.space, v.len())?;
        if base.isotropic {
            let res = base.space.q(v, &base.rep).norm();
            let unit = linalg::norm(v).max(1.0) * base.space.scale();
            if res > 1e-8 * unit {
                return Err(Error::Precondition(format!(
                    "vector is not tangent to the quadric (|q(v,σ)| = {res:.3e})"
                )));
            }
        }
        Ok(Self {
            base: base.clone(),
            vec: v.to_vec(),
        })
    }

    /// Representative with `q(v, σ̄) = 0`.
    pub fn canonical(&self) -> CVec {
        let s = &self.base.rep;
        let c = self.base.space.q(&self.vec, &linalg::conj(s)) / self.base.q_norm();
        linalg::axpy(&self.vec, -c, s)
    }
}

/// `h_alg(v, w)` at the line spanned by `sigma`.
pub fn h_alg(space: &Space, sigma: &[C64], v: &[C64], w: &[C64]) -> C64 {
    let sbar = linalg::conj(sigma);
    let big_q = space.hnorm(sigma);
    let num = space.h(v, w) * big_q - space.q(v, &sbar) * space.h(sigma, w);
    -num / (big_q * big_q)
}

/// `h_alg` between two tangent vectors at the same point.
pub fn gs_metric(v: &TangentRep, w: &TangentRep) -> Result<C64> {
    if !v.base.same_point(&w.base, 1e-12) {
        return Err(Error::Precondition("tangent vectors at different base points".into()));
    }
    Ok(h_alg(&v.base.space, &v.base.rep, &v.vec, &w.vec))
}

/// Components of `v = λ₂₀σ + α + λ₀₂σ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct HodgeParts {
    pub l20: C64,
    pub alpha: CVec,
    pub l02: C64,
}

/// Hodge decomposition of `v` with respect to the representative `sigma` of
/// an isotropic positive line.
pub fn hodge_project_rep(space: &Space, sigma: &[C64], v: &[C64]) -> Result<HodgeParts> {
    check_len(space, v.len())?;
    if membership(space, sigma, ISOTROPY_REL)? != Membership::InD {
        return Err(Error::NotInDomain("Hodge decomposition needs a point of D".into()));
    }
    let sbar = linalg::conj(sigma);
    let big_q = space.hnorm(sigma);
    let l20 = space.q(v, &sbar) / big_q;
    let l02 = space.q(v, sigma) / big_q;
    let alpha = linalg::axpy(&linalg::axpy(v, -l20, sigma), -l02, &sbar);
    Ok(HodgeParts { l20, alpha, l02 })
}

pub fn hodge_project(point: &PeriodPoint, v: &[C64]) -> Result<HodgeParts> {
    hodge_project_rep(&point.space, &point.rep, v)
}

/// The point `e₁ + i e₂` of a `q`-orthonormal positive pair.
pub fn from_positive_2plane(space: Arc<Space>, e1: &[f64], e2: &[f64]) -> Result<PeriodPoint> {
    check_len(&space, e1.len())?;
    check_len(&space, e2.len())?;
    let tol = 1e-9 * space.scale() * (1.0 + linalg::rnorm(e1) * linalg::rnorm(e2));
    let (a, b, c) = (space.q_real(e1, e1), space.q_real(e2, e2), space.q_real(e1, e2));
    if (a - 1.0).abs() > tol || (b - 1.0).abs() > tol || c.abs() > tol {
        return Err(Error::Precondition(format!(
            "pair is not q-orthonormal positive: q(e1,e1)={a}, q(e2,e2)={b}, q(e1,e2)={c}"
        )));
    }
    let sigma: CVec = e1.iter().zip(e2).map(|(x, y)| C64::new(*x, *y)).collect();
    PeriodPoint::in_d(space, &sigma)
}

/// Oriented `q`-orthonormal basis of the positive 2-plane of a point of `D`.
pub fn to_positive_2plane(point: &PeriodPoint) -> Result<(RVec, RVec)> {
    if !point.isotropic {
        return Err(Error::NotInDomain("positive 2-plane needs a point of D".into()));
    }
    let k = (2.0 / point.q_norm()).sqrt();
    let e1: RVec = point.rep.iter().map(|z| z.re * k).collect();
    let e2: RVec = point.rep.iter().map(|z| z.im * k).collect();
    let refined = q_gram_schmidt_positive(&point.space, &[e1, e2])?;
    Ok((refined[0].clone(), refined[1].clone()))
}

/// Homogeneous tangent vectors for the affine chart `z₀ = 1` at `sigma`.
///
/// For `Ω` these are `e₁, …, e_{n−1}`. For `D` the chart coordinate `k ≥ 1`
/// with the largest `|(Gσ)_k|` is solved for, giving `e_j − ((Gσ)_j/(Gσ)_k) e_k`.
pub fn chart_tangent_basis(space: &Space, sigma: &[C64], which: Domain) -> Result<Vec<CVec>> {
    check_len(space, sigma.len())?;
    let n = space.dim();
    if sigma[0].norm() <= 1e-12 * linalg::norm(sigma) {
        return Err(Error::ChartInvalid("first homogeneous coordinate vanishes".into()));
    }
    match which {
        Domain::Omega => Ok((1..n).map(|j| linalg::cunit_vector(n, j)).collect()),
        Domain::D => {
            let gs = space.apply(sigma);
            let k = (1..n)
                .max_by(|&a, &b| gs[a].norm().total_cmp(&gs[b].norm()))
                .expect("dimension at least four");
            if gs[k].norm() == 0.0 {
                return Err(Error::ChartInvalid("quadric is singular in this chart".into()));
            }
            Ok((1..n)
                .filter(|&j| j != k)
                .map(|j| {
                    let mut v = linalg::cunit_vector(n, j);
                    v[k] = -gs[j] / gs[k];
                    v
                })
                .collect())
        }
    }
}

/// Gram matrix `M_ij = h(b_i, b_j)` of a sesquilinear form on a basis.
pub fn gram_matrix(basis: &[CVec], form: impl Fn(&[C64], &[C64]) -> C64) -> Vec<CVec> {
    basis
        .iter()
        .map(|a| basis.iter().map(|b| form(a, b)).collect())
        .collect()
}

/// Matrix of `h_alg` in the chart `z₀ = 1` at the line of `sigma`.
pub fn metric_matrix_chart(space: &Space, sigma: &[C64], which: Domain) -> Result<Vec<CVec>> {
    if which == Domain::D && membership(space, sigma, ISOTROPY_REL)? != Membership::InD {
        return Err(Error::NotInDomain("restricted chart matrix needs a point of D".into()));
    }
    if which == Domain::Omega && space.hnorm(sigma) <= 0.0 {
        return Err(Error::NotInDomain("chart matrix needs a point of Ω".into()));
    }
    let basis = chart_tangent_basis(space, sigma, which)?;
    let s0: CVec = linalg::scale(sigma[0].inv(), sigma);
    Ok(gram_matrix(&basis, |a, b| h_alg(space, &s0, a, b)))
}

/// Richardson-extrapolated five-point Laplacian of `f` at `ζ = 0`.
pub fn laplacian(f: impl Fn(C64) -> f64, h: f64) -> f64 {
    let five = |h: f64| {
        let c = f(ZERO);
        (f(C64::new(h, 0.0)) + f(C64::new(-h, 0.0)) + f(C64::new(0.0, h)) + f(C64::new(0.0, -h))
            - 4.0 * c)
            / (h * h)
    };
    (4.0 * five(0.5 * h) - five(h)) / 3.0
}

/// Levi form `Σ u_i w̄_j ∂_i∂̄_j φ` at `z`, by polarization of directional
/// Laplacians.
pub fn levi_form(phi: &dyn Fn(&[C64]) -> f64, z: &[C64], u: &[C64], w: &[C64], h: f64) -> C64 {
    let diag = |d: &[C64]| {
        let scale = linalg::norm(d);
        if scale == 0.0 {
            return 0.0;
        }
        let hd = h / scale;
        0.25 * laplacian(|zeta| phi(&linalg::axpy(z, zeta, d)), hd)
    };
    let i = C64::new(0.0, 1.0);
    let plus = linalg::add(u, w);
    let minus = linalg::sub(u, w);
    let iplus = linalg::axpy(u, i, w);
    let iminus = linalg::axpy(u, -i, w);
    C64::new(diag(&plus) - diag(&minus), 0.0) * 0.25
        + i * (diag(&iplus) - diag(&iminus)) * 0.25
}

/// Matrix of `−i∂∂̄ log q(s, s̄)` with respect to `(i/2) dz_i ∧ dz̄_j`, for a
/// holomorphic section `s` of `m` chart variables, at `z`.
pub fn curvature_form_matrix(
    space: &Space,
    section: &dyn Fn(&[C64]) -> CVec,
    z: &[C64],
    h: f64,
) -> Vec<CVec> {
    let m = z.len();
    let phi = |x: &[C64]| space.hnorm(&section(x)).ln();
    let basis: Vec<CVec> = (0..m).map(|j| linalg::cunit_vector(m, j)).collect();
    gram_matrix(&basis, |a, b| levi_form(&phi, z, a, b, h) * -2.0)
}

/// Result of [`curvature_factor_calibrate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    pub kappa: f64,
    pub spread: f64,
    pub ratios: Vec<f64>,
    /// Largest `‖C − κ_s M‖ / ‖C‖` over the samples.
    pub max_shape_residual: f64,
}

/// Random point of `D`.
pub fn random_point_in_d<R: Rng + ?Sized>(space: &Arc<Space>, rng: &mut R) -> Result<PeriodPoint> {
    let (pos, neg) = positive_negative_split(space)?;
    let n = space.dim();
    let draw = |rng: &mut R| -> RVec {
        let a = rng::normal_vec(rng, 3);
        let b = rng::normal_vec(rng, neg.len());
        let rho = 0.9 * rng.gen::<f64>() * linalg::rnorm(&a) / linalg::rnorm(&b).max(1e-300);
        let mut v = vec![0.0; n];
        for (c, f) in a.iter().zip(&pos) {
            for i in 0..n {
                v[i] += c * f[i];
            }
        }
        for (c, g) in b.iter().zip(&neg) {
            for i in 0..n {
                v[i] += rho * c * g[i];
            }
        }
        v
    };
    for _ in 0..256 {
        let x1 = draw(rng);
        let x2 = draw(rng);
        if let Ok(frame) = q_gram_schmidt_positive(space, &[x1, x2]) {
            let min_norm = frame.iter().map(|f| linalg::rnorm(f)).fold(0.0, f64::max);
            if min_norm < 1e6 {
                return from_positive_2plane(space.clone(), &frame[0], &frame[1]);
            }
        }
    }
    Err(Error::NotFound)
}

/// Random point of `Ω`: `a + b` with `a` in a maximal positive subspace, `b`
/// in the complementary negative subspace and `‖b‖ < ‖a‖`.
pub fn random_point_in_omega<R: Rng + ?Sized>(
    space: &Arc<Space>,
    rng: &mut R,
) -> Result<PeriodPoint> {
    let (pos, neg) = positive_negative_split(space)?;
    let v = omega_sample(&pos, &neg, 0.9 * rng.gen::<f64>(), rng);
    PeriodPoint::in_omega(space.clone(), &v)
}

/// `a + b` with `a`, `b` complex gaussian in the given `q`-orthonormal
/// positive and negative bases, rescaled so that `‖b‖ = ρ‖a‖`.
pub fn omega_sample<R: Rng + ?Sized>(pos: &[RVec], neg: &[RVec], rho: f64, rng: &mut R) -> CVec {
    let n = pos[0].len();
    let a = rng::complex_normal_vec(rng, pos.len());
    let b = rng::complex_normal_vec(rng, neg.len());
    let na = linalg::norm(&a);
    let nb = linalg::norm(&b).max(1e-300);
    let mut v = vec![ZERO; n];
    for (c, f) in a.iter().zip(pos) {
        for i in 0..n {
            v[i] += c * f[i];
        }
    }
    for (c, g) in b.iter().zip(neg) {
        for i in 0..n {
            v[i] += c * (rho * na / nb) * g[i];
        }
    }
    v
}

/// Basis of the `(1,1)` part `(σ, σ̄)^⊥` at a point of `D`.
pub fn h11_basis(point: &PeriodPoint) -> Result<Vec<CVec>> {
    if !point.isotropic {
        return Err(Error::NotInDomain("(1,1) part needs a point of D".into()));
    }
    orthogonal_complement(
        &point.space,
        &[point.rep.clone(), linalg::conj(&point.rep)],
        EIGEN_REL,
    )
}

/// Basis of `{v : q(v, σ̄) = 0}`, a complement of the line in `ℂ^{3+p}`.
pub fn omega_tangent_basis(point: &PeriodPoint) -> Result<Vec<CVec>> {
    orthogonal_complement(&point.space, &[linalg::conj(&point.rep)], EIGEN_REL)
}

fn random_combination<R: Rng + ?Sized>(basis: &[CVec], rng: &mut R) -> CVec {
    let n = basis[0].len();
    basis.iter().fold(vec![ZERO; n], |acc, b| {
        linalg::axpy(&acc, rng::complex_normal(rng), b)
    })
}

/// Measures `κ_geom`, the ratio of the finite-difference curvature matrix of
/// the tautological line to the `h_alg` matrix, along random holomorphic
/// sections through random points of `D` and `Ω`.
pub fn curvature_factor_calibrate<R: Rng + ?Sized>(
    space: &Arc<Space>,
    samples: usize,
    rng: &mut R,
) -> Result<Calibration> {
    let mut ratios = Vec::with_capacity(samples);
    let mut max_shape_residual: f64 = 0.0;
    for k in 0..samples {
        let on_d = k % 2 == 0;
        let point = if on_d {
            random_point_in_d(space, rng)?
        } else {
            random_point_in_omega(space, rng)?
        };
        let scale = rng.gen_range(0.5..4.0);
        let sigma: CVec = linalg::scale(C64::from_polar(scale, rng.gen_range(0.0..std::f64::consts::TAU)), &point.rep);
        let (dirs, section) = random_section(space, &point, &sigma, rng)?;
        let m = dirs.len();
        let z0 = vec![ZERO; m];
        let curv = curvature_form_matrix(space, section.as_ref(), &z0, FD_STEP);
        let metric = gram_matrix(&dirs, |a, b| h_alg(space, &sigma, a, b));
        let dot = |a: &[CVec], b: &[CVec]| -> C64 {
            a.iter()
                .flatten()
                .zip(b.iter().flatten())
                .fold(ZERO, |acc, (x, y)| acc + x * y.conj())
        };
        let ratio = (dot(&curv, &metric) / dot(&metric, &metric)).re;
        let resid: f64 = curv
            .iter()
            .flatten()
            .zip(metric.iter().flatten())
            .map(|(c, g)| (c - g * ratio).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / dot(&curv, &curv).re.sqrt();
        max_shape_residual = max_shape_residual.max(resid);
        ratios.push(ratio);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / mean.abs();
    if spread > CALIBRATION_SPREAD || max_shape_residual > CALIBRATION_SPREAD {
        return Err(Error::Numeric(format!(
            "curvature ratio is not constant: spread {spread:.3e}, shape residual {max_shape_residual:.3e}"
        )));
    }
    Ok(Calibration {
        kappa: mean,
        spread,
        ratios,
        max_shape_residual,
    })
}

type Section = Box<dyn Fn(&[C64]) -> CVec>;

/// A holomorphic section through `sigma` with random first and second jets.
/// On `D` it stays on the quadric: `s(z) = σ + x(z) + μ(z) σ̄` with
/// `x(z) = Σ z_k v_k ∈ (σ, σ̄)^⊥` and `μ = −q(x, x) / 2q(σ, σ̄)`.
fn random_section<R: Rng + ?Sized>(
    space: &Arc<Space>,
    point: &PeriodPoint,
    sigma: &[C64],
    rng: &mut R,
) -> Result<(Vec<CVec>, Section)> {
    let m = 3.min(space.dim() - 2);
    let sp = space.clone();
    let s0 = sigma.to_vec();
    if point.isotropic {
        let basis = h11_basis(point)?;
        let dirs: Vec<CVec> = (0..m).map(|_| random_combination(&basis, rng)).collect();
        let d2 = dirs.clone();
        let sbar = linalg::conj(sigma);
        let big_q = space.hnorm(sigma);
        let section = move |z: &[C64]| {
            let x = z
                .iter()
                .zip(&d2)
                .fold(vec![ZERO; s0.len()], |acc, (c, v)| linalg::axpy(&acc, *c, v));
            let mu = -sp.q(&x, &x) / (2.0 * big_q);
            linalg::axpy(&linalg::add(&s0, &x), mu, &sbar)
        };
        Ok((dirs, Box::new(section)))
    } else {
        let basis = omega_tangent_basis(point)?;
        let dirs: Vec<CVec> = (0..m).map(|_| random_combination(&basis, rng)).collect();
        let quad: Vec<CVec> = (0..m * m)
            .map(|_| linalg::scale(C64::new(0.3, 0.0), &rng::complex_normal_vec(rng, s0.len())))
            .collect();
        let d2 = dirs.clone();
        let section = move |z: &[C64]| {
            let mut s = s0.clone();
            for (c, v) in z.iter().zip(&d2) {
                s = linalg::axpy(&s, *c, v);
            }
            for i in 0..z.len() {
                for j in 0..z.len() {
                    s = linalg::axpy(&s, z[i] * z[j], &quad[i * z.len() + j]);
                }
            }
            s
        };
        Ok((dirs, Box::new(section)))
    }
}

/// Signature of `h_alg` on the tangent space: `(p, 1)` on `D` and `(p, 2)` on `Ω`.
pub fn metric_signature_at(point: &PeriodPoint) -> Result<Signature> {
    let basis = if point.isotropic {
        h11_basis(point)?
    } else {
        omega_tangent_basis(point)?
    };
    let gram = gram_matrix(&basis, |a, b| h_alg(&point.space, &point.rep, a, b));
    let (vals, _) = linalg::herm_eigen(&gram);
    let rho = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (mut positive, mut negative) = (0, 0);
    for v in &vals {
        if v.abs() <= EIGEN_REL * rho {
            return Err(Error::Degenerate(v.abs()));
        }
        if *v > 0.0 {
            positive += 1;
        } else {
            negative += 1;
        }
    }
    Ok(Signature::new(positive, negative, 0))
}

/// Derivative of the chart matrix `M_ij(s) = h_alg(e_i, e_j)` at `s` along
/// the holomorphic direction `ds`.
pub(crate) fn chart_matrix_derivative(space: &Space, s: &[C64], ds: &[C64], idx: &[usize]) -> Vec<CVec> {
    let sbar = linalg::conj(s);
    let big_q = space.hnorm(s);
    let dq = space.q(ds, &sbar);
    let gsbar = space.apply(&sbar);
    let gs = space.apply(s);
    let gds = space.apply(ds);
    let q2 = big_q * big_q;
    let q3 = q2 * big_q;
    idx.iter()
        .map(|&i| {
            idx.iter()
                .map(|&j| {
                    let gij = space.entry(i, j);
                    let base = C64::new(gij * big_q, 0.0) - gsbar[i] * gs[j];
                    -(dq * gij - gsbar[i] * gds[j]) / q2 + base * dq * 2.0 / q3
                })
                .collect()
        })
        .collect()
}

/// Holomorphic sectional curvature of `h_alg` at a point of `Ω` in the
/// direction `v` (a homogeneous tangent vector; its component along the line
/// is ignored).
///
/// Computed as `[−∂∂̄F + a M⁻¹ ā] / F²` in the affine chart of the largest
/// homogeneous coordinate, where `F(ζ) = uᵀ M(z + ζu) ū`, the Laplacian of `F`
/// is taken by finite differences and `a = ∂_ζ(uᵀM)` analytically.
pub fn hsc(point: &PeriodPoint, v: &[C64]) -> Result<f64> {
    hsc_with_step(point, v, FD_STEP)
}

pub fn hsc_with_step(point: &PeriodPoint, v: &[C64], step: f64) -> Result<f64> {
    let space = point.space.as_ref();
    check_len(space, v.len())?;
    let sigma = &point.rep;
    let n = space.dim();
    let c = (0..n)
        .max_by(|&a, &b| sigma[a].norm().total_cmp(&sigma[b].norm()).then(b.cmp(&a)))
        .expect("nonempty");
    let s0 = linalg::scale(sigma[c].inv(), sigma);
    let vshift = linalg::axpy(v, -v[c] / sigma[c], sigma);
    let dir = linalg::scale(sigma[c].inv(), &vshift);
    let idx: Vec<usize> = (0..n).filter(|&j| j != c).collect();
    let unorm = linalg::norm(&dir);
    let f_at = |zeta: C64| h_alg(space, &linalg::axpy(&s0, zeta, &dir), &dir, &dir).re;
    let big_f = f_at(ZERO);
    if big_f.abs() <= 1e-10 * unorm * unorm * space.scale() / space.hnorm(&s0) {
        return Err(Error::IsotropicDirection(format!(
            "h_alg(v, v) = {big_f:.3e} vanishes"
        )));
    }
    let h = step * linalg::norm(&s0) / unorm;
    let lap = laplacian(f_at, h);
    let dm = chart_matrix_derivative(space, &s0, &dir, &idx);
    let u: CVec = idx.iter().map(|&j| dir[j]).collect();
    let a: CVec = (0..idx.len())
        .map(|j| (0..idx.len()).fold(ZERO, |acc, i| acc + u[i] * dm[i][j]))
        .collect();
    let basis: Vec<CVec> = idx.iter().map(|&j| linalg::cunit_vector(n, j)).collect();
    let m = gram_matrix(&basis, |x, y| h_alg(space, &s0, x, y));
    let b: CVec = a.iter().map(|z| z.conj()).collect();
    let minv_b = linalg::solve_complex(&m, &b)?;
    let second = a.iter().zip(&minv_b).fold(ZERO, |acc, (x, y)| acc + x * y).re;
    let r = -0.25 * lap + second;
    Ok(r / (big_f * big_f))
}

/// A positive 3-plane `W` with a `q`-orthonormal basis; its period points form
/// the conic `T_W`.
#[derive(Debug, Clone)]
pub struct TwistorLine {
    space: Arc<Space>,
    basis: [RVec; 3],
}

impl TwistorLine {
    /// Orthonormalizes the spanning vectors; fails unless `q` is positive
    /// definite on their span.
    pub fn new(space: Arc<Space>, w: &[RVec]) -> Result<Self> {
        if w.len() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: w.len(),
            });
        }
        for v in w {
            check_len(&space, v.len())?;
        }
        let gram = space.restricted_gram(w);
        let (vals, _) = linalg::sym_eigen(&gram);
        let top = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if vals[0] <= EIGEN_REL * top {
            return Err(Error::Precondition(format!(
                "span is not positive definite (smallest eigenvalue {:.3e})",
                vals[0]
            )));
        }
        let frame = q_gram_schmidt_positive(&space, w)?;
        Ok(Self {
            space,
            basis: [frame[0].clone(), frame[1].clone(), frame[2].clone()],
        })
    }

    /// The line through the positive 2-plane of `point` and the vector `extra`.
    pub fn through(point: &PeriodPoint, extra: &[f64]) -> Result<Self> {
        let (e1, e2) = to_positive_2plane(point)?;
        Self::new(point.space.clone(), &[e1, e2, extra.to_vec()])
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn basis(&self) -> &[RVec; 3] {
        &self.basis
    }

    /// `t ↦ (1 − t²) w₁ + i(1 + t²) w₂ + 2t w₃`, the affine part `s = 1` of the
    /// degree-2 parametrization.
    pub fn parametrize(&self) -> PolynomialCurve {
        let [w1, w2, w3] = &self.basis;
        let i = C64::new(0.0, 1.0);
        let comps = (0..self.space.dim())
            .map(|k| {
                let a = C64::new(w1[k], 0.0) + i * w2[k];
                let b = C64::new(2.0 * w3[k], 0.0);
                let c = C64::new(-w1[k], 0.0) + i * w2[k];
                Poly(vec![a, b, c])
            })
            .collect();
        PolynomialCurve { components: comps }
    }

    /// Image of `[s : t]`.
    pub fn point_at(&self, s: C64, t: C64) -> CVec {
        let [w1, w2, w3] = &self.basis;
        let i = C64::new(0.0, 1.0);
        (0..self.space.dim())
            .map(|k| (s * s - t * t) * w1[k] + i * (s * s + t * t) * w2[k] + s * t * 2.0 * w3[k])
            .collect()
    }

    /// Relative distance of `v` from `W_ℂ`.
    pub fn residual(&self, v: &[C64]) -> f64 {
        let proj = self.basis.iter().fold(vec![ZERO; v.len()], |acc, w| {
            let c = self.space.q(v, &linalg::complexify(w));
            linalg::axpy(&acc, c, &linalg::complexify(w))
        });
        linalg::norm(&linalg::sub(v, &proj)) / linalg::norm(v)
    }

    pub fn contains(&self, point: &PeriodPoint, tol: f64) -> bool {
        self.residual(&point.rep) < tol
    }
}

/// `twistor_parametrize` as a free function.
pub fn twistor_parametrize(line: &TwistorLine) -> PolynomialCurve {
    line.parametrize()
}

/// `h_alg`-orthogonal splitting of `T_{D,p}` into the tangent space of the
/// subdomain orthogonal to `a` and the tangent line of the twistor line
/// through `a`. Both factors are returned as bases of `(1,1)` representatives.
pub fn tangent_split(point: &PeriodPoint, a: &[f64]) -> Result<(Vec<CVec>, Vec<CVec>)> {
    let space = point.space.as_ref();
    check_len(space, a.len())?;
    let ac = linalg::complexify(a);
    let unit = linalg::rnorm(a) * space.scale();
    if space.q(&ac, &point.rep).norm() > 1e-9 * unit || space.q_real(a, a) <= 0.0 {
        return Err(Error::Precondition(
            "a must be a positive class of type (1,1) at the point".into(),
        ));
    }
    if !point.isotropic {
        return Err(Error::NotInDomain("tangent split needs a point of D".into()));
    }
    let first = orthogonal_complement(
        space,
        &[point.rep.clone(), linalg::conj(&point.rep), ac.clone()],
        EIGEN_REL,
    )?;
    Ok((first, vec![ac]))
}

/// A `q`-orthonormal 4-frame of signature `(3, 1)` (three positive vectors,
/// then one negative) identifying a subspace with the standard model
/// `x² + y² + z² − t²`.
#[derive(Debug, Clone)]
pub struct Envelope {
    space: Arc<Space>,
    basis: [RVec; 4],
}

const MODEL_SIGNS: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

impl Envelope {
    pub fn new(space: Arc<Space>, basis: [RVec; 4]) -> Result<Self> {
        for (i, a) in basis.iter().enumerate() {
            check_len(&space, a.len())?;
            for (j, b) in basis.iter().enumerate() {
                let target = if i == j { MODEL_SIGNS[i] } else { 0.0 };
                let got = space.q_real(a, b);
                if (got - target).abs() > 1e-9 * (1.0 + linalg::rnorm(a) * linalg::rnorm(b)) {
                    return Err(Error::Precondition(format!(
                        "envelope frame is not q-orthonormal of signature (3,1): entry ({i},{j}) = {got}"
                    )));
                }
            }
        }
        Ok(Self { space, basis })
    }

    /// Completes a positive 3-plane by the first negative vector of a signed
    /// orthonormal basis of its orthogonal complement.
    pub fn from_positive_3plane(space: Arc<Space>, w: &[RVec; 3]) -> Result<Self> {
        let perp = real_orthogonal_complement(&space, w, EIGEN_REL)?;
        let signed = signed_orthonormal_basis(&space, &perp)?;
        let neg = signed
            .into_iter()
            .find(|(s, _)| *s < 0.0)
            .map(|(_, v)| v)
            .ok_or(Error::NotFound)?;
        let frame = q_gram_schmidt_positive(&space, w)?;
        Self::new(
            space,
            [frame[0].clone(), frame[1].clone(), frame[2].clone(), neg],
        )
    }

    pub fn from_twistor(line: &TwistorLine) -> Result<Self> {
        Self::from_positive_3plane(line.space.clone(), &line.basis)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn basis(&self) -> &[RVec; 4] {
        &self.basis
    }

    /// Model coordinates `c_k = ±q(v, b_k)` of the projection onto the span.
    pub fn to_model(&self, v: &[C64]) -> [C64; 4] {
        let mut c = [ZERO; 4];
        for k in 0..4 {
            c[k] = self.space.q(v, &linalg::complexify(&self.basis[k])) * MODEL_SIGNS[k];
        }
        c
    }

    pub fn from_model(&self, c: &[C64; 4]) -> CVec {
        let n = self.space.dim();
        (0..4).fold(vec![ZERO; n], |acc, k| {
            linalg::axpy(&acc, c[k], &linalg::complexify(&self.basis[k]))
        })
    }

    /// Relative distance of `v` from the complexified span.
    pub fn residual(&self, v: &[C64]) -> f64 {
        let back = self.from_model(&self.to_model(v));
        linalg::norm(&linalg::sub(v, &back)) / linalg::norm(v)
    }

    /// Maps a polynomial curve in model coordinates into the ambient space.
    pub fn curve_from_model(&self, model: &PolynomialCurve) -> Result<PolynomialCurve> {
        let basis: Vec<CVec> = self.basis.iter().map(|b| linalg::complexify(b)).collect();
        PolynomialCurve::from_combination(&model.components, &basis)
    }
}

/// A signature-`(3,1)` envelope through `point`: its positive 2-plane, one
/// positive and one negative vector of the orthogonal complement.
pub fn subdomain_embed(point: &PeriodPoint) -> Result<Envelope> {
    let (e1, e2) = to_positive_2plane(point)?;
    let perp = real_orthogonal_complement(&point.space, &[e1.clone(), e2.clone()], EIGEN_REL)?;
    let signed = signed_orthonormal_basis(&point.space, &perp)?;
    let pos = signed.iter().find(|(s, _)| *s > 0.0).map(|(_, v)| v.clone());
    let neg = signed.iter().find(|(s, _)| *s < 0.0).map(|(_, v)| v.clone());
    match (pos, neg) {
        (Some(w3), Some(w4)) => Envelope::new(point.space.clone(), [e1, e2, w3, w4]),
        _ => Err(Error::Numeric(
            "orthogonal complement of a positive 2-plane has no (1,1) plane".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn std(p: usize) -> Arc<Space> {
        Arc::new(Space::standard(p).unwrap())
    }

    fn o(p: usize) -> CVec {
        let mut v = vec![c(0.0, 0.0); 3 + p];
        v[0] = c(1.0, 0.0);
        v[1] = c(0.0, 1.0);
        v
    }

    #[test]
    fn membership_examples() {
        let s = std(1);
        assert_eq!(membership(&s, &o(1), 1e-9).unwrap(), Membership::InD);
        let e1 = linalg::cunit_vector(4, 0);
        assert_eq!(membership(&s, &e1, 1e-9).unwrap(), Membership::InOmegaOnly);
        let b = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(
            membership(&s, &b, 1e-9).unwrap(),
            Membership::InBoundaryQuadric
        );
        assert_eq!(
            membership(&s, &linalg::cunit_vector(4, 3), 1e-9).unwrap(),
            Membership::Outside
        );
        assert!(matches!(
            membership(&s, &[c(0.0, 0.0); 4], 1e-9),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn hodge_examples() {
        let s = std(2);
        let parts = hodge_project_rep(&s, &o(2), &linalg::cunit_vector(5, 0)).unwrap();
        assert!((parts.l20 - c(0.5, 0.0)).norm() < 1e-15);
        assert!((parts.l02 - c(0.5, 0.0)).norm() < 1e-15);
        assert!(linalg::norm(&parts.alpha) < 1e-15);
        let e3 = linalg::cunit_vector(5, 2);
        let parts = hodge_project_rep(&s, &o(2), &e3).unwrap();
        assert_eq!(parts.alpha, e3);
        let parts = hodge_project_rep(&s, &o(2), &o(2)).unwrap();
        assert!((parts.l20 - c(1.0, 0.0)).norm() < 1e-15 && parts.l02.norm() < 1e-15);
    }

    #[test]
    fn metric_examples_at_base_point() {
        let s = std(3);
        let sig = o(3);
        let e = |k| linalg::cunit_vector(6, k);
        assert!((h_alg(&s, &sig, &e(2), &e(2)) - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((h_alg(&s, &sig, &e(3), &e(3)) - c(0.5, 0.0)).norm() < 1e-15);
        assert!(h_alg(&s, &sig, &e(2), &e(3)).norm() < 1e-15);
    }

    #[test]
    fn chart_matrices_at_base_point() {
        let s = std(2);
        let om = metric_matrix_chart(&s, &o(2), Domain::Omega).unwrap();
        let expect = [-0.25, -0.5, 0.5, 0.5];
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert!((om[i][j] - c(e, 0.0)).norm() < 1e-15);
            }
        }
        let d = metric_matrix_chart(&s, &o(2), Domain::D).unwrap();
        assert_eq!(d.len(), 3);
        assert!((d[0][0] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((d[1][1] - c(0.5, 0.0)).norm() < 1e-15);
        let mut bad = o(2);
        bad[0] = c(0.0, 0.0);
        bad[2] = c(1.0, 0.0);
        assert!(matches!(
            metric_matrix_chart(&s, &bad, Domain::D),
            Err(Error::ChartInvalid(_))
        ));
    }

    #[test]
    fn two_plane_round_trip_and_orientation() {
        let s = std(2);
        let e1 = linalg::unit_vector(5, 0);
        let e2 = linalg::unit_vector(5, 1);
        let a = from_positive_2plane(s.clone(), &e1, &e2).unwrap();
        let b = from_positive_2plane(s.clone(), &e2, &e1).unwrap();
        assert!(!a.same_point(&b, 1e-6));
        let (f1, f2) = to_positive_2plane(&a).unwrap();
        let back = from_positive_2plane(s, &f1, &f2).unwrap();
        assert!(back.same_point(&a, 1e-12));
        assert!(from_positive_2plane(std(2), &e1, &linalg::unit_vector(5, 3)).is_err());
    }

    #[test]
    fn curvature_matrix_at_o_is_twice_h_alg() {
        let s = std(2);
        let section = |z: &[C64]| {
            let mut v = vec![c(1.0, 0.0)];
            v.extend_from_slice(z);
            v
        };
        let z0 = vec![c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let curv = curvature_form_matrix(&s, &section, &z0, FD_STEP);
        let expect = [-0.5, -1.0, 1.0, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert!((curv[i][j] - c(e, 0.0)).norm() < 1e-6, "{i}{j} {}", curv[i][j]);
            }
        }
    }

    #[test]
    fn twistor_line_through_base_point() {
        let s = std(2);
        let line = TwistorLine::new(
            s.clone(),
            &[
                linalg::unit_vector(5, 0),
                linalg::unit_vector(5, 1),
                linalg::unit_vector(5, 2),
            ],
        )
        .unwrap();
        let start = line.point_at(c(1.0, 0.0), c(0.0, 0.0));
        assert!(linalg::projective_distance(&start, &o(2)) < 1e-15);
        let curve = line.parametrize();
        let t = c(0.3, -1.2);
        assert!(linalg::norm(&linalg::sub(&curve.eval(t), &line.point_at(c(1.0, 0.0), t))) < 1e-14);
        assert!(TwistorLine::new(
            s,
            &[
                linalg::unit_vector(5, 0),
                linalg::unit_vector(5, 1),
                linalg::unit_vector(5, 3),
            ]
        )
        .is_err());
    }

    #[test]
    fn tangent_split_at_base_point() {
        let s = std(2);
        let p = PeriodPoint::in_d(s, &o(2)).unwrap();
        let (first, second) = tangent_split(&p, &linalg::unit_vector(5, 2)).unwrap();
        assert_eq!(first.len(), 2);
        assert_eq!(second.len(), 1);
        for f in &first {
            assert!(f[2].norm() < 1e-12 && f[0].norm() < 1e-12 && f[1].norm() < 1e-12);
            assert!(h_alg(p.space(), p.rep(), f, &second[0]).norm() < 1e-12);
        }
        assert!(tangent_split(&p, &linalg::unit_vector(5, 0)).is_err());
    }

    #[test]
    fn subdomain_at_base_point_is_coordinate_frame() {
        let s = std(2);
        let p = PeriodPoint::in_d(s, &o(2)).unwrap();
        let env = subdomain_embed(&p).unwrap();
        assert!(env.residual(p.rep()) < 1e-12);
        let gram = p.space().restricted_gram(env.basis());
        let sig = crate::indefinite_linear::signature(&gram, 1e-9).unwrap();
        assert_eq!(sig, Signature::new(3, 1, 0));
    }
}

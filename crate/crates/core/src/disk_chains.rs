//! Chains of positive holomorphic disks and their Poincaré lengths.
//!
//! A disk is stored as a polynomial curve into `ℂ^{3+p}` parametrized by the
//! closed unit disk; positivity means `h_alg(F′, F′) > 0` there. Chains inside
//! `D₂` are built from two explicit disks joining `([0:1],[0:1])` to
//! `([1:1],[0:1])`, transported by `SL₂(ℂ)` and by the swap of the factors.
//! Chains inside a general `D` follow a chain of twistor lines, each contained
//! in a `(3,1)` envelope identified with the `D₂` model.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{Poly, PolynomialCurve};
use crate::d2_model::{self, pair_eq, tilde, D2Point, Mat2, Pair};
use crate::error::{Error, Result};
use crate::indefinite_linear::{
    positive_vector_in, real_orthogonal_complement, QuadraticSpace,
};
use crate::linalg::{self, CVec, RVec, C64};
use crate::period_domain::{
    h_alg, subdomain_embed, to_positive_2plane, Envelope, PeriodPoint, TwistorLine,
};
use crate::scalar::Scalar;
use crate::tolerances::{CERT_GRID, EIGEN_REL, LINK_RESIDUAL, MAX_DISKS};

type Space = QuadraticSpace<f64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `artanh |(a − b)/(1 − āb)|`.
pub fn poincare_distance<S: Scalar>(a: Complex<S>, b: Complex<S>) -> Result<S> {
    if a.norm() >= S::one() || b.norm() >= S::one() {
        return Err(Error::Precondition(format!(
            "Poincaré distance needs points of the open unit disk, got |a|={}, |b|={}",
            a.norm(),
            b.norm()
        )));
    }
    let one = Complex::new(S::one(), S::zero());
    let r = ((a - b) / (one - a.conj() * b)).norm();
    Ok(r.min(S::one()).atanh())
}

/// `2 Re(λ / (λ|t|² − 1)²)`, the squared norm of `f_λ′(t)`.
pub fn positivity_profile<S: Scalar>(lambda: Complex<S>, t: Complex<S>) -> S {
    let one = Complex::new(S::one(), S::zero());
    let d = lambda * t.norm_sqr() - one;
    S::lit(2.0) * (lambda / (d * d)).re
}

/// `P(s) = Re(λ)|λ|² s² − 2|λ|² s + Re(λ)`; the profile equals
/// `2 P(|t|²) / |λ|t|² − 1|⁴`.
pub fn positivity_polynomial<S: Scalar>(lambda: Complex<S>, s: S) -> S {
    let m2 = lambda.norm_sqr();
    lambda.re * m2 * s * s - S::lit(2.0) * m2 * s + lambda.re
}

/// Roots `(|λ| ∓ |Im λ|)/(|λ| Re λ)` of `P`, smaller first.
pub fn positivity_roots<S: Scalar>(lambda: Complex<S>) -> Result<(S, S)> {
    if lambda.re <= S::zero() {
        return Err(Error::Precondition("positivity roots need Re λ > 0".into()));
    }
    let m = lambda.norm();
    let im = lambda.im.abs();
    let lo = lambda.re / (m * (m + im));
    let hi = (m + im) / (m * lambda.re);
    Ok((lo, hi))
}

/// `C_α = (|α| − |Im α|)/(|α| Re α)`, computed as `Re α / (|α|(|α| + |Im α|))`.
pub fn c_alpha<S: Scalar>(alpha: Complex<S>) -> Result<S> {
    check_not_positive_real(alpha)?;
    if alpha.re <= S::zero() {
        return Err(Error::Precondition(format!("need Re α > 0, got α = {alpha}")));
    }
    Ok(positivity_roots(alpha)?.0)
}

/// `C_α √n`.
pub fn positivity_radius<S: Scalar>(alpha: Complex<S>, n: u64) -> Result<S> {
    Ok(c_alpha(alpha)? * S::lit(n as f64).sqrt())
}

/// `√(C_α n)`, the radius of the largest disk on which `f_{α/n}` is positive.
pub fn sharp_positivity_radius<S: Scalar>(alpha: Complex<S>, n: u64) -> Result<S> {
    Ok((c_alpha(alpha)? * S::lit(n as f64)).sqrt())
}

fn check_not_positive_real<S: Scalar>(lambda: Complex<S>) -> Result<()> {
    let tol = S::lit(1e-12) * lambda.norm().max(S::one());
    if lambda.im.abs() <= tol && lambda.re >= -tol {
        return Err(Error::Precondition(format!("λ = {lambda} lies on the closed positive real axis")));
    }
    Ok(())
}

/// A curve into `ℙ¹ × ℙ¹` given by two polynomial homogeneous pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D2Curve {
    pub x: [Poly; 2],
    pub y: [Poly; 2],
}

fn apply_mat(a: &Mat2<f64>, v: &[Poly; 2]) -> [Poly; 2] {
    [
        v[0].scale(a[0][0]).add(&v[1].scale(a[0][1])),
        v[0].scale(a[1][0]).add(&v[1].scale(a[1][1])),
    ]
}

impl D2Curve {
    pub fn eval_pairs(&self, t: C64) -> (Pair<f64>, Pair<f64>) {
        (
            [self.x[0].eval(t), self.x[1].eval(t)],
            [self.y[0].eval(t), self.y[1].eval(t)],
        )
    }

    pub fn eval(&self, t: C64) -> Result<D2Point<f64>> {
        let (x, y) = self.eval_pairs(t);
        D2Point::from_pairs(x, y)
    }

    /// `A · f` for `A ∈ SL₂(ℂ)`.
    pub fn act(&self, a: &Mat2<f64>) -> D2Curve {
        D2Curve {
            x: apply_mat(a, &self.x),
            y: apply_mat(&tilde(a), &self.y),
        }
    }

    pub fn swap(&self) -> D2Curve {
        D2Curve {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    /// Precomposition with `t ↦ a t + b`.
    pub fn reparametrize(&self, a: C64, b: C64) -> D2Curve {
        let r = |p: &[Poly; 2]| [p[0].compose_affine(a, b), p[1].compose_affine(a, b)];
        D2Curve {
            x: r(&self.x),
            y: r(&self.y),
        }
    }

    /// `ι ∘ f` as a curve into the model quadric in `ℂ⁴`.
    pub fn to_model(&self) -> PolynomialCurve {
        let [x0, x1] = &self.x;
        let [y0, y1] = &self.y;
        let i = C64::new(0.0, 1.0);
        let a = x0.mul(y0);
        let b = x1.mul(y1);
        let c = x1.mul(y0);
        let d = x0.mul(y1);
        PolynomialCurve {
            components: vec![
                a.add(&b),
                b.add(&a.scale(-ONE)).scale(i),
                c.add(&d.scale(-ONE)),
                c.add(&d),
            ],
        }
    }
}

/// `t ↦ ([t : 1], [λt : 1])`.
pub fn f_lambda(lambda: C64) -> Result<D2Curve> {
    check_not_positive_real(lambda)?;
    Ok(D2Curve {
        x: [Poly::linear(ZERO, ONE), Poly::constant(ONE)],
        y: [Poly::linear(ZERO, lambda), Poly::constant(ONE)],
    })
}

/// Sampled positivity certificate of a disk parametrized by the closed unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Minimum of `h_alg(F′, F′)` over the polar grid and its refinement.
    pub min: f64,
    pub argmin: C64,
    /// Minimum over the coarse grid alone.
    pub coarse_min: f64,
}

impl Certificate {
    pub fn is_positive(&self) -> bool {
        self.min > 0.0 && self.min.is_finite()
    }
}

/// `h_alg(F′(τ), F′(τ))` at `F(τ)`.
pub fn derivative_norm2(space: &Space, curve: &PolynomialCurve, deriv: &PolynomialCurve, tau: C64) -> f64 {
    let f = curve.eval(tau);
    let d = deriv.eval(tau);
    h_alg(space, &f, &d, &d).re
}

/// Certifies a disk on a `CERT_GRID × CERT_GRID` polar grid of the closed
/// unit disk, re-sampled at ten times the resolution around the minimum.
pub fn certify_disk(space: &Space, curve: &PolynomialCurve) -> Certificate {
    let deriv = curve.derivative();
    let eval = |r: f64, th: f64| {
        let tau = C64::from_polar(r, th);
        let v = derivative_norm2(space, curve, &deriv, tau);
        (if v.is_nan() { f64::NEG_INFINITY } else { v }, tau)
    };
    let nr = CERT_GRID;
    let nt = CERT_GRID;
    let dr = 1.0 / nr as f64;
    let dt = TAU / nt as f64;
    let mut best = eval(0.0, 0.0);
    let mut best_idx = (0usize, 0usize);
    for i in 1..=nr {
        for j in 0..nt {
            let v = eval(i as f64 * dr, j as f64 * dt);
            if v.0 < best.0 {
                best = v;
                best_idx = (i, j);
            }
        }
    }
    let coarse_min = best.0;
    let (ri, tj) = best_idx;
    let r0 = ri as f64 * dr;
    let t0 = tj as f64 * dt;
    for a in -10i32..=10 {
        let r = r0 + a as f64 * dr / 10.0;
        if !(0.0..=1.0).contains(&r) {
            continue;
        }
        for b in -10i32..=10 {
            let v = eval(r, t0 + b as f64 * dt / 10.0);
            if v.0 < best.0 {
                best = v;
            }
        }
    }
    Certificate {
        min: best.0,
        argmin: best.1,
        coarse_min,
    }
}

/// A positive disk `F: Δ̄ → D` with its certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositiveDisk {
    pub curve: PolynomialCurve,
    pub certificate: Certificate,
}

impl PositiveDisk {
    pub fn new(space: &Space, curve: PolynomialCurve) -> Result<Self> {
        let certificate = certify_disk(space, &curve);
        if !certificate.is_positive() {
            return Err(Error::Numeric(format!(
                "disk is not positive: min ‖f′‖² = {:.3e} at τ = {}",
                certificate.min, certificate.argmin
            )));
        }
        Ok(Self { curve, certificate })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainLink {
    pub disk: PositiveDisk,
    pub a: C64,
    pub b: C64,
    /// Index `n` of the two-disk construction the link was built from.
    pub n: u64,
    pub delta: f64,
    pub endpoint_residual: f64,
}

/// A chain of positive disks from `endpoints[0]` to `endpoints[k]`.
#[derive(Debug, Clone)]
pub struct DiskChain {
    pub space: Arc<Space>,
    pub endpoints: Vec<CVec>,
    pub links: Vec<ChainLink>,
}

/// One row of a chain report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub link_index: usize,
    pub n: u64,
    pub a: C64,
    pub b: C64,
    pub delta: f64,
    pub cumulative_length: f64,
    pub endpoint_residual: f64,
    pub min_positivity: f64,
}

impl DiskChain {
    pub fn empty(space: Arc<Space>, point: CVec) -> Self {
        Self {
            space,
            endpoints: vec![point],
            links: Vec::new(),
        }
    }

    /// Builds a chain from disks and anchors, certifying every disk and
    /// measuring endpoint residuals.
    pub fn assemble(
        space: Arc<Space>,
        endpoints: Vec<CVec>,
        pieces: Vec<(PolynomialCurve, C64, C64, u64)>,
    ) -> Result<Self> {
        if endpoints.len() != pieces.len() + 1 {
            return Err(Error::Precondition("a chain of k disks needs k+1 endpoints".into()));
        }
        if pieces.len() > MAX_DISKS {
            return Err(Error::BudgetExceeded(format!(
                "{} disks exceed the budget of {MAX_DISKS}",
                pieces.len()
            )));
        }
        let mut links = Vec::with_capacity(pieces.len());
        for (k, (curve, a, b, n)) in pieces.into_iter().enumerate() {
            let delta = poincare_distance(a, b)?;
            let ra = linalg::projective_distance(&curve.eval(a), &endpoints[k]);
            let rb = linalg::projective_distance(&curve.eval(b), &endpoints[k + 1]);
            let disk = PositiveDisk::new(&space, curve)?;
            links.push(ChainLink {
                disk,
                a,
                b,
                n,
                delta,
                endpoint_residual: ra.max(rb),
            });
        }
        Ok(Self {
            space,
            endpoints,
            links,
        })
    }

    pub fn length(&self) -> f64 {
        chain_length(self)
    }

    pub fn max_endpoint_residual(&self) -> f64 {
        self.links
            .iter()
            .map(|l| l.endpoint_residual)
            .fold(0.0, f64::max)
    }

    pub fn min_positivity(&self) -> f64 {
        self.links
            .iter()
            .map(|l| l.disk.certificate.min)
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks anchors, residuals and certificates.
    pub fn verify(&self, residual_tol: f64) -> Result<()> {
        for (k, l) in self.links.iter().enumerate() {
            if l.a.norm() >= 1.0 || l.b.norm() >= 1.0 {
                return Err(Error::Numeric(format!("link {k}: anchor outside the unit disk")));
            }
            if !(l.endpoint_residual < residual_tol) {
                return Err(Error::Numeric(format!(
                    "link {k}: endpoint residual {:.3e}",
                    l.endpoint_residual
                )));
            }
            if !l.disk.certificate.is_positive() {
                return Err(Error::Numeric(format!("link {k}: disk not positive")));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> Vec<ChainRow> {
        let mut cum = 0.0;
        self.links
            .iter()
            .enumerate()
            .map(|(k, l)| {
                cum += l.delta;
                ChainRow {
                    link_index: k,
                    n: l.n,
                    a: l.a,
                    b: l.b,
                    delta: l.delta,
                    cumulative_length: cum,
                    endpoint_residual: l.endpoint_residual,
                    min_positivity: l.disk.certificate.min,
                }
            })
            .collect()
    }

    /// Concatenates a chain starting where this one ends.
    pub fn extend(&mut self, other: DiskChain) {
        self.endpoints.extend(other.endpoints.into_iter().skip(1));
        self.links.extend(other.links);
    }
}

/// `Σ δ(aᵢ, bᵢ)`.
pub fn chain_length(chain: &DiskChain) -> f64 {
    chain.links.iter().map(|l| l.delta).sum()
}

/// Which radius was used for a disk of the two-disk construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadiusRule {
    /// `C_α √n` (resp. `C_β` for the second disk).
    Lemma,
    /// `0.999 √(C_α n)` (resp. `0.999 √C_β`), used when the meeting point lies
    /// outside the smaller disk.
    Sharp,
}

/// Both roots of `a s² + b s + c = 0` for
/// `a = α_nβ`, `b = α_nβ + α_n − β`, `c = α_n`, the one of smaller modulus first.
pub fn meeting_roots(alpha_n: C64, beta: C64) -> [C64; 2] {
    let (a, b, c) = meeting_coefficients(alpha_n, beta);
    let r = (b * b - a * c * 4.0).sqrt();
    let r = if (b.conj() * r).re >= 0.0 { r } else { -r };
    let q = -(b + r) * 0.5;
    let big = q / a;
    let small = c / q;
    if small.norm() <= big.norm() {
        [small, big]
    } else {
        [big, small]
    }
}

fn meeting_coefficients(alpha_n: C64, beta: C64) -> (C64, C64, C64) {
    (alpha_n * beta, alpha_n * beta + alpha_n - beta, alpha_n)
}

/// `(β − α_n(1+β) − r)/(2α_nβ)` with `r² = (α_nβ + α_n − β)² − 4α_n²β`, the
/// square root taken on the branch closest to `β`.
pub fn meeting_root_closed_form(alpha_n: C64, beta: C64) -> C64 {
    let (a, b, _) = meeting_coefficients(alpha_n, beta);
    let r0 = (b * b - alpha_n * alpha_n * beta * 4.0).sqrt();
    let r = if (r0 - beta).norm() <= (-r0 - beta).norm() { r0 } else { -r0 };
    (beta - alpha_n * (ONE + beta) - r) / (a * 2.0)
}

/// Relative residual of the meeting equation at `s`.
pub fn meeting_residual(alpha_n: C64, beta: C64, s: C64) -> f64 {
    let (a, b, c) = meeting_coefficients(alpha_n, beta);
    let val = a * s * s + b * s + c;
    val.norm() / (a.norm() * s.norm_sqr() + b.norm() * s.norm() + c.norm())
}

/// The two-disk chain from `([0:1],[0:1])` to `([1:1],[0:1])`.
#[derive(Debug, Clone)]
pub struct TwoDiskChain {
    pub alpha: C64,
    pub beta: C64,
    pub n: u64,
    pub s: C64,
    pub t: C64,
    pub equation_residual: f64,
    pub meeting_residual: f64,
    pub r1: f64,
    pub r2: f64,
    pub rule1: RadiusRule,
    pub rule2: RadiusRule,
    /// `f_{α/n}(r₁ τ)`, from `a₁ = 0` to `b₁ = t/r₁`.
    pub disk1: D2Curve,
    /// `A · f_β(r₂ τ)`, from `a₂ = s/r₂` to `b₂ = 0`.
    pub disk2: D2Curve,
    pub anchors: [(C64, C64); 2],
}

impl TwoDiskChain {
    pub fn length(&self) -> f64 {
        self.anchors
            .iter()
            .map(|(a, b)| poincare_distance(*a, *b).unwrap_or(f64::INFINITY))
            .sum()
    }

    pub fn meeting_point(&self) -> Result<D2Point<f64>> {
        self.disk1.eval(self.anchors[0].1)
    }
}

fn choose_radius(lemma: f64, sharp: f64, hit: f64) -> Result<(f64, RadiusRule)> {
    let sharp = 0.999 * sharp;
    if lemma < sharp && hit < 0.999 * lemma {
        Ok((lemma, RadiusRule::Lemma))
    } else if hit < 0.999 * sharp {
        Ok((sharp, RadiusRule::Sharp))
    } else {
        Err(Error::Numeric(format!(
            "meeting parameter |{hit:.4}| lies outside the positivity radius {sharp:.4}"
        )))
    }
}

/// Builds the two-disk chain for `α_n = α/n`.
pub fn two_disk_chain(alpha: C64, beta: C64, n: u64) -> Result<TwoDiskChain> {
    if n == 0 {
        return Err(Error::Precondition("n must be positive".into()));
    }
    for z in [alpha, beta] {
        check_not_positive_real(z)?;
        if z.re <= 0.0 {
            return Err(Error::Precondition(format!("need Re > 0, got {z}")));
        }
    }
    let alpha_n = alpha / n as f64;
    let s = meeting_roots(alpha_n, beta)[0];
    let t = s + ONE;
    let equation_residual = meeting_residual(alpha_n, beta, s);
    let (r1, rule1) = choose_radius(
        positivity_radius(alpha, n)?,
        sharp_positivity_radius(alpha, n)?,
        t.norm(),
    )?;
    let (r2, rule2) = choose_radius(c_alpha(beta)?, sharp_positivity_radius(beta, 1)?, s.norm())?;
    let translate: Mat2<f64> = [[ONE, ONE], [ZERO, ONE]];
    let disk1 = f_lambda(alpha_n)?.reparametrize(C64::new(r1, 0.0), ZERO);
    let disk2 = f_lambda(beta)?
        .act(&translate)
        .reparametrize(C64::new(r2, 0.0), ZERO);
    let anchors = [(ZERO, t / r1), (s / r2, ZERO)];
    let m1 = disk1.eval(anchors[0].1)?;
    let m2 = disk2.eval(anchors[1].0)?;
    let meeting_residual = linalg::projective_distance(&m1.x, &m2.x)
        .max(linalg::projective_distance(&m1.y, &m2.y));
    Ok(TwoDiskChain {
        alpha,
        beta,
        n,
        s,
        t,
        equation_residual,
        meeting_residual,
        r1,
        r2,
        rule1,
        rule2,
        disk1,
        disk2,
        anchors,
    })
}

fn model_space() -> Arc<Space> {
    Arc::new(Space::standard(1).expect("p = 1 is valid"))
}

/// The two-disk chain as a verified chain in the model quadric.
pub fn lemma57_chain(alpha: C64, beta: C64, n: u64) -> Result<DiskChain> {
    let two = two_disk_chain(alpha, beta, n)?;
    let p = D2Point::new([ZERO, ONE], [ZERO, ONE])?;
    let q = D2Point::new([ONE, ONE], [ZERO, ONE])?;
    let m = two.meeting_point()?;
    let endpoints = vec![
        d2_model::iota(&p).to_vec(),
        d2_model::iota(&m).to_vec(),
        d2_model::iota(&q).to_vec(),
    ];
    DiskChain::assemble(
        model_space(),
        endpoints,
        vec![
            (two.disk1.to_model(), two.anchors[0].0, two.anchors[0].1, n),
            (two.disk2.to_model(), two.anchors[1].0, two.anchors[1].1, n),
        ],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub n: u64,
    pub length: f64,
    pub s_abs: f64,
    pub t_minus_one: f64,
}

/// Lengths of the two-disk chain along a schedule of `n`. Fails unless the
/// selected root tends to `0` (monotone beyond the first entry).
pub fn kobayashi_upper_bound_series(alpha: C64, beta: C64, schedule: &[u64]) -> Result<Vec<SeriesRow>> {
    let mut rows: Vec<SeriesRow> = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let two = two_disk_chain(alpha, beta, n)?;
        let row = SeriesRow {
            n,
            length: two.length(),
            s_abs: two.s.norm(),
            t_minus_one: (two.t - ONE).norm(),
        };
        if rows.last().is_some_and(|last| row.s_abs >= last.s_abs) {
            return Err(Error::Numeric(format!(
                "root continuation failed: |s| does not decrease at n = {n}"
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// A disk of a `D₂` chain, parametrized by the unit disk.
#[derive(Debug, Clone)]
pub struct D2Link {
    pub curve: D2Curve,
    pub a: C64,
    pub b: C64,
}

/// A chain in `D₂` before it is embedded: waypoints and disks.
#[derive(Debug, Clone)]
pub struct D2Chain {
    pub points: Vec<D2Point<f64>>,
    pub links: Vec<D2Link>,
    pub n: u64,
}

const DEFAULT_ALPHA: C64 = C64::new(1.0, 1.0);

fn affine(p: &Pair<f64>) -> Result<C64> {
    if p[1].norm() <= 1e-14 * linalg::norm(p) {
        return Err(Error::Numeric("waypoint at the point at infinity of the chart".into()));
    }
    Ok(p[0] / p[1])
}

/// `g ∈ SL₂(ℂ)` moving `([0:1],[0:1])` to `(u, y)` and `([1:1],[0:1])` to `(v, y)`.
fn fiber_transport(u: &Pair<f64>, v: &Pair<f64>, y: &Pair<f64>) -> Result<Mat2<f64>> {
    let (a, c) = (y[1].conj(), y[0].conj());
    let (b, d) = if a.norm() >= c.norm() {
        (ZERO, a.inv())
    } else {
        (-c.inv(), ZERO)
    };
    let bm: Mat2<f64> = [[a, b], [c, d]];
    let binv: Mat2<f64> = [[d, -b], [-c, a]];
    let uh = affine(&d2_model::mat2_apply(&binv, u))?;
    let vh = affine(&d2_model::mat2_apply(&binv, v))?;
    let mu = (vh - uh).sqrt();
    if mu.norm() == 0.0 {
        return Err(Error::Precondition("fiber endpoints coincide".into()));
    }
    let t: Mat2<f64> = [[ONE, uh], [ZERO, ONE]];
    let dm: Mat2<f64> = [[mu, ZERO], [ZERO, mu.inv()]];
    Ok(d2_model::mat2_mul(&d2_model::mat2_mul(&bm, &t), &dm))
}

fn fiber_link(
    from: &D2Point<f64>,
    to: &D2Point<f64>,
    two: &TwoDiskChain,
    swapped: bool,
) -> Result<Vec<D2Link>> {
    let (f, t) = if swapped {
        (d2_model::swap(from), d2_model::swap(to))
    } else {
        (*from, *to)
    };
    let g = fiber_transport(&f.x, &t.x, &f.y)?;
    let mut out = Vec::with_capacity(2);
    for (curve, (a, b)) in [(&two.disk1, two.anchors[0]), (&two.disk2, two.anchors[1])] {
        let moved = curve.act(&g);
        out.push(D2Link {
            curve: if swapped { moved.swap() } else { moved },
            a,
            b,
        });
    }
    Ok(out)
}

fn pair_same(u: &Pair<f64>, v: &Pair<f64>) -> bool {
    pair_eq(u, v, 1e-12)
}

fn in_d2(x: &Pair<f64>, y: &Pair<f64>) -> bool {
    D2Point::new(*x, *y).is_ok()
}

fn random_pair<R: Rng + ?Sized>(rng: &mut R) -> Pair<f64> {
    [crate::rng::complex_normal(rng), crate::rng::complex_normal(rng)]
}

/// Waypoints `p → … → q` alternating moves along `pr₂`- and `pr₁`-fibers.
fn route<R: Rng + ?Sized>(p: &D2Point<f64>, q: &D2Point<f64>, rng: &mut R) -> Result<Vec<D2Point<f64>>> {
    if in_d2(&q.x, &p.y) {
        let m = D2Point::new(q.x, p.y)?;
        return Ok(vec![*p, m, *q]);
    }
    for _ in 0..64 {
        let x = random_pair(rng);
        if pair_same(&x, &p.x) || pair_same(&x, &q.x) || !in_d2(&x, &p.y) || !in_d2(&x, &q.y) {
            continue;
        }
        let m1 = D2Point::new(x, p.y)?;
        let m2 = D2Point::new(x, q.y)?;
        return Ok(vec![*p, m1, m2, *q]);
    }
    Err(Error::BudgetExceeded("no admissible intermediate point found".into()))
}

/// Disks of a `D₂` chain from `p` to `q` with total length at most `target`.
pub fn connect_d2_links<R: Rng + ?Sized>(
    p: &D2Point<f64>,
    q: &D2Point<f64>,
    target: f64,
    rng: &mut R,
) -> Result<D2Chain> {
    if !(target > 0.0) {
        return Err(Error::Precondition("target length must be positive".into()));
    }
    let d2_tol = 1e-12;
    if p.same(q, d2_tol) {
        return Ok(D2Chain {
            points: vec![*p],
            links: Vec::new(),
            n: 0,
        });
    }
    let waypoints = route(p, q, rng)?;
    let moves: Vec<(usize, bool)> = (0..waypoints.len() - 1)
        .filter_map(|k| {
            let (a, b) = (&waypoints[k], &waypoints[k + 1]);
            let along_pr2 = pair_same(&a.y, &b.y);
            if along_pr2 && pair_same(&a.x, &b.x) {
                None
            } else {
                Some((k, !along_pr2))
            }
        })
        .collect();
    let count = moves.len() as f64;
    let mut n = 10u64;
    let two = loop {
        let two = two_disk_chain(DEFAULT_ALPHA, DEFAULT_ALPHA, n)?;
        if count * two.length() <= target {
            break two;
        }
        n = n
            .checked_mul(2)
            .filter(|n| *n < (1u64 << 50))
            .ok_or_else(|| Error::BudgetExceeded("chain index n overflowed".into()))?;
    };
    let mut points = vec![waypoints[0]];
    let mut links = Vec::new();
    for (k, swapped) in moves {
        let (a, b) = (&waypoints[k], &waypoints[k + 1]);
        let pieces = fiber_link(a, b, &two, swapped)?;
        let mid = pieces[0].curve.eval(pieces[0].b)?;
        points.push(mid);
        points.push(*b);
        links.extend(pieces);
    }
    if links.len() > MAX_DISKS {
        return Err(Error::BudgetExceeded(format!("{} disks exceed {MAX_DISKS}", links.len())));
    }
    Ok(D2Chain { points, links, n })
}

/// A verified chain of positive disks in `D₂` from `p` to `q`, in the model
/// quadric of signature `(3, 1)`.
pub fn connect_d2<R: Rng + ?Sized>(
    p: &D2Point<f64>,
    q: &D2Point<f64>,
    target: f64,
    rng: &mut R,
) -> Result<DiskChain> {
    let chain = connect_d2_links(p, q, target, rng)?;
    let endpoints = chain.points.iter().map(|x| d2_model::iota(x).to_vec()).collect();
    let pieces = chain
        .links
        .iter()
        .map(|l| (l.curve.to_model(), l.a, l.b, chain.n))
        .collect();
    let out = DiskChain::assemble(model_space(), endpoints, pieces)?;
    out.verify(LINK_RESIDUAL)?;
    Ok(out)
}

/// One step of a twistor chain: a line and the point reached on it.
#[derive(Debug, Clone)]
pub struct TwistorStep {
    pub line: TwistorLine,
    pub point: PeriodPoint,
}

fn real_combo(a: &[f64], ca: f64, b: &[f64], cb: f64) -> RVec {
    a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect()
}

/// Positive-definiteness of `q` on a span, measured on its Gram matrix.
fn span_positive(space: &Space, vs: &[RVec]) -> bool {
    let gram = space.restricted_gram(vs);
    let (vals, _) = linalg::sym_eigen(&gram);
    let top = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    vals[0] > 1e-8 * top
}

fn real_rank(vs: &[RVec]) -> usize {
    let gram: Vec<RVec> = vs
        .iter()
        .map(|a| vs.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
        .collect();
    let (vals, _) = linalg::sym_eigen(&gram);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    vals.iter().filter(|v| **v > 1e-16 * top).count()
}

fn q_normalize(space: &Space, v: &[f64]) -> RVec {
    let n = space.q_real(v, v).sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Lines joining the oriented planes `span(u, a)` and `span(u, b)`, with
/// `u ⊥ a`, `u ⊥ b` and all three positive unit vectors.
fn pivot<R: Rng + ?Sized>(
    space: &Arc<Space>,
    u: &RVec,
    a: &RVec,
    b: &RVec,
    target: PeriodPoint,
    rng: &mut R,
) -> Result<Vec<TwistorStep>> {
    let s = vec![u.clone(), a.clone(), b.clone()];
    if real_rank(&s) < 3 {
        let perp = real_orthogonal_complement(space, &[u.clone(), a.clone()], EIGEN_REL)?;
        let w = positive_vector_in(space, &perp, rng)?;
        let line = TwistorLine::new(space.clone(), &[u.clone(), a.clone(), w])?;
        return Ok(vec![TwistorStep { line, point: target }]);
    }
    if span_positive(space, &s) {
        let line = TwistorLine::new(space.clone(), &s)?;
        return Ok(vec![TwistorStep { line, point: target }]);
    }
    let perp = real_orthogonal_complement(space, &s, EIGEN_REL)?;
    let w = q_normalize(space, &positive_vector_in(space, &perp, rng)?);
    let mid = crate::period_domain::from_positive_2plane(space.clone(), u, &w)?;
    let l1 = TwistorLine::new(space.clone(), &[u.clone(), a.clone(), w.clone()])?;
    let l2 = TwistorLine::new(space.clone(), &[u.clone(), w, b.clone()])?;
    Ok(vec![
        TwistorStep { line: l1, point: mid },
        TwistorStep { line: l2, point: target },
    ])
}

/// A chain of at most four twistor lines from `p` to `q`.
///
/// Picks unit vectors `u ∈ P` and `u′ ∈ Q` with `q(u, u′) = 0` and pivots
/// `P = span(u, a) → span(u, u′) → span(u′, b) = Q`; each pivot uses the
/// positive 3-plane spanned by both planes when there is one, and otherwise
/// passes through `span(u, w)` for a positive `w` orthogonal to both.
pub fn twistor_chain<R: Rng + ?Sized>(
    space: &Arc<Space>,
    p: &PeriodPoint,
    q: &PeriodPoint,
    rng: &mut R,
) -> Result<Vec<TwistorStep>> {
    if !p.is_isotropic() || !q.is_isotropic() {
        return Err(Error::NotInDomain("twistor chains join points of D".into()));
    }
    if p.same_point(q, 1e-12) {
        return Ok(Vec::new());
    }
    let (p1, p2) = to_positive_2plane(p)?;
    let (q1, q2) = to_positive_2plane(q)?;
    let all = vec![p1.clone(), p2.clone(), q1.clone(), q2.clone()];
    if real_rank(&all) <= 3 {
        let mut basis = vec![p1.clone(), p2.clone()];
        for v in [&q1, &q2] {
            let mut trial = basis.clone();
            trial.push(v.clone());
            if real_rank(&trial) == 3 {
                basis = trial;
                break;
            }
        }
        if basis.len() == 2 {
            let perp = real_orthogonal_complement(space, &basis, EIGEN_REL)?;
            basis.push(positive_vector_in(space, &perp, rng)?);
        }
        if span_positive(space, &basis) {
            let line = TwistorLine::new(space.clone(), &basis)?;
            return Ok(vec![TwistorStep { line, point: q.clone() }]);
        }
    }
    for _ in 0..32 {
        let th: f64 = rng.gen_range(0.0..TAU);
        let u = real_combo(&p1, th.cos(), &p2, th.sin());
        let a = real_combo(&p1, -th.sin(), &p2, th.cos());
        let (cu1, cu2) = (space.q_real(&u, &q1), space.q_real(&u, &q2));
        let norm = cu1.hypot(cu2);
        let up = if norm == 0.0 {
            q1.clone()
        } else {
            real_combo(&q1, -cu2 / norm, &q2, cu1 / norm)
        };
        let bq = real_combo(&q1, cu1 / norm.max(1e-300), &q2, cu2 / norm.max(1e-300));
        let b = if norm == 0.0 { q2.clone() } else { bq };
        let mid = match crate::period_domain::from_positive_2plane(space.clone(), &u, &up) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let first = pivot(space, &u, &a, &up, mid.clone(), rng);
        let second = pivot(space, &up, &u, &b, q.clone(), rng);
        if let (Ok(mut f), Ok(s)) = (first, second) {
            f.extend(s);
            return Ok(f);
        }
    }
    Err(Error::Numeric("twistor chain construction failed after 32 attempts".into()))
}

/// Verifies consecutive points of a twistor chain against their lines.
pub fn verify_twistor_chain(p: &PeriodPoint, steps: &[TwistorStep], tol: f64) -> Result<()> {
    let mut prev = p.clone();
    for (k, s) in steps.iter().enumerate() {
        let b = s.line.basis();
        if !span_positive(s.line.space(), b.as_ref()) {
            return Err(Error::Numeric(format!("line {k} is not a positive 3-plane")));
        }
        if !s.line.contains(&prev, tol) || !s.line.contains(&s.point, tol) {
            return Err(Error::Numeric(format!("step {k}: endpoints not on the twistor line")));
        }
        prev = s.point.clone();
    }
    Ok(())
}

/// A verified chain of positive disks from `p` to `q` in `D`, of length at
/// most `target`.
pub fn connect_d<R: Rng + ?Sized>(
    space: &Arc<Space>,
    p: &PeriodPoint,
    q: &PeriodPoint,
    target: f64,
    rng: &mut R,
) -> Result<DiskChain> {
    let steps = twistor_chain(space, p, q, rng)?;
    verify_twistor_chain(p, &steps, 1e-9)?;
    let mut chain = DiskChain::empty(space.clone(), p.rep().to_vec());
    if steps.is_empty() {
        return Ok(chain);
    }
    let share = target / steps.len() as f64;
    let mut prev = p.clone();
    for step in &steps {
        let env = Envelope::from_twistor(&step.line)?;
        let to_d2 = |x: &PeriodPoint| -> Result<D2Point<f64>> {
            d2_model::iota_inverse(&env.to_model(x.rep()))
        };
        let d2 = connect_d2_links(&to_d2(&prev)?, &to_d2(&step.point)?, share, rng)?;
        let mut endpoints: Vec<CVec> = d2
            .points
            .iter()
            .map(|x| env.from_model(&d2_model::iota(x)))
            .collect();
        endpoints[0] = prev.rep().to_vec();
        let last = endpoints.len() - 1;
        endpoints[last] = step.point.rep().to_vec();
        let mut pieces = Vec::with_capacity(d2.links.len());
        for l in &d2.links {
            pieces.push((env.curve_from_model(&l.curve.to_model())?, l.a, l.b, d2.n));
        }
        let part = DiskChain::assemble(space.clone(), endpoints, pieces)?;
        chain.extend(part);
        prev = step.point.clone();
    }
    if chain.links.len() > MAX_DISKS {
        return Err(Error::BudgetExceeded(format!("{} disks exceed {MAX_DISKS}", chain.links.len())));
    }
    chain.verify(LINK_RESIDUAL)?;
    Ok(chain)
}

/// A degree-one entire curve through `point` along which `h_alg` vanishes
/// identically: a fiber of the first projection of a `D₂` subdomain.
pub fn isotropic_line(point: &PeriodPoint) -> Result<PolynomialCurve> {
    let env = subdomain_embed(point)?;
    let d2 = d2_model::iota_inverse(&env.to_model(point.rep()))?;
    let dir = [d2.y[1].conj(), d2.y[0].conj()];
    let curve = D2Curve {
        x: [Poly::linear(d2.x[0], dir[0]), Poly::linear(d2.x[1], dir[1])],
        y: [Poly::constant(d2.y[0]), Poly::constant(d2.y[1])],
    };
    env.curve_from_model(&curve.to_model())
}

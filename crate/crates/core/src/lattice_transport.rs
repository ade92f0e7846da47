//! Isometries fixing a subspace and wall/chamber sign bookkeeping.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indefinite_linear::{
    q_gram_schmidt_positive, real_orthogonal_complement, signed_orthonormal_basis, QuadraticSpace,
};
use crate::linalg::{self, RVec};
use crate::period_domain::PeriodPoint;
use crate::tolerances::{EIGEN_REL, WITNESS_MARGIN, WITNESS_RESTARTS};

type Space = QuadraticSpace<f64>;

fn combine(coeffs: &[f64], basis: &[RVec], n: usize) -> RVec {
    coeffs.iter().zip(basis).fold(vec![0.0; n], |mut acc, (c, b)| {
        for i in 0..n {
            acc[i] += c * b[i];
        }
        acc
    })
}

fn axpy(a: &[f64], c: f64, b: &[f64]) -> RVec {
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

/// An isotropic `v` in the span of `ambient` with `q(n0, v) = 1`.
///
/// The least-norm combination pairing to one with `n0` is corrected along
/// `n0`, which keeps the pairing and kills the square.
pub fn hyperbolic_completion(space: &Space, n0: &[f64], ambient: &[RVec]) -> Result<RVec> {
    space.check_len(n0.len())?;
    let n = space.dim();
    let scale = linalg::rnorm(n0);
    if scale == 0.0 {
        return Err(Error::ZeroVector);
    }
    if space.q_real(n0, n0).abs() > 1e-9 * scale * scale * space.scale() {
        return Err(Error::Precondition("n0 is not isotropic".into()));
    }
    let pair: Vec<f64> = ambient.iter().map(|b| space.q_real(n0, b)).collect();
    let norm2: f64 = pair.iter().map(|x| x * x).sum();
    let ambient_scale = ambient.iter().map(|b| linalg::rnorm(b)).fold(0.0, f64::max);
    if norm2.sqrt() <= 1e-12 * scale * ambient_scale * space.scale() {
        return Err(Error::NotFound);
    }
    let w = combine(&pair.iter().map(|x| x / norm2).collect::<Vec<_>>(), ambient, n);
    let c = space.q_real(&w, &w) / (2.0 * space.q_real(n0, &w));
    Ok(axpy(&w, -c, n0))
}

/// Decomposition of `span(N)` as `N′ ⊕ N₀` with `N₀` the radical of `q|_N`.
struct Kernel {
    nondegenerate: Vec<RVec>,
    radical: Option<RVec>,
}

fn split_n(space: &Space, n_basis: &[RVec]) -> Result<Kernel> {
    let n = space.dim();
    if n_basis.is_empty() {
        return Ok(Kernel { nondegenerate: vec![], radical: None });
    }
    if linalg::complex_rank(
        &n_basis.iter().map(|v| linalg::complexify(v)).collect::<Vec<_>>(),
        1e-10,
    ) < n_basis.len()
    {
        return Err(Error::Dependent);
    }
    let gram = space.restricted_gram(n_basis);
    let (vals, vecs) = linalg::sym_eigen(&gram);
    let scale = n_basis.iter().map(|b| linalg::rnorm(b)).fold(0.0, f64::max).powi(2) * space.scale();
    let mut nondeg = Vec::new();
    let mut radical = Vec::new();
    let mut positive = 0;
    for (val, vec) in vals.iter().zip(&vecs) {
        let v = combine(vec, n_basis, n);
        if val.abs() <= EIGEN_REL * scale {
            radical.push(v);
        } else {
            if *val > 0.0 {
                positive += 1;
            }
            nondeg.push(v);
        }
    }
    if positive >= 2 {
        return Err(Error::Precondition("N contains a positive 2-plane, so D_N is empty".into()));
    }
    if radical.len() > 1 {
        return Err(Error::Precondition(format!(
            "radical of q|_N has dimension {}; no positive 2-plane is orthogonal to N",
            radical.len()
        )));
    }
    Ok(Kernel {
        nondegenerate: nondeg,
        radical: radical.pop(),
    })
}

fn check_plane(space: &Space, n_basis: &[RVec], plane: &[RVec; 2]) -> Result<Vec<RVec>> {
    let scale = plane.iter().map(|b| linalg::rnorm(b)).fold(0.0, f64::max);
    for v in n_basis {
        for b in plane {
            let x = space.q_real(v, b);
            if x.abs() > 1e-9 * scale * linalg::rnorm(v) * space.scale() {
                return Err(Error::NotInDomain(format!("plane is not orthogonal to N (q = {x:.3e})")));
            }
        }
    }
    q_gram_schmidt_positive(space, plane)
}

/// Frame `[rest…]` of the complement, sorted positive first.
fn signed_rest(space: &Space, fixed: &[RVec]) -> Result<Vec<(f64, RVec)>> {
    let rest = real_orthogonal_complement(space, fixed, 1e-10)?;
    if rest.is_empty() {
        return Ok(vec![]);
    }
    signed_orthonormal_basis(space, &rest)
}

/// A real isometry `g` of `q` with `g n = n` for `n ∈ N` and `g(P) = Q` as
/// oriented planes.
///
/// When `q|_N` is non-degenerate, `g` is assembled from `q`-orthonormal frames
/// of `P ⊕ T_P` and `Q ⊕ T_Q` inside `N^⊥`. Otherwise the radical `n₀` of
/// `q|_N` is completed to hyperbolic planes `H_P ⊥ P`, `H_Q ⊥ Q` and
/// `g = φ_T ⊕ φ_H ⊕ Id_{N′}`.
pub fn isometry_fixing_n(space: &Space, n_basis: &[RVec], p: &[RVec; 2], q: &[RVec; 2]) -> Result<Vec<RVec>> {
    let n = space.dim();
    for v in n_basis.iter().chain(p).chain(q) {
        space.check_len(v.len())?;
    }
    let kernel = split_n(space, n_basis)?;
    let up = check_plane(space, n_basis, p)?;
    let uq = check_plane(space, n_basis, q)?;
    let mut src: Vec<RVec> = kernel.nondegenerate.clone();
    let mut dst: Vec<RVec> = kernel.nondegenerate.clone();
    if let Some(n0) = &kernel.radical {
        let mut fixed_p = kernel.nondegenerate.clone();
        fixed_p.extend(up.iter().cloned());
        let mut fixed_q = kernel.nondegenerate.clone();
        fixed_q.extend(uq.iter().cloned());
        let hp = hyperbolic_completion(space, n0, &real_orthogonal_complement(space, &fixed_p, 1e-10)?)?;
        let hq = hyperbolic_completion(space, n0, &real_orthogonal_complement(space, &fixed_q, 1e-10)?)?;
        src.extend([n0.clone(), hp]);
        dst.extend([n0.clone(), hq]);
    }
    src.extend(up);
    dst.extend(uq);
    let rest_p = signed_rest(space, &src)?;
    let rest_q = signed_rest(space, &dst)?;
    if rest_p.len() != rest_q.len() || rest_p.iter().zip(&rest_q).any(|(a, b)| a.0 != b.0) {
        return Err(Error::Numeric("complements of P and Q have different signatures".into()));
    }
    src.extend(rest_p.into_iter().map(|x| x.1));
    dst.extend(rest_q.into_iter().map(|x| x.1));
    if src.len() != n {
        return Err(Error::Numeric(format!("frame has {} vectors in dimension {n}", src.len())));
    }
    // g · B = A with B, A the frames as columns
    let b = linalg::transpose(&src);
    let a = linalg::transpose(&dst);
    let binv = linalg::invert_real(&b)?;
    Ok(linalg::matmul(&a, &binv))
}

/// `max |gᵀ G g − G|`.
pub fn isometry_residual(space: &Space, g: &[RVec]) -> f64 {
    let gram = space.gram_rows();
    let pulled = linalg::matmul(&linalg::matmul(&linalg::transpose(g), &gram), g);
    pulled
        .iter()
        .zip(&gram)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Signed area of `(a, b)` measured against the oriented basis `(u, v)` of
/// the same plane, in `q`.
pub fn orientation_det(space: &Space, basis: &[RVec; 2], pair: &[RVec; 2]) -> f64 {
    let g = space.restricted_gram(basis);
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let c: Vec<[f64; 2]> = pair
        .iter()
        .map(|x| {
            let r = [space.q_real(x, &basis[0]), space.q_real(x, &basis[1])];
            [
                (g[1][1] * r[0] - g[0][1] * r[1]) / det,
                (g[0][0] * r[1] - g[1][0] * r[0]) / det,
            ]
        })
        .collect();
    c[0][0] * c[1][1] - c[0][1] * c[1][0]
}

/// Finite set of negative classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSet {
    pub classes: Vec<RVec>,
}

impl WallSet {
    pub fn new(space: &Space, classes: Vec<RVec>) -> Result<Self> {
        for (i, a) in classes.iter().enumerate() {
            space.check_len(a.len())?;
            if !(space.q_real(a, a) < 0.0) {
                return Err(Error::Precondition(format!("wall {i} does not have negative square")));
            }
            for (j, b) in classes.iter().enumerate().take(i) {
                let cos = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (linalg::rnorm(a) * linalg::rnorm(b));
                if (cos.abs() - 1.0).abs() < 1e-12 {
                    return Err(Error::Precondition(format!("walls {j} and {i} are proportional")));
                }
            }
        }
        Ok(Self { classes })
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Relative `|q(α, σ)| / (‖α‖ ‖σ‖)`.
    pub fn pairing(&self, point: &PeriodPoint, i: usize) -> f64 {
        let a = &self.classes[i];
        let z = point.space().q(&linalg::complexify(a), point.rep());
        z.norm() / (linalg::rnorm(a) * linalg::norm(point.rep()) * point.space().scale())
    }

    /// Indices of walls with `q(α, σ) = 0` within `tol`.
    pub fn active(&self, point: &PeriodPoint, tol: f64) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.pairing(point, i) <= tol).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Self {
        if x > 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Signs of `q(κ, α)` on the walls active at a point.
pub type ChamberSignVector = BTreeMap<usize, Sign>;

/// Real part of the Hodge `(1,1)` space: `{κ : q(κ, Re σ) = q(κ, Im σ) = 0}`.
fn real_11_basis(point: &PeriodPoint) -> Result<Vec<RVec>> {
    let re = linalg::real_part(point.rep());
    let im = linalg::imag_part(point.rep());
    real_orthogonal_complement(point.space(), &[re, im], 1e-10)
}

fn project_to_11(point: &PeriodPoint, kappa: &[f64]) -> Result<RVec> {
    let space = point.space();
    let re = linalg::real_part(point.rep());
    let im = linalg::imag_part(point.rep());
    let frame = q_gram_schmidt_positive(space, &[re, im])?;
    let mut k = kappa.to_vec();
    for f in &frame {
        k = axpy(&k, -space.q_real(&k, f), f);
    }
    Ok(k)
}

/// Sign of `q(κ, α)` on every wall active at `point`.
pub fn chamber_signs(point: &PeriodPoint, kappa: &[f64], walls: &WallSet, tol: f64) -> Result<ChamberSignVector> {
    let space = point.space();
    space.check_len(kappa.len())?;
    let kn = linalg::rnorm(kappa);
    let scale = space.scale();
    let kq = space.q(&linalg::complexify(kappa), point.rep()).norm();
    if kq > 1e-9 * kn * linalg::norm(point.rep()) * scale {
        return Err(Error::Precondition(format!("κ is not of type (1,1) (|q(κ, σ)| = {kq:.3e})")));
    }
    if !(space.q_real(kappa, kappa) > 0.0) {
        return Err(Error::Precondition("κ must have positive square".into()));
    }
    let mut out = ChamberSignVector::new();
    for i in walls.active(point, tol) {
        let a = &walls.classes[i];
        let v = space.q_real(kappa, a);
        if v.abs() <= tol * kn * linalg::rnorm(a) * scale {
            return Err(Error::Ambiguous(format!("κ lies on wall {i} (q(κ, α) = {v:.3e})")));
        }
        out.insert(i, Sign::of(v));
    }
    Ok(out)
}

/// Strict witness of a sign vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub kappa: RVec,
    /// Normalized minimum of `s_α q(κ, α)` and the cone margin.
    pub margin: f64,
}

/// Margins of `κ = e₀ + Σ yⱼ wⱼ` in the slice `q(·, e₀) = 1` of the cone.
struct Slice {
    e0: RVec,
    w: Vec<RVec>,
    /// Rows `(a, b)`: margin `a + b·y`, normalized to `‖(a, b)‖ = 1`.
    rows: Vec<(f64, RVec)>,
}

impl Slice {
    fn margins(&self, y: &[f64]) -> (f64, Option<usize>) {
        let cone = 0.5 * (1.0 - y.iter().map(|x| x * x).sum::<f64>());
        let mut best = (cone, None);
        for (k, (a, b)) in self.rows.iter().enumerate() {
            let m = a + b.iter().zip(y).map(|(x, z)| x * z).sum::<f64>();
            if m < best.0 {
                best = (m, Some(k));
            }
        }
        best
    }

    fn kappa(&self, y: &[f64]) -> RVec {
        self.w.iter().zip(y).fold(self.e0.clone(), |acc, (w, c)| axpy(&acc, *c, w))
    }

    /// Projected subgradient ascent of the minimum margin over the unit ball.
    fn climb(&self, start: RVec, iterations: usize) -> (f64, RVec) {
        let mut y = start;
        let mut best = (self.margins(&y).0, y.clone());
        for k in 0..iterations {
            let (_, arg) = self.margins(&y);
            let grad: RVec = match arg {
                Some(r) => self.rows[r].1.clone(),
                None => y.iter().map(|x| -x).collect(),
            };
            let gn = linalg::rnorm(&grad);
            if gn == 0.0 {
                break;
            }
            let step = 0.5 / (1.0 + k as f64).sqrt();
            y = axpy(&y, step / gn, &grad);
            let r = linalg::rnorm(&y);
            if r > 1.0 {
                y.iter_mut().for_each(|x| *x /= r);
            }
            let m = self.margins(&y).0;
            if m > best.0 {
                best = (m, y.clone());
            }
        }
        best
    }
}

fn build_slice(point: &PeriodPoint, signs: &ChamberSignVector, walls: &WallSet, e0: RVec) -> Result<Slice> {
    let space = point.space();
    let basis = real_11_basis(point)?;
    let inside: Vec<RVec> = basis.iter().map(|b| axpy(b, -space.q_real(b, &e0), &e0)).collect();
    let w = signed_orthonormal_basis(space, &independent(&inside, space.dim() - 3))?;
    if w.iter().any(|(s, _)| *s > 0.0) {
        return Err(Error::Numeric("slice direction is not timelike".into()));
    }
    let w: Vec<RVec> = w.into_iter().map(|x| x.1).collect();
    let mut rows = Vec::new();
    for (&i, &s) in signs {
        let a = &walls.classes[i];
        let c0 = s.value() * space.q_real(&e0, a);
        let cb: RVec = w.iter().map(|wj| s.value() * space.q_real(wj, a)).collect();
        let nrm = (c0 * c0 + cb.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if nrm == 0.0 {
            return Err(Error::Precondition(format!("wall {i} is orthogonal to the (1,1) space")));
        }
        rows.push((c0 / nrm, cb.iter().map(|x| x / nrm).collect()));
    }
    Ok(Slice { e0, w, rows })
}

/// The first `k` vectors of `vs` spanning independent directions.
fn independent(vs: &[RVec], k: usize) -> Vec<RVec> {
    let mut out: Vec<RVec> = Vec::new();
    let mut ortho: Vec<RVec> = Vec::new();
    for v in vs {
        let mut r = v.clone();
        for o in &ortho {
            let c: f64 = r.iter().zip(o).map(|(x, y)| x * y).sum();
            r = axpy(&r, -c, o);
        }
        let nr = linalg::rnorm(&r);
        if nr > 1e-8 * linalg::rnorm(v).max(f64::MIN_POSITIVE) {
            ortho.push(r.iter().map(|x| x / nr).collect());
            out.push(v.clone());
        }
        if out.len() == k {
            break;
        }
    }
    out
}

/// A unit timelike vector of the `(1,1)` space.
fn timelike(point: &PeriodPoint, hint: Option<&[f64]>) -> Result<RVec> {
    let space = point.space();
    if let Some(h) = hint {
        let k = project_to_11(point, h)?;
        let n = space.q_real(&k, &k);
        if n > 1e-12 * linalg::rnorm(&k).powi(2) * space.scale() {
            return Ok(k.iter().map(|x| x / n.sqrt()).collect());
        }
    }
    let basis = real_11_basis(point)?;
    let signed = signed_orthonormal_basis(space, &basis)?;
    signed
        .into_iter()
        .find(|(s, _)| *s > 0.0)
        .map(|x| x.1)
        .ok_or_else(|| Error::Numeric("(1,1) space has no positive direction".into()))
}

/// A `κ` realizing `signs` at `point`, by maximizing the minimum margin over
/// the slice through `±e₀` of the positive cone with random restarts.
pub fn witness<R: Rng + ?Sized>(
    point: &PeriodPoint,
    signs: &ChamberSignVector,
    walls: &WallSet,
    hint: Option<&[f64]>,
    rng: &mut R,
) -> Result<Witness> {
    let e0 = timelike(point, hint)?;
    let mut best: Option<(f64, RVec)> = None;
    for sheet in [1.0, -1.0] {
        let slice = build_slice(point, signs, walls, e0.iter().map(|x| sheet * x).collect())?;
        let dim = slice.w.len();
        for r in 0..WITNESS_RESTARTS / 2 {
            let start: RVec = if r == 0 {
                vec![0.0; dim]
            } else {
                let g: RVec = (0..dim).map(|_| crate::rng::normal(rng)).collect();
                let gn = linalg::rnorm(&g).max(f64::MIN_POSITIVE);
                let rad = rng.gen::<f64>().powf(1.0 / dim.max(1) as f64) * 0.99;
                g.iter().map(|x| x * rad / gn).collect()
            };
            let (m, y) = slice.climb(start, 400);
            if best.as_ref().is_none_or(|b| m > b.0) {
                best = Some((m, slice.kappa(&y)));
            }
        }
    }
    let (margin, kappa) = best.expect("at least one restart");
    if margin < -WITNESS_MARGIN {
        return Err(Error::Infeasible(format!("best margin {margin:.3e}")));
    }
    if margin < WITNESS_MARGIN {
        return Err(Error::Ambiguous(format!("best margin {margin:.3e} is below {WITNESS_MARGIN:e}")));
    }
    Ok(Witness { kappa, margin })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportEvent {
    Activated,
    Deactivated,
    #[serde(rename = "sign+")]
    SignPlus,
    #[serde(rename = "sign-")]
    SignMinus,
}

impl fmt::Display for TransportEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransportEvent::Activated => "activated",
            TransportEvent::Deactivated => "deactivated",
            TransportEvent::SignPlus => "sign+",
            TransportEvent::SignMinus => "sign-",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub sample_index: usize,
    pub wall_index: usize,
    pub event: TransportEvent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    /// Activity threshold on `|q(α, σ)|/(‖α‖‖σ‖)`.
    pub tol: f64,
    /// Largest relative pairing allowed right after a wall changes activity.
    pub max_jump: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_jump: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transport {
    pub signs: ChamberSignVector,
    pub log: Vec<LogEntry>,
    /// Witness margin at each sample.
    pub margins: Vec<f64>,
    /// The carried class at each sample; each one realizes the sign vector
    /// of its sample.
    pub witnesses: Vec<RVec>,
}

/// Normalized strict margin of `κ` for `signs`: the minimum of
/// `s_α q(κ, α)/(‖κ‖‖α‖)` and `q(κ, κ)/‖κ‖²`.
pub fn strict_margin(space: &Space, kappa: &[f64], signs: &ChamberSignVector, walls: &WallSet) -> f64 {
    let kn = linalg::rnorm(kappa);
    let scale = space.scale();
    let mut m = space.q_real(kappa, kappa) / (kn * kn * scale);
    for (&i, s) in signs {
        let a = &walls.classes[i];
        m = m.min(s.value() * space.q_real(kappa, a) / (kn * linalg::rnorm(a) * scale));
    }
    m
}

/// [`transport_chamber_from`] starting from the witness of `initial`.
pub fn transport_chamber<R: Rng + ?Sized>(
    path: &[PeriodPoint],
    walls: &WallSet,
    initial: &ChamberSignVector,
    options: TransportOptions,
    rng: &mut R,
) -> Result<Transport> {
    transport_chamber_from(path, walls, initial, None, options, rng)
}

/// Carries `initial` along `path`.
///
/// A class `κ` is carried by `q`-orthogonal projection to each new `(1,1)`
/// space. Persistent walls keep their sign; a wall that becomes active takes
/// the sign of the carried class. When the carried class stops realizing the
/// sign vector it is replaced by a fresh max-margin witness, and INFEASIBLE is
/// reported when none exists.
pub fn transport_chamber_from<R: Rng + ?Sized>(
    path: &[PeriodPoint],
    walls: &WallSet,
    initial: &ChamberSignVector,
    kappa0: Option<&[f64]>,
    options: TransportOptions,
    rng: &mut R,
) -> Result<Transport> {
    let first = path.first().ok_or_else(|| Error::Precondition("empty path".into()))?;
    let space = first.space().clone();
    let active: Vec<usize> = walls.active(first, options.tol);
    if active != initial.keys().copied().collect::<Vec<_>>() {
        return Err(Error::Precondition(format!(
            "initial vector is defined on {:?} but the active walls are {active:?}",
            initial.keys().collect::<Vec<_>>()
        )));
    }
    let mut signs = initial.clone();
    let start = match kappa0 {
        Some(k) => {
            if chamber_signs(first, k, walls, options.tol)? != signs {
                return Err(Error::Precondition("starting class does not realize the initial vector".into()));
            }
            Witness {
                kappa: k.to_vec(),
                margin: strict_margin(&space, k, &signs, walls),
            }
        }
        None => witness(first, &signs, walls, None, rng)?,
    };
    let mut margins = vec![start.margin];
    let mut witnesses = vec![start.kappa];
    let mut log = Vec::new();
    for (k, point) in path.iter().enumerate().skip(1) {
        let now = walls.active(point, options.tol);
        let before: Vec<usize> = signs.keys().copied().collect();
        for i in &before {
            if !now.contains(i) {
                let jump = walls.pairing(point, *i);
                if jump > options.max_jump {
                    return Err(Error::Precondition(format!(
                        "sampling too coarse: wall {i} left activity with pairing {jump:.3e} at sample {k}"
                    )));
                }
                signs.remove(i);
                log.push(LogEntry { sample_index: k, wall_index: *i, event: TransportEvent::Deactivated });
            }
        }
        let carried = project_to_11(point, witnesses.last().expect("nonempty"))?;
        for &i in &now {
            if before.contains(&i) {
                continue;
            }
            let jump = walls.pairing(&path[k - 1], i);
            if jump > options.max_jump {
                return Err(Error::Precondition(format!(
                    "sampling too coarse: wall {i} became active from pairing {jump:.3e} at sample {k}"
                )));
            }
            let a = &walls.classes[i];
            let v = space.q_real(&carried, a);
            if v.abs() <= WITNESS_MARGIN * linalg::rnorm(&carried) * linalg::rnorm(a) * space.scale() {
                return Err(Error::Ambiguous(format!("wall {i} activates on the carried class at sample {k}")));
            }
            let s = Sign::of(v);
            signs.insert(i, s);
            log.push(LogEntry { sample_index: k, wall_index: i, event: TransportEvent::Activated });
            log.push(LogEntry {
                sample_index: k,
                wall_index: i,
                event: if s == Sign::Plus { TransportEvent::SignPlus } else { TransportEvent::SignMinus },
            });
        }
        let m = strict_margin(&space, &carried, &signs, walls);
        let next = if m >= WITNESS_MARGIN {
            let nrm = space.q_real(&carried, &carried).sqrt();
            Witness {
                kappa: carried.iter().map(|x| x / nrm).collect(),
                margin: m,
            }
        } else {
            witness(point, &signs, walls, Some(&carried), rng)?
        };
        margins.push(next.margin);
        witnesses.push(next.kappa);
    }
    Ok(Transport { signs, log, margins, witnesses })
}

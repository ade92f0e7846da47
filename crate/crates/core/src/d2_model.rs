//! The two-dimensional domain `D₂ ⊂ ℙ¹ × ℙ¹`.
//!
//! `ι` identifies `ℙ¹ × ℙ¹` with the quadric `x² + y² + z² − t² = 0` in `ℙ³`;
//! `D₂` is the complement of the fixed locus of the antiholomorphic involution
//! `τ([x₀:x₁],[y₀:y₁]) = ([ȳ₁:ȳ₀],[x̄₁:x̄₀])`. The affine chart used for metric
//! matrices is `x = x₀/x₁`, `y = y₀/y₁`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::tolerances::PROJECTIVE_EQ;

pub type Pair<S> = [Complex<S>; 2];
pub type Mat2<S> = [[Complex<S>; 2]; 2];

fn cz<S: Scalar>() -> Complex<S> {
    Complex::new(S::zero(), S::zero())
}

fn ci<S: Scalar>() -> Complex<S> {
    Complex::new(S::zero(), S::one())
}

fn normalize_pair<S: Scalar>(p: &Pair<S>) -> Result<Pair<S>> {
    let v = linalg::canonical_normalize(p)?;
    Ok([v[0], v[1]])
}

/// Projective equality `|u₀v₁ − u₁v₀| ≤ tol ‖u‖ ‖v‖`.
pub fn pair_eq<S: Scalar>(u: &Pair<S>, v: &Pair<S>, tol: S) -> bool {
    let det = u[0] * v[1] - u[1] * v[0];
    det.norm() <= tol * linalg::norm(u) * linalg::norm(v)
}

/// A point of `ℙ¹ × ℙ¹` with canonically normalized homogeneous pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct D2Point<S: Scalar> {
    pub x: Pair<S>,
    pub y: Pair<S>,
}

impl<S: Scalar> D2Point<S> {
    /// A point of `ℙ¹ × ℙ¹`, without the `D₂` check.
    pub fn from_pairs(x: Pair<S>, y: Pair<S>) -> Result<Self> {
        Ok(Self {
            x: normalize_pair(&x)?,
            y: normalize_pair(&y)?,
        })
    }

    /// A point of `D₂`: fails on the fixed locus of `τ`.
    pub fn new(x: Pair<S>, y: Pair<S>) -> Result<Self> {
        let p = Self::from_pairs(x, y)?;
        if boundary_test(&p) {
            return Err(Error::NotInDomain("point is fixed by τ".into()));
        }
        Ok(p)
    }

    /// `([x:1], [y:1])`.
    pub fn from_chart(x: Complex<S>, y: Complex<S>) -> Result<Self> {
        let one = Complex::new(S::one(), S::zero());
        Self::new([x, one], [y, one])
    }

    /// Chart coordinates `(x₀/x₁, y₀/y₁)`, if both are finite.
    pub fn chart(&self) -> Option<(Complex<S>, Complex<S>)> {
        let tiny = S::lit(1e-300_f64.max(S::min_positive_value().widen()));
        if self.x[1].norm() <= tiny || self.y[1].norm() <= tiny {
            return None;
        }
        Some((self.x[0] / self.x[1], self.y[0] / self.y[1]))
    }

    pub fn same(&self, other: &Self, tol: S) -> bool {
        pair_eq(&self.x, &other.x, tol) && pair_eq(&self.y, &other.y, tol)
    }

    pub fn widen(&self) -> D2Point<f64> {
        let w = |p: &Pair<S>| p.map(|z| Complex::new(z.re.widen(), z.im.widen()));
        D2Point {
            x: w(&self.x),
            y: w(&self.y),
        }
    }
}

/// The bilinear map `ι(x, y)` on homogeneous pairs.
pub fn iota_pairs<S: Scalar>(x: &Pair<S>, y: &Pair<S>) -> [Complex<S>; 4] {
    let [x0, x1] = *x;
    let [y0, y1] = *y;
    [
        x0 * y0 + x1 * y1,
        ci::<S>() * (x1 * y1 - x0 * y0),
        x1 * y0 - x0 * y1,
        x1 * y0 + x0 * y1,
    ]
}

pub fn iota<S: Scalar>(p: &D2Point<S>) -> [Complex<S>; 4] {
    iota_pairs(&p.x, &p.y)
}

/// `c₁² + c₂² + c₃² − c₄²`.
pub fn model_quadric<S: Scalar>(c: &[Complex<S>; 4]) -> Complex<S> {
    c[0] * c[0] + c[1] * c[1] + c[2] * c[2] - c[3] * c[3]
}

/// `H(c) = [[i(c₄−c₃), −c₂+ic₁], [c₂+ic₁, i(c₄+c₃)]]`, equal to
/// `2i · x · (y₁, y₀)` when `c = ι(x, y)`.
pub fn h_matrix<S: Scalar>(c: &[Complex<S>; 4]) -> Mat2<S> {
    let i = ci::<S>();
    [
        [i * (c[3] - c[2]), -c[1] + i * c[0]],
        [c[1] + i * c[0], i * (c[3] + c[2])],
    ]
}

/// Recovers `(x, y)` from a rank-one `H`: `x` is its dominant column and
/// `(y₁, y₀)` its dominant row.
fn from_h_matrix<S: Scalar>(h: &Mat2<S>) -> Result<D2Point<S>> {
    let col = |j: usize| [h[0][j], h[1][j]];
    let row = |i: usize| h[i];
    let x = if linalg::norm(&col(0)) >= linalg::norm(&col(1)) {
        col(0)
    } else {
        col(1)
    };
    let r = if linalg::norm(&row(0)) >= linalg::norm(&row(1)) {
        row(0)
    } else {
        row(1)
    };
    D2Point::from_pairs(x, [r[1], r[0]])
}

/// Inverse of `ι` on the quadric.
pub fn iota_inverse<S: Scalar>(c: &[Complex<S>; 4]) -> Result<D2Point<S>> {
    let scale = linalg::norm(c);
    if scale == S::zero() {
        return Err(Error::ZeroVector);
    }
    let resid = model_quadric(c).norm() / (scale * scale);
    if resid > S::lit(1e-8).max(S::epsilon() * S::lit(64.0)) {
        return Err(Error::NotInDomain(format!(
            "vector is off the model quadric (relative residual {:.3e})",
            resid.widen()
        )));
    }
    from_h_matrix(&h_matrix(c))
}

pub fn tau<S: Scalar>(p: &D2Point<S>) -> D2Point<S> {
    D2Point {
        x: normalize_pair(&[p.y[1].conj(), p.y[0].conj()]).expect("nonzero pair"),
        y: normalize_pair(&[p.x[1].conj(), p.x[0].conj()]).expect("nonzero pair"),
    }
}

/// True on the fixed locus of `τ`, i.e. `[y₀:y₁] = [x̄₁:x̄₀]`.
pub fn boundary_test<S: Scalar>(p: &D2Point<S>) -> bool {
    boundary_test_tol(p, S::lit(PROJECTIVE_EQ))
}

pub fn boundary_test_tol<S: Scalar>(p: &D2Point<S>, tol: S) -> bool {
    pair_eq(&p.y, &[p.x[1].conj(), p.x[0].conj()], tol)
}

/// `[[0, 1/(xȳ−1)²], [1/(yx̄−1)², 0]]`; the norm of a chart vector `v` is
/// `Σ M_ij v_i v̄_j`.
pub fn metric_matrix<S: Scalar>(x: Complex<S>, y: Complex<S>) -> Result<Mat2<S>> {
    let one = Complex::new(S::one(), S::zero());
    let a = x * y.conj() - one;
    if a.norm() <= S::lit(1e-12).max(S::epsilon()) {
        return Err(Error::ChartInvalid("x ȳ = 1".into()));
    }
    let m = (a * a).inv();
    Ok([[cz(), m], [m.conj(), cz()]])
}

/// `Σ M_ij v_i v̄_j` for the chart vector `(vx, vy)` at `(x, y)`.
pub fn chart_norm2<S: Scalar>(
    x: Complex<S>,
    y: Complex<S>,
    vx: Complex<S>,
    vy: Complex<S>,
) -> Result<S> {
    let m = metric_matrix(x, y)?;
    let two = S::lit(2.0);
    Ok(two * (m[0][1] * vx * vy.conj()).re)
}

/// Homogeneous images `ι_*∂/∂x`, `ι_*∂/∂y` at the chart point `(x, y)`.
pub fn iota_chart_derivatives<S: Scalar>(
    x: Complex<S>,
    y: Complex<S>,
) -> ([Complex<S>; 4], [Complex<S>; 4]) {
    let one = Complex::new(S::one(), S::zero());
    (
        iota_pairs(&[one, cz()], &[y, one]),
        iota_pairs(&[x, one], &[one, cz()]),
    )
}

pub fn det2<S: Scalar>(a: &Mat2<S>) -> Complex<S> {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat2_mul<S: Scalar>(a: &Mat2<S>, b: &Mat2<S>) -> Mat2<S> {
    let mut out = [[cz(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_apply<S: Scalar>(a: &Mat2<S>, v: &Pair<S>) -> Pair<S> {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

/// `Ã = [[d̄, c̄], [b̄, ā]]` for `A = [[a, b], [c, d]]`.
pub fn tilde<S: Scalar>(a: &Mat2<S>) -> Mat2<S> {
    [
        [a[1][1].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[0][0].conj()],
    ]
}

fn check_unimodular<S: Scalar>(a: &Mat2<S>) -> Result<()> {
    let d = det2(a) - Complex::new(S::one(), S::zero());
    if d.norm() > S::lit(1e-10).max(S::epsilon() * S::lit(64.0)) {
        return Err(Error::Precondition(format!(
            "matrix is not in SL2 (|det − 1| = {:.3e})",
            d.norm().widen()
        )));
    }
    Ok(())
}

/// `A · (x, y) = (A x, Ã y)`.
pub fn sl2_action<S: Scalar>(a: &Mat2<S>, p: &D2Point<S>) -> Result<D2Point<S>> {
    check_unimodular(a)?;
    D2Point::from_pairs(mat2_apply(a, &p.x), mat2_apply(&tilde(a), &p.y))
}

/// The same action computed as `H ↦ A H Āᵗ` on `H(ι(p))`.
pub fn sl2_action_hmatrix<S: Scalar>(a: &Mat2<S>, p: &D2Point<S>) -> Result<D2Point<S>> {
    check_unimodular(a)?;
    let h = h_matrix(&iota(p));
    let abar_t = [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ];
    from_h_matrix(&mat2_mul(&mat2_mul(a, &h), &abar_t))
}

/// Chart Jacobians `(dx'/dx, dy'/dy) = (1/(cx+d)², 1/(b̄y+ā)²)` of the action.
pub fn sl2_chart_jacobian<S: Scalar>(a: &Mat2<S>, x: Complex<S>, y: Complex<S>) -> (Complex<S>, Complex<S>) {
    let jx = a[1][0] * x + a[1][1];
    let jy = a[0][1].conj() * y + a[0][0].conj();
    ((jx * jx).inv(), (jy * jy).inv())
}

pub fn swap<S: Scalar>(p: &D2Point<S>) -> D2Point<S> {
    D2Point { x: p.y, y: p.x }
}

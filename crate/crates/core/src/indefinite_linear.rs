//! Linear algebra over a real symmetric form of signature `(3, p)`.
//!
//! The bilinear form `q(v, w) = vᵀ G w` is extended complex-bilinearly; the
//! hermitian pairing is `h(v, w) = q(v, w̄)`.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::tolerances::EIGEN_REL;

/// Largest supported number of negative directions.
pub const MAX_P: usize = 64;

/// Inertia of a real symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub null: usize,
}

impl Signature {
    pub fn new(positive: usize, negative: usize, null: usize) -> Self {
        Self {
            positive,
            negative,
            null,
        }
    }

    pub fn dim(&self) -> usize {
        self.positive + self.negative + self.null
    }
}

/// A real symmetric form of signature `(3, p)` on `ℝ^{3+p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpace<S: Scalar> {
    p: usize,
    dim: usize,
    gram: Vec<S>,
    standard: bool,
}

impl<S: Scalar> QuadraticSpace<S> {
    /// `diag(1, 1, 1, -1, …, -1)` with `p` negative entries.
    pub fn standard(p: usize) -> Result<Self> {
        if p == 0 || p > MAX_P {
            return Err(Error::Precondition(format!("p must lie in 1..={MAX_P}, got {p}")));
        }
        let dim = 3 + p;
        let mut gram = vec![S::zero(); dim * dim];
        for i in 0..dim {
            gram[i * dim + i] = if i < 3 { S::one() } else { -S::one() };
        }
        Ok(Self {
            p,
            dim,
            gram,
            standard: true,
        })
    }

    /// Validates an arbitrary Gram matrix: square, symmetric, non-degenerate,
    /// of signature `(3, p)` with `p = dim - 3 ≥ 1`.
    pub fn from_gram(rows: Vec<Vec<S>>) -> Result<Self> {
        let dim = rows.len();
        if !(4..=3 + MAX_P).contains(&dim) {
            return Err(Error::Precondition(format!(
                "gram dimension must lie in 4..={}, got {dim}",
                3 + MAX_P
            )));
        }
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        check_symmetric(&rows)?;
        let wide: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|x| x.widen()).collect())
            .collect();
        let det = linalg::det_real(&wide);
        if det.abs() <= 1e-12 {
            return Err(Error::Degenerate(det.abs()));
        }
        let sig = signature(&rows, S::lit(EIGEN_REL))?;
        let p = dim - 3;
        if sig.positive != 3 || sig.negative != p || sig.null != 0 {
            return Err(Error::WrongSignature {
                positive: sig.positive,
                negative: sig.negative,
                null: sig.null,
                expected_p: p,
            });
        }
        let standard = (0..dim).all(|i| {
            (0..dim).all(|j| {
                let target = if i != j {
                    S::zero()
                } else if i < 3 {
                    S::one()
                } else {
                    -S::one()
                };
                rows[i][j] == target
            })
        });
        Ok(Self {
            p,
            dim,
            gram: rows.into_iter().flatten().collect(),
            standard,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_standard(&self) -> bool {
        self.standard
    }

    /// Largest modulus of a Gram entry.
    pub fn scale(&self) -> S {
        self.gram.iter().fold(S::zero(), |m, x| m.max(x.abs()))
    }

    pub fn entry(&self, i: usize, j: usize) -> S {
        self.gram[i * self.dim + j]
    }

    pub fn gram_rows(&self) -> Vec<Vec<S>> {
        self.gram.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// `G v`.
    pub fn apply(&self, v: &[Complex<S>]) -> Vec<Complex<S>> {
        let zero = Complex::new(S::zero(), S::zero());
        if self.standard {
            return v
                .iter()
                .enumerate()
                .map(|(i, z)| if i < 3 { *z } else { -*z })
                .collect();
        }
        (0..self.dim)
            .map(|i| {
                (0..self.dim).fold(zero, |acc, j| acc + v[j] * self.entry(i, j))
            })
            .collect()
    }

    /// `G v` for a real vector.
    pub fn apply_real(&self, v: &[S]) -> Vec<S> {
        (0..self.dim)
            .map(|i| (0..self.dim).fold(S::zero(), |acc, j| acc + self.entry(i, j) * v[j]))
            .collect()
    }

    /// Fails unless `len` is the ambient dimension.
    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    /// Complex-bilinear extension `vᵀ G w`, without dimension checks.
    pub fn q(&self, v: &[Complex<S>], w: &[Complex<S>]) -> Complex<S> {
        let zero = Complex::new(S::zero(), S::zero());
        if self.standard {
            return v.iter().zip(w).enumerate().fold(zero, |acc, (i, (a, b))| {
                if i < 3 {
                    acc + a * b
                } else {
                    acc - a * b
                }
            });
        }
        let gw = self.apply(w);
        v.iter().zip(&gw).fold(zero, |acc, (a, b)| acc + a * b)
    }

    /// Hermitian pairing `q(v, w̄)`, without dimension checks.
    pub fn h(&self, v: &[Complex<S>], w: &[Complex<S>]) -> Complex<S> {
        let zero = Complex::new(S::zero(), S::zero());
        if self.standard {
            return v.iter().zip(w).enumerate().fold(zero, |acc, (i, (a, b))| {
                if i < 3 {
                    acc + a * b.conj()
                } else {
                    acc - a * b.conj()
                }
            });
        }
        self.q(v, &linalg::conj(w))
    }

    /// `q(σ, σ̄)`, always real.
    pub fn hnorm(&self, v: &[Complex<S>]) -> S {
        self.h(v, v).re
    }

    pub fn q_real(&self, v: &[S], w: &[S]) -> S {
        let gw = self.apply_real(w);
        v.iter().zip(&gw).fold(S::zero(), |acc, (a, b)| acc + *a * *b)
    }

    /// Gram matrix of `q` restricted to the span of `basis`.
    pub fn restricted_gram(&self, basis: &[Vec<S>]) -> Vec<Vec<S>> {
        basis
            .iter()
            .map(|a| basis.iter().map(|b| self.q_real(a, b)).collect())
            .collect()
    }

    /// Widens the form to `f64`.
    pub fn widen(&self) -> QuadraticSpace<f64> {
        QuadraticSpace {
            p: self.p,
            dim: self.dim,
            gram: self.gram.iter().map(|x| x.widen()).collect(),
            standard: self.standard,
        }
    }
}

fn check_symmetric<S: Scalar>(rows: &[Vec<S>]) -> Result<()> {
    let n = rows.len();
    let scale = rows
        .iter()
        .flatten()
        .fold(S::zero(), |m, x| m.max(x.abs()))
        .max(S::one());
    let mut worst = S::zero();
    for i in 0..n {
        if rows[i].len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rows[i].len(),
            });
        }
        for j in 0..i {
            worst = worst.max((rows[i][j] - rows[j][i]).abs());
        }
    }
    if worst > S::epsilon() * S::lit(64.0) * scale {
        return Err(Error::NotSymmetric(worst.widen()));
    }
    Ok(())
}

/// Counts eigenvalues above `tol·ρ`, below `-tol·ρ` and in between, where `ρ`
/// is the spectral radius.
pub fn signature<S: Scalar>(gram: &[Vec<S>], tol: S) -> Result<Signature> {
    check_symmetric(gram)?;
    let wide: Vec<Vec<f64>> = gram
        .iter()
        .map(|r| r.iter().map(|x| x.widen()).collect())
        .collect();
    let (vals, _) = linalg::sym_eigen(&wide);
    Ok(count_signs(&vals, tol.widen()))
}

pub(crate) fn count_signs(vals: &[f64], rel_tol: f64) -> Signature {
    let rho = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cut = rel_tol * rho;
    let mut sig = Signature::new(0, 0, 0);
    for v in vals {
        if rho > 0.0 && *v > cut {
            sig.positive += 1;
        } else if rho > 0.0 && *v < -cut {
            sig.negative += 1;
        } else {
            sig.null += 1;
        }
    }
    sig
}

/// `vᵀ G w` with dimension checks.
pub fn q_bilinear<S: Scalar>(
    space: &QuadraticSpace<S>,
    v: &[Complex<S>],
    w: &[Complex<S>],
) -> Result<Complex<S>> {
    space.check_len(v.len())?;
    space.check_len(w.len())?;
    Ok(space.q(v, w))
}

/// `q(v, w̄)` with dimension checks.
pub fn h_sesquilinear<S: Scalar>(
    space: &QuadraticSpace<S>,
    v: &[Complex<S>],
    w: &[Complex<S>],
) -> Result<Complex<S>> {
    space.check_len(v.len())?;
    space.check_len(w.len())?;
    Ok(space.h(v, w))
}

/// Basis of `{w : q(w, v) = 0 for every input v}`, orthonormal for the
/// euclidean hermitian product. Fails if the inputs are dependent.
pub fn orthogonal_complement<S: Scalar>(
    space: &QuadraticSpace<S>,
    vectors: &[Vec<Complex<S>>],
    tol: S,
) -> Result<Vec<Vec<Complex<S>>>> {
    for v in vectors {
        space.check_len(v.len())?;
    }
    let n = space.dim();
    if vectors.is_empty() {
        return Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            Complex::new(S::one(), S::zero())
                        } else {
                            Complex::new(S::zero(), S::zero())
                        }
                    })
                    .collect()
            })
            .collect());
    }
    let wide_space = space.widen();
    let rows: Vec<linalg::CVec> = vectors
        .iter()
        .map(|v| {
            let w: linalg::CVec = v
                .iter()
                .map(|z| linalg::C64::new(z.re.widen(), z.im.widen()))
                .collect();
            wide_space.apply(&w)
        })
        .collect();
    let input_rank = {
        let raw: Vec<linalg::CVec> = vectors
            .iter()
            .map(|v| {
                v.iter()
                    .map(|z| linalg::C64::new(z.re.widen(), z.im.widen()))
                    .collect()
            })
            .collect();
        linalg::complex_rank(&raw, tol.widen())
    };
    if input_rank < vectors.len() {
        return Err(Error::Dependent);
    }
    let (_, kernel) = linalg::complex_nullspace(&rows, n, tol.widen());
    Ok(kernel
        .into_iter()
        .map(|v| {
            v.into_iter()
                .map(|z| Complex::new(S::lit(z.re), S::lit(z.im)))
                .collect()
        })
        .collect())
}

/// Real version of [`orthogonal_complement`] for real input vectors; the
/// returned basis is real and euclidean-orthonormal.
pub fn real_orthogonal_complement(
    space: &QuadraticSpace<f64>,
    vectors: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = space.dim();
    if vectors.is_empty() {
        return Ok((0..n).map(|i| linalg::unit_vector(n, i)).collect());
    }
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| space.apply_real(v)).collect();
    let (vals, vecs) = linalg::sym_eigen(&linalg::matmul(&linalg::transpose(&rows), &rows));
    let rank_raw = {
        let gram: Vec<Vec<f64>> = vectors
            .iter()
            .map(|a| vectors.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect())
            .collect();
        let (gv, _) = linalg::sym_eigen(&gram);
        let top = gv.iter().cloned().fold(0.0, f64::max);
        gv.iter().filter(|x| **x > tol * tol * top).count()
    };
    if rank_raw < vectors.len() {
        return Err(Error::Dependent);
    }
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let keep = n - vectors.len();
    if vals.get(keep).is_some_and(|v| *v <= tol * tol * top) {
        return Err(Error::Dependent);
    }
    Ok(vecs.into_iter().take(keep).collect())
}

/// A real vector of the span of `basis` with `q(w, w) > 0`, drawn as a random
/// combination of the positive eigendirections of the restricted form.
pub fn positive_vector_in<S: Scalar, R: Rng + ?Sized>(
    space: &QuadraticSpace<S>,
    basis: &[Vec<S>],
    rng: &mut R,
) -> Result<Vec<S>> {
    signed_vector_in(space, basis, 1.0, rng)
}

/// Same as [`positive_vector_in`] for `q(w, w) < 0`.
pub fn negative_vector_in<S: Scalar, R: Rng + ?Sized>(
    space: &QuadraticSpace<S>,
    basis: &[Vec<S>],
    rng: &mut R,
) -> Result<Vec<S>> {
    signed_vector_in(space, basis, -1.0, rng)
}

fn signed_vector_in<S: Scalar, R: Rng + ?Sized>(
    space: &QuadraticSpace<S>,
    basis: &[Vec<S>],
    sign: f64,
    rng: &mut R,
) -> Result<Vec<S>> {
    for b in basis {
        space.check_len(b.len())?;
    }
    if basis.is_empty() {
        return Err(Error::NotFound);
    }
    let gram: Vec<Vec<f64>> = space
        .restricted_gram(basis)
        .iter()
        .map(|r| r.iter().map(|x| sign * x.widen()).collect())
        .collect();
    let (vals, vecs) = linalg::sym_eigen(&gram);
    let scale = basis
        .iter()
        .map(|b| b.iter().fold(0.0f64, |m, x| m.max(x.widen().abs())))
        .fold(0.0f64, f64::max)
        .powi(2)
        .max(f64::MIN_POSITIVE);
    let rho = vals.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(scale);
    let k = basis.len();
    let mut coeffs = vec![0.0; k];
    let mut found = false;
    for (val, vec) in vals.iter().zip(&vecs) {
        if *val > EIGEN_REL * rho {
            found = true;
            let c: f64 = 0.5 + rng.gen::<f64>();
            for i in 0..k {
                coeffs[i] += c * vec[i];
            }
        }
    }
    if !found {
        return Err(Error::NotFound);
    }
    let n = space.dim();
    let mut w = vec![S::zero(); n];
    for (c, b) in coeffs.iter().zip(basis) {
        for i in 0..n {
            w[i] = w[i] + S::lit(*c) * b[i];
        }
    }
    Ok(w)
}

/// A `q`-orthonormal basis of the span of `basis` (which must be
/// non-degenerate), positive vectors first. Returns the vectors with their
/// signs `q(v, v) = ±1`.
pub fn signed_orthonormal_basis(
    space: &QuadraticSpace<f64>,
    basis: &[Vec<f64>],
) -> Result<Vec<(f64, Vec<f64>)>> {
    // The first pass divides by √|λ| and loses accuracy on ill-conditioned
    // input; a second pass on its nearly orthonormal output recovers it.
    let first = orthonormalize_once(space, basis)?;
    let vectors: Vec<Vec<f64>> = first.into_iter().map(|x| x.1).collect();
    orthonormalize_once(space, &vectors)
}

fn orthonormalize_once(space: &QuadraticSpace<f64>, basis: &[Vec<f64>]) -> Result<Vec<(f64, Vec<f64>)>> {
    let gram = space.restricted_gram(basis);
    let (vals, vecs) = linalg::sym_eigen(&gram);
    let rho = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let n = space.dim();
    let mut out = Vec::new();
    for (val, vec) in vals.iter().zip(&vecs).rev() {
        if val.abs() <= EIGEN_REL * rho {
            return Err(Error::Degenerate(val.abs()));
        }
        let mut w = vec![0.0; n];
        for (c, b) in vec.iter().zip(basis) {
            for i in 0..n {
                w[i] += c * b[i];
            }
        }
        let s = val.abs().sqrt();
        out.push((val.signum(), w.iter().map(|x| x / s).collect()));
    }
    Ok(out)
}

/// `q`-orthonormal bases of a maximal positive and a maximal negative
/// subspace of the whole space.
pub fn positive_negative_split(space: &QuadraticSpace<f64>) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = space.dim();
    let ident: Vec<Vec<f64>> = (0..n).map(|i| linalg::unit_vector(n, i)).collect();
    let signed = signed_orthonormal_basis(space, &ident)?;
    let (pos, neg): (Vec<_>, Vec<_>) = signed.into_iter().partition(|(s, _)| *s > 0.0);
    Ok((
        pos.into_iter().map(|(_, v)| v).collect(),
        neg.into_iter().map(|(_, v)| v).collect(),
    ))
}

/// Gram–Schmidt for `q` on a list of vectors spanning a positive-definite
/// subspace, preserving the orientation of each initial flag.
pub fn q_gram_schmidt_positive(
    space: &QuadraticSpace<f64>,
    vectors: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        space.check_len(v.len())?;
        let mut w = v.clone();
        for u in &out {
            let c = space.q_real(&w, u);
            for i in 0..w.len() {
                w[i] -= c * u[i];
            }
        }
        let nn = space.q_real(&w, &w);
        let scale = linalg::rnorm(v).powi(2).max(f64::MIN_POSITIVE);
        if nn <= EIGEN_REL * scale {
            return Err(Error::Precondition(
                "vectors do not span a positive-definite subspace".into(),
            ));
        }
        let s = nn.sqrt();
        out.push(w.iter().map(|x| x / s).collect());
    }
    Ok(out)
}

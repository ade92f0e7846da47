//! Dense vector helpers and thin wrappers around nalgebra decompositions.
//!
//! Generic helpers work on `Complex<S>` slices. Decompositions always run in
//! `f64`; the generic layer widens before calling them.

use nalgebra::{Complex as NaComplex, DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type C64 = Complex<f64>;
pub type CVec = Vec<C64>;
pub type RVec = Vec<f64>;

pub fn conj<S: Scalar>(v: &[Complex<S>]) -> Vec<Complex<S>> {
    v.iter().map(|z| z.conj()).collect()
}

/// Euclidean (hermitian) norm.
pub fn norm<S: Scalar>(v: &[Complex<S>]) -> S {
    v.iter().fold(S::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

/// Hermitian Euclidean product `Σ aᵢ b̄ᵢ`.
pub fn herm_dot<S: Scalar>(a: &[Complex<S>], b: &[Complex<S>]) -> Complex<S> {
    a.iter()
        .zip(b)
        .fold(Complex::new(S::zero(), S::zero()), |acc, (x, y)| acc + *x * y.conj())
}

pub fn scale<S: Scalar>(c: Complex<S>, v: &[Complex<S>]) -> Vec<Complex<S>> {
    v.iter().map(|z| c * z).collect()
}

pub fn add<S: Scalar>(a: &[Complex<S>], b: &[Complex<S>]) -> Vec<Complex<S>> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub<S: Scalar>(a: &[Complex<S>], b: &[Complex<S>]) -> Vec<Complex<S>> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `a + c·b`.
pub fn axpy<S: Scalar>(a: &[Complex<S>], c: Complex<S>, b: &[Complex<S>]) -> Vec<Complex<S>> {
    a.iter().zip(b).map(|(x, y)| x + c * y).collect()
}

pub fn complexify<S: Scalar>(v: &[S]) -> Vec<Complex<S>> {
    v.iter().map(|x| Complex::new(*x, S::zero())).collect()
}

pub fn real_part(v: &[C64]) -> RVec {
    v.iter().map(|z| z.re).collect()
}

pub fn imag_part(v: &[C64]) -> RVec {
    v.iter().map(|z| z.im).collect()
}

pub fn rnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn unit_vector(n: usize, i: usize) -> RVec {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

pub fn cunit_vector(n: usize, i: usize) -> CVec {
    let mut v = vec![C64::new(0.0, 0.0); n];
    v[i] = C64::new(1.0, 0.0);
    v
}

/// Sine of the angle between two complex lines, `‖u ∧ v‖ / (‖u‖‖v‖)`.
pub fn projective_distance(u: &[C64], v: &[C64]) -> f64 {
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return f64::INFINITY;
    }
    let uh: CVec = u.iter().map(|z| z / nu).collect();
    let vh: CVec = v.iter().map(|z| z / nv).collect();
    let c = herm_dot(&vh, &uh);
    norm(&axpy(&vh, -c, &uh))
}

/// Rescales to unit norm and rotates the first coordinate of maximal modulus
/// to the positive real axis (lowest index wins ties).
pub fn canonical_normalize<S: Scalar>(v: &[Complex<S>]) -> Result<Vec<Complex<S>>> {
    let n = norm(v);
    if n == S::zero() || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    let tie = S::one() - S::lit(1e-12);
    let max = v.iter().fold(S::zero(), |m, z| m.max(z.norm()));
    let lead = v
        .iter()
        .position(|z| z.norm() >= max * tie)
        .expect("nonzero vector has a maximal entry");
    let phase = v[lead].conj() / v[lead].norm();
    Ok(v.iter().map(|z| *z * phase / n).collect())
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
/// Each returned vector is a unit eigenvector.
pub fn sym_eigen(m: &[Vec<f64>]) -> (RVec, Vec<RVec>) {
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = nalgebra::SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = order
        .iter()
        .map(|&k| (0..n).map(|i| eig.eigenvectors[(i, k)]).collect())
        .collect();
    (vals, vecs)
}

/// Eigen-decomposition of a complex hermitian matrix, eigenvalues ascending.
pub fn herm_eigen(m: &[Vec<C64>]) -> (RVec, Vec<CVec>) {
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| {
        let z = 0.5 * (m[i][j] + m[j][i].conj());
        NaComplex::new(z.re, z.im)
    });
    let eig = nalgebra::SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = order
        .iter()
        .map(|&k| {
            (0..n)
                .map(|i| {
                    let z = eig.eigenvectors[(i, k)];
                    C64::new(z.re, z.im)
                })
                .collect()
        })
        .collect();
    (vals, vecs)
}

/// Null space of a complex `k × n` matrix given by rows. Returns the numerical
/// rank and an orthonormal basis of the kernel.
pub fn complex_nullspace(rows: &[CVec], n: usize, rel_tol: f64) -> (usize, Vec<CVec>) {
    let k = rows.len();
    let m = k.max(n);
    let mat = DMatrix::from_fn(m, n, |i, j| {
        if i < k {
            NaComplex::new(rows[i][j].re, rows[i][j].im)
        } else {
            NaComplex::new(0.0, 0.0)
        }
    });
    let svd = nalgebra::SVD::new(mat, false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * smax.max(f64::MIN_POSITIVE);
    let mut rank = 0;
    let mut kernel = Vec::new();
    for (idx, s) in svd.singular_values.iter().enumerate() {
        if *s > cut && smax > 0.0 {
            rank += 1;
        } else {
            kernel.push(
                (0..n)
                    .map(|j| {
                        let z = vt[(idx, j)].conj();
                        C64::new(z.re, z.im)
                    })
                    .collect(),
            );
        }
    }
    (rank, kernel)
}

/// Numerical rank of a set of complex vectors.
pub fn complex_rank(vectors: &[CVec], rel_tol: f64) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let n = vectors[0].len();
    complex_nullspace(vectors, n, rel_tol).0
}

/// Solves `A x = b` for a square complex system.
pub fn solve_complex(a: &[Vec<C64>], b: &[C64]) -> Result<CVec> {
    let n = a.len();
    let mat = DMatrix::from_fn(n, n, |i, j| NaComplex::new(a[i][j].re, a[i][j].im));
    let rhs = DVector::from_fn(n, |i, _| NaComplex::new(b[i].re, b[i].im));
    let lu = mat.lu();
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular complex system".into()))?;
    Ok(x.iter().map(|z| C64::new(z.re, z.im)).collect())
}

/// Solves `A x = b` for a square real system.
pub fn solve_real(a: &[Vec<f64>], b: &[f64]) -> Result<RVec> {
    let n = a.len();
    let mat = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let rhs = DVector::from_column_slice(b);
    let x = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular real system".into()))?;
    Ok(x.iter().cloned().collect())
}

/// Inverse of a square real matrix.
pub fn invert_real(a: &[Vec<f64>]) -> Result<Vec<RVec>> {
    let n = a.len();
    let mat = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let inv = mat
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular real matrix".into()))?;
    Ok((0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect())
}

pub fn det_real(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i][j]).determinant()
}

/// Product of real matrices stored as rows.
pub fn matmul(a: &[RVec], b: &[RVec]) -> Vec<RVec> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &[RVec]) -> Vec<RVec> {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn matvec(a: &[RVec], v: &[f64]) -> RVec {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn cmatvec(a: &[RVec], v: &[C64]) -> CVec {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(C64::new(0.0, 0.0), |acc, (x, y)| acc + *x * y)
        })
        .collect()
}

//! Polynomial curves `t ↦ [f₀(t) : … : f_m(t)]` with exact jets.

use nalgebra::{Complex as NaComplex, DMatrix, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};

/// A polynomial with complex coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Poly(pub Vec<C64>);

impl Poly {
    pub fn constant(c: C64) -> Self {
        Poly(vec![c])
    }

    /// `a + b t`.
    pub fn linear(a: C64, b: C64) -> Self {
        Poly(vec![a, b])
    }

    /// Degree of the polynomial, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| *c != C64::new(0.0, 0.0))
    }

    pub fn eval(&self, t: C64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * k as f64)
                .collect(),
        )
    }

    /// `f^{(k)}(t) / k!`, the `k`-th Taylor coefficient at `t`.
    pub fn taylor(&self, t: C64, k: usize) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, c) in self.0.iter().enumerate().skip(k).rev() {
            acc = acc * t + c * binomial(j, k);
        }
        acc
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let zero = C64::new(0.0, 0.0);
        Poly(
            (0..n)
                .map(|k| *self.0.get(k).unwrap_or(&zero) + *other.0.get(k).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn scale(&self, c: C64) -> Poly {
        Poly(self.0.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::default();
        }
        let mut out = vec![C64::new(0.0, 0.0); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// `t ↦ f(a t + b)`.
    pub fn compose_affine(&self, a: C64, b: C64) -> Poly {
        let inner = Poly::linear(b, a);
        let mut out = Poly::default();
        for c in self.0.iter().rev() {
            out = out.mul(&inner).add(&Poly::constant(*c));
        }
        out
    }

    /// `t ↦ f(t^k)`.
    pub fn compose_power(&self, k: usize) -> Poly {
        let mut out = vec![C64::new(0.0, 0.0); (self.0.len().max(1) - 1) * k + 1];
        for (j, c) in self.0.iter().enumerate() {
            out[j * k] = *c;
        }
        Poly(out)
    }

    /// Roots as eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<C64>> {
        let d = self.degree().ok_or(Error::ZeroVector)?;
        if d == 0 {
            return Ok(Vec::new());
        }
        let lead = self.0[d];
        let companion = DMatrix::from_fn(d, d, |i, j| {
            let z = if j == d - 1 {
                -self.0[i] / lead
            } else if i == j + 1 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            NaComplex::new(z.re, z.im)
        });
        let eig = Schur::new(companion)
            .eigenvalues()
            .ok_or_else(|| Error::Numeric("companion Schur form did not converge".into()))?;
        Ok(eig.iter().map(|z| C64::new(z.re, z.im)).collect())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A holomorphic map from `ℂ` to a projective space given by polynomial
/// homogeneous coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialCurve {
    pub components: Vec<Poly>,
}

impl PolynomialCurve {
    pub fn new(components: Vec<Poly>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Precondition("curve needs at least one component".into()));
        }
        if components.iter().all(|p| p.degree().is_none()) {
            return Err(Error::Precondition("all curve components vanish identically".into()));
        }
        Ok(Self { components })
    }

    /// Constant curve at `v`.
    pub fn constant(v: &[C64]) -> Result<Self> {
        Self::new(v.iter().map(|c| Poly::constant(*c)).collect())
    }

    /// `t ↦ a + t b`.
    pub fn line(a: &[C64], b: &[C64]) -> Result<Self> {
        Self::new(a.iter().zip(b).map(|(x, y)| Poly::linear(*x, *y)).collect())
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn degree(&self) -> usize {
        self.components
            .iter()
            .filter_map(Poly::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, t: C64) -> CVec {
        self.components.iter().map(|p| p.eval(t)).collect()
    }

    pub fn derivative(&self) -> PolynomialCurve {
        PolynomialCurve {
            components: self.components.iter().map(Poly::derivative).collect(),
        }
    }

    /// `f^{(k)}(t)`.
    pub fn eval_derivative(&self, t: C64, k: usize) -> CVec {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.taylor(t, k).into_iter().map(|c| c * fact).collect()
    }

    /// Vector of `k`-th Taylor coefficients at `t`.
    pub fn taylor(&self, t: C64, k: usize) -> CVec {
        self.components.iter().map(|p| p.taylor(t, k)).collect()
    }

    /// Precomposition with `t ↦ a t + b`.
    pub fn reparametrize(&self, a: C64, b: C64) -> PolynomialCurve {
        PolynomialCurve {
            components: self.components.iter().map(|p| p.compose_affine(a, b)).collect(),
        }
    }

    /// Precomposition with `t ↦ t^k`.
    pub fn compose_power(&self, k: usize) -> PolynomialCurve {
        PolynomialCurve {
            components: self.components.iter().map(|p| p.compose_power(k)).collect(),
        }
    }

    /// Multiplies every component by the same polynomial; the projective
    /// curve is unchanged away from the zeros of `factor`.
    pub fn times(&self, factor: &Poly) -> PolynomialCurve {
        PolynomialCurve {
            components: self.components.iter().map(|p| p.mul(factor)).collect(),
        }
    }

    /// Applies a complex matrix (rows) to the coordinate vector.
    pub fn map_linear(&self, m: &[CVec]) -> PolynomialCurve {
        PolynomialCurve {
            components: m
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&self.components)
                        .fold(Poly::default(), |acc, (c, p)| acc.add(&p.scale(*c)))
                })
                .collect(),
        }
    }

    /// Sum `Σ_k p_k(t) b_k` of polynomial coefficients against vectors.
    pub fn from_combination(coeffs: &[Poly], basis: &[CVec]) -> Result<Self> {
        let n = basis.first().map(|b| b.len()).unwrap_or(0);
        let comps = (0..n)
            .map(|i| {
                coeffs
                    .iter()
                    .zip(basis)
                    .fold(Poly::default(), |acc, (p, b)| acc.add(&p.scale(b[i])))
            })
            .collect();
        Self::new(comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn taylor_matches_repeated_derivative() {
        let p = Poly(vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0), c(2.0, -1.0)]);
        let t = c(0.3, -0.7);
        let d2 = p.derivative().derivative().eval(t);
        assert!((p.taylor(t, 2) * 2.0 - d2).norm() < 1e-14);
        assert!((p.taylor(t, 0) - p.eval(t)).norm() < 1e-14);
    }

    #[test]
    fn affine_composition() {
        let p = Poly(vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)]);
        let q = p.compose_affine(c(2.0, 1.0), c(-1.0, 0.5));
        let t = c(0.2, 0.9);
        assert!((q.eval(t) - p.eval(c(2.0, 1.0) * t + c(-1.0, 0.5))).norm() < 1e-13);
    }

    #[test]
    fn power_composition_and_degree() {
        let p = Poly(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 3.0)]);
        let q = p.compose_power(2);
        assert_eq!(q.degree(), Some(4));
        let t = c(0.4, 0.1);
        assert!((q.eval(t) - p.eval(t * t)).norm() < 1e-14);
    }

    #[test]
    fn zero_curve_rejected() {
        assert!(PolynomialCurve::new(vec![Poly::default(), Poly(vec![c(0.0, 0.0)])]).is_err());
    }
}

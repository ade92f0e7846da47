//! Gauss–Legendre panels, periodic trapezoid sums and the radial weights of
//! characteristic functions.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Golub–Welsch: eigenvalues of the Jacobi matrix of the Legendre
    /// recurrence are the nodes, squared first components times 2 the weights.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i.abs_diff(j) == 1 {
                let k = i.max(j) as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // symmetrize against eigen-solver roundoff
        for k in 0..order / 2 {
            let (a, b) = (pairs[k], pairs[order - 1 - k]);
            let x = 0.5 * (b.0 - a.0);
            let w = 0.5 * (a.1 + b.1);
            pairs[k] = (-x, w);
            pairs[order - 1 - k] = (x, w);
        }
        if order % 2 == 1 {
            pairs[order / 2].0 = 0.0;
        }
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫_a^b f` on `panels` equal panels.
    pub fn composite(&self, f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let mid = a + (k as f64 + 0.5) * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + 0.5 * h * x);
            }
            total += 0.5 * h * s;
        }
        total
    }

    /// Doubles the panel count from `start` until two successive values
    /// differ by at most `rel_tol · max(|value|, floor)`.
    pub fn adaptive(
        &self,
        f: &mut dyn FnMut(f64) -> f64,
        a: f64,
        b: f64,
        rel_tol: f64,
        floor: f64,
        start: usize,
        max_panels: usize,
    ) -> Result<(f64, usize)> {
        let mut panels = start.max(1);
        let mut prev = self.composite(f, a, b, panels);
        while panels < max_panels {
            panels *= 2;
            let next = self.composite(f, a, b, panels);
            if (next - prev).abs() <= rel_tol * next.abs().max(floor) {
                return Ok((next, panels));
            }
            prev = next;
        }
        Err(Error::BudgetExceeded(format!(
            "quadrature on [{a}, {b}] did not converge within {max_panels} panels"
        )))
    }
}

/// `∫₀^{2π} f(θ) dθ` by the `n`-point trapezoid rule.
pub fn circle_integral(f: &mut dyn FnMut(f64) -> f64, n: usize) -> f64 {
    let h = TAU / n as f64;
    (0..n).map(|k| f(k as f64 * h)).sum::<f64>() * h
}

/// Settings for radial integration of characteristic functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarRule {
    pub angular: usize,
    pub order: usize,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for PolarRule {
    fn default() -> Self {
        Self {
            angular: crate::tolerances::QUAD_ANGULAR,
            order: 16,
            rel_tol: crate::tolerances::QUAD_REL,
            max_panels: 1 << 12,
        }
    }
}

/// `T(r) = ∫₁ʳ dt/t ∫_{|z|<t} ρ dA` on an increasing grid of radii `r ≥ 1`.
///
/// With `m(s) = ∫₀^{2π} ρ(s e^{iθ}) dθ` this is
/// `log r · (I₀ + A(r)) − B(r)`, `I₀ = ∫₀¹ m s ds`, `A(r) = ∫₁ʳ m s ds` and
/// `B(r) = ∫₁ʳ m s log s ds`; the last two accumulate segment by segment in
/// `u = log s`.
pub fn characteristic_on_grid(
    density: &mut dyn FnMut(f64, f64) -> f64,
    radii: &[f64],
    rule: &PolarRule,
) -> Result<Vec<f64>> {
    for w in radii.windows(2) {
        if !(w[1] >= w[0]) {
            return Err(Error::Precondition("radii must be nondecreasing".into()));
        }
    }
    if radii.first().is_some_and(|r| !(*r >= 1.0)) {
        return Err(Error::Precondition("characteristic functions need r ≥ 1".into()));
    }
    let gl = GaussLegendre::new(rule.order);
    let n = rule.angular;
    let mut ring = |s: f64| -> f64 { circle_integral(&mut |th| density(s, th), n) };
    let (i0, _) = gl.adaptive(&mut |s| ring(s) * s, 0.0, 1.0, rule.rel_tol, 1e-300, 2, rule.max_panels)?;
    let scale = i0.abs().max(1e-300);
    let mut a = 0.0f64;
    let mut b = 0.0f64;
    let mut u0 = 0.0;
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let u1 = r.ln();
        if u1 > u0 {
            let floor = scale.max(a.abs());
            let (da, _) = gl.adaptive(
                &mut |u| {
                    let s = u.exp();
                    ring(s) * s * s
                },
                u0,
                u1,
                rule.rel_tol,
                floor,
                2,
                rule.max_panels,
            )?;
            let (db, _) = gl.adaptive(
                &mut |u| {
                    let s = u.exp();
                    ring(s) * s * s * u
                },
                u0,
                u1,
                rule.rel_tol,
                floor * u1.max(1.0),
                2,
                rule.max_panels,
            )?;
            a += da;
            b += db;
            u0 = u1;
        }
        out.push(u1 * (i0 + a) - b);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules_are_exact() {
        let g = GaussLegendre::new(2);
        assert!((g.nodes[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let g = GaussLegendre::new(16);
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let v = g.composite(&mut |x| x.powi(31) + x.powi(30), -1.0, 1.0, 1);
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_is_spectral_on_trigonometric_polynomials() {
        let v = circle_integral(&mut |t| (3.0 * t).cos().powi(2), 16);
        assert!((v - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn constant_density_characteristic() {
        // ρ = 1: ∫₁ʳ π t dt = π (r² − 1)/2
        let t = characteristic_on_grid(&mut |_, _| 1.0, &[1.0, 2.0, 5.0], &PolarRule::default()).unwrap();
        assert!(t[0].abs() < 1e-14);
        assert!((t[1] - 1.5 * std::f64::consts::PI).abs() < 1e-10);
        assert!((t[2] - 12.0 * std::f64::consts::PI).abs() < 1e-9);
    }
}

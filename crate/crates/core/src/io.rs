//! JSON shapes for spaces, points, curves and walls, and number formatting for
//! tables.

use serde::{Deserialize, Serialize};

use crate::curve::{Poly, PolynomialCurve};
use crate::d2_model::D2Point;
use crate::error::{Error, Result};
use crate::indefinite_linear::QuadraticSpace;
use crate::lattice_transport::WallSet;
use crate::linalg::CVec;
use crate::C64;

/// `"standard"` or an explicit Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GramSpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

/// `{"p": int, "gram": [[…]] | "standard"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub p: usize,
    #[serde(default = "standard")]
    pub gram: GramSpec,
}

fn standard() -> GramSpec {
    GramSpec::Named("standard".into())
}

impl SpaceSpec {
    pub fn standard(p: usize) -> Self {
        Self { p, gram: standard() }
    }

    pub fn build(&self) -> Result<QuadraticSpace<f64>> {
        let space = match &self.gram {
            GramSpec::Named(name) if name == "standard" => QuadraticSpace::standard(self.p)?,
            GramSpec::Named(name) => {
                return Err(Error::Precondition(format!("unknown gram name {name:?}")));
            }
            GramSpec::Matrix(rows) => QuadraticSpace::from_gram(rows.clone())?,
        };
        if space.p() != self.p {
            return Err(Error::WrongSignature {
                positive: 3,
                negative: space.p(),
                null: 0,
                expected_p: self.p,
            });
        }
        Ok(space)
    }
}

pub fn complex(pair: [f64; 2]) -> C64 {
    C64::new(pair[0], pair[1])
}

pub fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// A homogeneous vector as `[[re, im], …]`.
pub fn vector(pairs: &[[f64; 2]]) -> CVec {
    pairs.iter().map(|p| complex(*p)).collect()
}

pub fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| pair(*z)).collect()
}

/// `{"x": [[re, im], [re, im]], "y": […]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D2PointSpec {
    pub x: [[f64; 2]; 2],
    pub y: [[f64; 2]; 2],
}

impl D2PointSpec {
    pub fn build(&self) -> Result<D2Point<f64>> {
        D2Point::new(
            [complex(self.x[0]), complex(self.x[1])],
            [complex(self.y[0]), complex(self.y[1])],
        )
    }

    pub fn from_point(p: &D2Point<f64>) -> Self {
        Self {
            x: [pair(p.x[0]), pair(p.x[1])],
            y: [pair(p.y[0]), pair(p.y[1])],
        }
    }
}

/// `{"components": [[[re, im], …], …]}`, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub components: Vec<Vec<[f64; 2]>>,
}

impl CurveSpec {
    pub fn build(&self) -> Result<PolynomialCurve> {
        PolynomialCurve::new(self.components.iter().map(|c| Poly(vector(c))).collect())
    }

    pub fn from_curve(c: &PolynomialCurve) -> Self {
        Self {
            components: c.components.iter().map(|p| pairs(&p.0)).collect(),
        }
    }
}

/// An entry of a wall class: a JSON number or a string `"a/b"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rational {
    Number(f64),
    Text(String),
}

impl Rational {
    pub fn value(&self) -> Result<f64> {
        match self {
            Rational::Number(x) => Ok(*x),
            Rational::Text(s) => {
                let bad = || Error::Precondition(format!("cannot read {s:?} as a rational"));
                let (num, den) = match s.split_once('/') {
                    Some((a, b)) => (a.trim(), b.trim()),
                    None => (s.trim(), "1"),
                };
                let a: i64 = num.parse().map_err(|_| bad())?;
                let b: i64 = den.parse().map_err(|_| bad())?;
                if b == 0 {
                    return Err(bad());
                }
                Ok(a as f64 / b as f64)
            }
        }
    }
}

/// `{"walls": [[rational, …], …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSetSpec {
    pub walls: Vec<Vec<Rational>>,
}

impl WallSetSpec {
    pub fn build(&self, space: &QuadraticSpace<f64>) -> Result<WallSet> {
        let classes = self
            .walls
            .iter()
            .map(|w| w.iter().map(Rational::value).collect::<Result<Vec<f64>>>())
            .collect::<Result<Vec<_>>>()?;
        WallSet::new(space, classes)
    }
}

/// 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// `re±imi` with both parts at 17 significant digits.
pub fn fmt_complex(z: C64) -> String {
    format!("{:+.16e}{:+.16e}i", z.re, z.im)
}

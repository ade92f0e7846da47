//! Numerical geometry of period domains of K3 type.
//!
//! The crate models a real symmetric form `q` of signature `(3, p)`, the period
//! domain `D` of isotropic `q`-positive lines and the larger domain `Ω` of
//! `h`-positive lines, together with their pseudo-Kähler metrics, explicit
//! chains of positive holomorphic disks, Nevanlinna functionals of polynomial
//! curves and isometries of the lattice that fix a prescribed subspace.
//!
//! The algebraic layer ([`indefinite_linear`], [`d2_model`]) is generic over
//! [`Scalar`]; everything that relies on finite differences or quadrature is
//! written for `f64`.

pub mod curve;
pub mod d2_model;
pub mod disk_chains;
pub mod error;
pub mod indefinite_linear;
pub mod io;
pub mod lattice_transport;
pub mod linalg;
pub mod nevanlinna;
pub mod period_domain;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod tolerances;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

pub use num_complex::Complex;

/// Double-precision complex number.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision quadratic space.
pub type QuadraticSpace64 = indefinite_linear::QuadraticSpace<f64>;
/// Single-precision quadratic space.
pub type QuadraticSpace32 = indefinite_linear::QuadraticSpace<f32>;
/// Double-precision point of `ℙ¹ × ℙ¹`.
pub type D2Point64 = d2_model::D2Point<f64>;
/// Single-precision point of `ℙ¹ × ℙ¹`.
pub type D2Point32 = d2_model::D2Point<f32>;

//! Numerical tolerances shared by the library, the driver and the test suites.
//!
//! The `pub const` items are library defaults and acceptance thresholds. The
//! driver carries a [`Tolerances`] value for the entries it threads into
//! library calls, so those can be overridden by name.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalues with modulus below this fraction of the spectral radius count as null.
pub const EIGEN_REL: f64 = 1e-9;
/// Relative isotropy tolerance `|q(σ,σ)| / q(σ,σ̄)`.
pub const ISOTROPY_REL: f64 = 1e-9;
/// Relative tolerance for projective equality `|det[u v]| < tol ‖u‖‖v‖`.
pub const PROJECTIVE_EQ: f64 = 1e-9;
/// Base finite-difference step, multiplied by the local scale.
pub const FD_STEP: f64 = 2e-3;
/// Relative change at which adaptive radial quadrature stops doubling.
pub const QUAD_REL: f64 = 1e-6;
/// Angular nodes for the polar quadrature of characteristic functions.
pub const QUAD_ANGULAR: usize = 256;
/// Nodes of the periodic trapezoid rule for circle means.
pub const CIRCLE_NODES: usize = 1024;
/// Margin below which chamber witnesses are declared ambiguous.
pub const WITNESS_MARGIN: f64 = 1e-8;
/// Random restarts of the chamber witness search.
pub const WITNESS_RESTARTS: usize = 64;
/// Maximum number of disks in a chain.
pub const MAX_DISKS: usize = 64;
/// Polar grid resolution for positivity certificates.
pub const CERT_GRID: usize = 64;
/// Endpoint residual allowed on each link of a disk chain.
pub const LINK_RESIDUAL: f64 = 1e-9;
/// Relative spread allowed for calibrated constants.
pub const CALIBRATION_SPREAD: f64 = 1e-4;

/// Thresholds of the acceptance suite.
pub mod acceptance {
    /// Closed-form metric versus the pushed-forward pseudo-hermitian form.
    pub const METRIC_MATRIX_REL: f64 = 1e-10;
    /// Spread of κ_geom over points and sections.
    pub const KAPPA_GEOM_SPREAD: f64 = 1e-4;
    /// Positivity profile versus metric oracle.
    pub const PROFILE_REL: f64 = 1e-10;
    /// Roots of the positivity polynomial.
    pub const ROOT_REL: f64 = 1e-12;
    /// Factor applied to `C_α √n` for the sampled positivity region.
    pub const RADIUS_SHRINK: f64 = 0.999;
    /// Meeting-point residual of the two-disk chain.
    pub const MEETING_RESIDUAL: f64 = 1e-10;
    /// Target length for constructive chains.
    pub const CHAIN_TARGET: f64 = 1e-2;
    /// Isometry postconditions.
    pub const ISOMETRY: f64 = 1e-9;
    /// Spread of the holomorphic sectional curvature.
    pub const HSC_SPREAD: f64 = 1e-4;
    /// Variation of the characteristic-function residual.
    pub const PROP67_VARIATION: f64 = 1e-3;
    /// Agreement of κ_jensen across oracle potentials.
    pub const KAPPA_JENSEN_REL: f64 = 1e-6;
    /// Relative residual of the curvature decomposition.
    pub const CURVATURE_IDENTITY_REL: f64 = 1e-3;
    /// Required inflation of that residual under γ ↦ 0.9γ.
    pub const SENSITIVITY_FACTOR: f64 = 10.0;
}

/// Named tolerances the driver passes to library calls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub isotropy_rel: f64,
    pub projective_eq: f64,
    pub fd_step: f64,
    pub quad_rel: f64,
    pub link_residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            isotropy_rel: ISOTROPY_REL,
            projective_eq: PROJECTIVE_EQ,
            fd_step: FD_STEP,
            quad_rel: QUAD_REL,
            link_residual: LINK_RESIDUAL,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 5] = [
        "isotropy_rel",
        "projective_eq",
        "fd_step",
        "quad_rel",
        "link_residual",
    ];

    /// Overrides one entry by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Precondition(format!(
                "tolerance {name} must be positive and finite"
            )));
        }
        let slot = match name {
            "isotropy_rel" => &mut self.isotropy_rel,
            "projective_eq" => &mut self.projective_eq,
            "fd_step" => &mut self.fd_step,
            "quad_rel" => &mut self.quad_rel,
            "link_residual" => &mut self.link_residual,
            _ => {
                return Err(Error::Precondition(format!(
                    "unknown tolerance {name}; known: {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

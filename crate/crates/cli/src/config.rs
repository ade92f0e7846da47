//! Run configuration. Every section is optional; missing sections fall back
//! to the built-in demonstration defaults.

use std::collections::BTreeMap;

use hkperiod::io::{D2PointSpec, SpaceSpec, WallSetSpec};
use hkperiod::lattice_transport::Sign;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<String>,
    /// Overrides by tolerance name; `--tol` on the command line wins.
    pub tolerances: BTreeMap<String, f64>,
    /// Space for `domain`, `metric` and `twistor-chain`.
    pub space: Option<SpaceSpec>,
    pub domain: DomainConfig,
    pub metric: MetricConfig,
    pub hsc: HscConfig,
    pub d2: D2Config,
    pub chain: ChainConfig,
    pub twistor_chain: TwistorConfig,
    pub nevanlinna: NevanlinnaConfig,
    pub transport: TransportConfig,
    pub calibrate: CalibrateConfig,
}

/// Homogeneous vector as `[[re, im], …]`.
pub type VectorSpec = Vec<[f64; 2]>;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainConfig {
    /// Explicit points; `None` selects a small fixed set around the base point.
    pub points: Option<Vec<VectorSpec>>,
    pub random_d: usize,
    pub random_omega: usize,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            points: None,
            random_d: 5,
            random_omega: 5,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    /// Points of `D` or `Ω`; `None` means the base point `e₁ + i e₂`.
    pub points: Option<Vec<VectorSpec>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HscConfig {
    pub p_values: Vec<usize>,
    pub points: usize,
    pub directions: usize,
}

impl Default for HscConfig {
    fn default() -> Self {
        Self {
            p_values: vec![1, 2, 19],
            points: 10,
            directions: 50,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct D2Config {
    pub points: Vec<D2PointSpec>,
    pub random: usize,
}

impl Default for D2Config {
    fn default() -> Self {
        Self {
            points: Vec::new(),
            random: 10,
        }
    }
}

/// A pair of points to connect. `d2` pairs live in `ℙ¹ × ℙ¹`; `d` pairs are
/// homogeneous vectors of `D` for signature `(3, p)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairSpec {
    D2 { from: D2PointSpec, to: D2PointSpec },
    D { p: usize, from: VectorSpec, to: VectorSpec },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub schedule: Vec<u64>,
    pub target: f64,
    pub pairs: Vec<PairSpec>,
    /// Random `D₂` pairs appended after the explicit ones.
    pub random_d2: usize,
    /// Random pairs of `D` appended for each listed `p`.
    pub random_d: usize,
    pub random_d_p: Vec<usize>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            alpha: [1.0, 1.0],
            beta: [1.0, 1.0],
            schedule: vec![10, 100, 1000, 10000],
            target: 1e-2,
            pairs: Vec::new(),
            random_d2: 2,
            random_d: 1,
            random_d_p: vec![2, 19],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwistorConfig {
    pub pairs: Vec<[VectorSpec; 2]>,
    pub random: usize,
}

impl Default for TwistorConfig {
    fn default() -> Self {
        Self {
            pairs: Vec::new(),
            random: 5,
        }
    }
}

/// Curves for the Nevanlinna tables.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveChoice {
    /// `f_λ` pushed into the `(3, 1)` model quadric.
    FLambda { lambda: [f64; 2] },
    /// `e₁ + z(e₂ + e₄/2)` for signature `(3, 2)`.
    NegativeLine,
    /// The standard twistor conic through `e₁, e₂, e₃`.
    TwistorConic { p: usize },
    /// `f_λ(z^k)`, ramified at the origin.
    FLambdaPower { lambda: [f64; 2], power: usize },
    /// Components in ascending degree, as in [`hkperiod::io::CurveSpec`].
    Explicit { p: usize, components: Vec<Vec<[f64; 2]>> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityCurve {
    pub curve: CurveChoice,
    /// Samples are drawn uniformly in `|z| < radius` and kept where `f′` is positive.
    pub radius: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NevanlinnaConfig {
    pub curves: Vec<CurveChoice>,
    pub r_min: f64,
    pub r_max: f64,
    pub radii: usize,
    /// Curve and radii for the diagnostic table; the curve must be positive.
    pub smt_curve: CurveChoice,
    pub smt_radii: Vec<f64>,
    pub identity: Vec<IdentityCurve>,
    pub identity_samples: usize,
}

impl Default for NevanlinnaConfig {
    fn default() -> Self {
        Self {
            curves: vec![
                CurveChoice::FLambda { lambda: [0.0, 1.0] },
                CurveChoice::NegativeLine,
                CurveChoice::TwistorConic { p: 19 },
            ],
            r_min: 2.0,
            r_max: 50.0,
            radii: 8,
            smt_curve: CurveChoice::FLambda { lambda: [1e-4, 1e-4] },
            smt_radii: vec![2.0, 10.0, 40.0],
            identity: vec![
                IdentityCurve {
                    curve: CurveChoice::FLambda { lambda: [0.1, 0.1] },
                    radius: 0.8,
                },
                IdentityCurve {
                    curve: CurveChoice::FLambdaPower { lambda: [0.1, 0.1], power: 2 },
                    radius: 0.6,
                },
            ],
            identity_samples: 50,
        }
    }
}

/// A positive 2-plane `(e₁, e₂)`.
pub type PlaneSpec = [Vec<f64>; 2];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub space: Option<SpaceSpec>,
    pub walls: Option<WallSetSpec>,
    /// Samples of the path as positive 2-planes.
    pub path: Option<Vec<PlaneSpec>>,
    /// Class of type (1,1) at the first sample fixing the initial chamber.
    pub kappa: Option<Vec<f64>>,
    /// Initial signs; derived from `kappa` when absent.
    pub initial: Option<BTreeMap<usize, Sign>>,
    pub max_jump: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateConfig {
    pub p_values: Vec<usize>,
    pub kappa_samples: usize,
    pub gamma_points: usize,
    pub gamma_directions: usize,
    pub jensen_radii: Vec<f64>,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            p_values: vec![1, 2, 19],
            kappa_samples: 20,
            gamma_points: 4,
            gamma_directions: 8,
            jensen_radii: vec![2.0, 5.0, 10.0],
        }
    }
}

//! Permeability laws `kappa(s)` of the dilatation `s = div u`.
//!
//! Every law is bounded away from zero and infinity and Lipschitz, which is
//! what keeps the pressure operator uniformly elliptic for any displacement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PermeabilityModel {
    Constant {
        kappa: f64,
    },
    /// Kozeny-Carman law `kappa0 rho^3 / (1 - rho)^2` with the dilatation
    /// clamped to `[c_s, C_s]`; porosity `rho(s) = rho0 + (1 - rho0) s`.
    KozenyCarman {
        kappa0: f64,
        rho0: f64,
        c_s: f64,
        #[serde(rename = "C_s")]
        upper_s: f64,
    },
    /// Open/closed channel network law with porosity
    /// `rho(s) = 1 - (1 - rho0) exp(-s)` and a floor `kappa0 * delta`.
    NetworkInspired {
        kappa0: f64,
        rho0: f64,
        rho_hat: f64,
        delta: f64,
    },
    /// `kappa0 * clamp(rho(s), c_s, C_s)^2` with `rho(s) = rho0 + (1 - rho0) s`.
    QuadraticClamped {
        kappa0: f64,
        rho0: f64,
        c_s: f64,
        #[serde(rename = "C_s")]
        upper_s: f64,
    },
}

fn affine_porosity(rho0: f64, s: f64) -> f64 {
    rho0 + (1.0 - rho0) * s
}

fn kozeny_carman(kappa0: f64, rho: f64) -> f64 {
    kappa0 * rho.powi(3) / (1.0 - rho).powi(2)
}

// d/drho of rho^3 / (1 - rho)^2
fn kozeny_carman_slope(rho: f64) -> f64 {
    rho * rho * (3.0 - rho) / (1.0 - rho).powi(3)
}

impl PermeabilityModel {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        match *self {
            PermeabilityModel::Constant { kappa } => positive("kappa", kappa),
            PermeabilityModel::KozenyCarman { kappa0, rho0, c_s, upper_s } => {
                positive("kappa0", kappa0)?;
                unit("rho0", rho0)?;
                let lowest = rho0 / (rho0 - 1.0);
                if !(lowest < c_s && c_s < upper_s && upper_s < 1.0) {
                    return Err(Error::invalid(format!(
                        "clamps must satisfy {lowest} < c_s < C_s < 1, got c_s = {c_s}, C_s = {upper_s}"
                    )));
                }
                Ok(())
            }
            PermeabilityModel::NetworkInspired { kappa0, rho0, rho_hat, delta } => {
                positive("kappa0", kappa0)?;
                positive("delta", delta)?;
                unit("rho0", rho0)?;
                if !(rho_hat > 0.0 && rho_hat < rho0) {
                    return Err(Error::invalid(format!(
                        "rho_hat must lie in (0, rho0 = {rho0}), got {rho_hat}"
                    )));
                }
                Ok(())
            }
            PermeabilityModel::QuadraticClamped { kappa0, rho0, c_s, upper_s } => {
                positive("kappa0", kappa0)?;
                unit("rho0", rho0)?;
                if !(0.0 < c_s && c_s < upper_s) {
                    return Err(Error::invalid(format!(
                        "porosity clamps must satisfy 0 < c_s < C_s, got c_s = {c_s}, C_s = {upper_s}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            PermeabilityModel::Constant { kappa } => kappa,
            PermeabilityModel::KozenyCarman { kappa0, rho0, c_s, upper_s } => {
                let s = s.clamp(c_s, upper_s);
                kozeny_carman(kappa0, affine_porosity(rho0, s))
            }
            PermeabilityModel::NetworkInspired { kappa0, rho0, rho_hat, delta } => {
                let rho = 1.0 - (1.0 - rho0) * (-s).exp();
                let open = if rho < rho_hat {
                    0.0
                } else {
                    kappa0 * (rho - rho_hat) / (rho0 - rho_hat)
                };
                open + kappa0 * delta
            }
            PermeabilityModel::QuadraticClamped { kappa0, rho0, c_s, upper_s } => {
                let rho = affine_porosity(rho0, s).clamp(c_s, upper_s);
                kappa0 * rho * rho
            }
        }
    }

    /// `(kappa_minus, kappa_plus)`; the upper bound of the network law is a
    /// supremum approached as `s -> infinity`.
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            PermeabilityModel::Constant { kappa } => (kappa, kappa),
            PermeabilityModel::KozenyCarman { kappa0, rho0, c_s, upper_s } => (
                kozeny_carman(kappa0, affine_porosity(rho0, c_s)),
                kozeny_carman(kappa0, affine_porosity(rho0, upper_s)),
            ),
            PermeabilityModel::NetworkInspired { kappa0, rho0, rho_hat, delta } => (
                kappa0 * delta,
                kappa0 * (1.0 - rho_hat) / (rho0 - rho_hat) + kappa0 * delta,
            ),
            PermeabilityModel::QuadraticClamped { kappa0, c_s, upper_s, .. } => {
                (kappa0 * c_s * c_s, kappa0 * upper_s * upper_s)
            }
        }
    }

    /// Derivative of the active branch. At a clamp breakpoint the derivative
    /// of the unclamped branch is returned.
    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            PermeabilityModel::Constant { .. } => 0.0,
            PermeabilityModel::KozenyCarman { kappa0, rho0, c_s, upper_s } => {
                if s < c_s || s > upper_s {
                    0.0
                } else {
                    kappa0 * (1.0 - rho0) * kozeny_carman_slope(affine_porosity(rho0, s))
                }
            }
            PermeabilityModel::NetworkInspired { kappa0, rho0, rho_hat, .. } => {
                let decay = (1.0 - rho0) * (-s).exp();
                if 1.0 - decay < rho_hat {
                    0.0
                } else {
                    kappa0 * decay / (rho0 - rho_hat)
                }
            }
            PermeabilityModel::QuadraticClamped { kappa0, rho0, c_s, upper_s } => {
                let rho = affine_porosity(rho0, s);
                if rho < c_s || rho > upper_s {
                    0.0
                } else {
                    2.0 * kappa0 * rho * (1.0 - rho0)
                }
            }
        }
    }

    /// Global Lipschitz constant of [`eval`](Self::eval).
    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            PermeabilityModel::Constant { .. } => 0.0,
            // the slope is increasing in rho on (0, 1), so the upper clamp is the worst case
            PermeabilityModel::KozenyCarman { kappa0, rho0, upper_s, .. } => {
                kappa0 * (1.0 - rho0) * kozeny_carman_slope(affine_porosity(rho0, upper_s))
            }
            // (1 - rho0) exp(-s) is largest where the branch opens, rho = rho_hat
            PermeabilityModel::NetworkInspired { kappa0, rho0, rho_hat, .. } => {
                kappa0 * (1.0 - rho_hat) / (rho0 - rho_hat)
            }
            PermeabilityModel::QuadraticClamped { kappa0, rho0, upper_s, .. } => {
                2.0 * kappa0 * upper_s * (1.0 - rho0)
            }
        }
    }

    /// Breakpoints in `s` where the active branch changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            PermeabilityModel::Constant { .. } => vec![],
            PermeabilityModel::KozenyCarman { c_s, upper_s, .. } => vec![c_s, upper_s],
            PermeabilityModel::NetworkInspired { rho0, rho_hat, .. } => {
                vec![-((1.0 - rho_hat) / (1.0 - rho0)).ln()]
            }
            PermeabilityModel::QuadraticClamped { rho0, c_s, upper_s, .. } => vec![
                (c_s - rho0) / (1.0 - rho0),
                (upper_s - rho0) / (1.0 - rho0),
            ],
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, PermeabilityModel::Constant { .. })
    }
}

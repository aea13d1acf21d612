//! Physical parameters, the dimensionless radial problem and the
//! asymptotic classification of the unscaled radial equation.
//!
//! The time-dependent problem separates as
//! `psi = exp(-i E t) exp(i l phi) exp(i k z) R(rho)` in units with
//! hbar = c = 1. With the oscillator `m omega^2 rho^2 / 2` and the variable
//! `xi = sqrt(m omega) rho` the radial factor obeys
//!
//! ```text
//! R'' + R'/xi - l^2/xi^2 R + alpha/xi R - xi^2 R + W R = 0,
//! alpha = 2 m Q E0 / sqrt(m omega),   W = zeta^2 / (m omega),
//! ```
//!
//! with `zeta^2 = 2 m E - k^2`. Because the Hamiltonian commutes with
//! `p_z`, the motion along z is unbounded and the full 3D states are never
//! normalizable; only the planar bound states are computed here.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub m: f64,
    pub omega: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    pub k: f64,
}

impl PhysicalParams {
    pub fn new(m: f64, omega: f64, q: f64, e0: f64, k: f64) -> Result<Self> {
        let p = PhysicalParams { m, omega, q, e0, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("m", self.m),
            ("omega", self.omega),
            ("Q", self.q),
            ("E0", self.e0),
            ("k", self.k),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        if self.m <= 0.0 {
            return Err(Error::invalid(format!("m must be positive, got {}", self.m)));
        }
        if self.omega <= 0.0 {
            return Err(Error::invalid(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    /// Q~ = 2 m Q, always derived from the stored fields.
    pub fn q_tilde(&self) -> f64 {
        2.0 * self.m * self.q
    }
}

/// The dimensionless radial problem. The spectrum depends on `l` only
/// through `|l|` and `l^2`; `alpha` is any real number.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledModel {
    pub l: f64,
    pub alpha: Float,
}

impl ScaledModel {
    pub fn new(l: f64, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be finite, got {alpha}")));
        }
        Self::with_alpha(l, Float::with_val(53, alpha))
    }

    /// Keeps `alpha` at whatever precision the caller built it with.
    pub fn with_alpha(l: f64, alpha: Float) -> Result<Self> {
        if !l.is_finite() {
            return Err(Error::invalid(format!("l must be finite, got {l}")));
        }
        if !alpha.is_finite() {
            return Err(Error::invalid("alpha must be finite"));
        }
        Ok(ScaledModel { l, alpha })
    }

    pub fn abs_l(&self) -> f64 {
        self.l.abs()
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha.to_f64()
    }
}

/// alpha = Q~ E0 / sqrt(m omega).
pub fn scale(params: &PhysicalParams, l: f64) -> Result<ScaledModel> {
    params.validate()?;
    let alpha = params.q_tilde() * params.e0 / (params.m * params.omega).sqrt();
    ScaledModel::new(l, alpha)
}

/// Energy from the dimensionless eigenvalue: (omega/2) W + k^2/(2m).
pub fn unscale_energy(w: f64, params: &PhysicalParams) -> Result<f64> {
    params.validate()?;
    if !w.is_finite() {
        return Err(Error::invalid(format!("W must be finite, got {w}")));
    }
    Ok(0.5 * params.omega * w + params.k * params.k / (2.0 * params.m))
}

/// `-alpha/xi + xi^2`, plus `l^2/xi^2` when `include_centrifugal`.
pub fn effective_potential(model: &ScaledModel, xi: f64, include_centrifugal: bool) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::invalid(format!("xi must be positive and finite, got {xi}")));
    }
    let mut v = -model.alpha_f64() / xi + xi * xi;
    if include_centrifugal {
        v += model.l * model.l / (xi * xi);
    }
    Ok(v)
}

/// Minimum of `-alpha/xi + xi^2`. Only the repulsive case alpha < 0 has
/// one, at xi = (-alpha/2)^(1/3); for alpha >= 0 the potential is
/// monotone increasing on (0, inf).
pub fn potential_minimum(alpha: f64) -> Option<(f64, f64)> {
    if alpha < 0.0 {
        let xi = (-alpha / 2.0).cbrt();
        Some((xi, -alpha / xi + xi * xi))
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AsymptoticKind {
    Scattering,
    BoundCandidate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticClass {
    pub kind: AsymptoticKind,
    /// Decay rate, only for bound candidates (zeta^2 = -tau^2).
    pub tau: Option<f64>,
}

impl AsymptoticClass {
    /// Planar decay does not make the 3D state normalizable: the factor
    /// `exp(i k z)` is not square integrable along z.
    pub const NOTE: &'static str =
        "the particle moves freely in z, so no 3D state is normalizable; only the planar factor is";
}

/// Behaviour of R at large rho for the Coulomb-only radial equation:
/// oscillatory `exp(i zeta rho)` for zeta^2 > 0, decaying `exp(-tau rho)`
/// for zeta^2 = -tau^2 < 0.
pub fn classify_asymptotics(zeta_squared: f64) -> Result<AsymptoticClass> {
    if !zeta_squared.is_finite() {
        return Err(Error::invalid("zeta^2 must be finite"));
    }
    if zeta_squared > 0.0 {
        Ok(AsymptoticClass {
            kind: AsymptoticKind::Scattering,
            tau: None,
        })
    } else if zeta_squared < 0.0 {
        Ok(AsymptoticClass {
            kind: AsymptoticKind::BoundCandidate,
            tau: Some((-zeta_squared).sqrt()),
        })
    } else {
        Err(Error::Threshold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: f64, omega: f64, q: f64, e0: f64, k: f64) -> PhysicalParams {
        PhysicalParams::new(m, omega, q, e0, k).unwrap()
    }

    #[test]
    fn scale_examples() {
        let a = scale(&params(1.0, 1.0, 0.5, 2f64.sqrt(), 0.0), 0.0).unwrap();
        assert!((a.alpha_f64() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(scale(&params(1.0, 1.0, 0.0, 3.0, 0.0), 0.0).unwrap().alpha_f64(), 0.0);
        assert_eq!(scale(&params(1.0, 1.0, 0.7, 0.0, 0.0), 0.0).unwrap().alpha_f64(), 0.0);
        assert_eq!(scale(&params(1.0, 4.0, 0.5, 2.0, 0.0), 1.0).unwrap().alpha_f64(), 1.0);
    }

    #[test]
    fn scale_is_homogeneous_in_q_e0() {
        let a = scale(&params(1.3, 2.1, 0.4, 1.7, 0.0), 0.0).unwrap().alpha_f64();
        let b = scale(&params(1.3, 2.1, 0.8, 0.85, 0.0), 0.0).unwrap().alpha_f64();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 1.0, 1.0, 0.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, f64::NAN, 1.0, 0.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, 1.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn unscale_examples() {
        assert_eq!(unscale_energy(4.0, &params(1.0, 1.0, 0.0, 0.0, 0.0)).unwrap(), 2.0);
        assert_eq!(unscale_energy(0.0, &params(1.0, 1.0, 0.0, 0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(unscale_energy(4.0, &params(1.0, 2.0, 0.0, 0.0, 2.0)).unwrap(), 6.0);
    }

    #[test]
    fn potential_examples() {
        let m = ScaledModel::new(0.0, 1.0).unwrap();
        assert_eq!(effective_potential(&m, 1.0, false).unwrap(), 0.0);
        let m = ScaledModel::new(0.0, -2f64.sqrt()).unwrap();
        assert!((effective_potential(&m, 1.0, false).unwrap() - (1.0 + 2f64.sqrt())).abs() < 1e-15);
        let m = ScaledModel::new(2.0, 1.0).unwrap();
        assert_eq!(effective_potential(&m, 1.0, true).unwrap(), 4.0);
        assert!(effective_potential(&m, 0.0, false).is_err());
        assert!(effective_potential(&m, -1.0, false).is_err());
    }

    #[test]
    fn potential_minimum_is_stationary() {
        for alpha in [-0.3, -1.0, -(2f64.sqrt()), -5.0] {
            let (xi, v) = potential_minimum(alpha).unwrap();
            let m = ScaledModel::new(0.0, alpha).unwrap();
            let h = 1e-5;
            let d = (effective_potential(&m, xi + h, false).unwrap()
                - effective_potential(&m, xi - h, false).unwrap())
                / (2.0 * h);
            assert!(d.abs() < 1e-8, "alpha={alpha} d={d}");
            let expected = 3.0 * (-alpha / 2.0).powf(2.0 / 3.0);
            assert!((v - expected).abs() < 1e-12);
        }
        assert!(potential_minimum(1.0).is_none());
        assert!(potential_minimum(0.0).is_none());
    }

    #[test]
    fn asymptotic_classes() {
        assert_eq!(classify_asymptotics(4.0).unwrap().kind, AsymptoticKind::Scattering);
        let b = classify_asymptotics(-4.0).unwrap();
        assert_eq!(b.kind, AsymptoticKind::BoundCandidate);
        assert_eq!(b.tau, Some(2.0));
        assert!(matches!(classify_asymptotics(0.0), Err(Error::Threshold)));
    }
}

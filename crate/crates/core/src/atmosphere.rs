//! Atmospheric coefficients and the single-scatter phase function.
//!
//! The phase function is a mixture of a generalized Rayleigh term and a
//! Henyey-Greenstein term with a forward-peak correction, weighted by the
//! Rayleigh and Mie shares of the total scattering coefficient. Both
//! components are normalized so that `2π ∫ P(μ) dμ = 1` over `μ ∈ [-1, 1]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit in which scattering and absorption coefficients are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientUnit {
    #[default]
    #[serde(alias = "per_m")]
    PerMeter,
    #[serde(alias = "per_km")]
    PerKilometer,
}

impl CoefficientUnit {
    fn to_per_meter(self, value: f64) -> f64 {
        match self {
            CoefficientUnit::PerMeter => value,
            CoefficientUnit::PerKilometer => value / 1000.0,
        }
    }
}

/// Scattering and absorption coefficients, always stored in m⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphereParams {
    pub k_s_ray: f64,
    pub k_s_mie: f64,
    pub k_a: f64,
}

impl AtmosphereParams {
    pub fn new(k_s_ray: f64, k_s_mie: f64, k_a: f64) -> Result<Self> {
        let params = Self {
            k_s_ray,
            k_s_mie,
            k_a,
        };
        params.validate()?;
        Ok(params)
    }

    /// Builds parameters from coefficients given in `unit`, converting to m⁻¹.
    pub fn with_unit(k_s_ray: f64, k_s_mie: f64, k_a: f64, unit: CoefficientUnit) -> Result<Self> {
        Self::new(
            unit.to_per_meter(k_s_ray),
            unit.to_per_meter(k_s_mie),
            unit.to_per_meter(k_a),
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_s_ray", self.k_s_ray),
            ("k_s_mie", self.k_s_mie),
            ("k_a", self.k_a),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidAtmosphere(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.k_s() <= 0.0 {
            return Err(Error::InvalidAtmosphere(
                "total scattering coefficient k_s must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Total scattering coefficient `k_s = k_s_ray + k_s_mie`.
    pub fn k_s(&self) -> f64 {
        self.k_s_ray + self.k_s_mie
    }

    /// Total extinction coefficient `k_e = k_s + k_a`.
    pub fn k_e(&self) -> f64 {
        self.k_s() + self.k_a
    }
}

/// Shape parameters of the phase-function mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseFunctionParams {
    /// Mie asymmetry factor, `-1 < g < 1`.
    pub g: f64,
    /// Forward-peak correction weight, `0 <= f <= 1`.
    pub f: f64,
    /// Rayleigh anisotropy parameter, `>= 0`.
    pub gamma_r: f64,
}

impl PhaseFunctionParams {
    pub fn new(g: f64, f: f64, gamma_r: f64) -> Result<Self> {
        let params = Self { g, f, gamma_r };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > -1.0 && self.g < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "asymmetry factor g must lie in (-1, 1), got {}",
                self.g
            )));
        }
        if !(0.0..=1.0).contains(&self.f) {
            return Err(Error::InvalidParameter(format!(
                "forward-peak weight f must lie in [0, 1], got {}",
                self.f
            )));
        }
        if !(self.gamma_r >= 0.0 && self.gamma_r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Rayleigh anisotropy gamma_r must be finite and >= 0, got {}",
                self.gamma_r
            )));
        }
        Ok(())
    }
}

/// A named set of atmosphere and phase parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub name: String,
    pub atmosphere: AtmosphereParams,
    pub phase: PhaseFunctionParams,
}

impl Profile {
    pub const LITERATURE_DEFAULT: &'static str = "literature-default";

    /// Solar-blind UV coefficients commonly used for NLOS channel studies.
    pub fn literature_default() -> Self {
        Self {
            name: Self::LITERATURE_DEFAULT.to_string(),
            atmosphere: AtmosphereParams {
                k_s_ray: 2.4e-4,
                k_s_mie: 2.5e-4,
                k_a: 9.0e-4,
            },
            phase: PhaseFunctionParams {
                g: 0.72,
                f: 0.5,
                gamma_r: 0.017,
            },
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            Self::LITERATURE_DEFAULT => Some(Self::literature_default()),
            _ => None,
        }
    }
}

/// Generalized Rayleigh phase function (sr⁻¹).
pub fn rayleigh_phase(mu: f64, gamma_r: f64) -> f64 {
    3.0 * (1.0 + 3.0 * gamma_r + (1.0 - gamma_r) * mu * mu) / (16.0 * PI * (1.0 + 2.0 * gamma_r))
}

/// Henyey-Greenstein phase function with forward-peak correction (sr⁻¹).
pub fn mie_phase(mu: f64, g: f64, f: f64) -> f64 {
    let g2 = g * g;
    let hg = (1.0 + g2 - 2.0 * g * mu).powf(-1.5);
    let correction = f * (3.0 * mu * mu - 1.0) / (2.0 * (1.0 + g2).powf(1.5));
    (1.0 - g2) / (4.0 * PI) * (hg + correction)
}

/// Scattering phase function `P(μ)` for the given atmosphere (sr⁻¹).
pub fn phase_function(mu: f64, atmos: &AtmosphereParams, pf: &PhaseFunctionParams) -> Result<f64> {
    if !(mu.abs() <= 1.0) {
        return Err(Error::Domain(mu));
    }
    let k_s = atmos.k_s();
    if !(k_s > 0.0) {
        return Err(Error::InvalidAtmosphere(
            "total scattering coefficient k_s must be positive".into(),
        ));
    }
    Ok(mixture(mu, atmos, pf, k_s))
}

#[inline]
pub(crate) fn mixture(
    mu: f64,
    atmos: &AtmosphereParams,
    pf: &PhaseFunctionParams,
    k_s: f64,
) -> f64 {
    let ray = if atmos.k_s_ray > 0.0 {
        atmos.k_s_ray / k_s * rayleigh_phase(mu, pf.gamma_r)
    } else {
        0.0
    };
    let mie = if atmos.k_s_mie > 0.0 {
        atmos.k_s_mie / k_s * mie_phase(mu, pf.g, pf.f)
    } else {
        0.0
    };
    ray + mie
}

/// Upper bound on `P(μ)` over `μ ∈ [-1, 1]`.
pub(crate) fn phase_function_bound(atmos: &AtmosphereParams, pf: &PhaseFunctionParams) -> f64 {
    let k_s = atmos.k_s();
    // each Rayleigh term is a quadratic in μ, so its max is at 0 or ±1
    let ray_max = rayleigh_phase(0.0, pf.gamma_r).max(rayleigh_phase(1.0, pf.gamma_r));
    let g2 = pf.g * pf.g;
    let hg_max = (1.0 - pf.g.abs()).powi(-3);
    let corr_max = pf.f / (1.0 + g2).powf(1.5);
    let mie_max = (1.0 - g2) / (4.0 * PI) * (hg_max + corr_max);
    (atmos.k_s_ray * ray_max + atmos.k_s_mie * mie_max) / k_s
}

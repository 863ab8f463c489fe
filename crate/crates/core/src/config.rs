//! Run configuration. Loaded from one TOML file; every field has a default
//! so a partial file (or none) is fine.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub forward: ForwardConfig,
    pub contour: ContourConfig,
    pub spectrum: SpectrumConfig,
    pub inverse: InverseConfig,
    pub cauchy: CauchyConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForwardConfig {
    /// Local error bound per integrator step.
    pub tol_ode: f64,
    /// Smallest step the integrator may take before giving up.
    pub min_step: f64,
    /// Grid size used when a command synthesises σ.
    pub n_x: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourConfig {
    /// Trapezoid nodes on every circle.
    pub m_q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub n_max: usize,
    pub cluster_tol: f64,
    pub newton_max_iter: usize,
    pub newton_tol: f64,
    pub weight_radius_cap: f64,
    pub cross_check_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseConfig {
    /// Reciprocal condition floor for I + Q.
    pub cond_floor: f64,
    pub verify_tol: f64,
    /// Residual tail ℓ₂ difference tolerated beyond the enlarged head.
    pub trunc_tol: f64,
    /// Largest √radius of Γ_N′ the truncation may grow to.
    pub max_contour_rho: f64,
    pub fit_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CauchyConfig {
    pub k_f: usize,
    pub fit_tol: f64,
    /// Uniform samples of G and J written to files.
    pub n_samples: usize,
    /// Held-out Δ₀/Δ₁ agreement required of a re-extracted reconstruction.
    pub verify_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// 0 uses every available core.
    pub workers: usize,
}

impl Default for ForwardConfig {
    fn default() -> Self {
        Self { tol_ode: 1e-11, min_step: 1e-7, n_x: 512 }
    }
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self { m_q: 128 }
    }
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            n_max: 20,
            cluster_tol: 1e-7,
            newton_max_iter: 50,
            newton_tol: 1e-12,
            weight_radius_cap: 0.5,
            cross_check_tol: 1e-7,
        }
    }
}

impl Default for InverseConfig {
    fn default() -> Self {
        Self { cond_floor: 1e-10, verify_tol: 1e-5, trunc_tol: 1e-9, max_contour_rho: 4.0, fit_tol: 1e-7 }
    }
}

impl Default for CauchyConfig {
    fn default() -> Self {
        Self { k_f: 64, fit_tol: 1e-6, n_samples: 257, verify_tol: 1e-3 }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { workers: 0 }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self {
            forward: ForwardConfig::default(),
            contour: ContourConfig::default(),
            spectrum: SpectrumConfig::default(),
            inverse: InverseConfig::default(),
            cauchy: CauchyConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl Config {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg = Self::parse_unchecked(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse without range checks, for callers that apply overrides first.
    pub fn parse_unchecked(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_toml_str(&s)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serialisable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("config: {m}")));
        if !(self.forward.tol_ode > 0.0) || !(self.forward.min_step > 0.0) {
            return bad("forward tolerances must be positive");
        }
        if self.forward.n_x < crate::model::MIN_GRID_POINTS {
            return bad("forward.n_x too small");
        }
        if self.contour.m_q < 16 || self.contour.m_q % 2 != 0 {
            return bad("contour.m_q must be even and at least 16");
        }
        if self.spectrum.n_max == 0 {
            return bad("spectrum.n_max must be at least 1");
        }
        if !(self.spectrum.cluster_tol > 0.0) || !(self.spectrum.weight_radius_cap > 0.0) {
            return bad("spectrum tolerances must be positive");
        }
        if !(self.inverse.cond_floor > 0.0) || !(self.inverse.verify_tol > 0.0) || !(self.inverse.trunc_tol > 0.0) {
            return bad("inverse tolerances must be positive");
        }
        if self.cauchy.k_f == 0 || self.cauchy.n_samples < 2 {
            return bad("cauchy.k_f and cauchy.n_samples must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_file_lists_the_defaults() {
        let c = Config::from_toml_str(include_str!("../../../sturm.example.toml")).unwrap();
        assert_eq!(c, Config::default());
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = Config::from_toml_str("[contour]\nm_q = 64\n").unwrap();
        assert_eq!(c.contour.m_q, 64);
        assert_eq!(c.forward.tol_ode, 1e-11);
    }

    #[test]
    fn round_trip_and_rejects() {
        let c = Config::default();
        assert_eq!(Config::from_toml_str(&c.to_toml_string()).unwrap(), c);
        assert!(Config::from_toml_str("[contour]\nm_q = 15\n").is_err());
        assert!(Config::from_toml_str("[nope]\n").is_err());
    }
}

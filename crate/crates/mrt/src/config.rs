//! Run configuration: TOML in, validated core types out.
//!
//! Interface units are the ones people write down for these devices: pH, fF,
//! μA, mK, mΦ₀ and μs. Every numeric field has a default (the worked example
//! device) and unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use mrt_core::noise::{HighFreqFluxNoise, NoiseParams};
use mrt_core::rates::RateOptions;
use mrt_core::squid::{PhaseGrid, SquidParams};
use mrt_core::units::{from_millikelvin, mphi0_to_weber, FLUX_QUANTUM};

/// λ_Φ of the worked example, mK.
pub const DEFAULT_LAMBDA_MK: f64 = 9.6;

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub squid: SquidSection,
    pub noise: NoiseSection,
    pub grid: GridSection,
    pub sweep: SweepSection,
    pub options: OptionsSection,
    pub dynamics: DynamicsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SquidSection {
    pub inductance_ph: f64,
    pub cjj_inductance_ph: f64,
    pub capacitance_ff: f64,
    pub critical_current_ua: f64,
    /// Φˣ_CJJ in units of Φ₀.
    pub cjj_bias_phi0: f64,
    /// Φˣ used by levels, spectra and dynamics.
    pub flux_bias_mphi0: f64,
}

impl Default for SquidSection {
    fn default() -> Self {
        Self {
            inductance_ph: 250.0,
            cjj_inductance_ph: 14.0,
            capacitance_ff: 110.0,
            critical_current_ua: 2.3,
            cjj_bias_phi0: 0.24,
            flux_bias_mphi0: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub temperature_mk: f64,
    pub mrt_width_mk: f64,
    /// λ_Φ in mK; give this or `gamma_phi`, not both. 9.6 when neither is set.
    pub lambda_mk: Option<f64>,
    /// γ_Φ^{1+α} in H·GHz^α.
    pub gamma_phi: Option<f64>,
    pub alpha: f64,
    pub charge_loss_tangent: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            temperature_mk: 10.0,
            mrt_width_mk: 28.0,
            lambda_mk: None,
            gamma_phi: None,
            alpha: 0.0,
            charge_loss_tangent: 5e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub phase_points: usize,
    /// The phase grid spans ±(this)·π.
    pub phase_half_span_pi: f64,
    /// Spectrum lattice spacing for `spectra`; derived from the widths if unset.
    pub frequency_spacing_ghz: Option<f64>,
    /// Spectrum lattice half-span for `spectra`.
    pub frequency_half_span_ghz: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { phase_points: 256, phase_half_span_pi: 1.5, frequency_spacing_ghz: None, frequency_half_span_ghz: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub start_mphi0: f64,
    pub stop_mphi0: f64,
    pub step_mphi0: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { start_mphi0: -0.2, stop_mphi0: 5.0, step_mphi0: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptionsSection {
    /// Drop the interwell charge-noise term.
    pub flux_only: bool,
    /// Level shifts in the master-equation rates (never in the escape rate).
    pub shifts: bool,
    /// Levels per well; right-well channels 1, 3, …, 2k − 1.
    pub channels: usize,
    /// Halve the frequency lattice until rates settle to 0.5%.
    pub refine: bool,
}

impl Default for OptionsSection {
    fn default() -> Self {
        Self { flux_only: false, shifts: false, channels: 3, refine: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsSection {
    pub t_max_us: f64,
    /// Log-spaced output rows after the three initial ones.
    pub samples: usize,
    /// Label of the initially occupied state.
    pub start_label: usize,
    /// Give the left ground state zero linewidth, as the escape rate does.
    /// Off, every level is broadened and the rates are the full relaxation
    /// matrix.
    pub sharp_ground: bool,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self { t_max_us: 1e5, samples: 200, start_label: 0, sharp_ground: true }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    ensure!(v > 0.0 && v.is_finite(), "{name} must be positive and finite, got {v}");
    Ok(())
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    ensure!(v >= 0.0 && v.is_finite(), "{name} must be non-negative and finite, got {v}");
    Ok(())
}

impl RunConfig {
    /// Parses TOML text and validates it.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a file, or the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Self::from_toml(&text).with_context(|| format!("in {}", p.display()))
            }
            None => {
                let cfg = Self::default();
                cfg.validate()?;
                Ok(cfg)
            }
        }
    }

    /// Domain checks beyond what the types enforce.
    pub fn validate(&self) -> Result<()> {
        let s = &self.squid;
        positive("squid.inductance_ph", s.inductance_ph)?;
        non_negative("squid.cjj_inductance_ph", s.cjj_inductance_ph)?;
        positive("squid.capacitance_ff", s.capacitance_ff)?;
        positive("squid.critical_current_ua", s.critical_current_ua)?;
        ensure!(s.cjj_bias_phi0.is_finite(), "squid.cjj_bias_phi0 must be finite");
        ensure!(s.flux_bias_mphi0.is_finite(), "squid.flux_bias_mphi0 must be finite");
        let n = &self.noise;
        positive("noise.temperature_mk", n.temperature_mk)?;
        positive("noise.mrt_width_mk", n.mrt_width_mk)?;
        non_negative("noise.alpha", n.alpha)?;
        non_negative("noise.charge_loss_tangent", n.charge_loss_tangent)?;
        match (n.lambda_mk, n.gamma_phi) {
            (Some(l), None) => non_negative("noise.lambda_mk", l)?,
            (None, Some(g)) => non_negative("noise.gamma_phi", g)?,
            (Some(_), Some(_)) => bail!("give noise.lambda_mk or noise.gamma_phi, not both"),
            (None, None) => {}
        }
        let g = &self.grid;
        ensure!(g.phase_points >= 128, "grid.phase_points must be at least 128, got {}", g.phase_points);
        positive("grid.phase_half_span_pi", g.phase_half_span_pi)?;
        if let Some(h) = g.frequency_spacing_ghz {
            positive("grid.frequency_spacing_ghz", h)?;
        }
        if let Some(h) = g.frequency_half_span_ghz {
            positive("grid.frequency_half_span_ghz", h)?;
        }
        let w = &self.sweep;
        ensure!(w.start_mphi0.is_finite() && w.stop_mphi0.is_finite(), "sweep bounds must be finite");
        positive("sweep.step_mphi0", w.step_mphi0)?;
        ensure!(self.options.channels >= 1, "options.channels must be at least 1");
        non_negative("dynamics.t_max_us", self.dynamics.t_max_us)?;
        Ok(())
    }

    pub fn squid_params(&self) -> SquidParams {
        let s = &self.squid;
        SquidParams {
            inductance: s.inductance_ph * 1e-12,
            cjj_inductance: s.cjj_inductance_ph * 1e-12,
            capacitance: s.capacitance_ff * 1e-15,
            critical_current: s.critical_current_ua * 1e-6,
            flux_bias: mphi0_to_weber(s.flux_bias_mphi0),
            cjj_bias: s.cjj_bias_phi0 * FLUX_QUANTUM,
        }
    }

    pub fn phase_grid(&self) -> PhaseGrid {
        let h = self.grid.phase_half_span_pi * std::f64::consts::PI;
        PhaseGrid { min_phase: -h, max_phase: h, n_points: self.grid.phase_points }
    }

    pub fn noise_params(&self) -> Result<NoiseParams> {
        let n = &self.noise;
        let t = from_millikelvin(n.temperature_mk);
        let lambda = match (n.lambda_mk, n.gamma_phi) {
            (None, Some(g)) => HighFreqFluxNoise::from_gamma_phi_power(g, n.alpha, t, self.squid.inductance_ph * 1e-12)?.lambda,
            (l, _) => from_millikelvin(l.unwrap_or(DEFAULT_LAMBDA_MK)),
        };
        Ok(NoiseParams::new(t, from_millikelvin(n.mrt_width_mk), lambda, n.alpha, n.charge_loss_tangent)?)
    }

    pub fn rate_options(&self) -> RateOptions {
        let o = &self.options;
        RateOptions {
            flux_only: o.flux_only,
            shifts: o.shifts,
            channels: o.channels,
            refine: o.refine,
            ..RateOptions::default()
        }
    }

    /// Sweep biases in mΦ₀: start + k·step up to stop; empty when stop < start.
    pub fn biases_mphi0(&self) -> Vec<f64> {
        let w = &self.sweep;
        if w.stop_mphi0 < w.start_mphi0 {
            return Vec::new();
        }
        // the small slack keeps an end point that is a whole number of steps away
        let n = ((w.stop_mphi0 - w.start_mphi0) / w.step_mphi0 + 1e-9).floor() as usize + 1;
        (0..n).map(|k| w.start_mphi0 + k as f64 * w.step_mphi0).collect()
    }

    /// Canonical TOML of the resolved configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of [`Self::canonical`], hex.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut s = String::with_capacity(64);
        for b in digest {
            let _ = write!(s, "{b:02x}");
        }
        s
    }
}

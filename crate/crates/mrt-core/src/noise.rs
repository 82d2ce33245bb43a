//! Noise spectral densities and envelopes.
//!
//! Three dissipative environments act on the qubit:
//!
//! * slow flux noise, folded into a Gaussian envelope of width `W` centred
//!   at the reorganization energy `ε = W²/2T`;
//! * fast flux noise with a (sub-)Ohmic spectrum `S ∝ ω/|ω|^α`, folded into
//!   a Lorentzian-like envelope of width `γ̃`;
//! * charge noise with loss tangent `tan δ_C(ω) = tan δ_C · tanh(ω/T)`.
//!
//! All energies (and angular frequencies) are internal units, h·GHz. With
//! ħ = 1 a flux spectrum has the dimension of an inductance and a charge
//! spectrum that of a capacitance, so the SI forms below return henry and
//! farad respectively.
//!
//! The envelopes assume a strictly positive width. A zero width is a delta
//! function; the convolution layer handles that branch analytically.

use alloc::format;
use core::f64::consts::PI;

use crate::math::{exp, expm1, pow, sin, sqrt, tanh};
use crate::units::{angular_per_second, ENERGY_UNIT, FLUX_QUANTUM};
use crate::{Error, Result};

const SERIES_CUTOFF: f64 = 1e-6;

/// βω / (1 − e^{−βω}), equal to 1 at ω = 0.
pub fn thermal_factor(omega: f64, temperature: f64) -> f64 {
    let x = omega / temperature;
    if x.abs() < SERIES_CUTOFF {
        1.0 + x / 2.0 + x * x / 12.0
    } else {
        x / -expm1(-x)
    }
}

/// tanh(ω/T) / (1 − e^{−ω/T}), equal to 1 at ω = 0.
pub fn charge_thermal_factor(omega: f64, temperature: f64) -> f64 {
    let x = omega / temperature;
    if x.abs() < SERIES_CUTOFF {
        1.0 + x / 2.0 - x * x / 4.0
    } else {
        tanh(x) / -expm1(-x)
    }
}

/// Normalization factor of the high-frequency envelope.
///
/// Written as (2+α)·sin(π/(2+α)), which equals
/// π(2+α)/[Γ(1/(2+α))·Γ((1+α)/(2+α))] by the reflection formula and gives
/// κ(0) = 2 without rounding.
pub fn kappa(alpha: f64) -> f64 {
    let s = 2.0 + alpha;
    s * sin(PI / s)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be non-negative and finite, got {v}")))
    }
}

/// Slow flux noise: MRT width and temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowFreqFluxNoise {
    /// W, energy.
    pub mrt_width: f64,
    /// T, energy.
    pub temperature: f64,
}

impl LowFreqFluxNoise {
    /// Checked constructor.
    pub fn new(mrt_width: f64, temperature: f64) -> Result<Self> {
        positive("MRT width", mrt_width)?;
        positive("temperature", temperature)?;
        Ok(Self { mrt_width, temperature })
    }

    /// ε_L = W²/2T.
    pub fn reorganization(&self) -> f64 {
        self.mrt_width * self.mrt_width / (2.0 * self.temperature)
    }
}

/// Fast (sub-)Ohmic flux noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighFreqFluxNoise {
    /// λ_Φ, energy.
    pub lambda: f64,
    /// Sub-Ohmic exponent α ≥ 0.
    pub alpha: f64,
    /// T, energy.
    pub temperature: f64,
}

impl HighFreqFluxNoise {
    /// Checked constructor.
    pub fn new(lambda: f64, alpha: f64, temperature: f64) -> Result<Self> {
        non_negative("lambda", lambda)?;
        non_negative("alpha", alpha)?;
        positive("temperature", temperature)?;
        Ok(Self { lambda, alpha, temperature })
    }

    /// κ(α).
    pub fn kappa(&self) -> f64 {
        kappa(self.alpha)
    }

    /// γ̃ for the dimensionless coupling c = L|I_m − I_n|/Φ₀.
    pub fn linewidth(&self, coupling: f64) -> f64 {
        if coupling == 0.0 {
            return 0.0;
        }
        self.lambda * pow(coupling, 2.0 / (1.0 + self.alpha))
    }

    /// γ̃/T, which should stay well below one.
    pub fn weak_coupling_ratio(&self, coupling: f64) -> f64 {
        self.linewidth(coupling) / self.temperature
    }

    /// Builds the noise from γ_Φ^{1+α} (henry·energy^α) and the loop inductance.
    pub fn from_gamma_phi_power(gamma_pow: f64, alpha: f64, temperature: f64, inductance: f64) -> Result<Self> {
        positive("inductance", inductance)?;
        non_negative("gamma_phi", gamma_pow)?;
        let s = FLUX_QUANTUM / inductance;
        let lambda = pow(gamma_pow * s * s / ENERGY_UNIT, 1.0 / (1.0 + alpha));
        Self::new(lambda, alpha, temperature)
    }

    /// γ_Φ^{1+α} in henry·energy^α for loop inductance `inductance`.
    pub fn gamma_phi_power(&self, inductance: f64) -> f64 {
        let r = inductance / FLUX_QUANTUM;
        pow(self.lambda, 1.0 + self.alpha) * r * r * ENERGY_UNIT
    }

    /// γ_Φ itself, henry^{1/(1+α)}·energy^{α/(1+α)}.
    pub fn gamma_phi(&self, inductance: f64) -> f64 {
        pow(self.gamma_phi_power(inductance), 1.0 / (1.0 + self.alpha))
    }
}

/// Charge noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeNoise {
    /// tan δ_C.
    pub loss_tangent: f64,
    /// C, farad.
    pub capacitance: f64,
    /// T, energy.
    pub temperature: f64,
}

impl ChargeNoise {
    /// Checked constructor.
    pub fn new(loss_tangent: f64, capacitance: f64, temperature: f64) -> Result<Self> {
        non_negative("charge loss tangent", loss_tangent)?;
        positive("capacitance", capacitance)?;
        positive("temperature", temperature)?;
        Ok(Self { loss_tangent, capacitance, temperature })
    }

    /// S_q(ω) = 2C tan δ_C tanh(ω/T)/(1 − e^{−ω/T}), farad (ħ = 1).
    pub fn spectrum(&self, omega: f64) -> f64 {
        charge_spectrum(omega, self)
    }
}

/// All dissipative characteristics of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Slow flux noise.
    pub low: LowFreqFluxNoise,
    /// Fast flux noise.
    pub high: HighFreqFluxNoise,
    /// tan δ_C.
    pub charge_loss_tangent: f64,
}

impl NoiseParams {
    /// Everything in internal energy units.
    pub fn new(temperature: f64, mrt_width: f64, lambda: f64, alpha: f64, charge_loss_tangent: f64) -> Result<Self> {
        non_negative("charge loss tangent", charge_loss_tangent)?;
        Ok(Self {
            low: LowFreqFluxNoise::new(mrt_width, temperature)?,
            high: HighFreqFluxNoise::new(lambda, alpha, temperature)?,
            charge_loss_tangent,
        })
    }

    /// Energies given in millikelvin.
    pub fn from_millikelvin(t_mk: f64, w_mk: f64, lambda_mk: f64, alpha: f64, tan_c: f64) -> Result<Self> {
        use crate::units::from_millikelvin as mk;
        Self::new(mk(t_mk), mk(w_mk), mk(lambda_mk), alpha, tan_c)
    }

    /// T.
    pub fn temperature(&self) -> f64 {
        self.low.temperature
    }

    /// Charge noise for capacitance `c`.
    pub fn charge(&self, capacitance: f64) -> Result<ChargeNoise> {
        ChargeNoise::new(self.charge_loss_tangent, capacitance, self.temperature())
    }

    /// Same noise with another charge loss tangent.
    pub fn with_charge_loss_tangent(&self, tan_c: f64) -> Self {
        Self { charge_loss_tangent: tan_c, ..*self }
    }

    /// Pair parameters for coupling c = L|I_m − I_n|/Φ₀.
    pub fn pair(&self, coupling: f64) -> PairNoiseParams {
        pair_params_reduced(&self.low, &self.high, coupling)
    }
}

/// Per-pair dissipative parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairNoiseParams {
    /// ε_mn.
    pub reorganization: f64,
    /// W_mn.
    pub width: f64,
    /// γ̃_mn.
    pub linewidth: f64,
    /// c = L|I_m − I_n|/Φ₀.
    pub coupling: f64,
    /// T.
    pub temperature: f64,
    /// α.
    pub alpha: f64,
}

/// Pair parameters from the two currents (A) and the loop inductance (H).
pub fn pair_params(lf: &LowFreqFluxNoise, hf: &HighFreqFluxNoise, i_m: f64, i_n: f64, inductance: f64) -> PairNoiseParams {
    pair_params_reduced(lf, hf, inductance * (i_m - i_n).abs() / FLUX_QUANTUM)
}

/// Pair parameters from the dimensionless coupling c.
pub fn pair_params_reduced(lf: &LowFreqFluxNoise, hf: &HighFreqFluxNoise, coupling: f64) -> PairNoiseParams {
    let width = lf.mrt_width * coupling;
    PairNoiseParams {
        reorganization: width * width / (2.0 * lf.temperature),
        width,
        linewidth: hf.linewidth(coupling),
        coupling,
        temperature: lf.temperature,
        alpha: hf.alpha,
    }
}

/// G^L(ω) = √(2π/W²)·exp(−(ω−ε)²/2W²). Requires W > 0.
pub fn gaussian_envelope(omega: f64, p: &PairNoiseParams) -> f64 {
    debug_assert!(p.width > 0.0);
    let x = (omega - p.reorganization) / p.width;
    sqrt(2.0 * PI) / p.width * exp(-0.5 * x * x)
}

/// G^H(ω) = (κ/γ̃)·th(ω)/(1 + (|ω|/γ̃)^{2+α}). Requires γ̃ > 0.
pub fn hf_envelope(omega: f64, p: &PairNoiseParams) -> f64 {
    debug_assert!(p.linewidth > 0.0);
    let g = p.linewidth;
    let r = omega.abs() / g;
    let shape = if p.alpha == 0.0 { r * r } else { pow(r, 2.0 + p.alpha) };
    kappa(p.alpha) / g * thermal_factor(omega, p.temperature) / (1.0 + shape)
}

/// Ohmic envelope written as 2·th(ω)·γ̃/(ω² + γ̃²).
pub fn ohmic_envelope(omega: f64, linewidth: f64, temperature: f64) -> f64 {
    2.0 * thermal_factor(omega, temperature) * linewidth / (omega * omega + linewidth * linewidth)
}

/// (I_m − I_n)²·S_Φ^H(ω) for coupling c, energy: κ λ^{1+α} c² |ω|^{−α} th(ω).
///
/// At α > 0 and ω = 0 the |ω|^{−α} factor diverges; this is returned as
/// infinity and is meant for diagnostics only, rates use the envelope.
pub fn pair_flux_spectrum(omega: f64, hf: &HighFreqFluxNoise, coupling: f64) -> f64 {
    let a = hf.alpha;
    let lam = if a == 0.0 { hf.lambda } else { pow(hf.lambda, 1.0 + a) };
    let freq = if a == 0.0 { 1.0 } else { pow(omega.abs(), -a) };
    kappa(a) * lam * coupling * coupling * freq * thermal_factor(omega, hf.temperature)
}

/// S_Φ^H(ω) = κ·γ_Φ^{1+α}/|ω|^α·th(ω) in henry for loop inductance `inductance`.
pub fn flux_hf_spectrum(omega: f64, hf: &HighFreqFluxNoise, inductance: f64) -> f64 {
    FluxConversions::new(hf, inductance).spectrum(omega)
}

/// S_q(ω) in farad.
pub fn charge_spectrum(omega: f64, cn: &ChargeNoise) -> f64 {
    2.0 * cn.capacitance * cn.loss_tangent * charge_thermal_factor(omega, cn.temperature)
}

/// |q/C|²·S_q(ω) in energy units for q = 2eN: 16 E_C |N|² tan δ_C · f(ω).
pub fn charge_energy_spectrum(omega: f64, charge_number: f64, charging_energy: f64, loss_tangent: f64, temperature: f64) -> f64 {
    16.0 * charging_energy * charge_number * charge_number * loss_tangent * charge_thermal_factor(omega, temperature)
}

/// Equivalent descriptions of fast flux noise for a loop of inductance L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxConversions {
    /// γ_Φ^{1+α}, henry·energy^α.
    pub gamma_pow: f64,
    /// α.
    pub alpha: f64,
    /// κ(α).
    pub kappa: f64,
    /// T.
    pub temperature: f64,
    /// L, henry.
    pub inductance: f64,
}

impl FluxConversions {
    /// From the noise parameters and L.
    pub fn new(hf: &HighFreqFluxNoise, inductance: f64) -> Self {
        Self {
            gamma_pow: hf.gamma_phi_power(inductance),
            alpha: hf.alpha,
            kappa: hf.kappa(),
            temperature: hf.temperature,
            inductance,
        }
    }

    /// L_Φ(ω) = γ_Φ(γ_Φ/|ω|)^α, henry.
    pub fn l_phi(&self, omega: f64) -> f64 {
        if self.alpha == 0.0 {
            self.gamma_pow
        } else {
            self.gamma_pow / pow(omega.abs(), self.alpha)
        }
    }

    /// tan δ_L(ω) = κ ω L_Φ(ω)/(2LT).
    pub fn loss_tangent(&self, omega: f64) -> f64 {
        self.kappa * omega / (2.0 * self.inductance * self.temperature) * self.l_phi(omega)
    }

    /// 1/R_s(ω) = tan δ_L(ω)/(ωL), siemens; equals κL_Φ/(2L²T) with T in rad/s.
    pub fn shunt_conductance(&self, omega: f64) -> f64 {
        self.kappa * self.l_phi(omega) / (2.0 * self.inductance * self.inductance * angular_per_second(self.temperature))
    }

    /// R_s(ω), ohm.
    pub fn shunt_resistance(&self, omega: f64) -> f64 {
        1.0 / self.shunt_conductance(omega)
    }

    /// S_Φ^H from κ γ_Φ^{1+α} |ω|^{−α} th(ω).
    pub fn spectrum(&self, omega: f64) -> f64 {
        let freq = if self.alpha == 0.0 { 1.0 } else { pow(omega.abs(), -self.alpha) };
        self.kappa * self.gamma_pow * freq * thermal_factor(omega, self.temperature)
    }

    /// S_Φ^H from 2L tan δ_L/(1 − e^{−ω/T}).
    pub fn spectrum_from_loss_tangent(&self, omega: f64) -> f64 {
        2.0 * self.inductance * self.loss_tangent(omega) / -expm1(-omega / self.temperature)
    }

    /// S_Φ^H from κ L_Φ th(ω).
    pub fn spectrum_from_l_phi(&self, omega: f64) -> f64 {
        self.kappa * self.l_phi(omega) * thermal_factor(omega, self.temperature)
    }

    /// S_Φ^H from 2L²/R_s · ω/(1 − e^{−ω/T}), ω in rad/s.
    pub fn spectrum_from_resistance(&self, omega: f64) -> f64 {
        2.0 * self.inductance * self.inductance * self.shunt_conductance(omega) * angular_per_second(omega)
            / -expm1(-omega / self.temperature)
    }

    /// Ohmic viscosity η_Φ with S_Φ^H(0) = η_Φ T (α = 0 only), henry per energy.
    pub fn ohmic_eta(&self) -> f64 {
        self.kappa * self.gamma_pow / self.temperature
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::tgamma;
    use proptest::prelude::*;

    const T: f64 = 0.2;

    fn lf() -> LowFreqFluxNoise {
        LowFreqFluxNoise::new(0.58, T).unwrap()
    }

    fn hf(alpha: f64) -> HighFreqFluxNoise {
        HighFreqFluxNoise::new(0.2, alpha, T).unwrap()
    }

    fn kappa_gamma(alpha: f64) -> f64 {
        let s = 2.0 + alpha;
        PI * s / (tgamma(1.0 / s) * tgamma((1.0 + alpha) / s))
    }

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for k in 1..n {
            s += f(a + k as f64 * h);
        }
        s * h
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(0.0), 2.0);
        assert!((kappa(2.0) - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        for a in [0.0, 0.3, 0.5, 1.0, 2.0, 3.0] {
            assert!((kappa(a) - kappa_gamma(a)).abs() < 1e-12, "α={a}");
        }
    }

    #[test]
    fn zero_coupling_gives_zero_widths() {
        let p = pair_params(&lf(), &hf(0.0), 1e-6, 1e-6, 250e-12);
        assert_eq!((p.reorganization, p.width, p.linewidth), (0.0, 0.0, 0.0));
        let p = pair_params_reduced(&lf(), &hf(0.0), 1.0);
        assert_eq!(p.linewidth, 0.2);
    }

    #[test]
    fn gaussian_normalization_and_symmetry() {
        let p = lf_pair(0.37);
        assert_eq!(gaussian_envelope(p.reorganization, &p), (2.0 * PI).sqrt() / p.width);
        let (a, b) = (p.reorganization - 8.0 * p.width, p.reorganization + 8.0 * p.width);
        let n = trapezoid(|w| gaussian_envelope(w, &p), a, b, 400) / (2.0 * PI);
        assert!((n - 1.0).abs() < 1e-8, "{n}");
        for x in [0.01, 0.3, 1.0] {
            let (u, v) = (gaussian_envelope(p.reorganization + x, &p), gaussian_envelope(p.reorganization - x, &p));
            assert!((u - v).abs() <= 1e-15 * u);
        }
    }

    fn lf_pair(c: f64) -> PairNoiseParams {
        pair_params_reduced(&lf(), &hf(0.0), c)
    }

    #[test]
    fn hf_normalization_weak_coupling() {
        // γ̃/T = 1e-3; the window ±T holds the Lorentzian core
        for alpha in [0.0, 0.5, 1.0] {
            let h = HighFreqFluxNoise::new(1e-3 * T, alpha, T).unwrap();
            let p = pair_params_reduced(&lf(), &h, 1.0);
            let g = p.linewidth;
            let f = |w: f64| hf_envelope(w, &p);
            let core = trapezoid(f, -50.0 * g, 50.0 * g, 20_000);
            let tails = log_tail(f, 50.0 * g, T) + log_tail(|w| f(-w), 50.0 * g, T);
            let n = (core + tails) / (2.0 * PI);
            assert!((n - 1.0).abs() < 1e-3, "α={alpha}: {n}");
        }
    }

    fn log_tail(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        trapezoid(|u| f(exp(u)) * exp(u), a.ln(), b.ln(), 4000)
    }

    #[test]
    fn hf_envelope_limits() {
        let p = pair_params_reduced(&lf(), &hf(0.0), 0.4);
        assert_eq!(hf_envelope(0.0, &p), 2.0 / p.linewidth);
        for w in [-1.0, -0.1, 0.0, 1e-8, 0.03, 0.5, 4.0] {
            let (a, b) = (hf_envelope(w, &p), ohmic_envelope(w, p.linewidth, T));
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs(), "{w}");
        }
        // far above γ̃ and T the envelope follows (ΔI)²S/ω²
        for alpha in [0.0, 0.5, 1.0] {
            let h = hf(alpha);
            let c = 0.02;
            let p = pair_params_reduced(&lf(), &h, c);
            let w = 50.0 * p.linewidth.max(T);
            let lhs = hf_envelope(w, &p);
            let rhs = pair_flux_spectrum(w, &h, c) / (w * w);
            assert!(((lhs - rhs) / rhs).abs() < 1e-3, "α={alpha}");
            let l = 250e-12;
            let di = c * FLUX_QUANTUM / l;
            let si = di * di * flux_hf_spectrum(w, &h, l) / ENERGY_UNIT / (w * w);
            assert!(((si - rhs) / rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn flux_spectrum_ohmic_forms() {
        let c = FluxConversions::new(&hf(0.0), 250e-12);
        assert!((c.spectrum(0.0) - c.ohmic_eta() * T).abs() < 1e-12 * c.spectrum(0.0));
        let w = 400.0 * T;
        assert!(((c.spectrum(w) - c.ohmic_eta() * w) / c.spectrum(w)).abs() < 1e-12);
        assert_eq!(c.l_phi(0.1), c.l_phi(3.0));
        assert!((c.shunt_resistance(0.1) - c.shunt_resistance(3.0)).abs() < 1e-9 * c.shunt_resistance(0.1));
    }

    #[test]
    fn conversion_routes_agree() {
        for alpha in [0.0, 0.5, 1.0, 2.5] {
            let h = hf(alpha);
            let c = FluxConversions::new(&h, 250e-12);
            for w in [-3.0, -0.2, -1e-3, 2e-3, 0.05, 0.7, 9.0] {
                let s = c.spectrum(w);
                for r in [c.spectrum_from_loss_tangent(w), c.spectrum_from_l_phi(w), c.spectrum_from_resistance(w)] {
                    assert!(((r - s) / s).abs() < 1e-12, "α={alpha} ω={w}");
                }
                let g = 1.0 / c.shunt_resistance(w);
                let g2 = c.kappa / (2.0 * c.inductance * angular_per_second(T)) * c.l_phi(w) / c.inductance;
                assert!(((g - g2) / g).abs() < 1e-12);
                let g3 = c.loss_tangent(w) / (angular_per_second(w) * c.inductance);
                assert!(((g - g3) / g).abs() < 1e-12);
            }
            let back = HighFreqFluxNoise::from_gamma_phi_power(c.gamma_pow, alpha, T, 250e-12).unwrap();
            assert!(((back.lambda - h.lambda) / h.lambda).abs() < 1e-12);
        }
    }

    #[test]
    fn charge_spectrum_limits() {
        let cn = ChargeNoise::new(5e-3, 110e-15, T).unwrap();
        assert_eq!(charge_spectrum(0.0, &cn), 2.0 * 110e-15 * 5e-3);
        let hi = charge_spectrum(60.0 * T, &cn);
        assert!((hi / (2.0 * 110e-15 * 5e-3) - 1.0).abs() < 1e-12);
        assert!(ChargeNoise::new(-1.0, 1e-15, T).is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(LowFreqFluxNoise::new(-0.1, T).is_err());
        assert!(LowFreqFluxNoise::new(0.1, 0.0).is_err());
        assert!(HighFreqFluxNoise::new(0.1, -0.5, T).is_err());
        assert!(NoiseParams::from_millikelvin(10.0, -28.0, 9.6, 0.0, 5e-3).is_err());
    }

    #[test]
    fn series_branch_matches_closed_form() {
        for x in [-1.01e-6, -0.99e-6, 0.99e-6, 1.01e-6] {
            let th = x / -expm1(-x);
            assert!((thermal_factor(x * T, T) - th).abs() < 1e-15);
            let ch = tanh(x) / -expm1(-x);
            assert!((charge_thermal_factor(x * T, T) - ch).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn fdt_holds(w in 1e-3f64..5.0, t in 1e-3f64..5.0, c in 0.0f64..2.0) {
            let l = LowFreqFluxNoise::new(w, t).unwrap();
            let h = HighFreqFluxNoise::new(0.1, 0.0, t).unwrap();
            let p = pair_params_reduced(&l, &h, c);
            let lhs = p.width * p.width;
            let rhs = 2.0 * p.reorganization * p.temperature;
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * lhs);
            let r = 2.0 * l.reorganization() * t;
            prop_assert!((w * w - r).abs() <= 4.0 * f64::EPSILON * w * w);
        }

        #[test]
        fn detailed_balance(w in 1e-4f64..20.0, alpha in 0.0f64..3.0, tan_c in 1e-9f64..1e-2) {
            let h = HighFreqFluxNoise::new(0.2, alpha, T).unwrap();
            let c = FluxConversions::new(&h, 250e-12);
            let boltz = exp(-w / T);
            let (p, m) = (c.spectrum(w), c.spectrum(-w));
            prop_assert!((m - boltz * p).abs() <= 1e-10 * p);
            let cn = ChargeNoise::new(tan_c, 110e-15, T).unwrap();
            let (p, m) = (charge_spectrum(w, &cn), charge_spectrum(-w, &cn));
            prop_assert!((m - boltz * p).abs() <= 1e-10 * p);
            let pp = pair_params_reduced(&lf(), &h, 0.3);
            let (p, m) = (hf_envelope(w, &pp), hf_envelope(-w, &pp));
            prop_assert!((m - boltz * p).abs() <= 1e-10 * p);
        }

        #[test]
        fn kappa_is_finite_and_continuous(a in 0.0f64..3.0) {
            let k = kappa(a);
            prop_assert!(k.is_finite() && k >= 2.0 && k < 3.2);
            prop_assert!((kappa(a + 1e-7) - k).abs() < 1e-6);
        }

        #[test]
        fn linewidth_exponent(alpha in 0.0f64..3.0, c in 1e-3f64..3.0) {
            let h = HighFreqFluxNoise::new(0.2, alpha, T).unwrap();
            let g = h.linewidth(c);
            let expect = 0.2 * c.powf(2.0 / (1.0 + alpha));
            prop_assert!((g - expect).abs() <= 1e-12 * expect);
        }
    }
}

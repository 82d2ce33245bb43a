//! Physical constants and conversions between SI and the internal units.
//!
//! Internally ħ = k_B = 1 and energies (hence angular frequencies and rates)
//! are measured in h·GHz.

use core::f64::consts::PI;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Superconducting flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
/// One internal energy unit (h·GHz) in joules.
pub const ENERGY_UNIT: f64 = PLANCK * 1e9;

/// Joules to internal energy.
pub fn from_joule(e: f64) -> f64 {
    e / ENERGY_UNIT
}

/// Internal energy to joules.
pub fn to_joule(e: f64) -> f64 {
    e * ENERGY_UNIT
}

/// Temperature-like energy given in kelvin.
pub fn from_kelvin(t: f64) -> f64 {
    from_joule(t * BOLTZMANN)
}

/// Internal energy expressed in kelvin.
pub fn to_kelvin(e: f64) -> f64 {
    to_joule(e) / BOLTZMANN
}

/// Energy given in millikelvin.
pub fn from_millikelvin(t: f64) -> f64 {
    from_kelvin(t * 1e-3)
}

/// Internal energy expressed in millikelvin.
pub fn to_millikelvin(e: f64) -> f64 {
    to_kelvin(e) * 1e3
}

/// Flux in mΦ₀ to webers.
pub fn mphi0_to_weber(x: f64) -> f64 {
    x * 1e-3 * FLUX_QUANTUM
}

/// Flux in webers to mΦ₀.
pub fn weber_to_mphi0(x: f64) -> f64 {
    x / FLUX_QUANTUM * 1e3
}

/// Internal rate to s⁻¹.
pub fn rate_per_second(r: f64) -> f64 {
    r * 2.0 * PI * 1e9
}

/// Internal rate to μs⁻¹.
pub fn rate_per_microsecond(r: f64) -> f64 {
    r * 2.0 * PI * 1e3
}

/// μs⁻¹ to internal rate.
pub fn rate_from_per_microsecond(r: f64) -> f64 {
    r / (2.0 * PI * 1e3)
}

/// Time in μs to internal time (the inverse of the internal rate unit).
pub fn time_from_microseconds(t: f64) -> f64 {
    t * 2.0 * PI * 1e3
}

/// Internal time to μs.
pub fn time_to_microseconds(t: f64) -> f64 {
    t / (2.0 * PI * 1e3)
}

/// Internal angular frequency to rad/s.
pub fn angular_per_second(w: f64) -> f64 {
    rate_per_second(w)
}

//! `mrt validate`: invariant checks of every layer, each against its own
//! numerical oracle.

use std::f64::consts::PI;

use anyhow::Result;

use mrt_core::basis::{basis_at, LevelRequest};
use mrt_core::linalg::lowest_eigenpairs;
use mrt_core::noise::{
    charge_thermal_factor, gaussian_envelope, hf_envelope, kappa, pair_flux_spectrum, pair_params_reduced,
    HighFreqFluxNoise,
};
use mrt_core::rates::{escape_rate, hybrid_grid, hybrid_spectrum, RateModel, RateOptions};
use mrt_core::squid::build_hamiltonian;
use mrt_core::units::{mphi0_to_weber, ENERGY_UNIT};

use crate::commands::Output;
use crate::config::RunConfig;
use crate::output::{num, Report};

/// One line of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, passed: value < tolerance }
    }

    fn exact(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, tolerance: 0.0, passed: value == 0.0 }
    }
}

/// Composite Simpson rule with `n` (made even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

// ∫_a^b f on a logarithmic mesh, a > 0
fn log_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    simpson(|u| f(u.exp()) * u.exp(), a.ln(), b.ln(), n)
}

/// ∫dω/2π of the high-frequency envelope for γ̃ = ratio·T: a fine core of
/// ±50γ̃ plus logarithmic tails out to T, where the envelope stops being a
/// normalized line shape and the Ohmic growth takes over.
pub fn hf_mass(alpha: f64, ratio: f64, t: f64) -> Result<f64> {
    let h = HighFreqFluxNoise::new(ratio * t, alpha, t)?;
    let lf = mrt_core::noise::LowFreqFluxNoise::new(t, t)?;
    let p = pair_params_reduced(&lf, &h, 1.0);
    let g = p.linewidth;
    let f = |w: f64| hf_envelope(w, &p);
    let core = simpson(f, -50.0 * g, 50.0 * g, 40_000);
    let tails = log_simpson(f, 50.0 * g, t, 8_000) + log_simpson(|w| f(-w), 50.0 * g, t, 8_000);
    Ok((core + tails) / (2.0 * PI))
}

/// κ from normalizing 1/(1 + |x|^{2+α}) numerically: κ = π / ∫₀^∞ dx/(1 + x^p).
pub fn kappa_numeric(alpha: f64) -> f64 {
    let p = 2.0 + alpha;
    // [0, 1] directly, [1, ∞) through x = 1/u
    let inner = simpson(|x| 1.0 / (1.0 + x.powf(p)), 0.0, 1.0, 20_000);
    let outer = simpson(|u| u.powf(p - 2.0) / (u.powf(p) + 1.0), 0.0, 1.0, 20_000);
    PI / (inner + outer)
}

/// Every check, in report order.
pub fn run_checks(cfg: &RunConfig) -> Result<Vec<Check>> {
    let noise = cfg.noise_params()?;
    let t = noise.temperature();
    let mut out = Vec::new();

    // normalization of the two envelopes
    let p = pair_params_reduced(&noise.low, &noise.high, 1.0);
    let (lo, hi) = (p.reorganization - 12.0 * p.width, p.reorganization + 12.0 * p.width);
    let gl = simpson(|w| gaussian_envelope(w, &p), lo, hi, 4_000) / (2.0 * PI);
    out.push(Check::below("gaussian_normalization", (gl - 1.0).abs(), 1e-8));
    for a in [0.0, 0.5, 1.0] {
        let m = hf_mass(a, 1e-3, t)?;
        out.push(Check::below(format!("hf_normalization_alpha_{a}"), (m - 1.0).abs(), 1e-3));
    }

    // κ: exact at α = 0, numerical normalization otherwise
    let k0 = kappa(0.0);
    out.push(Check { name: "kappa_alpha_0".into(), value: k0, tolerance: 0.0, passed: k0 == 2.0 });
    let mut alphas = vec![0.5, 1.0];
    if !alphas.contains(&noise.high.alpha) && noise.high.alpha != 0.0 {
        alphas.push(noise.high.alpha);
    }
    for a in alphas {
        out.push(Check::below(format!("kappa_alpha_{a}"), (kappa(a) / kappa_numeric(a) - 1.0).abs(), 1e-3));
    }

    // fluctuation-dissipation and detailed balance of the raw spectra
    let fdt = ((p.width * p.width) / (2.0 * p.reorganization * t) - 1.0).abs();
    out.push(Check::below("fdt_width_reorganization", fdt, 1e-12));
    let mut db = 0.0f64;
    for x in [0.01, 0.3, 1.0, 4.0, 20.0] {
        let w = x * t;
        let (f, b) = (pair_flux_spectrum(w, &noise.high, 0.4), pair_flux_spectrum(-w, &noise.high, 0.4));
        db = db.max((b / ((-w / t).exp() * f) - 1.0).abs());
        let (f, b) = (charge_thermal_factor(w, t), charge_thermal_factor(-w, t));
        db = db.max((b / ((-w / t).exp() * f) - 1.0).abs());
    }
    out.push(Check::below("spectrum_detailed_balance", db, 1e-12));

    // hybrid spectra at the configured bias
    let basis = basis_at(&cfg.squid_params(), &cfg.phase_grid(), LevelRequest::UpTo(cfg.options.channels))?;
    let opts = RateOptions { shifts: false, ..cfg.rate_options() };
    let model = RateModel::new(&basis, &noise, &opts)?;
    let hs = hybrid_spectrum(&model, &hybrid_grid(&model))?;
    out.push(Check::below("hybrid_detailed_balance", hs.detailed_balance_residual(), 1e-6));

    // zero widths and shifts: Γ_mn = S_nm(ω_nm)
    let bare = RateModel::new(&basis, &noise, &RateOptions { broadening: false, ..opts })?;
    let mut br = 0.0f64;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let s = bare.pair(i, j).eval(basis.omega(i, j));
            if i != j && s > 0.0 {
                br = br.max((bare.transition_rate(j, i) / s - 1.0).abs());
            }
        }
    }
    out.push(Check::below("bloch_redfield_limit", br, 1e-6));

    let esc = escape_rate(&basis, &noise, &opts)?;
    let sum: f64 = esc.channels.iter().map(|c| c.1).sum();
    out.push(Check::exact("escape_is_channel_sum", esc.total - sum));

    // harmonic limit of the eigensolver
    let mut sp = cfg.squid_params();
    sp.critical_current = 1e-30;
    let h = build_hamiltonian(&sp, &cfg.phase_grid())?;
    let w0 = (8.0 * h.energies.charging * h.energies.inductive).sqrt();
    let ep = lowest_eigenpairs(&h.dense(), f64::INFINITY, 6);
    let harm = ep
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| (v / (w0 * (k as f64 + 0.5)) - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(Check::below("harmonic_limit", harm, 1e-6));

    // Hellmann-Feynman: dE_n/dΦˣ = −I_n for the two lowest levels of each well
    let dx = 0.01;
    let at = |d: f64| {
        let mut q = cfg.squid_params();
        q.flux_bias += mphi0_to_weber(d);
        basis_at(&q, &cfg.phase_grid(), LevelRequest::UpTo(2))
    };
    let (b0, bm, bp) = (at(0.0)?, at(-dx)?, at(dx)?);
    let mut hf = 0.0f64;
    for s in &b0.states {
        let (i, im, ip) = (b0.require(s.label)?, bm.require(s.label)?, bp.require(s.label)?);
        let slope = (bp.energy(ip) - bm.energy(im)) * ENERGY_UNIT / (2.0 * mphi0_to_weber(dx));
        hf = hf.max((slope / -b0.current(i) - 1.0).abs());
    }
    out.push(Check::below("hellmann_feynman", hf, 1e-3));
    Ok(out)
}

/// Runs [`run_checks`] and renders a table; fails if any check fails.
pub fn validate(cfg: &RunConfig) -> Result<Output> {
    let checks = run_checks(cfg)?;
    let mut r = Report::new("validate", cfg)?;
    r.set_columns(&["check", "status", "value", "tolerance"]);
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        r.row_fields(vec![c.name.clone(), status.into(), num(c.value), num(c.tolerance)]);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    r.footer(format!("failed = {failed}"));
    Ok(Output { text: r.render()?, passed: failed == 0 })
}

//! The subcommands. Each returns the rendered file and whether every
//! invariant it checks held.

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;

use mrt_core::basis::{basis_at, LevelRequest, LrBasis, Well};
use mrt_core::dynamics::{
    boltzmann_deviation, escape_rate_from_decay, evolve, initial_growth, output_times, stationarity_residual, steady_state,
    EvolveOptions, PopulationState, ShiftedLevels, NORM_TOL,
};
use mrt_core::noise::{charge_thermal_factor, gaussian_envelope, hf_envelope};
use mrt_core::rates::{
    check_hybrid_grid, detailed_balance_residual, escape_options, escape_rate_with, hybrid_grid, mrt_point,
    rate_matrix, MrtPoint, RateModel,
};
use mrt_core::spectrum::{FrequencyGrid, SampledSpectrum};
use mrt_core::units::{
    mphi0_to_weber, rate_per_microsecond, time_from_microseconds, time_to_microseconds,
};

use crate::config::RunConfig;
use crate::output::{num, Report};

/// Rendered output and the invariant verdict (false → exit code 1).
#[derive(Debug, Clone)]
pub struct Output {
    pub text: String,
    pub passed: bool,
}

impl Output {
    fn ok(r: &Report) -> Result<Self> {
        Ok(Self { text: r.render()?, passed: true })
    }
}

/// Boltzmann ratios are compared for states at least this likely.
pub const RESOLVED_POPULATION: f64 = 1e-6;
/// Tolerance on the final populations against Boltzmann.
pub const BOLTZMANN_TOL: f64 = 1e-2;

fn warn_params(cfg: &RunConfig) {
    if let Some(w) = cfg.squid_params().warnings() {
        warn!("{w:?}");
    }
}

fn basis_for(cfg: &RunConfig, request: LevelRequest) -> Result<LrBasis> {
    warn_params(cfg);
    Ok(basis_at(&cfg.squid_params(), &cfg.phase_grid(), request)?)
}

/// Level table: E_n, well, I_n, |Δ_0m| and the barrier.
pub fn levels(cfg: &RunConfig) -> Result<Output> {
    let k = cfg.options.channels;
    let b = basis_for(cfg, LevelRequest::Exact { left: k, right: k })?;
    let mut r = Report::new("levels", cfg)?;
    let e0 = b.energy(b.require(0)?);
    r.comment(format!("barrier_top_ghz = {}", num(b.barrier_top)));
    r.comment(format!("barrier_height_ghz = {}", num(b.barrier_top - e0)));
    r.comment(format!("available_left = {}", b.available.0));
    r.comment(format!("available_right = {}", b.available.1));
    r.set_columns(&["label", "well", "level", "energy_ghz", "current_ua", "phase_mean", "abs_delta_0m_ghz"]);
    let z = b.require(0)?;
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by_key(|&i| b.states[i].label);
    for i in order {
        let s = &b.states[i];
        let d = if s.well == Well::Right { num(b.delta(z, i).abs()) } else { String::new() };
        r.row_fields(vec![
            s.label.to_string(),
            s.well.name().to_string(),
            s.level.to_string(),
            num(s.energy),
            num(b.current(i) * 1e6),
            num(s.phase_mean),
            d,
        ]);
    }
    Output::ok(&r)
}

/// Escape rates at every sweep bias, in order; evaluated in parallel.
pub fn sweep_points(cfg: &RunConfig) -> Result<Vec<MrtPoint>> {
    warn_params(cfg);
    let p = cfg.squid_params();
    let grid = cfg.phase_grid();
    let noise = cfg.noise_params()?;
    let opts = cfg.rate_options();
    let biases = cfg.biases_mphi0();
    info!("sweep over {} bias points", biases.len());
    biases
        .par_iter()
        .map(|&x| mrt_point(&p, &grid, &noise, mphi0_to_weber(x), &opts).map_err(anyhow::Error::from))
        .collect()
}

/// Γ₀ and Γ_0m against Φˣ.
pub fn sweep(cfg: &RunConfig) -> Result<Output> {
    let points = sweep_points(cfg)?;
    let k = cfg.options.channels;
    let mut r = Report::new("sweep", cfg)?;
    r.comment("frequency lattice: per transition, spacing min(W, γ̃, T)/8 over ±(10W + 20T); Lorentzian tails out to the largest level spacing plus 10W + 20T");
    r.comment("escape path: no level shifts, left ground state sharp");
    let mut cols = vec!["flux_mphi0".to_string(), "gamma0_per_us".to_string()];
    cols.extend((0..k).map(|i| format!("gamma_0{}_per_us", 2 * i + 1)));
    r.set_columns(&cols);
    let mut short = 0;
    for (pt, x) in points.iter().zip(cfg.biases_mphi0()) {
        let e = &pt.escape;
        if e.missing_channels > 0 {
            short += 1;
        }
        let mut f = vec![num(x), num(rate_per_microsecond(e.total))];
        for i in 0..k {
            let label = 2 * i + 1;
            f.push(match e.channels.iter().find(|c| c.0 == label) {
                Some(c) => num(rate_per_microsecond(c.1)),
                None => String::new(),
            });
        }
        r.row_fields(f);
    }
    if short > 0 {
        warn!("{short} bias points have fewer than {k} right-well channels below the barrier");
        r.footer(format!("points_with_missing_channels = {short}"));
    }
    Output::ok(&r)
}

/// Parses "m,n".
pub fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(',').context("pair must look like m,n")?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

/// S_mn and its ingredients on the spectrum lattice.
pub fn spectra(cfg: &RunConfig, pair: (usize, usize)) -> Result<Output> {
    let b = basis_for(cfg, LevelRequest::UpTo(cfg.options.channels))?;
    let labels = {
        let mut l = b.labels();
        l.sort_unstable();
        l
    };
    let (m, n) = pair;
    if b.index_of(m).is_none() || b.index_of(n).is_none() {
        bail!("no pair ({m},{n}) in the basis; valid labels are {labels:?}");
    }
    let noise = cfg.noise_params()?;
    let opts = mrt_core::rates::RateOptions { shifts: false, ..cfg.rate_options() };
    let model = RateModel::new(&b, &noise, &opts)?;
    let auto = hybrid_grid(&model);
    let grid = match (cfg.grid.frequency_spacing_ghz, cfg.grid.frequency_half_span_ghz) {
        (None, None) => auto,
        (h, s) => {
            let h = h.unwrap_or(auto.spacing);
            let s = s.unwrap_or(auto.max().max(-auto.min));
            FrequencyGrid::anchored(0.0, h, -s, s)
        }
    };
    check_hybrid_grid(&model, &grid)?;
    let (i, j) = (b.require(m)?, b.require(n)?);
    let pmn = model.pair(i, j);
    let forward = SampledSpectrum::from_fn(grid, |w| pmn.eval(w));
    let back = SampledSpectrum::from_fn(grid, |w| model.pair(j, i).eval(w));
    let t = noise.temperature();
    let p = &pmn.params;

    let mut r = Report::new("spectra", cfg)?;
    r.comment(format!("pair = {m},{n}"));
    r.comment(format!("omega_mn_ghz = {}", num(b.omega(i, j))));
    r.comment(format!("interwell = {}", pmn.is_interwell()));
    r.comment(format!("pair.width_ghz = {}", num(p.width)));
    r.comment(format!("pair.reorganization_ghz = {}", num(p.reorganization)));
    r.comment(format!("pair.linewidth_ghz = {}", num(p.linewidth)));
    r.comment(format!("pair.coupling = {}", num(p.coupling)));
    r.comment(format!("abs_delta_mn_ghz = {}", num(b.delta(i, j).abs())));
    r.comment(format!("grid.min_ghz = {}", num(grid.min)));
    r.comment(format!("grid.spacing_ghz = {}", num(grid.spacing)));
    r.comment(format!("grid.points = {}", grid.n_points));
    if !pmn.is_interwell() {
        r.comment("intrawell pair: S_mn uses ω²G^H and the charge term without the low-frequency Gaussian");
    }
    r.set_columns(&["omega_ghz", "g_low", "g_high", "s_q_term", "s_mn"]);
    for (k, w) in grid.points().into_iter().enumerate() {
        let gl = if p.width > 0.0 { gaussian_envelope(w, p) } else { 0.0 };
        let gh = if p.linewidth > 0.0 { hf_envelope(w, p) } else { 0.0 };
        let sq = pmn.charge_coef * charge_thermal_factor(w, t);
        r.row(&[w, gl, gh, sq, forward.values[k]]);
    }
    let residual = detailed_balance_residual(&forward, &back, t);
    r.footer(format!("integral_s_mn_ghz = {}", num(forward.integral())));
    r.footer(format!("detailed_balance_residual = {}", num(residual)));
    Ok(Output { text: r.render()?, passed: residual < 1e-6 })
}

/// Master-equation trajectory from a single occupied state.
pub fn dynamics(cfg: &RunConfig, t_max_us: Option<f64>) -> Result<Output> {
    let t_max_us = t_max_us.unwrap_or(cfg.dynamics.t_max_us);
    anyhow::ensure!(t_max_us >= 0.0 && t_max_us.is_finite(), "t_max must be non-negative, got {t_max_us}");
    let b = basis_for(cfg, LevelRequest::UpTo(cfg.options.channels))?;
    let noise = cfg.noise_params()?;
    let opts = mrt_core::rates::RateOptions { zero_ground_width: cfg.dynamics.sharp_ground, ..cfg.rate_options() };
    let model = RateModel::new(&b, &noise, &opts)?;
    let gamma = rate_matrix(&model)?;
    let start = b.require(cfg.dynamics.start_label)?;
    let fastest = (0..gamma.order()).map(|i| gamma.outflow(i)).fold(0.0, f64::max);
    let times = output_times(time_from_microseconds(t_max_us), fastest, cfg.dynamics.samples);
    let p0 = PopulationState::concentrated(b.len(), start, 0.0)?;
    let tr = evolve(&p0, &gamma, &times, &EvolveOptions::default())?;

    let mut r = Report::new("dynamics", cfg)?;
    r.comment(format!("start_label = {}", cfg.dynamics.start_label));
    r.comment(format!("t_max_us = {}", num(t_max_us)));
    r.comment(format!("sharp_ground = {}", cfg.dynamics.sharp_ground));
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.sort_by_key(|&i| b.states[i].label);
    let mut cols = vec!["t_us".to_string()];
    cols.extend(order.iter().map(|&i| format!("p{}", b.states[i].label)));
    r.set_columns(&cols);
    let mut passed = true;
    for s in &tr.states {
        let mut row = vec![time_to_microseconds(s.time)];
        row.extend(order.iter().map(|&i| s.populations[i]));
        r.row(&row);
        passed &= (s.total() - 1.0).abs() <= NORM_TOL;
    }
    r.footer(format!("steps = {}", tr.steps));
    // Σ_m Γ_m,start over every other state, intrawell ones included
    let outflow = rate_per_microsecond(gamma.outflow(start));
    r.footer(format!("outflow_per_us = {}", num(outflow)));
    if tr.states.len() >= 3 {
        match escape_rate_from_decay(&tr, start) {
            Ok(s) => {
                let s = rate_per_microsecond(s);
                r.footer(format!("initial_slope_per_us = {}", num(s)));
                let rel = if outflow > 0.0 { (s / outflow - 1.0).abs() } else { s.abs() };
                r.footer(format!("initial_slope_rel_error = {}", num(rel)));
                passed &= rel < 1e-4;
            }
            Err(e) => warn!("initial slope unavailable: {e}"),
        }
    }
    if start == b.require(0)? {
        // population entering the right well against the escape rate
        let esc = escape_rate_with(&RateModel::new(&b, &noise, &escape_options(&opts))?)?;
        r.footer(format!("escape_rate_per_us = {}", num(rate_per_microsecond(esc.total))));
        let right: Vec<usize> = b.well_labels(Well::Right).iter().map(|&l| b.require(l)).collect::<Result<_, _>>()?;
        if let Ok(g) = initial_growth(&tr, &right) {
            r.footer(format!("right_well_initial_rate_per_us = {}", num(rate_per_microsecond(g))));
        }
    }
    let ss = steady_state(&gamma);
    if !ss.is_irreducible() {
        warn!("rate matrix has {} closed classes; no unique equilibrium", ss.classes.len());
        r.footer(format!("closed_classes = {}", ss.classes.len()));
    } else {
        let eq = &ss.distributions[0].populations;
        let levels = ShiftedLevels::from_model(&model);
        let boltz = levels.boltzmann(noise.temperature());
        let last = &tr.states.last().expect("at least one row").populations;
        r.footer(format!("steady_state_residual_per_us = {}", num(rate_per_microsecond(stationarity_residual(&gamma, eq)))));
        r.footer(format!("steady_state_vs_boltzmann = {}", num(boltzmann_deviation(eq, &boltz, RESOLVED_POPULATION))));
        let fin = boltzmann_deviation(last, &boltz, RESOLVED_POPULATION);
        r.footer(format!("final_vs_boltzmann = {}", num(fin)));
        r.footer(format!("final_vs_steady_state = {}", num(boltzmann_deviation(last, eq, RESOLVED_POPULATION))));
        r.footer(format!("levels_shifted = {}", levels.shifted));
        if fin > BOLTZMANN_TOL {
            info!("final populations are {fin:.3e} from Boltzmann; t_max may be short of equilibrium");
        }
    }
    Ok(Output { text: r.render()?, passed })
}

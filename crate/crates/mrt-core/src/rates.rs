//! Hybrid noise spectra, level dressing, relaxation rates and the MRT escape rate.
//!
//! For two states in opposite wells the bath spectrum is the Gaussian
//! envelope convolved with the fast flux and charge parts,
//!
//!   S_mn(ω) = ∫dΩ/2π G^L_mn(ω − Ω) [ |Δ_mn/2|² G^H_mn(Ω) + |q_mn/C|² S_q(Ω) ].
//!
//! Inside one well Δ_mn = 0 and the flux part is driven by the current matrix
//! element, |Δ̃_mn(ω)|² G^H_mn(ω) with Δ̃ = ω I_mn/(I_m − I_n), evaluated at a
//! single frequency without the slow-noise Gaussian.
//!
//! The transition rate n → m is
//!
//!   Γ_mn = ∫dΩ/2π S_nm(Ω) · 2g/((Ω − ω_nm − d)² + g²),
//!
//! with g = γ_n(ω) + γ_m(−ω), d = δ_n(ω) − δ_m(−ω) and ω = Ω + ω_mn. The
//! Lorentzian is integrated cell by cell in closed form against a piecewise
//! linear S, so zero width reproduces S_nm(ω_nm) exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::basis::{basis_at, LevelRequest, LrBasis, Well};
use crate::linalg::Matrix;
use crate::math::{ceil, exp, log, pow, round};
use crate::noise::{charge_thermal_factor, gaussian_envelope, hf_envelope, kappa, thermal_factor, NoiseParams, PairNoiseParams};
use crate::spectrum::{lorentzian_cell, lorentzian_product, FrequencyGrid, GaussianKernel, SampledSpectrum};
use crate::squid::{PhaseGrid, SquidParams};
use crate::units::weber_to_mphi0;
use crate::{Error, Result};

/// Gaussian kernels are cut at ±REACH·W around ε.
const REACH: f64 = 10.0;
/// Points per smallest width on frequency lattices.
const PER_WIDTH: f64 = 8.0;
/// Trapezoid nodes of each Lorentzian tail.
const TAIL_NODES: usize = 400;

/// Knobs of the rate computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateOptions {
    /// Drop the interwell charge term.
    pub flux_only: bool,
    /// Include level shifts δ_n in the Lorentzians.
    pub shifts: bool,
    /// Metastable levels used per well (right-well channels 1, 3, … 2k−1).
    pub channels: usize,
    /// Halve the lattice spacing until a rate changes by less than 0.5%.
    pub refine: bool,
    /// Level widths γ_n; off gives the zero-width (Bloch-Redfield) limit.
    pub broadening: bool,
    /// Let γ_n also sum over partners in the opposite well.
    pub interwell_broadening: bool,
    /// Treat the left ground state as sharp, γ_0 = 0.
    pub zero_ground_width: bool,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            flux_only: false,
            shifts: false,
            channels: 3,
            refine: false,
            broadening: true,
            interwell_broadening: false,
            zero_ground_width: true,
        }
    }
}

/// Δ̃_mn(ω) = Δ_mn/2 + ω I_mn/(I_m − I_n).
///
/// `pair` is only used to label the error for I_m = I_n with I_mn ≠ 0.
pub fn tunneling_amplitude(omega: f64, delta: f64, i_mn: f64, i_m: f64, i_n: f64, pair: (usize, usize)) -> Result<f64> {
    if i_mn == 0.0 {
        return Ok(0.5 * delta);
    }
    if i_m == i_n {
        return Err(Error::SingularPair(pair.0, pair.1));
    }
    Ok(0.5 * delta + omega * i_mn / (i_m - i_n))
}

#[derive(Debug, Clone)]
enum PairKind {
    Diagonal,
    Intrawell {
        // (φ_mn/(φ_m − φ_n))², multiplies ω² G^H
        ratio2: f64,
        // (φ_mn/2π)², used when φ_m = φ_n
        limit2: f64,
    },
    Interwell {
        amp2: f64,
        kernel: GaussianKernel,
    },
}

/// S_mn(ω) for one ordered pair, evaluated on demand.
#[derive(Debug, Clone)]
pub struct PairSpectrum {
    kind: PairKind,
    /// Dissipative parameters of the pair.
    pub params: PairNoiseParams,
    /// 16 E_C |N_mn|² tan δ_C (zero when dropped).
    pub charge_coef: f64,
    lambda_pow: f64,
}

impl PairSpectrum {
    fn new(basis: &LrBasis, noise: &NoiseParams, i: usize, j: usize, flux_only: bool) -> Result<Self> {
        let p = noise.pair(basis.coupling(i, j));
        let n = basis.charge_number(i, j);
        let mut charge_coef = 16.0 * basis.charging_energy * n * n * noise.charge_loss_tangent;
        let a = noise.high.alpha;
        let lambda_pow = pow(noise.high.lambda, 1.0 + a);
        let kind = if i == j {
            charge_coef = 0.0;
            PairKind::Diagonal
        } else if basis.same_well(i, j) {
            let (pi, pj) = (basis.phase(i, i), basis.phase(j, j));
            let pij = basis.phase(i, j);
            let ratio2 = if pi != pj { (pij / (pi - pj)) * (pij / (pi - pj)) } else { 0.0 };
            let r = pij / (2.0 * PI);
            PairKind::Intrawell { ratio2, limit2: r * r }
        } else {
            if flux_only {
                charge_coef = 0.0;
            }
            if p.coupling == 0.0 {
                return Err(Error::SingularPair(basis.states[i].label, basis.states[j].label));
            }
            let d = basis.delta(i, j);
            PairKind::Interwell { amp2: 0.25 * d * d, kernel: GaussianKernel::new(&p, lattice_spacing(&p), REACH) }
        };
        Ok(Self { kind, params: p, charge_coef, lambda_pow })
    }

    /// True for a pair in opposite wells.
    pub fn is_interwell(&self) -> bool {
        matches!(self.kind, PairKind::Interwell { .. })
    }

    /// Fast parts before the Gaussian: (flux, charge) at frequency Ω.
    pub fn fast_parts(&self, omega: f64) -> (f64, f64) {
        let p = &self.params;
        let charge = self.charge_coef * charge_thermal_factor(omega, p.temperature);
        let flux = match &self.kind {
            PairKind::Diagonal => return (0.0, 0.0),
            PairKind::Intrawell { ratio2, limit2 } => {
                if p.linewidth > 0.0 {
                    ratio2 * omega * omega * hf_envelope(omega, p)
                } else if p.coupling == 0.0 && *limit2 > 0.0 {
                    let f = if p.alpha == 0.0 { 1.0 } else { pow(omega.abs(), -p.alpha) };
                    limit2 * kappa(p.alpha) * self.lambda_pow * f * thermal_factor(omega, p.temperature)
                } else {
                    0.0
                }
            }
            PairKind::Interwell { amp2, .. } => {
                if p.linewidth > 0.0 {
                    amp2 * hf_envelope(omega, p)
                } else {
                    0.0
                }
            }
        };
        (flux, charge)
    }

    /// S_mn(ω).
    pub fn eval(&self, omega: f64) -> f64 {
        match &self.kind {
            PairKind::Diagonal => 0.0,
            PairKind::Intrawell { .. } => {
                let (f, c) = self.fast_parts(omega);
                f + c
            }
            PairKind::Interwell { amp2, kernel } => {
                let mut s = kernel.apply(|w| self.fast_sum(w), omega);
                if self.params.linewidth == 0.0 {
                    // G^H = 2π δ
                    s += amp2 * gaussian_envelope(omega, &self.params);
                }
                s
            }
        }
    }

    fn fast_sum(&self, omega: f64) -> f64 {
        let (f, c) = self.fast_parts(omega);
        f + c
    }

    /// S_mn on every node of `grid`. Interwell pairs need a spacing no
    /// coarser than [`PairSpectrum::required_spacing`].
    pub fn sample(&self, grid: &FrequencyGrid) -> Vec<f64> {
        match &self.kind {
            PairKind::Diagonal => vec![0.0; grid.n_points],
            PairKind::Intrawell { .. } => grid.points().into_iter().map(|w| self.fast_sum(w)).collect(),
            PairKind::Interwell { amp2, .. } => {
                let kernel = GaussianKernel::new(&self.params, grid.spacing, REACH);
                let src = kernel.source_grid(grid);
                let f: Vec<f64> = src.points().into_iter().map(|w| self.fast_sum(w)).collect();
                let mut out = kernel.apply_lattice(&f, grid);
                if self.params.linewidth == 0.0 {
                    for (i, v) in out.iter_mut().enumerate() {
                        *v += amp2 * gaussian_envelope(grid.point(i), &self.params);
                    }
                }
                out
            }
        }
    }

    /// Largest lattice spacing that resolves this pair.
    pub fn required_spacing(&self) -> f64 {
        match self.kind {
            PairKind::Interwell { .. } => lattice_spacing(&self.params),
            _ => self.params.temperature / PER_WIDTH,
        }
    }

    /// Half-width of the Gaussian (zero inside a well).
    pub fn gaussian_width(&self) -> f64 {
        if self.is_interwell() {
            self.params.width
        } else {
            0.0
        }
    }
}

fn lattice_spacing(p: &PairNoiseParams) -> f64 {
    let mut m = p.temperature.min(p.width);
    if p.linewidth > 0.0 {
        m = m.min(p.linewidth);
    }
    m / PER_WIDTH
}

/// Per-state dressing tabulated on a grid: γ_n(ω) and δ_n(ω).
#[derive(Debug, Clone)]
pub struct LevelDressing {
    /// γ_n, one per basis position.
    pub broadening: Vec<SampledSpectrum>,
    /// δ_n, one per basis position (zeros when shifts are off).
    pub shift: Vec<SampledSpectrum>,
}

/// Everything needed to evaluate spectra and rates at one bias point.
#[derive(Debug, Clone)]
pub struct RateModel<'a> {
    basis: &'a LrBasis,
    noise: NoiseParams,
    options: RateOptions,
    pairs: Vec<PairSpectrum>,
    partners: Vec<Vec<usize>>,
    shifts: Option<Vec<SampledSpectrum>>,
}

impl<'a> RateModel<'a> {
    /// Builds all pair spectra; tabulates shifts when enabled.
    pub fn new(basis: &'a LrBasis, noise: &NoiseParams, options: &RateOptions) -> Result<Self> {
        let n = basis.len();
        let mut pairs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                pairs.push(PairSpectrum::new(basis, noise, i, j, options.flux_only)?);
            }
        }
        let partners = (0..n)
            .map(|i| (0..n).filter(|&k| k != i && (options.interwell_broadening || basis.same_well(i, k))).collect())
            .collect();
        let mut model = Self { basis, noise: *noise, options: *options, pairs, partners, shifts: None };
        if options.shifts {
            let grid = model.dressing_grid();
            let tables = (0..n).map(|i| SampledSpectrum::from_fn(grid, |w| model.shift_direct(i, w))).collect();
            model.shifts = Some(tables);
        }
        Ok(model)
    }

    /// Underlying basis.
    pub fn basis(&self) -> &LrBasis {
        self.basis
    }

    /// Options in force.
    pub fn options(&self) -> &RateOptions {
        &self.options
    }

    /// Pair spectrum S_ij by basis positions.
    pub fn pair(&self, i: usize, j: usize) -> &PairSpectrum {
        &self.pairs[i * self.basis.len() + j]
    }

    /// S_ij(ω).
    pub fn spectrum(&self, i: usize, j: usize, omega: f64) -> f64 {
        self.pair(i, j).eval(omega)
    }

    /// Positions contributing to γ_i and δ_i.
    pub fn partners(&self, i: usize) -> &[usize] {
        &self.partners[i]
    }

    /// γ_i(ω) = ½ Σ_k S_ik(ω + ω_ik).
    pub fn broadening(&self, i: usize, omega: f64) -> f64 {
        if !self.options.broadening || (self.options.zero_ground_width && self.basis.states[i].label == 0) {
            return 0.0;
        }
        let b = self.basis;
        0.5 * self.partners[i].iter().map(|&k| self.spectrum(i, k, omega + b.omega(i, k))).sum::<f64>()
    }

    /// δ_i(ω), interpolated from the table (zero when shifts are off).
    pub fn shift(&self, i: usize, omega: f64) -> f64 {
        match &self.shifts {
            Some(t) => {
                let g = &t[i].grid;
                t[i].eval(omega.clamp(g.min, g.max()))
            }
            None => 0.0,
        }
    }

    /// Ω cutoff of the shift integral: the standard lattice half-span padding.
    pub fn shift_cutoff(&self) -> f64 {
        10.0 * self.max_interwell_width() + 20.0 * self.noise.temperature()
    }

    fn max_interwell_width(&self) -> f64 {
        self.pairs.iter().map(|p| p.gaussian_width()).fold(0.0, f64::max)
    }

    /// |Ω| bound of every frequency integral: the largest level spacing plus
    /// the shift cutoff. With Ohmic spectra and widths growing like |Ω| the
    /// Lorentzian convolution has no finite limit without it.
    pub fn frequency_cutoff(&self) -> f64 {
        let b = self.basis;
        let n = b.len();
        let reach = (0..n).flat_map(|i| (0..n).map(move |j| b.omega(i, j).abs())).fold(0.0, f64::max);
        reach + self.shift_cutoff()
    }

    fn dressing_grid(&self) -> FrequencyGrid {
        let l = self.frequency_cutoff();
        FrequencyGrid::anchored(0.0, self.noise.temperature() / PER_WIDTH, -l, l)
    }

    /// δ_i(ω) by direct quadrature of the symmetric-difference form,
    /// Σ_k ∫₀^Λ dΩ/2π [S_ik(y − Ω) − S_ik(y + Ω)]/Ω with y = ω + ω_ik.
    pub fn shift_direct(&self, i: usize, omega: f64) -> f64 {
        let lam = self.shift_cutoff();
        let b = self.basis;
        let mut total = 0.0;
        for &k in &self.partners[i] {
            let pair = self.pair(i, k);
            let h = pair.required_spacing().min(self.noise.temperature() / PER_WIDTH);
            let n = ceil(lam / h) as usize;
            total += shift_integral(|x| pair.eval(x), omega + b.omega(i, k), lam, n);
        }
        total
    }

    /// γ and δ of every state tabulated on `grid`.
    pub fn dressing(&self, grid: &FrequencyGrid) -> LevelDressing {
        let n = self.basis.len();
        LevelDressing {
            broadening: (0..n).map(|i| SampledSpectrum::from_fn(*grid, |w| self.broadening(i, w))).collect(),
            shift: (0..n).map(|i| SampledSpectrum::from_fn(*grid, |w| self.shift(i, w))).collect(),
        }
    }

    /// Shifted levels Ẽ_i = E_i + δ_i(0).
    pub fn shifted_levels(&self) -> Vec<f64> {
        (0..self.basis.len()).map(|i| self.basis.energy(i) + self.shift(i, 0.0)).collect()
    }

    /// Lattice used for the transition out of `from` into `to`.
    pub fn transition_grid(&self, to: usize, from: usize) -> FrequencyGrid {
        let pair = self.pair(from, to);
        let w = self.basis.omega(from, to);
        FrequencyGrid::covering(
            w,
            &[w],
            pair.gaussian_width(),
            self.noise.temperature(),
            pair.required_spacing() * PER_WIDTH,
        )
    }

    /// Γ_{to,from}: rate of the transition from → to (basis positions).
    pub fn transition_rate(&self, to: usize, from: usize) -> f64 {
        if to == from {
            return 0.0;
        }
        let mut grid = self.transition_grid(to, from);
        let mut rate = self.transition_rate_on(to, from, &grid);
        if self.options.refine {
            for _ in 0..4 {
                grid = grid.refined();
                let next = self.transition_rate_on(to, from, &grid);
                let done = (next - rate).abs() <= 5e-3 * next.abs();
                rate = next;
                if done {
                    break;
                }
            }
        }
        rate
    }

    /// Γ_{to,from} on a caller-chosen lattice, tails included.
    pub fn transition_rate_on(&self, to: usize, from: usize, grid: &FrequencyGrid) -> f64 {
        let pair = self.pair(from, to);
        let values = pair.sample(grid);
        let core = lorentzian_product(grid, &values, |_, mid| self.lorentzian_at(to, from, mid));
        let tails = self.tail(to, from, grid.max(), 1.0) + self.tail(to, from, grid.min, -1.0);
        (core + tails).max(0.0)
    }

    /// (width, centre) of the Lorentzian at spectrum argument Ω.
    pub fn lorentzian_at(&self, to: usize, from: usize, big_omega: f64) -> (f64, f64) {
        let b = self.basis;
        let w = big_omega + b.omega(to, from);
        let g = self.broadening(from, w) + self.broadening(to, -w);
        let d = self.shift(from, w) - self.shift(to, -w);
        (g, b.omega(from, to) + d)
    }

    // Lorentzian tail from a lattice edge out to the frequency cutoff,
    // trapezoid in ln|Ω − c|.
    fn tail(&self, to: usize, from: usize, edge: f64, dir: f64) -> f64 {
        let (g0, c) = self.lorentzian_at(to, from, edge);
        if !self.options.broadening || (g0 == 0.0 && self.zero_width_everywhere(to, from)) {
            return 0.0;
        }
        let u0 = (edge - c) * dir;
        if u0 <= 0.0 {
            return 0.0;
        }
        let u1 = self.frequency_cutoff() - dir * c;
        if u1 <= u0 {
            return 0.0;
        }
        let pair = self.pair(from, to);
        let dt = log(u1 / u0) / TAIL_NODES as f64;
        let mut s = 0.0;
        for j in 0..=TAIL_NODES {
            let u = u0 * exp(j as f64 * dt);
            let x = c + dir * u;
            let (g, _) = self.lorentzian_at(to, from, x);
            let f = pair.eval(x) * 2.0 * g * u / (u * u + g * g);
            s += if j == 0 || j == TAIL_NODES { 0.5 * f } else { f };
        }
        s * dt / (2.0 * PI)
    }

    fn zero_width_everywhere(&self, to: usize, from: usize) -> bool {
        let none = |i: usize| {
            self.partners[i].is_empty() || (self.options.zero_ground_width && self.basis.states[i].label == 0)
        };
        none(to) && none(from)
    }
}

/// ∫₀^Λ dΩ/2π [f(y − Ω) − f(y + Ω)]/Ω by the midpoint rule on `n` cells,
/// which never touches Ω = 0 where the integrand tends to −2f'(y).
pub fn shift_integral(f: impl Fn(f64) -> f64, y: f64, cutoff: f64, n: usize) -> f64 {
    let h = cutoff / n as f64;
    let mut s = 0.0;
    for j in 0..n {
        let w = (j as f64 + 0.5) * h;
        s += (f(y - w) - f(y + w)) / w;
    }
    s * h / (2.0 * PI)
}

/// Hybrid spectra of every ordered pair on one grid.
#[derive(Debug, Clone)]
pub struct HybridSpectrum {
    /// Basis labels in storage order.
    pub labels: Vec<usize>,
    /// Temperature used for detailed balance.
    pub temperature: f64,
    spectra: Vec<SampledSpectrum>,
}

impl HybridSpectrum {
    /// S_ij by basis positions.
    pub fn get(&self, i: usize, j: usize) -> &SampledSpectrum {
        &self.spectra[i * self.labels.len() + j]
    }

    /// max over pairs and nodes of |S_ji(−ω) − e^{−ω/T} S_ij(ω)| / max S.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.labels.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max(detailed_balance_residual(self.get(i, j), self.get(j, i), self.temperature));
            }
        }
        worst
    }
}

/// max over nodes of |r(−ω) − e^{−ω/T} s(ω)| / max(|s|, |r|), on a lattice
/// symmetric about zero; nodes whose mirror lies off the lattice are skipped.
pub fn detailed_balance_residual(s: &SampledSpectrum, r: &SampledSpectrum, temperature: f64) -> f64 {
    let scale = s.max_abs().max(r.max_abs());
    if scale == 0.0 {
        return 0.0;
    }
    let g = &s.grid;
    let mut worst = 0.0f64;
    for k in 0..g.n_points {
        let w = g.point(k);
        let m = round((-w - r.grid.min) / r.grid.spacing);
        if m < 0.0 || m >= r.grid.n_points as f64 {
            continue;
        }
        let back = r.values[m as usize];
        worst = worst.max((back - exp(-w / temperature) * s.values[k]).abs() / scale);
    }
    worst
}

/// Resolution error unless `grid` spans every ω_mn with the standard padding
/// and resolves the narrowest width.
pub fn check_hybrid_grid(model: &RateModel, grid: &FrequencyGrid) -> Result<()> {
    let b = model.basis();
    let n = b.len();
    let omegas: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| b.omega(i, j))).collect();
    let (w, m) = widths(model);
    grid.check(&omegas, w, model.noise.temperature(), m)
}

/// Lattice satisfying the resolution rules for every pair of the basis,
/// anchored at zero.
pub fn hybrid_grid(model: &RateModel) -> FrequencyGrid {
    let b = model.basis();
    let n = b.len();
    let omegas: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| b.omega(i, j))).collect();
    let (w, m) = widths(model);
    FrequencyGrid::covering(0.0, &omegas, w, model.noise.temperature(), m)
}

fn widths(model: &RateModel) -> (f64, f64) {
    let n = model.basis().len();
    let mut wmax = 0.0f64;
    let mut smallest = model.noise.temperature();
    for i in 0..n {
        for j in 0..n {
            let p = model.pair(i, j);
            if p.is_interwell() {
                wmax = wmax.max(p.params.width);
                smallest = smallest.min(p.required_spacing() * PER_WIDTH);
            }
        }
    }
    (wmax, smallest)
}

/// Tabulates S_mn for all ordered pairs after checking the grid resolution.
pub fn hybrid_spectrum(model: &RateModel, grid: &FrequencyGrid) -> Result<HybridSpectrum> {
    check_hybrid_grid(model, grid)?;
    let n = model.basis().len();
    let b = model.basis();
    let spectra = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| SampledSpectrum { grid: *grid, values: model.pair(i, j).sample(grid) })
        .collect();
    Ok(HybridSpectrum { labels: b.labels(), temperature: model.noise.temperature(), spectra })
}

/// Γ_mn for all ordered pairs; entry (m, n) is the rate n → m.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    /// Basis labels of rows and columns.
    pub labels: Vec<usize>,
    /// Rates, internal units.
    pub rates: Matrix,
}

impl RateMatrix {
    /// Wraps a matrix after checking Γ ≥ 0 and Γ_nn = 0.
    pub fn new(labels: Vec<usize>, rates: Matrix) -> Result<Self> {
        let n = rates.order();
        if labels.len() != n {
            return Err(Error::Config(format!("{} labels for order {n}", labels.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let r = rates[(i, j)];
                if !(r >= 0.0) || !r.is_finite() || (i == j && r != 0.0) {
                    return Err(Error::Domain(format!("invalid rate Γ[{i},{j}] = {r}")));
                }
            }
        }
        Ok(Self { labels, rates })
    }

    /// Number of states.
    pub fn order(&self) -> usize {
        self.rates.order()
    }

    /// Rate from → to by positions.
    pub fn rate(&self, to: usize, from: usize) -> f64 {
        self.rates[(to, from)]
    }

    /// Total rate out of `from`.
    pub fn outflow(&self, from: usize) -> f64 {
        (0..self.order()).map(|m| self.rates[(m, from)]).sum()
    }

    /// Largest entry.
    pub fn max_rate(&self) -> f64 {
        self.rates.as_slice().iter().copied().fold(0.0, f64::max)
    }
}

/// Full rate matrix for a basis.
pub fn rate_matrix(model: &RateModel) -> Result<RateMatrix> {
    let n = model.basis().len();
    let rates = Matrix::from_fn(n, |m, k| if m == k { 0.0 } else { model.transition_rate(m, k) });
    RateMatrix::new(model.basis().labels(), rates)
}

/// Escape rate out of the left ground state, split by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct EscapeRate {
    /// Γ₀ = Σ_m Γ_0m.
    pub total: f64,
    /// (label m, Γ_0m) for every right-well state present.
    pub channels: Vec<(usize, f64)>,
    /// Requested channels that the right well does not hold.
    pub missing_channels: usize,
}

/// Options the escape path always uses: no shifts and a sharp ground state.
pub fn escape_options(options: &RateOptions) -> RateOptions {
    RateOptions { shifts: false, zero_ground_width: true, ..*options }
}

/// Γ₀ and its channels for a given basis.
pub fn escape_rate(basis: &LrBasis, noise: &NoiseParams, options: &RateOptions) -> Result<EscapeRate> {
    let opts = escape_options(options);
    let model = RateModel::new(basis, noise, &opts)?;
    escape_rate_with(&model)
}

/// Γ₀ from a prepared model (its options are used as given).
pub fn escape_rate_with(model: &RateModel) -> Result<EscapeRate> {
    let b = model.basis();
    let start = b.require(0)?;
    let targets: Vec<usize> = b.well_labels(Well::Right);
    let mut channels = Vec::with_capacity(targets.len());
    for &m in &targets {
        let to = b.require(m)?;
        channels.push((m, model.transition_rate(to, start)));
    }
    let total = channels.iter().map(|c| c.1).sum();
    let missing_channels = model.options().channels.saturating_sub(targets.len());
    Ok(EscapeRate { total, channels, missing_channels })
}

/// One bias point of an MRT sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct MrtPoint {
    /// Φˣ, Wb.
    pub bias: f64,
    /// Escape rate at this bias.
    pub escape: EscapeRate,
}

impl MrtPoint {
    /// Φˣ in mΦ₀.
    pub fn bias_mphi0(&self) -> f64 {
        weber_to_mphi0(self.bias)
    }
}

/// Ordered escape rates over a bias list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MrtSweep {
    /// Points in bias order.
    pub points: Vec<MrtPoint>,
}

/// Escape rate at one bias (Wb).
pub fn mrt_point(params: &SquidParams, grid: &PhaseGrid, noise: &NoiseParams, bias: f64, options: &RateOptions) -> Result<MrtPoint> {
    let wrap = |e: Error| Error::AtBias { bias_mphi0: weber_to_mphi0(bias), source: alloc::boxed::Box::new(e) };
    let basis = basis_at(&params.with_flux_bias(bias), grid, LevelRequest::UpTo(options.channels)).map_err(wrap)?;
    let escape = escape_rate(&basis, noise, options).map_err(wrap)?;
    Ok(MrtPoint { bias, escape })
}

/// Sequential sweep; biases must be sorted.
pub fn mrt_sweep(params: &SquidParams, grid: &PhaseGrid, noise: &NoiseParams, biases: &[f64], options: &RateOptions) -> Result<MrtSweep> {
    if biases.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("bias list must be sorted".into()));
    }
    let points = biases.iter().map(|&b| mrt_point(params, grid, noise, b, options)).collect::<Result<_>>()?;
    Ok(MrtSweep { points })
}

/// Closed-form Lorentzian integral of one lattice cell, re-exported for oracles.
pub fn lorentzian_cell_integral(a: f64, b: f64, fa: f64, fb: f64, g: f64, c: f64) -> f64 {
    lorentzian_cell(a, b, fa, fb, g, c) / (2.0 * PI)
}

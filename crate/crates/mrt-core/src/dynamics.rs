//! Master-equation dynamics of the diagonal populations P_n(t).
//!
//! dP_n/dt = Σ_m (Γ_nm P_m − Γ_mn P_n), written as dP/dt = A P with
//! A_nm = Γ_nm off the diagonal and A_nn = −Σ_m Γ_mn. Every column of A sums
//! to zero, which is what keeps Σ P_n fixed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{Lu, Matrix};
use crate::math::{exp, log, pow, sqrt};
use crate::rates::{RateMatrix, RateModel};
use crate::{Error, Result};

/// Allowed drift of Σ P_n from one.
pub const NORM_TOL: f64 = 1e-9;

/// Populations at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    /// Time, internal units (1/GHz).
    pub time: f64,
    /// P_n in basis storage order.
    pub populations: Vec<f64>,
}

impl PopulationState {
    /// Checks P_n ≥ 0 and Σ P_n = 1 within [`NORM_TOL`].
    pub fn new(time: f64, populations: Vec<f64>) -> Result<Self> {
        let s = Self { time, populations };
        s.check(0.0)?;
        Ok(s)
    }

    /// All weight on position `start`.
    pub fn concentrated(n: usize, start: usize, time: f64) -> Result<Self> {
        if start >= n {
            return Err(Error::Config(format!("start position {start} outside {n} states")));
        }
        let mut p = vec![0.0; n];
        p[start] = 1.0;
        Ok(Self { time, populations: p })
    }

    /// Σ P_n.
    pub fn total(&self) -> f64 {
        self.populations.iter().sum()
    }

    /// Fails if some P_n < −`negative_tol` or the norm has drifted.
    pub fn check(&self, negative_tol: f64) -> Result<()> {
        if let Some((i, p)) = self.populations.iter().enumerate().find(|(_, p)| !(**p >= -negative_tol)) {
            return Err(Error::Integration(format!("P[{i}] = {p:e} at t = {}", self.time)));
        }
        let d = self.total() - 1.0;
        if !(d.abs() <= NORM_TOL) {
            return Err(Error::Integration(format!("Σ P drifted by {d:e} at t = {}", self.time)));
        }
        Ok(())
    }
}

/// Ẽ_n = E_n + δ_n(0).
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedLevels {
    /// Energies in basis storage order.
    pub energies: Vec<f64>,
    /// Whether δ_n(0) was included.
    pub shifted: bool,
}

impl ShiftedLevels {
    /// Levels as seen by a rate model; plain E_n when its shifts are off.
    pub fn from_model(model: &RateModel) -> Self {
        let shifted = model.options().shifts;
        let energies = if shifted {
            model.shifted_levels()
        } else {
            (0..model.basis().len()).map(|i| model.basis().energy(i)).collect()
        };
        Self { energies, shifted }
    }

    /// Normalized Boltzmann weights at temperature `t`.
    pub fn boltzmann(&self, t: f64) -> Vec<f64> {
        boltzmann(&self.energies, t)
    }
}

/// exp(−E_n/T), normalized.
pub fn boltzmann(energies: &[f64], t: f64) -> Vec<f64> {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| exp(-(e - e0) / t)).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// max |P_n − P_n^eq| / max(P_n, P_n^eq) over states where either is at
/// least `floor`. Equals |P_n/P_n^eq − 1| to first order and saturates at 1
/// when a state is populated that should be empty, or the reverse.
pub fn boltzmann_deviation(p: &[f64], eq: &[f64], floor: f64) -> f64 {
    p.iter()
        .zip(eq)
        .map(|(a, e)| (a.max(*e), (a - e).abs()))
        .filter(|(m, _)| *m >= floor && *m > 0.0)
        .map(|(m, d)| d / m)
        .fold(0.0, f64::max)
}

/// Σ P_n ln(P_n/P_n^eq), with 0 ln 0 = 0.
pub fn lyapunov(p: &[f64], eq: &[f64]) -> f64 {
    p.iter()
        .zip(eq)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, e)| a * log(a / e))
        .sum()
}

/// The generator A of dP/dt = A P.
pub fn generator(gamma: &RateMatrix) -> Matrix {
    let n = gamma.order();
    let mut a = Matrix::from_fn(n, |i, j| if i == j { 0.0 } else { gamma.rate(i, j) });
    for j in 0..n {
        a[(j, j)] = -gamma.outflow(j);
    }
    a
}

/// ‖A P‖∞.
pub fn stationarity_residual(gamma: &RateMatrix, p: &[f64]) -> f64 {
    generator(gamma).mul_vec(p).into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Step-size control of [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Relative tolerance per step.
    pub rtol: f64,
    /// Absolute tolerance per step.
    pub atol: f64,
    /// Negative populations below this are reported.
    pub negative_tol: f64,
    /// Step cap.
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-13, negative_tol: 1e-10, max_steps: 1_000_000 }
    }
}

/// Sampled trajectory; one state per requested output time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// States in time order.
    pub states: Vec<PopulationState>,
    /// Accepted integrator steps.
    pub steps: usize,
}

impl Trajectory {
    /// Output times.
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    /// P_k(t) along the trajectory.
    pub fn population(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.populations[k]).collect()
    }

    /// Number of states.
    pub fn population_count(&self) -> usize {
        self.states.first().map_or(0, |s| s.populations.len())
    }
}

// TR-BDF2 with γ = 2 − √2; both stages share the matrix I − d h A.
struct Stepper {
    a: Matrix,
    gamma: f64,
    d: f64,
}

impl Stepper {
    fn new(a: Matrix) -> Self {
        let gamma = 2.0 - sqrt(2.0);
        Self { a, gamma, d: (1.0 - gamma) / (2.0 - gamma) }
    }

    fn step(&self, y: &[f64], h: f64) -> Result<Vec<f64>> {
        let n = y.len();
        let dh = self.d * h;
        let m = Matrix::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 } - dh * self.a[(i, j)]);
        let lu = Lu::new(m).ok_or_else(|| Error::Integration(format!("singular step matrix at h = {h:e}")))?;
        let ay = self.a.mul_vec(y);
        let rhs: Vec<f64> = y.iter().zip(&ay).map(|(v, f)| v + dh * f).collect();
        let yg = lu.solve(&rhs);
        let g = self.gamma;
        let c = 1.0 / (g * (2.0 - g));
        // c·y_γ − c(1 − γ)²·y, using c(1 − (1 − γ)²) = 1
        let rhs: Vec<f64> = yg.iter().zip(y).map(|(a, b)| b + c * (a - b)).collect();
        Ok(lu.solve(&rhs))
    }
}

/// Integrates from `p0` and reports the state at each of `times`
/// (non-decreasing, none before `p0.time`).
pub fn evolve(p0: &PopulationState, gamma: &RateMatrix, times: &[f64], opts: &EvolveOptions) -> Result<Trajectory> {
    let n = gamma.order();
    if p0.populations.len() != n {
        return Err(Error::Config(format!("{} populations for {n} states", p0.populations.len())));
    }
    p0.check(0.0)?;
    if let Some(w) = times.windows(2).find(|w| !(w[1] >= w[0])) {
        return Err(Error::Config(format!("output times not sorted near {}", w[0])));
    }
    if times.first().is_some_and(|&t| !(t >= p0.time)) {
        return Err(Error::Config(format!("output time before initial time {}", p0.time)));
    }
    let a = generator(gamma);
    let fastest = (0..n).map(|i| -a[(i, i)]).fold(0.0, f64::max);
    let stepper = Stepper::new(a);

    let mut t = p0.time;
    let mut y = p0.populations.clone();
    let mut h = if fastest > 0.0 { 1e-3 / fastest } else { f64::INFINITY };
    let mut steps = 0usize;
    let mut states = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Integration(format!("step limit {} reached at t = {t}", opts.max_steps)));
            }
            let hit = h >= target - t;
            let hs = if hit { target - t } else { h };
            let full = stepper.step(&y, hs)?;
            let half = stepper.step(&stepper.step(&y, 0.5 * hs)?, 0.5 * hs)?;
            // step doubling: the halved result is off by about |half − full|/3
            let err = half
                .iter()
                .zip(&full)
                .map(|(a, b)| (a - b).abs() / 3.0 / (opts.atol + opts.rtol * a.abs()))
                .fold(0.0, f64::max);
            if err <= 1.0 {
                t = if hit { target } else { t + hs };
                y = half;
                steps += 1;
                PopulationState { time: t, populations: y.clone() }.check(opts.negative_tol)?;
            }
            let grow = if err == 0.0 { 4.0 } else { (0.9 * pow(err, -1.0 / 3.0)).clamp(0.2, 4.0) };
            if !hit || err > 1.0 {
                h = hs * grow;
            }
            if !(h > 1e-300) {
                return Err(Error::Integration(format!("step size underflow at t = {t}")));
            }
        }
        states.push(PopulationState { time: target, populations: y.clone() });
    }
    Ok(Trajectory { states, steps })
}

/// −dP_k/dt at the first sample, from a one-sided three-point formula.
///
/// P_k stays within rounding of 1 over these samples, so its change is read
/// off the other populations, which carry full relative precision.
pub fn escape_rate_from_decay(trajectory: &Trajectory, k: usize) -> Result<f64> {
    let s = &trajectory.states;
    if s.len() >= 3 {
        let (f0, f2) = (s[0].populations[k], s[2].populations[k]);
        if f0 - f2 > 0.01 * f0 {
            return Err(Error::Resolution(format!("P[{k}] falls by {:.3e} over the first samples", (f0 - f2) / f0)));
        }
    }
    let others: Vec<usize> = (0..trajectory.population_count()).filter(|&j| j != k).collect();
    initial_growth(trajectory, &others)
}

/// d/dt Σ_{j ∈ members} P_j at the first sample, one-sided three-point formula.
pub fn initial_growth(trajectory: &Trajectory, members: &[usize]) -> Result<f64> {
    let s = &trajectory.states;
    if s.len() < 3 {
        return Err(Error::Resolution(format!("{} samples, three needed for the initial slope", s.len())));
    }
    let (h1, h2) = (s[1].time - s[0].time, s[2].time - s[1].time);
    if !(h1 > 0.0 && h2 > 0.0) {
        return Err(Error::Resolution("first samples are not strictly increasing in time".into()));
    }
    // differences first, so equal parts cancel exactly
    let gain = |i: usize| -> f64 { members.iter().map(|&j| s[i].populations[j] - s[0].populations[j]).sum() };
    let (d1, d2) = (gain(1), gain(2));
    Ok((d1 * (h1 + h2) * (h1 + h2) - d2 * h1 * h1) / (h1 * h2 * (h1 + h2)))
}

/// Output times: 0, two short steps for the initial slope, then `n`
/// log-spaced samples up to `t_max`.
pub fn output_times(t_max: f64, fastest_rate: f64, n: usize) -> Vec<f64> {
    if !(t_max > 0.0) {
        return vec![0.0];
    }
    let t1 = if fastest_rate > 0.0 { (1e-4 / fastest_rate).min(1e-3 * t_max) } else { 1e-3 * t_max };
    let mut out = vec![0.0, t1, 2.0 * t1];
    let start = 4.0 * t1;
    if n > 0 && start < t_max {
        let r = log(t_max / start);
        for i in 0..n {
            let f = if n == 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
            out.push(start * exp(r * f));
        }
        *out.last_mut().unwrap() = t_max;
    } else if start >= t_max {
        out.retain(|&t| t < t_max);
        out.push(t_max);
    }
    out
}

/// Stationary distribution(s) of a rate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    /// Closed communicating classes, as sorted basis positions.
    pub classes: Vec<Vec<usize>>,
    /// One normalized distribution per class, zero elsewhere.
    pub distributions: Vec<PopulationState>,
}

impl SteadyState {
    /// True when a single closed class exists.
    pub fn is_irreducible(&self) -> bool {
        self.classes.len() == 1
    }

    /// The unique stationary distribution; errors for a reducible matrix.
    pub fn unique(&self) -> Result<&PopulationState> {
        match self.distributions.as_slice() {
            [p] => Ok(p),
            _ => Err(Error::Domain(format!("rate matrix has {} closed classes", self.classes.len()))),
        }
    }
}

/// Nullspace of the generator by Grassmann-Taksar-Heyman elimination on each
/// closed class. There are no subtractions, so small populations keep full
/// relative accuracy.
pub fn steady_state(gamma: &RateMatrix) -> SteadyState {
    let n = gamma.order();
    let classes = closed_classes(gamma);
    let mut distributions = Vec::with_capacity(classes.len());
    for class in &classes {
        let m = class.len();
        // q[i][j]: rate class[i] → class[j]
        let mut q = Matrix::from_fn(m, |i, j| if i == j { 0.0 } else { gamma.rate(class[j], class[i]) });
        let mut s = vec![0.0; m];
        for k in (1..m).rev() {
            s[k] = (0..k).map(|j| q[(k, j)]).sum();
            for i in 0..k {
                let f = q[(i, k)] / s[k];
                if f != 0.0 {
                    for j in 0..k {
                        q[(i, j)] += f * q[(k, j)];
                    }
                }
            }
        }
        let mut pi = vec![0.0; m];
        pi[0] = 1.0;
        for k in 1..m {
            pi[k] = (0..k).map(|i| pi[i] * q[(i, k)]).sum::<f64>() / s[k];
        }
        let z: f64 = pi.iter().sum();
        let mut p = vec![0.0; n];
        for (i, &c) in class.iter().enumerate() {
            p[c] = pi[i] / z;
        }
        distributions.push(PopulationState { time: f64::INFINITY, populations: p });
    }
    SteadyState { classes, distributions }
}

fn closed_classes(gamma: &RateMatrix) -> Vec<Vec<usize>> {
    let n = gamma.order();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
        for j in 0..n {
            if gamma.rate(j, i) > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &class {
            seen[j] = true;
        }
        let closed = class.iter().all(|&a| (0..n).all(|b| !reach[a][b] || class.contains(&b)));
        if closed {
            out.push(class);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: &[&[f64]]) -> RateMatrix {
        let n = rows.len();
        RateMatrix::new((0..n).collect(), Matrix::from_fn(n, |i, j| rows[i][j])).unwrap()
    }

    // detailed-balance rates between levels e at temperature t
    fn balanced(e: &[f64], k: &[f64], t: f64) -> RateMatrix {
        let n = e.len();
        let mut c = 0;
        let mut g = Matrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let r = k[c % k.len()];
                c += 1;
                // j → i and back, ratio exp(−(E_i − E_j)/T)
                g[(i, j)] = r * exp(-(e[i] - e[j]) / (2.0 * t));
                g[(j, i)] = r * exp((e[i] - e[j]) / (2.0 * t));
            }
        }
        RateMatrix::new((0..n).collect(), g).unwrap()
    }

    #[test]
    fn two_state_ratio() {
        let g = matrix(&[&[0.0, 3.0], &[0.5, 0.0]]);
        let s = steady_state(&g);
        let p = &s.unique().unwrap().populations;
        assert!((p[0] / p[1] - 6.0).abs() < 1e-14);
        assert!(stationarity_residual(&g, p) < 1e-10 * 3.0);
    }

    #[test]
    fn reducible_matrix_reports_each_closed_class() {
        // 0 ↔ 1 closed, 2 ↔ 3 closed, 4 transient into both
        let g = matrix(&[
            &[0.0, 1.0, 0.0, 0.0, 1.0],
            &[2.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0, 0.0],
        ]);
        let s = steady_state(&g);
        assert_eq!(s.classes, vec![vec![0, 1], vec![2, 3]]);
        assert!(!s.is_irreducible() && s.unique().is_err());
        assert!((s.distributions[0].populations[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.distributions[1].populations[4], 0.0);
    }

    #[test]
    fn stiff_steady_state_is_boltzmann_with_small_residual() {
        let e = [0.0, 0.3, 0.01, 0.5, 1.2];
        let g = balanced(&e, &[1e-6, 3.0, 0.2, 1e-4, 40.0], 0.2);
        let p = steady_state(&g).unique().unwrap().populations.clone();
        let eq = boltzmann(&e, 0.2);
        assert!(boltzmann_deviation(&p, &eq, 0.0) < 1e-12);
        assert!(stationarity_residual(&g, &p) < 1e-10 * g.max_rate());
    }

    #[test]
    fn initial_slope_matches_outflow() {
        let e = [0.0, -0.4, 0.2, -0.1];
        let g = balanced(&e, &[1e-3, 5.0, 0.02, 30.0], 0.2);
        let p0 = PopulationState::concentrated(4, 0, 0.0).unwrap();
        let times = output_times(1e3, g.max_rate() * 4.0, 50);
        let tr = evolve(&p0, &g, &times, &EvolveOptions::default()).unwrap();
        let slope = escape_rate_from_decay(&tr, 0).unwrap();
        assert!((slope / g.outflow(0) - 1.0).abs() < 1e-6);
        for s in &tr.states {
            assert!((s.total() - 1.0).abs() < NORM_TOL);
        }
    }

    #[test]
    fn zero_rates_give_zero_slope_and_static_populations() {
        let g = matrix(&[&[0.0, 0.0], &[0.0, 0.0]]);
        let p0 = PopulationState::concentrated(2, 0, 0.0).unwrap();
        let tr = evolve(&p0, &g, &output_times(5.0, 0.0, 4), &EvolveOptions::default()).unwrap();
        assert_eq!(escape_rate_from_decay(&tr, 0).unwrap(), 0.0);
        let last = &tr.states.last().unwrap().populations;
        assert!((last[0] - 1.0).abs() < 1e-14 && last[1] == 0.0);
    }

    #[test]
    fn single_channel_slope_is_the_rate() {
        let g = matrix(&[&[0.0, 0.0], &[0.7, 0.0]]);
        let p0 = PopulationState::concentrated(2, 0, 0.0).unwrap();
        let tr = evolve(&p0, &g, &output_times(10.0, 0.7, 10), &EvolveOptions::default()).unwrap();
        assert!((escape_rate_from_decay(&tr, 0).unwrap() / 0.7 - 1.0).abs() < 1e-6);
        let last = tr.states.last().unwrap();
        assert!((last.populations[0] - exp(-7.0)).abs() < 1e-7);
    }

    #[test]
    fn coarse_start_is_a_resolution_error() {
        let g = matrix(&[&[0.0, 0.0], &[0.7, 0.0]]);
        let p0 = PopulationState::concentrated(2, 0, 0.0).unwrap();
        let tr = evolve(&p0, &g, &[0.0, 1.0, 2.0], &EvolveOptions::default()).unwrap();
        assert!(matches!(escape_rate_from_decay(&tr, 0), Err(Error::Resolution(_))));
        let short = Trajectory { states: tr.states[..2].to_vec(), steps: 0 };
        assert!(matches!(escape_rate_from_decay(&short, 0), Err(Error::Resolution(_))));
    }

    #[test]
    fn long_time_limit_is_the_steady_state_and_a_fixed_point() {
        let e = [0.0, -0.3, 0.25, -0.2, 0.6];
        let g = balanced(&e, &[2e-3, 1.0, 0.05, 20.0, 0.3], 0.15);
        let eq = steady_state(&g).unique().unwrap().clone();
        let p0 = PopulationState::concentrated(5, 0, 0.0).unwrap();
        let tr = evolve(&p0, &g, &[1e5], &EvolveOptions::default()).unwrap();
        assert!(boltzmann_deviation(&tr.states[0].populations, &eq.populations, 0.0) < 1e-6);
        let start = PopulationState { time: 0.0, ..eq.clone() };
        let fixed = evolve(&start, &g, &[1e4], &EvolveOptions::default()).unwrap();
        assert!(boltzmann_deviation(&fixed.states[0].populations, &eq.populations, 0.0) < 1e-9);
    }

    #[test]
    fn output_time_grid() {
        assert_eq!(output_times(0.0, 5.0, 10), vec![0.0]);
        let t = output_times(100.0, 10.0, 20);
        assert_eq!(t.len(), 23);
        assert_eq!(*t.last().unwrap(), 100.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!((t[1] - 1e-5).abs() < 1e-20 && t[2] == 2.0 * t[1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let p0 = PopulationState::concentrated(2, 0, 0.0).unwrap();
        assert!(evolve(&p0, &g, &[1.0, 0.5], &EvolveOptions::default()).is_err());
        assert!(PopulationState::new(0.0, vec![0.5, 0.6]).is_err());
        assert!(PopulationState::new(0.0, vec![1.1, -0.1]).is_err());
        assert!(PopulationState::concentrated(2, 2, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn lyapunov_descends_and_norm_is_kept(
            e in prop::collection::vec(-1.0f64..1.0, 4),
            k in prop::collection::vec(-4.0f64..2.0, 6),
            t in 0.1f64..1.0,
        ) {
            let k: Vec<f64> = k.into_iter().map(|x| pow(10.0, x)).collect();
            let g = balanced(&e, &k, t);
            let eq = boltzmann(&e, t);
            let p0 = PopulationState::concentrated(4, 0, 0.0).unwrap();
            let times = output_times(1e4, g.max_rate() * 4.0, 60);
            let tr = evolve(&p0, &g, &times, &EvolveOptions::default()).unwrap();
            let mut last = f64::INFINITY;
            for s in &tr.states {
                prop_assert!((s.total() - 1.0).abs() < NORM_TOL);
                let l = lyapunov(&s.populations, &eq);
                prop_assert!(l <= last + 1e-9);
                last = l;
            }
        }
    }
}

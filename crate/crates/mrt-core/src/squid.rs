//! rf-SQUID circuit parameters and the discretized one-dimensional Hamiltonian
//!
//! H = 4 E_C N̂² + E_L φ²/2 + E_J cos(φ_cjj/2) cos(φ + φˣ),  N̂ = −i ∂/∂φ,
//!
//! where φˣ = 2πΦˣ/Φ₀ and φ_cjj = 2πΦˣ_CJJ/Φ₀. The kinetic term uses Fourier
//! (spectral) differentiation on a uniform periodic grid.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::linalg::Matrix;
use crate::math::{cos, sin, tan};
use crate::units::{from_joule, ELEMENTARY_CHARGE, FLUX_QUANTUM};
use crate::{Error, Result};

/// Circuit constants and bias fluxes, all SI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquidParams {
    /// Main loop inductance L, H.
    pub inductance: f64,
    /// CJJ loop inductance, H. Only checked against L.
    pub cjj_inductance: f64,
    /// Shunt capacitance C, F.
    pub capacitance: f64,
    /// Critical current of the compound junction, A.
    pub critical_current: f64,
    /// Main loop bias Φˣ, Wb, counted from Φ₀/2 (Φˣ = 0 is the degeneracy point).
    pub flux_bias: f64,
    /// CJJ bias Φˣ_CJJ, Wb.
    pub cjj_bias: f64,
}

/// Non-fatal remarks about a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamWarning {
    /// L_CJJ/L is not small, so freezing the CJJ phase is questionable.
    LargeCjjInductance {
        /// The ratio L_CJJ/L.
        ratio: f64,
    },
}

/// Charging, inductive and Josephson energies, internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    /// E_C = e²/2C.
    pub charging: f64,
    /// E_L = (Φ₀/2π)²/L.
    pub inductive: f64,
    /// E_J = (Φ₀/2π) I_C.
    pub josephson: f64,
}

impl SquidParams {
    /// Checks the parameter domain.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("inductance", self.inductance),
            ("capacitance", self.capacitance),
            ("critical current", self.critical_current),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.cjj_inductance >= 0.0) {
            return Err(Error::Domain(format!(
                "CJJ inductance must be non-negative, got {}",
                self.cjj_inductance
            )));
        }
        if !self.flux_bias.is_finite() || !self.cjj_bias.is_finite() {
            return Err(Error::Domain("bias fluxes must be finite".into()));
        }
        Ok(())
    }

    /// Remarks that do not prevent a calculation.
    pub fn warnings(&self) -> Option<ParamWarning> {
        let ratio = self.cjj_inductance / self.inductance;
        (ratio > 0.2).then_some(ParamWarning::LargeCjjInductance { ratio })
    }

    /// E_C, E_L and E_J in internal units.
    pub fn energies(&self) -> Result<Energies> {
        self.validate()?;
        let phi = FLUX_QUANTUM / (2.0 * PI);
        Ok(Energies {
            charging: from_joule(ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * self.capacitance)),
            inductive: from_joule(phi * phi / self.inductance),
            josephson: from_joule(phi * self.critical_current),
        })
    }

    /// Effective barrier amplitude E_J cos(φ_cjj/2).
    pub fn effective_josephson(&self) -> Result<f64> {
        let phi_cjj = 2.0 * PI * self.cjj_bias / FLUX_QUANTUM;
        Ok(self.energies()?.josephson * cos(0.5 * phi_cjj))
    }

    /// Reduced main-loop bias φˣ = 2πΦˣ/Φ₀.
    pub fn reduced_bias(&self) -> f64 {
        2.0 * PI * self.flux_bias / FLUX_QUANTUM
    }

    /// Same circuit at a different main-loop bias.
    pub fn with_flux_bias(&self, flux_bias: f64) -> Self {
        Self { flux_bias, ..*self }
    }
}

/// Uniform periodic phase grid `φ_j = min + j (max − min)/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    /// Left end, rad.
    pub min_phase: f64,
    /// Right end (excluded), rad.
    pub max_phase: f64,
    /// Number of points, even and at least 128.
    pub n_points: usize,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self { min_phase: -1.5 * PI, max_phase: 1.5 * PI, n_points: 256 }
    }
}

impl PhaseGrid {
    /// Checks the grid invariants.
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 128 || self.n_points % 2 != 0 {
            return Err(Error::Config(format!(
                "phase grid needs an even number of points >= 128, got {}",
                self.n_points
            )));
        }
        if !(self.max_phase > self.min_phase) {
            return Err(Error::Config("phase grid must have max_phase > min_phase".into()));
        }
        Ok(())
    }

    /// Spacing between points.
    pub fn step(&self) -> f64 {
        (self.max_phase - self.min_phase) / self.n_points as f64
    }

    /// Grid coordinates.
    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.n_points).map(|j| self.min_phase + h * j as f64).collect()
    }
}

/// Potential U(φ) = E_L φ²/2 + E_J' cos(φ + φˣ) on a set of points.
pub fn potential(params: &SquidParams, phases: &[f64]) -> Result<Vec<f64>> {
    let el = params.energies()?.inductive;
    let ej = params.effective_josephson()?;
    let px = params.reduced_bias();
    Ok(phases.iter().map(|&p| 0.5 * el * p * p + ej * cos(p + px)).collect())
}

/// Fourier second-derivative matrix on a periodic grid of even order.
pub fn second_derivative(grid: &PhaseGrid) -> Matrix {
    let n = grid.n_points;
    let h = 2.0 * PI / n as f64;
    let r = 2.0 * PI / (grid.max_phase - grid.min_phase);
    let scale = r * r;
    let diag = -PI * PI / (3.0 * h * h) - 1.0 / 6.0;
    Matrix::from_fn(n, |i, j| {
        if i == j {
            return scale * diag;
        }
        let k = i.abs_diff(j);
        let s = sin(0.5 * h * k as f64);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        -scale * 0.5 * sign / (s * s)
    })
}

/// Fourier first-derivative matrix on a periodic grid of even order.
pub fn first_derivative(grid: &PhaseGrid) -> Matrix {
    let n = grid.n_points;
    let h = 2.0 * PI / n as f64;
    let scale = 2.0 * PI / (grid.max_phase - grid.min_phase);
    Matrix::from_fn(n, |i, j| {
        if i == j {
            return 0.0;
        }
        let k = i as f64 - j as f64;
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        scale * 0.5 * sign / tan(0.5 * h * k)
    })
}

/// The discretized Hamiltonian split into kinetic matrix and potential.
#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian {
    /// Grid the operator lives on.
    pub grid: PhaseGrid,
    /// Grid coordinates φ_j.
    pub phases: Vec<f64>,
    /// −4E_C ∂²/∂φ².
    pub kinetic: Matrix,
    /// ∂/∂φ, used for charge matrix elements.
    pub derivative: Matrix,
    /// U(φ_j).
    pub potential: Vec<f64>,
    /// Circuit energies.
    pub energies: Energies,
    /// Circuit parameters the operator was built from.
    pub params: SquidParams,
}

impl DiscreteHamiltonian {
    /// Kinetic matrix plus a (possibly modified) potential on the diagonal.
    pub fn with_potential(&self, u: &[f64]) -> Matrix {
        let mut m = self.kinetic.clone();
        for (i, v) in u.iter().enumerate() {
            m[(i, i)] += v;
        }
        m
    }

    /// The full Hamiltonian matrix.
    pub fn dense(&self) -> Matrix {
        self.with_potential(&self.potential)
    }
}

/// Builds the Hamiltonian on `grid`.
///
/// Rejects grids whose end points are not far up the parabolic walls: the
/// potential at both ends must exceed the lowest minimum by at least ten
/// times the barrier height (or ten harmonic quanta without a barrier).
pub fn build_hamiltonian(params: &SquidParams, grid: &PhaseGrid) -> Result<DiscreteHamiltonian> {
    grid.validate()?;
    let energies = params.energies()?;
    let phases = grid.points();
    let u = potential(params, &phases)?;
    let umin = u.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = match find_barrier(&u) {
        Ok(b) => b.top - umin,
        Err(_) => crate::math::sqrt(8.0 * energies.charging * energies.inductive),
    };
    let ends = [
        potential(params, &[grid.min_phase])?[0],
        potential(params, &[grid.max_phase])?[0],
    ];
    if ends.iter().any(|&e| e - umin < 10.0 * scale) {
        return Err(Error::Config(format!(
            "phase grid [{}, {}] does not reach far enough up the potential walls",
            grid.min_phase, grid.max_phase
        )));
    }
    let mut kinetic = second_derivative(grid);
    let ec4 = -4.0 * energies.charging;
    for i in 0..grid.n_points {
        for j in 0..grid.n_points {
            kinetic[(i, j)] *= ec4;
        }
    }
    Ok(DiscreteHamiltonian {
        grid: *grid,
        phases,
        kinetic,
        derivative: first_derivative(grid),
        potential: u,
        energies,
        params: *params,
    })
}

/// Location of the two minima and the barrier between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barrier {
    /// Grid index of the left minimum.
    pub left_min: usize,
    /// Grid index of the right minimum.
    pub right_min: usize,
    /// Grid index of the barrier maximum.
    pub index: usize,
    /// Barrier top energy (parabolic interpolation through the grid maximum).
    pub top: f64,
}

/// Finds the double-well structure of a sampled potential.
pub fn find_barrier(u: &[f64]) -> Result<Barrier> {
    let n = u.len();
    let minima: Vec<usize> = (1..n - 1).filter(|&i| u[i] < u[i - 1] && u[i] <= u[i + 1]).collect();
    if minima.len() < 2 {
        return Err(Error::Shape("potential has a single well".into()));
    }
    if minima.len() > 2 {
        return Err(Error::Shape(format!("potential has {} local minima", minima.len())));
    }
    let (l, r) = (minima[0], minima[1]);
    let index = (l..=r).max_by(|&i, &j| u[i].total_cmp(&u[j])).unwrap_or(l);
    let top = if index > l && index < r {
        let (a, b, c) = (u[index - 1], u[index], u[index + 1]);
        let den = a - 2.0 * b + c;
        if den < 0.0 {
            b - 0.125 * (a - c) * (a - c) / den
        } else {
            b
        }
    } else {
        u[index]
    };
    Ok(Barrier { left_min: l, right_min: r, index, top })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lowest_eigenpairs;
    use crate::units::mphi0_to_weber;

    pub(crate) fn table_params() -> SquidParams {
        SquidParams {
            inductance: 250e-12,
            cjj_inductance: 14e-12,
            capacitance: 110e-15,
            critical_current: 2.3e-6,
            flux_bias: 0.0,
            cjj_bias: 0.24 * FLUX_QUANTUM,
        }
    }

    #[test]
    fn derived_energies_match_table_values() {
        let e = table_params().energies().unwrap();
        assert!((e.charging - 0.176).abs() < 1e-3);
        assert!((e.inductive - 654.0).abs() < 1.0);
        assert!((e.josephson - 1142.4).abs() < 1.0);
    }

    #[test]
    fn rejects_non_positive_constants() {
        let mut p = table_params();
        p.capacitance = 0.0;
        assert!(matches!(p.energies(), Err(Error::Domain(_))));
        p = table_params();
        p.inductance = -1e-12;
        assert!(p.validate().is_err());
        p = table_params();
        p.cjj_inductance = 100e-12;
        assert!(p.warnings().is_some());
        assert!(table_params().warnings().is_none());
    }

    #[test]
    fn hamiltonian_is_exactly_symmetric() {
        let h = build_hamiltonian(&table_params(), &PhaseGrid::default()).unwrap();
        assert!(h.dense().is_symmetric());
    }

    #[test]
    fn derivative_matrices_are_exact_on_fourier_modes() {
        let grid = PhaseGrid { min_phase: -PI, max_phase: PI, n_points: 128 };
        let x = grid.points();
        let f: Vec<f64> = x.iter().map(|&p| sin(3.0 * p)).collect();
        let d1 = first_derivative(&grid).mul_vec(&f);
        let d2 = second_derivative(&grid).mul_vec(&f);
        for (i, &p) in x.iter().enumerate() {
            assert!((d1[i] - 3.0 * cos(3.0 * p)).abs() < 1e-10);
            assert!((d2[i] + 9.0 * sin(3.0 * p)).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_limit() {
        let mut p = table_params();
        p.critical_current = 1e-30;
        let grid = PhaseGrid::default();
        let h = build_hamiltonian(&p, &grid).unwrap();
        let e = h.energies;
        let w = crate::math::sqrt(8.0 * e.charging * e.inductive);
        let ep = lowest_eigenpairs(&h.dense(), f64::INFINITY, 6);
        for (k, v) in ep.values.iter().enumerate() {
            let exact = w * (k as f64 + 0.5);
            assert!(((v - exact) / exact).abs() < 1e-6, "level {k}: {v} vs {exact}");
        }
    }

    #[test]
    fn degeneracy_point_potential_is_even() {
        let p = table_params();
        let xs = [0.3, 1.1, 2.0];
        let u = potential(&p, &xs).unwrap();
        let um = potential(&p, &xs.map(|x: f64| -x)).unwrap();
        for (a, b) in u.iter().zip(&um) {
            assert!((a - b).abs() < 1e-9 * a.abs());
        }
    }

    #[test]
    fn grid_must_cover_the_walls() {
        let narrow = PhaseGrid { min_phase: -2.0, max_phase: 2.0, n_points: 256 };
        assert!(matches!(build_hamiltonian(&table_params(), &narrow), Err(Error::Config(_))));
        let odd = PhaseGrid { n_points: 255, ..PhaseGrid::default() };
        assert!(build_hamiltonian(&table_params(), &odd).is_err());
    }

    #[test]
    fn barrier_found_between_minima() {
        let p = table_params().with_flux_bias(mphi0_to_weber(1.0));
        let grid = PhaseGrid::default();
        let u = potential(&p, &grid.points()).unwrap();
        let b = find_barrier(&u).unwrap();
        assert!(b.left_min < b.index && b.index < b.right_min);
        assert!(b.top >= u[b.index]);
        let flat = [1.0, 0.5, 0.2, 0.5, 1.0];
        assert!(matches!(find_barrier(&flat), Err(Error::Shape(_))));
    }
}

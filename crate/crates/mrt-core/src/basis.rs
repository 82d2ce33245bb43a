//! Left-right basis of well-localized metastable states.
//!
//! Each well is diagonalized on the full grid with the opposite side of the
//! potential raised to the barrier top ("filled" well), which keeps the
//! state's tail under the barrier intact. Interwell couplings Δ_mn come from
//! a pairwise symmetric orthogonalization of each opposite-well pair:
//!
//!   Δ_mn = −2 (h_mn − s h̄) / (1 − s²),  s = ⟨m|n⟩,  h̄ = (h_mm + h_nn)/2.
//!
//! Left states carry even labels 0, 2, 4, … and right states odd labels.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::linalg::{dot, lowest_eigenpairs, Matrix};
use crate::squid::{build_hamiltonian, find_barrier, DiscreteHamiltonian, PhaseGrid, SquidParams};
use crate::units::{weber_to_mphi0, ELEMENTARY_CHARGE, FLUX_QUANTUM};
use crate::{Error, Result};

/// Which well a state lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Well {
    /// φ < barrier, even labels.
    Left,
    /// φ > barrier, odd labels.
    Right,
}

impl Well {
    /// Lower-case name.
    pub fn name(self) -> &'static str {
        match self {
            Well::Left => "left",
            Well::Right => "right",
        }
    }

    /// Label of the `level`-th state of this well.
    pub fn label(self, level: usize) -> usize {
        match self {
            Well::Left => 2 * level,
            Well::Right => 2 * level + 1,
        }
    }

    /// Well of a label.
    pub fn of_label(label: usize) -> Self {
        if label % 2 == 0 {
            Well::Left
        } else {
            Well::Right
        }
    }
}

/// One localized state.
#[derive(Debug, Clone, PartialEq)]
pub struct WellState {
    /// Well the state belongs to.
    pub well: Well,
    /// Level index inside the well, 0 = ground.
    pub level: usize,
    /// Global label (even left, odd right).
    pub label: usize,
    /// E_n = ⟨n|H|n⟩.
    pub energy: f64,
    /// φ_n = ⟨n|φ|n⟩.
    pub phase_mean: f64,
    /// Normalized wavefunction on the phase grid (largest component positive).
    pub wavefunction: Vec<f64>,
}

/// Metastable states and all matrix elements between them.
#[derive(Debug, Clone)]
pub struct LrBasis {
    /// States sorted by label.
    pub states: Vec<WellState>,
    tunneling: Matrix,
    phase: Matrix,
    charge: Matrix,
    overlap: Matrix,
    /// Barrier top energy.
    pub barrier_top: f64,
    /// Sub-barrier levels found in the left and right well.
    pub available: (usize, usize),
    /// Main loop inductance, H.
    pub inductance: f64,
    /// Capacitance, F.
    pub capacitance: f64,
    /// E_C.
    pub charging_energy: f64,
    /// Main loop bias, Wb.
    pub flux_bias: f64,
}

impl LrBasis {
    /// Number of states.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// True when there are no states.
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Position of the state with `label`.
    pub fn index_of(&self, label: usize) -> Option<usize> {
        self.states.iter().position(|s| s.label == label)
    }

    /// Position of `label` or an error.
    pub fn require(&self, label: usize) -> Result<usize> {
        self.index_of(label).ok_or(Error::UnknownState(label))
    }

    /// Labels in storage order.
    pub fn labels(&self) -> Vec<usize> {
        self.states.iter().map(|s| s.label).collect()
    }

    /// Labels of one well, ascending.
    pub fn well_labels(&self, well: Well) -> Vec<usize> {
        self.states.iter().filter(|s| s.well == well).map(|s| s.label).collect()
    }

    /// True when the two positions belong to the same well.
    pub fn same_well(&self, i: usize, j: usize) -> bool {
        self.states[i].well == self.states[j].well
    }

    /// E_i.
    pub fn energy(&self, i: usize) -> f64 {
        self.states[i].energy
    }

    /// ω_ij = E_i − E_j.
    pub fn omega(&self, i: usize, j: usize) -> f64 {
        self.states[i].energy - self.states[j].energy
    }

    /// Δ_ij (real, symmetric, zero within a well).
    pub fn delta(&self, i: usize, j: usize) -> f64 {
        self.tunneling[(i, j)]
    }

    /// φ_ij, zero for opposite wells.
    pub fn phase(&self, i: usize, j: usize) -> f64 {
        self.phase[(i, j)]
    }

    /// Imaginary part of N_ij; N is purely imaginary and Hermitian.
    pub fn charge_number(&self, i: usize, j: usize) -> f64 {
        self.charge[(i, j)]
    }

    /// Imaginary part of q_ij = 2e N_ij, C.
    pub fn charge(&self, i: usize, j: usize) -> f64 {
        2.0 * ELEMENTARY_CHARGE * self.charge[(i, j)]
    }

    /// I_ij = Φ₀ φ_ij / (2πL), A.
    pub fn current_element(&self, i: usize, j: usize) -> f64 {
        FLUX_QUANTUM * self.phase[(i, j)] / (2.0 * PI * self.inductance)
    }

    /// I_i, A.
    pub fn current(&self, i: usize) -> f64 {
        self.current_element(i, i)
    }

    /// Dimensionless coupling L|I_i − I_j|/Φ₀ = |φ_i − φ_j|/2π.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        (self.phase[(i, i)] - self.phase[(j, j)]).abs() / (2.0 * PI)
    }

    /// Raw overlap ⟨i|j⟩ of the unorthogonalized states.
    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        self.overlap[(i, j)]
    }

    /// Largest |⟨m|n⟩| over opposite-well pairs.
    pub fn max_cross_overlap(&self) -> f64 {
        let n = self.len();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if !self.same_well(i, j) {
                    m = m.max(self.overlap[(i, j)].abs());
                }
            }
        }
        m
    }

    /// Bias in mΦ₀.
    pub fn bias_mphi0(&self) -> f64 {
        weber_to_mphi0(self.flux_bias)
    }
}

/// How many levels to take from each well.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelRequest {
    /// Exactly this many per well; fails if a well has fewer.
    Exact {
        /// Left-well count.
        left: usize,
        /// Right-well count.
        right: usize,
    },
    /// All sub-barrier levels, at most this many per well.
    UpTo(usize),
}

struct WellSolution {
    energies: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    available: usize,
    // U − U_filled, non-zero on the far side only
    correction: Vec<f64>,
}

fn solve_one_well(h: &DiscreteHamiltonian, well: Well, split: usize, top: f64, cap: usize) -> WellSolution {
    let u = &h.potential;
    let filled: Vec<f64> = u
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let far = match well {
                Well::Left => j > split,
                Well::Right => j < split,
            };
            if far {
                v.max(top)
            } else {
                v
            }
        })
        .collect();
    let ep = lowest_eigenpairs(&h.with_potential(&filled), top, cap);
    let mut vectors = ep.vectors;
    for v in &mut vectors {
        let big = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0);
        if big < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let correction = u.iter().zip(&filled).map(|(a, b)| a - b).collect();
    WellSolution { energies: ep.values, vectors, available: ep.count_below, correction }
}

fn weighted(a: &[f64], w: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(w).zip(b).map(|((x, y), z)| x * y * z).sum()
}

/// Builds the left-right basis from a discretized Hamiltonian.
pub fn solve_wells(h: &DiscreteHamiltonian, request: LevelRequest) -> Result<LrBasis> {
    let barrier = find_barrier(&h.potential)?;
    let top = barrier.top;
    let cap = match request {
        LevelRequest::Exact { left, right } => left.max(right),
        LevelRequest::UpTo(k) => k,
    };
    let left = solve_one_well(h, Well::Left, barrier.index, top, cap);
    let right = solve_one_well(h, Well::Right, barrier.index, top, cap);
    let (nl, nr) = match request {
        LevelRequest::Exact { left: l, right: r } => {
            if l > left.available {
                return Err(Error::LevelCount { well: "left", available: left.available, requested: l });
            }
            if r > right.available {
                return Err(Error::LevelCount { well: "right", available: right.available, requested: r });
            }
            (l, r)
        }
        LevelRequest::UpTo(k) => (left.available.min(k), right.available.min(k)),
    };

    // interleave by label
    let mut picks: Vec<(Well, usize)> = Vec::with_capacity(nl + nr);
    for k in 0..nl.max(nr) {
        if k < nl {
            picks.push((Well::Left, k));
        }
        if k < nr {
            picks.push((Well::Right, k));
        }
    }
    let sol = |w: Well| if w == Well::Left { &left } else { &right };
    let n = picks.len();
    let phases = &h.phases;
    let mut states = Vec::with_capacity(n);
    let mut diag_h = vec![0.0; n];
    for (i, &(w, k)) in picks.iter().enumerate() {
        let s = sol(w);
        let v = &s.vectors[k];
        diag_h[i] = s.energies[k] + weighted(v, &s.correction, v);
        states.push(WellState {
            well: w,
            level: k,
            label: w.label(k),
            energy: diag_h[i],
            phase_mean: weighted(v, phases, v),
            wavefunction: v.clone(),
        });
    }

    let mut tunneling = Matrix::zeros(n);
    let mut phase = Matrix::zeros(n);
    let mut charge = Matrix::zeros(n);
    let mut overlap = Matrix::identity(n);
    let derivs: Vec<Vec<f64>> = states.iter().map(|s| h.derivative.mul_vec(&s.wavefunction)).collect();
    for i in 0..n {
        phase[(i, i)] = states[i].phase_mean;
        for j in i + 1..n {
            let (a, b) = (&states[i], &states[j]);
            // N_ij = −i⟨i|∂|j⟩
            let nij = -dot(&a.wavefunction, &derivs[j]);
            charge[(i, j)] = nij;
            charge[(j, i)] = -nij;
            if a.well == b.well {
                let p = weighted(&a.wavefunction, phases, &b.wavefunction);
                phase[(i, j)] = p;
                phase[(j, i)] = p;
                continue;
            }
            let s = dot(&a.wavefunction, &b.wavefunction);
            overlap[(i, j)] = s;
            overlap[(j, i)] = s;
            let (sa, ka) = (sol(a.well), a.level);
            let (sb, kb) = (sol(b.well), b.level);
            // ⟨a|H|b⟩ evaluated through each filled-well eigen-equation, averaged
            let hab = 0.5
                * ((sa.energies[ka] + sb.energies[kb]) * s
                    + weighted(&a.wavefunction, &sa.correction, &b.wavefunction)
                    + weighted(&a.wavefunction, &sb.correction, &b.wavefunction));
            let d = -2.0 * (hab - 0.5 * s * (diag_h[i] + diag_h[j])) / (1.0 - s * s);
            tunneling[(i, j)] = d;
            tunneling[(j, i)] = d;
        }
    }

    Ok(LrBasis {
        states,
        tunneling,
        phase,
        charge,
        overlap,
        barrier_top: top,
        available: (left.available, right.available),
        inductance: h.params.inductance,
        capacitance: h.params.capacitance,
        charging_energy: h.energies.charging,
        flux_bias: h.params.flux_bias,
    })
}

/// Builds the Hamiltonian and solves the wells in one go.
pub fn basis_at(params: &SquidParams, grid: &PhaseGrid, request: LevelRequest) -> Result<LrBasis> {
    let h = build_hamiltonian(params, grid)?;
    solve_wells(&h, request)
}

fn at_bias(bias: f64, e: Error) -> Error {
    Error::AtBias { bias_mphi0: weber_to_mphi0(bias), source: Box::new(e) }
}

/// One basis per bias (Wb), labels tracked from point to point.
pub fn bias_sweep_basis(
    params: &SquidParams,
    grid: &PhaseGrid,
    biases: &[f64],
    request: LevelRequest,
) -> Result<Vec<LrBasis>> {
    if biases.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("bias list must be sorted".into()));
    }
    let mut out = Vec::with_capacity(biases.len());
    for &b in biases {
        let basis = basis_at(&params.with_flux_bias(b), grid, request).map_err(|e| at_bias(b, e))?;
        out.push(basis);
    }
    track_labels(&mut out);
    Ok(out)
}

/// Keeps labels continuous along a sweep: within each well, states of a
/// point are matched to the previous point by largest wavefunction overlap
/// and relabelled if the energy ordering disagrees. Returns the number of
/// relabelled points.
pub fn track_labels(sweep: &mut [LrBasis]) -> usize {
    let mut changed = 0;
    for k in 1..sweep.len() {
        let (head, tail) = sweep.split_at_mut(k);
        let prev = &head[k - 1];
        let next = &mut tail[0];
        let mut moved = false;
        for well in [Well::Left, Well::Right] {
            let pi: Vec<usize> = (0..prev.len()).filter(|&i| prev.states[i].well == well).collect();
            let ni: Vec<usize> = (0..next.len()).filter(|&i| next.states[i].well == well).collect();
            for &j in &ni {
                let best = pi.iter().copied().max_by(|&a, &b| {
                    let oa = dot(&prev.states[a].wavefunction, &next.states[j].wavefunction).abs();
                    let ob = dot(&prev.states[b].wavefunction, &next.states[j].wavefunction).abs();
                    oa.total_cmp(&ob)
                });
                if let Some(b) = best {
                    let level = prev.states[b].level;
                    if level != next.states[j].level && level < ni.len() {
                        next.states[j].level = level;
                        next.states[j].label = well.label(level);
                        moved = true;
                    }
                }
            }
        }
        if moved {
            reorder_by_label(next);
            changed += 1;
        }
    }
    changed
}

fn reorder_by_label(b: &mut LrBasis) {
    let n = b.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| b.states[i].label);
    let permute = |m: &Matrix| Matrix::from_fn(n, |i, j| m[(order[i], order[j])]);
    b.tunneling = permute(&b.tunneling);
    b.phase = permute(&b.phase);
    b.charge = permute(&b.charge);
    b.overlap = permute(&b.overlap);
    let states = order.iter().map(|&i| b.states[i].clone()).collect();
    b.states = states;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;
    use crate::units::{mphi0_to_weber, ENERGY_UNIT};

    fn params(bias_mphi0: f64) -> SquidParams {
        SquidParams {
            inductance: 250e-12,
            cjj_inductance: 14e-12,
            capacitance: 110e-15,
            critical_current: 2.3e-6,
            flux_bias: mphi0_to_weber(bias_mphi0),
            cjj_bias: 0.24 * FLUX_QUANTUM,
        }
    }

    #[test]
    fn symmetric_well_doublet() {
        let h = build_hamiltonian(&params(0.0), &PhaseGrid::default()).unwrap();
        let b = solve_wells(&h, LevelRequest::Exact { left: 1, right: 1 }).unwrap();
        let full = symmetric_eigenvalues(&h.dense());
        let split = full[1] - full[0];
        let barrier = b.barrier_top - full[0];
        assert!((b.energy(0) - b.energy(1)).abs() < 1e-8 * barrier);
        assert!(((b.delta(0, 1) - split) / split).abs() < 1e-3, "{} vs {split}", b.delta(0, 1));
    }

    #[test]
    fn basis_algebra() {
        let b = basis_at(&params(1.3), &PhaseGrid::default(), LevelRequest::UpTo(3)).unwrap();
        let n = b.len();
        let qmax = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| b.charge(i, j).abs())
            .fold(0.0, f64::max);
        for i in 0..n {
            assert!(b.charge(i, i).abs() <= 1e-10 * qmax);
            for j in 0..n {
                assert_eq!(b.delta(i, j), b.delta(j, i));
                assert_eq!(b.charge(i, j), -b.charge(j, i));
                assert_eq!(b.current_element(i, j), b.current_element(j, i));
                if b.same_well(i, j) {
                    assert_eq!(b.delta(i, j), 0.0);
                } else {
                    assert_eq!(b.current_element(i, j), 0.0);
                }
            }
        }
        let (l, r) = (b.require(0).unwrap(), b.require(1).unwrap());
        assert!(b.current(l) * b.current(r) < 0.0);
        for s in &b.states {
            assert_eq!(s.label % 2 == 0, s.well == Well::Left);
            assert!(s.energy < b.barrier_top);
        }
    }

    #[test]
    fn energy_slope_is_minus_the_current() {
        let grid = PhaseGrid::default();
        let (x, dx) = (1.0, 0.01);
        let at = |m: f64| basis_at(&params(m), &grid, LevelRequest::UpTo(3)).unwrap();
        let (b, lo, hi) = (at(x), at(x - dx), at(x + dx));
        // the top level of a well sits close enough to the barrier that its
        // localized state is not an eigenstate, so only the lower two per well
        let mut worst = 0.0f64;
        for s in b.states.iter().filter(|s| s.level < 2) {
            let i = b.require(s.label).unwrap();
            let de = (hi.energy(hi.require(s.label).unwrap()) - lo.energy(lo.require(s.label).unwrap())) * ENERGY_UNIT;
            let slope = de / (2.0 * mphi0_to_weber(dx));
            worst = worst.max((slope / -b.current(i) - 1.0).abs());
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn states_in_one_well_are_orthonormal() {
        let b = basis_at(&params(2.0), &PhaseGrid::default(), LevelRequest::UpTo(3)).unwrap();
        for i in 0..b.len() {
            for j in 0..b.len() {
                if b.same_well(i, j) {
                    let o = dot(&b.states[i].wavefunction, &b.states[j].wavefunction);
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((o - e).abs() < 1e-10);
                }
            }
        }
        assert!(b.max_cross_overlap() < 0.1);
    }

    #[test]
    fn level_count_error_names_available() {
        let h = build_hamiltonian(&params(0.0), &PhaseGrid::default()).unwrap();
        match solve_wells(&h, LevelRequest::Exact { left: 40, right: 1 }) {
            Err(Error::LevelCount { well, available, requested }) => {
                assert_eq!(well, "left");
                assert_eq!(requested, 40);
                assert!(available >= 2 && available < 40);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_well_is_a_shape_error() {
        let mut p = params(0.0);
        p.cjj_bias = 0.45 * FLUX_QUANTUM;
        let h = build_hamiltonian(&p, &PhaseGrid::default()).unwrap();
        assert!(matches!(solve_wells(&h, LevelRequest::UpTo(2)), Err(Error::Shape(_))));
    }

    #[test]
    fn refinement_stability() {
        let req = LevelRequest::UpTo(3);
        let base = basis_at(&params(1.0), &PhaseGrid::default(), req).unwrap();
        let fine = basis_at(&params(1.0), &PhaseGrid { n_points: 512, ..PhaseGrid::default() }, req).unwrap();
        let wide = basis_at(
            &params(1.0),
            &PhaseGrid { min_phase: -1.8 * PI, max_phase: 1.8 * PI, n_points: 320 },
            req,
        )
        .unwrap();
        for other in [&fine, &wide] {
            assert_eq!(other.labels(), base.labels());
            for i in 0..base.len() {
                let e = base.energy(i);
                assert!(((other.energy(i) - e) / e).abs() < 1e-4);
                let d = base.delta(0, i);
                if d != 0.0 {
                    assert!(((other.delta(0, i) - d) / d).abs() < 1e-4, "Δ0{i}");
                }
            }
        }
    }

    #[test]
    fn sweep_keeps_labels() {
        let biases: Vec<f64> = (0..6).map(|k| mphi0_to_weber(0.5 * k as f64)).collect();
        let sweep = bias_sweep_basis(&params(0.0), &PhaseGrid::default(), &biases, LevelRequest::UpTo(3)).unwrap();
        for b in &sweep {
            for w in b.labels().windows(2) {
                assert!(w[0] < w[1]);
            }
        }
        let unsorted = [biases[1], biases[0]];
        assert!(bias_sweep_basis(&params(0.0), &PhaseGrid::default(), &unsorted, LevelRequest::UpTo(1)).is_err());
    }
}

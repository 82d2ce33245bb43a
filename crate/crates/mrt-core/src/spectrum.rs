//! Tabulated spectra and the convolution primitives built on them.
//!
//! Every integral over frequency in this crate is written as ∫dω/2π, so the
//! helpers here include the 1/2π.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math::{atan2, ceil, exp, floor, log1p, sqrt};
use crate::noise::PairNoiseParams;
use crate::{Error, Result};

/// Uniform frequency lattice `min + k·spacing`, k = 0..n_points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    /// First node.
    pub min: f64,
    /// Node spacing.
    pub spacing: f64,
    /// Number of nodes.
    pub n_points: usize,
}

impl FrequencyGrid {
    /// Grid with `n_points` nodes from `min` to `max` inclusive.
    pub fn new(min: f64, max: f64, n_points: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) || n_points < 2 {
            return Err(Error::Config(format!("bad frequency grid [{min}, {max}] with {n_points} points")));
        }
        Ok(Self { min, spacing: (max - min) / (n_points - 1) as f64, n_points })
    }

    /// Lattice through `anchor` with the given spacing, covering [lo, hi].
    pub fn anchored(anchor: f64, spacing: f64, lo: f64, hi: f64) -> Self {
        let below = ceil((anchor - lo).max(0.0) / spacing) as usize;
        let above = ceil((hi - anchor).max(0.0) / spacing) as usize;
        Self { min: anchor - below as f64 * spacing, spacing, n_points: below + above + 1 }
    }

    /// Grid satisfying the resolution rules for a set of transition
    /// frequencies: span [min ω − 10W − 20T, max ω + 10W + 20T] and spacing
    /// min(widths, T)/8, anchored at `anchor`.
    pub fn covering(anchor: f64, omegas: &[f64], max_width: f64, temperature: f64, min_width: f64) -> Self {
        let (lo, hi) = span(omegas, max_width, temperature);
        Self::anchored(anchor, min_width.min(temperature) / 8.0, lo, hi)
    }

    /// Checks the resolution rules, see [`FrequencyGrid::covering`].
    pub fn check(&self, omegas: &[f64], max_width: f64, temperature: f64, min_width: f64) -> Result<()> {
        let (lo, hi) = span(omegas, max_width, temperature);
        let tol = 1e-9 * self.spacing;
        if self.min > lo + tol || self.max() < hi - tol {
            return Err(Error::Resolution(format!(
                "grid [{}, {}] does not span [{lo}, {hi}]",
                self.min,
                self.max()
            )));
        }
        let need = min_width.min(temperature) / 8.0;
        if self.spacing > need * (1.0 + 1e-12) {
            return Err(Error::Resolution(format!("spacing {} exceeds {need}", self.spacing)));
        }
        Ok(())
    }

    /// Last node.
    pub fn max(&self) -> f64 {
        self.point(self.n_points - 1)
    }

    /// Node `i`.
    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing
    }

    /// All nodes.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.point(i)).collect()
    }

    /// Same span, half the spacing.
    pub fn refined(&self) -> Self {
        Self { min: self.min, spacing: self.spacing / 2.0, n_points: 2 * self.n_points - 1 }
    }
}

fn span(omegas: &[f64], max_width: f64, temperature: f64) -> (f64, f64) {
    let lo = omegas.iter().copied().fold(0.0f64, f64::min);
    let hi = omegas.iter().copied().fold(0.0f64, f64::max);
    let pad = 10.0 * max_width + 20.0 * temperature;
    (lo - pad, hi + pad)
}

/// A real function of frequency tabulated on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpectrum {
    /// Lattice.
    pub grid: FrequencyGrid,
    /// Values at the nodes.
    pub values: Vec<f64>,
}

impl SampledSpectrum {
    /// Tabulates `f`.
    pub fn from_fn(grid: FrequencyGrid, mut f: impl FnMut(f64) -> f64) -> Self {
        let values = (0..grid.n_points).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    /// Wraps existing values.
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::Config(format!("{} values for {} nodes", values.len(), grid.n_points)));
        }
        Ok(Self { grid, values })
    }

    /// Linear interpolation, zero outside the grid.
    pub fn eval(&self, omega: f64) -> f64 {
        let t = (omega - self.grid.min) / self.grid.spacing;
        let n = self.values.len();
        if !(t >= 0.0) || t > (n - 1) as f64 {
            return 0.0;
        }
        let i = (floor(t) as usize).min(n - 2);
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// ∫dω/2π by the trapezoid rule.
    pub fn integral(&self) -> f64 {
        let v = &self.values;
        let inner: f64 = v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]);
        inner * self.grid.spacing / (2.0 * PI)
    }

    /// Largest |value|.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// ∫dΩ/2π a(Ω) b(ω − Ω) on two grids with equal spacing.
///
/// The output lives on the lattice `a.min + b.min + k·h` and covers the full
/// support of the product.
pub fn convolve(a: &SampledSpectrum, b: &SampledSpectrum) -> Result<SampledSpectrum> {
    let h = a.grid.spacing;
    if ((b.grid.spacing - h) / h).abs() > 1e-12 {
        return Err(Error::Resolution(format!("spacings {h} and {} differ", b.grid.spacing)));
    }
    let (na, nb) = (a.values.len(), b.values.len());
    let mut out = alloc::vec![0.0; na + nb - 1];
    for (i, &x) in a.values.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..i + nb].iter_mut().zip(&b.values) {
            *o += x * y;
        }
    }
    let w = h / (2.0 * PI);
    out.iter_mut().for_each(|v| *v *= w);
    let grid = FrequencyGrid { min: a.grid.min + b.grid.min, spacing: h, n_points: na + nb - 1 };
    Ok(SampledSpectrum { grid, values: out })
}

/// Quadrature weights of the Gaussian envelope on the lattice `k·h`.
///
/// `apply(f, ω)` returns ∫dΩ/2π G^L(ω − Ω) f(Ω) as Σ_k w_k f(ω − k h); the
/// Gaussian is cut at ±`reach`·W around ε.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    /// Index of the first weight.
    pub first: i64,
    /// Lattice spacing.
    pub spacing: f64,
    /// Weights G^L(k h)·h/2π.
    pub weights: Vec<f64>,
}

impl GaussianKernel {
    /// Kernel for a pair with W > 0.
    pub fn new(p: &PairNoiseParams, spacing: f64, reach: f64) -> Self {
        let lo = floor((p.reorganization - reach * p.width) / spacing) as i64;
        let hi = ceil((p.reorganization + reach * p.width) / spacing) as i64;
        let norm = sqrt(2.0 * PI) / p.width * spacing / (2.0 * PI);
        let weights = (lo..=hi)
            .map(|k| {
                let x = (k as f64 * spacing - p.reorganization) / p.width;
                norm * exp(-0.5 * x * x)
            })
            .collect();
        Self { first: lo, spacing, weights }
    }

    /// Offsets k h covered by the kernel.
    pub fn offsets(&self) -> (f64, f64) {
        let a = self.first as f64 * self.spacing;
        (a, a + (self.weights.len() - 1) as f64 * self.spacing)
    }

    /// ∫dΩ/2π G^L(ω − Ω) f(Ω).
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64, omega: f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * f(omega - (self.first + j as i64) as f64 * self.spacing))
            .sum()
    }

    /// Convolution over a whole lattice. `source` holds f on
    /// `grid.min − hi + i h` for i in 0..grid.n_points + len − 1, where
    /// `(lo, hi)` are [`GaussianKernel::offsets`]. Returns values on `grid`.
    pub fn apply_lattice(&self, source: &[f64], grid: &FrequencyGrid) -> Vec<f64> {
        let m = self.weights.len();
        debug_assert_eq!(source.len(), grid.n_points + m - 1);
        (0..grid.n_points)
            .map(|i| {
                // source[i + m − 1 − j] sits at node i minus offset j
                let window = &source[i..i + m];
                window.iter().rev().zip(&self.weights).map(|(s, w)| s * w).sum()
            })
            .collect()
    }

    /// Source lattice needed by [`GaussianKernel::apply_lattice`].
    pub fn source_grid(&self, grid: &FrequencyGrid) -> FrequencyGrid {
        let (_, hi) = self.offsets();
        FrequencyGrid { min: grid.min - hi, spacing: grid.spacing, n_points: grid.n_points + self.weights.len() - 1 }
    }
}

/// (1/2π)∫ f(x)·2g/((x − c)² + g²) dx over the grid, with f piecewise linear
/// between nodes and (g, c) frozen per cell.
///
/// `cell(i, mid)` returns (g, c) for the cell between nodes i and i+1. A
/// zero width turns the Lorentzian into 2π δ(x − c). Each cell is integrated
/// in closed form, so arbitrarily narrow Lorentzians are exact for linear f.
pub fn lorentzian_product(grid: &FrequencyGrid, values: &[f64], mut cell: impl FnMut(usize, f64) -> (f64, f64)) -> f64 {
    let h = grid.spacing;
    let mut total = 0.0;
    for i in 0..values.len().saturating_sub(1) {
        let (a, b) = (grid.point(i), grid.point(i + 1));
        let (g, c) = cell(i, a + 0.5 * h);
        total += lorentzian_cell(a, b, values[i], values[i + 1], g, c);
    }
    total / (2.0 * PI)
}

/// One cell [a, b] of [`lorentzian_product`], without the 1/2π.
pub fn lorentzian_cell(a: f64, b: f64, fa: f64, fb: f64, g: f64, c: f64) -> f64 {
    let h = b - a;
    let ua = a - c;
    let ub = b - c;
    let s = (fb - fa) / h;
    if g <= 1e-12 * h {
        // 2π δ, assigned to the half-open cell [a, b) holding c
        return if a <= c && c < b { 2.0 * PI * (fa - s * ua) } else { 0.0 };
    }
    // ∫ 2g/(u² + g²) du and ∫ u·2g/(u² + g²) du over [ua, ub]
    let big_a = 2.0 * atan2(h * g, g * g + ua * ub);
    let big_b = g * log1p(h * (ub + ua) / (ua * ua + g * g));
    fa * big_a + s * (big_b - ua * big_a)
}

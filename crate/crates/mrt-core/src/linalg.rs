//! Small dense linear algebra: symmetric eigenpairs below a threshold and
//! LU solves. Matrices are row-major `Vec<f64>`.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Zero matrix of order `n`.
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    /// Identity of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from a generator `f(i, j)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Order of the matrix.
    pub fn order(&self) -> usize {
        self.n
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Raw row-major storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self · x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ · self · y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.n).map(|i| x[i] * dot(self.row(i), y)).sum()
    }

    /// True when the matrix equals its transpose exactly.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Euclidean inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
struct Tridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
    // reflector k acts on indices k+1..n: I - beta v vᵀ
    reflectors: Vec<(Vec<f64>, f64)>,
}

impl Tridiagonal {
    fn reduce(a: &Matrix) -> Self {
        let n = a.order();
        let mut w = a.data.clone();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n.saturating_sub(1)];
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        let mut p = vec![0.0; n];
        for k in 0..n.saturating_sub(2) {
            let m = n - k - 1;
            let mut v: Vec<f64> = (0..m).map(|i| w[(k + 1 + i) * n + k]).collect();
            let norm = sqrt(dot(&v, &v));
            d[k] = w[k * n + k];
            if norm == 0.0 {
                e[k] = 0.0;
                reflectors.push((v, 0.0));
                continue;
            }
            let alpha = if v[0] > 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let beta = 2.0 / dot(&v, &v);
            e[k] = alpha;
            let off = k + 1;
            for i in 0..m {
                let row = &w[(off + i) * n + off..(off + i) * n + n];
                p[i] = beta * dot(row, &v);
            }
            let kk = 0.5 * beta * dot(&p[..m], &v);
            for i in 0..m {
                p[i] -= kk * v[i];
            }
            for i in 0..m {
                let (vi, pi) = (v[i], p[i]);
                let row = &mut w[(off + i) * n + off..(off + i) * n + n];
                for j in 0..m {
                    row[j] -= vi * p[j] + pi * v[j];
                }
            }
            reflectors.push((v, beta));
        }
        if n >= 2 {
            d[n - 2] = w[(n - 2) * n + n - 2];
            e[n - 2] = w[(n - 1) * n + n - 2];
        }
        if n >= 1 {
            d[n - 1] = w[(n - 1) * n + n - 1];
        }
        Self { d, e, reflectors }
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE / f64::EPSILON;
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.d.len() {
            let off = if i == 0 { 0.0 } else { self.e[i - 1] * self.e[i - 1] / q };
            q = self.d[i] - x - off;
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue by bisection.
    fn eigenvalue(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector of the tridiagonal matrix by inverse iteration.
    fn tridiagonal_vector(&self, lambda: f64, scale: f64) -> Vec<f64> {
        let n = self.d.len();
        if n == 1 {
            return vec![1.0];
        }
        let shift = lambda + 4.0 * f64::EPSILON * scale;
        let tiny = f64::EPSILON * scale;
        let mut u0: Vec<f64> = self.d.iter().map(|d| d - shift).collect();
        let mut u1 = self.e.clone();
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n - 1];
        let mut swapped = vec![false; n - 1];
        for i in 0..n - 1 {
            let sub = self.e[i];
            if sub.abs() > u0[i].abs() {
                let m = u0[i] / sub;
                let next0 = u0[i + 1];
                let next1 = if i + 1 < n - 1 { u1[i + 1] } else { 0.0 };
                let old1 = u1[i];
                u0[i] = sub;
                u1[i] = next0;
                u2[i] = next1;
                u0[i + 1] = old1 - m * next0;
                if i + 1 < n - 1 {
                    u1[i + 1] = -m * next1;
                }
                mult[i] = m;
                swapped[i] = true;
            } else {
                if u0[i] == 0.0 {
                    u0[i] = tiny;
                }
                let m = sub / u0[i];
                u0[i + 1] -= m * u1[i];
                mult[i] = m;
            }
        }
        if u0[n - 1] == 0.0 {
            u0[n - 1] = tiny;
        }
        // deterministic start vector with no special symmetry
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * crate::math::sin(0.7 + 1.3 * i as f64))
            .collect();
        for _ in 0..3 {
            for i in 0..n - 1 {
                if swapped[i] {
                    x.swap(i, i + 1);
                }
                x[i + 1] -= mult[i] * x[i];
            }
            x[n - 1] /= u0[n - 1];
            x[n - 2] = (x[n - 2] - u1[n - 2] * x[n - 1]) / u0[n - 2];
            for i in (0..n.saturating_sub(2)).rev() {
                x[i] = (x[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / u0[i];
            }
            let norm = sqrt(dot(&x, &x));
            for v in &mut x {
                *v /= norm;
            }
        }
        x
    }

    fn back_transform(&self, mut y: Vec<f64>) -> Vec<f64> {
        for (k, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let seg = &mut y[k + 1..];
            let s = beta * dot(v, seg);
            for (yi, vi) in seg.iter_mut().zip(v) {
                *yi -= s * vi;
            }
        }
        y
    }
}

/// Eigenpairs of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unit eigenvectors, one per value.
    pub vectors: Vec<Vec<f64>>,
    /// Total number of eigenvalues below the threshold (may exceed `values.len()`).
    pub count_below: usize,
}

/// Lowest eigenpairs of the symmetric matrix `a` with eigenvalue below
/// `threshold`, at most `max_count` of them.
///
/// Householder tridiagonalization, Sturm bisection and inverse iteration;
/// cost is dominated by the O(n³) reduction, the rest is O(n²) per pair.
pub fn lowest_eigenpairs(a: &Matrix, threshold: f64, max_count: usize) -> Eigenpairs {
    let t = Tridiagonal::reduce(a);
    let (lo, hi) = t.gershgorin();
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    let count_below = if threshold > hi {
        a.order()
    } else {
        t.count_below(threshold)
    };
    let k = count_below.min(max_count);
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for i in 0..k {
        let lambda = t.eigenvalue(i, lo - 1.0, hi + 1.0);
        let y = t.tridiagonal_vector(lambda, scale);
        values.push(lambda);
        vectors.push(t.back_transform(y));
    }
    Eigenpairs { values, vectors, count_below }
}

/// All eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let t = Tridiagonal::reduce(a);
    let (lo, hi) = t.gershgorin();
    (0..a.order()).map(|i| t.eigenvalue(i, lo - 1.0, hi + 1.0)).collect()
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    /// Factorizes `a`; returns `None` for an exactly singular matrix.
    pub fn new(mut a: Matrix) -> Option<Self> {
        let n = a.order();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))?;
            if a[(p, k)] == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / piv;
                a[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        a.data[i * n + j] -= f * a.data[k * n + j];
                    }
                }
            }
        }
        Some(Self { lu: a, perm })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.order();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }
}

//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{PsffError, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Upper bound on the bytes a dense operator may occupy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryBudget(pub u128);

impl Default for MemoryBudget {
    fn default() -> Self {
        MemoryBudget(512 << 20)
    }
}

impl MemoryBudget {
    /// Fails if a `dim x dim` complex matrix would exceed the budget.
    pub fn check_dense(&self, dim: usize) -> Result<()> {
        let bytes = (dim as u128) * (dim as u128) * 16;
        if bytes > self.0 {
            return Err(PsffError::MemoryBudget { dim, bytes, budget: self.0 });
        }
        Ok(())
    }
}

/// Integer power with overflow reported as an error.
pub fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or_else(|| PsffError::InvalidParameter(format!("{base}^{exp} overflows")))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |M M^dagger - 1|` entrywise.
pub fn unitarity_residual(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let prod = m * m.adjoint();
    max_abs(&(prod - identity(m.nrows())))
}

/// Applies a gate on two sites to every column of `state`, in place.
///
/// Sites are 0-indexed with site 0 the most significant digit; `gate` acts
/// on `(site_a, site_b)` with `site_a` its first tensor factor.
pub fn apply_two_site(state: &mut CMat, gate: &CMat, d: usize, n_sites: usize, site_a: usize, site_b: usize) {
    debug_assert_ne!(site_a, site_b);
    debug_assert_eq!(gate.nrows(), d * d);
    let stride_a = d.pow((n_sites - 1 - site_a) as u32);
    let stride_b = d.pow((n_sites - 1 - site_b) as u32);
    let dim = d.pow(n_sites as u32);
    let bases: Vec<usize> =
        (0..dim).filter(|&i| (i / stride_a).is_multiple_of(d) && (i / stride_b).is_multiple_of(d)).collect();
    let offsets: Vec<usize> = (0..d * d).map(|k| (k / d) * stride_a + (k % d) * stride_b).collect();
    let mut buf = vec![ZERO; d * d];
    for mut col in state.column_iter_mut() {
        for &base in &bases {
            for (k, off) in offsets.iter().enumerate() {
                buf[k] = col[base + off];
            }
            for (row, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (k, b) in buf.iter().enumerate() {
                    acc += gate[(row, k)] * b;
                }
                col[base + off] = acc;
            }
        }
    }
}

/// Index map for a bipartition of `n_sites` sites of dimension `d`.
///
/// `index(a, c)` returns the full basis index whose digits on `kept` spell
/// `a` and whose remaining digits spell `c`, both most significant first.
#[derive(Debug, Clone)]
pub struct Bipartition {
    kept_dim: usize,
    rest_dim: usize,
    table: Vec<usize>,
}

impl Bipartition {
    pub fn new(d: usize, n_sites: usize, kept: &[usize]) -> Result<Self> {
        let mut mask = vec![false; n_sites];
        for &s in kept {
            if s >= n_sites || mask[s] {
                return Err(PsffError::InvalidParameter(format!("bad kept site {s}")));
            }
            mask[s] = true;
        }
        let mut kept_sorted: Vec<usize> = kept.to_vec();
        kept_sorted.sort_unstable();
        let rest: Vec<usize> = (0..n_sites).filter(|s| !mask[*s]).collect();
        let kept_dim = checked_pow(d, kept_sorted.len())?;
        let rest_dim = checked_pow(d, rest.len())?;
        let weight = |s: usize| d.pow((n_sites - 1 - s) as u32);
        let spread = |mut v: usize, sites: &[usize]| {
            let mut idx = 0;
            for &s in sites.iter().rev() {
                idx += (v % d) * weight(s);
                v /= d;
            }
            idx
        };
        let mut table = Vec::with_capacity(kept_dim * rest_dim);
        for a in 0..kept_dim {
            let ia = spread(a, &kept_sorted);
            for c in 0..rest_dim {
                table.push(ia + spread(c, &rest));
            }
        }
        Ok(Bipartition { kept_dim, rest_dim, table })
    }

    pub fn kept_dim(&self) -> usize {
        self.kept_dim
    }

    pub fn rest_dim(&self) -> usize {
        self.rest_dim
    }

    #[inline]
    pub fn index(&self, a: usize, c: usize) -> usize {
        self.table[a * self.rest_dim + c]
    }

    /// Partial trace over the complement of the kept sites.
    pub fn trace_out(&self, op: &CMat) -> CMat {
        CMat::from_fn(self.kept_dim, self.kept_dim, |a, b| {
            (0..self.rest_dim).map(|c| op[(self.index(a, c), self.index(b, c))]).sum()
        })
    }
}

/// Spectral decomposition `U = V diag(exp(i phase)) V^dagger` of a unitary.
#[derive(Debug, Clone)]
pub struct UnitaryEigen {
    pub phases: Vec<f64>,
    pub vectors: CMat,
}

impl UnitaryEigen {
    /// Decomposes a unitary. The Hermitian part `(U + U^†)/2` shares the
    /// eigenvectors of `U` wherever the cosines of the eigenphases are
    /// separated, so its eigenbasis nearly diagonalizes `U`; the remaining
    /// clusters of close cosines are diagonalized on their own. Falls back
    /// to the complex Schur form if the cleanup does not converge.
    pub fn new(u: &CMat) -> Result<Self> {
        if !u.is_square() {
            return Err(PsffError::SizeMismatch { expected: u.nrows(), found: u.ncols() });
        }
        match Self::via_hermitian_part(u) {
            Some(e) => Ok(e),
            None => Self::via_schur(u),
        }
    }

    fn via_hermitian_part(u: &CMat) -> Option<Self> {
        const CLUSTER_GAP: f64 = 1e-4;
        const LEAKAGE: f64 = 1e-10;
        let n = u.nrows();
        let h = (u + u.adjoint()) * C64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut v = CMat::zeros(n, n);
        for (k, &j) in order.iter().enumerate() {
            v.set_column(k, &eig.eigenvectors.column(j));
        }
        let b = v.adjoint() * u * &v;
        let mut clusters: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for k in 1..=n {
            if k == n || eig.eigenvalues[order[k]] - eig.eigenvalues[order[k - 1]] > CLUSTER_GAP {
                clusters.push((start, k));
                start = k;
            }
        }
        let mut phases = vec![0.0; n];
        let mut vectors = v.clone();
        for &(lo, hi) in &clusters {
            for i in 0..n {
                if i >= lo && i < hi {
                    continue;
                }
                for j in lo..hi {
                    if b[(i, j)].norm() > LEAKAGE {
                        return None;
                    }
                }
            }
            if hi - lo == 1 {
                phases[lo] = b[(lo, lo)].arg();
                continue;
            }
            let block = b.view((lo, lo), (hi - lo, hi - lo)).into_owned();
            let small = Self::via_schur(&block).ok()?;
            let rotated = v.columns(lo, hi - lo) * &small.vectors;
            vectors.columns_mut(lo, hi - lo).copy_from(&rotated);
            phases[lo..hi].copy_from_slice(&small.phases);
        }
        Some(UnitaryEigen { phases, vectors })
    }

    /// Decomposes a unitary via the complex Schur form, which is diagonal
    /// for normal matrices.
    pub fn via_schur(u: &CMat) -> Result<Self> {
        let n = u.nrows();
        if !u.is_square() {
            return Err(PsffError::SizeMismatch { expected: n, found: u.ncols() });
        }
        let schur = nalgebra::linalg::Schur::try_new(u.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| PsffError::Eigensolver("Schur iteration did not converge".into()))?;
        let (q, t) = schur.unpack();
        let mut off = 0.0_f64;
        for j in 0..n {
            for i in 0..j {
                off = off.max(t[(i, j)].norm());
            }
        }
        let tol = 1e-9 * (n as f64).max(1.0);
        if off > tol {
            return Err(PsffError::Eigensolver(format!("Schur form not diagonal (off-diagonal {off:e})")));
        }
        let phases = (0..n).map(|i| t[(i, i)].arg()).collect();
        Ok(UnitaryEigen { phases, vectors: q })
    }

    /// `max |V diag V^dagger - U|`.
    pub fn reconstruction_residual(&self, u: &CMat) -> f64 {
        let mut scaled = self.vectors.clone();
        for (mut col, phi) in scaled.column_iter_mut().zip(&self.phases) {
            col *= C64::from_polar(1.0, *phi);
        }
        max_abs(&(scaled * self.vectors.adjoint() - u))
    }

    /// Smallest distance between two eigenphases on the circle.
    pub fn min_gap(&self) -> f64 {
        let mut p: Vec<f64> = self.phases.iter().map(|x| x.rem_euclid(std::f64::consts::TAU)).collect();
        p.sort_by(f64::total_cmp);
        if p.len() < 2 {
            return f64::INFINITY;
        }
        let wrap = p[0] + std::f64::consts::TAU - p[p.len() - 1];
        p.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min)
    }
}

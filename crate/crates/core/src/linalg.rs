//! Dense symmetric matrices and the eigen-kernels the oracles rely on.
//!
//! Storage is full row-major `d × d`. Every constructor symmetrizes, and every
//! entrywise operation applies the same floating-point steps to `(i, j)` and
//! `(j, i)`, so results stay exactly symmetric without a final pass.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Default residual tolerance for [`leading_eigpair`].
pub const EIG_TOL: f64 = 1e-8;

/// Default iteration budget for [`leading_eigpair`] on a `d × d` matrix.
pub fn default_max_iter(d: usize) -> usize {
    50 * d
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix needs dim >= 1");
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diag(&vec![1.0; dim])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = v;
        }
        m
    }

    /// Builds `(F + Fᵀ)/2` where `F[i][j] = f(i, j)`.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut raw = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                raw[i * dim + j] = f(i, j);
            }
        }
        Self::symmetrize_row_major(dim, raw)
    }

    /// Symmetrizes a row-major buffer in place. Entries that already agree
    /// with their transpose are kept bit for bit.
    pub(crate) fn symmetrize_row_major(dim: usize, mut raw: Vec<f64>) -> Self {
        assert!(dim >= 1);
        assert_eq!(raw.len(), dim * dim);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = raw[i * dim + j];
                let b = raw[j * dim + i];
                let s = if a == b { a } else { 0.5 * (a + b) };
                raw[i * dim + j] = s;
                raw[j * dim + i] = s;
            }
        }
        SymMatrix { dim, data: raw }
    }

    /// Builds a matrix from a row-major slice, symmetrizing.
    pub fn from_row_major(dim: usize, data: &[f64]) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(Self::symmetrize_row_major(dim, data.to_vec()))
    }

    /// Rank-one projector `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        let d = v.len();
        let mut m = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m.data[i * d + j] = v[i] * v[j];
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Induced ∞-norm (maximum absolute row sum); bounds the spectral radius.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| ((i + 1)..self.dim).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn check_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.matvec_into(v, &mut out);
        out
    }

    pub(crate) fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), v);
        }
    }

    /// Entrywise map.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Entrywise combination of two same-size matrices.
    pub fn zip_map(&self, other: &SymMatrix, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "zip_map dimension mismatch");
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| s * x)
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &SymMatrix, b: f64) -> Self {
        self.zip_map(other, |x, y| a * x + b * y)
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        self.zip_map(other, |x, y| x - y)
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        self.zip_map(other, |x, y| x + y)
    }

    pub fn add_identity(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] += c;
        }
        m
    }

    /// `self + beta · z zᵀ`.
    pub fn rank_one_update(&self, beta: f64, z: &[f64]) -> Self {
        let d = self.dim;
        let mut m = self.clone();
        for i in 0..d {
            let bz = beta * z[i];
            for j in 0..d {
                m.data[i * d + j] += bz * z[j];
            }
        }
        // beta z_i z_j and beta z_j z_i may round differently.
        Self::symmetrize_row_major(d, m.data)
    }

    /// Accumulates `s · (a bᵀ + b aᵀ)/2` into `self`.
    pub(crate) fn add_sym_outer(&mut self, s: f64, a: &[f64], b: &[f64]) {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                self.data[i * d + j] += s * (0.5 * (a[i] * b[j] + a[j] * b[i]));
            }
        }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

/// Builds an exactly symmetric matrix from a square array as `(M + Mᵀ)/2`.
pub fn sym_from(raw: &[Vec<f64>]) -> Result<SymMatrix> {
    let d = raw.len();
    if d == 0 {
        return Err(Error::Dimension {
            expected: 1,
            got: 0,
        });
    }
    let mut data = Vec::with_capacity(d * d);
    for (r, row) in raw.iter().enumerate() {
        if row.len() != d {
            return Err(Error::NotSquare {
                rows: d,
                row: r,
                cols: row.len(),
            });
        }
        data.extend_from_slice(row);
    }
    Ok(SymMatrix::symmetrize_row_major(d, data))
}

/// Frobenius inner product `Σ A_ij B_ij`.
pub fn frob_inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    a.check_dim(b)?;
    Ok(dot(a.as_slice(), b.as_slice()))
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Leading eigenpair by shifted power iteration.
///
/// Iterates on `M + cI` with `c` the maximum absolute row sum of `M`, which
/// makes every eigenvalue of the shifted matrix nonnegative so the largest
/// eigenvalue of `M` is the dominant one. Stops once
/// `‖Mv − λv‖ ≤ tol·max(1, |λ|)`.
pub fn leading_eigpair<R: Rng + ?Sized>(
    m: &SymMatrix,
    tol: f64,
    max_iter: usize,
    rng: &mut R,
) -> Result<(f64, Vec<f64>)> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let d = m.dim();
    let shift = m.row_sum_norm();

    let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    normalize(&mut v);
    let mut mv = vec![0.0; d];
    let mut best = (f64::INFINITY, f64::NAN, v.clone());

    for _ in 0..max_iter.max(1) {
        m.matvec_into(&v, &mut mv);
        let lambda = dot(&v, &mv);
        let residual = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * lambda.abs().max(1.0) {
            return Ok((lambda, v));
        }
        if residual < best.0 {
            best = (residual, lambda, v.clone());
        }
        for (vi, mvi) in v.iter_mut().zip(&mv) {
            *vi = mvi + shift * *vi;
        }
        if normalize(&mut v) == 0.0 {
            // M + cI annihilated v: only possible for M = -cI restricted to span(v).
            return Ok((-shift, best.2));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: best.0,
        lambda: best.1,
        vector: best.2,
    })
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// All eigenvalues in nonincreasing order.
pub fn full_spectrum(m: &SymMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Largest eigenvalue.
pub fn lambda_max(m: &SymMatrix) -> f64 {
    m.to_nalgebra()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest eigenvalue and a unit eigenvector from a full dense decomposition.
///
/// The matrix is centered by its mean diagonal before decomposing, so
/// `M` and `M + cI` go through identical arithmetic whenever the shift is
/// exact in floating point.
pub fn top_eigpair(m: &SymMatrix) -> (f64, Vec<f64>) {
    let center = m.trace() / m.dim() as f64;
    let centered = m.add_identity(-center);
    let eig = SymmetricEigen::new(centered.to_nalgebra());
    let (imax, lmax) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, l)| if l > acc.1 { (i, l) } else { acc });
    let mut v: Vec<f64> = eig.eigenvectors.column(imax).iter().copied().collect();
    normalize(&mut v);
    // Fix the sign so the largest-magnitude component is positive.
    let pivot = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (lmax + center, v)
}

/// Returns `[u, Xu, X²u, …, Xᵖu]`.
pub fn mat_power_apply(x: &SymMatrix, p: usize, u: &[f64]) -> Result<Vec<Vec<f64>>> {
    if u.len() != x.dim() {
        return Err(Error::Dimension {
            expected: x.dim(),
            got: u.len(),
        });
    }
    if p == 0 {
        return Err(Error::invalid("p", "must be at least 1"));
    }
    let mut out = Vec::with_capacity(p + 1);
    out.push(u.to_vec());
    for j in 0..p {
        let next = x.matvec(&out[j]);
        out.push(next);
    }
    Ok(out)
}

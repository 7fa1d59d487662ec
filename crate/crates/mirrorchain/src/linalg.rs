//! Dense complex linear algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Eigendecomposition of a Hermitian matrix, kept around so that
/// `exp(-iHt)` can be evaluated cheaply for many values of `t`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMat,
}

impl HermitianEig {
    pub fn new(h: &CMat) -> Self {
        debug_assert_eq!(h.nrows(), h.ncols());
        let eig = h.clone().symmetric_eigen();
        HermitianEig {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    /// exp(-i H t) as a dense matrix.
    pub fn propagator(&self, t: f64) -> CMat {
        let phases: Vec<C64> = self
            .eigenvalues
            .iter()
            .map(|&lambda| (-C64::i() * lambda * t).exp())
            .collect();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, col) in scaled.column_iter_mut().enumerate() {
            let mut col = col;
            col *= phases[j];
        }
        &scaled * v.adjoint()
    }

    /// exp(-i H t) applied to a vector.
    pub fn evolve(&self, state: &CVec, t: f64) -> CVec {
        let v = &self.eigenvectors;
        let mut coeffs = v.adjoint() * state;
        for (j, cj) in coeffs.iter_mut().enumerate() {
            *cj *= (-C64::i() * self.eigenvalues[j] * t).exp();
        }
        v * coeffs
    }
}

/// Orthonormal basis of the (numerical) right null space of `m`,
/// using singular values below `rel_tol` times the largest as zero.
pub fn null_space(m: &CMat, rel_tol: f64) -> Vec<CVec> {
    let ncols = m.ncols();
    if m.nrows() == 0 {
        return (0..ncols)
            .map(|j| CVec::from_fn(ncols, |i, _| if i == j { C64::ONE } else { C64::ZERO }))
            .collect();
    }
    // Pad wide matrices with zero rows: the thin SVD would otherwise drop
    // the null directions from V^H entirely.
    let padded;
    let work = if m.nrows() < ncols {
        padded = {
            let mut p = CMat::zeros(ncols, ncols);
            p.rows_mut(0, m.nrows()).copy_from(m);
            p
        };
        &padded
    } else {
        m
    };
    let svd = work.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let s_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let threshold = rel_tol * s_max.max(1e-300);
    let mut basis = Vec::new();
    for j in 0..ncols {
        if svd.singular_values[j] <= threshold {
            let row = v_t.row(j);
            basis.push(CVec::from_fn(ncols, |i, _| row[i].conj()));
        }
    }
    basis
}

/// Numerical rank with the same relative threshold convention.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let s_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let threshold = rel_tol * s_max.max(1e-300);
    svd.singular_values.iter().filter(|&&s| s > threshold).count()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Frobenius norm of (U^H U - I).
pub fn unitarity_residual(u: &CMat) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - identity(n)).norm()
}

/// Largest absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Canonical phase: rotate so the largest-magnitude entry is real positive.
/// Ties broken by the lowest index.
pub fn canonical_phase(v: &CVec) -> CVec {
    let mut best = 0;
    let mut best_norm = 0.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best_norm + 1e-14 {
            best_norm = z.norm();
            best = i;
        }
    }
    if best_norm == 0.0 {
        return v.clone();
    }
    let phase = v[best] / v[best].norm();
    v.map(|z| z / phase)
}

/// Principal angles (radians, ascending) between the spans of two sets of
/// vectors. Inputs need not be orthonormal; zero vectors are rejected.
pub fn principal_angles(a: &[CVec], b: &[CVec]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    if qa.is_empty() || qb.is_empty() {
        return Vec::new();
    }
    let dim = qa[0].len();
    let ma = CMat::from_fn(dim, qa.len(), |i, j| qa[j][i]);
    let mb = CMat::from_fn(dim, qb.len(), |i, j| qb[j][i]);
    let overlap = ma.adjoint() * mb;
    let svd = overlap.svd(false, false);
    svd.singular_values
        .iter()
        .map(|&s| s.clamp(0.0, 1.0).acos())
        .collect()
}

/// Plain modified Gram-Schmidt with re-orthogonalization, dropping
/// near-dependent vectors. For the coefficient-reusing variant used by the
/// decoder see `decoder::gram_schmidt`.
pub fn orthonormalize(vectors: &[CVec]) -> Vec<CVec> {
    let mut basis: Vec<CVec> = Vec::new();
    let max_norm = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return basis;
    }
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let overlap = q.dotc(&w);
                w -= q * overlap;
            }
        }
        let norm = w.norm();
        if norm > 1e-12 * max_norm {
            basis.push(w / c(norm, 0.0));
        }
    }
    basis
}

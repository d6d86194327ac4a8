//! Small dense complex linear algebra helpers shared by all modules.
//!
//! Everything here operates on `DMatrix<Complex64>` at desk scale
//! (d ≤ 8 or so). Operator norms are induced norms: `L1` is the max
//! column sum, `LInf` the max row sum and `L2` the largest singular
//! value.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MatrixNorm {
    L1,
    #[default]
    L2,
    LInf,
}

/// Induced operator norm of `m`.
pub fn op_norm(m: &CMatrix, norm: MatrixNorm) -> f64 {
    match norm {
        MatrixNorm::L1 => (0..m.ncols())
            .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max),
        MatrixNorm::LInf => (0..m.nrows())
            .map(|i| m.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max),
        MatrixNorm::L2 => {
            if m.iter().all(|z| z.norm_sqr() == 0.0) {
                return 0.0;
            }
            let svd = m.clone().svd(false, false);
            svd.singular_values.iter().copied().fold(0.0, f64::max)
        }
    }
}

/// All eigenvalues of a square complex matrix, via the Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    assert_eq!(m.nrows(), m.ncols(), "eigenvalues: matrix must be square");
    let d = m.nrows();
    if d == 0 {
        return vec![];
    }
    if d == 1 {
        return vec![m[(0, 0)]];
    }
    if let Some(schur) = m.clone().try_schur(1e-14, 100_000) {
        let (_, t) = schur.unpack();
        return (0..d).map(|i| t[(i, i)]).collect();
    }
    // Schur iteration failed to converge (rare); perturb negligibly and retry.
    let eps = 1e-13 * op_norm(m, MatrixNorm::L2).max(1.0);
    let mut p = m.clone();
    for i in 0..d {
        p[(i, i)] += Complex64::new(eps * (i as f64 + 1.0), eps);
    }
    let (_, t) = p
        .try_schur(1e-12, 100_000)
        .expect("Schur iteration failed even after perturbation")
        .unpack();
    (0..d).map(|i| t[(i, i)]).collect()
}

/// Spectral radius r(m) = max |eigenvalue|.
pub fn spectral_radius(m: &CMatrix) -> f64 {
    eigenvalues(m)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Spectral radius by renormalized repeated squaring,
/// r = lim ‖A^(2^k)‖^(1/2^k). Independent of the Schur path; used as a
/// cross-check oracle in tests.
pub fn spectral_radius_squaring(m: &CMatrix, squarings: u32) -> f64 {
    // Invariant: A^(2^k) = e^log_norm · cur with ‖cur‖ = 1.
    let mut cur = m.clone();
    let nrm = op_norm(&cur, MatrixNorm::L2);
    if nrm == 0.0 {
        return 0.0;
    }
    cur /= Complex64::from(nrm);
    let mut log_norm = nrm.ln();
    for _ in 0..squarings {
        cur = &cur * &cur;
        let nrm = op_norm(&cur, MatrixNorm::L2);
        if nrm == 0.0 {
            return 0.0;
        }
        cur /= Complex64::from(nrm);
        log_norm = 2.0 * log_norm + nrm.ln();
    }
    (log_norm / 2.0_f64.powi(squarings as i32)).exp()
}

/// Closed-form eigenvalues of a 2×2 complex matrix.
pub fn eig2x2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - Complex64::from(4.0) * det).sqrt();
    ((tr + disc) / 2.0, (tr - disc) / 2.0)
}

/// Kronecker product, row/column ordering matching column-major
/// vectorization: vec(B·D·C) = (Cᵀ ⊗ B)·vec(D).
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Column-major vectorization of a k×k matrix.
pub fn vec_col(m: &CMatrix) -> CVector {
    let k = m.nrows();
    CVector::from_iterator(k * m.ncols(), (0..m.ncols()).flat_map(|j| (0..k).map(move |i| (i, j))).map(|(i, j)| m[(i, j)]))
}

/// Inverse of [`vec_col`] for a square k×k matrix.
pub fn unvec_col(v: &CVector, k: usize) -> CMatrix {
    assert_eq!(v.len(), k * k);
    CMatrix::from_fn(k, k, |i, j| v[j * k + i])
}

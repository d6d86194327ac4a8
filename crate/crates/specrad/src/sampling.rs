//! Seeded random directions and matrices. All sampled methods take an
//! explicit seed so reports are reproducible byte for byte.

use crate::linalg::{CMatrix, CVector};
use num_complex::Complex64;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_complex(rng: &mut SeededRng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_unit_vector(rng: &mut SeededRng, dim: usize) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| random_complex(rng));
        let n = v.norm();
        if n > 1e-3 {
            return v / Complex64::from(n);
        }
    }
}

pub fn random_matrix(rng: &mut SeededRng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| random_complex(rng))
}

/// Random unitary from the QR factorization of a random complex matrix,
/// with the R diagonal phases absorbed so the distribution is Haar-like.
pub fn random_unitary(rng: &mut SeededRng, dim: usize) -> CMatrix {
    let qr = random_matrix(rng, dim).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { Complex64::ONE } else { d / d.norm() };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random matrix with prescribed eigenvalue moduli: diag(lambdas)
/// conjugated by a random invertible matrix. Used to construct cases
/// with a controlled dominance gap.
pub fn random_with_eigenvalues(rng: &mut SeededRng, lambdas: &[Complex64]) -> CMatrix {
    let dim = lambdas.len();
    let d = CMatrix::from_diagonal(&CVector::from_row_slice(lambdas));
    loop {
        let p = random_matrix(rng, dim);
        if let Some(p_inv) = p.clone().try_inverse() {
            // keep conditioning sane
            if p.norm() * p_inv.norm() < 50.0 * dim as f64 {
                return &p * d * p_inv;
            }
        }
    }
}

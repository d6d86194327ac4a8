//! Inner-field weighted shifts a(x)·T_x and the lift of a
//! matrix-algebra-valued weight to the algebra of linear maps on
//! M_k(ℂ), realized as k²×k² matrices.
//!
//! An inner field assigns to each state a unitary T_x with inverse
//! S_x = T_x⁻¹, inducing the endomorphism α_x(b) = T_x b S_x of
//! M_k(ℂ). The weighted endomorphism with weight a then has the same
//! spectral radius as the cocycle of effective weights W(x) = a(x)T_x,
//! and alternatively as the cocycle of lifted k²×k² matrices
//! representing b ↦ α_x(a(φ(x))·b).

use crate::cocycle::Weight;
use crate::dynsys::PartialSystem;
use crate::ergopt::periodic_orbit_vp;
use crate::error::{Result, SpecradError};
use crate::estimate::{reconcile, ExponentEstimate};
use crate::linalg::{kron, CMatrix, CVector, MatrixNorm};
use crate::sampling::{random_unit_vector, rng_from_seed};

const ISOMETRY_TOL: f64 = 1e-12;

/// Per-state unitaries T_x with their inverses S_x.
#[derive(Debug, Clone)]
pub struct InnerField {
    pub dim: usize,
    t: Vec<CMatrix>,
    s: Vec<CMatrix>,
}

impl InnerField {
    /// Validates that every T_x is unitary: S_x T_x = identity within
    /// 1e-12 with S_x = T_x* and ‖T_x v‖ = ‖v‖ on random directions.
    pub fn new(t: Vec<CMatrix>) -> Result<Self> {
        if t.is_empty() {
            return Err(SpecradError::InvalidArgument("inner field has no states".into()));
        }
        let dim = t[0].nrows();
        let mut rng = rng_from_seed(0x1f1e);
        let mut s = Vec::with_capacity(t.len());
        for (x, tx) in t.iter().enumerate() {
            if tx.nrows() != dim || tx.ncols() != dim {
                return Err(SpecradError::InvalidArgument(format!(
                    "T at state {x} is not {dim}x{dim}"
                )));
            }
            let sx = tx.adjoint();
            let defect = (&sx * tx - CMatrix::identity(dim, dim)).norm();
            if defect > ISOMETRY_TOL {
                return Err(SpecradError::InvalidArgument(format!(
                    "T at state {x} is not unitary: ‖T*T − I‖ = {defect:.3e}"
                )));
            }
            for _ in 0..4 {
                let v = random_unit_vector(&mut rng, dim);
                let err = ((tx * &v).norm() - 1.0).abs();
                if err > ISOMETRY_TOL {
                    return Err(SpecradError::InvalidArgument(format!(
                        "T at state {x} fails the isometry check by {err:.3e}"
                    )));
                }
            }
            s.push(sx);
        }
        Ok(InnerField { dim, t, s })
    }

    pub fn identity(dim: usize, state_count: usize) -> Self {
        let id = CMatrix::identity(dim, dim);
        InnerField {
            dim,
            t: vec![id.clone(); state_count],
            s: vec![id; state_count],
        }
    }

    pub fn state_count(&self) -> usize {
        self.t.len()
    }

    pub fn t(&self, x: usize) -> &CMatrix {
        &self.t[x]
    }

    pub fn s(&self, x: usize) -> &CMatrix {
        &self.s[x]
    }

    /// α_x(b) = T_x b S_x.
    pub fn apply(&self, x: usize, b: &CMatrix) -> CMatrix {
        &self.t[x] * b * &self.s[x]
    }
}

/// Effective weight of the inner-field weighted shift: W(x) = a(x)·T_x.
pub fn effective_weight(a: &Weight, field: &InnerField) -> Result<Weight> {
    if a.dim != field.dim {
        return Err(SpecradError::InvalidWeight(format!(
            "weight dimension {} does not match field dimension {}",
            a.dim, field.dim
        )));
    }
    if a.state_count() != field.state_count() {
        return Err(SpecradError::InvalidWeight(format!(
            "weight has {} states, field has {}",
            a.state_count(),
            field.state_count()
        )));
    }
    Weight::new(
        (0..a.state_count())
            .map(|x| a.value(x) * field.t(x))
            .collect(),
    )
}

/// Spectral exponent of the weighted endomorphism with an inner field:
/// the spectral-exponent bracket of W(x) = a(x)T_x reconciled with the
/// periodic-orbit lower bound for W. r = e^λ.
pub fn weighted_endo_radius_inner(
    a: &Weight,
    field: &InnerField,
    sys: &PartialSystem,
    n_max: usize,
    max_len: usize,
    norm: MatrixNorm,
) -> Result<ExponentEstimate> {
    let w = effective_weight(a, field)?;
    let spec = crate::cocycle::spectral_exponent(&w, sys, n_max, norm, Some(max_len))?;
    let pov = periodic_orbit_vp(&w, sys, n_max, max_len, norm)?;
    let mut est = reconcile(&[spec, pov])?;
    est.method = "weighted-endo-inner".into();
    Ok(est)
}

/// Lifts a weight over D = M_k(ℂ) to the k²-dimensional weight whose
/// value at x is the matrix of b ↦ α_x(a(φ(x))·b) = T_x a(φ(x)) b S_x
/// in column-major vectorization: S_xᵀ ⊗ (T_x a(φ(x))). States outside
/// the domain of φ get the zero matrix (outside Δ, the weighted
/// endomorphism vanishes there).
pub fn lift_to_bd(a: &Weight, field: &InnerField, sys: &PartialSystem) -> Result<Weight> {
    if a.dim != field.dim {
        return Err(SpecradError::InvalidWeight(format!(
            "weight dimension {} does not match field dimension {}",
            a.dim, field.dim
        )));
    }
    if sys.is_sampled() {
        return Err(SpecradError::UnsupportedBackend(
            "lifting requires a finite backend with explicit images".into(),
        ));
    }
    let k = a.dim;
    let mut values = Vec::with_capacity(sys.state_count());
    for x in 0..sys.state_count() {
        // deterministic image; branching shifts have a unique symbol
        // image only through explicit successors, which is ambiguous
        let img = sys.image(x)?;
        let m = match img {
            Some(y) => {
                let left = field.t(x) * a.value(y);
                kron(&field.s(x).transpose(), &left)
            }
            None => CMatrix::zeros(k * k, k * k),
        };
        values.push(m);
    }
    Weight::new(values)
}

/// vec-identity check for a lifted weight: applying the lifted matrix
/// to vec(d) must reproduce vec(α_x(a(φ(x))·d)).
pub fn lift_defect(
    a: &Weight,
    field: &InnerField,
    sys: &PartialSystem,
    lifted: &Weight,
    x: usize,
    d: &CMatrix,
) -> Result<f64> {
    let Some(y) = sys.image(x)? else {
        return Ok(0.0);
    };
    let direct = field.apply(x, &(a.value(y) * d));
    let via_vec = lifted.value(x) * crate::linalg::vec_col(d);
    let diff: CVector = via_vec - crate::linalg::vec_col(&direct);
    Ok(diff.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::spectral_exponent;
    use crate::linalg::spectral_radius;
    use crate::sampling::{random_matrix, random_unitary};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn rejects_non_unitary_fields() {
        let bad = CMatrix::from_row_slice(2, 2, &[
            Complex64::from(2.0), Complex64::ZERO,
            Complex64::ZERO, Complex64::ONE]);
        assert!(InnerField::new(vec![bad]).is_err());
    }

    #[test]
    fn accepts_random_unitaries() {
        let mut rng = rng_from_seed(77);
        for dim in 1..=4 {
            let f = InnerField::new(vec![random_unitary(&mut rng, dim)]).unwrap();
            assert_eq!(f.dim, dim);
        }
    }

    #[test]
    fn identity_field_reduces_to_plain_spectral_exponent() {
        let mut rng = rng_from_seed(5);
        let sys = PartialSystem::finite_map(vec![Some(1), Some(0)]).unwrap();
        let a = Weight::new((0..2).map(|_| random_matrix(&mut rng, 2)).collect()).unwrap();
        let field = InnerField::identity(2, 2);
        let inner = weighted_endo_radius_inner(&a, &field, &sys, 64, 2, MatrixNorm::L2).unwrap();
        let plain = spectral_exponent(&a, &sys, 64, MatrixNorm::L2, None).unwrap();
        assert_relative_eq!(inner.lower, plain.lower, epsilon = 1e-10);
    }

    #[test]
    fn identity_weight_with_unitary_field_has_radius_one() {
        let mut rng = rng_from_seed(8);
        let sys = PartialSystem::full_shift(2, 1).unwrap();
        let a = Weight::constant(CMatrix::identity(2, 2), 2).unwrap();
        let field =
            InnerField::new((0..2).map(|_| random_unitary(&mut rng, 2)).collect()).unwrap();
        let w = effective_weight(&a, &field).unwrap();
        let est = spectral_exponent(&w, &sys, 64, MatrixNorm::L2, None).unwrap();
        // unitary cocycle: every product has unit norm, λ = 0, r = 1
        assert!(est.upper.abs() <= 1e-10);
        assert!((est.r_bracket().1 - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn diag_two_one_with_quarter_rotation_gives_sqrt_two() {
        // a = diag(2,1), T = rotation by π/2: aT = [[0,-2],[1,0]] with
        // eigenvalue moduli √2.
        let a = CMatrix::from_diagonal(&CVector::from_row_slice(&[
            Complex64::from(2.0), Complex64::ONE]));
        let t = CMatrix::from_row_slice(2, 2, &[
            Complex64::ZERO, Complex64::from(-1.0),
            Complex64::ONE, Complex64::ZERO]);
        let sys = PartialSystem::finite_map(vec![Some(0)]).unwrap();
        let wa = Weight::new(vec![a]).unwrap();
        let field = InnerField::new(vec![t]).unwrap();
        let w = effective_weight(&wa, &field).unwrap();
        assert_relative_eq!(spectral_radius(w.value(0)), 2.0f64.sqrt(), epsilon = 1e-12);
        let est = weighted_endo_radius_inner(&wa, &field, &sys, 2000, 1, MatrixNorm::L2).unwrap();
        assert!((est.r_value() - 2.0f64.sqrt()).abs() <= 1e-6);
    }

    #[test]
    fn lifted_matrix_satisfies_the_vec_identity() {
        let mut rng = rng_from_seed(19);
        let sys = PartialSystem::finite_map(vec![Some(1), Some(2), Some(0)]).unwrap();
        let a = Weight::new((0..3).map(|_| random_matrix(&mut rng, 2)).collect()).unwrap();
        let field =
            InnerField::new((0..3).map(|_| random_unitary(&mut rng, 2)).collect()).unwrap();
        let lifted = lift_to_bd(&a, &field, &sys).unwrap();
        assert_eq!(lifted.dim, 4);
        for x in 0..3 {
            for _ in 0..5 {
                let d = random_matrix(&mut rng, 2);
                let defect = lift_defect(&a, &field, &sys, &lifted, x, &d).unwrap();
                assert!(defect <= 1e-12, "vec identity defect {defect} at state {x}");
            }
        }
    }

    #[test]
    fn scalar_lift_is_the_pullback_weight() {
        // k = 1: α_x = id and the lifted weight is x ↦ a(φ(x)); its
        // spectral exponent equals that of a on a full orbit.
        let sys = PartialSystem::finite_map(vec![Some(1), Some(0)]).unwrap();
        let a = Weight::scalar_real(&[2.0, 8.0]).unwrap();
        let field = InnerField::identity(1, 2);
        let lifted = lift_to_bd(&a, &field, &sys).unwrap();
        assert_relative_eq!(lifted.value(0)[(0, 0)].re, 8.0);
        assert_relative_eq!(lifted.value(1)[(0, 0)].re, 2.0);
        let e1 = spectral_exponent(&a, &sys, 64, MatrixNorm::L2, None).unwrap();
        let e2 = spectral_exponent(&lifted, &sys, 64, MatrixNorm::L2, None).unwrap();
        assert_relative_eq!(e1.value, e2.value, epsilon = 1e-10);
    }

    #[test]
    fn lifted_exponent_matches_inner_radius_on_cycles() {
        // exact per-cycle equality: r of the lifted cycle product equals
        // r(P_W)² on M_2 lifts? No — the lifted product is
        // vec ↦ S_cycleᵀ ⊗ (…): its spectral radius equals r(P_W) up to
        // the conjugation structure; verify numerically per cycle here.
        let mut rng = rng_from_seed(29);
        let sys = PartialSystem::finite_map(vec![Some(1), Some(0)]).unwrap();
        let a = Weight::new((0..2).map(|_| random_matrix(&mut rng, 2)).collect()).unwrap();
        let field =
            InnerField::new((0..2).map(|_| random_unitary(&mut rng, 2)).collect()).unwrap();
        let lifted = lift_to_bd(&a, &field, &sys).unwrap();
        let inner = weighted_endo_radius_inner(&a, &field, &sys, 2000, 2, MatrixNorm::L2).unwrap();
        let via_lift = spectral_exponent(&lifted, &sys, 2000, MatrixNorm::L2, None).unwrap();
        assert!((inner.value - via_lift.value).abs() <= 1e-4,
            "inner {} vs lifted {}", inner.value, via_lift.value);
    }

    #[test]
    fn shift_invariance_of_the_exponent_on_full_orbits() {
        // replacing a by a∘φ leaves the exponent unchanged on a cycle
        let mut rng = rng_from_seed(31);
        let sys = PartialSystem::finite_map(vec![Some(1), Some(2), Some(0)]).unwrap();
        let mats: Vec<CMatrix> = (0..3).map(|_| random_matrix(&mut rng, 2)).collect();
        let a = Weight::new(mats.clone()).unwrap();
        let pullback = Weight::new((0..3).map(|x| {
            let y = match x { 0 => 1, 1 => 2, _ => 0 };
            mats[y].clone()
        }).collect()).unwrap();
        let e1 = spectral_exponent(&a, &sys, 200, MatrixNorm::L2, None).unwrap();
        let e2 = spectral_exponent(&pullback, &sys, 200, MatrixNorm::L2, None).unwrap();
        assert!((e1.value - e2.value).abs() <= 1e-4);
    }
}

//! Continuous linear extension on projective space, the
//! linear-extension variational principle, the refined Gelfand formula
//! and the 2×2 Möbius special case.
//!
//! The extension of (X, φ, a) is the skew product
//! φ̃(x,[v]) = (φ(x), [a*(x)v / ‖a*(x)v‖]) with scalar cocycle
//! ã(x,[v]) = ‖a*(x)v‖, so that ‖C^b_(a*)(x,n)v‖ = ∏ ã(φ̃^k(x,[v])).

use crate::cocycle::{backward_product_path, spectral_exponent, Weight};
use crate::dynsys::{periodic_orbits, PartialSystem};
use crate::error::{Result, SpecradError};
use crate::estimate::{ExponentEstimate, Witness};
use crate::linalg::{eig2x2, CVector, MatrixNorm};
use crate::sampling::{random_unit_vector, rng_from_seed};
use num_complex::Complex64;
use serde::Serialize;

/// A point of complex projective space, stored as a unit representative.
#[derive(Debug, Clone)]
pub struct ProjectivePoint {
    v: CVector,
}

impl ProjectivePoint {
    pub fn new(v: CVector) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(SpecradError::InvalidArgument(
                "zero vector has no projective class".into(),
            ));
        }
        Ok(ProjectivePoint { v: v / Complex64::from(n) })
    }

    pub fn representative(&self) -> &CVector {
        &self.v
    }

    /// dist([v],[w]) = sqrt(max(0, 1 − |⟨v,w⟩|²)); zero iff w = λv.
    pub fn dist(&self, other: &ProjectivePoint) -> f64 {
        let inner = self.v.dotc(&other.v).norm_sqr();
        (1.0 - inner).max(0.0).sqrt()
    }
}

/// Evaluators for the extended system (X̃, φ̃, ã).
pub struct LinearExtension<'a> {
    pub sys: &'a PartialSystem,
    adjoint: Weight,
}

impl<'a> LinearExtension<'a> {
    /// One fiber step at base state x: returns ã(x,[v]) and the image
    /// class, or `None` when a*(x)v = 0 (outside Δ̃).
    pub fn fiber_step(&self, x: usize, p: &ProjectivePoint) -> Option<(f64, ProjectivePoint)> {
        let w = self.adjoint.value(x) * p.representative();
        let n = w.norm();
        if n == 0.0 {
            return None;
        }
        Some((n, ProjectivePoint { v: w / Complex64::from(n) }))
    }

    /// ã(x,[v]) alone.
    pub fn scalar(&self, x: usize, p: &ProjectivePoint) -> f64 {
        (self.adjoint.value(x) * p.representative()).norm()
    }
}

/// Builds the continuous linear extension; a*(x) is the conjugate
/// transpose of a(x).
pub fn extend<'a>(w: &Weight, sys: &'a PartialSystem) -> LinearExtension<'a> {
    LinearExtension {
        sys,
        adjoint: w.adjoint(),
    }
}

/// Variational principle using the linear extension.
///
/// Lower bound: max over (periodic base orbit × seeded random fiber)
/// of the tail-averaged Birkhoff sum of ln ã along the φ̃-orbit of
/// length n_max. Upper bound: the spectral-exponent upper bound for the
/// same weight (both principles bound the same λ(a,φ)). On every
/// sampled orbit the product identity
/// ‖C^b_(a*)(x,n)v‖ = ∏ ã(φ̃^k(x,[v])) is validated to 1e-10 relative.
pub fn extension_vp(
    w: &Weight,
    sys: &PartialSystem,
    n_max: usize,
    fiber_samples: usize,
    seed: u64,
    norm: MatrixNorm,
) -> Result<ExponentEstimate> {
    if n_max < 1 || fiber_samples < 1 {
        return Err(SpecradError::InvalidArgument(
            "n_max and fiber_samples must be >= 1".into(),
        ));
    }
    if sys.is_sampled() {
        return Err(SpecradError::UnsupportedBackend(
            "extension_vp samples periodic base orbits; use a finite backend".into(),
        ));
    }
    let ext = extend(w, sys);
    let mut rng = rng_from_seed(seed);
    let cap = sys.state_count().min(10);
    let orbits = periodic_orbits(sys, cap, None)?;

    let mut best = f64::NEG_INFINITY;
    let mut best_witness: Option<Witness> = None;
    for orbit in &orbits {
        for _ in 0..fiber_samples {
            let v0 = random_unit_vector(&mut rng, w.dim);
            let start = ProjectivePoint::new(v0.clone())?;

            // Birkhoff run along the cyclically repeated base orbit.
            let mut p = start;
            let mut logs = Vec::with_capacity(n_max);
            let mut dead = false;
            for k in 0..n_max {
                let x = orbit.states[k % orbit.period()];
                match ext.fiber_step(x, &p) {
                    Some((a_tilde, next)) => {
                        logs.push(a_tilde.ln());
                        p = next;
                    }
                    None => {
                        dead = true;
                        break;
                    }
                }
            }
            let value = if dead {
                f64::NEG_INFINITY
            } else {
                // Product identity check at a short prefix.
                let check_n = n_max.min(48);
                let path: Vec<usize> = (0..check_n)
                    .map(|k| orbit.states[k % orbit.period()])
                    .collect();
                let bwd = backward_product_path(&w.adjoint(), &path, norm);
                let lhs: f64 = logs[..check_n].iter().sum();
                let rhs = if bwd.log_norm == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    bwd.log_norm + (bwd.normalized.clone() * &v0).norm().ln()
                };
                if (lhs - rhs).abs() > 1e-10 * (1.0 + lhs.abs()) {
                    return Err(SpecradError::InvalidArgument(format!(
                        "cocycle product identity violated: {lhs} vs {rhs}"
                    )));
                }
                // tail averaging over the last half
                let tail = &logs[n_max / 2..];
                tail.iter().sum::<f64>() / tail.len() as f64
            };
            if value > best {
                best = value;
                best_witness = Some(Witness::Orbit {
                    states: orbit.states.clone(),
                });
            }
        }
    }

    let upper = spectral_exponent(w, sys, n_max, norm, None)?.upper;
    if orbits.is_empty() || upper == f64::NEG_INFINITY {
        let est = ExponentEstimate::new(f64::NEG_INFINITY, upper, "extension-vp", n_max)
            .flag(if orbits.is_empty() { "empty-extended-domain" } else { "zero-cocycle" });
        return Ok(est);
    }
    let lower = best.min(upper);
    let mut est = ExponentEstimate::new(lower, upper, "extension-vp", n_max)
        .with_value(lower)
        .sampled();
    est.flags.push(format!("fiber_samples={fiber_samples};seed={seed}"));
    if let Some(wt) = best_witness {
        est = est.with_witness(wt);
    }
    Ok(est)
}

/// Refined Gelfand formula: r(a) = max over unit dual directions v of
/// lim ‖a*ⁿ v‖^(1/n). Returns the best tail-averaged directional
/// exponent over seeded random starts and the maximizing direction.
pub fn refined_gelfand(
    a: &crate::linalg::CMatrix,
    n_max: usize,
    starts: usize,
    seed: u64,
) -> Result<(f64, CVector)> {
    if n_max < 1 || starts < 1 {
        return Err(SpecradError::InvalidArgument(
            "n_max and starts must be >= 1".into(),
        ));
    }
    let d = a.nrows();
    if d == 0 || a.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
        return Ok((f64::NEG_INFINITY, CVector::zeros(d.max(1))));
    }
    let astar = a.adjoint();
    let mut rng = rng_from_seed(seed);
    let mut best = f64::NEG_INFINITY;
    let mut best_dir = CVector::zeros(d);
    for _ in 0..starts {
        let v0 = random_unit_vector(&mut rng, d);
        let mut v = v0.clone();
        let mut tail_sum = 0.0;
        let tail_from = n_max / 2;
        let mut value = f64::NEG_INFINITY;
        let mut alive = true;
        for k in 0..n_max {
            let next = &astar * &v;
            let nrm = next.norm();
            if nrm == 0.0 {
                alive = false;
                break;
            }
            if k >= tail_from {
                tail_sum += nrm.ln();
            }
            v = next / Complex64::from(nrm);
        }
        if alive {
            value = tail_sum / (n_max - tail_from) as f64;
        }
        if value > best {
            best = value;
            best_dir = v0;
        }
    }
    Ok((best, best_dir))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedPointClass {
    Attracting,
    Neutral,
    Repelling,
}

#[derive(Debug, Clone, Serialize)]
pub struct MobiusFixedPoint {
    /// None encodes the point at infinity.
    pub z: Option<(f64, f64)>,
    pub multiplier_modulus: f64,
    pub f_value: f64,
    pub class: FixedPointClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct MobiusReport {
    pub fixed_points: Vec<MobiusFixedPoint>,
    pub r: f64,
    pub eigen_r: f64,
    pub parabolic: bool,
    pub identity_map: bool,
}

const NEUTRAL_TOL: f64 = 1e-9;

fn f_mobius(a: Complex64, b: Complex64, c: Complex64, d: Complex64, z: Option<Complex64>) -> f64 {
    match z {
        Some(z) => ((a * z + b).norm() + (c * z + d).norm()) / (z.norm() + 1.0),
        None => a.norm() + c.norm(),
    }
}

fn classify(multiplier_modulus: f64) -> FixedPointClass {
    if multiplier_modulus < 1.0 - NEUTRAL_TOL {
        FixedPointClass::Attracting
    } else if multiplier_modulus <= 1.0 + NEUTRAL_TOL {
        FixedPointClass::Neutral
    } else {
        FixedPointClass::Repelling
    }
}

/// Spectral radius of an invertible 2×2 matrix via the fixed points of
/// its Möbius transformation φ̃(z) = (az+b)/(cz+d) and the potential
/// f(z) = (|az+b| + |cz+d|)/(|z|+1), f(∞) = |a|+|c|. Cross-checked in
/// the report against the closed-form eigenvalues.
pub fn mobius_spectral_radius(
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
) -> Result<MobiusReport> {
    let det = a * d - b * c;
    if det.norm() == 0.0 {
        return Err(SpecradError::InvalidArgument(
            "matrix is singular; the Möbius transformation degenerates".into(),
        ));
    }
    let (l1, l2) = eig2x2(a, b, c, d);
    let eigen_r = l1.norm().max(l2.norm());

    let mut fixed: Vec<MobiusFixedPoint> = Vec::new();
    let mut parabolic = false;
    let mut identity_map = false;

    if c.norm() == 0.0 {
        // phi(z) = (a/d) z + b/d; infinity is always fixed.
        let mult_inf = (d / a).norm();
        fixed.push(MobiusFixedPoint {
            z: None,
            multiplier_modulus: mult_inf,
            f_value: f_mobius(a, b, c, d, None),
            class: classify(mult_inf),
        });
        if (a - d).norm() > 1e-15 * (a.norm() + d.norm()) {
            let z = b / (d - a);
            let mult = (a / d).norm();
            fixed.push(MobiusFixedPoint {
                z: Some((z.re, z.im)),
                multiplier_modulus: mult,
                f_value: f_mobius(a, b, c, d, Some(z)),
                class: classify(mult),
            });
        } else if b.norm() == 0.0 {
            // scalar multiple of the identity: every point is fixed
            identity_map = true;
        } else {
            // translation: the sole (parabolic) fixed point is infinity
            parabolic = true;
        }
    } else {
        // roots of c z^2 + (d-a) z - b = 0
        let disc = ((d - a) * (d - a) + Complex64::from(4.0) * c * b).sqrt();
        let z1 = ((a - d) + disc) / (Complex64::from(2.0) * c);
        let z2 = ((a - d) - disc) / (Complex64::from(2.0) * c);
        parabolic = (z1 - z2).norm() <= 1e-9 * (1.0 + z1.norm() + z2.norm());
        let roots = if parabolic { vec![z1] } else { vec![z1, z2] };
        for z in roots {
            // phi'(z) = det / (cz+d)^2
            let denom = c * z + d;
            let mult = if denom.norm() == 0.0 {
                f64::INFINITY
            } else {
                (det / (denom * denom)).norm()
            };
            let mult = if parabolic { 1.0 } else { mult };
            fixed.push(MobiusFixedPoint {
                z: Some((z.re, z.im)),
                multiplier_modulus: mult,
                f_value: f_mobius(a, b, c, d, Some(z)),
                class: classify(mult),
            });
        }
    }

    let r = if identity_map {
        a.norm()
    } else {
        let attracting: Vec<&MobiusFixedPoint> = fixed
            .iter()
            .filter(|fp| fp.class == FixedPointClass::Attracting)
            .collect();
        if attracting.len() == 1 {
            attracting[0].f_value
        } else {
            fixed.iter().map(|fp| fp.f_value).fold(f64::NEG_INFINITY, f64::max)
        }
    };

    Ok(MobiusReport {
        fixed_points: fixed,
        r,
        eigen_r,
        parabolic,
        identity_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::Weight;
    use crate::linalg::{spectral_radius, CMatrix};
    use crate::sampling::{random_matrix, random_with_eigenvalues};
    use approx::assert_relative_eq;

    #[test]
    fn projective_metric_basics() {
        let e1 = ProjectivePoint::new(CVector::from_row_slice(&[
            Complex64::ONE, Complex64::ZERO])).unwrap();
        let e2 = ProjectivePoint::new(CVector::from_row_slice(&[
            Complex64::ZERO, Complex64::ONE])).unwrap();
        let phased = ProjectivePoint::new(CVector::from_row_slice(&[
            Complex64::new(0.0, 3.0), Complex64::ZERO])).unwrap();
        assert_relative_eq!(e1.dist(&e2), 1.0);
        assert_relative_eq!(e1.dist(&phased), 0.0);
        assert!(ProjectivePoint::new(CVector::zeros(2)).is_err());
    }

    #[test]
    fn projective_metric_triangle_and_symmetry_on_random_points() {
        let mut rng = rng_from_seed(17);
        for _ in 0..200 {
            let p = ProjectivePoint::new(random_unit_vector(&mut rng, 3)).unwrap();
            let q = ProjectivePoint::new(random_unit_vector(&mut rng, 3)).unwrap();
            let s = ProjectivePoint::new(random_unit_vector(&mut rng, 3)).unwrap();
            assert_relative_eq!(p.dist(&q), q.dist(&p), epsilon = 1e-12);
            assert!(p.dist(&q) <= p.dist(&s) + s.dist(&q) + 1e-12);
            assert!(p.dist(&q) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn fiber_step_reproduces_backward_adjoint_products() {
        let mut rng = rng_from_seed(9);
        let sys = PartialSystem::finite_map(vec![Some(1), Some(0)]).unwrap();
        let w = Weight::new((0..2).map(|_| random_matrix(&mut rng, 3)).collect()).unwrap();
        let ext = extend(&w, &sys);
        let v0 = random_unit_vector(&mut rng, 3);
        let mut p = ProjectivePoint::new(v0.clone()).unwrap();
        let mut log_prod = 0.0;
        let path = [0usize, 1, 0, 1, 0];
        for &x in &path {
            let (a_tilde, next) = ext.fiber_step(x, &p).unwrap();
            log_prod += a_tilde.ln();
            p = next;
        }
        let bwd = backward_product_path(&w.adjoint(), &path, MatrixNorm::L2);
        let direct = bwd.log_norm + (bwd.normalized * v0).norm().ln();
        assert_relative_eq!(log_prod, direct, epsilon = 1e-10);
    }

    #[test]
    fn extension_vp_constant_matrix_recovers_ln_spectral_radius() {
        let mut rng = rng_from_seed(41);
        let a = random_with_eigenvalues(&mut rng, &[
            Complex64::from(2.0), Complex64::from(0.5), Complex64::from(0.3)]);
        let sys = PartialSystem::full_shift(2, 1).unwrap();
        let w = Weight::constant(a.clone(), 2).unwrap();
        let est = extension_vp(&w, &sys, 2000, 10, 7, MatrixNorm::L2).unwrap();
        assert!((est.value - spectral_radius(&a).ln()).abs() <= 1e-6);
    }

    #[test]
    fn refined_gelfand_matches_spectral_radius_with_gap() {
        let mut rng = rng_from_seed(13);
        for _ in 0..5 {
            let a = random_with_eigenvalues(&mut rng, &[
                Complex64::new(1.3, 0.4), Complex64::from(0.8), Complex64::from(-0.5)]);
            let (lam, _dir) = refined_gelfand(&a, 2000, 20, 101).unwrap();
            assert!((lam - spectral_radius(&a).ln()).abs() <= 1e-8,
                "gelfand {lam} vs ln r {}", spectral_radius(&a).ln());
        }
    }

    #[test]
    fn refined_gelfand_zero_matrix() {
        let a = CMatrix::zeros(2, 2);
        let (lam, _) = refined_gelfand(&a, 10, 3, 1).unwrap();
        assert_eq!(lam, f64::NEG_INFINITY);
    }

    #[test]
    fn mobius_attracting_case_equals_eigen_radius() {
        // diag(2, 1/2): attracting fixed point of phi at infinity? phi(z)=4z,
        // fixed points 0 (repelling for phi? mult 4) and infinity.
        let rep = mobius_spectral_radius(
            Complex64::from(2.0), Complex64::ZERO,
            Complex64::ZERO, Complex64::from(0.5)).unwrap();
        assert_relative_eq!(rep.r, 2.0, epsilon = 1e-12);
        assert_relative_eq!(rep.eigen_r, 2.0, epsilon = 1e-12);
        let attracting: Vec<_> = rep.fixed_points.iter()
            .filter(|fp| fp.class == FixedPointClass::Attracting).collect();
        assert_eq!(attracting.len(), 1);
    }

    #[test]
    fn mobius_generic_matrix_matches_eigenvalues() {
        let mut rng = rng_from_seed(23);
        for _ in 0..100 {
            let m = random_matrix(&mut rng, 2);
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            if (a * d - b * c).norm() < 1e-3 {
                continue;
            }
            let rep = mobius_spectral_radius(a, b, c, d).unwrap();
            assert!((rep.r - rep.eigen_r).abs() <= 1e-6 * (1.0 + rep.eigen_r),
                "r {} eigen_r {} parabolic {}", rep.r, rep.eigen_r, rep.parabolic);
        }
    }

    #[test]
    fn mobius_parabolic_shear() {
        // [[1,1],[0,1]]: translation z -> z+1, single neutral fixed point
        // at infinity, r = 1.
        let rep = mobius_spectral_radius(
            Complex64::ONE, Complex64::ONE,
            Complex64::ZERO, Complex64::ONE).unwrap();
        assert!(rep.parabolic);
        assert_relative_eq!(rep.r, 1.0, epsilon = 1e-12);
        assert_eq!(rep.fixed_points.len(), 1);
        assert_eq!(rep.fixed_points[0].class, FixedPointClass::Neutral);
    }

    #[test]
    fn mobius_scalar_multiple_of_identity() {
        let rep = mobius_spectral_radius(
            Complex64::from(3.0), Complex64::ZERO,
            Complex64::ZERO, Complex64::from(3.0)).unwrap();
        assert!(rep.identity_map);
        assert_relative_eq!(rep.r, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn mobius_rotation_is_neutral_everywhere() {
        // [[0,-1],[1,0]]: eigenvalues ±i, both fixed points neutral, r = 1.
        let rep = mobius_spectral_radius(
            Complex64::ZERO, Complex64::from(-1.0),
            Complex64::ONE, Complex64::ZERO).unwrap();
        assert!(!rep.parabolic);
        assert_relative_eq!(rep.r, 1.0, epsilon = 1e-9);
        for fp in &rep.fixed_points {
            assert_eq!(fp.class, FixedPointClass::Neutral);
        }
    }

    #[test]
    fn mobius_rejects_singular_matrices() {
        assert!(mobius_spectral_radius(
            Complex64::ONE, Complex64::ONE,
            Complex64::ONE, Complex64::ONE).is_err());
    }
}

//! Matrix-valued weights and their log-renormalized cocycle products.
//!
//! The forward cocycle along an orbit is
//! C^f(x,n) = a(x)·a(φx)·…·a(φ^(n-1)x), the backward one multiplies in
//! reverse order. Every product step renormalizes the running matrix to
//! unit operator norm and accumulates the log, so n up to 10^5 stays in
//! double range. The spectral exponent
//! λ = lim_n sup_x (1/n) ln ‖C^f(x,n)‖ = inf_n sup_x (…)
//! is bracketed from above by the inf formula and from below by exact
//! per-cycle values (1/p) ln r(P).

use crate::dynsys::{periodic_orbits, Orbit, PartialSystem};
use crate::error::{Result, SpecradError};
use crate::estimate::{ExponentEstimate, Witness};
use crate::linalg::{op_norm, spectral_radius, CMatrix, CVector, MatrixNorm};
use crate::measures::InvariantMeasure;
use num_complex::Complex64;

/// Per-node cap for the exact path DP on branching shift backends.
const PATH_DP_CAP: usize = 64;

#[derive(Debug, Clone)]
pub struct Weight {
    pub dim: usize,
    values: Vec<CMatrix>,
    pub sup_norm: f64,
}

impl Weight {
    pub fn new(values: Vec<CMatrix>) -> Result<Self> {
        if values.is_empty() {
            return Err(SpecradError::InvalidWeight("no states".into()));
        }
        let dim = values[0].nrows();
        for (x, m) in values.iter().enumerate() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(SpecradError::InvalidWeight(format!(
                    "matrix at state {x} is not {dim}x{dim}"
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(SpecradError::InvalidWeight(format!(
                    "non-finite entry at state {x}"
                )));
            }
        }
        let sup_norm = values
            .iter()
            .map(|m| op_norm(m, MatrixNorm::L2))
            .fold(0.0, f64::max);
        Ok(Weight { dim, values, sup_norm })
    }

    pub fn scalar(values: Vec<Complex64>) -> Result<Self> {
        Weight::new(
            values
                .into_iter()
                .map(|z| CMatrix::from_element(1, 1, z))
                .collect(),
        )
    }

    pub fn scalar_real(values: &[f64]) -> Result<Self> {
        Weight::scalar(values.iter().map(|&v| Complex64::from(v)).collect())
    }

    pub fn constant(a: CMatrix, state_count: usize) -> Result<Self> {
        Weight::new(vec![a; state_count])
    }

    pub fn state_count(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, x: usize) -> &CMatrix {
        &self.values[x]
    }

    /// Δ^a membership: a state supports the weight iff its matrix has a
    /// nonzero entry (threshold 0 exactly).
    pub fn supported(&self, x: usize) -> bool {
        self.values[x].iter().any(|z| z.re != 0.0 || z.im != 0.0)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&x| self.supported(x)).collect()
    }

    /// The pointwise conjugate transpose a*(x).
    pub fn adjoint(&self) -> Weight {
        Weight {
            dim: self.dim,
            values: self.values.iter().map(|m| m.adjoint()).collect(),
            sup_norm: self.sup_norm,
        }
    }

    /// ln|a(x)| per state for scalar weights, with the -∞ sentinel.
    pub fn log_abs(&self) -> Result<Vec<f64>> {
        if self.dim != 1 {
            return Err(SpecradError::InvalidWeight(
                "log_abs is defined for scalar weights".into(),
            ));
        }
        Ok(self.values.iter().map(|m| m[(0, 0)].norm().ln()).collect())
    }
}

/// A log-renormalized product: the actual product is
/// e^log_norm · normalized with ‖normalized‖ = 1 (or the zero matrix
/// with log_norm = -∞ once a zero factor is hit).
#[derive(Debug, Clone)]
pub struct CocycleProduct {
    pub log_norm: f64,
    pub normalized: CMatrix,
    pub steps: usize,
}

impl CocycleProduct {
    pub fn identity(dim: usize) -> Self {
        let id = CMatrix::identity(dim, dim);
        CocycleProduct {
            // the identity has unit norm in every induced norm
            log_norm: 0.0,
            normalized: id,
            steps: 0,
        }
    }

    pub fn absorb_right(&mut self, factor: &CMatrix, norm: MatrixNorm) {
        let prod = &self.normalized * factor;
        self.push(prod, norm);
    }

    pub fn absorb_left(&mut self, factor: &CMatrix, norm: MatrixNorm) {
        let prod = factor * &self.normalized;
        self.push(prod, norm);
    }

    fn push(&mut self, prod: CMatrix, norm: MatrixNorm) {
        self.steps += 1;
        if self.log_norm == f64::NEG_INFINITY {
            return;
        }
        let nrm = op_norm(&prod, norm);
        if nrm == 0.0 {
            self.log_norm = f64::NEG_INFINITY;
            self.normalized = CMatrix::zeros(prod.nrows(), prod.ncols());
        } else {
            self.log_norm += nrm.ln();
            self.normalized = prod / Complex64::from(nrm);
        }
    }

    /// e^log_norm · normalized; overflows for large log_norm, intended
    /// for small step counts.
    pub fn reconstruct(&self) -> CMatrix {
        if self.log_norm == f64::NEG_INFINITY {
            return CMatrix::zeros(self.normalized.nrows(), self.normalized.ncols());
        }
        self.normalized.clone() * Complex64::from(self.log_norm.exp())
    }

    /// Spectral radius of the reconstructed product, in log form.
    pub fn log_spectral_radius(&self) -> f64 {
        if self.log_norm == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let r = spectral_radius(&self.normalized);
        if r == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.log_norm + r.ln()
        }
    }
}

/// C^f(x,n) along an explicit orbit segment [x, φx, …, φ^(n-1)x].
pub fn forward_product_path(w: &Weight, path: &[usize], norm: MatrixNorm) -> CocycleProduct {
    let mut acc = CocycleProduct::identity(w.dim);
    for &x in path {
        acc.absorb_right(w.value(x), norm);
    }
    acc
}

/// C^b(x,n) along the same segment, factors multiplied in reverse order.
pub fn backward_product_path(w: &Weight, path: &[usize], norm: MatrixNorm) -> CocycleProduct {
    let mut acc = CocycleProduct::identity(w.dim);
    for &x in path {
        acc.absorb_left(w.value(x), norm);
    }
    acc
}

pub fn forward_product(
    w: &Weight,
    sys: &PartialSystem,
    x: usize,
    n: usize,
    norm: MatrixNorm,
) -> Result<CocycleProduct> {
    let path = sys.trajectory(x, n)?;
    Ok(forward_product_path(w, &path, norm))
}

pub fn backward_product(
    w: &Weight,
    sys: &PartialSystem,
    x: usize,
    n: usize,
    norm: MatrixNorm,
) -> Result<CocycleProduct> {
    let path = sys.trajectory(x, n)?;
    Ok(backward_product_path(w, &path, norm))
}

/// Relative defect of the identity (C^f_a)* = C^b_(a*), i.e.
/// ‖(C^f(x,n))* − C^b_(a*)(x,n)‖ / ‖C^f(x,n)‖.
pub fn adjoint_identity_check(w: &Weight, path: &[usize], norm: MatrixNorm) -> f64 {
    let fwd = forward_product_path(w, path, norm);
    let bwd = backward_product_path(&w.adjoint(), path, norm);
    if fwd.log_norm == f64::NEG_INFINITY && bwd.log_norm == f64::NEG_INFINITY {
        return 0.0;
    }
    let scale = fwd.log_norm.max(bwd.log_norm);
    let lhs = fwd.normalized.adjoint() * Complex64::from((fwd.log_norm - scale).exp());
    let rhs = &bwd.normalized * Complex64::from((bwd.log_norm - scale).exp());
    op_norm(&(lhs - rhs), norm)
}

/// u_n = sup over x ∈ Δₙ of ln ‖C^f(x,n)‖ for n = 1..n_max.
///
/// Deterministic backends iterate one running product per surviving
/// start state. The branching shift backend runs a path DP; for d = 1
/// a max-plus recursion is exact, for d ≥ 2 distinct products are
/// tracked per node with deduplication and a hard cap. If the cap
/// prunes anything the returned flag is true and the values are no
/// longer certified suprema.
pub fn sup_log_norms(
    w: &Weight,
    sys: &PartialSystem,
    n_max: usize,
    norm: MatrixNorm,
) -> Result<(Vec<f64>, bool)> {
    if w.state_count() != sys.state_count() {
        return Err(SpecradError::InvalidWeight(format!(
            "weight has {} states, system has {}",
            w.state_count(),
            sys.state_count()
        )));
    }
    if sys.is_deterministic() {
        let mut alive: Vec<(usize, CocycleProduct)> = (0..sys.state_count())
            .map(|x| (x, CocycleProduct::identity(w.dim)))
            .collect();
        let mut out = Vec::with_capacity(n_max);
        for _ in 1..=n_max {
            let mut next = Vec::with_capacity(alive.len());
            let mut sup = f64::NEG_INFINITY;
            for (endpoint, mut prod) in alive {
                prod.absorb_right(w.value(endpoint), norm);
                if let Some(img) = sys.image(endpoint)? {
                    sup = sup.max(prod.log_norm);
                    next.push((img, prod));
                }
            }
            alive = next;
            out.push(sup);
            if alive.is_empty() {
                while out.len() < n_max {
                    out.push(f64::NEG_INFINITY);
                }
                break;
            }
        }
        return Ok((out, false));
    }

    let n_states = sys.state_count();
    let succ: Vec<Vec<usize>> = (0..n_states).map(|x| sys.successors(x)).collect();
    let extendable: Vec<bool> = succ.iter().map(|s| !s.is_empty()).collect();

    if w.dim == 1 {
        // max-plus DP: the scalar product norm is the sum of logs.
        let logs: Vec<f64> = (0..n_states).map(|x| w.value(x)[(0, 0)].norm().ln()).collect();
        // best[v] = max log-product over paths of length k ending at v.
        let mut best: Vec<f64> = (0..n_states)
            .map(|v| if extendable[v] { logs[v] } else { f64::NEG_INFINITY })
            .collect();
        // paths must stay extendable at the end (x ∈ Δₙ)
        let mut out = vec![best.iter().copied().fold(f64::NEG_INFINITY, f64::max)];
        for _ in 2..=n_max {
            let mut next = vec![f64::NEG_INFINITY; n_states];
            for u in 0..n_states {
                if best[u] == f64::NEG_INFINITY {
                    continue;
                }
                for &v in &succ[u] {
                    if extendable[v] {
                        let cand = best[u] + logs[v];
                        if cand > next[v] {
                            next[v] = cand;
                        }
                    }
                }
            }
            best = next;
            out.push(best.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
        return Ok((out, false));
    }

    // Exact path DP with per-node dedup and cap.
    let mut pruned = false;
    let mut per_node: Vec<Vec<CocycleProduct>> = (0..n_states)
        .map(|v| {
            if extendable[v] {
                let mut p = CocycleProduct::identity(w.dim);
                p.absorb_right(w.value(v), norm);
                vec![p]
            } else {
                vec![]
            }
        })
        .collect();
    let mut out = Vec::with_capacity(n_max);
    out.push(
        per_node
            .iter()
            .flatten()
            .map(|p| p.log_norm)
            .fold(f64::NEG_INFINITY, f64::max),
    );
    for _ in 2..=n_max {
        let mut next: Vec<Vec<CocycleProduct>> = vec![Vec::new(); n_states];
        for u in 0..n_states {
            for prod in &per_node[u] {
                for &v in &succ[u] {
                    if !extendable[v] {
                        continue;
                    }
                    let mut ext = prod.clone();
                    ext.absorb_right(w.value(v), norm);
                    push_dedup(&mut next[v], ext);
                }
            }
        }
        for bucket in &mut next {
            if bucket.len() > PATH_DP_CAP {
                bucket.sort_by(|a, b| b.log_norm.total_cmp(&a.log_norm));
                bucket.truncate(PATH_DP_CAP);
                pruned = true;
            }
        }
        per_node = next;
        out.push(
            per_node
                .iter()
                .flatten()
                .map(|p| p.log_norm)
                .fold(f64::NEG_INFINITY, f64::max),
        );
    }
    Ok((out, pruned))
}

fn push_dedup(bucket: &mut Vec<CocycleProduct>, p: CocycleProduct) {
    const TOL: f64 = 1e-12;
    for q in bucket.iter() {
        if (q.log_norm - p.log_norm).abs() <= TOL
            && q.normalized
                .iter()
                .zip(p.normalized.iter())
                .all(|(a, b)| (a - b).norm() <= TOL)
        {
            return;
        }
        if q.log_norm == f64::NEG_INFINITY && p.log_norm == f64::NEG_INFINITY {
            return;
        }
    }
    bucket.push(p);
}

/// Submultiplicative upper bound DP for branching backends: replaces
/// each product norm by the sum of factor norms along the best path.
fn sup_log_norms_submultiplicative(
    w: &Weight,
    sys: &PartialSystem,
    n_max: usize,
    norm: MatrixNorm,
) -> Result<Vec<f64>> {
    let logs: Vec<Complex64> = (0..sys.state_count())
        .map(|x| Complex64::from(op_norm(w.value(x), norm)))
        .collect();
    let scalar = Weight::scalar(logs)?;
    let (out, _) = sup_log_norms(&scalar, sys, n_max, MatrixNorm::L2)?;
    Ok(out)
}

/// Exact per-orbit exponent (1/p) ln r(P) for the periodic-orbit
/// measure, with P the forward product around one period.
pub fn measure_exponent(w: &Weight, mu: &InvariantMeasure, norm: MatrixNorm) -> Result<f64> {
    let InvariantMeasure::PeriodicOrbit { states } = mu else {
        return Err(SpecradError::InvalidMeasure(
            "measure_exponent needs a periodic-orbit measure; sample directional_lyapunov for general measures".into(),
        ));
    };
    Ok(orbit_exponent(w, states, norm))
}

/// (1/p) ln r(a(x0)·…·a(x_(p-1))) for a cycle given by its states.
pub fn orbit_exponent(w: &Weight, cycle: &[usize], norm: MatrixNorm) -> f64 {
    let prod = forward_product_path(w, cycle, norm);
    prod.log_spectral_radius() / cycle.len() as f64
}

/// The norm-based per-orbit quantity (1/p) ln ‖P‖; differs from
/// [`orbit_exponent`] when ‖P‖ ≠ r(P) (e.g. nilpotent products).
pub fn orbit_norm_exponent(w: &Weight, cycle: &[usize], norm: MatrixNorm) -> f64 {
    forward_product_path(w, cycle, norm).log_norm / cycle.len() as f64
}

#[derive(Debug, Clone, Copy)]
pub struct DirectionalEstimate {
    pub value: f64,
    pub n_used: usize,
    pub tail_window: usize,
}

/// Lyapunov exponent estimate of the backward adjoint cocycle in
/// direction v: iterate u ← a*(φ^k x)·u with renormalization and
/// Cesàro-average the per-step logs over the last half of the run.
pub fn directional_lyapunov_path(
    w: &Weight,
    path: &[usize],
    v: &CVector,
    ) -> Result<DirectionalEstimate> {
    if v.norm() == 0.0 {
        return Err(SpecradError::InvalidArgument("direction v must be nonzero".into()));
    }
    let n = path.len();
    let tail_window = n - n / 2;
    let mut u = v.normalize();
    let mut tail_sum = 0.0;
    for (k, &x) in path.iter().enumerate() {
        let next = w.value(x).adjoint() * &u;
        let nrm = next.norm();
        if nrm == 0.0 {
            return Ok(DirectionalEstimate {
                value: f64::NEG_INFINITY,
                n_used: k + 1,
                tail_window,
            });
        }
        if k >= n / 2 {
            tail_sum += nrm.ln();
        }
        u = next / Complex64::from(nrm);
    }
    Ok(DirectionalEstimate {
        value: tail_sum / tail_window as f64,
        n_used: n,
        tail_window,
    })
}

pub fn directional_lyapunov(
    w: &Weight,
    sys: &PartialSystem,
    x: usize,
    v: &CVector,
    n_max: usize,
) -> Result<DirectionalEstimate> {
    let path = sys.trajectory(x, n_max)?;
    directional_lyapunov_path(w, &path, v)
}

/// Bracket for the spectral exponent λ(a,φ).
///
/// Upper bound: min over n ≤ n_max of sup_x (1/n) ln ‖C^f(x,n)‖.
/// Lower bound: the best exact per-cycle exponent (1/p) ln r(P) over
/// simple periodic orbits of period ≤ max_cycle_len.
/// On deterministic finite backends, and for scalar weights on any
/// finite backend, every orbit is eventually captured by simple cycles,
/// so the cycle maximum is also an upper bound and the bracket collapses.
pub fn spectral_exponent(
    w: &Weight,
    sys: &PartialSystem,
    n_max: usize,
    norm: MatrixNorm,
    max_cycle_len: Option<usize>,
) -> Result<ExponentEstimate> {
    if n_max < 1 {
        return Err(SpecradError::InvalidArgument("n_max must be >= 1".into()));
    }
    let (sups, pruned) = sup_log_norms(w, sys, n_max, norm)?;
    let mut upper = f64::INFINITY;
    for (i, &u) in sups.iter().enumerate() {
        if u == f64::NEG_INFINITY {
            upper = f64::NEG_INFINITY;
            break;
        }
        upper = upper.min(u / (i + 1) as f64);
    }
    if pruned {
        // The path DP was truncated, so its suprema are not certified;
        // fall back to the submultiplicative bound for the upper side.
        let subs = sup_log_norms_submultiplicative(w, sys, n_max, norm)?;
        let mut sub_upper = f64::INFINITY;
        for (i, &u) in subs.iter().enumerate() {
            if u == f64::NEG_INFINITY {
                sub_upper = f64::NEG_INFINITY;
                break;
            }
            sub_upper = sub_upper.min(u / (i + 1) as f64);
        }
        upper = sub_upper;
    }

    if sys.is_sampled() {
        let last = *sups.last().unwrap() / n_max as f64;
        let lower = last.min(upper);
        let est = ExponentEstimate::new(lower, upper, "spectral-exponent", n_max)
            .sampled()
            .flag("grid-sampled");
        return Ok(est);
    }

    let n_states = sys.state_count();
    let cap = max_cycle_len.unwrap_or(n_states.min(10)).max(1);
    let mut lower = f64::NEG_INFINITY;
    let mut best: Option<Orbit> = None;
    let orbits = periodic_orbits(sys, cap, None)?;
    let cycles_exist = !orbits.is_empty();
    for orbit in orbits {
        let v = orbit_exponent(w, &orbit.states, norm);
        if v > lower || best.is_none() {
            lower = v;
            best = Some(orbit);
        }
    }
    // On a deterministic finite backend every orbit is eventually
    // periodic; for scalar weights long paths decompose into simple
    // cycles. In both cases the cycle maximum is the exact exponent.
    let cycles_exhaustive = cap >= n_states;
    if cycles_exhaustive && cycles_exist && (sys.is_deterministic() || w.dim == 1) {
        upper = lower;
    }
    if upper == f64::NEG_INFINITY {
        lower = f64::NEG_INFINITY;
    }
    let mut est = ExponentEstimate::new(lower.min(upper), upper, "spectral-exponent", n_max);
    if pruned {
        est = est.flag("path-dp-pruned");
    }
    if let Some(o) = best {
        est = est.with_witness(Witness::Orbit { states: o.states });
    }
    Ok(est)
}


#[cfg(test)]
mod branching_tests {
    use super::*;
    use crate::dynsys::PartialSystem;
    use crate::sampling::{random_matrix, rng_from_seed};

    #[test]
    fn pruned_path_dp_falls_back_to_certified_upper_bound() {
        let mut rng = rng_from_seed(33);
        let sys = PartialSystem::sft(
            vec![vec![true, true], vec![true, false]], 1).unwrap();
        let w = Weight::new((0..2).map(|_| random_matrix(&mut rng, 2)).collect()).unwrap();
        let est = spectral_exponent(&w, &sys, 40, MatrixNorm::L2, None).unwrap();
        // whether or not the DP pruned, the bracket must be ordered and
        // the submultiplicative bound must dominate the cycle bound
        assert!(est.lower <= est.upper + 1e-12);
        let subs = sup_log_norms_submultiplicative(&w, &sys, 40, MatrixNorm::L2).unwrap();
        let (exact, _) = sup_log_norms(&w, &sys, 12, MatrixNorm::L2).unwrap();
        for n in 1..=12usize {
            assert!(exact[n - 1] <= subs[n - 1] + 1e-9);
        }
    }
}

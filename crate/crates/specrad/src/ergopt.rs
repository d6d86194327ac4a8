//! Exact variational principles on finite systems: maximum-mean-cycle
//! optimization on word graphs, the commutative (scalar) principle, the
//! periodic-orbit principle, and the classical weighted-shift formula.
//!
//! For scalar weights the optimization over invariant measures is a
//! linear program over cylinder weights whose extreme points are simple
//! cycles, so the optimum is the maximum mean cycle of the word graph
//! with edge weight ln|a(source)|.

use crate::cocycle::{orbit_exponent, orbit_norm_exponent, spectral_exponent, Weight};
use crate::dynsys::{periodic_orbits, PartialSystem};
use crate::error::{Result, SpecradError};
use crate::estimate::{ExponentEstimate, Witness};
use crate::linalg::MatrixNorm;
use num_complex::Complex64;

/// Directed graph with real edge weights; −∞-weight edges are dropped
/// at construction so every remaining cycle has finite mean weight.
#[derive(Debug, Clone)]
pub struct WordGraph {
    pub node_count: usize,
    /// adjacency: edges[u] = (v, weight) pairs, sorted by v
    pub edges: Vec<Vec<(usize, f64)>>,
}

impl WordGraph {
    pub fn new(node_count: usize, edge_list: &[(usize, usize, f64)]) -> Result<Self> {
        let mut edges = vec![Vec::new(); node_count];
        for &(u, v, w) in edge_list {
            if u >= node_count || v >= node_count {
                return Err(SpecradError::InvalidArgument(format!(
                    "edge ({u},{v}) out of range for {node_count} nodes"
                )));
            }
            if w == f64::NEG_INFINITY {
                continue;
            }
            if !w.is_finite() {
                return Err(SpecradError::InvalidArgument(format!(
                    "edge ({u},{v}) has non-finite weight {w}"
                )));
            }
            edges[u].push((v, w));
        }
        for adj in &mut edges {
            adj.sort_by(|a, b| a.0.cmp(&b.0));
            adj.dedup_by_key(|e| e.0);
        }
        Ok(WordGraph { node_count, edges })
    }

    /// Word graph of a finite system with a scalar weight: one node per
    /// state, an edge u → v per admissible transition, edge weight
    /// ln|a(u)|. Zero-weight states contribute −∞ edges, which are
    /// dropped.
    pub fn from_system(sys: &PartialSystem, w: &Weight) -> Result<Self> {
        if sys.is_sampled() {
            return Err(SpecradError::UnsupportedBackend(
                "word graphs require a finite backend".into(),
            ));
        }
        let logs = w.log_abs()?;
        if w.state_count() != sys.state_count() {
            return Err(SpecradError::InvalidWeight(format!(
                "weight has {} states, system has {}",
                w.state_count(),
                sys.state_count()
            )));
        }
        let n = sys.state_count();
        let mut list = Vec::new();
        for u in 0..n {
            for v in sys.successors(u) {
                list.push((u, v, logs[u]));
            }
        }
        WordGraph::new(n, &list)
    }
}

/// Maximum mean cycle via Karp's dynamic program, with a super-source
/// so every node is reachable at step 0. Returns −∞ and no witness on
/// acyclic graphs. Ties in the DP break toward the smaller predecessor,
/// and the witness cycle is rotated to its smallest node, so output is
/// deterministic.
pub fn karp_max_mean_cycle(g: &WordGraph) -> (f64, Option<Vec<usize>>) {
    let n = g.node_count;
    if n == 0 {
        return (f64::NEG_INFINITY, None);
    }
    // d[k][v] = max weight of a k-edge walk ending at v (super-source
    // convention: d[0][v] = 0 everywhere); par[k][v] = predecessor.
    let mut d = vec![vec![f64::NEG_INFINITY; n]; n + 1];
    let mut par = vec![vec![usize::MAX; n]; n + 1];
    for v in 0..n {
        d[0][v] = 0.0;
    }
    for k in 1..=n {
        for u in 0..n {
            if d[k - 1][u] == f64::NEG_INFINITY {
                continue;
            }
            for &(v, w) in &g.edges[u] {
                let cand = d[k - 1][u] + w;
                if cand > d[k][v] {
                    d[k][v] = cand;
                    par[k][v] = u;
                }
            }
        }
    }

    let mut mu = f64::NEG_INFINITY;
    let mut arg_v = None;
    for v in 0..n {
        if d[n][v] == f64::NEG_INFINITY {
            continue;
        }
        let mut worst = f64::INFINITY;
        for k in 0..n {
            if d[k][v] == f64::NEG_INFINITY {
                continue;
            }
            worst = worst.min((d[n][v] - d[k][v]) / (n - k) as f64);
        }
        if worst > mu {
            mu = worst;
            arg_v = Some(v);
        }
    }
    let Some(v0) = arg_v else {
        return (f64::NEG_INFINITY, None);
    };

    // The optimal n-edge walk ending at v0 contains a cycle of mean mu.
    let mut walk = vec![v0];
    let mut v = v0;
    for k in (1..=n).rev() {
        v = par[k][v];
        walk.push(v);
    }
    walk.reverse(); // walk[0] is the walk start, walk[n] = v0
    let mut witness = None;
    'outer: for i in 0..walk.len() {
        for j in (i + 1)..walk.len() {
            if walk[i] == walk[j] {
                let cycle = &walk[i..j];
                let mut total = 0.0;
                for t in 0..cycle.len() {
                    let u = cycle[t];
                    let w = cycle[(t + 1) % cycle.len()];
                    let Some(&(_, ew)) = g.edges[u].iter().find(|e| e.0 == w) else {
                        continue 'outer;
                    };
                    total += ew;
                }
                if (total / cycle.len() as f64 - mu).abs() <= 1e-9 * (1.0 + mu.abs()) {
                    witness = Some(rotate_to_min(cycle));
                    break 'outer;
                }
            }
        }
    }
    (mu, witness)
}

fn rotate_to_min(cycle: &[usize]) -> Vec<usize> {
    let (pos, _) = cycle
        .iter()
        .enumerate()
        .min_by_key(|&(_, &v)| v)
        .expect("cycle is nonempty");
    let mut out = Vec::with_capacity(cycle.len());
    out.extend_from_slice(&cycle[pos..]);
    out.extend_from_slice(&cycle[..pos]);
    out
}

/// Independent brute-force oracle: enumerates all simple cycles up to
/// `max_len` by rooted DFS and returns the maximum mean weight. Must
/// agree with [`karp_max_mean_cycle`] when max_len ≥ node count.
pub fn cycle_enumeration_oracle(g: &WordGraph, max_len: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    // simple cycles rooted at their minimal node
    for root in 0..g.node_count {
        let mut stack: Vec<(Vec<usize>, f64)> = vec![(vec![root], 0.0)];
        while let Some((path, acc)) = stack.pop() {
            let last = *path.last().unwrap();
            for &(v, w) in &g.edges[last] {
                if v == root {
                    let mean = (acc + w) / path.len() as f64;
                    if mean > best {
                        best = mean;
                    }
                } else if v > root && path.len() < max_len && !path.contains(&v) {
                    let mut p = path.clone();
                    p.push(v);
                    stack.push((p, acc + w));
                }
            }
        }
    }
    best
}

/// Commutative variational principle for scalar weights on a finite
/// backend: λ = maximum mean cycle of the word graph, exactly. The
/// result is cross-checked against the spectral-exponent bracket; a
/// disagreement is an internal inconsistency and errors out.
pub fn commutative_vp(
    w: &Weight,
    sys: &PartialSystem,
    n_max: usize,
) -> Result<ExponentEstimate> {
    if w.dim != 1 {
        return Err(SpecradError::InvalidWeight(
            "the commutative principle needs a scalar weight".into(),
        ));
    }
    let g = WordGraph::from_system(sys, w)?;
    let (lambda, witness) = karp_max_mean_cycle(&g);
    let mut est = ExponentEstimate::new(lambda, lambda, "commutative-vp", sys.state_count());
    if let Some(cycle) = witness {
        est = est.with_witness(Witness::Orbit { states: cycle });
    }
    if lambda == f64::NEG_INFINITY {
        est = est.flag("empty-essential-domain");
    }
    let bracket = spectral_exponent(w, sys, n_max.max(1), MatrixNorm::L2, None)?;
    if lambda < bracket.lower - 1e-9 || lambda > bracket.upper + 1e-9 {
        return Err(SpecradError::ReconcileFailure(
            "commutative-vp".into(),
            "spectral-exponent".into(),
        ));
    }
    Ok(est)
}

/// Periodic-orbit variational principle. Lower bound: max over periodic
/// orbits of (1/p) ln r(P); the norm-based per-orbit quantity
/// max (1/p) ln ‖P‖ is computed alongside and a discrepancy between the
/// two is flagged (e.g. nilpotent cycle products). Upper bound from the
/// spectral-exponent bracket.
pub fn periodic_orbit_vp(
    w: &Weight,
    sys: &PartialSystem,
    n_max: usize,
    max_len: usize,
    norm: MatrixNorm,
) -> Result<ExponentEstimate> {
    if max_len < 1 {
        return Err(SpecradError::InvalidArgument("max_len must be >= 1".into()));
    }
    if sys.is_sampled() {
        return Err(SpecradError::UnsupportedBackend(
            "periodic-orbit principle requires a finite backend".into(),
        ));
    }
    // orbits must stay inside the weight's support (Δ^a)
    let support = w.support();
    let orbits = periodic_orbits(sys, max_len, Some(&support))?;
    let mut lower = f64::NEG_INFINITY;
    let mut norm_variant = f64::NEG_INFINITY;
    let mut best = None;
    for orbit in orbits {
        let r_val = orbit_exponent(w, &orbit.states, norm);
        let n_val = orbit_norm_exponent(w, &orbit.states, norm);
        norm_variant = norm_variant.max(n_val);
        if r_val > lower || best.is_none() {
            lower = r_val;
            best = Some(orbit);
        }
    }
    let bracket = spectral_exponent(w, sys, n_max, norm, Some(max_len))?;
    let upper = bracket.upper;
    let mut est = ExponentEstimate::new(lower.min(upper), upper, "periodic-orbit-vp", n_max);
    est.flags.push(format!("norm-variant={norm_variant}"));
    if (norm_variant - lower).abs() > 1e-9 && !(norm_variant == f64::NEG_INFINITY && lower == f64::NEG_INFINITY) {
        est = est.flag("norm-vs-spectral-radius-gap");
    }
    if let Some(o) = best {
        est = est.with_witness(Witness::Orbit { states: o.states });
    }
    Ok(est)
}

/// Weight sequence of the classical one-sided weighted shift.
#[derive(Debug, Clone)]
pub enum ShiftSpec {
    /// a(k) = period[k mod p]
    Periodic(Vec<Complex64>),
    /// a(k) = head[k] for k < head.len(), then periodic
    EventuallyPeriodic { head: Vec<Complex64>, period: Vec<Complex64> },
    /// first terms only, with a global bound sup_k |a(k)| ≤ bound
    Explicit { terms: Vec<Complex64>, bound: f64 },
}

impl ShiftSpec {
    fn term(&self, k: usize) -> Option<Complex64> {
        match self {
            ShiftSpec::Periodic(p) => Some(p[k % p.len()]),
            ShiftSpec::EventuallyPeriodic { head, period } => Some(if k < head.len() {
                head[k]
            } else {
                period[(k - head.len()) % period.len()]
            }),
            ShiftSpec::Explicit { terms, .. } => terms.get(k).copied(),
        }
    }
}

/// Finite-n value of the standard formula: sup over the observable
/// window starts k of (1/n) Σ_{i<n} ln|a(k+i)|, with the -∞ sentinel.
pub fn shift_finite_n(spec: &ShiftSpec, n: usize, k_range: usize) -> Result<f64> {
    if n == 0 {
        return Err(SpecradError::InvalidArgument("n must be >= 1".into()));
    }
    let mut best = f64::NEG_INFINITY;
    let mut k = 0usize;
    loop {
        let mut sum = 0.0;
        let mut ok = true;
        for i in 0..n {
            match spec.term(k + i) {
                Some(z) => sum += z.norm().ln(),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            break;
        }
        best = best.max(sum / n as f64);
        k += 1;
        if k >= k_range {
            break;
        }
    }
    Ok(best)
}

/// Spectral exponent of the classical weighted shift
/// r = lim_n sup_k (∏_{i<n} |a(k+i)|)^{1/n}, in log form.
///
/// Periodic and eventually periodic sequences evaluate exactly: the
/// limit is the arithmetic mean of ln|a| over one period of the tail
/// (the head never affects the limit). Explicit finite data yields only
/// a sampled point value with the trivial certified upper bound
/// ln(sup |a|).
pub fn classical_shift_radius(spec: &ShiftSpec, n_max: usize) -> Result<ExponentEstimate> {
    match spec {
        ShiftSpec::Periodic(period) | ShiftSpec::EventuallyPeriodic { period, .. } => {
            if period.is_empty() {
                return Err(SpecradError::InvalidArgument("empty period".into()));
            }
            let lambda =
                period.iter().map(|z| z.norm().ln()).sum::<f64>() / period.len() as f64;
            Ok(ExponentEstimate::new(lambda, lambda, "classical-shift", period.len()))
        }
        ShiftSpec::Explicit { terms, bound } => {
            if terms.is_empty() {
                return Err(SpecradError::InvalidArgument("no terms".into()));
            }
            if !(*bound > 0.0) || !bound.is_finite() {
                return Err(SpecradError::InvalidArgument(
                    "explicit spec needs a finite positive bound".into(),
                ));
            }
            let n = n_max.min(terms.len()).max(1);
            let value = shift_finite_n(spec, n, terms.len())?;
            let upper = bound.ln();
            let est = ExponentEstimate::new(f64::NEG_INFINITY, upper, "classical-shift", n)
                .with_value(value.min(upper))
                .sampled()
                .flag("finite-data");
            Ok(est)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::sampling::rng_from_seed;
    use approx::assert_relative_eq;
    use rand::RngExt;

    #[test]
    fn karp_on_two_self_loops_picks_the_larger() {
        // full 2-shift, weights ln 2 and ln 3
        let g = WordGraph::new(2, &[
            (0, 0, 2.0f64.ln()), (0, 1, 2.0f64.ln()),
            (1, 0, 3.0f64.ln()), (1, 1, 3.0f64.ln())]).unwrap();
        let (mu, witness) = karp_max_mean_cycle(&g);
        assert_relative_eq!(mu, 3.0f64.ln(), epsilon = 1e-12);
        assert_eq!(witness, Some(vec![1]));
        assert_relative_eq!(cycle_enumeration_oracle(&g, 2), mu, epsilon = 1e-12);
    }

    #[test]
    fn karp_single_self_loop() {
        let g = WordGraph::new(1, &[(0, 0, -1.25)]).unwrap();
        let (mu, witness) = karp_max_mean_cycle(&g);
        assert_relative_eq!(mu, -1.25);
        assert_eq!(witness, Some(vec![0]));
    }

    #[test]
    fn karp_unique_two_cycle_gives_arithmetic_mean() {
        // transitions [[0,1],[1,0]]: only the 2-cycle; weights ln2, ln8
        let g = WordGraph::new(2, &[(0, 1, 2.0f64.ln()), (1, 0, 8.0f64.ln())]).unwrap();
        let (mu, witness) = karp_max_mean_cycle(&g);
        assert_relative_eq!(mu, 4.0f64.ln(), epsilon = 1e-12);
        assert_eq!(witness, Some(vec![0, 1]));
        assert_relative_eq!(cycle_enumeration_oracle(&g, 2), mu, epsilon = 1e-12);
    }

    #[test]
    fn karp_acyclic_graph_has_no_cycle() {
        let g = WordGraph::new(3, &[(0, 1, 1.0), (1, 2, 5.0)]).unwrap();
        let (mu, witness) = karp_max_mean_cycle(&g);
        assert_eq!(mu, f64::NEG_INFINITY);
        assert!(witness.is_none());
        assert_eq!(cycle_enumeration_oracle(&g, 3), f64::NEG_INFINITY);
    }

    #[test]
    fn karp_matches_oracle_on_random_small_graphs() {
        let mut rng = rng_from_seed(99);
        for _ in 0..100 {
            let n = rng.random_range(1..=5usize);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in 0..n {
                    if rng.random_range(0.0..1.0) < 0.5 {
                        edges.push((u, v, rng.random_range(-2.0..2.0)));
                    }
                }
            }
            let g = WordGraph::new(n, &edges).unwrap();
            let (mu, witness) = karp_max_mean_cycle(&g);
            let oracle = cycle_enumeration_oracle(&g, n);
            if mu == f64::NEG_INFINITY {
                assert_eq!(oracle, f64::NEG_INFINITY);
            } else {
                assert!((mu - oracle).abs() <= 1e-12, "karp {mu} oracle {oracle}");
                // witness cycle must achieve the optimum
                let cycle = witness.expect("finite optimum must have a witness");
                let mut total = 0.0;
                for t in 0..cycle.len() {
                    let u = cycle[t];
                    let v = cycle[(t + 1) % cycle.len()];
                    total += g.edges[u].iter().find(|e| e.0 == v).unwrap().1;
                }
                assert!((total / cycle.len() as f64 - mu).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn commutative_vp_constant_weight_is_ln_c() {
        let sys = PartialSystem::full_shift(2, 1).unwrap();
        let w = Weight::scalar_real(&[5.0, 5.0]).unwrap();
        let est = commutative_vp(&w, &sys, 50).unwrap();
        assert_relative_eq!(est.value, 5.0f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(est.r_value(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn commutative_vp_full_two_shift_picks_max() {
        let sys = PartialSystem::full_shift(2, 1).unwrap();
        let w = Weight::scalar_real(&[2.0, 3.0]).unwrap();
        let est = commutative_vp(&w, &sys, 50).unwrap();
        assert_relative_eq!(est.r_value(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn commutative_vp_zero_on_every_cycle_gives_r_zero() {
        // 0 -> 1 -> 0 with a(0) = 0 kills both cycles through 0; state 1
        // has no other cycle.
        let sys = PartialSystem::finite_map(vec![Some(1), Some(0)]).unwrap();
        let w = Weight::scalar_real(&[0.0, 7.0]).unwrap();
        let est = commutative_vp(&w, &sys, 50).unwrap();
        assert_eq!(est.value, f64::NEG_INFINITY);
        assert_eq!(est.r_value(), 0.0);
        assert!(est.flags.iter().any(|f| f == "empty-essential-domain"));
    }

    #[test]
    fn periodic_orbit_vp_matches_commutative_for_scalars() {
        let sys = PartialSystem::sft(vec![vec![true, true], vec![true, false]], 1).unwrap();
        let w = Weight::scalar_real(&[2.0, 0.25]).unwrap();
        let com = commutative_vp(&w, &sys, 100).unwrap();
        let pov = periodic_orbit_vp(&w, &sys, 100, 2, MatrixNorm::L2).unwrap();
        assert_relative_eq!(pov.lower, com.value, epsilon = 1e-12);
    }

    #[test]
    fn periodic_orbit_vp_two_cycle_swap_example() {
        let a0 = CMatrix::from_row_slice(2, 2, &[
            Complex64::ZERO, Complex64::from(2.0),
            Complex64::ZERO, Complex64::ZERO]);
        let a1 = CMatrix::from_row_slice(2, 2, &[
            Complex64::ZERO, Complex64::ZERO,
            Complex64::from(2.0), Complex64::ZERO]);
        let sys = PartialSystem::finite_map(vec![Some(1), Some(0)]).unwrap();
        let w = Weight::new(vec![a0, a1]).unwrap();
        let est = periodic_orbit_vp(&w, &sys, 64, 2, MatrixNorm::L2).unwrap();
        assert_relative_eq!(est.lower, 2.0f64.ln(), epsilon = 1e-10);
        // here the norm variant coincides: (1/2) ln ‖A0·A1‖ = ln 2
        assert!(!est.flags.iter().any(|f| f == "norm-vs-spectral-radius-gap"));
    }

    #[test]
    fn periodic_orbit_vp_flags_nilpotent_gap() {
        let a = CMatrix::from_row_slice(2, 2, &[
            Complex64::ZERO, Complex64::ONE,
            Complex64::ZERO, Complex64::ZERO]);
        let sys = PartialSystem::finite_map(vec![Some(0)]).unwrap();
        let w = Weight::constant(a, 1).unwrap();
        let est = periodic_orbit_vp(&w, &sys, 32, 1, MatrixNorm::L2).unwrap();
        assert_eq!(est.lower, f64::NEG_INFINITY);
        assert!(est.flags.iter().any(|f| f == "norm-vs-spectral-radius-gap"));
    }

    #[test]
    fn classical_shift_periodic_two_eight() {
        let spec = ShiftSpec::Periodic(vec![Complex64::from(2.0), Complex64::from(8.0)]);
        let est = classical_shift_radius(&spec, 100).unwrap();
        assert_relative_eq!(est.r_value(), 4.0, epsilon = 1e-12);
        // finite-n evaluation converges to the same limit
        let fin = shift_finite_n(&spec, 1000, 2).unwrap();
        assert!((fin - 4.0f64.ln()).abs() <= 1e-3);
    }

    #[test]
    fn classical_shift_constant_and_head_independence() {
        let c = Complex64::new(0.3, -0.4); // |c| = 0.5
        let est = classical_shift_radius(&ShiftSpec::Periodic(vec![c]), 10).unwrap();
        assert_relative_eq!(est.r_value(), 0.5, epsilon = 1e-12);
        let ep = ShiftSpec::EventuallyPeriodic {
            head: vec![Complex64::from(100.0)],
            period: vec![Complex64::ONE],
        };
        let est = classical_shift_radius(&ep, 10).unwrap();
        assert_relative_eq!(est.r_value(), 1.0, epsilon = 1e-12);
        // finite-n evaluation with n far beyond the head agrees
        let fin = shift_finite_n(&ep, 10_000, 2).unwrap();
        assert!((fin.exp() - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn classical_shift_explicit_is_sampled_with_certified_upper() {
        let spec = ShiftSpec::Explicit {
            terms: (0..100).map(|k| Complex64::from(1.0 + (k % 3) as f64)).collect(),
            bound: 3.0,
        };
        let est = classical_shift_radius(&spec, 50).unwrap();
        assert_eq!(est.exactness, crate::estimate::Exactness::Sampled);
        assert!(est.upper <= 3.0f64.ln() + 1e-12);
        assert!(est.value <= est.upper);
    }

    #[test]
    fn cesaro_mean_equals_shift_log_value_on_random_periodic() {
        let mut rng = rng_from_seed(55);
        for _ in 0..20 {
            let p = rng.random_range(1..=6usize);
            let period: Vec<Complex64> = (0..p)
                .map(|_| Complex64::from(rng.random_range(0.1..4.0)))
                .collect();
            let est = classical_shift_radius(&ShiftSpec::Periodic(period.clone()), 10).unwrap();
            // Cesàro mean of ln|a(k)| over a long stretch
            let n = 6000; // multiple of every p ≤ 6
            let cesaro: f64 = (0..n)
                .map(|k| period[k % p].norm().ln())
                .sum::<f64>() / n as f64;
            assert_relative_eq!(cesaro, est.value, epsilon = 1e-12);
        }
    }
}

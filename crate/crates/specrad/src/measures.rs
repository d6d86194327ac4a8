//! Invariant measures on finite systems and the empirical-average
//! variational principle.
//!
//! Three kinds of measures are supported: periodic-orbit measures,
//! cylinder (word-weight) measures with flow balance, and empirical
//! (Krylov–Bogolyubov) measures along finite orbit segments.
//! Observables may take the value -∞ (from ln|a| at zeros); the
//! sentinel propagates through all arithmetic.

use crate::dynsys::{periodic_orbits, Orbit, PartialSystem};
use crate::error::{Result, SpecradError};
use crate::estimate::{ExponentEstimate, Witness};
use std::collections::BTreeMap;

pub const FLOW_BALANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum InvariantMeasure {
    /// Equal mass 1/p on each point of a p-periodic orbit.
    PeriodicOrbit { states: Vec<usize> },
    /// Word weights p_w at the system's word depth together with the
    /// one-step extension weights q_(u,v); flow balance ties them.
    Cylinder {
        node_weights: Vec<f64>,
        edge_weights: BTreeMap<(usize, usize), f64>,
    },
    /// Mass 1/n on each point of an orbit segment of length n.
    Empirical { path: Vec<usize> },
}

impl InvariantMeasure {
    pub fn periodic(orbit: &Orbit) -> Self {
        InvariantMeasure::PeriodicOrbit {
            states: orbit.states.clone(),
        }
    }

    pub fn empirical(path: Vec<usize>) -> Result<Self> {
        if path.is_empty() {
            return Err(SpecradError::InvalidMeasure("empty orbit segment".into()));
        }
        Ok(InvariantMeasure::Empirical { path })
    }

    /// Validates nonnegativity, total mass 1 and flow balance:
    /// Σ out-edges q = Σ in-edges q = p_w at every node.
    pub fn cylinder(
        sys: &PartialSystem,
        node_weights: Vec<f64>,
        edge_weights: BTreeMap<(usize, usize), f64>,
    ) -> Result<Self> {
        let n = sys.state_count();
        if node_weights.len() != n {
            return Err(SpecradError::InvalidMeasure(format!(
                "expected {n} node weights, got {}",
                node_weights.len()
            )));
        }
        if node_weights.iter().any(|&p| p < 0.0) || edge_weights.values().any(|&q| q < 0.0) {
            return Err(SpecradError::InvalidMeasure("negative weight".into()));
        }
        let total: f64 = node_weights.iter().sum();
        if (total - 1.0).abs() > FLOW_BALANCE_TOL {
            return Err(SpecradError::InvalidMeasure(format!(
                "node weights sum to {total}, not 1"
            )));
        }
        for (&(u, v), &q) in &edge_weights {
            if q > 0.0 && !sys.successors(u).contains(&v) {
                return Err(SpecradError::InvalidMeasure(format!(
                    "positive weight on inadmissible edge ({u}, {v})"
                )));
            }
        }
        let mut out_sum = vec![0.0; n];
        let mut in_sum = vec![0.0; n];
        for (&(u, v), &q) in &edge_weights {
            out_sum[u] += q;
            in_sum[v] += q;
        }
        for w in 0..n {
            if (out_sum[w] - node_weights[w]).abs() > FLOW_BALANCE_TOL
                || (in_sum[w] - node_weights[w]).abs() > FLOW_BALANCE_TOL
            {
                return Err(SpecradError::InvalidMeasure(format!(
                    "flow balance violated at node {w}: out {} in {} p {}",
                    out_sum[w], in_sum[w], node_weights[w]
                )));
            }
        }
        Ok(InvariantMeasure::Cylinder {
            node_weights,
            edge_weights,
        })
    }

    /// Bernoulli cylinder measure on a full shift at word depth 1.
    pub fn bernoulli(sys: &PartialSystem, probs: &[f64]) -> Result<Self> {
        let n = sys.state_count();
        if probs.len() != n {
            return Err(SpecradError::InvalidMeasure(
                "one probability per state required".into(),
            ));
        }
        let mut edges = BTreeMap::new();
        for u in 0..n {
            for v in sys.successors(u) {
                edges.insert((u, v), probs[u] * probs[v]);
            }
        }
        InvariantMeasure::cylinder(sys, probs.to_vec(), edges)
    }

    /// Aggregated atoms (state, mass), sorted by state.
    pub fn atoms(&self) -> Vec<(usize, f64)> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        match self {
            InvariantMeasure::PeriodicOrbit { states } => {
                let mass = 1.0 / states.len() as f64;
                for &x in states {
                    *acc.entry(x).or_insert(0.0) += mass;
                }
            }
            InvariantMeasure::Cylinder { node_weights, .. } => {
                for (x, &p) in node_weights.iter().enumerate() {
                    if p > 0.0 {
                        acc.insert(x, p);
                    }
                }
            }
            InvariantMeasure::Empirical { path } => {
                let mass = 1.0 / path.len() as f64;
                for &x in path {
                    *acc.entry(x).or_insert(0.0) += mass;
                }
            }
        }
        acc.into_iter().collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            InvariantMeasure::PeriodicOrbit { states } => serde_json::json!({
                "kind": "periodic-orbit",
                "atoms": self.atoms(),
                "orbit": states,
            }),
            InvariantMeasure::Cylinder { node_weights, edge_weights } => serde_json::json!({
                "kind": "cylinder",
                "weights": node_weights,
                "edge_weights": edge_weights.iter()
                    .map(|(&(u, v), &q)| serde_json::json!([u, v, q]))
                    .collect::<Vec<_>>(),
            }),
            InvariantMeasure::Empirical { path } => serde_json::json!({
                "kind": "empirical",
                "atoms": self.atoms(),
                "base_point": path[0],
                "length": path.len(),
            }),
        }
    }
}

/// max over singletons ω = {x} of |μ(φ⁻¹(ω)) − μ(ω)|.
pub fn invariance_defect(mu: &InvariantMeasure, sys: &PartialSystem) -> Result<f64> {
    if sys.is_sampled() {
        return Err(SpecradError::UnsupportedBackend(
            "invariance_defect requires a finite backend".into(),
        ));
    }
    let n = sys.state_count();
    let mut mass = vec![0.0; n];
    for (x, m) in mu.atoms() {
        mass[x] = m;
    }
    // μ(φ⁻¹{x}) accumulated per x. For atoms we need φ at each atom; on
    // the branching Sft backend the measure's own support structure
    // (cycle or path order) supplies the transition.
    let mut preimage_mass = vec![0.0; n];
    match mu {
        InvariantMeasure::PeriodicOrbit { states } => {
            let p = states.len();
            let m = 1.0 / p as f64;
            for (i, _) in states.iter().enumerate() {
                preimage_mass[states[(i + 1) % p]] += m;
            }
        }
        InvariantMeasure::Empirical { path } => {
            let m = 1.0 / path.len() as f64;
            if sys.is_deterministic() {
                for &x in path {
                    if let Some(y) = sys.image(x)? {
                        preimage_mass[y] += m;
                    }
                }
            } else {
                // Path order supplies the transitions; the final atom's
                // image is outside the recorded segment.
                for w in path.windows(2) {
                    preimage_mass[w[1]] += m;
                }
            }
        }
        InvariantMeasure::Cylinder { edge_weights, .. } => {
            for (&(_, v), &q) in edge_weights {
                preimage_mass[v] += q;
            }
        }
    }
    Ok((0..n)
        .map(|x| (preimage_mass[x] - mass[x]).abs())
        .fold(0.0, f64::max))
}

/// ∫ f dμ = Σ μ({x}) f(x); −∞ as soon as a positive-mass atom hits −∞.
pub fn integrate(mu: &InvariantMeasure, f: &[f64]) -> f64 {
    let atoms = mu.atoms();
    if atoms.iter().any(|&(x, m)| m > 0.0 && f[x] == f64::NEG_INFINITY) {
        return f64::NEG_INFINITY;
    }
    atoms.iter().map(|&(x, m)| m * f[x]).sum()
}

/// Sₙ(f)(x) = (1/n)(f(x) + f(φx) + … + f(φ^(n-1)x)) on deterministic
/// backends.
pub fn empirical_average(sys: &PartialSystem, f: &[f64], x: usize, n: usize) -> Result<f64> {
    if n < 1 {
        return Err(SpecradError::InvalidArgument("n must be >= 1".into()));
    }
    let path = sys.trajectory(x, n)?;
    // x must lie in Δₙ, not just Δₙ₋₁.
    if sys.image(*path.last().unwrap())?.is_none() {
        return Err(SpecradError::OutsideDomain { point: x, n });
    }
    Ok(empirical_average_path(f, &path))
}

/// The same average along an explicit orbit segment (used for the
/// branching shift backend).
pub fn empirical_average_path(f: &[f64], path: &[usize]) -> f64 {
    path.iter().map(|&x| f[x]).sum::<f64>() / path.len() as f64
}

/// Variational principle for lim sup of empirical averages:
/// upper bound min_n sup_(x∈Δₙ) Sₙ(f)(x), lower bound the best
/// periodic-orbit integral.
pub fn limsup_empirical(
    sys: &PartialSystem,
    f: &[f64],
    n_max: usize,
) -> Result<ExponentEstimate> {
    if n_max < 1 {
        return Err(SpecradError::InvalidArgument("n_max must be >= 1".into()));
    }
    let n_states = sys.state_count();
    let succ: Vec<Vec<usize>> = (0..n_states).map(|x| sys.successors(x)).collect();

    // t_k(x) = max over k-step continuations of the f-sum over the first
    // k orbit points; finite exactly when x ∈ Δ_k.
    let mut t = vec![0.0_f64; n_states];
    let mut upper = f64::INFINITY;
    let mut empty_domain = false;
    for k in 1..=n_max {
        let mut next = vec![f64::NEG_INFINITY; n_states];
        for x in 0..n_states {
            let best_cont = succ[x]
                .iter()
                .map(|&y| t[y])
                .fold(f64::NEG_INFINITY, f64::max);
            if best_cont > f64::NEG_INFINITY {
                next[x] = f[x] + best_cont;
            }
        }
        t = next;
        let sup = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if sup == f64::NEG_INFINITY {
            empty_domain = true;
            upper = f64::NEG_INFINITY;
            break;
        }
        upper = upper.min(sup / k as f64);
    }

    let mut lower = f64::NEG_INFINITY;
    let mut best_orbit: Option<Orbit> = None;
    if sys.is_sampled() {
        // No exact periodic orbits on the grid; the sampled Birkhoff
        // average over all starts is reported instead.
        for x in 0..n_states {
            if let Ok(path) = sys.trajectory(x, n_max) {
                let avg = empirical_average_path(f, &path);
                if avg > lower {
                    lower = avg;
                }
            }
        }
        lower = lower.min(upper);
        let mut est = ExponentEstimate::new(lower, upper, "limsup-empirical", n_max).sampled();
        if empty_domain {
            est = est.flag("empty-domain");
        }
        return Ok(est);
    }
    for orbit in periodic_orbits(sys, n_states.max(1), None)? {
        let mu = InvariantMeasure::periodic(&orbit);
        let v = integrate(&mu, f);
        if v > lower {
            lower = v;
            best_orbit = Some(orbit);
        }
    }
    // On a finite backend every long path decomposes into simple cycles
    // plus a bounded remainder, so the max simple-cycle mean is also a
    // certified upper bound; the bracket collapses.
    if best_orbit.is_some() {
        upper = upper.min(lower);
    }
    if empty_domain {
        lower = f64::NEG_INFINITY;
        upper = f64::NEG_INFINITY;
    }
    let mut est = ExponentEstimate::new(lower.min(upper), upper, "limsup-empirical", n_max);
    if empty_domain {
        est = est.flag("empty-domain");
    }
    if let Some(o) = best_orbit {
        est = est.with_witness(Witness::Orbit { states: o.states });
    }
    Ok(est)
}

/// The empirical measure ν_n = (1/n) Σ δ_(φ^k x) of length n at x.
pub fn krylov_bogolyubov(sys: &PartialSystem, x: usize, n: usize) -> Result<InvariantMeasure> {
    if !sys.is_deterministic() {
        return Err(SpecradError::UnsupportedBackend(
            "krylov_bogolyubov needs a deterministic backend; supply a path instead".into(),
        ));
    }
    if sys.is_sampled() {
        return Err(SpecradError::UnsupportedBackend(
            "krylov_bogolyubov requires a finite backend".into(),
        ));
    }
    let path = sys.trajectory(x, n)?;
    InvariantMeasure::empirical(path)
}

/// Terminal-cycle average of f along the forward orbit of x: the exact
/// value of lim Sₙ(f)(x) for eventually periodic orbits.
pub fn orbit_limit_average(sys: &PartialSystem, f: &[f64], x: usize) -> Result<Option<f64>> {
    let n_states = sys.state_count();
    let mut seen = vec![None; n_states];
    let mut order = Vec::new();
    let mut cur = x;
    loop {
        if let Some(start) = seen[cur] {
            let cycle: &[usize] = &order[start..];
            return Ok(Some(empirical_average_path(f, cycle)));
        }
        seen[cur] = Some(order.len());
        order.push(cur);
        match sys.image(cur)? {
            Some(next) => cur = next,
            None => return Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynsys::domain_chain;
    use crate::dynsys::PartialSystem;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fmap(phi: Vec<Option<usize>>) -> PartialSystem {
        PartialSystem::finite_map(phi).unwrap()
    }

    #[test]
    fn periodic_orbit_measure_is_invariant() {
        let sys = fmap(vec![Some(1), Some(2), Some(0)]);
        let mu = InvariantMeasure::periodic(&Orbit { states: vec![0, 1, 2] });
        assert_eq!(invariance_defect(&mu, &sys).unwrap(), 0.0);
    }

    #[test]
    fn empirical_measure_defect_is_at_most_two_over_n() {
        let sys = fmap(vec![Some(1), Some(2), Some(3), Some(1)]);
        for n in [5usize, 10, 50] {
            let mu = krylov_bogolyubov(&sys, 0, n).unwrap();
            let d = invariance_defect(&mu, &sys).unwrap();
            assert!(d <= 2.0 / n as f64 + 1e-15, "defect {d} at n {n}");
        }
    }

    #[test]
    fn balanced_cylinder_measure_is_invariant() {
        let sys = PartialSystem::full_shift(2, 1).unwrap();
        let mu = InvariantMeasure::bernoulli(&sys, &[0.5, 0.5]).unwrap();
        assert_eq!(invariance_defect(&mu, &sys).unwrap(), 0.0);
    }

    #[test]
    fn flow_balance_violation_is_rejected() {
        let sys = PartialSystem::full_shift(2, 1).unwrap();
        let mut edges = BTreeMap::new();
        edges.insert((0, 0), 0.5);
        edges.insert((1, 1), 0.5);
        // node weights inconsistent with the edges
        let r = InvariantMeasure::cylinder(&sys, vec![0.25, 0.75], edges);
        assert!(r.is_err());
    }

    #[test]
    fn integrate_constant_is_the_constant() {
        let sys = PartialSystem::full_shift(2, 1).unwrap();
        let mu = InvariantMeasure::bernoulli(&sys, &[0.3, 0.7]).unwrap();
        assert!((integrate(&mu, &[2.5, 2.5]) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn integrate_orbit_measure() {
        let mu = InvariantMeasure::periodic(&Orbit { states: vec![0, 1] });
        let f = [0.0, (2.0_f64).ln()];
        assert!((integrate(&mu, &f) - (2.0_f64).ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn integrate_bernoulli_log_weight() {
        let sys = PartialSystem::full_shift(2, 1).unwrap();
        let mu = InvariantMeasure::bernoulli(&sys, &[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let f = [(2.0_f64).ln(), (3.0_f64).ln()];
        let expect = (2.0_f64).ln() / 3.0 + 2.0 * (3.0_f64).ln() / 3.0;
        assert!((integrate(&mu, &f) - expect).abs() < 1e-14);
    }

    #[test]
    fn integrate_propagates_minus_infinity() {
        let mu = InvariantMeasure::periodic(&Orbit { states: vec![0, 1] });
        assert_eq!(integrate(&mu, &[f64::NEG_INFINITY, 1.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn empirical_average_basics() {
        let sys = fmap(vec![Some(1), Some(0)]);
        // constant observable
        assert_eq!(empirical_average(&sys, &[1.0, 1.0], 0, 4).unwrap(), 1.0);
        // alternating 0,1 at n = 4
        assert_eq!(empirical_average(&sys, &[0.0, 1.0], 0, 4).unwrap(), 0.5);
        // fixed point
        let fix = fmap(vec![Some(0)]);
        assert_eq!(empirical_average(&fix, &[3.25], 0, 7).unwrap(), 3.25);
    }

    #[test]
    fn empirical_average_outside_domain_errors() {
        let sys = fmap(vec![Some(1), None]);
        assert!(empirical_average(&sys, &[0.0, 0.0], 0, 3).is_err());
    }

    #[test]
    fn limsup_on_full_two_shift_attains_fixed_point() {
        let sys = PartialSystem::full_shift(2, 1).unwrap();
        let est = limsup_empirical(&sys, &[0.0, 1.0], 20).unwrap();
        assert!((est.lower - 1.0).abs() < 1e-12);
        assert!((est.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn limsup_on_forced_period_two_shift() {
        let sys = PartialSystem::sft(vec![vec![false, true], vec![true, false]], 1).unwrap();
        let est = limsup_empirical(&sys, &[0.0, 1.0], 40).unwrap();
        assert!((est.lower - 0.5).abs() < 1e-12);
        assert!(est.upper >= 0.5);
        assert!(est.upper - est.lower < 0.02);
    }

    #[test]
    fn limsup_of_constant_is_constant() {
        let sys = fmap(vec![Some(1), Some(2), Some(0)]);
        let est = limsup_empirical(&sys, &[0.75; 3], 10).unwrap();
        assert!((est.lower - 0.75).abs() < 1e-12);
        assert!((est.upper - 0.75).abs() < 1e-12);
    }

    #[test]
    fn limsup_with_empty_domain_reports_minus_infinity() {
        let sys = fmap(vec![None, None]);
        let est = limsup_empirical(&sys, &[1.0, 1.0], 3).unwrap();
        assert_eq!(est.upper, f64::NEG_INFINITY);
        assert!(est.flags.iter().any(|f| f == "empty-domain"));
    }

    #[test]
    fn kb_on_cycle_multiple_is_the_orbit_measure() {
        let sys = fmap(vec![Some(1), Some(0)]);
        let mu = krylov_bogolyubov(&sys, 0, 6).unwrap();
        assert_eq!(mu.atoms(), vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(invariance_defect(&mu, &sys).unwrap(), 0.0);
    }

    #[test]
    fn kb_length_one_is_dirac() {
        let sys = fmap(vec![Some(0)]);
        let mu = krylov_bogolyubov(&sys, 0, 1).unwrap();
        assert_eq!(mu.atoms(), vec![(0, 1.0)]);
    }

    #[test]
    fn kb_preperiodic_defect_bound() {
        // tail 0 -> 1, cycle (1 2): transient mass decays like t/n.
        let sys = fmap(vec![Some(1), Some(2), Some(1)]);
        for n in [9usize, 33, 101] {
            let mu = krylov_bogolyubov(&sys, 0, n).unwrap();
            let d = invariance_defect(&mu, &sys).unwrap();
            assert!(d <= 2.0 / n as f64 + 1e-15);
        }
    }

    fn random_small_system(rng: &mut ChaCha8Rng, n: usize) -> PartialSystem {
        let phi = (0..n)
            .map(|_| {
                if rng.random::<f64>() < 0.85 {
                    Some(rng.random_range(0..n))
                } else {
                    None
                }
            })
            .collect();
        fmap(phi)
    }

    #[test]
    fn bracket_soundness_and_collapse_on_small_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.random_range(1..=4usize);
            let sys = random_small_system(&mut rng, n);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let est = limsup_empirical(&sys, &f, 64).unwrap();
            assert!(est.lower <= est.upper + 1e-12);
            // brute-force max over enumerated cycles
            let mut brute = f64::NEG_INFINITY;
            for o in periodic_orbits(&sys, n, None).unwrap() {
                brute = brute.max(empirical_average_path(&f, &o.states));
            }
            if brute > f64::NEG_INFINITY {
                assert!(
                    (est.upper - brute).abs() <= 1e-9 && (est.lower - brute).abs() <= 1e-9,
                    "bracket [{}, {}] vs brute {brute}",
                    est.lower,
                    est.upper
                );
            } else {
                assert_eq!(est.upper, f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn limsup_equals_max_orbit_limit_over_essential_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.random_range(1..=5usize);
            let sys = random_small_system(&mut rng, n);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let est = limsup_empirical(&sys, &f, 80).unwrap();
            let dc = domain_chain(&sys, 1).unwrap();
            let mut best = f64::NEG_INFINITY;
            for &x in &dc.delta_inf {
                if let Some(v) = orbit_limit_average(&sys, &f, x).unwrap() {
                    best = best.max(v);
                }
            }
            if best > f64::NEG_INFINITY {
                assert!((est.lower - best).abs() <= 1e-9, "lower {} vs {best}", est.lower);
            }
        }
    }

    #[test]
    fn cylinder_measures_project_to_invariant_state_measures() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sys = PartialSystem::full_shift(3, 1).unwrap();
        for _ in 0..20 {
            let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
            let mu = InvariantMeasure::bernoulli(&sys, &probs).unwrap();
            assert!(invariance_defect(&mu, &sys).unwrap() <= 1e-12);
        }
    }
}

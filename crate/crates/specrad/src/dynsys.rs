//! Partial dynamical systems (X, φ) on finite state spaces and on a
//! sampled circle.
//!
//! Three backends:
//! - `FiniteMap`: φ is a partial function on {0..|X|-1}.
//! - `Sft`: states are admissible words of length N of a topological
//!   Markov chain; the left shift acts as the edge relation of the word
//!   graph (branching, so φ is a relation rather than a function).
//! - `CircleGrid`: a circle homeomorphism given by a monotone lift,
//!   evaluated exactly at grid points; state transitions round to the
//!   nearest grid point and every result downstream is labeled sampled.

use crate::error::{Result, SpecradError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct FiniteMap {
    pub phi: Vec<Option<usize>>,
}

impl FiniteMap {
    pub fn new(phi: Vec<Option<usize>>) -> Result<Self> {
        let n = phi.len();
        for (x, img) in phi.iter().enumerate() {
            if let Some(y) = img {
                if *y >= n {
                    return Err(SpecradError::InvalidSystem(format!(
                        "phi({x}) = {y} is outside the state space of size {n}"
                    )));
                }
            }
        }
        Ok(FiniteMap { phi })
    }
}

#[derive(Debug, Clone)]
pub struct Sft {
    pub symbol_count: usize,
    pub transitions: Vec<Vec<bool>>,
    pub word_depth: usize,
    /// Admissible words of length `word_depth`, lexicographically sorted.
    pub words: Vec<Vec<usize>>,
    succ: Vec<Vec<usize>>,
}

impl Sft {
    pub fn new(transitions: Vec<Vec<bool>>, word_depth: usize) -> Result<Self> {
        let n = transitions.len();
        if n == 0 || transitions.iter().any(|row| row.len() != n) {
            return Err(SpecradError::InvalidSystem(
                "transition matrix must be square and nonempty".into(),
            ));
        }
        if word_depth < 1 {
            return Err(SpecradError::InvalidSystem("word_depth must be >= 1".into()));
        }
        // Enumerate admissible words of length N in lexicographic order.
        let mut words: Vec<Vec<usize>> = (0..n).map(|s| vec![s]).collect();
        for _ in 1..word_depth {
            let mut next = Vec::new();
            for w in &words {
                let last = *w.last().unwrap();
                for s in 0..n {
                    if transitions[last][s] {
                        let mut w2 = w.clone();
                        w2.push(s);
                        next.push(w2);
                    }
                }
            }
            words = next;
        }
        let mut succ = vec![Vec::new(); words.len()];
        for (i, u) in words.iter().enumerate() {
            for (j, v) in words.iter().enumerate() {
                let overlap = word_depth == 1 || u[1..] == v[..word_depth - 1];
                if overlap && transitions[*u.last().unwrap()][*v.last().unwrap()] {
                    succ[i].push(j);
                }
            }
        }
        Ok(Sft {
            symbol_count: n,
            transitions,
            word_depth,
            words,
            succ,
        })
    }

    /// Full shift on `n` symbols with states of length `word_depth`.
    pub fn full_shift(n: usize, word_depth: usize) -> Result<Self> {
        Sft::new(vec![vec![true; n]; n], word_depth)
    }

    pub fn word_index(&self, word: &[usize]) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }
}

/// Monotone lift γ(t) = t + offset + Σ amp·sin(2πkt)/(2πk), which
/// automatically satisfies γ(t+1) = γ(t) + 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircleLift {
    pub offset: f64,
    /// (harmonic k, amplitude) pairs.
    #[serde(default)]
    pub harmonics: Vec<(u32, f64)>,
}

impl CircleLift {
    pub fn eval(&self, t: f64) -> f64 {
        use std::f64::consts::TAU;
        let mut y = t + self.offset;
        for &(k, amp) in &self.harmonics {
            let k = k as f64;
            y += amp * (TAU * k * t).sin() / (TAU * k);
        }
        y
    }

    fn derivative(&self, t: f64) -> f64 {
        use std::f64::consts::TAU;
        let mut d = 1.0;
        for &(k, amp) in &self.harmonics {
            d += amp * (TAU * k as f64 * t).cos();
        }
        d
    }
}

#[derive(Debug, Clone)]
pub struct CircleGrid {
    pub grid_size: usize,
    pub lift: CircleLift,
    /// φ at grid points, rounded to the nearest grid point.
    pub phi_grid: Vec<usize>,
}

impl CircleGrid {
    pub fn new(grid_size: usize, lift: CircleLift) -> Result<Self> {
        if grid_size < 1 {
            return Err(SpecradError::InvalidSystem("grid_size must be >= 1".into()));
        }
        // Monotonicity check at a refinement of the grid.
        let probes = (4 * grid_size).max(64);
        for k in 0..probes {
            let t = k as f64 / probes as f64;
            if lift.derivative(t) <= 0.0 {
                return Err(SpecradError::InvalidSystem(format!(
                    "lift is not strictly increasing near t = {t}"
                )));
            }
        }
        let degree = lift.eval(1.0) - lift.eval(0.0);
        if (degree - 1.0).abs() > 1e-9 {
            return Err(SpecradError::InvalidSystem(format!(
                "lift degree {degree} != 1"
            )));
        }
        let g = grid_size as f64;
        let phi_grid = (0..grid_size)
            .map(|k| {
                let y = lift.eval(k as f64 / g).rem_euclid(1.0);
                ((y * g).round() as usize) % grid_size
            })
            .collect();
        Ok(CircleGrid {
            grid_size,
            lift,
            phi_grid,
        })
    }
}

#[derive(Debug, Clone)]
pub enum PartialSystem {
    FiniteMap(FiniteMap),
    Sft(Sft),
    CircleGrid(CircleGrid),
}

impl PartialSystem {
    pub fn finite_map(phi: Vec<Option<usize>>) -> Result<Self> {
        Ok(PartialSystem::FiniteMap(FiniteMap::new(phi)?))
    }

    pub fn sft(transitions: Vec<Vec<bool>>, word_depth: usize) -> Result<Self> {
        Ok(PartialSystem::Sft(Sft::new(transitions, word_depth)?))
    }

    pub fn full_shift(n: usize, word_depth: usize) -> Result<Self> {
        Ok(PartialSystem::Sft(Sft::full_shift(n, word_depth)?))
    }

    pub fn circle(grid_size: usize, lift: CircleLift) -> Result<Self> {
        Ok(PartialSystem::CircleGrid(CircleGrid::new(grid_size, lift)?))
    }

    pub fn state_count(&self) -> usize {
        match self {
            PartialSystem::FiniteMap(m) => m.phi.len(),
            PartialSystem::Sft(s) => s.words.len(),
            PartialSystem::CircleGrid(c) => c.grid_size,
        }
    }

    /// True when φ is a (partial) function of the state.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, PartialSystem::Sft(_))
    }

    /// True when state transitions are grid-rounded rather than exact.
    pub fn is_sampled(&self) -> bool {
        matches!(self, PartialSystem::CircleGrid(_))
    }

    pub fn successors(&self, x: usize) -> Vec<usize> {
        match self {
            PartialSystem::FiniteMap(m) => m.phi[x].into_iter().collect(),
            PartialSystem::Sft(s) => s.succ[x].clone(),
            PartialSystem::CircleGrid(c) => vec![c.phi_grid[x]],
        }
    }

    /// φ(x) on deterministic backends; `None` when x is outside Δ.
    pub fn image(&self, x: usize) -> Result<Option<usize>> {
        match self {
            PartialSystem::FiniteMap(m) => Ok(m.phi[x]),
            PartialSystem::CircleGrid(c) => Ok(Some(c.phi_grid[x])),
            PartialSystem::Sft(_) => Err(SpecradError::UnsupportedBackend(
                "the shift on word states is a relation, not a function; supply an explicit path"
                    .into(),
            )),
        }
    }

    /// The orbit segment [x, φ(x), ..., φ^(n-1)(x)] on deterministic
    /// backends. Errors when x leaves the domain before n steps.
    pub fn trajectory(&self, x: usize, n: usize) -> Result<Vec<usize>> {
        let mut path = Vec::with_capacity(n);
        let mut cur = x;
        for k in 0..n {
            path.push(cur);
            if k + 1 < n {
                match self.image(cur)? {
                    Some(next) => cur = next,
                    None => return Err(SpecradError::OutsideDomain { point: x, n }),
                }
            }
        }
        Ok(path)
    }

    /// Checks that consecutive states of `path` are φ-transitions.
    pub fn is_path(&self, path: &[usize]) -> bool {
        path.windows(2).all(|w| self.successors(w[0]).contains(&w[1]))
            && path.iter().all(|&x| x < self.state_count())
    }
}

/// Iteration domains Δₙ (domains of φⁿ), ranges Δ₋ₙ = φⁿ(Δₙ), and the
/// essential domain Δ∞ = ∩ₙ Δₙ ∩ ∩ₙ Δ₋ₙ.
#[derive(Debug, Clone)]
pub struct DomainChain {
    pub delta_n: Vec<Vec<usize>>,
    pub delta_minus_n: Vec<Vec<usize>>,
    pub delta_inf: Vec<usize>,
}

impl DomainChain {
    pub fn delta(&self, n: usize) -> &[usize] {
        &self.delta_n[n]
    }
}

fn set_to_sorted(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

pub fn domain_chain(sys: &PartialSystem, n_max: usize) -> Result<DomainChain> {
    let n_states = sys.state_count();
    if let PartialSystem::CircleGrid(c) = sys {
        // The grid backend supports full maps only; our lifts always
        // produce full maps, but keep the contract explicit.
        if c.phi_grid.len() != c.grid_size {
            return Err(SpecradError::UnsupportedBackend(
                "grid backend supports full maps only".into(),
            ));
        }
    }
    let succ: Vec<Vec<usize>> = (0..n_states).map(|x| sys.successors(x)).collect();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n_states];
    for (x, ys) in succ.iter().enumerate() {
        for &y in ys {
            pred[y].push(x);
        }
    }

    // Δₙ = φ⁻¹(Δₙ₋₁): states with an outgoing path of length n.
    let mut delta_n = Vec::with_capacity(n_max + 1);
    let mut cur = vec![true; n_states];
    delta_n.push(set_to_sorted(&cur));
    for _ in 1..=n_max {
        let next: Vec<bool> = (0..n_states)
            .map(|x| succ[x].iter().any(|&y| cur[y]))
            .collect();
        cur = next;
        delta_n.push(set_to_sorted(&cur));
    }

    // Δ₋ₙ = φⁿ(Δₙ): states at the end of some path of length n.
    let mut delta_minus_n = Vec::with_capacity(n_max + 1);
    let mut cur = vec![true; n_states];
    delta_minus_n.push(set_to_sorted(&cur));
    for _ in 1..=n_max {
        let mut next = vec![false; n_states];
        for x in 0..n_states {
            if cur[x] {
                for &y in &succ[x] {
                    next[y] = true;
                }
            }
        }
        cur = next;
        delta_minus_n.push(set_to_sorted(&cur));
    }

    // Δ∞: greatest fixed points of the forward and backward
    // survivability maps, intersected. Both stabilize within |X|
    // rounds; cap at 4|X|.
    let cap = 4 * n_states.max(1);
    let mut fwd = vec![true; n_states];
    for _ in 0..cap {
        let next: Vec<bool> = (0..n_states)
            .map(|x| fwd[x] && succ[x].iter().any(|&y| fwd[y]))
            .collect();
        if next == fwd {
            break;
        }
        fwd = next;
    }
    let mut bwd = vec![true; n_states];
    for _ in 0..cap {
        let next: Vec<bool> = (0..n_states)
            .map(|x| bwd[x] && pred[x].iter().any(|&y| bwd[y]))
            .collect();
        if next == bwd {
            break;
        }
        bwd = next;
    }
    let inf_mask: Vec<bool> = (0..n_states).map(|x| fwd[x] && bwd[x]).collect();

    Ok(DomainChain {
        delta_n,
        delta_minus_n,
        delta_inf: set_to_sorted(&inf_mask),
    })
}

/// A simple periodic orbit, stored starting at its smallest state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orbit {
    pub states: Vec<usize>,
}

impl Orbit {
    pub fn period(&self) -> usize {
        self.states.len()
    }
}

/// All simple periodic orbits of period ≤ max_len contained in
/// `restrict` (or in all of X when `restrict` is `None`), each reported
/// once, rotated to start at its smallest state.
pub fn periodic_orbits(
    sys: &PartialSystem,
    max_len: usize,
    restrict: Option<&[usize]>,
) -> Result<Vec<Orbit>> {
    if sys.is_sampled() {
        return Err(SpecradError::UnsupportedBackend(
            "periodic points of sampled circle maps are not exact".into(),
        ));
    }
    if max_len < 1 {
        return Err(SpecradError::InvalidArgument("max_len must be >= 1".into()));
    }
    let n_states = sys.state_count();
    let allowed: Vec<bool> = match restrict {
        Some(set) => {
            let mut mask = vec![false; n_states];
            for &x in set {
                if x >= n_states {
                    return Err(SpecradError::InvalidArgument(format!(
                        "restrict contains state {x} outside the state space"
                    )));
                }
                mask[x] = true;
            }
            mask
        }
        None => vec![true; n_states],
    };
    let succ: Vec<Vec<usize>> = (0..n_states).map(|x| sys.successors(x)).collect();
    enumerate_simple_cycles(&succ, &allowed, max_len)
}

/// Simple-cycle enumeration over an explicit successor relation. Each
/// cycle is found from its smallest node, so the reported rotation
/// starts there.
pub fn enumerate_simple_cycles(
    succ: &[Vec<usize>],
    allowed: &[bool],
    max_len: usize,
) -> Result<Vec<Orbit>> {
    let n = succ.len();
    let mut orbits = Vec::new();
    let mut path: Vec<usize> = Vec::new();
    let mut on_path = vec![false; n];

    fn dfs(
        root: usize,
        node: usize,
        succ: &[Vec<usize>],
        allowed: &[bool],
        max_len: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        orbits: &mut Vec<Orbit>,
    ) {
        path.push(node);
        on_path[node] = true;
        for &next in &succ[node] {
            if next == root {
                orbits.push(Orbit { states: path.clone() });
            } else if next > root && allowed[next] && !on_path[next] && path.len() < max_len {
                dfs(root, next, succ, allowed, max_len, path, on_path, orbits);
            }
        }
        on_path[node] = false;
        path.pop();
    }

    for root in 0..n {
        if allowed[root] {
            dfs(root, root, succ, allowed, max_len, &mut path, &mut on_path, &mut orbits);
        }
    }
    orbits.sort_by(|a, b| a.states.cmp(&b.states));
    Ok(orbits)
}

/// Rotation-number estimate frac(γⁿ(0)/n) from the exact lift; the
/// standard lift bound gives |estimate − τ| ≤ 1/n_iter.
pub fn rotation_number(sys: &PartialSystem, n_iter: usize) -> Result<f64> {
    let PartialSystem::CircleGrid(c) = sys else {
        return Err(SpecradError::UnsupportedBackend(
            "rotation_number requires the circle backend".into(),
        ));
    };
    if n_iter < 1 {
        return Err(SpecradError::InvalidArgument("n_iter must be >= 1".into()));
    }
    let mut t = 0.0_f64;
    for _ in 0..n_iter {
        t = c.lift.eval(t);
    }
    Ok((t / n_iter as f64).rem_euclid(1.0))
}

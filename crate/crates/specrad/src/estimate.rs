//! Certified brackets for spectral exponents and their reconciliation.
//!
//! Every estimation method returns an [`ExponentEstimate`]: a bracket
//! `[lower, upper]` for the exponent λ, a point value, an optional
//! witness and method metadata. The exponential view gives the spectral
//! radius bracket `[e^lower, e^upper]` with the convention e^(-∞) = 0.

use crate::error::{Result, SpecradError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exactness {
    /// Bracket has collapsed: upper - lower ≤ 1e-9.
    Exact,
    /// Certified two-sided bracket on a finite backend.
    Bracket,
    /// Grid-sampled or fiber-sampled; advisory only.
    Sampled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Witness {
    /// A periodic orbit given by its state sequence.
    Orbit { states: Vec<usize> },
    /// A measure identified by its serialized atoms.
    Measure { atoms: Vec<(usize, f64)> },
    /// A direction in C^d, entries as (re, im) pairs.
    Direction { entries: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub lower: f64,
    pub upper: f64,
    /// The method's best point estimate of λ; always inside the bracket.
    pub value: f64,
    pub witness: Option<Witness>,
    pub method: String,
    pub n_used: usize,
    pub exactness: Exactness,
    /// Free-form flags, e.g. "empty-domain", "norm-vs-spectral-radius-gap".
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl ExponentEstimate {
    pub fn new(lower: f64, upper: f64, method: &str, n_used: usize) -> Self {
        assert!(
            lower <= upper || (lower.is_nan() || upper.is_nan()),
            "estimate invariant violated: lower {lower} > upper {upper} ({method})"
        );
        let exactness = if upper - lower <= 1e-9 || (lower == f64::NEG_INFINITY && upper == f64::NEG_INFINITY) {
            Exactness::Exact
        } else {
            Exactness::Bracket
        };
        let value = if lower.is_finite() { lower } else { upper };
        ExponentEstimate {
            lower,
            upper,
            value,
            witness: None,
            method: method.to_string(),
            n_used,
            exactness,
            flags: Vec::new(),
        }
    }

    pub fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn with_value(mut self, value: f64) -> Self {
        self.value = value.clamp(self.lower, self.upper);
        self
    }

    pub fn sampled(mut self) -> Self {
        self.exactness = Exactness::Sampled;
        self
    }

    pub fn flag(mut self, f: &str) -> Self {
        self.flags.push(f.to_string());
        self
    }

    /// Spectral-radius view of the bracket, with e^(-∞) = 0.
    pub fn r_bracket(&self) -> (f64, f64) {
        (self.lower.exp(), self.upper.exp())
    }

    pub fn r_value(&self) -> f64 {
        self.value.exp()
    }
}

/// Intersects certified brackets. Sampled estimates are advisory: they
/// are recorded in the result's flags but never veto the intersection.
pub fn reconcile(estimates: &[ExponentEstimate]) -> Result<ExponentEstimate> {
    let certified: Vec<&ExponentEstimate> = estimates
        .iter()
        .filter(|e| e.exactness != Exactness::Sampled)
        .collect();
    if certified.is_empty() {
        return Err(SpecradError::InvalidArgument(
            "reconcile: no certified estimates".into(),
        ));
    }
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut lo_method = certified[0].method.clone();
    let mut hi_method = certified[0].method.clone();
    for e in &certified {
        if e.lower > lower {
            lower = e.lower;
            lo_method = e.method.clone();
        }
        if e.upper < upper {
            upper = e.upper;
            hi_method = e.method.clone();
        }
    }
    if lower > upper + 1e-12 {
        return Err(SpecradError::ReconcileFailure(lo_method, hi_method));
    }
    let upper = upper.max(lower);
    let n_used = certified.iter().map(|e| e.n_used).max().unwrap_or(0);
    let mut out = ExponentEstimate::new(lower, upper, "reconciled", n_used);
    out.witness = certified
        .iter()
        .find(|e| (e.lower - lower).abs() <= 1e-15 && e.witness.is_some())
        .and_then(|e| e.witness.clone());
    for e in estimates {
        if e.exactness == Exactness::Sampled {
            out.flags
                .push(format!("advisory:{}:[{},{}]", e.method, e.lower, e.upper));
        }
    }
    Ok(out)
}

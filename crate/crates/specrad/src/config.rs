//! JSON run configuration: system, weight, optional inner field,
//! method list and numeric parameters. Complex scalars are serialized
//! as [re, im] pairs and matrices row-major as nested arrays of those
//! pairs, so every report and config round-trips without ambiguity.

use crate::cocycle::Weight;
use crate::dynsys::{CircleLift, PartialSystem};
use crate::ergopt::ShiftSpec;
use crate::error::{Result, SpecradError};
use crate::lift::InnerField;
use crate::linalg::{CMatrix, MatrixNorm};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SystemSpec {
    Sft {
        transitions: Vec<Vec<bool>>,
        #[serde(default = "default_word_depth")]
        word_depth: usize,
    },
    FullShift {
        symbols: usize,
        #[serde(default = "default_word_depth")]
        word_depth: usize,
    },
    FiniteMap {
        phi: Vec<Option<usize>>,
    },
    Circle {
        grid_size: usize,
        offset: f64,
        #[serde(default)]
        harmonics: Vec<(u32, f64)>,
    },
}

fn default_word_depth() -> usize {
    1
}

/// One complex number as [re, im].
pub type CPair = (f64, f64);
/// One matrix, row-major.
pub type MatrixSpec = Vec<Vec<CPair>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum WeightSpec {
    /// one complex scalar per state (locally constant weight)
    Scalar { values: Vec<CPair> },
    /// one d×d complex matrix per state
    Matrix { values: Vec<MatrixSpec> },
    /// classical weighted-shift sequence
    Sequence {
        kind: SequenceKind,
        #[serde(default)]
        head: Vec<CPair>,
        terms: Vec<CPair>,
        #[serde(default)]
        bound: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    Periodic,
    EventuallyPeriodic,
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum FieldSpec {
    InnerUnitary { matrices: Vec<MatrixSpec> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// inf-formula bracket for the spectral exponent
    Gelfand,
    /// max-mean-cycle (commutative principle, scalar weights)
    Karp,
    /// periodic-orbit variational principle
    Periodic,
    /// linear-extension variational principle (fiber-sampled)
    Extension,
}

impl Method {
    pub fn is_sampled(self) -> bool {
        matches!(self, Method::Extension)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub system: Option<SystemSpec>,
    pub weight: WeightSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    pub methods: Vec<Method>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cycle_len: Option<usize>,
    #[serde(default = "default_fiber_samples")]
    pub fiber_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub norm: MatrixNorm,
    #[serde(default)]
    pub output: OutputFormat,
}

fn default_n_max() -> usize {
    200
}

fn default_fiber_samples() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

fn cfg_err(path: &str, message: impl Into<String>) -> SpecradError {
    SpecradError::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

pub fn parse_complex(p: CPair) -> Complex64 {
    Complex64::new(p.0, p.1)
}

pub fn parse_matrix(spec: &MatrixSpec, path: &str) -> Result<CMatrix> {
    let rows = spec.len();
    if rows == 0 {
        return Err(cfg_err(path, "empty matrix"));
    }
    let cols = spec[0].len();
    if cols != rows {
        return Err(cfg_err(path, format!("matrix is {rows}x{cols}, must be square")));
    }
    for (i, row) in spec.iter().enumerate() {
        if row.len() != cols {
            return Err(cfg_err(
                &format!("{path}[{i}]"),
                format!("row has {} entries, expected {cols}", row.len()),
            ));
        }
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| parse_complex(spec[i][j])))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            cfg_err(&path.display().to_string(), format!("cannot read config: {e}"))
        })?;
        serde_json::from_str(&text).map_err(|e| cfg_err("<root>", e.to_string()))
    }

    pub fn build_system(&self) -> Result<Option<PartialSystem>> {
        let Some(spec) = &self.system else {
            return Ok(None);
        };
        let sys = match spec {
            SystemSpec::Sft { transitions, word_depth } => {
                PartialSystem::sft(transitions.clone(), *word_depth)
                    .map_err(|e| cfg_err("system.transitions", e.to_string()))?
            }
            SystemSpec::FullShift { symbols, word_depth } => {
                PartialSystem::full_shift(*symbols, *word_depth)
                    .map_err(|e| cfg_err("system.symbols", e.to_string()))?
            }
            SystemSpec::FiniteMap { phi } => PartialSystem::finite_map(phi.clone())
                .map_err(|e| cfg_err("system.phi", e.to_string()))?,
            SystemSpec::Circle { grid_size, offset, harmonics } => PartialSystem::circle(
                *grid_size,
                CircleLift { offset: *offset, harmonics: harmonics.clone() },
            )
            .map_err(|e| cfg_err("system", e.to_string()))?,
        };
        Ok(Some(sys))
    }

    pub fn build_weight(&self, sys: &PartialSystem) -> Result<Weight> {
        let n = sys.state_count();
        let w = match &self.weight {
            WeightSpec::Scalar { values } => {
                if values.len() != n {
                    return Err(cfg_err(
                        "weight.values",
                        format!("{} scalars given, system has {n} states", values.len()),
                    ));
                }
                Weight::scalar(values.iter().map(|&p| parse_complex(p)).collect())
                    .map_err(|e| cfg_err("weight.values", e.to_string()))?
            }
            WeightSpec::Matrix { values } => {
                if values.len() != n {
                    return Err(cfg_err(
                        "weight.values",
                        format!("{} matrices given, system has {n} states", values.len()),
                    ));
                }
                let mats: Result<Vec<CMatrix>> = values
                    .iter()
                    .enumerate()
                    .map(|(i, m)| parse_matrix(m, &format!("weight.values[{i}]")))
                    .collect();
                Weight::new(mats?).map_err(|e| cfg_err("weight.values", e.to_string()))?
            }
            WeightSpec::Sequence { .. } => {
                return Err(cfg_err(
                    "weight.type",
                    "sequence weights belong to the `shift` subcommand",
                ));
            }
        };
        Ok(w)
    }

    pub fn build_shift_spec(&self) -> Result<ShiftSpec> {
        let WeightSpec::Sequence { kind, head, terms, bound } = &self.weight else {
            return Err(cfg_err("weight.type", "expected a sequence weight"));
        };
        if terms.is_empty() {
            return Err(cfg_err("weight.terms", "empty term list"));
        }
        let terms: Vec<Complex64> = terms.iter().map(|&p| parse_complex(p)).collect();
        let head: Vec<Complex64> = head.iter().map(|&p| parse_complex(p)).collect();
        Ok(match kind {
            SequenceKind::Periodic => ShiftSpec::Periodic(terms),
            SequenceKind::EventuallyPeriodic => ShiftSpec::EventuallyPeriodic { head, period: terms },
            SequenceKind::Explicit => {
                let bound = bound.ok_or_else(|| {
                    cfg_err("weight.bound", "explicit sequences need a sup bound")
                })?;
                ShiftSpec::Explicit { terms, bound }
            }
        })
    }

    pub fn build_field(&self, sys: &PartialSystem, weight_dim: usize) -> Result<Option<InnerField>> {
        let Some(FieldSpec::InnerUnitary { matrices }) = &self.field else {
            return Ok(None);
        };
        if matrices.len() != sys.state_count() {
            return Err(cfg_err(
                "field.matrices",
                format!(
                    "{} matrices given, system has {} states",
                    matrices.len(),
                    sys.state_count()
                ),
            ));
        }
        let mats: Result<Vec<CMatrix>> = matrices
            .iter()
            .enumerate()
            .map(|(i, m)| parse_matrix(m, &format!("field.matrices[{i}]")))
            .collect();
        let field = InnerField::new(mats?).map_err(|e| cfg_err("field.matrices", e.to_string()))?;
        if field.dim != weight_dim {
            return Err(cfg_err(
                "field.matrices",
                format!("field dimension {} does not match weight dimension {weight_dim}", field.dim),
            ));
        }
        Ok(Some(field))
    }

    /// Structural validation beyond what serde enforces.
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(cfg_err("methods", "at least one method is required"));
        }
        if self.n_max < 1 {
            return Err(cfg_err("n_max", "must be >= 1"));
        }
        if self.fiber_samples < 1 {
            return Err(cfg_err("fiber_samples", "must be >= 1"));
        }
        let sampled = self.methods.iter().any(|m| m.is_sampled())
            || matches!(
                self.system,
                Some(SystemSpec::Circle { .. })
            );
        if sampled && self.seed.is_none() {
            return Err(cfg_err("seed", "required when a sampled method or backend is requested"));
        }
        if let Some(sys) = self.build_system()? {
            if !matches!(self.weight, WeightSpec::Sequence { .. }) {
                let w = self.build_weight(&sys)?;
                self.build_field(&sys, w.dim)?;
                if matches!(self.methods.iter().find(|m| **m == Method::Karp), Some(_)) && w.dim != 1 {
                    return Err(cfg_err("methods", "karp requires a scalar weight"));
                }
            }
        } else if !matches!(self.weight, WeightSpec::Sequence { .. }) {
            return Err(cfg_err("system", "required unless the weight is a sequence"));
        }
        Ok(())
    }
}

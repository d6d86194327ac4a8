//! Spectral radii of weighted composition operators and spectral
//! exponents of matrix cocycles over partial dynamical systems,
//! computed and cross-validated through several variational principles:
//! empirical averages, linear extensions on projective space, Lyapunov
//! and measure exponents, ergodic optimization on word graphs, and
//! periodic-orbit formulas.

pub mod cocycle;
pub mod config;
pub mod dynsys;
pub mod error;
pub mod estimate;
pub mod lift;
pub mod linalg;
pub mod measures;
pub mod ergopt;
pub mod projext;
pub mod report;
pub mod sampling;

//! Metric-aware time evolution for non-hermitian Hamiltonians.
//!
//! The crate builds biorthogonal eigenbases and the metric operators derived
//! from them, integrates several Schrödinger-equation variants across
//! piecewise-smooth schedules (with state jumps at quenches), computes
//! geometric phases of exchanged two-level eigenstates and string-dressed
//! correlators of one-dimensional hard-core anyons.

// `!(x > 0.0)` is used on purpose so that NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anyon;
pub mod biortho;
pub mod error;
pub mod evolve;
pub mod geomphase;
pub mod integrator;
pub mod linalg;
pub mod metric;
pub mod models;
pub mod quench;
pub mod schedule;
pub mod tdse;

pub use anyon::{AnyonChainSpec, CorrelationSet, QuenchComparison};
pub use biortho::{eig_biortho, eig_tracked, BiorthoBasis};
pub use error::{Error, Result};
pub use evolve::{evolve, EvolveOptions, Trajectory};
pub use geomphase::{exchange_phase, PhaseResult, TraceFamily, TraceSpec};
pub use integrator::IntegratorOptions;
pub use linalg::{ComplexMatrix, ComplexVector};
pub use metric::{MetricState, WaveState};
pub use quench::{apply_quench, lrb_probe, quench_operator, LatticeModelSpec, QuenchEvent};
pub use schedule::HamiltonianSchedule;
pub use tdse::TdseVariant;

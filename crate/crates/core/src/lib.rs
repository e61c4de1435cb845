//! Constrained hybrid metaheuristic (cHM): a probing/fitting orchestrator over
//! five population-based optimizers, a 28-function benchmark harness and a
//! wrapper feature-selection application.

pub mod base;
pub mod benchmarks;
pub mod optimizers;
pub mod chm;
pub mod harness;
pub mod fselect;

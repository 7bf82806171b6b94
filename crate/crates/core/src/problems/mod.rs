//! Objectives and instance generators.

mod fixed_entries;
mod hetero;
mod lowrank_corr;
pub mod matrix_market;
mod trace_eigen;

pub use crate::objective::{gradient_fd_error, CountingObjective, Objective};
pub use fixed_entries::FixedEntrySet;
pub use hetero::{HeterogeneousQuadratic, LMode};
pub use lowrank_corr::{gen_ex2, gen_ex3, modified_pca_init, LowRankCorrProblem, Weights};
pub use trace_eigen::TraceEigenProblem;

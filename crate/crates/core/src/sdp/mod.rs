//! Semidefinite programs over complex Hermitian matrices and the solver behind them.

mod program;
mod programs;
mod solver;

pub use program::{Block, BlockId, ConicProgram, EntryTerms, Equality, LinearForm, Unit};
pub use programs::{
    decomposability_d, f_relaxation, kyfan_sdp, ppt2_joint, ppt2_scan_random, sample_cp_ccop,
    DecompositionReport, FRelaxation, Ppt2JointReport, Ppt2Sample,
};
pub use solver::{solve, SolveStatus, SolverOptions, SolverResult};

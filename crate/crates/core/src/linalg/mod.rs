//! Dense complex linear algebra for small multi-qubit Hilbert spaces.

mod density;
mod matrix;
pub mod states;

pub use density::{
    expect, normalize, trace_distance, DensityOperator, Ket, ObservableOp, HERMITIAN_TOL,
    IMPOSSIBLE_TRACE, KET_NORM_TOL, PSD_TOL, TRACE_TOL,
};
pub use matrix::{
    conj_apply, kron, kron_all, kron_vec, lift_local, ptrace_matrix, CMatrix, C64, ONE, ZERO,
};

/// Default cap on the joint Hilbert space dimension.
pub const DEFAULT_MAX_DIM: usize = 1 << 10;

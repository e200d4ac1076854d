//! Lattice correlation-function hierarchy and the exact master-equation oracle.

pub mod field;
pub mod integrate;
pub mod master;
pub mod ops;

pub use field::{ClosureKind, ClosureRule, CorrelationField, FieldMode, CLOSURE_REACH};
pub use integrate::{
    apply, integrate, rk4_step, series_horizon, taylor_semigroup_step, Generator, TaylorOutcome,
    Trajectory,
};
pub use master::MasterState;
pub use ops::{
    apply_lbar, apply_ldelta, apply_qy, free_solution, qy_tail_bound, scale_norm,
    ScaleNormReport,
};

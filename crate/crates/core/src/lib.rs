//! Continuum Kawasaki jump dynamics with repulsion: an exact particle
//! simulator, a truncated correlation-function hierarchy, and the scale
//! arithmetic that certifies its series solution.

pub mod error;
pub mod estimators;
pub mod hierarchy;
pub mod kmc;
pub mod lattice;
pub mod model;
pub mod output;
pub mod scheduler;

pub use error::{Error, Result};
pub use lattice::{Lattice, LatticeKernels, Occupancy};
pub use model::{Configuration, KernelFamily, KernelSpec, Position, TorusDomain};
pub use estimators::{BoundCheck, MomentEstimate};
pub use hierarchy::{ClosureKind, ClosureRule, CorrelationField, FieldMode, MasterState};
pub use kmc::{ReplicaResult, Snapshot};
pub use scheduler::{Certificate, ScaleLadder, ScaleParams};

//! Exact simulation of the jump process.

pub mod cells;
pub mod engine;
pub mod init;
pub mod lattice_sim;
pub mod probe;

pub use cells::CellList;
pub use engine::{
    replica_stream, run, run_ensemble, run_with_stream, snapshot_schedule, EventCounters,
    ReplicaResult, SimState, Snapshot, StepOutcome, Stream,
};
pub use init::InitialLaw;
pub use lattice_sim::{LatticeSimulator, LatticeTrajectory};
pub use probe::detailed_balance_probe;

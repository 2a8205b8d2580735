pub mod engine;
pub mod potential;
pub mod quantum;

pub use engine::{
    evolve, rhs, step_rk4, ObserverConfig, RunRecord, SimConfig, SimState, VorticityProbe,
};
pub use potential::{evaluate_potential, PotentialSpec};
pub use quantum::quantum_potential;

//! Configuration-space density simulator core.
//!
//! Evolves a probability density and velocity field directly, without an
//! underlying complex amplitude, and provides the state builders, analysis
//! probes, and a spectral cross-check integrator used by the `csd` binary.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod states;

pub use analysis::{
    detect_nodes, measure_nu, trace_trajectory, vorticity, NodeEstimate, NuMeasurement,
    Trajectory, TrajectoryEnd, VelocityFrame, VelocityHistory, VorticityTrace,
};
pub use dynamics::{
    evaluate_potential, evolve, quantum_potential, rhs, step_rk4, ObserverConfig, PotentialSpec,
    RunRecord, SimConfig, SimState, VorticityProbe,
};
pub use error::{CsdError, Result};
pub use fields::{ComplexField, Grid2D, Point, ScalarField, VectorField2};
pub use num_complex::Complex64;
pub use states::{MadelungPair, ModeSpec, PhysicalConstants, VortexPerturbation};

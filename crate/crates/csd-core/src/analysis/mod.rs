//! Diagnostics layered on top of (rho, v) fields: node location, winding
//! measurements, and passive trajectory tracing.

pub mod nodes;
pub mod trajectory;
pub mod vorticity;

pub use nodes::{detect_nodes, NodeEstimate};
pub use trajectory::{
    trace_trajectory, Trajectory, TrajectoryEnd, VelocityFrame, VelocityHistory,
};
pub use vorticity::{measure_nu, vorticity, NuMeasurement, VorticityTrace, LOOP_SAMPLES};

pub mod field;
pub mod grid;
pub mod ops;
pub mod snapshot;

pub use field::{boundary_mass_fraction, ComplexField, ScalarField, VectorField2};
pub use grid::{Grid2D, Point};

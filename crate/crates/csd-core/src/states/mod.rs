//! Initial-state construction: density/velocity pairs for the simulator.

pub mod dislocated;
pub mod ho;
pub mod madelung;
pub mod special;
pub mod well;

use num_complex::Complex64;

use crate::error::{CsdError, Result};
use crate::fields::{Grid2D, Point, ScalarField, VectorField2};

pub use dislocated::dislocated_wave_state;
pub use ho::{build_superposition, ho1d_eigen};
pub use madelung::{apply_vortex_perturbation, madelung_decompose};
pub use special::{bessel_j, bessel_j_root, gamma, hermite};
pub use well::circular_well_state;

/// ħ, m, and the oscillator frequency ω. Everything here is unitless by
/// default; scenarios may override.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
}

impl PhysicalConstants {
    pub const UNIT: Self = Self { hbar: 1.0, mass: 1.0, omega: 1.0 };

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("hbar", self.hbar), ("mass", self.mass), ("omega", self.omega)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(CsdError::UnsupportedArgument {
                    name: match name {
                        "hbar" => "hbar",
                        "mass" => "mass",
                        _ => "omega",
                    },
                    value,
                    reason: "physical constants must be strictly positive".into(),
                });
            }
        }
        Ok(())
    }

    /// Oscillator length sqrt(ħ/mω).
    pub fn osc_length(&self) -> f64 {
        (self.hbar / (self.mass * self.omega)).sqrt()
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::UNIT
    }
}

/// A density and its velocity field: the full state of the simulator.
#[derive(Debug, Clone)]
pub struct MadelungPair {
    pub rho: ScalarField,
    pub v: VectorField2,
}

impl MadelungPair {
    pub fn grid(&self) -> Grid2D {
        self.rho.grid
    }
}

/// One product eigenmode in a superposition: psi_j(x) psi_k(y) with a complex
/// weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    pub j: u32,
    pub k: u32,
    pub coeff: Complex64,
}

impl ModeSpec {
    pub fn new(j: u32, k: u32, coeff: Complex64) -> Self {
        Self { j, k, coeff }
    }
}

/// Swirl added on top of a constructed state: v += (ħ nu0 / m r) theta_hat
/// about `center`. Density is left untouched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VortexPerturbation {
    pub nu0: f64,
    pub center: Point,
}

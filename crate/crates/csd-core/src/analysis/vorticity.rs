//! Circulation-based vorticity and non-quantumness measurement.

use std::io::Write;
use std::path::Path;

use super::nodes::NodeEstimate;
use crate::error::{CsdError, Result};
use crate::fields::ops::line_integral_circle;
use crate::fields::VectorField2;
use crate::states::PhysicalConstants;

pub const LOOP_SAMPLES: usize = 256;

/// (m / 2 pi hbar) times the circulation of v around the node. Only loops
/// enclosing exactly one node are deformation-invariant, so any other
/// detected node within radius + 2h is an error, not a warning.
pub fn vorticity(
    v: &VectorField2,
    node: &NodeEstimate,
    others: &[NodeEstimate],
    radius: f64,
    c: &PhysicalConstants,
) -> Result<f64> {
    c.validate()?;
    let g = v.grid;
    if radius < 3.0 * g.h_max() {
        return Err(CsdError::UnsupportedArgument {
            name: "radius",
            value: radius,
            reason: format!("loop must span at least 3 grid spacings ({})", 3.0 * g.h_max()),
        });
    }
    let guard = radius + 2.0 * g.h_max();
    let enclosed = others
        .iter()
        .filter(|o| {
            let d = o.position.dist(node.position);
            d > 0.25 * g.h_max() && d < guard
        })
        .count();
    if enclosed > 0 {
        return Err(CsdError::AmbiguousLoop {
            cx: node.position.x,
            cy: node.position.y,
            radius,
            enclosed: enclosed + 1,
        });
    }
    let circ = line_integral_circle(v, node.position, radius, LOOP_SAMPLES)?;
    Ok(c.mass * circ / (std::f64::consts::TAU * c.hbar))
}

#[derive(Debug, Clone)]
pub struct NuMeasurement {
    pub mean: f64,
    /// max minus min across the probe radii: the loop-deformation-invariance
    /// diagnostic.
    pub spread: f64,
    pub per_radius: Vec<f64>,
}

/// nu = vorticity - n_ref at each radius; mean and spread across radii.
pub fn measure_nu(
    v: &VectorField2,
    node: &NodeEstimate,
    others: &[NodeEstimate],
    n_ref: i64,
    radii: &[f64],
    c: &PhysicalConstants,
) -> Result<NuMeasurement> {
    if radii.is_empty() {
        return Err(CsdError::UnsupportedArgument {
            name: "radii",
            value: 0.0,
            reason: "need at least one probe radius".into(),
        });
    }
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in radii {
        per_radius.push(vorticity(v, node, others, r, c)? - n_ref as f64);
    }
    let mean = per_radius.iter().sum::<f64>() / per_radius.len() as f64;
    let spread = per_radius.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - per_radius.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(NuMeasurement { mean, spread, per_radius })
}

/// Time series of the loop integral at one fixed radius.
#[derive(Debug, Clone)]
pub struct VorticityTrace {
    pub times: Vec<f64>,
    pub nu_total: Vec<f64>,
    pub n_ref: i64,
    pub loop_radius: f64,
}

impl VorticityTrace {
    pub fn new(n_ref: i64, loop_radius: f64) -> Self {
        Self { times: Vec::new(), nu_total: Vec::new(), n_ref, loop_radius }
    }

    pub fn push(&mut self, t: f64, nu_total: f64) {
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.nu_total.push(nu_total);
    }

    pub fn nu(&self) -> Vec<f64> {
        self.nu_total.iter().map(|&v| v - self.n_ref as f64).collect()
    }

    pub fn max_nu_drift(&self) -> f64 {
        let nu = self.nu();
        let Some(&first) = nu.first() else { return 0.0 };
        nu.iter().map(|&x| (x - first).abs()).fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,nu_total,nu")?;
        for (&t, &total) in self.times.iter().zip(&self.nu_total) {
            writeln!(w, "{t:.16e},{total:.16e},{:.16e}", total - self.n_ref as f64)?;
        }
        w.flush()?;
        Ok(())
    }
}

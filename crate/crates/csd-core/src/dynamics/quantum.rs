//! The quantum potential Q = -(hbar^2 / 2m) lap(sqrt(rho)) / sqrt(rho).
//!
//! The denominator is floored at sqrt(rho_floor * max(rho)) so Q stays finite
//! across density zeros; values inside a node's floor region are placeholders
//! and the evolution engine overwrites forces there by interpolation.

use crate::error::{CsdError, Result};
use crate::fields::ops::{ddx4_into, ddy4_into, lap4_into, laplacian_into};
use crate::fields::{Grid2D, ScalarField};
use crate::states::PhysicalConstants;

pub(crate) fn quantum_potential_into(
    rho: &[f64],
    grid: &Grid2D,
    c: &PhysicalConstants,
    rho_floor: f64,
    sqrt_rho: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    debug_assert_eq!(rho.len(), grid.len());
    debug_assert_eq!(sqrt_rho.len(), rho.len());
    debug_assert_eq!(out.len(), rho.len());

    let mut max_rho = 0.0f64;
    for (dst, &r) in sqrt_rho.iter_mut().zip(rho) {
        let r = r.max(0.0);
        if r > max_rho {
            max_rho = r;
        }
        *dst = r.sqrt();
    }
    if max_rho == 0.0 {
        return Err(CsdError::InvalidState(
            "quantum potential of an identically zero density".into(),
        ));
    }
    let denom_floor = (rho_floor * max_rho).sqrt();
    let scale = -c.hbar * c.hbar / (2.0 * c.mass);

    laplacian_into(sqrt_rho, grid, out);
    for (q, &s) in out.iter_mut().zip(sqrt_rho.iter()) {
        *q *= scale / s.max(denom_floor);
    }
    Ok(())
}

/// Q from the log-density: Q = -(hbar^2/2m) (lap(u)/2 + |grad u|^2/4) with
/// u = ln(max(rho, floor * max rho)).
///
/// Identical to the sqrt form in exact arithmetic, but far better behaved on
/// a grid: in Gaussian-type tails u is low-order polynomial where sqrt(rho)
/// falls by large factors per cell, so the stencil error stays small exactly
/// where the sqrt form degenerates into force noise. For a pure Gaussian the
/// result is exact to rounding. The argument floor turns Q off smoothly in
/// floored regions instead of amplifying their noise; the kink ring where
/// the floor engages must be excluded by the caller (the evolution engine's
/// frozen-vacuum cut covers it).
pub(crate) fn quantum_potential_log_into(
    rho: &[f64],
    grid: &Grid2D,
    c: &PhysicalConstants,
    rho_floor: f64,
    u: &mut [f64],
    ux: &mut [f64],
    uy: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    debug_assert_eq!(rho.len(), grid.len());

    let max_rho = rho.iter().fold(0.0f64, |m, &r| m.max(r));
    if max_rho == 0.0 {
        return Err(CsdError::InvalidState(
            "quantum potential of an identically zero density".into(),
        ));
    }
    let cut = rho_floor * max_rho;
    for (dst, &r) in u.iter_mut().zip(rho) {
        *dst = r.max(cut).ln();
    }
    ddx4_into(u, grid, ux);
    ddy4_into(u, grid, uy);
    lap4_into(u, grid, out);
    let scale = -c.hbar * c.hbar / (2.0 * c.mass);
    for i in 0..rho.len() {
        out[i] = scale * (0.5 * out[i] + 0.25 * (ux[i] * ux[i] + uy[i] * uy[i]));
    }
    Ok(())
}

/// Sample Q on the grid of `rho`. Negative densities are treated as zero.
pub fn quantum_potential(
    rho: &ScalarField,
    c: &PhysicalConstants,
    rho_floor: f64,
) -> Result<ScalarField> {
    c.validate()?;
    rho.validate_finite("rho")?;
    if !(rho_floor > 0.0 && rho_floor.is_finite()) {
        return Err(CsdError::UnsupportedArgument {
            name: "rho_floor",
            value: rho_floor,
            reason: "the denominator floor must be a positive fraction of max rho".into(),
        });
    }
    let grid = rho.grid;
    let mut sqrt_rho = vec![0.0; grid.len()];
    let mut out = ScalarField::zeros(grid);
    quantum_potential_into(&rho.values, &grid, c, rho_floor, &mut sqrt_rho, &mut out.values)?;
    Ok(out)
}

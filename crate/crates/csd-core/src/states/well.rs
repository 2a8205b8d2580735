//! Infinite circular well modes. Density follows a Bessel profile pinned to
//! zero at the wall; the velocity is the analytic swirl ħ·order/(m r), which
//! for non-integer order is already a non-quantum state at t = 0.

use super::madelung::{idw_fill, EPS_NODE};
use super::special::{bessel_j, bessel_j_root};
use super::{MadelungPair, PhysicalConstants};
use crate::error::{CsdError, Result};
use crate::fields::{Grid2D, ScalarField, VectorField2};

pub fn circular_well_state(
    order: f64,
    radial_index: u32,
    well_radius: f64,
    grid: Grid2D,
    c: &PhysicalConstants,
) -> Result<MadelungPair> {
    c.validate()?;
    if !(order >= 0.0) || !order.is_finite() {
        return Err(CsdError::UnsupportedOrder {
            order,
            reason: "well states need order >= 0".into(),
        });
    }
    if !(well_radius > 0.0) || !well_radius.is_finite() {
        return Err(CsdError::UnsupportedArgument {
            name: "well_radius",
            value: well_radius,
            reason: "must be a positive length".into(),
        });
    }
    let center = grid.center();
    let fits = center.x - well_radius >= grid.x_min
        && center.x + well_radius <= grid.x_max
        && center.y - well_radius >= grid.y_min
        && center.y + well_radius <= grid.y_max;
    if !fits {
        return Err(CsdError::CircleOutsideGrid {
            cx: center.x,
            cy: center.y,
            radius: well_radius,
        });
    }

    let k = bessel_j_root(order, radial_index)? / well_radius;

    let mut rho = ScalarField::zeros(grid);
    for j in 0..grid.ny {
        let dy = grid.y(j) - center.y;
        for i in 0..grid.nx {
            let dx = grid.x(i) - center.x;
            let r = dx.hypot(dy);
            if r <= well_radius {
                rho.values[grid.idx(i, j)] = bessel_j(order, k * r)?.powi(2);
            }
        }
    }
    let mass = rho.integral();
    if !(mass > 0.0) {
        return Err(CsdError::Numerical("well profile integrated to zero mass".into()));
    }
    for value in &mut rho.values {
        *value /= mass;
    }

    let mut v = VectorField2::zeros(grid);
    if order > 0.0 {
        let threshold = EPS_NODE * rho.max_value();
        let swirl = c.hbar * order / c.mass;
        // outside the wall v is exactly zero and stays that way; only
        // sub-threshold points inside the well get extrapolated
        let mut valid = vec![true; grid.len()];
        for j in 0..grid.ny {
            let dy = grid.y(j) - center.y;
            for i in 0..grid.nx {
                let dx = grid.x(i) - center.x;
                let r2 = dx * dx + dy * dy;
                let idx = grid.idx(i, j);
                if r2.sqrt() > well_radius {
                    continue;
                }
                if rho.values[idx] < threshold || r2 == 0.0 {
                    valid[idx] = false;
                } else {
                    v.vx[idx] = swirl * (-dy) / r2;
                    v.vy[idx] = swirl * dx / r2;
                }
            }
        }
        idw_fill(&mut v, &valid);
    }

    Ok(MadelungPair { rho, v })
}

//! Density/velocity extraction from a complex amplitude, and the swirl
//! perturbation that makes a state kinematically non-quantum.

use super::{MadelungPair, PhysicalConstants, VortexPerturbation};
use crate::error::{CsdError, Result};
use crate::fields::ops::gradient;
use crate::fields::{ComplexField, ScalarField, VectorField2};

/// Points with rho below this fraction of max(rho) get their velocity filled
/// by extrapolation instead of the (singular) phase-gradient formula.
pub const EPS_NODE: f64 = 1e-8;

/// rho = |psi|^2, v = (hbar/m) Im(grad psi / psi), computed from the real and
/// imaginary parts so no phase unwrapping is needed. Sub-threshold points are
/// filled by inverse-distance weighting from the nearest valid ring.
pub fn madelung_decompose(psi: &ComplexField, c: &PhysicalConstants) -> Result<MadelungPair> {
    c.validate()?;
    psi.validate_finite()?;
    let grid = psi.grid;
    let rho = psi.abs2();
    let rho_max = rho.max_value();
    if rho_max == 0.0 {
        return Err(CsdError::InvalidState("cannot decompose an identically zero field".into()));
    }

    let a = ScalarField { grid, values: psi.values.iter().map(|z| z.re).collect() };
    let b = ScalarField { grid, values: psi.values.iter().map(|z| z.im).collect() };
    let ga = gradient(&a);
    let gb = gradient(&b);

    let threshold = EPS_NODE * rho_max;
    let scale = c.hbar / c.mass;
    let mut v = VectorField2::zeros(grid);
    let mut valid = vec![false; grid.len()];
    for idx in 0..grid.len() {
        if rho.values[idx] >= threshold {
            // Im(grad psi / psi) = (a grad b - b grad a) / rho
            let inv = scale / rho.values[idx];
            v.vx[idx] = inv * (a.values[idx] * gb.vx[idx] - b.values[idx] * ga.vx[idx]);
            v.vy[idx] = inv * (a.values[idx] * gb.vy[idx] - b.values[idx] * ga.vy[idx]);
            valid[idx] = true;
        }
    }
    idw_fill(&mut v, &valid);
    Ok(MadelungPair { rho, v })
}

/// Fill every invalid point of `v` from the nearest ring of valid ones,
/// weighting by inverse squared distance.
pub(crate) fn idw_fill(v: &mut VectorField2, valid: &[bool]) {
    let grid = v.grid;
    let (vx, vy) = (v.vx.as_mut_slice(), v.vy.as_mut_slice());
    crate::fields::ops::idw_fill_slices(&grid, valid, &mut [vx, vy]);
}

/// v += (hbar nu0 / m r) theta_hat about p.center; rho is untouched.
pub fn apply_vortex_perturbation(
    state: &MadelungPair,
    p: &VortexPerturbation,
    c: &PhysicalConstants,
) -> Result<MadelungPair> {
    c.validate()?;
    let grid = state.grid();
    for (axis, value, min, max) in [
        ("x", p.center.x, grid.x_min, grid.x_max),
        ("y", p.center.y, grid.y_min, grid.y_max),
    ] {
        if !(value > min && value < max) {
            return Err(CsdError::OutOfDomain { axis, value, min, max });
        }
    }
    let mut v = state.v.clone();
    let k = c.hbar * p.nu0 / c.mass;
    for j in 0..grid.ny {
        let dy = grid.y(j) - p.center.y;
        for i in 0..grid.nx {
            let dx = grid.x(i) - p.center.x;
            let r2 = dx * dx + dy * dy;
            if r2 == 0.0 {
                continue; // the singular point; excision handles its vicinity
            }
            let idx = grid.idx(i, j);
            v.vx[idx] += k * (-dy) / r2;
            v.vy[idx] += k * dx / r2;
        }
    }
    Ok(MadelungPair { rho: state.rho.clone(), v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ops::line_integral_circle;
    use crate::fields::{Grid2D, Point};
    use crate::states::{build_superposition, ModeSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex64;

    fn vortex_pair(sign: f64, n: usize) -> MadelungPair {
        let g = Grid2D::square(n, 6.0).unwrap();
        let modes = [
            ModeSpec::new(0, 1, Complex64::new(1.0, 0.0)),
            ModeSpec::new(1, 0, Complex64::new(0.0, sign)),
        ];
        let psi = build_superposition(&modes, g, &PhysicalConstants::UNIT).unwrap();
        madelung_decompose(&psi, &PhysicalConstants::UNIT).unwrap()
    }

    #[test]
    fn plane_wave_velocity_is_uniform() {
        let g = Grid2D::square(321, 8.0).unwrap();
        let kx = 0.7;
        let psi = ComplexField::from_fn(g, |x, y| {
            Complex64::new(0.0, kx * x).exp() * (-0.25 * (x * x + y * y) / 4.0).exp()
        });
        let pair = madelung_decompose(&psi, &PhysicalConstants::UNIT).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = (g.x(i), g.y(j));
                if x * x + y * y > 16.0 {
                    continue;
                }
                assert_abs_diff_eq!(pair.v.vx[g.idx(i, j)], kx, epsilon = 5e-3);
                assert_abs_diff_eq!(pair.v.vy[g.idx(i, j)], 0.0, epsilon = 5e-3);
            }
        }
    }

    #[test]
    fn real_positive_amplitude_has_zero_velocity() {
        let g = Grid2D::square(65, 5.0).unwrap();
        let psi = ComplexField::from_fn(g, |x, y| {
            Complex64::new((-0.5 * (x * x + y * y)).exp(), 0.0)
        });
        let pair = madelung_decompose(&psi, &PhysicalConstants::UNIT).unwrap();
        assert!(pair.v.vx.iter().chain(&pair.v.vy).all(|&c| c == 0.0));
    }

    #[test]
    fn zero_field_is_rejected() {
        let g = Grid2D::square(32, 2.0).unwrap();
        let psi = ComplexField::zeros(g);
        assert!(madelung_decompose(&psi, &PhysicalConstants::UNIT).is_err());
    }

    #[test]
    fn vortex_speed_follows_inverse_radius() {
        // psi_01 - i psi_10 carries phase theta - pi/2: |v| = hbar/(m r),
        // counterclockwise
        let pair = vortex_pair(-1.0, 257);
        let g = pair.grid();
        let mut checked = 0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = (g.x(i), g.y(j));
                let r = x.hypot(y);
                let near_band =
                    [0.5f64, 1.0, 2.0].iter().any(|r0| (r - r0).abs() < 0.5 * g.hx());
                if !near_band {
                    continue;
                }
                let (vx, vy) = (pair.v.vx[g.idx(i, j)], pair.v.vy[g.idx(i, j)]);
                let speed = vx.hypot(vy);
                assert_relative_eq!(speed, 1.0 / r, max_relative = 1e-2);
                // tangential: radial component small, azimuthal positive
                let v_rad = (vx * x + vy * y) / r;
                let v_theta = (-vx * y + vy * x) / r;
                assert!(v_rad.abs() < 1e-2 * speed, "radial leak {v_rad} at r={r}");
                assert!(v_theta > 0.0);
                checked += 1;
            }
        }
        assert!(checked > 100, "bands sampled only {checked} points");
    }

    #[test]
    fn vortex_circulation_is_quantized_with_orientation_sign() {
        let origin = Point::new(0.0, 0.0);
        let tau = std::f64::consts::TAU;
        for (sign, n_expected) in [(-1.0, 1.0), (1.0, -1.0)] {
            let pair = vortex_pair(sign, 257);
            for radius in [1.0, 2.0] {
                let circ = line_integral_circle(&pair.v, origin, radius, 256).unwrap();
                assert_relative_eq!(circ / tau, n_expected, max_relative = 1e-3);
            }
        }
    }

    #[test]
    fn perturbation_preserves_density_and_adds_circulation() {
        let base = vortex_pair(-1.0, 257);
        let p = VortexPerturbation { nu0: 0.1, center: Point::new(0.0, 0.0) };
        let c = PhysicalConstants::UNIT;
        let perturbed = apply_vortex_perturbation(&base, &p, &c).unwrap();
        assert_eq!(perturbed.rho.values, base.rho.values);

        let tau = std::f64::consts::TAU;
        for radius in [0.8, 2.5] {
            let circ =
                line_integral_circle(&perturbed.v, Point::new(0.0, 0.0), radius, 256).unwrap();
            assert_relative_eq!(circ / tau, 1.1, max_relative = 1e-3);
        }

        // nu0 = 0 is the identity
        let same = apply_vortex_perturbation(
            &base,
            &VortexPerturbation { nu0: 0.0, center: Point::new(0.0, 0.0) },
            &c,
        )
        .unwrap();
        assert_eq!(same.v.vx, base.v.vx);
        assert_eq!(same.v.vy, base.v.vy);
    }

    #[test]
    fn perturbation_composes_additively() {
        let base = vortex_pair(-1.0, 129);
        let c = PhysicalConstants::UNIT;
        let center = Point::new(0.25, -0.4);
        let ab = apply_vortex_perturbation(
            &apply_vortex_perturbation(
                &base,
                &VortexPerturbation { nu0: 0.07, center },
                &c,
            )
            .unwrap(),
            &VortexPerturbation { nu0: 0.05, center },
            &c,
        )
        .unwrap();
        let once =
            apply_vortex_perturbation(&base, &VortexPerturbation { nu0: 0.12, center }, &c)
                .unwrap();
        let scale = base.v.max_speed();
        for idx in 0..base.grid().len() {
            assert_abs_diff_eq!(ab.v.vx[idx], once.v.vx[idx], epsilon = 1e-10 * scale.max(1.0));
            assert_abs_diff_eq!(ab.v.vy[idx], once.v.vy[idx], epsilon = 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn perturbation_center_must_be_inside() {
        let base = vortex_pair(-1.0, 129);
        let c = PhysicalConstants::UNIT;
        for bad in [Point::new(6.0, 0.0), Point::new(0.0, -7.0)] {
            let err = apply_vortex_perturbation(
                &base,
                &VortexPerturbation { nu0: 0.1, center: bad },
                &c,
            );
            assert!(err.is_err());
        }
    }
}

//! Harmonic-oscillator eigenfunctions and superpositions.

use super::special::hermite;
use super::{ModeSpec, PhysicalConstants};
use crate::error::{CsdError, Result};
use crate::fields::{ComplexField, Grid2D};

/// 1D oscillator eigenfunction psi_j(x), L2-normalized on the line.
pub fn ho1d_eigen(j: u32, x: f64, c: &PhysicalConstants) -> Result<f64> {
    c.validate()?;
    let scale = (c.mass * c.omega / c.hbar).sqrt();
    let xi = scale * x;
    // 1/sqrt(2^j j!) built incrementally so intermediates never overflow
    let mut inv_norm = (c.mass * c.omega / (std::f64::consts::PI * c.hbar)).powf(0.25);
    for i in 1..=j {
        inv_norm /= (2.0 * i as f64).sqrt();
    }
    Ok(inv_norm * hermite(j, xi)? * (-0.5 * xi * xi).exp())
}

/// Grid-sampled sum of product modes, L2-normalized with the same trapezoid
/// quadrature used for every integral in this crate.
pub fn build_superposition(
    modes: &[ModeSpec],
    grid: Grid2D,
    c: &PhysicalConstants,
) -> Result<ComplexField> {
    c.validate()?;
    if modes.is_empty() {
        return Err(CsdError::InvalidState("superposition needs at least one mode".into()));
    }
    if modes.iter().all(|m| m.coeff.norm_sqr() == 0.0) {
        return Err(CsdError::InvalidState("all mode coefficients are zero".into()));
    }

    // 1D tables: psi_j along every x node and psi_k along every y node
    let mut tx = Vec::with_capacity(modes.len());
    let mut ty = Vec::with_capacity(modes.len());
    for m in modes {
        let mut col_x = Vec::with_capacity(grid.nx);
        for i in 0..grid.nx {
            col_x.push(ho1d_eigen(m.j, grid.x(i), c)?);
        }
        let mut col_y = Vec::with_capacity(grid.ny);
        for jr in 0..grid.ny {
            col_y.push(ho1d_eigen(m.k, grid.y(jr), c)?);
        }
        tx.push(col_x);
        ty.push(col_y);
    }

    let mut psi = ComplexField::zeros(grid);
    for (m, (col_x, col_y)) in modes.iter().zip(tx.iter().zip(&ty)) {
        for jr in 0..grid.ny {
            let row = m.coeff * col_y[jr];
            for i in 0..grid.nx {
                psi.values[grid.idx(i, jr)] += row * col_x[i];
            }
        }
    }
    psi.normalize()?;
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::boundary_mass_fraction;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex64;

    fn trapezoid_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / (n - 1) as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n - 1 {
            s += f(a + i as f64 * h);
        }
        s * h
    }

    #[test]
    fn ground_state_peak_value() {
        let c = PhysicalConstants::UNIT;
        assert_relative_eq!(
            ho1d_eigen(0, 0.0, &c).unwrap(),
            std::f64::consts::PI.powf(-0.25),
            max_relative = 1e-14
        );
        assert_eq!(ho1d_eigen(1, 0.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn eigenfunctions_are_unit_norm() {
        let c = PhysicalConstants::UNIT;
        for j in 0..4u32 {
            let norm = trapezoid_1d(|x| ho1d_eigen(j, x, &c).unwrap().powi(2), -10.0, 10.0, 2001);
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-8);
        }
        // non-unit constants rescale the oscillator length but not the norm
        let c = PhysicalConstants { hbar: 2.0, mass: 0.5, omega: 3.0 };
        let norm = trapezoid_1d(|x| ho1d_eigen(2, x, &c).unwrap().powi(2), -12.0, 12.0, 4001);
        assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn ground_superposition_is_real_positive() {
        let g = Grid2D::square(129, 6.0).unwrap();
        let psi =
            build_superposition(&[ModeSpec::new(0, 0, Complex64::ONE)], g, &PhysicalConstants::UNIT)
                .unwrap();
        for z in &psi.values {
            assert!(z.re > 0.0 && z.im == 0.0);
        }
        // peak of the normalized 2D ground state is 1/sqrt(pi)
        let center = psi.at(g.nx / 2, g.ny / 2);
        assert_relative_eq!(center.re, std::f64::consts::PI.powf(-0.5), max_relative = 1e-6);
    }

    #[test]
    fn two_mode_vortex_matches_closed_form() {
        // psi_01 + i psi_10 normalizes to (y + i x) e^{-r^2/2} / sqrt(pi)
        let g = Grid2D::square(257, 6.0).unwrap();
        let modes =
            [ModeSpec::new(0, 1, Complex64::ONE), ModeSpec::new(1, 0, Complex64::new(0.0, 1.0))];
        let psi = build_superposition(&modes, g, &PhysicalConstants::UNIT).unwrap();
        assert_eq!(psi.at(g.nx / 2, g.ny / 2).norm(), 0.0, "node sits exactly on the origin");
        let inv_sqrt_pi = std::f64::consts::PI.powf(-0.5);
        for (i, jr) in [(200, 128), (128, 60), (150, 170), (90, 90)] {
            let (x, y) = (g.x(i), g.y(jr));
            let expect = Complex64::new(y, x) * inv_sqrt_pi * (-0.5 * (x * x + y * y)).exp();
            let got = psi.at(i, jr);
            assert_relative_eq!(got.re, expect.re, max_relative = 1e-6, epsilon = 1e-12);
            assert_relative_eq!(got.im, expect.im, max_relative = 1e-6, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_empty_and_all_zero_modes() {
        let g = Grid2D::square(64, 6.0).unwrap();
        let c = PhysicalConstants::UNIT;
        assert!(build_superposition(&[], g, &c).is_err());
        let zeroed = [ModeSpec::new(0, 0, Complex64::ZERO)];
        assert!(build_superposition(&zeroed, g, &c).is_err());
    }

    #[test]
    fn cramped_grid_leaves_mass_on_the_boundary() {
        let g = Grid2D::square(64, 2.0).unwrap();
        let psi =
            build_superposition(&[ModeSpec::new(0, 0, Complex64::ONE)], g, &PhysicalConstants::UNIT)
                .unwrap();
        assert!(boundary_mass_fraction(&psi.abs2()) > 1e-6);
    }
}

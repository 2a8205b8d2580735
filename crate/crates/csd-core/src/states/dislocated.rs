//! Travelling wave carrying a screw dislocation: a unit vortex riding on a
//! plane wave under a Gaussian envelope.

use num_complex::Complex64;

use super::madelung::madelung_decompose;
use super::{MadelungPair, PhysicalConstants};
use crate::error::{CsdError, Result};
use crate::fields::{ComplexField, Grid2D};

/// psi = (x + i y) e^{i k x} e^{-r^2 / 2 sigma^2}, normalized and decomposed.
pub fn dislocated_wave_state(
    k: f64,
    sigma: f64,
    grid: Grid2D,
    c: &PhysicalConstants,
) -> Result<MadelungPair> {
    c.validate()?;
    if !k.is_finite() {
        return Err(CsdError::UnsupportedArgument {
            name: "k",
            value: k,
            reason: "wavenumber must be finite".into(),
        });
    }
    if !(sigma > 3.0 * grid.h_max()) {
        return Err(CsdError::UnsupportedArgument {
            name: "sigma",
            value: sigma,
            reason: format!("envelope must resolve: need sigma > 3h = {}", 3.0 * grid.h_max()),
        });
    }
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    let mut psi = ComplexField::from_fn(grid, |x, y| {
        Complex64::new(x, y)
            * Complex64::new(0.0, k * x).exp()
            * (-(x * x + y * y) * inv_two_sigma2).exp()
    });
    psi.normalize()?;
    madelung_decompose(&psi, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ops::line_integral_circle;
    use crate::fields::Point;
    use approx::assert_relative_eq;

    const TAU: f64 = std::f64::consts::TAU;

    #[test]
    fn pure_vortex_limit_circulates_once() {
        let g = Grid2D::square(257, 6.0).unwrap();
        let pair = dislocated_wave_state(0.0, 2.0, g, &PhysicalConstants::UNIT).unwrap();
        let circ = line_integral_circle(&pair.v, Point::new(0.0, 0.0), 1.0, 256).unwrap();
        assert_relative_eq!(circ, TAU, max_relative = 1e-3);
    }

    #[test]
    fn node_sits_at_the_origin() {
        let g = Grid2D::square(257, 6.0).unwrap();
        let pair = dislocated_wave_state(1.0, 2.0, g, &PhysicalConstants::UNIT).unwrap();
        let (ic, jc) = (g.nx / 2, g.ny / 2);
        assert_eq!(pair.rho.at(ic, jc), 0.0);
        // quadratic zero: one cell out the density is h^2-sized, not smaller
        let next = pair.rho.at(ic + 1, jc);
        let quad = pair.rho.max_value() * (g.hx() / 2.0).powi(2);
        assert!(next > 0.1 * quad && next < 10.0 * quad, "next = {next}, quad scale = {quad}");
    }

    #[test]
    fn carrier_wave_adds_no_circulation() {
        let g = Grid2D::square(257, 6.0).unwrap();
        let pair = dislocated_wave_state(1.0, 2.0, g, &PhysicalConstants::UNIT).unwrap();
        let circ = line_integral_circle(&pair.v, Point::new(0.0, 0.0), 0.5, 256).unwrap();
        assert_relative_eq!(circ, TAU, max_relative = 1e-3);
    }

    #[test]
    fn under_resolved_envelope_is_rejected() {
        let g = Grid2D::square(64, 6.0).unwrap();
        assert!(dislocated_wave_state(1.0, 0.3, g, &PhysicalConstants::UNIT).is_err());
    }
}

//! Grid-sampled fields: real scalars, 2-vectors, and complex scalars.
//!
//! Values are stored row-major, index = j*nx + i (x runs fastest).

use num_complex::Complex64;

use super::grid::Grid2D;
use crate::error::{CsdError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid2D) -> Self {
        ScalarField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        ScalarField { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.grid.idx(i, j);
        &mut self.values[k]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoidal integral over the rectangle.
    pub fn integral(&self) -> f64 {
        let g = self.grid;
        let mut sum = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                sum += g.quad_weight(i, j) * self.values[g.idx(i, j)];
            }
        }
        sum * g.cell_area()
    }

    /// Area-weighted L2 norm, trapezoidal.
    pub fn l2_norm(&self) -> f64 {
        let g = self.grid;
        let mut sum = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let v = self.values[g.idx(i, j)];
                sum += g.quad_weight(i, j) * v * v;
            }
        }
        (sum * g.cell_area()).sqrt()
    }

    /// Relative L2 distance to another field on the same grid.
    pub fn rel_l2_distance(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let g = self.grid;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let w = g.quad_weight(i, j);
                let k = g.idx(i, j);
                let d = self.values[k] - other.values[k];
                num += w * d * d;
                den += w * other.values[k] * other.values[k];
            }
        }
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }

    pub fn validate_finite(&self, what: &str) -> Result<()> {
        if self.values.len() != self.grid.len() {
            return Err(CsdError::InvalidState(format!(
                "{what}: {} values on a {}x{} grid",
                self.values.len(),
                self.grid.nx,
                self.grid.ny
            )));
        }
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(CsdError::InvalidState(format!(
                "{what}: non-finite value at flat index {k}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2 {
    pub grid: Grid2D,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl VectorField2 {
    pub fn zeros(grid: Grid2D) -> Self {
        VectorField2 { grid, vx: vec![0.0; grid.len()], vy: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut vx = Vec::with_capacity(grid.len());
        let mut vy = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                let (a, b) = f(grid.x(i), y);
                vx.push(a);
                vy.push(b);
            }
        }
        VectorField2 { grid, vx, vy }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> (f64, f64) {
        let k = self.grid.idx(i, j);
        (self.vx[k], self.vy[k])
    }

    pub fn max_speed(&self) -> f64 {
        self.vx
            .iter()
            .zip(&self.vy)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }

    pub fn validate_finite(&self, what: &str) -> Result<()> {
        if self.vx.len() != self.grid.len() || self.vy.len() != self.grid.len() {
            return Err(CsdError::InvalidState(format!("{what}: component length mismatch")));
        }
        for (name, comp) in [("vx", &self.vx), ("vy", &self.vy)] {
            if let Some(k) = comp.iter().position(|v| !v.is_finite()) {
                return Err(CsdError::InvalidState(format!(
                    "{what}: non-finite {name} at flat index {k}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid2D,
    pub values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid2D) -> Self {
        ComplexField { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        ComplexField { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.idx(i, j)]
    }

    /// |psi|^2 as a scalar field.
    pub fn abs2(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    /// Trapezoidal L2 norm (sqrt of integral of |psi|^2).
    pub fn l2_norm(&self) -> f64 {
        self.abs2().integral().max(0.0).sqrt()
    }

    /// Scale so the L2 norm is 1.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.l2_norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(CsdError::InvalidState("cannot normalize a zero field".into()));
        }
        let s = 1.0 / n;
        for z in &mut self.values {
            *z *= s;
        }
        Ok(())
    }

    pub fn validate_finite(&self) -> Result<()> {
        for (idx, z) in self.values.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                let g = self.grid;
                return Err(CsdError::InvalidState(format!(
                    "non-finite amplitude at grid point ({}, {})",
                    idx % g.nx,
                    idx / g.nx
                )));
            }
        }
        Ok(())
    }
}

/// Fraction of the field's mass (integral of the scalar) on the outermost ring.
///
/// Used to flag states whose support is not contained by the grid.
pub fn boundary_mass_fraction(rho: &ScalarField) -> f64 {
    let g = rho.grid;
    let mut edge = 0.0;
    let mut total = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.quad_weight(i, j) * rho.values[g.idx(i, j)];
            total += c;
            if i == 0 || j == 0 || i == g.nx - 1 || j == g.ny - 1 {
                edge += c;
            }
        }
    }
    if total <= 0.0 {
        return 0.0;
    }
    edge / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trapezoid_integral_is_exact_for_bilinear() {
        let g = Grid2D::new(9, 13, 0.0, 2.0, 0.0, 3.0).unwrap();
        // f = 1 integrates to the area; f = x*y to 9
        let ones = ScalarField::from_fn(g, |_, _| 1.0);
        assert_relative_eq!(ones.integral(), 6.0, max_relative = 1e-14);
        let xy = ScalarField::from_fn(g, |x, y| x * y);
        assert_relative_eq!(xy.integral(), 9.0, max_relative = 1e-13);
    }

    #[test]
    fn gaussian_normalizes() {
        let g = Grid2D::square(129, 8.0).unwrap();
        let mut psi = ComplexField::from_fn(g, |x, y| {
            Complex64::new((-0.5 * (x * x + y * y)).exp(), 0.0)
        });
        psi.normalize().unwrap();
        assert_relative_eq!(psi.l2_norm(), 1.0, max_relative = 1e-12);
        // integral of exp(-r^2) over the plane is pi, so the tail cut is tiny
        assert!(boundary_mass_fraction(&psi.abs2()) < 1e-12);
    }

    #[test]
    fn boundary_mass_flags_cropped_support() {
        let g = Grid2D::square(33, 1.0).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| (-0.5 * (x * x + y * y)).exp());
        assert!(boundary_mass_fraction(&rho) > 1e-3);
    }
}

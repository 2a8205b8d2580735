//! Uniform vertex-centered grid on a rectangle.
//!
//! Node (i, j) sits at (x_min + i*h_x, y_min + j*h_y); both boundaries are
//! included, so h_x = (x_max - x_min)/(nx - 1).

use crate::error::{CsdError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        if nx < 8 || ny < 8 {
            return Err(CsdError::InvalidGrid(format!(
                "need at least 8 points per axis, got {nx} x {ny}"
            )));
        }
        if !(x_max > x_min) || !(y_max > y_min) {
            return Err(CsdError::InvalidGrid(format!(
                "degenerate extents [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(CsdError::InvalidGrid("non-finite extents".into()));
        }
        Ok(Grid2D { nx, ny, x_min, x_max, y_min, y_max })
    }

    /// Square n x n grid on [-half, half] in both axes.
    pub fn square(n: usize, half: f64) -> Result<Self> {
        Grid2D::new(n, n, -half, half, -half, half)
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    /// Larger of the two spacings; the conservative choice for radius bounds.
    #[inline]
    pub fn h_max(&self) -> f64 {
        self.hx().max(self.hy())
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.hy()
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    /// Trapezoidal quadrature weight of node (i, j): 1 interior, 1/2 edge, 1/4 corner.
    #[inline]
    pub fn quad_weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
        wx * wy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_coordinates_are_exact_at_ends() {
        let g = Grid2D::new(9, 17, -2.0, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(g.x(0), -2.0);
        assert_eq!(g.x(8), 2.0);
        assert_eq!(g.y(0), 0.0);
        assert_eq!(g.y(16), 1.0);
        assert_eq!(g.hx(), 0.5);
        assert_eq!(g.hy(), 1.0 / 16.0);
    }

    #[test]
    fn rejects_tiny_or_degenerate() {
        assert!(Grid2D::new(4, 64, -1.0, 1.0, -1.0, 1.0).is_err());
        assert!(Grid2D::new(64, 64, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(Grid2D::new(64, 64, f64::NAN, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn contains_is_boundary_inclusive() {
        let g = Grid2D::square(16, 3.0).unwrap();
        assert!(g.contains(Point::new(3.0, -3.0)));
        assert!(!g.contains(Point::new(3.0000001, 0.0)));
    }
}

//! External potentials: static traps and a time-dependent moving interaction.

use crate::error::{CsdError, Result};
use crate::fields::{Grid2D, Point, ScalarField};
use crate::states::PhysicalConstants;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// V = m omega^2 r^2 / 2 about the origin.
    Harmonic { omega: f64 },
    /// Harmonic trap plus a Gaussian bump of height `amplitude` carried along
    /// the straight path start -> end over [t_on, t_off], switched on and off
    /// with a cosine taper of half-width `ramp`.
    MovingGaussian {
        omega: f64,
        amplitude: f64,
        width: f64,
        start: Point,
        end: Point,
        t_on: f64,
        t_off: f64,
        ramp: f64,
    },
    /// Flat disk about the grid center with quadratically stiffening walls:
    /// V = stiffness * max(0, r - radius)^2.
    CircularWell { radius: f64, stiffness: f64 },
    /// V = 0 everywhere.
    Free,
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, value: f64, reason: &str| {
            Err(CsdError::UnsupportedArgument { name, value, reason: reason.into() })
        };
        match *self {
            PotentialSpec::Harmonic { omega } => {
                if !(omega > 0.0 && omega.is_finite()) {
                    return bad("omega", omega, "trap frequency must be positive");
                }
            }
            PotentialSpec::MovingGaussian {
                omega, amplitude, width, start, end, t_on, t_off, ramp,
            } => {
                if !(omega > 0.0 && omega.is_finite()) {
                    return bad("omega", omega, "trap frequency must be positive");
                }
                if !amplitude.is_finite() {
                    return bad("amplitude", amplitude, "must be finite");
                }
                if !(width > 0.0 && width.is_finite()) {
                    return bad("width", width, "bump width must be positive");
                }
                if !(ramp > 0.0 && ramp.is_finite()) {
                    return bad("ramp", ramp, "taper half-width must be positive");
                }
                if !(t_on < t_off) {
                    return bad("t_on", t_on, "switch-on must precede switch-off");
                }
                for (p, name) in [(start, "start"), (end, "end")] {
                    if !(p.x.is_finite() && p.y.is_finite()) {
                        return Err(CsdError::InvalidState(format!(
                            "moving-gaussian {name} point is not finite"
                        )));
                    }
                }
            }
            PotentialSpec::CircularWell { radius, stiffness } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return bad("radius", radius, "well radius must be positive");
                }
                if !(stiffness > 0.0 && stiffness.is_finite()) {
                    return bad("stiffness", stiffness, "wall stiffness must be positive");
                }
            }
            PotentialSpec::Free => {}
        }
        Ok(())
    }

    /// True when V does not depend on t, so one evaluation serves a whole run.
    pub fn is_static(&self) -> bool {
        !matches!(self, PotentialSpec::MovingGaussian { .. })
    }

    /// Bump center at time t: parked at `start` before t_on, at `end` after t_off.
    pub fn bump_center(&self, t: f64) -> Option<Point> {
        match *self {
            PotentialSpec::MovingGaussian { start, end, t_on, t_off, .. } => {
                let s = ((t - t_on) / (t_off - t_on)).clamp(0.0, 1.0);
                Some(Point::new(start.x + s * (end.x - start.x), start.y + s * (end.y - start.y)))
            }
            _ => None,
        }
    }

    /// Switch-on factor in [0, 1]: zero outside [t_on - ramp, t_off + ramp],
    /// one on [t_on + ramp, t_off - ramp], cosine-smooth between.
    pub fn envelope(&self, t: f64) -> f64 {
        match *self {
            PotentialSpec::MovingGaussian { t_on, t_off, ramp, .. } => {
                let up = taper01((t - (t_on - ramp)) / (2.0 * ramp));
                let down = taper01(((t_off + ramp) - t) / (2.0 * ramp));
                up * down
            }
            _ => 1.0,
        }
    }

    pub(crate) fn evaluate_into(&self, grid: &Grid2D, t: f64, c: &PhysicalConstants, out: &mut [f64]) {
        debug_assert_eq!(out.len(), grid.len());
        match *self {
            PotentialSpec::Harmonic { omega } => {
                let k = 0.5 * c.mass * omega * omega;
                fill_by_point(grid, out, |x, y| k * (x * x + y * y));
            }
            PotentialSpec::MovingGaussian { omega, amplitude, width, .. } => {
                let k = 0.5 * c.mass * omega * omega;
                let a = amplitude * self.envelope(t);
                let p0 = self.bump_center(t).unwrap();
                let inv2s2 = 1.0 / (2.0 * width * width);
                fill_by_point(grid, out, |x, y| {
                    let dx = x - p0.x;
                    let dy = y - p0.y;
                    k * (x * x + y * y) + a * (-(dx * dx + dy * dy) * inv2s2).exp()
                });
            }
            PotentialSpec::CircularWell { radius, stiffness } => {
                let cpt = grid.center();
                fill_by_point(grid, out, |x, y| {
                    let r = (x - cpt.x).hypot(y - cpt.y);
                    let over = (r - radius).max(0.0);
                    stiffness * over * over
                });
            }
            PotentialSpec::Free => out.fill(0.0),
        }
    }
}

fn taper01(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * u).cos())
    }
}

fn fill_by_point(grid: &Grid2D, out: &mut [f64], f: impl Fn(f64, f64) -> f64) {
    for j in 0..grid.ny {
        let y = grid.y(j);
        let row = j * grid.nx;
        for i in 0..grid.nx {
            out[row + i] = f(grid.x(i), y);
        }
    }
}

/// Sample the external potential on the grid at time t.
pub fn evaluate_potential(
    spec: &PotentialSpec,
    grid: Grid2D,
    t: f64,
    c: &PhysicalConstants,
) -> Result<ScalarField> {
    spec.validate()?;
    c.validate()?;
    if !(t >= 0.0) {
        return Err(CsdError::UnsupportedArgument {
            name: "t",
            value: t,
            reason: "potentials are evaluated at t >= 0".into(),
        });
    }
    let mut out = ScalarField::zeros(grid);
    spec.evaluate_into(&grid, t, c, &mut out.values);
    Ok(out)
}

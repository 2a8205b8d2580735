//! Post-hoc trajectory tracing through a stored velocity history.

use std::io::Write;
use std::path::Path;

use crate::error::{CsdError, Result};
use crate::fields::ops::sample_vector;
use crate::fields::{Point, VectorField2};

#[derive(Debug, Clone)]
pub struct VelocityFrame {
    pub t: f64,
    pub v: VectorField2,
    pub nodes: Vec<Point>,
}

/// Velocity frames recorded during a run, plus the excision radius that was
/// active, so the tracer can stop where the dynamics was interpolated.
#[derive(Debug, Clone)]
pub struct VelocityHistory {
    pub frames: Vec<VelocityFrame>,
    pub excision_radius: f64,
}

impl VelocityHistory {
    /// Smallest spacing between consecutive frames.
    pub fn stride(&self) -> f64 {
        self.frames
            .windows(2)
            .map(|w| w[1].t - w[0].t)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrajectoryEnd {
    Completed,
    LeftGrid { t: f64 },
    EnteredExcision { t: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub seed: Point,
    pub times: Vec<f64>,
    pub positions: Vec<Point>,
    pub end: TrajectoryEnd,
}

impl Trajectory {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,x,y")?;
        for (&t, p) in self.times.iter().zip(&self.positions) {
            writeln!(w, "{t:.16e},{:.16e},{:.16e}", p.x, p.y)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrate dx/dt = v(x, t) with classical RK4, bilinear in space and linear
/// in time between frames. Terminates early, flagged, on grid exit or on
/// entering a node-excision disk.
pub fn trace_trajectory(
    seed: Point,
    history: &VelocityHistory,
    dt_traj: f64,
) -> Result<Trajectory> {
    let frames = &history.frames;
    if frames.is_empty() {
        return Err(CsdError::InvalidState("velocity history has no frames".into()));
    }
    if frames.windows(2).any(|w| w[1].t <= w[0].t) {
        return Err(CsdError::InvalidState("velocity frames must be strictly ordered".into()));
    }
    let grid = frames[0].v.grid;
    if !grid.contains(seed) {
        return Err(CsdError::OutOfDomain {
            axis: if seed.x < grid.x_min || seed.x > grid.x_max { "x" } else { "y" },
            value: if seed.x < grid.x_min || seed.x > grid.x_max { seed.x } else { seed.y },
            min: grid.x_min.min(grid.y_min),
            max: grid.x_max.max(grid.y_max),
        });
    }
    if !(dt_traj > 0.0) {
        return Err(CsdError::UnsupportedArgument {
            name: "dt_traj",
            value: dt_traj,
            reason: "step must be positive".into(),
        });
    }
    if frames.len() >= 2 && dt_traj > history.stride() * (1.0 + 1e-12) {
        return Err(CsdError::UnsupportedArgument {
            name: "dt_traj",
            value: dt_traj,
            reason: format!("must not exceed the frame stride {}", history.stride()),
        });
    }

    let t0 = frames[0].t;
    let t_end = frames[frames.len() - 1].t;
    let mut times = vec![t0];
    let mut positions = vec![seed];
    let mut end = TrajectoryEnd::Completed;

    // linear-in-time, bilinear-in-space velocity sample; None when p is out
    let sample = |p: Point, t: f64| -> Option<(f64, f64)> {
        let k = frames.partition_point(|f| f.t <= t).clamp(1, frames.len() - 1);
        let (lo, hi) = (&frames[k - 1], &frames[k]);
        let alpha = ((t - lo.t) / (hi.t - lo.t)).clamp(0.0, 1.0);
        let a = sample_vector(&lo.v, p).ok()?;
        let b = sample_vector(&hi.v, p).ok()?;
        Some((a.0 + alpha * (b.0 - a.0), a.1 + alpha * (b.1 - a.1)))
    };
    let in_excision = |p: Point, t: f64| -> bool {
        let k = frames.partition_point(|f| f.t <= t).clamp(1, frames.len()) - 1;
        frames[k].nodes.iter().any(|n| n.dist(p) <= history.excision_radius)
    };

    if in_excision(seed, t0) {
        return Ok(Trajectory { seed, times, positions, end: TrajectoryEnd::EnteredExcision { t: t0 } });
    }

    let mut t = t0;
    let mut p = seed;
    'steps: while t < t_end - 1e-15 * t_end.abs().max(1.0) {
        let dt = dt_traj.min(t_end - t);
        let stage = |q: Point, tau: f64| sample(q, tau);
        let Some(k1) = stage(p, t) else { end = TrajectoryEnd::LeftGrid { t }; break 'steps };
        let p2 = Point::new(p.x + 0.5 * dt * k1.0, p.y + 0.5 * dt * k1.1);
        let Some(k2) = stage(p2, t + 0.5 * dt) else { end = TrajectoryEnd::LeftGrid { t }; break 'steps };
        let p3 = Point::new(p.x + 0.5 * dt * k2.0, p.y + 0.5 * dt * k2.1);
        let Some(k3) = stage(p3, t + 0.5 * dt) else { end = TrajectoryEnd::LeftGrid { t }; break 'steps };
        let p4 = Point::new(p.x + dt * k3.0, p.y + dt * k3.1);
        let Some(k4) = stage(p4, t + dt) else { end = TrajectoryEnd::LeftGrid { t }; break 'steps };

        let next = Point::new(
            p.x + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            p.y + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        );
        t += dt;
        if !grid.contains(next) {
            end = TrajectoryEnd::LeftGrid { t };
            break;
        }
        p = next;
        times.push(t);
        positions.push(p);
        if in_excision(p, t) {
            end = TrajectoryEnd::EnteredExcision { t };
            break;
        }
    }

    Ok(Trajectory { seed, times, positions, end })
}

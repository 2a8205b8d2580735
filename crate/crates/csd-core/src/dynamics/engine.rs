//! Method-of-lines RK4 evolution of (rho, v).
//!
//! The right-hand side is the continuity equation plus the Eulerian momentum
//! equation forced by -grad(V + Q)/m. Density zeros make both singular, so
//! derivatives inside an excision disk around each detected node are replaced
//! by inverse-distance interpolation from the surrounding valid ring, and the
//! outermost grid ring is frozen (Dirichlet) at its initial values.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::analysis::{
    detect_nodes, vorticity, NodeEstimate, Trajectory, VelocityFrame, VelocityHistory,
    VorticityTrace,
};
use crate::error::{CsdError, Result};
use crate::fields::ops::{ddx4_into, ddy4_into, idw_fill_from, lap4_into};
use crate::fields::{snapshot, Grid2D, Point, ScalarField, VectorField2};
use crate::states::{MadelungPair, PhysicalConstants};

use super::potential::PotentialSpec;
use super::quantum::quantum_potential_log_into;

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub rho: ScalarField,
    pub v: VectorField2,
}

impl SimState {
    pub fn new(initial: MadelungPair) -> Self {
        SimState { t: 0.0, rho: initial.rho, v: initial.v }
    }

    pub fn grid(&self) -> Grid2D {
        self.rho.grid
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub node_excision_radius: f64,
    /// Relative density floor in the quantum-potential denominator.
    pub rho_floor: f64,
    /// Relative density cut below which a local minimum is treated as a node.
    pub node_threshold: f64,
    /// Relative density below which a cell is frozen vacuum: its state is
    /// held and its time derivatives zeroed. Zero disables the freeze.
    pub vacuum_threshold: f64,
    /// Dimensionless strength of the velocity hyperviscosity
    /// -alpha (hbar/m) h^2 lap^2(v). Damps cell-scale force noise (worst
    /// near node excision rims, where stencil error scales like h^2/r^5)
    /// at a rate ~alpha/h^2 while biasing smooth fields only at O(h^2);
    /// an ideal 1/r swirl has lap(v) = 0 identically, so the circulation
    /// this solver measures is untouched. Zero disables.
    pub hyperviscosity: f64,
    /// Dimensionless strength of the plain velocity viscosity
    /// beta (hbar/m) lap(v) applied only in the deep density tail, ramping
    /// in just above the vacuum band. Sound-like ripples riding down the
    /// exponential tail amplify as 1/sqrt(rho) and arrive at the vacuum
    /// band at order unity; a k^4 filter misses these long waves, so the
    /// tail needs a k^2 one. Swirl, rigid translation, and dilation are
    /// harmonic vector fields, which this term leaves untouched. Zero
    /// disables; inactive wherever the vacuum freeze is disabled.
    pub tail_viscosity: f64,
    pub node_refresh_stride: usize,
    pub snapshot_stride: usize,
    pub trace_stride: usize,
}

impl SimConfig {
    /// Defaults tied to the grid: excision of two spacings, and a node cut
    /// above the floor value a resolved quadratic zero can reach mid-cell
    /// (about 1.36 h^2 of the peak), so real nodes clear it with margin.
    ///
    /// The vacuum cut freezes cells below 1e-8 of the peak density. In that
    /// deep tail the density drops by large factors per cell, the Laplacian
    /// stencil under-resolves it, and the resulting force noise has nothing
    /// damping it, so it winds up the velocity field until advection blows
    /// up. The frozen cells carry ~1e-8 of the mass, so the freeze is
    /// dynamically invisible at the accuracy this solver targets.
    pub fn for_grid(grid: &Grid2D, dt: f64, t_end: f64) -> Self {
        let h = grid.h_max();
        SimConfig {
            dt,
            t_end,
            node_excision_radius: 2.0 * h,
            rho_floor: 1e-10,
            node_threshold: (4.0 * h * h).max(1e-4),
            vacuum_threshold: 1e-8,
            hyperviscosity: 1e-1,
            tail_viscosity: 2e-1,
            node_refresh_stride: 10,
            snapshot_stride: 1000,
            trace_stride: 10,
        }
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        let bad = |name: &'static str, value: f64, reason: &str| {
            Err(CsdError::UnsupportedArgument { name, value, reason: reason.into() })
        };
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", self.dt, "time step must be positive");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end", self.t_end, "end time must be nonnegative");
        }
        if self.node_excision_radius < grid.h_max() * (1.0 - 1e-12) {
            return bad(
                "node_excision_radius",
                self.node_excision_radius,
                "excision must cover at least one grid spacing",
            );
        }
        if !(self.rho_floor > 0.0 && self.rho_floor < 1.0) {
            return bad("rho_floor", self.rho_floor, "relative floor must sit in (0, 1)");
        }
        if !(self.node_threshold > 0.0 && self.node_threshold < 1.0) {
            return bad("node_threshold", self.node_threshold, "relative cut must sit in (0, 1)");
        }
        if !(self.vacuum_threshold >= 0.0 && self.vacuum_threshold < 1.0) {
            return bad("vacuum_threshold", self.vacuum_threshold, "relative cut must sit in [0, 1)");
        }
        if !(self.hyperviscosity >= 0.0 && self.hyperviscosity.is_finite()) {
            return bad("hyperviscosity", self.hyperviscosity, "damping strength must be >= 0");
        }
        if !(self.tail_viscosity >= 0.0 && self.tail_viscosity.is_finite()) {
            return bad("tail_viscosity", self.tail_viscosity, "damping strength must be >= 0");
        }
        for (name, s) in [
            ("node_refresh_stride", self.node_refresh_stride),
            ("snapshot_stride", self.snapshot_stride),
            ("trace_stride", self.trace_stride),
        ] {
            if s == 0 {
                return bad(name, 0.0, "strides are positive step counts");
            }
        }
        Ok(())
    }

    /// Advisory explicit-stability bound: the quantum potential acts like a
    /// dispersive term needing dt = O(h^2 m / hbar).
    pub fn stability_bound(grid: &Grid2D, c: &PhysicalConstants) -> f64 {
        let h = grid.hx().min(grid.hy());
        0.2 * h * h * c.mass / c.hbar
    }
}

#[derive(Debug, Clone)]
pub struct VorticityProbe {
    pub n_ref: i64,
    pub radii: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ObserverConfig {
    /// Directory for field snapshots and the run ledger; nothing is written
    /// when absent.
    pub snapshot_dir: Option<PathBuf>,
    pub probe: Option<VorticityProbe>,
    /// Seeds traced through the recorded velocity history after the run.
    pub trajectory_seeds: Vec<Point>,
    /// Keep the velocity history in the record even without seeds.
    pub record_history: bool,
    /// Steps between stored velocity frames.
    pub history_stride: usize,
}

impl Default for ObserverConfig {
    fn default() -> Self {
        ObserverConfig {
            snapshot_dir: None,
            probe: None,
            trajectory_seeds: Vec::new(),
            record_history: false,
            history_stride: 100,
        }
    }
}

impl ObserverConfig {
    pub fn new() -> Self {
        Self::default()
    }

    fn wants_history(&self) -> bool {
        self.record_history || !self.trajectory_seeds.is_empty()
    }

    fn validate(&self, grid: &Grid2D) -> Result<()> {
        if self.wants_history() && self.history_stride == 0 {
            return Err(CsdError::UnsupportedArgument {
                name: "history_stride",
                value: 0.0,
                reason: "strides are positive step counts".into(),
            });
        }
        if let Some(p) = &self.probe {
            if p.radii.is_empty() {
                return Err(CsdError::UnsupportedArgument {
                    name: "radii",
                    value: 0.0,
                    reason: "vorticity probe needs at least one loop radius".into(),
                });
            }
        }
        for s in &self.trajectory_seeds {
            if !grid.contains(*s) {
                return Err(CsdError::OutOfDomain {
                    axis: "trajectory seed",
                    value: s.x,
                    min: grid.x_min,
                    max: grid.x_max,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct RunRecord {
    pub final_state: SimState,
    pub steps_taken: usize,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Mass added by clipping negative densities, summed over the run.
    pub clipped_mass_total: f64,
    pub max_clip_per_step: f64,
    /// Largest observed max|curl v| * h / max|v| in the monitored region.
    pub max_curl_ratio: f64,
    pub traces: Vec<VorticityTrace>,
    pub trajectories: Vec<Trajectory>,
    pub history: Option<VelocityHistory>,
    pub node_events: Vec<String>,
    pub warnings: Vec<String>,
    pub early_termination: Option<String>,
    /// Number of snapshot instants written (three files each).
    pub snapshots_written: usize,
    pub wall_seconds: f64,
}

impl RunRecord {
    pub fn mass_drift(&self) -> f64 {
        self.final_mass - self.initial_mass
    }

    /// Net mass lost through the frozen boundary: total drift minus what
    /// clipping added.
    pub fn boundary_leakage(&self) -> f64 {
        self.mass_drift() - self.clipped_mass_total
    }

    pub fn max_nu_drift(&self) -> f64 {
        self.traces.iter().map(|tr| tr.max_nu_drift()).fold(0.0, f64::max)
    }

    pub fn write_ledger(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "steps = {}", self.steps_taken)?;
        writeln!(w, "t_final = {:.12e}", self.final_state.t)?;
        writeln!(w, "initial_mass = {:.12e}", self.initial_mass)?;
        writeln!(w, "final_mass = {:.12e}", self.final_mass)?;
        writeln!(w, "mass_drift = {:.6e}", self.mass_drift())?;
        writeln!(w, "clipped_mass_total = {:.6e}", self.clipped_mass_total)?;
        writeln!(w, "max_clip_per_step = {:.6e}", self.max_clip_per_step)?;
        writeln!(w, "boundary_leakage = {:.6e}", self.boundary_leakage())?;
        writeln!(w, "max_curl_ratio = {:.6e}", self.max_curl_ratio)?;
        writeln!(w, "snapshots_written = {}", self.snapshots_written)?;
        writeln!(w, "wall_seconds = {:.3}", self.wall_seconds)?;
        match &self.early_termination {
            Some(cause) => writeln!(w, "early_termination = {cause}")?,
            None => writeln!(w, "early_termination = none")?,
        }
        for (k, e) in self.node_events.iter().enumerate() {
            writeln!(w, "node_event_{k} = {e}")?;
        }
        for (k, m) in self.warnings.iter().enumerate() {
            writeln!(w, "warning_{k} = {m}")?;
        }
        w.flush()?;
        Ok(())
    }
}

struct RkBufs {
    k: [Vec<f64>; 3],
    acc: [Vec<f64>; 3],
    stage: [Vec<f64>; 3],
}

impl RkBufs {
    fn new(len: usize) -> Self {
        let z = || [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        RkBufs { k: z(), acc: z(), stage: z() }
    }
}

struct Stepper<'a> {
    grid: Grid2D,
    spec: &'a PotentialSpec,
    cfg: &'a SimConfig,
    c: &'a PhysicalConstants,
    nodes: Vec<NodeEstimate>,
    valid: Vec<bool>,
    donor: Vec<bool>,
    any_excised: bool,
    v_static: Option<Vec<f64>>,
    /// Absolute freeze threshold derived from the reference density; zero
    /// when the vacuum machinery is off.
    vac_lo_abs: f64,
    /// Transport and acceleration weight per cell: 0 in the frozen tail, 1 in
    /// the live interior, smoothstep across the vacuum band. Static over a
    /// run: weights keyed to the evolving density act as a ratchet against a
    /// breathing cloud (outswings park mass in newly frozen cells that can
    /// never release it, and the pile steepens until Q diverges).
    vac_w: Vec<f64>,
    /// Tail-sponge weight: 1 from the vacuum band top downward, ramping to 0
    /// one band-width above it.
    sponge_w: Vec<f64>,
    log_rho: Vec<f64>,
    vtot: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
    flux: Vec<f64>,
    dfdx: Vec<f64>,
    dfdy: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(
        grid: Grid2D,
        spec: &'a PotentialSpec,
        cfg: &'a SimConfig,
        c: &'a PhysicalConstants,
    ) -> Result<Self> {
        c.validate()?;
        spec.validate()?;
        cfg.validate(&grid)?;
        let n = grid.len();
        let v_static = spec.is_static().then(|| {
            let mut v = vec![0.0; n];
            spec.evaluate_into(&grid, 0.0, c, &mut v);
            v
        });
        Ok(Stepper {
            grid,
            spec,
            cfg,
            c,
            nodes: Vec::new(),
            valid: vec![true; n],
            donor: vec![true; n],
            any_excised: false,
            v_static,
            vac_lo_abs: 0.0,
            vac_w: vec![1.0; n],
            sponge_w: vec![0.0; n],
            log_rho: vec![0.0; n],
            vtot: vec![0.0; n],
            gx: vec![0.0; n],
            gy: vec![0.0; n],
            flux: vec![0.0; n],
            dfdx: vec![0.0; n],
            dfdy: vec![0.0; n],
        })
    }

    fn set_vacuum_reference(&mut self, rho: &[f64]) {
        if self.cfg.vacuum_threshold <= 0.0 {
            self.vac_lo_abs = 0.0;
            self.vac_w.fill(1.0);
            self.sponge_w.fill(0.0);
            return;
        }
        let lo = self.cfg.vacuum_threshold * max_slice(rho);
        let band = VACUUM_BAND.ln();
        let ramp = SPONGE_RAMP.ln();
        let ln_lo = lo.ln();
        let ln_hi = ln_lo + band;
        let ln_top = ln_hi + ramp;
        let inv_band = 1.0 / band;
        let inv_ramp = 1.0 / ramp;
        for ((w, sw), &r) in self.vac_w.iter_mut().zip(self.sponge_w.iter_mut()).zip(rho.iter()) {
            let u = r.max(f64::MIN_POSITIVE).ln();
            *w = if u >= ln_hi {
                1.0
            } else if u < ln_lo {
                0.0
            } else {
                let s = (u - ln_lo) * inv_band;
                s * s * (3.0 - 2.0 * s)
            };
            *sw = if u <= ln_hi {
                1.0
            } else if u >= ln_top {
                0.0
            } else {
                let s = (ln_top - u) * inv_ramp;
                s * s * (3.0 - 2.0 * s)
            };
        }
        self.vac_lo_abs = lo;
    }

    fn refresh_nodes(&mut self, rho: &ScalarField) {
        self.nodes = detect_nodes(rho, self.cfg.node_threshold);
        let g = self.grid;
        // Noise dips in the frozen tail can pass the relative-depth cut, and
        // clipping can park them at exactly zero. A real node is surrounded by
        // steep quadratic growth; a vacuum dip sits in ambient that is orders
        // of magnitude below any live density.
        let vacuum_cut = self.cfg.vacuum_threshold * VACUUM_BAND * rho.max_value();
        let live_cut = 100.0 * vacuum_cut;
        self.nodes.retain(|nd| {
            if nd.rho_min >= vacuum_cut {
                return true;
            }
            let ci = ((nd.position.x - g.x_min) / g.hx()).round() as i64;
            let cj = ((nd.position.y - g.y_min) / g.hy()).round() as i64;
            let mut near_max = 0.0f64;
            for dj in -2..=2i64 {
                for di in -2..=2i64 {
                    let (i, j) = (ci + di, cj + dj);
                    if i < 0 || j < 0 || i >= g.nx as i64 || j >= g.ny as i64 {
                        continue;
                    }
                    near_max = near_max.max(rho.values[g.idx(i as usize, j as usize)]);
                }
            }
            near_max >= live_cut
        });
        self.valid.fill(true);
        self.donor.fill(true);
        self.any_excised = false;
        let r = self.cfg.node_excision_radius;
        // Fill donors start two cells beyond the disk. The first ring outside
        // carries the worst of the core truncation noise and, through its own
        // stencils, reads the filled interior back; drawing from it lets that
        // loop self-amplify over thousands of steps.
        let rd = r + 2.0 * g.h_max();
        for node in &self.nodes {
            let p = node.position;
            let i_lo = (((p.x - rd) - g.x_min) / g.hx()).floor().max(0.0) as usize;
            let i_hi = ((((p.x + rd) - g.x_min) / g.hx()).ceil() as usize).min(g.nx - 1);
            let j_lo = (((p.y - rd) - g.y_min) / g.hy()).floor().max(0.0) as usize;
            let j_hi = ((((p.y + rd) - g.y_min) / g.hy()).ceil() as usize).min(g.ny - 1);
            for j in j_lo..=j_hi {
                for i in i_lo..=i_hi {
                    let d = p.dist(Point::new(g.x(i), g.y(j)));
                    if d <= r {
                        self.valid[g.idx(i, j)] = false;
                        self.any_excised = true;
                    }
                    if d <= rd {
                        self.donor[g.idx(i, j)] = false;
                    }
                }
            }
        }
    }

    fn rhs_into(
        &mut self,
        t: f64,
        rho: &[f64],
        vx: &[f64],
        vy: &[f64],
        drho: &mut [f64],
        dvx: &mut [f64],
        dvy: &mut [f64],
    ) -> Result<()> {
        let g = self.grid;
        let n = g.len();

        match &self.v_static {
            Some(v) => self.vtot.copy_from_slice(v),
            None => self.spec.evaluate_into(&g, t, self.c, &mut self.vtot),
        }
        quantum_potential_log_into(
            rho,
            &g,
            self.c,
            self.cfg.rho_floor,
            &mut self.log_rho,
            &mut self.flux,
            &mut self.dfdx,
            &mut self.gx,
        )?;
        for (v, &q) in self.vtot.iter_mut().zip(self.gx.iter()) {
            *v += q;
        }
        ddx4_into(&self.vtot, &g, &mut self.gx);
        ddy4_into(&self.vtot, &g, &mut self.gy);

        // Transport shuts down smoothly through the vacuum band. The weight
        // multiplies the mass flux itself, not its divergence, so whatever does
        // cross the band edge is conserved instead of piling up there.
        for i in 0..n {
            self.flux[i] = self.vac_w[i] * rho[i] * vx[i];
        }
        ddx4_into(&self.flux, &g, &mut self.dfdx);
        for i in 0..n {
            self.flux[i] = self.vac_w[i] * rho[i] * vy[i];
        }
        ddy4_into(&self.flux, &g, &mut self.dfdy);
        for i in 0..n {
            drho[i] = -(self.dfdx[i] + self.dfdy[i]);
        }

        let inv_m = 1.0 / self.c.mass;
        ddx4_into(vx, &g, &mut self.dfdx);
        ddy4_into(vx, &g, &mut self.dfdy);
        for i in 0..n {
            dvx[i] = -(vx[i] * self.dfdx[i] + vy[i] * self.dfdy[i]) - inv_m * self.gx[i];
        }
        ddx4_into(vy, &g, &mut self.dfdx);
        ddy4_into(vy, &g, &mut self.dfdy);
        for i in 0..n {
            dvy[i] = -(vx[i] * self.dfdx[i] + vy[i] * self.dfdy[i]) - inv_m * self.gy[i];
        }

        // The acceleration fades through the band twice over: by the static
        // weight, so the wall geometry never follows the breathing cloud, and
        // by the same ramp evaluated on the instantaneous density, so a cell
        // that momentarily empties stops feeling the saturated, meaningless Q
        // gradient there. The dissipation below stays at full strength through
        // the band, because the band edge is exactly where interface modes try
        // to grow.
        if self.vac_lo_abs > 0.0 {
            let ln_lo = self.vac_lo_abs.ln();
            let inv_band = 1.0 / VACUUM_BAND.ln();
            for i in 0..n {
                let u = rho[i].max(f64::MIN_POSITIVE).ln();
                let s = ((u - ln_lo) * inv_band).clamp(0.0, 1.0);
                let w = self.vac_w[i].min(s * s * (3.0 - 2.0 * s));
                dvx[i] *= w;
                dvy[i] *= w;
            }
        }

        if self.cfg.hyperviscosity > 0.0 {
            let h = g.h_max();
            let nu4 = self.cfg.hyperviscosity * (self.c.hbar / self.c.mass) * h * h;
            for (v, dv) in [(vx, &mut *dvx), (vy, &mut *dvy)] {
                lap4_into(v, &g, &mut self.flux);
                lap4_into(&self.flux, &g, &mut self.dfdx);
                for i in 0..n {
                    if self.vac_w[i] > 0.0 || self.vac_lo_abs == 0.0 {
                        dv[i] -= nu4 * self.dfdx[i];
                    }
                }
            }
        }

        if self.cfg.tail_viscosity > 0.0 && self.vac_lo_abs > 0.0 {
            let nu2 = self.cfg.tail_viscosity * self.c.hbar / self.c.mass;
            for (v, dv) in [(vx, &mut *dvx), (vy, &mut *dvy)] {
                lap4_into(v, &g, &mut self.flux);
                for i in 0..n {
                    if self.vac_w[i] > 0.0 && self.sponge_w[i] > 0.0 {
                        dv[i] += nu2 * self.sponge_w[i] * self.flux[i];
                    }
                }
            }
            // The density channel needs its own damping: ripples feed back
            // through Q into v faster than the v sponge alone can drain them.
            // Written as the divergence of a flux so the smoothing moves mass
            // around without creating or destroying any.
            ddx4_into(rho, &g, &mut self.flux);
            for i in 0..n {
                self.flux[i] *= nu2 * self.sponge_w[i] * self.vac_w[i];
            }
            ddx4_into(&self.flux, &g, &mut self.dfdx);
            ddy4_into(rho, &g, &mut self.flux);
            for i in 0..n {
                self.flux[i] *= nu2 * self.sponge_w[i] * self.vac_w[i];
            }
            ddy4_into(&self.flux, &g, &mut self.dfdy);
            for i in 0..n {
                drho[i] += self.dfdx[i] + self.dfdy[i];
            }
        }

        if self.any_excised {
            idw_fill_from(&g, &self.valid, &self.donor, &mut [drho, dvx, dvy]);
            if self.vac_lo_abs > 0.0 {
                for i in 0..n {
                    if self.vac_w[i] == 0.0 {
                        dvx[i] = 0.0;
                        dvy[i] = 0.0;
                    }
                }
            }
        }
        zero_boundary_ring(&g, drho);
        zero_boundary_ring(&g, dvx);
        zero_boundary_ring(&g, dvy);
        check_finite(&g, t, &[("drho_dt", drho), ("dvx_dt", dvx), ("dvy_dt", dvy)])
    }

    /// One RK4 step from t over dt, in place. Returns the mass added by
    /// clipping negative densities after the combine.
    fn step_into(
        &mut self,
        t: f64,
        dt: f64,
        rho: &mut [f64],
        vx: &mut [f64],
        vy: &mut [f64],
        b: &mut RkBufs,
    ) -> Result<f64> {
        let RkBufs { k, acc, stage } = b;
        let [k0, k1, k2] = k;
        self.rhs_into(t, rho, vx, vy, k0, k1, k2)?;
        for (a, kf) in acc.iter_mut().zip(k.iter()) {
            a.copy_from_slice(kf);
        }

        let half = 0.5 * dt;
        for (s, (y, kf)) in stage.iter_mut().zip([&*rho, &*vx, &*vy].into_iter().zip(k.iter())) {
            combine_into(s, y, kf, half);
        }
        let [s0, s1, s2] = stage;
        let [k0, k1, k2] = k;
        self.rhs_into(t + half, s0, s1, s2, k0, k1, k2)?;
        for (a, kf) in acc.iter_mut().zip(k.iter()) {
            axpy(a, 2.0, kf);
        }

        for (s, (y, kf)) in stage.iter_mut().zip([&*rho, &*vx, &*vy].into_iter().zip(k.iter())) {
            combine_into(s, y, kf, half);
        }
        let [s0, s1, s2] = stage;
        let [k0, k1, k2] = k;
        self.rhs_into(t + half, s0, s1, s2, k0, k1, k2)?;
        for (a, kf) in acc.iter_mut().zip(k.iter()) {
            axpy(a, 2.0, kf);
        }

        for (s, (y, kf)) in stage.iter_mut().zip([&*rho, &*vx, &*vy].into_iter().zip(k.iter())) {
            combine_into(s, y, kf, dt);
        }
        let [s0, s1, s2] = stage;
        let [k0, k1, k2] = k;
        self.rhs_into(t + dt, s0, s1, s2, k0, k1, k2)?;
        for (a, kf) in acc.iter_mut().zip(k.iter()) {
            axpy(a, 1.0, kf);
        }

        let w = dt / 6.0;
        axpy(vx, w, &acc[1]);
        axpy(vy, w, &acc[2]);
        let g = self.grid;
        let area = g.cell_area();
        let mut clipped = 0.0;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let idx = g.idx(i, j);
                let r = rho[idx] + w * acc[0][idx];
                if r < 0.0 {
                    clipped -= r * g.quad_weight(i, j) * area;
                    rho[idx] = 0.0;
                } else {
                    rho[idx] = r;
                }
            }
        }

        check_finite(&g, t + dt, &[("rho", rho), ("vx", vx), ("vy", vy)])?;
        Ok(clipped)
    }

    /// Max |curl v| * h / max|v| away from nodes, edges, and frozen vacuum.
    /// The curl of a sampled 1/r swirl carries a 2h^2/r^4 truncation term,
    /// so cells within max(5 excision radii, 10 spacings) of a node are
    /// skipped (at 10h the term is 2.5x below a 1e-3 budget), as are two
    /// boundary rings where the one-sided stencils lose an order and cells
    /// within two spacings of vacuum, whose stencils mix frozen values.
    fn curl_ratio(&mut self, rho: &[f64], vx: &[f64], vy: &[f64]) -> f64 {
        let g = self.grid;
        if g.nx < 5 || g.ny < 5 {
            return 0.0;
        }
        ddx4_into(vy, &g, &mut self.dfdx);
        ddy4_into(vx, &g, &mut self.dfdy);
        let guard = (5.0 * self.cfg.node_excision_radius).max(10.0 * g.h_max());
        let cut = self.cfg.vacuum_threshold * VACUUM_BAND * max_slice(rho);
        let mut max_curl = 0.0f64;
        let mut max_speed = 0.0f64;
        for j in 2..g.ny - 2 {
            for i in 2..g.nx - 2 {
                let idx = g.idx(i, j);
                let near_vacuum = (i.saturating_sub(2)..=(i + 2).min(g.nx - 1)).any(|ii| {
                    (j.saturating_sub(2)..=(j + 2).min(g.ny - 1))
                        .any(|jj| rho[g.idx(ii, jj)] < cut)
                });
                if near_vacuum {
                    continue;
                }
                let p = Point::new(g.x(i), g.y(j));
                if self.nodes.iter().any(|nd| nd.position.dist(p) < guard) {
                    continue;
                }
                max_curl = max_curl.max((self.dfdx[idx] - self.dfdy[idx]).abs());
                max_speed = max_speed.max(vx[idx].hypot(vy[idx]));
            }
        }
        if max_speed == 0.0 {
            return 0.0;
        }
        max_curl * g.h_max() / max_speed
    }
}

/// Density span, as a factor above the vacuum threshold, over which the
/// freeze ramps in. A hard live/frozen interface supports a numerical
/// boundary mode that erupts from rounding noise after ~1 time unit; ramping
/// the derivative weight over two decades of density removes the interface.
const VACUUM_BAND: f64 = 1e3;

/// Density ratio spanned by the tail-viscosity ramp that sits on top of the
/// vacuum band. Full strength from the band's top down, fading to nothing
/// this factor above it.
const SPONGE_RAMP: f64 = 100.0;

fn max_slice(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, &v| m.max(v))
}

fn combine_into(out: &mut [f64], base: &[f64], k: &[f64], a: f64) {
    for ((o, &b), &kv) in out.iter_mut().zip(base).zip(k) {
        *o = b + a * kv;
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}

fn zero_boundary_ring(g: &Grid2D, a: &mut [f64]) {
    for i in 0..g.nx {
        a[g.idx(i, 0)] = 0.0;
        a[g.idx(i, g.ny - 1)] = 0.0;
    }
    for j in 0..g.ny {
        a[g.idx(0, j)] = 0.0;
        a[g.idx(g.nx - 1, j)] = 0.0;
    }
}

fn check_finite(g: &Grid2D, t: f64, arrays: &[(&'static str, &[f64])]) -> Result<()> {
    for (field, a) in arrays {
        if let Some(bad) = a.iter().position(|v| !v.is_finite()) {
            return Err(CsdError::Blowup { t, i: bad % g.nx, j: bad / g.nx, field });
        }
    }
    Ok(())
}

/// Instantaneous time derivatives (drho/dt, dv/dt), with node excision and
/// the frozen boundary ring already applied. Nodes are detected from `rho`.
pub fn rhs(
    state: &SimState,
    spec: &PotentialSpec,
    cfg: &SimConfig,
    c: &PhysicalConstants,
) -> Result<(ScalarField, VectorField2)> {
    let grid = state.grid();
    state.rho.validate_finite("rho")?;
    state.v.validate_finite("v")?;
    let mut st = Stepper::new(grid, spec, cfg, c)?;
    st.set_vacuum_reference(&state.rho.values);
    st.refresh_nodes(&state.rho);
    let mut drho = ScalarField::zeros(grid);
    let mut dv = VectorField2::zeros(grid);
    st.rhs_into(state.t, &state.rho.values, &state.v.vx, &state.v.vy, &mut drho.values, &mut dv.vx, &mut dv.vy)?;
    Ok((drho, dv))
}

/// One RK4 step of length cfg.dt. Negative densities after the combine are
/// clipped to zero; dt = 0 returns the state unchanged.
pub fn step_rk4(
    state: &SimState,
    spec: &PotentialSpec,
    cfg: &SimConfig,
    c: &PhysicalConstants,
) -> Result<SimState> {
    if cfg.dt == 0.0 {
        return Ok(state.clone());
    }
    let grid = state.grid();
    state.rho.validate_finite("rho")?;
    state.v.validate_finite("v")?;
    let mut st = Stepper::new(grid, spec, cfg, c)?;
    st.set_vacuum_reference(&state.rho.values);
    st.refresh_nodes(&state.rho);
    let mut next = state.clone();
    let mut bufs = RkBufs::new(grid.len());
    st.step_into(state.t, cfg.dt, &mut next.rho.values, &mut next.v.vx, &mut next.v.vy, &mut bufs)?;
    next.t = state.t + cfg.dt;
    Ok(next)
}

/// Advance from t = 0 to cfg.t_end, sampling observers on their strides and
/// always at the final instant. Setup problems fail hard; failures while
/// stepping (blow-up, velocity runaway) end the run early and are reported in
/// the record instead.
pub fn evolve(
    initial: &MadelungPair,
    spec: &PotentialSpec,
    cfg: &SimConfig,
    c: &PhysicalConstants,
    obs: &ObserverConfig,
) -> Result<RunRecord> {
    let started = Instant::now();
    let grid = initial.grid();
    initial.rho.validate_finite("rho")?;
    initial.v.validate_finite("v")?;
    if initial.rho.min_value() < 0.0 {
        return Err(CsdError::InvalidState("initial density has negative values".into()));
    }
    obs.validate(&grid)?;
    let mut stepper = Stepper::new(grid, spec, cfg, c)?;
    stepper.set_vacuum_reference(&initial.rho.values);

    if let Some(dir) = &obs.snapshot_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut warnings = Vec::new();
    let bound = SimConfig::stability_bound(&grid, c);
    if cfg.dt > bound {
        warnings.push(format!(
            "dt = {:.3e} exceeds the advisory stability bound {bound:.3e}",
            cfg.dt
        ));
    }

    let n_steps = if cfg.t_end == 0.0 {
        0
    } else {
        (cfg.t_end / cfg.dt - 1e-9).ceil().max(1.0) as usize
    };

    let mut state = SimState { t: 0.0, rho: initial.rho.clone(), v: initial.v.clone() };
    let mut bufs = RkBufs::new(grid.len());

    let mut traces: Vec<VorticityTrace> = obs
        .probe
        .as_ref()
        .map(|p| p.radii.iter().map(|&r| VorticityTrace::new(p.n_ref, r)).collect())
        .unwrap_or_default();
    let mut probe_center = grid.center();
    let mut history_frames: Vec<VelocityFrame> = Vec::new();

    let initial_mass = state.rho.integral();
    let mut clipped_total = 0.0f64;
    let mut max_clip = 0.0f64;
    let mut max_curl_ratio = 0.0f64;
    let mut node_events: Vec<String> = Vec::new();
    let mut prev_nodes: Option<Vec<Point>> = None;
    let mut snapshots_written = 0usize;
    let mut early_termination: Option<String> = None;
    let h_min = grid.hx().min(grid.hy());

    for s in 0..=n_steps {
        let t = state.t;
        let is_last = s == n_steps;

        if s % cfg.node_refresh_stride == 0 || is_last {
            stepper.refresh_nodes(&state.rho);
            let positions: Vec<Point> = stepper.nodes.iter().map(|n| n.position).collect();
            if let Some(prev) = &prev_nodes {
                if positions.len() != prev.len() {
                    node_events.push(format!(
                        "t = {t:.6}: node count changed {} -> {}",
                        prev.len(),
                        positions.len()
                    ));
                } else {
                    for p in &positions {
                        let nearest = prev
                            .iter()
                            .map(|q| q.dist(*p))
                            .fold(f64::INFINITY, f64::min);
                        if nearest > 5.0 * grid.h_max() {
                            node_events.push(format!(
                                "t = {t:.6}: node jumped to ({:.4}, {:.4}), {nearest:.4} from its last position",
                                p.x, p.y
                            ));
                        }
                    }
                }
            }
            prev_nodes = Some(positions);

            let speed = state.v.max_speed();
            if speed * cfg.dt > 10.0 * h_min {
                early_termination = Some(format!(
                    "velocity runaway at t = {t:.6}: max speed {speed:.3e} crosses 10 cells per step"
                ));
                break;
            }
        }

        if let Some(dir) = &obs.snapshot_dir {
            if s % cfg.snapshot_stride == 0 || is_last {
                write_snapshot_set(dir, s, &state)?;
                snapshots_written += 1;
            }
        }

        if s % cfg.trace_stride == 0 || is_last {
            max_curl_ratio =
                max_curl_ratio.max(stepper.curl_ratio(&state.rho.values, &state.v.vx, &state.v.vy));
            if !traces.is_empty() {
                sample_probe(
                    &state,
                    &stepper.nodes,
                    &mut probe_center,
                    &mut traces,
                    c,
                    &mut warnings,
                )?;
            }
        }

        if obs.wants_history() && (s % obs.history_stride == 0 || is_last) {
            history_frames.push(VelocityFrame {
                t,
                v: state.v.clone(),
                nodes: stepper.nodes.iter().map(|n| n.position).collect(),
            });
        }

        if is_last {
            break;
        }

        let dt_step =
            if s + 1 == n_steps { cfg.t_end - s as f64 * cfg.dt } else { cfg.dt };
        match stepper.step_into(t, dt_step, &mut state.rho.values, &mut state.v.vx, &mut state.v.vy, &mut bufs) {
            Ok(clipped) => {
                clipped_total += clipped;
                max_clip = max_clip.max(clipped);
                state.t = if s + 1 == n_steps { cfg.t_end } else { (s + 1) as f64 * cfg.dt };
            }
            Err(e) => {
                early_termination = Some(e.to_string());
                break;
            }
        }
    }

    let steps_taken = if state.t >= cfg.t_end { n_steps } else { (state.t / cfg.dt).round() as usize };

    let history = (!history_frames.is_empty()).then(|| VelocityHistory {
        frames: history_frames,
        excision_radius: cfg.node_excision_radius,
    });

    let mut trajectories = Vec::new();
    if let Some(h) = &history {
        if h.frames.len() >= 2 {
            for seed in &obs.trajectory_seeds {
                trajectories.push(crate::analysis::trace_trajectory(*seed, h, h.stride())?);
            }
        } else if !obs.trajectory_seeds.is_empty() {
            warnings.push("trajectory seeds ignored: fewer than two velocity frames".into());
        }
    }

    let record = RunRecord {
        final_mass: state.rho.integral(),
        final_state: state,
        steps_taken,
        initial_mass,
        clipped_mass_total: clipped_total,
        max_clip_per_step: max_clip,
        max_curl_ratio,
        traces,
        trajectories,
        history: if obs.record_history { history } else { None },
        node_events,
        warnings,
        early_termination,
        snapshots_written,
        wall_seconds: started.elapsed().as_secs_f64(),
    };

    if let Some(dir) = &obs.snapshot_dir {
        record.write_ledger(&dir.join("ledger.txt"))?;
    }
    Ok(record)
}

fn write_snapshot_set(dir: &Path, step: usize, state: &SimState) -> Result<()> {
    let grid = state.grid();
    snapshot::write_scalar(&state.rho, &dir.join(format!("rho_{step:06}.csdf")))?;
    let vx = ScalarField { grid, values: state.v.vx.clone() };
    snapshot::write_scalar(&vx, &dir.join(format!("vx_{step:06}.csdf")))?;
    let vy = ScalarField { grid, values: state.v.vy.clone() };
    snapshot::write_scalar(&vy, &dir.join(format!("vy_{step:06}.csdf")))?;
    Ok(())
}

/// One probe sample: the loop center follows the detected node nearest the
/// previous center. Failures at t = 0 are configuration errors; later ones
/// are recorded and the sample skipped.
fn sample_probe(
    state: &SimState,
    nodes: &[NodeEstimate],
    probe_center: &mut Point,
    traces: &mut [VorticityTrace],
    c: &PhysicalConstants,
    warnings: &mut Vec<String>,
) -> Result<()> {
    let t = state.t;
    let Some(best) = nodes
        .iter()
        .min_by(|a, b| {
            a.position.dist(*probe_center).total_cmp(&b.position.dist(*probe_center))
        })
    else {
        if t == 0.0 {
            return Err(CsdError::InvalidState(
                "vorticity probe configured but no density node detected at t = 0".into(),
            ));
        }
        warnings.push(format!("t = {t:.6}: no node found, vorticity sample skipped"));
        return Ok(());
    };
    *probe_center = best.position;
    let others: Vec<NodeEstimate> = nodes
        .iter()
        .filter(|n| n.position.dist(best.position) > 0.0)
        .cloned()
        .collect();
    for trace in traces.iter_mut() {
        match vorticity(&state.v, best, &others, trace.loop_radius, c) {
            Ok(total) => trace.push(t, total),
            Err(e) if t == 0.0 => return Err(e),
            Err(e) => warnings.push(format!("t = {t:.6}: vorticity sample skipped: {e}")),
        }
    }
    Ok(())
}

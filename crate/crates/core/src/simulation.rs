//! Time integration: midpoint velocity, bi-directional flow maps with
//! periodic reinitialization, error-compensated vorticity pullback and the
//! velocity solve, plus an initial-frame buffer for viscosity and forces.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::flowmap::{backtrace, march_forward, reset_maps, JacobianField, MapField, VelocityBuffer};
use crate::grid::{
    clear_inflow_vorticity, curl_velocity, curl_velocity_with_walls, divergence, vorticity_divergence, vorticity_laplacian, FaceField,
    GridDesc, Vec3, VortField,
};
use crate::poisson::{classify_dofs, PoissonConfig, PoissonSolver, SolidBoundary, SolveStats, VortStatus};
use crate::transport::{bfecc_pullback, bfecc_vorticity_step, one_step_backward_maps, pullback_line, pushforward_line, semi_lagrangian_vorticity};
use crate::{Error, Result};

/// Vorticity advection scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Advection {
    /// Long-range bi-directional maps with error compensation.
    #[default]
    FlowMap,
    /// One backward RK4 step per time step, plain pullback.
    SemiLagrangian,
    /// One-step maps with error compensation.
    Bfecc,
}

/// Body force per unit mass.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum ExternalForce {
    #[default]
    None,
    Uniform(Vec3),
    /// Face-sampled force field.
    Faces(FaceField),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    /// Steps between reinitializations.
    pub reinit: usize,
    pub dt_max: f64,
    pub poisson: PoissonConfig,
    pub viscosity: f64,
    pub force: ExternalForce,
    pub advection: Advection,
    /// Frames between field outputs.
    pub output_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 1.0,
            reinit: 20,
            dt_max: 1.0 / 30.0,
            poisson: PoissonConfig::default(),
            viscosity: 0.0,
            force: ExternalForce::None,
            advection: Advection::FlowMap,
            output_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::contract(format!("cfl must be positive, got {}", self.cfl)));
        }
        if self.reinit == 0 {
            return Err(Error::contract("reinit interval must be at least 1"));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::contract(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        if !(self.viscosity >= 0.0 && self.viscosity.is_finite()) {
            return Err(Error::contract(format!("viscosity must be non-negative, got {}", self.viscosity)));
        }
        if !(self.poisson.tol > 0.0 && self.poisson.tol < 1.0) || self.poisson.max_iters == 0 {
            return Err(Error::contract("poisson tolerance must lie in (0, 1) with max_iters ≥ 1"));
        }
        if self.output_every == 0 {
            return Err(Error::contract("output cadence must be at least 1"));
        }
        Ok(())
    }
}

/// Solid boundary as a function of time, for kinematic solids.
pub type SolidMotion = Arc<dyn Fn(&GridDesc, f64) -> Result<SolidBoundary> + Send + Sync>;

/// Per-step record; one CSV row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    pub max_u: f64,
    pub max_w: f64,
    pub mean_div_u: f64,
    /// Largest vorticity divergence at interior nodes; zero in 2D.
    pub max_div_w: f64,
    pub poisson_iters: usize,
    pub poisson_residual: f64,
    pub clamp_fraction: f64,
    pub energy: f64,
}

impl Diagnostics {
    pub const COLUMNS: [&'static str; 11] = [
        "step",
        "time",
        "dt",
        "max_u",
        "max_w",
        "mean_div_u",
        "max_div_w",
        "poisson_iters",
        "poisson_residual",
        "clamp_fraction",
        "energy",
    ];

    pub fn csv_header() -> String {
        Self::COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e}",
            self.step,
            self.time,
            self.dt,
            self.max_u,
            self.max_w,
            self.mean_div_u,
            self.max_div_w,
            self.poisson_iters,
            self.poisson_residual,
            self.clamp_fraction,
            self.energy
        )
    }

    pub fn is_finite(&self) -> bool {
        [
            self.time,
            self.dt,
            self.max_u,
            self.max_w,
            self.mean_div_u,
            self.max_div_w,
            self.poisson_residual,
            self.clamp_fraction,
            self.energy,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Writes the header on creation and one row per record.
pub struct DiagnosticsWriter<W: Write> {
    out: W,
}

impl<W: Write> DiagnosticsWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{}", Diagnostics::csv_header())?;
        Ok(Self { out })
    }

    pub fn write(&mut self, d: &Diagnostics) -> Result<()> {
        writeln!(self.out, "{}", d.csv_row())?;
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// `cfl·dx / max|u|`, capped at `dt_max`.
pub fn compute_dt(u: &FaceField, g: &GridDesc, cfl: f64, dt_max: f64) -> f64 {
    let eps = 1e-6 * g.dx();
    (cfl * g.dx() / u.max_abs().max(eps)).min(dt_max)
}

/// Full simulation state.
#[derive(Clone)]
pub struct SimState {
    g: GridDesc,
    config: SolverConfig,
    u: FaceField,
    w_init: VortField,
    /// Latest transported vorticity.
    w: VortField,
    phi: MapField,
    t_jac: JacobianField,
    buffer: VelocityBuffer,
    accum: VortField,
    step: usize,
    since_reinit: usize,
    time: f64,
    solids: SolidBoundary,
    motion: Option<SolidMotion>,
    poisson: PoissonSolver,
    last_solves: Vec<SolveStats>,
    last_clamp: f64,
}

impl fmt::Debug for SimState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimState")
            .field("grid", &self.g)
            .field("step", &self.step)
            .field("time", &self.time)
            .field("since_reinit", &self.since_reinit)
            .field("moving_solids", &self.motion.is_some())
            .finish_non_exhaustive()
    }
}

impl SimState {
    /// State from an initial velocity; `u` should already satisfy the walls.
    pub fn new(g: &GridDesc, u: FaceField, solids: SolidBoundary, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        u.check(g)?;
        if !u.is_finite() {
            return Err(Error::contract("initial velocity holds non-finite values"));
        }
        let (phi, t_jac) = reset_maps(g);
        let w_init = transported_curl(&u, g, &solids)?;
        let poisson = PoissonSolver::new(config.poisson);
        let mut s = Self {
            g: g.clone(),
            config,
            u,
            w: w_init.clone(),
            w_init,
            phi,
            t_jac,
            buffer: VelocityBuffer::new(),
            accum: VortField::zeros(g),
            step: 0,
            since_reinit: 0,
            time: 0.0,
            solids,
            motion: None,
            poisson,
            last_solves: Vec::new(),
            last_clamp: 0.0,
        };
        s.reinitialize()?;
        Ok(s)
    }

    /// State whose velocity is reconstructed from `w`.
    pub fn from_vorticity(g: &GridDesc, w: &VortField, solids: SolidBoundary, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let mut poisson = PoissonSolver::new(config.poisson);
        let (u, stats) = poisson.solve(w, g, &solids, None)?;
        let mut s = Self::new(g, u, solids, config)?;
        s.poisson = poisson;
        s.last_solves = vec![stats];
        Ok(s)
    }

    /// Attach kinematic solids; the boundary at time `t` comes from `motion`.
    pub fn with_motion(mut self, motion: SolidMotion) -> Result<Self> {
        let solids = motion(&self.g, self.time)?;
        self.solids = solids;
        self.motion = Some(motion);
        Ok(self)
    }

    pub fn grid(&self) -> &GridDesc {
        &self.g
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn velocity(&self) -> &FaceField {
        &self.u
    }

    /// Latest transported vorticity (the curl of the velocity at the start).
    pub fn vorticity(&self) -> &VortField {
        &self.w
    }

    pub fn initial_vorticity(&self) -> &VortField {
        &self.w_init
    }

    pub fn accumulation(&self) -> &VortField {
        &self.accum
    }

    pub fn forward_map(&self) -> (&MapField, &JacobianField) {
        (&self.phi, &self.t_jac)
    }

    pub fn buffer(&self) -> &VelocityBuffer {
        &self.buffer
    }

    pub fn solids(&self) -> &SolidBoundary {
        &self.solids
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn steps_since_reinit(&self) -> usize {
        self.since_reinit
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Poisson solves of the latest step: midpoint, then final.
    pub fn last_solves(&self) -> &[SolveStats] {
        &self.last_solves
    }

    pub fn set_config(&mut self, config: SolverConfig) -> Result<()> {
        config.validate()?;
        self.poisson.set_config(config.poisson);
        self.config = config;
        Ok(())
    }

    /// Rebase the maps on the current velocity.
    pub fn reinitialize(&mut self) -> Result<()> {
        self.w_init = transported_curl(&self.u, &self.g, &self.solids)?;
        let (phi, t_jac) = reset_maps(&self.g);
        self.phi = phi;
        self.t_jac = t_jac;
        self.buffer.clear();
        self.accum = VortField::zeros(&self.g);
        self.since_reinit = 0;
        Ok(())
    }

    fn solids_at(&self, t: f64) -> Result<SolidBoundary> {
        match &self.motion {
            Some(m) => m(&self.g, t),
            None => Ok(self.solids.clone()),
        }
    }

    /// Velocity at the half step: the current curl pulled back over `dt/2`.
    pub fn midpoint_velocity(&mut self, dt: f64) -> Result<(FaceField, SolveStats)> {
        let solids = self.solids_at(self.time + 0.5 * dt)?;
        let w = transported_curl(&self.u, &self.g, &self.solids)?;
        let (psi, f) = one_step_backward_maps(&self.u, &self.g, 0.5 * dt)?;
        let w_mid = pullback_line(&w, &self.g, &psi, &f)?;
        self.poisson.solve(&w_mid, &self.g, &solids, Some(&self.u))
    }

    /// `dt·(ν Δω + ∇×f)` from the current velocity; `None` when nothing changes.
    pub fn vorticity_change(&self, dt: f64) -> Result<Option<VortField>> {
        let mut change: Option<VortField> = None;
        if self.config.viscosity > 0.0 {
            let mut w = transported_curl(&self.u, &self.g, &self.solids)?;
            if self.solids.solid_count() > 0 {
                let cls = classify_dofs(&self.g, &self.solids)?;
                for (k, st) in cls.vort.iter().enumerate() {
                    for (v, s) in w.comp_mut(k).data_mut().iter_mut().zip(st) {
                        if *s == VortStatus::Excluded {
                            *v = 0.0;
                        }
                    }
                }
            }
            let mut lap = vorticity_laplacian(&w, &self.g)?;
            for k in 0..lap.slots() {
                lap.comp_mut(k).data_mut().iter_mut().for_each(|v| *v *= dt * self.config.viscosity);
            }
            change = Some(lap);
        }
        if let ExternalForce::Faces(f) = &self.config.force {
            let cf = curl_velocity(f, &self.g)?;
            match change.as_mut() {
                Some(c) => c.add_scaled(dt, &cf),
                None => {
                    let mut c = VortField::zeros(&self.g);
                    c.add_scaled(dt, &cf);
                    change = Some(c);
                }
            }
        }
        Ok(change)
    }

    /// Add this step's change to the initial-frame buffer through (φ, 𝒯).
    pub fn accumulate_changes(&mut self, dt: f64) -> Result<()> {
        if let Some(d) = self.vorticity_change(dt)? {
            let back = pushforward_line(&d, &self.g, &self.phi, &self.t_jac)?;
            self.accum.add_scaled(1.0, &back);
        }
        Ok(())
    }

    /// CFL step, further limited so explicit diffusion stays stable:
    /// `ν dt / dx² ≤ 1 / (4d)`, half the forward-Euler bound. Diffusion
    /// routed through the flow-map buffer went unstable at 0.9 of it.
    pub fn stable_dt(&self) -> f64 {
        let dt = compute_dt(&self.u, &self.g, self.config.cfl, self.config.dt_max);
        let nu = self.config.viscosity;
        if nu > 0.0 {
            let dx = self.g.dx();
            dt.min(0.5 * dx * dx / (2.0 * self.g.dim() as f64 * nu))
        } else {
            dt
        }
    }

    /// One step of [`Self::stable_dt`].
    pub fn step(&mut self) -> Result<Diagnostics> {
        self.step_with_dt(self.stable_dt())
    }

    /// Steps until `time` reaches `t_end`, shortening the last one to land on it.
    pub fn advance_to(&mut self, t_end: f64, max_steps: usize) -> Result<Vec<Diagnostics>> {
        let mut out = Vec::new();
        while self.time < t_end - 1e-12 * t_end.abs().max(1.0) {
            if out.len() >= max_steps {
                break;
            }
            let dt = self.stable_dt().min(t_end - self.time);
            out.push(self.step_with_dt(dt)?);
        }
        Ok(out)
    }

    /// One step of size `dt`. On error the state is left as it was.
    pub fn step_with_dt(&mut self, dt: f64) -> Result<Diagnostics> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::contract(format!("step size must be positive, got {dt}")));
        }
        let flow_map = self.config.advection == Advection::FlowMap;
        let saved = if flow_map && self.since_reinit >= self.config.reinit {
            let keep = (
                std::mem::take(&mut self.buffer),
                self.w_init.clone(),
                self.phi.clone(),
                self.t_jac.clone(),
                self.accum.clone(),
                self.since_reinit,
            );
            self.reinitialize()?;
            Some(keep)
        } else {
            None
        };
        let mut pushed = false;
        let result = self.try_step(dt, &mut pushed);
        match result {
            Ok(d) => Ok(d),
            Err(e) => {
                if pushed {
                    self.buffer.pop();
                }
                if let Some((buffer, w_init, phi, t_jac, accum, since)) = saved {
                    self.buffer = buffer;
                    self.w_init = w_init;
                    self.phi = phi;
                    self.t_jac = t_jac;
                    self.accum = accum;
                    self.since_reinit = since;
                }
                Err(e)
            }
        }
    }

    fn try_step(&mut self, dt: f64, pushed: &mut bool) -> Result<Diagnostics> {
        let (u_mid, mid_stats) = self.midpoint_velocity(dt)?;
        let change = self.vorticity_change(dt)?;
        let g = self.g.clone();
        let mut next_maps = None;
        let (mut w_hat, clamp) = match self.config.advection {
            Advection::FlowMap => {
                self.buffer.push(&u_mid, &g, dt)?;
                *pushed = true;
                let (psi, f) = backtrace(&self.buffer, &g)?;
                let (phi, t_jac) = march_forward(&u_mid, &g, dt, &self.phi, &self.t_jac)?;
                let mut src = self.w_init.clone();
                src.add_scaled(1.0, &self.accum);
                let res = bfecc_pullback(&src, &g, &psi, &f, &phi, &t_jac)?;
                let frac = res.clamp_fraction();
                next_maps = Some((phi, t_jac));
                (res.vorticity, frac)
            }
            // Baselines carry the vorticity itself from step to step, as a
            // plain Eulerian vortex method does.
            Advection::SemiLagrangian => (semi_lagrangian_vorticity(&self.w, &u_mid, &g, dt)?, 0.0),
            Advection::Bfecc => {
                let res = bfecc_vorticity_step(&self.w, &u_mid, &g, dt)?;
                let frac = res.clamp_fraction();
                (res.vorticity, frac)
            }
        };
        let mut accum = None;
        if let Some(d) = &change {
            w_hat.add_scaled(1.0, d);
            if let Some((phi, t_jac)) = &next_maps {
                let mut a = self.accum.clone();
                a.add_scaled(1.0, &pushforward_line(d, &g, phi, t_jac)?);
                accum = Some(a);
            }
        }
        clear_inflow_vorticity(&mut w_hat, &g, self.solids.walls());
        let solids = self.solids_at(self.time + dt)?;
        let (u, stats) = self.poisson.solve(&w_hat, &g, &solids, Some(&self.u))?;

        // Commit.
        self.u = u;
        self.w = w_hat;
        self.solids = solids;
        if let Some((phi, t_jac)) = next_maps {
            self.phi = phi;
            self.t_jac = t_jac;
        }
        if let Some(a) = accum {
            self.accum = a;
        }
        self.time += dt;
        self.step += 1;
        self.since_reinit = if self.config.advection == Advection::FlowMap { self.since_reinit + 1 } else { 0 };
        self.last_solves = vec![mid_stats, stats];
        self.last_clamp = clamp;
        Ok(self.diagnostics_with(dt, Some(&stats)))
    }

    /// Diagnostics of the current state with `dt = 0`.
    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics_with(0.0, self.last_solves.last())
    }

    fn diagnostics_with(&self, dt: f64, stats: Option<&SolveStats>) -> Diagnostics {
        let g = &self.g;
        let div = divergence(&self.u, g).expect("velocity matches grid");
        let mask = self.solids.mask();
        let (mut sum, mut n) = (0.0, 0usize);
        for (d, s) in div.data().iter().zip(mask) {
            if !s {
                sum += d.abs();
                n += 1;
            }
        }
        let mean_div_u = if n > 0 { sum / n as f64 } else { 0.0 };
        let max_div_w = if g.dim() == 3 { interior_max(&vorticity_divergence(&self.w, g).expect("3D field")) } else { 0.0 };
        let cell_volume = g.dx().powi(g.dim() as i32);
        Diagnostics {
            step: self.step,
            time: self.time,
            dt,
            max_u: self.u.max_abs(),
            max_w: self.w.max_abs(),
            mean_div_u,
            max_div_w,
            poisson_iters: stats.map_or(0, |s| s.iterations),
            poisson_residual: stats.map_or(0.0, |s| s.residual),
            clamp_fraction: if self.step == 0 { 0.0 } else { self.last_clamp },
            energy: 0.5 * self.u.sum_squares() * cell_volume,
        }
    }
}

/// Curl of `u` as the source of transport and diffusion: wall-aware, with
/// inflow sides cleared.
fn transported_curl(u: &FaceField, g: &GridDesc, solids: &SolidBoundary) -> Result<VortField> {
    let mut w = curl_velocity_with_walls(u, g, solids.walls())?;
    clear_inflow_vorticity(&mut w, g, solids.walls());
    Ok(w)
}

fn interior_max(a: &crate::Array3) -> f64 {
    let s = a.shape();
    let mut m: f64 = 0.0;
    for idx in a.indices() {
        if (0..3).all(|d| s[d] < 3 || (idx[d] > 0 && idx[d] + 1 < s[d])) {
            m = m.max(a.get(idx).abs());
        }
    }
    m
}

/// Enstrophy `Σ ω² dx^d` over all samples.
pub fn enstrophy(w: &VortField, g: &GridDesc) -> f64 {
    let vol = g.dx().powi(g.dim() as i32);
    w.flat().map(|v| v * v).sum::<f64>() * vol
}

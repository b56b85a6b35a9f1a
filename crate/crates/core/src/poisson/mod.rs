//! Coupled velocity-vorticity Poisson system with solid-wall compatibility.
//!
//! Unknowns are the face velocities not fixed by a wall. The system is the
//! Δx²-scaled vector Laplacian written as `Cᵀ C + Dᵀ D`, where `C` takes face
//! velocities to circulations on vorticity samples and `D` to cell
//! divergences. Vorticity samples whose four circulation faces are all
//! unknown keep their transported value; samples touching a wall or solid
//! are eliminated, leaving their circulation to be determined by the faces.

mod cg;
mod level;
mod multigrid;

use std::time::{Duration, Instant};

use crate::grid::{FaceField, GridDesc, Vec3, VortField, DomainWalls};
use crate::{Error, Result};

pub use cg::{SolveOutcome, SolveStatus};
use level::{Level, Work};
use multigrid::Hierarchy;

/// How vorticity samples next to solids enter the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BoundaryCoupling {
    /// Samples touching a solid are eliminated and solved for.
    #[default]
    Compatible,
    /// Only samples on the domain boundary are eliminated; samples touching
    /// solids keep their transported value, so walls enter through the
    /// velocity condition alone.
    VelocityOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceStatus {
    Unknown,
    Dirichlet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VortStatus {
    /// Value known from transport.
    Interior,
    /// Determined by the surrounding face velocities.
    Eliminated,
    /// Inside solids; contributes nothing.
    Excluded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DofClassification {
    pub coupling: BoundaryCoupling,
    /// Per face axis, row-major over the face array.
    pub faces: Vec<Vec<FaceStatus>>,
    /// Per vorticity slot, row-major over the sample array.
    pub vort: Vec<Vec<VortStatus>>,
}

impl DofClassification {
    pub fn unknown_count(&self) -> usize {
        self.faces.iter().flatten().filter(|s| **s == FaceStatus::Unknown).count()
    }

    fn check(&self, g: &GridDesc) -> Result<()> {
        let ok = self.faces.len() == g.dim()
            && self.faces.iter().enumerate().all(|(a, f)| f.len() == g.face_shape(a).iter().product::<usize>())
            && self.vort.len() == g.vort_axes().len()
            && self
                .vort
                .iter()
                .zip(g.vort_axes())
                .all(|(v, &c)| v.len() == g.vort_shape(c).iter().product::<usize>());
        if ok {
            Ok(())
        } else {
            Err(Error::shape("classification does not match the grid"))
        }
    }
}

/// Solid occupancy and the velocities imposed on walls.
#[derive(Clone, Debug, PartialEq)]
pub struct SolidBoundary {
    dims: [usize; 3],
    solid: Vec<bool>,
    wall: FaceField,
    walls: DomainWalls,
}

impl SolidBoundary {
    /// No solid cells; domain faces take the side velocities.
    pub fn open(g: &GridDesc, walls: DomainWalls) -> Self {
        Self::with_static_solids(g, vec![false; g.cell_count()], walls).expect("mask sized from grid")
    }

    /// Stationary solids on the cells flagged in `solid` (row-major).
    pub fn with_static_solids(g: &GridDesc, solid: Vec<bool>, walls: DomainWalls) -> Result<Self> {
        Self::new(g, solid, walls, |_, _| Vec3::zeros())
    }

    /// `velocity(cell, x)` gives the rigid velocity of the solid occupying
    /// `cell` (row-major index) at the face center `x`.
    pub fn new(
        g: &GridDesc,
        solid: Vec<bool>,
        walls: DomainWalls,
        velocity: impl Fn(usize, Vec3) -> Vec3,
    ) -> Result<Self> {
        if solid.len() != g.cell_count() {
            return Err(Error::shape(format!(
                "solid mask has {} cells, grid has {}",
                solid.len(),
                g.cell_count()
            )));
        }
        let dims = g.dims();
        let cs = level::strides(dims);
        let mut wall = FaceField::zeros(g);
        for a in 0..g.dim() {
            let arr = wall.comp_mut(a);
            for l in 0..arr.len() {
                let j = crate::grid::unravel(arr.shape(), l);
                let v = if j[a] == 0 {
                    walls.side(a, 0)[a]
                } else if j[a] == dims[a] {
                    walls.side(a, 1)[a]
                } else {
                    let hi = j[0] * cs[0] + j[1] * cs[1] + j[2] * cs[2];
                    let lo = hi - cs[a];
                    let owner = if solid[lo] {
                        Some(lo)
                    } else if solid[hi] {
                        Some(hi)
                    } else {
                        None
                    };
                    match owner {
                        Some(c) => velocity(c, g.face_position(a, j))[a],
                        None => 0.0,
                    }
                };
                arr.data_mut()[l] = v;
            }
        }
        Ok(Self { dims, solid, wall, walls })
    }

    pub fn mask(&self) -> &[bool] {
        &self.solid
    }

    pub fn is_solid(&self, cell: [usize; 3]) -> bool {
        let cs = level::strides(self.dims);
        self.solid[cell[0] * cs[0] + cell[1] * cs[1] + cell[2] * cs[2]]
    }

    pub fn solid_count(&self) -> usize {
        self.solid.iter().filter(|&&s| s).count()
    }

    /// Prescribed values on wall faces, zero elsewhere.
    pub fn wall(&self) -> &FaceField {
        &self.wall
    }

    pub fn walls(&self) -> &DomainWalls {
        &self.walls
    }

    fn check(&self, g: &GridDesc) -> Result<()> {
        if self.dims != g.dims() {
            return Err(Error::shape(format!("solid mask dims {:?}, grid dims {:?}", self.dims, g.dims())));
        }
        self.wall.check(g)
    }
}

pub fn classify_dofs(g: &GridDesc, solids: &SolidBoundary) -> Result<DofClassification> {
    classify_dofs_with(g, solids, BoundaryCoupling::Compatible)
}

pub fn classify_dofs_with(g: &GridDesc, solids: &SolidBoundary, coupling: BoundaryCoupling) -> Result<DofClassification> {
    solids.check(g)?;
    Ok(level::classify(g.dim(), g.dims(), &solids.solid, coupling))
}

fn stacked(u: &FaceField) -> Vec<f64> {
    u.components().iter().flat_map(|c| c.data().iter().copied()).collect()
}

/// Right-hand side on the stacked face layout; zero on Dirichlet faces.
fn stacked_rhs(lvl: &Level, work: &mut Work, w: &VortField, g: &GridDesc, solids: &SolidBoundary) -> Vec<f64> {
    let n = lvl.n_faces();
    let mut known = vec![0.0; n];
    lvl.apply(&stacked(solids.wall()), &mut known, work);
    for (k, gam) in work.gamma.iter_mut().enumerate() {
        for ((gv, &inside), &wv) in gam.iter_mut().zip(&lvl.edge_interior[k]).zip(w.comp(k).data()) {
            *gv = if inside { wv * g.dx() } else { 0.0 };
        }
    }
    work.div.iter_mut().for_each(|v| *v = 0.0);
    let mut b = vec![0.0; n];
    lvl.assemble(work, &mut b);
    for (bv, kv) in b.iter_mut().zip(&known) {
        *bv -= kv;
    }
    b
}

/// Compact right-hand side, one entry per unknown face.
pub fn setup_rhs(w: &VortField, g: &GridDesc, solids: &SolidBoundary, cls: &DofClassification) -> Result<Vec<f64>> {
    w.check(g)?;
    solids.check(g)?;
    cls.check(g)?;
    let lvl = Level::new(g.dim(), g.dims(), cls);
    let mut work = lvl.work();
    let b = stacked_rhs(&lvl, &mut work, w, g, solids);
    Ok(compact(&lvl, &b))
}

/// Matrix-free product with the coupled operator on the compact unknown vector.
pub fn apply_operator(x: &[f64], g: &GridDesc, cls: &DofClassification) -> Result<Vec<f64>> {
    cls.check(g)?;
    let lvl = Level::new(g.dim(), g.dims(), cls);
    let n = cls.unknown_count();
    if x.len() != n {
        return Err(Error::shape(format!("vector has {} entries, system has {n} unknowns", x.len())));
    }
    let full = expand(&lvl, x);
    let mut y = vec![0.0; lvl.n_faces()];
    lvl.apply(&full, &mut y, &mut lvl.work());
    Ok(compact(&lvl, &y))
}

fn compact(lvl: &Level, v: &[f64]) -> Vec<f64> {
    v.iter().zip(&lvl.unknown).filter(|(_, &u)| u).map(|(x, _)| *x).collect()
}

fn expand(lvl: &Level, x: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; lvl.n_faces()];
    let mut it = x.iter();
    for (f, &u) in full.iter_mut().zip(&lvl.unknown) {
        if u {
            *f = *it.next().expect("compact length checked");
        }
    }
    full
}

/// The coupled system for one solid mask, with its multigrid hierarchy.
#[derive(Clone, Debug)]
pub struct CoupledSystem {
    g: GridDesc,
    mask: Vec<bool>,
    cls: DofClassification,
    hierarchy: Hierarchy,
    work: Work,
    rhs: Vec<f64>,
}

impl CoupledSystem {
    pub fn new(g: &GridDesc, solids: &SolidBoundary, coupling: BoundaryCoupling) -> Result<Self> {
        let cls = classify_dofs_with(g, solids, coupling)?;
        let hierarchy = Hierarchy::new(g.dim(), g.dims(), &solids.solid, cls.clone(), coupling);
        let work = hierarchy.fine_work();
        let n = hierarchy.fine().n_faces();
        Ok(Self { g: g.clone(), mask: solids.solid.clone(), cls, hierarchy, work, rhs: vec![0.0; n] })
    }

    pub fn grid(&self) -> &GridDesc {
        &self.g
    }

    pub fn classification(&self) -> &DofClassification {
        &self.cls
    }

    pub fn coupling(&self) -> BoundaryCoupling {
        self.cls.coupling
    }

    pub fn unknown_count(&self) -> usize {
        self.cls.unknown_count()
    }

    /// Whether this system was built for the same solid cells.
    pub fn matches(&self, solids: &SolidBoundary) -> bool {
        self.mask == solids.solid
    }

    pub fn set_rhs(&mut self, w: &VortField, solids: &SolidBoundary) -> Result<()> {
        w.check(&self.g)?;
        solids.check(&self.g)?;
        if !self.matches(solids) {
            return Err(Error::contract("solid mask changed since the system was built"));
        }
        self.rhs = stacked_rhs(self.hierarchy.fine(), &mut self.work, w, &self.g, solids);
        Ok(())
    }

    /// Compact right-hand side.
    pub fn rhs(&self) -> Vec<f64> {
        compact(self.hierarchy.fine(), &self.rhs)
    }

    pub fn set_rhs_compact(&mut self, b: &[f64]) -> Result<()> {
        if b.len() != self.unknown_count() {
            return Err(Error::shape("right-hand side length differs from unknown count"));
        }
        self.rhs = expand(self.hierarchy.fine(), b);
        Ok(())
    }

    pub fn apply(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.unknown_count() {
            return Err(Error::shape("vector length differs from unknown count"));
        }
        let lvl = self.hierarchy.fine();
        let full = expand(lvl, x);
        let mut y = vec![0.0; lvl.n_faces()];
        lvl.apply(&full, &mut y, &mut self.work);
        Ok(compact(lvl, &y))
    }

    /// Unknown-face values of `u`, in compact order.
    pub fn gather(&self, u: &FaceField) -> Result<Vec<f64>> {
        u.check(&self.g)?;
        Ok(compact(self.hierarchy.fine(), &stacked(u)))
    }

    /// Face velocity holding `x` on unknown faces and wall values elsewhere.
    pub fn scatter(&self, x: &[f64], solids: &SolidBoundary) -> Result<FaceField> {
        if x.len() != self.unknown_count() {
            return Err(Error::shape("vector length differs from unknown count"));
        }
        let mut u = solids.wall().clone();
        let mut it = x.iter();
        for a in 0..self.g.dim() {
            for (v, s) in u.comp_mut(a).data_mut().iter_mut().zip(&self.cls.faces[a]) {
                if *s == FaceStatus::Unknown {
                    *v = *it.next().expect("length checked");
                }
            }
        }
        Ok(u)
    }

    /// Preconditioned CG on the current right-hand side.
    pub fn solve(&mut self, tol: f64, max_iters: usize, guess: Option<&[f64]>) -> Result<SolveOutcome> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::contract(format!("tolerance must lie in (0, 1), got {tol}")));
        }
        let lvl = self.hierarchy.fine();
        let x0 = match guess {
            Some(x) if x.len() == self.cls.unknown_count() => expand(lvl, x),
            Some(_) => return Err(Error::shape("initial guess length differs from unknown count")),
            None => vec![0.0; lvl.n_faces()],
        };
        let rhs = std::mem::take(&mut self.rhs);
        let out = cg::pcg(&mut self.hierarchy, &mut self.work, &rhs, x0, tol, max_iters);
        self.rhs = rhs;
        let lvl = self.hierarchy.fine();
        Ok(SolveOutcome { x: compact(lvl, &out.x), ..out })
    }
}

/// Solve on an assembled system; non-convergence is reported in the status.
pub fn mgpcg_solve(sys: &mut CoupledSystem, tol: f64, max_iters: usize) -> Result<SolveOutcome> {
    sys.solve(tol, max_iters, None)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub coupling: BoundaryCoupling,
}

impl Default for PoissonConfig {
    fn default() -> Self {
        Self { tol: 1e-6, max_iters: 200, coupling: BoundaryCoupling::Compatible }
    }
}

/// Per-solve record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub unknowns: usize,
    pub iterations: usize,
    pub residual: f64,
    pub elapsed: Duration,
}

/// Reusable velocity reconstruction; rebuilds its system when the mask changes.
#[derive(Clone, Debug)]
pub struct PoissonSolver {
    config: PoissonConfig,
    system: Option<CoupledSystem>,
}

impl PoissonSolver {
    pub fn new(config: PoissonConfig) -> Self {
        Self { config, system: None }
    }

    pub fn config(&self) -> &PoissonConfig {
        &self.config
    }

    pub fn set_config(&mut self, config: PoissonConfig) {
        if config.coupling != self.config.coupling {
            self.system = None;
        }
        self.config = config;
    }

    /// Velocity whose interior circulation matches `w` and whose wall faces
    /// carry the prescribed values. `guess` warm-starts the iteration.
    pub fn solve(
        &mut self,
        w: &VortField,
        g: &GridDesc,
        solids: &SolidBoundary,
        guess: Option<&FaceField>,
    ) -> Result<(FaceField, SolveStats)> {
        let start = Instant::now();
        if !w.is_finite() {
            return Err(Error::contract("vorticity holds non-finite values"));
        }
        let rebuild = match &self.system {
            Some(s) => s.grid() != g || !s.matches(solids),
            None => true,
        };
        if rebuild {
            self.system = Some(CoupledSystem::new(g, solids, self.config.coupling)?);
        }
        let sys = self.system.as_mut().expect("built above");
        sys.set_rhs(w, solids)?;
        let x0 = guess.map(|u| sys.gather(u)).transpose()?;
        let out = sys.solve(self.config.tol, self.config.max_iters, x0.as_deref())?;
        match out.status {
            SolveStatus::Converged => {}
            SolveStatus::NotConverged => {
                return Err(Error::NotConverged { iterations: out.iterations, residual: out.residual })
            }
            SolveStatus::Diverged => return Err(Error::Diverged { iterations: out.iterations }),
        }
        let u = sys.scatter(&out.x, solids)?;
        let stats = SolveStats {
            unknowns: sys.unknown_count(),
            iterations: out.iterations,
            residual: out.residual,
            elapsed: start.elapsed(),
        };
        Ok((u, stats))
    }
}

/// One-shot reconstruction of the velocity from vorticity.
pub fn velocity_from_vorticity(
    w: &VortField,
    g: &GridDesc,
    solids: &SolidBoundary,
    config: PoissonConfig,
) -> Result<(FaceField, SolveStats)> {
    PoissonSolver::new(config).solve(w, g, solids, None)
}

//! Staggered grid layout and field containers.
//!
//! Both 2D and 3D grids are stored as 3D arrays; a 2D grid is one cell thick
//! along z. Velocity lives on faces, vorticity on nodes (2D, the z component)
//! or edge centers (3D), scalars on cell centers. All arrays are row-major
//! with x the slowest axis.

mod interp;
mod ops;

pub use interp::{interpolate_velocity, VelocitySampler};
pub(crate) use interp::{interp_array, interp_array_bounds};
pub use ops::{
    clear_inflow_vorticity, curl_velocity, curl_velocity_with_walls, curl_vorticity, divergence, vorticity_divergence,
    vorticity_laplacian,
};

use crate::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Cyclic transverse axes of an edge or rotation axis `c`.
#[inline]
pub fn transverse(c: usize) -> (usize, usize) {
    ((c + 1) % 3, (c + 2) % 3)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Array3 {
    shape: [usize; 3],
    data: Vec<f64>,
}

impl Array3 {
    pub fn zeros(shape: [usize; 3]) -> Self {
        Self { shape, data: vec![0.0; shape[0] * shape[1] * shape[2]] }
    }

    pub fn from_vec(shape: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if data.len() != shape[0] * shape[1] * shape[2] {
            return Err(Error::shape(format!(
                "{} values cannot fill shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: [usize; 3], mut f: impl FnMut([usize; 3]) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape[0] * shape[1] * shape[2]);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    data.push(f([i, j, k]));
                }
            }
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]
    }

    #[inline]
    pub fn get(&self, idx: [usize; 3]) -> f64 {
        self.data[self.offset(idx)]
    }

    /// Value at a possibly out-of-range index.
    #[inline]
    pub fn get_signed(&self, idx: [isize; 3]) -> Option<f64> {
        for d in 0..3 {
            if idx[d] < 0 || idx[d] as usize >= self.shape[d] {
                return None;
            }
        }
        Some(self.get([idx[0] as usize, idx[1] as usize, idx[2] as usize]))
    }

    #[inline]
    pub fn set(&mut self, idx: [usize; 3], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn indices(&self) -> impl Iterator<Item = [usize; 3]> {
        index_iter(self.shape)
    }
}

pub(crate) fn index_iter(shape: [usize; 3]) -> impl Iterator<Item = [usize; 3]> {
    let n = shape[0] * shape[1] * shape[2];
    (0..n).map(move |l| unravel(shape, l))
}

#[inline]
pub(crate) fn unravel(shape: [usize; 3], l: usize) -> [usize; 3] {
    let k = l % shape[2];
    let r = l / shape[2];
    [r / shape[1], r % shape[1], k]
}

/// Cell-centered scalar array.
pub type CellField = Array3;

/// Resolution, spacing and placement of a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDesc {
    dim: usize,
    dims: [usize; 3],
    dx: f64,
    origin: [f64; 3],
}

impl GridDesc {
    /// `dims` and `origin` carry 2 or 3 entries.
    pub fn new(dims: &[usize], dx: f64, origin: &[f64]) -> Result<Self> {
        let dim = dims.len();
        if !(dim == 2 || dim == 3) || origin.len() != dim {
            return Err(Error::contract(format!(
                "grid needs 2 or 3 axes with matching origin, got dims {:?} origin {:?}",
                dims, origin
            )));
        }
        if dims.iter().any(|&n| n < 4) {
            return Err(Error::contract(format!("every axis needs at least 4 cells, got {:?}", dims)));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::contract(format!("cell width must be positive, got {dx}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::contract("origin must be finite"));
        }
        let mut d = [1; 3];
        let mut o = [0.0; 3];
        d[..dim].copy_from_slice(dims);
        o[..dim].copy_from_slice(origin);
        Ok(Self { dim, dims: d, dx, origin: o })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cell counts, padded with 1 along z for 2D grids.
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Axes carrying vorticity components.
    pub fn vort_axes(&self) -> &'static [usize] {
        if self.dim == 2 {
            &[2]
        } else {
            &[0, 1, 2]
        }
    }

    pub fn face_shape(&self, a: usize) -> [usize; 3] {
        let mut s = self.dims;
        s[a] += 1;
        s
    }

    pub fn vort_shape(&self, c: usize) -> [usize; 3] {
        let mut s = self.dims;
        for b in 0..self.dim {
            if b != c {
                s[b] += 1;
            }
        }
        s
    }

    pub fn node_shape(&self) -> [usize; 3] {
        let mut s = self.dims;
        for v in s.iter_mut().take(self.dim) {
            *v += 1;
        }
        s
    }

    /// Sample offset of face axis `a` in cell units.
    pub fn face_offset(&self, a: usize) -> [f64; 3] {
        let mut o = [0.5; 3];
        o[a] = 0.0;
        o
    }

    /// Sample offset of vorticity component `c` in cell units.
    pub fn vort_offset(&self, c: usize) -> [f64; 3] {
        let mut o = [0.0; 3];
        o[c] = 0.5;
        if self.dim == 2 {
            o[2] = 0.5;
        }
        o
    }

    pub fn cell_offset(&self) -> [f64; 3] {
        [0.5; 3]
    }

    pub fn position(&self, idx: [usize; 3], offset: [f64; 3]) -> Vec3 {
        Vec3::new(
            self.origin[0] + (idx[0] as f64 + offset[0]) * self.dx,
            self.origin[1] + (idx[1] as f64 + offset[1]) * self.dx,
            self.origin[2] + (idx[2] as f64 + offset[2]) * self.dx,
        )
    }

    pub fn face_position(&self, a: usize, idx: [usize; 3]) -> Vec3 {
        self.position(idx, self.face_offset(a))
    }

    pub fn vort_position(&self, c: usize, idx: [usize; 3]) -> Vec3 {
        self.position(idx, self.vort_offset(c))
    }

    pub fn cell_center(&self, idx: [usize; 3]) -> Vec3 {
        self.position(idx, [0.5; 3])
    }

    pub fn lower(&self) -> Vec3 {
        Vec3::from(self.origin)
    }

    pub fn upper(&self) -> Vec3 {
        Vec3::new(
            self.origin[0] + self.dims[0] as f64 * self.dx,
            self.origin[1] + self.dims[1] as f64 * self.dx,
            self.origin[2] + self.dims[2] as f64 * self.dx,
        )
    }

    /// Physical extent along each axis.
    pub fn extent(&self) -> Vec3 {
        self.upper() - self.lower()
    }

    pub fn clamp(&self, p: &Vec3) -> Vec3 {
        let lo = self.lower();
        let hi = self.upper();
        Vec3::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y), p.z.clamp(lo.z, hi.z))
    }

    /// Grid with half the resolution and twice the spacing, if every active
    /// axis is even and stays at 4 cells or more.
    pub fn coarsened(&self) -> Option<GridDesc> {
        let mut dims = self.dims;
        for d in dims.iter_mut().take(self.dim) {
            if *d % 2 != 0 || *d / 2 < 4 {
                return None;
            }
            *d /= 2;
        }
        Some(GridDesc { dim: self.dim, dims, dx: 2.0 * self.dx, origin: self.origin })
    }

    pub(crate) fn check_shape(&self, what: &str, got: [usize; 3], want: [usize; 3]) -> Result<()> {
        if got != want {
            return Err(Error::shape(format!("{what}: shape {got:?}, grid expects {want:?}")));
        }
        Ok(())
    }
}

/// Velocity imposed on each side of the domain box, indexed `[axis][side]`
/// with side 0 the lower face. The normal component fills boundary faces, the
/// tangential components stand in for faces outside the domain.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DomainWalls {
    sides: [[Vec3; 2]; 3],
}

impl DomainWalls {
    pub fn closed() -> Self {
        Self::default()
    }

    /// Every side moves with `v`, e.g. a free stream.
    pub fn uniform(v: Vec3) -> Self {
        Self { sides: [[v; 2]; 3] }
    }

    pub fn with_side(mut self, axis: usize, side: usize, v: Vec3) -> Self {
        self.sides[axis][side] = v;
        self
    }

    #[inline]
    pub fn side(&self, axis: usize, side: usize) -> Vec3 {
        self.sides[axis][side]
    }
}

/// Velocity on cell faces; component `a` has one extra entry along `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceField {
    comps: Vec<Array3>,
}

impl FaceField {
    pub fn zeros(g: &GridDesc) -> Self {
        Self { comps: (0..g.dim()).map(|a| Array3::zeros(g.face_shape(a))).collect() }
    }

    /// Samples `f(axis, position)` at every face center.
    pub fn from_fn(g: &GridDesc, mut f: impl FnMut(usize, Vec3) -> f64) -> Self {
        let comps = (0..g.dim())
            .map(|a| Array3::from_fn(g.face_shape(a), |idx| f(a, g.face_position(a, idx))))
            .collect();
        Self { comps }
    }

    /// Samples a vector field, keeping the component normal to each face.
    pub fn from_velocity(g: &GridDesc, mut f: impl FnMut(Vec3) -> Vec3) -> Self {
        Self::from_fn(g, |a, p| f(p)[a])
    }

    pub fn from_components(g: &GridDesc, comps: Vec<Array3>) -> Result<Self> {
        let field = Self { comps };
        field.check(g)?;
        Ok(field)
    }

    pub fn check(&self, g: &GridDesc) -> Result<()> {
        if self.comps.len() != g.dim() {
            return Err(Error::shape(format!(
                "face field has {} components on a {}D grid",
                self.comps.len(),
                g.dim()
            )));
        }
        for (a, c) in self.comps.iter().enumerate() {
            g.check_shape("face field", c.shape(), g.face_shape(a))?;
        }
        Ok(())
    }

    pub fn comp(&self, a: usize) -> &Array3 {
        &self.comps[a]
    }

    pub fn comp_mut(&mut self, a: usize) -> &mut Array3 {
        &mut self.comps[a]
    }

    pub fn components(&self) -> &[Array3] {
        &self.comps
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn sum_squares(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.data().iter()).map(|v| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.data().iter().all(|v| v.is_finite()))
    }
}

/// Vorticity samples: one node-centered component in 2D, three edge-centered
/// components in 3D. Slot `k` holds axis `g.vort_axes()[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VortField {
    comps: Vec<Array3>,
}

impl VortField {
    pub fn zeros(g: &GridDesc) -> Self {
        Self { comps: g.vort_axes().iter().map(|&c| Array3::zeros(g.vort_shape(c))).collect() }
    }

    /// Samples `f(axis, position)` at every vorticity location.
    pub fn from_fn(g: &GridDesc, mut f: impl FnMut(usize, Vec3) -> f64) -> Self {
        let comps = g
            .vort_axes()
            .iter()
            .map(|&c| Array3::from_fn(g.vort_shape(c), |idx| f(c, g.vort_position(c, idx))))
            .collect();
        Self { comps }
    }

    /// Samples a vector field, keeping the component along each sample axis.
    pub fn from_vector(g: &GridDesc, mut f: impl FnMut(Vec3) -> Vec3) -> Self {
        Self::from_fn(g, |c, p| f(p)[c])
    }

    pub fn from_components(g: &GridDesc, comps: Vec<Array3>) -> Result<Self> {
        let field = Self { comps };
        field.check(g)?;
        Ok(field)
    }

    pub fn check(&self, g: &GridDesc) -> Result<()> {
        let axes = g.vort_axes();
        if self.comps.len() != axes.len() {
            return Err(Error::shape(format!(
                "vorticity field has {} components on a {}D grid",
                self.comps.len(),
                g.dim()
            )));
        }
        for (c, &axis) in self.comps.iter().zip(axes) {
            g.check_shape("vorticity field", c.shape(), g.vort_shape(axis))?;
        }
        Ok(())
    }

    pub fn slots(&self) -> usize {
        self.comps.len()
    }

    /// Axis of slot `k`.
    pub fn axis(&self, k: usize) -> usize {
        if self.comps.len() == 1 {
            2
        } else {
            k
        }
    }

    /// Slot holding axis `c`, if present.
    pub fn slot(&self, c: usize) -> Option<usize> {
        if self.comps.len() == 1 {
            (c == 2).then_some(0)
        } else {
            Some(c)
        }
    }

    pub fn comp(&self, k: usize) -> &Array3 {
        &self.comps[k]
    }

    pub fn comp_mut(&mut self, k: usize) -> &mut Array3 {
        &mut self.comps[k]
    }

    pub fn components(&self) -> &[Array3] {
        &self.comps
    }

    pub fn sample_count(&self) -> usize {
        self.comps.iter().map(|c| c.len()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.data().iter().all(|v| v.is_finite()))
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, s: f64, other: &VortField) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += s * y;
            }
        }
    }

    /// All samples concatenated slot by slot.
    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.comps.iter().flat_map(|c| c.data().iter().copied())
    }
}

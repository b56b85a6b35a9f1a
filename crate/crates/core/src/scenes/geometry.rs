//! Implicit solid primitives and cell-center voxelization.

use crate::grid::{DomainWalls, GridDesc, Vec3};
use crate::poisson::SolidBoundary;
use crate::Result;

/// Implicit solid; negative inside. In 2D only x and y are used.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Disk in 2D, sphere in 3D.
    Ball { center: Vec3, radius: f64 },
    Cuboid { min: Vec3, max: Vec3 },
    /// Solid on the side `normal` points away from.
    HalfSpace { point: Vec3, normal: Vec3 },
}

impl Shape {
    pub fn value(&self, p: &Vec3, dim: usize) -> f64 {
        let flat = |v: Vec3| if dim == 2 { Vec3::new(v.x, v.y, 0.0) } else { v };
        let p = flat(*p);
        match self {
            Shape::Ball { center, radius } => (p - flat(*center)).norm() - radius,
            Shape::Cuboid { min, max } => {
                let mut outside: f64 = 0.0;
                let mut inside = f64::NEG_INFINITY;
                for d in 0..dim {
                    let e = (min[d] - p[d]).max(p[d] - max[d]);
                    outside += e.max(0.0).powi(2);
                    inside = inside.max(e);
                }
                if outside > 0.0 {
                    outside.sqrt()
                } else {
                    inside
                }
            }
            Shape::HalfSpace { point, normal } => {
                let n = flat(*normal);
                (p - flat(*point)).dot(&n) / n.norm()
            }
        }
    }

    pub fn contains(&self, p: &Vec3, dim: usize) -> bool {
        self.value(p, dim) < 0.0
    }

    pub fn translated(&self, d: Vec3) -> Shape {
        match self {
            Shape::Ball { center, radius } => Shape::Ball { center: center + d, radius: *radius },
            Shape::Cuboid { min, max } => Shape::Cuboid { min: min + d, max: max + d },
            Shape::HalfSpace { point, normal } => Shape::HalfSpace { point: point + d, normal: *normal },
        }
    }
}

/// Cells whose centers lie inside any of `shapes`, row-major.
pub fn solid_mask(shapes: &[Shape], g: &GridDesc) -> Vec<bool> {
    let n = g.dims();
    let mut mask = Vec::with_capacity(g.cell_count());
    for i in 0..n[0] {
        for j in 0..n[1] {
            for k in 0..n[2] {
                let p = g.cell_center([i, j, k]);
                mask.push(shapes.iter().any(|s| s.contains(&p, g.dim())));
            }
        }
    }
    mask
}

/// Solid cells of `shape` moving rigidly with `velocity`.
pub fn voxelize(shape: &Shape, g: &GridDesc, walls: DomainWalls, velocity: Vec3) -> Result<SolidBoundary> {
    voxelize_all(std::slice::from_ref(shape), g, walls, velocity)
}

pub fn voxelize_all(shapes: &[Shape], g: &GridDesc, walls: DomainWalls, velocity: Vec3) -> Result<SolidBoundary> {
    SolidBoundary::new(g, solid_mask(shapes, g), walls, |_, _| velocity)
}

/// Sinusoidal sweep of a shape along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddlePath {
    pub shape: Shape,
    pub axis: usize,
    pub amplitude: f64,
    pub period: f64,
}

impl PaddlePath {
    pub fn offset(&self, t: f64) -> Vec3 {
        let mut d = Vec3::zeros();
        d[self.axis] = self.amplitude * (std::f64::consts::TAU * t / self.period).sin();
        d
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        let mut v = Vec3::zeros();
        let w = std::f64::consts::TAU / self.period;
        v[self.axis] = self.amplitude * w * (w * t).cos();
        v
    }

    pub fn at(&self, t: f64) -> Shape {
        self.shape.translated(self.offset(t))
    }

    pub fn boundary(&self, g: &GridDesc, walls: DomainWalls, t: f64) -> Result<SolidBoundary> {
        voxelize(&self.at(t), g, walls, self.velocity(t))
    }
}

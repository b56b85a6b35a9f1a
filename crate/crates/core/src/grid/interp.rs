//! Multilinear sampling of staggered arrays.

use super::{Array3, FaceField, GridDesc, Mat3, Vec3};
use crate::{Error, Result};

/// Corner base index and per-axis weights of a multilinear stencil.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stencil {
    pub base: [usize; 3],
    pub w: [[f64; 2]; 3],
    pub ext: [usize; 3],
}

impl Stencil {
    /// `p` must already be clamped to the domain box.
    #[inline]
    pub fn new(shape: [usize; 3], offset: [f64; 3], g: &GridDesc, p: &Vec3) -> Self {
        let origin = g.origin();
        let dx = g.dx();
        let mut st = Stencil { base: [0; 3], w: [[1.0, 0.0]; 3], ext: [1; 3] };
        for d in 0..3 {
            let n = shape[d];
            if n < 2 {
                continue;
            }
            let s = ((p[d] - origin[d]) / dx - offset[d]).clamp(0.0, (n - 1) as f64);
            // Snap round-off so positions on sample points reproduce them exactly.
            let r = s.round();
            let s = if (s - r).abs() < 1e-10 { r } else { s };
            let b = (s.floor() as usize).min(n - 2);
            let t = s - b as f64;
            st.base[d] = b;
            st.w[d] = [1.0 - t, t];
            st.ext[d] = 2;
        }
        st
    }

    #[inline]
    pub fn for_each(&self, shape: [usize; 3], mut f: impl FnMut(usize, f64)) {
        for di in 0..self.ext[0] {
            let wi = self.w[0][di];
            let i = self.base[0] + di;
            for dj in 0..self.ext[1] {
                let wij = wi * self.w[1][dj];
                let row = (i * shape[1] + self.base[1] + dj) * shape[2] + self.base[2];
                for dk in 0..self.ext[2] {
                    f(row + dk, wij * self.w[2][dk]);
                }
            }
        }
    }
}

/// Multilinear value of `arr` (sampled at `offset`) at `p`, clamped to the domain.
#[inline]
pub(crate) fn interp_array(arr: &Array3, offset: [f64; 3], g: &GridDesc, p: &Vec3) -> f64 {
    let q = g.clamp(p);
    let st = Stencil::new(arr.shape(), offset, g, &q);
    let data = arr.data();
    let mut v = 0.0;
    st.for_each(arr.shape(), |l, w| v += w * data[l]);
    v
}

/// Interpolated value together with the min and max of the stencil values.
#[inline]
pub(crate) fn interp_array_bounds(arr: &Array3, offset: [f64; 3], g: &GridDesc, p: &Vec3) -> (f64, f64, f64) {
    let q = g.clamp(p);
    let st = Stencil::new(arr.shape(), offset, g, &q);
    let data = arr.data();
    let (mut v, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    st.for_each(arr.shape(), |l, w| {
        let x = data[l];
        v += w * x;
        lo = lo.min(x);
        hi = hi.max(x);
    });
    (v, lo, hi)
}

/// Base index and weight along one axis of a sample array of length `n`.
#[inline(always)]
fn axis_weight(c: f64, offset: f64, n: usize) -> (usize, f64) {
    let s = (c - offset).clamp(0.0, (n - 1) as f64);
    // `s` is non-negative, so truncation rounds without a libm call.
    let r = (s + 0.5) as usize as f64;
    let s = if (s - r).abs() < 1e-10 { r } else { s };
    let b = (s as usize).min(n - 2);
    (b, s - b as f64)
}

/// A face velocity prepared for repeated sampling of value and gradient.
///
/// Each face component is stored next to its central-difference gradient
/// (one-sided at the array ends), and both are interpolated with the same
/// multilinear weights.
#[derive(Clone, Debug)]
pub struct VelocitySampler {
    g: GridDesc,
    comps: Vec<SampledComponent>,
}

#[derive(Clone, Debug)]
struct SampledComponent {
    shape: [usize; 3],
    offset: [f64; 3],
    // value, d/dx, d/dy, d/dz
    data: Vec<[f64; 4]>,
}

impl VelocitySampler {
    pub fn new(u: &FaceField, g: &GridDesc) -> Result<Self> {
        u.check(g)?;
        let inv_dx = 1.0 / g.dx();
        let comps = (0..g.dim())
            .map(|a| {
                let arr = u.comp(a);
                let shape = arr.shape();
                let strides = [shape[1] * shape[2], shape[2], 1];
                let vals = arr.data();
                let mut data = Vec::with_capacity(vals.len());
                for (l, &v) in vals.iter().enumerate() {
                    let idx = super::unravel(shape, l);
                    let mut entry = [v, 0.0, 0.0, 0.0];
                    for b in 0..3 {
                        let n = shape[b];
                        if n < 2 {
                            continue;
                        }
                        let s = strides[b];
                        entry[1 + b] = if idx[b] == 0 {
                            (vals[l + s] - v) * inv_dx
                        } else if idx[b] == n - 1 {
                            (v - vals[l - s]) * inv_dx
                        } else {
                            (vals[l + s] - vals[l - s]) * 0.5 * inv_dx
                        };
                    }
                    data.push(entry);
                }
                SampledComponent { shape, offset: g.face_offset(a), data }
            })
            .collect();
        Ok(Self { g: g.clone(), comps })
    }

    pub fn grid(&self) -> &GridDesc {
        &self.g
    }

    /// Velocity and gradient `G[a][b] = du_a/dx_b` at `p` (clamped to the domain).
    #[inline]
    pub fn sample(&self, p: &Vec3) -> (Vec3, Mat3) {
        let q = self.g.clamp(p);
        let origin = self.g.origin();
        let inv_dx = 1.0 / self.g.dx();
        let c = [(q.x - origin[0]) * inv_dx, (q.y - origin[1]) * inv_dx, (q.z - origin[2]) * inv_dx];
        let mut vel = Vec3::zeros();
        let mut grad = Mat3::zeros();
        let three = self.comps.len() == 3;
        for (a, comp) in self.comps.iter().enumerate() {
            let sh = comp.shape;
            let (i, tx) = axis_weight(c[0], comp.offset[0], sh[0]);
            let (j, ty) = axis_weight(c[1], comp.offset[1], sh[1]);
            let d = &comp.data;
            let acc = if three {
                let (k, tz) = axis_weight(c[2], comp.offset[2], sh[2]);
                let (sx, sy) = (sh[1] * sh[2], sh[2]);
                let l = i * sx + j * sy + k;
                let mut acc = [0.0; 4];
                let corners = [
                    (l, (1.0 - tx) * (1.0 - ty) * (1.0 - tz)),
                    (l + 1, (1.0 - tx) * (1.0 - ty) * tz),
                    (l + sy, (1.0 - tx) * ty * (1.0 - tz)),
                    (l + sy + 1, (1.0 - tx) * ty * tz),
                    (l + sx, tx * (1.0 - ty) * (1.0 - tz)),
                    (l + sx + 1, tx * (1.0 - ty) * tz),
                    (l + sx + sy, tx * ty * (1.0 - tz)),
                    (l + sx + sy + 1, tx * ty * tz),
                ];
                for (l, w) in corners {
                    let e = &d[l];
                    for m in 0..4 {
                        acc[m] += w * e[m];
                    }
                }
                acc
            } else {
                let sx = sh[1];
                let l = i * sx + j;
                let (e00, e01, e10, e11) = (&d[l], &d[l + 1], &d[l + sx], &d[l + sx + 1]);
                let mut acc = [0.0; 4];
                for m in 0..3 {
                    let lo = (1.0 - ty) * e00[m] + ty * e01[m];
                    let hi = (1.0 - ty) * e10[m] + ty * e11[m];
                    acc[m] = (1.0 - tx) * lo + tx * hi;
                }
                acc
            };
            vel[a] = acc[0];
            grad[(a, 0)] = acc[1];
            grad[(a, 1)] = acc[2];
            grad[(a, 2)] = acc[3];
        }
        (vel, grad)
    }

    /// The face velocity this sampler was built from.
    pub fn velocity(&self) -> FaceField {
        let comps = self
            .comps
            .iter()
            .map(|c| Array3::from_vec(c.shape, c.data.iter().map(|e| e[0]).collect()).expect("stored shape"))
            .collect();
        FaceField::from_components(&self.g, comps).expect("stored layout")
    }
}

/// One-off velocity and gradient evaluation; build a [`VelocitySampler`] for
/// repeated queries.
pub fn interpolate_velocity(u: &FaceField, g: &GridDesc, p: &Vec3) -> Result<(Vec3, Mat3)> {
    if !p.iter().all(|v| v.is_finite()) {
        return Err(Error::contract(format!("sampling position is not finite: {p:?}")));
    }
    Ok(VelocitySampler::new(u, g)?.sample(p))
}

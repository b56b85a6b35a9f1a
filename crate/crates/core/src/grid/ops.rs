//! Discrete curl, divergence and Laplacian on the staggered layout.

use super::{transverse, Array3, CellField, DomainWalls, FaceField, GridDesc, VortField};
use crate::{Error, Result};

/// Curl of a face velocity with zero velocity outside the domain.
pub fn curl_velocity(u: &FaceField, g: &GridDesc) -> Result<VortField> {
    curl_velocity_with_walls(u, g, &DomainWalls::closed())
}

/// Circulation around each vorticity sample divided by `dx`. Faces beyond
/// the domain take the tangential velocity of the side they lie behind.
pub fn curl_velocity_with_walls(u: &FaceField, g: &GridDesc, walls: &DomainWalls) -> Result<VortField> {
    u.check(g)?;
    let inv_dx = 1.0 / g.dx();
    let mut w = VortField::zeros(g);
    for k in 0..w.slots() {
        let c = w.axis(k);
        let (p, q) = transverse(c);
        let (up, uq) = (u.comp(p), u.comp(q));
        let out = w.comp_mut(k);
        let shape = out.shape();
        let np = shape[p] as isize - 1;
        let nq = shape[q] as isize - 1;
        for (l, v) in out.data_mut().iter_mut().enumerate() {
            let idx = super::unravel(shape, l);
            let s = [idx[0] as isize, idx[1] as isize, idx[2] as isize];
            let mut back_p = s;
            back_p[p] -= 1;
            let mut back_q = s;
            back_q[q] -= 1;
            let uq_hi = face_or(uq, s, || walls.side(p, 1)[q], s[p] == np);
            let uq_lo = face_or(uq, back_p, || walls.side(p, 0)[q], s[p] == 0);
            let up_hi = face_or(up, s, || walls.side(q, 1)[p], s[q] == nq);
            let up_lo = face_or(up, back_q, || walls.side(q, 0)[p], s[q] == 0);
            *v = (uq_hi - uq_lo - up_hi + up_lo) * inv_dx;
        }
    }
    Ok(w)
}

#[inline]
fn face_or(arr: &Array3, idx: [isize; 3], wall: impl Fn() -> f64, outside: bool) -> f64 {
    if outside {
        wall()
    } else {
        arr.get_signed(idx).unwrap_or(0.0)
    }
}

/// Face-located curl of the vorticity; samples beyond the arrays count as zero.
pub fn curl_vorticity(w: &VortField, g: &GridDesc) -> Result<FaceField> {
    w.check(g)?;
    let inv_dx = 1.0 / g.dx();
    let mut out = FaceField::zeros(g);
    for a in 0..g.dim() {
        let arr = out.comp_mut(a);
        let shape = arr.shape();
        for (l, v) in arr.data_mut().iter_mut().enumerate() {
            let j = super::unravel(shape, l);
            let s = [j[0] as isize, j[1] as isize, j[2] as isize];
            let mut acc = 0.0;
            for k in 0..w.slots() {
                let c = w.axis(k);
                if c == a {
                    continue;
                }
                let (p, q) = transverse(c);
                let wc = w.comp(k);
                let here = wc.get_signed(s).unwrap_or(0.0);
                if a == q {
                    let mut t = s;
                    t[p] += 1;
                    acc += here - wc.get_signed(t).unwrap_or(0.0);
                } else {
                    let mut t = s;
                    t[q] += 1;
                    acc += wc.get_signed(t).unwrap_or(0.0) - here;
                }
            }
            *v = acc * inv_dx;
        }
    }
    Ok(out)
}

pub fn divergence(u: &FaceField, g: &GridDesc) -> Result<CellField> {
    u.check(g)?;
    let inv_dx = 1.0 / g.dx();
    let dims = g.dims();
    let mut out = Array3::zeros(dims);
    for a in 0..g.dim() {
        let ua = u.comp(a);
        for (l, v) in out.data_mut().iter_mut().enumerate() {
            let c = super::unravel(dims, l);
            let mut hi = c;
            hi[a] += 1;
            *v += (ua.get(hi) - ua.get(c)) * inv_dx;
        }
    }
    Ok(out)
}

/// Node-centered divergence of edge vorticity; edges beyond the arrays count as zero.
pub fn vorticity_divergence(w: &VortField, g: &GridDesc) -> Result<Array3> {
    if g.dim() != 3 {
        return Err(Error::Dimension { expected: 3, actual: g.dim() });
    }
    w.check(g)?;
    let inv_dx = 1.0 / g.dx();
    let shape = g.node_shape();
    let mut out = Array3::zeros(shape);
    for (l, v) in out.data_mut().iter_mut().enumerate() {
        let n = super::unravel(shape, l);
        let s = [n[0] as isize, n[1] as isize, n[2] as isize];
        let mut acc = 0.0;
        for c in 0..3 {
            let mut back = s;
            back[c] -= 1;
            let wc = w.comp(c);
            acc += wc.get_signed(s).unwrap_or(0.0) - wc.get_signed(back).unwrap_or(0.0);
        }
        *v = acc * inv_dx;
    }
    Ok(out)
}

/// Zero the samples on domain sides whose wall velocity points into the
/// domain. Fluid entering through such a side carries the free stream's
/// vorticity, not the slip sheet a wall-aware curl puts there.
pub fn clear_inflow_vorticity(w: &mut VortField, g: &GridDesc, walls: &DomainWalls) {
    for k in 0..w.slots() {
        let c = w.axis(k);
        let arr = w.comp_mut(k);
        let shape = arr.shape();
        for a in (0..g.dim()).filter(|&a| a != c) {
            for (side, plane) in [(0, 0), (1, shape[a] - 1)] {
                let inward = if side == 0 { walls.side(a, 0)[a] > 0.0 } else { walls.side(a, 1)[a] < 0.0 };
                if !inward {
                    continue;
                }
                let mut sub = shape;
                sub[a] = 1;
                for mut idx in super::index_iter(sub) {
                    idx[a] = plane;
                    arr.set(idx, 0.0);
                }
            }
        }
    }
}

/// Per-component 5/7-point Laplacian with zero beyond each sample array.
pub fn vorticity_laplacian(w: &VortField, g: &GridDesc) -> Result<VortField> {
    w.check(g)?;
    let inv_dx2 = 1.0 / (g.dx() * g.dx());
    let mut out = VortField::zeros(g);
    for k in 0..w.slots() {
        let src = w.comp(k);
        let shape = src.shape();
        let dst = out.comp_mut(k);
        for (l, v) in dst.data_mut().iter_mut().enumerate() {
            let i = super::unravel(shape, l);
            let s = [i[0] as isize, i[1] as isize, i[2] as isize];
            let centre = src.data()[l];
            let mut acc = 0.0;
            for b in 0..g.dim() {
                let mut lo = s;
                lo[b] -= 1;
                let mut hi = s;
                hi[b] += 1;
                acc += src.get_signed(lo).unwrap_or(0.0) + src.get_signed(hi).unwrap_or(0.0) - 2.0 * centre;
            }
            *v = acc * inv_dx2;
        }
    }
    Ok(out)
}

//! Geometric V-cycle on the stacked face layout: damped Jacobi smoothing,
//! multilinear prolongation, restriction by its scaled transpose.

use super::level::{strides, Level, Work};
use super::{BoundaryCoupling, DofClassification};

const OMEGA: f64 = 2.0 / 3.0;
const PRE_SWEEPS: usize = 2;
const POST_SWEEPS: usize = 2;
const COARSE_SWEEPS: usize = 50;

#[derive(Clone, Debug)]
struct Scratch {
    x: Vec<f64>,
    b: Vec<f64>,
    r: Vec<f64>,
    op: Work,
    // Prolongation to this level from the next coarser one, restricted to
    // unknown fine faces: (fine, coarse, weight).
    transfer: Vec<(u32, u32, f64)>,
}

#[derive(Clone, Debug)]
pub(crate) struct Hierarchy {
    pub levels: Vec<Level>,
    scratch: Vec<Scratch>,
}

impl Hierarchy {
    /// Levels halve while every active axis is even and keeps 4 cells or
    /// more. A coarse cell is solid only when all its children are.
    pub fn new(dim: usize, dims: [usize; 3], solid: &[bool], cls: DofClassification, coupling: BoundaryCoupling) -> Self {
        let mut levels = vec![Level::new(dim, dims, &cls)];
        let mut cur_dims = dims;
        let mut cur_solid = solid.to_vec();
        loop {
            let Some(next) = coarse_dims(dim, cur_dims) else { break };
            let cs = strides(cur_dims);
            let ncs = strides(next);
            let mut coarse = vec![false; next[0] * next[1] * next[2]];
            let child_ext = |d: usize| if d < dim { 2 } else { 1 };
            for i in 0..next[0] {
                for j in 0..next[1] {
                    for k in 0..next[2] {
                        let mut all = true;
                        for di in 0..child_ext(0) {
                            for dj in 0..child_ext(1) {
                                for dk in 0..child_ext(2) {
                                    let (fi, fj, fk) = (i * child_ext(0) + di, j * child_ext(1) + dj, k * child_ext(2) + dk);
                                    all &= cur_solid[fi * cs[0] + fj * cs[1] + fk * cs[2]];
                                }
                            }
                        }
                        coarse[i * ncs[0] + j * ncs[1] + k * ncs[2]] = all;
                    }
                }
            }
            let ccls = super::level::classify(dim, next, &coarse, coupling);
            levels.push(Level::new(dim, next, &ccls));
            cur_dims = next;
            cur_solid = coarse;
        }
        let scratch = levels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let n = l.n_faces();
                let mut transfer = Vec::new();
                if let Some(c) = levels.get(i + 1) {
                    for_each_transfer(l, c, |lf, lc, w| {
                        if l.unknown[lf] {
                            transfer.push((lf as u32, lc as u32, w));
                        }
                    });
                }
                Scratch { x: vec![0.0; n], b: vec![0.0; n], r: vec![0.0; n], op: l.work(), transfer }
            })
            .collect();
        Self { levels, scratch }
    }

    pub fn fine(&self) -> &Level {
        &self.levels[0]
    }

    pub fn fine_work(&self) -> Work {
        self.levels[0].work()
    }

    /// `z = M⁻¹ r` with one V-cycle from a zero initial guess.
    pub fn precondition(&mut self, r: &[f64], z: &mut [f64]) {
        self.scratch[0].b.copy_from_slice(r);
        self.vcycle(0);
        z.copy_from_slice(&self.scratch[0].x);
    }

    fn vcycle(&mut self, l: usize) {
        let last = l + 1 == self.levels.len();
        {
            let level = &self.levels[l];
            let s = &mut self.scratch[l];
            // The first sweep from a zero guess needs no operator application.
            for ((x, b), d) in s.x.iter_mut().zip(&s.b).zip(&level.inv_diag) {
                *x = OMEGA * d * b;
            }
            let sweeps = if last { COARSE_SWEEPS } else { PRE_SWEEPS };
            jacobi(level, s, sweeps - 1);
        }
        if last {
            return;
        }
        {
            let level = &self.levels[l];
            let s = &mut self.scratch[l];
            level.apply(&s.x, &mut s.r, &mut s.op);
            for ((r, b), &u) in s.r.iter_mut().zip(&s.b).zip(&level.unknown) {
                *r = if u { b - *r } else { 0.0 };
            }
        }
        {
            let (lo, hi) = self.scratch.split_at_mut(l + 1);
            restrict(&self.levels[l], &self.levels[l + 1], &lo[l].transfer, &lo[l].r, &mut hi[0].b);
        }
        self.vcycle(l + 1);
        {
            let (lo, hi) = self.scratch.split_at_mut(l + 1);
            let s = &mut lo[l];
            prolong_add(&self.levels[l + 1], &s.transfer, &hi[0].x, &mut s.x);
        }
        let level = &self.levels[l];
        jacobi(level, &mut self.scratch[l], POST_SWEEPS);
    }
}

fn coarse_dims(dim: usize, dims: [usize; 3]) -> Option<[usize; 3]> {
    let mut out = dims;
    for d in out.iter_mut().take(dim) {
        if *d % 2 != 0 || *d / 2 < 4 {
            return None;
        }
        *d /= 2;
    }
    Some(out)
}

fn jacobi(level: &Level, s: &mut Scratch, sweeps: usize) {
    for _ in 0..sweeps {
        level.apply(&s.x, &mut s.r, &mut s.op);
        for (((x, r), b), d) in s.x.iter_mut().zip(&s.r).zip(&s.b).zip(&level.inv_diag) {
            *x += OMEGA * d * (b - r);
        }
    }
}

/// Coarse contributors of fine index `i` along one axis.
#[inline]
fn weights_1d(node_like: bool, active: bool, i: usize, n_coarse_cells: usize) -> ([(usize, f64); 2], usize) {
    if !active {
        return ([(i, 1.0), (0, 0.0)], 1);
    }
    if node_like {
        if i % 2 == 0 {
            ([(i / 2, 1.0), (0, 0.0)], 1)
        } else {
            ([(i / 2, 0.5), (i / 2 + 1, 0.5)], 2)
        }
    } else {
        let c = i / 2;
        if i % 2 == 0 {
            if c >= 1 {
                ([(c, 0.75), (c - 1, 0.25)], 2)
            } else {
                ([(c, 1.0), (0, 0.0)], 1)
            }
        } else if c + 1 < n_coarse_cells {
            ([(c, 0.75), (c + 1, 0.25)], 2)
        } else {
            ([(c, 1.0), (0, 0.0)], 1)
        }
    }
}

/// Visit every (fine face, coarse face, weight) triple of the prolongation.
#[inline(always)]
fn for_each_transfer(fine: &Level, coarse: &Level, mut f: impl FnMut(usize, usize, f64)) {
    for a in 0..fine.dim {
        let fs = fine.face_shape[a];
        let cstr = strides(coarse.face_shape[a]);
        let co = coarse.face_off[a];
        let table = |d: usize| -> Vec<([(usize, f64); 2], usize)> {
            (0..fs[d]).map(|i| weights_1d(a == d, fine.dim > d, i, coarse.dims[d])).collect()
        };
        let (tx, ty, tz) = (table(0), table(1), table(2));
        super::level::for_each_index(fs, |i, j, k, lf| {
            let (wi, ni) = &tx[i];
            let (wj, nj) = &ty[j];
            let (wk, nk) = &tz[k];
            for &(ci, xi) in &wi[..*ni] {
                for &(cj, xj) in &wj[..*nj] {
                    for &(ck, xk) in &wk[..*nk] {
                        f(fine.face_off[a] + lf, co + ci * cstr[0] + cj * cstr[1] + ck * cstr[2], xi * xj * xk);
                    }
                }
            }
        });
    }
}

/// `b_c = 4 · Pᵀ r / 2^d`, the residual carried to the coarse Δx²-scaled system.
fn restrict(fine: &Level, coarse: &Level, transfer: &[(u32, u32, f64)], r: &[f64], b: &mut [f64]) {
    b.iter_mut().for_each(|v| *v = 0.0);
    let scale = 4.0 / (1 << fine.dim) as f64;
    for &(lf, lc, w) in transfer {
        b[lc as usize] += scale * w * r[lf as usize];
    }
    for (v, &u) in b.iter_mut().zip(&coarse.unknown) {
        if !u {
            *v = 0.0;
        }
    }
}

fn prolong_add(coarse: &Level, transfer: &[(u32, u32, f64)], xc: &[f64], x: &mut [f64]) {
    for &(lf, lc, w) in transfer {
        if coarse.unknown[lc as usize] {
            x[lf as usize] += w * xc[lc as usize];
        }
    }
}

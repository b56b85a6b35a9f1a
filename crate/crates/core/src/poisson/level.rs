//! Matrix-free coupled operator on one grid level, acting on all faces
//! stacked axis by axis (x first).

use super::{BoundaryCoupling, DofClassification, FaceStatus, VortStatus};
use crate::grid::transverse;

#[inline]
pub(crate) fn strides(shape: [usize; 3]) -> [usize; 3] {
    [shape[1] * shape[2], shape[2], 1]
}

/// Visit `(i, j, k, row-major index)` over `shape`, with a tight loop for
/// flat (2D) shapes.
#[inline(always)]
pub(crate) fn for_each_index(shape: [usize; 3], mut f: impl FnMut(usize, usize, usize, usize)) {
    let mut l = 0;
    if shape[2] == 1 {
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                f(i, j, 0, l);
                l += 1;
            }
        }
    } else {
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    f(i, j, k, l);
                    l += 1;
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Level {
    pub dim: usize,
    pub dims: [usize; 3],
    pub face_shape: [[usize; 3]; 3],
    pub face_off: [usize; 4],
    pub unknown: Vec<bool>,
    pub edge_axes: Vec<usize>,
    pub edge_shape: Vec<[usize; 3]>,
    pub edge_interior: Vec<Vec<bool>>,
    pub inv_diag: Vec<f64>,
    pub diag: Vec<f64>,
}

/// Scratch space for one operator application.
#[derive(Clone, Debug)]
pub(crate) struct Work {
    pub gamma: Vec<Vec<f64>>,
    pub div: Vec<f64>,
}

impl Level {
    pub fn new(dim: usize, dims: [usize; 3], cls: &DofClassification) -> Self {
        let mut face_shape = [[0; 3]; 3];
        let mut face_off = [0; 4];
        for a in 0..3 {
            if a < dim {
                let mut s = dims;
                s[a] += 1;
                face_shape[a] = s;
                face_off[a + 1] = face_off[a] + s[0] * s[1] * s[2];
            } else {
                face_off[a + 1] = face_off[a];
            }
        }
        let unknown: Vec<bool> =
            cls.faces.iter().flat_map(|f| f.iter().map(|s| *s == FaceStatus::Unknown)).collect();
        let edge_axes: Vec<usize> = if dim == 2 { vec![2] } else { vec![0, 1, 2] };
        let edge_shape: Vec<[usize; 3]> = edge_axes
            .iter()
            .map(|&c| {
                let mut s = dims;
                for b in 0..dim {
                    if b != c {
                        s[b] += 1;
                    }
                }
                s
            })
            .collect();
        let edge_interior =
            cls.vort.iter().map(|v| v.iter().map(|s| *s == VortStatus::Interior).collect()).collect();
        let mut level = Level {
            dim,
            dims,
            face_shape,
            face_off,
            unknown,
            edge_axes,
            edge_shape,
            edge_interior,
            inv_diag: Vec::new(),
            diag: Vec::new(),
        };
        level.diag = level.compute_diagonal();
        level.inv_diag = level.diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect();
        level
    }

    pub fn n_faces(&self) -> usize {
        self.face_off[3]
    }

    pub fn work(&self) -> Work {
        Work {
            gamma: self.edge_shape.iter().map(|s| vec![0.0; s[0] * s[1] * s[2]]).collect(),
            div: vec![0.0; self.dims[0] * self.dims[1] * self.dims[2]],
        }
    }

    fn compute_diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.n_faces()];
        self.for_each_face(|a, j, f| {
            if !self.unknown[f] {
                return;
            }
            let mut d = 2.0;
            for (k, &c) in self.edge_axes.iter().enumerate() {
                if c == a {
                    continue;
                }
                let (p, q) = transverse(c);
                let es = strides(self.edge_shape[k]);
                let e0 = j[0] * es[0] + j[1] * es[1] + j[2] * es[2];
                let e1 = if a == q { e0 + es[p] } else { e0 + es[q] };
                d += self.edge_interior[k][e0] as u8 as f64 + self.edge_interior[k][e1] as u8 as f64;
            }
            diag[f] = d;
        });
        diag
    }

    #[inline]
    fn for_each_face(&self, mut f: impl FnMut(usize, [usize; 3], usize)) {
        for a in 0..self.dim {
            let off = self.face_off[a];
            for_each_index(self.face_shape[a], |i, j, k, l| f(a, [i, j, k], off + l));
        }
    }

    /// Circulation of `x` on interior edges and divergence of every cell, both
    /// without the `1/dx` factor.
    pub fn circulation_and_divergence(&self, x: &[f64], work: &mut Work) {
        for (k, &c) in self.edge_axes.iter().enumerate() {
            let (p, q) = transverse(c);
            let es = self.edge_shape[k];
            let sq = strides(self.face_shape[q]);
            let sp = strides(self.face_shape[p]);
            let (oq, op) = (self.face_off[q], self.face_off[p]);
            let interior = &self.edge_interior[k];
            let gam = &mut work.gamma[k];
            for_each_index(es, |i, j, kk, l| {
                gam[l] = if interior[l] {
                    let lq = oq + i * sq[0] + j * sq[1] + kk * sq[2];
                    let lp = op + i * sp[0] + j * sp[1] + kk * sp[2];
                    x[lq] - x[lq - sq[p]] - x[lp] + x[lp - sp[q]]
                } else {
                    0.0
                };
            });
        }
        work.div.iter_mut().for_each(|v| *v = 0.0);
        let n = self.dims;
        for a in 0..self.dim {
            let s = strides(self.face_shape[a]);
            let off = self.face_off[a];
            let div = &mut work.div;
            for_each_index(n, |i, j, k, l| {
                let f = off + i * s[0] + j * s[1] + k * s[2];
                div[l] += x[f + s[a]] - x[f];
            });
        }
    }

    /// `y_f = Σ_e κ_e(f) Γ_e + (div_left − div_right)` on unknown faces, zero elsewhere.
    pub fn assemble(&self, work: &Work, y: &mut [f64]) {
        let cs = strides(self.dims);
        let edge_strides: Vec<[usize; 3]> = self.edge_shape.iter().map(|&s| strides(s)).collect();
        for a in 0..self.dim {
            // Edges touching faces of axis `a`: (edge slot, strides, + offset, − offset).
            let mut terms = [(0, [0; 3], 0, 0); 2];
            let mut nterms = 0;
            for (kk, &c) in self.edge_axes.iter().enumerate() {
                if c == a {
                    continue;
                }
                let (p, q) = transverse(c);
                let es = edge_strides[kk];
                terms[nterms] = if a == q { (kk, es, 0, es[p]) } else { (kk, es, es[q], 0) };
                nterms += 1;
            }
            let off = self.face_off[a];
            for_each_index(self.face_shape[a], |i, j, k, l| {
                let f = off + l;
                if !self.unknown[f] {
                    y[f] = 0.0;
                    return;
                }
                let cell = i * cs[0] + j * cs[1] + k * cs[2];
                let mut v = work.div[cell - cs[a]] - work.div[cell];
                for &(kk, es, plus, minus) in &terms[..nterms] {
                    let e0 = i * es[0] + j * es[1] + k * es[2];
                    let gam = &work.gamma[kk];
                    v += gam[e0 + plus] - gam[e0 + minus];
                }
                y[f] = v;
            });
        }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64], work: &mut Work) {
        self.circulation_and_divergence(x, work);
        self.assemble(work, y);
    }
}

pub(crate) fn classify(
    dim: usize,
    dims: [usize; 3],
    solid: &[bool],
    coupling: BoundaryCoupling,
) -> DofClassification {
    let cs = strides(dims);
    let fluid = |c: [isize; 3]| -> bool {
        for d in 0..3 {
            if c[d] < 0 || c[d] as usize >= dims[d] {
                return false;
            }
        }
        !solid[c[0] as usize * cs[0] + c[1] as usize * cs[1] + c[2] as usize * cs[2]]
    };
    let faces = (0..dim)
        .map(|a| {
            let mut s = dims;
            s[a] += 1;
            crate::grid::index_iter(s)
                .map(|j| {
                    let hi = [j[0] as isize, j[1] as isize, j[2] as isize];
                    let mut lo = hi;
                    lo[a] -= 1;
                    if fluid(lo) && fluid(hi) {
                        FaceStatus::Unknown
                    } else {
                        FaceStatus::Dirichlet
                    }
                })
                .collect()
        })
        .collect();
    let axes: &[usize] = if dim == 2 { &[2] } else { &[0, 1, 2] };
    let vort = axes
        .iter()
        .map(|&c| {
            let (p, q) = transverse(c);
            let mut s = dims;
            for b in 0..dim {
                if b != c {
                    s[b] += 1;
                }
            }
            crate::grid::index_iter(s)
                .map(|e| {
                    let base = [e[0] as isize, e[1] as isize, e[2] as isize];
                    let mut n_fluid = 0;
                    let mut n_inside = 0;
                    for (dp, dq) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        let mut cell = base;
                        cell[p] -= dp;
                        cell[q] -= dq;
                        if (0..3).all(|d| cell[d] >= 0 && (cell[d] as usize) < dims[d]) {
                            n_inside += 1;
                        }
                        if fluid(cell) {
                            n_fluid += 1;
                        }
                    }
                    if n_fluid == 0 {
                        VortStatus::Excluded
                    } else {
                        match coupling {
                            BoundaryCoupling::Compatible if n_fluid == 4 => VortStatus::Interior,
                            BoundaryCoupling::VelocityOnly if n_inside == 4 => VortStatus::Interior,
                            _ => VortStatus::Eliminated,
                        }
                    }
                })
                .collect()
        })
        .collect();
    DofClassification { coupling, faces, vort }
}

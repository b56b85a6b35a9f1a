//! Independent reference implementations for integration tests.
//!
//! Nothing here calls into the solver's operator code: the dense system is
//! rebuilt from the circulation and divergence stencils, one equation per
//! face, and the classification is re-derived cell by cell.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vortexmap::poisson::{BoundaryCoupling, DofClassification, FaceStatus, SolidBoundary, VortStatus};
use vortexmap::poisson::CoupledSystem;
use vortexmap::{DomainWalls, GridDesc, Vec3, VortField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn row_major(shape: [usize; 3], i: [usize; 3]) -> usize {
    (i[0] * shape[1] + i[1]) * shape[2] + i[2]
}

fn indices(shape: [usize; 3]) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// Transverse axes (p, q) of a vorticity component, right-handed.
fn pq(c: usize) -> (usize, usize) {
    ((c + 1) % 3, (c + 2) % 3)
}

fn vort_shape(g: &GridDesc, c: usize) -> [usize; 3] {
    let mut s = g.dims();
    for b in 0..g.dim() {
        if b != c {
            s[b] += 1;
        }
    }
    s
}

fn vort_axes(g: &GridDesc) -> Vec<usize> {
    if g.dim() == 2 {
        vec![2]
    } else {
        vec![0, 1, 2]
    }
}

/// Global index of every face, stacked by axis.
pub struct FaceIndex {
    offsets: [usize; 4],
    shapes: [[usize; 3]; 3],
}

impl FaceIndex {
    pub fn new(g: &GridDesc) -> Self {
        let mut offsets = [0; 4];
        let mut shapes = [[0; 3]; 3];
        for a in 0..3 {
            if a < g.dim() {
                let mut s = g.dims();
                s[a] += 1;
                shapes[a] = s;
                offsets[a + 1] = offsets[a] + s.iter().product::<usize>();
            } else {
                offsets[a + 1] = offsets[a];
            }
        }
        Self { offsets, shapes }
    }

    pub fn len(&self) -> usize {
        self.offsets[3]
    }

    /// `None` when the face lies outside the face array.
    pub fn get(&self, a: usize, i: [isize; 3]) -> Option<usize> {
        let s = self.shapes[a];
        if (0..3).any(|d| i[d] < 0 || i[d] as usize >= s[d]) {
            return None;
        }
        Some(self.offsets[a] + row_major(s, [i[0] as usize, i[1] as usize, i[2] as usize]))
    }
}

fn cell_state(g: &GridDesc, solid: &[bool], c: [isize; 3]) -> Option<bool> {
    let n = g.dims();
    if (0..3).any(|d| c[d] < 0 || c[d] as usize >= n[d]) {
        return None;
    }
    Some(solid[row_major(n, [c[0] as usize, c[1] as usize, c[2] as usize])])
}

/// Cells around vorticity sample `i` of axis `c`: 4 in-plane neighbours.
fn edge_cells(g: &GridDesc, c: usize, i: [usize; 3]) -> Vec<[isize; 3]> {
    let (p, q) = pq(c);
    let mut out = Vec::new();
    for dp in 0..2 {
        for dq in 0..2 {
            let mut cell = [i[0] as isize, i[1] as isize, i[2] as isize];
            if p < g.dim() {
                cell[p] -= dp;
            } else if dp == 1 {
                continue;
            }
            if q < g.dim() {
                cell[q] -= dq;
            } else if dq == 1 {
                continue;
            }
            out.push(cell);
        }
    }
    out
}

/// Classification re-derived from the cell mask alone.
pub fn brute_force_classification(g: &GridDesc, solid: &[bool], coupling: BoundaryCoupling) -> DofClassification {
    let mut faces = Vec::new();
    for a in 0..g.dim() {
        let mut s = g.dims();
        s[a] += 1;
        let mut v = Vec::new();
        for i in indices(s) {
            let hi = [i[0] as isize, i[1] as isize, i[2] as isize];
            let mut lo = hi;
            lo[a] -= 1;
            let fluid = |c| cell_state(g, solid, c) == Some(false);
            v.push(if fluid(lo) && fluid(hi) { FaceStatus::Unknown } else { FaceStatus::Dirichlet });
        }
        faces.push(v);
    }
    let mut vort = Vec::new();
    for c in vort_axes(g) {
        let mut v = Vec::new();
        for i in indices(vort_shape(g, c)) {
            let states: Vec<Option<bool>> = edge_cells(g, c, i).into_iter().map(|cell| cell_state(g, solid, cell)).collect();
            let any_fluid = states.iter().any(|s| *s == Some(false));
            let interior = match coupling {
                BoundaryCoupling::Compatible => states.iter().all(|s| *s == Some(false)),
                BoundaryCoupling::VelocityOnly => states.iter().all(|s| s.is_some()),
            };
            v.push(if !any_fluid {
                VortStatus::Excluded
            } else if interior {
                VortStatus::Interior
            } else {
                VortStatus::Eliminated
            });
        }
        vort.push(v);
    }
    DofClassification { coupling, faces, vort }
}

/// Dense Δx²-scaled system over unknown faces, assembled equation by
/// equation.
pub struct DenseSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Global face index of each unknown, in stacked order.
    pub unknowns: Vec<usize>,
}

/// Each unknown face carries the discrete vector Laplacian written as
/// curl-curl minus grad-div. Its curl part sums, over the edges touching
/// the face, `±(Γ_e − ω_e Δx)`; edges that are not interior have
/// `Γ_e = ω_e Δx` imposed, so their terms vanish from the row. Known face
/// values are moved to the right-hand side.
pub fn dense_system(g: &GridDesc, solids: &SolidBoundary, w: &VortField, cls: &DofClassification) -> DenseSystem {
    let fi = FaceIndex::new(g);
    let nf = fi.len();
    let dx = g.dx();
    let mut full = DMatrix::<f64>::zeros(nf, nf);
    let mut src = DVector::<f64>::zeros(nf);

    // Circulation Γ_e = u_q(I) − u_q(I − e_p) − u_p(I) + u_p(I − e_q).
    for (slot, c) in vort_axes(g).into_iter().enumerate() {
        let (p, q) = pq(c);
        let shape = vort_shape(g, c);
        for i in indices(shape) {
            let l = row_major(shape, i);
            if cls.vort[slot][l] != VortStatus::Interior {
                continue;
            }
            let at = |da: usize, back: Option<usize>| {
                let mut j = [i[0] as isize, i[1] as isize, i[2] as isize];
                if let Some(b) = back {
                    j[b] -= 1;
                }
                fi.get(da, j)
            };
            let stencil = [(at(q, None), 1.0), (at(q, Some(p)), -1.0), (at(p, None), -1.0), (at(p, Some(q)), 1.0)];
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (f, s) in stencil {
                match f {
                    Some(f) => row.push((f, s)),
                    // An interior edge never reaches past the face arrays.
                    None => panic!("interior edge {c} {i:?} has a ghost face"),
                }
            }
            let wv = w.comp(slot).data()[l] * dx;
            for &(f, sf) in &row {
                for &(h, sh) in &row {
                    full[(f, h)] += sf * sh;
                }
                src[f] += sf * wv;
            }
        }
    }

    // Divergence of each cell: Σ_a u_a(I + e_a) − u_a(I).
    for cell in indices(g.dims()) {
        let mut row = Vec::new();
        for a in 0..g.dim() {
            let lo = [cell[0] as isize, cell[1] as isize, cell[2] as isize];
            let mut hi = lo;
            hi[a] += 1;
            row.push((fi.get(a, hi).expect("cell face"), 1.0));
            row.push((fi.get(a, lo).expect("cell face"), -1.0));
        }
        for &(f, sf) in &row {
            for &(h, sh) in &row {
                full[(f, h)] += sf * sh;
            }
        }
    }

    let mut status = Vec::with_capacity(nf);
    for a in 0..g.dim() {
        status.extend(cls.faces[a].iter().copied());
    }
    let known: Vec<f64> = solids.wall().components().iter().flat_map(|c| c.data().iter().copied()).collect();
    let unknowns: Vec<usize> = (0..nf).filter(|&f| status[f] == FaceStatus::Unknown).collect();
    let n = unknowns.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (r, &f) in unknowns.iter().enumerate() {
        for (c, &h) in unknowns.iter().enumerate() {
            a[(r, c)] = full[(f, h)];
        }
        let mut rhs = src[f];
        for h in 0..nf {
            if status[h] == FaceStatus::Dirichlet {
                rhs -= full[(f, h)] * known[h];
            }
        }
        b[r] = rhs;
    }
    DenseSystem { a, b, unknowns }
}

/// Random cell mask with roughly `fraction` solid cells.
pub fn random_mask(g: &GridDesc, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    (0..g.cell_count()).map(|_| rng.gen_bool(fraction)).collect()
}

/// Least-squares solution restricted to the range of a symmetric matrix.
pub fn pseudo_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let tol = 1e-10 * svd.singular_values.max();
    svd.solve(b, tol).expect("svd with both factors")
}

/// Component of `x` orthogonal to the null space of symmetric `a`.
pub fn project_to_range(a: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let eig = a.clone().symmetric_eigen();
    let tol = 1e-10 * eig.eigenvalues.amax();
    let mut out = x.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= tol {
            let v = eig.eigenvectors.column(k);
            let c = v.dot(x);
            out -= c * v;
        }
    }
    out
}

/// Random solids with moving walls and an affine solid velocity.
pub fn random_solids(g: &GridDesc, seed: u64) -> SolidBoundary {
    let mut r = rng(seed);
    let fraction = r.gen_range(0.05..0.35);
    let mask = random_mask(g, fraction, &mut r);
    let mut walls = DomainWalls::closed();
    for a in 0..g.dim() {
        for side in 0..2 {
            let mut v = Vec3::zeros();
            v[a] = r.gen_range(-1.0..1.0);
            walls = walls.with_side(a, side, v);
        }
    }
    let vel = Vec3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
    SolidBoundary::new(g, mask, walls, |cell, p| vel + 0.1 * (cell % 7) as f64 * p).unwrap()
}

pub fn random_vorticity(g: &GridDesc, seed: u64) -> VortField {
    let mut r = rng(seed ^ 0x5eed);
    VortField::from_fn(g, |_, _| r.gen_range(-2.0..2.0))
}

/// The matrix-free operator applied to every unit vector.
pub fn matrix_free_columns(sys: &mut CoupledSystem) -> Vec<Vec<f64>> {
    let n = sys.unknown_count();
    (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            sys.apply(&e).unwrap()
        })
        .collect()
}

/// Small 2D and 3D grids for the dense comparisons.
pub fn oracle_grids() -> Vec<GridDesc> {
    vec![
        GridDesc::new(&[8, 8], 0.125, &[0.0, 0.0]).unwrap(),
        GridDesc::new(&[16, 12], 0.1, &[0.0, 0.0]).unwrap(),
        GridDesc::new(&[6, 5, 4], 0.2, &[0.0; 3]).unwrap(),
        GridDesc::new(&[8, 8, 8], 0.125, &[0.0; 3]).unwrap(),
    ]
}

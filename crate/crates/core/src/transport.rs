//! Transport of line elements (vorticity) and surface elements (impulse)
//! through flow maps, error-compensated pullback, and single-step baselines.

use rayon::prelude::*;

use crate::flowmap::{march, reset_maps, reset_maps_at, sample_blocks, JacobianField, MapField, SampleSite};
use crate::grid::{interp_array, interp_array_bounds, FaceField, GridDesc, Mat3, Vec3, VelocitySampler, VortField};
use crate::{Error, Result};

/// Output of [`bfecc_pullback`].
#[derive(Clone, Debug, PartialEq)]
pub struct TransportResult {
    pub vorticity: VortField,
    /// One flag per sample, slot by slot; set where the limiter changed the value.
    pub clamped: Vec<bool>,
}

impl TransportResult {
    pub fn clamp_fraction(&self) -> f64 {
        if self.clamped.is_empty() {
            return 0.0;
        }
        self.clamped.iter().filter(|&&c| c).count() as f64 / self.clamped.len() as f64
    }
}

/// Full vorticity vector at `p`; in 2D only the z entry is set.
#[inline]
pub(crate) fn vorticity_at(w: &VortField, g: &GridDesc, p: &Vec3) -> Vec3 {
    let mut v = Vec3::zeros();
    for k in 0..w.slots() {
        let c = w.axis(k);
        v[c] = interp_array(w.comp(k), g.vort_offset(c), g, p);
    }
    v
}

/// Like [`vorticity_at`], also returning per-component stencil extremes.
#[inline]
fn vorticity_with_bounds(w: &VortField, g: &GridDesc, p: &Vec3) -> (Vec3, Vec3, Vec3) {
    let mut v = Vec3::zeros();
    let mut lo = Vec3::zeros();
    let mut hi = Vec3::zeros();
    for k in 0..w.slots() {
        let c = w.axis(k);
        let (x, a, b) = interp_array_bounds(w.comp(k), g.vort_offset(c), g, p);
        v[c] = x;
        lo[c] = a;
        hi[c] = b;
    }
    (v, lo, hi)
}

fn check_pair(g: &GridDesc, w: &VortField, m: &MapField, j: &JacobianField) -> Result<()> {
    w.check(g)?;
    m.check(g, SampleSite::Vorticity)?;
    j.check(g, SampleSite::Vorticity)
}

/// `out(x) = [M(x) w(X(x))]_c` at every vorticity sample of axis `c`.
fn transform_line(w: &VortField, g: &GridDesc, pts: &[Vec3], mats: &[Mat3]) -> VortField {
    let mut out = VortField::zeros(g);
    for (k, block) in sample_blocks(g, SampleSite::Vorticity).into_iter().enumerate() {
        let c = block.axis;
        let r = block.range();
        out.comp_mut(k)
            .data_mut()
            .par_iter_mut()
            .zip(pts[r.clone()].par_iter().zip(mats[r].par_iter()))
            .for_each(|(o, (p, m))| {
                let v = vorticity_at(w, g, p);
                *o = m.row(c).dot(&v.transpose());
            });
    }
    out
}

/// ω(x) = ℱ(x) w0(ψ(x)).
pub fn pullback_line(w0: &VortField, g: &GridDesc, psi: &MapField, f: &JacobianField) -> Result<VortField> {
    check_pair(g, w0, psi, f)?;
    Ok(transform_line(w0, g, psi.points(), f.matrices()))
}

/// ω(X) = 𝒯(X) w(φ(X)).
pub fn pushforward_line(w: &VortField, g: &GridDesc, phi: &MapField, t: &JacobianField) -> Result<VortField> {
    check_pair(g, w, phi, t)?;
    Ok(transform_line(w, g, phi.points(), t.matrices()))
}

/// Surface-element transport at face samples: s(x) = [𝒯(x)ᵀ m0(ψ(x))]_a.
pub fn transport_surface(m0: &FaceField, g: &GridDesc, psi: &MapField, t: &JacobianField) -> Result<FaceField> {
    m0.check(g)?;
    psi.check(g, SampleSite::Faces)?;
    t.check(g, SampleSite::Faces)?;
    let mut out = FaceField::zeros(g);
    let (pts, mats) = (psi.points(), t.matrices());
    for block in sample_blocks(g, SampleSite::Faces) {
        let a = block.axis;
        let r = block.range();
        out.comp_mut(a)
            .data_mut()
            .par_iter_mut()
            .zip(pts[r.clone()].par_iter().zip(mats[r].par_iter()))
            .for_each(|(o, (p, m))| {
                let mut v = Vec3::zeros();
                for b in 0..g.dim() {
                    v[b] = interp_array(m0.comp(b), g.face_offset(b), g, p);
                }
                *o = m.column(a).dot(&v);
            });
    }
    Ok(out)
}

/// Back-and-forth error compensated pullback with a min/max limiter.
///
/// Each corrected sample is limited to the range the plain pullback could
/// produce from the stencil of `w0` around ψ(x): in 2D the stencil's min and
/// max, in 3D the interval image of the per-component stencil ranges under ℱ.
pub fn bfecc_pullback(
    w0: &VortField,
    g: &GridDesc,
    psi: &MapField,
    f: &JacobianField,
    phi: &MapField,
    t: &JacobianField,
) -> Result<TransportResult> {
    check_pair(g, w0, psi, f)?;
    check_pair(g, w0, phi, t)?;
    let blocks = sample_blocks(g, SampleSite::Vorticity);
    let n: usize = blocks.iter().map(|b| b.len()).sum();

    // Plain pullback and limiter bounds in one pass.
    let mut bar = VortField::zeros(g);
    let mut bounds = vec![(0.0, 0.0); n];
    for (k, block) in blocks.iter().enumerate() {
        let c = block.axis;
        let r = block.range();
        bar.comp_mut(k)
            .data_mut()
            .par_iter_mut()
            .zip(bounds[r.clone()].par_iter_mut())
            .zip(psi.points()[r.clone()].par_iter().zip(f.matrices()[r].par_iter()))
            .for_each(|((o, bd), (p, m))| {
                let (v, lo, hi) = vorticity_with_bounds(w0, g, p);
                let row = m.row(c);
                *o = row.dot(&v.transpose());
                let (mut a, mut b) = (0.0, 0.0);
                for d in 0..3 {
                    let (x, y) = (row[d] * lo[d], row[d] * hi[d]);
                    a += x.min(y);
                    b += x.max(y);
                }
                *bd = (a, b);
            });
    }

    let back = transform_line(&bar, g, phi.points(), t.matrices());
    let mut err = back;
    for k in 0..err.slots() {
        for (e, w) in err.comp_mut(k).data_mut().iter_mut().zip(w0.comp(k).data()) {
            *e = 0.5 * (*e - w);
        }
    }
    let err_bar = transform_line(&err, g, psi.points(), f.matrices());

    let mut out = bar;
    let mut clamped = vec![false; n];
    for (k, block) in blocks.iter().enumerate() {
        let r = block.range();
        for ((o, e), (flag, &(lo, hi))) in out
            .comp_mut(k)
            .data_mut()
            .iter_mut()
            .zip(err_bar.comp(k).data())
            .zip(clamped[r.clone()].iter_mut().zip(&bounds[r]))
        {
            let v = *o - e;
            if v < lo {
                *o = lo;
                *flag = true;
            } else if v > hi {
                *o = hi;
                *flag = true;
            } else {
                *o = v;
            }
        }
    }
    Ok(TransportResult { vorticity: out, clamped })
}

/// One RK4 step of the backward map and Jacobian from the identity.
pub fn one_step_backward_maps(u: &FaceField, g: &GridDesc, dt: f64) -> Result<(MapField, JacobianField)> {
    let s = VelocitySampler::new(u, g)?;
    let (mut psi, mut f) = reset_maps(g);
    march(&s, &mut psi, &mut f, -dt)?;
    Ok((psi, f))
}

/// Semi-Lagrangian vorticity advection: single-step backward trace and pullback.
pub fn semi_lagrangian_vorticity(w: &VortField, u: &FaceField, g: &GridDesc, dt: f64) -> Result<VortField> {
    if !(dt > 0.0) {
        return Err(Error::contract(format!("advection step must be positive, got {dt}")));
    }
    let (psi, f) = one_step_backward_maps(u, g, dt)?;
    pullback_line(w, g, &psi, &f)
}

/// Error-compensated advection over a single step, without long-range maps.
pub fn bfecc_vorticity_step(w: &VortField, u: &FaceField, g: &GridDesc, dt: f64) -> Result<TransportResult> {
    if !(dt > 0.0) {
        return Err(Error::contract(format!("advection step must be positive, got {dt}")));
    }
    let s = VelocitySampler::new(u, g)?;
    let (mut psi, mut f) = reset_maps(g);
    march(&s, &mut psi, &mut f, -dt)?;
    let (mut phi, mut t) = reset_maps(g);
    march(&s, &mut phi, &mut t, dt)?;
    bfecc_pullback(w, g, &psi, &f, &phi, &t)
}

/// Identity maps at face samples, for surface-element experiments.
pub fn reset_face_maps(g: &GridDesc) -> (MapField, JacobianField) {
    reset_maps_at(g, SampleSite::Faces)
}

//! Flow maps and their Jacobians, sampled at fixed grid locations and marched
//! with a joint fourth-order Runge-Kutta scheme.

use rayon::prelude::*;

use crate::grid::{FaceField, GridDesc, Mat3, Vec3, VelocitySampler};
use crate::{Error, Result};

/// Where a map field is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleSite {
    /// Vorticity locations, slot by slot.
    Vorticity,
    /// Face centers, axis by axis.
    Faces,
}

/// One contiguous block of samples sharing an array layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleBlock {
    pub axis: usize,
    pub shape: [usize; 3],
    pub offset: [f64; 3],
    pub start: usize,
}

impl SampleBlock {
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len()
    }
}

pub fn sample_blocks(g: &GridDesc, site: SampleSite) -> Vec<SampleBlock> {
    let mut start = 0;
    let mut blocks = Vec::new();
    let mut push = |axis: usize, shape: [usize; 3], offset: [f64; 3]| {
        blocks.push(SampleBlock { axis, shape, offset, start });
        start += shape[0] * shape[1] * shape[2];
    };
    match site {
        SampleSite::Vorticity => {
            for &c in g.vort_axes() {
                push(c, g.vort_shape(c), g.vort_offset(c));
            }
        }
        SampleSite::Faces => {
            for a in 0..g.dim() {
                push(a, g.face_shape(a), g.face_offset(a));
            }
        }
    }
    blocks
}

pub fn sample_positions(g: &GridDesc, site: SampleSite) -> Vec<Vec3> {
    let mut out = Vec::new();
    for b in sample_blocks(g, site) {
        out.extend(crate::grid::index_iter(b.shape).map(|idx| g.position(idx, b.offset)));
    }
    out
}

/// A position per sample: φ (forward map) or ψ (backward map).
#[derive(Clone, Debug, PartialEq)]
pub struct MapField {
    site: SampleSite,
    points: Vec<Vec3>,
}

/// A matrix per sample: ℱ (forward Jacobian) or 𝒯 (backward Jacobian).
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianField {
    site: SampleSite,
    mats: Vec<Mat3>,
}

impl MapField {
    pub fn identity(g: &GridDesc, site: SampleSite) -> Self {
        Self { site, points: sample_positions(g, site) }
    }

    pub fn from_points(g: &GridDesc, site: SampleSite, points: Vec<Vec3>) -> Result<Self> {
        let n = sample_positions(g, site).len();
        if points.len() != n {
            return Err(Error::shape(format!("map has {} samples, grid layout has {n}", points.len())));
        }
        Ok(Self { site, points })
    }

    pub fn site(&self) -> SampleSite {
        self.site
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [Vec3] {
        &mut self.points
    }

    pub(crate) fn check(&self, g: &GridDesc, site: SampleSite) -> Result<()> {
        check_layout(g, site, self.site, self.points.len(), "map")
    }
}

impl JacobianField {
    pub fn identity(g: &GridDesc, site: SampleSite) -> Self {
        let n = sample_positions(g, site).len();
        Self { site, mats: vec![Mat3::identity(); n] }
    }

    pub fn from_matrices(g: &GridDesc, site: SampleSite, mats: Vec<Mat3>) -> Result<Self> {
        check_layout(g, site, site, mats.len(), "jacobian")?;
        Ok(Self { site, mats })
    }

    pub fn site(&self) -> SampleSite {
        self.site
    }

    pub fn matrices(&self) -> &[Mat3] {
        &self.mats
    }

    pub fn matrices_mut(&mut self) -> &mut [Mat3] {
        &mut self.mats
    }

    pub(crate) fn check(&self, g: &GridDesc, site: SampleSite) -> Result<()> {
        check_layout(g, site, self.site, self.mats.len(), "jacobian")
    }
}

fn check_layout(g: &GridDesc, want: SampleSite, got: SampleSite, len: usize, what: &str) -> Result<()> {
    if want != got {
        return Err(Error::shape(format!("{what} sampled at {got:?}, expected {want:?}")));
    }
    let n: usize = sample_blocks(g, want).iter().map(|b| b.len()).sum();
    if len != n {
        return Err(Error::shape(format!("{what} has {len} samples, grid layout has {n}")));
    }
    Ok(())
}

/// Identity maps at the vorticity samples.
pub fn reset_maps(g: &GridDesc) -> (MapField, JacobianField) {
    reset_maps_at(g, SampleSite::Vorticity)
}

pub fn reset_maps_at(g: &GridDesc, site: SampleSite) -> (MapField, JacobianField) {
    (MapField::identity(g, site), JacobianField::identity(g, site))
}

/// One joint RK4 step of positions and Jacobians.
///
/// Negative `dt` marches ψ backward while accumulating ℱ; positive `dt` on
/// (φ, 𝒯) advances the forward map and its backward Jacobian.
pub fn rk4_joint_march(
    u: &FaceField,
    g: &GridDesc,
    maps: &MapField,
    jac: &JacobianField,
    dt: f64,
) -> Result<(MapField, JacobianField)> {
    let sampler = VelocitySampler::new(u, g)?;
    let mut m = maps.clone();
    let mut j = jac.clone();
    march(&sampler, &mut m, &mut j, dt)?;
    Ok((m, j))
}

/// In-place joint RK4 step with a prepared sampler.
pub fn march(sampler: &VelocitySampler, maps: &mut MapField, jac: &mut JacobianField, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::contract(format!("march step must be finite and nonzero, got {dt}")));
    }
    if maps.points.len() != jac.mats.len() || maps.site != jac.site {
        return Err(Error::shape("map and jacobian layouts differ"));
    }
    let g = sampler.grid();
    if maps.points.iter().any(|p| !p.iter().all(|v| v.is_finite()))
        || jac.mats.iter().any(|m| !m.iter().all(|v| v.is_finite()))
    {
        return Err(Error::contract("flow map holds non-finite entries"));
    }
    maps.points.par_iter_mut().zip(jac.mats.par_iter_mut()).for_each(|(p, f)| {
        let (np, nf) = rk4_sample(sampler, g, *p, *f, dt);
        *p = np;
        *f = nf;
    });
    Ok(())
}

#[inline]
fn rk4_sample(s: &VelocitySampler, g: &GridDesc, x: Vec3, f: Mat3, dt: f64) -> (Vec3, Mat3) {
    let (u1, g1) = s.sample(&x);
    let k1 = f * g1;
    let x1 = g.clamp(&(x + 0.5 * dt * u1));
    let f1 = f - 0.5 * dt * k1;

    let (u2, g2) = s.sample(&x1);
    let k2 = f1 * g2;
    let x2 = g.clamp(&(x + 0.5 * dt * u2));
    let f2 = f - 0.5 * dt * k2;

    let (u3, g3) = s.sample(&x2);
    let k3 = f2 * g3;
    let x3 = g.clamp(&(x + dt * u3));
    let f3 = f - dt * k3;

    let (u4, g4) = s.sample(&x3);
    let k4 = f3 * g4;

    let xn = g.clamp(&(x + dt / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4)));
    let fnext = f - dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    (xn, fnext)
}

/// Midpoint velocities and step sizes since the last reinitialization.
#[derive(Clone, Debug, Default)]
pub struct VelocityBuffer {
    samplers: Vec<VelocitySampler>,
    dts: Vec<f64>,
}

impl VelocityBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, u: &FaceField, g: &GridDesc, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::contract(format!("buffered step must be positive, got {dt}")));
        }
        self.samplers.push(VelocitySampler::new(u, g)?);
        self.dts.push(dt);
        Ok(())
    }

    pub fn pop(&mut self) {
        self.samplers.pop();
        self.dts.pop();
    }

    pub fn clear(&mut self) {
        self.samplers.clear();
        self.dts.clear();
    }

    pub fn len(&self) -> usize {
        self.dts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dts.is_empty()
    }

    pub fn dts(&self) -> &[f64] {
        &self.dts
    }

    pub fn total_time(&self) -> f64 {
        self.dts.iter().sum()
    }

    pub fn velocity(&self, l: usize) -> FaceField {
        self.samplers[l].velocity()
    }

    pub fn sampler(&self, l: usize) -> &VelocitySampler {
        &self.samplers[l]
    }
}

/// Backward map to the last reinitialization and the forward Jacobian along
/// it, rebuilt from the buffer newest entry first.
pub fn backtrace(buf: &VelocityBuffer, g: &GridDesc) -> Result<(MapField, JacobianField)> {
    backtrace_at(buf, g, SampleSite::Vorticity)
}

pub fn backtrace_at(buf: &VelocityBuffer, g: &GridDesc, site: SampleSite) -> Result<(MapField, JacobianField)> {
    if buf.is_empty() {
        return Err(Error::contract("backtrace needs a non-empty velocity buffer"));
    }
    let (mut psi, mut f) = reset_maps_at(g, site);
    for l in (0..buf.len()).rev() {
        if buf.samplers[l].grid() != g {
            return Err(Error::shape("buffered velocity lives on a different grid"));
        }
        march(&buf.samplers[l], &mut psi, &mut f, -buf.dts[l])?;
    }
    Ok((psi, f))
}

/// Advance the persistent forward map and backward Jacobian by one step.
pub fn march_forward(
    u_mid: &FaceField,
    g: &GridDesc,
    dt: f64,
    phi: &MapField,
    t: &JacobianField,
) -> Result<(MapField, JacobianField)> {
    if !(dt > 0.0) {
        return Err(Error::contract(format!("forward march needs dt > 0, got {dt}")));
    }
    rk4_joint_march(u_mid, g, phi, t, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn box2(n: usize) -> GridDesc {
        GridDesc::new(&[n, n], 2.0 / n as f64, &[-1.0, -1.0]).unwrap()
    }

    fn rotation(g: &GridDesc) -> FaceField {
        FaceField::from_velocity(g, |p| Vec3::new(-p.y, p.x, 0.0))
    }

    fn rot(theta: f64) -> Mat3 {
        let (s, c) = theta.sin_cos();
        Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    }

    #[test]
    fn reset_is_identity() {
        let g = GridDesc::new(&[4, 5, 6], 0.1, &[0.0; 3]).unwrap();
        let (m, j) = reset_maps(&g);
        let mut l = 0;
        for &c in g.vort_axes() {
            for idx in crate::grid::index_iter(g.vort_shape(c)) {
                assert_eq!(m.points()[l], g.vort_position(c, idx));
                l += 1;
            }
        }
        assert_eq!(l, m.points().len());
        assert!(j.matrices().iter().all(|f| *f == Mat3::identity()));
    }

    #[test]
    fn zero_velocity_leaves_maps_unchanged() {
        let g = box2(8);
        let (m, j) = reset_maps(&g);
        let (m2, j2) = rk4_joint_march(&FaceField::zeros(&g), &g, &m, &j, 0.1).unwrap();
        assert_eq!(m, m2);
        assert_eq!(j, j2);
    }

    #[test]
    fn constant_velocity_translates() {
        let g = box2(8);
        let c = Vec3::new(0.3, -0.2, 0.0);
        let u = FaceField::from_velocity(&g, |_| c);
        let (m, j) = reset_maps(&g);
        let (m2, j2) = rk4_joint_march(&u, &g, &m, &j, 0.5).unwrap();
        for (a, b) in m.points().iter().zip(m2.points()) {
            let expect = g.clamp(&(a + 0.5 * c));
            assert!((b - expect).norm() < 1e-14);
        }
        assert!(j2.matrices().iter().all(|f| *f == Mat3::identity()));
    }

    #[test]
    fn backward_rotation_jacobian_is_rotation() {
        let g = box2(16);
        let u = rotation(&g);
        let s = VelocitySampler::new(&u, &g).unwrap();
        let (mut m, mut j) = reset_maps(&g);
        for _ in 0..100 {
            march(&s, &mut m, &mut j, -0.01).unwrap();
        }
        // psi = R(-1) x, hence F = d phi / dX along the path = R(1).
        let expect = rot(1.0);
        for (x, (p, f)) in MapField::identity(&g, SampleSite::Vorticity)
            .points()
            .iter()
            .zip(m.points().iter().zip(j.matrices()))
        {
            if x.norm() < 0.6 {
                assert!((f - expect).abs().max() < 1e-6, "{f}");
                assert!((p - rot(-1.0) * x).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn forward_rotation_gives_inverse_rotation() {
        let g = box2(16);
        let u = rotation(&g);
        let (mut phi, mut t) = reset_maps(&g);
        for _ in 0..50 {
            let (p, tt) = march_forward(&u, &g, 0.01, &phi, &t).unwrap();
            phi = p;
            t = tt;
        }
        let expect = rot(-0.5);
        let x0 = MapField::identity(&g, SampleSite::Vorticity);
        for (x, tm) in x0.points().iter().zip(t.matrices()) {
            if x.norm() < 0.6 {
                assert!((tm - expect).abs().max() < 1e-6);
            }
        }
    }

    #[test]
    fn backtrace_of_constant_velocity() {
        let g = box2(8);
        let c = Vec3::new(0.1, 0.2, 0.0);
        let u = FaceField::from_velocity(&g, |_| c);
        let mut buf = VelocityBuffer::new();
        buf.push(&u, &g, 0.3).unwrap();
        buf.push(&u, &g, 0.2).unwrap();
        let (psi, f) = backtrace(&buf, &g).unwrap();
        let x0 = MapField::identity(&g, SampleSite::Vorticity);
        for (x, p) in x0.points().iter().zip(psi.points()) {
            let expect = g.clamp(&(x - 0.5 * c));
            if (x - 0.5 * c - expect).norm() == 0.0 {
                assert!((p - expect).norm() < 1e-14);
            }
        }
        assert!(f.matrices().iter().all(|m| *m == Mat3::identity()));
    }

    #[test]
    fn backtrace_of_rotation_sequence() {
        let g = box2(16);
        let u = rotation(&g);
        let mut buf = VelocityBuffer::new();
        for dt in [0.01, 0.02, 0.015] {
            buf.push(&u, &g, dt).unwrap();
        }
        let (_, f) = backtrace(&buf, &g).unwrap();
        let x0 = MapField::identity(&g, SampleSite::Vorticity);
        for (x, m) in x0.points().iter().zip(f.matrices()) {
            if x.norm() < 0.6 {
                assert!((m - rot(0.045)).abs().max() < 1e-6);
            }
        }
    }

    #[test]
    fn single_entry_backtrace_equals_one_backward_march() {
        let g = box2(8);
        let u = FaceField::from_velocity(&g, |p| Vec3::new(p.y * p.y, (3.0 * p.x).sin(), 0.0));
        let mut buf = VelocityBuffer::new();
        buf.push(&u, &g, 0.07).unwrap();
        let (psi, f) = backtrace(&buf, &g).unwrap();
        let (m0, j0) = reset_maps(&g);
        let (psi2, f2) = rk4_joint_march(&u, &g, &m0, &j0, -0.07).unwrap();
        assert_eq!(psi, psi2);
        assert_eq!(f, f2);
    }

    #[test]
    fn empty_buffer_and_bad_steps_are_rejected() {
        let g = box2(8);
        assert!(backtrace(&VelocityBuffer::new(), &g).is_err());
        let mut buf = VelocityBuffer::new();
        assert!(buf.push(&FaceField::zeros(&g), &g, 0.0).is_err());
        let (m, j) = reset_maps(&g);
        assert!(march_forward(&FaceField::zeros(&g), &g, -0.1, &m, &j).is_err());
        let mut bad = m.clone();
        bad.points_mut()[0].x = f64::NAN;
        assert!(rk4_joint_march(&FaceField::zeros(&g), &g, &bad, &j, 0.1).is_err());
    }

    #[test]
    fn buffer_time_bookkeeping() {
        let g = box2(8);
        let mut buf = VelocityBuffer::new();
        let dts = [0.1, 0.2, 0.05];
        for dt in dts {
            buf.push(&FaceField::zeros(&g), &g, dt).unwrap();
        }
        assert_eq!(buf.len(), 3);
        assert!((buf.total_time() - 0.35).abs() < 1e-12);
        buf.pop();
        assert_eq!(buf.dts(), &dts[..2]);
        buf.clear();
        assert!(buf.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        // Incompressible 2D cellular flow: det F stays near one.
        #[test]
        fn jacobian_determinant_stays_near_one(amp in 0.2f64..1.0, steps in 1usize..6) {
            let g = GridDesc::new(&[32, 32], 1.0 / 32.0, &[0.0, 0.0]).unwrap();
            let pi = std::f64::consts::PI;
            let u = FaceField::from_velocity(&g, |p| {
                Vec3::new(amp * (pi * p.x).sin() * (pi * p.y).cos(), -amp * (pi * p.x).cos() * (pi * p.y).sin(), 0.0)
            });
            let s = VelocitySampler::new(&u, &g).unwrap();
            let (mut m, mut j) = reset_maps(&g);
            for _ in 0..steps {
                march(&s, &mut m, &mut j, -0.5 / 32.0 / amp).unwrap();
            }
            for f in j.matrices() {
                prop_assert!((f.determinant() - 1.0).abs() < 0.05);
            }
        }
    }
}

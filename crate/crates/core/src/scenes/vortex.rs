//! Analytic vorticity profiles.

use crate::grid::{GridDesc, Vec3, VortField};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum VortexPrimitive {
    /// 2D Gaussian with circulation `strength` and e-folding radius `radius`.
    Gaussian { center: Vec3, strength: f64, radius: f64 },
    /// 2D Taylor vortex with velocity scale `strength`.
    Taylor { center: Vec3, strength: f64, radius: f64 },
    /// 3D ring travelling along `normal` for positive strength.
    Ring { center: Vec3, normal: Vec3, major: f64, core: f64, strength: f64 },
    /// Gaussian tube around a closed polyline, integrated along the curve.
    Tube { points: Vec<Vec3>, core: f64, strength: f64 },
}

impl VortexPrimitive {
    pub fn dim(&self) -> usize {
        match self {
            VortexPrimitive::Gaussian { .. } | VortexPrimitive::Taylor { .. } => 2,
            _ => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            VortexPrimitive::Gaussian { radius, strength, .. } | VortexPrimitive::Taylor { radius, strength, .. } => {
                *radius > 0.0 && strength.is_finite()
            }
            VortexPrimitive::Ring { normal, major, core, strength, .. } => {
                *core > 0.0 && major > core && normal.norm() > 0.0 && strength.is_finite()
            }
            VortexPrimitive::Tube { points, core, strength } => points.len() >= 3 && *core > 0.0 && strength.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!("invalid vortex primitive {self:?}")))
        }
    }

    /// Vorticity vector at `p`; 2D primitives set only z.
    pub fn at(&self, p: &Vec3) -> Vec3 {
        match self {
            VortexPrimitive::Gaussian { center, strength, radius } => {
                let r2 = (p.x - center.x).powi(2) + (p.y - center.y).powi(2);
                Vec3::new(0.0, 0.0, gaussian_2d(*strength, *radius, r2))
            }
            VortexPrimitive::Taylor { center, strength, radius } => {
                let r = ((p.x - center.x).powi(2) + (p.y - center.y).powi(2)).sqrt();
                Vec3::new(0.0, 0.0, taylor_vortex(*strength, *radius)(r))
            }
            VortexPrimitive::Ring { center, normal, major, core, strength } => {
                let n = normal.normalize();
                let r = p - center;
                let z = r.dot(&n);
                let radial = r - z * n;
                let rho = radial.norm();
                if rho == 0.0 {
                    return Vec3::zeros();
                }
                let d2 = (rho - major).powi(2) + z * z;
                let mag = strength / (std::f64::consts::PI * core * core) * (-d2 / (core * core)).exp();
                mag * n.cross(&(radial / rho))
            }
            VortexPrimitive::Tube { points, core, strength } => {
                let a2 = core * core;
                let cutoff = 25.0 * a2;
                // 3D-normalized kernel: integrating along the curve leaves the 2D
                // Gaussian of the ring profile across the tube.
                let scale = strength / (std::f64::consts::PI.powf(1.5) * a2 * core);
                let mut w = Vec3::zeros();
                for (i, c0) in points.iter().enumerate() {
                    let c1 = &points[(i + 1) % points.len()];
                    let mid = 0.5 * (c0 + c1);
                    let r2 = (p - mid).norm_squared();
                    if r2 < cutoff {
                        w += scale * (-r2 / a2).exp() * (c1 - c0);
                    }
                }
                w
            }
        }
    }
}

/// `Γ/(πa²)·exp(−r²/a²)`.
pub fn gaussian_2d(strength: f64, radius: f64, r2: f64) -> f64 {
    strength / (std::f64::consts::PI * radius * radius) * (-r2 / (radius * radius)).exp()
}

/// Taylor vortex profile `ω(r) = (U/a)(2 − r²/a²) exp((1 − r²/a²)/2)`.
pub fn taylor_vortex(strength: f64, radius: f64) -> impl Fn(f64) -> f64 {
    move |r| {
        let s = r * r / (radius * radius);
        strength / radius * (2.0 - s) * ((1.0 - s) / 2.0).exp()
    }
}

/// Ring of `n` points on a trefoil knot scaled by `scale` around `center`.
pub fn trefoil_curve(center: Vec3, scale: f64, n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            center
                + scale
                    * Vec3::new(t.sin() + 2.0 * (2.0 * t).sin(), t.cos() - 2.0 * (2.0 * t).cos(), -(3.0 * t).sin())
        })
        .collect()
}

/// Superpose `prims` on the vorticity samples of `g`.
pub fn rasterize(prims: &[VortexPrimitive], g: &GridDesc) -> Result<VortField> {
    for p in prims {
        p.validate()?;
        if p.dim() != g.dim() {
            return Err(Error::Dimension { expected: p.dim(), actual: g.dim() });
        }
    }
    Ok(VortField::from_vector(g, |x| prims.iter().map(|p| p.at(&x)).sum()))
}

/// Whether a primitive's support (three core radii) lies inside the domain.
pub fn fits_in(prim: &VortexPrimitive, g: &GridDesc) -> bool {
    let (lo, hi) = (g.lower(), g.upper());
    let inside = |p: &Vec3, margin: f64| (0..g.dim()).all(|d| p[d] - margin >= lo[d] && p[d] + margin <= hi[d]);
    match prim {
        VortexPrimitive::Gaussian { center, radius, .. } | VortexPrimitive::Taylor { center, radius, .. } => {
            inside(center, 3.0 * radius)
        }
        VortexPrimitive::Ring { center, major, core, .. } => inside(center, major + 3.0 * core),
        VortexPrimitive::Tube { points, core, .. } => points.iter().all(|p| inside(p, 3.0 * core)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::vorticity_divergence;

    #[test]
    fn taylor_closed_forms() {
        let f = taylor_vortex(1.5, 0.3);
        assert!((f(0.0) - 2.0 * 1.5 / 0.3 * 0.5f64.exp()).abs() < 1e-12);
        assert!(f(0.3 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn taylor_circulation_matches_quadrature() {
        // The profile is the curl of u_θ(r) = U (r/a) exp((1 − r²/a²)/2), so the
        // circulation inside radius R is 2πR·u_θ(R).
        let (u, a) = (1.0, 0.3);
        let f = taylor_vortex(u, a);
        for big_r in [0.2, 0.5, 3.0] {
            let n = 20000;
            let h = big_r / n as f64;
            let mut sum = 0.0;
            for i in 0..n {
                let r = (i as f64 + 0.5) * h;
                sum += 2.0 * std::f64::consts::PI * r * f(r) * h;
            }
            let closed = 2.0 * std::f64::consts::PI * big_r * u * (big_r / a) * ((1.0 - big_r * big_r / (a * a)) / 2.0).exp();
            assert!((sum - closed).abs() < 1e-6 * (1.0 + closed.abs()), "R={big_r}: {sum} vs {closed}");
        }
    }

    #[test]
    fn gaussian_integrates_to_its_circulation() {
        let g = GridDesc::new(&[128, 128], 1.0 / 128.0, &[0.0, 0.0]).unwrap();
        let v = VortexPrimitive::Gaussian { center: Vec3::new(0.5, 0.5, 0.0), strength: 0.7, radius: 0.05 };
        let w = rasterize(&[v], &g).unwrap();
        let total: f64 = w.flat().sum::<f64>() * g.dx() * g.dx();
        assert!((total - 0.7).abs() < 1e-6);
    }

    fn ring_grid() -> GridDesc {
        GridDesc::new(&[48, 48, 48], 1.0 / 48.0, &[0.0; 3]).unwrap()
    }

    #[test]
    fn planar_ring_has_no_normal_component() {
        let g = ring_grid();
        let r = VortexPrimitive::Ring {
            center: Vec3::new(0.5, 0.5, 0.5),
            normal: Vec3::new(0.0, 0.0, 1.0),
            major: 0.2,
            core: 0.05,
            strength: 1.0,
        };
        let w = rasterize(&[r], &g).unwrap();
        assert_eq!(w.comp(2).max_abs(), 0.0);
        assert!(w.comp(0).max_abs() > 0.0);
    }

    #[test]
    fn rasterized_ring_is_nearly_solenoidal() {
        let g = ring_grid();
        let r = VortexPrimitive::Ring {
            center: Vec3::new(0.5, 0.5, 0.5),
            normal: Vec3::new(1.0, 0.0, 0.0),
            major: 0.2,
            core: 0.06,
            strength: 1.0,
        };
        let w = rasterize(&[r], &g).unwrap();
        let div = vorticity_divergence(&w, &g).unwrap();
        assert!(div.max_abs() <= 0.05 * w.max_abs() / g.dx(), "{} vs {}", div.max_abs(), w.max_abs() / g.dx());
    }

    #[test]
    fn mirrored_rings_cancel() {
        let g = ring_grid();
        let make = |x: f64, nx: f64| VortexPrimitive::Ring {
            center: Vec3::new(x, 0.5, 0.5),
            normal: Vec3::new(nx, 0.0, 0.0),
            major: 0.15,
            core: 0.05,
            strength: 1.0,
        };
        let w = rasterize(&[make(0.3, 1.0), make(0.7, -1.0)], &g).unwrap();
        for k in 0..3 {
            let s: f64 = w.comp(k).data().iter().sum();
            assert!(s.abs() < 1e-10, "component {k}: {s}");
        }
    }

    #[test]
    fn tube_matches_ring_near_the_core() {
        let n = 512;
        let (c, big_r) = (Vec3::new(0.5, 0.5, 0.5), 0.25);
        let pts: Vec<Vec3> = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                c + big_r * Vec3::new(0.0, t.cos(), t.sin())
            })
            .collect();
        let tube = VortexPrimitive::Tube { points: pts, core: 0.03, strength: 1.0 };
        let ring = VortexPrimitive::Ring { center: c, normal: Vec3::new(1.0, 0.0, 0.0), major: big_r, core: 0.03, strength: 1.0 };
        let p = c + Vec3::new(0.01, big_r + 0.01, 0.0);
        let (a, b) = (tube.at(&p), ring.at(&p));
        assert!((a - b).norm() <= 0.05 * b.norm(), "{a:?} vs {b:?}");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let g = ring_grid();
        let v = VortexPrimitive::Gaussian { center: Vec3::zeros(), strength: 1.0, radius: 0.1 };
        assert!(rasterize(&[v], &g).is_err());
        let bad = VortexPrimitive::Ring { center: Vec3::zeros(), normal: Vec3::x(), major: 0.01, core: 0.05, strength: 1.0 };
        assert!(bad.validate().is_err());
    }
}

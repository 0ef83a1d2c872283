//! Analytic contact provider standing in for a rigid-body simulator at desk scale.

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scalar::Real;

use super::{ContactState, IndenterShape, ShapeKind};

/// Fingertip envelope: a capsule of `radius` around the axis segment
/// `z in [axial_min, axial_max]` of the fingertip frame. The sensor is wrapped
/// onto the cylindrical part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fingertip<T> {
    pub radius: T,
    pub axial_min: T,
    pub axial_max: T,
}

impl<T: Real> Default for Fingertip<T> {
    fn default() -> Self {
        Self {
            radius: T::lit(10.0),
            axial_min: T::lit(8.0),
            axial_max: T::lit(39.0),
        }
    }
}

impl<T: Real> Fingertip<T> {
    pub fn with_radius(radius: T) -> Self {
        Self {
            radius,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > T::zero()) || !(self.axial_max >= self.axial_min) {
            return Err(Error::Config("fingertip needs a positive radius and axial_max >= axial_min".into()));
        }
        Ok(())
    }

    fn core(&self) -> (Vec3<T>, Vec3<T>) {
        (
            Vec3::new(T::zero(), T::zero(), self.axial_min),
            Vec3::new(T::zero(), T::zero(), self.axial_max),
        )
    }

    /// Closest point of the core segment to `p`.
    pub fn core_point(&self, p: &Vec3<T>) -> Vec3<T> {
        Vec3::new(T::zero(), T::zero(), p.z.max(self.axial_min).min(self.axial_max))
    }

    /// Point on the fingertip surface closest to `p`, and the outward normal there.
    /// `None` when `p` lies on the core segment.
    pub fn surface_point(&self, p: &Vec3<T>) -> Option<(Vec3<T>, Vec3<T>)> {
        let q = self.core_point(p);
        let n = (*p - q).try_normalize(T::epsilon())?;
        Some((q + n * self.radius, n))
    }
}

/// Fingertip plus one indenter.
#[derive(Debug, Clone)]
pub struct Scene<T> {
    pub fingertip: Fingertip<T>,
    pub indenter: IndenterShape<T>,
}

/// Closest points between segments `[p1, q1]` and `[p2, q2]`.
pub fn closest_points_on_segments<T: Real>(
    p1: Vec3<T>,
    q1: Vec3<T>,
    p2: Vec3<T>,
    q2: Vec3<T>,
) -> (Vec3<T>, Vec3<T>) {
    let (zero, one) = (T::zero(), T::one());
    let clamp = |x: T| x.max(zero).min(one);
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let tiny = T::epsilon();
    let (s, t) = if a <= tiny && e <= tiny {
        (zero, zero)
    } else if a <= tiny {
        (zero, clamp(f / e))
    } else {
        let c = d1.dot(&r);
        if e <= tiny {
            (clamp(-c / a), zero)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > tiny * a * e { clamp((b * f - c * e) / denom) } else { zero };
            let mut t = (b * s + f) / e;
            if t < zero {
                t = zero;
                s = clamp(-c / a);
            } else if t > one {
                t = one;
                s = clamp((b - c) / a);
            }
            (s, t)
        }
    };
    (p1 + d1 * s, p2 + d2 * t)
}

/// Contact normal and force for an indenter touching the fingertip.
///
/// * Sphere: normal from the closest core-segment point to the sphere center.
/// * Cylinder: normal along the shortest connection between the fingertip core
///   segment and the cylinder axis segment (the common perpendicular when the
///   axes cross; radial when they are parallel).
/// * Mesh: normal from the core segment to the vertex closest to it.
///
/// Returns `Ok(None)` when the indenter does not touch the fingertip envelope.
pub fn analytic_contact<T: Real>(scene: &Scene<T>, commanded_force: T) -> Result<Option<ContactState<T>>> {
    scene.fingertip.validate()?;
    if !(commanded_force >= T::zero()) || !commanded_force.is_finite() {
        return Err(Error::Inconsistent(format!(
            "commanded force must be finite and non-negative, got {commanded_force}"
        )));
    }
    let tip = &scene.fingertip;
    let (a0, a1) = tip.core();
    let touch_tol = T::lit(1e-9);
    let indenter = &scene.indenter;
    let pose = indenter.pose();

    let (from, to, reach) = match indenter.kind() {
        ShapeKind::Sphere { radius } => {
            let c = pose.translation;
            (tip.core_point(&c), c, tip.radius + *radius)
        }
        ShapeKind::Cylinder {
            radius,
            axis,
            half_length,
        } => {
            let c = pose.translation;
            let a = pose.transform_vector(axis);
            let (qf, qb) = closest_points_on_segments(a0, a1, c - a * *half_length, c + a * *half_length);
            (qf, qb, tip.radius + *radius)
        }
        ShapeKind::TriangleMesh(mesh) => {
            let nearest = mesh
                .vertices()
                .iter()
                .map(|v| pose.transform_point(v))
                .min_by(|a, b| {
                    let da = (*a - tip.core_point(a)).norm_squared();
                    let db = (*b - tip.core_point(b)).norm_squared();
                    da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
                })
                .ok_or_else(|| Error::Mesh("mesh has no vertices".into()))?;
            (tip.core_point(&nearest), nearest, tip.radius)
        }
    };
    let gap = to - from;
    if gap.norm() > reach + touch_tol {
        return Ok(None);
    }
    let normal = match gap.try_normalize(T::lit(1e-12)) {
        Some(n) => n,
        None => degenerate_normal(scene, &from)?,
    };
    Ok(Some(ContactState::new(normal, commanded_force, indenter.clone())?))
}

/// Normal when the shortest connection vanishes: the indenter reference passes
/// through the fingertip core.
fn degenerate_normal<T: Real>(scene: &Scene<T>, on_core: &Vec3<T>) -> Result<Vec3<T>> {
    let indenter = &scene.indenter;
    let center = indenter.pose().translation;
    if let ShapeKind::Cylinder { axis, .. } = indenter.kind() {
        let a = indenter.pose().transform_vector(axis);
        if let Some(n) = Vec3::z_axis().cross(&a).try_normalize(T::lit(1e-12)) {
            let radial = center - *on_core;
            return Ok(if n.dot(&radial) < T::zero() { -n } else { n });
        }
    }
    Err(Error::Inconsistent(
        "indenter reference lies on the fingertip axis; contact normal undefined".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tip() -> Fingertip<f64> {
        Fingertip {
            radius: 10.0,
            axial_min: 0.0,
            axial_max: 30.0,
        }
    }

    #[test]
    fn sphere_above_surface_gives_radial_normal() {
        let dir = Vec3::new(1.0, 1.0, 0.0).normalize();
        let center = dir * 15.5 + Vec3::new(0.0, 0.0, 12.0);
        let scene = Scene {
            fingertip: tip(),
            indenter: IndenterShape::sphere(6.0, center).unwrap(),
        };
        let c = analytic_contact(&scene, 1.5).unwrap().unwrap();
        assert!((c.normal - dir).norm() < 1e-12);
        assert_eq!(c.normal_force, 1.5);
    }

    #[test]
    fn sphere_out_of_reach_is_no_contact() {
        let scene = Scene {
            fingertip: tip(),
            indenter: IndenterShape::sphere(6.0, Vec3::new(16.5, 0.0, 10.0)).unwrap(),
        };
        assert!(analytic_contact(&scene, 1.0).unwrap().is_none());
        assert!(analytic_contact(&scene, -1.0).is_err());
    }

    #[test]
    fn sphere_beyond_the_cylinder_end_tilts_normal() {
        // center 3 mm past the end of the core segment
        let center = Vec3::new(14.0, 0.0, 33.0);
        let scene = Scene {
            fingertip: tip(),
            indenter: IndenterShape::sphere(6.0, center).unwrap(),
        };
        let c = analytic_contact(&scene, 1.0).unwrap().unwrap();
        assert!(c.normal.z > 0.1, "normal should tilt axially: {:?}", c.normal);
        assert!(c.normal.y.abs() < 1e-12);

        // oracle: densest sampled closest point on the capsule surface
        let t = tip();
        let mut best = (f64::INFINITY, Vec3::zeros());
        for iz in 0..=400 {
            let z = t.axial_min + (t.axial_max - t.axial_min) * iz as f64 / 400.0;
            for ia in 0..720 {
                let a = ia as f64 * std::f64::consts::TAU / 720.0;
                let p = Vec3::new(10.0 * a.cos(), 10.0 * a.sin(), z);
                let d = (center - p).norm();
                if d < best.0 {
                    best = (d, p);
                }
            }
        }
        for it in 0..=900 {
            let polar = it as f64 / 900.0 * std::f64::consts::FRAC_PI_2;
            for ia in 0..720 {
                let a = ia as f64 * std::f64::consts::TAU / 720.0;
                let p = Vec3::new(
                    10.0 * polar.sin() * a.cos(),
                    10.0 * polar.sin() * a.sin(),
                    t.axial_max + 10.0 * polar.cos(),
                );
                let d = (center - p).norm();
                if d < best.0 {
                    best = (d, p);
                }
            }
        }
        let oracle = (center - best.1).normalize();
        assert!((oracle - c.normal).norm() < 5e-3, "{oracle:?} vs {:?}", c.normal);
    }

    #[test]
    fn parallel_bolt_gives_radial_normal() {
        let scene = Scene {
            fingertip: tip(),
            indenter: IndenterShape::cylinder(6.0, Vec3::z_axis(), 10.0, Vec3::new(0.0, 15.8, 15.0)).unwrap(),
        };
        let c = analytic_contact(&scene, 2.0).unwrap().unwrap();
        assert!((c.normal - Vec3::y_axis()).norm() < 1e-12);
    }

    #[test]
    fn crossing_bolt_uses_common_perpendicular() {
        // bolt axis along y, passing above the fingertip at x = 15.5
        let scene = Scene {
            fingertip: tip(),
            indenter: IndenterShape::cylinder(6.0, Vec3::new(0.0, 1.0, 1.0), 20.0, Vec3::new(15.5, 0.0, 15.0))
                .unwrap(),
        };
        let c = analytic_contact(&scene, 1.0).unwrap().unwrap();
        let axis = Vec3::new(0.0, 1.0, 1.0_f64).normalize();
        let perp = Vec3::z_axis().cross(&axis).normalize();
        assert!((c.normal.dot(&perp).abs() - 1.0).abs() < 1e-12);
        assert!(c.normal.x > 0.0);
    }

    #[test]
    fn segment_closest_points() {
        let (a, b) = closest_points_on_segments(
            Vec3::new(0.0, 0.0, 0.0_f64),
            Vec3::new(0.0, 0.0, 10.0),
            Vec3::new(5.0, -3.0, 4.0),
            Vec3::new(5.0, 3.0, 4.0),
        );
        assert!((a - Vec3::new(0.0, 0.0, 4.0)).norm() < 1e-12);
        assert!((b - Vec3::new(5.0, 0.0, 4.0)).norm() < 1e-12);
        // parallel segments
        let (a, b) = closest_points_on_segments(
            Vec3::new(0.0, 0.0, 0.0_f64),
            Vec3::new(0.0, 0.0, 10.0),
            Vec3::new(2.0, 0.0, 12.0),
            Vec3::new(2.0, 0.0, 20.0),
        );
        assert!((a - Vec3::new(0.0, 0.0, 10.0)).norm() < 1e-12);
        assert!((b - Vec3::new(2.0, 0.0, 12.0)).norm() < 1e-12);
    }
}

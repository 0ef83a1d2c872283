//! Indenter shapes, ray-distance queries and the analytic contact provider.
//!
//! The ray cast moves every tactile point back along the contact normal by a
//! shift `D` and measures the distance `d_i` to the first indenter surface
//! along `+n_c`. Only `d_i - min d` enters the penetration model, so results
//! are stored relative to the deepest hit. Ray parameters are computed from
//! the unshifted tactile point, which makes every downstream quantity
//! bit-identical for any valid `D`.

mod analytic;
mod mesh;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Pose, Vec3};
use crate::scalar::Real;
use crate::sensor_geometry::TactilePointSet;

pub use analytic::{analytic_contact, closest_points_on_segments, Fingertip, Scene};
pub use mesh::TriangleMesh;

/// Ray-surface intersection in some frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit<T> {
    /// Ray parameter of the hit (distance for a unit direction).
    pub t: T,
    /// Outward surface normal at the hit.
    pub normal: Vec3<T>,
    /// `true` when the ray enters the surface (`normal . dir < 0`).
    pub front: bool,
}

/// Geometry of an indenter in its local frame.
#[derive(Debug, Clone)]
pub enum ShapeKind<T> {
    Sphere {
        radius: T,
    },
    /// Capped cylinder centered on the local origin.
    Cylinder {
        radius: T,
        axis: Vec3<T>,
        half_length: T,
    },
    TriangleMesh(Arc<TriangleMesh<T>>),
}

/// Rigid indenter: a shape and its pose in the fingertip frame.
#[derive(Debug, Clone)]
pub struct IndenterShape<T> {
    kind: ShapeKind<T>,
    pose: Pose<T>,
    // pose composed with the cylinder axis alignment, so intersection runs along local z
    frame: Pose<T>,
}

impl<T: Real> IndenterShape<T> {
    pub fn sphere(radius: T, center: Vec3<T>) -> Result<Self> {
        Self::new(ShapeKind::Sphere { radius }, Pose::from_translation(center))
    }

    pub fn cylinder(radius: T, axis: Vec3<T>, half_length: T, center: Vec3<T>) -> Result<Self> {
        Self::new(
            ShapeKind::Cylinder {
                radius,
                axis,
                half_length,
            },
            Pose::from_translation(center),
        )
    }

    pub fn mesh(mesh: Arc<TriangleMesh<T>>, pose: Pose<T>) -> Result<Self> {
        Self::new(ShapeKind::TriangleMesh(mesh), pose)
    }

    pub fn new(kind: ShapeKind<T>, pose: Pose<T>) -> Result<Self> {
        let frame = match &kind {
            ShapeKind::Sphere { radius } => {
                if !(*radius > T::zero()) {
                    return Err(Error::Config(format!("sphere radius must be positive, got {radius}")));
                }
                pose
            }
            ShapeKind::Cylinder {
                radius,
                axis,
                half_length,
            } => {
                if !(*radius > T::zero()) || !(*half_length > T::zero()) {
                    return Err(Error::Config("cylinder radius and half length must be positive".into()));
                }
                let axis = axis
                    .try_normalize(T::epsilon())
                    .ok_or_else(|| Error::Config("cylinder axis must be nonzero".into()))?;
                Pose::new(pose.rotation * Mat3::z_to(axis), pose.translation)
            }
            ShapeKind::TriangleMesh(_) => pose,
        };
        let kind = match kind {
            ShapeKind::Cylinder {
                radius,
                axis,
                half_length,
            } => ShapeKind::Cylinder {
                radius,
                axis: axis.normalize(),
                half_length,
            },
            other => other,
        };
        Ok(Self { kind, pose, frame })
    }

    pub fn kind(&self) -> &ShapeKind<T> {
        &self.kind
    }

    pub fn pose(&self) -> &Pose<T> {
        &self.pose
    }

    /// Same shape moved by `delta` in the fingertip frame.
    pub fn translated(&self, delta: Vec3<T>) -> Self {
        Self {
            kind: self.kind.clone(),
            pose: self.pose.translated(delta),
            frame: self.frame.translated(delta),
        }
    }

    /// Bounding sphere `(center, radius)` in the fingertip frame.
    pub fn bounding_sphere(&self) -> (Vec3<T>, T) {
        match &self.kind {
            ShapeKind::Sphere { radius } => (self.frame.translation, *radius),
            ShapeKind::Cylinder {
                radius,
                half_length,
                ..
            } => (
                self.frame.translation,
                (*radius * *radius + *half_length * *half_length).sqrt(),
            ),
            ShapeKind::TriangleMesh(m) => {
                let (c, r) = m.bounding_sphere();
                (self.frame.transform_point(&c), r)
            }
        }
    }

    /// First surface crossing along `origin + t dir` with `t >= t_min`, in
    /// the fingertip frame. `dir` must be unit length.
    pub fn first_hit(&self, origin: &Vec3<T>, dir: &Vec3<T>, t_min: T) -> Option<RayHit<T>> {
        let o = self.frame.inverse_transform_point(origin);
        let d = self.frame.inverse_transform_vector(dir);
        let local = match &self.kind {
            ShapeKind::Sphere { radius } => sphere_hit(*radius, &o, &d, t_min),
            ShapeKind::Cylinder {
                radius,
                half_length,
                ..
            } => cylinder_hit(*radius, *half_length, &o, &d, t_min),
            ShapeKind::TriangleMesh(m) => m.first_hit(&o, &d, t_min),
        }?;
        Some(RayHit {
            normal: self.frame.transform_vector(&local.normal),
            ..local
        })
    }
}

/// Ray against a sphere centered at the origin.
fn sphere_hit<T: Real>(radius: T, o: &Vec3<T>, d: &Vec3<T>, t_min: T) -> Option<RayHit<T>> {
    let b = o.dot(d);
    let c = o.norm_squared() - radius * radius;
    let disc = b * b - c;
    if disc < T::zero() {
        return None;
    }
    let sq = disc.sqrt();
    let (t_in, t_out) = (-b - sq, -b + sq);
    let at = |t: T, front: bool| RayHit {
        t,
        normal: (*o + *d * t) / radius,
        front,
    };
    if t_in >= t_min {
        Some(at(t_in, true))
    } else if t_out >= t_min {
        Some(at(t_out, false))
    } else {
        None
    }
}

/// Ray against a capped cylinder along local `z`.
fn cylinder_hit<T: Real>(radius: T, half: T, o: &Vec3<T>, d: &Vec3<T>, t_min: T) -> Option<RayHit<T>> {
    let zero = T::zero();
    let (inf, ninf) = (T::infinity(), T::neg_infinity());
    let a = d.x * d.x + d.y * d.y;
    let c = o.x * o.x + o.y * o.y - radius * radius;
    let (side_in, side_out) = if a <= T::epsilon() {
        if c > zero {
            return None;
        }
        (ninf, inf)
    } else {
        let b = o.x * d.x + o.y * d.y;
        let disc = b * b - a * c;
        if disc < zero {
            return None;
        }
        let sq = disc.sqrt();
        ((-b - sq) / a, (-b + sq) / a)
    };
    let (cap_in, cap_out) = if d.z.abs() <= T::epsilon() {
        if o.z.abs() > half {
            return None;
        }
        (ninf, inf)
    } else {
        let t1 = (-half - o.z) / d.z;
        let t2 = (half - o.z) / d.z;
        (t1.min(t2), t1.max(t2))
    };
    let t_in = side_in.max(cap_in);
    let t_out = side_out.min(cap_out);
    if t_in > t_out {
        return None;
    }
    let normal_at = |t: T, entering: bool| {
        let on_side = if entering { side_in >= cap_in } else { side_out <= cap_out };
        if on_side {
            let p = *o + *d * t;
            Vec3::new(p.x / radius, p.y / radius, zero)
        } else {
            let s = if (d.z > zero) == entering { -T::one() } else { T::one() };
            Vec3::new(zero, zero, s)
        }
    };
    if t_in >= t_min {
        Some(RayHit {
            t: t_in,
            normal: normal_at(t_in, true),
            front: true,
        })
    } else if t_out >= t_min {
        Some(RayHit {
            t: t_out,
            normal: normal_at(t_out, false),
            front: false,
        })
    } else {
        None
    }
}

/// Contact handed over by the physics layer.
#[derive(Debug, Clone)]
pub struct ContactState<T> {
    /// Unit contact normal, pointing from the fingertip into the indenter.
    pub normal: Vec3<T>,
    /// Normal force in N.
    pub normal_force: T,
    pub indenter: IndenterShape<T>,
}

impl<T: Real> ContactState<T> {
    pub fn new(normal: Vec3<T>, normal_force: T, indenter: IndenterShape<T>) -> Result<Self> {
        let contact = Self {
            normal,
            normal_force,
            indenter,
        };
        contact.validate()?;
        Ok(contact)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.normal_force >= T::zero()) || !self.normal_force.is_finite() {
            return Err(Error::Inconsistent(format!(
                "normal force must be finite and non-negative, got {}",
                self.normal_force
            )));
        }
        if (self.normal.norm() - T::one()).abs() > T::lit(1e-6) {
            return Err(Error::Inconsistent("contact normal must be unit length".into()));
        }
        Ok(())
    }

    pub fn with_force(&self, normal_force: T) -> Self {
        Self {
            normal_force,
            ..self.clone()
        }
    }
}

/// Result of casting one ray per tactile point along the contact normal.
#[derive(Debug, Clone, PartialEq)]
pub struct RayCastResult<T> {
    gaps: Vec<T>,
    hit_normals: Vec<Vec3<T>>,
    shift: T,
    offset: T,
}

impl<T: Real> RayCastResult<T> {
    /// `d_i - delta` per point: distance behind the deepest indenter point.
    /// `+inf` for rays that miss.
    pub fn gaps(&self) -> &[T] {
        &self.gaps
    }

    /// Indenter surface normal at each hit; zero vector for misses.
    pub fn hit_normals(&self) -> &[Vec3<T>] {
        &self.hit_normals
    }

    pub fn is_hit(&self, i: usize) -> bool {
        self.gaps[i].is_finite()
    }

    /// Shift constant `D` used for the cast.
    pub fn shift(&self) -> T {
        self.shift
    }

    /// `delta = min_i d_i`.
    pub fn offset(&self) -> T {
        self.offset
    }

    /// Distance `d_i` from the shifted point to the first hit; `+inf` for misses.
    pub fn distance(&self, i: usize) -> T {
        self.gaps[i] + self.offset
    }

    pub fn distances(&self) -> impl Iterator<Item = T> + '_ {
        self.gaps.iter().map(move |&g| g + self.offset)
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn hit_count(&self) -> usize {
        self.gaps.iter().filter(|g| g.is_finite()).count()
    }
}

/// Shift that moves every tactile point out of the indenter:
/// bounding-sphere radius + farthest point from the bounding-sphere center + 1 mm.
pub fn auto_shift<T: Real>(points: &TactilePointSet<T>, indenter: &IndenterShape<T>) -> T {
    let (center, radius) = indenter.bounding_sphere();
    let far = points
        .positions()
        .iter()
        .map(|p| (*p - center).norm())
        .fold(T::zero(), T::max);
    radius + far + T::one()
}

const PARALLEL_MIN_LEN: usize = 2048;

/// Casts one ray per tactile point from `p_i - D n_c` along `+n_c`.
///
/// `shift` is `D`; `None` chooses [`auto_shift`]. Fails when a shifted point
/// starts inside the indenter (its first crossing is a back face) or when no
/// ray hits at all.
pub fn cast_rays<T: Real>(
    points: &TactilePointSet<T>,
    contact: &ContactState<T>,
    shift: Option<T>,
) -> Result<RayCastResult<T>> {
    let n = contact.normal;
    let indenter = &contact.indenter;
    let shift = shift.unwrap_or_else(|| auto_shift(points, indenter));
    if !(shift >= T::zero()) || !shift.is_finite() {
        return Err(Error::Config(format!("shift D must be finite and non-negative, got {shift}")));
    }
    let t_min = -shift;

    // t = +inf marks a miss; a back-face first crossing is flagged by a NaN t
    let cast = |p: &Vec3<T>| -> (T, Vec3<T>) {
        match indenter.first_hit(p, &n, t_min) {
            Some(hit) if hit.front => (hit.t, hit.normal),
            Some(_) => (T::nan(), Vec3::zeros()),
            None => (T::infinity(), Vec3::zeros()),
        }
    };
    let (mut gaps, hit_normals): (Vec<T>, Vec<Vec3<T>>) = if points.len() >= PARALLEL_MIN_LEN {
        points
            .positions()
            .par_iter()
            .with_min_len(PARALLEL_MIN_LEN / 2)
            .map(cast)
            .unzip()
    } else {
        points.positions().iter().map(cast).unzip()
    };
    if let Some(i) = gaps.iter().position(|t| t.is_nan()) {
        return Err(Error::ShiftTooSmall {
            shift: shift.to_f64_lossy(),
            point: i,
        });
    }
    let t_deepest = gaps.iter().copied().fold(T::infinity(), T::min);
    if !t_deepest.is_finite() {
        return Err(Error::NoContactGeometry);
    }
    for g in gaps.iter_mut() {
        *g -= t_deepest;
    }
    Ok(RayCastResult {
        gaps,
        hit_normals,
        shift,
        offset: t_deepest + shift,
    })
}

/// Local penetration `eps_i = max(eps_max - (d_i - delta), 0)`; misses give 0.
pub fn local_penetrations<T: Real>(rc: &RayCastResult<T>, eps_max: T) -> Vec<T> {
    rc.gaps.iter().map(|&g| local_penetration(g, eps_max)).collect()
}

#[inline]
pub(crate) fn local_penetration<T: Real>(gap: T, eps_max: T) -> T {
    if gap.is_finite() {
        (eps_max - gap).max(T::zero())
    } else {
        T::zero()
    }
}

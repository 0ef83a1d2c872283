//! Force equilibrium for the maximum penetration and the per-taxel response.

use serde::{Deserialize, Serialize};

use crate::contact_query::{cast_rays, local_penetration, ContactState, RayCastResult};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scalar::Real;
use crate::sensor_geometry::TactilePointSet;
use crate::tactile_image::{clip_taxel, TactileImage};

/// `1 MPa/m = 1e-3 N/mm^3`.
const MPA_PER_M_TO_N_PER_MM3: f64 = 1e-3;

/// Elasticity in MPa/m and one scale per taxel in 1/N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SkinParams<T> {
    pub elasticity: T,
    pub scales: Vec<T>,
}

impl<T: Real> SkinParams<T> {
    pub fn new(elasticity: T, scales: Vec<T>) -> Result<Self> {
        let p = Self { elasticity, scales };
        p.validate()?;
        Ok(p)
    }

    /// Same scale on every taxel.
    pub fn uniform(elasticity: T, scale: T, taxels: usize) -> Result<Self> {
        Self::new(elasticity, vec![scale; taxels])
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.elasticity > T::zero()) || !self.elasticity.is_finite() {
            return Err(Error::Config(format!("elasticity must be positive, got {}", self.elasticity)));
        }
        if let Some((j, s)) = self
            .scales
            .iter()
            .enumerate()
            .find(|(_, s)| !(**s > T::zero()) || !s.is_finite())
        {
            return Err(Error::Config(format!("scale of taxel {j} must be positive, got {s}")));
        }
        Ok(())
    }

    /// Elasticity in N/mm^3.
    pub fn elasticity_n_per_mm3(&self) -> T {
        elasticity_n_per_mm3(self.elasticity)
    }
}

impl<T: Real> Default for SkinParams<T> {
    /// Centers of the randomization ranges: 542 MPa/m and 68.5 /N.
    fn default() -> Self {
        Self {
            elasticity: T::lit(542.0),
            scales: vec![T::lit(68.5); 16],
        }
    }
}

pub fn elasticity_n_per_mm3<T: Real>(elasticity_mpa_per_m: T) -> T {
    elasticity_mpa_per_m * T::lit(MPA_PER_M_TO_N_PER_MM3)
}

/// Penetration that balances the contact force.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct PenetrationSolution<T> {
    /// Depth of the deepest indenter point, mm.
    pub eps_max: T,
    /// Per-point penetration, mm.
    pub local_eps: Vec<T>,
    /// Total force at `eps_max` minus the commanded force, N.
    pub residual_force: T,
    /// Penetrated area projected onto the contact normal, mm^2.
    pub active_area: T,
}

impl<T: Real> PenetrationSolution<T> {
    fn zero(len: usize) -> Self {
        Self {
            eps_max: T::zero(),
            local_eps: vec![T::zero(); len],
            residual_force: T::zero(),
            active_area: T::zero(),
        }
    }
}

/// Ascending line search followed by bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch<T> {
    /// Ascent step, mm.
    pub step: T,
    /// Bisection stops once the bracket is at most this wide, mm.
    pub resolution: T,
    /// Largest penetration tried, mm.
    pub cap: T,
}

impl<T: Real> Default for LineSearch<T> {
    fn default() -> Self {
        Self {
            step: T::lit(0.1),
            resolution: T::lit(0.001),
            cap: T::lit(5.0),
        }
    }
}

/// Projected area weight `a_i max(n_t . n_c, 0)` per point.
fn equilibrium_weights<'a, T: Real>(points: &'a TactilePointSet<T>, n_c: &Vec3<T>) -> impl Iterator<Item = T> + 'a {
    let n_c = *n_c;
    points
        .areas()
        .iter()
        .zip(points.normals())
        .map(move |(a, n)| *a * n.dot(&n_c).max(T::zero()))
}

fn check_len<T: Real>(rc: &RayCastResult<T>, points: &TactilePointSet<T>) -> Result<()> {
    if rc.len() != points.len() {
        return Err(Error::Inconsistent(format!(
            "ray cast has {} entries for {} points",
            rc.len(),
            points.len()
        )));
    }
    Ok(())
}

/// Total normal force in N for a given maximum penetration, summed over every
/// tactile point (taxels, gaps and margin).
pub fn total_normal_force<T: Real>(
    rc: &RayCastResult<T>,
    points: &TactilePointSet<T>,
    n_c: &Vec3<T>,
    elasticity: T,
    eps_max: T,
) -> T {
    let e = elasticity_n_per_mm3(elasticity);
    let s: T = rc
        .gaps()
        .iter()
        .zip(equilibrium_weights(points, n_c))
        .map(|(g, w)| local_penetration(*g, eps_max) * w)
        .sum();
    e * s
}

/// Hits that can carry load within the cap, as `(gap, weight)`.
struct Profile<T> {
    entries: Vec<(T, T)>,
    e: T,
}

impl<T: Real> Profile<T> {
    fn new(rc: &RayCastResult<T>, points: &TactilePointSet<T>, n_c: &Vec3<T>, elasticity: T, cap: T) -> Self {
        let entries = rc
            .gaps()
            .iter()
            .zip(equilibrium_weights(points, n_c))
            .filter(|(g, w)| **g < cap && *w > T::zero())
            .map(|(g, w)| (*g, w))
            .collect();
        Self {
            entries,
            e: elasticity_n_per_mm3(elasticity),
        }
    }

    fn force(&self, eps: T) -> T {
        let s: T = self
            .entries
            .iter()
            .map(|&(g, w)| (eps - g).max(T::zero()) * w)
            .sum();
        self.e * s
    }

    fn active_area(&self, eps: T) -> T {
        self.entries.iter().filter(|(g, _)| *g < eps).map(|(_, w)| *w).sum()
    }
}

/// Smallest penetration on the line-search grid whose force reaches the
/// contact force, refined by bisection. Uses the default [`LineSearch`].
pub fn solve_max_penetration<T: Real>(
    rc: &RayCastResult<T>,
    points: &TactilePointSet<T>,
    contact: &ContactState<T>,
    elasticity: T,
) -> Result<PenetrationSolution<T>> {
    solve_max_penetration_with(rc, points, contact, elasticity, &LineSearch::default())
}

pub fn solve_max_penetration_with<T: Real>(
    rc: &RayCastResult<T>,
    points: &TactilePointSet<T>,
    contact: &ContactState<T>,
    elasticity: T,
    search: &LineSearch<T>,
) -> Result<PenetrationSolution<T>> {
    check_len(rc, points)?;
    contact.validate()?;
    if !(elasticity > T::zero()) {
        return Err(Error::Config(format!("elasticity must be positive, got {elasticity}")));
    }
    let target = contact.normal_force;
    if target == T::zero() {
        return Ok(PenetrationSolution::zero(points.len()));
    }
    let profile = Profile::new(rc, points, &contact.normal, elasticity, search.cap);
    let steps = (search.cap / search.step).round().to_usize().unwrap_or(0);

    let mut bracket = None;
    let mut reached = T::zero();
    for k in 1..=steps {
        let eps = T::from_count(k) * search.step;
        reached = profile.force(eps);
        if reached >= target {
            bracket = Some((T::from_count(k - 1) * search.step, eps));
            break;
        }
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::ForceUnreachable {
        force: target.to_f64_lossy(),
        cap: search.cap.to_f64_lossy(),
        reached: reached.to_f64_lossy(),
    })?;
    while hi - lo > search.resolution {
        let mid = (lo + hi) * T::half();
        if profile.force(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PenetrationSolution {
        eps_max: hi,
        local_eps: rc.gaps().iter().map(|g| local_penetration(*g, hi)).collect(),
        residual_force: profile.force(hi) - target,
        active_area: profile.active_area(hi),
    })
}

/// Unscaled, unclipped per-taxel force
/// `sum_i E eps_i a_i max(n_c . n_t, 0) max(-n_s . n_c, 0)` in N.
pub fn taxel_forces<T: Real>(
    rc: &RayCastResult<T>,
    points: &TactilePointSet<T>,
    sol: &PenetrationSolution<T>,
    n_c: &Vec3<T>,
    elasticity: T,
) -> Vec<T> {
    let e = elasticity_n_per_mm3(elasticity);
    let (normals, areas, hit_normals) = (points.normals(), points.areas(), rc.hit_normals());
    (0..points.taxel_count())
        .map(|j| {
            let s: T = points
                .taxel_members(j)
                .iter()
                .filter(|&&i| sol.local_eps[i] > T::zero())
                .map(|&i| {
                    sol.local_eps[i]
                        * areas[i]
                        * n_c.dot(&normals[i]).max(T::zero())
                        * (-hit_normals[i].dot(n_c)).max(T::zero())
                })
                .sum();
            e * s
        })
        .collect()
}

/// Taxel image: scaled taxel forces clipped to `[0, 255]`.
pub fn taxel_values<T: Real>(
    rc: &RayCastResult<T>,
    points: &TactilePointSet<T>,
    sol: &PenetrationSolution<T>,
    contact: &ContactState<T>,
    params: &SkinParams<T>,
) -> Result<TactileImage<T>> {
    check_len(rc, points)?;
    let forces = taxel_forces(rc, points, sol, &contact.normal, params.elasticity);
    scale_forces(points, &forces, params)
}

fn scale_forces<T: Real>(points: &TactilePointSet<T>, forces: &[T], params: &SkinParams<T>) -> Result<TactileImage<T>> {
    if params.scales.len() != forces.len() {
        return Err(Error::Config(format!(
            "{} scales for {} taxels",
            params.scales.len(),
            forces.len()
        )));
    }
    let layout = points.layout();
    let values = forces
        .iter()
        .zip(&params.scales)
        .map(|(f, s)| clip_taxel(*f * *s))
        .collect();
    TactileImage::from_values(layout.taxel_rows, layout.taxel_cols, values)
}

/// Ray cast, equilibrium and taxel forces for one contact. The ray cast runs once.
/// `None` when the force is zero or no sensor point faces the indenter.
fn unscaled<T: Real>(
    points: &TactilePointSet<T>,
    contact: &ContactState<T>,
    elasticity: T,
    shift: Option<T>,
) -> Result<Option<(Vec<T>, PenetrationSolution<T>)>> {
    contact.validate()?;
    if contact.normal_force == T::zero() {
        return Ok(None);
    }
    let rc = match cast_rays(points, contact, shift) {
        Ok(rc) => rc,
        Err(Error::NoContactGeometry) => return Ok(None),
        Err(e) => return Err(e),
    };
    // rays that only reach the indenter through the back of the fingertip
    let facing = rc
        .gaps()
        .iter()
        .zip(equilibrium_weights(points, &contact.normal))
        .any(|(g, w)| g.is_finite() && w > T::zero());
    if !facing {
        return Ok(None);
    }
    let sol = solve_max_penetration(&rc, points, contact, elasticity)?;
    let forces = taxel_forces(&rc, points, &sol, &contact.normal, elasticity);
    Ok(Some((forces, sol)))
}

/// Full pipeline from a contact to a tactile image. A zero force, or an
/// indenter that no forward-facing sensor point reaches, yields the zero image.
pub fn simulate_contact<T: Real>(
    points: &TactilePointSet<T>,
    contact: &ContactState<T>,
    params: &SkinParams<T>,
    shift: Option<T>,
) -> Result<(TactileImage<T>, PenetrationSolution<T>)> {
    params.validate()?;
    match unscaled(points, contact, params.elasticity, shift)? {
        Some((forces, sol)) => Ok((scale_forces(points, &forces, params)?, sol)),
        None => {
            let layout = points.layout();
            Ok((
                TactileImage::zeros(layout.taxel_rows, layout.taxel_cols),
                PenetrationSolution::zero(points.len()),
            ))
        }
    }
}

/// Per-taxel forces with unit scales and no clipping; zeros without contact.
pub fn simulate_taxel_forces<T: Real>(
    points: &TactilePointSet<T>,
    contact: &ContactState<T>,
    elasticity: T,
    shift: Option<T>,
) -> Result<Vec<T>> {
    Ok(unscaled(points, contact, elasticity, shift)?
        .map(|(f, _)| f)
        .unwrap_or_else(|| vec![T::zero(); points.taxel_count()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact_query::{local_penetrations, IndenterShape, TriangleMesh};
    use crate::linalg::Pose;
    use crate::sensor_geometry::{MountingParams, SensorLayout};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn flat_points() -> TactilePointSet<f64> {
        TactilePointSet::build(SensorLayout::default(), MountingParams::new(0.0, 0.0, 0.0, 1.0e6)).unwrap()
    }

    /// 2.5 mm square punch face flush over taxel `j`, pressing along +x.
    fn punch(points: &TactilePointSet<f64>, j: usize, force: f64) -> ContactState<f64> {
        let mesh = Arc::new(TriangleMesh::cuboid(Vec3::new(5.0, 1.25, 1.25)).unwrap());
        let [u, v] = points.layout().taxel_center(j);
        let pose = Pose::from_translation(Vec3::new(1.0e6 + 5.0, u, v));
        ContactState::new(Vec3::x_axis(), force, IndenterShape::mesh(mesh, pose).unwrap()).unwrap()
    }

    fn sphere_points() -> TactilePointSet<f64> {
        TactilePointSet::build(SensorLayout::default(), MountingParams::new(23.5, 0.0, 0.0, 10.0)).unwrap()
    }

    fn sphere_contact(points: &TactilePointSet<f64>, flat: [f64; 2], force: f64) -> ContactState<f64> {
        let (p, n) = points.mount().wrap_to_cylinder(flat);
        let s = IndenterShape::sphere(6.0, p + n * 6.0).unwrap();
        ContactState::new(n, force, s).unwrap()
    }

    #[test]
    fn unit_conversion_flat_punch_force() {
        let pts = flat_points();
        let c = punch(&pts, 5, 1.0);
        let rc = cast_rays(&pts, &c, None).unwrap();
        let f = total_normal_force(&rc, &pts, &c.normal, 500.0, 0.5);
        // R = 1e6 leaves a sagitta of a few 1e-6 mm across the patch
        assert!((f - 1.5625).abs() < 1e-4 * 1.5625, "{f}");
        assert_eq!(total_normal_force(&rc, &pts, &c.normal, 500.0, 0.0), 0.0);
    }

    #[test]
    fn flat_punch_solution_and_taxel_value() {
        let pts = flat_points();
        let c = punch(&pts, 5, 1.5625);
        let params = SkinParams::uniform(500.0, 70.0, 16).unwrap();
        let (img, sol) = simulate_contact(&pts, &c, &params, None).unwrap();
        assert!((sol.eps_max - 0.5).abs() <= 0.01);
        // value follows the solved depth exactly
        let expect = 70.0 * 500.0e-3 * sol.eps_max * 6.25;
        assert!((img.values()[5] - expect).abs() < 1e-4 * expect);
        for (j, v) in img.values().iter().enumerate() {
            if j != 5 {
                assert_eq!(*v, 0.0);
            }
        }
        // at exactly 0.5 mm the taxel carries 1.5625 N, i.e. 70 * 1.5625 = 109.375
        let rc = cast_rays(&pts, &c, None).unwrap();
        let at_half = PenetrationSolution {
            eps_max: 0.5,
            local_eps: local_penetrations(&rc, 0.5),
            residual_force: 0.0,
            active_area: 6.25,
        };
        let img = taxel_values(&rc, &pts, &at_half, &c, &params).unwrap();
        assert!((img.values()[5] - 109.375).abs() < 1e-4 * 109.375, "{}", img.values()[5]);
    }

    #[test]
    fn flat_punch_inverse_in_elasticity() {
        let pts = flat_points();
        let force = 500.0e-3 * 6.25 * 0.3;
        let c = punch(&pts, 6, force);
        let rc = cast_rays(&pts, &c, None).unwrap();
        let sol = solve_max_penetration(&rc, &pts, &c, 500.0).unwrap();
        assert!((sol.eps_max - 0.3).abs() <= 0.01);
        let stiffer = solve_max_penetration(&rc, &pts, &c, 1000.0).unwrap();
        assert!((stiffer.eps_max - 0.15).abs() <= 0.01);
    }

    #[test]
    fn zero_force_gives_zero() {
        let pts = sphere_points();
        let c = sphere_contact(&pts, [0.0, 0.0], 0.0);
        let rc = cast_rays(&pts, &c, None).unwrap();
        let sol = solve_max_penetration(&rc, &pts, &c, 500.0).unwrap();
        assert_eq!(sol.eps_max, 0.0);
        assert!(sol.local_eps.iter().all(|e| *e == 0.0));
        let (img, _) = simulate_contact(&pts, &c, &SkinParams::default(), None).unwrap();
        assert!(img.is_zero());
    }

    #[test]
    fn unreachable_force_is_error() {
        let pts = flat_points();
        let c = punch(&pts, 5, 1.0e4);
        let rc = cast_rays(&pts, &c, None).unwrap();
        assert!(matches!(
            solve_max_penetration(&rc, &pts, &c, 500.0),
            Err(Error::ForceUnreachable { .. })
        ));
    }

    #[test]
    fn indenter_off_the_sensor_gives_zero_image() {
        let pts = sphere_points();
        let s = IndenterShape::sphere(6.0, Vec3::new(-16.0, 0.0, 23.5)).unwrap();
        let c = ContactState::new(Vec3::new(-1.0, 0.0, 0.0), 1.0, s).unwrap();
        let (img, sol) = simulate_contact(&pts, &c, &SkinParams::default(), None).unwrap();
        assert!(img.is_zero());
        assert_eq!(sol.eps_max, 0.0);
    }

    #[test]
    fn sphere_near_taxel_center_is_single_peak() {
        let pts = sphere_points();
        let params = SkinParams::uniform(236.0, 68.5, 16).unwrap();
        let [u, v] = pts.layout().taxel_center(5);
        let peak_of = |img: &TactileImage<f64>| {
            let v = img.values();
            (0..16).max_by(|a, b| v[*a].partial_cmp(&v[*b]).unwrap()).unwrap()
        };
        let (img, _) = simulate_contact(&pts, &sphere_contact(&pts, [u, v], 1.5), &params, None).unwrap();
        assert_eq!(peak_of(&img), 5);
        // off-center the patch reaches across the gap into the neighbor
        let (img, _) = simulate_contact(&pts, &sphere_contact(&pts, [u + 1.5, v], 1.5), &params, None).unwrap();
        assert_eq!(peak_of(&img), 5);
        assert!(img.values()[6] > 0.0 && img.values()[6] < img.values()[5]);
    }

    #[test]
    fn symmetric_center_gives_four_equal_values() {
        let pts = sphere_points();
        let c = sphere_contact(&pts, [0.0, 0.0], 1.5);
        let (img, _) = simulate_contact(&pts, &c, &SkinParams::default(), None).unwrap();
        let v = img.values();
        let r = v[5];
        for j in [6, 9, 10] {
            assert!((v[j] - r).abs() <= 1e-6 * r, "{v:?}");
        }
    }

    #[test]
    fn both_projection_factors_clamp_at_zero() {
        // a thin bolt standing on the skin: its cap faces are hit head-on, so nothing negative
        let pts = sphere_points();
        let (p, n) = pts.mount().wrap_to_cylinder([0.0, 0.0]);
        let bolt = IndenterShape::cylinder(6.0, n, 3.0, p + n * 3.0).unwrap();
        let c = ContactState::new(n, 2.0, bolt).unwrap();
        let (img, _) = simulate_contact(&pts, &c, &SkinParams::default(), None).unwrap();
        assert!(img.values().iter().all(|v| *v >= 0.0));
        assert!(!img.is_zero());
    }

    #[test]
    fn f32_pipeline_matches_f64() {
        let pts64 = sphere_points();
        let c64 = sphere_contact(&pts64, [1.0, -0.5], 1.5);
        let (img64, _) = simulate_contact(&pts64, &c64, &SkinParams::default(), None).unwrap();
        let pts32 =
            TactilePointSet::<f32>::build(SensorLayout::default(), MountingParams::new(23.5, 0.0, 0.0, 10.0)).unwrap();
        let (p, n) = pts32.mount().wrap_to_cylinder([1.0, -0.5]);
        let c32 = ContactState::new(n, 1.5, IndenterShape::sphere(6.0, p + n * 6.0).unwrap()).unwrap();
        let (img32, _) = simulate_contact(&pts32, &c32, &SkinParams::default(), None).unwrap();
        for (a, b) in img64.values().iter().zip(img32.values()) {
            assert!((a - *b as f64).abs() < 0.05 * a.max(1.0), "{a} vs {b}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn residual_within_resolution_bound(
            u in -4.0..4.0_f64, v in -4.0..4.0_f64, force in 0.5..4.0_f64, e in 236.0..848.0_f64,
        ) {
            let pts = sphere_points();
            let c = sphere_contact(&pts, [u, v], force);
            let rc = cast_rays(&pts, &c, None).unwrap();
            let sol = solve_max_penetration(&rc, &pts, &c, e).unwrap();
            let bound = e * 1e-3 * sol.active_area * 0.01;
            prop_assert!(sol.residual_force >= 0.0);
            prop_assert!(sol.residual_force <= bound, "{} > {}", sol.residual_force, bound);
            let f = total_normal_force(&rc, &pts, &c.normal, e, sol.eps_max);
            prop_assert!((f - force - sol.residual_force).abs() < 1e-9);
        }

        #[test]
        fn eps_monotone_in_force_and_elasticity(
            u in -4.0..4.0_f64, f1 in 0.2..4.0_f64, df in 0.0..2.0_f64, e in 236.0..848.0_f64, de in 0.0..300.0_f64,
        ) {
            let pts = sphere_points();
            let c = sphere_contact(&pts, [u, 0.0], f1);
            let rc = cast_rays(&pts, &c, None).unwrap();
            let a = solve_max_penetration(&rc, &pts, &c, e).unwrap();
            let b = solve_max_penetration(&rc, &pts, &c.with_force(f1 + df), e).unwrap();
            let stiff = solve_max_penetration(&rc, &pts, &c, e + de).unwrap();
            prop_assert!(b.eps_max >= a.eps_max);
            prop_assert!(stiff.eps_max <= a.eps_max);
        }

        #[test]
        fn image_linear_in_scales(u in -3.0..3.0_f64, v in -3.0..3.0_f64, k in 0.1..1.0_f64) {
            let pts = sphere_points();
            let c = sphere_contact(&pts, [u, v], 1.0);
            let base = SkinParams::uniform(400.0, 20.0, 16).unwrap();
            let scaled = SkinParams::uniform(400.0, 20.0 * k, 16).unwrap();
            let (a, _) = simulate_contact(&pts, &c, &base, None).unwrap();
            let (b, _) = simulate_contact(&pts, &c, &scaled, None).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x * k - y).abs() <= 1e-9 * x.max(1.0));
            }
        }

        #[test]
        fn values_in_range_and_zero_iff_unpenetrated(u in -12.0..12.0_f64, v in -12.0..12.0_f64, force in 0.0..4.0_f64) {
            let pts = sphere_points();
            let c = sphere_contact(&pts, [u, v], force);
            let (img, sol) = simulate_contact(&pts, &c, &SkinParams::default(), None).unwrap();
            prop_assert!(img.values().iter().all(|x| (0.0..=255.0).contains(x)));
            let penetrated = (0..16).any(|j| pts.taxel_members(j).iter().any(|&i| sol.local_eps[i] > 0.0));
            prop_assert_eq!(img.is_zero(), !penetrated);
        }

        #[test]
        fn pitch_shift_permutes_interior_taxels(u in -1.0..1.0_f64, v in -1.0..1.0_f64) {
            let pts = sphere_points();
            let params = SkinParams::uniform(500.0, 30.0, 16).unwrap();
            let (a, _) = simulate_contact(&pts, &sphere_contact(&pts, [u - 2.0, v], 1.5), &params, None).unwrap();
            let (b, _) = simulate_contact(&pts, &sphere_contact(&pts, [u + 2.0, v], 1.5), &params, None).unwrap();
            // +4 mm along u moves the response by one column
            let peak = a.max();
            for r in 0..4 {
                for col in 1..3 {
                    let x = a.get(r, col);
                    let y = b.get(r, col + 1);
                    prop_assert!((x - y).abs() <= 0.03 * peak, "r{} c{}: {} vs {}", r, col, x, y);
                }
            }
        }
    }
}

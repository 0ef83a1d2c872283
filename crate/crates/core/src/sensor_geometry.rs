//! Discretized tactile point set of the sensor patch, wrapped onto the
//! cylindrical part of the fingertip.
//!
//! Frames and conventions:
//!
//! * The *flat* sensor frame has its origin at the sensor center. `u` runs
//!   along the taxel columns and becomes the circumferential direction after
//!   wrapping; `v` runs along the taxel rows and becomes the axial direction.
//! * The *fingertip* frame has the cylinder axis on `z` through the origin.
//!   A flat point at angle `theta` and axial coordinate `z` sits at
//!   `(R cos theta, R sin theta, z)` with outward normal `(cos theta, sin theta, 0)`.
//! * Taxels are indexed row-major from zero: taxel `j` lives in row `j / cols`
//!   and column `j % cols`; row 0 is at the most negative `v`, column 0 at the
//!   most negative `u`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scalar::{deg_to_rad, normalize_deg, rad_to_deg, Real};

/// Taxel array geometry and discretization settings. Lengths in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorLayout<T> {
    pub taxel_rows: usize,
    pub taxel_cols: usize,
    pub taxel_size: T,
    pub taxel_pitch: T,
    pub margin: T,
    pub resolution: T,
}

impl<T: Real> Default for SensorLayout<T> {
    fn default() -> Self {
        Self {
            taxel_rows: 4,
            taxel_cols: 4,
            taxel_size: T::lit(2.5),
            taxel_pitch: T::lit(4.0),
            margin: T::lit(8.0),
            resolution: T::lit(0.25),
        }
    }
}

impl<T: Real> SensorLayout<T> {
    pub fn with_resolution(mut self, resolution: T) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn with_margin(mut self, margin: T) -> Self {
        self.margin = margin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.taxel_rows == 0 || self.taxel_cols == 0 {
            return Err(Error::Config("taxel array must have at least one row and column".into()));
        }
        if !(self.taxel_size > T::zero()) || !self.taxel_size.is_finite() {
            return Err(Error::Config(format!("taxel size must be positive, got {}", self.taxel_size)));
        }
        if self.taxel_size > self.taxel_pitch {
            return Err(Error::Config(format!(
                "taxel size {} exceeds taxel pitch {}",
                self.taxel_size, self.taxel_pitch
            )));
        }
        if !(self.resolution > T::zero()) || !self.resolution.is_finite() {
            return Err(Error::Config(format!("resolution must be positive, got {}", self.resolution)));
        }
        if !(self.margin >= T::zero()) || !self.margin.is_finite() {
            return Err(Error::Config(format!("margin must be non-negative, got {}", self.margin)));
        }
        Ok(())
    }

    /// Number of taxels `N_T`.
    pub fn taxel_count(&self) -> usize {
        self.taxel_rows * self.taxel_cols
    }

    /// Flat extent of the taxel array along `u` (columns).
    pub fn extent_u(&self) -> T {
        T::from_count(self.taxel_cols - 1) * self.taxel_pitch + self.taxel_size
    }

    /// Flat extent of the taxel array along `v` (rows).
    pub fn extent_v(&self) -> T {
        T::from_count(self.taxel_rows - 1) * self.taxel_pitch + self.taxel_size
    }

    /// Grid points per axis `(n_u, n_v)`.
    ///
    /// The grid is cell-centered: `n = ceil((extent + 2 margin) / resolution)`
    /// cells of width `resolution`, centered on the sensor, with one tactile
    /// point at each cell center. For the default 4x4 layout this is
    /// `(14.5 + 16) / 0.25 = 122` points per axis, 14884 in total.
    pub fn grid_dims(&self) -> (usize, usize) {
        let per_axis = |extent: T| {
            let cells = (extent + T::two() * self.margin) / self.resolution;
            // absorb representation noise such as 121.99999999 before ceil
            let snapped = cells.round();
            let n = if (cells - snapped).abs() < T::lit(1e-6) * snapped.max(T::one()) {
                snapped
            } else {
                cells.ceil()
            };
            n.to_usize().unwrap_or(0).max(1)
        };
        (per_axis(self.extent_u()), per_axis(self.extent_v()))
    }

    /// Center of taxel `j` in flat sensor coordinates.
    pub fn taxel_center(&self, j: usize) -> [T; 2] {
        let (r, c) = (j / self.taxel_cols, j % self.taxel_cols);
        let half = T::half();
        let u = (T::from_count(c) - T::from_count(self.taxel_cols - 1) * half) * self.taxel_pitch;
        let v = (T::from_count(r) - T::from_count(self.taxel_rows - 1) * half) * self.taxel_pitch;
        [u, v]
    }

    /// Classifies a flat coordinate into a taxel, the gap strips, or the margin.
    /// Taxel squares and the sensor extent are half-open `[lo, hi)` intervals.
    pub fn classify_point(&self, flat: [T; 2]) -> Region {
        let along = |coord: T, extent: T, count: usize| -> Option<Option<usize>> {
            let local = coord + extent * T::half();
            if local < T::zero() || local >= extent {
                return None;
            }
            let idx = (local / self.taxel_pitch).floor().to_usize().unwrap_or(0).min(count - 1);
            let offset = local - T::from_count(idx) * self.taxel_pitch;
            Some((offset < self.taxel_size).then_some(idx))
        };
        match (
            along(flat[0], self.extent_u(), self.taxel_cols),
            along(flat[1], self.extent_v(), self.taxel_rows),
        ) {
            (Some(Some(c)), Some(Some(r))) => Region::Taxel(r * self.taxel_cols + c),
            (Some(_), Some(_)) => Region::Gap,
            _ => Region::Margin,
        }
    }
}

/// Mounting of the sensor patch on the fingertip cylinder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountingParams<T> {
    /// Offset along the cylinder axis, mm.
    pub y: T,
    /// Offset around the cylinder axis, degrees.
    pub beta_deg: T,
    /// In-plane rotation about the surface normal, degrees.
    pub alpha_deg: T,
    /// Fingertip cylinder radius, mm.
    pub radius: T,
}

impl<T: Real> Default for MountingParams<T> {
    fn default() -> Self {
        Self {
            y: T::lit(23.5),
            beta_deg: T::zero(),
            alpha_deg: T::zero(),
            radius: T::lit(10.0),
        }
    }
}

impl<T: Real> MountingParams<T> {
    pub fn new(y: T, beta_deg: T, alpha_deg: T, radius: T) -> Self {
        Self {
            y,
            beta_deg: normalize_deg(beta_deg),
            alpha_deg: normalize_deg(alpha_deg),
            radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > T::zero()) || !self.radius.is_finite() {
            return Err(Error::Config(format!("fingertip radius must be positive, got {}", self.radius)));
        }
        if !self.y.is_finite() || !self.beta_deg.is_finite() || !self.alpha_deg.is_finite() {
            return Err(Error::Config("mounting parameters must be finite".into()));
        }
        Ok(())
    }

    fn rotate_in_plane(&self, flat: [T; 2], sign: T) -> [T; 2] {
        let (s, c) = (deg_to_rad(self.alpha_deg) * sign).sin_cos();
        [c * flat[0] - s * flat[1], s * flat[0] + c * flat[1]]
    }

    /// Maps a flat sensor coordinate onto the cylinder: rotate by `alpha` in
    /// the sensor plane, wrap the circumferential coordinate at radius `R`
    /// starting from angle `beta`, then offset axially by `y`.
    ///
    /// Returns `(position, outward unit normal)` in the fingertip frame.
    pub fn wrap_to_cylinder(&self, flat: [T; 2]) -> (Vec3<T>, Vec3<T>) {
        let [u, v] = self.rotate_in_plane(flat, T::one());
        let theta = deg_to_rad(self.beta_deg) + u / self.radius;
        let (s, c) = theta.sin_cos();
        (
            Vec3::new(self.radius * c, self.radius * s, self.y + v),
            Vec3::new(c, s, T::zero()),
        )
    }

    /// Unit surface tangent at `flat` pointing along the in-plane sensor
    /// direction `angle_deg` (0 = along `u`).
    pub fn surface_tangent(&self, flat: [T; 2], angle_deg: T) -> Vec3<T> {
        let (s, c) = deg_to_rad(angle_deg).sin_cos();
        let [du, dv] = self.rotate_in_plane([c, s], T::one());
        let [u, _] = self.rotate_in_plane(flat, T::one());
        let (st, ct) = (deg_to_rad(self.beta_deg) + u / self.radius).sin_cos();
        Vec3::new(-st * du, ct * du, dv)
    }

    /// Inverse of [`wrap_to_cylinder`](Self::wrap_to_cylinder) for a point given
    /// in the fingertip frame. The point is projected radially onto the cylinder;
    /// the circumferential coordinate is taken on the branch within half a turn
    /// of `beta`.
    pub fn unwrap_from_cylinder(&self, p: &Vec3<T>) -> [T; 2] {
        let theta = p.y.atan2(p.x);
        let dtheta = deg_to_rad(normalize_deg(rad_to_deg(theta) - self.beta_deg));
        let u = self.radius * dtheta;
        let v = p.z - self.y;
        self.rotate_in_plane([u, v], -T::one())
    }
}

/// Region tag of a tactile point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// Inside the square of taxel `j` (zero-based, row-major).
    Taxel(usize),
    /// Inside the sensor extent but between taxels.
    Gap,
    /// Outside the sensor extent.
    Margin,
}

/// One surface element of the discretized sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TactilePoint<T> {
    pub position: Vec3<T>,
    pub normal: Vec3<T>,
    pub area: T,
    pub region: Region,
}

/// Discretized sensor surface in the fingertip frame. Immutable once built.
#[derive(Debug, Clone)]
pub struct TactilePointSet<T> {
    layout: SensorLayout<T>,
    mount: MountingParams<T>,
    flat: Vec<[T; 2]>,
    positions: Vec<Vec3<T>>,
    normals: Vec<Vec3<T>>,
    areas: Vec<T>,
    regions: Vec<Region>,
    taxel_members: Vec<Vec<usize>>,
}

impl<T: Real> TactilePointSet<T> {
    /// Builds the tactile point set for `layout` mounted with `mount`.
    pub fn build(layout: SensorLayout<T>, mount: MountingParams<T>) -> Result<Self> {
        layout.validate()?;
        mount.validate()?;
        let mount = MountingParams::new(mount.y, mount.beta_deg, mount.alpha_deg, mount.radius);
        let (nu, nv) = layout.grid_dims();
        let res = layout.resolution;
        let start = |n: usize| -(T::from_count(n) * res) * T::half() + res * T::half();
        let (u0, v0) = (start(nu), start(nv));
        let area = res * res;

        let n = nu * nv;
        let mut set = Self {
            layout,
            mount,
            flat: Vec::with_capacity(n),
            positions: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            areas: Vec::with_capacity(n),
            regions: Vec::with_capacity(n),
            taxel_members: vec![Vec::new(); layout.taxel_count()],
        };
        for iv in 0..nv {
            let v = v0 + T::from_count(iv) * res;
            for iu in 0..nu {
                let u = u0 + T::from_count(iu) * res;
                let region = layout.classify_point([u, v]);
                let (p, nrm) = mount.wrap_to_cylinder([u, v]);
                if let Region::Taxel(j) = region {
                    set.taxel_members[j].push(set.positions.len());
                }
                set.flat.push([u, v]);
                set.positions.push(p);
                set.normals.push(nrm);
                set.areas.push(area);
                set.regions.push(region);
            }
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn layout(&self) -> &SensorLayout<T> {
        &self.layout
    }

    pub fn mount(&self) -> &MountingParams<T> {
        &self.mount
    }

    pub fn flat_coords(&self) -> &[[T; 2]] {
        &self.flat
    }

    pub fn positions(&self) -> &[Vec3<T>] {
        &self.positions
    }

    pub fn normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    pub fn areas(&self) -> &[T] {
        &self.areas
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// Indices of the points inside taxel `j`.
    pub fn taxel_members(&self, j: usize) -> &[usize] {
        &self.taxel_members[j]
    }

    pub fn taxel_count(&self) -> usize {
        self.taxel_members.len()
    }

    pub fn point(&self, i: usize) -> TactilePoint<T> {
        TactilePoint {
            position: self.positions[i],
            normal: self.normals[i],
            area: self.areas[i],
            region: self.regions[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = TactilePoint<T>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// On-disk sensor configuration (JSON).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    pub taxel_rows: usize,
    pub taxel_cols: usize,
    pub taxel_size_mm: f64,
    pub taxel_pitch_mm: f64,
    pub margin_mm: f64,
    pub resolution_mm: f64,
    pub mount: MountConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountConfig {
    pub y_mm: f64,
    pub beta_deg: f64,
    pub alpha_deg: f64,
    pub radius_mm: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self::from_parts(&SensorLayout::<f64>::default(), &MountingParams::<f64>::default())
    }
}

impl SensorConfig {
    pub fn from_parts<T: Real>(layout: &SensorLayout<T>, mount: &MountingParams<T>) -> Self {
        Self {
            taxel_rows: layout.taxel_rows,
            taxel_cols: layout.taxel_cols,
            taxel_size_mm: layout.taxel_size.to_f64_lossy(),
            taxel_pitch_mm: layout.taxel_pitch.to_f64_lossy(),
            margin_mm: layout.margin.to_f64_lossy(),
            resolution_mm: layout.resolution.to_f64_lossy(),
            mount: MountConfig {
                y_mm: mount.y.to_f64_lossy(),
                beta_deg: mount.beta_deg.to_f64_lossy(),
                alpha_deg: mount.alpha_deg.to_f64_lossy(),
                radius_mm: mount.radius.to_f64_lossy(),
            },
        }
    }

    pub fn layout<T: Real>(&self) -> SensorLayout<T> {
        SensorLayout {
            taxel_rows: self.taxel_rows,
            taxel_cols: self.taxel_cols,
            taxel_size: T::lit(self.taxel_size_mm),
            taxel_pitch: T::lit(self.taxel_pitch_mm),
            margin: T::lit(self.margin_mm),
            resolution: T::lit(self.resolution_mm),
        }
    }

    pub fn mount<T: Real>(&self) -> MountingParams<T> {
        MountingParams::new(
            T::lit(self.mount.y_mm),
            T::lit(self.mount.beta_deg),
            T::lit(self.mount.alpha_deg),
            T::lit(self.mount.radius_mm),
        )
    }

    /// Checks the configuration without building a point set.
    pub fn validate(&self) -> Result<()> {
        self.layout::<f64>().validate()?;
        self.mount::<f64>().validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn build<T: Real>(&self) -> Result<TactilePointSet<T>> {
        TactilePointSet::build(self.layout(), self.mount())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_set() -> TactilePointSet<f64> {
        TactilePointSet::build(SensorLayout::default(), MountingParams::default()).unwrap()
    }

    #[test]
    fn default_layout_has_14884_points() {
        let set = default_set();
        assert_eq!(SensorLayout::<f64>::default().grid_dims(), (122, 122));
        assert_eq!(set.len(), 14884);
        for j in 0..16 {
            assert_eq!(set.taxel_members(j).len(), 100, "taxel {j}");
        }
    }

    #[test]
    fn half_millimeter_grid_has_3721_points() {
        let layout = SensorLayout::<f64>::default().with_resolution(0.5);
        let set = TactilePointSet::build(layout, MountingParams::default()).unwrap();
        assert_eq!(set.len(), 3721);
        assert!((0..16).all(|j| set.taxel_members(j).len() == 25));
    }

    #[test]
    fn flat_extent_matches_pitch_arithmetic() {
        let l = SensorLayout::<f64>::default();
        assert_eq!(l.extent_u(), 14.5);
        assert_eq!(l.extent_v(), 14.5);
    }

    #[test]
    fn classify_examples() {
        let l = SensorLayout::<f64>::default();
        // row 0 col 0 is the first taxel
        assert_eq!(l.classify_point(l.taxel_center(0)), Region::Taxel(0));
        assert_eq!(l.classify_point(l.taxel_center(6)), Region::Taxel(6));
        let [u0, v0] = l.taxel_center(0);
        let [u1, _] = l.taxel_center(1);
        assert_eq!(l.classify_point([(u0 + u1) / 2.0, v0]), Region::Gap);
        assert_eq!(l.classify_point([7.25 + 5.0, 0.0]), Region::Margin);
        // half-open boundaries: lower edge belongs to the taxel, upper edge does not
        assert_eq!(l.classify_point([-7.25, -7.25]), Region::Taxel(0));
        assert_eq!(l.classify_point([-4.75, -7.25]), Region::Gap);
        assert_eq!(l.classify_point([7.25, 0.0]), Region::Margin);
    }

    #[test]
    fn configuration_errors() {
        let bad_res = SensorLayout::<f64>::default().with_resolution(0.0);
        assert!(matches!(
            TactilePointSet::build(bad_res, MountingParams::default()),
            Err(Error::Config(_))
        ));
        let bad_margin = SensorLayout::<f64>::default().with_margin(-1.0);
        assert!(bad_margin.validate().is_err());
        let mut bad_mount = MountingParams::<f64>::default();
        bad_mount.radius = 0.0;
        assert!(TactilePointSet::build(SensorLayout::default(), bad_mount).is_err());
        let mut too_big = SensorLayout::<f64>::default();
        too_big.taxel_size = 5.0;
        assert!(too_big.validate().is_err());
    }

    #[test]
    fn wrap_identity_mount() {
        let m = MountingParams::new(20.0_f64, 0.0, 0.0, 10.0);
        let (p, n) = m.wrap_to_cylinder([0.0, 0.0]);
        assert!((p - Vec3::new(10.0, 0.0, 20.0)).norm() < 1e-12);
        assert!((n - Vec3::x_axis()).norm() < 1e-12);
    }

    #[test]
    fn wrap_arc_length_maps_to_angle() {
        let m = MountingParams::new(0.0_f64, 15.0, 0.0, 10.0);
        let s = 10.0 * std::f64::consts::PI / 6.0;
        let (p, n) = m.wrap_to_cylinder([s, 0.0]);
        let angle = rad_to_deg(p.y.atan2(p.x));
        assert!((angle - 45.0).abs() < 1e-9);
        assert!((n.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_90_swaps_flat_axes() {
        let rotated = MountingParams::new(0.0_f64, 0.0, 90.0, 10.0);
        let plain = MountingParams::new(0.0_f64, 0.0, 0.0, 10.0);
        let (a, _) = rotated.wrap_to_cylinder([0.0, 3.0]);
        let (b, _) = plain.wrap_to_cylinder([-3.0, 0.0]);
        assert!((a - b).norm() < 1e-12);
        let (c, _) = rotated.wrap_to_cylinder([2.0, 0.0]);
        let (d, _) = plain.wrap_to_cylinder([0.0, 2.0]);
        assert!((c - d).norm() < 1e-12);
    }

    #[test]
    fn angles_are_normalized() {
        let m = MountingParams::new(0.0_f64, 190.0, -180.0, 10.0);
        assert_eq!(m.beta_deg, -170.0);
        assert_eq!(m.alpha_deg, 180.0);
    }

    #[test]
    fn normals_are_unit_and_areas_uniform() {
        let set = default_set();
        for t in set.iter() {
            assert!((t.normal.norm() - 1.0).abs() < 1e-9);
            assert_eq!(t.area, 0.0625);
        }
    }

    #[test]
    fn config_json_schema() {
        let text = r#"{"taxel_rows":4,"taxel_cols":4,"taxel_size_mm":2.5,"taxel_pitch_mm":4.0,
            "margin_mm":8.0,"resolution_mm":0.25,
            "mount":{"y_mm":23.5,"beta_deg":0.0,"alpha_deg":0.0,"radius_mm":10.0}}"#;
        let cfg = SensorConfig::from_json(text).unwrap();
        assert_eq!(cfg, SensorConfig::default());
        assert_eq!(cfg.build::<f32>().unwrap().len(), 14884);
        let bad = text.replace("0.25", "-0.25");
        assert!(matches!(SensorConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn f32_build_matches_f64_count() {
        let set = TactilePointSet::<f32>::build(SensorLayout::default(), MountingParams::default())
            .unwrap();
        assert_eq!(set.len(), 14884);
        assert!((0..16).all(|j| set.taxel_members(j).len() == 100));
    }

    proptest! {
        #[test]
        fn tangent_matches_wrap_derivative(
            u in -10.0..10.0_f64, v in -10.0..10.0_f64, ang in -180.0..180.0_f64,
            beta in -30.0..30.0_f64, alpha in -20.0..20.0_f64,
        ) {
            let m = MountingParams::new(23.5, beta, alpha, 10.0);
            let (s, c) = ang.to_radians().sin_cos();
            let h = 1e-5;
            let (p1, n) = m.wrap_to_cylinder([u + h * c, v + h * s]);
            let (p0, _) = m.wrap_to_cylinder([u - h * c, v - h * s]);
            let fd = (p1 - p0) / (2.0 * h);
            let t = m.surface_tangent([u, v], ang);
            prop_assert!((t - fd).norm() < 1e-6);
            prop_assert!((t.norm() - 1.0).abs() < 1e-12);
            prop_assert!(t.dot(&n).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn regions_partition_and_taxel_area_sums(res in prop::sample::select(vec![0.1_f64, 0.125, 0.2, 0.25, 0.3, 0.5])) {
            let layout = SensorLayout::<f64>::default().with_resolution(res);
            let set = TactilePointSet::build(layout, MountingParams::default()).unwrap();
            let (nu, nv) = layout.grid_dims();
            prop_assert_eq!(set.len(), nu * nv);
            let members: usize = (0..16).map(|j| set.taxel_members(j).len()).sum();
            let taxel_points = set.regions().iter().filter(|r| matches!(r, Region::Taxel(_))).count();
            prop_assert_eq!(members, taxel_points);
            let cell = res * res;
            for j in 0..16 {
                let area: f64 = set.taxel_members(j).iter().map(|&i| set.areas()[i]).sum();
                // one grid-cell strip per taxel edge
                prop_assert!((area - 6.25).abs() <= 4.0 * 2.5 * res + cell, "taxel {} area {}", j, area);
            }
        }

        #[test]
        fn wrap_is_circumferential_isometry(
            u1 in -15.0_f64..15.0, u2 in -15.0_f64..15.0, v in -15.0_f64..15.0,
            beta in -180.0_f64..180.0, y in 0.0_f64..40.0, radius in 5.0_f64..20.0,
        ) {
            let m = MountingParams::new(y, beta, 0.0, radius);
            let (p1, _) = m.wrap_to_cylinder([u1, v]);
            let (p2, _) = m.wrap_to_cylinder([u2, v]);
            // geodesic along the circle at fixed axial height
            let a1 = p1.y.atan2(p1.x);
            let mut da = (p2.y.atan2(p2.x) - a1).rem_euclid(std::f64::consts::TAU);
            let flat = (u2 - u1).abs();
            if da > std::f64::consts::PI { da = std::f64::consts::TAU - da; }
            let geodesic = radius * da;
            let expected = if flat / radius > std::f64::consts::PI {
                std::f64::consts::TAU * radius - flat
            } else {
                flat
            };
            prop_assert!((geodesic - expected).abs() < 1e-9);
            prop_assert!((p1.z - p2.z).abs() < 1e-12);
        }

        #[test]
        fn unwrap_inverts_wrap(
            u in -14.0_f64..14.0, v in -14.0_f64..14.0,
            beta in -170.0_f64..170.0, alpha in -170.0_f64..170.0, y in -5.0_f64..40.0,
        ) {
            let m = MountingParams::new(y, beta, alpha, 10.0);
            let (p, _) = m.wrap_to_cylinder([u, v]);
            let back = m.unwrap_from_cylinder(&p);
            prop_assert!((back[0] - u).abs() < 1e-9 && (back[1] - v).abs() < 1e-9);
        }
    }
}

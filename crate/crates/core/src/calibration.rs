//! Two-stage calibration: a macro grid over mounting and elasticity, an
//! exhaustive per-sample contact-position search inside a slack window, and
//! closed-form per-taxel scales.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contact_query::{cast_rays, ContactState, IndenterShape};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scalar::Real;
use crate::sensor_geometry::{MountingParams, SensorLayout, TactilePointSet};
use crate::skin_response::{simulate_contact, solve_max_penetration, taxel_forces, SkinParams};
use crate::tactile_image::{clip_taxel, TactileImage};

/// Valley threshold on the mean squared taxel error (RMSE of 5 per taxel).
pub const DEFAULT_THRESHOLD: f64 = 25.0;

/// Largest plausible indentation force, N.
const MAX_SAMPLE_FORCE: f64 = 10.0;

/// One indentation: measured contact point on the fingertip (mm, fingertip
/// frame), normal force and the measured image.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSample<T> {
    pub contact_position: Vec3<T>,
    pub normal_force: T,
    pub image: TactileImage<T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleRecord {
    contact_position_mm: [f64; 3],
    #[serde(rename = "force_N")]
    force_n: f64,
    image: Vec<f64>,
}

impl<T: Real> CalibrationSample<T> {
    fn check(&self) -> std::result::Result<(), String> {
        let f = self.normal_force;
        if !f.is_finite() || f <= T::zero() || f > T::lit(MAX_SAMPLE_FORCE) {
            return Err(format!("force {f} N outside (0, {MAX_SAMPLE_FORCE}]"));
        }
        if !self.contact_position.is_finite() {
            return Err("contact position is not finite".into());
        }
        if self.image.is_zero() {
            return Err("image is all zero".into());
        }
        if self.image.active_count() < 2 {
            return Err("fewer than two active taxels".into());
        }
        Ok(())
    }
}

/// Validated set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationDataset<T> {
    samples: Vec<CalibrationSample<T>>,
}

impl<T: Real> CalibrationDataset<T> {
    /// Fails with every offending sample listed when any is invalid.
    pub fn new(samples: Vec<CalibrationSample<T>>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let bad: Vec<(usize, String)> = samples
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.check().err().map(|e| (k, e)))
            .collect();
        if !bad.is_empty() {
            return Err(Error::InvalidSamples(bad));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[CalibrationSample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Parses `[{contact_position_mm, force_N, image}]` for a 4x4 sensor.
    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<SampleRecord> = serde_json::from_str(text)?;
        let mut samples = Vec::with_capacity(records.len());
        let mut bad = Vec::new();
        for (k, r) in records.into_iter().enumerate() {
            let [x, y, z] = r.contact_position_mm;
            match TactileImage::from_values(4, 4, r.image.into_iter().map(T::lit).collect()) {
                Ok(image) => samples.push(CalibrationSample {
                    contact_position: Vec3::new(T::lit(x), T::lit(y), T::lit(z)),
                    normal_force: T::lit(r.force_n),
                    image,
                }),
                Err(e) => bad.push((k, e.to_string())),
            }
        }
        if !bad.is_empty() {
            return Err(Error::InvalidSamples(bad));
        }
        Self::new(samples)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let records: Vec<SampleRecord> = self
            .samples
            .iter()
            .map(|s| SampleRecord {
                contact_position_mm: [
                    s.contact_position.x.to_f64_lossy(),
                    s.contact_position.y.to_f64_lossy(),
                    s.contact_position.z.to_f64_lossy(),
                ],
                force_n: s.normal_force.to_f64_lossy(),
                image: s.image.values().iter().map(|v| v.to_f64_lossy()).collect(),
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("records serialize")
    }
}

/// Fixed quantities of the calibration experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSetup<T> {
    pub layout: SensorLayout<T>,
    pub fingertip_radius: T,
    /// Radius of the spherical indenter, mm.
    pub indenter_radius: T,
    /// Half-width of the square slack window around each measured point, mm.
    pub slack: T,
    /// Spacing of the slack search grid, mm.
    pub slack_step: T,
}

impl<T: Real> Default for CalibrationSetup<T> {
    fn default() -> Self {
        Self {
            layout: SensorLayout::default(),
            fingertip_radius: T::lit(10.0),
            indenter_radius: T::lit(6.0),
            slack: T::lit(2.0),
            slack_step: T::lit(0.25),
        }
    }
}

impl<T: Real> CalibrationSetup<T> {
    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(self.fingertip_radius) || !positive(self.indenter_radius) || !positive(self.slack_step) {
            return Err(Error::Config("radii and slack step must be positive".into()));
        }
        if !(self.slack >= T::zero()) {
            return Err(Error::Config("slack must be non-negative".into()));
        }
        Ok(())
    }

    /// Slack offsets `[d_arc, d_axial]`, ordered so that the first of equally
    /// good candidates is the one closest to zero, then lexicographically smallest.
    pub fn offsets(&self) -> Vec<[T; 2]> {
        let n = (self.slack / self.slack_step + T::lit(1e-9)).floor().to_i64().unwrap_or(0);
        let mut out: Vec<[T; 2]> = (-n..=n)
            .flat_map(|a| (-n..=n).map(move |b| (a, b)))
            .map(|(a, b)| [T::lit(a as f64) * self.slack_step, T::lit(b as f64) * self.slack_step])
            .collect();
        out.sort_by(|p, q| {
            let np = p[0] * p[0] + p[1] * p[1];
            let nq = q[0] * q[0] + q[1] * q[1];
            np.partial_cmp(&nq)
                .unwrap()
                .then(p[0].partial_cmp(&q[0]).unwrap())
                .then(p[1].partial_cmp(&q[1]).unwrap())
        });
        out
    }

    /// `[arc length from the x axis, axial]` of a fingertip-frame point.
    pub fn surface_coords(&self, p: &Vec3<T>) -> [T; 2] {
        [self.fingertip_radius * p.y.atan2(p.x), p.z]
    }

    /// Surface point and outward normal for surface coordinates.
    pub fn surface_point(&self, coords: [T; 2]) -> (Vec3<T>, Vec3<T>) {
        let (s, c) = (coords[0] / self.fingertip_radius).sin_cos();
        let n = Vec3::new(c, s, T::zero());
        (Vec3::new(c * self.fingertip_radius, s * self.fingertip_radius, coords[1]), n)
    }

    /// Spherical indenter resting on the surface at `coords`, pressing with `force`.
    pub fn indentation(&self, coords: [T; 2], force: T) -> Result<ContactState<T>> {
        let (p, n) = self.surface_point(coords);
        let sphere = IndenterShape::sphere(self.indenter_radius, p + n * self.indenter_radius)?;
        ContactState::new(n, force, sphere)
    }

    /// Point set for one set of mounting parameters.
    pub fn points(&self, m: &MacroParams<T>) -> Result<TactilePointSet<T>> {
        TactilePointSet::build(
            self.layout,
            MountingParams::new(m.y, m.beta_deg, m.alpha_deg, self.fingertip_radius),
        )
    }
}

/// Mounting and elasticity of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct MacroParams<T> {
    pub y: T,
    pub beta_deg: T,
    pub alpha_deg: T,
    pub elasticity: T,
}

/// Estimated contact position of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct MicroEstimate<T> {
    pub estimated_position: Vec3<T>,
    /// `[d_arc, d_axial]` from the measured point, mm.
    pub offset: [T; 2],
    /// Squared distance between the normalized images.
    pub loss: T,
}

/// Simulated image of a calibration indentation.
pub fn simulate_indentation<T: Real>(
    points: &TactilePointSet<T>,
    setup: &CalibrationSetup<T>,
    coords: [T; 2],
    force: T,
    params: &SkinParams<T>,
) -> Result<TactileImage<T>> {
    Ok(simulate_contact(points, &setup.indentation(coords, force)?, params, None)?.0)
}

/// L1 normalization.
pub fn normalize_image<T: Real>(values: &[T]) -> Result<Vec<T>> {
    let sum: T = values.iter().copied().sum();
    if !(sum > T::zero()) {
        return Err(Error::ZeroImage);
    }
    Ok(values.iter().map(|v| *v / sum).collect())
}

fn normalized_distance<T: Real>(sim: &[T], measured_normalized: &[T]) -> Option<T> {
    let n = normalize_image(sim).ok()?;
    Some(n.iter().zip(measured_normalized).map(|(a, b)| (*a - *b) * (*a - *b)).sum())
}

/// Unscaled taxel forces of one indentation for every elasticity, with a
/// single ray cast. `None` entries where the sensor is not reached or the
/// force cannot be balanced.
fn forces_per_elasticity<T: Real>(
    points: &TactilePointSet<T>,
    contact: &ContactState<T>,
    elasticities: &[T],
) -> Result<Vec<Option<Vec<T>>>> {
    let rc = match cast_rays(points, contact, None) {
        Ok(rc) => rc,
        Err(Error::NoContactGeometry) => return Ok(vec![None; elasticities.len()]),
        Err(e) => return Err(e),
    };
    elasticities
        .iter()
        .map(|&e| match solve_max_penetration(&rc, points, contact, e) {
            Ok(sol) => {
                let f = taxel_forces(&rc, points, &sol, &contact.normal, e);
                Ok(f.iter().any(|v| *v > T::zero()).then_some(f))
            }
            Err(Error::ForceUnreachable { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// `table[offset][elasticity]`.
type ForceTable<T> = Vec<Vec<Option<Vec<T>>>>;

fn force_table<T: Real>(
    points: &TactilePointSet<T>,
    setup: &CalibrationSetup<T>,
    sample: &CalibrationSample<T>,
    offsets: &[[T; 2]],
    elasticities: &[T],
) -> Result<ForceTable<T>> {
    let base = setup.surface_coords(&sample.contact_position);
    offsets
        .iter()
        .map(|o| {
            let contact = setup.indentation([base[0] + o[0], base[1] + o[1]], sample.normal_force)?;
            forces_per_elasticity(points, &contact, elasticities)
        })
        .collect()
}

/// Best offset index and its normalized loss. Ties up to rounding, as for
/// images with a single active taxel, go to the offset closest to the
/// measured point.
fn pick_offset<T: Real>(
    table: &ForceTable<T>,
    offsets: &[[T; 2]],
    e_idx: usize,
    measured_normalized: &[T],
) -> Option<(usize, T)> {
    let dist = |o: usize| offsets[o][0] * offsets[o][0] + offsets[o][1] * offsets[o][1];
    let tol = T::lit(1e-12);
    let mut best: Option<(usize, T)> = None;
    for (o, row) in table.iter().enumerate() {
        if let Some(loss) = row[e_idx].as_deref().and_then(|f| normalized_distance(f, measured_normalized)) {
            if best.is_none_or(|(b, bl)| loss < bl - tol || ((loss - bl).abs() <= tol && dist(o) < dist(b))) {
                best = Some((o, loss));
            }
        }
    }
    best
}

fn micro_estimate<T: Real>(setup: &CalibrationSetup<T>, sample: &CalibrationSample<T>, offset: [T; 2], loss: T) -> MicroEstimate<T> {
    let base = setup.surface_coords(&sample.contact_position);
    let (p, _) = setup.surface_point([base[0] + offset[0], base[1] + offset[1]]);
    MicroEstimate {
        estimated_position: p,
        offset,
        loss,
    }
}

/// Exhaustive slack-window search for the contact position whose normalized
/// simulated image best matches the normalized measurement.
pub fn optimize_micro<T: Real>(
    sample: &CalibrationSample<T>,
    macro_params: &MacroParams<T>,
    setup: &CalibrationSetup<T>,
) -> Result<MicroEstimate<T>> {
    let points = setup.points(macro_params)?;
    optimize_micro_on(&points, sample, macro_params.elasticity, setup)
}

/// [`optimize_micro`] on a prebuilt point set.
pub fn optimize_micro_on<T: Real>(
    points: &TactilePointSet<T>,
    sample: &CalibrationSample<T>,
    elasticity: T,
    setup: &CalibrationSetup<T>,
) -> Result<MicroEstimate<T>> {
    let measured = normalize_image(sample.image.values())?;
    let offsets = setup.offsets();
    let table = force_table(points, setup, sample, &offsets, &[elasticity])?;
    let (o, loss) = pick_offset(&table, &offsets, 0, &measured).ok_or(Error::NoOverlap)?;
    Ok(micro_estimate(setup, sample, offsets[o], loss))
}

/// Least-squares scale per taxel, `S_j = sum_k T_kj U_kj / sum_k U_kj^2`.
/// Taxels never excited take the mean of the others.
pub fn solve_scales<T: Real>(measured: &[&TactileImage<T>], unscaled: &[Vec<T>]) -> Result<Vec<T>> {
    if measured.is_empty() || measured.len() != unscaled.len() {
        return Err(Error::Inconsistent(format!(
            "{} images for {} simulated force sets",
            measured.len(),
            unscaled.len()
        )));
    }
    let taxels = measured[0].len();
    let mut scales: Vec<Option<T>> = (0..taxels)
        .map(|j| {
            let (mut tu, mut uu) = (T::zero(), T::zero());
            for (img, u) in measured.iter().zip(unscaled) {
                tu += img.values()[j] * u[j];
                uu += u[j] * u[j];
            }
            (uu > T::zero()).then(|| tu / uu)
        })
        .collect();
    let solved: Vec<T> = scales.iter().flatten().copied().collect();
    if solved.is_empty() {
        return Err(Error::NoSolvableTaxel);
    }
    let mean = solved.iter().copied().sum::<T>() / T::from_count(solved.len());
    for s in scales.iter_mut().filter(|s| s.is_none()) {
        *s = Some(mean);
    }
    Ok(scales.into_iter().map(|s| s.unwrap()).collect())
}

/// `(1 / (16 N)) sum_k ||sim_k - measured_k||^2`.
pub fn mse<T: Real>(simulated: &[TactileImage<T>], measured: &[&TactileImage<T>]) -> Result<T> {
    if measured.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if simulated.len() != measured.len() {
        return Err(Error::Inconsistent("image count mismatch".into()));
    }
    let taxels = measured[0].len();
    let sq: T = simulated
        .iter()
        .zip(measured)
        .flat_map(|(s, m)| s.values().iter().zip(m.values()).map(|(a, b)| (*a - *b) * (*a - *b)))
        .sum();
    Ok(sq / T::from_count(taxels * measured.len()))
}

/// Mean squared taxel error of the dataset simulated at the estimated positions.
pub fn mse_loss<T: Real>(
    dataset: &CalibrationDataset<T>,
    macro_params: &MacroParams<T>,
    scales: &[T],
    micro: &[MicroEstimate<T>],
    setup: &CalibrationSetup<T>,
) -> Result<T> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if micro.len() != dataset.len() {
        return Err(Error::Inconsistent("one micro estimate per sample required".into()));
    }
    let points = setup.points(macro_params)?;
    let params = SkinParams::new(macro_params.elasticity, scales.to_vec())?;
    let simulated = dataset
        .samples()
        .iter()
        .zip(micro)
        .map(|(s, m)| {
            let coords = setup.surface_coords(&m.estimated_position);
            simulate_indentation(&points, setup, coords, s.normal_force, &params)
        })
        .collect::<Result<Vec<_>>>()?;
    let measured: Vec<&TactileImage<T>> = dataset.samples().iter().map(|s| &s.image).collect();
    mse(&simulated, &measured)
}

/// One grid axis: explicit values, a linear range by step, or `count` points
/// spaced linearly or logarithmically between `min` and `max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum AxisSpec {
    Values(Vec<f64>),
    Step {
        min: f64,
        max: f64,
        step: f64,
    },
    Count {
        min: f64,
        max: f64,
        count: usize,
        #[serde(default)]
        log: bool,
    },
}

impl AxisSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let bad = |m: &str| Err(Error::Config(format!("grid axis: {m}")));
        let v = match *self {
            AxisSpec::Values(ref v) => v.clone(),
            AxisSpec::Step { min, max, step } => {
                if !(step > 0.0) || !(max >= min) {
                    return bad("need step > 0 and max >= min");
                }
                let n = ((max - min) / step + 1e-9).floor() as usize;
                (0..=n).map(|k| min + k as f64 * step).collect()
            }
            AxisSpec::Count { min, max, count, log } => {
                if count == 0 || !(max >= min) || (log && !(min > 0.0)) {
                    return bad("need count > 0, max >= min, and min > 0 for log spacing");
                }
                if count == 1 {
                    vec![min]
                } else if log {
                    let (a, b) = (min.ln(), max.ln());
                    (0..count)
                        .map(|k| match k {
                            0 => min,
                            k if k + 1 == count => max,
                            k => (a + (b - a) * k as f64 / (count - 1) as f64).exp(),
                        })
                        .collect()
                } else {
                    (0..count)
                        .map(|k| min + (max - min) * k as f64 / (count - 1) as f64)
                        .collect()
                }
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return bad("values must be finite and non-empty");
        }
        Ok(v)
    }
}

/// Macro grid plus the experiment constants, as read from a grid file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub y_mm: AxisSpec,
    pub beta_deg: AxisSpec,
    pub alpha_deg: AxisSpec,
    #[serde(rename = "E_MPa_per_m")]
    pub elasticity: AxisSpec,
    #[serde(default = "default_radius")]
    pub fingertip_radius_mm: f64,
    #[serde(default = "default_indenter")]
    pub indenter_radius_mm: f64,
    #[serde(default = "default_slack")]
    pub slack_mm: f64,
    #[serde(default = "default_slack_step")]
    pub slack_step_mm: f64,
    #[serde(default = "default_resolution")]
    pub resolution_mm: f64,
}

fn default_radius() -> f64 {
    10.0
}
fn default_indenter() -> f64 {
    6.0
}
fn default_slack() -> f64 {
    2.0
}
fn default_slack_step() -> f64 {
    0.25
}
fn default_resolution() -> f64 {
    0.25
}

impl Default for GridSpec {
    /// `y` over the cylinder length usable by a 14.5 mm sensor at 0.5 mm,
    /// `beta` at 2.5 deg, `alpha` at 5 deg, `E` at 12 log-spaced points in 100..1600.
    fn default() -> Self {
        Self {
            y_mm: AxisSpec::Step {
                min: 15.5,
                max: 31.5,
                step: 0.5,
            },
            beta_deg: AxisSpec::Step {
                min: -12.5,
                max: 12.5,
                step: 2.5,
            },
            alpha_deg: AxisSpec::Step {
                min: -15.0,
                max: 15.0,
                step: 5.0,
            },
            elasticity: AxisSpec::Count {
                min: 100.0,
                max: 1600.0,
                count: 12,
                log: true,
            },
            fingertip_radius_mm: default_radius(),
            indenter_radius_mm: default_indenter(),
            slack_mm: default_slack(),
            slack_step_mm: default_slack_step(),
            resolution_mm: default_resolution(),
        }
    }
}

impl GridSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.setup::<f64>()?;
        spec.grid::<f64>()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn setup<T: Real>(&self) -> Result<CalibrationSetup<T>> {
        let setup = CalibrationSetup {
            layout: SensorLayout::default().with_resolution(T::lit(self.resolution_mm)),
            fingertip_radius: T::lit(self.fingertip_radius_mm),
            indenter_radius: T::lit(self.indenter_radius_mm),
            slack: T::lit(self.slack_mm),
            slack_step: T::lit(self.slack_step_mm),
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn grid<T: Real>(&self) -> Result<MacroGrid<T>> {
        let conv = |a: &AxisSpec| -> Result<Vec<T>> { Ok(a.values()?.into_iter().map(T::lit).collect()) };
        let grid = MacroGrid {
            y: conv(&self.y_mm)?,
            beta_deg: conv(&self.beta_deg)?,
            alpha_deg: conv(&self.alpha_deg)?,
            elasticity: conv(&self.elasticity)?,
        };
        if grid.elasticity.iter().any(|e| !(*e > T::zero())) {
            return Err(Error::Config("elasticity grid values must be positive".into()));
        }
        Ok(grid)
    }
}

/// Expanded grid values per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroGrid<T> {
    pub y: Vec<T>,
    pub beta_deg: Vec<T>,
    pub alpha_deg: Vec<T>,
    pub elasticity: Vec<T>,
}

impl<T: Real> MacroGrid<T> {
    pub fn cell_count(&self) -> usize {
        self.y.len() * self.beta_deg.len() * self.alpha_deg.len() * self.elasticity.len()
    }

    fn mounts(&self) -> Vec<(T, T, T)> {
        let mut out = Vec::with_capacity(self.y.len() * self.beta_deg.len() * self.alpha_deg.len());
        for &y in &self.y {
            for &b in &self.beta_deg {
                for &a in &self.alpha_deg {
                    out.push((y, b, a));
                }
            }
        }
        out
    }
}

/// Outcome of one macro cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct CellResult<T> {
    pub params: MacroParams<T>,
    pub loss: T,
    /// Per-taxel scales; empty when no taxel was excited by any sample.
    pub scales: Vec<T>,
    /// Per sample; `None` where no slack offset produced an image.
    pub micro: Vec<Option<MicroEstimate<T>>>,
}

impl<T: Real> CellResult<T> {
    pub fn no_overlap_count(&self) -> usize {
        self.micro.iter().filter(|m| m.is_none()).count()
    }
}

/// Every evaluated cell, in `y`, `beta`, `alpha`, `E` order.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct LossGrid<T> {
    pub cells: Vec<CellResult<T>>,
    pub valid_count: usize,
}

impl<T: Real> LossGrid<T> {
    pub fn best(&self) -> Option<&CellResult<T>> {
        self.cells
            .iter()
            .fold(None, |acc: Option<&CellResult<T>>, c| match acc {
                Some(b) if b.loss <= c.loss => Some(b),
                _ => Some(c),
            })
    }

    /// One row per cell.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["y_mm", "beta_deg", "alpha_deg", "E_MPa_per_m", "loss", "scale_mean", "no_overlap"])?;
        for c in &self.cells {
            let mean = if c.scales.is_empty() {
                String::new()
            } else {
                (c.scales.iter().copied().sum::<T>() / T::from_count(c.scales.len())).to_string()
            };
            out.write_record([
                c.params.y.to_string(),
                c.params.beta_deg.to_string(),
                c.params.alpha_deg.to_string(),
                c.params.elasticity.to_string(),
                c.loss.to_string(),
                mean,
                c.no_overlap_count().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Bounding box of the loss valley.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct Intervals<T> {
    pub y_mm: [T; 2],
    pub beta_deg: [T; 2],
    pub alpha_deg: [T; 2],
    #[serde(rename = "E_MPa_per_m")]
    pub elasticity: [T; 2],
    #[serde(rename = "S_per_N")]
    pub scale: [T; 2],
}

impl<T: Real> Intervals<T> {
    /// One `name ∈ [lo unit; hi unit]` line per parameter.
    pub fn table(&self) -> String {
        let row = |name: &str, r: &[T; 2], unit: &str| {
            let fmt = |v: T| {
                let v = v.to_f64_lossy();
                // two decimals are enough for every grid in use; drop trailing zeros
                let s = format!("{v:.2}");
                let s = s.trim_end_matches('0').trim_end_matches('.');
                if s == "-0" { "0".to_string() } else { s.to_string() }
            };
            format!("{name} \u{2208} [{} {unit}; {} {unit}]\n", fmt(r[0]), fmt(r[1]))
        };
        [
            row("y", &self.y_mm, "mm"),
            row("beta", &self.beta_deg, "deg"),
            row("alpha", &self.alpha_deg, "deg"),
            row("E", &self.elasticity, "MPa/m"),
            row("S", &self.scale, "1/N"),
        ]
        .concat()
    }
}

/// Bounding box of all cells with `loss <= threshold`; the scale interval
/// spans every per-taxel scale of those cells.
pub fn extract_intervals<T: Real>(grid: &LossGrid<T>, threshold: T) -> Result<Intervals<T>> {
    let valley: Vec<&CellResult<T>> = grid.cells.iter().filter(|c| c.loss <= threshold).collect();
    if valley.is_empty() {
        let best = grid.best();
        return Err(Error::NoValley {
            threshold: threshold.to_f64_lossy(),
            best_loss: best.map_or(f64::INFINITY, |b| b.loss.to_f64_lossy()),
            best_cell: best.map_or_else(String::new, |b| {
                format!(
                    "y={} beta={} alpha={} E={}",
                    b.params.y, b.params.beta_deg, b.params.alpha_deg, b.params.elasticity
                )
            }),
        });
    }
    let span = |f: &dyn Fn(&CellResult<T>) -> T| {
        valley.iter().fold([T::infinity(), T::neg_infinity()], |[lo, hi], c| {
            let v = f(c);
            [lo.min(v), hi.max(v)]
        })
    };
    let scales = valley
        .iter()
        .flat_map(|c| c.scales.iter().copied())
        .fold([T::infinity(), T::neg_infinity()], |[lo, hi], s| [lo.min(s), hi.max(s)]);
    Ok(Intervals {
        y_mm: span(&|c| c.params.y),
        beta_deg: span(&|c| c.params.beta_deg),
        alpha_deg: span(&|c| c.params.alpha_deg),
        elasticity: span(&|c| c.params.elasticity),
        scale: if scales[0].is_finite() { scales } else { [T::nan(), T::nan()] },
    })
}

/// Full calibration outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct CalibrationResult<T> {
    pub intervals: Intervals<T>,
    pub best_cell: CellResult<T>,
    pub threshold: T,
    pub grid: LossGrid<T>,
}

/// Micro search, scale fit and loss for every `E` of one mounting.
fn evaluate_mount<T: Real>(
    dataset: &CalibrationDataset<T>,
    setup: &CalibrationSetup<T>,
    offsets: &[[T; 2]],
    measured_normalized: &[Vec<T>],
    mount: (T, T, T),
    elasticities: &[T],
) -> Result<Vec<CellResult<T>>> {
    let (y, beta_deg, alpha_deg) = mount;
    let points = setup.points(&MacroParams {
        y,
        beta_deg,
        alpha_deg,
        elasticity: T::one(),
    })?;
    let tables = dataset
        .samples()
        .par_iter()
        .map(|s| force_table(&points, setup, s, offsets, elasticities))
        .collect::<Result<Vec<_>>>()?;
    let measured: Vec<&TactileImage<T>> = dataset.samples().iter().map(|s| &s.image).collect();
    let taxels = setup.layout.taxel_count();

    let cells = elasticities
        .iter()
        .enumerate()
        .map(|(e_idx, &elasticity)| {
            let mut micro = Vec::with_capacity(dataset.len());
            let mut unscaled = Vec::with_capacity(dataset.len());
            for (k, table) in tables.iter().enumerate() {
                match pick_offset(table, offsets, e_idx, &measured_normalized[k]) {
                    Some((o, loss)) => {
                        micro.push(Some(micro_estimate(setup, &dataset.samples()[k], offsets[o], loss)));
                        unscaled.push(table[o][e_idx].clone().expect("picked offsets have forces"));
                    }
                    None => {
                        micro.push(None);
                        unscaled.push(vec![T::zero(); taxels]);
                    }
                }
            }
            let scales = solve_scales(&measured, &unscaled).unwrap_or_default();
            let simulated = unscaled
                .iter()
                .map(|u| {
                    let v = u
                        .iter()
                        .enumerate()
                        .map(|(j, f)| scales.get(j).map_or(T::zero(), |s| clip_taxel(*f * *s)))
                        .collect();
                    TactileImage::from_values(setup.layout.taxel_rows, setup.layout.taxel_cols, v)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CellResult {
                params: MacroParams {
                    y,
                    beta_deg,
                    alpha_deg,
                    elasticity,
                },
                loss: mse(&simulated, &measured)?,
                scales,
                micro,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cells)
}

/// Evaluates every cell of the grid. Cells are independent and evaluated in
/// parallel; the output order is fixed.
pub fn evaluate_grid<T: Real>(
    dataset: &CalibrationDataset<T>,
    grid: &MacroGrid<T>,
    setup: &CalibrationSetup<T>,
) -> Result<LossGrid<T>> {
    setup.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let offsets = setup.offsets();
    let measured_normalized = dataset
        .samples()
        .iter()
        .map(|s| normalize_image(s.image.values()))
        .collect::<Result<Vec<_>>>()?;
    let per_mount = grid
        .mounts()
        .into_par_iter()
        .map(|m| evaluate_mount(dataset, setup, &offsets, &measured_normalized, m, &grid.elasticity))
        .collect::<Result<Vec<_>>>()?;
    Ok(LossGrid {
        cells: per_mount.into_iter().flatten().collect(),
        valid_count: dataset.len(),
    })
}

/// Grid search followed by valley extraction.
pub fn grid_search_macro<T: Real>(
    dataset: &CalibrationDataset<T>,
    grid: &MacroGrid<T>,
    setup: &CalibrationSetup<T>,
    threshold: T,
) -> Result<CalibrationResult<T>> {
    let loss_grid = evaluate_grid(dataset, grid, setup)?;
    let intervals = extract_intervals(&loss_grid, threshold)?;
    let best_cell = loss_grid.best().expect("non-empty valley implies cells").clone();
    Ok(CalibrationResult {
        intervals,
        best_cell,
        threshold,
        grid: loss_grid,
    })
}

//! Scene files: sensor, skin, indenter, force and placement over time.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contact_query::{analytic_contact, ContactState, Fingertip, IndenterShape, Scene, TriangleMesh};
use crate::env_support::estimate_contact_point;
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Pose, Vec3};
use crate::sensor_geometry::{SensorConfig, TactilePointSet};
use crate::skin_response::{simulate_contact, SkinParams};
use crate::tactile_image::TactileImage;

/// Sensor configuration given inline or as a path relative to the scene file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SensorRef {
    File(PathBuf),
    Inline(SensorConfig),
}

impl Default for SensorRef {
    fn default() -> Self {
        SensorRef::Inline(SensorConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleSpec {
    Uniform(f64),
    PerTaxel(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkinSpec {
    #[serde(rename = "elasticity_MPa_per_m")]
    pub elasticity: f64,
    #[serde(rename = "scales_per_N")]
    pub scales: ScaleSpec,
}

impl Default for SkinSpec {
    fn default() -> Self {
        let d = SkinParams::<f64>::default();
        Self {
            elasticity: d.elasticity,
            scales: ScaleSpec::Uniform(d.scales[0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum IndenterSpec {
    Sphere {
        radius_mm: f64,
    },
    /// Axis along local z for fingertip placement, along `axis_deg` on the
    /// sensor for sensor placement.
    Cylinder {
        radius_mm: f64,
        half_length_mm: f64,
    },
    /// STL or OBJ file; vertex coordinates multiplied by `scale` give mm.
    Mesh {
        path: PathBuf,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Where the indenter is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "snake_case", deny_unknown_fields)]
pub enum Placement {
    /// Resting on the skin at flat sensor coordinates, pressing along the
    /// surface normal. `axis_deg` orients cylinders and meshes in the sensor plane.
    Sensor {
        at_mm: [f64; 2],
        #[serde(default)]
        axis_deg: f64,
    },
    /// Explicit pose in the fingertip frame; the contact normal comes from the
    /// analytic contact provider.
    Fingertip {
        position_mm: [f64; 3],
        #[serde(default)]
        rotation_deg: [f64; 3],
    },
}

impl Placement {
    fn lerp(&self, other: &Self, s: f64) -> Result<Self> {
        let mix = |a: f64, b: f64| a + (b - a) * s;
        match (self, other) {
            (Placement::Sensor { at_mm: a, axis_deg: x }, Placement::Sensor { at_mm: b, axis_deg: y }) => {
                Ok(Placement::Sensor {
                    at_mm: [mix(a[0], b[0]), mix(a[1], b[1])],
                    axis_deg: mix(*x, *y),
                })
            }
            (
                Placement::Fingertip {
                    position_mm: a,
                    rotation_deg: ra,
                },
                Placement::Fingertip {
                    position_mm: b,
                    rotation_deg: rb,
                },
            ) => Ok(Placement::Fingertip {
                position_mm: [mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])],
                rotation_deg: [mix(ra[0], rb[0]), mix(ra[1], rb[1]), mix(ra[2], rb[2])],
            }),
            _ => Err(Error::Config("trajectory mixes sensor and fingertip placements".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub t_s: f64,
    #[serde(flatten)]
    pub placement: Placement,
}

/// Constant force or `(t_s, N)` pairs interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ForceSpec {
    Constant(f64),
    Schedule(Vec<(f64, f64)>),
}

impl ForceSpec {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            ForceSpec::Constant(f) => *f,
            ForceSpec::Schedule(knots) => interpolate(knots, t, |a, b, s| a + (b - a) * s),
        }
    }
}

fn interpolate<V: Copy>(knots: &[(f64, V)], t: f64, mix: impl Fn(V, V, f64) -> V) -> V {
    let k = knots.partition_point(|(tk, _)| *tk <= t);
    if k == 0 {
        return knots[0].1;
    }
    if k == knots.len() {
        return knots[k - 1].1;
    }
    let (t0, a) = knots[k - 1];
    let (t1, b) = knots[k];
    mix(a, b, (t - t0) / (t1 - t0))
}

fn check_times(times: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let times: Vec<f64> = times.collect();
    if times.is_empty() {
        return Err(Error::Config(format!("{what} is empty")));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!("{what} times must be finite and strictly increasing")));
    }
    Ok(())
}

/// A scene file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default)]
    pub sensor: SensorRef,
    #[serde(default)]
    pub skin: SkinSpec,
    pub indenter: IndenterSpec,
    #[serde(rename = "force_N")]
    pub force: ForceSpec,
    #[serde(default)]
    pub placement: Option<Placement>,
    #[serde(default)]
    pub trajectory: Option<Vec<Keyframe>>,
    /// Simulated time; defaults to the last trajectory or schedule time.
    #[serde(default)]
    pub duration_s: Option<f64>,
    #[serde(default = "default_sim_rate")]
    pub sim_rate_hz: f64,
    /// Fixed ray shift distance D; automatic when absent.
    #[serde(default)]
    pub shift_mm: Option<f64>,
}

fn default_sim_rate() -> f64 {
    1000.0
}

/// One tactile evaluation of a scene.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub step: u64,
    pub t_s: f64,
    pub force_n: f64,
    pub image: TactileImage<f64>,
    pub eps_max_mm: f64,
    /// Intensity-weighted taxel centroid, flat sensor coordinates.
    pub centroid_mm: Option<[f64; 2]>,
    /// Ground-truth contact point, flat sensor coordinates.
    pub truth_mm: Option<[f64; 2]>,
    /// Wall-clock time of the evaluation.
    pub eval_ms: f64,
}

/// A scene with its files loaded and point set built.
pub struct LoadedScene {
    pub spec: SceneSpec,
    pub sensor: SensorConfig,
    pub points: TactilePointSet<f64>,
    pub params: SkinParams<f64>,
    pub fingertip: Fingertip<f64>,
    mesh: Option<Arc<TriangleMesh<f64>>>,
}

impl SceneSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.placement, &self.trajectory) {
            (Some(_), None) => {}
            (None, Some(kf)) => {
                check_times(kf.iter().map(|k| k.t_s), "trajectory")?;
                let first = kf[0].placement;
                for k in kf {
                    first.lerp(&k.placement, 0.0)?;
                }
            }
            _ => return Err(Error::Config("give exactly one of placement and trajectory".into())),
        }
        match &self.force {
            ForceSpec::Constant(f) if !(*f >= 0.0) || !f.is_finite() => {
                return Err(Error::Config(format!("force must be finite and non-negative, got {f}")))
            }
            ForceSpec::Schedule(knots) => {
                check_times(knots.iter().map(|k| k.0), "force schedule")?;
                if knots.iter().any(|(_, f)| !(*f >= 0.0) || !f.is_finite()) {
                    return Err(Error::Config("scheduled forces must be finite and non-negative".into()));
                }
            }
            _ => {}
        }
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match &self.indenter {
            IndenterSpec::Sphere { radius_mm } if !positive(*radius_mm) => {
                return Err(Error::Config("sphere radius must be positive".into()))
            }
            IndenterSpec::Cylinder {
                radius_mm,
                half_length_mm,
            } if !positive(*radius_mm) || !positive(*half_length_mm) => {
                return Err(Error::Config("cylinder radius and half length must be positive".into()))
            }
            IndenterSpec::Mesh { scale, .. } if !positive(*scale) => {
                return Err(Error::Config("mesh scale must be positive".into()))
            }
            _ => {}
        }
        if !positive(self.sim_rate_hz) {
            return Err(Error::Config("sim rate must be positive".into()));
        }
        if let Some(d) = self.duration_s {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(Error::Config("duration must be finite and non-negative".into()));
            }
        }
        if let Some(d) = self.shift_mm {
            if !positive(d) {
                return Err(Error::Config("shift distance must be positive".into()));
            }
        }
        Ok(())
    }

    /// Reads sensor and mesh files relative to `base_dir` and builds the point set.
    pub fn load(self, base_dir: &Path) -> Result<LoadedScene> {
        self.validate()?;
        let sensor = match &self.sensor {
            SensorRef::Inline(c) => {
                c.validate()?;
                *c
            }
            SensorRef::File(p) => SensorConfig::load(base_dir.join(p))?,
        };
        let points = sensor.build::<f64>()?;
        let params = match &self.skin.scales {
            ScaleSpec::Uniform(s) => SkinParams::uniform(self.skin.elasticity, *s, points.taxel_count()),
            ScaleSpec::PerTaxel(v) => SkinParams::new(self.skin.elasticity, v.clone()),
        }?;
        if params.scales.len() != points.taxel_count() {
            return Err(Error::Config(format!(
                "{} scales for {} taxels",
                params.scales.len(),
                points.taxel_count()
            )));
        }
        let mesh = match &self.indenter {
            IndenterSpec::Mesh { path, scale } => Some(Arc::new(TriangleMesh::load(base_dir.join(path), *scale)?)),
            _ => None,
        };
        Ok(LoadedScene {
            fingertip: Fingertip::with_radius(sensor.mount.radius_mm),
            spec: self,
            sensor,
            points,
            params,
            mesh,
        })
    }

    fn end_time(&self) -> f64 {
        if let Some(d) = self.duration_s {
            return d;
        }
        let traj = self.trajectory.as_ref().and_then(|k| k.last()).map_or(0.0, |k| k.t_s);
        let sched = match &self.force {
            ForceSpec::Schedule(k) => k.last().map_or(0.0, |k| k.0),
            ForceSpec::Constant(_) => 0.0,
        };
        traj.max(sched)
    }

    fn placement_at(&self, t: f64) -> Result<Placement> {
        match (&self.placement, &self.trajectory) {
            (Some(p), _) => Ok(*p),
            (None, Some(kf)) => {
                let k = kf.partition_point(|f| f.t_s <= t);
                if k == 0 {
                    return Ok(kf[0].placement);
                }
                if k == kf.len() {
                    return Ok(kf[k - 1].placement);
                }
                let (a, b) = (&kf[k - 1], &kf[k]);
                a.placement.lerp(&b.placement, (t - a.t_s) / (b.t_s - a.t_s))
            }
            (None, None) => Err(Error::Config("scene has no placement".into())),
        }
    }
}

impl LoadedScene {
    /// Simulation steps that get a tactile evaluation: every
    /// `sim_rate / cadence`-th step from 0 through the end time inclusive.
    pub fn schedule(&self, cadence_hz: f64) -> Result<Vec<(u64, f64)>> {
        let rate = self.spec.sim_rate_hz;
        if !(cadence_hz > 0.0) || cadence_hz > rate {
            return Err(Error::Config(format!(
                "cadence must lie in (0, {rate}] Hz, got {cadence_hz}"
            )));
        }
        let stride = (rate / cadence_hz).round().max(1.0) as u64;
        let last = (self.spec.end_time() * rate + 1e-9).floor() as u64;
        Ok((0..=last / stride).map(|k| (k * stride, (k * stride) as f64 / rate)).collect())
    }

    fn contact_at(&self, placement: &Placement, force: f64) -> Result<Option<(ContactState<f64>, [f64; 2])>> {
        let mount = self.points.mount();
        match *placement {
            Placement::Sensor { at_mm, axis_deg } => {
                let (p, n) = mount.wrap_to_cylinder(at_mm);
                let tangent = mount.surface_tangent(at_mm, axis_deg);
                let indenter = match &self.spec.indenter {
                    IndenterSpec::Sphere { radius_mm } => IndenterShape::sphere(*radius_mm, p + n * *radius_mm)?,
                    IndenterSpec::Cylinder {
                        radius_mm,
                        half_length_mm,
                    } => IndenterShape::cylinder(*radius_mm, tangent, *half_length_mm, p + n * *radius_mm)?,
                    IndenterSpec::Mesh { .. } => {
                        let mesh = self.mesh.clone().expect("loaded with the scene");
                        // local z along the normal, local x along the tangent
                        let rot = Mat3::from_columns(tangent, n.cross(&tangent), n);
                        let lift = mesh
                            .vertices()
                            .iter()
                            .map(|v| -rot.mul_vec(v).dot(&n))
                            .fold(f64::NEG_INFINITY, f64::max);
                        IndenterShape::mesh(mesh, Pose::new(rot, p + n * lift))?
                    }
                };
                Ok(Some((ContactState::new(n, force, indenter)?, at_mm)))
            }
            Placement::Fingertip {
                position_mm,
                rotation_deg,
            } => {
                let rot = Mat3::from_euler_deg(rotation_deg[0], rotation_deg[1], rotation_deg[2]);
                let pose = Pose::new(rot, Vec3::from(position_mm));
                let indenter = match &self.spec.indenter {
                    IndenterSpec::Sphere { radius_mm } => IndenterShape::sphere(*radius_mm, pose.translation)?,
                    IndenterSpec::Cylinder {
                        radius_mm,
                        half_length_mm,
                    } => IndenterShape::new(
                        crate::contact_query::ShapeKind::Cylinder {
                            radius: *radius_mm,
                            axis: Vec3::z_axis(),
                            half_length: *half_length_mm,
                        },
                        pose,
                    )?,
                    IndenterSpec::Mesh { .. } => {
                        IndenterShape::mesh(self.mesh.clone().expect("loaded with the scene"), pose)?
                    }
                };
                let scene = Scene {
                    fingertip: self.fingertip,
                    indenter,
                };
                Ok(analytic_contact(&scene, force)?.map(|c| {
                    let core = self.fingertip.core_point(&pose.translation);
                    let truth = mount.unwrap_from_cylinder(&(core + c.normal * self.fingertip.radius));
                    (c, truth)
                }))
            }
        }
    }

    /// Tactile image at simulated time `t`.
    pub fn evaluate(&self, step: u64, t: f64) -> Result<Evaluation> {
        let start = Instant::now();
        let force = self.spec.force.at(t);
        let placement = self.spec.placement_at(t)?;
        let rows = self.sensor.taxel_rows;
        let cols = self.sensor.taxel_cols;
        let (image, eps, truth) = match self.contact_at(&placement, force)? {
            Some((contact, truth)) => {
                let (img, sol) = simulate_contact(&self.points, &contact, &self.params, self.spec.shift_mm)?;
                (img, sol.eps_max, Some(truth))
            }
            None => (TactileImage::zeros(rows, cols), 0.0, None),
        };
        let centroid_mm = estimate_contact_point(&image, self.points.layout());
        Ok(Evaluation {
            step,
            t_s: t,
            force_n: force,
            image,
            eps_max_mm: eps,
            centroid_mm,
            truth_mm: truth,
            eval_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    }

    /// All evaluations at `cadence_hz`, in step order.
    pub fn run(&self, cadence_hz: f64) -> Result<Vec<Evaluation>> {
        self.schedule(cadence_hz)?
            .into_par_iter()
            .map(|(step, t)| self.evaluate(step, t))
            .collect()
    }
}

/// Writes the sweep track: one row per evaluation with the image, centroid,
/// ground truth and timing. Missing points are empty fields.
pub fn write_track_csv<W: Write>(evals: &[Evaluation], mut w: W) -> Result<()> {
    let n = evals.first().map_or(16, |e| e.image.len());
    let mut header = vec!["step".to_string(), "t_s".into(), "force_N".into()];
    header.extend((0..n).map(|j| format!("t{j}")));
    header.extend(
        ["centroid_u_mm", "centroid_v_mm", "truth_u_mm", "truth_v_mm", "eps_max_mm", "eval_ms"].map(String::from),
    );
    writeln!(w, "{}", header.join(","))?;
    let opt = |p: Option<[f64; 2]>, k: usize| p.map_or(String::new(), |p| p[k].to_string());
    for e in evals {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            e.step,
            e.t_s,
            e.force_n,
            e.image.to_csv_row(),
            opt(e.centroid_mm, 0),
            opt(e.centroid_mm, 1),
            opt(e.truth_mm, 0),
            opt(e.truth_mm, 1),
            e.eps_max_mm,
            e.eval_ms
        )?;
    }
    Ok(())
}

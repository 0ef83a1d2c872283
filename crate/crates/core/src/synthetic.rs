//! Synthetic calibration datasets with known ground truth.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::calibration::{simulate_indentation, CalibrationDataset, CalibrationSample, CalibrationSetup, MacroParams};
use crate::error::{Error, Result};
use crate::randomization::instance_rng;
use crate::sensor_geometry::SensorLayout;
use crate::skin_response::SkinParams;
use crate::tactile_image::{clip_taxel, TactileImage, TAXEL_MAX};

/// Ground truth and noise of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub y_mm: f64,
    pub beta_deg: f64,
    pub alpha_deg: f64,
    #[serde(rename = "E_MPa_per_m")]
    pub elasticity: f64,
    #[serde(rename = "scales_per_N")]
    pub scales: Vec<f64>,
    pub samples: usize,
    #[serde(rename = "force_N")]
    pub force: [f64; 2],
    /// Largest distance between the recorded and the true contact point.
    pub position_error_mm: f64,
    /// Range of the per-taxel noise mean.
    pub taxel_offset: [f64; 2],
    /// Range of the per-taxel noise standard deviation.
    pub taxel_noise_std: [f64; 2],
    /// Contacts are drawn in the flat square `[-half, half]^2` of the sensor.
    pub region_half_width_mm: f64,
    /// A measured taxel counts as active above this value.
    pub active_threshold: f64,
    pub quantize: bool,
    pub seed: u64,
    pub fingertip_radius_mm: f64,
    pub indenter_radius_mm: f64,
    pub resolution_mm: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            y_mm: 23.5,
            beta_deg: 0.0,
            alpha_deg: 0.0,
            elasticity: 542.0,
            scales: vec![68.5; 16],
            samples: 24,
            force: [1.0, 4.0],
            position_error_mm: 1.5,
            taxel_offset: [-5.0, 5.0],
            taxel_noise_std: [0.0, 5.0],
            region_half_width_mm: 7.25,
            active_threshold: 10.0,
            quantize: true,
            seed: 0,
            fingertip_radius_mm: 10.0,
            indenter_radius_mm: 6.0,
            resolution_mm: 0.25,
        }
    }
}

/// Generated samples plus what the calibration should recover.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: CalibrationDataset<f64>,
    /// True `[arc, axial]` surface coordinates of every sample.
    pub true_coords: Vec<[f64; 2]>,
    pub taxel_offsets: Vec<f64>,
    pub taxel_noise_std: Vec<f64>,
}

impl SynthSpec {
    pub fn truth(&self) -> MacroParams<f64> {
        MacroParams {
            y: self.y_mm,
            beta_deg: self.beta_deg,
            alpha_deg: self.alpha_deg,
            elasticity: self.elasticity,
        }
    }

    pub fn setup(&self) -> CalibrationSetup<f64> {
        CalibrationSetup {
            layout: SensorLayout::default().with_resolution(self.resolution_mm),
            fingertip_radius: self.fingertip_radius_mm,
            indenter_radius: self.indenter_radius_mm,
            ..CalibrationSetup::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.setup().validate()?;
        SkinParams::new(self.elasticity, self.scales.clone())?;
        let range = |r: [f64; 2]| r[0] <= r[1] && r[0].is_finite() && r[1].is_finite();
        if !range(self.force) || !(self.force[0] > 0.0) {
            return Err(Error::Config("force range must be positive and ordered".into()));
        }
        if !range(self.taxel_offset) || !range(self.taxel_noise_std) || self.taxel_noise_std[0] < 0.0 {
            return Err(Error::Config("noise ranges must be ordered, std non-negative".into()));
        }
        if !(self.position_error_mm >= 0.0) || !(self.region_half_width_mm > 0.0) || !(self.active_threshold >= 0.0) {
            return Err(Error::Config("position error and region must be non-negative".into()));
        }
        if self.samples == 0 {
            return Err(Error::EmptyDataset);
        }
        Ok(())
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, r: [f64; 2]) -> f64 {
    rng.random_range(r[0]..=r[1])
}

/// Draws contacts over the sensor, drops those whose noise-free image
/// saturates, adds per-taxel Gaussian noise, keeps images with at least two
/// active taxels and moves each recorded contact point by up to
/// `position_error_mm`.
pub fn synthesize(spec: &SynthSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let setup = spec.setup();
    let truth = spec.truth();
    let points = setup.points(&truth)?;
    let params = SkinParams::new(spec.elasticity, spec.scales.clone())?;
    let mut rng = instance_rng(spec.seed, 0);
    let n_t = setup.layout.taxel_count();
    let offsets: Vec<f64> = (0..n_t).map(|_| draw(&mut rng, spec.taxel_offset)).collect();
    let stds: Vec<f64> = (0..n_t).map(|_| draw(&mut rng, spec.taxel_noise_std)).collect();
    let noise: Vec<Normal<f64>> = offsets
        .iter()
        .zip(&stds)
        .map(|(m, s)| Normal::new(*m, *s).map_err(|e| Error::Config(e.to_string())))
        .collect::<Result<_>>()?;

    let mount = points.mount();
    let mut samples = Vec::with_capacity(spec.samples);
    let mut true_coords = Vec::with_capacity(spec.samples);
    let max_attempts = 1000 * spec.samples;
    let mut attempts = 0;
    while samples.len() < spec.samples {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::Config(format!(
                "only {} of {} usable contacts after {max_attempts} draws",
                samples.len(),
                spec.samples
            )));
        }
        let h = spec.region_half_width_mm;
        let flat = [rng.random_range(-h..=h), rng.random_range(-h..=h)];
        let force = draw(&mut rng, spec.force);
        let (p, _) = mount.wrap_to_cylinder(flat);
        let coords = setup.surface_coords(&p);
        let clean = simulate_indentation(&points, &setup, coords, force, &params)?;
        if clean.max() >= TAXEL_MAX {
            continue;
        }
        let values: Vec<f64> = clean
            .values()
            .iter()
            .zip(&noise)
            .map(|(v, n)| {
                let x = clip_taxel(v + n.sample(&mut rng));
                if spec.quantize {
                    x.round()
                } else {
                    x
                }
            })
            .collect();
        let image = TactileImage::from_values(clean.rows(), clean.cols(), values)?;
        if image.values().iter().filter(|v| **v > spec.active_threshold).count() < 2 {
            continue;
        }
        let radius = spec.position_error_mm * rng.random::<f64>().sqrt();
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let recorded = [coords[0] + radius * phi.cos(), coords[1] + radius * phi.sin()];
        samples.push(CalibrationSample {
            contact_position: setup.surface_point(recorded).0,
            normal_force: force,
            image,
        });
        true_coords.push(coords);
    }
    Ok(SyntheticDataset {
        dataset: CalibrationDataset::new(samples)?,
        true_coords,
        taxel_offsets: offsets,
        taxel_noise_std: stds,
    })
}

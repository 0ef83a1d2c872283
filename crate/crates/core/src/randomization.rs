//! Per-episode parameter draws and per-step sensor noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tactile_image::{clip_taxel, TactileImage};

/// Value distribution of one randomized quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, std: f64 },
    Constant { value: f64 },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Uniform { lo, hi } if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() => {
                Err(Error::Config(format!("uniform needs finite lo <= hi, got [{lo}, {hi}]")))
            }
            Distribution::Gaussian { mean, std } if !(std >= 0.0) || !std.is_finite() || !mean.is_finite() => {
                Err(Error::Config(format!("gaussian needs finite mean and std >= 0, got N({mean}, {std})")))
            }
            Distribution::Constant { value } if !value.is_finite() => {
                Err(Error::Config("constant must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => rng.random_range(lo..=hi),
            Distribution::Gaussian { mean, std } => {
                Normal::new(mean, std).expect("validated gaussian").sample(rng)
            }
            Distribution::Constant { value } => value,
        }
    }

    /// Value used when the owning group is disabled: uniform midpoint,
    /// gaussian mean, or the constant.
    pub fn center(&self) -> f64 {
        match *self {
            Distribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            Distribution::Gaussian { mean, .. } => mean,
            Distribution::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PerEpisode,
    PerStep,
}

/// A distribution and when it is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    #[serde(flatten)]
    pub dist: Distribution,
    pub mode: Mode,
}

impl Entry {
    pub const fn uniform(lo: f64, hi: f64, mode: Mode) -> Self {
        Self {
            dist: Distribution::Uniform { lo, hi },
            mode,
        }
    }

    pub const fn gaussian(mean: f64, std: f64, mode: Mode) -> Self {
        Self {
            dist: Distribution::Gaussian { mean, std },
            mode,
        }
    }

    pub const fn constant(value: f64) -> Self {
        Self {
            dist: Distribution::Constant { value },
            mode: Mode::PerEpisode,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, enabled: bool, rng: &mut R) -> f64 {
        if enabled {
            self.dist.sample(rng)
        } else {
            self.dist.center()
        }
    }
}

/// Switches per parameter group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnableFlags {
    pub joints: bool,
    pub sensor_position: bool,
    pub skin: bool,
    pub taxel_noise: bool,
    pub object: bool,
    pub controller: bool,
}

impl Default for EnableFlags {
    fn default() -> Self {
        Self {
            joints: true,
            sensor_position: true,
            skin: true,
            taxel_noise: true,
            object: true,
            controller: true,
        }
    }
}

/// Distributions of every randomized quantity. Object and controller entries
/// other than the marble radius are placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomizationConfig {
    /// rad, per joint.
    pub joint_offset: Entry,
    /// rad, per joint and step.
    pub joint_noise: Entry,
    pub sensor_y_mm: Entry,
    pub sensor_beta_deg: Entry,
    pub sensor_alpha_deg: Entry,
    #[serde(rename = "elasticity_MPa_per_m")]
    pub elasticity: Entry,
    /// 1/N, per taxel.
    #[serde(rename = "scale_per_N")]
    pub scale: Entry,
    /// Mean of the taxel noise, per taxel.
    pub taxel_offset: Entry,
    /// Standard deviation of the taxel noise, per taxel.
    pub taxel_noise_std: Entry,
    pub marble_radius_mm: Entry,
    pub object_mass_scale: Entry,
    pub object_friction: Entry,
    pub initial_position_noise_mm: Entry,
    pub initial_orientation_noise_deg: Entry,
    pub controller_stiffness_scale: Entry,
    pub controller_damping_scale: Entry,
    pub enable: EnableFlags,
    pub joints: usize,
    pub taxels: usize,
    /// Round noisy images to integers.
    pub quantize: bool,
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        use Mode::*;
        Self {
            joint_offset: Entry::uniform(-0.04, 0.04, PerEpisode),
            joint_noise: Entry::gaussian(0.0, 0.02, PerStep),
            sensor_y_mm: Entry::uniform(21.5, 25.5, PerEpisode),
            sensor_beta_deg: Entry::uniform(-12.0, 12.0, PerEpisode),
            sensor_alpha_deg: Entry::uniform(-15.0, 15.0, PerEpisode),
            elasticity: Entry::uniform(236.0, 848.0, PerEpisode),
            scale: Entry::uniform(61.0, 76.0, PerEpisode),
            taxel_offset: Entry::uniform(-5.0, 5.0, PerEpisode),
            taxel_noise_std: Entry::uniform(0.0, 5.0, PerEpisode),
            marble_radius_mm: Entry::uniform(4.0, 8.0, PerEpisode),
            object_mass_scale: Entry::uniform(0.8, 1.2, PerEpisode),
            object_friction: Entry::uniform(0.5, 1.0, PerEpisode),
            initial_position_noise_mm: Entry::gaussian(0.0, 0.5, PerEpisode),
            initial_orientation_noise_deg: Entry::gaussian(0.0, 2.0, PerEpisode),
            controller_stiffness_scale: Entry::constant(1.0),
            controller_damping_scale: Entry::constant(1.0),
            enable: EnableFlags::default(),
            joints: 6,
            taxels: 16,
            quantize: false,
        }
    }
}

impl RandomizationConfig {
    fn entries(&self) -> [(&'static str, &Entry, Mode); 16] {
        use Mode::*;
        [
            ("joint_offset", &self.joint_offset, PerEpisode),
            ("joint_noise", &self.joint_noise, PerStep),
            ("sensor_y_mm", &self.sensor_y_mm, PerEpisode),
            ("sensor_beta_deg", &self.sensor_beta_deg, PerEpisode),
            ("sensor_alpha_deg", &self.sensor_alpha_deg, PerEpisode),
            ("elasticity_MPa_per_m", &self.elasticity, PerEpisode),
            ("scale_per_N", &self.scale, PerEpisode),
            ("taxel_offset", &self.taxel_offset, PerEpisode),
            ("taxel_noise_std", &self.taxel_noise_std, PerEpisode),
            ("marble_radius_mm", &self.marble_radius_mm, PerEpisode),
            ("object_mass_scale", &self.object_mass_scale, PerEpisode),
            ("object_friction", &self.object_friction, PerEpisode),
            ("initial_position_noise_mm", &self.initial_position_noise_mm, PerEpisode),
            ("initial_orientation_noise_deg", &self.initial_orientation_noise_deg, PerEpisode),
            ("controller_stiffness_scale", &self.controller_stiffness_scale, PerEpisode),
            ("controller_damping_scale", &self.controller_damping_scale, PerEpisode),
        ]
    }

    /// Checks every distribution and that each entry uses the mode it is drawn in.
    pub fn validate(&self) -> Result<()> {
        for (name, entry, mode) in self.entries() {
            entry
                .dist
                .validate()
                .map_err(|e| Error::Config(format!("{name}: {e}")))?;
            if entry.mode != mode {
                return Err(Error::Config(format!("{name} is drawn {mode:?}, not {:?}", entry.mode)));
            }
        }
        let non_negative = |d: &Distribution| match *d {
            Distribution::Uniform { lo, .. } => lo >= 0.0,
            Distribution::Constant { value } => value >= 0.0,
            Distribution::Gaussian { .. } => false,
        };
        let positive = |d: &Distribution| match *d {
            Distribution::Uniform { lo, .. } => lo > 0.0,
            Distribution::Constant { value } => value > 0.0,
            Distribution::Gaussian { .. } => false,
        };
        if !non_negative(&self.taxel_noise_std.dist) {
            return Err(Error::Config("taxel_noise_std must be a non-negative uniform or constant".into()));
        }
        for (name, e) in [
            ("elasticity_MPa_per_m", &self.elasticity),
            ("scale_per_N", &self.scale),
            ("marble_radius_mm", &self.marble_radius_mm),
        ] {
            if !positive(&e.dist) {
                return Err(Error::Config(format!("{name} must be a positive uniform or constant")));
            }
        }
        if self.joints == 0 || self.taxels == 0 {
            return Err(Error::Config("joint and taxel counts must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorDraw {
    pub y_mm: f64,
    pub beta_deg: f64,
    pub alpha_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectDraw {
    pub marble_radius_mm: f64,
    pub mass_scale: f64,
    pub friction: f64,
    pub position_noise_mm: [f64; 3],
    pub orientation_noise_deg: [f64; 3],
}

/// Everything fixed for one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeDraw {
    pub seed: u64,
    pub episode: u64,
    pub joint_offsets: Vec<f64>,
    pub sensor: SensorDraw,
    #[serde(rename = "elasticity_MPa_per_m")]
    pub elasticity: f64,
    #[serde(rename = "scales_per_N")]
    pub scales: Vec<f64>,
    pub taxel_offsets: Vec<f64>,
    pub taxel_noise_std: Vec<f64>,
    pub object: ObjectDraw,
    pub controller_stiffness_scale: f64,
    pub controller_damping_scale: f64,
    /// Per-step joint noise, already reduced to its center when disabled.
    pub joint_noise: Distribution,
    pub quantize: bool,
}

/// Random stream of instance `instance` for a base seed. Streams of
/// different instances never overlap and do not depend on the instance count.
pub fn instance_rng(seed: u64, instance: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(instance);
    rng
}

/// Episode draw from a fresh stream of `seed`.
pub fn sample_episode(config: &RandomizationConfig, seed: u64) -> Result<EpisodeDraw> {
    sample_episode_with(config, &mut instance_rng(seed, 0), seed, 0)
}

/// `n` consecutive episodes of one stream.
pub fn sample_episodes(config: &RandomizationConfig, n: usize, seed: u64) -> Result<Vec<EpisodeDraw>> {
    let mut rng = instance_rng(seed, 0);
    (0..n as u64)
        .map(|k| sample_episode_with(config, &mut rng, seed, k))
        .collect()
}

/// Draws the next episode from `rng`. `seed` and `episode` are recorded only.
pub fn sample_episode_with<R: Rng + ?Sized>(
    config: &RandomizationConfig,
    rng: &mut R,
    seed: u64,
    episode: u64,
) -> Result<EpisodeDraw> {
    config.validate()?;
    let en = &config.enable;
    let many = |e: &Entry, on: bool, n: usize, rng: &mut R| (0..n).map(|_| e.draw(on, rng)).collect::<Vec<_>>();
    let joint_offsets = many(&config.joint_offset, en.joints, config.joints, rng);
    let sensor = SensorDraw {
        y_mm: config.sensor_y_mm.draw(en.sensor_position, rng),
        beta_deg: config.sensor_beta_deg.draw(en.sensor_position, rng),
        alpha_deg: config.sensor_alpha_deg.draw(en.sensor_position, rng),
    };
    let elasticity = config.elasticity.draw(en.skin, rng);
    let scales = many(&config.scale, en.skin, config.taxels, rng);
    let taxel_offsets = many(&config.taxel_offset, en.taxel_noise, config.taxels, rng);
    let taxel_noise_std = many(&config.taxel_noise_std, en.taxel_noise, config.taxels, rng);
    let triple = |e: &Entry, rng: &mut R| [e.draw(en.object, rng), e.draw(en.object, rng), e.draw(en.object, rng)];
    let object = ObjectDraw {
        marble_radius_mm: config.marble_radius_mm.draw(en.object, rng),
        mass_scale: config.object_mass_scale.draw(en.object, rng),
        friction: config.object_friction.draw(en.object, rng),
        position_noise_mm: triple(&config.initial_position_noise_mm, rng),
        orientation_noise_deg: triple(&config.initial_orientation_noise_deg, rng),
    };
    Ok(EpisodeDraw {
        seed,
        episode,
        joint_offsets,
        sensor,
        elasticity,
        scales,
        taxel_offsets,
        taxel_noise_std,
        object,
        controller_stiffness_scale: config.controller_stiffness_scale.draw(en.controller, rng),
        controller_damping_scale: config.controller_damping_scale.draw(en.controller, rng),
        joint_noise: if en.joints {
            config.joint_noise.dist
        } else {
            Distribution::Constant {
                value: config.joint_noise.dist.center(),
            }
        },
        quantize: config.quantize,
    })
}

/// Adds the constant joint offsets and fresh joint noise, and fresh taxel
/// noise `N(T_off_j, sigma_j)` clipped to `[0, 255]`.
pub fn perturb_step<R: Rng + ?Sized>(
    draw: &EpisodeDraw,
    joints: &[f64],
    image: &TactileImage<f64>,
    rng: &mut R,
) -> Result<(Vec<f64>, TactileImage<f64>)> {
    if joints.len() != draw.joint_offsets.len() || image.len() != draw.taxel_offsets.len() {
        return Err(Error::Inconsistent(format!(
            "draw covers {} joints and {} taxels, got {} and {}",
            draw.joint_offsets.len(),
            draw.taxel_offsets.len(),
            joints.len(),
            image.len()
        )));
    }
    let noisy_joints = joints
        .iter()
        .zip(&draw.joint_offsets)
        .map(|(q, off)| q + off + draw.joint_noise.sample(rng))
        .collect();
    let values = image
        .values()
        .iter()
        .zip(draw.taxel_offsets.iter().zip(&draw.taxel_noise_std))
        .map(|(v, (mean, std))| {
            let noise = Normal::new(*mean, *std)
                .map_err(|e| Error::Config(format!("taxel noise: {e}")))?
                .sample(rng);
            let x = clip_taxel(v + noise);
            Ok(if draw.quantize { x.round() } else { x })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((noisy_joints, TactileImage::from_values(image.rows(), image.cols(), values)?))
}

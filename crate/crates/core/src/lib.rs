//! Simulation of a curved tactile skin on a robot fingertip.
//!
//! The skin model is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases below fix it for the common cases.

pub mod calibration;
pub mod contact_query;
pub mod env_support;
pub mod error;
pub mod linalg;
pub mod randomization;
pub mod scalar;
pub mod scene;
pub mod sensor_geometry;
pub mod skin_response;
pub mod synthetic;
pub mod tactile_image;

pub use calibration::{
    grid_search_macro, optimize_micro, CalibrationDataset, CalibrationResult, CalibrationSample, CalibrationSetup,
    GridSpec, Intervals, MacroParams, DEFAULT_THRESHOLD,
};
pub use contact_query::{
    analytic_contact, auto_shift, cast_rays, local_penetrations, ContactState, Fingertip, IndenterShape, RayCastResult,
    Scene, ShapeKind, TriangleMesh,
};
pub use env_support::{compute_reward, estimate_contact_point, pen, rew, EnvConfig, PinchEnv};
pub use error::{Error, Result};
pub use linalg::{Mat3, Pose, Vec3};
pub use randomization::{perturb_step, sample_episode, EpisodeDraw, RandomizationConfig};
pub use scalar::Real;
pub use scene::SceneSpec;
pub use sensor_geometry::{MountingParams, Region, SensorConfig, SensorLayout, TactilePoint, TactilePointSet};
pub use skin_response::{
    simulate_contact, solve_max_penetration, taxel_values, total_normal_force, PenetrationSolution, SkinParams,
};
pub use tactile_image::TactileImage;

pub type Vec3d = Vec3<f64>;
pub type Vec3f = Vec3<f32>;
pub type SensorLayout64 = SensorLayout<f64>;
pub type SensorLayout32 = SensorLayout<f32>;
pub type MountingParams64 = MountingParams<f64>;
pub type MountingParams32 = MountingParams<f32>;
pub type TactilePointSet64 = TactilePointSet<f64>;
pub type TactilePointSet32 = TactilePointSet<f32>;
pub type ContactState64 = ContactState<f64>;
pub type ContactState32 = ContactState<f32>;
pub type IndenterShape64 = IndenterShape<f64>;
pub type IndenterShape32 = IndenterShape<f32>;
pub type SkinParams64 = SkinParams<f64>;
pub type SkinParams32 = SkinParams<f32>;
pub type TactileImage64 = TactileImage<f64>;
pub type TactileImage32 = TactileImage<f32>;
pub type CalibrationDataset64 = CalibrationDataset<f64>;
pub type CalibrationSetup64 = CalibrationSetup<f64>;

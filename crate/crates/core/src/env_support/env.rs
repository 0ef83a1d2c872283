use std::path::PathBuf;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::control::{action_to_targets, lowpass_step, JointState, LowPassFilter};
use super::observation::{ObservationFrame, ObservationHistory, ObservationVariant, TargetTracker};
use super::reward::{compute_reward, RewardBreakdown, RewardInputs, RewardWeights};
use super::targets::{read_waypoints_csv, TargetTrajectory};
use super::{F_CONT, F_SYS};
use crate::contact_query::{ContactState, IndenterShape};
use crate::error::{Error, Result};
use crate::randomization::{instance_rng, perturb_step, sample_episode_with, EpisodeDraw, RandomizationConfig};
use crate::scalar::Real;
use crate::sensor_geometry::{MountingParams, SensorLayout, TactilePointSet};
use crate::skin_response::{simulate_contact, SkinParams};
use crate::tactile_image::TactileImage;

/// Intensity-weighted centroid of the taxel centers, in flat sensor
/// coordinates. `None` for an all-zero image.
pub fn estimate_contact_point<T: Real>(image: &TactileImage<T>, layout: &SensorLayout<T>) -> Option<[T; 2]> {
    if image.len() != layout.taxel_count() {
        return None;
    }
    let total = image.sum();
    if !(total > T::zero()) {
        return None;
    }
    let mut acc = [T::zero(), T::zero()];
    for (j, v) in image.values().iter().enumerate() {
        let c = layout.taxel_center(j);
        acc[0] += *v * c[0];
        acc[1] += *v * c[1];
    }
    Some([acc[0] / total, acc[1] / total])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Marble,
    /// Initial bolt orientation, one of -45, 0, 45, 90 degrees.
    Bolt { alpha_b_deg: f64 },
}

impl Task {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Task::Marble => Ok(()),
            Task::Bolt { alpha_b_deg } if [-45.0, 0.0, 45.0, 90.0].contains(&alpha_b_deg) => Ok(()),
            Task::Bolt { alpha_b_deg } => Err(Error::Config(format!(
                "bolt orientation must be one of -45, 0, 45, 90 degrees, got {alpha_b_deg}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepStatus {
    Running,
    /// Contact lost after the object was released.
    Failed,
    /// Episode duration reached; not a failure.
    TimedOut,
}

/// Bookkeeping of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeState {
    pub task: Task,
    pub elapsed_s: f64,
    pub timeout_s: f64,
    pub release_after_s: f64,
    pub constraint_released: bool,
    pub contact_point_mm: Option<[f64; 2]>,
    pub bolt_angle_deg: Option<f64>,
}

impl EpisodeState {
    pub fn new(task: Task, timeout_s: f64, release_after_s: f64) -> Self {
        Self {
            task,
            elapsed_s: 0.0,
            timeout_s,
            release_after_s,
            constraint_released: release_after_s <= 0.0,
            contact_point_mm: None,
            bolt_angle_deg: match task {
                Task::Bolt { alpha_b_deg } => Some(alpha_b_deg),
                Task::Marble => None,
            },
        }
    }

    /// Advances time by `dt` and records the new contact.
    pub fn advance(
        &mut self,
        dt: f64,
        contact_point_mm: Option<[f64; 2]>,
        in_contact: bool,
        bolt_angle_deg: Option<f64>,
    ) -> StepStatus {
        const TIME_TOL: f64 = 1e-9;
        self.elapsed_s += dt;
        self.contact_point_mm = contact_point_mm;
        if bolt_angle_deg.is_some() {
            self.bolt_angle_deg = bolt_angle_deg;
        }
        if self.elapsed_s + TIME_TOL >= self.release_after_s {
            self.constraint_released = true;
        }
        if self.constraint_released && !in_contact {
            StepStatus::Failed
        } else if self.elapsed_s + TIME_TOL >= self.timeout_s {
            StepStatus::TimedOut
        } else {
            StepStatus::Running
        }
    }
}

/// Linearized pinch kinematics standing in for articulated finger dynamics.
/// Joint displacements from the initial grasp move the object on the sensor,
/// change the grip force and roll the bolt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PinchKinematics {
    /// Rows map joint displacement to contact displacement along u and v, mm/rad.
    pub contact_jacobian_mm_per_rad: [Vec<f64>; 2],
    /// Grip force change per joint displacement, N/rad.
    pub squeeze_n_per_rad: Vec<f64>,
    /// Bolt rotation per joint displacement, deg/rad.
    pub roll_deg_per_rad: Vec<f64>,
    /// Grip force of the initial grasp, N.
    pub grasp_force_n: f64,
    /// Grip force ceiling, N.
    pub max_force_n: f64,
}

impl Default for PinchKinematics {
    fn default() -> Self {
        Self {
            contact_jacobian_mm_per_rad: [
                vec![6.0, 0.0, 0.0, -6.0, 0.0, 0.0],
                vec![0.0, 6.0, 0.0, 0.0, -6.0, 0.0],
            ],
            squeeze_n_per_rad: vec![0.0, 0.0, 4.0, 0.0, 0.0, 4.0],
            roll_deg_per_rad: vec![20.0, -10.0, 0.0, -20.0, 10.0, 0.0],
            grasp_force_n: 1.5,
            max_force_n: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryKind {
    /// Random paths in the 6 mm box.
    Train,
    /// Approach then circle.
    Eval,
    /// Piecewise-linear path from a `t_s,x_mm,y_mm` CSV file.
    Waypoints { path: PathBuf },
}

/// Environment configuration. Randomization lives in the same file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub task: Task,
    pub trajectory: TrajectoryKind,
    pub variant: ObservationVariant,
    pub weights: RewardWeights,
    pub q_init: Vec<f64>,
    pub q_min: Vec<f64>,
    pub q_max: Vec<f64>,
    pub qdot_max: Vec<f64>,
    pub stiffness: Vec<f64>,
    pub tau_max: Vec<f64>,
    pub filter_time_constant_s: f64,
    /// Lag of the measured joints behind the filtered command.
    pub tracking_time_constant_s: f64,
    pub f_sys: f64,
    pub f_cont: f64,
    pub timeout_s: f64,
    pub release_after_s: f64,
    pub bolt_radius_mm: f64,
    pub resolution_mm: f64,
    pub kinematics: PinchKinematics,
    pub randomization: RandomizationConfig,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            task: Task::Marble,
            trajectory: TrajectoryKind::Train,
            variant: ObservationVariant::Tactile,
            weights: RewardWeights::default(),
            q_init: vec![0.0; 6],
            q_min: vec![-1.0; 6],
            q_max: vec![1.0; 6],
            qdot_max: vec![1.0; 6],
            stiffness: vec![2.0; 6],
            tau_max: vec![1.0; 6],
            filter_time_constant_s: 0.05,
            tracking_time_constant_s: 0.03,
            f_sys: F_SYS,
            f_cont: F_CONT,
            timeout_s: 6.0,
            release_after_s: 0.5,
            bolt_radius_mm: 6.0,
            resolution_mm: 0.25,
            kinematics: PinchKinematics::default(),
            randomization: RandomizationConfig::default(),
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    fn joint_state(&self) -> JointState {
        let mut js = JointState::new(
            self.q_min.clone(),
            self.q_max.clone(),
            self.qdot_max.clone(),
            self.stiffness.clone(),
            self.tau_max.clone(),
        );
        js.q_d = self.q_init.clone();
        js.q_m = self.q_init.clone();
        js
    }

    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        self.weights.validate()?;
        self.randomization.validate()?;
        let js = self.joint_state();
        js.validate()?;
        let n = js.len();
        if self.randomization.joints != n {
            return Err(Error::Config(format!(
                "randomization covers {} joints, environment has {n}",
                self.randomization.joints
            )));
        }
        let k = &self.kinematics;
        if k.contact_jacobian_mm_per_rad.iter().any(|r| r.len() != n)
            || k.squeeze_n_per_rad.len() != n
            || k.roll_deg_per_rad.len() != n
        {
            return Err(Error::Config(format!("kinematics rows need {n} entries")));
        }
        if js.q_d.iter().zip(&js.q_min).zip(&js.q_max).any(|((q, lo), hi)| q < lo || q > hi) {
            return Err(Error::Config("initial joints outside their limits".into()));
        }
        let positive = [
            self.filter_time_constant_s,
            self.tracking_time_constant_s,
            self.f_sys,
            self.f_cont,
            self.timeout_s,
            self.bolt_radius_mm,
            self.resolution_mm,
            k.max_force_n,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("rates, time constants, radii and resolution must be positive".into()));
        }
        if !(k.grasp_force_n > 0.0 && k.grasp_force_n <= k.max_force_n) {
            return Err(Error::Config("grasp force must lie in (0, max_force_n]".into()));
        }
        let ratio = self.f_sys / self.f_cont;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(Error::Config("f_sys must be an integer multiple of f_cont".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub reward: RewardBreakdown,
    pub status: StepStatus,
    pub elapsed_s: f64,
    pub target_mm: [f64; 2],
    /// Ground-truth contact point on the sensor.
    pub contact_point_mm: Option<[f64; 2]>,
    /// Centroid estimate from the noisy image.
    pub estimated_point_mm: Option<[f64; 2]>,
    pub normal_force_n: f64,
    pub bolt_angle_deg: Option<f64>,
    pub image: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    /// Episode ended in failure.
    pub terminated: bool,
    /// Episode reached its time limit.
    pub truncated: bool,
    pub info: StepInfo,
}

/// Single-threaded pinch environment for one instance.
pub struct PinchEnv {
    cfg: EnvConfig,
    instance: u64,
    rng: ChaCha8Rng,
    episode: u64,
    layout: SensorLayout<f64>,
    waypoints: Option<TargetTrajectory>,
    draw: Option<EpisodeDraw>,
    points: Option<TactilePointSet<f64>>,
    params: SkinParams<f64>,
    trajectory: TargetTrajectory,
    joints: JointState,
    filter: LowPassFilter,
    q_true: Vec<f64>,
    start_mm: [f64; 2],
    state: EpisodeState,
    history: ObservationHistory,
    tracker: TargetTracker,
    done: bool,
}

impl PinchEnv {
    /// Environment `instance` of a run with base seed `cfg.seed`.
    pub fn new(cfg: EnvConfig, instance: u64) -> Result<Self> {
        cfg.validate()?;
        let waypoints = match &cfg.trajectory {
            TrajectoryKind::Waypoints { path } => Some(read_waypoints_csv(std::fs::File::open(path)?)?),
            _ => None,
        };
        let layout = SensorLayout::default().with_resolution(cfg.resolution_mm);
        layout.validate()?;
        let joints = cfg.joint_state();
        Ok(Self {
            rng: instance_rng(cfg.seed, instance),
            instance,
            episode: 0,
            layout,
            waypoints,
            draw: None,
            points: None,
            params: SkinParams::default(),
            trajectory: TargetTrajectory::marble_eval(),
            filter: LowPassFilter::new(joints.q_d.clone(), cfg.f_sys, cfg.filter_time_constant_s)?,
            q_true: joints.q_m.clone(),
            joints,
            start_mm: [0.0, 0.0],
            state: EpisodeState::new(cfg.task, cfg.timeout_s, cfg.release_after_s),
            history: ObservationHistory::default(),
            tracker: TargetTracker::default(),
            done: true,
            cfg,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn instance(&self) -> u64 {
        self.instance
    }

    pub fn draw(&self) -> Option<&EpisodeDraw> {
        self.draw.as_ref()
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    pub fn joints(&self) -> &JointState {
        &self.joints
    }

    /// Starts a new episode and returns its first observation.
    pub fn reset(&mut self) -> Result<Vec<f64>> {
        let draw = sample_episode_with(&self.cfg.randomization, &mut self.rng, self.cfg.seed, self.episode)?;
        self.episode += 1;
        let mount = MountingParams::new(draw.sensor.y_mm, draw.sensor.beta_deg, draw.sensor.alpha_deg, 10.0);
        self.points = Some(TactilePointSet::build(self.layout, mount)?);
        self.params = SkinParams::new(draw.elasticity, draw.scales.clone())?;
        self.trajectory = match (&self.cfg.task, &self.cfg.trajectory) {
            (Task::Bolt { alpha_b_deg }, _) => TargetTrajectory::bolt(&mut self.rng, *alpha_b_deg),
            (Task::Marble, TrajectoryKind::Train) => {
                TargetTrajectory::marble_train(&mut self.rng, self.cfg.timeout_s, 1.0, 3.0)
            }
            (Task::Marble, TrajectoryKind::Eval) => TargetTrajectory::marble_eval(),
            (Task::Marble, TrajectoryKind::Waypoints { .. }) => {
                self.waypoints.clone().expect("loaded in new")
            }
        };
        self.start_mm = [draw.object.position_noise_mm[0], draw.object.position_noise_mm[1]];
        self.joints = self.cfg.joint_state();
        self.q_true = self.joints.q_m.clone();
        self.filter.reset(self.joints.q_d.clone());
        self.state = EpisodeState::new(self.cfg.task, self.cfg.timeout_s, self.cfg.release_after_s);
        self.history.clear();
        self.tracker.reset();
        self.draw = Some(draw);
        self.done = false;

        let contact = self.contact();
        let (frame, _, _) = self.observe(&contact, 0.0)?;
        self.history.push(frame);
        self.history.assemble(self.cfg.variant)
    }

    /// Applies one normalized action for one control period.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult> {
        if self.done {
            return Err(Error::Inconsistent("episode finished; call reset".into()));
        }
        let dt_sys = 1.0 / self.cfg.f_sys;
        let substeps = (self.cfg.f_sys / self.cfg.f_cont).round() as usize;
        self.joints.q_d = action_to_targets(action, &self.joints, self.cfg.f_cont)?;
        let mut qdot = vec![0.0; self.joints.len()];
        for _ in 0..substeps {
            let cmd = self.filter.step(&self.joints.q_d).to_vec();
            for i in 0..self.q_true.len() {
                let next = lowpass_step(self.q_true[i], cmd[i], self.cfg.f_sys, self.cfg.tracking_time_constant_s);
                qdot[i] = (next - self.q_true[i]) / dt_sys;
                self.q_true[i] = next;
            }
        }
        self.joints.q_m = self.q_true.clone();

        let contact = self.contact();
        let status = self.state.advance(
            1.0 / self.cfg.f_cont,
            contact.in_contact.then_some(contact.point_mm),
            contact.in_contact,
            contact.bolt_angle_deg,
        );
        let t = self.state.elapsed_s;
        let (frame, image, estimated) = self.observe(&contact, t)?;
        self.history.push(frame);
        let observation = self.history.assemble(self.cfg.variant)?;

        let target_mm = self.trajectory.at(t);
        let breakdown = compute_reward(
            &RewardInputs {
                target_mm,
                contact_point_mm: contact.in_contact.then_some(contact.point_mm),
                normal_force: if contact.in_contact { contact.force_n } else { 0.0 },
                correct_contact: contact.in_contact,
                bolt_angles_deg: match self.cfg.task {
                    Task::Bolt { alpha_b_deg } => Some((alpha_b_deg, contact.bolt_angle_deg.unwrap_or(alpha_b_deg))),
                    Task::Marble => None,
                },
                joints: &self.joints,
                qdot: &qdot,
            },
            &self.cfg.weights,
        )?;
        self.done = status != StepStatus::Running;
        Ok(StepResult {
            observation,
            reward: breakdown.total,
            terminated: status == StepStatus::Failed,
            truncated: status == StepStatus::TimedOut,
            info: StepInfo {
                reward: breakdown,
                status,
                elapsed_s: t,
                target_mm,
                contact_point_mm: contact.in_contact.then_some(contact.point_mm),
                estimated_point_mm: estimated,
                normal_force_n: contact.force_n,
                bolt_angle_deg: contact.bolt_angle_deg,
                image,
            },
        })
    }

    fn contact(&self) -> PinchContact {
        let k = &self.cfg.kinematics;
        let dq: Vec<f64> = self.q_true.iter().zip(&self.cfg.q_init).map(|(q, q0)| q - q0).collect();
        let dot = |row: &[f64]| row.iter().zip(&dq).map(|(a, b)| a * b).sum::<f64>();
        let point_mm = [
            self.start_mm[0] + dot(&k.contact_jacobian_mm_per_rad[0]),
            self.start_mm[1] + dot(&k.contact_jacobian_mm_per_rad[1]),
        ];
        let force_n = (k.grasp_force_n + dot(&k.squeeze_n_per_rad)).clamp(0.0, k.max_force_n);
        let half_u = 0.5 * self.layout.extent_u() + self.layout.margin;
        let half_v = 0.5 * self.layout.extent_v() + self.layout.margin;
        let on_skin = point_mm[0].abs() <= half_u && point_mm[1].abs() <= half_v;
        PinchContact {
            point_mm,
            force_n,
            in_contact: force_n > 0.0 && on_skin,
            bolt_angle_deg: match self.cfg.task {
                Task::Bolt { alpha_b_deg } => Some(alpha_b_deg + dot(&k.roll_deg_per_rad)),
                Task::Marble => None,
            },
        }
    }

    /// Noise-free image of the current contact.
    fn clean_image(&self, contact: &PinchContact) -> Result<TactileImage<f64>> {
        let points = self.points.as_ref().expect("reset builds the point set");
        if !contact.in_contact {
            return Ok(TactileImage::zeros(self.layout.taxel_rows, self.layout.taxel_cols));
        }
        let mount = points.mount();
        let (pos, n) = mount.wrap_to_cylinder(contact.point_mm);
        let indenter = match self.cfg.task {
            Task::Marble => {
                let r = self.draw.as_ref().expect("drawn in reset").object.marble_radius_mm;
                IndenterShape::sphere(r, pos + n * r)?
            }
            Task::Bolt { .. } => {
                // bolt axis lies across its rolling direction
                let axis = mount.surface_tangent(contact.point_mm, contact.bolt_angle_deg.unwrap_or(0.0) + 90.0);
                let r = self.cfg.bolt_radius_mm;
                IndenterShape::cylinder(r, axis, 15.0, pos + n * r)?
            }
        };
        let state = ContactState::new(n, contact.force_n, indenter)?;
        Ok(simulate_contact(points, &state, &self.params, None)?.0)
    }

    fn observe(
        &mut self,
        contact: &PinchContact,
        t: f64,
    ) -> Result<(ObservationFrame, Vec<f64>, Option<[f64; 2]>)> {
        let clean = self.clean_image(contact)?;
        let draw = self.draw.as_ref().expect("drawn in reset");
        let (q_m, image) = perturb_step(draw, &self.joints.q_m, &clean, &mut self.rng)?;
        let estimated = estimate_contact_point(&image, &self.layout);
        let target = self.trajectory.observed(t);
        let delta_target = self.tracker.update(&target);
        let e_q = self.joints.q_d.iter().zip(&q_m).map(|(d, m)| d - m).collect();
        let frame = ObservationFrame {
            q_d: self.joints.q_d.clone(),
            q_m: Some(q_m),
            e_q: Some(e_q),
            tactile: Some(image.values().to_vec()),
            target,
            delta_target,
        };
        Ok((frame, image.values().to_vec(), estimated))
    }
}

struct PinchContact {
    point_mm: [f64; 2],
    force_n: f64,
    in_contact: bool,
    bolt_angle_deg: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> SensorLayout<f64> {
        SensorLayout::default()
    }

    #[test]
    fn centroid_examples() {
        let l = layout();
        let mut v = [0.0; 16];
        v[5] = 80.0;
        let img = TactileImage::from_slice(&v).unwrap();
        assert_eq!(estimate_contact_point(&img, &l), Some(l.taxel_center(5)));
        v[6] = 80.0;
        let img = TactileImage::from_slice(&v).unwrap();
        let (a, b) = (l.taxel_center(5), l.taxel_center(6));
        assert_eq!(
            estimate_contact_point(&img, &l),
            Some([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])])
        );
        assert_eq!(estimate_contact_point(&TactileImage::<f64>::zeros(4, 4), &l), None);
    }

    #[test]
    fn failure_only_after_release_and_timeout_is_not_failure() {
        let mut s = EpisodeState::new(Task::Marble, 6.0, 0.5);
        assert_eq!(s.advance(0.1, None, false, None), StepStatus::Running);
        for _ in 0..3 {
            assert_eq!(s.advance(0.1, Some([0.0, 0.0]), true, None), StepStatus::Running);
        }
        assert_eq!(s.advance(0.1, None, false, None), StepStatus::Failed);

        let mut s = EpisodeState::new(Task::Marble, 6.0, 0.5);
        let mut last = StepStatus::Running;
        let mut steps = 0;
        while last == StepStatus::Running {
            last = s.advance(0.1, Some([0.0, 0.0]), true, None);
            steps += 1;
        }
        assert_eq!((last, steps), (StepStatus::TimedOut, 60));
    }

    #[test]
    fn bolt_orientation_is_restricted() {
        assert!(Task::Bolt { alpha_b_deg: 45.0 }.validate().is_ok());
        assert!(Task::Bolt { alpha_b_deg: 30.0 }.validate().is_err());
    }

    #[test]
    fn env_runs_to_timeout_with_zero_action() {
        let cfg = EnvConfig {
            resolution_mm: 0.5,
            ..Default::default()
        };
        let mut env = PinchEnv::new(cfg, 0).unwrap();
        let obs = env.reset().unwrap();
        assert_eq!(obs.len(), 5 * (16 + 6 + 2 + 2));
        let mut n = 0;
        loop {
            let r = env.step(&[0.0; 6]).unwrap();
            n += 1;
            assert!(!r.terminated);
            assert!(r.info.contact_point_mm.is_some());
            assert!(r.info.image.iter().any(|v| *v > 0.0));
            if r.truncated {
                break;
            }
        }
        assert_eq!(n, 60);
        assert!(env.step(&[0.0; 6]).is_err());
    }

    #[test]
    fn releasing_the_grip_fails_the_episode() {
        let cfg = EnvConfig {
            resolution_mm: 0.5,
            ..Default::default()
        };
        let mut env = PinchEnv::new(cfg, 0).unwrap();
        env.reset().unwrap();
        let open = [0.0, 0.0, -1.0, 0.0, 0.0, -1.0];
        let mut end = None;
        for _ in 0..60 {
            let r = env.step(&open).unwrap();
            if r.terminated || r.truncated {
                end = Some(r);
                break;
            }
        }
        let r = end.unwrap();
        assert!(r.terminated && !r.truncated);
        assert_eq!(r.info.status, StepStatus::Failed);
    }

    #[test]
    fn bolt_episode_observes_scalar_target() {
        let cfg = EnvConfig {
            task: Task::Bolt { alpha_b_deg: 90.0 },
            variant: ObservationVariant::JointAngles,
            resolution_mm: 0.5,
            ..Default::default()
        };
        let mut env = PinchEnv::new(cfg, 3).unwrap();
        let obs = env.reset().unwrap();
        assert_eq!(obs.len(), 5 * (18 + 1 + 1));
        let r = env.step(&[0.2, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(r.info.bolt_angle_deg.unwrap() != 90.0);
        assert!(r.info.reward.r_alpha > 0.0);
        assert!(r.info.image.iter().any(|v| *v > 0.0));
    }

    #[test]
    fn same_seed_same_episode() {
        let cfg = EnvConfig {
            resolution_mm: 0.5,
            seed: 42,
            ..Default::default()
        };
        let run = |instance| {
            let mut env = PinchEnv::new(cfg.clone(), instance).unwrap();
            let mut out = vec![env.reset().unwrap()];
            for k in 0..5 {
                let a = [0.3 * (k as f64).sin(), 0.1, 0.0, -0.2, 0.0, 0.05];
                out.push(env.step(&a).unwrap().observation);
            }
            out
        };
        assert_eq!(run(1), run(1));
        assert_ne!(run(1), run(2));
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint-space state and limits of the six controlled joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    /// Desired angles, rad.
    pub q_d: Vec<f64>,
    /// Measured angles, rad.
    pub q_m: Vec<f64>,
    pub q_min: Vec<f64>,
    pub q_max: Vec<f64>,
    /// rad/s.
    pub qdot_max: Vec<f64>,
    /// Impedance stiffness, N m/rad.
    pub stiffness: Vec<f64>,
    /// Torque limit, N m.
    pub tau_max: Vec<f64>,
}

impl JointState {
    /// State at rest in the middle of the limits.
    pub fn new(q_min: Vec<f64>, q_max: Vec<f64>, qdot_max: Vec<f64>, stiffness: Vec<f64>, tau_max: Vec<f64>) -> Self {
        let mid: Vec<f64> = q_min.iter().zip(&q_max).map(|(a, b)| 0.5 * (a + b)).collect();
        Self {
            q_d: mid.clone(),
            q_m: mid,
            q_min,
            q_max,
            qdot_max,
            stiffness,
            tau_max,
        }
    }

    pub fn len(&self) -> usize {
        self.q_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q_d.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.q_d.len();
        let lens = [
            self.q_m.len(),
            self.q_min.len(),
            self.q_max.len(),
            self.qdot_max.len(),
            self.stiffness.len(),
            self.tau_max.len(),
        ];
        if lens.iter().any(|l| *l != n) {
            return Err(Error::Config(format!("joint vectors disagree in length: {n} vs {lens:?}")));
        }
        if self.q_min.iter().zip(&self.q_max).any(|(a, b)| !(a < b)) {
            return Err(Error::Config("joint limits need q_min < q_max".into()));
        }
        if self.qdot_max.iter().chain(&self.tau_max).any(|v| !(*v > 0.0)) {
            return Err(Error::Config("velocity and torque limits must be positive".into()));
        }
        if self.stiffness.iter().any(|k| !(*k >= 0.0)) {
            return Err(Error::Config("stiffness must be non-negative".into()));
        }
        Ok(())
    }

    pub fn e_q(&self) -> Vec<f64> {
        self.q_d.iter().zip(&self.q_m).map(|(d, m)| d - m).collect()
    }

    /// Impedance torque `K (q_d - q_m)`.
    pub fn torque(&self) -> Vec<f64> {
        self.e_q().iter().zip(&self.stiffness).map(|(e, k)| k * e).collect()
    }
}

/// New desired joint angles for a normalized action. Components of `a` are
/// clamped to `[-1, 1]`; the result stays within the joint limits.
pub fn action_to_targets(a: &[f64], js: &JointState, f_cont: f64) -> Result<Vec<f64>> {
    if a.len() != js.len() {
        return Err(Error::Inconsistent(format!("action has {} components for {} joints", a.len(), js.len())));
    }
    if !(f_cont > 0.0) {
        return Err(Error::Config(format!("control rate must be positive, got {f_cont}")));
    }
    Ok((0..js.len())
        .map(|i| {
            let ai = if a[i].is_nan() { 0.0 } else { a[i].clamp(-1.0, 1.0) };
            (js.q_d[i] + ai * js.qdot_max[i] / f_cont).clamp(js.q_min[i], js.q_max[i])
        })
        .collect())
}

/// One update of a first-order low-pass filter sampled at `f_sys`.
pub fn lowpass_step(prev: f64, target: f64, f_sys: f64, time_constant: f64) -> f64 {
    let k = 1.0 - (-1.0 / (f_sys * time_constant)).exp();
    prev + k * (target - prev)
}

/// First-order filter over a vector of channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LowPassFilter {
    state: Vec<f64>,
    f_sys: f64,
    time_constant: f64,
}

impl LowPassFilter {
    pub fn new(initial: Vec<f64>, f_sys: f64, time_constant: f64) -> Result<Self> {
        if !(f_sys > 0.0) || !(time_constant > 0.0) {
            return Err(Error::Config(format!(
                "filter needs positive rate and time constant, got {f_sys} Hz and {time_constant} s"
            )));
        }
        Ok(Self {
            state: initial,
            f_sys,
            time_constant,
        })
    }

    pub fn output(&self) -> &[f64] {
        &self.state
    }

    pub fn reset(&mut self, value: Vec<f64>) {
        self.state = value;
    }

    pub fn step(&mut self, target: &[f64]) -> &[f64] {
        for (s, t) in self.state.iter_mut().zip(target) {
            *s = lowpass_step(*s, *t, self.f_sys, self.time_constant);
        }
        &self.state
    }
}

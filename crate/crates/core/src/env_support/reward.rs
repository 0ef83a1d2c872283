use serde::{Deserialize, Serialize};

use super::control::JointState;
use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_margin<T: Real>(dx: T) -> Result<()> {
    if dx > T::zero() && dx.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("soft margin must be positive, got {dx}")))
    }
}

/// `-cos(pi s)` written so that s = 0, 1/2, 1 give exactly -1, 0, 1.
fn half_cosine<T: Real>(s: T) -> T {
    (T::PI() * (s - T::half())).sin()
}

/// Penalty shape: 0 below zero, a half cosine up to 1 at `dx`, 1 beyond.
pub fn pen<T: Real>(x: T, dx: T) -> Result<T> {
    check_margin(dx)?;
    Ok(if x < T::zero() {
        T::zero()
    } else if x <= dx {
        T::half() * (T::one() + half_cosine(x / dx))
    } else {
        T::one()
    })
}

/// Reward shape: 1 below zero, a half cosine down to 0 at `dx`, 0 beyond.
pub fn rew<T: Real>(x: T, dx: T) -> Result<T> {
    check_margin(dx)?;
    Ok(if x < T::zero() {
        T::one()
    } else if x <= dx {
        T::half() * (T::one() - half_cosine(x / dx))
    } else {
        T::zero()
    })
}

/// Weights and tolerances of the shaped reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub lambda_p: f64,
    pub lambda_alpha: f64,
    pub lambda_f: f64,
    pub lambda_g: f64,
    pub lambda_q: f64,
    pub lambda_qdot: f64,
    pub lambda_tau: f64,
    /// Soft margins as a fraction of each limit's range.
    pub margin_fraction: f64,
    pub position_tolerance_mm: f64,
    pub force_target_n: f64,
    pub force_tolerance_n: f64,
    pub angle_tolerance_deg: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            lambda_p: 1.0,
            lambda_alpha: 1.0,
            lambda_f: 1.0,
            lambda_g: 1.0,
            lambda_q: 1.0,
            lambda_qdot: 1.0,
            lambda_tau: 1.0,
            margin_fraction: 0.1,
            position_tolerance_mm: 5.0,
            force_target_n: 1.5,
            force_tolerance_n: 1.5,
            angle_tolerance_deg: 15.0,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        let lambdas = [
            self.lambda_p,
            self.lambda_alpha,
            self.lambda_f,
            self.lambda_g,
            self.lambda_q,
            self.lambda_qdot,
            self.lambda_tau,
        ];
        if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::Config("reward weights must be finite and non-negative".into()));
        }
        if !(self.margin_fraction > 0.0 && self.margin_fraction <= 0.5) {
            return Err(Error::Config(format!(
                "margin fraction must lie in (0, 0.5], got {}",
                self.margin_fraction
            )));
        }
        check_margin(self.position_tolerance_mm)?;
        check_margin(self.force_tolerance_n)?;
        check_margin(self.angle_tolerance_deg)?;
        Ok(())
    }
}

/// What the reward looks at in one control step.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardInputs<'a> {
    /// Desired contact point on the sensor, mm.
    pub target_mm: [f64; 2],
    /// Measured contact point, `None` without contact.
    pub contact_point_mm: Option<[f64; 2]>,
    pub normal_force: f64,
    /// Both fingers touch the object where they should.
    pub correct_contact: bool,
    /// `(initial, current)` bolt orientation in degrees, bolt task only.
    pub bolt_angles_deg: Option<(f64, f64)>,
    pub joints: &'a JointState,
    /// Joint velocities, rad/s.
    pub qdot: &'a [f64],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_p: f64,
    pub r_alpha: f64,
    pub r_f: f64,
    pub r_g: f64,
    pub p_q: f64,
    pub p_qdot: f64,
    pub p_tau: f64,
    pub total: f64,
}

/// Largest penalty over joints. The soft band of width `margin` lies inside
/// each limit, so the penalty reaches 1 at the limit itself.
fn limit_penalty(values: &[f64], lo: &[f64], hi: &[f64], fraction: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for ((v, lo), hi) in values.iter().zip(lo).zip(hi) {
        let margin = fraction * (hi - lo);
        let x = (v - (hi - margin)).max((lo + margin) - v);
        worst = worst.max(pen(x, margin)?);
    }
    Ok(worst)
}

pub fn compute_reward(inputs: &RewardInputs<'_>, weights: &RewardWeights) -> Result<RewardBreakdown> {
    weights.validate()?;
    let js = inputs.joints;
    js.validate()?;
    if inputs.qdot.len() != js.q_m.len() {
        return Err(Error::Inconsistent(format!(
            "{} joint velocities for {} joints",
            inputs.qdot.len(),
            js.q_m.len()
        )));
    }
    let r_p = match inputs.contact_point_mm {
        Some(p) => {
            let err = (p[0] - inputs.target_mm[0]).hypot(p[1] - inputs.target_mm[1]);
            weights.lambda_p * rew(err, weights.position_tolerance_mm)?
        }
        None => 0.0,
    };
    let r_f = weights.lambda_f
        * rew(
            (inputs.normal_force - weights.force_target_n).abs(),
            weights.force_tolerance_n,
        )?;
    let r_g = if inputs.correct_contact { weights.lambda_g } else { 0.0 };
    let r_alpha = match inputs.bolt_angles_deg {
        Some((init, now)) => weights.lambda_alpha * rew((init - now).abs(), weights.angle_tolerance_deg)?,
        None => 0.0,
    };

    let f = weights.margin_fraction;
    let p_q = weights.lambda_q * limit_penalty(&js.q_m, &js.q_min, &js.q_max, f)?;
    let vmax: Vec<f64> = js.qdot_max.clone();
    let vmin: Vec<f64> = vmax.iter().map(|v| -v).collect();
    let p_qdot = weights.lambda_qdot * limit_penalty(inputs.qdot, &vmin, &vmax, f)?;
    let tau = js.torque();
    let tmin: Vec<f64> = js.tau_max.iter().map(|t| -t).collect();
    let p_tau = weights.lambda_tau * limit_penalty(&tau, &tmin, &js.tau_max, f)?;

    Ok(RewardBreakdown {
        r_p,
        r_alpha,
        r_f,
        r_g,
        p_q,
        p_qdot,
        p_tau,
        total: r_p + r_alpha + r_f + r_g - p_q - p_qdot - p_tau,
    })
}

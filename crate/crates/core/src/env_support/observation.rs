use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frames per stacked observation (0.5 s at the control rate).
pub const HISTORY_DEPTH: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationVariant {
    /// `q_d` only.
    Desired,
    /// `q_d`, `q_m`, `e_q`.
    JointAngles,
    /// Taxel values and `q_d`.
    Tactile,
}

impl ObservationVariant {
    fn name(self) -> &'static str {
        match self {
            ObservationVariant::Desired => "desired",
            ObservationVariant::JointAngles => "joint_angles",
            ObservationVariant::Tactile => "tactile",
        }
    }
}

/// Everything observed in one control step. Fields a variant does not use
/// may be left out.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservationFrame {
    pub q_d: Vec<f64>,
    pub q_m: Option<Vec<f64>>,
    pub e_q: Option<Vec<f64>>,
    pub tactile: Option<Vec<f64>>,
    /// Desired position: 2 values for the marble, 1 for the bolt.
    pub target: Vec<f64>,
    pub delta_target: Vec<f64>,
}

impl ObservationFrame {
    /// Flat features of this frame for `variant`, followed by the target and its change.
    pub fn features(&self, variant: ObservationVariant) -> Result<Vec<f64>> {
        fn need<'a>(v: &'a Option<Vec<f64>>, variant: ObservationVariant, field: &'static str) -> Result<&'a [f64]> {
            v.as_deref().ok_or(Error::ObservationMismatch {
                variant: variant.name(),
                field,
            })
        }
        if self.q_d.is_empty() {
            return Err(Error::ObservationMismatch {
                variant: variant.name(),
                field: "q_d",
            });
        }
        if self.target.len() != self.delta_target.len() {
            return Err(Error::Inconsistent("target and its change differ in length".into()));
        }
        let mut out = Vec::new();
        match variant {
            ObservationVariant::Desired => out.extend_from_slice(&self.q_d),
            ObservationVariant::JointAngles => {
                out.extend_from_slice(&self.q_d);
                out.extend_from_slice(need(&self.q_m, variant, "q_m")?);
                out.extend_from_slice(need(&self.e_q, variant, "e_q")?);
            }
            ObservationVariant::Tactile => {
                out.extend_from_slice(need(&self.tactile, variant, "tactile")?);
                out.extend_from_slice(&self.q_d);
            }
        }
        out.extend_from_slice(&self.target);
        out.extend_from_slice(&self.delta_target);
        Ok(out)
    }
}

/// Sliding window of the most recent frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationHistory {
    depth: usize,
    frames: VecDeque<ObservationFrame>,
}

impl Default for ObservationHistory {
    fn default() -> Self {
        Self::new(HISTORY_DEPTH)
    }
}

impl ObservationHistory {
    pub fn new(depth: usize) -> Self {
        Self {
            depth: depth.max(1),
            frames: VecDeque::with_capacity(depth),
        }
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn push(&mut self, frame: ObservationFrame) {
        if self.frames.len() == self.depth {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
    }

    /// Oldest to newest, `depth` frames; a short history is padded in front
    /// with copies of its first frame.
    pub fn assemble(&self, variant: ObservationVariant) -> Result<Vec<f64>> {
        let first = self
            .frames
            .front()
            .ok_or_else(|| Error::Inconsistent("observation history is empty".into()))?;
        let pad = self.depth - self.frames.len();
        let mut out = Vec::new();
        for frame in std::iter::repeat_n(first, pad).chain(self.frames.iter()) {
            out.extend(frame.features(variant)?);
        }
        Ok(out)
    }
}

/// Produces `Δp_d,k = p_d,k - p_d,k-1`, zero on the first step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TargetTracker {
    prev: Option<Vec<f64>>,
}

impl TargetTracker {
    pub fn reset(&mut self) {
        self.prev = None;
    }

    pub fn update(&mut self, target: &[f64]) -> Vec<f64> {
        let delta = match &self.prev {
            Some(p) if p.len() == target.len() => target.iter().zip(p).map(|(a, b)| a - b).collect(),
            _ => vec![0.0; target.len()],
        };
        self.prev = Some(target.to_vec());
        delta
    }
}

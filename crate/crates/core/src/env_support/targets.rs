use std::f64::consts::PI;
use std::io::Read;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Desired contact position over time, in sensor coordinates (mm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetTrajectory {
    /// Cosine-eased path through `(t_s, [x, y])` knots, holding the last one.
    Smooth { knots: Vec<(f64, [f64; 2])> },
    /// Straight segments between `(t_s, [x, y])` knots, holding the ends.
    Linear { knots: Vec<(f64, [f64; 2])> },
    /// Eased move from the center to `(radius, 0)`, then counterclockwise circles.
    Circle { radius: f64, approach_s: f64, period_s: f64 },
    /// `amplitude sin(2 pi f t)` along the direction `alpha_b_deg`.
    Sinusoid {
        amplitude: f64,
        frequency_hz: f64,
        alpha_b_deg: f64,
    },
}

fn ease(s: f64) -> f64 {
    0.5 * (1.0 - (PI * s.clamp(0.0, 1.0)).cos())
}

fn lerp(a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s]
}

fn check_knots(knots: &[(f64, [f64; 2])]) -> Result<()> {
    if knots.is_empty() {
        return Err(Error::Waypoints("no waypoints".into()));
    }
    for (i, w) in knots.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(Error::Waypoints(format!("time not increasing at row {}", i + 2)));
        }
    }
    if knots.iter().any(|(t, p)| !t.is_finite() || !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::Waypoints("non-finite value".into()));
    }
    Ok(())
}

impl TargetTrajectory {
    /// Random training path: knots every `segment_s` seconds drawn uniformly
    /// in the square `[-half_box, half_box]^2`, starting at the center.
    pub fn marble_train<R: Rng + ?Sized>(rng: &mut R, duration_s: f64, segment_s: f64, half_box: f64) -> Self {
        let n = (duration_s / segment_s).ceil().max(1.0) as usize;
        let mut knots = vec![(0.0, [0.0, 0.0])];
        for k in 1..=n {
            let p = [rng.random_range(-half_box..=half_box), rng.random_range(-half_box..=half_box)];
            knots.push((k as f64 * segment_s, p));
        }
        TargetTrajectory::Smooth { knots }
    }

    /// Evaluation circle: 2 s approach, 5 mm radius, 6 s per turn.
    pub fn marble_eval() -> Self {
        TargetTrajectory::Circle {
            radius: 5.0,
            approach_s: 2.0,
            period_s: 6.0,
        }
    }

    /// Bolt sinusoid, 6 mm amplitude, frequency drawn in `[0.25, 0.5]` Hz.
    pub fn bolt<R: Rng + ?Sized>(rng: &mut R, alpha_b_deg: f64) -> Self {
        TargetTrajectory::Sinusoid {
            amplitude: 6.0,
            frequency_hz: rng.random_range(0.25..=0.5),
            alpha_b_deg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TargetTrajectory::Smooth { knots } | TargetTrajectory::Linear { knots } => check_knots(knots),
            TargetTrajectory::Circle {
                radius,
                approach_s,
                period_s,
            } => {
                if *radius >= 0.0 && *approach_s >= 0.0 && *period_s > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config("circle needs radius, approach >= 0 and period > 0".into()))
                }
            }
            TargetTrajectory::Sinusoid {
                amplitude,
                frequency_hz,
                ..
            } => {
                if amplitude.is_finite() && *frequency_hz >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config("sinusoid needs finite amplitude and frequency >= 0".into()))
                }
            }
        }
    }

    /// Number of target values in an observation: 1 for the bolt, 2 otherwise.
    pub fn dims(&self) -> usize {
        match self {
            TargetTrajectory::Sinusoid { .. } => 1,
            _ => 2,
        }
    }

    /// Bolt displacement along its sliding direction; `None` for 2-D paths.
    pub fn scalar(&self, t: f64) -> Option<f64> {
        match *self {
            TargetTrajectory::Sinusoid {
                amplitude,
                frequency_hz,
                ..
            } => Some(amplitude * (2.0 * PI * frequency_hz * t).sin()),
            _ => None,
        }
    }

    /// Target as it enters the observation.
    pub fn observed(&self, t: f64) -> Vec<f64> {
        match self.scalar(t) {
            Some(s) => vec![s],
            None => self.at(t).to_vec(),
        }
    }

    /// 2-D target at time `t` (s).
    pub fn at(&self, t: f64) -> [f64; 2] {
        match self {
            TargetTrajectory::Smooth { knots } | TargetTrajectory::Linear { knots } => {
                let smooth = matches!(self, TargetTrajectory::Smooth { .. });
                let k = knots.partition_point(|(tk, _)| *tk <= t);
                if k == 0 {
                    return knots[0].1;
                }
                if k == knots.len() {
                    return knots[k - 1].1;
                }
                let (t0, p0) = knots[k - 1];
                let (t1, p1) = knots[k];
                let s = (t - t0) / (t1 - t0);
                lerp(p0, p1, if smooth { ease(s) } else { s })
            }
            TargetTrajectory::Circle {
                radius,
                approach_s,
                period_s,
            } => {
                if t < *approach_s {
                    [radius * ease(t / approach_s), 0.0]
                } else {
                    let phi = 2.0 * PI * (t - approach_s) / period_s;
                    [radius * phi.cos(), radius * phi.sin()]
                }
            }
            TargetTrajectory::Sinusoid { alpha_b_deg, .. } => {
                let s = self.scalar(t).unwrap_or(0.0);
                let a = alpha_b_deg.to_radians();
                [s * a.cos(), s * a.sin()]
            }
        }
    }
}

#[derive(Deserialize)]
struct WaypointRow {
    t_s: f64,
    x_mm: f64,
    y_mm: f64,
}

/// Reads `t_s,x_mm,y_mm` rows into a piecewise-linear trajectory.
pub fn read_waypoints_csv<R: Read>(r: R) -> Result<TargetTrajectory> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut knots = Vec::new();
    for (i, row) in reader.deserialize::<WaypointRow>().enumerate() {
        let row = row.map_err(|e| Error::Waypoints(format!("row {}: {e}", i + 2)))?;
        knots.push((row.t_s, [row.x_mm, row.y_mm]));
    }
    check_knots(&knots)?;
    Ok(TargetTrajectory::Linear { knots })
}

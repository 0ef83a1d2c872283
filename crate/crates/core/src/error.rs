use thiserror::Error;

/// Errors produced by the skin model, calibration and environment support code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shift distance D = {shift} mm too small: shifted tactile point {point} lies inside the indenter")]
    ShiftTooSmall { shift: f64, point: usize },

    #[error("no contact geometry: no ray hits the indenter")]
    NoContactGeometry,

    #[error("normal force {force} N unreachable within the penetration cap of {cap} mm (reached {reached} N)")]
    ForceUnreachable { force: f64, cap: f64, reached: f64 },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("all-zero tactile image")]
    ZeroImage,

    #[error("invalid samples in dataset: {}", format_invalid(.0))]
    InvalidSamples(Vec<(usize, String)>),

    #[error("simulated image is all-zero at every slack offset (no overlap)")]
    NoOverlap,

    #[error("no taxel has a solvable scale")]
    NoSolvableTaxel,

    #[error("no valley: every grid cell exceeds the loss threshold {threshold} (best cell loss {best_loss} at {best_cell})")]
    NoValley {
        threshold: f64,
        best_loss: f64,
        best_cell: String,
    },

    #[error("observation variant {variant} requires field {field}")]
    ObservationMismatch {
        variant: &'static str,
        field: &'static str,
    },

    #[error("malformed waypoint file: {0}")]
    Waypoints(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

fn format_invalid(items: &[(usize, String)]) -> String {
    items
        .iter()
        .map(|(i, why)| format!("#{i}: {why}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

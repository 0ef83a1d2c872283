//! `skinsim`: batch simulation, sweeps, calibration and randomization dumps.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use skinsim_core::calibration::{evaluate_grid, extract_intervals, CellResult, GridSpec, Intervals};
use skinsim_core::randomization::sample_episodes;
use skinsim_core::scene::{write_track_csv, Evaluation};
use skinsim_core::synthetic::{synthesize, SynthSpec};
use skinsim_core::tactile_image::{read_images_csv, write_images_csv};
use skinsim_core::{CalibrationDataset, Error, RandomizationConfig, SceneSpec, TactileImage, DEFAULT_THRESHOLD};

#[derive(Parser)]
#[command(name = "skinsim", version, about = "Tactile skin simulation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Pgm,
}

impl Format {
    fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            "pgm" => Some(Format::Pgm),
            _ => None,
        }
    }

    fn ext(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Pgm => "pgm",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tactile image(s) of a scene.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output file; stdout when absent (not for PGM).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Tactile evaluations per simulated second.
        #[arg(long, default_value_t = 10.0)]
        cadence_hz: f64,
        /// Round taxel values to integers.
        #[arg(long)]
        quantize: bool,
    },
    /// Evaluate a scene trajectory and write the image sequence plus centroid track.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, default_value_t = 10.0)]
        cadence_hz: f64,
    },
    /// Macro grid search over a measured dataset.
    Calibrate {
        #[arg(long)]
        dataset: PathBuf,
        /// Grid file; the built-in grid when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for intervals.json and loss_grid.csv.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Print the interval table instead of JSON.
        #[arg(long)]
        table: bool,
    },
    /// Dump sampled episode parameters as JSON.
    Randomize {
        /// Randomization config, bare or under a `randomization` key.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthetic calibration dataset with known mounting.
    SynthDataset {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the ground truth here.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Convert a single image between JSON, CSV and PGM.
    Reformat {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Format,
    },
}

/// Failure with its exit code: 2 for bad input, 1 for everything else.
#[derive(Debug)]
enum Failure {
    Input(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

/// Errors from parsing or validating user files.
fn input(what: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", what.display()))
}

fn classify(e: Error) -> Failure {
    match e {
        Error::Config(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::InvalidSamples(_)
        | Error::EmptyDataset
        | Error::ZeroImage
        | Error::Waypoints(_)
        | Error::Mesh(_) => Failure::Input(e.to_string()),
        _ => Failure::Runtime(e.to_string()),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let fail = |e: std::io::Error| Failure::Runtime(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Runtime(format!("stdout: {e}"))),
    }
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))
}

fn to_json_pretty<S: Serialize>(v: &S) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("plain data serializes");
    s.push(b'\n');
    s
}

/// JSON: one array for a single image, an array of arrays otherwise.
fn images_json(images: &[TactileImage<f64>]) -> Vec<u8> {
    let mut s = if let [one] = images {
        one.to_json()
    } else {
        let rows: Vec<String> = images.iter().map(TactileImage::to_json).collect();
        format!("[{}]", rows.join(","))
    };
    s.push('\n');
    s.into_bytes()
}

fn images_csv(images: &[TactileImage<f64>]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_images_csv(images, &mut buf).expect("write to memory");
    buf
}

fn pgm(image: &TactileImage<f64>) -> Vec<u8> {
    let mut buf = Vec::new();
    image.write_pgm(&mut buf).expect("write to memory");
    buf
}

/// Writes images to `out`; several PGMs become `<stem>_0000.pgm`, `<stem>_0001.pgm`, ...
fn write_images(images: &[TactileImage<f64>], out: Option<&Path>, format: Format) -> Result<(), Failure> {
    match format {
        Format::Json => emit(out, &images_json(images)),
        Format::Csv => emit(out, &images_csv(images)),
        Format::Pgm => {
            let out = out.ok_or_else(|| Failure::Input("PGM output needs --out".into()))?;
            if let [one] = images {
                return write_atomic(out, &pgm(one));
            }
            let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
            for (k, img) in images.iter().enumerate() {
                write_atomic(&out.with_file_name(format!("{stem}_{k:04}.pgm")), &pgm(img))?;
            }
            Ok(())
        }
    }
}

fn load_scene(path: &Path) -> Result<skinsim_core::scene::LoadedScene, Failure> {
    let spec = SceneSpec::from_json(&read_text(path)?).map_err(input(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    spec.load(base).map_err(input(path))
}

fn run_scene(path: &Path, cadence_hz: f64) -> Result<Vec<Evaluation>, Failure> {
    let scene = load_scene(path)?;
    scene.schedule(cadence_hz).map_err(classify)?;
    scene.run(cadence_hz).map_err(classify)
}

fn simulate(config: &Path, out: Option<&Path>, format: Format, cadence_hz: f64, quantize: bool) -> Result<(), Failure> {
    let images: Vec<TactileImage<f64>> = run_scene(config, cadence_hz)?
        .into_iter()
        .map(|e| if quantize { e.image.quantized() } else { e.image })
        .collect();
    write_images(&images, out, format)
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn sweep(config: &Path, out: &Path, format: Format, cadence_hz: f64) -> Result<(), Failure> {
    let evals = run_scene(config, cadence_hz)?;
    create_dir(out)?;
    let mut track = Vec::new();
    write_track_csv(&evals, &mut track).map_err(classify)?;
    write_atomic(&out.join("track.csv"), &track)?;
    let images: Vec<TactileImage<f64>> = evals.iter().map(|e| e.image.clone()).collect();
    let target = match format {
        Format::Pgm => {
            let dir = out.join("frames");
            create_dir(&dir)?;
            dir.join("frame.pgm")
        }
        f => out.join(format!("images.{}", f.ext())),
    };
    if format == Format::Pgm && images.len() == 1 {
        write_atomic(&target.with_file_name("frame_0000.pgm"), &pgm(&images[0]))?;
    } else {
        write_images(&images, Some(&target), format)?;
    }
    eprintln!(
        "{} evaluations, median {:.3} ms per evaluation",
        evals.len(),
        median(evals.iter().map(|e| e.eval_ms).collect())
    );
    Ok(())
}

#[derive(Serialize)]
struct CalibrationSummary<'a> {
    intervals: &'a Intervals<f64>,
    best_cell: &'a CellResult<f64>,
    threshold: f64,
    valid_samples: usize,
}

fn calibrate(dataset: &Path, grid: Option<&Path>, out: &Path, threshold: f64, table: bool) -> Result<(), Failure> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Failure::Input(format!("threshold must be a non-negative number, got {threshold}")));
    }
    let data = CalibrationDataset::<f64>::from_json(&read_text(dataset)?).map_err(input(dataset))?;
    let spec = match grid {
        Some(p) => GridSpec::from_json(&read_text(p)?).map_err(input(p))?,
        None => GridSpec::default(),
    };
    let setup = spec.setup::<f64>().map_err(classify)?;
    let grid = spec.grid::<f64>().map_err(classify)?;
    let losses = evaluate_grid(&data, &grid, &setup).map_err(classify)?;

    create_dir(out)?;
    let mut csv = Vec::new();
    losses.write_csv(&mut csv).map_err(classify)?;
    write_atomic(&out.join("loss_grid.csv"), &csv)?;

    let intervals = extract_intervals(&losses, threshold).map_err(|e| Failure::Runtime(e.to_string()))?;
    let best = losses.best().expect("a valley implies cells");
    let summary = CalibrationSummary {
        intervals: &intervals,
        best_cell: best,
        threshold,
        valid_samples: losses.valid_count,
    };
    write_atomic(&out.join("intervals.json"), &to_json_pretty(&summary))?;
    if table {
        print!("{}", intervals.table());
    } else {
        emit(None, &to_json_pretty(&intervals))?;
    }
    Ok(())
}

fn randomization_config(path: Option<&Path>) -> Result<RandomizationConfig, Failure> {
    let Some(path) = path else {
        return Ok(RandomizationConfig::default());
    };
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| input(path)(e.into()))?;
    let inner = match value {
        serde_json::Value::Object(mut m) if m.contains_key("randomization") => m.remove("randomization").expect("checked"),
        v => v,
    };
    let config: RandomizationConfig = serde_json::from_value(inner).map_err(|e| input(path)(e.into()))?;
    config.validate().map_err(input(path))?;
    Ok(config)
}

fn randomize(config: Option<&Path>, n: usize, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let config = randomization_config(config)?;
    let draws = sample_episodes(&config, n, seed).map_err(classify)?;
    emit(out, &to_json_pretty(&draws))
}

#[derive(Serialize)]
struct Truth {
    spec: SynthSpec,
    true_coords_mm: Vec<[f64; 2]>,
    taxel_offsets: Vec<f64>,
    taxel_noise_std: Vec<f64>,
}

fn synth_dataset(config: Option<&Path>, seed: Option<u64>, out: &Path, truth: Option<&Path>) -> Result<(), Failure> {
    let mut spec = match config {
        Some(p) => serde_json::from_str::<SynthSpec>(&read_text(p)?).map_err(|e| input(p)(e.into()))?,
        None => SynthSpec::default(),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate().map_err(classify)?;
    let synth = synthesize(&spec).map_err(classify)?;
    write_atomic(out, synth.dataset.to_json().as_bytes())?;
    if let Some(t) = truth {
        let truth = Truth {
            spec,
            true_coords_mm: synth.true_coords,
            taxel_offsets: synth.taxel_offsets,
            taxel_noise_std: synth.taxel_noise_std,
        };
        write_atomic(t, &to_json_pretty(&truth))?;
    }
    Ok(())
}

fn read_image(path: &Path) -> Result<TactileImage<f64>, Failure> {
    let bad = input(path);
    let image = match Format::from_path(path) {
        Some(Format::Json) => TactileImage::from_json(read_text(path)?.trim(), 4, 4).map_err(bad)?,
        Some(Format::Csv) => {
            let mut images = read_images_csv(read_text(path)?.as_bytes(), 4, 4).map_err(&bad)?;
            if images.len() != 1 {
                return Err(bad(Error::Inconsistent(format!("expected one image, found {}", images.len()))));
            }
            images.remove(0)
        }
        Some(Format::Pgm) => {
            let bytes = std::fs::read(path).map_err(|e| bad(e.into()))?;
            TactileImage::read_pgm(bytes.as_slice()).map_err(&bad)?
        }
        None => return Err(Failure::Input(format!("{}: unknown image extension", path.display()))),
    };
    Ok(image)
}

fn reformat(input_path: &Path, out: Option<&Path>, format: Format) -> Result<(), Failure> {
    let image = read_image(input_path)?;
    write_images(&[image], out, format)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            format,
            cadence_hz,
            quantize,
        } => simulate(&config, out.as_deref(), format, cadence_hz, quantize),
        Command::Sweep {
            config,
            out,
            format,
            cadence_hz,
        } => sweep(&config, &out, format, cadence_hz),
        Command::Calibrate {
            dataset,
            config,
            out,
            threshold,
            table,
        } => calibrate(&dataset, config.as_deref(), &out, threshold, table),
        Command::Randomize { config, n, seed, out } => randomize(config.as_deref(), n, seed, out.as_deref()),
        Command::SynthDataset {
            config,
            seed,
            out,
            truth,
        } => synth_dataset(config.as_deref(), seed, &out, truth.as_deref()),
        Command::Reformat { input, out, format } => reformat(&input, out.as_deref(), format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

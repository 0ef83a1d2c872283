//! Tactile image container and its file formats (JSON, CSV, 8-bit PGM).

use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lowest taxel value of the real sensor.
pub const TAXEL_MIN: f64 = 0.0;
/// Highest taxel value of the real sensor (8 bit).
pub const TAXEL_MAX: f64 = 255.0;

/// Taxel values in row-major order, each in `[0, 255]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct TactileImage<T> {
    rows: usize,
    cols: usize,
    values: Vec<T>,
}

impl<T: Real> TactileImage<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![T::zero(); rows * cols],
        }
    }

    /// Wraps raw values, clipping each into `[0, 255]`.
    pub fn from_values(rows: usize, cols: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Inconsistent(format!(
                "image needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Inconsistent("image contains NaN".into()));
        }
        let values = values.into_iter().map(clip_taxel).collect();
        Ok(Self { rows, cols, values })
    }

    /// Square 4x4 image from 16 values.
    pub fn from_slice(values: &[T]) -> Result<Self> {
        Self::from_values(4, 4, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    /// Number of taxels with a value above zero.
    pub fn active_count(&self) -> usize {
        self.values.iter().filter(|v| **v > T::zero()).count()
    }

    /// Rounded to the nearest integer, as the real sensor reports.
    pub fn quantized(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| v.round()).collect(),
        }
    }

    /// Same values multiplied by `factor`, clipped.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| clip_taxel(*v * factor)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> TactileImage<U> {
        TactileImage {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }

    /// JSON array of the values.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.values).expect("numbers serialize")
    }

    /// Parses a JSON array of `rows * cols` numbers.
    pub fn from_json(text: &str, rows: usize, cols: usize) -> Result<Self> {
        let values: Vec<T> = serde_json::from_str(text)?;
        Self::from_values(rows, cols, values)
    }

    /// One CSV row of the values.
    pub fn to_csv_row(&self) -> String {
        let mut s = String::new();
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write!(s, "{v}").expect("write to string");
        }
        s
    }

    /// Writes the quantized image as binary 8-bit PGM (`P5`).
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.cols, self.rows)?;
        let bytes: Vec<u8> = self
            .values
            .iter()
            .map(|v| v.round().to_u8().unwrap_or(0))
            .collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    /// Reads a binary 8-bit PGM written by [`write_pgm`](Self::write_pgm) or any
    /// `P5` file with maxval 255.
    pub fn read_pgm<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        let mut pos = 0;
        let mut token = || -> Result<String> {
            loop {
                while pos < buf.len() && buf[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < buf.len() && buf[pos] == b'#' {
                    while pos < buf.len() && buf[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Inconsistent("truncated PGM header".into()));
            }
            Ok(String::from_utf8_lossy(&buf[start..pos]).into_owned())
        };
        let bad = |what: &str| Error::Inconsistent(format!("PGM: {what}"));
        if token()? != "P5" {
            return Err(bad("expected P5 magic"));
        }
        let cols: usize = token()?.parse().map_err(|_| bad("bad width"))?;
        let rows: usize = token()?.parse().map_err(|_| bad("bad height"))?;
        if token()? != "255" {
            return Err(bad("maxval must be 255"));
        }
        // exactly one whitespace byte separates the header from the raster
        let data = buf.get(pos + 1..).ok_or_else(|| bad("missing raster"))?;
        if data.len() != rows * cols {
            return Err(bad("raster size mismatch"));
        }
        let values = data.iter().map(|&b| T::lit(b as f64)).collect();
        Self::from_values(rows, cols, values)
    }
}

/// Clips into `[0, 255]`.
#[inline]
pub fn clip_taxel<T: Real>(v: T) -> T {
    v.max(T::lit(TAXEL_MIN)).min(T::lit(TAXEL_MAX))
}

/// Writes images as CSV with a header `t0..tN`.
pub fn write_images_csv<T: Real, W: Write>(images: &[TactileImage<T>], mut w: W) -> Result<()> {
    let n = images.first().map_or(16, TactileImage::len);
    let header: Vec<String> = (0..n).map(|j| format!("t{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for img in images {
        writeln!(w, "{}", img.to_csv_row())?;
    }
    Ok(())
}

/// Reads CSV written by [`write_images_csv`].
pub fn read_images_csv<T: Real, R: Read>(r: R, rows: usize, cols: usize) -> Result<Vec<TactileImage<T>>> {
    let mut reader = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let values = record
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| Error::Inconsistent(format!("bad taxel value {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(TactileImage::from_values(rows, cols, values)?);
    }
    Ok(out)
}

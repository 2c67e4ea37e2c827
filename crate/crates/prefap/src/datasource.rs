//! Stream inputs: seeded synthetic generators, CSV ingestion and tumbling
//! window segmentation.
//!
//! Generation is deterministic in the spec: the generator is ChaCha8 seeded
//! with the spec's 64-bit seed, so identical specs produce identical streams
//! across runs and platforms.

use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::error::{Error, Result};
use crate::model::{Element, Stream};

/// Value distribution of a synthetic stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistKind {
    /// Reals drawn uniformly from `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Normal draws with mean `mu` and standard deviation `sigma`; tails are
    /// not clipped.
    Normal { mu: f64, sigma: f64 },
    /// Integer ranks `1..=n_distinct` drawn with probability proportional to
    /// `rank^-alpha`, emitted as values.
    Zipf { alpha: f64, n_distinct: u64 },
}

/// A fully specified synthetic stream: distribution, seed and length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistSpec {
    pub kind: DistKind,
    pub seed: u64,
    pub count: usize,
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self.kind {
            DistKind::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return bad(format!("uniform needs finite lo < hi, got {lo}..{hi}"));
                }
            }
            DistKind::Normal { mu, sigma } => {
                if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
                    return bad(format!("normal needs finite mu and sigma > 0, got mu={mu} sigma={sigma}"));
                }
            }
            DistKind::Zipf { alpha, n_distinct } => {
                if !alpha.is_finite() || alpha <= 1.0 {
                    return bad(format!("zipf needs alpha > 1, got {alpha}"));
                }
                if n_distinct < 1 {
                    return bad("zipf needs n_distinct >= 1".into());
                }
            }
        }
        if self.count < 1 {
            return bad("count must be >= 1".into());
        }
        Ok(())
    }

    fn label(&self) -> &'static str {
        match self.kind {
            DistKind::Uniform { .. } => "uniform",
            DistKind::Normal { .. } => "normal",
            DistKind::Zipf { .. } => "zipf",
        }
    }
}

/// Generates a stream from a validated spec; deterministic in the spec.
pub fn generate(spec: &DistSpec) -> Result<Stream> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values: Vec<f64> = match spec.kind {
        DistKind::Uniform { lo, hi } => {
            let dist = Uniform::new_inclusive(lo, hi);
            (0..spec.count).map(|_| dist.sample(&mut rng)).collect()
        }
        DistKind::Normal { mu, sigma } => {
            let dist = Normal::new(mu, sigma)
                .map_err(|e| Error::InvalidSpec(format!("normal: {e}")))?;
            (0..spec.count).map(|_| dist.sample(&mut rng)).collect()
        }
        DistKind::Zipf { alpha, n_distinct } => {
            let cdf = zipf_cdf(alpha, n_distinct);
            (0..spec.count)
                .map(|_| {
                    let u: f64 = rng.gen();
                    let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                    (idx + 1) as f64
                })
                .collect()
        }
    };
    let elements = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| Element::new(v, i as u64))
        .collect();
    Ok(Stream::new(spec.label(), elements))
}

/// Cumulative rank probabilities for inverse-CDF sampling.
fn zipf_cdf(alpha: f64, n_distinct: u64) -> Vec<f64> {
    let weights: Vec<f64> = (1..=n_distinct).map(|k| (k as f64).powf(-alpha)).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

/// Reads one numeric column from a headered, comma-separated UTF-8 file.
/// Row order is preserved and the payload id is the 0-based data row index.
/// Row numbers in errors are 1-based and count the header as row 1.
pub fn load_csv(path: impl AsRef<Path>, column: &str) -> Result<Stream> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };

    let raw = std::fs::read_to_string(path).map_err(io_err)?;
    if raw.trim().is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(raw.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            column: column.to_string(),
            message: e.to_string(),
        })?
        .clone();
    let col_idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::Parse {
            row: 1,
            column: column.to_string(),
            message: format!("column not found among {:?}", headers.iter().collect::<Vec<_>>()),
        })?;

    let mut elements = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let parse_err = |message: String| Error::Parse {
            row,
            column: column.to_string(),
            message,
        };
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        let cell = record
            .get(col_idx)
            .ok_or_else(|| parse_err("missing field".into()))?;
        let value: f64 = cell
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("'{cell}': {e}")))?;
        if !value.is_finite() {
            return Err(parse_err(format!("'{cell}' is not a finite number")));
        }
        elements.push(Element::new(value, i as u64));
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".to_string());
    Ok(Stream::new(name, elements))
}

/// Cuts a stream into tumbling (non-overlapping) windows of `w` elements in
/// arrival order; a trailing partial window is emitted as-is. Elements keep
/// their original payload ids.
pub fn windows(s: &Stream, w: usize) -> Vec<Stream> {
    assert!(w >= 1, "window size must be >= 1");
    s.elements
        .chunks(w)
        .map(|chunk| Stream::new(s.name.clone(), chunk.to_vec()))
        .collect()
}

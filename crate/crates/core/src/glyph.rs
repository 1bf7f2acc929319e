//! Glyph encoding, the nearest-symbol projection and the collapse check.
//!
//! A glyph is a fixed, seeded encoding of the most recent stretch of a
//! trajectory:
//!
//! 1. features = tail-state centroid (d values) ++ 16-bin histogram of the
//!    tension window, normalized to sum 1 ++ mean tension ++ max tension;
//! 2. glyph = `M * features / sqrt(len(features))`, where `M` is a
//!    `d x len(features)` matrix of standard normal entries drawn row by row
//!    from the crate generator seeded with `encoder_seed`.
//!
//! Histogram bins split `[0, max]` of the window into equal widths; a window
//! of all-zero tension puts all its mass in bin 0.

use std::collections::HashSet;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::state::{squared_euclidean, State, Trajectory};
use crate::stats;
use crate::tension::TensionTrace;

pub const HISTOGRAM_BINS: usize = 16;
pub const MIN_WINDOW: usize = 8;
pub const DEFAULT_WINDOW: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glyph {
    pub vector: State,
    pub window: usize,
    pub encoder_seed: u64,
}

/// Length of the feature vector for latent dimension `dim`.
pub fn feature_len(dim: usize) -> usize {
    dim + HISTOGRAM_BINS + 2
}

/// The pre-projection features of the last `window` steps.
pub fn glyph_features(trajectory: &Trajectory, tension: &TensionTrace, window: usize) -> Result<Vec<f64>> {
    let dim = trajectory.dim();
    if dim == 0 {
        return Err(Error::param("dim", "must be positive"));
    }
    if window < MIN_WINDOW {
        return Err(Error::param("window", format!("{window} < {MIN_WINDOW}")));
    }
    if window > tension.len() {
        return Err(Error::param(
            "window",
            format!("{window} > {} tension values", tension.len()),
        ));
    }
    if tension.dim != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: tension.dim,
        });
    }
    let states = trajectory.states();
    let mut features = vec![0.0; feature_len(dim)];
    for s in &states[states.len() - window..] {
        features[..dim].iter_mut().zip(s.as_slice()).for_each(|(f, x)| *f += x);
    }
    features[..dim].iter_mut().for_each(|f| *f /= window as f64);

    let xi = &tension.values[tension.len() - window..];
    let max = xi.iter().copied().fold(0.0, f64::max);
    let hist = &mut features[dim..dim + HISTOGRAM_BINS];
    for &x in xi {
        let bin = if max > 0.0 {
            ((x / max * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)
        } else {
            0
        };
        hist[bin] += 1.0;
    }
    hist.iter_mut().for_each(|h| *h /= window as f64);
    features[dim + HISTOGRAM_BINS] = stats::mean(xi);
    features[dim + HISTOGRAM_BINS + 1] = max;
    Ok(features)
}

/// The seeded `rows x cols` projection matrix, row-major.
pub fn projection_matrix(encoder_seed: u64, rows: usize, cols: usize) -> Vec<f64> {
    let mut rng = rng_from_seed(encoder_seed);
    (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn encode_glyph(
    trajectory: &Trajectory,
    tension: &TensionTrace,
    window: usize,
    encoder_seed: u64,
) -> Result<Glyph> {
    let features = glyph_features(trajectory, tension, window)?;
    let dim = trajectory.dim();
    let cols = features.len();
    let m = projection_matrix(encoder_seed, dim, cols);
    let scale = (cols as f64).sqrt();
    let vector = (0..dim)
        .map(|i| m[i * cols..(i + 1) * cols].iter().zip(&features).map(|(a, f)| a * f).sum::<f64>() / scale)
        .collect();
    Ok(Glyph {
        vector: State::new(vector)?,
        window,
        encoder_seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub id: u64,
    pub text: String,
    pub embedding: State,
}

/// Symbol table with embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    entries: Vec<VocabEntry>,
    dim: usize,
}

impl Vocab {
    pub fn new(entries: Vec<VocabEntry>) -> Result<Self> {
        let dim = entries.first().ok_or(Error::Empty("vocab"))?.embedding.dim();
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.embedding.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.embedding.dim(),
                });
            }
            if !seen.insert(e.id) {
                return Err(Error::param("id", format!("duplicate vocab id {}", e.id)));
            }
        }
        Ok(Vocab { entries, dim })
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&VocabEntry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

/// `n` entries with ids `0..n`, text `tok{id}`, and i.i.d. `N(0, scale^2)`
/// embedding coordinates.
pub fn synthetic_vocab(n: usize, dim: usize, scale: f64, seed: u64) -> Result<Vocab> {
    let mut rng = rng_from_seed(seed);
    let entries = (0..n as u64)
        .map(|id| {
            let v = (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            Ok(VocabEntry {
                id,
                text: format!("tok{id}"),
                embedding: State::new(v)?,
            })
        })
        .collect::<Result<_>>()?;
    Vocab::new(entries)
}

/// The 5th percentile of pairwise embedding distances.
pub fn default_delta(vocab: &Vocab) -> Result<f64> {
    if vocab.len() < 2 {
        return Err(Error::InsufficientData("default delta needs two vocab entries".into()));
    }
    let e = vocab.entries();
    let mut d = Vec::with_capacity(e.len() * (e.len() - 1) / 2);
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            d.push(e[i].embedding.distance(&e[j].embedding));
        }
    }
    Ok(stats::quantile(&d, 0.05))
}

/// Nearest vocab entry to `glyph`, ties broken by lowest id.
pub fn project_symbolic(glyph: &Glyph, vocab: &Vocab) -> Result<(u64, f64)> {
    nearest_symbol(glyph.vector.as_slice(), vocab)
}

pub fn nearest_symbol(vector: &[f64], vocab: &Vocab) -> Result<(u64, f64)> {
    if vocab.is_empty() {
        return Err(Error::Empty("vocab"));
    }
    if vector.len() != vocab.dim() {
        return Err(Error::DimensionMismatch {
            expected: vocab.dim(),
            found: vector.len(),
        });
    }
    let mut best = (u64::MAX, f64::INFINITY);
    for e in vocab.entries() {
        let d = squared_euclidean(vector, e.embedding.as_slice());
        if d < best.1 || (d == best.1 && e.id < best.0) {
            best = (e.id, d);
        }
    }
    Ok((best.0, best.1.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorReport {
    pub nearest_id: u64,
    pub nearest_distance: f64,
    pub delta: f64,
    /// `nearest_distance >= delta`.
    pub anchored: bool,
    /// The symbol consumed at the last step, when it is in the vocab.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_id: Option<u64>,
    /// Distance from the glyph to that symbol's embedding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_distance: Option<f64>,
}

/// Collapse check against the nearest symbol. When `current_input` names a
/// vocab entry its distance is reported too, but only the nearest-symbol
/// distance decides `anchored`.
pub fn collapse_check(
    glyph: &Glyph,
    vocab: &Vocab,
    delta: f64,
    current_input: Option<u64>,
) -> Result<AnchorReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", format!("{delta} must be positive")));
    }
    let (nearest_id, nearest_distance) = project_symbolic(glyph, vocab)?;
    let input = current_input.and_then(|id| vocab.get(id));
    Ok(AnchorReport {
        nearest_id,
        nearest_distance,
        delta,
        anchored: nearest_distance >= delta,
        input_id: input.map(|e| e.id),
        input_distance: input.map(|e| glyph.vector.distance(&e.embedding)),
    })
}

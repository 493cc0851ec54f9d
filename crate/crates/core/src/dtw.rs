//! Length-normalized dynamic time warping over embedding frames.
//!
//! Step pattern: a diagonal step adds twice the local cost, horizontal and
//! vertical steps add it once, and the first cell is counted once. The
//! minimal accumulated cost is divided by `T_x + T_y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EmbeddingSequence, Frames};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalMetric {
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    ByMPlusN,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DtwConfig {
    pub local_metric: LocalMetric,
    pub normalize: Normalization,
    /// Sakoe-Chiba radius in frames; `None` runs the full table.
    pub band: Option<usize>,
}

impl DtwConfig {
    pub fn with_band(band: usize) -> Self {
        Self {
            band: Some(band),
            ..Self::default()
        }
    }
}

pub fn dtw_distance(x: &EmbeddingSequence, y: &EmbeddingSequence, cfg: &DtwConfig) -> Result<f64> {
    dtw_frames(&x.frames, &y.frames, cfg)
}

pub fn dtw_frames(x: &Frames, y: &Frames, cfg: &DtwConfig) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    let (n, m) = (x.len(), y.len());
    if let Some(band) = cfg.band {
        if band < n.abs_diff(m) {
            return Err(Error::BandInfeasible {
                band,
                len_x: n,
                len_y: m,
            });
        }
    }
    let local = |i: usize, j: usize| match cfg.local_metric {
        LocalMetric::Euclidean => euclidean(x.frame(i), y.frame(j)),
    };
    let in_band = |i: usize, j: usize| cfg.band.is_none_or(|b| i.abs_diff(j) <= b);

    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for i in 0..n {
        for j in 0..m {
            if !in_band(i, j) {
                cur[j] = f64::INFINITY;
                continue;
            }
            let c = local(i, j);
            cur[j] = if i == 0 && j == 0 {
                c
            } else {
                let diag = if i > 0 && j > 0 { prev[j - 1] + 2.0 * c } else { f64::INFINITY };
                let up = if i > 0 { prev[j] + c } else { f64::INFINITY };
                let left = if j > 0 { cur[j - 1] + c } else { f64::INFINITY };
                diag.min(up).min(left)
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let total = prev[m - 1];
    if !total.is_finite() {
        return Err(Error::NonFinite("DTW accumulated cost".into()));
    }
    Ok(match cfg.normalize {
        Normalization::ByMPlusN => total / (n + m) as f64,
    })
}

fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let d = f64::from(p) - f64::from(q);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

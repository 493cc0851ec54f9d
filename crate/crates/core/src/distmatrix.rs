//! Aggregation of per-word distances into a location×location matrix.
//!
//! Entry (i, j) is the unweighted mean of word distances over the words
//! available at both locations, summed in sorted word order so the result
//! does not depend on word-list order or thread count.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::dtw::{dtw_frames, DtwConfig};
use crate::error::{Error, Result};
use crate::io::LayerEmbeddings;
use crate::levenshtein::Aligner;
use crate::model::{DistanceMatrix, LocationTable};
use crate::segments::{SegmentClassTable, SegmentDistanceTable, Transcription};

/// Pronunciation distance for one word between two locations.
pub trait WordDistance: Sync {
    fn has(&self, location: &str, word: &str) -> bool;
    fn distance(&self, a: &str, b: &str, word: &str) -> Result<f64>;
}

/// DTW over the frames of one (model, layer).
pub struct AcousticSource<'a> {
    pub embeddings: &'a LayerEmbeddings,
    pub config: DtwConfig,
}

impl WordDistance for AcousticSource<'_> {
    fn has(&self, location: &str, word: &str) -> bool {
        self.embeddings.get(location, word).is_some()
    }

    fn distance(&self, a: &str, b: &str, word: &str) -> Result<f64> {
        let missing = |l: &str| Error::Invalid(format!("no frames for ({l}, {word})"));
        let x = self.embeddings.get(a, word).ok_or_else(|| missing(a))?;
        let y = self.embeddings.get(b, word).ok_or_else(|| missing(b))?;
        dtw_frames(x, y, &self.config)
    }
}

/// Normalized segment alignment distance over transcriptions.
pub struct TranscriptionSource<'a> {
    by_key: HashMap<(&'a str, &'a str), &'a Transcription>,
    costs: &'a SegmentDistanceTable,
    classes: Option<&'a SegmentClassTable>,
}

impl<'a> TranscriptionSource<'a> {
    pub fn new(corpus: &'a [Transcription], costs: &'a SegmentDistanceTable) -> Self {
        let by_key = corpus
            .iter()
            .map(|t| ((t.location_id.as_str(), t.word_id.as_str()), t))
            .collect();
        Self {
            by_key,
            costs,
            classes: None,
        }
    }

    pub fn with_classes(mut self, classes: &'a SegmentClassTable) -> Self {
        self.classes = Some(classes);
        self
    }
}

impl WordDistance for TranscriptionSource<'_> {
    fn has(&self, location: &str, word: &str) -> bool {
        self.by_key.contains_key(&(location, word))
    }

    fn distance(&self, a: &str, b: &str, word: &str) -> Result<f64> {
        let missing = |l: &str| Error::Invalid(format!("no transcription for ({l}, {word})"));
        let x = self.by_key.get(&(a, word)).ok_or_else(|| missing(a))?;
        let y = self.by_key.get(&(b, word)).ok_or_else(|| missing(b))?;
        let mut aligner = Aligner::new(self.costs);
        if let Some(c) = self.classes {
            aligner = aligner.with_classes(c);
        }
        Ok(aligner.align(&x.segments, &y.segments)?.distance())
    }
}

/// Builds the averaged distance matrix over `locations` (in table order).
///
/// Runs on the current rayon pool; wrap the call in `ThreadPool::install` to
/// bound the worker count.
pub fn build_matrix<S: WordDistance>(
    source: &S,
    words: &[String],
    locations: &LocationTable,
    min_shared_words: usize,
) -> Result<DistanceMatrix> {
    if min_shared_words == 0 {
        return Err(Error::Invalid("min_shared_words must be at least 1".into()));
    }
    if words.is_empty() {
        return Err(Error::Invalid("empty word list".into()));
    }
    let mut words: Vec<&str> = words.iter().map(String::as_str).collect();
    words.sort_unstable();
    words.dedup();
    let ids: Vec<&str> = locations.ids().collect();

    let available: Vec<Vec<bool>> = ids
        .iter()
        .map(|l| words.iter().map(|w| source.has(l, w)).collect())
        .collect();
    let thin: Vec<String> = ids
        .iter()
        .zip(&available)
        .filter(|(_, a)| a.iter().filter(|&&x| x).count() < min_shared_words)
        .map(|(l, a)| format!("{l} ({} of {} words)", a.iter().filter(|&&x| x).count(), words.len()))
        .collect();
    if !thin.is_empty() {
        return Err(Error::Invalid(format!(
            "locations with fewer than {min_shared_words} available words: {}",
            thin.join(", ")
        )));
    }

    let n = ids.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let shared = |i: usize, j: usize| -> Vec<usize> {
        (0..words.len())
            .filter(|&w| available[i][w] && available[j][w])
            .collect()
    };
    let short: Vec<String> = pairs
        .iter()
        .filter_map(|&(i, j)| {
            let s = shared(i, j).len();
            (s < min_shared_words).then(|| format!("({}, {}) share {s}", ids[i], ids[j]))
        })
        .collect();
    if !short.is_empty() {
        return Err(Error::Invalid(format!(
            "location pairs sharing fewer than {min_shared_words} words: {}",
            short.join(", ")
        )));
    }

    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            let common = shared(i, j);
            let mut sum = 0.0;
            for &w in &common {
                sum += source.distance(ids[i], ids[j], words[w])?;
            }
            Ok(sum / common.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut it = values.into_iter();
    DistanceMatrix::from_upper(ids.iter().map(|s| s.to_string()).collect(), |_, _| {
        it.next().expect("one value per pair")
    })
}

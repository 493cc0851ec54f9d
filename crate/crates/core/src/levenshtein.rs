//! Vowel/consonant-sensitive Levenshtein alignment with segment costs induced
//! from pointwise mutual information of aligned segment pairs.
//!
//! Induction starts from unit costs, aligns every same-word pair of
//! locations, turns the column counts into PMI-based distances, and repeats
//! until the set of optimal alignments no longer changes.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::segments::{ordered, Segment, SegmentClassTable, SegmentDistanceTable, Transcription, GAP};

/// One alignment column; `None` marks a gap.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Column {
    pub left: Option<String>,
    pub right: Option<String>,
}

impl Column {
    pub fn tokens(&self) -> (&str, &str) {
        (
            self.left.as_deref().unwrap_or(GAP),
            self.right.as_deref().unwrap_or(GAP),
        )
    }

    pub fn is_substitution(&self) -> bool {
        self.left.is_some() && self.right.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// Summed column cost.
    pub cost: f64,
    pub columns: Vec<Column>,
}

impl Alignment {
    /// Cost divided by the number of columns.
    pub fn distance(&self) -> f64 {
        self.cost / self.columns.len() as f64
    }
}

/// Needleman-Wunsch aligner with a vowel/consonant substitution constraint.
pub struct Aligner<'a> {
    costs: &'a SegmentDistanceTable,
    classes: Option<&'a SegmentClassTable>,
}

#[derive(Clone, Copy)]
enum Step {
    Sub,
    Del,
    Ins,
}

impl<'a> Aligner<'a> {
    pub fn new(costs: &'a SegmentDistanceTable) -> Self {
        Self { costs, classes: None }
    }

    /// Consults `classes` for cross-class substitutions it explicitly allows.
    pub fn with_classes(mut self, classes: &'a SegmentClassTable) -> Self {
        self.classes = Some(classes);
        self
    }

    fn admissible(&self, a: &Segment, b: &Segment) -> bool {
        match self.classes {
            Some(t) => t.may_substitute(a, b),
            None => a.class == b.class,
        }
    }

    /// Least-cost alignment of `a` against `b`.
    ///
    /// Among alignments of equal cost the longest is kept, so the normalized
    /// distance is exactly symmetric. The traceback prefers substitution,
    /// then deletion from `a`, then insertion from `b`.
    pub fn align(&self, a: &[Segment], b: &[Segment]) -> Result<Alignment> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Invalid("cannot align an empty transcription".into()));
        }
        let (n, m) = (a.len(), b.len());
        let w = m + 1;
        let del: Vec<f64> = a.iter().map(|s| self.costs.indel_cost(&s.token)).collect::<Result<_>>()?;
        let ins: Vec<f64> = b.iter().map(|s| self.costs.indel_cost(&s.token)).collect::<Result<_>>()?;

        // (cost, columns) per cell; lower cost wins, then more columns.
        let mut cell = vec![(0.0f64, 0usize); (n + 1) * w];
        for i in 1..=n {
            let (c, l) = cell[(i - 1) * w];
            cell[i * w] = (c + del[i - 1], l + 1);
        }
        for j in 1..=m {
            let (c, l) = cell[j - 1];
            cell[j] = (c + ins[j - 1], l + 1);
        }
        let better = |x: (f64, usize), y: (f64, usize)| x.0 < y.0 || (x.0 == y.0 && x.1 > y.1);
        for i in 1..=n {
            for j in 1..=m {
                let mut best = {
                    let (c, l) = cell[(i - 1) * w + j];
                    (c + del[i - 1], l + 1)
                };
                let (c, l) = cell[i * w + j - 1];
                let cand = (c + ins[j - 1], l + 1);
                if better(cand, best) {
                    best = cand;
                }
                if self.admissible(&a[i - 1], &b[j - 1]) {
                    let (c, l) = cell[(i - 1) * w + j - 1];
                    let cand = (c + self.costs.sub_cost(&a[i - 1].token, &b[j - 1].token)?, l + 1);
                    if better(cand, best) {
                        best = cand;
                    }
                }
                cell[i * w + j] = best;
            }
        }

        let mut columns = Vec::with_capacity(cell[n * w + m].1);
        let (mut i, mut j) = (n, m);
        while i > 0 || j > 0 {
            let here = cell[i * w + j];
            let step = if i > 0
                && j > 0
                && self.admissible(&a[i - 1], &b[j - 1])
                && {
                    let (c, l) = cell[(i - 1) * w + j - 1];
                    (c + self.costs.sub_cost(&a[i - 1].token, &b[j - 1].token)?, l + 1) == here
                } {
                Step::Sub
            } else if i > 0 && {
                let (c, l) = cell[(i - 1) * w + j];
                (c + del[i - 1], l + 1) == here
            } {
                Step::Del
            } else {
                Step::Ins
            };
            let col = match step {
                Step::Sub => {
                    i -= 1;
                    j -= 1;
                    Column {
                        left: Some(a[i].token.clone()),
                        right: Some(b[j].token.clone()),
                    }
                }
                Step::Del => {
                    i -= 1;
                    Column {
                        left: Some(a[i].token.clone()),
                        right: None,
                    }
                }
                Step::Ins => {
                    j -= 1;
                    Column {
                        left: None,
                        right: Some(b[j].token.clone()),
                    }
                }
            };
            columns.push(col);
        }
        columns.reverse();
        Ok(Alignment {
            cost: cell[n * w + m].0,
            columns,
        })
    }
}

/// Aligns two transcriptions with the strict vowel/consonant constraint.
pub fn align(a: &Transcription, b: &Transcription, costs: &SegmentDistanceTable) -> Result<Alignment> {
    Aligner::new(costs).align(&a.segments, &b.segments)
}

/// Column statistics over a set of alignments.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlignmentCounts {
    /// Unordered token pairs (smaller token first); either side may be the gap.
    pub pair_counts: BTreeMap<(String, String), u64>,
    pub total_pairs: u64,
    pub token_counts: BTreeMap<String, u64>,
}

impl AlignmentCounts {
    pub fn add_column(&mut self, col: &Column) {
        let (a, b) = col.tokens();
        *self.pair_counts.entry(ordered(a, b)).or_insert(0) += 1;
        *self.token_counts.entry(a.to_owned()).or_insert(0) += 1;
        *self.token_counts.entry(b.to_owned()).or_insert(0) += 1;
        self.total_pairs += 1;
    }

    pub fn count(&self, a: &str, b: &str) -> u64 {
        self.pair_counts.get(&ordered(a, b)).copied().unwrap_or(0)
    }
}

pub fn collect_counts<'a>(alignments: impl IntoIterator<Item = &'a Alignment>) -> Result<AlignmentCounts> {
    let mut counts = AlignmentCounts::default();
    let mut any = false;
    for al in alignments {
        any = true;
        for col in &al.columns {
            counts.add_column(col);
        }
    }
    if !any {
        return Err(Error::Invalid("no alignments to count".into()));
    }
    Ok(counts)
}

/// Converts column counts into a cost table via PMI.
///
/// `p(x,y) = (count + s) / (total + s·V²)`, `p(x) = token_count / (2·total)`,
/// `PMI = log2(p(x,y) / (p(x)·p(y)))`, and costs are `PMI` affinely rescaled so
/// the largest PMI maps to 0 and the smallest to 1. Gap pairs become indel
/// costs. With `s > 0` every pair over the observed vocabulary is scored and
/// pairs outside it fall back to cost 1.
pub fn pmi_table(counts: &AlignmentCounts, smoothing: f64) -> Result<SegmentDistanceTable> {
    if counts.total_pairs == 0 {
        return Err(Error::Invalid("PMI needs at least one aligned pair".into()));
    }
    if !(smoothing.is_finite() && smoothing >= 0.0) {
        return Err(Error::Invalid(format!("smoothing must be >= 0, got {smoothing}")));
    }
    let total = counts.total_pairs as f64;
    let vocab: Vec<&String> = counts.token_counts.keys().collect();
    let v = vocab.len() as f64;
    let denom = total + smoothing * v * v;
    let marginal = |t: &str| counts.token_counts[t] as f64 / (2.0 * total);

    let mut pairs: Vec<((String, String), u64)> = Vec::new();
    if smoothing > 0.0 {
        for (i, x) in vocab.iter().enumerate() {
            for y in &vocab[i..] {
                if x.as_str() == GAP && y.as_str() == GAP {
                    continue;
                }
                pairs.push(((x.to_string(), y.to_string()), counts.count(x, y)));
            }
        }
    } else {
        pairs.extend(counts.pair_counts.iter().map(|(k, &c)| (k.clone(), c)));
    }

    let pmi: Vec<f64> = pairs
        .iter()
        .map(|((x, y), c)| {
            let joint = (*c as f64 + smoothing) / denom;
            (joint / (marginal(x) * marginal(y))).log2()
        })
        .collect();
    let max = pmi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = pmi.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > min) {
        return Err(Error::DegenerateTable);
    }

    let mut sub = Vec::new();
    let mut indel = Vec::new();
    for (((x, y), _), p) in pairs.into_iter().zip(pmi) {
        let d = ((max - p) / (max - min)).clamp(0.0, 1.0);
        match (x == GAP, y == GAP) {
            (true, false) => indel.push((y, d)),
            (false, true) => indel.push((x, d)),
            _ => sub.push(((x, y), d)),
        }
    }
    SegmentDistanceTable::induced(sub, indel, (smoothing > 0.0).then_some(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Induction {
    pub table: SegmentDistanceTable,
    /// Number of PMI tables computed.
    pub iterations: usize,
    /// Whether the optimal alignments reached a fixed point before `max_iter`.
    pub converged: bool,
}

/// Same-word location pairs in a fixed order: words sorted, then location pairs by position.
pub fn word_pairs(corpus: &[Transcription]) -> Vec<(&Transcription, &Transcription)> {
    let mut by_word: BTreeMap<&str, BTreeMap<&str, &Transcription>> = BTreeMap::new();
    for t in corpus {
        by_word
            .entry(t.word_id.as_str())
            .or_default()
            .insert(t.location_id.as_str(), t);
    }
    let mut pairs = Vec::new();
    for locs in by_word.values() {
        let ts: Vec<&Transcription> = locs.values().copied().collect();
        for i in 0..ts.len() {
            for j in i + 1..ts.len() {
                pairs.push((ts[i], ts[j]));
            }
        }
    }
    pairs
}

/// Iteratively induces PMI segment costs over all same-word location pairs.
pub fn induce(corpus: &[Transcription], max_iter: usize, smoothing: f64) -> Result<Induction> {
    let locations: BTreeSet<&str> = corpus.iter().map(|t| t.location_id.as_str()).collect();
    let pairs = word_pairs(corpus);
    if locations.len() < 2 || pairs.is_empty() {
        return Err(Error::Invalid(
            "induction needs at least two locations sharing a word".into(),
        ));
    }
    let mut table = SegmentDistanceTable::unit();
    let mut previous: Option<Vec<Vec<Column>>> = None;
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..max_iter {
        let alignments = pairs
            .par_iter()
            .map(|(a, b)| align(a, b, &table))
            .collect::<Result<Vec<_>>>()?;
        let mut signature: Vec<Vec<Column>> = alignments.iter().map(|a| a.columns.clone()).collect();
        signature.sort();
        if previous.as_ref() == Some(&signature) {
            converged = true;
            break;
        }
        table = pmi_table(&collect_counts(&alignments)?, smoothing)?;
        iterations += 1;
        previous = Some(signature);
    }
    Ok(Induction {
        table,
        iterations,
        converged,
    })
}

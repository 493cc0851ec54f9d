//! Domain types shared by every stage of the pipeline.
//!
//! All of them validate on construction and are immutable afterwards.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of the locations file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub location_id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub gold_label: Option<String>,
}

/// Validated set of dialect locations with coordinates and optional gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationTable {
    entries: Vec<Location>,
    positions: HashMap<String, usize>,
}

impl LocationTable {
    /// Validates parsed rows, collecting every row-level violation before failing.
    pub fn validate(rows: Vec<Location>) -> Result<Self> {
        let mut violations = Vec::new();
        let mut positions: HashMap<String, usize> = HashMap::new();
        for (i, row) in rows.iter().enumerate() {
            let rowno = i + 1;
            if row.location_id.trim().is_empty() {
                violations.push(format!("row {rowno}: empty location_id"));
            } else if let Some(&first) = positions.get(&row.location_id) {
                violations.push(format!(
                    "row {rowno}: duplicate location_id '{}' (first seen in row {})",
                    row.location_id,
                    first + 1
                ));
            } else {
                positions.insert(row.location_id.clone(), i);
            }
            if !(row.lat.is_finite() && (-90.0..=90.0).contains(&row.lat)) {
                violations.push(format!(
                    "row {rowno} ({}): field lat = {} outside [-90, 90]",
                    row.location_id, row.lat
                ));
            }
            if !(row.lon.is_finite() && (-180.0..=180.0).contains(&row.lon)) {
                violations.push(format!(
                    "row {rowno} ({}): field lon = {} outside [-180, 180]",
                    row.location_id, row.lon
                ));
            }
        }
        let labels: HashSet<&str> = rows
            .iter()
            .filter_map(|r| r.gold_label.as_deref())
            .collect();
        if labels.len() == 1 {
            violations.push(format!(
                "gold standard has a single group '{}'; at least two are required",
                labels.iter().next().unwrap()
            ));
        }
        if !violations.is_empty() {
            return Err(Error::Violations(violations));
        }
        Ok(Self {
            entries: rows,
            positions,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Location] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&Location> {
        self.positions.get(id).map(|&i| &self.entries[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.positions.get(id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.location_id.as_str())
    }

    pub fn has_gold(&self) -> bool {
        self.entries.iter().any(|e| e.gold_label.is_some())
    }

    /// Gold-standard partition in table order. Fails if any location lacks a label.
    pub fn gold_partition(&self) -> Result<Partition> {
        let mut missing = Vec::new();
        let mut labels = Vec::with_capacity(self.len());
        for e in &self.entries {
            match &e.gold_label {
                Some(l) => labels.push(l.clone()),
                None => missing.push(e.location_id.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::Invalid(format!(
                "locations without gold_label: {}",
                missing.join(", ")
            )));
        }
        Partition::from_labels(self.ids().map(str::to_owned).collect(), &labels)
    }
}

/// A dense T×d block of 32-bit frames, frame-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frames {
    len: usize,
    dim: usize,
    data: Vec<f32>,
}

impl Frames {
    pub fn new(len: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if len == 0 || dim == 0 {
            return Err(Error::Invalid(format!(
                "frame block must be non-empty, got T={len}, d={dim}"
            )));
        }
        if data.len() != len * dim {
            return Err(Error::Invalid(format!(
                "frame block T={len}, d={dim} needs {} values, got {}",
                len * dim,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "frame {} component {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { len, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Invalid("ragged frame rows".into()));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn scaled(&self, s: f32) -> Result<Self> {
        Self::new(self.len, self.dim, self.data.iter().map(|v| v * s).collect())
    }
}

/// Hidden-state frames for one (location, word, model, layer).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    pub location_id: String,
    pub word_id: String,
    pub model_id: String,
    pub layer: u32,
    pub frames: Frames,
}

impl EmbeddingSequence {
    pub fn new(
        location_id: impl Into<String>,
        word_id: impl Into<String>,
        model_id: impl Into<String>,
        layer: u32,
        frames: Frames,
    ) -> Result<Self> {
        if layer == 0 {
            return Err(Error::Invalid("layer numbers start at 1".into()));
        }
        Ok(Self {
            location_id: location_id.into(),
            word_id: word_id.into(),
            model_id: model_id.into(),
            layer,
            frames,
        })
    }
}

/// Symmetric, zero-diagonal, nonnegative location×location matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    index: Vec<String>,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from a row-major value block, checking every invariant exactly.
    pub fn new(index: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = index.len();
        if n < 2 {
            return Err(Error::Invalid(format!(
                "distance matrix needs at least 2 locations, got {n}"
            )));
        }
        if values.len() != n * n {
            return Err(Error::Invalid(format!(
                "distance matrix over {n} locations needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &index {
            if !seen.insert(id.as_str()) {
                return Err(Error::Invalid(format!("duplicate location '{id}' in matrix index")));
            }
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::Invalid(format!(
                    "nonzero diagonal at '{}': {}",
                    index[i],
                    values[i * n + i]
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Invalid(format!(
                        "invalid distance {v} between '{}' and '{}'",
                        index[i], index[j]
                    )));
                }
                if v != values[j * n + i] {
                    return Err(Error::Invalid(format!(
                        "asymmetric entry between '{}' and '{}'",
                        index[i], index[j]
                    )));
                }
            }
        }
        Ok(Self { index, values })
    }

    /// Fills the upper triangle from `f(i, j)` (i < j) and mirrors it.
    pub fn from_upper(index: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = index.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::new(index, values)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn index(&self) -> &[String] {
        &self.index
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Upper-triangle values in (0,1), (0,2), …, (n-2,n-1) order.
    pub fn condensed(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Same matrix with rows and columns reordered so that row `r` is old row `order[r]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.len();
        let index = order.iter().map(|&o| self.index[o].clone()).collect();
        let mut values = vec![0.0; n * n];
        for (r, &oi) in order.iter().enumerate() {
            for (c, &oj) in order.iter().enumerate() {
                values[r * n + c] = self.get(oi, oj);
            }
        }
        Self::new(index, values)
    }
}

/// One agglomeration step. Leaves are nodes `0..n`; merge `t` creates node `n + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    labels: Vec<String>,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn new(labels: Vec<String>, merges: Vec<Merge>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Invalid("dendrogram without leaves".into()));
        }
        if merges.len() != n - 1 {
            return Err(Error::Invalid(format!(
                "dendrogram over {n} leaves needs {} merges, got {}",
                n - 1,
                merges.len()
            )));
        }
        let mut consumed = vec![false; 2 * n - 1];
        for (t, m) in merges.iter().enumerate() {
            let created = n + t;
            for node in [m.left, m.right] {
                if node >= created {
                    return Err(Error::Invalid(format!(
                        "merge {t} references node {node} which does not exist yet"
                    )));
                }
                if consumed[node] {
                    return Err(Error::Invalid(format!(
                        "merge {t} references node {node} which was already merged"
                    )));
                }
                consumed[node] = true;
            }
            if m.left == m.right {
                return Err(Error::Invalid(format!("merge {t} joins node {} with itself", m.left)));
            }
            if !(m.height.is_finite() && m.height >= 0.0) {
                return Err(Error::Invalid(format!("merge {t} has invalid height {}", m.height)));
            }
        }
        Ok(Self { labels, merges })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// True when some merge sits lower than the merge before it.
    pub fn has_inversions(&self) -> bool {
        self.merges.windows(2).any(|w| w[1].height < w[0].height)
    }

    /// Leaf members of every node, indexed by node id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut joined = members[m.left].clone();
            joined.extend_from_slice(&members[m.right]);
            joined.sort_unstable();
            members.push(joined);
        }
        members
    }
}

/// Flat clustering over an ordered location index, labels canonical by first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    index: Vec<String>,
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Canonicalizes arbitrary raw labels: the first location gets 0, the next new label 1, …
    pub fn from_labels<L: Eq + std::hash::Hash>(index: Vec<String>, raw: &[L]) -> Result<Self> {
        if index.len() != raw.len() {
            return Err(Error::Invalid(format!(
                "{} locations but {} labels",
                index.len(),
                raw.len()
            )));
        }
        if index.is_empty() {
            return Err(Error::Invalid("empty partition".into()));
        }
        let mut seen = HashSet::new();
        for id in &index {
            if !seen.insert(id.as_str()) {
                return Err(Error::Invalid(format!("duplicate location '{id}' in partition")));
            }
        }
        let mut map: HashMap<&L, usize> = HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        let k = map.len();
        Ok(Self { index, labels, k })
    }

    pub fn index(&self) -> &[String] {
        &self.index
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn label_of(&self, id: &str) -> Option<usize> {
        self.index.iter().position(|x| x == id).map(|i| self.labels[i])
    }

    /// Member positions of each cluster, in label order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Same clustering expressed over `order` (a permutation of this partition's ids).
    pub fn reindexed(&self, order: &[String]) -> Result<Self> {
        let pos: HashMap<&str, usize> = self
            .index
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        if order.len() != self.index.len() {
            return Err(Error::Invalid("reindex order has a different size".into()));
        }
        let mut raw = Vec::with_capacity(order.len());
        for id in order {
            let &i = pos
                .get(id.as_str())
                .ok_or_else(|| Error::Invalid(format!("location '{id}' not in partition")))?;
            raw.push(self.labels[i]);
        }
        Self::from_labels(order.to_vec(), &raw)
    }

    /// True when every cluster of `self` lies inside one cluster of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.index != coarser.index {
            return false;
        }
        let mut image = vec![None; self.k];
        self.labels
            .iter()
            .zip(&coarser.labels)
            .all(|(&f, &c)| *image[f].get_or_insert(c) == c)
    }
}

//! CSV/TSV/JSON readers and writers for locations, transcriptions,
//! partitions, cost tables, dendrograms and MDS coordinates.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{format_sig9, read_text, write_text};
use crate::error::{Error, Result};
use crate::model::{Dendrogram, Location, LocationTable, Merge, Partition};
use crate::segments::{SegmentClassTable, SegmentDistanceTable, Transcription, GAP};

#[derive(Debug, Deserialize, Serialize)]
struct LocationRow {
    location_id: String,
    name: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    gold_label: Option<String>,
}

/// Reads `location_id,name,lat,lon,gold_label` rows and validates the table.
pub fn read_locations(path: &Path) -> Result<LocationTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize::<LocationRow>().enumerate() {
        let row = rec.map_err(|e| {
            let line = e.position().map_or(i + 2, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        rows.push(Location {
            location_id: row.location_id,
            name: row.name,
            lat: row.lat,
            lon: row.lon,
            gold_label: row.gold_label.filter(|g| !g.is_empty()),
        });
    }
    LocationTable::validate(rows)
}

pub fn write_locations(table: &LocationTable, path: &Path) -> Result<()> {
    let mut w = csv_writer();
    for e in table.entries() {
        w.serialize(LocationRow {
            location_id: e.location_id.clone(),
            name: e.name.clone(),
            lat: e.lat,
            lon: e.lon,
            gold_label: e.gold_label.clone(),
        })
        .map_err(|e| Error::Invalid(e.to_string()))?;
    }
    finish_csv(w, path)
}

/// Transcriptions plus non-fatal notes (duplicate rows).
#[derive(Debug, Clone, Default)]
pub struct TranscriptionCorpus {
    pub transcriptions: Vec<Transcription>,
    pub warnings: Vec<String>,
}

impl TranscriptionCorpus {
    /// Sorted distinct word ids.
    pub fn words(&self) -> Vec<String> {
        let mut w: Vec<String> = self.transcriptions.iter().map(|t| t.word_id.clone()).collect();
        w.sort();
        w.dedup();
        w
    }
}

/// Parses `location<TAB>word<TAB>segments` lines; `#` lines are comments.
/// A repeated (location, word) replaces the earlier row and leaves a warning.
pub fn read_transcriptions(path: &Path, classes: &SegmentClassTable) -> Result<TranscriptionCorpus> {
    let text = read_text(path)?;
    parse_transcriptions(path, &text, classes)
}

pub fn parse_transcriptions(path: &Path, text: &str, classes: &SegmentClassTable) -> Result<TranscriptionCorpus> {
    let mut corpus = TranscriptionCorpus::default();
    let mut seen: HashMap<(String, String), (usize, usize)> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.trim().is_empty()) {
            return Err(Error::parse(
                path,
                lineno,
                "malformed row, expected location<TAB>word<TAB>segments",
            ));
        }
        let (loc, word) = (fields[0].trim(), fields[1].trim());
        let t = Transcription::parse(loc, word, fields[2], classes)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let key = (loc.to_owned(), word.to_owned());
        match seen.get(&key) {
            Some(&(slot, first)) => {
                corpus.warnings.push(format!(
                    "{}:{lineno}: duplicate ({loc}, {word}) replaces line {first}",
                    path.display()
                ));
                corpus.transcriptions[slot] = t;
            }
            None => {
                seen.insert(key, (corpus.transcriptions.len(), lineno));
                corpus.transcriptions.push(t);
            }
        }
    }
    Ok(corpus)
}

/// `location,cluster` rows in partition order. Reading accepts any label text.
pub fn write_partition(p: &Partition, path: &Path) -> Result<()> {
    let mut text = String::from("location,cluster\n");
    for (id, l) in p.index().iter().zip(p.labels()) {
        text.push_str(&csv_field(id)?);
        text.push(',');
        text.push_str(&l.to_string());
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn read_partition(path: &Path) -> Result<Partition> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in reader.deserialize::<(String, String)>().enumerate() {
        let (id, l) = rec.map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        ids.push(id);
        labels.push(l);
    }
    Partition::from_labels(ids, &labels)
}

#[derive(Serialize, Deserialize)]
struct DendrogramJson {
    n: usize,
    labels: Vec<String>,
    merges: Vec<(usize, usize, f64)>,
}

pub fn dendrogram_to_json(d: &Dendrogram) -> String {
    let doc = DendrogramJson {
        n: d.n(),
        labels: d.labels().to_vec(),
        merges: d.merges().iter().map(|m| (m.left, m.right, m.height)).collect(),
    };
    let mut s = serde_json::to_string(&doc).expect("dendrogram serializes");
    s.push('\n');
    s
}

pub fn write_dendrogram(d: &Dendrogram, path: &Path) -> Result<()> {
    write_text(path, &dendrogram_to_json(d))
}

pub fn read_dendrogram(path: &Path) -> Result<Dendrogram> {
    let text = read_text(path)?;
    let doc: DendrogramJson =
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    if doc.n != doc.labels.len() {
        return Err(Error::parse(path, 0, format!("n = {} but {} labels", doc.n, doc.labels.len())));
    }
    let merges = doc
        .merges
        .into_iter()
        .map(|(left, right, height)| Merge { left, right, height })
        .collect();
    Dendrogram::new(doc.labels, merges).map_err(|e| Error::parse(path, 0, e.to_string()))
}

/// `tokenA<TAB>tokenB<TAB>cost` lines; indels use `-` as the second token.
pub fn write_cost_table(t: &SegmentDistanceTable, path: &Path) -> Result<()> {
    let mut text = String::new();
    for (a, b, c) in t.substitutions() {
        text.push_str(&format!("{a}\t{b}\t{c}\n"));
    }
    for (a, c) in t.indels() {
        text.push_str(&format!("{a}\t{GAP}\t{c}\n"));
    }
    write_text(path, &text)
}

/// Reads an induced cost table; unseen pairs fall back to `fallback` when given.
pub fn read_cost_table(path: &Path, fallback: Option<f64>) -> Result<SegmentDistanceTable> {
    let text = read_text(path)?;
    let mut sub = Vec::new();
    let mut indel = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let [a, b, c] = f.as_slice() else {
            return Err(Error::parse(path, i + 1, "expected tokenA<TAB>tokenB<TAB>cost"));
        };
        let c: f64 = c.trim().parse().map_err(|_| Error::parse(path, i + 1, format!("bad cost '{c}'")))?;
        match (*a == GAP, *b == GAP) {
            (false, true) => indel.push((a.to_string(), c)),
            (true, false) => indel.push((b.to_string(), c)),
            (false, false) => sub.push(((a.to_string(), b.to_string()), c)),
            (true, true) => return Err(Error::parse(path, i + 1, "gap aligned with gap")),
        }
    }
    SegmentDistanceTable::induced(sub, indel, fallback).map_err(|e| Error::parse(path, 0, e.to_string()))
}

/// `location,dim1,...` coordinate rows.
pub fn write_coordinates(ids: &[String], coords: &[Vec<f64>], path: &Path) -> Result<()> {
    let dims = coords.first().map_or(0, Vec::len);
    let mut text = String::from("location");
    for d in 1..=dims {
        text.push_str(&format!(",dim{d}"));
    }
    text.push('\n');
    for (id, row) in ids.iter().zip(coords) {
        text.push_str(&csv_field(id)?);
        for v in row {
            text.push(',');
            text.push_str(&format_sig9(*v));
        }
        text.push('\n');
    }
    write_text(path, &text)
}

pub(crate) fn csv_field(s: &str) -> Result<String> {
    if s.contains([',', '"', '\n', '\r']) {
        Err(Error::Invalid(format!("identifier '{s}' contains a CSV delimiter")))
    } else {
        Ok(s.to_owned())
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>, path: &Path) -> Result<()> {
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("csv output is UTF-8");
    write_text(path, &text)
}

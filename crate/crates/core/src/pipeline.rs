//! Layer × linkage sweep and the files it produces.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::cdistance::{cdistance, GroundMetric};
use crate::cluster::{cut, linkage, select_method, LinkageMethod, HEIGHT_CONVENTION};
use crate::error::{Error, Result};
use crate::io::{self, format_sig9, MapPayload, FORMAT_VERSION};
use crate::mds::{classical_mds, mds_to_rgb};
use crate::model::{DistanceMatrix, LocationTable, Partition};

pub const REPORT_HEADER: &str = "model,layer,method,ccc,cdistance";
pub const MDS_DIMS: usize = 3;

/// Transformer layer number, or `LD` for transcription-based matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerTag {
    Layer(u32),
    Ld,
}

impl fmt::Display for LayerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerTag::Layer(l) => write!(f, "{l}"),
            LayerTag::Ld => f.write_str("LD"),
        }
    }
}

impl Serialize for LayerTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl std::str::FromStr for LayerTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("ld") {
            return Ok(LayerTag::Ld);
        }
        match s.parse::<u32>() {
            Ok(l) if l >= 1 => Ok(LayerTag::Layer(l)),
            _ => Err(Error::Invalid(format!("layer must be a positive integer or LD, got '{s}'"))),
        }
    }
}

/// One labelled matrix entering the sweep.
#[derive(Debug, Clone)]
pub struct SweepInput {
    pub model: String,
    pub layer: LayerTag,
    pub matrix: DistanceMatrix,
}

/// `MODEL:LAYER:PATH`, e.g. `xlsr-nl:15:dist/xlsr15.csv` or `LD:LD:dist/ld.csv`.
pub fn parse_matrix_spec(spec: &str) -> Result<(String, LayerTag, PathBuf)> {
    let mut parts = spec.splitn(3, ':');
    match (parts.next(), parts.next(), parts.next()) {
        (Some(m), Some(l), Some(p)) if !m.is_empty() && !p.is_empty() => {
            Ok((m.to_string(), l.parse()?, PathBuf::from(p)))
        }
        _ => Err(Error::Invalid(format!("matrix spec '{spec}' is not MODEL:LAYER:PATH"))),
    }
}

pub fn load_inputs(specs: &[String]) -> Result<Vec<SweepInput>> {
    specs
        .iter()
        .map(|s| {
            let (model, layer, path) = parse_matrix_spec(s)?;
            Ok(SweepInput {
                model,
                layer,
                matrix: io::read_distance_matrix(&path)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub model: String,
    pub layer: LayerTag,
    pub method: LinkageMethod,
    pub ccc: f64,
    pub cdistance: f64,
    pub partition: Partition,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub model: String,
    pub best_layer: LayerTag,
    pub best_method: String,
    pub best_ccc: f64,
    pub best_cdistance: f64,
    /// Population standard deviation of cdistance over this model's rows.
    pub cdistance_std: f64,
    pub rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout_cdistance: Option<f64>,
    #[serde(skip)]
    pub best_row: usize,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub models: Vec<ModelSummary>,
    pub k: usize,
    pub metric: GroundMetric,
}

fn check_index(m: &DistanceMatrix, table: &LocationTable, what: &str) -> Result<()> {
    let ids: HashSet<&str> = table.ids().collect();
    let got: HashSet<&str> = m.index().iter().map(String::as_str).collect();
    if ids != got {
        let mut diff: Vec<&str> = ids.symmetric_difference(&got).copied().collect();
        diff.sort_unstable();
        return Err(Error::Invalid(format!(
            "{what} index does not match the gold locations (differing: {})",
            diff.join(", ")
        )));
    }
    Ok(())
}

/// Picks the ccc-maximal linkage per matrix, cuts it to `k` clusters and
/// scores the cut against the gold partition. Matrices are processed on the
/// current rayon pool.
pub fn run_sweep(
    inputs: &[SweepInput],
    holdout: &[SweepInput],
    table: &LocationTable,
    k: Option<usize>,
    metric: GroundMetric,
) -> Result<SweepReport> {
    if inputs.is_empty() {
        return Err(Error::Invalid("sweep needs at least one matrix".into()));
    }
    let gold = table.gold_partition()?;
    let k = k.unwrap_or(gold.k());
    if k == 0 || k > table.len() {
        return Err(Error::Invalid(format!("k must be in 1..={}, got {k}", table.len())));
    }
    let mut seen = HashSet::new();
    for inp in inputs {
        if !seen.insert((inp.model.as_str(), inp.layer)) {
            return Err(Error::Invalid(format!("duplicate matrix for {} layer {}", inp.model, inp.layer)));
        }
        check_index(&inp.matrix, table, &format!("matrix {}:{}", inp.model, inp.layer))?;
    }

    let mut order: Vec<&SweepInput> = inputs.iter().collect();
    order.sort_by(|a, b| a.model.cmp(&b.model).then(a.layer.cmp(&b.layer)));
    let rows = order
        .par_iter()
        .map(|inp| {
            let sel = select_method(&inp.matrix)?;
            let partition = cut(&sel.dendrogram, k)?;
            let score = cdistance(&partition, &gold, table, metric)?;
            Ok(SweepRow {
                model: inp.model.clone(),
                layer: inp.layer,
                method: sel.method,
                ccc: sel.ccc,
                cdistance: score,
                partition,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut by_model: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        by_model.entry(r.model.as_str()).or_default().push(i);
    }
    let mut models = Vec::new();
    for (model, idx) in by_model {
        // rows are already in layer order, so the first minimum is the lowest layer
        let best = idx
            .iter()
            .copied()
            .min_by(|&a, &b| rows[a].cdistance.partial_cmp(&rows[b].cdistance).unwrap_or(Ordering::Equal))
            .expect("model has rows");
        let scores: Vec<f64> = idx.iter().map(|&i| rows[i].cdistance).collect();
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / scores.len() as f64;
        let row = &rows[best];
        let holdout_cdistance = match holdout.iter().find(|h| h.model == model && h.layer == row.layer) {
            Some(h) => {
                check_index(&h.matrix, table, &format!("holdout matrix {}:{}", h.model, h.layer))?;
                let d = linkage(&h.matrix, row.method)?;
                Some(cdistance(&cut(&d, k)?, &gold, table, metric)?)
            }
            None => None,
        };
        models.push(ModelSummary {
            model: model.to_string(),
            best_layer: row.layer,
            best_method: row.method.code().to_string(),
            best_ccc: row.ccc,
            best_cdistance: row.cdistance,
            cdistance_std: var.sqrt(),
            rows: idx.len(),
            holdout_cdistance,
            best_row: best,
        });
    }
    Ok(SweepReport { rows, models, k, metric })
}

pub fn report_csv(report: &SweepReport) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.model,
            r.layer,
            r.method.code(),
            format_sig9(r.ccc),
            format_sig9(r.cdistance)
        ));
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    format_version: u32,
    height_convention: &'static str,
    metric: String,
    k: usize,
    models: &'a [ModelSummary],
}

pub fn summary_json(report: &SweepReport) -> String {
    let s = Summary {
        format_version: FORMAT_VERSION,
        height_convention: HEIGHT_CONVENTION,
        metric: report.metric.to_string(),
        k: report.k,
        models: &report.models,
    };
    let mut text = serde_json::to_string_pretty(&s).expect("summary serializes");
    text.push('\n');
    text
}

/// Summary sidecar path next to the report: `report.csv` → `report.summary.json`.
pub fn summary_path(report_path: &Path) -> PathBuf {
    let stem = report_path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    report_path.with_file_name(format!("{stem}.summary.json"))
}

fn map_stem(model: &str, layer: LayerTag) -> String {
    let safe: String = model
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    match layer {
        LayerTag::Layer(l) => format!("{safe}_layer{l:02}"),
        LayerTag::Ld => format!("{safe}_LD"),
    }
}

/// RGB colors per location from the first (up to) three MDS dimensions.
pub fn mds_colors(m: &DistanceMatrix) -> Result<Vec<(String, String)>> {
    let dims = MDS_DIMS.min(m.len() - 1);
    let mds = classical_mds(m, dims)?;
    Ok(m.index().iter().cloned().zip(mds_to_rgb(&mds.coords)).collect())
}

/// Writes the report, its summary sidecar and, with `maps_dir`, cluster and
/// MDS maps for each model's selected row. Returns every file written.
pub fn write_sweep(
    report: &SweepReport,
    inputs: &[SweepInput],
    table: &LocationTable,
    out: &Path,
    maps_dir: Option<&Path>,
) -> Result<Vec<PathBuf>> {
    io::write_text(out, &report_csv(report))?;
    let summary = summary_path(out);
    io::write_text(&summary, &summary_json(report))?;
    let mut written = vec![out.to_path_buf(), summary];
    if let Some(dir) = maps_dir {
        for m in &report.models {
            let row = &report.rows[m.best_row];
            let stem = map_stem(&row.model, row.layer);
            let cluster_path = dir.join(format!("{stem}_clusters.geojson"));
            io::write_geojson(table, &MapPayload::Clusters(&row.partition), &cluster_path)?;
            let input = inputs
                .iter()
                .find(|i| i.model == row.model && i.layer == row.layer)
                .expect("row comes from an input");
            let colors = mds_colors(&input.matrix)?;
            let mds_path = dir.join(format!("{stem}_mds.geojson"));
            io::write_geojson(table, &MapPayload::Colors(&colors), &mds_path)?;
            written.extend([cluster_path, mds_path]);
        }
    }
    Ok(written)
}

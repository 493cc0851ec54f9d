//! Embedding archive layout: `<root>/<model_id>/layer<NN>/<location_id>/<word_id>.demb`
//! with a `manifest.json` at the root describing each model.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::embedding::{read_frames, write_frames};
use super::FORMAT_VERSION;
use crate::error::{Error, Result};
use crate::model::Frames;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub model_id: String,
    /// Number of transformer layers; files exist for layers `1..=layers`.
    pub layers: u32,
    pub dim: u32,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub models: Vec<ModelEntry>,
}

impl Manifest {
    pub fn new(models: Vec<ModelEntry>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            models,
        }
    }

    pub fn model(&self, id: &str) -> Option<&ModelEntry> {
        self.models.iter().find(|m| m.model_id == id)
    }

    pub fn read(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::parse(&path, e.line(), e.to_string()))?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::parse(
                &path,
                0,
                format!("unsupported manifest format_version {}", m.format_version),
            ));
        }
        Ok(m)
    }

    pub fn write(&self, root: &Path) -> Result<()> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let path = root.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

pub fn layer_dir_name(layer: u32) -> String {
    format!("layer{layer:02}")
}

pub(crate) fn parse_layer_dir(name: &str) -> Option<u32> {
    let digits = name.strip_prefix("layer")?;
    if digits.len() < 2 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().filter(|&l| l >= 1)
}

pub fn embedding_path(root: &Path, model: &str, layer: u32, location: &str, word: &str) -> PathBuf {
    root.join(model)
        .join(layer_dir_name(layer))
        .join(location)
        .join(format!("{word}.demb"))
}

pub fn write_archive_frames(
    root: &Path,
    model: &str,
    layer: u32,
    location: &str,
    word: &str,
    frames: &Frames,
) -> Result<()> {
    write_frames(frames, &embedding_path(root, model, layer, location, word))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Any absent (location, word) file is an error.
    #[default]
    Error,
    /// Absent files are treated as unavailable words.
    Skip,
}

/// All frames of one (model, layer), keyed by (location, word).
#[derive(Debug, Clone)]
pub struct LayerEmbeddings {
    pub model_id: String,
    pub layer: u32,
    pub dim: usize,
    frames: HashMap<(String, String), Frames>,
}

impl LayerEmbeddings {
    pub fn get(&self, location: &str, word: &str) -> Option<&Frames> {
        self.frames.get(&(location.to_owned(), word.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Loads one layer, checking for absent files before reading anything.
pub fn load_layer(
    root: &Path,
    model: &str,
    layer: u32,
    locations: &[String],
    words: &[String],
    policy: MissingPolicy,
) -> Result<LayerEmbeddings> {
    if layer == 0 {
        return Err(Error::Invalid("layer numbers start at 1".into()));
    }
    let manifest = Manifest::read(root)?;
    let entry = manifest
        .model(model)
        .ok_or_else(|| Error::Invalid(format!("model '{model}' not listed in {}", root.join(MANIFEST).display())))?;
    if layer > entry.layers {
        return Err(Error::Invalid(format!(
            "layer {layer} beyond the {} layers of model '{model}'",
            entry.layers
        )));
    }
    let mut present = Vec::new();
    let mut missing = Vec::new();
    for loc in locations {
        for word in words {
            let path = embedding_path(root, model, layer, loc, word);
            if path.is_file() {
                present.push((loc, word, path));
            } else {
                missing.push(path);
            }
        }
    }
    if policy == MissingPolicy::Error && !missing.is_empty() {
        return Err(Error::MissingFiles(missing));
    }
    let dim = entry.dim as usize;
    let mut frames = HashMap::with_capacity(present.len());
    for (loc, word, path) in present {
        let f = read_frames(&path)?;
        if f.dim() != dim {
            return Err(Error::parse(
                &path,
                0,
                format!("frame dimension {} differs from manifest dimension {dim}", f.dim()),
            ));
        }
        frames.insert((loc.clone(), word.clone()), f);
    }
    Ok(LayerEmbeddings {
        model_id: model.to_owned(),
        layer,
        dim,
        frames,
    })
}

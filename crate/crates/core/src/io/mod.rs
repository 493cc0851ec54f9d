//! On-disk formats. Text outputs are UTF-8 with `\n` line endings.

pub mod archive;
pub mod embedding;
pub mod geojson;
pub mod matrix;
pub mod text;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub use archive::{load_layer, LayerEmbeddings, Manifest, MissingPolicy, ModelEntry};
pub use embedding::{read_embedding, read_frames, write_embedding, write_frames};
pub use geojson::{write_geojson, MapPayload};
pub use matrix::{read_distance_matrix, write_distance_matrix};
pub use text::{
    read_cost_table, read_dendrogram, read_locations, read_partition, read_transcriptions, write_coordinates,
    write_cost_table, write_dendrogram, write_locations, write_partition, TranscriptionCorpus,
};

/// Version recorded in manifests of the text and archive formats.
pub const FORMAT_VERSION: u32 = 1;

/// Shortest decimal form of `v` rounded to 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One word id per line; blank lines and `#` comments are skipped.
pub fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let words: Vec<String> = read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect();
    if words.is_empty() {
        return Err(Error::parse(path, 0, "word list is empty"));
    }
    Ok(words)
}

#[cfg(test)]
mod tests {
    use super::format_sig9;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(0.5), "0.5");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(format_sig9(123456789012.0), "123456789000");
        assert_eq!(format_sig9(0.0), "0");
    }
}

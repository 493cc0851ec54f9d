//! GeoJSON point maps coloured by cluster or by MDS-derived RGB.

use std::collections::HashMap;
use std::path::Path;

use serde_json::{json, Value};

use super::write_text;
use crate::error::{Error, Result};
use crate::model::{LocationTable, Partition};

pub enum MapPayload<'a> {
    Clusters(&'a Partition),
    /// `(location_id, "#RRGGBB")` pairs.
    Colors(&'a [(String, String)]),
}

pub fn geojson_string(table: &LocationTable, payload: &MapPayload<'_>) -> Result<String> {
    let property: HashMap<&str, Value> = match payload {
        MapPayload::Clusters(p) => p
            .index()
            .iter()
            .zip(p.labels())
            .map(|(id, &l)| (id.as_str(), json!({ "cluster": l })))
            .collect(),
        MapPayload::Colors(c) => c
            .iter()
            .map(|(id, rgb)| (id.as_str(), json!({ "rgb": rgb })))
            .collect(),
    };
    let mut features = Vec::with_capacity(table.len());
    for loc in table.entries() {
        let Some(Value::Object(extra)) = property.get(loc.location_id.as_str()) else {
            return Err(Error::Invalid(format!(
                "map payload has no value for location '{}'",
                loc.location_id
            )));
        };
        let mut props = serde_json::Map::new();
        props.insert("location_id".into(), json!(loc.location_id));
        props.insert("name".into(), json!(loc.name));
        props.extend(extra.clone());
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": [loc.lon, loc.lat] },
            "properties": props,
        }));
    }
    let doc = json!({ "type": "FeatureCollection", "features": features });
    let mut s = serde_json::to_string_pretty(&doc).expect("geojson serializes");
    s.push('\n');
    Ok(s)
}

pub fn write_geojson(table: &LocationTable, payload: &MapPayload<'_>, path: &Path) -> Result<()> {
    write_text(path, &geojson_string(table, payload)?)
}

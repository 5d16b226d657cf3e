use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::regions::AreaId;

/// Per-area values of one metric, ready to be drawn as a map.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoroplethExport {
    pub metric: String,
    pub values: BTreeMap<AreaId, f64>,
}

/// Geometries keyed by the `small_area_id` property of each feature of a
/// GeoJSON FeatureCollection.
pub fn read_geometries(path: &Path) -> Result<BTreeMap<String, Value>> {
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::parse(path, e.to_string()))?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::parse(path, "not a GeoJSON FeatureCollection"))?;
    let mut out = BTreeMap::new();
    for f in features {
        let id = f
            .pointer("/properties/small_area_id")
            .and_then(|v| v.as_str().map(str::to_owned).or_else(|| v.as_i64().map(|n| n.to_string())))
            .ok_or_else(|| Error::parse(path, "feature without a small_area_id property"))?;
        out.insert(id, f.get("geometry").cloned().unwrap_or(Value::Null));
    }
    Ok(out)
}

/// A FeatureCollection with one feature per area, plus a warning for each
/// area that has no geometry to join. Warnings are also listed under the
/// collection's `warnings` member.
pub fn choropleth_geojson(export: &ChoroplethExport, geometries: Option<&BTreeMap<String, Value>>) -> Result<(Value, Vec<String>)> {
    let mut warnings = Vec::new();
    let mut features = Vec::with_capacity(export.values.len());
    for (q, &v) in &export.values {
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("{} for `{q}` is not finite", export.metric)));
        }
        let geometry = match geometries {
            Some(g) => match g.get(q.as_str()) {
                Some(geom) => geom.clone(),
                None => {
                    warnings.push(format!("no geometry for `{q}`"));
                    Value::Null
                }
            },
            None => Value::Null,
        };
        features.push(json!({
            "type": "Feature",
            "geometry": geometry,
            "properties": { "small_area_id": q.as_str(), "metric": export.metric, "value": v },
        }));
    }
    let mut doc = json!({ "type": "FeatureCollection", "features": features });
    if !warnings.is_empty() {
        doc["warnings"] = json!(warnings);
    }
    Ok((doc, warnings))
}

pub fn export_choropleth(
    export: &ChoroplethExport,
    geometries: Option<&BTreeMap<String, Value>>,
    out: &Path,
) -> Result<Vec<String>> {
    let (doc, warnings) = choropleth_geojson(export, geometries)?;
    std::fs::write(out, serde_json::to_string_pretty(&doc)?)?;
    Ok(warnings)
}

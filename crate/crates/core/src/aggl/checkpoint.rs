use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{GranularPrediction, MfAglModel};
use crate::error::{Error, Result};
use crate::regions::io::{read_rows, write_rows};
use crate::regions::{AreaId, Period};

const CHECKPOINT_FORMAT: &str = "mfagl-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<M> {
    format: String,
    version: u32,
    model: M,
}

impl MfAglModel {
    /// Write a versioned JSON checkpoint. Floats are written in shortest
    /// round-trip form, so reading it back restores every parameter bit
    /// for bit.
    pub fn save(&self, path: &Path) -> Result<()> {
        let envelope = Envelope {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            model: self,
        };
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(file, &envelope)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let envelope: Envelope<MfAglModel> =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        if envelope.format != CHECKPOINT_FORMAT {
            return Err(Error::parse(path, format!("not a checkpoint (format `{}`)", envelope.format)));
        }
        if envelope.version != CHECKPOINT_VERSION {
            return Err(Error::parse(
                path,
                format!("unsupported checkpoint version {}", envelope.version),
            ));
        }
        let model = envelope.model;
        model.network.check().map_err(|e| Error::parse(path, e.to_string()))?;
        if model.network.extra_size() != model.vocabulary.dummy_len() {
            return Err(Error::parse(path, "network width does not match the vocabularies"));
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct PredictionRow {
    as_of_date: NaiveDate,
    small_area_id: String,
    period: String,
    predicted_value: f64,
}

/// `predictions.csv`: `as_of_date,small_area_id,period,predicted_value`.
pub fn write_predictions(path: &Path, predictions: &[GranularPrediction]) -> Result<()> {
    write_rows(
        path,
        predictions.iter().map(|p| PredictionRow {
            as_of_date: p.as_of,
            small_area_id: p.small_area.to_string(),
            period: p.period.to_string(),
            predicted_value: p.value,
        }),
    )
}

pub fn read_predictions(path: &Path) -> Result<Vec<GranularPrediction>> {
    let rows: Vec<PredictionRow> = read_rows(path)?;
    rows.into_iter()
        .map(|r| {
            let period: Period = r.period.parse().map_err(|e: Error| Error::parse(path, e.to_string()))?;
            Ok(GranularPrediction {
                small_area: AreaId::new(r.small_area_id),
                as_of: r.as_of_date,
                period,
                value: r.predicted_value,
            })
        })
        .collect()
}

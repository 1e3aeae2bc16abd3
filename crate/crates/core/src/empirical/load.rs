use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::WeightedSample;

/// One externally scored observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub score: f64,
    pub label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl ScoreRecord {
    pub fn is_positive(&self) -> bool {
        self.label == 1
    }

    pub fn to_sample(&self) -> WeightedSample {
        WeightedSample { score: self.score, positive: self.is_positive(), weight: 1.0 }
    }
}

pub fn to_samples(records: &[ScoreRecord]) -> Vec<WeightedSample> {
    records.iter().map(ScoreRecord::to_sample).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreFormat {
    Csv,
    Jsonl,
}

impl ScoreFormat {
    /// `.jsonl`/`.ndjson` are JSON lines; everything else is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("jsonl") | Some("ndjson") => ScoreFormat::Jsonl,
            _ => ScoreFormat::Csv,
        }
    }
}

impl std::str::FromStr for ScoreFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ScoreFormat::Csv),
            "jsonl" | "ndjson" => Ok(ScoreFormat::Jsonl),
            other => Err(Error::InvalidParameter(format!("unknown score format `{other}`"))),
        }
    }
}

pub fn load_scores(path: &Path, format: ScoreFormat) -> Result<Vec<ScoreRecord>> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_scores(BufReader::new(file), format)
}

pub fn read_scores<R: Read>(reader: R, format: ScoreFormat) -> Result<Vec<ScoreRecord>> {
    match format {
        ScoreFormat::Csv => read_csv(reader),
        ScoreFormat::Jsonl => read_jsonl(BufReader::new(reader)),
    }
}

fn check(line: u64, score: f64, label: f64, id: Option<String>) -> Result<ScoreRecord> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::Range { line, msg: format!("score {score} outside [0, 1]") });
    }
    if label != 0.0 && label != 1.0 {
        return Err(Error::Range { line, msg: format!("label {label} is not 0 or 1") });
    }
    Ok(ScoreRecord { score, label: label as u8, id })
}

fn number(line: u64, field: &str, raw: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse { line, msg: format!("{field} `{raw}` is not a number") })
}

fn read_csv<R: Read>(reader: R) -> Result<Vec<ScoreRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let score_col = col("score").ok_or_else(|| Error::MissingColumn("score".into()))?;
    let label_col = col("label").ok_or_else(|| Error::MissingColumn("label".into()))?;
    let id_col = col("id");

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |k: usize, name: &str| {
            row.get(k).ok_or_else(|| Error::Parse { line, msg: format!("missing {name} field") })
        };
        let score = number(line, "score", field(score_col, "score")?)?;
        let label = number(line, "label", field(label_col, "label")?)?;
        let id = id_col.and_then(|k| row.get(k)).filter(|s| !s.is_empty()).map(str::to_string);
        out.push(check(line, score, label, id)?);
    }
    Ok(out)
}

fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<ScoreRecord>> {
    let mut out = Vec::new();
    for (k, text) in reader.lines().enumerate() {
        let line = k as u64 + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse { line, msg: "expected a JSON object".into() })?;
        let num = |name: &str| -> Result<f64> {
            let v = obj
                .get(name)
                .ok_or_else(|| Error::Parse { line, msg: format!("missing field `{name}`") })?;
            v.as_f64()
                .ok_or_else(|| Error::Parse { line, msg: format!("{name} `{v}` is not a number") })
        };
        let score = num("score")?;
        let label = num("label")?;
        let id = obj.get("id").map(|v| match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        });
        out.push(check(line, score, label, id)?);
    }
    Ok(out)
}

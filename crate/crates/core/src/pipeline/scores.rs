//! Per-checkpoint model log-probabilities supplied from outside the toolkit.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::analysis::{CheckpointKey, ScoreGroups};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("duplicate score for (model={model}, seed={seed}, step={step}, item={item_id}) at {first} and {second}")]
    Duplicate {
        model: String,
        seed: String,
        step: u64,
        item_id: String,
        first: String,
        second: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One checkpoint's natural-log probability for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub model: String,
    pub seed: String,
    pub step: u64,
    pub item_id: String,
    pub logprob: f64,
}

/// A row left out of the store, with its location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    pub location: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub rows_read: usize,
    pub non_finite: Vec<RejectedRow>,
    pub unknown_items: usize,
}

/// Validated, deduplicated scores ordered by (model, seed, step, item).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreStore {
    records: Vec<ScoreRecord>,
}

fn field<'a>(obj: &'a serde_json::Map<String, Value>, name: &str) -> Result<&'a Value, String> {
    obj.get(name).ok_or_else(|| format!("missing field {name:?}"))
}

fn as_string(v: &Value, name: &str) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(format!("field {name:?} must be a string")),
    }
}

fn as_logprob(v: &Value) -> Result<f64, String> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| "logprob out of range".to_owned()),
        Value::String(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("logprob {s:?} is not a number")),
        Value::Null => Ok(f64::NAN),
        _ => Err("logprob must be a number".to_owned()),
    }
}

/// Parses one JSON line. `Ok(None)` for a metadata header line.
fn parse_line(line: &str) -> Result<Option<ScoreRecord>, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("expected a JSON object")?;
    if obj.contains_key("metadata") {
        return Ok(None);
    }
    let step = field(obj, "step")?
        .as_u64()
        .ok_or("field \"step\" must be a non-negative integer")?;
    Ok(Some(ScoreRecord {
        model: as_string(field(obj, "model")?, "model")?,
        seed: as_string(field(obj, "seed")?, "seed")?,
        step,
        item_id: as_string(field(obj, "item_id")?, "item_id")?,
        logprob: as_logprob(field(obj, "logprob")?)?,
    }))
}

impl ScoreStore {
    /// Reads JSON-lines score files.
    ///
    /// Rows with a non-finite logprob and rows for items outside `known_items`
    /// (when given) are excluded and counted. A repeated
    /// (model, seed, step, item) key is an error naming both locations.
    pub fn ingest<R: BufRead>(
        sources: Vec<(String, R)>,
        known_items: Option<&HashSet<String>>,
    ) -> Result<(Self, IngestReport), ScoreError> {
        let mut report = IngestReport::default();
        let mut seen: HashMap<(String, String, u64, String), String> = HashMap::new();
        let mut records = Vec::new();
        for (name, reader) in sources {
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let location = format!("{name}:{}", i + 1);
                let rec = match parse_line(&line) {
                    Ok(Some(r)) => r,
                    Ok(None) if i == 0 => continue,
                    Ok(None) => {
                        return Err(ScoreError::Parse {
                            source_name: name,
                            line: i + 1,
                            message: "metadata object after the first line".into(),
                        })
                    }
                    Err(message) => {
                        return Err(ScoreError::Parse {
                            source_name: name,
                            line: i + 1,
                            message,
                        })
                    }
                };
                report.rows_read += 1;
                if !rec.logprob.is_finite() {
                    report.non_finite.push(RejectedRow {
                        location,
                        reason: format!("non-finite logprob {}", rec.logprob),
                    });
                    continue;
                }
                let key = (rec.model.clone(), rec.seed.clone(), rec.step, rec.item_id.clone());
                if let Some(first) = seen.get(&key) {
                    return Err(ScoreError::Duplicate {
                        model: key.0,
                        seed: key.1,
                        step: key.2,
                        item_id: key.3,
                        first: first.clone(),
                        second: location,
                    });
                }
                seen.insert(key, location);
                if known_items.is_some_and(|known| !known.contains(&rec.item_id)) {
                    report.unknown_items += 1;
                    continue;
                }
                records.push(rec);
            }
        }
        records.sort_by(|a, b| {
            (&a.model, &a.seed, a.step, &a.item_id).cmp(&(&b.model, &b.seed, b.step, &b.item_id))
        });
        Ok((Self { records }, report))
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn groups(&self) -> ScoreGroups {
        let mut out: ScoreGroups = BTreeMap::new();
        for r in &self.records {
            out.entry(CheckpointKey {
                model: r.model.clone(),
                seed: r.seed.clone(),
                step: r.step,
            })
            .or_default()
            .insert(r.item_id.clone(), r.logprob);
        }
        out
    }

    /// Header line declaring the natural-log convention, then sorted records.
    pub fn write<W: Write>(&self, mut w: W, manifest_digest: &str) -> std::io::Result<()> {
        let header = serde_json::json!({
            "metadata": {
                "logprob": "natural_log",
                "records": self.records.len(),
                "manifest_digest": manifest_digest,
            }
        });
        writeln!(w, "{header}")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }
}

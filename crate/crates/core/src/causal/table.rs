use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::CausalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Per-step record fields such as `/observables/mean_v`.
    #[default]
    Step,
    /// Episode-constant header fields such as `/environment/temperature`.
    Header,
}

/// A column of the table: where to read the value (a JSON pointer) and how
/// to bin it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub pointer: String,
    #[serde(default)]
    pub source: Source,
    /// Strictly increasing edges `e_0 < ... < e_{k-1}` giving `k + 1` bins
    /// `(-inf, e_0], (e_0, e_1], ..., (e_{k-1}, inf)`.
    pub edges: Vec<f64>,
}

impl VariableSpec {
    pub fn step(name: &str, pointer: &str, edges: Vec<f64>) -> Self {
        VariableSpec {
            name: name.into(),
            pointer: pointer.into(),
            source: Source::Step,
            edges,
        }
    }

    pub fn header(name: &str, pointer: &str, edges: Vec<f64>) -> Self {
        VariableSpec {
            source: Source::Header,
            ..Self::step(name, pointer, edges)
        }
    }

    fn validate(&self) -> Result<(), CausalError> {
        if self.edges.iter().any(|e| !e.is_finite()) || self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CausalError::Binning(format!(
                "edges of `{}` must be finite and strictly increasing",
                self.name
            )));
        }
        Ok(())
    }
}

/// Right-closed bin of `v`: a value equal to an edge falls in the bin that
/// edge closes.
pub fn bin_index(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e < v)
}

/// Discretized rows, one per logged step.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrajectoryTable {
    columns: Vec<String>,
    episodes: Vec<usize>,
    steps: Vec<usize>,
    rows: Vec<Vec<usize>>,
}

impl TrajectoryTable {
    /// Table from already-discretized rows; episode and step indices are the
    /// row numbers.
    pub fn from_rows(columns: Vec<String>, rows: Vec<Vec<usize>>) -> Result<Self, CausalError> {
        if let Some(r) = rows.iter().find(|r| r.len() != columns.len()) {
            return Err(CausalError::Binning(format!(
                "row has {} values for {} columns",
                r.len(),
                columns.len()
            )));
        }
        Ok(TrajectoryTable {
            episodes: vec![0; rows.len()],
            steps: (0..rows.len()).collect(),
            columns,
            rows,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// `(episode, step)` of each row.
    pub fn index(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.episodes.iter().copied().zip(self.steps.iter().copied())
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
        other => other.as_f64(),
    }
}

/// Reads JSONL episode logs. Each header starts a new episode; each step
/// record becomes one row. Snapshots are ignored.
pub fn extract_table(logs: &[&str], specs: &[VariableSpec]) -> Result<TrajectoryTable, CausalError> {
    for s in specs {
        s.validate()?;
    }
    let mut table = TrajectoryTable {
        columns: specs.iter().map(|s| s.name.clone()).collect(),
        ..TrajectoryTable::default()
    };
    let mut episode: Option<usize> = None;
    let mut header = Value::Null;
    for log in logs {
        for (k, line) in log.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse = |message: String| CausalError::Parse { line: k + 1, message };
            let record: Value = serde_json::from_str(line).map_err(|e| parse(e.to_string()))?;
            match record.get("kind").and_then(Value::as_str) {
                Some("header") => {
                    episode = Some(episode.map_or(0, |e| e + 1));
                    header = record;
                }
                Some("step") => {
                    let ep = episode.ok_or_else(|| parse("step record before any header".into()))?;
                    let step = record
                        .get("step")
                        .and_then(Value::as_u64)
                        .ok_or_else(|| parse("step record without a step index".into()))?;
                    let mut row = Vec::with_capacity(specs.len());
                    for s in specs {
                        let src = match s.source {
                            Source::Step => &record,
                            Source::Header => &header,
                        };
                        let v = src.pointer(&s.pointer).and_then(number).ok_or_else(|| {
                            CausalError::Binning(format!("line {}: no numeric value at `{}`", k + 1, s.pointer))
                        })?;
                        row.push(bin_index(&s.edges, v));
                    }
                    table.episodes.push(ep);
                    table.steps.push(step as usize);
                    table.rows.push(row);
                }
                Some("snapshot") => {}
                _ => return Err(parse("record without a known `kind`".into())),
            }
        }
    }
    Ok(table)
}

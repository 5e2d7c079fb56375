use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use biovolt::env::Scenario;
use biovolt::learner::TrainConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const ENV_PREFIX: &str = "BIOVOLT_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Built-in scenario name or path to a TOML scenario file.
    pub scenario: String,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub snapshots: Option<usize>,
    pub episodes: usize,
    pub deterministic: bool,
    pub quiet: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: "cell-homeostasis".into(),
            seed: None,
            out: PathBuf::from("biovolt-out"),
            snapshots: None,
            episodes: 1,
            deterministic: false,
            quiet: false,
        }
    }
}

/// Fully resolved configuration plus the merged tree it came from.
#[derive(Debug, Clone)]
pub struct Effective {
    pub run: RunConfig,
    pub scenario: Scenario<f64>,
    pub train: TrainConfig,
    pub tree: Value,
}

/// Sources of overrides, lowest precedence first.
#[derive(Debug, Default, Clone)]
pub struct Layers {
    pub file: Option<Value>,
    pub env: Vec<(String, Value)>,
    pub sets: Vec<(String, Value)>,
    pub flags: Vec<(String, Value)>,
}

/// TOML scalar, array or inline table; anything that does not parse is
/// taken as a bare string.
pub fn parse_value(text: &str) -> Value {
    match format!("v = {text}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").map(toml_to_json).unwrap_or(Value::Null),
        Err(_) => Value::String(text.to_string()),
    }
}

fn toml_to_json(v: toml::Value) -> Value {
    serde_json::to_value(v).expect("TOML values are representable in JSON")
}

pub fn parse_assignment(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected key=value, got `{s}`"))?;
    let k = k.trim();
    if k.is_empty() || k.split('.').any(str::is_empty) {
        bail!("malformed key `{k}`");
    }
    Ok((k.to_string(), parse_value(v.trim())))
}

/// `BIOVOLT_TRAIN__BATCH_SIZE=128` becomes `train.batch_size = 128`.
pub fn env_overrides<I: IntoIterator<Item = (String, String)>>(vars: I) -> Vec<(String, Value)> {
    let mut out: Vec<(String, Value)> = vars
        .into_iter()
        .filter_map(|(k, v)| {
            let rest = k.strip_prefix(ENV_PREFIX)?;
            if rest.is_empty() {
                return None;
            }
            Some((rest.to_lowercase().replace("__", "."), parse_value(&v)))
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn set_path(tree: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| anyhow!("`{path}`: `{part}` indexes an array and must be a number"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| anyhow!("`{path}`: index {idx} out of range (length {len})"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => bail!("`{path}`: `{part}` is below a non-table value"),
        };
    }
    Ok(())
}

pub fn get_path<'a>(tree: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(tree, |node, part| match node {
        Value::Object(map) => map.get(part),
        Value::Array(items) => items.get(part.parse::<usize>().ok()?),
        _ => None,
    })
}

/// Tables merge key by key; every other value replaces.
pub fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn read_toml(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| crate::Failure::config(anyhow!("{}: {e}", path.display())))?;
    Ok(toml_to_json(toml::Value::Table(table)))
}

fn load_scenario(spec: &str) -> Result<Value> {
    if let Some(s) = Scenario::<f64>::by_name(spec) {
        return Ok(serde_json::to_value(s)?);
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(crate::Failure::config(anyhow!(
            "unknown scenario `{spec}` (built-in: {})",
            biovolt::env::SCENARIO_NAMES.join(", ")
        )));
    }
    let file = read_toml(path)?;
    // a file naming a built-in scenario only needs the fields it changes
    let base = file
        .get("name")
        .and_then(Value::as_str)
        .and_then(Scenario::<f64>::by_name);
    Ok(match base {
        Some(b) => {
            let mut tree = serde_json::to_value(b)?;
            merge(&mut tree, file);
            tree
        }
        None => file,
    })
}

fn typed<T: for<'de> Deserialize<'de>>(tree: &Value, key: &str) -> Result<T> {
    let v = tree.get(key).cloned().unwrap_or(Value::Object(Map::new()));
    serde_json::from_value(v).map_err(|e| crate::Failure::config(anyhow!("[{key}]: {e}")))
}

impl Layers {
    fn overlays(&self) -> impl Iterator<Item = &(String, Value)> {
        self.env.iter().chain(&self.sets).chain(&self.flags)
    }

    pub fn resolve(&self) -> Result<Effective> {
        // the scenario name decides the defaults that everything else overlays
        let mut probe = serde_json::json!({ "run": RunConfig::default() });
        if let Some(f) = &self.file {
            merge(&mut probe, f.clone());
        }
        for (k, v) in self.overlays() {
            if k == "run.scenario" {
                set_path(&mut probe, k, v.clone()).map_err(crate::Failure::config)?;
            }
        }
        let name = get_path(&probe, "run.scenario")
            .and_then(Value::as_str)
            .ok_or_else(|| crate::Failure::config(anyhow!("run.scenario must be a string")))?
            .to_string();

        let mut tree = serde_json::json!({
            "run": RunConfig::default(),
            "scenario": load_scenario(&name)?,
            "train": TrainConfig::default(),
        });
        if let Some(f) = &self.file {
            merge(&mut tree, f.clone());
        }
        for (k, v) in self.overlays() {
            set_path(&mut tree, k, v.clone()).map_err(crate::Failure::config)?;
        }
        let run: RunConfig = typed(&tree, "run")?;
        let scenario: Scenario<f64> = typed(&tree, "scenario")?;
        scenario.validate().map_err(|e| crate::Failure::config(anyhow!(e)))?;
        let mut train: TrainConfig = typed(&tree, "train")?;
        if let Some(seed) = run.seed {
            train.seed = seed;
        }
        train.validate().map_err(|e| crate::Failure::config(anyhow!(e)))?;
        Ok(Effective {
            run,
            scenario,
            train,
            tree,
        })
    }
}

//! On-disk formats shared by the subcommands: numbered instance JSONs with
//! `.label.json` sidecars, and a feature CSV. Floats are written with `{}`,
//! Rust's shortest round-trip formatting, so files are byte-deterministic
//! and parsing them back loses nothing.

use std::fs;
use std::path::Path;

use wdp_triage::{FeatureVector, InstanceLabel, WdpInstance, FEATURE_COUNT, FEATURE_NAMES};

use crate::error::{CliError, CliResult, Code};

/// One instance as read back from a generated directory.
pub struct CorpusEntry {
    /// File stem, e.g. `instance_0007`; unique within the directory.
    pub stem: String,
    pub instance: WdpInstance,
    pub label: Option<InstanceLabel>,
}

pub fn instance_file_name(index: usize) -> String {
    format!("instance_{index:04}.json")
}

pub fn label_file_name(index: usize) -> String {
    format!("instance_{index:04}.label.json")
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Reads every `instance_*.json` in `dir` in lexicographic order, attaching
/// the label sidecar when present. Errors if the directory has none.
pub fn read_corpus(dir: &Path) -> CliResult<Vec<CorpusEntry>> {
    let listing = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names: Vec<String> = Vec::new();
    for entry in listing {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with("instance_") && name.ends_with(".json") && !name.ends_with(".label.json") {
            names.push(name);
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(CliError::new(
            Code::Instance,
            format!("no instance_*.json files in {}", dir.display()),
        ));
    }
    names
        .iter()
        .map(|name| {
            let instance = WdpInstance::from_json(&read_to_string(&dir.join(name))?)?;
            let stem = name.trim_end_matches(".json").to_string();
            let label_path = dir.join(format!("{stem}.label.json"));
            let label = if label_path.exists() {
                let text = read_to_string(&label_path)?;
                Some(serde_json::from_str::<InstanceLabel>(&text).map_err(|e| {
                    CliError::new(Code::Json, format!("{}: {e}", label_path.display()))
                })?)
            } else {
                None
            };
            Ok(CorpusEntry { stem, instance, label })
        })
        .collect()
}

pub struct FeatureTable {
    pub stems: Vec<String>,
    pub rows: Vec<FeatureVector>,
    pub gaps: Option<Vec<f64>>,
}

pub fn features_csv_text(stems: &[String], rows: &[FeatureVector], gaps: Option<&[f64]>) -> String {
    let mut text = String::from("instance");
    for name in FEATURE_NAMES {
        text.push(',');
        text.push_str(name);
    }
    if gaps.is_some() {
        text.push_str(",greedy_gap");
    }
    text.push('\n');
    for (i, stem) in stems.iter().enumerate() {
        text.push_str(stem);
        for v in rows[i].values {
            text.push_str(&format!(",{v}"));
        }
        if let Some(g) = gaps {
            text.push_str(&format!(",{}", g[i]));
        }
        text.push('\n');
    }
    text
}

pub fn read_features_csv(path: &Path) -> CliResult<FeatureTable> {
    let bad = |msg: String| CliError::new(Code::Instance, format!("{}: {msg}", path.display()));
    let text = read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".to_string()))?;
    let columns: Vec<&str> = header.split(',').collect();
    let expected: Vec<&str> = std::iter::once("instance").chain(FEATURE_NAMES).collect();
    if columns.len() < expected.len() || columns[..expected.len()] != expected[..] {
        return Err(bad("header does not match the feature schema".to_string()));
    }
    let has_gaps = match columns.len() - expected.len() {
        0 => false,
        1 if columns[expected.len()] == "greedy_gap" => true,
        _ => return Err(bad(format!("unexpected trailing columns in header '{header}'"))),
    };
    let mut table = FeatureTable {
        stems: Vec::new(),
        rows: Vec::new(),
        gaps: if has_gaps { Some(Vec::new()) } else { None },
    };
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(bad(format!("line {}: expected {} fields, got {}", lineno + 2, columns.len(), fields.len())));
        }
        let mut values = [0.0f64; FEATURE_COUNT];
        for (j, slot) in values.iter_mut().enumerate() {
            *slot = fields[j + 1]
                .parse::<f64>()
                .map_err(|_| bad(format!("line {}: bad float '{}'", lineno + 2, fields[j + 1])))?;
        }
        table.stems.push(fields[0].to_string());
        table.rows.push(FeatureVector { values });
        if let Some(gaps) = table.gaps.as_mut() {
            let g = fields[columns.len() - 1]
                .parse::<f64>()
                .map_err(|_| bad(format!("line {}: bad gap", lineno + 2)))?;
            gaps.push(g);
        }
    }
    if table.stems.is_empty() {
        return Err(bad("no data rows".to_string()));
    }
    Ok(table)
}

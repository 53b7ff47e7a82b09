use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Writes files into one directory, each prefixed by the same `#` header.
pub struct Emitter {
    dir: PathBuf,
    header: String,
    pub format: Format,
    written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(
        dir: &Path,
        command: &str,
        cfg: &ExperimentConfig,
        format: Format,
    ) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.display().to_string(),
            source,
        })?;
        let mut header = String::new();
        writeln!(header, "# tool: {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(header, "# command: {command}").unwrap();
        match cfg.seed {
            Some(s) => writeln!(header, "# seed: {s}").unwrap(),
            None => writeln!(header, "# seed: none").unwrap(),
        }
        writeln!(header, "# config: {}", serde_json::to_string(cfg)?).unwrap();
        Ok(Self {
            dir: dir.to_path_buf(),
            header,
            format,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write(&mut self, name: &str, body: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut bytes = self.header.clone().into_bytes();
        bytes.extend_from_slice(body);
        std::fs::write(&path, bytes).map_err(|source| CliError::Output {
            path: path.display().to_string(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_vec_pretty(value)?;
        body.push(b'\n');
        self.write(name, &body)
    }

    /// Report in the selected format; CSV flattens it to `key,value` rows.
    pub fn write_report<T: Serialize>(&mut self, stem: &str, value: &T) -> Result<(), CliError> {
        let name = format!("{stem}.{}", self.format.ext());
        match self.format {
            Format::Json => self.write_json(&name, value),
            Format::Csv => {
                let mut rows = Vec::new();
                flatten("", &serde_json::to_value(value)?, &mut rows);
                let mut body = String::from("key,value\n");
                for (k, v) in rows {
                    writeln!(body, "{k},{v}").unwrap();
                }
                self.write(&name, body.as_bytes())
            }
        }
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Array(_) => {}
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_nested_objects() {
        let v = serde_json::json!({"a": 1.5, "b": {"c": true, "d": [1, 2]}, "e": "x"});
        let mut rows = Vec::new();
        flatten("", &v, &mut rows);
        assert_eq!(
            rows,
            vec![
                ("a".to_string(), "1.5".to_string()),
                ("b.c".to_string(), "true".to_string()),
                ("e".to_string(), "x".to_string()),
            ]
        );
    }
}

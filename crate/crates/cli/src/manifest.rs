use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Record written beside every command's outputs. Contains no timestamps, so
/// identical invocations produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Map<String, Value>,
    pub tool_version: String,
    pub outputs: Vec<String>,
}

/// Collects output files under one directory and writes the manifest last.
pub struct OutputDir {
    root: PathBuf,
    command: &'static str,
    parameters: Map<String, Value>,
    outputs: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path, command: &'static str) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            command,
            parameters: Map::new(),
            outputs: Vec::new(),
        })
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("parameters serialise");
        self.parameters.insert(key.to_string(), v);
    }

    /// Path for a new output file, recorded in the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.root.join(name)
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.file(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::json(self.root.join(name), e))?;
        self.write_with(name, |w| writeln!(w, "{text}"))
    }

    pub fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            parameters: self.parameters,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs,
        };
        let path = self.root.join(format!("{}_manifest.json", self.command));
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::json(&path, e))?;
        std::fs::write(&path, format!("{text}\n")).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

//! Run manifests: one per command invocation, recording the command, tool
//! version, resolved settings, and SHA-256 digests of every input file.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use sha2::{Digest, Sha256};

pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Manifest {
            entries: Vec::new(),
        };
        m.push("command", command);
        m.push("tool_version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Records an input path together with its content digest.
    pub fn push_input(&mut self, name: &str, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.push(&format!("input.{name}"), path.display());
        self.push(&format!("input.{name}.sha256"), digest);
        Ok(())
    }

    pub fn push_output(&mut self, name: &str, path: &Path) {
        self.push(&format!("output.{name}"), path.display());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.entries {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(value);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
        }
        fs::write(path, self.render()).with_context(|| format!("writing {}", path.display()))
    }
}

/// Manifest path for a command whose primary output is a file:
/// `<output>.manifest`.
pub fn sibling_manifest(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    name.push_str(".manifest");
    output.with_file_name(name)
}

//! Run directories `<out>/<command>/<config-hash>/` and their manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use metascreen::library::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Number of hash characters used in directory names.
const HASH_PREFIX: usize = 16;

pub struct RunDir {
    root: PathBuf,
    files: Vec<(String, String)>,
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    name: &'a str,
    sha256: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    toolkit: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    table_hash: Option<&'a str>,
    tolerances_met: bool,
    config: &'a serde_json::Value,
    outputs: Vec<ManifestFile<'a>>,
}

impl RunDir {
    /// Creates a fresh run directory, replacing one left by an earlier run of
    /// the same config.
    pub fn create(out: &Path, command: &str, config_hash: &str) -> Result<Self> {
        let root = out.join(command).join(&config_hash[..HASH_PREFIX]);
        if root.exists() {
            fs::remove_dir_all(&root)
                .with_context(|| format!("clearing previous run in {}", root.display()))?;
        }
        fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root,
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(name), bytes)
            .with_context(|| format!("writing {name}"))?;
        self.files.push((name.to_owned(), hex::encode(Sha256::digest(bytes))));
        Ok(())
    }

    /// Writes whatever `fill` produces into `name`.
    pub fn write_with<F>(&mut self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> metascreen::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf).with_context(|| format!("formatting {name}"))?;
        self.write(name, &buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write(name, &buf)
    }

    /// Plain CSV from a header and pre-formatted rows.
    pub fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<()> {
        let mut buf = Vec::with_capacity(rows.len() * 32);
        writeln!(buf, "{header}")?;
        for row in rows {
            writeln!(buf, "{row}")?;
        }
        self.write(name, &buf)
    }

    /// Writes `manifest.json` listing every output with its digest.
    pub fn finish(
        mut self,
        command: &str,
        config_hash: &str,
        table_hash: Option<&str>,
        config: &serde_json::Value,
        tolerances_met: bool,
    ) -> Result<PathBuf> {
        let mut files = std::mem::take(&mut self.files);
        files.sort();
        let manifest = Manifest {
            toolkit: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash,
            table_hash,
            tolerances_met,
            config,
            outputs: files
                .iter()
                .map(|(name, sha256)| ManifestFile { name, sha256 })
                .collect(),
        };
        self.json("manifest.json", &manifest)?;
        Ok(self.root)
    }
}

/// Formats a frequency for use in file names.
pub fn freq_tag(f: f64) -> String {
    if f.fract() == 0.0 {
        format!("{f:.0}Hz")
    } else {
        format!("{f}Hz")
    }
}

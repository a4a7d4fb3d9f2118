//! Deterministic file output: every file starts with a '#'-prefixed header
//! carrying the tool version, config hash and seed, and contains no
//! timestamps, so identical inputs give byte-identical outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug)]
pub struct Meta {
    pub config_hash: u64,
    pub seed: u64,
}

impl Meta {
    pub fn header(&self, extra: &[(&str, String)]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# tool: nscatter {VERSION}");
        let _ = writeln!(out, "# config_hash: {:016x}", self.config_hash);
        let _ = writeln!(out, "# seed: {}", self.seed);
        for (k, v) in extra {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Render one CSV body; the caller prepends a header.
pub fn csv_body(columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", columns.join(","));
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::config::{ExperimentConfig, Prepared};
use super::experiments::Outcome;

/// Hex prefix length of the config hash used in file names.
const HASH_PREFIX: usize = 16;

/// SHA-256 of the effective configuration (output location excluded).
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(&ExperimentConfig {
        out: None,
        ..cfg.clone()
    })
    .expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone)]
pub struct Emitted {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// Writes `<kind>-<hash>.csv` (plus `<kind>-<hash>.<suffix>.csv` tables),
/// the `.json` manifest and the `.txt` summary. Nothing in them depends on
/// wall-clock time or thread count.
pub fn emit_report(p: &Prepared, outcome: &Outcome, dir: &Path) -> Result<Emitted> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", dir.display()),
        ))
    })?;
    let hash = config_hash(&p.config);
    let stem = format!("{}-{}", p.kind.name(), &hash[..HASH_PREFIX]);
    let mut files = Vec::new();

    for table in &outcome.tables {
        let name = match &table.suffix {
            Some(s) => format!("{stem}.{s}.csv"),
            None => format!("{stem}.csv"),
        };
        let path = dir.join(name);
        write(&path, table.text.as_bytes())?;
        files.push(path);
    }

    let manifest = json!({
        "experiment": p.kind.name(),
        "config_hash": hash,
        "seed": p.config.seed,
        "paths": p.config.paths,
        "version": env!("CARGO_PKG_VERSION"),
        "config": ExperimentConfig { out: None, ..p.config.clone() },
        "tolerances": outcome.applied,
        "passed": outcome.passed(),
        "checks": outcome.checks,
        "results": outcome.record,
        "tables": files.iter().map(|f| f.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    let path = dir.join(format!("{stem}.json"));
    let mut text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Numeric(e.to_string()))?;
    text.push('\n');
    write(&path, text.as_bytes())?;
    files.push(path);

    let mut summary = format!(
        "{} (seed {}, {} paths, config {})\n",
        p.kind.name(),
        p.config.seed,
        p.config.paths,
        &hash[..HASH_PREFIX]
    );
    for c in &outcome.checks {
        let _ = writeln!(
            summary,
            "{} {}: {} (threshold {}) {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold,
            c.detail
        );
    }
    let passed = outcome.checks.iter().filter(|c| c.pass).count();
    let _ = writeln!(summary, "{passed}/{} checks passed", outcome.checks.len());
    let path = dir.join(format!("{stem}.txt"));
    write(&path, summary.as_bytes())?;
    files.push(path);

    Ok(Emitted { files, summary })
}

//! Output directory bookkeeping: CSV writers, the manifest and the
//! timestamp sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::CliError;

pub const MANIFEST: &str = "manifest.txt";
pub const SIDECAR: &str = "run_info.txt";
pub const CONFIG_ECHO: &str = "config.txt";

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub struct Csv {
    body: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            body: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        self.body.push_str(&fields.join(","));
        self.body.push('\n');
    }
}

pub struct Output {
    dir: PathBuf,
    subcommand: String,
    config_text: String,
    config_hash: String,
    artifacts: Vec<(String, String)>,
}

impl Output {
    pub fn create(cfg: &Config, subcommand: &str) -> Result<Self, CliError> {
        let dir = cfg.output_dir();
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(dir.clone(), e))?;
        let config_text = cfg.canonical();
        let config_hash = sha256_hex(config_text.as_bytes());
        let mut out = Output {
            dir,
            subcommand: subcommand.to_string(),
            config_text,
            config_hash,
            artifacts: Vec::new(),
        };
        let text = out.config_text.clone();
        out.write(CONFIG_ECHO, text.as_bytes())?;
        Ok(out)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::Io(parent.to_path_buf(), e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::Io(path.clone(), e))?;
        self.artifacts.push((name.to_string(), sha256_hex(bytes)));
        Ok(path)
    }

    pub fn csv(&mut self, name: &str, csv: Csv) -> Result<PathBuf, CliError> {
        self.write(name, csv.body.as_bytes())
    }

    /// Writes `key = value` lines.
    pub fn summary(&mut self, name: &str, entries: &[(&str, String)]) -> Result<PathBuf, CliError> {
        let mut text = String::new();
        for (k, v) in entries {
            let _ = writeln!(text, "{k} = {v}");
        }
        self.write(name, text.as_bytes())
    }

    /// Field snapshot through the spectral-core file format.
    pub fn field(&mut self, name: &str, field: &hmfdamp::spectral::MixedField) -> Result<PathBuf, CliError> {
        let mut bytes = Vec::new();
        field.write_snapshot(&mut bytes)?;
        self.write(name, &bytes)
    }

    /// Manifest (deterministic) and timestamp sidecar.
    pub fn finish(self) -> Result<(), CliError> {
        let mut m = String::new();
        let _ = writeln!(m, "subcommand = {}", self.subcommand);
        let _ = writeln!(m, "config_sha256 = {}", self.config_hash);
        for (name, hash) in &self.artifacts {
            let _ = writeln!(m, "artifact = {name} sha256={hash}");
        }
        let path = self.dir.join(MANIFEST);
        fs::write(&path, m).map_err(|e| CliError::Io(path, e))?;
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        let side = format!(
            "unix_time = {secs:.3}\nversion = {}\nconfig_sha256 = {}\n",
            env!("CARGO_PKG_VERSION"),
            self.config_hash
        );
        let path = self.dir.join(SIDECAR);
        fs::write(&path, side).map_err(|e| CliError::Io(path, e))?;
        Ok(())
    }
}

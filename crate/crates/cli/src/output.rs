//! Output directory: CSV and JSON files stamped with the config hash,
//! the manifest and optional gnuplot scripts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliResult;

pub const FORMAT_VERSION: u32 = 1;

pub struct OutputDir {
    dir: PathBuf,
    hash: String,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    format_version: u32,
    tool: &'static str,
    tool_version: &'static str,
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    files: &'a [String],
    summary: serde_json::Value,
    wall_time_s: f64,
}

impl OutputDir {
    pub fn create(dir: &Path, cfg: &ExperimentConfig) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        let mut out = OutputDir { dir: dir.to_path_buf(), hash: cfg.hash(), files: Vec::new() };
        let text = format!("# config_hash = \"{}\"\n{}", out.hash, cfg.to_toml()?);
        out.write_text("config.toml", &text)?;
        Ok(out)
    }

    fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        fs::write(self.dir.join(name), text)?;
        self.record(name);
        Ok(())
    }

    /// JSON object with a `config_hash` field added at the top level.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("config_hash".into(), serde_json::Value::String(self.hash.clone()));
        }
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// CSV with a `# config_hash=` comment line before the header.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let mut buf = Vec::new();
        writeln!(buf, "# config_hash={}", self.hash)?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        fs::write(self.dir.join(name), buf)?;
        self.record(name);
        Ok(())
    }

    pub fn write_manifest(
        mut self,
        cfg: &ExperimentConfig,
        summary: serde_json::Value,
        wall_time_s: f64,
    ) -> CliResult<()> {
        self.record("manifest.json");
        let m = Manifest {
            format_version: FORMAT_VERSION,
            tool: "latangle",
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash: &self.hash,
            config: cfg,
            files: &self.files,
            summary,
            wall_time_s,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

/// Shortest round-trip representation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

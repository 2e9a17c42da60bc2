//! Output-directory plumbing: metadata stamping and the machine-readable
//! run manifest.

use std::fs::File;
use std::io::BufWriter;

use serde::Serialize;

use rayknight::export::Metadata;

use crate::config::Config;
use crate::CliError;

pub fn metadata(cfg: &Config) -> Metadata {
    Metadata::new(crate::VERSION, cfg.hash())
}

/// Verdict written as `manifest.json`: names every failed check so a
/// pipeline can react without parsing logs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub verdict: &'static str,
    pub exit_code: u8,
    pub failed: Vec<String>,
}

impl Manifest {
    pub fn new(command: impl Into<String>, failed: Vec<String>) -> Self {
        let exit_code = if failed.is_empty() { 0 } else { 1 };
        Manifest {
            command: command.into(),
            verdict: if exit_code == 0 { "pass" } else { "fail" },
            exit_code,
            failed,
        }
    }
}

pub fn write_json<T: Serialize>(
    cfg: &Config,
    name: &str,
    report: &T,
) -> Result<(), CliError> {
    let path = cfg.out_dir.join(name);
    let file = BufWriter::new(File::create(&path)?);
    rayknight::export::write_json_report(file, &metadata(cfg), report)?;
    Ok(())
}

pub fn create(cfg: &Config, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(cfg.out_dir.join(name))?))
}

/// Write the manifest and turn a failed verdict into the exit-1 error.
pub fn finish(cfg: &Config, manifest: Manifest) -> Result<(), CliError> {
    write_json(cfg, "manifest.json", &manifest)?;
    println!(
        "{}: {} ({} checks failed) -> {}",
        manifest.command,
        manifest.verdict,
        manifest.failed.len(),
        cfg.out_dir.join("manifest.json").display()
    );
    if manifest.exit_code == 0 {
        Ok(())
    } else {
        Err(CliError::stat_failure(format!(
            "{} failed: {}",
            manifest.command,
            manifest.failed.join("; ")
        )))
    }
}

/// Sanitize a float for use inside a file name.
pub fn tag(v: f64) -> String {
    format!("{v}").replace('.', "p").replace('-', "m")
}

pub fn file_name(parts: &[&str]) -> String {
    parts.join("_")
}

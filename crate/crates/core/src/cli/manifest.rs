use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    /// Data rows, excluding the header.
    pub rows: usize,
    pub sha256: String,
}

/// Provenance record written once per command invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub started_at: String,
    pub config: PipelineConfig,
    pub dataset_sha256: String,
    pub timings: Vec<StageTiming>,
    pub outputs: Vec<OutputFile>,
    /// Human-readable summary lines, also printed by the binary.
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: chrono::Utc::now().to_rfc3339(),
            config: config.clone(),
            dataset_sha256: String::new(),
            timings: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t0 = Instant::now();
        let out = f()?;
        let seconds = t0.elapsed().as_secs_f64();
        log::info!("{}: {stage} took {seconds:.2}s", self.command);
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds,
        });
        Ok(out)
    }

    pub fn record_output(&mut self, path: &Path, rows: usize) -> Result<()> {
        self.outputs.push(OutputFile {
            file: path
                .file_name()
                .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
            rows,
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn output(&self, file: &str) -> Option<&OutputFile> {
        self.outputs.iter().find(|o| o.file == file)
    }

    pub fn note(&mut self, line: String) {
        self.notes.push(line);
    }

    pub fn path_in(out_dir: &Path, command: &str) -> PathBuf {
        out_dir.join(format!("manifest-{command}.json"))
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = Self::path_in(out_dir, &self.command);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)
            .map_err(|e| Error::io(&path, e.into()))?;
        Ok(path)
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(hasher.finalize()))
}

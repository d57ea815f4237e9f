use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use cuelens_core::telemetry::TensorFile;
use cuelens_core::ENGINE_VERSION;

use crate::config::{sha256_hex, AnalysisConfig};
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct Provenance<'a> {
    file: &'a str,
    subcommand: &'a str,
    config_sha256: &'a str,
    engine_version: &'a str,
    content_sha256: String,
}

/// Output directory of one invocation. Every file written through it gets
/// a `<name>.prov.json` sidecar.
pub struct Output {
    dir: PathBuf,
    subcommand: String,
    config_hash: String,
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("cannot write {}: {e}", path.display()))
}

impl Output {
    pub fn create<A: Serialize>(dir: &Path, subcommand: &str, parameters: &A) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let config = AnalysisConfig::new(subcommand, parameters).to_json();
        let out = Self {
            dir: dir.to_path_buf(),
            subcommand: subcommand.to_string(),
            config_hash: sha256_hex(config.as_bytes()),
        };
        out.bytes("config.json", config.as_bytes())?;
        Ok(out)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn bytes(&self, name: &str, content: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| io_error(&path, e))?;
        self.provenance(name, content)
    }

    /// Writes the sidecar for a file some other routine already produced.
    pub fn provenance(&self, name: &str, content: &[u8]) -> CliResult<()> {
        let prov = Provenance {
            file: name,
            subcommand: &self.subcommand,
            config_sha256: &self.config_hash,
            engine_version: ENGINE_VERSION,
            content_sha256: sha256_hex(content),
        };
        let path = self.dir.join(format!("{name}.prov.json"));
        let mut text = serde_json::to_string_pretty(&prov).expect("provenance serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_error(&path, e))
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    pub fn csv<R, I>(&self, name: &str, header: &[&str], rows: R) -> CliResult<()>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        let bad = |e: csv::Error| CliError::Validation(format!("cannot encode {name}: {e}"));
        w.write_record(header).map_err(bad)?;
        for row in rows {
            w.write_record(row).map_err(bad)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Validation(format!("cannot encode {name}: {e}")))?;
        self.bytes(name, &bytes)
    }

    pub fn tensor(&self, name: &str, tensor: &TensorFile) -> CliResult<()> {
        self.bytes(name, &tensor.to_bytes())
    }
}

/// Shortest round-trip decimal form; empty for missing values.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

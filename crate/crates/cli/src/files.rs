use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use insdel_ldc::private_ldc::SecretKey;
use insdel_ldc::BitString;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// `path` with `suffix` appended to its file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name: OsString = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    with_suffix(path, ".json")
}

/// Exclusive claim on an output path for the life of the value.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(out: &Path) -> Result<Self, CliError> {
        let path = with_suffix(out, ".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Usage(format!(
                "{} is locked by another run (remove {} if stale)",
                out.display(),
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Creates a new file readable and writable by its owner only.
fn create_private(path: &Path) -> std::io::Result<File> {
    let mut opts = OpenOptions::new();
    opts.write(true).create_new(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    opts.open(path)
}

pub fn write_key(path: &Path, key: &SecretKey) -> Result<(), CliError> {
    let mut f = create_private(path)?;
    f.write_all(&key.to_bytes())?;
    Ok(())
}

pub fn read_key(path: &Path) -> Result<SecretKey, CliError> {
    let bytes = fs::read(path)?;
    SecretKey::from_bytes(&bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Message bits of a file, most significant bit of each byte first.
pub fn read_message(path: &Path) -> Result<BitString, CliError> {
    let bytes = fs::read(path)?;
    if bytes.is_empty() {
        return Err(CliError::Usage(format!("{} is empty; there is no message to encode", path.display())));
    }
    Ok(BitString::from_bytes(&bytes, bytes.len() * 8)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// CSV whose first line is a comment carrying the build stamp and the config.
pub fn write_csv<T: Serialize>(path: &Path, config: &ExperimentConfig, rows: &[T]) -> Result<(), CliError> {
    let mut f = File::create(path)?;
    writeln!(f, "# build={} config={}", crate::config::BUILD, serde_json::to_string(config)?)?;
    let mut w = csv::Writer::from_writer(f);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Code parameters needed to decode a container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeInfo {
    pub codec: String,
    pub k: usize,
    pub lambda: u32,
    pub safe_rounds: u32,
    pub registry_seed: u64,
    /// Compiled length before any corruption.
    pub n: usize,
    pub key_fingerprint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionInfo {
    pub channel: String,
    pub rate: f64,
    pub seed: u64,
    pub edit_raw: u64,
    /// Achieved fractional edit distance, `edit_raw / (2 n)`.
    pub edit_fraction: f64,
    pub corrupted_len: usize,
}

/// Metadata written next to every container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordSidecar {
    pub build: String,
    pub config: ExperimentConfig,
    pub code: CodeInfo,
    pub corruption: Option<CorruptionInfo>,
}

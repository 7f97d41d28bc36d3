use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// What a run did: enough to replay it and to check the replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Space-separated subcommand path, e.g. `gallery build`.
    pub subcommand: String,
    /// Every option after defaults, config file and flags were applied.
    pub config: Map<String, Value>,
    pub seed: u64,
    pub inputs: Vec<Artifact>,
    /// Files under the output directory, relative to it, sorted.
    pub outputs: Vec<Artifact>,
    pub created_unix: u64,
}

impl RunManifest {
    /// Hashes `inputs` and everything under `out`, then writes the
    /// manifest into `out`.
    pub fn write(
        subcommand: &str,
        config: Map<String, Value>,
        seed: u64,
        inputs: &[&Path],
        out: &Path,
    ) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            tool: "lve".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            config,
            seed,
            inputs: inputs
                .iter()
                .map(|p| Ok(Artifact { path: p.display().to_string(), sha256: digest_path(p)? }))
                .collect::<Result<_, CliError>>()?,
            outputs: files_under(out)?
                .into_iter()
                .map(|rel| Ok(Artifact { sha256: digest_file(&out.join(&rel))?, path: rel_string(&rel) }))
                .collect::<Result<_, CliError>>()?,
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(lve_core::Error::from)? + "\n";
        let path = out.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<RunManifest, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{} is not a run manifest: {e}", path.display())))
    }
}

pub fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(lve_core::Error::Io { path: path.to_path_buf(), source: e })
}

fn rel_string(rel: &Path) -> String {
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

/// A file's digest, or for a directory the digest of its sorted
/// `path<TAB>digest` listing. Manifests inside directories are left out
/// because they carry timestamps.
pub fn digest_path(path: &Path) -> Result<String, CliError> {
    if !path.is_dir() {
        return digest_file(path);
    }
    let mut listing = String::new();
    for rel in files_under(path)? {
        listing.push_str(&format!("{}\t{}\n", rel_string(&rel), digest_file(&path.join(&rel))?));
    }
    Ok(hex(&Sha256::digest(listing.as_bytes())))
}

/// Files below `root`, relative and sorted, without any manifest files.
fn files_under(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    let mut stack = vec![PathBuf::new()];
    while let Some(rel) = stack.pop() {
        let dir = root.join(&rel);
        for entry in std::fs::read_dir(&dir).map_err(|e| io_error(&dir, e))? {
            let entry = entry.map_err(|e| io_error(&dir, e))?;
            let child = rel.join(entry.file_name());
            if entry.path().is_dir() {
                stack.push(child);
            } else if entry.file_name() != MANIFEST_FILE {
                out.push(child);
            }
        }
    }
    out.sort();
    Ok(out)
}

//! Artifact persistence: line-delimited transcripts and the digest manifest.
//!
//! Transcripts are append-only JSON lines, one record per transcript, with a
//! schema version field; a run can be re-fit from transcript files alone.
//! The manifest lists every output file with a SHA-256 digest so a replay
//! can verify artifact integrity.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use econprobe_core::subjects::{Transcript, TRANSCRIPT_SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema mismatch in {path}: found version {found}, supported {supported}")]
    SchemaMismatch { path: PathBuf, found: u32, supported: u32 },
    #[error("malformed record in {path} line {line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("digest mismatch for {path}")]
    DigestMismatch { path: PathBuf },
    #[error("manifest missing or malformed: {0}")]
    BadManifest(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

/// Write transcripts as JSON lines, one per record.
pub fn write_transcripts(path: &Path, transcripts: &[Transcript]) -> Result<(), StoreError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    for transcript in transcripts {
        let line = serde_json::to_string(transcript)
            .map_err(|e| StoreError::Malformed {
                path: path.to_path_buf(),
                line: 0,
                message: e.to_string(),
            })?;
        writeln!(file, "{line}").map_err(io_err(path))?;
    }
    Ok(())
}

/// Read a transcript file, rejecting unknown schema versions.
pub fn read_transcripts(path: &Path) -> Result<Vec<Transcript>, StoreError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let mut transcripts = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let transcript: Transcript =
            serde_json::from_str(&line).map_err(|e| StoreError::Malformed {
                path: path.to_path_buf(),
                line: index + 1,
                message: e.to_string(),
            })?;
        if transcript.schema_version != TRANSCRIPT_SCHEMA_VERSION {
            return Err(StoreError::SchemaMismatch {
                path: path.to_path_buf(),
                found: transcript.schema_version,
                supported: TRANSCRIPT_SCHEMA_VERSION,
            });
        }
        transcripts.push(transcript);
    }
    Ok(transcripts)
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> Result<String, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(digest_bytes(&bytes))
}

/// Run metadata at the top of the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestMeta {
    pub config_hash: String,
    pub master_seed: u64,
    pub created_unix: u64,
    pub version: String,
}

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Write the manifest: header lines, then one `sha256 <hex> <relpath>` line
/// per artifact.
pub fn write_manifest(
    out_dir: &Path,
    meta: &ManifestMeta,
    files: &[PathBuf],
) -> Result<(), StoreError> {
    let mut lines = vec![
        "econprobe manifest v1".to_string(),
        format!("version {}", meta.version),
        format!("config_hash {}", meta.config_hash),
        format!("master_seed {}", meta.master_seed),
        format!("created_unix {}", meta.created_unix),
    ];
    let mut sorted: Vec<&PathBuf> = files.iter().collect();
    sorted.sort();
    for file in sorted {
        let digest = digest_file(&out_dir.join(file))?;
        lines.push(format!("sha256 {digest} {}", file.display()));
    }
    let path = out_dir.join(MANIFEST_FILE);
    fs::write(&path, lines.join("\n") + "\n").map_err(io_err(&path))?;
    Ok(())
}

/// Verify every artifact digest recorded in a run's manifest.
pub fn verify_manifest(out_dir: &Path) -> Result<ManifestMeta, StoreError> {
    let path = out_dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let mut lines = text.lines();
    if lines.next() != Some("econprobe manifest v1") {
        return Err(StoreError::BadManifest("unknown header".into()));
    }
    let mut meta = ManifestMeta {
        config_hash: String::new(),
        master_seed: 0,
        created_unix: 0,
        version: String::new(),
    };
    for line in lines {
        let mut parts = line.splitn(3, ' ');
        match (parts.next(), parts.next(), parts.next()) {
            (Some("version"), Some(v), None) => meta.version = v.to_string(),
            (Some("config_hash"), Some(v), None) => meta.config_hash = v.to_string(),
            (Some("master_seed"), Some(v), None) => {
                meta.master_seed =
                    v.parse().map_err(|_| StoreError::BadManifest(line.to_string()))?;
            }
            (Some("created_unix"), Some(v), None) => {
                meta.created_unix =
                    v.parse().map_err(|_| StoreError::BadManifest(line.to_string()))?;
            }
            (Some("sha256"), Some(digest), Some(rel)) => {
                let file = out_dir.join(rel);
                if digest_file(&file)? != digest {
                    return Err(StoreError::DigestMismatch { path: file });
                }
            }
            _ => return Err(StoreError::BadManifest(line.to_string())),
        }
    }
    Ok(meta)
}

/// Write a table of rows as tab-separated text with a header.
pub fn write_tsv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), StoreError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(path))?;
    }
    let mut out = String::new();
    out.push_str(&header.join("\t"));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

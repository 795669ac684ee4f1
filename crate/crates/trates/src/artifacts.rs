//! Artifact files, the config digest and the output-directory lock.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Identity of everything that feeds the cached artifacts: data, metadata, model and backend.
/// The run seed is recorded but not digested, since features do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_digest: String,
    pub dataset_digest: String,
    pub metadata_digest: String,
    pub model_id: String,
    pub backend: String,
    pub seed: u64,
    pub crate_version: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path).with_context(|| format!("reading {}", path.display()))?))
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig, dataset_digest: &str) -> Result<Self> {
        let metadata_digest = file_digest(&cfg.dataset.metadata)?;
        let latent = match &cfg.llm.mock_latent {
            Some(p) => file_digest(p)?,
            None => String::new(),
        };
        let backend = format!("{:?}", cfg.llm.backend).to_lowercase();
        let identity = serde_json::json!({
            "dataset": dataset_digest,
            "metadata": metadata_digest,
            "model_id": cfg.llm.model_id,
            "backend": backend,
            "mock_seed": cfg.llm.mock_seed,
            "mock_latent": latent,
            "on_unparseable": cfg.run.on_unparseable,
        });
        Ok(Manifest {
            config_digest: sha256_hex(identity.to_string().as_bytes()),
            dataset_digest: dataset_digest.to_string(),
            metadata_digest,
            model_id: cfg.llm.model_id.clone(),
            backend,
            seed: cfg.run.seed,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

/// A JSON artifact: manifest plus payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub manifest: Manifest,
    pub payload: T,
}

/// Writes via a temporary file and rename, so readers never see half a file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().context("artifact path has no parent")?;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = dir.join(format!(".{}.tmp", path.file_name().unwrap().to_string_lossy()));
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, manifest: &Manifest, payload: &T) -> Result<()> {
    let stamped = Stamped {
        manifest: manifest.clone(),
        payload,
    };
    let mut bytes = serde_json::to_vec_pretty(&stamped)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Reads a stamped artifact. A different config digest is an error unless `allow_mixed`.
pub fn read_json<T: DeserializeOwned>(path: &Path, expected: &Manifest, allow_mixed: bool) -> Result<T> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let stamped: Stamped<T> = serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?;
    check_digest(path, &stamped.manifest.config_digest, expected, allow_mixed)?;
    Ok(stamped.payload)
}

pub fn check_digest(path: &Path, found: &str, expected: &Manifest, allow_mixed: bool) -> Result<()> {
    if found != expected.config_digest {
        if allow_mixed {
            log::warn!("{} has config digest {found}, current is {}", path.display(), expected.config_digest);
        } else {
            bail!(
                "{} was produced under config digest {found}, but the current config has {}; \
                 rerun the producing command or pass --allow-mixed",
                path.display(),
                expected.config_digest
            );
        }
    }
    Ok(())
}

/// Writes a CSV whose first line is a `#` comment carrying the digest and seed.
pub fn write_csv(path: &Path, manifest: &Manifest, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = format!("# config_digest={} seed={}\n", manifest.config_digest, manifest.seed).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    write_atomic(path, &buf)
}

pub fn write_text(path: &Path, manifest: &Manifest, body: &str) -> Result<()> {
    let text = format!("<!-- config_digest={} seed={} -->\n{body}", manifest.config_digest, manifest.seed);
    write_atomic(path, text.as_bytes())
}

/// Moves `path` to `archive_dir/<stem>.<n>.<ext>` with the first unused `n`.
pub fn archive(path: &Path, archive_dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(archive_dir)?;
    let stem = path.file_stem().unwrap().to_string_lossy();
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_default();
    for n in 1.. {
        let target = archive_dir.join(format!("{stem}.{n}.{ext}"));
        if !target.exists() {
            std::fs::rename(path, &target)?;
            return Ok(target);
        }
    }
    unreachable!()
}

/// Exclusive hold on an output directory; removed on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(output: &Path) -> Result<Self> {
        std::fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
        let path = output.join("trates.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(OutputLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                let holder = std::fs::read_to_string(&path).unwrap_or_default();
                bail!(
                    "{} is locked by process {} ({}); if no run is active, delete the lock file",
                    output.display(),
                    holder.trim(),
                    path.display()
                )
            }
            Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

/// File-system-safe form of a model id or method name.
pub fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

//! Gateway selection from the configuration.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use trates_core::llm::{CompletionRequest, Gateway, LlmError, MockLlm};

use crate::cache::{CachedGateway, DiskCache};
use crate::config::{Backend, LlmConfig};
use crate::http::{HttpConfig, HttpGateway};

pub enum AnyGateway {
    Http(HttpGateway),
    Mock(MockLlm),
}

impl Gateway for AnyGateway {
    fn complete(&self, request: &CompletionRequest) -> Result<String, LlmError> {
        match self {
            AnyGateway::Http(g) => g.complete(request),
            AnyGateway::Mock(g) => g.complete(request),
        }
    }
}

/// `essay_id,latent` rows.
pub fn read_latents(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let id = row.get(0).unwrap_or("").to_string();
        let v: f64 = row.get(1).unwrap_or("").trim().parse().with_context(|| format!("{}: latent for {id}", path.display()))?;
        out.insert(id, v);
    }
    Ok(out)
}

pub fn build(cfg: &LlmConfig) -> Result<CachedGateway<AnyGateway>> {
    let inner = match cfg.backend {
        Backend::Http => AnyGateway::Http(HttpGateway::new(HttpConfig::from_env(
            cfg.max_retries,
            Duration::from_millis(cfg.backoff_ms),
            Duration::from_secs(cfg.timeout_secs),
        )?)),
        Backend::Mock => {
            let mut m = MockLlm::new(cfg.mock_seed);
            if let Some(p) = &cfg.mock_latent {
                m = m.with_planted(read_latents(p)?);
            }
            AnyGateway::Mock(m)
        }
    };
    Ok(CachedGateway::new(inner, DiskCache::new(&cfg.cache_dir)))
}

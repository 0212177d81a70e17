//! On-disk family cache: a JSON header identifying how the family was built,
//! checksums, and the effect matrices with their costs.

use super::family::{BuildOptions, EffectFamily, EffectOperator, Provenance};
use crate::error::{Error, Result};
use crate::qmatrix::{HermitianMatrix, MatrixFile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const CACHE_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheHeader {
    pub format: u32,
    pub tool_version: String,
    pub gate_set_hash: String,
    pub n: usize,
    pub budget: u32,
    pub options: BuildOptions,
    /// Labels of generators added on top of the enumerated family.
    #[serde(default)]
    pub extras: Vec<String>,
}

impl CacheHeader {
    pub fn new(gate_set_hash: String, n: usize, budget: u32, options: BuildOptions, extras: Vec<String>) -> Self {
        Self { format: CACHE_FORMAT, tool_version: env!("CARGO_PKG_VERSION").into(), gate_set_hash, n, budget, options, extras }
    }

    /// Short stable tag usable in file names.
    pub fn tag(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("serializable"))[..16].to_string()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CachedEffect {
    cost: u32,
    provenance: Provenance,
    matrix: MatrixFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CacheFile {
    header: CacheHeader,
    header_hash: String,
    payload_hash: String,
    effects: Vec<CachedEffect>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn save_family_cache(path: impl AsRef<Path>, header: &CacheHeader, f: &EffectFamily) -> Result<()> {
    let effects: Vec<CachedEffect> = f
        .effects()
        .iter()
        .map(|e| CachedEffect { cost: e.cost, provenance: e.provenance.clone(), matrix: MatrixFile::from(e.m()) })
        .collect();
    let file = CacheFile {
        header: header.clone(),
        header_hash: sha256_hex(&serde_json::to_vec(header)?),
        payload_hash: sha256_hex(&serde_json::to_vec(&effects)?),
        effects,
    };
    if let Some(dir) = path.as_ref().parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_vec(&file)?)?;
    Ok(())
}

/// Header of a cache file, after checking it against its recorded hash.
pub fn read_cache_header(path: impl AsRef<Path>) -> Result<CacheHeader> {
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(path)?).map_err(|e| Error::Cache(format!("unreadable: {e}")))?;
    let header: CacheHeader = serde_json::from_value(v["header"].clone()).map_err(|e| Error::Cache(format!("bad header: {e}")))?;
    if Some(sha256_hex(&serde_json::to_vec(&header)?).as_str()) != v["header_hash"].as_str() {
        return Err(Error::Cache("header hash mismatch".into()));
    }
    Ok(header)
}

/// Loads a cache, rejecting it unless the header equals `expected` and both
/// checksums verify.
pub fn load_family_cache(path: impl AsRef<Path>, expected: &CacheHeader) -> Result<EffectFamily> {
    let bytes = std::fs::read(path)?;
    let file: CacheFile = serde_json::from_slice(&bytes).map_err(|e| Error::Cache(format!("unreadable: {e}")))?;
    if sha256_hex(&serde_json::to_vec(&file.header)?) != file.header_hash {
        return Err(Error::Cache("header hash mismatch".into()));
    }
    if &file.header != expected {
        return Err(Error::Cache("header does not match the requested build".into()));
    }
    if sha256_hex(&serde_json::to_vec(&file.effects)?) != file.payload_hash {
        return Err(Error::Cache("payload checksum mismatch".into()));
    }
    let dim = 1usize << file.header.n;
    let effects = file
        .effects
        .into_iter()
        .map(|c| {
            Ok(EffectOperator {
                matrix: HermitianMatrix::new(c.matrix.to_matrix()?)?,
                cost: c.cost,
                provenance: c.provenance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EffectFamily::assemble(file.header.n, file.header.budget, dim, effects, file.header.options.family_cap)
}

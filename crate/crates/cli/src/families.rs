//! Built families, memoized in memory and optionally cached on disk.

use crate::config::{ExperimentConfig, ExtraEffect};
use crate::CliError;
use compdiv_core::circuits::{
    build_effect_family, load_family_cache, save_family_cache, BudgetPolynomial, BuildOptions, CacheHeader,
    EffectFamily, GateSet,
};
use compdiv_core::Error;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const CACHE_ENV: &str = "COMPDIV_CACHE";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheEvent {
    Built,
    Loaded,
    /// An existing file was rejected and rebuilt.
    Regenerated(String),
}

pub struct FamilyStore {
    pub gate_set: GateSet,
    pub poly: BudgetPolynomial,
    pub options: BuildOptions,
    pub cache_dir: Option<PathBuf>,
    memo: BTreeMap<String, EffectFamily>,
    pub events: Vec<(String, CacheEvent)>,
}

/// Cache directory precedence: environment, then flag, then config.
pub fn resolve_cache_dir(flag: Option<&Path>, config: &ExperimentConfig) -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .or_else(|| flag.map(Path::to_path_buf))
        .or_else(|| config.outputs.cache_dir.clone())
}

impl FamilyStore {
    pub fn new(gate_set: GateSet, poly: BudgetPolynomial, options: BuildOptions, cache_dir: Option<PathBuf>) -> Self {
        Self { gate_set, poly, options, cache_dir, memo: BTreeMap::new(), events: vec![] }
    }

    pub fn from_config(c: &ExperimentConfig, cache_dir: Option<PathBuf>) -> Result<Self, CliError> {
        Ok(Self::new(c.gate_set.build()?, c.poly(), c.build_options(), cache_dir))
    }

    pub fn header(&self, n: usize, extras: &[ExtraEffect]) -> CacheHeader {
        CacheHeader::new(
            self.gate_set.hash(),
            n,
            self.poly.eval(n),
            self.options.clone(),
            extras.iter().map(ExtraEffect::label).collect(),
        )
    }

    pub fn cache_path(&self, header: &CacheHeader) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(format!("family-n{}-{}.json", header.n, header.tag())))
    }

    fn build(&self, n: usize, extras: &[ExtraEffect]) -> Result<EffectFamily, CliError> {
        let f = build_effect_family(n, &self.gate_set, &self.poly, &self.options)?;
        if extras.is_empty() {
            return Ok(f);
        }
        Ok(f.with_extra(extras.iter().map(ExtraEffect::effect).collect(), self.options.family_cap)?)
    }

    pub fn family(&mut self, n: usize, extras: &[ExtraEffect]) -> Result<EffectFamily, CliError> {
        let header = self.header(n, extras);
        let key = header.tag();
        if let Some(f) = self.memo.get(&key) {
            return Ok(f.clone());
        }
        let f = match self.cache_path(&header) {
            None => self.build(n, extras)?,
            Some(path) => match load_family_cache(&path, &header) {
                Ok(f) => {
                    self.events.push((key.clone(), CacheEvent::Loaded));
                    f
                }
                Err(e) => {
                    let f = self.build(n, extras)?;
                    save_family_cache(&path, &header, &f)?;
                    let event = match e {
                        Error::Io(ref io) if io.kind() == std::io::ErrorKind::NotFound => CacheEvent::Built,
                        other => CacheEvent::Regenerated(other.to_string()),
                    };
                    self.events.push((key.clone(), event));
                    f
                }
            },
        };
        self.memo.insert(key, f.clone());
        Ok(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store(dir: &Path) -> FamilyStore {
        FamilyStore::from_config(&ExperimentConfig::default(), Some(dir.to_path_buf())).unwrap()
    }

    #[test]
    fn cache_is_written_then_reused() {
        let dir = tempfile::tempdir().unwrap();
        let a = store(dir.path()).family(1, &[]).unwrap();
        let mut s = store(dir.path());
        let b = s.family(1, &[]).unwrap();
        assert_eq!(s.events[0].1, CacheEvent::Loaded);
        assert_eq!(a.len(), b.len());
    }

    #[test]
    fn corrupted_cache_is_regenerated() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = store(dir.path());
        s.family(1, &[]).unwrap();
        let path = s.cache_path(&s.header(1, &[])).unwrap();
        let text = std::fs::read_to_string(&path).unwrap().replacen("\"n\":1", "\"n\":3", 1);
        std::fs::write(&path, text).unwrap();
        let mut s = store(dir.path());
        s.family(1, &[]).unwrap();
        assert!(matches!(&s.events[0].1, CacheEvent::Regenerated(m) if m.contains("header hash")));
        let mut s = store(dir.path());
        s.family(1, &[]).unwrap();
        assert_eq!(s.events[0].1, CacheEvent::Loaded);
    }

    #[test]
    fn extras_get_their_own_cache_entry() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = store(dir.path());
        let plain = s.family(2, &[]).unwrap();
        let bell = s.family(2, &[ExtraEffect::Bell { n: 1 }]).unwrap();
        assert_ne!(s.header(2, &[]), s.header(2, &[ExtraEffect::Bell { n: 1 }]));
        assert!(bell.len() > plain.len());
    }
}

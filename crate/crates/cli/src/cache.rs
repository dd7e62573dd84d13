//! On-disk cache of transition matrices keyed by profile and build settings.

use std::path::{Path, PathBuf};

use knudsen_core::operator::{build_matrix, SamplingMode};
use knudsen_core::{FamilySpec, Profile, TransitionMatrix};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "KNUDSEN_CACHE_DIR";

/// Bumped whenever the matrix construction changes its output.
const CACHE_VERSION: u32 = 1;

#[derive(Serialize)]
struct Key<'a> {
    version: u32,
    family: &'a FamilySpec,
    m: usize,
    n: usize,
    sampling: SamplingMode,
}

#[derive(Debug, Clone, Default)]
pub struct MatrixCache {
    dir: Option<PathBuf>,
}

impl MatrixCache {
    /// Uses `dir` if given, else `$KNUDSEN_CACHE_DIR`, else no caching.
    pub fn new(dir: Option<PathBuf>) -> Self {
        let dir = dir.or_else(|| std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        MatrixCache { dir }
    }

    pub fn path_for(&self, family: &FamilySpec, m: usize, n: usize, sampling: SamplingMode) -> Option<PathBuf> {
        let key = Key { version: CACHE_VERSION, family, m, n, sampling };
        let json = serde_json::to_vec(&key).expect("cache key serializes");
        let digest = hex::encode(Sha256::digest(&json));
        self.dir.as_ref().map(|d| d.join(format!("{}-{}.bin", family.name(), &digest[..24])))
    }

    /// Loads a matching cached matrix or builds and stores a new one.
    /// Returns the matrix and whether it came from the cache.
    pub fn get_or_build(
        &self,
        profile: &Profile,
        m: usize,
        n: usize,
        sampling: SamplingMode,
    ) -> Result<(TransitionMatrix, bool), CliError> {
        let family = profile.family();
        let Some(path) = self.path_for(family, m, n, sampling) else {
            return Ok((build_matrix(profile, m, n, sampling)?, false));
        };
        if path.exists() {
            match TransitionMatrix::read_binary(&path) {
                Ok(p) => {
                    let meta = p.metadata();
                    if meta.family.as_ref() == Some(family) && meta.m == m && meta.n == n && meta.sampling == sampling {
                        log::debug!("cache hit {}", path.display());
                        return Ok((p, true));
                    }
                    log::warn!("cached matrix {} has mismatched metadata; rebuilding", path.display());
                }
                Err(e) => log::warn!("ignoring unreadable cached matrix {}: {e}", path.display()),
            }
        }
        let p = build_matrix(profile, m, n, sampling)?;
        self.store(&path, &p)?;
        Ok((p, false))
    }

    fn store(&self, path: &Path, p: &TransitionMatrix) -> Result<(), CliError> {
        let dir = path.parent().expect("cache path has a directory");
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        // Concurrent sweeps may race on the same key; the rename keeps
        // readers from seeing a partial file.
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        p.write_binary(&tmp)?;
        std::fs::rename(&tmp, path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(())
    }
}

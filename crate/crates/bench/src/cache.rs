//! On-disk cache of reference solutions keyed by a SHA-256 content hash.
//!
//! Floats are stored as the hex of their bit patterns so a cache hit gives
//! back exactly the vectors that were computed.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::{Array1, ArrayView1, ArrayView2};
use sha2::{Digest, Sha256};
use spgm::reference::ReferenceSolution;

use crate::error::{BenchError, Result};

/// Feeds labelled numeric content into a SHA-256 digest.
#[derive(Default)]
pub struct ContentHasher(Sha256);

impl ContentHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tag(&mut self, tag: &str) -> &mut Self {
        self.0.update((tag.len() as u64).to_le_bytes());
        self.0.update(tag.as_bytes());
        self
    }

    pub fn scalar(&mut self, x: f64) -> &mut Self {
        self.0.update(x.to_bits().to_le_bytes());
        self
    }

    pub fn count(&mut self, x: u64) -> &mut Self {
        self.0.update(x.to_le_bytes());
        self
    }

    pub fn vector(&mut self, v: ArrayView1<f64>) -> &mut Self {
        self.count(v.len() as u64);
        for &x in v {
            self.scalar(x);
        }
        self
    }

    pub fn matrix(&mut self, a: ArrayView2<f64>) -> &mut Self {
        self.count(a.nrows() as u64).count(a.ncols() as u64);
        for &x in a {
            self.scalar(x);
        }
        self
    }

    pub fn finish(&self) -> String {
        hex::encode(self.0.clone().finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
}

impl CacheStatus {
    pub fn name(self) -> &'static str {
        match self {
            CacheStatus::Hit => "hit",
            CacheStatus::Miss => "miss",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

fn key_locks() -> &'static Mutex<HashMap<PathBuf, Arc<Mutex<()>>>> {
    static LOCKS: OnceLock<Mutex<HashMap<PathBuf, Arc<Mutex<()>>>>> = OnceLock::new();
    LOCKS.get_or_init(Default::default)
}

fn bits(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

fn from_bits(s: &str) -> Option<f64> {
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

fn vector_bits(v: &Array1<f64>) -> String {
    v.iter().map(|&x| bits(x)).collect::<Vec<_>>().join(",")
}

fn parse_vector(s: &str) -> Option<Array1<f64>> {
    if s.is_empty() {
        return Some(Array1::zeros(0));
    }
    s.split(',').map(from_bits).collect::<Option<Vec<_>>>().map(Array1::from)
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ReferenceCache { dir: dir.into() }
    }

    /// `$SPGM_CACHE_DIR`, or `spgm-cache` under the system temporary directory.
    pub fn from_env() -> Self {
        let dir = std::env::var_os("SPGM_CACHE_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("spgm-cache"));
        Self::new(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.ref"))
    }

    /// The cached solution for `hash`, or the result of `compute`, which is
    /// then stored. Concurrent callers with the same key wait for a single
    /// computation.
    pub fn get_or_compute(
        &self,
        hash: &str,
        compute: impl FnOnce() -> Result<ReferenceSolution>,
    ) -> Result<(ReferenceSolution, CacheStatus)> {
        let path = self.path(hash);
        let lock = key_locks().lock().expect("cache lock table poisoned").entry(path.clone()).or_default().clone();
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        if path.exists() {
            return Ok((self.load(&path)?, CacheStatus::Hit));
        }
        let solution = compute()?;
        self.store(&path, &solution)?;
        Ok((solution, CacheStatus::Miss))
    }

    fn load(&self, path: &Path) -> Result<ReferenceSolution> {
        let err = |message: String| BenchError::Cache {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut fields = HashMap::new();
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                fields.insert(k.trim(), v.trim());
            }
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| err(format!("missing `{k}`")));
        let scalar = |k: &str| get(k).and_then(|v| from_bits(v).ok_or_else(|| err(format!("bad `{k}`"))));
        let vector = |k: &str| get(k).and_then(|v| parse_vector(v).ok_or_else(|| err(format!("bad `{k}`"))));
        Ok(ReferenceSolution {
            w: vector("w")?,
            iterations: get("iterations")?.parse().map_err(|_| err("bad `iterations`".into()))?,
            gradient_mapping: scalar("gradient_mapping")?,
            prox_certificate: scalar("prox_certificate")?,
            dual: vector("dual")?,
        })
    }

    fn store(&self, path: &Path, s: &ReferenceSolution) -> Result<()> {
        let err = |e: std::io::Error| BenchError::Cache {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        fs::create_dir_all(&self.dir).map_err(err)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let mut f = fs::File::create(&tmp).map_err(err)?;
        writeln!(f, "iterations = {}", s.iterations).map_err(err)?;
        writeln!(f, "gradient_mapping = {}", bits(s.gradient_mapping)).map_err(err)?;
        writeln!(f, "prox_certificate = {}", bits(s.prox_certificate)).map_err(err)?;
        writeln!(f, "w = {}", vector_bits(&s.w)).map_err(err)?;
        writeln!(f, "dual = {}", vector_bits(&s.dual)).map_err(err)?;
        f.sync_all().map_err(err)?;
        fs::rename(&tmp, path).map_err(err)
    }
}

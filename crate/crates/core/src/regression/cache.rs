//! On-disk cache of predictive tables.
//!
//! A table file starts with an 8-byte magic, a format version and the
//! SHA-256 digest of its key; the key covers the sampler, the experiment
//! and the Monte Carlo setting. All numbers are little-endian.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::data::Experiment;
use super::sampler::CoefficientSampler;
use super::table::PredictiveTable;
use crate::seeding::MonteCarlo;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"RBTABLE\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct TableCache {
    dir: PathBuf,
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key<S: CoefficientSampler + ?Sized>(
        sampler: &S,
        experiment: &Experiment,
        mc: MonteCarlo,
    ) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(VERSION.to_le_bytes());
        h.update(sampler.fingerprint());
        h.update((experiment.columns as u64).to_le_bytes());
        for v in &experiment.design {
            h.update(v.to_le_bytes());
        }
        for n in &experiment.trials {
            h.update(n.to_le_bytes());
        }
        h.update(experiment.link.name().as_bytes());
        h.update((mc.n_samples as u64).to_le_bytes());
        h.update(mc.seed.to_le_bytes());
        h.update((mc.chunks as u64).to_le_bytes());
        h.finalize().into()
    }

    pub fn path_for(&self, key: &[u8; 32]) -> PathBuf {
        let name: String = key.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{name}.rbt"))
    }

    pub fn load(&self, key: &[u8; 32]) -> Result<Option<PredictiveTable>> {
        let path = self.path_for(key);
        if !path.exists() {
            return Ok(None);
        }
        decode(&fs::read(&path)?, key)
            .map(Some)
            .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))
    }

    pub fn store(&self, key: &[u8; 32], table: &PredictiveTable) -> Result<()> {
        let path = self.path_for(key);
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&encode(table, key))?;
        f.sync_all()?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn get_or_build<S, F>(
        &self,
        sampler: &S,
        experiment: &Experiment,
        mc: MonteCarlo,
        build: F,
    ) -> Result<PredictiveTable>
    where
        S: CoefficientSampler + ?Sized,
        F: FnOnce() -> Result<PredictiveTable>,
    {
        let key = Self::key(sampler, experiment, mc);
        if let Some(t) = self.load(&key)? {
            return Ok(t);
        }
        let t = build()?;
        self.store(&key, &t)?;
        Ok(t)
    }
}

fn encode(t: &PredictiveTable, key: &[u8; 32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 16 * t.masses.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(key);
    out.extend_from_slice(&(t.trials.len() as u32).to_le_bytes());
    for n in &t.trials {
        out.extend_from_slice(&n.to_le_bytes());
    }
    out.extend_from_slice(&(t.n_samples as u64).to_le_bytes());
    out.extend_from_slice(&t.seed.to_le_bytes());
    out.extend_from_slice(&t.total_std_error.to_le_bytes());
    out.extend_from_slice(&(t.masses.len() as u64).to_le_bytes());
    for v in t.masses.iter().chain(&t.std_errors) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if self.buf.len() < n {
            return Err("truncated file".into());
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn decode(buf: &[u8], key: &[u8; 32]) -> std::result::Result<PredictiveTable, String> {
    let mut r = Reader { buf };
    if r.take(8)? != MAGIC {
        return Err("not a table file".into());
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    if r.take(32)? != key {
        return Err("key digest mismatch".into());
    }
    let m = r.u32()? as usize;
    let trials = (0..m)
        .map(|_| r.u32())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let n_samples = r.u64()? as usize;
    let seed = r.u64()?;
    let total_std_error = r.f64()?;
    let cells = r.u64()? as usize;
    let expected: usize = trials.iter().map(|&n| n as usize + 1).product();
    if cells != expected {
        return Err(format!("{cells} cells for shape {trials:?}"));
    }
    let masses = (0..cells)
        .map(|_| r.f64())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let std_errors = (0..cells)
        .map(|_| r.f64())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if !r.buf.is_empty() {
        return Err("trailing bytes".into());
    }
    Ok(PredictiveTable {
        trials,
        masses,
        std_errors,
        total_std_error,
        n_samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::sampler::DiscretePrior;
    use crate::regression::table::build_predictive_table;
    use crate::special::LinkFunction;

    #[test]
    fn round_trip_and_reuse() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TableCache::new(dir.path()).unwrap();
        let e = Experiment::new(1, vec![1.0, 0.5], vec![2, 3], LinkFunction::Logit).unwrap();
        let prior = DiscretePrior::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap();
        let mc = MonteCarlo::new(10_000, 3);
        let built = cache
            .get_or_build(&prior, &e, mc, || build_predictive_table(&prior, &e, mc))
            .unwrap();
        let reused = cache
            .get_or_build(&prior, &e, mc, || panic!("should hit the cache"))
            .unwrap();
        assert_eq!(built, reused);
    }

    #[test]
    fn corrupt_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TableCache::new(dir.path()).unwrap();
        let key = [7u8; 32];
        fs::write(cache.path_for(&key), b"RBTABLE\0garbage").unwrap();
        assert!(matches!(cache.load(&key), Err(Error::Cache(_))));
    }

    #[test]
    fn key_depends_on_seed_and_design() {
        let e = Experiment::new(1, vec![1.0], vec![2], LinkFunction::Logit).unwrap();
        let e2 = Experiment::new(1, vec![2.0], vec![2], LinkFunction::Logit).unwrap();
        let p = DiscretePrior::point_mass(vec![0.0]);
        let a = TableCache::key(&p, &e, MonteCarlo::new(10_000, 1));
        assert_ne!(a, TableCache::key(&p, &e, MonteCarlo::new(10_000, 2)));
        assert_ne!(a, TableCache::key(&p, &e2, MonteCarlo::new(10_000, 1)));
    }
}

//! Sample-size-keyed null distributions of copula distance correlation.
//!
//! Each entry holds `B_null` sorted values of `dCor(u, v)` for independent
//! uniform samples passed through the same rank transform as the test
//! residuals, so the lookup is exact for the transformed statistic. Entries
//! are built at most once per sample size, even under concurrent requests.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::Rng;

use super::dcor::{copula_ranks, dcor};
use crate::error::{Error, Result};
use crate::seed;

const MAGIC: &[u8; 8] = b"GPDCNULL";
const VERSION: u32 = 1;
pub const DEFAULT_B_NULL: usize = 1000;
pub const MIN_B_NULL: usize = 100;

type Slot = Arc<Mutex<Option<Arc<Vec<f64>>>>>;

#[derive(Debug)]
pub struct GpdcNullTable {
    b_null: usize,
    seed: u64,
    dir: Option<PathBuf>,
    entries: Mutex<HashMap<usize, Slot>>,
}

impl GpdcNullTable {
    pub fn new(b_null: usize, seed: u64) -> Result<Self> {
        if b_null < MIN_B_NULL {
            return Err(Error::Config(format!(
                "null table size {b_null} is below the minimum of {MIN_B_NULL}"
            )));
        }
        Ok(Self {
            b_null,
            seed,
            dir: None,
            entries: Mutex::new(HashMap::new()),
        })
    }

    /// Persists generated entries to, and reuses entries from, `dir`.
    pub fn with_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.dir = Some(dir.into());
        self
    }

    pub fn b_null(&self) -> usize {
        self.b_null
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sorted null statistics for sample size `n`, generating them on first use.
    pub fn get(&self, n: usize) -> Result<Arc<Vec<f64>>> {
        if n < 2 {
            return Err(Error::InsufficientSamples { n, required: 2 });
        }
        let slot = {
            let mut map = self.entries.lock().expect("null table lock poisoned");
            map.entry(n).or_default().clone()
        };
        let mut guard = slot.lock().expect("null table slot poisoned");
        if let Some(v) = guard.as_ref() {
            return Ok(v.clone());
        }
        let values = match &self.dir {
            Some(dir) => {
                let path = dir.join(file_name(n, self.b_null, self.seed));
                if path.exists() {
                    read_entry(&path, n, self.b_null, self.seed)?
                } else {
                    let v = generate(n, self.b_null, self.seed);
                    write_entry(&path, n, self.seed, &v)?;
                    v
                }
            }
            None => generate(n, self.b_null, self.seed),
        };
        let v = Arc::new(values);
        *guard = Some(v.clone());
        Ok(v)
    }

    /// Fraction of null statistics at or above `stat`.
    pub fn p_value(&self, n: usize, stat: f64) -> Result<f64> {
        let table = self.get(n)?;
        let below = table.partition_point(|v| *v < stat);
        Ok((table.len() - below) as f64 / table.len() as f64)
    }

    /// Writes every generated entry to `dir`.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let keys: Vec<usize> = {
            let map = self.entries.lock().expect("null table lock poisoned");
            let mut k: Vec<usize> = map.keys().copied().collect();
            k.sort_unstable();
            k
        };
        let mut paths = Vec::with_capacity(keys.len());
        for n in keys {
            let v = self.get(n)?;
            let path = dir.join(file_name(n, self.b_null, self.seed));
            write_entry(&path, n, self.seed, &v)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

pub fn file_name(n: usize, b_null: usize, seed: u64) -> String {
    format!("gpdc_null_n{n}_b{b_null}_s{seed}.bin")
}

/// Builds the entries for `sample_sizes` eagerly.
pub fn build_gpdc_null_table(sample_sizes: &[usize], b_null: usize, seed: u64) -> Result<GpdcNullTable> {
    let table = GpdcNullTable::new(b_null, seed)?;
    for &n in sample_sizes {
        table.get(n)?;
    }
    Ok(table)
}

fn generate(n: usize, b_null: usize, master: u64) -> Vec<f64> {
    let mut out: Vec<f64> = (0..b_null)
        .map(|b| {
            let mut rng = seed::rng(seed::derive(master, &[n as u64, b as u64]));
            let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let (u, v) = (
                copula_ranks(&u).expect("continuous"),
                copula_ranks(&v).expect("continuous"),
            );
            dcor(&u, &v).expect("nondegenerate ranks")
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn write_entry(path: &Path, n: usize, seed: u64, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(36 + 8 * values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
    buf.extend_from_slice(&seed.to_le_bytes());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    // Write-then-rename keeps concurrent readers from seeing partial files.
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_entry(path: &Path, n: usize, b_null: usize, seed: u64) -> Result<Vec<f64>> {
    let bad = |m: &str| Error::NullTableFormat {
        path: path.to_path_buf(),
        message: m.to_string(),
    };
    let mut buf = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    if buf.len() < 36 || &buf[..8] != MAGIC {
        return Err(bad("missing magic header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
    if u32_at(8) != VERSION {
        return Err(bad("unsupported version"));
    }
    if u64_at(12) != n as u64 || u64_at(20) != b_null as u64 || u64_at(28) != seed {
        return Err(bad("header does not match the requested key"));
    }
    if buf.len() != 36 + 8 * b_null {
        return Err(bad("payload length does not match header"));
    }
    let values: Vec<f64> = buf[36..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(bad("values are not sorted"));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::quantile_sorted;

    #[test]
    fn percentile_in_unit_interval_and_sorted() {
        let t = build_gpdc_null_table(&[100], 1000, 3).unwrap();
        let v = t.get(100).unwrap();
        assert_eq!(v.len(), 1000);
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        let q95 = quantile_sorted(&v, 0.95);
        assert!(q95 > 0.0 && q95 < 1.0);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = build_gpdc_null_table(&[60], 200, 9).unwrap();
        let b = build_gpdc_null_table(&[60], 200, 9).unwrap();
        assert_eq!(*a.get(60).unwrap(), *b.get(60).unwrap());
        let c = build_gpdc_null_table(&[60], 200, 10).unwrap();
        assert_ne!(*a.get(60).unwrap(), *c.get(60).unwrap());
    }

    #[test]
    fn sidecar_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let t = GpdcNullTable::new(150, 4).unwrap().with_dir(dir.path());
        let v = t.get(40).unwrap();
        let path = dir.path().join(file_name(40, 150, 4));
        assert!(path.exists());
        assert_eq!(read_entry(&path, 40, 150, 4).unwrap(), *v);
        // A fresh table picks the file up instead of regenerating.
        let t2 = GpdcNullTable::new(150, 4).unwrap().with_dir(dir.path());
        assert_eq!(*t2.get(40).unwrap(), *v);
        assert!(matches!(
            read_entry(&path, 41, 150, 4),
            Err(Error::NullTableFormat { .. })
        ));
        std::fs::write(&path, b"junk").unwrap();
        assert!(matches!(
            read_entry(&path, 40, 150, 4),
            Err(Error::NullTableFormat { .. })
        ));
    }

    #[test]
    fn concurrent_requests_share_one_entry() {
        let t = GpdcNullTable::new(100, 5).unwrap();
        let got: Vec<Arc<Vec<f64>>> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..4).map(|_| s.spawn(|| t.get(30).unwrap())).collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(got.windows(2).all(|w| Arc::ptr_eq(&w[0], &w[1])));
    }

    #[test]
    fn p_value_is_tail_fraction() {
        let t = GpdcNullTable::new(100, 6).unwrap();
        assert_eq!(t.p_value(50, -1.0).unwrap(), 1.0);
        assert_eq!(t.p_value(50, 2.0).unwrap(), 0.0);
        let v = t.get(50).unwrap();
        let p = t.p_value(50, v[90]).unwrap();
        assert!((p - 0.10).abs() <= 0.011, "{p}");
    }

    #[test]
    fn small_tables_rejected() {
        assert!(matches!(GpdcNullTable::new(99, 0), Err(Error::Config(_))));
    }
}

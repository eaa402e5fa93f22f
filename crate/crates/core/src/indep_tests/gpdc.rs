//! GP regression residuals tested with copula distance correlation.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use super::dcor::{copula_ranks, dcor};
use super::gp::{self, GpConfig, SqDist};
use super::{CiOutcome, CiQuery, CondIndTest, GpdcNullTable};
use crate::dataset::{build_lagged_arrays, LaggedSampleArrays, LaggedVariable, TimeSeriesDataset};
use crate::error::Result;

/// Entries kept before the residual cache is flushed.
const CACHE_CAPACITY: usize = 8192;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ResidualKey {
    data: u64,
    tau_max: usize,
    target: LaggedVariable,
    conds: Vec<LaggedVariable>,
}

/// GPDC test. Residuals depend only on `(data, target, conditions)`, so they
/// are memoized; the GP fit itself is deterministic, which keeps cached and
/// fresh results bit-identical.
#[derive(Debug)]
pub struct Gpdc {
    null: Arc<GpdcNullTable>,
    gp: GpConfig,
    cache: Mutex<HashMap<ResidualKey, Arc<Vec<f64>>>>,
}

impl Gpdc {
    pub fn new(null: Arc<GpdcNullTable>) -> Self {
        Self::with_gp_config(null, GpConfig::default())
    }

    pub fn with_gp_config(null: Arc<GpdcNullTable>, gp: GpConfig) -> Self {
        Self {
            null,
            gp,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn null_table(&self) -> &GpdcNullTable {
        &self.null
    }

    #[allow(clippy::too_many_arguments)]
    fn residual(
        &self,
        fingerprint: u64,
        target: LaggedVariable,
        conds: &[LaggedVariable],
        tau_max: usize,
        dist: &mut Option<SqDist>,
        arrays: &LaggedSampleArrays,
        use_x: bool,
    ) -> Result<Arc<Vec<f64>>> {
        let key = ResidualKey {
            data: fingerprint,
            tau_max,
            target,
            conds: conds.to_vec(),
        };
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v.clone());
        }
        let x = if use_x { &arrays.x } else { &arrays.y };
        let res = if arrays.z.is_empty() {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            x.iter().map(|v| v - m).collect()
        } else {
            let d = dist.get_or_insert_with(|| SqDist::new(&arrays.z));
            gp::fit_with_distances(x, d, &self.gp)?.residual
        };
        let res = Arc::new(res);
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_CAPACITY {
            cache.clear();
        }
        cache.insert(key, res.clone());
        Ok(res)
    }
}

impl CondIndTest for Gpdc {
    fn name(&self) -> &'static str {
        "gpdc"
    }

    fn test(&self, q: &CiQuery<'_>) -> Result<CiOutcome> {
        // Canonical condition order makes cached residuals independent of query order.
        let mut z = q.z.to_vec();
        z.sort();
        let arrays = build_lagged_arrays(q.ds, q.x, q.y, &z, q.tau_max)?;
        let fp = fingerprint(q.ds);
        let mut dist = None;
        let rx = self.residual(fp, q.x, &z, q.tau_max, &mut dist, &arrays, true)?;
        let ry = self.residual(fp, q.y, &z, q.tau_max, &mut dist, &arrays, false)?;
        score(&rx, &ry, &self.null)
    }
}

fn score(rx: &[f64], ry: &[f64], null: &GpdcNullTable) -> Result<CiOutcome> {
    let u = copula_ranks(rx)?;
    let v = copula_ranks(ry)?;
    let stat = dcor(&u, &v)?;
    Ok(CiOutcome {
        statistic: stat,
        p_value: null.p_value(rx.len(), stat)?,
        dof_or_n: rx.len(),
    })
}

/// GPDC on explicit arrays, without residual caching.
pub fn gpdc_test(arrays: &LaggedSampleArrays, null: &GpdcNullTable) -> Result<CiOutcome> {
    gpdc_test_with(arrays, null, &GpConfig::default())
}

pub fn gpdc_test_with(arrays: &LaggedSampleArrays, null: &GpdcNullTable, cfg: &GpConfig) -> Result<CiOutcome> {
    let (rx, ry) = if arrays.z.is_empty() {
        (
            gp::gp_regress_residuals(&arrays.x, &[])?,
            gp::gp_regress_residuals(&arrays.y, &[])?,
        )
    } else {
        let d = SqDist::new(&arrays.z);
        (
            gp::fit_with_distances(&arrays.x, &d, cfg)?.residual,
            gp::fit_with_distances(&arrays.y, &d, cfg)?.residual,
        )
    };
    score(&rx, &ry, null)
}

fn fingerprint(ds: &TimeSeriesDataset) -> u64 {
    let mut h = DefaultHasher::new();
    ds.len_t().hash(&mut h);
    ds.n_vars().hash(&mut h);
    for v in 0..ds.n_vars() {
        for x in ds.column(v) {
            x.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

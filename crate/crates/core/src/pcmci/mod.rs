//! PCMCI: condition selection followed by momentary conditional independence tests.
//!
//! [`run_pcmci`] selects a parent set per variable with [`pc1_select`]
//! (optionally choosing the threshold by AIC), tests every lagged link with
//! [`mci_sweep`] and optionally replaces p-values by FDR q-values.

mod aic;
mod fdr;
mod mci;
mod pc1;

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{LaggedVariable, TimeSeriesDataset};
use crate::error::{Error, Result};
use crate::graph::TimeSeriesGraph;
use crate::indep_tests::{CiOutcome, CiQuery, CondIndTest};
use crate::seed;

pub use aic::{aic_score, select_alpha_by_aic};
pub use fdr::{fdr_adjust, fdr_q_values};
pub(crate) use mci::sweep_with;
pub use mci::{mci_conditions, mci_sweep};
pub(crate) use pc1::condition_selection;
pub use pc1::{pc1_select, ParentSet};

pub const DEFAULT_AIC_GRID: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

/// Threshold of the condition-selection stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaPc {
    Fixed(f64),
    /// Chosen per target from the grid by AIC (linear test only).
    Aic(Vec<f64>),
}

impl Default for AlphaPc {
    fn default() -> Self {
        AlphaPc::Aic(DEFAULT_AIC_GRID.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscoveryConfig {
    pub tau_max: usize,
    pub alpha_pc: AlphaPc,
    pub alpha_mci: f64,
    /// Maximum number of source parents in MCI; `None` means unrestricted.
    pub p_x: Option<usize>,
    pub q_max: usize,
    /// Maximum condition dimension; `None` means `N * tau_max`.
    pub p_max: Option<usize>,
    pub fdr: bool,
    pub contemporaneous: bool,
    pub seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            tau_max: 5,
            alpha_pc: AlphaPc::default(),
            alpha_mci: 0.05,
            p_x: None,
            q_max: 1,
            p_max: None,
            fdr: false,
            contemporaneous: false,
            seed: 0,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self, ds: &TimeSeriesDataset) -> Result<()> {
        let in_unit = |a: f64| a > 0.0 && a <= 1.0;
        if self.tau_max < 1 {
            return Err(Error::Config("tau_max must be at least 1".into()));
        }
        if ds.len_t() < 2 * self.tau_max + 2 {
            return Err(Error::InsufficientSamples {
                n: ds.len_t(),
                required: 2 * self.tau_max + 2,
            });
        }
        match &self.alpha_pc {
            AlphaPc::Fixed(a) if !in_unit(*a) => {
                return Err(Error::Config(format!("alpha_pc = {a} is outside (0, 1]")))
            }
            AlphaPc::Aic(g) if g.is_empty() => return Err(Error::Contract("empty AIC grid".into())),
            AlphaPc::Aic(g) if g.iter().any(|a| !in_unit(*a)) => {
                return Err(Error::Config("AIC grid values must lie in (0, 1]".into()))
            }
            _ => {}
        }
        if !in_unit(self.alpha_mci) {
            return Err(Error::Config(format!(
                "alpha_mci = {} is outside (0, 1]",
                self.alpha_mci
            )));
        }
        if self.q_max < 1 {
            return Err(Error::Config("q_max must be at least 1".into()));
        }
        if let Some(p) = self.p_max {
            if p > ds.n_vars() * self.tau_max {
                return Err(Error::Config(format!(
                    "p_max = {p} exceeds N * tau_max = {}",
                    ds.n_vars() * self.tau_max
                )));
            }
        }
        Ok(())
    }

    pub fn p_max_for(&self, n_vars: usize) -> usize {
        self.p_max.unwrap_or(n_vars * self.tau_max)
    }
}

type MemoKey = (LaggedVariable, LaggedVariable, Vec<LaggedVariable>);

/// Runs CI tests for one dataset: canonical condition order, content-derived
/// seeds and optional memoization. Because the seed and the condition order
/// depend only on the query, a memoized outcome equals a fresh one.
pub(crate) struct Runner<'a> {
    pub ds: &'a TimeSeriesDataset,
    pub test: &'a dyn CondIndTest,
    pub tau_max: usize,
    seed: u64,
    memo: Option<Mutex<HashMap<MemoKey, CiOutcome>>>,
}

impl<'a> Runner<'a> {
    pub fn new(ds: &'a TimeSeriesDataset, test: &'a dyn CondIndTest, tau_max: usize, seed: u64, memoize: bool) -> Self {
        Self {
            ds,
            test,
            tau_max,
            seed,
            memo: memoize.then(|| Mutex::new(HashMap::new())),
        }
    }

    pub fn test(&self, x: LaggedVariable, y: LaggedVariable, z: &[LaggedVariable]) -> Result<CiOutcome> {
        let mut z = z.to_vec();
        z.sort();
        let key = (x, y, z);
        if let Some(memo) = &self.memo {
            if let Some(o) = memo.lock().expect("memo lock").get(&key) {
                return Ok(*o);
            }
        }
        let mut parts = vec![x.var as u64, x.lag as u64, y.var as u64, y.lag as u64];
        parts.extend(key.2.iter().flat_map(|v| [v.var as u64, v.lag as u64]));
        let q = CiQuery {
            ds: self.ds,
            x,
            y,
            z: &key.2,
            tau_max: self.tau_max,
            seed: seed::derive(self.seed, &parts),
        };
        let o = self.test.test(&q)?;
        if let Some(memo) = &self.memo {
            memo.lock().expect("memo lock").insert(key, o);
        }
        Ok(o)
    }
}

/// Parent sets for every variable according to `cfg.alpha_pc`.
pub fn select_parents(ds: &TimeSeriesDataset, cfg: &DiscoveryConfig, test: &dyn CondIndTest) -> Result<Vec<ParentSet>> {
    cfg.validate(ds)?;
    let runner = Runner::new(ds, test, cfg.tau_max, cfg.seed, true);
    select_parents_with(&runner, cfg)
}

pub(crate) fn select_parents_with(runner: &Runner<'_>, cfg: &DiscoveryConfig) -> Result<Vec<ParentSet>> {
    let ds = runner.ds;
    if let AlphaPc::Aic(_) = cfg.alpha_pc {
        if runner.test.name() != "parcorr" {
            return Err(Error::Config(format!(
                "AIC threshold selection needs the linear test; give a fixed alpha_pc for '{}'",
                runner.test.name()
            )));
        }
    }
    (0..ds.n_vars())
        .into_par_iter()
        .map(|j| match &cfg.alpha_pc {
            AlphaPc::Fixed(a) => pc1::pc1_with(runner, j, cfg, *a),
            AlphaPc::Aic(grid) => aic::select_with(runner, j, grid, cfg).map(|(_, ps)| ps),
        })
        .collect()
}

pub fn run_pcmci(ds: &TimeSeriesDataset, cfg: &DiscoveryConfig, test: &dyn CondIndTest) -> Result<TimeSeriesGraph> {
    cfg.validate(ds)?;
    let runner = Runner::new(ds, test, cfg.tau_max, cfg.seed, true);
    let parents = select_parents_with(&runner, cfg)?;
    let mut graph = mci::sweep_with(&runner, &parents, cfg, "pcmci")?;
    if cfg.fdr {
        fdr_adjust(&mut graph, cfg.alpha_mci);
    }
    Ok(graph)
}

/// Configuration echo stored in every graph produced from a [`DiscoveryConfig`].
pub(crate) fn config_json(cfg: &DiscoveryConfig, test: &str, method: &str) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let serde_json::Value::Object(m) = &mut v {
        m.insert("test".into(), test.into());
        m.insert("method".into(), method.into());
    }
    v
}

//! Benchmark harness: ensembles of synthetic networks and realizations, every
//! configured method run on each realization, per-link detection rates and
//! their distribution summaries split by autocorrelation class.

mod harness;
mod score;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::baselines::{self, PairwiseMeasure};
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::graph::TimeSeriesGraph;
use crate::indep_tests::{Cmi, CmiTestConfig, CondIndTest, Gpdc, GpdcNullTable, ParCorr};
use crate::pcmci::{run_pcmci, DiscoveryConfig};
use crate::synthgen::{AutocorrPool, CouplingMode};

pub use harness::{
    generate_network, network_seed, realization_seed, run_experiment, run_experiment_with, AutocorrClass,
    ExperimentResult, Failure, LinkMetrics, MethodRuntime, Summary, SummaryRow, STRONG_AUTOCORR,
};
pub use score::{score_against_truth, Outcome, ScoredLink};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Pcmci,
    Fullci,
    Bivci,
    Pairwise,
    Pc,
    Lasso,
    Mci0,
    PrewhitenedMci0,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Pcmci => "pcmci",
            MethodKind::Fullci => "fullci",
            MethodKind::Bivci => "bivci",
            MethodKind::Pairwise => "pairwise",
            MethodKind::Pc => "pc",
            MethodKind::Lasso => "lasso",
            MethodKind::Mci0 => "mci0",
            MethodKind::PrewhitenedMci0 => "prewhitened_mci0",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown method '{s}'")))
    }
}

/// Conditional independence test family. With the pairwise method,
/// `parcorr`, `dcor` and `cmi` select correlation, distance correlation and
/// mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestKind {
    Parcorr,
    Gpdc,
    Cmi,
    Dcor,
}

impl TestKind {
    pub fn name(self) -> &'static str {
        match self {
            TestKind::Parcorr => "parcorr",
            TestKind::Gpdc => "gpdc",
            TestKind::Cmi => "cmi",
            TestKind::Dcor => "dcor",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown test '{s}'")))
    }
}

/// Settings of the randomized tests, shared by all methods of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestSettings {
    pub gpdc_b_null: usize,
    pub gpdc_null_seed: u64,
    /// Directory for null-table sidecar files.
    pub gpdc_null_dir: Option<PathBuf>,
    pub cmi: CmiTestConfig,
    /// Shuffles of the pairwise distance-correlation test.
    pub dcor_b: usize,
}

impl Default for TestSettings {
    fn default() -> Self {
        Self {
            gpdc_b_null: 1000,
            gpdc_null_seed: 0,
            gpdc_null_dir: None,
            cmi: CmiTestConfig::default(),
            dcor_b: 200,
        }
    }
}

impl TestSettings {
    pub fn build(&self, kind: TestKind) -> Result<Box<dyn CondIndTest>> {
        Ok(match kind {
            TestKind::Parcorr => Box::new(ParCorr),
            TestKind::Gpdc => {
                let mut null = GpdcNullTable::new(self.gpdc_b_null, self.gpdc_null_seed)?;
                if let Some(d) = &self.gpdc_null_dir {
                    null = null.with_dir(d);
                }
                Box::new(Gpdc::new(Arc::new(null)))
            }
            TestKind::Cmi => Box::new(Cmi::new(self.cmi)),
            TestKind::Dcor => Box::new(baselines::DcorPermutation { b: self.dcor_b }),
        })
    }

    fn pairwise_measure(&self, kind: TestKind) -> Result<PairwiseMeasure> {
        match kind {
            TestKind::Parcorr => Ok(PairwiseMeasure::Corr),
            TestKind::Dcor => Ok(PairwiseMeasure::Dcor { b: self.dcor_b }),
            TestKind::Cmi => Ok(PairwiseMeasure::Mi(self.cmi)),
            TestKind::Gpdc => Err(Error::Config("pairwise supports parcorr, dcor and cmi".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub method: MethodKind,
    #[serde(default = "default_test")]
    pub test: TestKind,
    /// Name in the results; defaults to `method-test`.
    #[serde(default)]
    pub label: Option<String>,
    /// `tau_max` and `seed` are replaced by the experiment's values.
    #[serde(default)]
    pub config: DiscoveryConfig,
}

fn default_test() -> TestKind {
    TestKind::Parcorr
}

impl MethodConfig {
    pub fn new(method: MethodKind, test: TestKind, config: DiscoveryConfig) -> Self {
        Self {
            method,
            test,
            label: None,
            config,
        }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("{}-{}", self.method.name(), self.test.name()))
    }
}

/// Runs one method on one dataset.
pub fn run_method(
    method: MethodKind,
    ds: &TimeSeriesDataset,
    cfg: &DiscoveryConfig,
    test_kind: TestKind,
    test: &dyn CondIndTest,
    settings: &TestSettings,
) -> Result<TimeSeriesGraph> {
    match method {
        MethodKind::Pcmci => run_pcmci(ds, cfg, test),
        MethodKind::Fullci => baselines::fullci(ds, cfg, test),
        MethodKind::Bivci => baselines::bivci(ds, cfg, test),
        MethodKind::Pairwise => baselines::pairwise(ds, cfg, settings.pairwise_measure(test_kind)?),
        MethodKind::Pc => baselines::pc_stable_standalone(ds, cfg, test),
        MethodKind::Lasso => baselines::adaptive_lasso(ds, cfg),
        MethodKind::Mci0 => baselines::mci0_and_prewhiten(ds, cfg, test, false),
        MethodKind::PrewhitenedMci0 => baselines::mci0_and_prewhiten(ds, cfg, test, true),
    }
}

/// Full description of a benchmark run. Every combination of `n_vars` and
/// `c` is one setting with `networks` model draws of `realizations` samples each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub methods: Vec<MethodConfig>,
    pub n_vars: Vec<usize>,
    /// Cross-links per model; `None` means one per variable.
    #[serde(default)]
    pub links: Option<usize>,
    #[serde(default = "default_c")]
    pub c: Vec<f64>,
    #[serde(default = "default_mode")]
    pub mode: CouplingMode,
    #[serde(default = "default_pool")]
    pub pool: AutocorrPool,
    #[serde(default)]
    pub obs_noise_sd: f64,
    pub networks: usize,
    pub realizations: usize,
    pub t: usize,
    pub tau_max: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_transient")]
    pub transient: usize,
    #[serde(default)]
    pub tests: TestSettings,
    /// Record wall-clock runtimes; off by default so outputs are reproducible.
    #[serde(default)]
    pub timing: bool,
}

fn default_c() -> Vec<f64> {
    vec![0.287]
}

fn default_mode() -> CouplingMode {
    CouplingMode::Linear
}

fn default_pool() -> AutocorrPool {
    AutocorrPool::Mixed
}

fn default_transient() -> usize {
    crate::synthgen::DEFAULT_TRANSIENT
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods configured".into()));
        }
        if self.realizations < 1 || self.networks < 1 {
            return Err(Error::Config("networks and realizations must be at least 1".into()));
        }
        if self.n_vars.is_empty() || self.c.is_empty() {
            return Err(Error::Config("n_vars and c must be nonempty".into()));
        }
        if self.tau_max < 1 {
            return Err(Error::Config("tau_max must be at least 1".into()));
        }
        let mut labels: Vec<String> = self.methods.iter().map(MethodConfig::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("method labels must be unique".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        for m in &self.methods {
            if m.method == MethodKind::Pairwise {
                self.tests.pairwise_measure(m.test)?;
            } else if m.test == TestKind::Dcor {
                return Err(Error::Config(
                    "the dcor test is only available for the pairwise method".into(),
                ));
            }
        }
        Ok(())
    }

    /// Method configuration with the experiment-level lag and a run seed.
    pub(crate) fn discovery(&self, m: &MethodConfig, seed: u64) -> DiscoveryConfig {
        DiscoveryConfig {
            tau_max: self.tau_max,
            seed,
            ..m.config.clone()
        }
    }
}

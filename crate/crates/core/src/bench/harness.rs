//! Ensemble execution and aggregation.
//!
//! Work is split into (setting, network, realization) cells that run in
//! parallel. Every seed is derived from the master seed and the cell indices,
//! and cells are reduced in index order, so results do not depend on
//! scheduling or worker count.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::score::{score_against_truth, ScoredLink};
use super::{run_method, ExperimentConfig};
use crate::error::{Error, Result};
use crate::graph::TimeSeriesGraph;
use crate::indep_tests::CondIndTest;
use crate::seed;
use crate::stats::{lag1_autocorr, quantile_sorted};
use crate::synthgen::{
    draw_model, export_ground_truth, simulate, AutocorrPool, GroundTruthGraph, ModelParams, SyntheticModelSpec,
};

/// Pairs whose mean lag-1 autocorrelation reaches this value are strongly autocorrelated.
pub const STRONG_AUTOCORR: f64 = 0.7;

const QUANTILES: [f64; 5] = [0.01, 0.25, 0.5, 0.75, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutocorrClass {
    Weak,
    Strong,
}

impl AutocorrClass {
    pub fn of_pair(a_i: f64, a_j: f64) -> Self {
        if (a_i + a_j) / 2.0 >= STRONG_AUTOCORR {
            AutocorrClass::Strong
        } else {
            AutocorrClass::Weak
        }
    }
}

/// Detection record of one cross-link slot of one network for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub method: String,
    pub n_vars: usize,
    pub c: f64,
    pub net: usize,
    pub i: usize,
    pub tau: usize,
    pub j: usize,
    pub truth: bool,
    /// Realizations in which the link was detected.
    pub detections: usize,
    /// Realizations in which the method succeeded.
    pub runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tpr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fpr: Option<f64>,
    /// Mean absolute statistic over successful runs.
    pub mean_stat: f64,
    /// Mean over realizations of the pair's average lag-1 sample autocorrelation.
    pub autocorr: f64,
    pub autocorr_class: AutocorrClass,
}

impl LinkMetrics {
    pub fn rate(&self) -> Option<f64> {
        self.tpr.or(self.fpr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub q01: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q99: f64,
    pub mean: f64,
}

impl Summary {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = QUANTILES.map(|p| quantile_sorted(&v, p));
        Some(Self {
            n: v.len(),
            q01: q[0],
            q25: q[1],
            q50: q[2],
            q75: q[3],
            q99: q[4],
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }

    pub fn fields(&self) -> [(&'static str, f64); 6] {
        [
            ("q01", self.q01),
            ("q25", self.q25),
            ("q50", self.q50),
            ("q75", self.q75),
            ("q99", self.q99),
            ("mean", self.mean),
        ]
    }
}

/// Distribution of per-link values for one method, setting, class and metric.
/// `class` is `weak`, `strong` or `all`; `metric` is `tpr`, `fpr` or
/// `abs_stat` (mean absolute statistic of true links).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub n_vars: usize,
    pub c: f64,
    pub class: String,
    pub metric: String,
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub method: Option<String>,
    pub n_vars: usize,
    pub c: f64,
    pub net: usize,
    /// `None` when the network itself could not be drawn.
    pub realization: Option<usize>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRuntime {
    pub method: String,
    pub n_vars: usize,
    pub runs: usize,
    pub mean_ms: f64,
    pub sd_ms: f64,
}

/// One method run kept for the per-run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub n_vars: usize,
    pub c: f64,
    pub net: usize,
    pub realization: usize,
    pub graph: TimeSeriesGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub per_link: Vec<LinkMetrics>,
    pub summaries: Vec<SummaryRow>,
    pub failures: Vec<Failure>,
    /// Failed method runs per method label.
    pub failure_counts: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtimes: Option<Vec<MethodRuntime>>,
    #[serde(skip)]
    pub runs: Vec<RunRecord>,
}

impl ExperimentResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary(&self, method: &str, n_vars: usize, c: f64, class: &str, metric: &str) -> Option<&Summary> {
        self.summaries
            .iter()
            .find(|r| r.method == method && r.n_vars == n_vars && r.c == c && r.class == class && r.metric == metric)
            .and_then(|r| r.summary.as_ref())
    }

    /// Boxplot statistics, one row per method, setting, class, metric and quantile.
    pub fn plot_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(["method", "n_vars", "c", "class", "metric", "stat", "value"])
            .map_err(csv_err)?;
        for r in &self.summaries {
            if let Some(s) = &r.summary {
                for (name, v) in s.fields() {
                    w.write_record([
                        r.method.clone(),
                        r.n_vars.to_string(),
                        r.c.to_string(),
                        r.class.clone(),
                        r.metric.clone(),
                        name.to_string(),
                        v.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Degenerate(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Per-run graphs as JSON lines.
    pub fn runs_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.runs {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Degenerate(format!("csv output: {e}"))
}

/// Model-draw seed. With the mixed pool its lowest bit alternates with the
/// network index, so even networks use the low pool and odd ones the high pool.
pub fn network_seed(cfg: &ExperimentConfig, n_vars: usize, c: f64, net: usize) -> u64 {
    let s = seed::derive(cfg.seed, &[0, n_vars as u64, c.to_bits(), net as u64]);
    match cfg.pool {
        AutocorrPool::Mixed => (s & !1) | (net as u64 % 2),
        _ => s,
    }
}

pub fn realization_seed(cfg: &ExperimentConfig, n_vars: usize, c: f64, net: usize, realization: usize) -> u64 {
    seed::derive(
        cfg.seed,
        &[1, n_vars as u64, c.to_bits(), net as u64, realization as u64],
    )
}

fn method_seed(cfg: &ExperimentConfig, n_vars: usize, c: f64, net: usize, realization: usize, m: usize) -> u64 {
    seed::derive(
        cfg.seed,
        &[2, n_vars as u64, c.to_bits(), net as u64, realization as u64, m as u64],
    )
}

pub fn generate_network(cfg: &ExperimentConfig, n_vars: usize, c: f64, net: usize) -> Result<SyntheticModelSpec> {
    let params = ModelParams {
        N: n_vars,
        L: cfg.links.unwrap_or(n_vars),
        c,
        mode: cfg.mode,
        pool: cfg.pool,
        obs_noise_sd: cfg.obs_noise_sd,
    };
    draw_model(&params, network_seed(cfg, n_vars, c, net))
}

struct Network {
    n_vars: usize,
    c: f64,
    net: usize,
    spec: SyntheticModelSpec,
    truth: GroundTruthGraph,
}

struct MethodRun {
    scored: Vec<ScoredLink>,
    millis: f64,
    graph: Option<TimeSeriesGraph>,
}

struct Cell {
    network: usize,
    realization: usize,
    autocorrs: Vec<f64>,
    runs: std::result::Result<Vec<std::result::Result<MethodRun, String>>, String>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, false)
}

/// Runs the experiment; with `keep_runs` every graph is kept in `runs`.
pub fn run_experiment_with(cfg: &ExperimentConfig, keep_runs: bool) -> Result<ExperimentResult> {
    cfg.validate()?;
    match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(|| execute(cfg, keep_runs)),
        None => execute(cfg, keep_runs),
    }
}

fn execute(cfg: &ExperimentConfig, keep_runs: bool) -> Result<ExperimentResult> {
    let tests: Vec<Box<dyn CondIndTest>> = cfg
        .methods
        .iter()
        .map(|m| cfg.tests.build(m.test))
        .collect::<Result<_>>()?;
    let labels: Vec<String> = cfg.methods.iter().map(|m| m.label()).collect();
    let mut failures = vec![];
    let mut networks = vec![];
    for &n_vars in &cfg.n_vars {
        for &c in &cfg.c {
            for net in 0..cfg.networks {
                match generate_network(cfg, n_vars, c, net) {
                    Ok(spec) => {
                        let truth = export_ground_truth(&spec);
                        networks.push(Network {
                            n_vars,
                            c,
                            net,
                            spec,
                            truth,
                        });
                    }
                    Err(e) => failures.push(Failure {
                        method: None,
                        n_vars,
                        c,
                        net,
                        realization: None,
                        error: e.to_string(),
                    }),
                }
            }
        }
    }
    let cells: Vec<(usize, usize)> = (0..networks.len())
        .flat_map(|k| (0..cfg.realizations).map(move |r| (k, r)))
        .collect();
    let results: Vec<Cell> = cells
        .par_iter()
        .map(|&(k, r)| run_cell(cfg, &networks[k], k, r, &tests, keep_runs))
        .collect();
    aggregate(cfg, &labels, &networks, results, failures)
}

fn run_cell(
    cfg: &ExperimentConfig,
    nw: &Network,
    k: usize,
    r: usize,
    tests: &[Box<dyn CondIndTest>],
    keep_runs: bool,
) -> Cell {
    let data = simulate(
        &nw.spec,
        cfg.t,
        cfg.transient,
        realization_seed(cfg, nw.n_vars, nw.c, nw.net, r),
    );
    let ds = match data {
        Ok(ds) => ds,
        Err(e) => {
            return Cell {
                network: k,
                realization: r,
                autocorrs: vec![],
                runs: Err(e.to_string()),
            }
        }
    };
    let autocorrs = (0..ds.n_vars()).map(|j| lag1_autocorr(ds.column(j))).collect();
    let runs = cfg
        .methods
        .iter()
        .zip(tests)
        .enumerate()
        .map(|(m, (mc, test))| {
            let dcfg = cfg.discovery(mc, method_seed(cfg, nw.n_vars, nw.c, nw.net, r, m));
            let start = Instant::now();
            let graph = run_method(mc.method, &ds, &dcfg, mc.test, test.as_ref(), &cfg.tests);
            let millis = start.elapsed().as_secs_f64() * 1e3;
            let graph = graph.map_err(|e| e.to_string())?;
            let scored = score_against_truth(&graph, &nw.truth).map_err(|e| e.to_string())?;
            Ok(MethodRun {
                scored,
                millis,
                graph: keep_runs.then_some(graph),
            })
        })
        .collect();
    Cell {
        network: k,
        realization: r,
        autocorrs,
        runs: Ok(runs),
    }
}

#[derive(Default)]
struct SlotAcc {
    truth: bool,
    detections: usize,
    runs: usize,
    abs_stat_sum: f64,
    abs_stat_n: usize,
}

type SlotCounts = BTreeMap<(usize, usize, usize), SlotAcc>;

fn aggregate(
    cfg: &ExperimentConfig,
    labels: &[String],
    networks: &[Network],
    cells: Vec<Cell>,
    mut failures: Vec<Failure>,
) -> Result<ExperimentResult> {
    let n_methods = labels.len();
    // acc[network][method] maps (source, lag, target) to counts.
    let mut acc: Vec<Vec<SlotCounts>> = networks
        .iter()
        .map(|_| (0..n_methods).map(|_| BTreeMap::new()).collect())
        .collect();
    let mut auto_sum: Vec<Vec<f64>> = networks.iter().map(|nw| vec![0.0; nw.n_vars]).collect();
    let mut auto_n = vec![0usize; networks.len()];
    let mut times: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    let mut failure_counts: BTreeMap<String, usize> = labels.iter().map(|l| (l.clone(), 0)).collect();
    let mut runs = vec![];
    for cell in cells {
        let nw = &networks[cell.network];
        let fail = |method: Option<String>, error: String| Failure {
            method,
            n_vars: nw.n_vars,
            c: nw.c,
            net: nw.net,
            realization: Some(cell.realization),
            error,
        };
        let method_runs = match cell.runs {
            Ok(m) => m,
            Err(e) => {
                failures.push(fail(None, e));
                for l in labels {
                    *failure_counts.get_mut(l).expect("label") += 1;
                }
                continue;
            }
        };
        auto_sum[cell.network]
            .iter_mut()
            .zip(&cell.autocorrs)
            .for_each(|(s, a)| *s += a);
        auto_n[cell.network] += 1;
        for (m, run) in method_runs.into_iter().enumerate() {
            let run = match run {
                Ok(r) => r,
                Err(e) => {
                    failures.push(fail(Some(labels[m].clone()), e));
                    *failure_counts.get_mut(&labels[m]).expect("label") += 1;
                    continue;
                }
            };
            for s in &run.scored {
                let slot = acc[cell.network][m]
                    .entry((s.link.source, s.link.lag, s.link.target))
                    .or_default();
                slot.truth = s.truth;
                slot.runs += 1;
                slot.detections += usize::from(s.detected);
                if s.stat.is_finite() {
                    slot.abs_stat_sum += s.stat.abs();
                    slot.abs_stat_n += 1;
                }
            }
            times
                .entry((labels[m].clone(), nw.n_vars))
                .or_default()
                .push(run.millis);
            if let Some(graph) = run.graph {
                runs.push(RunRecord {
                    method: labels[m].clone(),
                    n_vars: nw.n_vars,
                    c: nw.c,
                    net: nw.net,
                    realization: cell.realization,
                    graph,
                });
            }
        }
    }
    let mut per_link = vec![];
    for (k, nw) in networks.iter().enumerate() {
        let autos: Vec<f64> = auto_sum[k].iter().map(|s| s / auto_n[k].max(1) as f64).collect();
        for (m, slots) in acc[k].iter().enumerate() {
            for (&(i, tau, j), s) in slots {
                let rate = s.detections as f64 / s.runs as f64;
                let pair = (autos[i] + autos[j]) / 2.0;
                per_link.push(LinkMetrics {
                    method: labels[m].clone(),
                    n_vars: nw.n_vars,
                    c: nw.c,
                    net: nw.net,
                    i,
                    tau,
                    j,
                    truth: s.truth,
                    detections: s.detections,
                    runs: s.runs,
                    tpr: s.truth.then_some(rate),
                    fpr: (!s.truth).then_some(rate),
                    mean_stat: if s.abs_stat_n > 0 {
                        s.abs_stat_sum / s.abs_stat_n as f64
                    } else {
                        0.0
                    },
                    autocorr: pair,
                    autocorr_class: AutocorrClass::of_pair(autos[i], autos[j]),
                });
            }
        }
    }
    let summaries = summarize(cfg, labels, &per_link);
    let runtimes = cfg.timing.then(|| {
        times
            .iter()
            .map(|((method, n_vars), t)| {
                let mean = t.iter().sum::<f64>() / t.len() as f64;
                let var = if t.len() > 1 {
                    t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t.len() - 1) as f64
                } else {
                    0.0
                };
                MethodRuntime {
                    method: method.clone(),
                    n_vars: *n_vars,
                    runs: t.len(),
                    mean_ms: mean,
                    sd_ms: var.sqrt(),
                }
            })
            .collect()
    });
    Ok(ExperimentResult {
        config: cfg.clone(),
        per_link,
        summaries,
        failures,
        failure_counts,
        runtimes,
        runs,
    })
}

fn summarize(cfg: &ExperimentConfig, labels: &[String], per_link: &[LinkMetrics]) -> Vec<SummaryRow> {
    let mut rows = vec![];
    for label in labels {
        for &n_vars in &cfg.n_vars {
            for &c in &cfg.c {
                let links: Vec<&LinkMetrics> = per_link
                    .iter()
                    .filter(|l| &l.method == label && l.n_vars == n_vars && l.c == c && l.runs > 0)
                    .collect();
                for class in ["weak", "strong", "all"] {
                    let in_class = |l: &&&LinkMetrics| match class {
                        "weak" => l.autocorr_class == AutocorrClass::Weak,
                        "strong" => l.autocorr_class == AutocorrClass::Strong,
                        _ => true,
                    };
                    let metrics: [(&str, Vec<f64>); 3] = [
                        ("tpr", links.iter().filter(in_class).filter_map(|l| l.tpr).collect()),
                        ("fpr", links.iter().filter(in_class).filter_map(|l| l.fpr).collect()),
                        (
                            "abs_stat",
                            links
                                .iter()
                                .filter(in_class)
                                .filter(|l| l.truth)
                                .map(|l| l.mean_stat)
                                .collect(),
                        ),
                    ];
                    for (metric, values) in metrics {
                        rows.push(SummaryRow {
                            method: label.clone(),
                            n_vars,
                            c,
                            class: class.to_string(),
                            metric: metric.to_string(),
                            summary: Summary::of(&values),
                        });
                    }
                }
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{MethodConfig, MethodKind, TestKind};
    use crate::pcmci::{AlphaPc, DiscoveryConfig};

    fn config(networks: usize, realizations: usize) -> ExperimentConfig {
        ExperimentConfig {
            methods: vec![MethodConfig::new(
                MethodKind::Pcmci,
                TestKind::Parcorr,
                DiscoveryConfig {
                    alpha_pc: AlphaPc::Fixed(0.2),
                    ..DiscoveryConfig::default()
                },
            )],
            n_vars: vec![3],
            links: None,
            c: vec![0.4],
            mode: crate::synthgen::CouplingMode::Linear,
            pool: AutocorrPool::Mixed,
            obs_noise_sd: 0.0,
            networks,
            realizations,
            t: 150,
            tau_max: 2,
            seed: 3,
            workers: None,
            transient: 200,
            tests: Default::default(),
            timing: false,
        }
    }

    #[test]
    fn single_run_summary_equals_its_counts() {
        let cfg = config(1, 1);
        let res = run_experiment_with(&cfg, true).unwrap();
        assert_eq!(res.runs.len(), 1);
        let spec = generate_network(&cfg, 3, 0.4, 0).unwrap();
        let truth = export_ground_truth(&spec);
        let scored = score_against_truth(&res.runs[0].graph, &truth).unwrap();
        let fp = scored.iter().filter(|s| !s.truth && s.detected).count() as f64;
        let negatives = scored.iter().filter(|s| !s.truth).count() as f64;
        let s = res.summary("pcmci-parcorr", 3, 0.4, "all", "fpr").unwrap();
        assert!((s.mean - fp / negatives).abs() < 1e-12);
        assert_eq!(res.per_link.len(), 12);
        assert!(res.per_link.iter().all(|l| l.runs == 1 && l.detections <= 1));
    }

    #[test]
    fn results_do_not_depend_on_workers() {
        let mut cfg = config(2, 3);
        let a = run_experiment(&cfg).unwrap();
        cfg.workers = Some(1);
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.per_link, b.per_link);
        assert_eq!(a.summaries, b.summaries);
    }

    #[test]
    fn mixed_pool_alternates_by_network() {
        let cfg = config(4, 1);
        for net in 0..4 {
            assert_eq!(network_seed(&cfg, 3, 0.4, net) % 2, net as u64 % 2);
        }
    }

    #[test]
    fn method_failures_are_counted() {
        let mut cfg = config(1, 2);
        cfg.n_vars = vec![30];
        cfg.tau_max = 5;
        cfg.t = 100;
        cfg.methods = vec![MethodConfig::new(
            MethodKind::Fullci,
            TestKind::Parcorr,
            DiscoveryConfig::default(),
        )];
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.failure_counts["fullci-parcorr"], 2);
        assert_eq!(res.failures.len(), 2);
        assert!(res.per_link.is_empty());
    }

    #[test]
    fn summary_quantiles() {
        let s = Summary::of(&[0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.q25, s.q50, s.q75, s.mean), (1.0, 2.0, 3.0, 2.0));
        assert!((s.q01 - 0.04).abs() < 1e-12);
        assert!(Summary::of(&[]).is_none());
    }
}

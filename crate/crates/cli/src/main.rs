//! `tscausal` command-line interface.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 for
//! runtime failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use tscausal::bench::{
    generate_network, realization_seed, run_experiment_with, ExperimentConfig, MethodConfig, MethodKind, TestKind,
    TestSettings,
};
use tscausal::indep_tests::nulltable::build_gpdc_null_table;
use tscausal::indep_tests::CmiTestConfig;
use tscausal::pcmci::{AlphaPc, DiscoveryConfig, DEFAULT_AIC_GRID};
use tscausal::synthgen::{export_ground_truth, simulate, AutocorrPool, CouplingMode};
use tscausal::{Error, Result, TimeSeriesDataset};

#[derive(Debug, Parser)]
#[command(name = "tscausal", version, about = "Causal discovery for multivariate time series")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate a time series graph from a CSV dataset.
    Discover(DiscoverArgs),
    /// Draw synthetic models and write realizations as CSV.
    Generate(GenerateArgs),
    /// Run a benchmark experiment from a JSON configuration.
    Bench(BenchArgs),
    /// Precompute GPDC null tables.
    NullTable(NullTableArgs),
}

#[derive(Debug, Args)]
struct DiscoverArgs {
    /// Input CSV with a header row of variable names.
    input: PathBuf,
    /// Output graph JSON; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// pcmci, fullci, bivci, pairwise, pc, lasso, mci0 or prewhitened_mci0.
    #[arg(long, default_value = "pcmci")]
    method: String,
    /// parcorr, gpdc or cmi (dcor for the pairwise method).
    #[arg(long, default_value = "parcorr")]
    test: String,
    #[arg(long, default_value_t = 5)]
    tau_max: usize,
    /// A threshold in (0, 1] or "aic".
    #[arg(long, default_value = "aic")]
    alpha_pc: String,
    #[arg(long, default_value_t = 0.05)]
    alpha_mci: f64,
    /// Source parents in MCI: an integer or "all".
    #[arg(long, default_value = "all")]
    px: String,
    #[arg(long, default_value_t = 1)]
    q_max: usize,
    /// Replace p-values by FDR q-values before deciding.
    #[arg(long)]
    fdr: bool,
    /// Also test lag-zero links.
    #[arg(long)]
    contemporaneous: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep the columns as read instead of standardizing them.
    #[arg(long)]
    no_standardize: bool,
    /// Record the runtime in the output.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    tests: TestArgs,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[arg(long, default_value_t = 1000)]
    gpdc_b_null: usize,
    #[arg(long, default_value_t = 0)]
    gpdc_null_seed: u64,
    /// Directory of cached GPDC null tables.
    #[arg(long)]
    null_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    cmi_k: usize,
    #[arg(long, default_value_t = 5)]
    cmi_k_perm: usize,
    #[arg(long, default_value_t = 500)]
    cmi_b: usize,
    #[arg(long, default_value_t = 200)]
    dcor_b: usize,
}

impl TestArgs {
    fn settings(&self) -> TestSettings {
        TestSettings {
            gpdc_b_null: self.gpdc_b_null,
            gpdc_null_seed: self.gpdc_null_seed,
            gpdc_null_dir: self.null_dir.clone(),
            cmi: CmiTestConfig {
                k_cmi: self.cmi_k,
                k_perm: self.cmi_k_perm,
                b: self.cmi_b,
                rng_seed: 0,
            },
            dcor_b: self.dcor_b,
        }
    }
}

#[derive(Debug, Args)]
#[allow(non_snake_case)]
struct GenerateArgs {
    /// Experiment configuration; overrides the model flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "N", default_value_t = 5)]
    N: usize,
    /// Cross-links per model; defaults to N.
    #[arg(long = "L")]
    L: Option<usize>,
    #[arg(long, default_value_t = 0.287)]
    c: f64,
    #[arg(long = "T", default_value_t = 150)]
    T: usize,
    /// linear or nonlinear.
    #[arg(long, default_value = "linear")]
    mode: String,
    /// low, high or mixed.
    #[arg(long, default_value = "mixed")]
    pool: String,
    #[arg(long, default_value_t = 0.0)]
    obs_noise: f64,
    #[arg(long, default_value_t = 1)]
    networks: usize,
    #[arg(long, default_value_t = 1)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "generated")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Experiment configuration JSON.
    config: PathBuf,
    /// Output directory for metrics.json, plot.csv and runs.jsonl.
    #[arg(long, default_value = "bench_out")]
    out: PathBuf,
    /// Record per-method runtimes.
    #[arg(long)]
    timing: bool,
    /// Skip the per-run graph log.
    #[arg(long)]
    no_runs: bool,
}

#[derive(Debug, Args)]
struct NullTableArgs {
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    b_null: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "null_tables")]
    out: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn parse_alpha_pc(s: &str) -> Result<AlphaPc> {
    if s.eq_ignore_ascii_case("aic") {
        return Ok(AlphaPc::Aic(DEFAULT_AIC_GRID.to_vec()));
    }
    s.parse()
        .map(AlphaPc::Fixed)
        .map_err(|_| Error::Config(format!("--alpha-pc expects a number or \"aic\", got '{s}'")))
}

fn parse_px(s: &str) -> Result<Option<usize>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::Config(format!("--px expects an integer or \"all\", got '{s}'")))
}

fn parse_mode(s: &str) -> Result<CouplingMode> {
    match s {
        "linear" => Ok(CouplingMode::Linear),
        "nonlinear" => Ok(CouplingMode::Nonlinear),
        _ => Err(Error::Config(format!("invalid value '{s}' for --mode"))),
    }
}

fn parse_pool(s: &str) -> Result<AutocorrPool> {
    match s {
        "low" => Ok(AutocorrPool::Low),
        "high" => Ok(AutocorrPool::High),
        "mixed" => Ok(AutocorrPool::Mixed),
        _ => Err(Error::Config(format!("invalid value '{s}' for --pool"))),
    }
}

fn discover(a: &DiscoverArgs) -> Result<()> {
    let method = MethodKind::parse(&a.method)?;
    let test_kind = TestKind::parse(&a.test)?;
    let cfg = DiscoveryConfig {
        tau_max: a.tau_max,
        alpha_pc: parse_alpha_pc(&a.alpha_pc)?,
        alpha_mci: a.alpha_mci,
        p_x: parse_px(&a.px)?,
        q_max: a.q_max,
        p_max: None,
        fdr: a.fdr,
        contemporaneous: a.contemporaneous,
        seed: a.seed,
    };
    let ds = TimeSeriesDataset::load_csv(&a.input, !a.no_standardize)?;
    let settings = a.tests.settings();
    let test = settings.build(test_kind)?;
    let start = Instant::now();
    let mut graph = tscausal::bench::run_method(method, &ds, &cfg, test_kind, test.as_ref(), &settings)?;
    if a.timing {
        graph.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    let json = graph.to_json()?;
    match &a.output {
        Some(p) => write_file(p, &(json + "\n")),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(p) => {
            let s = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            ExperimentConfig::from_json(&s)?
        }
        None => ExperimentConfig {
            methods: vec![MethodConfig::new(
                MethodKind::Pcmci,
                TestKind::Parcorr,
                DiscoveryConfig::default(),
            )],
            n_vars: vec![a.N],
            links: a.L,
            c: vec![a.c],
            mode: parse_mode(&a.mode)?,
            pool: parse_pool(&a.pool)?,
            obs_noise_sd: a.obs_noise,
            networks: a.networks,
            realizations: a.realizations,
            t: a.T,
            tau_max: 5,
            seed: a.seed,
            workers: None,
            transient: tscausal::synthgen::DEFAULT_TRANSIENT,
            tests: TestSettings::default(),
            timing: false,
        },
    };
    cfg.validate()?;
    for &n in &cfg.n_vars {
        for &c in &cfg.c {
            for net in 0..cfg.networks {
                let spec = generate_network(&cfg, n, c, net)?;
                let dir = a.out.join(format!("N{n}_c{c}_net{net}"));
                write_file(&dir.join("model.json"), &(spec.to_json()? + "\n"))?;
                write_file(&dir.join("truth.json"), &(export_ground_truth(&spec).to_json()? + "\n"))?;
                for r in 0..cfg.realizations {
                    let ds = simulate(&spec, cfg.t, cfg.transient, realization_seed(&cfg, n, c, net, r))?;
                    let path = dir.join(format!("realization_{r}.csv"));
                    ds.write_csv(&path)?;
                }
            }
        }
    }
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<()> {
    let s = fs::read_to_string(&a.config).map_err(|e| Error::io(&a.config, e))?;
    let mut cfg = ExperimentConfig::from_json(&s)?;
    cfg.timing |= a.timing;
    let res = run_experiment_with(&cfg, !a.no_runs)?;
    write_file(&a.out.join("metrics.json"), &(res.to_json()? + "\n"))?;
    write_file(&a.out.join("plot.csv"), &res.plot_csv()?)?;
    if !a.no_runs {
        write_file(&a.out.join("runs.jsonl"), &res.runs_jsonl()?)?;
    }
    Ok(())
}

fn null_table(a: &NullTableArgs) -> Result<()> {
    let table = build_gpdc_null_table(&a.sizes, a.b_null, a.seed)?;
    for p in table.save(&a.out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Discover(a) => discover(a),
        Command::Generate(a) => generate(a),
        Command::Bench(a) => bench(a),
        Command::NullTable(a) => null_table(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

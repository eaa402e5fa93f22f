//! End-to-end checks of the `tscausal` binary: exit codes and byte-level
//! reproducibility of every output-producing subcommand.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tscausal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tscausal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn generate(out: &Path, extra: &[&str]) {
    let mut args = vec!["generate", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = tscausal(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(code(&tscausal(&["--help"])), 0);
    assert_eq!(code(&tscausal(&["--version"])), 0);
    assert_eq!(code(&tscausal(&["discover", "--help"])), 0);
}

#[test]
fn unknown_flag_prints_usage_and_exits_2() {
    let o = tscausal(&["discover", "--no-such-flag", "x.csv"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&tscausal(&[])), 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    generate(&g, &["--N", "3", "--T", "100"]);
    let csv = g.join("N3_c0.287_net0/realization_0.csv");
    let csv = csv.to_str().unwrap();
    assert_eq!(code(&tscausal(&["discover", csv, "--alpha-pc", "2"])), 2);
    assert_eq!(code(&tscausal(&["discover", csv, "--alpha-pc", "often"])), 2);
    assert_eq!(code(&tscausal(&["discover", csv, "--px", "some"])), 2);
    assert_eq!(code(&tscausal(&["discover", csv, "--method", "granger"])), 2);
    // AIC selection needs the linear test.
    assert_eq!(code(&tscausal(&["discover", csv, "--test", "cmi"])), 2);
    assert_eq!(
        code(&tscausal(&["generate", "--T", "5", "--out", g.to_str().unwrap()])),
        2
    );

    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"methods": [], "n_vars": [3], "networks": 1, "realizations": 1, "t": 100, "tau_max": 2}"#,
    )
    .unwrap();
    assert_eq!(code(&tscausal(&["bench", bad.to_str().unwrap()])), 2);
}

#[test]
fn runtime_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&tscausal(&["discover", missing.to_str().unwrap()])), 3);
    // More regressors than samples.
    let g = dir.path().join("g");
    generate(&g, &["--N", "8", "--T", "30"]);
    let csv = g.join("N8_c0.287_net0/realization_0.csv");
    let o = tscausal(&[
        "discover",
        csv.to_str().unwrap(),
        "--method",
        "fullci",
        "--tau-max",
        "4",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn generate_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let flags = ["--N", "10", "--L", "10", "--c", "0.287", "--T", "150", "--seed", "7"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    generate(&a, &flags);
    generate(&b, &flags);
    let sub = "N10_c0.287_net0";
    for f in ["model.json", "truth.json", "realization_0.csv"] {
        let (x, y) = (
            fs::read(a.join(sub).join(f)).unwrap(),
            fs::read(b.join(sub).join(f)).unwrap(),
        );
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs");
    }
    let c = dir.path().join("c");
    generate(
        &c,
        &["--N", "10", "--L", "10", "--c", "0.287", "--T", "150", "--seed", "8"],
    );
    assert_ne!(
        fs::read(a.join(sub).join("realization_0.csv")).unwrap(),
        fs::read(c.join(sub).join("realization_0.csv")).unwrap()
    );
}

#[test]
fn discover_writes_valid_graph_json() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    generate(&g, &["--N", "5", "--T", "200", "--seed", "3"]);
    let csv = g.join("N5_c0.287_net0/realization_0.csv");
    let csv = csv.to_str().unwrap();
    let args = [
        "discover",
        csv,
        "--method",
        "pcmci",
        "--test",
        "parcorr",
        "--tau-max",
        "5",
        "--alpha-pc",
        "aic",
    ];
    let o1 = tscausal(&args);
    assert_eq!(code(&o1), 0, "{}", String::from_utf8_lossy(&o1.stderr));
    let graph = tscausal::TimeSeriesGraph::from_json(std::str::from_utf8(&o1.stdout).unwrap()).unwrap();
    assert_eq!(graph.n_vars(), 5);
    assert_eq!(tscausal(&args).stdout, o1.stdout);

    for method in ["fullci", "bivci", "pairwise", "pc", "lasso", "mci0", "prewhitened_mci0"] {
        let out = dir.path().join(format!("{method}.json"));
        let o = tscausal(&[
            "discover",
            csv,
            "--method",
            method,
            "--tau-max",
            "2",
            "--alpha-pc",
            "0.2",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{method}: {}", String::from_utf8_lossy(&o.stderr));
        tscausal::TimeSeriesGraph::from_json(&fs::read_to_string(&out).unwrap()).unwrap();
    }
}

#[test]
fn bench_outputs_are_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"methods": [{"method": "pcmci", "config": {"alpha_pc": {"fixed": 0.2}}}, {"method": "fullci"}],
            "n_vars": [3, 4], "networks": 2, "realizations": 3, "t": 150, "tau_max": 3, "seed": 11}"#,
    )
    .unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let o = tscausal(&[
            "--workers",
            workers,
            "bench",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a", "1"), run("b", "3"));
    for f in ["metrics.json", "plot.csv", "runs.jsonl"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f} differs"
        );
    }
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("metrics.json")).unwrap()).unwrap();
    for key in ["config", "per_link", "summaries", "failures"] {
        assert!(metrics.get(key).is_some(), "missing {key}");
    }
    let summaries = metrics["summaries"].as_array().unwrap();
    assert!(!summaries.is_empty());
    for row in summaries.iter().filter(|r| !r["summary"].is_null()) {
        for q in ["q01", "q25", "q50", "q75", "q99", "mean"] {
            assert!(row["summary"][q].is_number(), "{q} missing in {row}");
        }
    }
}

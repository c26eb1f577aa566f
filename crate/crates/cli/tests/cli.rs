use std::path::Path;
use std::process::{Command, Output};

use semiclass::harness::{ExperimentConfig, EXPERIMENTS};
use semiclass::symbolics::STANDARD_SYMBOLS;

fn semiclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semiclass"))
        .args(args)
        .env("SEMICLASS_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const QUICK: &str = "experiment = \"norm-limit-interior\"\n[hbar]\nhalvings = 2\n";

fn run(config: &str, out: &Path) -> Output {
    semiclass(&["run", "--experiment", "norm-limit-interior", "--config", config, "--out", out.to_str().unwrap()])
}

#[test]
fn list_names_every_experiment() {
    let o = semiclass(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for e in EXPERIMENTS {
        assert!(text.lines().any(|l| l.starts_with(e.id)), "missing {}", e.id);
    }
}

#[test]
fn catalog_lists_standard_symbols() {
    let o = semiclass(&["catalog"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for (id, _) in STANDARD_SYMBOLS {
        assert!(text.contains(id), "missing {id}");
    }
}

#[test]
fn passing_run_exits_zero_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{QUICK}[thresholds]\nfinal_relative_error = 0.5\n"));
    let out = dir.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("norm-limit-interior.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "experiment,hbar,value,reference,defect,wall_ms");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("norm-limit-interior,1e0,"));
    assert!(lines[3].starts_with("norm-limit-interior,2.5e-1,"));
    assert!(out.join("norm-limit-interior.json").exists());
}

#[test]
fn failed_verdict_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", &format!("{QUICK}[thresholds]\nfinal_relative_error = 1e-3\n"));
    let o = run(&cfg, dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL  final_relative_error"));
}

#[test]
fn configuration_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write(dir.path(), "a.toml", "[grid]\nspan = 3\n");
    let bad_symbol = write(dir.path(), "b.toml", "[symbols]\nf = \"gauss:b=-1\"\n");
    let other = write(dir.path(), "c.toml", "experiment = \"green-defect\"\n");
    let missing = dir.path().join("none.toml");
    for cfg in [bad_key.as_str(), bad_symbol.as_str(), other.as_str(), missing.to_str().unwrap()] {
        assert_eq!(run(cfg, dir.path()).status.code(), Some(3), "{cfg}");
    }
    assert_eq!(semiclass(&["run", "--experiment", "nope"]).status.code(), Some(3));
    assert_eq!(semiclass(&["frobnicate"]).status.code(), Some(3));
}

#[test]
fn invalid_thread_count_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", QUICK);
    let o = Command::new(env!("CARGO_BIN_EXE_semiclass"))
        .args(["run", "--experiment", "norm-limit-interior", "--config", &cfg, "--out"])
        .arg(dir.path())
        .env("SEMICLASS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", QUICK);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&cfg, &a);
    run(&cfg, &b);
    for file in ["norm-limit-interior.csv", "norm-limit-interior.json"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn print_config_echoes_the_overlaid_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", QUICK);
    let o = semiclass(&["run", "--experiment", "norm-limit-interior", "--config", &cfg, "--print-config"]);
    assert!(o.status.success());
    let echoed = ExperimentConfig::from_toml_str(&stdout(&o)).unwrap();
    assert_eq!(echoed.hbar.halvings, 2);
    assert_eq!(echoed.symbols.f, vec!["gauss:a=1,b=0.5".to_string()]);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        semiclass::harness::configure(&cfg.experiment, Some(&path)).unwrap();
        seen += 1;
    }
    assert!(seen >= 4);
}

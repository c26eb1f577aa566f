use semiclass::harness::{configure, preset, ConvergenceReport, ExperimentConfig};
use semiclass::run_experiment;

fn cfg(id: &str, edit: impl FnOnce(&mut ExperimentConfig)) -> ExperimentConfig {
    let mut c = preset(id).unwrap();
    edit(&mut c);
    c.validate().unwrap();
    c
}

fn run(c: &ExperimentConfig) -> ConvergenceReport {
    let r = run_experiment(c).unwrap();
    assert_eq!(r.failed_rows(), 0, "{:?}", r.rows.iter().find(|r| r.error.is_some()));
    r
}

fn ids(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn zero_symbol_gives_zero_rows() {
    for id in ["norm-limit-interior", "norm-limit-boundary", "interior-multiplicativity"] {
        let r = run(&cfg(id, |c| {
            c.symbols.f = ids(&["zero"]);
            c.kernel.k = ids(&["zero"]);
            c.hbar.halvings = 2;
        }));
        assert_eq!(r.rows.len(), 3, "{id}");
        for row in &r.rows {
            assert_eq!(row.value, Some(0.0), "{id}");
            assert!(row.defect.is_none_or(|d| d == 0.0), "{id}");
        }
    }
}

#[test]
fn green_defect_of_zero_pair_vanishes() {
    let r = run(&cfg("green-defect", |c| {
        c.symbols.f = ids(&["zero"]);
        c.hbar.halvings = 1;
    }));
    assert!(r.rows.iter().all(|row| row.value == Some(0.0)));
}

#[test]
fn interior_limit_is_insensitive_to_the_cutoff() {
    let at = |l: f64| {
        run(&cfg("norm-limit-interior", |c| {
            c.hbar.halvings = 3;
            c.grid.normal_extent = l;
        }))
    };
    let (a, b) = (at(16.0), at(24.0));
    for (x, y) in a.rows.iter().zip(&b.rows) {
        let (x, y) = (x.value.unwrap(), y.value.unwrap());
        assert!((x - y).abs() <= 0.01 * y, "{x} vs {y}");
    }
}

#[test]
fn base_independent_pair_multiplies_at_quadrature_level() {
    let r = run(&cfg("interior-multiplicativity", |c| {
        c.symbols.f = ids(&["gauss:b=1"]);
        c.symbols.g = ids(&["gauss:b=0.5"]);
        c.hbar.halvings = 2;
    }));
    let v = r.verdict("quadrature_level").expect("verdict for base-independent pairs");
    assert!(v.passed, "{v:?}");
    // sup |f^| sup |g^| = pi sqrt(2).
    let scale = std::f64::consts::PI * 2f64.sqrt();
    assert!(r.rows.iter().all(|row| row.value.unwrap() <= 1e-5 * scale));
}

#[test]
fn compression_by_a_slab_covering_the_grid_is_the_identity() {
    // L = 0.01 + hbar / 2 <= hbar^beta = a_hbar.
    let r = run(&cfg("boundary-compression", |c| {
        c.grid.normal_extent = 0.01;
        c.grid.extent_per_hbar = 0.5;
        c.grid.spacing_per_hbar = Some(1.0 / 32.0);
        c.hbar.halvings = 3;
    }));
    for row in &r.rows {
        assert_eq!(row.value, row.detail("full_norm"), "hbar = {}", row.hbar);
    }
}

#[test]
fn quotient_bound_is_tight_without_kernel_and_strict_with_a_large_one() {
    let r = run(&cfg("quotient-bound", |c| {
        c.symbols.f = ids(&["gauss:b=1", "zero"]);
        c.kernel.k = ids(&["zero", "rank1:c=3,alpha=1,beta=1"]);
    }));
    let margin = |label: &str| r.rows.iter().find(|row| row.label == label).unwrap().detail("margin").unwrap();
    assert!(margin("gauss:b=1 | zero").abs() <= 1e-2);
    assert!(margin("gauss:b=1 | rank1:c=3,alpha=1,beta=1") > 0.0);
    assert!(margin("zero | rank1:c=3,alpha=1,beta=1") > 0.0);
    assert_eq!(margin("zero | zero"), 0.0);
}

#[test]
fn rank_one_kernel_norm_is_exact_at_every_hbar() {
    let r = run(&cfg("norm-limit-boundary", |c| {
        c.symbols.f = ids(&["zero"]);
        c.kernel.k = ids(&["rank1:c=3,alpha=1,beta=1"]);
        c.hbar.halvings = 3;
    }));
    for row in &r.rows {
        assert!(row.relative_error().unwrap() <= 1e-3, "{row:?}");
    }
}

#[test]
fn rows_come_sorted_by_decreasing_hbar() {
    let r = run(&cfg("norm-limit-boundary", |c| {
        c.symbols.f = ids(&["gauss:b=1", "zero"]);
        c.kernel.k = ids(&["zero"]);
        c.hbar.halvings = 2;
    }));
    assert_eq!(r.rows.len(), 6);
    assert!(r.rows.windows(2).all(|w| w[0].hbar >= w[1].hbar));
    for row in &r.rows {
        assert_eq!(row.defect.unwrap(), (row.value.unwrap() - row.reference.unwrap()).abs());
    }
}

#[test]
fn unresolvable_rows_degrade_the_report() {
    let c = cfg("norm-limit-interior", |c| {
        c.hbar.halvings = 1;
        c.grid.spacing_per_hbar = Some(4.0);
    });
    let r = run_experiment(&c).unwrap();
    assert_eq!(r.failed_rows(), 2);
    assert!(!r.passed());
    assert!(r.rows[0].error.as_deref().unwrap().contains("finest admissible hbar"));
}

#[test]
fn configure_rejects_foreign_and_malformed_files() {
    let dir = tempfile::tempdir().unwrap();
    let foreign = dir.path().join("a.toml");
    std::fs::write(&foreign, "experiment = \"quotient-bound\"\n").unwrap();
    assert!(configure("green-defect", Some(&foreign)).unwrap_err().is_config());
    let bad = dir.path().join("b.toml");
    std::fs::write(&bad, "[hbar]\nstart = 3.0\n").unwrap();
    assert!(configure("green-defect", Some(&bad)).unwrap_err().is_config());
    assert!(configure("no-such-experiment", None).unwrap_err().is_config());
    let c = configure("green-defect", None).unwrap();
    assert_eq!(c, preset("green-defect").unwrap());
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use besov_classify::cli::{parse_config, Cli, RunConfig, Subcommand};
use besov_classify::wavelet::Family;
use clap::Parser;

fn besov(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_besov"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str], out: &Path) {
    let o = besov(args, out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn csv_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn sample_prior_writes_its_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    run_ok(&["sample-prior", "--alpha", "2", "--L", "8", "--seed", "7"], &out);
    for f in [
        "coefficients.csv",
        "draw-grid.csv",
        "resolved-config.json",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let resolved = RunConfig::from_file(&out.join("resolved-config.json")).unwrap();
    assert_eq!(resolved.max_level, Some(8));
    assert_eq!(resolved.seed, 7);
    assert_eq!(resolved.wavelet, Some(Family::Haar));
    // one header plus 2^{L+1} coefficients
    let rows = fs::read_to_string(out.join("coefficients.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 1 + 512);
}

#[test]
fn rate_study_writes_results_summary_and_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("study");
    run_ok(
        &[
            "rate-study",
            "--n-grid=256,1024,4096",
            "--replicates",
            "10",
            "--estimator",
            "map",
            "--seed",
            "3",
        ],
        &out,
    );
    for f in [
        "results.csv",
        "summary.csv",
        "rate-plot.svg",
        "resolved-config.json",
        "manifest.json",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert!(lines.next().unwrap().starts_with("n,median,iqr_lo,iqr_hi,rate_ref"));
    assert_eq!(lines.count(), 3);
    let results = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(results.starts_with("n,replicate,error,estimator,family,seed"));
    assert_eq!(results.lines().count(), 1 + 30);
    let svg = fs::read_to_string(out.join("rate-plot.svg")).unwrap();
    assert!(svg.contains("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn single_worker_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["sample-prior", "--alpha", "1.5", "--L", "6", "--seed", "5"],
        &["simulate", "--n", "500", "--seed", "5"],
        &["fit-map", "--n", "500", "--seed", "5", "--wavelet", "db2"],
        &[
            "fit-mcmc",
            "--n",
            "300",
            "--seed",
            "5",
            "--n-iters",
            "2000",
            "--burn-in",
            "500",
        ],
        &[
            "rate-study",
            "--n-grid=128,256,512",
            "--replicates",
            "3",
            "--estimator",
            "map",
        ],
    ];
    for (k, args) in runs.iter().enumerate() {
        let a = tmp.path().join(format!("{k}-a"));
        let b = tmp.path().join(format!("{k}-b"));
        let mut with_workers = args.to_vec();
        with_workers.extend(["--workers", "1"]);
        run_ok(&with_workers, &a);
        run_ok(&with_workers, &b);
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        assert!(!fa.is_empty());
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
        }
    }
}

#[test]
fn resolved_config_reruns_the_same_output() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    run_ok(&["simulate", "--n", "200", "--seed", "9", "--workers", "1"], &first);
    let second = tmp.path().join("second");
    let cfg = first.join("resolved-config.json");
    run_ok(&["--config", cfg.to_str().unwrap()], &second);
    for (x, y) in csv_files(&first).iter().zip(csv_files(&second)) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}

#[test]
fn minimal_config_file_is_filled_with_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(
        tmp.path(),
        r#"{"subcommand":"sample-prior","alpha":2,"d":1,"n":1,"L":8,"seed":7}"#,
    );
    let cfg = parse_config(Some(&p), None, &Default::default()).unwrap();
    assert_eq!(cfg.subcommand, Some(Subcommand::SamplePrior));
    assert_eq!(cfg.alpha, 2.0);
    assert_eq!(cfg.max_level, Some(8));
    assert_eq!(cfg.wavelet, Some(Family::Haar));
    assert!(cfg.truth_params.is_some());
    assert!(cfg.workers.is_some_and(|w| w >= 1));
}

#[test]
fn alpha_not_above_dimension_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(
        tmp.path(),
        r#"{"subcommand":"sample-prior","alpha":1,"d":1,"n":1,"L":8}"#,
    );
    let err = parse_config(Some(&p), None, &Default::default()).unwrap_err();
    assert_eq!(err.code(), "cli.config");
    assert!(err.to_string().contains("alpha must exceed d"), "{err}");
}

#[test]
fn flags_override_file_values() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), r#"{"subcommand":"rate-study","n_grid":[100,200,300,400]}"#);
    let cli = Cli::try_parse_from(["besov", "--n-grid=256,1024,4096"]).unwrap();
    let cfg = parse_config(Some(&p), cli.subcommand, &cli.overrides).unwrap();
    assert_eq!(cfg.n_grid, vec![256, 1024, 4096]);
    assert_eq!(cfg.wavelet, Some(Family::Daubechies(2)));
}

#[test]
fn unknown_key_fails_with_its_name() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write_config(tmp.path(), r#"{"subcommand":"simulate","n_gird":[1,2,3]}"#);
    let o = besov(&["--config", p.to_str().unwrap()], &tmp.path().join("never"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error code=cli.config field=n_gird"), "{err}");
    assert!(!tmp.path().join("never").exists());
}

#[test]
fn constraint_violation_exits_nonzero_with_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    let o = besov(&["sample-prior", "--alpha", "0.8"], &tmp.path().join("x"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(
        err.contains("field=alpha") && err.contains("alpha must exceed d"),
        "{err}"
    );
    let o = besov(&["rate-study", "--n-grid=256,1024"], &tmp.path().join("y"));
    assert!(String::from_utf8(o.stderr).unwrap().contains("field=n_grid"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = besov(&["simulate", "--no-such-flag"], &tmp.path().join("x"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error code=cli.usage"));
}

#[test]
fn output_root_variable_names_the_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_besov"))
        .args(["simulate", "--n", "50", "--seed", "4"])
        .env("BESOV_OUTPUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let dir = PathBuf::from(String::from_utf8(o.stdout).unwrap().trim());
    assert!(dir.starts_with(tmp.path()));
    let name = dir.file_name().unwrap().to_str().unwrap();
    assert!(name.starts_with("run-") && name.ends_with("-seed4"), "{name}");
    assert!(dir.join("dataset.csv").is_file());
}

#[test]
fn other_subcommands_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: &[(&[&str], &[&str])] = &[
        (&["simulate", "--n", "100"], &["dataset.csv", "truth.csv"]),
        (
            &["fit-map", "--n", "200"],
            &["map-coefficients.csv", "map-grid.csv", "map-summary.csv"],
        ),
        (
            &["fit-mcmc", "--n", "100", "--n-iters", "1000", "--burn-in", "200"],
            &[
                "draws.csv",
                "chain-summary.csv",
                "posterior-mean-coefficients.csv",
                "posterior-mean-grid.csv",
            ],
        ),
        (
            &[
                "compare-priors",
                "--n-grid=128,256,512",
                "--replicates",
                "3",
                "--estimator",
                "map",
            ],
            &["comparison.csv", "compare-plot.svg"],
        ),
        (
            &["diagnostics", "--L", "6", "--besov-draws", "5", "--besov-levels=4,6"],
            &["small-ball.csv", "besov-norms.csv"],
        ),
    ];
    for (k, (args, files)) in cases.iter().enumerate() {
        let out = tmp.path().join(k.to_string());
        run_ok(args, &out);
        for f in files.iter().chain(&["resolved-config.json", "manifest.json"]) {
            assert!(out.join(f).is_file(), "{}: {f}", args[0]);
        }
    }
}

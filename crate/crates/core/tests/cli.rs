//! End-to-end behaviour of the `oldroyd` binary.

use oldroyd::cli_io::{read_snapshot, COMPARE_COLUMNS, RUN_COLUMNS};
use oldroyd::fields::BoundaryMode;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::tempdir;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn oldroyd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oldroyd"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn rest_run_succeeds_with_vanishing_residuals() {
    let d = tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let o = oldroyd(&["--strict", "--out", out, "run", config("rest.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("timeseries.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), RUN_COLUMNS.join(","));
    let energy = column(&csv, "energy_residual");
    assert!(energy.len() > 2);
    for name in ["energy_residual", "trace_residual"] {
        assert!(column(&csv, name).iter().all(|r| r.abs() < 1e-12), "{name}");
    }
    let ts = column(&csv, "t");
    let last = read_snapshot(
        &d.path().join(format!("snapshots/snap_{:06}.bin", ts.len() - 1)),
        BoundaryMode::Physical,
    )
    .unwrap();
    assert_eq!(last.t, *ts.last().unwrap());
    assert!(last.rho.interior().all(|r| (r - 1.0).abs() < 1e-12));
}

#[test]
fn config_errors_exit_two_listing_every_problem() {
    let d = tempdir().unwrap();
    let text = std::fs::read_to_string(config("rest.toml"))
        .unwrap()
        .replace("gamma = 1.4", "gamma = 1.0")
        .replace("zfrak = 0.1\nL = 1.0", "zfrak = 0.0\nL = 0.0");
    let p = d.path().join("bad.toml");
    std::fs::write(&p, text).unwrap();
    let o = oldroyd(&["--out", d.path().to_str().unwrap(), "run", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("gamma must exceed 1"), "{err}");
    assert!(err.contains("zfrak + L > 0"), "{err}");
}

#[test]
fn unknown_keys_fail_only_under_strict() {
    let d = tempdir().unwrap();
    let text = std::fs::read_to_string(config("rest.toml")).unwrap().replace("[time]", "[time]\ncolour = 3");
    let p = d.path().join("extra.toml");
    std::fs::write(&p, text).unwrap();
    let out = d.path().to_str().unwrap();
    let strict = oldroyd(&["--strict", "--out", out, "run", p.to_str().unwrap()]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("unknown key colour"));
    assert_eq!(oldroyd(&["--out", out, "run", p.to_str().unwrap()]).status.code(), Some(0));
}

#[test]
fn compare_of_identical_configs_has_zero_entropy() {
    let d = tempdir().unwrap();
    let c = config("shear.toml");
    let c = c.to_str().unwrap();
    let o = oldroyd(&["--out", d.path().to_str().unwrap(), "compare", c, c]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("compare.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap().split(',').count(), RUN_COLUMNS.len() + COMPARE_COLUMNS.len());
    let e = column(&csv, "E_combined");
    assert!(e.len() > 2 && e.iter().all(|v| *v == 0.0));
    assert!(column(&csv, "entropy_residual").iter().all(|v| *v == 0.0));
}

#[test]
fn compare_of_perturbed_data_is_positive() {
    let d = tempdir().unwrap();
    let o = oldroyd(&[
        "--out",
        d.path().to_str().unwrap(),
        "compare",
        config("shear.toml").to_str().unwrap(),
        config("shear_perturbed.toml").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(d.path().join("compare.csv")).unwrap();
    assert!(column(&csv, "E_combined").iter().all(|v| *v > 0.0));
    assert_eq!(column(&csv, "entropy_residual")[0], 0.0);
}

#[test]
fn published_polymer_bound_fails_lemma_check() {
    let d = tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    let bad = oldroyd(&["--out", out, "lemma-check", config("lemma_published.toml").to_str().unwrap()]);
    assert_ne!(bad.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("negative slack in g_near"));
    let good = oldroyd(&["--out", out, "lemma-check", config("lemma_corrected.toml").to_str().unwrap()]);
    assert_eq!(good.status.code(), Some(0));
    let cert = std::fs::read_to_string(d.path().join("lemma_certificate.csv")).unwrap();
    assert!(cert.starts_with("# seed 1 samples 1000000"));
}

#[test]
fn density_blowup_exits_three_naming_the_monitor() {
    let d = tempdir().unwrap();
    let o = oldroyd(&["--out", d.path().to_str().unwrap(), "run", config("collapse.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sup_rho"));
    // partial output up to the abort is kept
    assert!(d.path().join("timeseries.csv").exists());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let mut files = Vec::new();
    let dirs: Vec<_> = (0..2).map(|_| tempdir().unwrap()).collect();
    for (d, n) in dirs.iter().zip(["1", "3"]) {
        let o = oldroyd(&[
            "--threads",
            n,
            "--out",
            d.path().to_str().unwrap(),
            "run",
            config("shear_perturbed.toml").to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let mut snaps: Vec<_> = std::fs::read_dir(d.path().join("snapshots"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        snaps.sort();
        let mut bytes = std::fs::read(d.path().join("timeseries.csv")).unwrap();
        for s in snaps {
            bytes.extend(std::fs::read(s).unwrap());
        }
        files.push(bytes);
    }
    assert_eq!(files[0], files[1]);
}

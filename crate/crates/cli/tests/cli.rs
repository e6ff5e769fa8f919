use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forge"))
        .args(args)
        .output()
        .expect("forge runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn out_arg(dir: &TempDir) -> String {
    dir.path().to_str().unwrap().to_string()
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn identical_runs_write_identical_files() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        let o = forge(&[
            "build-tunnel",
            "--j",
            "10",
            "--format",
            "json,csv,svg",
            "--out",
            &out_arg(d),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    let (la, lb) = (listing(a.path()), listing(b.path()));
    assert!(la.len() >= 5);
    assert_eq!(la, lb);
}

#[test]
fn stored_profile_verifies() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&forge(&[
            "build-well",
            "--j",
            "10",
            "--out",
            &out_arg(&dir)
        ])),
        0
    );
    let profile = dir.path().join("well-j10.profile");
    let o = forge(&["verify", profile.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = fs::read_to_string(dir.path().join("well-j10.verify.report.json")).unwrap();
    assert!(report.contains("profile.recipe-match"));
}

#[test]
fn corrupted_profile_fails_verification() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&forge(&[
            "build-well",
            "--j",
            "10",
            "--out",
            &out_arg(&dir)
        ])),
        0
    );
    let path = dir.path().join("well-j10.profile");
    let text = fs::read_to_string(&path).unwrap();
    let mut done = false;
    let bent: Vec<String> = text
        .lines()
        .map(|l| {
            if !done && l.starts_with("w ") {
                done = true;
                let scaled: Vec<String> = l[2..]
                    .split_whitespace()
                    .map(|x| format!("{:.16e}", 1.2 * x.parse::<f64>().unwrap()))
                    .collect();
                format!("w {}", scaled.join(" "))
            } else {
                l.to_string()
            }
        })
        .collect();
    assert!(done);
    let bad = dir.path().join("bad.profile");
    fs::write(&bad, bent.join("\n") + "\n").unwrap();
    let o = forge(&["verify", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn sphere_plot_draws_reference_line() {
    let dir = TempDir::new().unwrap();
    let o = forge(&[
        "build-sphere",
        "--format",
        "json,svg",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let svg = fs::read_to_string(dir.path().join("sphere-n3.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("class=\"reference\""));
    assert!(svg.contains("reference 6"));
    let plotted = TempDir::new().unwrap();
    let profile = dir.path().join("sphere-n3.profile");
    let o = forge(&[
        "plot",
        profile.to_str().unwrap(),
        "--out",
        &out_arg(&plotted),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        fs::read_to_string(plotted.path().join("sphere-n3.svg")).unwrap(),
        svg
    );
}

#[test]
fn sequence_report_aggregates_members() {
    let dir = TempDir::new().unwrap();
    let o = forge(&[
        "build-sequence",
        "many-wells",
        "--j",
        "2,4",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let manifest = dir.path().join("manifest.json");
    let o = forge(&["report", manifest.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("forge.toml");
    fs::write(&cfg, "n = 3\nbogus = 1\n").unwrap();
    assert_eq!(
        code(&forge(&[
            "build-well",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            &out_arg(&dir)
        ])),
        2
    );
    assert_eq!(
        code(&forge(&["build-well", "--n", "2", "--out", &out_arg(&dir)])),
        2
    );
    assert_eq!(
        code(&forge(&[
            "build-well",
            "--j",
            "10..4",
            "--out",
            &out_arg(&dir)
        ])),
        2
    );
    assert_eq!(
        code(&forge(&[
            "verify",
            dir.path().join("missing.profile").to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn config_file_supplies_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("forge.toml");
    fs::write(&cfg, "j = [20]\nformats = [\"json\", \"csv\"]\n").unwrap();
    let o = forge(&[
        "build-well",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("well-j20.report.csv").exists());
    assert!(dir.path().join("well-j20.samples.csv").exists());
}

#[test]
fn sequence_runs_are_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for d in [&a, &b] {
        let o = forge(&[
            "build-sequence",
            "well-cascade",
            "--kappa",
            "3",
            "--j",
            "1,2",
            "--out",
            &out_arg(d),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    assert_eq!(listing(a.path()), listing(b.path()));
}

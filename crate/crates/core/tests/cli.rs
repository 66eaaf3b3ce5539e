use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn rotbath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotbath"))
        .args(args)
        .output()
        .expect("spawn rotbath")
}

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// Data rows as (header, rows of cells).
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn digest_dir(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = std::fs::read(&p).unwrap();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                hex::encode(Sha256::digest(bytes)),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn zero_temperature_spectrum_vanishes_off_superradiant_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = rotbath(&["run", &corpus("spectrum_zero_t.toml"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = table(&out.join("spectrum.csv"));
    let (iw, im, ir) = (column(&header, "omega"), column(&header, "m"), column(&header, "rate"));
    assert_eq!(rows.len(), 20 * 6);
    for row in rows {
        let omega: f64 = row[iw].parse().unwrap();
        let m: f64 = row[im].parse().unwrap();
        let rate: f64 = row[ir].parse().unwrap();
        if omega >= m * 0.5 {
            assert_eq!(rate, 0.0, "{row:?}");
        } else {
            assert!(rate > 0.0, "{row:?}");
        }
    }
}

#[test]
fn thermo_ledger_has_nonnegative_entropy_production() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = rotbath(&["run", &corpus("thermo_stable.toml"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = table(&out.join("ledger.csv"));
    for name in ["time", "S", "sigma", "J", "U", "Lz", "res1", "res2"] {
        column(&header, name);
    }
    let is = column(&header, "sigma");
    assert_eq!(rows.len(), 9);
    for row in rows {
        assert!(row[is].parse::<f64>().unwrap() >= 0.0);
    }
}

#[test]
fn outputs_are_identical_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["gillespie_saturating.toml", "birthdeath_saturating.toml", "kinetics_mixed.toml"] {
        let mut digests = Vec::new();
        for (i, threads) in ["1", "3", "8"].into_iter().enumerate() {
            let out = tmp.path().join(format!("{name}-{i}"));
            let o = rotbath(&["run", &corpus(name), "--out", out.to_str().unwrap(), "--threads", threads]);
            assert!(o.status.success());
            digests.push(digest_dir(&out));
        }
        assert_eq!(digests[0], digests[1], "{name}");
        assert_eq!(digests[0], digests[2], "{name}");
    }
}

#[test]
fn seed_override_changes_the_ensemble_and_header() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    rotbath(&["run", &corpus("gillespie_saturating.toml"), "--out", a.to_str().unwrap()]);
    rotbath(&["run", &corpus("gillespie_saturating.toml"), "--out", b.to_str().unwrap(), "--seed", "7"]);
    let text = std::fs::read_to_string(b.join("trajectory.csv")).unwrap();
    assert!(text.contains("# seed: 7\n"));
    assert!(text.contains("# scenario: seed = 7\n"));
    assert_ne!(digest_dir(&a), digest_dir(&b));
}

#[test]
fn header_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("first");
    rotbath(&["run", &corpus("birthdeath_stable.toml"), "--out", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(out.join("moments.csv")).unwrap();
    let embedded: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("# scenario:"))
        .map(|l| format!("{}\n", l.strip_prefix(' ').unwrap_or(l)))
        .collect();
    let again = tmp.path().join("again");
    let file = write(tmp.path(), "embedded.toml", &embedded);
    rotbath(&["run", &file, "--out", again.to_str().unwrap()]);
    assert_eq!(digest_dir(&out), digest_dir(&again));
}

#[test]
fn check_prints_a_fixed_point() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["rates_ohmic.toml", "gillespie_saturating.toml", "spectrum_zero_t.toml", "bh_ledger.toml"] {
        let first = rotbath(&["check", &corpus(name)]);
        assert!(first.status.success());
        let printed = String::from_utf8(first.stdout).unwrap();
        let file = write(tmp.path(), name, &printed);
        let second = rotbath(&["check", &file]);
        assert_eq!(String::from_utf8(second.stdout).unwrap(), printed, "{name}");
    }
}

#[test]
fn runaway_exits_with_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write(
        tmp.path(),
        "runaway.toml",
        r#"
[bath]
family = "flat"
beta = 1.0
omega_rot = 1.0

[[modes]]
omega = 0.2
m = 1

[run]
kind = "birthdeath"
t_max = 40.0
points = 21
max_cutoff = 512
"#,
    );
    let out = tmp.path().join("out");
    let o = rotbath(&["run", &file, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let (header, rows) = table(&out.join("status.csv"));
    assert_eq!(rows[0][column(&header, "status")], "runaway_truncation");
    let (_, moments) = table(&out.join("moments.csv"));
    assert!(!moments.is_empty() && moments.len() < 21);
    assert!(std::fs::read_to_string(out.join("moments.csv"))
        .unwrap()
        .contains("# status: partial (runaway)"));
}

#[test]
fn invalid_scenarios_fail_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let no_seed = write(
        tmp.path(),
        "no_seed.toml",
        "[bath]\nfamily = \"flat\"\nbeta = 1\n[[modes]]\nomega = 1\n[run]\nkind = \"gillespie\"\nt_max = 1\n",
    );
    let o = rotbath(&["run", &no_seed]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let typo = write(
        tmp.path(),
        "typo.toml",
        "[bath]\nfamily = \"flat\"\nbeta = 1\n[[modes]]\nomega = 1\nmm = 2\n[run]\nkind = \"rates\"\n",
    );
    let o = rotbath(&["check", &typo]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 6") && err.contains("mm"), "{err}");

    let negative = write(
        tmp.path(),
        "kappa.toml",
        "[bath]\nfamily = \"flat\"\nbeta = 1\n[[modes]]\nomega = 1\n[run]\nkind = \"birthdeath\"\nt_max = 1\nkappa = -1\n",
    );
    let o = rotbath(&["check", &negative]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run.kappa"));
}

#[test]
fn kms_report_lists_small_residuals_for_shipped_models() {
    let o = rotbath(&["kms", &corpus("rates_ohmic.toml")]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3 * 5);
    for row in rows {
        let residual: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(residual <= 1e-12, "{row}");
    }
}

use std::path::Path;
use std::process::{Command, Output};

use pepcert::cli::{certificate_name, CertificateFile};
use pepcert::solve_rate_params;

fn pepcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pepcert"))
        .args(args)
        .env_remove("PEPCERT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|rest| rest.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no `{key}` in output:\n{text}"))
        .to_string()
}

fn sweep_into(dir: &Path, n_max: usize) {
    let out = pepcert(&["sweep", &n_max.to_string(), "--out-dir", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn rates_command() {
    let out = pepcert(&["rates", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(field(&text, "alpha"), "1.5");
    assert_eq!(field(&text, "r"), "0.125");

    let out = pepcert(&["rates", "100"]);
    let gap: f64 = field(&stdout(&out), "balance_residual").parse().unwrap();
    assert!(gap <= 1e-14);

    assert_eq!(pepcert(&["rates", "0"]).status.code(), Some(1));
}

#[test]
fn solve_command() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("five.txt");
    let out = pepcert(&["solve", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let file = CertificateFile::read(&path).unwrap();
    assert_eq!(file.n, 5);
    assert!(file.delta <= 1e-11);

    assert_eq!(pepcert(&["solve", "2"]).status.code(), Some(1));
}

#[test]
fn solve_with_warm_start() {
    let dir = tempfile::tempdir().unwrap();
    sweep_into(dir.path(), 49);
    let w1 = dir.path().join(certificate_name(48));
    let w2 = dir.path().join(certificate_name(49));
    let target = dir.path().join("fifty.txt");
    let out = pepcert(&[
        "solve",
        "50",
        "--warm",
        w1.to_str().unwrap(),
        w2.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let iterations: usize = field(&text, "iterations").parse().unwrap();
    assert!(iterations <= 15);
    assert!(field(&text, "start").contains("Extrapolated"));

    let out = pepcert(&["verify", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn non_convergence_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = pepcert(&[
        "solve",
        "6",
        "--max-iter",
        "0",
        "--out",
        dir.path().join("x.txt").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error during"));
    assert!(!dir.path().join("x.txt").exists());
}

#[test]
fn sweep_single_and_strided() {
    let dir = tempfile::tempdir().unwrap();
    sweep_into(dir.path(), 3);
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);

    let strided = tempfile::tempdir().unwrap();
    let out = pepcert(&[
        "sweep",
        "200",
        "--stride-from",
        "60",
        "--stride",
        "35",
        "--out-dir",
        strided.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let count = std::fs::read_dir(strided.path()).unwrap().count();
    assert_eq!(count, 58 + 4);
    assert!(strided.path().join(certificate_name(200)).exists());
    assert!(stdout(&out).contains("summary: 62 certificates"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pepcert"))
        .args(["sweep", "4"])
        .env("PEPCERT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join(certificate_name(4)).exists());
}

#[test]
fn verify_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    sweep_into(dir.path(), 20);
    let good = dir.path().join(certificate_name(20));
    let out = pepcert(&["verify", good.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let r = solve_rate_params(20).unwrap().r;
    let bound: f64 = field(&text, "bound r + delta/2 =").parse().unwrap();
    assert!(bound >= r && bound <= r + 1e-11);

    let ten = dir.path().join(certificate_name(10));
    let out = pepcert(&["verify", "--oracle", ten.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let dev: f64 = field(&stdout(&out), "oracle_deviation")
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(dev <= 1e-10);

    let mut file = CertificateFile::read(&good).unwrap();
    file.d[3] = -file.d[3];
    let bad = dir.path().join("negated.txt");
    file.write(&bad).unwrap();
    let out = pepcert(&["verify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).contains("positivity failure"));

    let mut file = CertificateFile::read(&good).unwrap();
    file.a.as_mut().unwrap()[0] *= 1.0 + 1e-9;
    let tampered = dir.path().join("tampered.txt");
    file.write(&tampered).unwrap();
    assert_eq!(pepcert(&["verify", tampered.to_str().unwrap()]).status.code(), Some(4));

    let garbage = dir.path().join("garbage.txt");
    std::fs::write(&garbage, "not a certificate\n").unwrap();
    assert_eq!(pepcert(&["verify", garbage.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn plotdata_files_are_normalized() {
    let dir = tempfile::tempdir().unwrap();
    sweep_into(dir.path(), 100);
    let plots = dir.path().join("plots");
    let out = pepcert(&[
        "plotdata",
        dir.path().join(certificate_name(100)).to_str().unwrap(),
        dir.path().join(certificate_name(60)).to_str().unwrap(),
        "--out-dir",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for name in ["a", "b", "c", "d"] {
        let text = std::fs::read_to_string(plots.join(format!("{name}_N00100.dat"))).unwrap();
        let values: Vec<f64> = text
            .lines()
            .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(values.iter().all(|&v| (0.0..=1.0).contains(&v)), "{name}");
        assert_eq!(values.iter().copied().fold(f64::MIN, f64::max), 1.0);
        assert!(plots.join(format!("{name}_N00060.dat")).exists());
    }

    assert_eq!(pepcert(&["plotdata"]).status.code(), Some(1));
}

#[test]
fn envelope_table() {
    let out = pepcert(&["envelope", "1", "--grid", "1.4:1.6:0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("minimum at alpha 1.500000 with value 0.125"));
    assert_eq!(text.lines().filter(|l| l.ends_with(" *")).count(), 1);

    let out = pepcert(&["envelope", "10", "--grid", "0.1:1.99:0.01"]);
    let r10 = solve_rate_params(10).unwrap().r;
    let rows: Vec<f64> = stdout(&out)
        .lines()
        .skip(1)
        .take_while(|l| !l.starts_with("minimum"))
        .map(|l| l.split_whitespace().nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rows.len(), 190);
    assert!(rows.iter().all(|&v| v >= r10 * (1.0 - 1e-6) - 1e-12));

    let out = pepcert(&["envelope", "3", "--grid", "1.2:1.2:0.5"]);
    assert_eq!(stdout(&out).lines().filter(|l| l.contains("e-")).count(), 1);
}

#[test]
fn identical_commands_give_identical_files() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    sweep_into(d1.path(), 30);
    sweep_into(d2.path(), 30);
    for n in 3..=30 {
        let a = std::fs::read(d1.path().join(certificate_name(n))).unwrap();
        let b = std::fs::read(d2.path().join(certificate_name(n))).unwrap();
        assert_eq!(a, b, "N = {n}");
    }
}

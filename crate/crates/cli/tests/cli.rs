use std::path::Path;
use std::process::{Command, Output};

fn hnmre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hnmre")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn cn_prints_the_constant() {
    let o = hnmre(&["cn", "--n", "1"]);
    assert!(o.status.success());
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-10);

    let o = hnmre(&["cn", "--n", "2", "--n", "10"]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("10\t"));
}

fn write_sample(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("y.txt");
    std::fs::write(&path, "# observations\n10.3, 12.1 11.7\n14.2\n10.9 13.5\n15.8, 10.05\n").unwrap();
    path
}

#[test]
fn estimate_reports_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path());
    let o = hnmre(&[
        "estimate",
        path.to_str().unwrap(),
        "--eta-known",
        "4",
        "--xi-known",
        "10",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("n\t8\n"));
    for name in [
        "Unbiased",
        "MLE",
        "MRE",
        "MREStepA",
        "PitmanKnownScale",
        "MREKnownLocation",
        "UMVUKnownLocation",
    ] {
        let row = out.lines().find(|l| l.split('\t').next() == Some(name)).unwrap();
        let fields: Vec<&str> = row.split('\t').collect();
        assert_eq!(fields.len(), 3, "{row}");
    }
    let pitman = out.lines().find(|l| l.starts_with("PitmanKnownScale")).unwrap();
    let xi: f64 = pitman.split('\t').nth(1).unwrap().parse().unwrap();
    assert!(xi < 10.05);

    let o = hnmre(&["estimate", path.to_str().unwrap()]);
    assert!(o.status.success());
    let pitman = stdout(&o)
        .lines()
        .find(|l| l.starts_with("PitmanKnownScale"))
        .unwrap()
        .to_string();
    assert_eq!(pitman, "PitmanKnownScale\t-\t-");
}

#[test]
fn usage_errors_exit_with_two() {
    let o = hnmre(&["table1", "--n", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--m"));
    let o = hnmre(&["table5", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hnmre(&["table5", "--reps", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hnmre(&["nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one_and_name_the_path() {
    let o = hnmre(&["estimate", "/no/such/file.txt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/no/such/file.txt"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1.0 2.0 abc\n").unwrap();
    let o = hnmre(&["estimate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.txt"));
}

#[test]
fn table5_writes_nine_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hnmre(&["table5", "--reps", "20", "--out-dir", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("table5.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,estimator,mean,mse");
    assert_eq!(lines.len(), 10);
    assert!(dir.path().join("table5.json").exists());
    assert_eq!(stdout(&o).lines().count(), 10);
}

#[test]
fn output_does_not_depend_on_job_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run = |dir: &Path, jobs: &str| {
        let o = hnmre(&[
            "table4",
            "--reps",
            "6",
            "--n",
            "30",
            "--n",
            "60",
            "--eps",
            "0.01",
            "--jobs",
            jobs,
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    run(a.path(), "1");
    run(b.path(), "3");
    for f in ["table4.csv", "table4.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn condexp_prints_estimate_and_reference() {
    let o = hnmre(&["condexp", "--m", "200", "--eps", "0.05"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let get = |k: &str| -> f64 {
        out.lines()
            .find(|l| l.starts_with(k))
            .unwrap()
            .split('\t')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap()
    };
    assert_eq!(get("reference"), 0.5);
    assert!((get("estimate") - 0.5).abs() < 0.3);
    assert_eq!(get("accepted"), 200.0);
}

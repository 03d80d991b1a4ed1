use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_copula-discrepancy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json_record(text: &str) -> serde_json::Value {
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn diagnose_comonotone_file() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (1..=50).map(|i| format!("{i},{}\n", i * 2)).collect();
    let path = write(dir.path(), "como.csv", &format!("x,y\n{rows}"));
    let out = cli(&["diagnose", &path, "--family", "gumbel", "--theta-p", "2.5"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rec = json_record(&stdout(&out));
    assert_eq!(rec["tau_hat"], 1.0);
    assert!((rec["cd"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(rec["degenerate"], true);
}

#[test]
fn diagnose_round_trips_generated_sample() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let p = path.to_str().unwrap();
    let gen = cli(&["sample", "--n", "10000", "--seed", "12", "--out", p]);
    assert_eq!(gen.status.code(), Some(0));
    let out = cli(&["diagnose", p, "--estimator", "mle"]);
    assert_eq!(out.status.code(), Some(0));
    let rec = json_record(&stdout(&out));
    assert!(rec["cd"].as_f64().unwrap() < 0.03, "{rec}");
    assert_eq!(rec["n"], 10000);
    assert_eq!(rec["test"]["alpha"], 0.05);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.csv", "");
    assert_eq!(cli(&["diagnose", &empty]).status.code(), Some(2));
    let bad = write(dir.path(), "bad.csv", "1,2\n3,x\n");
    let out = cli(&["diagnose", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
    let nan = write(dir.path(), "nan.csv", "1,2\nNaN,3\n4,inf\n");
    let out = cli(&["diagnose", &nan]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("2 non-finite"));
    assert_eq!(
        cli(&["diagnose", "/no/such/file.csv"]).status.code(),
        Some(2)
    );
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        cli(&["tau", &bad, "--theta-p", "abc"]).status.code(),
        Some(1)
    );
    assert_eq!(cli(&["sample", "--theta-p", "0.5"]).status.code(), Some(1));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}

#[test]
fn tau_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "t.csv", "1,1\n2,3\n3,2\n4,4\n");
    let out = cli(&["tau", &path]);
    assert_eq!(out.status.code(), Some(0));
    let tau: f64 = stdout(&out).trim().parse().unwrap();
    assert!((tau - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.conf",
        "# small run\nreps = 2\nsample_sizes = 20, 40\nseed = 5\n",
    );
    let a = cli(&["exp1", "--reps", "50", "--config", &cfg]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    let text = stdout(&a);
    assert!(text.starts_with("method,x,mean,ci_lo,ci_hi\n"));
    assert_eq!(text.lines().count(), 5);
    let b = cli(&["exp1", "--config", &cfg]);
    assert_eq!(a.stdout, b.stdout);
    let unknown = write(dir.path(), "bad.conf", "colour = blue\n");
    assert_eq!(cli(&["exp1", "--config", &unknown]).status.code(), Some(1));
}

#[test]
fn experiment_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "e.conf",
        "reps = 3\nsample_sizes = 30, 60\nepsilon_grid = 0.001, 0.01\nsgld_steps = 200\nrwm_steps = 2000\npseudo_true_n = 2000\n",
    );
    for exp in ["exp1", "exp2", "exp3"] {
        let p1 = dir.path().join(format!("{exp}-a.csv"));
        let p2 = dir.path().join(format!("{exp}-b.csv"));
        for p in [&p1, &p2] {
            let out = cli(&[exp, "--config", &cfg, "--out", p.to_str().unwrap()]);
            assert_eq!(
                out.status.code(),
                Some(0),
                "{exp}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
        let a = fs::read(&p1).unwrap();
        assert_eq!(a, fs::read(&p2).unwrap(), "{exp}");
        assert!(a.starts_with(b"method,x,mean,ci_lo,ci_hi\n"));
    }
}

#[test]
fn bench_writes_timing_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "b.conf", "reps = 2\nsample_sizes = 50, 100\n");
    let out = cli(&["bench", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for m in ["moment_cd", "mle_cd", "ksd"] {
        assert_eq!(
            text.lines().filter(|l| l.starts_with(m)).count(),
            2,
            "{text}"
        );
    }
}

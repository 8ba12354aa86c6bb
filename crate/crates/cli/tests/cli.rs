use std::path::Path;
use std::process::{Command, Output};

use gvalue_core::{g_value, solve_alpha_star, AnalysisSet, Dataset, JointNullModel};

fn gvalue(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gvalue"))
        .current_dir(dir)
        .env_remove("GVALUE_SEED")
        .env_remove("GVALUE_MANIFEST")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value printed on the line starting with `key`.
fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|rest| rest.trim().to_string()))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

fn write_sample(dir: &Path, name: &str, n: usize, shift: f64) -> std::path::PathBuf {
    let values = gvalue_core::dist::sample_student_t(15, n, gvalue_core::RngSeed::new(42)).unwrap();
    let mut text = String::from("x\n");
    for v in values {
        text.push_str(&format!("{}\n", v + shift));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn correction_flagship_and_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let o = gvalue(
        dir.path(),
        &["correction", "--alpha", "0.05", "--rho", "tw"],
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(field(&out, "alpha_star"), "0.0601");
    let c = solve_alpha_star(&JointNullModel::t_wilcoxon(), 0.05, 1e-10).unwrap();
    assert_eq!(field(&out, "adjustment"), format!("{:.4}", c.adjustment));

    let o = gvalue(dir.path(), &["correction", "--alpha", "0.05", "--rho", "1"]);
    assert_eq!(field(&stdout(&o), "alpha_star"), "0.0500");

    for bad in [
        vec!["correction", "--alpha", "1.5", "--rho", "tw"],
        vec!["correction", "--alpha", "0.05"],
        vec!["correction", "--rho", "abc"],
        vec!["correction", "--rho", "tw", "--corr-file", "c.txt"],
        vec!["correction", "--bogus"],
    ] {
        assert_eq!(gvalue(dir.path(), &bad).status.code(), Some(2), "{bad:?}");
    }
    assert_eq!(
        gvalue(dir.path(), &["correction", "--rho", "1.5"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn correction_from_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.txt"), "# independent pair\n1, 0\n0, 1\n").unwrap();
    let o = gvalue(dir.path(), &["correction", "--corr-file", "c.txt"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(field(&stdout(&o), "alpha_star"), "0.2236");
}

#[test]
fn maxsize_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&gvalue(
        dir.path(),
        &["maxsize", "--alpha", "0.05", "--rho", "tw"],
    ));
    assert_eq!(field(&out, "size"), "0.0588");
    assert_eq!(field(&out, "inflation"), "+18%");
    let out = stdout(&gvalue(
        dir.path(),
        &["maxsize", "--alpha", "0.05", "--rho", "0", "--m", "2"],
    ));
    assert_eq!(field(&out, "size"), "0.0975");
}

#[test]
fn gvalue_from_p_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = gvalue(
        dir.path(),
        &[
            "gvalue",
            "--p",
            "0.03,0.052",
            "--rho",
            "tw",
            "--alpha",
            "0.05",
            "--out",
            "g.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(field(&out, "g_value"), "0.0432");
    assert_eq!(field(&out, "decision"), "reject H0");
    let doc = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert!(doc.starts_with("key,value\n"));
    assert!(doc.contains("g_value,0.0432340272454"));

    let out = stdout(&gvalue(
        dir.path(),
        &["gvalue", "--p", "0.5,0.5", "--rho", "1"],
    ));
    assert_eq!(field(&out, "g_value"), "0.5000");
    assert_eq!(field(&out, "decision"), "do not reject H0");

    let o = gvalue(dir.path(), &["gvalue", "--p", "0.03,0.052"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("correlation"));
    let o = gvalue(
        dir.path(),
        &[
            "gvalue",
            "--p",
            "0.03,0.052",
            "--aggregation",
            "quantile:0.5",
            "--rho",
            "tw",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gvalue_from_data_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_sample(dir.path(), "sample.csv", 30, 0.3);
    let o = gvalue(
        dir.path(),
        &[
            "gvalue",
            "--data",
            "sample.csv",
            "--strategies",
            "t-test,wilcoxon",
            "--out",
            "g.csv",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let data = Dataset::from_csv_path(&path, None).unwrap();
    let outcomes = AnalysisSet::t_and_wilcoxon().evaluate(&data).unwrap();
    let c = solve_alpha_star(&JointNullModel::t_wilcoxon(), 0.05, 1e-10).unwrap();
    let report = g_value(&outcomes, &c).unwrap();
    let doc = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    for (k, v) in report.to_key_values() {
        assert!(
            doc.contains(&format!("{k},{v}\n")),
            "{k},{v} missing from\n{doc}"
        );
    }
    assert_eq!(field(&stdout(&o), "decision"), report.decision());
}

#[test]
fn simulate_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let o = gvalue(
        dir.path(),
        &[
            "simulate",
            "--replications",
            "1000",
            "--mu",
            "0",
            "--out",
            "sim.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("sim.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("procedure,mu,rejections,replications,rate,std_error")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let rate: f64 = r[4].parse().unwrap();
        assert!((0.03..=0.08).contains(&rate), "{r:?}");
    }

    let o = gvalue(
        dir.path(),
        &[
            "simulate",
            "--procedures",
            "liberal",
            "--mu",
            "0",
            "--replications",
            "1000",
            "--out",
            "one.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("one.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("liberal,0,"));

    assert_eq!(
        gvalue(dir.path(), &["simulate", "--replications", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        gvalue(dir.path(), &["simulate", "--procedures", "bogus"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_workers_and_seed_env() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["simulate", "--replications", "2000", "--mu", "0,0.5"];
    let run = |extra: &[&str], out: &str| {
        let mut args: Vec<&str> = base.to_vec();
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--out", out]);
        assert_eq!(gvalue(dir.path(), &args).status.code(), Some(0));
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let one = run(&["--workers", "1"], "w1.csv");
    assert_eq!(one, run(&["--workers", "4"], "w4.csv"));
    assert_ne!(one, run(&["--seed", "99"], "s99.csv"));

    let o = Command::new(env!("CARGO_BIN_EXE_gvalue"))
        .current_dir(dir.path())
        .env("GVALUE_SEED", "99")
        .args(base)
        .args(["--out", "env.csv"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("env.csv")).unwrap(),
        std::fs::read(dir.path().join("s99.csv")).unwrap()
    );
}

#[test]
fn resample_outputs_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_sample(dir.path(), "sample.csv", 40, 0.0);
    let o = gvalue(
        dir.path(),
        &[
            "resample",
            "--data",
            "sample.csv",
            "--replications",
            "2000",
            "--out",
            "null.csv",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let a_star: f64 = field(&stdout(&o), "alpha_star").parse().unwrap();
    assert!((0.05..=0.08).contains(&a_star));
    let null = gvalue_core::EmpiricalNull::read_csv(
        std::fs::File::open(dir.path().join("null.csv")).unwrap(),
    )
    .unwrap();
    assert_eq!(null.replications(), 2000);
    assert_eq!(null.strategy_ids(), ["t-test", "wilcoxon"]);

    let o = gvalue(
        dir.path(),
        &["resample", "--data", "sample.csv", "--replications", "50"],
    );
    assert_eq!(o.status.code(), Some(3));
    let o = gvalue(
        dir.path(),
        &["resample", "--data", "sample.csv", "--column", "y"],
    );
    assert_eq!(o.status.code(), Some(2));
    let o = gvalue(dir.path(), &["resample", "--data", "missing.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gvalue(
        dir.path(),
        &["resample", "--data", "sample.csv", "--target", "permute:z"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn degenerate_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("flat.csv"), "x\n1\n1\n1\n1\n").unwrap();
    let o = gvalue(dir.path(), &["gvalue", "--data", "flat.csv"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn manifest_is_append_only_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    write_sample(dir.path(), "sample.csv", 25, 0.0);
    let manifest = dir.path().join("gvalue-manifest.jsonl");
    assert_eq!(
        gvalue(dir.path(), &["correction", "--rho", "tw"])
            .status
            .code(),
        Some(0)
    );
    let first = std::fs::read_to_string(&manifest).unwrap();
    assert_eq!(first.lines().count(), 1);

    let o = gvalue(
        dir.path(),
        &[
            "resample",
            "--data",
            "sample.csv",
            "--replications",
            "1000",
            "--seed",
            "5",
            "--out",
            "null.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        gvalue(dir.path(), &["correction", "--alpha", "2"])
            .status
            .code(),
        Some(2)
    );
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert!(text.starts_with(&first));
    let entries: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(entries.len(), 3);
    assert_eq!(entries[1]["subcommand"], "resample");
    assert_eq!(entries[1]["seed"], 5);
    assert_eq!(entries[1]["outputs"][0], "null.csv");
    assert_eq!(entries[2]["exit_code"], 2);
    for e in &entries {
        for key in ["args", "version", "started", "finished"] {
            assert!(!e[key].is_null(), "{key}");
        }
    }

    let o = gvalue(
        dir.path(),
        &["replay", "--entry", "1", "--out-dir", "again"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(
        std::fs::read(dir.path().join("null.csv")).unwrap(),
        std::fs::read(dir.path().join("again/null.csv")).unwrap()
    );

    // Tampering with the original output is detected.
    std::fs::write(dir.path().join("null.csv"), "t-test,wilcoxon\n0.5,0.5\n").unwrap();
    let o = gvalue(
        dir.path(),
        &["replay", "--entry", "1", "--out-dir", "again2"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(
        std::fs::read_to_string(&manifest).unwrap().lines().count(),
        5
    );
}

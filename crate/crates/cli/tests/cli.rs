use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gssl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gssl"))
        .args(args)
        .env_remove("GRAPH_SSL_DATA")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--out", dir.to_str().unwrap(), "--nodes", "60", "--classes", "3"];
    args.extend_from_slice(extra);
    let o = gssl(&args);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn synth_output_validates() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("toy");
    synth(&ds, &["--p0", "0.4", "--p1", "0.05"]);
    let o = gssl(&["validate", "--dataset", ds.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("nodes     60"), "{out}");
    assert!(out.contains("classes   3"), "{out}");
    assert!(out.contains("invariants ok"), "{out}");
}

#[test]
fn block_limit_gives_one_component_per_class() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("cliques");
    synth(&ds, &["--p0", "1", "--p1", "0"]);
    let out = stdout(&gssl(&["validate", "--dataset", ds.to_str().unwrap()]));
    assert!(out.contains("connected components 3"), "{out}");
}

#[test]
fn duplicate_edges_warn_and_dedupe() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("dup");
    synth(&ds, &[]);
    let edges = ds.join("edges.tsv");
    let text = fs::read_to_string(&edges).unwrap();
    let original = stdout(&gssl(&["validate", "--dataset", ds.to_str().unwrap()]));
    let first = text.lines().next().unwrap().to_string();
    let (u, v) = first.split_once('\t').unwrap();
    fs::write(&edges, format!("{text}{first}\n{v}\t{u}\n")).unwrap();
    let o = gssl(&["validate", "--dataset", ds.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
    let edge_line = |s: &str| s.lines().find(|l| l.contains("edges")).unwrap().to_string();
    assert_eq!(edge_line(&stdout(&o)), edge_line(&original));
}

#[test]
fn out_of_range_label_exits_2_naming_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("bad");
    synth(&ds, &[]);
    let labels = ds.join("labels.tsv");
    let mut lines: Vec<String> = fs::read_to_string(&labels).unwrap().lines().map(String::from).collect();
    lines[4] = "7".into();
    fs::write(&labels, lines.join("\n") + "\n").unwrap();
    let o = gssl(&["validate", "--dataset", ds.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("labels.tsv:5"), "{}", stderr(&o));
}

#[test]
fn invalid_inputs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_synth = gssl(&["synth", "--out", tmp.path().join("x").to_str().unwrap(), "--p0", "1.5"]);
    assert_eq!(bad_synth.status.code(), Some(2));
    let missing = gssl(&["validate", "--dataset", tmp.path().join("nope").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
    let ds = tmp.path().join("toy");
    synth(&ds, &[]);
    let out = tmp.path().join("run");
    let unknown = gssl(&["train", "--dataset", ds.to_str().unwrap(), "--model", "gin", "--out", out.to_str().unwrap()]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn dataset_names_resolve_under_data_root() {
    let tmp = tempfile::tempdir().unwrap();
    synth(&tmp.path().join("toy"), &[]);
    let o = Command::new(env!("CARGO_BIN_EXE_gssl"))
        .args(["validate", "--dataset", "toy"])
        .env("GRAPH_SSL_DATA", tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("dataset toy"));
}

#[test]
fn train_is_deterministic_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("toy");
    synth(&ds, &["--p0", "0.4", "--p1", "0.05"]);
    let run = |name: &str| {
        let out = tmp.path().join(name);
        let o = gssl(&[
            "train", "--dataset", ds.to_str().unwrap(), "--model", "sbm_gcn", "--setting", "standard",
            "--seed", "3", "--max-epochs", "30", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let metrics = fs::read_to_string(a.join("metrics.json")).unwrap();
    assert_eq!(metrics, fs::read_to_string(b.join("metrics.json")).unwrap());
    let json: serde_json::Value = serde_json::from_str(&metrics).unwrap();
    assert!(json["test_acc"].as_f64().unwrap() > 0.0);
    assert_eq!(json["setting"], "standard");
    assert!(a.join("checkpoint.json").exists());
    let log = fs::read_to_string(a.join("train_log.jsonl")).unwrap();
    assert!(!log.is_empty() && log.lines().count() <= 30);
}

#[test]
fn eta_on_baseline_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("toy");
    synth(&ds, &[]);
    let o = gssl(&[
        "train", "--dataset", ds.to_str().unwrap(), "--model", "gcn", "--eta", "1", "--max-epochs", "5",
        "--out", tmp.path().join("run").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("--eta is ignored"), "{}", stderr(&o));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("toy");
    synth(&ds, &[]);
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "model = \"lsm_gcn\"\nhidden = 8\nmax_epochs = 5\nseed = 9\n").unwrap();
    let out = tmp.path().join("run");
    let o = gssl(&[
        "train", "--dataset", ds.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--hidden", "4",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["model"], "lsm_gcn");
    assert_eq!(json["config"]["hidden"], 4);
    assert_eq!(json["config"]["seed"], 9);

    fs::write(&cfg, "hiden = 8\n").unwrap();
    let o = gssl(&["train", "--dataset", ds.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn grid_writes_scores_and_selection() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("toy");
    synth(&ds, &[]);
    let out = tmp.path().join("grid");
    let o = gssl(&[
        "grid", "--dataset", ds.to_str().unwrap(), "--model", "gcn", "--hidden", "8", "--max-epochs", "5",
        "--jobs", "2", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);
    assert!(fs::read_to_string(out.join("best_config.toml")).unwrap().contains("hidden = 8"));
}

#[test]
fn bench_minimal_run_and_resume() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("toy");
    synth(&ds, &[]);
    let out = tmp.path().join("bench");
    let args = [
        "bench", "--dataset", ds.to_str().unwrap(), "--model", "gcn", "--setting", "standard", "--trials", "2",
        "--no-grid", "--max-epochs", "5", "--out", out.to_str().unwrap(),
    ];
    let o = gssl(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    assert!(out.join("summary.md").exists());

    let mut again = args.to_vec();
    again.push("--resume");
    let o = gssl(&again);
    assert!(o.status.success());
    assert!(stdout(&o).contains("(1 resumed)"), "{}", stdout(&o));
}

use std::path::Path;
use std::process::{Command, Output};

fn padpipe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_padpipe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = padpipe(args);
    assert!(
        out.status.success(),
        "padpipe {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Header line and data rows of a feature CSV.
fn csv_shape(path: &Path) -> (Vec<String>, usize) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.count())
}

fn synth(dir: &Path, n: &str) -> std::path::PathBuf {
    let corpus = dir.join("corpus");
    ok(&["synth", "--n", n, "--seed", "5", "--out", s(&corpus)]);
    corpus.join("manifest.json")
}

#[test]
fn synth_then_extract_fused_and_static() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("live");
    ok(&["synth", "--preset", "live", "--n", "10", "--seed", "5", "--out", s(&corpus)]);
    let manifest = corpus.join("manifest.json");
    let fused = dir.path().join("fused.csv");
    ok(&["extract", "--manifest", s(&manifest), "--set", "fused", "--out", s(&fused)]);
    let (header, rows) = csv_shape(&fused);
    assert_eq!(rows, 10);
    assert_eq!(header.len(), 3 + 215);
    assert_eq!(&header[..3], ["capture_id", "subject_id", "class"]);
    assert!(dir.path().join("fused.log.json").exists());

    let stat = dir.path().join("static.csv");
    ok(&["extract", "--manifest", s(&manifest), "--set", "static", "--out", s(&stat)]);
    let (header, rows) = csv_shape(&stat);
    assert_eq!(rows, 10);
    assert_eq!(header.len() - 3, 164);
}

#[test]
fn empty_manifest_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.json");
    std::fs::write(&manifest, r#"{"version": 1, "entries": []}"#).unwrap();
    let out = dir.path().join("f.csv");
    ok(&["extract", "--manifest", s(&manifest), "--set", "dynamic", "--out", s(&out)]);
    let (header, rows) = csv_shape(&out);
    assert_eq!(rows, 0);
    assert_eq!(header.len() - 3, 51);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // Usage and configuration errors.
    assert_eq!(padpipe(&["nonsense"]).status.code(), Some(2));
    assert_eq!(padpipe(&["--k", "1", "config"]).status.code(), Some(2));
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(padpipe(&["--config", s(&bad_cfg), "config"]).status.code(), Some(2));
    // Data errors.
    let missing = dir.path().join("missing.json");
    let out = dir.path().join("f.csv");
    assert_eq!(
        padpipe(&["extract", "--manifest", s(&missing), "--out", s(&out)]).status.code(),
        Some(3)
    );
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(
        padpipe(&["extract", "--manifest", s(&garbage), "--out", s(&out)]).status.code(),
        Some(3)
    );
    // Training on a table with one class only.
    let empty = dir.path().join("m.json");
    std::fs::write(&empty, r#"{"version": 1, "entries": []}"#).unwrap();
    ok(&["extract", "--manifest", s(&empty), "--out", s(&out)]);
    let model = dir.path().join("m.padmodel");
    assert_eq!(
        padpipe(&["train", "--features", s(&out), "--out", s(&model)]).status.code(),
        Some(3)
    );
    // Divergence: a huge learning rate overflows the weights.
    let manifest = synth(dir.path(), "6");
    let feats = dir.path().join("feats.csv");
    ok(&["extract", "--manifest", s(&manifest), "--out", s(&feats)]);
    let code = padpipe(&[
        "train", "--features", s(&feats), "--out", s(&model), "--k", "2", "--hidden", "8",
        "--epochs", "20", "--learning-rate", "1e300",
    ])
    .status
    .code();
    assert_eq!(code, Some(4));
}

#[test]
fn config_file_and_flags_compose() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 11\nepochs = 3\n").unwrap();
    let out = ok(&["--config", s(&cfg), "--epochs", "9", "config"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 11"));
    assert!(text.contains("epochs = 9"));
}

#[test]
fn train_eval_roundtrip_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "8");
    let feats = dir.path().join("f.csv");
    ok(&["extract", "--manifest", s(&manifest), "--out", s(&feats)]);
    let feats2 = dir.path().join("f2.csv");
    ok(&["extract", "--manifest", s(&manifest), "--out", s(&feats2), "--threads", "1"]);
    assert_eq!(std::fs::read(&feats).unwrap(), std::fs::read(&feats2).unwrap());

    let train = |tag: &str| {
        let model = dir.path().join(format!("{tag}.padmodel"));
        let report = dir.path().join(format!("{tag}.json"));
        ok(&[
            "train", "--features", s(&feats), "--set", "dynamic", "--out", s(&model),
            "--report", s(&report), "--k", "2", "--hidden", "16,16", "--epochs", "5",
        ]);
        (std::fs::read(&model).unwrap(), model)
    };
    let (a, model) = train("a");
    let (b, _) = train("b");
    assert_eq!(a, b);

    let roc = dir.path().join("roc.csv");
    let report = dir.path().join("eval.json");
    ok(&[
        "eval", "--model", s(&model), "--features", s(&feats), "--roc", s(&roc), "--report",
        s(&report),
    ]);
    let roc_text = std::fs::read_to_string(&roc).unwrap();
    assert!(roc_text.starts_with("# padpipe roc set=dynamic"));
    assert!(roc_text.lines().nth(1).unwrap() == "threshold,bpcer,apcer");
    assert!(roc_text.lines().nth(2).unwrap().starts_with("inf,"));
    let ev: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(ev["n_rows"], 16);

    // A static table cannot feed a dynamic model.
    let stat = dir.path().join("s.csv");
    ok(&["extract", "--manifest", s(&manifest), "--set", "static", "--out", s(&stat)]);
    let out = padpipe(&["eval", "--model", s(&model), "--features", s(&stat)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn clean_writes_rebased_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path(), "2");
    let cleaned = dir.path().join("elsewhere").join("clean.json");
    let report = dir.path().join("clean_report.json");
    ok(&["clean", "--manifest", s(&manifest), "--out", s(&cleaned), "--report", s(&report)]);
    let out = dir.path().join("f.csv");
    ok(&["extract", "--manifest", s(&cleaned), "--set", "static", "--out", s(&out)]);
    assert_eq!(csv_shape(&out).1, 4);
    let out = padpipe(&["clean", "--sigma", "3.5", "--manifest", s(&manifest), "--out", s(&cleaned)]);
    assert!(out.status.success());
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["report"]["removed"], 0);
    assert_eq!(rep["run_config_hash"].as_str().unwrap().len(), 16);
}

use std::path::Path;
use std::process::{Command, Output};

use opgan::manifest::Manifest;
use opgan::wav::{read_wav, write_wav};

fn opgan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opgan"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run opgan")
}

fn ok(args: &[&str]) -> String {
    let out = opgan(args);
    assert!(
        out.status.success(),
        "opgan {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn toy(dir: &Path) {
    ok(&["synth", "--out-dir", s(dir), "--clean-files", "8", "--seed", "3"]);
}

fn corrupt(toy: &Path, out: &Path) {
    ok(&[
        "corrupt",
        "--clean-dir",
        s(&toy.join("clean")),
        "--rir-dir",
        s(&toy.join("rirs")),
        "--mixture-dir",
        s(&toy.join("mixtures")),
        "--out-dir",
        s(out),
        "--composition",
        "all:2,awgn:1,mix:1,reverb:1,val.all:2,test.all:2,test.awgn:1",
        "--seed",
        "4",
    ]);
}

#[test]
fn corrupt_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    corrupt(dir.path(), &dir.path().join("a"));
    corrupt(dir.path(), &dir.path().join("b"));
    let a = std::fs::read_to_string(dir.path().join("a/manifest.jsonl")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b/manifest.jsonl")).unwrap();
    assert_eq!(a, b);
    let m = Manifest::read(dir.path().join("a/manifest.jsonl")).unwrap();
    assert_eq!(m.records.len(), 10);
    for r in &m.records {
        assert!((-6.0..=6.0).contains(&r.achieved_sdr_db));
        let x = std::fs::read(m.resolve(&r.corrupted_path)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(&r.corrupted_path)).unwrap();
        assert_eq!(x, y);
    }
}

#[test]
fn missing_clean_dir_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = opgan(&[
        "corrupt",
        "--clean-dir",
        s(&dir.path().join("nope")),
        "--out-dir",
        s(&dir.path().join("out")),
        "--composition",
        "awgn:1",
    ]);
    assert!(!out.status.success());
}

#[test]
fn unknown_config_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "batch_size = 2\nlearning_rate = 0.1\n").unwrap();
    let out = opgan(&["train", "--config", s(&cfg), "--manifest", s(&dir.path().join("m.jsonl"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));
}

#[test]
fn train_restore_eval_round() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    toy(root);
    corrupt(root, &root.join("ds"));
    let manifest = root.join("ds/manifest.jsonl");
    let cfg = root.join("run.cfg");
    std::fs::write(&cfg, "# tiny run\nbatch_size = 2\nvalidate_every = 2\n").unwrap();
    ok(&["train", "--manifest", s(&manifest), "--config", s(&cfg), "--out", s(&root.join("run")), "--max-iterations", "3"]);
    for f in ["best.ckpt", "last.ckpt", "train_log.jsonl"] {
        assert!(root.join("run").join(f).is_file(), "{f} missing");
    }
    let log = std::fs::read_to_string(root.join("run/train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);
    let ckpt = root.join("run/best.ckpt");

    let info = ok(&["info", "--checkpoint", s(&ckpt), "--runs", "1"]);
    assert!(info.contains("1141584"), "{info}");

    // single files of arbitrary length keep their length
    for len in [32000usize, 50000] {
        let input = root.join(format!("in{len}.wav"));
        let output = root.join(format!("out{len}.wav"));
        let x: Vec<f32> = (0..len).map(|i| 0.3 * (i as f32 * 0.01).sin()).collect();
        write_wav(&input, 16000, &x).unwrap();
        ok(&["restore", "--checkpoint", s(&ckpt), "--in", s(&input), "--out", s(&output)]);
        assert_eq!(read_wav(&output).unwrap().samples.len(), len);
    }

    let restored = root.join("restored");
    ok(&["restore", "--checkpoint", s(&ckpt), "--manifest", s(&manifest), "--out-dir", s(&restored), "--split", "test"]);
    let m = Manifest::read(&manifest).unwrap();
    let test: Vec<_> = m.split(opgan::manifest::Split::Test).collect();
    assert_eq!(test.len(), 3);
    for r in &test {
        assert!(opgan::metrics::restored_path_for(r, &restored).is_file());
    }
    let report = root.join("report.json");
    ok(&["eval", "--manifest", s(&manifest), "--restored-dir", s(&restored), "--split", "test", "--report", s(&report)]);
    assert!(root.join("report.csv").is_file());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["items"].as_array().unwrap().len(), 3);
}

#[test]
fn eval_oracles_from_copies() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    toy(root);
    corrupt(root, &root.join("ds"));
    let manifest = root.join("ds/manifest.jsonl");
    let m = Manifest::read(&manifest).unwrap();
    let (clean_copy, corrupted_copy) = (root.join("clean_copy"), root.join("corrupted_copy"));
    std::fs::create_dir_all(&clean_copy).unwrap();
    std::fs::create_dir_all(&corrupted_copy).unwrap();
    for r in &m.records {
        let name = Path::new(&r.corrupted_path).file_name().unwrap();
        std::fs::copy(m.resolve(&r.clean_path), clean_copy.join(name)).unwrap();
        std::fs::copy(m.resolve(&r.corrupted_path), corrupted_copy.join(name)).unwrap();
    }

    let report = root.join("clean.json");
    ok(&["eval", "--manifest", s(&manifest), "--restored-dir", s(&clean_copy), "--metrics", "sdr", "--report", s(&report)]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for item in v["items"].as_array().unwrap() {
        assert_eq!(item["restored"]["sdr"].as_f64().unwrap(), 100.0);
        let keys: Vec<_> = item["restored"].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["sdr"]);
    }

    let report = root.join("same.json");
    ok(&["eval", "--manifest", s(&manifest), "--restored-dir", s(&corrupted_copy), "--report", s(&report)]);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for row in v["summary"].as_array().unwrap() {
        assert_eq!(row["corrupted_mean"], row["restored_mean"]);
    }
}

#[test]
fn eval_reports_missing_restored_files() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    toy(root);
    corrupt(root, &root.join("ds"));
    let out = opgan(&[
        "eval",
        "--manifest",
        s(&root.join("ds/manifest.jsonl")),
        "--restored-dir",
        s(&root.join("empty")),
        "--report",
        s(&root.join("r.json")),
    ]);
    assert!(!out.status.success());
}

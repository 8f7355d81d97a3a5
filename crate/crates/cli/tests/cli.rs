use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data/toy")
        .join(name)
}

fn engine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ars-engine"))
        .args(args)
        .output()
        .expect("spawn ars-engine")
}

fn code(args: &[&str]) -> i32 {
    engine(args).status.code().unwrap()
}

/// Paths as `'static` argument strings; leaking is fine in a test process.
fn s(p: &Path) -> &'static str {
    Box::leak(p.to_str().unwrap().to_owned().into_boxed_str())
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    /// Stats and frozen labels for the toy corpus.
    fn new() -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        let stats = ws.path("stats.json");
        assert_eq!(
            code(&[
                "stats",
                "--corpus",
                s(&toy("corpus.jsonl")),
                "--out",
                s(&stats)
            ]),
            0
        );
        let sentiment = format!("file:{}", s(&toy("sentiment.jsonl")));
        let out = engine(&[
            "label",
            "--corpus",
            s(&toy("corpus.jsonl")),
            "--stats",
            s(&stats),
            "--sentiment",
            &sentiment,
            "--out",
            s(&ws.path("labels.jsonl")),
            "--freeze-ars",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }
}

#[test]
fn help_documents_file_formats() {
    let out = engine(&["--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in [
        "corpus",
        "candidates",
        "log-probs",
        "Exit codes",
        "ARS_ENGINE_THREADS",
    ] {
        assert!(text.contains(needle), "--help lacks {needle}");
    }
}

#[test]
fn schema_errors_exit_2() {
    let ws = Workspace {
        dir: tempfile::tempdir().unwrap(),
    };
    let bad = ws.write("bad.jsonl", "{\"image_id\": \"a\", \"comments\": 3}\n");
    let out = engine(&[
        "ingest",
        "--corpus",
        s(&bad),
        "--out",
        s(&ws.path("o.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let range = ws.write(
        "range.jsonl",
        "{\"image_id\":\"a\",\"aesthetic_score\":11,\"comments\":[{\"comment_id\":\"c\",\"text\":\"x\"}]}\n",
    );
    assert_eq!(
        code(&[
            "ingest",
            "--corpus",
            s(&range),
            "--out",
            s(&ws.path("o.jsonl"))
        ]),
        2
    );
    assert_eq!(
        code(&[
            "ingest",
            "--corpus",
            s(&ws.path("missing")),
            "--out",
            s(&ws.path("o.jsonl"))
        ]),
        2
    );
}

#[test]
fn degenerate_statistics_exit_4() {
    let ws = Workspace {
        dir: tempfile::tempdir().unwrap(),
    };
    let same = ws.write(
        "same.jsonl",
        "{\"image_id\":\"a\",\"comments\":[{\"comment_id\":\"c\",\"text\":\"one two. three four\"}]}\n",
    );
    assert_eq!(
        code(&[
            "stats",
            "--corpus",
            s(&same),
            "--out",
            s(&ws.path("s.json"))
        ]),
        4
    );
}

#[test]
fn missing_sentiment_exits_3_unless_lenient() {
    let ws = Workspace::new();
    let partial = ws.write(
        "partial.jsonl",
        "{\"text\":\"Beautiful light\",\"positive\":0.9,\"negative\":0.0}\n",
    );
    let spec = format!("file:{}", s(&partial));
    let mut args = vec![
        "label",
        "--corpus",
        s(&toy("corpus.jsonl")),
        "--stats",
        s(&ws.dir.path().join("stats.json")),
        "--sentiment",
        &spec,
    ];
    let out_path = ws.path("l.jsonl");
    args.extend(["--out", s(&out_path)]);
    assert_eq!(code(&args), 3);
    args.push("--lenient");
    assert_eq!(code(&args), 0);
}

#[test]
fn stats_from_another_corpus_need_force() {
    let ws = Workspace::new();
    let other = ws.write(
        "other.jsonl",
        "{\"image_id\":\"z\",\"comments\":[{\"comment_id\":\"c\",\"text\":\"sharp bird. lovely soft light on water\"}]}\n",
    );
    let stats = ws.path("stats.json");
    let out = ws.path("l.jsonl");
    let base = [
        "label",
        "--corpus",
        s(&other),
        "--stats",
        s(&stats),
        "--out",
        s(&out),
    ];
    assert_eq!(code(&base), 2);
    let mut forced = base.to_vec();
    forced.push("--force");
    assert_eq!(code(&forced), 0);
}

#[test]
fn floor_auto_requires_frozen_mean() {
    let ws = Workspace {
        dir: tempfile::tempdir().unwrap(),
    };
    let stats = ws.path("stats.json");
    assert_eq!(
        code(&[
            "stats",
            "--corpus",
            s(&toy("corpus.jsonl")),
            "--out",
            s(&stats)
        ]),
        0
    );
    let out = ws.path("sel.jsonl");
    let args = [
        "select",
        "--candidates",
        s(&toy("candidates.jsonl")),
        "--stats",
        s(&stats),
        "--out",
        s(&out),
    ];
    assert_eq!(code(&args), 2);
    let mut explicit = args.to_vec();
    explicit.extend(["--floor", "-1"]);
    assert_eq!(code(&explicit), 0);
}

#[test]
fn process_backends_through_serve() {
    let ws = Workspace::new();
    let serve = format!(
        "process:{} serve --dim 64",
        env!("CARGO_BIN_EXE_ars-engine")
    );
    let stats = ws.path("stats.json");
    let via_process = ws.path("a.jsonl");
    let via_builtin = ws.path("b.jsonl");
    let common = [
        "select",
        "--candidates",
        s(&toy("candidates.jsonl")),
        "--stats",
        s(&stats),
        "--floor",
        "0",
    ];

    let mut a = common.to_vec();
    a.extend([
        "--embed",
        &serve,
        "--sentiment",
        &serve,
        "--out",
        s(&via_process),
    ]);
    let out = Command::new(env!("CARGO_BIN_EXE_ars-engine"))
        .args(a)
        .env("ARS_ENGINE_THREADS", "2")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let mut b = common.to_vec();
    b.extend([
        "--embed",
        "hashed:64",
        "--sentiment",
        "lexicon",
        "--out",
        s(&via_builtin),
    ]);
    assert_eq!(code(&b), 0);
    assert_eq!(
        std::fs::read(&via_process).unwrap(),
        std::fs::read(&via_builtin).unwrap()
    );

    let mut broken = common.to_vec();
    broken.extend(["--embed", "process:false", "--out", s(&via_process)]);
    assert_eq!(code(&broken), 3);
}

#[test]
fn bad_backend_spec_exits_2() {
    let ws = Workspace::new();
    let args = [
        "select",
        "--candidates",
        s(&toy("candidates.jsonl")),
        "--stats",
        s(&ws.path("stats.json")),
        "--embed",
        "telepathy",
        "--out",
        s(&ws.path("x")),
    ];
    assert_eq!(code(&args), 2);
}

#[test]
fn loss_rejects_unknown_keys() {
    let ws = Workspace::new();
    let rows = ws.write(
        "lp.jsonl",
        "{\"image_id\":\"nope\",\"comment_id\":\"c1\",\"sentence_index\":0,\"log_probs\":[-1.0]}\n",
    );
    let args = [
        "loss",
        "--labels",
        s(&ws.path("labels.jsonl")),
        "--logprobs",
        s(&rows),
        "--out",
        s(&ws.path("loss.json")),
    ];
    let out = engine(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn loss_writes_weighted_and_plain_totals() {
    let ws = Workspace::new();
    let out = ws.path("loss.json");
    let weights = ws.path("w.jsonl");
    let args = [
        "loss",
        "--labels",
        s(&ws.path("labels.jsonl")),
        "--logprobs",
        s(&toy("logprobs.jsonl")),
        "--out",
        s(&out),
        "--weights-out",
        s(&weights),
    ];
    assert_eq!(code(&args), 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["total"].as_f64().unwrap() > 0.0);
    assert!(v["unweighted_total"].as_f64().unwrap() > 0.0);
    let rows = std::fs::read_to_string(toy("logprobs.jsonl"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(v["sentence_count"].as_u64().unwrap() as usize, rows);
    let first: serde_json::Value = serde_json::from_str(
        std::fs::read_to_string(&weights)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(first["key"].as_array().unwrap().len(), 3);
    assert!(ws.path("loss.json.manifest.json").exists());
}

#[test]
fn report_histogram_counts_every_label() {
    let ws = Workspace::new();
    let out = ws.path("hist.csv");
    assert_eq!(
        code(&[
            "report",
            "--labels",
            s(&ws.path("labels.jsonl")),
            "--bin-width",
            "1",
            "--out",
            s(&out)
        ]),
        0
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bin_start,count"));
    let total: u64 = lines
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    let labels = std::fs::read_to_string(ws.path("labels.jsonl"))
        .unwrap()
        .lines()
        .count() as u64;
    assert_eq!(total, labels);
    assert_eq!(
        code(&[
            "report",
            "--labels",
            s(&ws.path("labels.jsonl")),
            "--bin-width",
            "0",
            "--out",
            s(&out)
        ]),
        2
    );
}

#[test]
fn partition_uses_frozen_moments() {
    let ws = Workspace::new();
    let out = ws.path("p.json");
    let args = [
        "partition",
        "--labels",
        s(&ws.path("labels.jsonl")),
        "--stats",
        s(&ws.path("stats.json")),
        "--alpha",
        "0.2",
        "--rule",
        "leq",
        "--out",
        s(&out),
    ];
    assert_eq!(code(&args), 0);
    let p: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let threshold = p["threshold"].as_f64().unwrap();
    let members = p["members"].as_array().unwrap();
    assert!(!members.is_empty());
    assert!(members
        .iter()
        .all(|m| m["ars"].as_f64().unwrap() <= threshold));
    assert!(members[0].get("image_id").is_some());
}

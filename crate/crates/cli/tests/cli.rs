use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::io::Write;

use tempfile::TempDir;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn morphtok(args: &[&str]) -> Output {
    morphtok_stdin(args, "")
}

fn morphtok_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_morphtok"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn morphtok");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Trains a CBPE model with lookup pre-tokenization on the fixture corpus.
fn trained(dir: &TempDir) -> PathBuf {
    let model = dir.path().join("cbpe.mt");
    let out = morphtok(&[
        "train",
        "--algorithm",
        "cbpe",
        "--merges",
        "300",
        "--script-profile",
        "devanagari",
        "--pretokenize",
        "lookup",
        "--lookup",
        s(&data("lookup.tsv")),
        s(&data("corpus.txt")),
        s(&model),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    model
}

#[test]
fn train_writes_model_vocab_trace_and_summary() {
    let dir = TempDir::new().unwrap();
    let model = trained(&dir);
    for suffix in ["", ".vocab", ".trace"] {
        let p = format!("{}{suffix}", model.display());
        assert!(Path::new(&p).is_file(), "missing {p}");
    }
    let text = fs::read_to_string(&model).unwrap();
    assert!(text.starts_with("#morphtok v1 algorithm=cbpe profile=devanagari"));
    assert_eq!(text.lines().count(), 301);
    let trace = fs::read_to_string(format!("{}.trace", model.display())).unwrap();
    assert!(trace.lines().any(|l| l.ends_with("\tविद्यालय\tविद्या आलय")));

    let again = dir.path().join("again.mt");
    let out = morphtok(&[
        "train", "--algorithm", "cbpe", "--merges", "300", "--script-profile", "devanagari",
        "--pretokenize", "lookup", "--lookup", s(&data("lookup.tsv")), s(&data("corpus.txt")), s(&again),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read(&again).unwrap(), fs::read(&model).unwrap());
    let summary = stdout(&out);
    assert!(summary.contains("merges_learned") && summary.contains("300"), "{summary}");
    assert!(summary.lines().any(|l| l.starts_with("obvious_merges_strict ") && l.ends_with(" 0")), "{summary}");
}

#[test]
fn zero_merges_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = morphtok(&["train", "--algorithm", "bpe", "--merges", "0", s(&data("corpus.txt")), s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cbpe_without_profile_names_the_flag() {
    let dir = TempDir::new().unwrap();
    let out = morphtok(&["train", "--algorithm", "cbpe", "--merges", "5", s(&data("corpus.txt")), s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--script-profile"), "{}", stderr(&out));
}

#[test]
fn lookup_without_path_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = morphtok(&[
        "train", "--algorithm", "bpe", "--merges", "5", "--pretokenize", "lookup",
        s(&data("corpus.txt")), s(&dir.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--lookup"));
}

#[test]
fn encode_decode_round_trip_with_trace() {
    let dir = TempDir::new().unwrap();
    let model = trained(&dir);
    let encoded = dir.path().join("enc.txt");
    let trace = dir.path().join("enc.trace");
    let out = morphtok(&[
        "encode", "--model", s(&model), "--pretokenize", "lookup", "--lookup", s(&data("lookup.tsv")),
        "--trace-out", s(&trace), "-o", s(&encoded), s(&data("corpus.txt")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stream = fs::read_to_string(&encoded).unwrap();
    assert!(stream.contains("**"));
    let out = morphtok(&["decode", "--trace", s(&trace), s(&encoded)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(out.stdout, fs::read(data("corpus.txt")).unwrap());
}

#[test]
fn segment_marker_on_lookup_split() {
    let dir = TempDir::new().unwrap();
    let model = trained(&dir);
    let out = morphtok_stdin(
        &["encode", "--model", s(&model), "--pretokenize", "lookup", "--lookup", s(&data("lookup.tsv"))],
        "उपजता है\n",
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "उपज** ता है\n");
}

#[test]
fn dangling_continuation_fails() {
    let out = morphtok_stdin(&["decode"], "कल् प@@\n");
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("dangling continuation"), "{}", stderr(&out));
}

#[test]
fn profile_mismatch_is_rejected() {
    let dir = TempDir::new().unwrap();
    let model = trained(&dir);
    let profile = dir.path().join("other.profile");
    fs::write(&profile, "#morphtok-profile v1 name=other\ndependent_vowel\t093E\n").unwrap();
    let out = morphtok_stdin(&["encode", "--model", s(&model), "--script-profile", s(&profile)], "क\n");
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("other"), "{}", stderr(&out));
}

#[test]
fn fertility_of_whole_word_vocabulary_is_one() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("c.txt");
    fs::write(&corpus, "कलम कलम\nकलम\n").unwrap();
    let model = dir.path().join("m.mt");
    let out = morphtok(&["train", "--algorithm", "bpe", "--merges", "2", s(&corpus), s(&model)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let records = dir.path().join("rec.tsv");
    let out = morphtok(&["metrics", "fertility", "--model", s(&model), "--records", s(&records), s(&corpus)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).lines().next().unwrap().ends_with("1.0000"), "{}", stdout(&out));
    assert_eq!(fs::read_to_string(&records).unwrap().lines().next().unwrap(), "fertility\tm\t1.0000");
}

#[test]
fn audit_merges_on_cbpe_model_is_zero() {
    let dir = TempDir::new().unwrap();
    let model = trained(&dir);
    let out = morphtok(&["metrics", "audit-merges", "--model", s(&model), "--json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains(r#"{"metric":"obvious_merges_strict","config":"cbpe","value":"0"}"#), "{text}");
    assert!(text.contains(r#"{"metric":"obvious_merges_prefix","config":"cbpe","value":"0"}"#), "{text}");
}

#[test]
fn audit_merges_on_bpe_needs_a_profile() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("bpe.mt");
    let out = morphtok(&["train", "--algorithm", "bpe", "--merges", "200", s(&data("corpus.txt")), s(&model)]);
    assert!(out.status.success());
    let out = morphtok(&["metrics", "audit-merges", "--model", s(&model)]);
    assert_eq!(out.status.code(), Some(2));
    let out = morphtok(&["metrics", "audit-merges", "--model", s(&model), "--script-profile", "devanagari"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let strict = stdout(&out)
        .lines()
        .find(|l| l.starts_with("obvious_merges_strict "))
        .map(|l| l.split_whitespace().last().unwrap().parse::<u64>().unwrap())
        .unwrap();
    assert!(strict > 0);
}

#[test]
fn renyi_and_token_audit_run() {
    let dir = TempDir::new().unwrap();
    let model = trained(&dir);
    let out = morphtok(&["metrics", "renyi", "--alpha", "2.5", "--model", s(&model), s(&data("corpus.txt"))]);
    assert!(out.status.success(), "{}", stderr(&out));
    let value: f64 = stdout(&out).lines().next().unwrap().split_whitespace().last().unwrap().parse().unwrap();
    assert!(value > 0.0 && value < 1.0);
    let out = morphtok(&["metrics", "audit-tokens", "--model", s(&model), s(&data("corpus.txt"))]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).lines().any(|l| l.starts_with("dv_tokens_prefix ") && l.ends_with(" 0")));
}

#[test]
fn sample_is_reproducible_and_needs_a_seed() {
    let run = || morphtok(&["evaltok", "sample", "--n", "10", "--seed", "7", s(&data("corpus.txt"))]);
    let (a, b) = (run(), run());
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 10);
    let out = morphtok(&["evaltok", "sample", "--n", "10", s(&data("corpus.txt"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--seed"));
}

#[test]
fn export_then_aggregate() {
    let dir = TempDir::new().unwrap();
    let model = trained(&dir);
    let words = dir.path().join("words.txt");
    fs::write(&words, "उपजता\nकार्यालय\n").unwrap();
    let sheet = dir.path().join("sheet.tsv");
    let system_b = format!("lookup={},{}", model.display(), data("lookup.tsv").display());
    let out = morphtok(&[
        "evaltok", "export", "--words", s(&words), "--system", &format!("cbpe={}", model.display()),
        "--system", &system_b, "-o", s(&sheet),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&sheet).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "word\tcbpe\tscore\tlookup\tscore");
    let row = lines.next().unwrap();
    assert!(row.starts_with("उपजता\t") && row.contains("@@**"), "{row}");

    // Two annotators; per-item means first.
    let fill = |scores: [&str; 4]| {
        let mut out = String::from("word\tcbpe\tscore\tlookup\tscore\n");
        out.push_str(&format!("w1\tw@@ 1\t{}\tw** 1\t{}\n", scores[0], scores[1]));
        out.push_str(&format!("w2\tw2\t{}\tw2\t{}\n", scores[2], scores[3]));
        out
    };
    let ann1 = dir.path().join("ann1.tsv");
    let ann2 = dir.path().join("ann2.tsv");
    fs::write(&ann1, fill(["4", "4", "2", "3"])).unwrap();
    fs::write(&ann2, fill(["3", "4", "2", "1"])).unwrap();
    let out = morphtok(&["evaltok", "aggregate", "--json", s(&ann1), s(&ann2)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    // cbpe: (3.5 + 2) / 2 = 11/4; lookup: (4 + 2) / 2 = 3
    assert!(text.contains(r#"{"metric":"evaltok_mean_exact","config":"cbpe","value":"11/4"}"#), "{text}");
    assert!(text.contains(r#"{"metric":"evaltok_mean","config":"lookup","value":"3.0000"}"#), "{text}");
    assert!(text.contains(r#"{"metric":"evaltok_score_2","config":"cbpe","value":"2"}"#), "{text}");
}

#[test]
fn aggregate_rejects_out_of_range_scores() {
    let dir = TempDir::new().unwrap();
    let sheet = dir.path().join("bad.tsv");
    fs::write(&sheet, "word\tsys\tscore\nक\tक\t3\nख\tख\t5\n").unwrap();
    let out = morphtok(&["evaltok", "aggregate", s(&sheet)]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("row 3") && err.contains("\"5\""), "{err}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    fs::copy(data("lookup.tsv"), dir.path().join("lookup.tsv")).unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        "algorithm = \"cbpe\"\nmerges = 50\nscript_profile = \"devanagari\"\npretokenize = \"lookup\"\nlookup = \"lookup.tsv\"\n",
    )
    .unwrap();
    let model = dir.path().join("m.mt");
    let out = morphtok(&["train", "--config", s(&config), "--merges", "20", s(&data("corpus.txt")), s(&model)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&model).unwrap().lines().count(), 21);
    assert!(Path::new(&format!("{}.trace", model.display())).is_file());

    fs::write(&config, "algorithm = \"cbpe\"\nmerge = 5\n").unwrap();
    let out = morphtok(&["train", "--config", s(&config), s(&data("corpus.txt")), s(&model)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn external_segmentations_write_rejections() {
    let dir = TempDir::new().unwrap();
    let segs = dir.path().join("segs.tsv");
    fs::write(&segs, "उपजता\tउपज\tता\nखाली\t\tली\nहडबडाना\tहड\tबडा\tना\n").unwrap();
    let model = dir.path().join("m.mt");
    let out = morphtok(&[
        "train", "--algorithm", "bpe", "--merges", "30", "--pretokenize", "external", "--lookup", s(&segs),
        "--max-segments", "2", s(&data("corpus.txt")), s(&model),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rejected = fs::read_to_string(format!("{}.rejected", model.display())).unwrap();
    assert_eq!(rejected, "खाली\tempty_segment\nहडबडाना\ttoo_many_segments\n");
}

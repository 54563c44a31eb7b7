use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_maxmatch"))
}

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: TempDir::new().unwrap() }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const ABCD_VOCAB: &str = "a\nb\nc\nd\nabc\nbcd\n[UNK]\n";

#[test]
fn tokenize_traces() {
    let ws = Workspace::new();
    let vocab = ws.file("v.txt", ABCD_VOCAB);
    let out = run(&["tokenize", "--vocab", s(&vocab), "--dropout", "0", "--prefix", ""], "abcd\nabce\n\nabcd abce\n");
    assert!(out.status.success());
    assert_eq!(stdout(&out), "abc d\n[UNK]\n\nabc d [UNK]\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed: 0"));
}

#[test]
fn tokenize_empty_input() {
    let ws = Workspace::new();
    let vocab = ws.file("v.txt", ABCD_VOCAB);
    let out = run(&["tokenize", "--vocab", s(&vocab)], "");
    assert!(out.status.success());
    assert_eq!(stdout(&out), "");
}

#[test]
fn jsonl_agrees_with_text() {
    let ws = Workspace::new();
    let vocab = ws.file("v.txt", "un\n##aff\n##able\n##a\n##b\n[UNK]\n");
    let input = "unaffable unab\nxyz un\n";
    let common = ["tokenize", "--vocab", s(&vocab), "--dropout", "0.5", "--seed", "11"];
    let text = stdout(&run(&common, input));
    let jsonl = stdout(&run(&[&common[..], &["--format", "jsonl"]].concat(), input));
    let from_json: Vec<String> = jsonl
        .lines()
        .map(|line| {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["tokens"].as_array().unwrap().len(), v["ids"].as_array().unwrap().len());
            assert_eq!(v["tokens"].as_array().unwrap().len(), v["spans"].as_array().unwrap().len());
            v["tokens"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect::<Vec<_>>().join(" ")
        })
        .collect();
    assert_eq!(text.lines().collect::<Vec<_>>(), from_json);
}

#[test]
fn sample_epochs() {
    let ws = Workspace::new();
    let vocab = ws.file("v.txt", "a\nb\nab\n[UNK]\n");
    let corpus = ws.file("corpus.txt", "ab\nab ab\n");

    // one deterministic epoch equals the tokenize output
    let prefix = ws.path("one");
    let out = run(&["sample", "--vocab", s(&vocab), s(&corpus), "--epochs", "1", "--dropout", "0", "--prefix", "", "--output", s(&prefix)], "");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let epoch = fs::read_to_string(ws.path("one.epoch1")).unwrap();
    let direct = stdout(&run(&["tokenize", "--vocab", s(&vocab), s(&corpus), "--prefix", ""], ""));
    assert_eq!(epoch, direct);

    // epochs differ for some seed once both tokenizations are possible
    let single = ws.file("single.txt", "ab\n");
    let differing = (0..50u64).find(|seed| {
        let prefix = ws.path(&format!("s{seed}"));
        let seed = seed.to_string();
        let out = run(&["sample", "--vocab", s(&vocab), s(&single), "--epochs", "2", "--dropout", "0.5", "--prefix", "", "--seed", &seed, "--output", s(&prefix)], "");
        assert!(out.status.success());
        let e1 = fs::read(format!("{}.epoch1", prefix.display())).unwrap();
        let e2 = fs::read(format!("{}.epoch2", prefix.display())).unwrap();
        e1 != e2
    });
    assert!(differing.is_some());

    // reruns are byte-identical
    let read_all = |tag: &str| -> Vec<Vec<u8>> {
        let prefix = ws.path(tag);
        let out = run(&["sample", "--vocab", s(&vocab), s(&corpus), "--epochs", "3", "--dropout", "0.5", "--prefix", "", "--seed", "9", "--output", s(&prefix)], "");
        assert!(out.status.success());
        (1..=3).map(|k| fs::read(format!("{}.epoch{k}", prefix.display())).unwrap()).collect()
    };
    assert_eq!(read_all("r1"), read_all("r2"));
}

#[test]
fn stats_histogram() {
    let ws = Workspace::new();
    let vocab = ws.file("v.txt", "a\nb\nab\n[UNK]\n");
    let corpus = ws.file("corpus.txt", &"abab\n".repeat(100));
    let summary = ws.path("summary.json");
    let out = run(&["stats", s(&corpus), "--vocab", s(&vocab), "--prefix", "", "--dropout", "0", "--trials", "10", "--summary", s(&summary)], "");
    assert!(out.status.success());
    assert_eq!(stdout(&out), "2\t2000\n");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["mean_token_length"], 2.0);
    assert_eq!(json["unk_rate"], 0.0);
    assert_eq!(json["mean_tokens_per_word"], 2.0);
    assert_eq!(json["relative_frequency"]["2"], 1.0);
}

#[test]
fn stats_empty_corpus_fails() {
    let ws = Workspace::new();
    let vocab = ws.file("v.txt", "a\n[UNK]\n");
    let corpus = ws.file("empty.txt", "");
    let out = run(&["stats", s(&corpus), "--vocab", s(&vocab)], "");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));
}

#[test]
fn compare_full_dropout_is_all_characters() {
    let ws = Workspace::new();
    let vocab = ws.file("v.txt", "a\nb\nc\n##a\n##b\n##c\nab\n##ab\nabc\n##abc\n[UNK]\n");
    let merges = ws.file("merges.txt", "#version: 0.2\na b\nab c\n");
    let corpus = ws.file("corpus.txt", "abc ab cab\nba abcabc\n");
    let prefix = ws.path("cmp");
    let out = run(&["compare", s(&corpus), "--vocab", s(&vocab), "--merges", s(&merges), "--dropout", "1", "--trials", "3", "--out", s(&prefix)], "");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for method in ["maxmatch", "bpe"] {
        let tsv = fs::read_to_string(format!("{}.{method}.tsv", prefix.display())).unwrap();
        assert_eq!(tsv, "1\t48\n", "{method}");
        assert!(Path::new(&format!("{}.{method}.json", prefix.display())).exists());
    }
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["length1_share"]["maxmatch"], 1.0);
    assert_eq!(report["length1_share"]["bpe"], 1.0);
}

#[test]
fn bpe_stats() {
    let ws = Workspace::new();
    let merges = ws.file("merges.txt", "a b\nab c\n");
    let corpus = ws.file("corpus.txt", "abc abcx\n");
    let out = run(&["stats", s(&corpus), "--method", "bpe", "--merges", s(&merges), "--trials", "2"], "");
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1\t2\n3\t4\n");
}

#[test]
fn exit_codes() {
    let ws = Workspace::new();
    let vocab = ws.file("v.txt", ABCD_VOCAB);
    let corpus = ws.file("corpus.txt", "abc\n");

    // usage errors
    assert_eq!(run(&["tokenize"], "").status.code(), Some(1));
    assert_eq!(run(&["tokenize", "--vocab", s(&vocab), "--bogus"], "").status.code(), Some(1));
    assert_eq!(run(&["tokenize", "--vocab", s(&vocab), "--dropout", "1.5"], "").status.code(), Some(1));
    assert_eq!(run(&["stats", s(&corpus), "--method", "bpe"], "").status.code(), Some(1));
    let out = run(&["compare", s(&corpus), "--vocab", s(&vocab), "--out", s(&ws.path("x"))], "");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("merges"));
    assert_eq!(run(&["sample", "--vocab", s(&vocab), s(&corpus), "--epochs", "0"], "").status.code(), Some(1));

    // data errors
    assert_eq!(run(&["tokenize", "--vocab", "/nonexistent/v.txt"], "").status.code(), Some(2));
    let dup = ws.file("dup.txt", "a\na\n[UNK]\n");
    let out = run(&["tokenize", "--vocab", s(&dup)], "");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let no_unk = ws.file("nounk.txt", "a\n");
    assert_eq!(run(&["tokenize", "--vocab", s(&no_unk)], "").status.code(), Some(2));

    assert_eq!(run(&["--help"], "").status.code(), Some(0));
}

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treemix::dataset::{corpus_to_string, read_corpus, CorpusRecord, Origin, Schema};
use treemix::trainer::Checkpoint;

use common::random_labeled;

fn treemix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treemix"))
        .args(args)
        .env_remove("TREEMIX_SEED")
        .output()
        .unwrap()
}

fn write_input(dir: &Path, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let records: Vec<CorpusRecord> = random_labeled(&mut rng, n, 2).iter().map(CorpusRecord::from_labeled).collect();
    let path = dir.join("input.jsonl");
    fs::write(&path, corpus_to_string(&records)).unwrap();
    path.to_str().unwrap().to_owned()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn augment_writes_records_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), 12);
    let out = p(dir.path(), "aug.jsonl");
    let args = ["augment", "--input", &input, "--output", &out, "--lambda-l", "0", "--lambda-u", "1", "--beta", "3", "--seed", "7"];
    let res = treemix(&args);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let records = read_corpus(&out, Schema::Single).unwrap();
    assert_eq!(records.len(), 36);
    assert!(records.iter().all(|r| r.origin == Origin::Augmented));

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(format!("{out}.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["input_records"], 12);
    assert_eq!(manifest["output_records"], 36);
    assert_eq!(manifest["config"]["beta"], 3);

    // Re-running from the manifest's settings reproduces the bytes.
    let first = fs::read(&out).unwrap();
    fs::remove_file(&out).unwrap();
    let seed = manifest["seed"].to_string();
    let rerun = ["augment", "--input", &input, "--output", &out, "--lambda-l", "0", "--lambda-u", "1", "--beta", "3", "--seed", &seed];
    assert!(treemix(&rerun).status.success());
    assert_eq!(fs::read(&out).unwrap(), first);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), 8);
    let (a, b) = (p(dir.path(), "a.jsonl"), p(dir.path(), "b.jsonl"));
    assert!(treemix(&["augment", "--input", &input, "--output", &a, "--seed", "42"]).status.success());
    let env_run = Command::new(env!("CARGO_BIN_EXE_treemix"))
        .args(["augment", "--input", &input, "--output", &b])
        .env("TREEMIX_SEED", "42")
        .output()
        .unwrap();
    assert!(env_run.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn validation_errors_exit_with_one_and_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), 4);
    let out = p(dir.path(), "out.jsonl");
    let cases: [&[&str]; 4] = [
        &["augment", "--input", &input, "--output", &out, "--lambda-l", "0.5", "--lambda-u", "0.3"],
        &["augment", "--input", &input, "--output", &out, "--beta", "0"],
        &["augment", "--input", &input, "--output", &out, "--frobnicate"],
        &["scan-gen", "--split", "length", "--output", &out],
    ];
    for args in cases {
        let res = treemix(args);
        assert_eq!(res.status.code(), Some(1), "{args:?}");
        assert!(!res.stderr.is_empty());
        assert!(!Path::new(&out).exists());
    }
    let res = treemix(&["augment", "--input", &input, "--output", &out, "--lambda-l", "0.5", "--lambda-u", "0.3"]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("[0.5, 0.3]"));
}

#[test]
fn io_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let res = treemix(&["augment", "--input", &p(dir.path(), "missing.jsonl"), "--output", &p(dir.path(), "o.jsonl")]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn malformed_corpus_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = p(dir.path(), "bad.jsonl");
    fs::write(&input, "{\"id\": 3}\n").unwrap();
    let res = treemix(&["augment", "--input", &input, "--output", &p(dir.path(), "o.jsonl")]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 1"));
}

#[test]
fn help_and_version_succeed() {
    assert!(treemix(&["--help"]).status.success());
    assert!(treemix(&["--version"]).status.success());
    assert_eq!(treemix(&[]).status.code(), Some(1));
}

#[test]
fn scan_gen_writes_split_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path(), "scan");
    let res = treemix(&["scan-gen", "--split", "addprim_turn_left", "--beta", "1", "--seed", "2", "--output", &out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("train=21890 test=1208"), "{stdout}");
    let lines = |f: &str| fs::read_to_string(dir.path().join("scan").join(f)).unwrap().lines().count();
    assert_eq!(lines("train.txt"), 21_890);
    assert_eq!(lines("test.txt"), 1_208);
    assert_eq!(lines("train_augmented.txt"), 21_890 + lines("augmented.txt"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("scan/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["augmented"], lines("augmented.txt"));
}

#[test]
fn train_gamma_zero_matches_baseline_and_checkpoint_loads() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = treemix::synthetic::sentiment_corpus(80, 40, 0.5, 3);
    let write = |name: &str, ex: &[treemix::LabeledExample]| {
        let recs: Vec<CorpusRecord> = ex.iter().map(CorpusRecord::from_labeled).collect();
        let path = p(dir.path(), name);
        fs::write(&path, corpus_to_string(&recs)).unwrap();
        path
    };
    let train = write("train.jsonl", &corpus.train);
    let test = write("test.jsonl", &corpus.test);
    let aug = p(dir.path(), "aug.jsonl");
    assert!(treemix(&["augment", "--input", &train, "--output", &aug]).status.success());

    let run = |extra: &[&str], ck: &str| {
        let mut args = vec!["train", "--input", &train, "--augmented", &aug, "--test", &test, "--output", ck, "--hash-dim", "4096"];
        args.extend_from_slice(extra);
        let res = treemix(&args);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        String::from_utf8(res.stdout).unwrap()
    };
    let (c1, c2, c3) = (p(dir.path(), "g0.json"), p(dir.path(), "base.json"), p(dir.path(), "g5.json"));
    let zero = run(&["--gamma", "0"], &c1);
    let base = run(&["--gamma", "0", "--baseline"], &c2);
    let mixed = run(&["--gamma", "0.5"], &c3);
    assert_eq!(zero.lines().count(), 5);
    assert!(zero.lines().all(|l| l.starts_with("epoch=") && l.contains("test_acc=")));
    assert_eq!(zero, base);
    assert_ne!(zero, mixed);
    let ck: Checkpoint = serde_json::from_str(&fs::read_to_string(&c1).unwrap()).unwrap();
    assert_eq!(ck.format, "treemix-linear");
    let model = ck.to_model().unwrap();
    assert_eq!((model.classes, model.dim), (2, 4096));

    let neg = run(&["--preset", "rte", "--epochs", "2"], &p(dir.path(), "rte.json"));
    assert_eq!(neg.lines().count(), 2);
    let ck: Checkpoint = serde_json::from_str(&fs::read_to_string(p(dir.path(), "rte.json")).unwrap()).unwrap();
    assert_eq!(ck.config.gamma, -0.2);
}

#[test]
fn stats_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_input(dir.path(), 10);
    let res = treemix(&["stats", "--input", &input, "--lambda-l", "0", "--lambda-u", "1"]);
    assert!(res.status.success());
    let v: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(v["records"], 10);
    assert_eq!(v["intervals"].as_array().unwrap().len(), 1);

    let empty = p(dir.path(), "empty.jsonl");
    fs::write(&empty, "").unwrap();
    assert_eq!(treemix(&["stats", "--input", &empty]).status.code(), Some(1));
}

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::fixture;
use inputtopic::{Corpus, TopicMap};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inputtopic")).args(args).output().unwrap()
}

fn bin_stdin(args: &[&str], stdin: &str) -> Output {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_inputtopic"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_version_and_usage_errors() {
    let help = bin(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("extract"));
    assert_eq!(bin(&["--version"]).status.code(), Some(0));
    assert_eq!(bin(&[]).status.code(), Some(1));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bin(&["extract"]).status.code(), Some(1));
    assert_eq!(bin(&["train", "--corpus", "/nonexistent/c.jsonl", "--model-dir", "/tmp/x"]).status.code(), Some(1));
    assert_eq!(bin(&["infer", "--model-dir", "/nonexistent", "--input", "x.html"]).status.code(), Some(1));
}

#[test]
fn extract_prints_json_lines_and_appends_corpus() {
    let registration = fixture("registration_form.html");
    let out = bin(&["extract", s(&registration)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0]["element_path"].as_str().unwrap().starts_with("/html[1]/body[1]/form[1]"));
    assert_eq!(lines[0]["tokens"].as_array().unwrap().len(), 18);

    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    assert_eq!(bin(&["extract", s(&registration), "--out", s(&corpus)]).status.code(), Some(0));
    assert_eq!(bin(&["extract", s(&fixture("first_name_field.html")), "--out", s(&corpus)]).status.code(), Some(0));
    let c = Corpus::load(&corpus).unwrap();
    assert_eq!(c.len(), 7);
    assert_eq!(c.get(6).unwrap().attribute("id"), Some("firstName"));

    let max0 = bin(&["extract", s(&fixture("first_name_field.html")), "--max-iterations", "0"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&max0).trim()).unwrap();
    assert_eq!(v["tokens"].as_array().unwrap().len(), 8);
}

#[test]
fn malformed_corpus_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"format\":\"inputtopic-corpus\",\"version\":1}\nnot json\n").unwrap();
    let out = bin(&["train", "--corpus", s(&bad), "--model-dir", s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2"));
}

#[test]
fn retraining_is_byte_identical_and_self_inference_recovers_topics() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture("synthetic40.jsonl");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for m in [&a, &b] {
        let out = bin(&["train", "--corpus", s(&corpus), "--model-dir", s(m)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["dictionary.json", "tfidf.json", "model.lsi", "corpus.jsonl"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    let page = dir.path().join("signup.html");
    fs::write(
        &page,
        r#"<form>
          <div><label>Email Address</label><input type="email" id="email" name="email" maxlength="100"></div>
          <div><label>Password</label><input type="password" id="password" name="password"></div>
          <div><label>Zip Code</label><input type="text" id="zip" name="zip" maxlength="10"></div>
        </form>"#,
    )
    .unwrap();
    let run = |seed: &str| bin(&["infer", "--model-dir", s(&a), "--input", s(&page), "--seed", seed]);
    let out = run("5");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let topics: Vec<String> = stdout(&out)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["topic"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(topics, ["email", "password", "zip"]);
    assert_eq!(stdout(&run("5")), stdout(&out));

    // Rule modes need a rule file.
    assert_eq!(
        bin(&["infer", "--model-dir", s(&a), "--input", s(&page), "--mode", "rb-nl-m"]).status.code(),
        Some(1)
    );
    let rules = dir.path().join("rules.json");
    fs::write(&rules, r#"[{"feature_string":"mail","topic":"email"},{"feature_string":"pass","topic":"password"}]"#)
        .unwrap();
    let bank = dir.path().join("databank.json");
    fs::write(&bank, r#"{"email":["a@example.com","b@example.com"],"password":["hunter2"]}"#).unwrap();
    let out = bin(&[
        "infer", "--model-dir", s(&a), "--input", s(&page), "--mode", "rb-nl-b", "--rules", s(&rules), "--databank",
        s(&bank),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let values: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(values[0]["value"], "a@example.com");
    assert_eq!(values[1]["value"], "hunter2");
    assert_eq!(values[2]["topic"], "zip");
    assert_eq!(values[2]["value"].as_str().unwrap().len(), 8);
}

#[test]
fn labeling_from_stdin_and_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let registration = fixture("registration_form.html");
    let corpus = dir.path().join("corpus.jsonl");
    let model = dir.path().join("model");
    assert_eq!(bin(&["extract", s(&registration), "--out", s(&corpus)]).status.code(), Some(0));
    assert_eq!(bin(&["train", "--corpus", s(&corpus), "--model-dir", s(&model)]).status.code(), Some(0));

    // Close the channel after one decision, then finish from a transcript.
    let first = bin_stdin(&["label", "--model-dir", s(&model)], "split\nlabel email\n");
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let partial = TopicMap::load(model.join("topics.json")).unwrap();
    assert_eq!(partial.len(), 1);

    let transcript = dir.path().join("transcript.txt");
    let body: String = (0..12).map(|_| "split\nlabel misc\n").collect();
    fs::write(&transcript, body).unwrap();
    let second = bin(&["label", "--model-dir", s(&model), "--transcript", s(&transcript)]);
    assert_eq!(second.status.code(), Some(0));
    let full = TopicMap::load(model.join("topics.json")).unwrap();
    assert_eq!(full.len(), 6);
    assert_eq!(full.0.values().filter(|t| *t == "email").count(), 1);
    let log = fs::read_to_string(model.join("labeling_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 6);
}

#[test]
fn eval_writes_reports_and_honours_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let config = dir.path().join("it.toml");
    fs::write(&config, format!("corpus = \"{}\"\nseed = 42\n", s(&fixture("synthetic40.jsonl")))).unwrap();
    let run = bin(&[
        "--config", s(&config), "eval", "--fractions", "20,40", "--trials", "3", "--methods", "nl", "--out", s(&out),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    for f in ["accuracy_by_fraction.csv", "pvalues.csv", "rb_counts.csv", "trials.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let acc = fs::read_to_string(out.join("accuracy_by_fraction.csv")).unwrap();
    assert_eq!(acc.lines().count(), 3);

    fs::write(&config, "colour = \"blue\"\n").unwrap();
    assert_eq!(bin(&["--config", s(&config), "eval", "--out", s(&out)]).status.code(), Some(1));
}

use std::path::Path;

use paracoref::corpus::Corpus;
use paracoref::Error;

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/small"))
}

fn copy_fixture(to: &Path) {
    for f in ["tweets.jsonl", "pairs.jsonl", "meta.json"] {
        std::fs::copy(fixtures().join(f), to.join(f)).unwrap();
    }
}

#[test]
fn save_then_load_round_trips() {
    let c = Corpus::load(fixtures()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    c.save(dir.path()).unwrap();
    let again = Corpus::load(dir.path()).unwrap();
    assert_eq!(c.tweets(), again.tweets());
    assert_eq!(c.entries(), again.entries());
    assert_eq!(c.meta(), again.meta());
}

#[test]
fn empty_pairs_file_gives_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixture(dir.path());
    std::fs::write(dir.path().join("pairs.jsonl"), "").unwrap();
    let c = Corpus::load(dir.path()).unwrap();
    assert!(c.entries().is_empty());
}

#[test]
fn dangling_tweet_reference_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixture(dir.path());
    let pairs = std::fs::read_to_string(dir.path().join("pairs.jsonl")).unwrap();
    std::fs::write(dir.path().join("pairs.jsonl"), pairs.replacen("\"t01\"", "\"t99\"", 1)).unwrap();
    match Corpus::load(dir.path()) {
        Err(Error::Integrity(m)) => assert!(m.contains("t99"), "{m}"),
        other => panic!("expected integrity error, got {other:?}"),
    }
}

#[test]
fn malformed_line_reports_its_number() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixture(dir.path());
    let mut tweets = std::fs::read_to_string(dir.path().join("tweets.jsonl")).unwrap();
    let lines: Vec<&str> = tweets.lines().collect();
    let mut broken: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    broken[2] = "{\"id\": \"t03\", \"text\": ".into();
    tweets = broken.join("\n");
    std::fs::write(dir.path().join("tweets.jsonl"), tweets).unwrap();
    match Corpus::load(dir.path()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
}

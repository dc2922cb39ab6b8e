mod common;

use common::{golden_cases, score_golden};

#[test]
fn golden_corpus_agreement() {
    let cases = golden_cases();
    assert_eq!(cases.len(), 60);
    let (ok, misses) = score_golden(&cases);
    for m in &misses {
        eprintln!("miss: {m}");
    }
    assert!(ok * 100 >= cases.len() * 95, "{ok}/{} agree", cases.len());
}

#[test]
fn golden_corpus_covers_every_verdict() {
    let cases = golden_cases();
    for v in ["fulfilled", "violated", "unverifiable"] {
        assert!(cases.iter().any(|c| serde_json::to_value(c.verdict).unwrap() == v));
    }
}

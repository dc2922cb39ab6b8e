//! Every JSON example in the protocol document parses and re-serializes to
//! the same bytes.

use minirts::server::{Body, Frame};

#[test]
fn documented_frames_are_exact() {
    let doc = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/protocol.md")).unwrap();
    let mut in_block = false;
    let mut types = std::collections::BTreeSet::new();
    for line in doc.lines() {
        match line.trim() {
            "```json" => in_block = true,
            "```" => in_block = false,
            l if in_block && !l.is_empty() => {
                let frame = Frame::from_json(l).unwrap_or_else(|e| panic!("{l}: {e}"));
                assert_eq!(frame.to_json(), l);
                let v: serde_json::Value = serde_json::from_str(l).unwrap();
                types.insert(v["type"].as_str().unwrap().to_string());
                if let Body::Command { action, .. } = frame.body {
                    types.insert(format!("action:{:?}", action.action_type()));
                }
            }
            _ => {}
        }
    }
    for t in [
        "hello", "join", "state_diff", "command", "instruction", "pause", "resume", "warn", "ask", "chat", "game_over", "error",
    ] {
        assert!(types.contains(t), "no example for {t}");
    }
    assert_eq!(types.iter().filter(|t| t.starts_with("action:")).count(), 7);
}

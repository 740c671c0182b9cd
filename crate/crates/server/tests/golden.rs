mod common;

use common::{golden, random_script, replay, transcript};
use serde_json::json;

fn basic_requests() -> Vec<String> {
    let mut r: Vec<String> = [
        json!({"type": "hello"}),
        json!({"type": "step", "action": "UP"}),
        json!({"type": "reset", "game": "frogs", "level": 99}),
        json!({"type": "reset", "game": "pacman"}),
        json!({"type": "teleport"}),
        json!({"type": "reset", "game": "frogs", "level": 0, "seed": 1}),
        json!({"type": "step", "action": "USE"}),
        json!({"type": "step", "action": "UP"}),
        json!({"type": "step", "action": 4}),
        json!({"type": "abort"}),
        json!({"type": "reset", "game": "missile_command", "level": 1, "seed": 2, "obs_mode": "both"}),
        json!({"type": "step", "action": "USE"}),
    ]
    .iter()
    .map(|v| v.to_string())
    .collect();
    r.insert(5, "not json".into());
    r.push(r#"{"type":"step","action":"NIL","note":"extra fields are ignored"}"#.into());
    r.push(json!({"type": "goodbye"}).to_string());
    r
}

#[test]
fn basic_transcript() {
    let text = golden("basic.txt", || transcript(&basic_requests()));
    assert_eq!(replay(&text).unwrap(), basic_requests().len());
}

#[test]
fn random_frogs_transcript() {
    let requests = random_script("frogs", 1000, 7, "grid");
    let text = golden("frogs_random.txt", || transcript(&requests));
    let steps = text.lines().filter(|l| l.starts_with("C: {\"action\"") || l.contains("\"type\":\"step\"")).count();
    assert!(steps >= 1000);
    replay(&text).unwrap();
}

#[test]
fn random_aliens_pixels_transcript() {
    let requests = random_script("aliens", 60, 3, "pixels");
    let text = golden("aliens_pixels.txt", || transcript(&requests));
    replay(&text).unwrap();
}

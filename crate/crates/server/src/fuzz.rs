//! Generator of request lines that are malformed by construction, for
//! conformance testing. Every line it yields must draw an error reply.

use rand::{Rng, RngCore};
use serde_json::{json, Value};

const VALID: [&str; 6] = [
    r#"{"type":"hello"}"#,
    r#"{"type":"reset","game":"aliens","level":0,"seed":7}"#,
    r#"{"type":"reset","game":"frogs","level":1,"seed":3,"obs_mode":"both"}"#,
    r#"{"type":"step","action":"UP"}"#,
    r#"{"type":"step","action":2}"#,
    r#"{"type":"goodbye"}"#,
];

const KNOWN_TYPES: [&str; 5] = ["hello", "reset", "step", "abort", "goodbye"];

fn junk_value(rng: &mut impl Rng) -> Value {
    match rng.random_range(0..7) {
        0 => Value::Null,
        1 => json!(rng.random::<bool>()),
        2 => json!(-(rng.random_range(1..1000i64))),
        3 => json!(rng.random::<f64>() + 0.5),
        4 => json!([1, "x"]),
        5 => json!({"k": 1}),
        _ => json!(rng.random_range(0..1_000_000u64)),
    }
}

fn junk_string(rng: &mut impl Rng) -> String {
    let n = rng.random_range(0..12);
    (0..n).map(|_| rng.random_range(b'!'..=b'~') as char).collect()
}

/// One malformed line (no trailing newline).
pub fn malformed_line(rng: &mut impl RngCore) -> Vec<u8> {
    match rng.random_range(0..8) {
        // random bytes that cannot start a JSON object
        0 => {
            let n = rng.random_range(0..64);
            let mut v: Vec<u8> = (0..n).map(|_| rng.random::<u8>()).filter(|&b| b != b'\n').collect();
            if let Some(first) = v.first_mut() {
                if matches!(*first, b'{' | b' ' | b'\t' | b'\r' | 0x0c) {
                    *first = b'#';
                }
            }
            v
        }
        // strict prefix of a valid object: unbalanced braces
        1 => {
            let base = VALID[rng.random_range(0..VALID.len())].as_bytes();
            base[..rng.random_range(0..base.len())].to_vec()
        }
        // valid JSON that is not an object
        2 => [json!([1, 2]), json!("step"), json!(17), Value::Null, json!(true)][rng.random_range(0..5)]
            .to_string()
            .into_bytes(),
        // object with a missing, non-string or unknown type
        3 => {
            let mut obj = serde_json::Map::new();
            match rng.random_range(0..3) {
                0 => {}
                1 => {
                    obj.insert("type".into(), junk_value(rng));
                }
                _ => {
                    let mut t = junk_string(rng);
                    while KNOWN_TYPES.contains(&t.as_str()) {
                        t.push('_');
                    }
                    obj.insert("type".into(), json!(t));
                }
            }
            obj.insert("game".into(), json!("aliens"));
            Value::Object(obj).to_string().into_bytes()
        }
        // reset with a bad field
        4 => {
            let mut obj = json!({"type": "reset", "game": "aliens", "level": 0, "seed": 1});
            match rng.random_range(0..5) {
                0 => obj["game"] = junk_value(rng),
                1 => {
                    obj.as_object_mut().unwrap().remove("game");
                }
                2 => obj["level"] = junk_value_not_uint(rng),
                3 => obj["seed"] = junk_value_not_uint(rng),
                _ => {
                    let mut m = junk_string(rng);
                    while ["grid", "pixels", "both"].contains(&m.as_str()) {
                        m.push('_');
                    }
                    obj["obs_mode"] = json!(m);
                }
            }
            obj.to_string().into_bytes()
        }
        // reset naming a game or level that does not exist
        5 => {
            if rng.random::<bool>() {
                json!({"type": "reset", "game": format!("no_such_{}", junk_string(rng)), "level": 0})
            } else {
                json!({"type": "reset", "game": "frogs", "level": rng.random_range(2..100_000u64)})
            }
            .to_string()
            .into_bytes()
        }
        // step with an action that is missing, badly typed or not legal
        6 => {
            let action = match rng.random_range(0..3) {
                0 => junk_value_not_uint(rng),
                1 => json!(rng.random_range(6..10_000u64)),
                _ => {
                    let mut a = junk_string(rng);
                    while ["UP", "DOWN", "LEFT", "RIGHT", "USE", "NIL"].contains(&a.as_str()) {
                        a.push('_');
                    }
                    json!(a)
                }
            };
            json!({"type": "step", "action": action}).to_string().into_bytes()
        }
        // valid object followed by trailing garbage
        _ => {
            let mut v = VALID[rng.random_range(0..VALID.len())].as_bytes().to_vec();
            v.extend_from_slice(b" }x");
            v
        }
    }
}

/// `null` is excluded: optional fields treat it as absent.
fn junk_value_not_uint(rng: &mut impl Rng) -> Value {
    loop {
        let v = junk_value(rng);
        if !v.is_u64() && !v.is_null() {
            return v;
        }
    }
}

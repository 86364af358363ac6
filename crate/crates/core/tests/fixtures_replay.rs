use std::path::Path;

use rp_entropy::positivity::search::{evaluate, SearchInstance};
use rp_entropy::positivity::{SearchConfig, SearchTarget, Violation};
use sha2::{Digest, Sha256};

fn fixtures() -> Vec<(String, Vec<u8>)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn stored_counterexamples_replay_bit_for_bit() {
    let all = fixtures();
    let mut targets = Vec::new();
    for (name, bytes) in &all {
        let hex: String = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(name, &format!("{hex}.json"));
        let v: Violation = serde_json::from_slice(bytes).unwrap();
        let slack = v.replay().unwrap();
        assert_eq!(slack, v.outcome.slack, "{name}");
        assert!(v.reverifies(1e-6).unwrap(), "{name}");
        targets.push(v.target);
    }
    assert!(targets.contains(&SearchTarget::EntropyN1));
    assert!(targets.contains(&SearchTarget::SchurSFraction));
}

#[test]
fn stored_counterexamples_match_their_seeded_draw() {
    for (name, bytes) in fixtures() {
        let v: Violation = serde_json::from_slice(&bytes).unwrap();
        let cfg = SearchConfig { master_seed: 0, ..SearchConfig::uniform(2, 2, 3, v.target) };
        let inst = SearchInstance::draw(&cfg, v.trial).unwrap();
        assert_eq!(inst, v.instance, "{name}");
        assert_eq!(evaluate(&cfg, &inst).unwrap().slack, v.outcome.slack, "{name}");
    }
}

use std::path::{Path, PathBuf};

use skelqa::backend::{extract_instances, train_backend, OracleBackend, TrainConfig};
use skelqa::harness::{eval_skeletons, HarnessError};
use skelqa::text::gold::{load_gold, parse_gold, to_gold_line};
use skelqa::text::parse_skeleton;
use skelqa::{Embeddings, TrainedBackend};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn gold_lines_round_trip() {
    let gold = load_gold(&data("skeletons.jsonl")).unwrap();
    assert_eq!(gold.len(), 38);
    for g in &gold {
        let line = to_gold_line(&g.question, &g.skeleton);
        let back = parse_gold(&line).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].skeleton, g.skeleton, "{}", g.question.id);
    }
}

#[test]
fn oracle_reproduces_every_gold_skeleton() {
    let gold = load_gold(&data("skeletons.jsonl")).unwrap();
    let oracle = OracleBackend::from_gold(&gold).unwrap();
    for g in &gold {
        assert_eq!(parse_skeleton(&g.question, &oracle).unwrap(), g.skeleton, "{}", g.question.id);
    }
    let report = eval_skeletons(&gold, &oracle).unwrap();
    assert_eq!(report.parse_failures, 0);
    assert_eq!(report.las.value(), 1.0);
}

#[test]
fn linear_backend_fits_its_training_set_and_survives_a_round_trip() {
    let gold = load_gold(&data("skeletons.jsonl")).unwrap();
    let emb = Embeddings::load(&data("embeddings.txt")).unwrap();
    let instances = extract_instances(&gold).unwrap();
    let backend = train_backend(&instances, &TrainConfig::default(), Some(&emb)).unwrap();
    let report = eval_skeletons(&gold, &backend).unwrap();
    assert_eq!(report.parse_failures, 0);
    assert!(report.las.value() > 0.95, "{report}");

    let reloaded = TrainedBackend::from_json(&backend.to_json(), Some(emb)).unwrap();
    assert_eq!(reloaded.to_json(), backend.to_json());
    assert_eq!(eval_skeletons(&gold, &reloaded).unwrap(), report);
}

#[test]
fn training_is_seeded() {
    let gold = load_gold(&data("skeletons.jsonl")).unwrap();
    let instances = extract_instances(&gold[..10]).unwrap();
    let cfg = TrainConfig { epochs: 5, seed: 3 };
    let a = train_backend::<f64>(&instances, &cfg, None).unwrap();
    let b = train_backend::<f64>(&instances, &cfg, None).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn empty_gold_is_rejected() {
    let oracle = OracleBackend::from_gold(&[]).unwrap();
    assert!(matches!(eval_skeletons(&[], &oracle), Err(HarnessError::EmptyGold)));
}

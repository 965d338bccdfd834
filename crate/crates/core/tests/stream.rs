use std::path::{Path, PathBuf};

use lntm::model::{load_checkpoint, train_task, ModelParams};
use lntm::stream::{ablate_tr, parse_tsv, run_stream, RunOptions, StreamConfig};
use lntm::Error;

fn partial() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic/partial")
}

fn quick_config() -> StreamConfig {
    let mut cfg = StreamConfig::load(partial().join("stream.toml")).unwrap();
    cfg.train.max_epochs = 3;
    cfg
}

#[test]
fn single_task_without_approaches_is_plain_training() {
    let mut cfg = quick_config();
    cfg.tasks.truncate(1);
    cfg.approaches = vec!["none".into()];
    let out = tempfile::tempdir().unwrap();
    run_stream(&cfg, out.path(), RunOptions::default()).unwrap();
    let (saved, name) = load_checkpoint::<f64>(out.path().join("checkpoints/001-task1.lntm")).unwrap();
    assert_eq!(name, "task1");

    let coll = &cfg.load_collections().unwrap()[0];
    let lc = cfg.lifelong_config(0).unwrap();
    let init = ModelParams::<f64>::init(lc.hidden, coll.vocab.len(), lc.activation, lc.init_seed);
    let plain = train_task(coll, init, &lc.hyper).unwrap();
    assert_eq!(saved, plain.params);
}

#[test]
fn report_file_matches_returned_rows() {
    let cfg = quick_config();
    let out = tempfile::tempdir().unwrap();
    let report = run_stream(&cfg, out.path(), RunOptions::default()).unwrap();
    let text = std::fs::read_to_string(out.path().join("report.tsv")).unwrap();
    assert_eq!(parse_tsv(&text).unwrap(), report.rows);
    assert_eq!(report.completed, ["task1", "task2", "task3"]);
    let forgetting: Vec<_> = report.rows.iter().filter(|r| r.scope == "forgetting" && r.metric == "ppl").collect();
    // task2 looks back at one task, task3 at two
    assert_eq!(forgetting.len(), 3);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary.is_object());
    assert!(!out.path().join("lock").exists());
}

#[test]
fn finished_run_is_not_retrained() {
    let mut cfg = quick_config();
    cfg.tasks.truncate(2);
    let out = tempfile::tempdir().unwrap();
    let first = run_stream(&cfg, out.path(), RunOptions::default()).unwrap();
    let again = run_stream(&cfg, out.path(), RunOptions::default()).unwrap();
    assert_eq!(again.trained_now, 0);
    assert_eq!(first.rows, again.rows);
}

#[test]
fn resuming_with_another_config_is_refused() {
    let mut cfg = quick_config();
    cfg.tasks.truncate(2);
    let out = tempfile::tempdir().unwrap();
    run_stream(&cfg, out.path(), RunOptions { stop_after: Some(1) }).unwrap();
    cfg.seed += 1;
    let err = run_stream(&cfg, out.path(), RunOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn held_lock_blocks_a_second_run() {
    let cfg = quick_config();
    let out = tempfile::tempdir().unwrap();
    std::fs::write(out.path().join("lock"), "").unwrap();
    let err = run_stream(&cfg, out.path(), RunOptions::default()).unwrap_err();
    assert!(err.to_string().contains("another run"), "{err}");
    assert!(!out.path().join("state.json").exists());
}

#[test]
fn zero_strength_in_ablation_matches_plain_training() {
    let mut cfg = quick_config();
    cfg.approaches = vec!["none".into()];
    let rows = ablate_tr(&cfg, &[0.0, 0.5], None).unwrap();
    let plain = run_stream(&cfg, tempfile::tempdir().unwrap().path(), RunOptions::default()).unwrap();
    let own_ppl = plain
        .rows
        .iter()
        .find(|r| r.step == 3 && r.scope == "own" && r.metric == "ppl")
        .unwrap()
        .value;
    let at = |l: f64| rows.iter().find(|r| r.lambda_tr == l && r.scope == "own" && r.metric == "ppl").unwrap().value;
    assert_eq!(at(0.0).to_bits(), own_ppl.to_bits());
    assert_ne!(at(0.5), at(0.0));
}

#[test]
fn ablation_writes_its_table() {
    let cfg = quick_config();
    let out = tempfile::tempdir().unwrap();
    let rows = ablate_tr(&cfg, &[0.01], Some(out.path())).unwrap();
    let text = std::fs::read_to_string(out.path().join("ablation.tsv")).unwrap();
    assert_eq!(text.lines().count(), rows.len() + 1);
    assert!(text.starts_with("lambda_tr\ttask\tscope\tmetric\tvalue\n"));
}

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use lntm::corpus::{build_collection, read_jsonl, write_jsonl, CollectionStats, PreprocessOptions};
use lntm::synthetic::{generate, Overlap, SyntheticSpec, FIXTURE_SEED};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic")
}

#[test]
fn committed_files_match_the_generator() {
    let tmp = tempfile::tempdir().unwrap();
    for overlap in Overlap::ALL {
        let spec = SyntheticSpec::stream(overlap);
        for (shape, docs) in spec.tasks.iter().zip(generate(&spec, FIXTURE_SEED)) {
            let file = format!("{}.jsonl", shape.name);
            let fresh = tmp.path().join(&file);
            write_jsonl(&fresh, &docs).unwrap();
            let committed = root().join(overlap.name()).join(&file);
            assert_eq!(
                std::fs::read(&fresh).unwrap(),
                std::fs::read(&committed).unwrap(),
                "{} is stale; rerun the make_fixtures example",
                committed.display()
            );
        }
    }
}

#[test]
fn ingested_statistics_match_golden_table() {
    let mut table = String::from(CollectionStats::TSV_HEADER);
    table.push('\n');
    for overlap in Overlap::ALL {
        for t in ["task1", "task2", "task3"] {
            let raw = read_jsonl(root().join(overlap.name()).join(format!("{t}.jsonl"))).unwrap();
            let opts = PreprocessOptions { name: format!("{}/{t}", overlap.name()), ..Default::default() };
            table.push_str(&build_collection(&raw, &opts).unwrap().collection.stats().tsv_row());
            table.push('\n');
        }
    }
    assert_eq!(table, std::fs::read_to_string(root().join("golden_stats.tsv")).unwrap());
}

fn vocab_of(overlap: Overlap, task: &str) -> BTreeSet<String> {
    let raw = read_jsonl(root().join(overlap.name()).join(format!("{task}.jsonl"))).unwrap();
    let opts = PreprocessOptions { name: task.into(), ..Default::default() };
    build_collection(&raw, &opts).unwrap().collection.vocab.tokens().iter().cloned().collect()
}

#[test]
fn overlap_kinds_share_the_expected_words() {
    let shared = |o: Overlap, a: &str, b: &str| vocab_of(o, a).intersection(&vocab_of(o, b)).count();
    assert_eq!(vocab_of(Overlap::Identical, "task1"), vocab_of(Overlap::Identical, "task3"));
    assert_eq!(shared(Overlap::Disjoint, "task1", "task3"), 0);
    assert_eq!(shared(Overlap::Disjoint, "task2", "task3"), 0);
    let partial = shared(Overlap::Partial, "task1", "task3");
    assert!(partial > 0 && partial < vocab_of(Overlap::Partial, "task3").len());
}

#[test]
fn final_task_is_sparse() {
    let spec = SyntheticSpec::stream(Overlap::Partial);
    let docs = generate(&spec, FIXTURE_SEED);
    let train = |i: usize| docs[i].iter().filter(|d| d.split == Some(lntm::corpus::Split::Train)).count();
    assert!(train(2) * 5 <= train(0));
}

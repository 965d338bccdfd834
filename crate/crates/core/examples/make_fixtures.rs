//! Regenerate the bundled synthetic streams:
//!
//! ```text
//! cargo run -p lntm-core --example make_fixtures -- fixtures/synthetic
//! ```
//!
//! Writes `<overlap>/task{1,2,3}.jsonl` for every overlap kind and
//! `golden_stats.tsv` with the statistics of the ingested collections.

use std::fs;
use std::path::PathBuf;

use lntm::corpus::{build_collection, write_jsonl, CollectionStats, PreprocessOptions};
use lntm::synthetic::{generate, Overlap, SyntheticSpec, FIXTURE_SEED};

fn main() -> lntm::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/synthetic".into()));
    let mut stats = String::from(CollectionStats::TSV_HEADER);
    stats.push('\n');
    for overlap in Overlap::ALL {
        let dir = root.join(overlap.name());
        fs::create_dir_all(&dir).expect("create fixture directory");
        let spec = SyntheticSpec::stream(overlap);
        for (shape, docs) in spec.tasks.iter().zip(generate(&spec, FIXTURE_SEED)) {
            write_jsonl(dir.join(format!("{}.jsonl", shape.name)), &docs)?;
            let opts = PreprocessOptions {
                name: format!("{}/{}", overlap.name(), shape.name),
                ..Default::default()
            };
            stats.push_str(&build_collection(&docs, &opts)?.collection.stats().tsv_row());
            stats.push('\n');
        }
    }
    fs::write(root.join("golden_stats.tsv"), stats).expect("write golden stats");
    Ok(())
}

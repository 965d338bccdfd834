//! Knowledge-base directory:
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/<NNN>-<task>.lntm    one checkpoint per finished task
//! <dir>/<NNN>-<task>.vocab   that task's vocabulary, one token per line
//! ```
//!
//! The manifest lists entries in task order. The word pool is rebuilt from
//! each checkpoint's encoder columns, so it is not stored separately.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{accumulate_knowledge, KnowledgeBase};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::{load_checkpoint, save_checkpoint};
use crate::scalar::{Activation, Scalar};

pub const KB_FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "lntm-kb";
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    task_id: String,
    hidden: usize,
    vocab_size: usize,
    activation: Activation,
    checkpoint: String,
    vocab: String,
}

fn file_stem(index: usize, task_id: &str) -> String {
    let clean: String = task_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    format!("{index:03}-{clean}")
}

/// Write the knowledge base into `dir`, creating it if needed. The manifest
/// is replaced last, so an interrupted save leaves the previous manifest in
/// force.
pub fn save_kb<T: Scalar>(kb: &KnowledgeBase<T>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(kb.len());
    for (i, entry) in kb.topic_pool().iter().enumerate() {
        let stem = file_stem(i, entry.task_id());
        let ckpt = format!("{stem}.lntm");
        let vocab = format!("{stem}.vocab");
        save_checkpoint(entry.params(), entry.task_id(), dir.join(&ckpt))?;
        let mut text = entry.vocab().tokens().join("\n");
        text.push('\n');
        let vpath = dir.join(&vocab);
        fs::write(&vpath, text).map_err(|e| Error::io(&vpath, e))?;
        entries.push(ManifestEntry {
            task_id: entry.task_id().to_string(),
            hidden: entry.hidden_size(),
            vocab_size: entry.vocab().len(),
            activation: entry.activation(),
            checkpoint: ckpt,
            vocab,
        });
    }
    let manifest = Manifest {
        format: FORMAT_NAME.to_string(),
        version: KB_FORMAT_VERSION,
        entries,
    };
    let tmp = dir.join(format!("{MANIFEST}.tmp"));
    fs::write(&tmp, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&tmp, e))?;
    let target = dir.join(MANIFEST);
    fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))
}

pub fn load_kb<T: Scalar>(dir: impl AsRef<Path>) -> Result<KnowledgeBase<T>> {
    let dir = dir.as_ref();
    if dir.as_os_str().is_empty() {
        return Err(Error::Invalid("empty knowledge-base path".into()));
    }
    let mpath = dir.join(MANIFEST);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", mpath.display())))?;
    if manifest.format != FORMAT_NAME {
        return Err(Error::Format(format!("{}: unknown format `{}`", mpath.display(), manifest.format)));
    }
    if manifest.version != KB_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: knowledge-base version {} is not supported (expected {KB_FORMAT_VERSION})",
            mpath.display(),
            manifest.version
        )));
    }
    let mut kb = KnowledgeBase::new();
    for e in &manifest.entries {
        let (params, task) = load_checkpoint::<T>(dir.join(&e.checkpoint))?;
        let vpath = dir.join(&e.vocab);
        let vtext = fs::read_to_string(&vpath).map_err(|err| Error::io(&vpath, err))?;
        let vocab = Vocabulary::new(vtext.lines().map(str::to_string).collect())?;
        let mismatch = task != e.task_id
            || params.hidden_size() != e.hidden
            || params.vocab_size() != e.vocab_size
            || vocab.len() != e.vocab_size
            || params.activation != e.activation;
        if mismatch {
            return Err(Error::Format(format!(
                "entry `{}` does not match its checkpoint or vocabulary file",
                e.task_id
            )));
        }
        kb = accumulate_knowledge(&params, &vocab, &e.task_id, kb)?;
    }
    Ok(kb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn vocab(n: usize, prefix: &str) -> Vocabulary {
        Vocabulary::new((0..n).map(|i| format!("{prefix}{i}")).collect()).unwrap()
    }

    fn two_tasks() -> KnowledgeBase<f64> {
        let kb = accumulate_knowledge(
            &ModelParams::init(3, 4, Activation::Sigmoid, 1),
            &vocab(4, "a"),
            "first task",
            KnowledgeBase::new(),
        )
        .unwrap();
        accumulate_knowledge(&ModelParams::init(3, 5, Activation::Tanh, 2), &vocab(5, "b"), "second", kb).unwrap()
    }

    #[test]
    fn round_trip_preserves_entries_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let kb = two_tasks();
        save_kb(&kb, dir.path()).unwrap();
        let back: KnowledgeBase<f64> = load_kb(dir.path()).unwrap();
        assert_eq!(back, kb);
    }

    #[test]
    fn empty_path_and_missing_manifest_are_errors() {
        assert!(load_kb::<f64>("").is_err());
        let dir = tempfile::tempdir().unwrap();
        assert!(load_kb::<f64>(dir.path()).is_err());
    }

    #[test]
    fn version_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        save_kb(&two_tasks(), dir.path()).unwrap();
        let m = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&m).unwrap().replace("\"version\": 1", "\"version\": 99");
        fs::write(&m, text).unwrap();
        match load_kb::<f64>(dir.path()) {
            Err(Error::Format(msg)) => assert!(msg.contains("99")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_checkpoint_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        save_kb(&two_tasks(), dir.path()).unwrap();
        let ckpt = dir.path().join("001-second.lntm");
        let bytes = fs::read(&ckpt).unwrap();
        fs::write(&ckpt, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_kb::<f64>(dir.path()), Err(Error::Truncated(_))));
    }
}

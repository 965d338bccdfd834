//! JSON-lines input and the plain-text collection format.
//!
//! Collection files look like:
//!
//! ```text
//! <K> <name>
//! <token 0>
//! ...
//! <token K-1>
//! [train]
//! <id>\t<label>\t<index> <index> ...
//! [val]
//! ...
//! [test]
//! ...
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use super::{Collection, Document, RawDoc, Split, Vocabulary};
use crate::error::{Error, Result};

#[derive(Deserialize)]
struct JsonRecord {
    id: Option<serde_json::Value>,
    label: Option<String>,
    text: Option<String>,
    split: Option<String>,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Read raw records, one JSON object per line with `id`, `label`, `text`
/// and optional `split`. Blank lines are ignored.
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<RawDoc>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(&line)
            .map_err(|e| parse_err(path, lineno, format!("malformed record: {e}")))?;
        let id = match rec.id {
            Some(serde_json::Value::String(s)) => s,
            Some(serde_json::Value::Number(n)) => n.to_string(),
            Some(_) => return Err(parse_err(path, lineno, "field `id` must be a string or number")),
            None => return Err(parse_err(path, lineno, "missing field `id`")),
        };
        let label = rec.label.ok_or_else(|| parse_err(path, lineno, "missing field `label`"))?;
        let text = rec.text.ok_or_else(|| parse_err(path, lineno, "missing field `text`"))?;
        let split = rec
            .split
            .map(|s| s.parse::<Split>().map_err(|m| parse_err(path, lineno, m)))
            .transpose()?;
        out.push(RawDoc { id, label, text, split });
    }
    Ok(out)
}

pub fn write_jsonl(path: impl AsRef<Path>, docs: &[RawDoc]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        writeln!(w).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_collection(coll: &Collection, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if coll.name.contains('\n') {
        return Err(Error::Invalid("collection name must be a single line".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {}", coll.vocab.len(), coll.name).map_err(io)?;
    for t in coll.vocab.tokens() {
        writeln!(w, "{t}").map_err(io)?;
    }
    for split in [Split::Train, Split::Val, Split::Test] {
        writeln!(w, "[{}]", split.name()).map_err(io)?;
        for d in coll.split(split) {
            let words: Vec<String> = d.words.iter().map(usize::to_string).collect();
            writeln!(w, "{}\t{}\t{}", d.id, d.label, words.join(" ")).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

pub fn load_collection(path: impl AsRef<Path>) -> Result<Collection> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();

    let header = match lines.next() {
        None => return Err(Error::EmptyCollection(format!("{} is empty", path.display()))),
        Some((_, l)) => l.map_err(|e| Error::io(path, e))?,
    };
    if header.trim().is_empty() {
        return Err(Error::EmptyCollection(format!("{} is empty", path.display())));
    }
    let (k_str, name) = header.split_once(' ').unwrap_or((header.as_str(), ""));
    let k: usize = k_str
        .trim()
        .parse()
        .map_err(|_| parse_err(path, 1, format!("bad header `{header}`: expected `<K> <name>`")))?;

    let mut tokens = Vec::with_capacity(k);
    for _ in 0..k {
        let (i, l) = lines
            .next()
            .ok_or_else(|| parse_err(path, tokens.len() + 2, "unexpected end of token list"))?;
        tokens.push(l.map_err(|e| Error::io(path, e))?.trim_end_matches('\r').to_string());
        if tokens.last().is_some_and(|t| t.is_empty()) {
            return Err(parse_err(path, i + 1, "empty token"));
        }
    }
    let vocab = Vocabulary::new(tokens).map_err(|e| parse_err(path, 2, e.to_string()))?;

    let mut splits: [Vec<Document>; 3] = Default::default();
    let mut current: Option<usize> = None;
    let mut ids = std::collections::HashSet::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if let Some(section) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let split: Split = section.parse().map_err(|m: String| parse_err(path, lineno, m))?;
            current = Some(split as usize);
            continue;
        }
        let slot = current.ok_or_else(|| parse_err(path, lineno, "document before any [split] section"))?;
        let mut fields = line.splitn(3, '\t');
        let (id, label, idx) = match (fields.next(), fields.next(), fields.next()) {
            (Some(id), Some(label), Some(idx)) if !id.is_empty() => (id, label, idx),
            _ => return Err(parse_err(path, lineno, "malformed record: expected id<TAB>label<TAB>indices")),
        };
        let mut words = Vec::new();
        for tok in idx.split_whitespace() {
            let w: usize = tok
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad word index `{tok}`")))?;
            if w >= k {
                return Err(parse_err(path, lineno, format!("index out of range: {w} >= K={k}")));
            }
            words.push(w);
        }
        if words.is_empty() {
            return Err(parse_err(path, lineno, "document has no words"));
        }
        if !ids.insert(id.to_string()) {
            return Err(parse_err(path, lineno, format!("duplicate document id `{id}`")));
        }
        splits[slot].push(Document::new(id, label, words));
    }
    let [train, val, test] = splits;
    if train.is_empty() && val.is_empty() && test.is_empty() {
        return Err(Error::EmptyCollection(format!("{} holds no documents", path.display())));
    }
    Collection::new(name, vocab, train, val, test)
}

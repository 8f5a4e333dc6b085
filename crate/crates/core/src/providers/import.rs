//! Line-record embedding files: `word<TAB>f1,f2,...,fd`, UTF-8.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use indexmap::{IndexMap, IndexSet};

use super::LanguageEmbeddingSet;
use crate::error::{Error, Result};
use crate::lexicon::Language;

/// Parses records. Empty lines are skipped; duplicate words must carry
/// identical vectors.
pub fn parse_import_text(text: &str, source_name: &str) -> Result<IndexMap<String, Vec<f64>>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_owned(),
        line,
        message,
    };
    let mut out: IndexMap<String, Vec<f64>> = IndexMap::new();
    let mut dimension: Option<usize> = None;
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let (word, values) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(line_no, "expected 'word<TAB>values'".into()))?;
        if word.is_empty() {
            return Err(parse_err(line_no, "empty word".into()));
        }
        let vector = values
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(line_no, format!("invalid number '{s}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match dimension {
            None => dimension = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(Error::RaggedDimensions {
                    line: line_no,
                    expected: d,
                    found: vector.len(),
                })
            }
            Some(_) => {}
        }
        if let Some(existing) = out.get(word) {
            if existing != &vector {
                return Err(parse_err(
                    line_no,
                    format!("duplicate word '{word}' with a different vector"),
                ));
            }
            continue;
        }
        out.insert(word.to_owned(), vector);
    }
    Ok(out)
}

/// Loads an import file. With `words`, the result holds exactly those
/// words in that order and any missing word is an error.
pub fn import_embeddings(
    path: &Path,
    model_id: &str,
    language: &Language,
    words: Option<&IndexSet<String>>,
) -> Result<LanguageEmbeddingSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| Error::NonUtf8 {
        path: path.to_owned(),
    })?;
    let records = parse_import_text(&text, &path.display().to_string())?;
    let all = LanguageEmbeddingSet::new(model_id, language.clone(), records)?;
    match words {
        Some(words) => all.restrict_to(words),
        None => Ok(all),
    }
}

/// Writes a set in the import format with shortest round-trip floats.
pub fn write_import_text(set: &LanguageEmbeddingSet) -> String {
    let mut out = String::new();
    for (word, v) in &set.vectors {
        out.push_str(word);
        out.push('\t');
        for (i, x) in v.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:?}");
        }
        out.push('\n');
    }
    out
}

//! Aligned translation lexicons.
//!
//! A dataset is a set of parallel text files, one per language, where line
//! `k` of every file names the same concept. A line may carry several
//! meaning variants separated by `|` (for example `十|完整`); every variant
//! is a separate surface form that gets its own embedding.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variant separator inside a dataset line.
pub const VARIANT_SEPARATOR: char = '|';

/// A language code such as `enu` or `chn`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Language(String);

impl Language {
    pub fn new(code: impl Into<String>) -> Self {
        Language(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Language {
    fn from(s: &str) -> Self {
        Language(s.to_owned())
    }
}

impl From<String> for Language {
    fn from(s: String) -> Self {
        Language(s)
    }
}

/// One concept (one line position) across all languages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub concept_index: usize,
    pub forms: IndexMap<Language, Vec<String>>,
}

impl ConceptEntry {
    pub fn variants(&self, language: &Language) -> &[String] {
        self.forms.get(language).map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationLexicon {
    pub dataset_id: String,
    pub languages: Vec<Language>,
    pub entries: Vec<ConceptEntry>,
}

impl TranslationLexicon {
    /// Number of concepts (M).
    pub fn concept_count(&self) -> usize {
        self.entries.len()
    }

    /// Number of languages (L).
    pub fn language_count(&self) -> usize {
        self.languages.len()
    }

    /// Number of unordered language pairs, `L(L-1)/2`.
    pub fn language_pair_count(&self) -> usize {
        let l = self.languages.len();
        l * l.saturating_sub(1) / 2
    }

    pub fn has_language(&self, language: &Language) -> bool {
        self.languages.contains(language)
    }

    /// Serializes one language back to the dataset line format.
    pub fn to_language_text(&self, language: &Language) -> Result<String> {
        if !self.has_language(language) {
            return Err(Error::UnknownLanguage(language.clone()));
        }
        let mut out = String::new();
        for entry in &self.entries {
            let line = entry.variants(language).join("|");
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }

    /// Keeps only the given concepts, renumbering them in the given order.
    pub fn select(&self, concept_indices: &[usize]) -> TranslationLexicon {
        let entries = concept_indices
            .iter()
            .enumerate()
            .map(|(new_idx, &old_idx)| ConceptEntry {
                concept_index: new_idx,
                forms: self.entries[old_idx].forms.clone(),
            })
            .collect();
        TranslationLexicon {
            dataset_id: self.dataset_id.clone(),
            languages: self.languages.clone(),
            entries,
        }
    }
}

/// Parses dataset text: one concept per line, variants split on `|`.
///
/// `source_name` is only used in error messages.
pub fn parse_language_text(text: &str, source_name: &str) -> Result<Vec<Vec<String>>> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    let mut lines = Vec::new();
    for (idx, raw) in body.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            return Err(Error::Parse {
                source_name: source_name.to_owned(),
                line: line_no,
                message: "blank line".into(),
            });
        }
        let mut variants = Vec::new();
        for part in line.split(VARIANT_SEPARATOR) {
            let variant = part.trim();
            if variant.is_empty() {
                return Err(Error::Parse {
                    source_name: source_name.to_owned(),
                    line: line_no,
                    message: format!("empty variant in '{line}'"),
                });
            }
            variants.push(variant.to_owned());
        }
        lines.push(variants);
    }
    Ok(lines)
}

/// Reads one language file of a dataset.
pub fn parse_language_file(path: &Path, language: &Language) -> Result<Vec<Vec<String>>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|_| Error::NonUtf8 {
        path: path.to_owned(),
    })?;
    let name = format!("{} [{}]", path.display(), language);
    parse_language_text(&text, &name)
}

/// Zips per-language variant lists by line number.
pub fn align_lexicon(
    per_language: Vec<(Language, Vec<Vec<String>>)>,
    dataset_id: &str,
) -> Result<TranslationLexicon> {
    if per_language.len() < 2 {
        return Err(Error::TooFewLanguages(per_language.len()));
    }
    let mut seen = HashSet::new();
    for (lang, _) in &per_language {
        if !seen.insert(lang.clone()) {
            return Err(Error::DuplicateLanguage(lang.clone()));
        }
    }
    let (first_lang, first_lines) = &per_language[0];
    for (lang, lines) in &per_language[1..] {
        if lines.len() != first_lines.len() {
            return Err(Error::LineCountMismatch {
                lang_a: first_lang.clone(),
                count_a: first_lines.len(),
                lang_b: lang.clone(),
                count_b: lines.len(),
            });
        }
    }

    let languages: Vec<Language> = per_language.iter().map(|(l, _)| l.clone()).collect();
    let mut columns: Vec<std::vec::IntoIter<Vec<String>>> = per_language
        .into_iter()
        .map(|(_, lines)| lines.into_iter())
        .collect();
    let m = first_lines_len(&columns);
    let mut entries = Vec::with_capacity(m);
    for concept_index in 0..m {
        let mut forms = IndexMap::with_capacity(languages.len());
        for (lang, column) in languages.iter().zip(columns.iter_mut()) {
            let variants = column.next().expect("line counts checked above");
            forms.insert(lang.clone(), variants);
        }
        entries.push(ConceptEntry {
            concept_index,
            forms,
        });
    }
    Ok(TranslationLexicon {
        dataset_id: dataset_id.to_owned(),
        languages,
        entries,
    })
}

fn first_lines_len(columns: &[std::vec::IntoIter<Vec<String>>]) -> usize {
    columns.first().map(|c| c.len()).unwrap_or(0)
}

/// Loads `<dir>/<dataset_id>-<lang>.txt` for each language.
pub fn load_dataset_dir(
    dir: &Path,
    dataset_id: &str,
    languages: &[Language],
) -> Result<TranslationLexicon> {
    let files: Vec<(Language, std::path::PathBuf)> = languages
        .iter()
        .map(|lang| (lang.clone(), dir.join(dataset_file_name(dataset_id, lang))))
        .collect();
    load_dataset_files(&files, dataset_id)
}

pub fn load_dataset_files(
    files: &[(Language, std::path::PathBuf)],
    dataset_id: &str,
) -> Result<TranslationLexicon> {
    let per_language = files
        .iter()
        .map(|(lang, path)| Ok((lang.clone(), parse_language_file(path, lang)?)))
        .collect::<Result<Vec<_>>>()?;
    align_lexicon(per_language, dataset_id)
}

pub fn dataset_file_name(dataset_id: &str, language: &Language) -> String {
    format!("{dataset_id}-{language}.txt")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandedPair {
    pub language_i: Language,
    pub word_i: String,
    pub language_j: Language,
    pub word_j: String,
    pub concept_index: usize,
}

/// Cross-products of meaning variants for every concept and every
/// unordered language pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpandedPairSet {
    pub pairs: Vec<ExpandedPair>,
}

impl ExpandedPairSet {
    /// Number of expanded pairs (M') for one language pair, in either order.
    pub fn count_for(&self, a: &Language, b: &Language) -> usize {
        self.pairs
            .iter()
            .filter(|p| {
                (&p.language_i == a && &p.language_j == b)
                    || (&p.language_i == b && &p.language_j == a)
            })
            .count()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn expand_meaning_variants(lexicon: &TranslationLexicon) -> ExpandedPairSet {
    let mut pairs = Vec::new();
    let langs = &lexicon.languages;
    for entry in &lexicon.entries {
        for (i, lang_i) in langs.iter().enumerate() {
            for lang_j in &langs[i + 1..] {
                for word_i in entry.variants(lang_i) {
                    for word_j in entry.variants(lang_j) {
                        pairs.push(ExpandedPair {
                            language_i: lang_i.clone(),
                            word_i: word_i.clone(),
                            language_j: lang_j.clone(),
                            word_j: word_j.clone(),
                            concept_index: entry.concept_index,
                        });
                    }
                }
            }
        }
    }
    ExpandedPairSet { pairs }
}

/// One translation unit: a single variant chosen per language, in lexicon
/// language order. With two languages this is exactly one expanded pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandedTuple {
    pub concept_index: usize,
    pub words: Vec<String>,
}

/// Full cross-product of variants across all languages, per concept.
pub fn expand_tuples(lexicon: &TranslationLexicon) -> Vec<ExpandedTuple> {
    let mut out = Vec::new();
    for entry in &lexicon.entries {
        let mut partial: Vec<Vec<String>> = vec![Vec::new()];
        for lang in &lexicon.languages {
            let variants = entry.variants(lang);
            partial = partial
                .into_iter()
                .flat_map(|prefix| {
                    variants.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(v.clone());
                        next
                    })
                })
                .collect();
        }
        out.extend(partial.into_iter().map(|words| ExpandedTuple {
            concept_index: entry.concept_index,
            words,
        }));
    }
    out
}

/// Flattened, deduplicated vocabulary for one language in first-occurrence
/// order.
pub fn unique_words(lexicon: &TranslationLexicon, language: &Language) -> Result<IndexSet<String>> {
    if !lexicon.has_language(language) {
        return Err(Error::UnknownLanguage(language.clone()));
    }
    Ok(lexicon
        .entries
        .iter()
        .flat_map(|e| e.variants(language).iter().cloned())
        .collect())
}

//! Character classification and chain segmentation.
//!
//! Every processor operates on one of four granularities of a reasoning
//! chain: characters, subword tokens, words, or lines. This module owns the
//! split rules so that all processors agree on what a "word" or a "digit" is.
//!
//! Rules:
//! - lines are maximal newline-free substrings, empty segments preserved;
//! - words are maximal runs of non-whitespace characters, punctuation kept
//!   attached ("21+7=28;" is one word);
//! - digits are ASCII `0-9` only, so non-ASCII numerals count as symbols;
//! - alphabetic follows the Unicode definition, so accented words are
//!   stripped and masked along with plain ASCII prose.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("unknown tokenizer scheme: {0}")]
    UnknownScheme(String),
    #[error("vocabulary file {path} is empty")]
    EmptyVocabulary { path: String },
    #[error("failed to read vocabulary file {path}: {source}")]
    VocabularyIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Class of a single Unicode scalar. Total: every scalar maps to exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CharClass {
    Alphabetic,
    Digit,
    Whitespace,
    Symbol,
}

/// Classify one character. Deterministic and total.
pub fn classify_char(c: char) -> CharClass {
    if c.is_ascii_digit() {
        CharClass::Digit
    } else if c.is_whitespace() {
        CharClass::Whitespace
    } else if c.is_alphabetic() {
        CharClass::Alphabetic
    } else {
        CharClass::Symbol
    }
}

/// Byte range into the source text. Half-open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

/// Split into newline-delimited segments. Empty segments between consecutive
/// newlines are preserved so that rejoining with `\n` reproduces the input.
pub fn split_lines(text: &str) -> Vec<&str> {
    text.split('\n').collect()
}

/// Split into maximal runs of non-whitespace characters, in order.
pub fn split_words(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

fn line_spans(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, b) in text.bytes().enumerate() {
        if b == b'\n' {
            spans.push(Span { start, end: i });
            start = i + 1;
        }
    }
    spans.push(Span {
        start,
        end: text.len(),
    });
    spans
}

/// Word spans: maximal runs of non-whitespace characters.
pub fn word_spans(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                spans.push(Span { start: s, end: i });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        spans.push(Span {
            start: s,
            end: text.len(),
        });
    }
    spans
}

/// Maximal runs of ASCII digits, in order. The unit for answer matching and
/// numeric extraction.
pub fn digit_runs(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_ascii_digit() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            spans.push(Span { start: s, end: i });
        }
    }
    if let Some(s) = start {
        spans.push(Span {
            start: s,
            end: text.len(),
        });
    }
    spans
}

/// A subword tokenization scheme. Schemes segment text into spans that never
/// contain whitespace; concatenating the spans with the whitespace between
/// them reproduces the input.
pub trait SubwordScheme: Send + Sync {
    fn id(&self) -> &str;

    fn segment(&self, text: &str) -> Vec<Span>;

    /// Token inventory for uniform sampling, when the scheme has one.
    fn token_list(&self) -> Option<&[String]> {
        None
    }
}

/// Built-in scheme: split at character-class boundaries, then chunk
/// alphabetic runs to at most 4 characters and digit runs to at most 3.
/// Symbol runs stay whole; whitespace separates.
pub struct DefaultScheme;

const ALPHA_CHUNK: usize = 4;
const DIGIT_CHUNK: usize = 3;

fn chunk_run(text: &str, start: usize, end: usize, class: CharClass, out: &mut Vec<Span>) {
    let chunk = match class {
        CharClass::Alphabetic => Some(ALPHA_CHUNK),
        CharClass::Digit => Some(DIGIT_CHUNK),
        _ => None,
    };
    let Some(n) = chunk else {
        out.push(Span { start, end });
        return;
    };
    let mut piece_start = start;
    let mut count = 0;
    for (i, _) in text[start..end].char_indices() {
        if count == n {
            out.push(Span {
                start: piece_start,
                end: start + i,
            });
            piece_start = start + i;
            count = 0;
        }
        count += 1;
    }
    out.push(Span {
        start: piece_start,
        end,
    });
}

impl SubwordScheme for DefaultScheme {
    fn id(&self) -> &str {
        "default"
    }

    fn segment(&self, text: &str) -> Vec<Span> {
        let mut spans = Vec::new();
        let mut run: Option<(usize, CharClass)> = None;
        for (i, c) in text.char_indices() {
            let class = classify_char(c);
            match run {
                Some((_, current)) if current == class => {}
                Some((start, current)) => {
                    chunk_run(text, start, i, current, &mut spans);
                    run = (class != CharClass::Whitespace).then_some((i, class));
                }
                None => {
                    if class != CharClass::Whitespace {
                        run = Some((i, class));
                    }
                }
            }
        }
        if let Some((start, current)) = run {
            chunk_run(text, start, text.len(), current, &mut spans);
        }
        spans
    }
}

/// Scheme backed by a vocabulary file (UTF-8, one token per line). Segments
/// by greedy longest match inside each whitespace-free run; characters not
/// covered by the vocabulary become single-character tokens.
pub struct VocabScheme {
    id: String,
    tokens: Vec<String>,
    max_len: usize,
    lookup: HashMap<String, ()>,
}

impl VocabScheme {
    pub fn new(id: impl Into<String>, tokens: Vec<String>) -> Self {
        let max_len = tokens.iter().map(|t| t.len()).max().unwrap_or(0);
        let lookup = tokens.iter().map(|t| (t.clone(), ())).collect();
        Self {
            id: id.into(),
            tokens,
            max_len,
            lookup,
        }
    }

    pub fn from_file(id: impl Into<String>, path: &Path) -> Result<Self, SegmentationError> {
        let body = fs::read_to_string(path).map_err(|source| SegmentationError::VocabularyIo {
            path: path.display().to_string(),
            source,
        })?;
        let tokens: Vec<String> = body
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect();
        if tokens.is_empty() {
            return Err(SegmentationError::EmptyVocabulary {
                path: path.display().to_string(),
            });
        }
        Ok(Self::new(id, tokens))
    }
}

impl SubwordScheme for VocabScheme {
    fn id(&self) -> &str {
        &self.id
    }

    fn segment(&self, text: &str) -> Vec<Span> {
        let mut spans = Vec::new();
        for word in word_spans(text) {
            let mut pos = word.start;
            while pos < word.end {
                let limit = (pos + self.max_len).min(word.end);
                let mut matched = None;
                let mut end = limit;
                // Walk candidate ends from longest to shortest on char
                // boundaries.
                while end > pos {
                    if text.is_char_boundary(end) && self.lookup.contains_key(&text[pos..end]) {
                        matched = Some(end);
                        break;
                    }
                    end -= 1;
                }
                let next = match matched {
                    Some(e) => e,
                    None => {
                        let mut e = pos + 1;
                        while !text.is_char_boundary(e) {
                            e += 1;
                        }
                        e
                    }
                };
                spans.push(Span {
                    start: pos,
                    end: next,
                });
                pos = next;
            }
        }
        spans
    }

    fn token_list(&self) -> Option<&[String]> {
        Some(&self.tokens)
    }
}

/// Registry of tokenizer schemes keyed by string id. The default scheme is
/// always present under `"default"`.
pub struct SchemeRegistry {
    schemes: HashMap<String, Arc<dyn SubwordScheme>>,
}

impl Default for SchemeRegistry {
    fn default() -> Self {
        let mut schemes: HashMap<String, Arc<dyn SubwordScheme>> = HashMap::new();
        schemes.insert("default".to_owned(), Arc::new(DefaultScheme));
        Self { schemes }
    }
}

impl SchemeRegistry {
    pub fn register(&mut self, scheme: Arc<dyn SubwordScheme>) {
        self.schemes.insert(scheme.id().to_owned(), scheme);
    }

    pub fn load_vocab_file(&mut self, id: &str, path: &Path) -> Result<(), SegmentationError> {
        let scheme = VocabScheme::from_file(id, path)?;
        self.register(Arc::new(scheme));
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<&Arc<dyn SubwordScheme>, SegmentationError> {
        self.schemes
            .get(id)
            .ok_or_else(|| SegmentationError::UnknownScheme(id.to_owned()))
    }
}

/// Tokenize into subword segments under a registered scheme.
pub fn tokenize_subwords<'a>(
    text: &'a str,
    scheme_id: &str,
    registry: &SchemeRegistry,
) -> Result<Vec<&'a str>, SegmentationError> {
    let scheme = registry.get(scheme_id)?;
    Ok(scheme
        .segment(text)
        .into_iter()
        .map(|s| s.slice(text))
        .collect())
}

/// Cached views of one chain at every granularity, with a per-character
/// class map.
pub struct SegmentedChain {
    raw: String,
    lines: Vec<Span>,
    words: Vec<Span>,
    subwords: Vec<Span>,
    class_map: Vec<CharClass>,
}

impl SegmentedChain {
    pub fn segment(
        text: impl Into<String>,
        scheme_id: &str,
        registry: &SchemeRegistry,
    ) -> Result<Self, SegmentationError> {
        let raw = text.into();
        let scheme = registry.get(scheme_id)?;
        let subwords = scheme.segment(&raw);
        Ok(Self {
            lines: line_spans(&raw),
            words: word_spans(&raw),
            subwords,
            class_map: raw.chars().map(classify_char).collect(),
            raw,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().map(|s| s.slice(&self.raw))
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|s| s.slice(&self.raw))
    }

    pub fn subwords(&self) -> impl Iterator<Item = &str> {
        self.subwords.iter().map(|s| s.slice(&self.raw))
    }

    pub fn line_spans(&self) -> &[Span] {
        &self.lines
    }

    pub fn word_spans(&self) -> &[Span] {
        &self.words
    }

    pub fn subword_spans(&self) -> &[Span] {
        &self.subwords
    }

    pub fn class_map(&self) -> &[CharClass] {
        &self.class_map
    }

    /// Count of characters in each class. The sum equals the total character
    /// count.
    pub fn class_counts(&self) -> HashMap<CharClass, usize> {
        let mut counts = HashMap::new();
        for class in &self.class_map {
            *counts.entry(*class).or_insert(0) += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_char_basics() {
        assert_eq!(classify_char('b'), CharClass::Alphabetic);
        assert_eq!(classify_char('7'), CharClass::Digit);
        assert_eq!(classify_char('■'), CharClass::Symbol);
        assert_eq!(classify_char(' '), CharClass::Whitespace);
        assert_eq!(classify_char('\n'), CharClass::Whitespace);
        // Accented letters are alphabetic, non-ASCII numerals are not digits.
        assert_eq!(classify_char('é'), CharClass::Alphabetic);
        assert_eq!(classify_char('٣'), CharClass::Symbol);
    }

    #[test]
    fn split_lines_preserves_empty_segments() {
        assert_eq!(split_lines("a\nb\nc"), vec!["a", "b", "c"]);
        assert_eq!(split_lines("a\n\nb"), vec!["a", "", "b"]);
        assert_eq!(split_lines("no newline"), vec!["no newline"]);
    }

    #[test]
    fn split_words_keeps_punctuation_attached() {
        assert_eq!(split_words("9b + 7"), vec!["9b", "+", "7"]);
        assert_eq!(split_words("Thus, the answer"), vec!["Thus,", "the", "answer"]);
        assert_eq!(split_words(""), Vec::<&str>::new());
        assert_eq!(split_words("21+7=28; done"), vec!["21+7=28;", "done"]);
    }

    #[test]
    fn default_scheme_chunks_by_class() {
        let registry = SchemeRegistry::default();
        assert_eq!(
            tokenize_subwords("answer", "default", &registry).unwrap(),
            vec!["answ", "er"]
        );
        assert_eq!(
            tokenize_subwords("189+7", "default", &registry).unwrap(),
            vec!["189", "+", "7"]
        );
        assert_eq!(
            tokenize_subwords("196196", "default", &registry).unwrap(),
            vec!["196", "196"]
        );
    }

    #[test]
    fn unknown_scheme_is_an_error() {
        let registry = SchemeRegistry::default();
        assert!(matches!(
            tokenize_subwords("x", "missing", &registry),
            Err(SegmentationError::UnknownScheme(_))
        ));
    }

    #[test]
    fn vocab_scheme_greedy_longest_match() {
        let scheme = VocabScheme::new("v", vec!["ans".into(), "wer".into(), "a".into()]);
        let spans = scheme.segment("answer");
        let tokens: Vec<&str> = spans.iter().map(|s| s.slice("answer")).collect();
        assert_eq!(tokens, vec!["ans", "wer"]);
        // Unknown characters fall back to single-character tokens.
        let spans = scheme.segment("anq");
        let tokens: Vec<&str> = spans.iter().map(|s| s.slice("anq")).collect();
        assert_eq!(tokens, vec!["a", "n", "q"]);
    }

    #[test]
    fn digit_runs_are_maximal() {
        let runs: Vec<&str> = digit_runs("sum is 70; 170 stays")
            .iter()
            .map(|s| s.slice("sum is 70; 170 stays"))
            .collect();
        assert_eq!(runs, vec!["70", "170"]);
    }

    #[test]
    fn segmented_chain_views_agree() {
        let registry = SchemeRegistry::default();
        let chain = SegmentedChain::segment("x = 1\ny = 22", "default", &registry).unwrap();
        assert_eq!(chain.lines().collect::<Vec<_>>(), vec!["x = 1", "y = 22"]);
        assert_eq!(
            chain.words().collect::<Vec<_>>(),
            vec!["x", "=", "1", "y", "=", "22"]
        );
        let total: usize = chain.class_counts().values().sum();
        assert_eq!(total, chain.raw().chars().count());
    }

    #[test]
    fn every_word_lies_within_one_line() {
        let registry = SchemeRegistry::default();
        let chain =
            SegmentedChain::segment("one two\nthree\n\nfour 5", "default", &registry).unwrap();
        for word in chain.word_spans() {
            assert!(chain
                .line_spans()
                .iter()
                .any(|line| word.start >= line.start && word.end <= line.end));
        }
    }
}

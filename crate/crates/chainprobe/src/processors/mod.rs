//! Chain-level transformation processors.
//!
//! Eleven composable operations over reasoning-chain text: four shuffles
//! (token, word, line, within-line word), three masks (alphabet, digits,
//! answer), two removals (alphabet, answer), false-answer noise injection,
//! and two randomisation baselines (random token, frequency-sampled word).
//! Question and chain omission are prompt-level flags and live in
//! [`crate::prompting`].
//!
//! All processors are pure given `(input, seed)`. Per-record streams are
//! derived as `mix(run_seed, record_key, step_index, step_salt)`, so a
//! pipeline applied twice with the same run seed is byte-identical, and
//! reordering steps changes the streams.

mod dsl;

pub use dsl::DslError;

use crate::record::ReasoningRecord;
use crate::rng::{fisher_yates, mix, stable_key, SplitMix64};
use crate::segmentation::{
    digit_runs, split_lines, split_words, word_spans, SchemeRegistry, SegmentationError, Span,
};

use thiserror::Error;

/// Mask token used when none is configured. U+25A0 black square.
pub const DEFAULT_MASK_CHAR: char = '■';

/// Injected sentence used when none is configured.
pub const DEFAULT_FALSE_SENTENCE: &str = "Thus answer: 123.";

#[derive(Debug, Error)]
pub enum ProcessorError {
    #[error("answer-dependent processor requires a non-empty answer")]
    MissingAnswer,
    #[error("random_token requires a non-empty vocabulary")]
    EmptyVocabulary,
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
}

/// Error from one step of a pipeline, with the step position attached.
#[derive(Debug, Error)]
#[error("step {index} ({op}): {source}")]
pub struct PipelineError {
    pub index: usize,
    pub op: String,
    #[source]
    pub source: ProcessorError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Token,
    Word,
    Line,
    InlineWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskTarget {
    Alphabet,
    Digits,
    Answer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemoveTarget {
    Alphabet,
    Answer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomizeUnit {
    Token,
    Word,
}

/// The concrete chain-level operations. This enum is closed on purpose:
/// a pipeline step is always one of these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcessorOp {
    TokenShuffle,
    WordShuffle,
    LineShuffle,
    InlineWordShuffle,
    MaskAlphabet,
    MaskDigits,
    MaskAnswer,
    RemoveAlphabet,
    RemoveAnswer,
    InjectNoise { multiplier: u32 },
    RandomToken,
    RandomWord,
}

impl ProcessorOp {
    pub fn name(&self) -> &'static str {
        match self {
            ProcessorOp::TokenShuffle => "token_shuffle",
            ProcessorOp::WordShuffle => "word_shuffle",
            ProcessorOp::LineShuffle => "line_shuffle",
            ProcessorOp::InlineWordShuffle => "inline_word_shuffle",
            ProcessorOp::MaskAlphabet => "mask_alphabet",
            ProcessorOp::MaskDigits => "mask_digits",
            ProcessorOp::MaskAnswer => "mask_answer",
            ProcessorOp::RemoveAlphabet => "remove_alphabet",
            ProcessorOp::RemoveAnswer => "remove_answer",
            ProcessorOp::InjectNoise { .. } => "inject_noise",
            ProcessorOp::RandomToken => "random_token",
            ProcessorOp::RandomWord => "random_word",
        }
    }
}

/// One configured pipeline step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessorSpec {
    pub op: ProcessorOp,
    /// Replacement character for the mask operations.
    pub mask_char: char,
    /// Sentence inserted by `inject_noise`.
    pub false_sentence: String,
    /// Tokenizer scheme for the token-granular operations; `None` selects
    /// the built-in default scheme.
    pub vocab_id: Option<String>,
    /// Extra salt mixed into this step's random stream.
    pub seed_salt: u64,
}

impl ProcessorSpec {
    pub fn new(op: ProcessorOp) -> Self {
        Self {
            op,
            mask_char: DEFAULT_MASK_CHAR,
            false_sentence: DEFAULT_FALSE_SENTENCE.to_owned(),
            vocab_id: None,
            seed_salt: 0,
        }
    }

    fn scheme_id(&self) -> &str {
        self.vocab_id.as_deref().unwrap_or("default")
    }
}

/// An ordered list of processor steps plus the seed they draw from.
/// Steps apply left to right: `[remove_alphabet, line_shuffle]` removes the
/// alphabet first and shuffles the surviving lines second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformPipeline {
    pub steps: Vec<ProcessorSpec>,
    pub run_seed: u64,
}

impl TransformPipeline {
    pub fn new(steps: Vec<ProcessorSpec>, run_seed: u64) -> Self {
        Self { steps, run_seed }
    }

    /// Identity pipeline.
    pub fn identity(run_seed: u64) -> Self {
        Self {
            steps: Vec::new(),
            run_seed,
        }
    }

    /// Parse the config DSL, e.g. `"remove_alphabet,line_shuffle"` or
    /// `"inject_noise(k=3)"`. An empty string is the identity pipeline.
    pub fn from_dsl(text: &str, run_seed: u64) -> Result<Self, DslError> {
        Ok(Self {
            steps: dsl::parse(text)?,
            run_seed,
        })
    }

    /// Canonical DSL rendering, usable to reparse this pipeline.
    pub fn to_dsl(&self) -> String {
        dsl::render(&self.steps)
    }

    /// Apply every step to the record's chain, left to right. Each step gets
    /// its own random stream derived from the run seed, the record id, the
    /// step index, and the step salt.
    pub fn apply(
        &self,
        record: &ReasoningRecord,
        schemes: &SchemeRegistry,
    ) -> Result<String, PipelineError> {
        let record_key = stable_key(&record.id);
        let mut chain = record.chain.clone();
        for (index, step) in self.steps.iter().enumerate() {
            let seed = mix(&[self.run_seed, record_key, index as u64, step.seed_salt]);
            let mut rng = SplitMix64::new(seed);
            chain = apply_step(&chain, step, &record.gold_answer, &mut rng, schemes).map_err(
                |source| PipelineError {
                    index,
                    op: step.op.name().to_owned(),
                    source,
                },
            )?;
        }
        Ok(chain)
    }
}

fn apply_step(
    chain: &str,
    step: &ProcessorSpec,
    gold_answer: &str,
    rng: &mut SplitMix64,
    schemes: &SchemeRegistry,
) -> Result<String, ProcessorError> {
    match &step.op {
        ProcessorOp::TokenShuffle => {
            shuffle_with_scheme(chain, Granularity::Token, rng, schemes, step.scheme_id())
        }
        ProcessorOp::WordShuffle => {
            shuffle_with_scheme(chain, Granularity::Word, rng, schemes, step.scheme_id())
        }
        ProcessorOp::LineShuffle => {
            shuffle_with_scheme(chain, Granularity::Line, rng, schemes, step.scheme_id())
        }
        ProcessorOp::InlineWordShuffle => {
            shuffle_with_scheme(chain, Granularity::InlineWord, rng, schemes, step.scheme_id())
        }
        ProcessorOp::MaskAlphabet => mask(chain, MaskTarget::Alphabet, None, step.mask_char),
        ProcessorOp::MaskDigits => mask(chain, MaskTarget::Digits, None, step.mask_char),
        ProcessorOp::MaskAnswer => {
            mask(chain, MaskTarget::Answer, Some(gold_answer), step.mask_char)
        }
        ProcessorOp::RemoveAlphabet => remove(chain, RemoveTarget::Alphabet, None),
        ProcessorOp::RemoveAnswer => remove(chain, RemoveTarget::Answer, Some(gold_answer)),
        ProcessorOp::InjectNoise { multiplier } => Ok(inject_noise(
            chain,
            gold_answer,
            *multiplier,
            &step.false_sentence,
            rng,
        )),
        ProcessorOp::RandomToken => randomize_with_scheme(
            chain,
            RandomizeUnit::Token,
            None,
            rng,
            schemes,
            step.scheme_id(),
        ),
        ProcessorOp::RandomWord => randomize_with_scheme(
            chain,
            RandomizeUnit::Word,
            None,
            rng,
            schemes,
            step.scheme_id(),
        ),
    }
}

/// Spans where `answer` occurs in `text`.
///
/// For all-digit answers a span is a maximal digit run equal to the answer,
/// so "70" never matches inside "170". For other answers (option letters) a
/// span is a standalone occurrence whose neighbours are not alphanumeric.
pub fn answer_spans(text: &str, answer: &str) -> Vec<Span> {
    if answer.is_empty() {
        return Vec::new();
    }
    if answer.chars().all(|c| c.is_ascii_digit()) {
        return digit_runs(text)
            .into_iter()
            .filter(|s| s.slice(text) == answer)
            .collect();
    }
    let mut spans = Vec::new();
    let mut from = 0;
    while let Some(found) = text[from..].find(answer) {
        let start = from + found;
        let end = start + answer.len();
        let before_ok = text[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
        let after_ok = text[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            spans.push(Span { start, end });
            from = end;
        } else {
            from = start + 1;
        }
    }
    spans
}

/// Number of answer occurrences under the same matching rule as
/// [`answer_spans`].
pub fn count_answer_occurrences(text: &str, answer: &str) -> usize {
    answer_spans(text, answer).len()
}

/// Permute the chain's segments at the requested granularity with the
/// built-in tokenizer scheme. Zero or one segment is the identity.
pub fn shuffle(
    chain: &str,
    granularity: Granularity,
    rng: &mut SplitMix64,
    schemes: &SchemeRegistry,
) -> Result<String, ProcessorError> {
    shuffle_with_scheme(chain, granularity, rng, schemes, "default")
}

/// [`shuffle`] with an explicit tokenizer scheme for token granularity.
///
/// Token and word shuffles rejoin segments with a single space; line
/// shuffles rejoin with newlines. Within-line word shuffle permutes each
/// line independently and preserves line order and count.
pub fn shuffle_with_scheme(
    chain: &str,
    granularity: Granularity,
    rng: &mut SplitMix64,
    schemes: &SchemeRegistry,
    scheme_id: &str,
) -> Result<String, ProcessorError> {
    match granularity {
        Granularity::Token => {
            let scheme = schemes.get(scheme_id)?;
            let mut tokens: Vec<&str> = scheme
                .segment(chain)
                .into_iter()
                .map(|s| s.slice(chain))
                .collect();
            if tokens.len() <= 1 {
                return Ok(chain.to_owned());
            }
            fisher_yates(&mut tokens, rng);
            Ok(tokens.join(" "))
        }
        Granularity::Word => {
            let mut words = split_words(chain);
            if words.len() <= 1 {
                return Ok(chain.to_owned());
            }
            fisher_yates(&mut words, rng);
            Ok(words.join(" "))
        }
        Granularity::Line => {
            let mut lines = split_lines(chain);
            if lines.len() <= 1 {
                return Ok(chain.to_owned());
            }
            fisher_yates(&mut lines, rng);
            Ok(lines.join("\n"))
        }
        Granularity::InlineWord => {
            let lines = split_lines(chain);
            let shuffled: Vec<String> = lines
                .into_iter()
                .map(|line| {
                    let mut words = split_words(line);
                    if words.len() <= 1 {
                        return line.to_owned();
                    }
                    fisher_yates(&mut words, rng);
                    words.join(" ")
                })
                .collect();
            Ok(shuffled.join("\n"))
        }
    }
}

/// Replace targeted characters with `mask_char`. Alphabet and digit masking
/// preserve the character count exactly; answer masking replaces each
/// character of every matched occurrence.
pub fn mask(
    chain: &str,
    target: MaskTarget,
    answer: Option<&str>,
    mask_char: char,
) -> Result<String, ProcessorError> {
    match target {
        MaskTarget::Alphabet => Ok(chain
            .chars()
            .map(|c| if c.is_alphabetic() { mask_char } else { c })
            .collect()),
        MaskTarget::Digits => Ok(chain
            .chars()
            .map(|c| if c.is_ascii_digit() { mask_char } else { c })
            .collect()),
        MaskTarget::Answer => {
            let answer = answer.filter(|a| !a.is_empty()).ok_or(ProcessorError::MissingAnswer)?;
            let spans = answer_spans(chain, answer);
            let mut out = String::with_capacity(chain.len());
            let mut cursor = 0;
            for span in spans {
                out.push_str(&chain[cursor..span.start]);
                for _ in chain[span.start..span.end].chars() {
                    out.push(mask_char);
                }
                cursor = span.end;
            }
            out.push_str(&chain[cursor..]);
            Ok(out)
        }
    }
}

/// Delete targeted content; everything else is retained byte for byte, in
/// order.
pub fn remove(
    chain: &str,
    target: RemoveTarget,
    answer: Option<&str>,
) -> Result<String, ProcessorError> {
    match target {
        RemoveTarget::Alphabet => Ok(chain.chars().filter(|c| !c.is_alphabetic()).collect()),
        RemoveTarget::Answer => {
            let answer = answer.filter(|a| !a.is_empty()).ok_or(ProcessorError::MissingAnswer)?;
            let spans = answer_spans(chain, answer);
            let mut out = String::with_capacity(chain.len());
            let mut cursor = 0;
            for span in spans {
                out.push_str(&chain[cursor..span.start]);
                cursor = span.end;
            }
            out.push_str(&chain[cursor..]);
            Ok(out)
        }
    }
}

/// Replace every unit in place, leaving the text between units untouched.
///
/// Token mode samples uniformly from `vocab` when given, otherwise from the
/// chain's own distinct tokens. Word mode samples from the chain's empirical
/// word-frequency distribution.
pub fn randomize(
    chain: &str,
    unit: RandomizeUnit,
    vocab: Option<&[String]>,
    rng: &mut SplitMix64,
    schemes: &SchemeRegistry,
) -> Result<String, ProcessorError> {
    randomize_with_scheme(chain, unit, vocab, rng, schemes, "default")
}

pub fn randomize_with_scheme(
    chain: &str,
    unit: RandomizeUnit,
    vocab: Option<&[String]>,
    rng: &mut SplitMix64,
    schemes: &SchemeRegistry,
    scheme_id: &str,
) -> Result<String, ProcessorError> {
    let spans: Vec<Span> = match unit {
        RandomizeUnit::Token => schemes.get(scheme_id)?.segment(chain),
        RandomizeUnit::Word => word_spans(chain),
    };
    if spans.is_empty() {
        return Ok(chain.to_owned());
    }

    let pool: Vec<String> = match (unit, vocab) {
        (_, Some(list)) => {
            if list.is_empty() {
                return Err(ProcessorError::EmptyVocabulary);
            }
            list.to_vec()
        }
        (RandomizeUnit::Token, None) => {
            // Per-chain vocabulary: the chain's distinct tokens, sorted for a
            // stable sampling order.
            let scheme = schemes.get(scheme_id)?;
            if let Some(list) = scheme.token_list() {
                list.to_vec()
            } else {
                let mut distinct: Vec<String> =
                    spans.iter().map(|s| s.slice(chain).to_owned()).collect();
                distinct.sort_unstable();
                distinct.dedup();
                distinct
            }
        }
        (RandomizeUnit::Word, None) => {
            // The full word multiset; uniform index sampling realises the
            // empirical frequency distribution.
            spans.iter().map(|s| s.slice(chain).to_owned()).collect()
        }
    };

    let mut out = String::with_capacity(chain.len());
    let mut cursor = 0;
    for span in &spans {
        out.push_str(&chain[cursor..span.start]);
        out.push_str(&pool[rng.next_below(pool.len())]);
        cursor = span.end;
    }
    out.push_str(&chain[cursor..]);
    Ok(out)
}

/// Insert `k * c` copies of `false_sentence`, where `c` is the number of
/// answer occurrences in the chain. Each copy becomes its own line at a
/// position drawn uniformly without replacement over line boundaries; the
/// original lines keep their relative order. When the copy count exceeds the
/// boundary count, boundaries are filled evenly and the remainder is drawn
/// without replacement.
pub fn inject_noise(
    chain: &str,
    answer: &str,
    multiplier: u32,
    false_sentence: &str,
    rng: &mut SplitMix64,
) -> String {
    let occurrences = count_answer_occurrences(chain, answer);
    let copies = multiplier as usize * occurrences;
    if copies == 0 {
        return chain.to_owned();
    }

    let lines = split_lines(chain);
    let boundaries = lines.len() + 1;
    let mut per_boundary = vec![copies / boundaries; boundaries];
    let remainder = copies % boundaries;
    if remainder > 0 {
        let mut indices: Vec<usize> = (0..boundaries).collect();
        for i in 0..remainder {
            let j = i + rng.next_below(boundaries - i);
            indices.swap(i, j);
        }
        for &b in &indices[..remainder] {
            per_boundary[b] += 1;
        }
    }

    let mut out_lines: Vec<&str> = Vec::with_capacity(lines.len() + copies);
    for (i, count) in per_boundary.iter().enumerate() {
        for _ in 0..*count {
            out_lines.push(false_sentence);
        }
        if i < lines.len() {
            out_lines.push(lines[i]);
        }
    }
    out_lines.join("\n")
}

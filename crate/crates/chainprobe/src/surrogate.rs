//! Offline, model-free answer extractors.
//!
//! These run the full harness with zero inference cost. `last_number` and
//! `after_anchor` are contrast baselines; `most_frequent_number` embodies a
//! pure frequency account of extraction, the strategy that false-answer
//! injection is designed to defeat. Comparing their behaviour under noise
//! against anchored extraction is the whole point of keeping them here.

use crate::modelio::{Backend, CompletionRequest, ModelIoError, ModelResponse};
use crate::segmentation::digit_runs;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// Anchors used when none are configured.
pub const DEFAULT_ANCHORS: [&str; 3] = ["answer is", "Thus answer", "answer:"];

/// Extraction strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtractorStrategy {
    /// The final maximal digit run.
    LastNumber,
    /// The modal digit-run value; ties break to the smallest value.
    MostFrequentNumber,
    /// The first digit run after the last occurrence of any anchor phrase.
    AfterAnchor { anchors: Vec<String> },
}

impl ExtractorStrategy {
    pub fn after_anchor_default() -> Self {
        ExtractorStrategy::AfterAnchor {
            anchors: DEFAULT_ANCHORS.iter().map(|s| (*s).to_owned()).collect(),
        }
    }

    /// Parse a strategy id as used in backend specs.
    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "last_number" => Some(ExtractorStrategy::LastNumber),
            "most_frequent_number" => Some(ExtractorStrategy::MostFrequentNumber),
            "after_anchor" => Some(Self::after_anchor_default()),
            _ => None,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            ExtractorStrategy::LastNumber => "last_number",
            ExtractorStrategy::MostFrequentNumber => "most_frequent_number",
            ExtractorStrategy::AfterAnchor { .. } => "after_anchor",
        }
    }
}

/// Extraction outcome with an explanatory note for ties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extraction {
    pub value: Option<i64>,
    pub note: Option<String>,
}

fn run_value(text: &str, span: crate::segmentation::Span) -> Option<i64> {
    let digits = span.slice(text).trim_start_matches('0');
    if digits.is_empty() {
        return Some(0);
    }
    digits.parse().ok()
}

/// Extract an integer answer from a chain under the given strategy.
/// Absence is a value, not an error.
pub fn extract(chain: &str, strategy: &ExtractorStrategy) -> Option<i64> {
    extract_with_note(chain, strategy).value
}

pub fn extract_with_note(chain: &str, strategy: &ExtractorStrategy) -> Extraction {
    match strategy {
        ExtractorStrategy::LastNumber => Extraction {
            value: digit_runs(chain)
                .into_iter()
                .next_back()
                .and_then(|s| run_value(chain, s)),
            note: None,
        },
        ExtractorStrategy::MostFrequentNumber => {
            let mut counts: HashMap<i64, usize> = HashMap::new();
            for span in digit_runs(chain) {
                if let Some(v) = run_value(chain, span) {
                    *counts.entry(v).or_insert(0) += 1;
                }
            }
            let best = counts
                .iter()
                .map(|(v, c)| (*c, std::cmp::Reverse(*v)))
                .max()
                .map(|(c, std::cmp::Reverse(v))| (v, c));
            match best {
                Some((value, count)) => {
                    let tied: Vec<i64> = counts
                        .iter()
                        .filter(|(_, c)| **c == count)
                        .map(|(v, _)| *v)
                        .collect();
                    let note = (tied.len() > 1).then(|| {
                        let mut tied = tied;
                        tied.sort_unstable();
                        format!("tie at count {count} among {tied:?}; took smallest")
                    });
                    Extraction {
                        value: Some(value),
                        note,
                    }
                }
                None => Extraction {
                    value: None,
                    note: None,
                },
            }
        }
        ExtractorStrategy::AfterAnchor { anchors } => {
            let anchor_end = anchors
                .iter()
                .filter(|a| !a.is_empty())
                .filter_map(|a| chain.rfind(a.as_str()).map(|i| i + a.len()))
                .max();
            let value = anchor_end.and_then(|end| {
                digit_runs(chain)
                    .into_iter()
                    .find(|s| s.start >= end)
                    .and_then(|s| run_value(chain, s))
            });
            Extraction { value, note: None }
        }
    }
}

/// A surrogate extractor exposed as an inference backend, so the full
/// orchestration path (prompt, archive, judge, report) runs offline. The
/// response text is the extracted integer, or `"no answer"`.
pub struct SurrogateBackend {
    strategy: ExtractorStrategy,
}

impl SurrogateBackend {
    pub fn new(strategy: ExtractorStrategy) -> Self {
        Self { strategy }
    }
}

impl Backend for SurrogateBackend {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<ModelResponse, ModelIoError> {
        let extraction = extract_with_note(request.prompt, &self.strategy);
        if let Some(note) = &extraction.note {
            log::debug!("surrogate {}: {note}", self.strategy.id());
        }
        Ok(ModelResponse::ok(match extraction.value {
            Some(v) => v.to_string(),
            None => "no answer".to_owned(),
        }))
    }

    fn describe(&self) -> String {
        format!("surrogate:{}", self.strategy.id())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processors::{inject_noise, mask, shuffle, Granularity, MaskTarget};
    use crate::rng::SplitMix64;
    use crate::segmentation::SchemeRegistry;

    #[test]
    fn last_number_takes_the_final_run() {
        assert_eq!(
            extract("... = 196. Thus answer 70.", &ExtractorStrategy::LastNumber),
            Some(70)
        );
        assert_eq!(extract("no digits", &ExtractorStrategy::LastNumber), None);
    }

    #[test]
    fn most_frequent_counts_runs() {
        // "123" occurs three times, "70" once.
        let chain = "123 and 123 then 70, finally 123";
        assert_eq!(
            extract(chain, &ExtractorStrategy::MostFrequentNumber),
            Some(123)
        );
    }

    #[test]
    fn most_frequent_breaks_ties_to_smallest() {
        let extraction = extract_with_note("5 9 5 9", &ExtractorStrategy::MostFrequentNumber);
        assert_eq!(extraction.value, Some(5));
        assert!(extraction.note.unwrap().contains("tie"));
    }

    #[test]
    fn most_frequent_normalises_values_not_strings() {
        // "070" and "70" are the same value.
        assert_eq!(
            extract("070 70 8", &ExtractorStrategy::MostFrequentNumber),
            Some(70)
        );
    }

    #[test]
    fn after_anchor_takes_first_run_after_last_anchor() {
        assert_eq!(
            extract("Thus, the answer is 70", &ExtractorStrategy::after_anchor_default()),
            Some(70)
        );
        // The 196 before the anchor is ignored; nothing after it means none.
        assert_eq!(
            extract("196 then answer is", &ExtractorStrategy::after_anchor_default()),
            None
        );
        assert_eq!(
            extract("no anchor 70", &ExtractorStrategy::after_anchor_default()),
            None
        );
    }

    #[test]
    fn shuffle_invariance_of_most_frequent() {
        let reg = SchemeRegistry::default();
        let chain = "a 12 b 12\nc 7 d 9\ne 12 f 7";
        let before = extract(chain, &ExtractorStrategy::MostFrequentNumber);
        for granularity in [Granularity::Line, Granularity::Word, Granularity::InlineWord] {
            let shuffled =
                shuffle(chain, granularity, &mut SplitMix64::new(99), &reg).unwrap();
            assert_eq!(
                extract(&shuffled, &ExtractorStrategy::MostFrequentNumber),
                before,
                "granularity {granularity:?}"
            );
        }
    }

    #[test]
    fn noise_flips_most_frequent_but_not_anchored() {
        let chain = "step one gives 70\ncheck: 70 confirmed\nThus, the answer is 70";
        let noisy = inject_noise(chain, "70", 2, "Thus answer: 123.", &mut SplitMix64::new(4));
        assert_eq!(
            extract(chain, &ExtractorStrategy::MostFrequentNumber),
            Some(70)
        );
        assert_eq!(
            extract(&noisy, &ExtractorStrategy::MostFrequentNumber),
            Some(123)
        );
        // An anchor that the injected sentence does not contain still finds
        // the true answer.
        let anchored = ExtractorStrategy::AfterAnchor {
            anchors: vec!["answer is".to_owned()],
        };
        assert_eq!(extract(&noisy, &anchored), Some(70));
    }

    #[test]
    fn digit_mask_collapses_every_strategy() {
        let chain = "two 12 and 70\nThus, the answer is 70";
        let masked = mask(chain, MaskTarget::Digits, None, '■').unwrap();
        for strategy in [
            ExtractorStrategy::LastNumber,
            ExtractorStrategy::MostFrequentNumber,
            ExtractorStrategy::after_anchor_default(),
        ] {
            assert_eq!(extract(&masked, &strategy), None, "{strategy:?}");
        }
    }
}

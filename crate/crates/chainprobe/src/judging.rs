//! Local, deterministic answer judges plus an external model-judge hook.
//!
//! Numeric judging emulates an equivalence check: strip formatting, pull a
//! digit run, normalise leading zeros, compare integers. Choice judging
//! matches the last standalone option letter. Code judging is a recording
//! stub; wiring a real execution judge is left to the embedding project.

use crate::modelio::{Backend, CompletionRequest, InferenceParams, ResponseStatus};
use crate::segmentation::digit_runs;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("gold answer {0:?} is not valid for this judge")]
    InvalidGold(String),
    #[error("external judgment unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeMethod {
    Numeric,
    Choice,
    External,
    CodeStub,
}

/// Outcome of judging one response.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Verdict {
    pub correct: bool,
    pub extracted: Option<String>,
    pub method: JudgeMethod,
    #[serde(default)]
    pub note: String,
}

impl Verdict {
    fn incorrect(method: JudgeMethod, note: impl Into<String>) -> Self {
        Self {
            correct: false,
            extracted: None,
            method,
            note: note.into(),
        }
    }
}

/// Which digit run of the response counts as the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionRule {
    /// First run after the last anchor phrase when one is present, else the
    /// last run. Suits retrieval-mode completions, which begin with the
    /// answer but may elaborate afterwards.
    #[default]
    FirstAfterAnchor,
    /// Always the last run.
    LastNumber,
}

const NUMERIC_ANCHORS: [&str; 3] = ["answer is", "Thus answer", "answer:"];

/// Strip formatting the equivalence check should ignore: thousands commas,
/// dollar signs, and `\boxed{...}` wrappers (the wrapper goes, the content
/// stays).
fn strip_formatting(response: &str) -> String {
    let mut text = response.replace(['$', ','], "");
    while let Some(open) = text.find("\\boxed{") {
        let inner_start = open + "\\boxed{".len();
        let mut depth = 1;
        let mut inner_end = text.len();
        for (i, c) in text[inner_start..].char_indices() {
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        inner_end = inner_start + i;
                        break;
                    }
                }
                _ => {}
            }
        }
        let inner = text[inner_start..inner_end].to_owned();
        let close = (inner_end < text.len()) as usize;
        text.replace_range(open..inner_end + close, &inner);
    }
    text
}

fn parse_run(text: &str, run: crate::segmentation::Span) -> Option<i64> {
    let negative = text[..run.start].ends_with('-');
    let digits = run.slice(text).trim_start_matches('0');
    // Leading zeros normalise away; runs too long for i64 are not answers.
    let value: i64 = if digits.is_empty() {
        0
    } else {
        digits.parse().ok()?
    };
    Some(if negative { -value } else { value })
}

fn extract_numeric(response: &str, rule: ExtractionRule) -> Option<i64> {
    let cleaned = strip_formatting(response);
    let runs = digit_runs(&cleaned);
    if runs.is_empty() {
        return None;
    }
    let chosen = match rule {
        ExtractionRule::LastNumber => *runs.last().expect("nonempty"),
        ExtractionRule::FirstAfterAnchor => {
            let anchor_end = NUMERIC_ANCHORS
                .iter()
                .filter_map(|a| cleaned.rfind(a).map(|i| i + a.len()))
                .max();
            match anchor_end {
                Some(end) => runs
                    .iter()
                    .find(|r| r.start >= end)
                    .copied()
                    .unwrap_or(*runs.last().expect("nonempty")),
                None => *runs.last().expect("nonempty"),
            }
        }
    };
    parse_run(&cleaned, chosen)
}

/// Judge a numeric response against the gold integer.
pub fn judge_numeric(response: &str, gold: i64) -> Verdict {
    judge_numeric_with_rule(response, gold, ExtractionRule::default())
}

pub fn judge_numeric_with_rule(response: &str, gold: i64, rule: ExtractionRule) -> Verdict {
    match extract_numeric(response, rule) {
        Some(value) => Verdict {
            correct: value == gold,
            extracted: Some(value.to_string()),
            method: JudgeMethod::Numeric,
            note: String::new(),
        },
        None => Verdict::incorrect(JudgeMethod::Numeric, "no number found"),
    }
}

/// Judge a multiple-choice response against a gold option in `A..=D`.
///
/// The extracted option is the last standalone letter, case-insensitive,
/// accepting forms like `(B)`, `B.`, and `option B`.
pub fn judge_choice(response: &str, gold: char) -> Verdict {
    let gold = gold.to_ascii_uppercase();
    let mut last: Option<char> = None;
    let chars: Vec<char> = response.chars().collect();
    for (i, c) in chars.iter().enumerate() {
        if !matches!(c.to_ascii_uppercase(), 'A'..='D') {
            continue;
        }
        let before_ok = i == 0 || !chars[i - 1].is_alphanumeric();
        let after_ok = i + 1 == chars.len() || !chars[i + 1].is_alphanumeric();
        if before_ok && after_ok {
            last = Some(c.to_ascii_uppercase());
        }
    }
    match last {
        Some(letter) => Verdict {
            correct: letter == gold,
            extracted: Some(letter.to_string()),
            method: JudgeMethod::Choice,
            note: String::new(),
        },
        None => Verdict::incorrect(JudgeMethod::Choice, "no option letter found"),
    }
}

/// Default template for the external judge prompt. `{gold}` and `{response}`
/// are the slots.
pub const DEFAULT_JUDGE_TEMPLATE: &str = "You are grading an extracted answer.\n\
Gold answer: {gold}\n\
Model response: {response}\n\
Reply with exactly YES if the response states the gold answer, otherwise reply with exactly NO.";

/// Ask a judge model whether the response matches the gold answer. A reply
/// that parses as neither yes nor no falls back to the local numeric judge,
/// with the fallback noted.
pub fn judge_external(
    response: &str,
    gold: &str,
    backend: &dyn Backend,
    template: &str,
    params: &InferenceParams,
) -> Result<Verdict, JudgeError> {
    let prompt = template
        .replace("{gold}", gold)
        .replace("{response}", response);
    let reply = backend
        .complete(&CompletionRequest {
            prompt: &prompt,
            params,
            salt: "judge",
        })
        .map_err(|e| JudgeError::Unavailable(e.to_string()))?;

    if reply.status != ResponseStatus::Ok {
        return Err(JudgeError::Unavailable(format!(
            "judge backend returned {:?}",
            reply.status
        )));
    }
    let text = reply.text.unwrap_or_default();
    let token = text.trim().to_ascii_uppercase();
    if token.starts_with("YES") {
        return Ok(Verdict {
            correct: true,
            extracted: Some(gold.to_owned()),
            method: JudgeMethod::External,
            note: String::new(),
        });
    }
    if token.starts_with("NO") {
        return Ok(Verdict {
            correct: false,
            extracted: None,
            method: JudgeMethod::External,
            note: String::new(),
        });
    }

    // Unparseable judge output: fall back to the local numeric judge.
    let gold_int: i64 = gold
        .trim()
        .parse()
        .map_err(|_| JudgeError::InvalidGold(gold.to_owned()))?;
    let mut verdict = judge_numeric(response, gold_int);
    verdict.note = format!("judge output unparseable ({token:?}); fell back to numeric judge");
    Ok(verdict)
}

/// Extract the first fenced code block, tolerating a missing closing fence
/// (retrieval-mode completions open with the fence already in the prompt).
pub fn extract_code_block(response: &str) -> Option<String> {
    match response.find("```") {
        Some(open) => {
            let after = &response[open + 3..];
            let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
            let body = &after[body_start..];
            let end = body.find("```").unwrap_or(body.len());
            Some(body[..end].trim_end().to_owned())
        }
        None => {
            // No fence at all: treat the whole response as the block when it
            // ends one (prefix-constrained case), else up to the first fence.
            let end = response.find("```").unwrap_or(response.len());
            let block = response[..end].trim();
            (!block.is_empty()).then(|| block.to_owned())
        }
    }
}

/// Pluggable correctness decision for one benchmark family.
pub trait Judge: Send + Sync {
    fn judge(&self, response: &str, gold: &str) -> Result<Verdict, JudgeError>;
}

pub struct NumericJudge {
    pub rule: ExtractionRule,
}

impl Default for NumericJudge {
    fn default() -> Self {
        Self {
            rule: ExtractionRule::default(),
        }
    }
}

impl Judge for NumericJudge {
    fn judge(&self, response: &str, gold: &str) -> Result<Verdict, JudgeError> {
        let gold: i64 = gold
            .trim()
            .parse()
            .map_err(|_| JudgeError::InvalidGold(gold.to_owned()))?;
        Ok(judge_numeric_with_rule(response, gold, self.rule))
    }
}

#[derive(Default)]
pub struct ChoiceJudge;

impl Judge for ChoiceJudge {
    fn judge(&self, response: &str, gold: &str) -> Result<Verdict, JudgeError> {
        let gold = gold.trim();
        let mut chars = gold.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if matches!(c.to_ascii_uppercase(), 'A'..='D') => {
                Ok(judge_choice(response, c))
            }
            _ => Err(JudgeError::InvalidGold(gold.to_owned())),
        }
    }
}

/// Records the extracted code block without executing it. Every verdict is
/// incorrect; a real execution judge replaces this behind the same trait.
#[derive(Default)]
pub struct CodeStubJudge;

impl Judge for CodeStubJudge {
    fn judge(&self, response: &str, _gold: &str) -> Result<Verdict, JudgeError> {
        Ok(Verdict {
            correct: false,
            extracted: extract_code_block(response),
            method: JudgeMethod::CodeStub,
            note: "code extracted but not executed; no execution judge configured".to_owned(),
        })
    }
}

pub struct ExternalJudge {
    pub backend: std::sync::Arc<dyn Backend>,
    pub template: String,
    pub params: InferenceParams,
}

impl Judge for ExternalJudge {
    fn judge(&self, response: &str, gold: &str) -> Result<Verdict, JudgeError> {
        judge_external(response, gold, self.backend.as_ref(), &self.template, &self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_basics() {
        assert!(judge_numeric("Thus, the answer is 70.", 70).correct);
        let v = judge_numeric("I cannot determine the value", 70);
        assert!(!v.correct);
        assert!(v.extracted.is_none());
    }

    #[test]
    fn numeric_normalises_leading_zeros() {
        // Oracle: "070".parse::<i64>() == 70.
        assert_eq!("070".parse::<i64>().unwrap(), 70);
        let v = judge_numeric("answer is 070", 70);
        assert!(v.correct);
        assert_eq!(v.extracted.as_deref(), Some("70"));
    }

    #[test]
    fn numeric_strips_formatting() {
        assert!(judge_numeric("answer is 1,070", 1070).correct);
        assert!(judge_numeric("answer is $70", 70).correct);
        assert!(judge_numeric("so we get \\boxed{70}", 70).correct);
        assert!(judge_numeric("nested \\boxed{\\frac{70}{1}} huh", 1).correct);
    }

    #[test]
    fn numeric_prefers_first_run_after_anchor() {
        // Anchored: "70" wins even though "196" comes later.
        let v = judge_numeric("Thus, the answer is 70. Recall 196 was intermediate.", 70);
        assert!(v.correct);
        // Without an anchor the last run wins.
        let v = judge_numeric("196 then 70", 70);
        assert!(v.correct);
        let v = judge_numeric_with_rule(
            "Thus, the answer is 70. Recall 196 was intermediate.",
            196,
            ExtractionRule::LastNumber,
        );
        assert!(v.correct);
    }

    #[test]
    fn numeric_accepts_signed_runs() {
        let v = judge_numeric("the delta is -5", -5);
        assert!(v.correct);
    }

    #[test]
    fn numeric_never_correct_without_digits() {
        let masked = "Thus, the answer is ■■.";
        let v = judge_numeric(masked, 70);
        assert!(!v.correct);
        assert!(v.extracted.is_none());
    }

    #[test]
    fn choice_basics() {
        assert!(judge_choice("Thus, the answer is (B)", 'B').correct);
        assert!(judge_choice("Both A and B seem plausible. Final: C", 'C').correct);
        let v = judge_choice("The absorbance band shifts.", 'D');
        assert!(!v.correct);
        assert!(v.extracted.is_none());
    }

    #[test]
    fn choice_accepts_common_wrappers() {
        assert!(judge_choice("option B.", 'B').correct);
        assert!(judge_choice("b", 'B').correct);
        assert!(!judge_choice("ABBA", 'B').correct);
    }

    #[test]
    fn code_block_extraction() {
        assert_eq!(
            extract_code_block("```cpp\nint main() {}\n```").as_deref(),
            Some("int main() {}")
        );
        assert_eq!(
            extract_code_block("int main() {}\n```").as_deref(),
            Some("int main() {}")
        );
        assert_eq!(extract_code_block("   "), None);
    }

    #[test]
    fn normalisation_is_idempotent() {
        for response in ["answer is 070", "x 1,234 y", "\\boxed{42}"] {
            if let Some(v) = extract_numeric(response, ExtractionRule::default()) {
                let again = extract_numeric(&v.to_string(), ExtractionRule::default());
                assert_eq!(again, Some(v));
            }
        }
    }
}

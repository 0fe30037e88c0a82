//! Answer-extraction prompt rendering.
//!
//! A prompt is at most three sections: the question, the (transformed)
//! reasoning chain, and in retrieval mode a completion prefix that forces an
//! immediate answer. Question and chain omission realise the prompt-level
//! conditions that the chain processors cannot express.
//!
//! The default template joins the present sections with a blank line. In
//! retrieval mode the prefix is always the final bytes of the prompt:
//! `"Thus, the answer is"` for integer and multiple-choice benchmarks,
//! `"Thus, the code is\n```cpp\n"` for code.

use crate::record::{Benchmark, ReasoningRecord};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("include_chain is set but no chain was provided")]
    MissingChain,
    #[error("template must end with {{prefix}} in retrieval mode")]
    PrefixNotFinal,
}

/// Evaluation mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Free generation: the model continues unconstrained.
    Gen,
    /// Retrieval: a completion prefix forces an immediate answer.
    Ret,
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalMode::Gen => "gen",
            EvalMode::Ret => "ret",
        })
    }
}

/// A fully rendered evaluation prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPrompt {
    pub question: Option<String>,
    pub chain: Option<String>,
    pub mode: EvalMode,
    pub prefix: String,
    pub benchmark: Benchmark,
    rendered: String,
}

impl EvalPrompt {
    /// The exact bytes sent to the model.
    pub fn rendered(&self) -> &str {
        &self.rendered
    }
}

/// Optional template with `{question}`, `{chain}`, and `{prefix}` slots.
/// Absent sections render as empty strings, so custom templates should keep
/// their own separators minimal.
#[derive(Debug, Clone)]
pub struct PromptTemplate {
    text: String,
}

impl PromptTemplate {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into() }
    }

    fn render(&self, question: &str, chain: &str, prefix: &str) -> String {
        self.text
            .replace("{question}", question)
            .replace("{chain}", chain)
            .replace("{prefix}", prefix)
    }
}

/// Render the prompt for a record under the given mode and inclusion flags.
///
/// The default layout concatenates the included sections in order
/// `question, chain, prefix`, separated by `"\n\n"`. With both flags off in
/// retrieval mode the prompt is the bare prefix.
pub fn build_prompt(
    record: &ReasoningRecord,
    chain: Option<&str>,
    mode: EvalMode,
    include_question: bool,
    include_chain: bool,
) -> Result<EvalPrompt, PromptError> {
    build_prompt_with_template(record, chain, mode, include_question, include_chain, None)
}

pub fn build_prompt_with_template(
    record: &ReasoningRecord,
    chain: Option<&str>,
    mode: EvalMode,
    include_question: bool,
    include_chain: bool,
    template: Option<&PromptTemplate>,
) -> Result<EvalPrompt, PromptError> {
    if include_chain && chain.is_none() {
        return Err(PromptError::MissingChain);
    }

    let question = include_question.then(|| record.question.clone());
    let chain = if include_chain {
        chain.map(str::to_owned)
    } else {
        None
    };
    let prefix = record.benchmark.ret_prefix().to_owned();

    let rendered = match template {
        Some(t) => {
            let rendered = t.render(
                question.as_deref().unwrap_or(""),
                chain.as_deref().unwrap_or(""),
                if mode == EvalMode::Ret { &prefix } else { "" },
            );
            if mode == EvalMode::Ret && !rendered.ends_with(&prefix) {
                return Err(PromptError::PrefixNotFinal);
            }
            rendered
        }
        None => {
            let mut sections: Vec<&str> = Vec::new();
            if let Some(q) = question.as_deref() {
                sections.push(q);
            }
            if let Some(c) = chain.as_deref() {
                sections.push(c);
            }
            if mode == EvalMode::Ret {
                sections.push(&prefix);
            }
            sections.join("\n\n")
        }
    };

    Ok(EvalPrompt {
        question,
        chain,
        mode,
        prefix,
        benchmark: record.benchmark,
        rendered,
    })
}

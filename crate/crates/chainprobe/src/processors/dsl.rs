//! Config DSL for pipelines.
//!
//! A pipeline is a comma-separated list of step names applied left to right.
//! Steps take optional `key=value` parameters in parentheses:
//!
//! ```text
//! remove_alphabet,line_shuffle
//! inject_noise(k=3)
//! mask_alphabet(mask_char='#'),inject_noise(k=2,sentence="Thus answer: 999.")
//! token_shuffle(vocab=my_vocab)
//! ```
//!
//! String values may be quoted with `"` or `'`; commas inside quotes or
//! parentheses do not split steps.

use super::{ProcessorOp, ProcessorSpec, DEFAULT_FALSE_SENTENCE, DEFAULT_MASK_CHAR};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DslError {
    #[error("unknown step name: {0}")]
    UnknownStep(String),
    #[error("step {step}: unknown parameter {param}")]
    UnknownParam { step: String, param: String },
    #[error("step {step}: invalid value for {param}: {value}")]
    InvalidValue {
        step: String,
        param: String,
        value: String,
    },
    #[error("syntax error: {0}")]
    Syntax(String),
}

/// Split at top-level occurrences of `sep`, ignoring separators inside
/// parentheses or quotes.
fn split_top_level(text: &str, sep: char) -> Result<Vec<&str>, DslError> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut quote: Option<char> = None;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match quote {
            Some(q) => {
                if c == q {
                    quote = None;
                }
            }
            None => match c {
                '"' | '\'' => quote = Some(c),
                '(' => depth += 1,
                ')' => {
                    depth = depth
                        .checked_sub(1)
                        .ok_or_else(|| DslError::Syntax("unbalanced ')'".to_owned()))?;
                }
                _ if c == sep && depth == 0 => {
                    parts.push(&text[start..i]);
                    start = i + c.len_utf8();
                }
                _ => {}
            },
        }
    }
    if quote.is_some() {
        return Err(DslError::Syntax("unterminated quote".to_owned()));
    }
    if depth != 0 {
        return Err(DslError::Syntax("unbalanced '('".to_owned()));
    }
    parts.push(&text[start..]);
    Ok(parts)
}

fn unquote(value: &str) -> &str {
    let v = value.trim();
    if v.len() >= 2 {
        let first = v.chars().next().unwrap();
        if (first == '"' || first == '\'') && v.ends_with(first) {
            return &v[first.len_utf8()..v.len() - first.len_utf8()];
        }
    }
    v
}

fn parse_step(text: &str) -> Result<ProcessorSpec, DslError> {
    let text = text.trim();
    let (name, params) = match text.find('(') {
        Some(open) => {
            if !text.ends_with(')') {
                return Err(DslError::Syntax(format!("expected ')' at end of `{text}`")));
            }
            (text[..open].trim(), Some(&text[open + 1..text.len() - 1]))
        }
        None => (text, None),
    };

    let op = match name {
        "token_shuffle" => ProcessorOp::TokenShuffle,
        "word_shuffle" => ProcessorOp::WordShuffle,
        "line_shuffle" => ProcessorOp::LineShuffle,
        "inline_word_shuffle" => ProcessorOp::InlineWordShuffle,
        "mask_alphabet" => ProcessorOp::MaskAlphabet,
        "mask_digits" => ProcessorOp::MaskDigits,
        "mask_answer" => ProcessorOp::MaskAnswer,
        "remove_alphabet" => ProcessorOp::RemoveAlphabet,
        "remove_answer" => ProcessorOp::RemoveAnswer,
        "inject_noise" => ProcessorOp::InjectNoise { multiplier: 1 },
        "random_token" => ProcessorOp::RandomToken,
        "random_word" => ProcessorOp::RandomWord,
        other => return Err(DslError::UnknownStep(other.to_owned())),
    };
    let mut spec = ProcessorSpec::new(op);

    let Some(params) = params else {
        return Ok(spec);
    };
    for param in split_top_level(params, ',')? {
        let param = param.trim();
        if param.is_empty() {
            continue;
        }
        let (key, value) = param
            .split_once('=')
            .ok_or_else(|| DslError::Syntax(format!("expected key=value, got `{param}`")))?;
        let key = key.trim();
        let raw = value.trim();
        let value = unquote(raw);
        let invalid = || DslError::InvalidValue {
            step: name.to_owned(),
            param: key.to_owned(),
            value: raw.to_owned(),
        };
        match key {
            "k" => {
                let k: u32 = value.parse().map_err(|_| invalid())?;
                if let ProcessorOp::InjectNoise { multiplier } = &mut spec.op {
                    *multiplier = k;
                } else {
                    return Err(DslError::UnknownParam {
                        step: name.to_owned(),
                        param: key.to_owned(),
                    });
                }
            }
            "sentence" => {
                if !matches!(spec.op, ProcessorOp::InjectNoise { .. }) {
                    return Err(DslError::UnknownParam {
                        step: name.to_owned(),
                        param: key.to_owned(),
                    });
                }
                spec.false_sentence = value.to_owned();
            }
            "mask_char" => {
                let mut chars = value.chars();
                let (Some(c), None) = (chars.next(), chars.next()) else {
                    return Err(invalid());
                };
                spec.mask_char = c;
            }
            "vocab" => spec.vocab_id = Some(value.to_owned()),
            "salt" => spec.seed_salt = value.parse().map_err(|_| invalid())?,
            _ => {
                return Err(DslError::UnknownParam {
                    step: name.to_owned(),
                    param: key.to_owned(),
                })
            }
        }
    }
    Ok(spec)
}

pub(super) fn parse(text: &str) -> Result<Vec<ProcessorSpec>, DslError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    split_top_level(text, ',')?
        .into_iter()
        .map(parse_step)
        .collect()
}

pub(super) fn render(steps: &[ProcessorSpec]) -> String {
    let rendered: Vec<String> = steps.iter().map(render_step).collect();
    rendered.join(",")
}

fn render_step(spec: &ProcessorSpec) -> String {
    let mut params = Vec::new();
    if let ProcessorOp::InjectNoise { multiplier } = &spec.op {
        params.push(format!("k={multiplier}"));
        if spec.false_sentence != DEFAULT_FALSE_SENTENCE {
            params.push(format!("sentence=\"{}\"", spec.false_sentence));
        }
    }
    if spec.mask_char != DEFAULT_MASK_CHAR {
        params.push(format!("mask_char='{}'", spec.mask_char));
    }
    if let Some(vocab) = &spec.vocab_id {
        params.push(format!("vocab={vocab}"));
    }
    if spec.seed_salt != 0 {
        params.push(format!("salt={}", spec.seed_salt));
    }
    if params.is_empty() {
        spec.op.name().to_owned()
    } else {
        format!("{}({})", spec.op.name(), params.join(","))
    }
}

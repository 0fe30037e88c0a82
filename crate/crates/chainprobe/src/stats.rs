//! Accuracy aggregation and report emission.
//!
//! Accuracy is `#correct / #success` with a single-run binomial standard
//! error `sqrt(p(1-p)/n)`. Deltas against a baseline condition are reported
//! in percentage points and classed for shading: light when the drop passes
//! 25 points, dark when it passes 60. Accuracies render to two decimals and
//! deltas to one.

use crate::judging::Verdict;
use crate::modelio::ResponseStatus;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("no successful responses; accuracy is undefined")]
    EmptyCondition,
    #[error("verdicts and statuses differ in length: {verdicts} vs {statuses}")]
    Misaligned { verdicts: usize, statuses: usize },
    #[error("baseline condition not found: {0}")]
    UnknownBaseline(String),
}

/// How refusals enter the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefusalPolicy {
    /// A refusal is a completed response that scored zero.
    #[default]
    CountAsIncorrect,
    /// A refusal is excluded from the denominator, like a transport failure.
    Exclude,
}

/// Shading class for a delta, following the report conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shade {
    None,
    Light,
    Dark,
}

pub fn shade_for_delta(delta_pp: f64) -> Shade {
    if delta_pp < -60.0 {
        Shade::Dark
    } else if delta_pp < -25.0 {
        Shade::Light
    } else {
        Shade::None
    }
}

/// Aggregated outcome of one evaluation condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition_id: String,
    pub n_success: usize,
    pub n_correct: usize,
    /// Fraction in `[0, 1]`.
    pub accuracy: f64,
    /// Binomial standard error, same scale as `accuracy`.
    pub se: f64,
    /// Percentage points against the baseline; `None` for the baseline row.
    pub delta_vs_baseline: Option<f64>,
    pub shade: Shade,
}

impl ConditionResult {
    /// Aggregate counts into a result with no baseline comparison yet.
    pub fn from_counts(
        condition_id: impl Into<String>,
        n_correct: usize,
        n_success: usize,
    ) -> Result<Self, StatsError> {
        if n_success == 0 {
            return Err(StatsError::EmptyCondition);
        }
        let accuracy = n_correct as f64 / n_success as f64;
        let se = (accuracy * (1.0 - accuracy) / n_success as f64).sqrt();
        Ok(Self {
            condition_id: condition_id.into(),
            n_success,
            n_correct,
            accuracy,
            se,
            delta_vs_baseline: None,
            shade: Shade::None,
        })
    }

    /// Build a fixture result from a printed accuracy, for comparisons
    /// against published tables.
    pub fn from_accuracy(
        condition_id: impl Into<String>,
        accuracy: f64,
        n_success: usize,
    ) -> Self {
        let se = if n_success > 0 {
            (accuracy * (1.0 - accuracy) / n_success as f64).sqrt()
        } else {
            0.0
        };
        Self {
            condition_id: condition_id.into(),
            n_success,
            n_correct: (accuracy * n_success as f64).round() as usize,
            accuracy,
            se,
            delta_vs_baseline: None,
            shade: Shade::None,
        }
    }

    /// Accuracy as a percentage string with two decimals, e.g. `91.33`.
    pub fn accuracy_pct(&self) -> String {
        format!("{:.2}", self.accuracy * 100.0)
    }

    /// Standard error in percentage points, two decimals.
    pub fn se_pp(&self) -> String {
        format!("{:.2}", self.se * 100.0)
    }

    /// Signed delta in percentage points, one decimal; empty for baseline.
    pub fn delta_pp(&self) -> String {
        match self.delta_vs_baseline {
            Some(d) => format!("{d:+.1}"),
            None => String::new(),
        }
    }
}

/// Compute one condition's aggregate from aligned verdicts and statuses.
pub fn accuracy(
    condition_id: impl Into<String>,
    verdicts: &[Verdict],
    statuses: &[ResponseStatus],
    policy: RefusalPolicy,
) -> Result<ConditionResult, StatsError> {
    if verdicts.len() != statuses.len() {
        return Err(StatsError::Misaligned {
            verdicts: verdicts.len(),
            statuses: statuses.len(),
        });
    }
    let mut n_success = 0;
    let mut n_correct = 0;
    for (verdict, status) in verdicts.iter().zip(statuses) {
        let counted = match status {
            ResponseStatus::Ok => true,
            ResponseStatus::Refused => policy == RefusalPolicy::CountAsIncorrect,
            ResponseStatus::TransportError | ResponseStatus::Timeout => false,
        };
        if counted {
            n_success += 1;
            if verdict.correct && *status == ResponseStatus::Ok {
                n_correct += 1;
            }
        }
    }
    ConditionResult::from_counts(condition_id, n_correct, n_success)
}

/// Report arrangement: a flat ablation table, or a grid that pivots on the
/// noise multiplier axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportLayout {
    #[default]
    Ablation,
    Grid,
}

/// A full run report: every condition with deltas against the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub baseline_id: String,
    pub layout: ReportLayout,
    pub conditions: Vec<ConditionResult>,
}

/// Attach baseline deltas and shading to every condition. Input order is
/// preserved in the report.
pub fn build_report(
    results: &[ConditionResult],
    baseline_id: &str,
    layout: ReportLayout,
) -> Result<RunReport, StatsError> {
    let baseline = results
        .iter()
        .find(|r| r.condition_id == baseline_id)
        .ok_or_else(|| StatsError::UnknownBaseline(baseline_id.to_owned()))?;
    let baseline_accuracy = baseline.accuracy;

    let conditions = results
        .iter()
        .map(|r| {
            let mut out = r.clone();
            if r.condition_id == baseline_id {
                out.delta_vs_baseline = None;
                out.shade = Shade::None;
            } else {
                let delta = (r.accuracy - baseline_accuracy) * 100.0;
                out.delta_vs_baseline = Some(delta);
                out.shade = shade_for_delta(delta);
            }
            out
        })
        .collect();

    Ok(RunReport {
        baseline_id: baseline_id.to_owned(),
        layout,
        conditions,
    })
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_owned()
    }
}

impl RunReport {
    /// Flat CSV, one row per condition, stable order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,n_success,n_correct,accuracy_pct,se_pp,delta_pp,shade\n");
        for c in &self.conditions {
            let shade = match c.shade {
                Shade::None => "none",
                Shade::Light => "light",
                Shade::Dark => "dark",
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&c.condition_id),
                c.n_success,
                c.n_correct,
                c.accuracy_pct(),
                c.se_pp(),
                c.delta_pp(),
                shade,
            ));
        }
        out
    }

    /// Aligned Markdown table; grid layout appends a pivot over the noise
    /// multiplier extracted from `inject_noise(k=N)` steps in condition ids.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| condition | n | accuracy % | SE pp | delta pp | shade |\n");
        out.push_str("|---|---:|---:|---:|---:|---|\n");
        for c in &self.conditions {
            let marker = if c.condition_id == self.baseline_id {
                " (baseline)"
            } else {
                ""
            };
            let shade = match c.shade {
                Shade::None => "",
                Shade::Light => "light",
                Shade::Dark => "dark",
            };
            out.push_str(&format!(
                "| {}{} | {} | {} | {} | {} | {} |\n",
                c.condition_id.replace('|', "\\|"),
                marker,
                c.n_success,
                c.accuracy_pct(),
                c.se_pp(),
                if c.delta_pp().is_empty() {
                    "---".to_owned()
                } else {
                    c.delta_pp()
                },
                shade,
            ));
        }
        if self.layout == ReportLayout::Grid {
            if let Some(pivot) = self.noise_pivot() {
                out.push('\n');
                out.push_str(&pivot);
            }
        }
        out
    }

    /// Pivot table: rows are conditions minus their noise step, columns are
    /// noise multipliers. Returns `None` when no condition carries one.
    fn noise_pivot(&self) -> Option<String> {
        let mut rows: Vec<String> = Vec::new();
        let mut ks: Vec<u32> = Vec::new();
        let mut cells: std::collections::HashMap<(String, u32), &ConditionResult> =
            std::collections::HashMap::new();

        let mut any = false;
        for c in &self.conditions {
            let (base, k) = split_noise_axis(&c.condition_id);
            if k.is_some() {
                any = true;
            }
            let k = k.unwrap_or(0);
            if !rows.contains(&base) {
                rows.push(base.clone());
            }
            if !ks.contains(&k) {
                ks.push(k);
            }
            cells.insert((base, k), c);
        }
        if !any {
            return None;
        }
        ks.sort_unstable();

        let mut out = String::from("| condition \\ noise k |");
        for k in &ks {
            out.push_str(&format!(" {k} |"));
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &ks {
            out.push_str("---:|");
        }
        out.push('\n');
        for row in &rows {
            out.push_str(&format!("| {} |", row.replace('|', "\\|")));
            for k in &ks {
                match cells.get(&(row.clone(), *k)) {
                    Some(c) => out.push_str(&format!(" {} |", c.accuracy_pct())),
                    None => out.push_str(" |"),
                }
            }
            out.push('\n');
        }
        Some(out)
    }
}

/// Split a condition id into its noise-free base and the multiplier of an
/// `inject_noise(k=N)` step, when present.
pub fn split_noise_axis(condition_id: &str) -> (String, Option<u32>) {
    let Some(start) = condition_id.find("inject_noise(k=") else {
        return (condition_id.to_owned(), None);
    };
    let digits_start = start + "inject_noise(k=".len();
    let rest = &condition_id[digits_start..];
    let Some(close) = rest.find(')') else {
        return (condition_id.to_owned(), None);
    };
    let Ok(k) = rest[..close].parse::<u32>() else {
        return (condition_id.to_owned(), None);
    };
    let mut step_start = start;
    let mut step_end = digits_start + close + 1;
    // Consume one adjacent comma so the base stays a valid pipeline.
    if step_start > 0 && condition_id.as_bytes()[step_start - 1] == b',' {
        step_start -= 1;
    } else if condition_id.as_bytes().get(step_end) == Some(&b',') {
        step_end += 1;
    }
    let base = format!(
        "{}{}",
        &condition_id[..step_start],
        &condition_id[step_end..]
    );
    let base = if base.is_empty() {
        "original".to_owned()
    } else if base.starts_with(" |") {
        format!("original{base}")
    } else {
        base
    };
    (base, Some(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judging::{JudgeMethod, Verdict};

    fn verdict(correct: bool) -> Verdict {
        Verdict {
            correct,
            extracted: correct.then(|| "70".to_owned()),
            method: JudgeMethod::Numeric,
            note: String::new(),
        }
    }

    #[test]
    fn accuracy_renders_like_published_tables() {
        let result = ConditionResult::from_counts("baseline", 274, 300).unwrap();
        assert_eq!(result.accuracy_pct(), "91.33");
        assert!(result.se <= 0.029, "se={}", result.se);
    }

    #[test]
    fn zero_accuracy_has_zero_se() {
        let result = ConditionResult::from_counts("c", 0, 300).unwrap();
        assert_eq!(result.accuracy_pct(), "0.00");
        assert_eq!(result.se, 0.0);
    }

    #[test]
    fn empty_condition_is_an_error() {
        assert_eq!(
            ConditionResult::from_counts("c", 0, 0).unwrap_err(),
            StatsError::EmptyCondition
        );
    }

    #[test]
    fn accuracy_filters_failures_and_applies_refusal_policy() {
        let verdicts = vec![verdict(true), verdict(false), verdict(false), verdict(true)];
        let statuses = vec![
            ResponseStatus::Ok,
            ResponseStatus::Refused,
            ResponseStatus::TransportError,
            ResponseStatus::Ok,
        ];
        let counted = accuracy("c", &verdicts, &statuses, RefusalPolicy::CountAsIncorrect).unwrap();
        assert_eq!((counted.n_correct, counted.n_success), (2, 3));
        let excluded = accuracy("c", &verdicts, &statuses, RefusalPolicy::Exclude).unwrap();
        assert_eq!((excluded.n_correct, excluded.n_success), (2, 2));
    }

    #[test]
    fn deltas_and_shading_match_published_rows() {
        let results = vec![
            ConditionResult::from_accuracy("baseline", 0.913, 300),
            ConditionResult::from_accuracy("mask_alphabet", 0.960, 300),
            ConditionResult::from_accuracy("mask_digits,mask_answer", 0.0, 300),
            ConditionResult::from_accuracy("remove_alphabet,remove_answer", 0.587, 300),
        ];
        let report = build_report(&results, "baseline", ReportLayout::Ablation).unwrap();
        let by_id = |id: &str| {
            report
                .conditions
                .iter()
                .find(|c| c.condition_id == id)
                .unwrap()
        };
        assert_eq!(by_id("baseline").delta_pp(), "");
        assert_eq!(by_id("mask_alphabet").delta_pp(), "+4.7");
        assert_eq!(by_id("mask_alphabet").shade, Shade::None);
        assert_eq!(by_id("mask_digits,mask_answer").delta_pp(), "-91.3");
        assert_eq!(by_id("mask_digits,mask_answer").shade, Shade::Dark);
        assert_eq!(by_id("remove_alphabet,remove_answer").delta_pp(), "-32.6");
        assert_eq!(by_id("remove_alphabet,remove_answer").shade, Shade::Light);
    }

    #[test]
    fn unknown_baseline_is_an_error() {
        let results = vec![ConditionResult::from_accuracy("a", 0.5, 10)];
        assert_eq!(
            build_report(&results, "missing", ReportLayout::Ablation).unwrap_err(),
            StatsError::UnknownBaseline("missing".to_owned())
        );
    }

    #[test]
    fn delta_is_antisymmetric() {
        let a = ConditionResult::from_accuracy("a", 0.8, 100);
        let b = ConditionResult::from_accuracy("b", 0.6, 100);
        let ab = build_report(&[a.clone(), b.clone()], "a", ReportLayout::Ablation).unwrap();
        let ba = build_report(&[a, b], "b", ReportLayout::Ablation).unwrap();
        let d_ab = ab.conditions[1].delta_vs_baseline.unwrap();
        let d_ba = ba.conditions[0].delta_vs_baseline.unwrap();
        assert!((d_ab + d_ba).abs() < 1e-9);
    }

    #[test]
    fn se_bound_at_n300() {
        for correct in 0..=300 {
            let r = ConditionResult::from_counts("c", correct, 300).unwrap();
            assert!(r.se <= 0.0289, "correct={correct} se={}", r.se);
        }
    }

    #[test]
    fn csv_quotes_commas() {
        let results = vec![
            ConditionResult::from_accuracy("baseline", 0.9, 10),
            ConditionResult::from_accuracy("remove_alphabet,line_shuffle | ret", 0.8, 10),
        ];
        let report = build_report(&results, "baseline", ReportLayout::Ablation).unwrap();
        let csv = report.to_csv();
        assert!(csv.contains("\"remove_alphabet,line_shuffle | ret\""));
    }

    #[test]
    fn noise_axis_split() {
        assert_eq!(
            split_noise_axis("remove_alphabet,inject_noise(k=2) | ret"),
            ("remove_alphabet | ret".to_owned(), Some(2))
        );
        assert_eq!(
            split_noise_axis("inject_noise(k=0) | ret"),
            ("original | ret".to_owned(), Some(0))
        );
        assert_eq!(split_noise_axis("line_shuffle"), ("line_shuffle".to_owned(), None));
    }
}

//! Run engine: dataset ingestion, condition execution, sweeps, and resume.
//!
//! A run takes a record file, a pipeline, a prompt mode, and a backend; it
//! transforms every chain, renders prompts, collects completions through the
//! response archive, judges the answers, and emits `report.csv`,
//! `report.md`, and `verdicts.jsonl` into the output directory. A sweep
//! executes a grid of pipeline cells sharing one archive. Both are resumable
//! because completions live in an append-only archive keyed by prompt.

mod config;
mod ingest;
mod runner;

pub use config::{BackendSpec, JudgeSpec, RunConfig, SweepGrid};
pub use ingest::{ingest, ingest_questions, IngestError, QuestionRecord};
pub use runner::{collect, run, sweep, RunError, VerdictRecord};

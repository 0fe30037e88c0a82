//! Benchmark items: a question, a collected reasoning chain, and the gold
//! answer the chain should let an extractor recover.

use serde::{Deserialize, Serialize};

/// Benchmark family. Decides the retrieval prefix and the default judge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    MathInteger,
    Code,
    MultipleChoice,
}

impl Benchmark {
    /// Completion prefix appended in retrieval mode. Byte-exact by contract.
    pub fn ret_prefix(self) -> &'static str {
        match self {
            Benchmark::MathInteger | Benchmark::MultipleChoice => "Thus, the answer is",
            Benchmark::Code => "Thus, the code is\n```cpp\n",
        }
    }
}

impl std::fmt::Display for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Benchmark::MathInteger => "math_integer",
            Benchmark::Code => "code",
            Benchmark::MultipleChoice => "multiple_choice",
        };
        f.write_str(name)
    }
}

/// One benchmark item with its collected chain. `id` is the stable key used
/// for seeding, archives, and resume, so it must be unique per dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReasoningRecord {
    pub id: String,
    pub benchmark: Benchmark,
    pub question: String,
    pub chain: String,
    pub gold_answer: String,
    #[serde(default)]
    pub generator: String,
    #[serde(default)]
    pub sample_index: u32,
}

//! Evaluation protocol: option shuffling, answer canonicalization,
//! self-consistency voting and run reports.

mod canon;
mod harness;
mod shuffle;
mod vote;

pub use canon::{canonicalize_answer, match_option_text, normalize_text, strip_answer_prefix, Canonicalizer};
pub use harness::{
    assemble_report, evaluate, evaluate_item, CategoryStats, Components, DirectAnswerer, EvalConfig, EvalError, EvalMode,
    ItemRecord, RunReport,
};
pub use shuffle::{apply_permutation, invert_permutation, permutation_for, shuffle_options, Permutation, IDENTITY_SEED};
pub use vote::self_consistency;

//! Versioned prompt resources.
//!
//! The texts live under `resources/prompts/` and are compiled in. Bump
//! [`PROMPT_VERSION`] whenever any of them changes so recorded traces and run
//! manifests can be matched to the prompt set that produced them.

pub const PROMPT_VERSION: &str = "1";

/// System prompt for the text-only reasoner.
pub const REASONER: &str = include_str!("../resources/prompts/reasoner.txt");

/// System prompt for a perception-only sensor with the rejection policy enabled.
pub const SENSOR: &str = include_str!("../resources/prompts/sensor.txt");

/// Sensor prompt for the rejection-off ablation: no decision test, no rejection phrases.
pub const SENSOR_OPEN: &str = include_str!("../resources/prompts/sensor_open.txt");

/// Direct-answer prompt for the end-to-end baseline.
pub const END_TO_END: &str = include_str!("../resources/prompts/e2e.txt");

/// End-to-end baseline with an explicit chain-of-thought instruction.
pub const END_TO_END_COT: &str = include_str!("../resources/prompts/e2e_cot.txt");

/// Judge prompt used by the first stage of the data filter.
pub const JUDGE: &str = include_str!("../resources/prompts/judge.txt");

/// Notice appended to the reasoner history after an output without a valid action.
pub const MALFORMED_NOTICE: &str = "Your last message had no valid action. Reply with \"Thought: ...\" followed by \"My question is: ...\" or \"The answer is: (X)\".";

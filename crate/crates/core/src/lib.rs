//! Perception/reasoning decoupled visual question answering.
//!
//! A text-only *reasoner* never sees the image. It interrogates a stateless,
//! perception-only *sensor* one short query at a time, and the sensor either
//! answers from a small closed alphabet or rejects the query with a fixed
//! phrase. This crate holds everything that is pure computation:
//!
//! - [`protocol`]: the action grammar parser and the dialogue loop.
//! - [`sensor`]: the sensor contract, rejection phrases and prompts.
//! - [`world`]: a synthetic scene-graph environment with an oracle sensor and
//!   tasks carrying controllable spurious correlations.
//! - [`grpo`]: multi-turn GRPO (advantages, clipped surrogate, KL) on a
//!   tabular softmax policy, plus the toy trainer.
//! - [`capacity`]: interface capacity and generalization bound accounting.
//! - [`eval`]: option shuffling, canonicalization, voting and run reports.
//! - [`filter`]: judge-vote and text-only-solvability data filtering.
//!
//! The crate is `no_std` and only needs `alloc`. Network, file formats and the
//! command line live in the `percept` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod capacity;
pub mod eval;
pub mod filter;
pub mod grpo;
pub mod item;
pub mod prompts;
pub mod protocol;
pub mod sensor;
pub mod util;
pub mod world;

pub use item::{ItemError, McqItem};
pub use protocol::{
    parse_reasoner_output, run_episode, Action, DialogueBudget, Episode, EpisodeError,
    ParsedStep, Reasoner, ReasonerError, Step, Termination,
};
pub use sensor::{RejectKind, Sensor, SensorConfig, SensorError, SensorReply};

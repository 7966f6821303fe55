use alloc::string::String;
use alloc::vec::Vec;
use rand::RngCore;

use super::{Reasoner, ReasonerError, Step};
use crate::item::McqItem;

/// Replays a fixed list of outputs: step `t` gets `outputs[t - 1]`, and the
/// last output repeats once the script runs out.
#[derive(Debug, Clone)]
pub struct ScriptedReasoner {
    outputs: Vec<String>,
}

impl ScriptedReasoner {
    pub fn new<I, S>(outputs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self { outputs: outputs.into_iter().map(Into::into).collect() }
    }
}

impl Reasoner for ScriptedReasoner {
    fn respond(&self, _item: &McqItem, history: &[Step], _rng: &mut dyn RngCore) -> Result<String, ReasonerError> {
        self.outputs
            .get(history.len())
            .or_else(|| self.outputs.last())
            .cloned()
            .ok_or_else(|| ReasonerError::Unavailable("empty script".into()))
    }
}

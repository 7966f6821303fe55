//! Synthetic scene-graph world: ground truth, an oracle sensor and tasks with
//! controllable spurious correlations.

pub mod oracle;
pub mod procedural;
pub mod query;
pub mod scene;
pub mod task;
pub mod vocab;

pub use oracle::{answer_alphabet, oracle_answer, reply_alphabet_size, OracleSensor};
pub use procedural::ProceduralReasoner;
pub use query::{all_canonical_queries, interpret_query, AttributeKind, Interpretation, PerceptionQuery, QueryArgument, QueryCategory};
pub use scene::{Predicate, Relation, SceneError, SceneGraph, SceneObject};
pub use task::{
    counterfactual_flip, decide_from_chain, generate_suite, generate_task, GenerationSpec, SpuriousAttribute, TaskError,
    TaskInstance,
};

//! File formats: benchmark and episode JSONL, batch export, task worlds,
//! reports and decision logs.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use percept_core::grpo::{GrpoBatch, Trajectory};
use percept_core::protocol::{parse_reasoner_output, Episode, Step, Termination};
use percept_core::sensor::classify_reply;
use percept_core::world::TaskInstance;
use percept_core::McqItem;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {message}", .path.display())]
    SchemaViolation { path: PathBuf, line: usize, message: String },
    #[error("{}: {message}", .path.display())]
    Encode { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

fn violation(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::SchemaViolation { path: path.to_path_buf(), line, message: message.into() }
}

/// Reads one JSON value per non-blank line. Errors carry 1-based line numbers.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| violation(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

/// Writes one compact JSON value per line, creating parent directories.
pub fn write_jsonl<T: Serialize>(path: &Path, values: impl IntoIterator<Item = T>) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for v in values {
        let line = serde_json::to_string(&v).map_err(|e| IoError::Encode { path: path.to_path_buf(), message: e.to_string() })?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| IoError::Encode { path: path.to_path_buf(), message: e.to_string() })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| violation(path, e.line(), e.to_string()))
}

/// Loads a benchmark: one [`McqItem`] per line, validated, ids unique.
pub fn load_benchmark(path: &Path) -> Result<Vec<McqItem>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut items = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let item: McqItem = serde_json::from_str(&line).map_err(|e| violation(path, i + 1, e.to_string()))?;
        item.validate().map_err(|e| violation(path, i + 1, e.to_string()))?;
        if !seen.insert(item.id.clone()) {
            return Err(violation(path, i + 1, format!("duplicate item id `{}`", item.id)));
        }
        items.push(item);
    }
    Ok(items)
}

/// Loads a generated task world and checks every scene.
pub fn load_tasks(path: &Path) -> Result<Vec<TaskInstance>, IoError> {
    let tasks: Vec<TaskInstance> = read_jsonl(path)?;
    for (i, t) in tasks.iter().enumerate() {
        t.scene.validate().map_err(|e| violation(path, i + 1, e.to_string()))?;
        t.item.validate().map_err(|e| violation(path, i + 1, e.to_string()))?;
    }
    Ok(tasks)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub raw: String,
    pub thought: String,
    pub action_kind: String,
    pub action_text: String,
    pub sensor_reply: Option<String>,
}

/// Flat episode transcript, one per JSONL line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub item_id: String,
    pub steps: Vec<StepRecord>,
    pub final_answer: Option<String>,
    pub termination: Termination,
    pub rounds: usize,
    pub rejections: usize,
}

impl From<&Episode> for EpisodeRecord {
    fn from(ep: &Episode) -> Self {
        Self {
            item_id: ep.item_id.clone(),
            steps: ep
                .steps
                .iter()
                .map(|s| StepRecord {
                    raw: s.parsed.raw.clone(),
                    thought: s.parsed.thought.clone(),
                    action_kind: s.parsed.action.kind().to_string(),
                    action_text: s.parsed.action.text().to_string(),
                    sensor_reply: s.sensor_reply.as_ref().map(|r| r.text().to_string()),
                })
                .collect(),
            final_answer: ep.final_answer.clone(),
            termination: ep.termination,
            rounds: ep.rounds,
            rejections: ep.rejections,
        }
    }
}

impl EpisodeRecord {
    /// Rebuilds the episode by re-parsing each raw output. Fails when the
    /// stored fields disagree with the parse.
    pub fn to_episode(&self) -> Result<Episode, String> {
        let mut steps = Vec::with_capacity(self.steps.len());
        for (i, s) in self.steps.iter().enumerate() {
            let parsed = parse_reasoner_output(&s.raw);
            if parsed.action.kind() != s.action_kind || parsed.action.text() != s.action_text || parsed.thought != s.thought {
                return Err(format!("step {} does not match its raw text", i + 1));
            }
            steps.push(Step { index: i + 1, parsed, sensor_reply: s.sensor_reply.as_deref().map(classify_reply) });
        }
        Ok(Episode {
            item_id: self.item_id.clone(),
            steps,
            final_answer: self.final_answer.clone(),
            termination: self.termination,
            rounds: self.rounds,
            rejections: self.rejections,
        })
    }
}

pub fn write_episodes<'a>(path: &Path, episodes: impl IntoIterator<Item = &'a Episode>) -> Result<(), IoError> {
    write_jsonl(path, episodes.into_iter().map(EpisodeRecord::from))
}

pub fn read_episodes(path: &Path) -> Result<Vec<Episode>, IoError> {
    let records: Vec<EpisodeRecord> = read_jsonl(path)?;
    records.iter().enumerate().map(|(i, r)| r.to_episode().map_err(|m| violation(path, i + 1, m))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum BatchLine {
    Header { clip_eps: f64, beta: f64, trajectories: usize },
    Trajectory(Trajectory),
}

/// Batch export: a header line, then one trajectory per line with its token
/// records, mask, advantage and transcript.
pub fn export_batch(path: &Path, batch: &GrpoBatch) -> Result<(), IoError> {
    let header = BatchLine::Header { clip_eps: batch.clip_eps, beta: batch.beta, trajectories: batch.trajectories.len() };
    write_jsonl(path, std::iter::once(header).chain(batch.trajectories.iter().cloned().map(BatchLine::Trajectory)))
}

pub fn read_batch(path: &Path) -> Result<GrpoBatch, IoError> {
    let lines: Vec<BatchLine> = read_jsonl(path)?;
    let mut iter = lines.into_iter();
    let Some(BatchLine::Header { clip_eps, beta, trajectories: count }) = iter.next() else {
        return Err(violation(path, 1, "missing batch header"));
    };
    let mut trajectories = Vec::with_capacity(count);
    for (i, line) in iter.enumerate() {
        match line {
            BatchLine::Trajectory(t) => {
                if t.tokens.iter().any(|tok| tok.trajectory_id != t.id) {
                    return Err(violation(path, i + 2, format!("token records of `{}` name another trajectory", t.id)));
                }
                trajectories.push(t);
            }
            BatchLine::Header { .. } => return Err(violation(path, i + 2, "second header")),
        }
    }
    if trajectories.len() != count {
        return Err(violation(path, 1, format!("header announces {count} trajectories, found {}", trajectories.len())));
    }
    Ok(GrpoBatch { trajectories, clip_eps, beta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use percept_core::protocol::{run_episode, DialogueBudget};
    use percept_core::util::seeded_rng;
    use percept_core::world::{generate_suite, GenerationSpec, OracleSensor, ProceduralReasoner};
    use percept_core::SensorConfig;

    #[test]
    fn benchmark_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.jsonl");
        fs::write(&p, "").unwrap();
        assert!(load_benchmark(&p).unwrap().is_empty());
        let good = r#"{"id":"a","image_ref":"i","question":"q","options":["x","y"],"gold_index":1}"#;
        let bad = r#"{"id":"b","image_ref":"i","question":"q","options":["x","y"],"gold_index":2}"#;
        fs::write(&p, format!("{good}\n\n{bad}\n")).unwrap();
        match load_benchmark(&p) {
            Err(IoError::SchemaViolation { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        fs::write(&p, format!("{good}\n{good}\n")).unwrap();
        assert!(matches!(load_benchmark(&p), Err(IoError::SchemaViolation { line: 2, .. })));
        fs::write(&p, "{not json\n").unwrap();
        assert!(matches!(load_benchmark(&p), Err(IoError::SchemaViolation { line: 1, .. })));
    }

    #[test]
    fn episodes_round_trip() {
        let tasks = generate_suite(5, 5, &GenerationSpec::default()).unwrap();
        let sensor = OracleSensor::from_tasks(&tasks, SensorConfig::default());
        let eps: Vec<Episode> = tasks
            .iter()
            .map(|t| run_episode(&t.item, &ProceduralReasoner, &sensor, &DialogueBudget::default(), &mut seeded_rng(0)).unwrap())
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.jsonl");
        write_episodes(&p, &eps).unwrap();
        assert_eq!(read_episodes(&p).unwrap(), eps);
    }
}

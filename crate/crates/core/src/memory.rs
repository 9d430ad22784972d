//! Capacity-bounded record stream shared by the agents of one crew run.

use std::collections::{BTreeSet, VecDeque};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CAPACITY: usize = 4096;
pub const TRUNCATION_MARKER: &str = "\n[... context truncated]";

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("memory record content is empty")]
    EmptyContent,
    #[error("memory capacity must be positive")]
    ZeroCapacity,
    #[error("retrieve needs k >= 1")]
    BadK,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    ToolInput,
    ActionInput,
    Context,
    TaskOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryRecord {
    pub id: u64,
    pub timestamp: String,
    pub agent_role: String,
    pub task_id: String,
    pub kind: RecordKind,
    pub content: String,
    /// Caller-supplied entity tags.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entities: Vec<String>,
}

/// Restricts retrieval; every set field must match.
#[derive(Debug, Clone, Default)]
pub struct RecordFilter {
    pub kind: Option<RecordKind>,
    pub agent_role: Option<String>,
    pub task_id: Option<String>,
    pub entity: Option<String>,
}

impl RecordFilter {
    pub fn task(task_id: &str) -> Self {
        Self { task_id: Some(task_id.to_string()), ..Self::default() }
    }

    pub fn kind(kind: RecordKind) -> Self {
        Self { kind: Some(kind), ..Self::default() }
    }

    fn matches(&self, r: &MemoryRecord) -> bool {
        self.kind.is_none_or(|k| r.kind == k)
            && self.agent_role.as_ref().is_none_or(|a| &r.agent_role == a)
            && self.task_id.as_ref().is_none_or(|t| &r.task_id == t)
            && self.entity.as_ref().is_none_or(|e| r.entities.iter().any(|x| x == e))
    }
}

#[derive(Debug, Clone)]
pub struct MemoryStore {
    capacity: usize,
    records: VecDeque<MemoryRecord>,
    next_id: u64,
}

impl Default for MemoryStore {
    fn default() -> Self {
        Self::new(DEFAULT_CAPACITY).unwrap()
    }
}

/// Case-folded alphanumeric tokens.
pub fn tokens(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn normalized(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl MemoryStore {
    pub fn new(capacity: usize) -> Result<Self, MemoryError> {
        if capacity == 0 {
            return Err(MemoryError::ZeroCapacity);
        }
        Ok(Self { capacity, records: VecDeque::new(), next_id: 1 })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &MemoryRecord> {
        self.records.iter()
    }

    pub fn store(
        &mut self,
        agent_role: &str,
        task_id: &str,
        kind: RecordKind,
        content: &str,
        entities: &[&str],
    ) -> Result<u64, MemoryError> {
        if content.trim().is_empty() {
            return Err(MemoryError::EmptyContent);
        }
        let id = self.next_id;
        self.next_id += 1;
        self.records.push_back(MemoryRecord {
            id,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            agent_role: agent_role.to_string(),
            task_id: task_id.to_string(),
            kind,
            content: content.to_string(),
            entities: entities.iter().map(|e| e.to_string()).collect(),
        });
        while self.records.len() > self.capacity {
            self.records.pop_front();
        }
        Ok(id)
    }

    /// Top `k` matching records. Records whose whitespace-normalized content
    /// equals the query come first; the rest rank by
    /// `0.5 * recency + 0.5 * relevance` where recency is `(rank + 1) / m`
    /// over the `m` matching records (oldest rank 0) and relevance is the
    /// Jaccard token overlap divided by the best overlap among them. Ties go
    /// to the higher id.
    pub fn retrieve(&self, query: &str, k: usize, filter: &RecordFilter) -> Result<Vec<&MemoryRecord>, MemoryError> {
        if k == 0 {
            return Err(MemoryError::BadK);
        }
        let candidates: Vec<&MemoryRecord> = self.records.iter().filter(|r| filter.matches(r)).collect();
        let m = candidates.len();
        let q = tokens(query);
        let qn = normalized(query);
        let rel: Vec<f64> = candidates.iter().map(|r| jaccard(&q, &tokens(&r.content))).collect();
        let best = rel.iter().cloned().fold(0.0, f64::max);
        let mut scored: Vec<(bool, f64, u64, &MemoryRecord)> = candidates
            .iter()
            .enumerate()
            .map(|(rank, r)| {
                let recency = (rank + 1) as f64 / m as f64;
                let relevance = if best > 0.0 { rel[rank] / best } else { 0.0 };
                (normalized(&r.content) == qn, 0.5 * recency + 0.5 * relevance, r.id, *r)
            })
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then(b.2.cmp(&a.2)));
        Ok(scored.into_iter().take(k).map(|s| s.3).collect())
    }

    /// Task-output records of `context_task_ids`, in that order, joined by a
    /// blank line and cut at `budget` characters with a marker.
    pub fn build_context(&self, context_task_ids: &[String], budget: usize) -> String {
        let parts: Vec<&str> = context_task_ids
            .iter()
            .filter_map(|id| {
                self.records
                    .iter()
                    .rev()
                    .find(|r| r.kind == RecordKind::TaskOutput && &r.task_id == id)
                    .map(|r| r.content.as_str())
            })
            .collect();
        let joined = parts.join("\n\n");
        if joined.chars().count() <= budget {
            return joined;
        }
        let mut cut: String = joined.chars().take(budget).collect();
        cut.push_str(TRUNCATION_MARKER);
        cut
    }

    /// Records of the task currently executing.
    pub fn short_term(&self, task_id: &str) -> Vec<&MemoryRecord> {
        self.records.iter().filter(|r| r.task_id == task_id).collect()
    }

    pub fn long_term(&self) -> Vec<&MemoryRecord> {
        self.records.iter().collect()
    }

    pub fn entity(&self, tag: &str) -> Vec<&MemoryRecord> {
        self.records.iter().filter(|r| r.entities.iter().any(|e| e == tag)).collect()
    }

    /// One JSON record per line.
    pub fn dump_jsonl(&self, path: &Path) -> Result<(), MemoryError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in &self.records {
            writeln!(f, "{}", serde_json::to_string(r).expect("record serializes"))?;
        }
        f.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eviction_drops_oldest() {
        let mut m = MemoryStore::new(10).unwrap();
        for i in 0..11 {
            m.store("a", "t", RecordKind::Context, &format!("r{i}"), &[]).unwrap();
        }
        let ids: Vec<u64> = m.records().map(|r| r.id).collect();
        assert_eq!(ids, (2..=11).collect::<Vec<_>>());
        assert!(matches!(m.store("a", "t", RecordKind::Context, "  ", &[]), Err(MemoryError::EmptyContent)));
    }

    #[test]
    fn relevant_record_beats_newer_greeting() {
        let mut m = MemoryStore::default();
        m.store("eda", "T1", RecordKind::TaskOutput, "EDA report: 2 features have missing values", &[]).unwrap();
        m.store("mgr", "T1", RecordKind::Context, "Hello team", &[]).unwrap();
        let r = m.retrieve("missing values", 2, &RecordFilter::default()).unwrap();
        assert!(r[0].content.starts_with("EDA report"));
        let only = m.retrieve("missing", 5, &RecordFilter::kind(RecordKind::Context)).unwrap();
        assert_eq!(only.len(), 1);
    }

    #[test]
    fn context_budget() {
        let mut m = MemoryStore::default();
        m.store("a", "T1", RecordKind::TaskOutput, "abcdef", &[]).unwrap();
        m.store("b", "T2", RecordKind::TaskOutput, "ghijkl", &[]).unwrap();
        assert_eq!(m.build_context(&["T1".into()], 100), "abcdef");
        assert_eq!(m.build_context(&[], 100), "");
        let c = m.build_context(&["T1".into(), "T2".into()], 10);
        assert_eq!(c, format!("abcdef\n\ngh{TRUNCATION_MARKER}"));
    }
}

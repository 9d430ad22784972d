use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{MrmError, Result};
use crate::gateway::{ChatRequest, ChatResponse, Gateway, Message, Role};
use crate::modeling::STAGES;

pub const CHUNK_CHARS: usize = 500;
pub const CHUNK_STRIDE: usize = 400;
pub const TOP_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComplianceVerdict {
    Compliant,
    GapsFound,
}

impl ComplianceVerdict {
    pub fn id(self) -> &'static str {
        match self {
            ComplianceVerdict::Compliant => "compliant",
            ComplianceVerdict::GapsFound => "gaps-found",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excerpt {
    pub chunk: usize,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageCheck {
    pub stage: String,
    pub heading_present: bool,
    pub guide_mentions_stage: bool,
    pub pass: bool,
    pub excerpts: Vec<Excerpt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub stages: Vec<StageCheck>,
    pub verdict: ComplianceVerdict,
    pub gaps: Vec<String>,
    pub narrative: String,
}

/// Overlapping windows of `size` characters starting every `stride`.
pub fn chunk_text(text: &str, size: usize, stride: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let end = (start + size).min(chars.len());
        out.push(chars[start..end].iter().collect());
        if end == chars.len() {
            break;
        }
        start += stride;
    }
    out
}

fn token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[a-z0-9]+").unwrap())
}

pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    token_re().find_iter(&lower).map(|m| m.as_str().to_string()).filter(|t| t.len() > 1).collect()
}

/// tf-idf index over a fixed set of chunks; idf = ln((1+N)/(1+df)) + 1.
pub struct TfIdf {
    idf: HashMap<String, f64>,
    vectors: Vec<BTreeMap<String, f64>>,
}

fn normalize(v: &mut BTreeMap<String, f64>) {
    let norm = v.values().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.values_mut().for_each(|x| *x /= norm);
    }
}

impl TfIdf {
    pub fn new(chunks: &[String]) -> Self {
        let tokenized: Vec<Vec<String>> = chunks.iter().map(|c| tokenize(c)).collect();
        let mut df: HashMap<String, usize> = HashMap::new();
        for toks in &tokenized {
            let mut uniq: Vec<&String> = toks.iter().collect();
            uniq.sort();
            uniq.dedup();
            for t in uniq {
                *df.entry(t.clone()).or_default() += 1;
            }
        }
        let n = chunks.len() as f64;
        let idf: HashMap<String, f64> =
            df.into_iter().map(|(t, d)| (t, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)).collect();
        let mut index = TfIdf { idf, vectors: Vec::new() };
        index.vectors = tokenized.iter().map(|t| index.vectorize(t)).collect();
        index
    }

    fn vectorize(&self, tokens: &[String]) -> BTreeMap<String, f64> {
        let mut v = BTreeMap::new();
        for t in tokens {
            if let Some(idf) = self.idf.get(t) {
                *v.entry(t.clone()).or_insert(0.0) += idf;
            }
        }
        normalize(&mut v);
        v
    }

    /// Cosine score of `query` against every chunk.
    pub fn scores(&self, query: &str) -> Vec<f64> {
        let q = self.vectorize(&tokenize(query));
        self.vectors.iter().map(|d| q.iter().map(|(t, w)| w * d.get(t).copied().unwrap_or(0.0)).sum()).collect()
    }

    /// Indices of the `k` best chunks; equal scores keep the lower index.
    pub fn top_k(&self, query: &str, k: usize) -> Vec<(usize, f64)> {
        let mut ranked: Vec<(usize, f64)> = self.scores(query).into_iter().enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }
}

/// `## Heading` sections of a document, keyed by the lowercased heading.
pub fn doc_sections(doc: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut current: Option<(String, String)> = None;
    for line in doc.lines() {
        if let Some(h) = line.strip_prefix("## ") {
            if let Some((k, body)) = current.take() {
                out.insert(k, body);
            }
            current = Some((h.trim().to_lowercase(), String::new()));
        } else if let Some((_, body)) = current.as_mut() {
            body.push_str(line);
            body.push('\n');
        }
    }
    if let Some((k, body)) = current {
        out.insert(k, body);
    }
    out
}

/// Deterministic compliance check of `doc` against `guide` text.
pub fn check_compliance_text(doc: &str, guide: &str) -> Result<ComplianceReport> {
    if guide.trim().is_empty() {
        return Err(MrmError::EmptyGuide);
    }
    let chunks = chunk_text(guide, CHUNK_CHARS, CHUNK_STRIDE);
    let index = TfIdf::new(&chunks);
    let sections = doc_sections(doc);
    let mut stages = Vec::new();
    for stage in STAGES {
        let key = stage.to_lowercase();
        let body = sections.get(&key);
        let query = format!("{stage}\n{}", body.map(String::as_str).unwrap_or(""));
        let excerpts: Vec<Excerpt> = index
            .top_k(&query, TOP_K)
            .into_iter()
            .filter(|(_, s)| *s > 0.0)
            .map(|(i, score)| Excerpt { chunk: i, score, text: chunks[i].clone() })
            .collect();
        let mentions = excerpts.iter().any(|e| e.text.to_lowercase().contains(&key));
        stages.push(StageCheck {
            stage: stage.to_string(),
            heading_present: body.is_some(),
            guide_mentions_stage: mentions,
            pass: body.is_some() && mentions,
            excerpts,
        });
    }
    let gaps: Vec<String> = stages.iter().filter(|s| !s.pass).map(|s| s.stage.clone()).collect();
    let verdict = if gaps.is_empty() { ComplianceVerdict::Compliant } else { ComplianceVerdict::GapsFound };
    let narrative = narrative(&stages, &gaps);
    Ok(ComplianceReport { stages, verdict, gaps, narrative })
}

fn narrative(stages: &[StageCheck], gaps: &[String]) -> String {
    if gaps.is_empty() {
        return format!(
            "The modeling documentation covers all {} stages required by the modeling guide, and each \
             stage is supported by matching guide requirements.",
            stages.len()
        );
    }
    let mut parts = Vec::new();
    for s in stages.iter().filter(|s| !s.pass) {
        let why = match (s.heading_present, s.guide_mentions_stage) {
            (false, _) => "the documentation has no section for it",
            (true, false) => "no guide requirement for it was retrieved",
            _ => unreachable!(),
        };
        parts.push(format!("{} ({why})", s.stage));
    }
    format!("Gaps found against the modeling guide: {}.", parts.join("; "))
}

/// Reads both files and checks them; with a gateway, the model is also asked
/// for a narrative that replaces the deterministic one.
pub fn check_compliance(doc_path: &Path, guide_path: &Path, narrator: Option<&Gateway>) -> Result<ComplianceReport> {
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|_| MrmError::FileMissing(p.to_path_buf()));
    let doc = read(doc_path)?;
    let guide = read(guide_path)?;
    let mut report = check_compliance_text(&doc, &guide)?;
    if let Some(gw) = narrator {
        let mut prompt = format!(
            "Compare the modeling documentation with the organizational modeling guide excerpts and write a \
             short compliance narrative. Deterministic verdict: {}.\n",
            report.verdict.id()
        );
        for s in &report.stages {
            prompt.push_str(&format!("\nStage {}: {}\n", s.stage, if s.pass { "pass" } else { "fail" }));
            if let Some(e) = s.excerpts.first() {
                prompt.push_str(&format!("Guide excerpt: {}\n", e.text.trim()));
            }
        }
        let req = ChatRequest::new(vec![Message::new(Role::User, prompt)]);
        if let ChatResponse::Final { text } = gw.complete(&req)? {
            report.narrative = text;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrm::DEFAULT_GUIDE;

    fn full_doc() -> String {
        STAGES.iter().map(|s| format!("## {s}\n\n- details about {s}\n\n")).collect()
    }

    #[test]
    fn chunks_overlap() {
        let text: String = (0..1000).map(|i| char::from(b'a' + (i % 26) as u8)).collect();
        let c = chunk_text(&text, 500, 400);
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].len(), 500);
        assert_eq!(&c[0][400..], &c[1][..100]);
        assert_eq!(c[2].len(), 200);
        assert_eq!(chunk_text("abc", 500, 400), vec!["abc".to_string()]);
    }

    #[test]
    fn full_doc_is_compliant() {
        let r = check_compliance_text(&full_doc(), DEFAULT_GUIDE).unwrap();
        assert_eq!(r.verdict, ComplianceVerdict::Compliant, "{:?}", r.gaps);
        assert!(r.stages.iter().all(|s| s.excerpts.len() == TOP_K));
    }

    #[test]
    fn missing_section_is_named() {
        let doc = full_doc().replace("## Hyperparameter Tuning", "## Something Else");
        let r = check_compliance_text(&doc, DEFAULT_GUIDE).unwrap();
        assert_eq!(r.verdict, ComplianceVerdict::GapsFound);
        assert_eq!(r.gaps, vec!["Hyperparameter Tuning".to_string()]);
        assert!(r.narrative.contains("Hyperparameter Tuning"));
    }

    #[test]
    fn guide_without_stages_fails_all() {
        let guide = "All models need approval from the committee. Keep records for seven years.";
        let r = check_compliance_text(&full_doc(), guide).unwrap();
        assert!(r.stages.iter().all(|s| !s.pass));
        assert!(matches!(check_compliance_text(&full_doc(), "  \n"), Err(MrmError::EmptyGuide)));
    }

    #[test]
    fn idf_is_smooth() {
        let chunks = vec!["alpha beta".to_string(), "alpha gamma".to_string()];
        let idx = TfIdf::new(&chunks);
        assert!((idx.idf["alpha"] - 1.0).abs() < 1e-12);
        assert!((idx.idf["beta"] - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-12);
        let top = idx.top_k("gamma", 2);
        assert_eq!(top[0].0, 1);
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    ComplianceReport, ComplianceVerdict, MrmError, OutcomeMetrics, OutcomeReport, ReplicationReport,
    ReplicationVerdict, Result, SoundnessReport, SoundnessVerdict,
};

pub const MRM_SECTIONS: [&str; 4] =
    ["Documentation Compliance", "Model Replication", "Conceptual Soundness", "Outcome Analysis"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MrmVerdict {
    Pass,
    Flagged,
}

impl MrmVerdict {
    pub fn id(self) -> &'static str {
        match self {
            MrmVerdict::Pass => "pass",
            MrmVerdict::Flagged => "flagged",
        }
    }
}

/// Compliance gaps, a replication discrepancy or soundness concerns flag the
/// model. Outcome sensitivities are reported but do not gate.
pub fn overall_verdict(c: &ComplianceReport, r: &ReplicationReport, s: &SoundnessReport) -> MrmVerdict {
    if c.verdict == ComplianceVerdict::Compliant
        && r.verdict == ReplicationVerdict::Replicated
        && s.verdict == SoundnessVerdict::Sound
    {
        MrmVerdict::Pass
    } else {
        MrmVerdict::Flagged
    }
}

/// The structured MRM result written next to the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MrmResult {
    pub baseline: OutcomeMetrics,
    pub shifted_inputs: OutcomeMetrics,
    pub adversarial_outlier_inputs: OutcomeMetrics,
    pub compliance: ComplianceVerdict,
    pub compliance_gaps: Vec<String>,
    pub replication: ReplicationVerdict,
    pub replication_deltas: BTreeMap<String, f64>,
    pub soundness: SoundnessVerdict,
    pub top_features: Vec<(String, f64)>,
    pub outcome_sensitivities: Vec<String>,
    pub overall: MrmVerdict,
}

impl MrmResult {
    pub fn new(c: &ComplianceReport, r: &ReplicationReport, s: &SoundnessReport, o: &OutcomeReport) -> Self {
        MrmResult {
            baseline: o.baseline,
            shifted_inputs: o.shifted_inputs,
            adversarial_outlier_inputs: o.adversarial_outlier_inputs,
            compliance: c.verdict,
            compliance_gaps: c.gaps.clone(),
            replication: r.verdict,
            replication_deltas: r.deltas.clone(),
            soundness: s.verdict,
            top_features: s.top_features.clone(),
            outcome_sensitivities: o.sensitivities.clone(),
            overall: overall_verdict(c, r, s),
        }
    }
}

fn metric_table(s: &mut String, rows: &[(&str, &OutcomeMetrics)]) {
    let _ = writeln!(s, "| inputs | accuracy | F1_score | precision | ROC_AUC |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for (label, m) in rows {
        let _ = writeln!(s, "| {label} | {} | {} | {} | {} |", m.accuracy, m.f1_score, m.precision, m.roc_auc);
    }
}

pub fn render_mrm_report(
    compliance: Option<&ComplianceReport>,
    replication: Option<&ReplicationReport>,
    soundness: Option<&SoundnessReport>,
    outcome: Option<&OutcomeReport>,
) -> Result<String> {
    let missing = |name: &str| MrmError::MissingSubReport(name.to_string());
    let c = compliance.ok_or_else(|| missing("compliance"))?;
    let r = replication.ok_or_else(|| missing("replication"))?;
    let sd = soundness.ok_or_else(|| missing("soundness"))?;
    let o = outcome.ok_or_else(|| missing("outcome"))?;
    let overall = overall_verdict(c, r, sd);

    let mut s = String::from("# Model Risk Management Report\n\n");
    let _ = writeln!(s, "Overall verdict: {}", overall.id());

    let _ = write!(s, "\n## {}\n\nVerdict: {}\n\n", MRM_SECTIONS[0], c.verdict.id());
    for st in &c.stages {
        let _ = writeln!(
            s,
            "- {}: {} (section present: {}, guide evidence: {})",
            st.stage,
            if st.pass { "pass" } else { "fail" },
            st.heading_present,
            st.guide_mentions_stage
        );
    }
    let _ = writeln!(s, "\n{}", c.narrative);

    let _ = write!(
        s,
        "\n## {}\n\nVerdict: {} (tolerance {:e})\n\nModel: {} {}, seed {}\n\n",
        MRM_SECTIONS[1],
        r.verdict.id(),
        r.tolerance,
        r.family.label(),
        r.hyperparams,
        r.seed
    );
    let _ = writeln!(s, "| metric | reference | replicated | delta |");
    let _ = writeln!(s, "|---|---|---|---|");
    for (k, d) in &r.deltas {
        let show = |m: &BTreeMap<String, f64>| m.get(k).map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "| {k} | {} | {} | {d} |", show(&r.reference), show(&r.replicated));
    }

    let _ = write!(
        s,
        "\n## {}\n\nVerdict: {}\n\nFeature importance ({}), top {}:\n",
        MRM_SECTIONS[2],
        sd.verdict.id(),
        sd.importance.method,
        sd.top_features.len()
    );
    for (i, (name, v)) in sd.top_features.iter().enumerate() {
        let _ = writeln!(s, "{}. {name}: {v:.6}", i + 1);
    }
    s.push('\n');
    for item in &sd.checklist {
        let _ = writeln!(s, "- {}: {} ({})", item.name, if item.passed { "pass" } else { "fail" }, item.detail);
    }
    let _ = writeln!(s, "\n{}", sd.narrative);

    let _ = write!(
        s,
        "\n## {}\n\nShift mode {} (c = {}); outlier rows {:?} (+{}); {} test rows.\n\n",
        MRM_SECTIONS[3],
        o.config.mode.id(),
        o.config.magnitude,
        o.config.outlier_rows,
        o.config.outlier_magnitude,
        o.n_test
    );
    metric_table(
        &mut s,
        &[("baseline", &o.baseline), ("shifted", &o.shifted_inputs), ("outlier", &o.adversarial_outlier_inputs)],
    );
    let _ = writeln!(s, "\n{}", o.narrative);
    Ok(s)
}

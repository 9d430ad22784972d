use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Family, ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Int(i64),
    Real(f64),
}

impl HyperValue {
    pub fn as_f64(self) -> f64 {
        match self {
            HyperValue::Int(v) => v as f64,
            HyperValue::Real(v) => v,
        }
    }

    /// Parses `200` as an integer and `0.1` as a real.
    pub fn parse(s: &str) -> Option<HyperValue> {
        let s = s.trim();
        s.parse::<i64>()
            .map(HyperValue::Int)
            .ok()
            .or_else(|| s.parse::<f64>().ok().filter(|v| v.is_finite()).map(HyperValue::Real))
    }
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Int(v) => write!(f, "{v}"),
            HyperValue::Real(v) => write!(f, "{v:?}"),
        }
    }
}

/// Named hyperparameter values; the key set accepted depends on the family.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hyperparams(BTreeMap<String, HyperValue>);

struct Spec {
    key: &'static str,
    default: HyperValue,
    integer: bool,
    min: f64,
}

fn specs(family: Family) -> &'static [Spec] {
    const LR: &[Spec] = &[Spec { key: "l2", default: HyperValue::Real(0.01), integer: false, min: 0.0 }];
    const DT: &[Spec] = &[Spec { key: "max_depth", default: HyperValue::Int(5), integer: true, min: 1.0 }];
    const RF: &[Spec] = &[
        Spec { key: "max_depth", default: HyperValue::Int(8), integer: true, min: 1.0 },
        Spec { key: "n_estimators", default: HyperValue::Int(100), integer: true, min: 1.0 },
    ];
    const GBT: &[Spec] = &[
        Spec { key: "learning_rate", default: HyperValue::Real(0.1), integer: false, min: 0.0 },
        Spec { key: "max_depth", default: HyperValue::Int(3), integer: true, min: 1.0 },
        Spec { key: "n_estimators", default: HyperValue::Int(100), integer: true, min: 0.0 },
    ];
    match family {
        Family::LogisticRegression => LR,
        Family::DecisionTree => DT,
        Family::RandomForest => RF,
        Family::GradientBoosting => GBT,
    }
}

impl Hyperparams {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, HyperValue)>) -> Self {
        Self(pairs.into_iter().collect())
    }

    pub fn get(&self, key: &str) -> Option<HyperValue> {
        self.0.get(key).copied()
    }

    pub fn set(&mut self, key: &str, value: HyperValue) {
        self.0.insert(key.to_string(), value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, HyperValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Rejects unknown keys and out-of-range values, then fills defaults.
    pub fn resolved(&self, family: Family) -> Result<Hyperparams> {
        let specs = specs(family);
        for key in self.0.keys() {
            if !specs.iter().any(|s| s.key == key) {
                return Err(ModelError::UnknownHyperparam { family, key: key.clone() });
            }
        }
        let mut out = BTreeMap::new();
        for spec in specs {
            let mut v = self.0.get(spec.key).copied().unwrap_or(spec.default);
            if spec.integer {
                let f = v.as_f64();
                if f.fract() != 0.0 {
                    return Err(ModelError::BadHyperparam {
                        key: spec.key.into(),
                        reason: format!("expected an integer, got {f}"),
                    });
                }
                v = HyperValue::Int(f as i64);
            } else {
                v = HyperValue::Real(v.as_f64());
            }
            if !v.as_f64().is_finite() || v.as_f64() < spec.min {
                return Err(ModelError::BadHyperparam {
                    key: spec.key.into(),
                    reason: format!("must be at least {}", spec.min),
                });
            }
            out.insert(spec.key.to_string(), v);
        }
        Ok(Hyperparams(out))
    }

    pub(crate) fn real(&self, key: &str) -> f64 {
        self.0[key].as_f64()
    }

    pub(crate) fn int(&self, key: &str) -> usize {
        self.0[key].as_f64() as usize
    }

    /// `name=value` lines, sorted by name.
    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn from_text(text: &str) -> std::result::Result<Hyperparams, String> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected name=value", i + 1))?;
            let v = HyperValue::parse(v).ok_or_else(|| format!("line {}: bad value '{v}'", i + 1))?;
            map.insert(k.trim().to_string(), v);
        }
        Ok(Hyperparams(map))
    }
}

impl fmt::Display for Hyperparams {
    /// Dict-style rendering: `{'learning_rate': 0.1, 'max_depth': 5}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("'{k}': {v}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Ordered hyperparameter grid; combinations enumerate with the first
/// parameter varying slowest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Grid {
    pub params: Vec<(String, Vec<HyperValue>)>,
}

impl Grid {
    pub fn new(params: Vec<(&str, Vec<HyperValue>)>) -> Self {
        Self { params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect() }
    }

    pub fn combos(&self) -> Vec<Hyperparams> {
        let mut out = vec![Hyperparams::default()];
        for (key, values) in &self.params {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for base in &out {
                for v in values {
                    let mut hp = base.clone();
                    hp.set(key, *v);
                    next.push(hp);
                }
            }
            out = next;
        }
        if self.params.iter().any(|(_, v)| v.is_empty()) {
            return Vec::new();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combos_are_cartesian_in_order() {
        let g = Grid::new(vec![
            ("learning_rate", vec![HyperValue::Real(0.05), HyperValue::Real(0.1)]),
            ("max_depth", vec![HyperValue::Int(3), HyperValue::Int(5)]),
        ]);
        let c = g.combos();
        assert_eq!(c.len(), 4);
        assert_eq!(c[1].to_string(), "{'learning_rate': 0.05, 'max_depth': 5}");
        assert_eq!(Grid::default().combos().len(), 1);
    }

    #[test]
    fn text_round_trip_and_display() {
        let hp = Hyperparams::from_pairs([
            ("learning_rate".to_string(), HyperValue::Real(0.1)),
            ("max_depth".to_string(), HyperValue::Int(5)),
            ("n_estimators".to_string(), HyperValue::Int(200)),
        ]);
        assert_eq!(hp.to_string(), "{'learning_rate': 0.1, 'max_depth': 5, 'n_estimators': 200}");
        assert_eq!(Hyperparams::from_text(&hp.to_text()).unwrap(), hp);
    }

    #[test]
    fn resolve_fills_defaults_and_checks_ranges() {
        let r = Hyperparams::default().resolved(Family::GradientBoosting).unwrap();
        assert_eq!(r.len(), 3);
        let bad = Hyperparams::from_pairs([("max_depth".to_string(), HyperValue::Int(0))]);
        assert!(bad.resolved(Family::DecisionTree).is_err());
        let frac = Hyperparams::from_pairs([("max_depth".to_string(), HyperValue::Real(2.5))]);
        assert!(frac.resolved(Family::DecisionTree).is_err());
    }
}

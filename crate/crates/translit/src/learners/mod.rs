//! The three interchangeable classifiers behind one interface: maximum
//! entropy, decision-tree induction, and memory-based k-NN.

mod dtree;
mod maxent;
mod mbl;

pub use dtree::{dtl_train, DecisionTree, DtlConfig};
pub use maxent::{mem_train, MaxEntModel, MemConfig};
pub use mbl::{mbl_train, MblConfig, MemoryStore};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::features::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LearnerKind {
    Mem,
    Dtl,
    Mbl,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Mem => "MEM",
            LearnerKind::Dtl => "DTL",
            LearnerKind::Mbl => "MBL",
        }
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "mem" => Ok(LearnerKind::Mem),
            "dtl" => Ok(LearnerKind::Dtl),
            "mbl" => Ok(LearnerKind::Mbl),
            other => Err(Error::Config(format!("unknown learner {other:?}"))),
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A trained classifier of any learner kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TrainedClassifier {
    Mem(MaxEntModel),
    Dtl(DecisionTree),
    Mbl(MemoryStore),
}

impl TrainedClassifier {
    pub fn kind(&self) -> LearnerKind {
        match self {
            TrainedClassifier::Mem(_) => LearnerKind::Mem,
            TrainedClassifier::Dtl(_) => LearnerKind::Dtl,
            TrainedClassifier::Mbl(_) => LearnerKind::Mbl,
        }
    }

    pub fn labels(&self) -> &[String] {
        match self {
            TrainedClassifier::Mem(m) => m.labels(),
            TrainedClassifier::Dtl(m) => m.labels(),
            TrainedClassifier::Mbl(m) => m.labels(),
        }
    }

    pub fn predict(&self, instance: &Instance) -> String {
        match self {
            TrainedClassifier::Mem(m) => m.predict(instance),
            TrainedClassifier::Dtl(m) => m.predict(instance),
            TrainedClassifier::Mbl(m) => m.predict(instance),
        }
    }

    /// Label probabilities; only the maximum entropy model has them.
    pub fn predict_dist(&self, instance: &Instance) -> Option<BTreeMap<String, f64>> {
        match self {
            TrainedClassifier::Mem(m) => Some(m.predict_dist(instance)),
            _ => None,
        }
    }
}

/// Information gain and gain ratio of a nominal attribute against labels.
/// Returns (info_gain, gain_ratio); gain_ratio is 0 when the attribute
/// takes a single value.
pub(crate) fn gain_ratio(values: &[&str], labels: &[&str]) -> (f64, f64) {
    assert_eq!(values.len(), labels.len());
    let n = values.len() as f64;
    let base = entropy_of(labels.iter().copied());
    let mut by_value: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (v, l) in values.iter().zip(labels) {
        by_value.entry(v).or_default().push(l);
    }
    if by_value.len() < 2 {
        return (0.0, 0.0);
    }
    let mut cond = 0.0;
    let mut split_info = 0.0;
    for subset in by_value.values() {
        let frac = subset.len() as f64 / n;
        cond += frac * entropy_of(subset.iter().copied());
        split_info -= frac * frac.log2();
    }
    let ig = base - cond;
    let gr = if split_info > 0.0 { ig / split_info } else { 0.0 };
    (ig, gr)
}

pub(crate) fn entropy_of<'a>(labels: impl Iterator<Item = &'a str>) -> f64 {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut n = 0usize;
    for l in labels {
        *counts.entry(l).or_insert(0) += 1;
        n += 1;
    }
    let n = n as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Deterministic majority vote: highest count, then highest training
/// frequency, then lexicographically smallest label.
pub(crate) fn majority_label(
    counts: &BTreeMap<String, usize>,
    training_freq: &BTreeMap<String, usize>,
) -> String {
    counts
        .iter()
        .max_by(|(la, ca), (lb, cb)| {
            ca.cmp(cb)
                .then_with(|| {
                    training_freq.get(*la).unwrap_or(&0).cmp(training_freq.get(*lb).unwrap_or(&0))
                })
                .then_with(|| lb.cmp(la)) // reversed: smaller label wins a full tie
        })
        .map(|(l, _)| l.clone())
        .expect("majority of non-empty counts")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_basics() {
        assert!(entropy_of(["a", "a", "a"].into_iter()).abs() < 1e-12);
        assert!((entropy_of(["a", "b"].into_iter()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_ratio_perfect_split() {
        let values = ["x", "x", "y", "y"];
        let labels = ["a", "a", "b", "b"];
        let (ig, gr) = gain_ratio(&values, &labels);
        assert!((ig - 1.0).abs() < 1e-12);
        assert!((gr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_attribute_has_zero_gain() {
        let values = ["x", "x", "x", "x"];
        let labels = ["a", "a", "b", "b"];
        assert_eq!(gain_ratio(&values, &labels), (0.0, 0.0));
    }

    #[test]
    fn majority_tiebreak_order() {
        let mut counts = BTreeMap::new();
        counts.insert("b".to_string(), 2usize);
        counts.insert("a".to_string(), 2);
        let mut freq = BTreeMap::new();
        freq.insert("a".to_string(), 5usize);
        freq.insert("b".to_string(), 9);
        // Count tie -> training frequency decides.
        assert_eq!(majority_label(&counts, &freq), "b");
        // Full tie -> lexicographic smallest.
        freq.insert("a".to_string(), 9);
        assert_eq!(majority_label(&counts, &freq), "a");
    }
}

//! Memory-based learning: store every training instance, weight each
//! slot by gain ratio, and classify by weighted-overlap k-NN. All
//! instances at the k smallest distinct distances vote.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::features::Instance;
use crate::learners::{gain_ratio, majority_label};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MblConfig {
    pub k_neighbors: usize,
}

impl Default for MblConfig {
    fn default() -> Self {
        // TiMBL's default k.
        MblConfig { k_neighbors: 1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryStore {
    labels: Vec<String>,
    attrs: Vec<(crate::features::FeatureType, i8)>,
    /// Per-attribute gain-ratio weights, parallel to `attrs`.
    weights: Vec<f64>,
    /// (attribute values, label) per stored instance.
    examples: Vec<(Vec<String>, String)>,
    training_freq: BTreeMap<String, usize>,
    k_neighbors: usize,
}

impl MemoryStore {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn slot_weight(&self, ftype: crate::features::FeatureType, pos: i8) -> Option<f64> {
        self.attrs.iter().position(|&a| a == (ftype, pos)).map(|i| self.weights[i])
    }

    fn values_of(&self, instance: &Instance) -> Vec<String> {
        self.attrs
            .iter()
            .map(|&(ftype, pos)| instance.slot(ftype, pos).unwrap_or("$").to_string())
            .collect()
    }

    pub fn distance(&self, a: &[String], b: &[String]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.weights)
            .map(|((x, y), w)| if x != y { *w } else { 0.0 })
            .sum()
    }

    pub fn predict(&self, instance: &Instance) -> String {
        assert!(!self.examples.is_empty(), "empty memory store");
        let query = self.values_of(instance);
        let mut distances: Vec<(f64, usize)> = self
            .examples
            .iter()
            .enumerate()
            .map(|(i, (values, _))| (self.distance(&query, values), i))
            .collect();
        distances.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        // Gather everything at the k smallest distinct distances.
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut distinct = 0usize;
        let mut last = f64::NEG_INFINITY;
        for (d, i) in distances {
            if (d - last).abs() > 1e-12 {
                distinct += 1;
                if distinct > self.k_neighbors {
                    break;
                }
                last = d;
            }
            *counts.entry(self.examples[i].1.clone()).or_insert(0) += 1;
        }
        majority_label(&counts, &self.training_freq)
    }
}

pub fn mbl_train(instances: &[Instance], config: &MblConfig) -> MemoryStore {
    assert!(!instances.is_empty(), "mbl_train requires at least one instance");
    let mut labels: Vec<String> = Vec::new();
    let mut training_freq: BTreeMap<String, usize> = BTreeMap::new();
    for inst in instances {
        if !labels.contains(&inst.label) {
            labels.push(inst.label.clone());
        }
        *training_freq.entry(inst.label.clone()).or_insert(0) += 1;
    }
    labels.sort();
    let mut attrs: Vec<(crate::features::FeatureType, i8)> =
        instances[0].slots.iter().map(|s| (s.ftype, s.pos)).collect();
    attrs.sort();
    let label_refs: Vec<&str> = instances.iter().map(|i| i.label.as_str()).collect();
    let weights: Vec<f64> = attrs
        .iter()
        .map(|&(ftype, pos)| {
            let values: Vec<&str> =
                instances.iter().map(|i| i.slot(ftype, pos).unwrap_or("$")).collect();
            gain_ratio(&values, &label_refs).1
        })
        .collect();
    let examples = instances
        .iter()
        .map(|inst| {
            let values = attrs
                .iter()
                .map(|&(ftype, pos)| inst.slot(ftype, pos).unwrap_or("$").to_string())
                .collect();
            (values, inst.label.clone())
        })
        .collect();
    MemoryStore { labels, attrs, weights, examples, training_freq, k_neighbors: config.k_neighbors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureType, Slot};

    fn inst(slots: &[(FeatureType, i8, &str)], label: &str) -> Instance {
        let mut slots: Vec<Slot> = slots
            .iter()
            .map(|&(ftype, pos, symbol)| Slot { ftype, pos, symbol: symbol.into() })
            .collect();
        slots.sort();
        Instance { slots, label: label.into() }
    }

    #[test]
    fn constant_slot_weight_is_zero() {
        let data = vec![
            inst(&[(FeatureType::S, 0, "a"), (FeatureType::S, 1, "k")], "A"),
            inst(&[(FeatureType::S, 0, "b"), (FeatureType::S, 1, "k")], "B"),
        ];
        let store = mbl_train(&data, &MblConfig::default());
        assert_eq!(store.slot_weight(FeatureType::S, 1), Some(0.0));
    }

    #[test]
    fn perfectly_predictive_slot_has_largest_weight() {
        // 8 instances, uniform labels: slot S0 determines the label,
        // slot S1 is half-informative, slot S2 is noise.
        let rows = [
            ("a", "m", "x", "A"), ("a", "m", "y", "A"), ("a", "n", "x", "A"), ("a", "n", "y", "A"),
            ("b", "m", "x", "B"), ("b", "m", "y", "B"), ("b", "n", "x", "B"), ("b", "n", "y", "B"),
        ];
        let data: Vec<Instance> = rows
            .iter()
            .map(|&(a, b, c, l)| {
                inst(&[(FeatureType::S, 0, a), (FeatureType::S, 1, b), (FeatureType::S, 2, c)], l)
            })
            .collect();
        let store = mbl_train(&data, &MblConfig::default());
        let w0 = store.slot_weight(FeatureType::S, 0).unwrap();
        let w1 = store.slot_weight(FeatureType::S, 1).unwrap();
        let w2 = store.slot_weight(FeatureType::S, 2).unwrap();
        assert!(w0 > w1 && w0 > w2, "w0={w0} w1={w1} w2={w2}");
    }

    #[test]
    fn exact_match_wins() {
        let data = vec![
            inst(&[(FeatureType::S, 0, "a")], "A"),
            inst(&[(FeatureType::S, 0, "b")], "B"),
        ];
        let store = mbl_train(&data, &MblConfig::default());
        assert_eq!(store.predict(&inst(&[(FeatureType::S, 0, "a")], "")), "A");
    }

    #[test]
    fn single_example_store_always_answers_it() {
        let data = vec![inst(&[(FeatureType::S, 0, "a")], "A")];
        let store = mbl_train(&data, &MblConfig::default());
        assert_eq!(store.predict(&inst(&[(FeatureType::S, 0, "zzz")], "")), "A");
    }
}

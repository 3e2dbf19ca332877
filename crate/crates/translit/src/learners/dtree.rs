//! Top-down multiway decision-tree induction, C4.5 style: split on the
//! (feature type, position) attribute maximizing gain ratio, stop on
//! purity, min_leaf, or attribute exhaustion. No post-pruning; min_leaf
//! regularizes instead.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::features::{FeatureType, Instance};
use crate::learners::{gain_ratio, majority_label};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DtlConfig {
    pub min_leaf: usize,
    pub use_gain_ratio: bool,
}

impl Default for DtlConfig {
    fn default() -> Self {
        DtlConfig { min_leaf: 2, use_gain_ratio: true }
    }
}

pub type Attribute = (FeatureType, i8);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Leaf { label: String },
    Split {
        attr: Attribute,
        children: BTreeMap<String, Node>,
        /// Majority label here; used for unseen symbols at this node.
        majority: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionTree {
    labels: Vec<String>,
    root: Node,
}

impl DecisionTree {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn predict(&self, instance: &Instance) -> String {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label } => return label.clone(),
                Node::Split { attr, children, majority } => {
                    let value = instance.slot(attr.0, attr.1).unwrap_or("$");
                    match children.get(value) {
                        Some(child) => node = child,
                        None => return majority.clone(),
                    }
                }
            }
        }
    }

    /// The attribute tested at the root, if the tree is not a single leaf.
    pub fn root_attribute(&self) -> Option<Attribute> {
        match &self.root {
            Node::Split { attr, .. } => Some(*attr),
            Node::Leaf { .. } => None,
        }
    }
}

fn value_of<'a>(instance: &'a Instance, attr: Attribute) -> &'a str {
    instance.slot(attr.0, attr.1).unwrap_or("$")
}

fn label_counts(instances: &[&Instance]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for inst in instances {
        *counts.entry(inst.label.clone()).or_insert(0) += 1;
    }
    counts
}

pub fn dtl_train(instances: &[Instance], config: &DtlConfig) -> DecisionTree {
    assert!(!instances.is_empty(), "dtl_train requires at least one instance");
    let mut labels: Vec<String> = Vec::new();
    for inst in instances {
        if !labels.contains(&inst.label) {
            labels.push(inst.label.clone());
        }
    }
    labels.sort();
    let training_freq = label_counts(&instances.iter().collect::<Vec<_>>());
    let mut attrs: Vec<Attribute> = Vec::new();
    for slot in &instances[0].slots {
        attrs.push((slot.ftype, slot.pos));
    }
    attrs.sort();
    let refs: Vec<&Instance> = instances.iter().collect();
    let root = induce(&refs, &attrs, config, &training_freq);
    DecisionTree { labels, root }
}

fn induce(
    instances: &[&Instance],
    attrs: &[Attribute],
    config: &DtlConfig,
    training_freq: &BTreeMap<String, usize>,
) -> Node {
    let counts = label_counts(instances);
    let majority = majority_label(&counts, training_freq);
    if counts.len() == 1 || attrs.is_empty() || instances.len() < config.min_leaf.max(1) * 2 {
        return Node::Leaf { label: majority };
    }
    let labels: Vec<&str> = instances.iter().map(|i| i.label.as_str()).collect();
    let mut best: Option<(Attribute, f64)> = None;
    for &attr in attrs {
        let values: Vec<&str> = instances.iter().map(|i| value_of(i, attr)).collect();
        let (ig, gr) = gain_ratio(&values, &labels);
        let score = if config.use_gain_ratio { gr } else { ig };
        if ig <= 0.0 || score <= 0.0 {
            continue;
        }
        // Strict comparison keeps the first attribute in sorted order on ties.
        if best.map_or(true, |(_, b)| score > b) {
            best = Some((attr, score));
        }
    }
    let Some((attr, _)) = best else {
        return Node::Leaf { label: majority };
    };
    let mut partitions: BTreeMap<String, Vec<&Instance>> = BTreeMap::new();
    for inst in instances {
        partitions.entry(value_of(inst, attr).to_string()).or_default().push(inst);
    }
    let remaining: Vec<Attribute> = attrs.iter().copied().filter(|&a| a != attr).collect();
    let children = partitions
        .into_iter()
        .map(|(value, subset)| (value, induce(&subset, &remaining, config, training_freq)))
        .collect();
    Node::Split { attr, children, majority }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Slot;

    fn inst(slots: &[(FeatureType, i8, &str)], label: &str) -> Instance {
        let mut slots: Vec<Slot> = slots
            .iter()
            .map(|&(ftype, pos, symbol)| Slot { ftype, pos, symbol: symbol.into() })
            .collect();
        slots.sort();
        Instance { slots, label: label.into() }
    }

    #[test]
    fn pure_data_yields_single_leaf() {
        let data = vec![
            inst(&[(FeatureType::S, 0, "a")], "X"),
            inst(&[(FeatureType::S, 0, "b")], "X"),
        ];
        let tree = dtl_train(&data, &DtlConfig::default());
        assert!(tree.root_attribute().is_none());
        assert_eq!(tree.predict(&data[0]), "X");
    }

    #[test]
    fn decisive_attribute_becomes_root() {
        // C0 f_P alone determines the label; the noisy f_S column does not.
        let mut data = Vec::new();
        for (p, s, label) in [
            ("AO", "a", "o"), ("AO", "b", "o"), ("AO", "c", "o"), ("AO", "a", "o"),
            ("B", "a", "b"), ("B", "b", "b"), ("B", "c", "b"), ("B", "b", "b"),
        ] {
            data.push(inst(&[(FeatureType::P, 0, p), (FeatureType::S, 0, s)], label));
        }
        let tree = dtl_train(&data, &DtlConfig::default());
        assert_eq!(tree.root_attribute(), Some((FeatureType::P, 0)));
        for d in &data {
            assert_eq!(tree.predict(d), d.label);
        }
    }

    #[test]
    fn unseen_symbol_falls_back_to_node_majority() {
        let data = vec![
            inst(&[(FeatureType::P, 0, "AO")], "o"),
            inst(&[(FeatureType::P, 0, "AO")], "o"),
            inst(&[(FeatureType::P, 0, "AO")], "o"),
            inst(&[(FeatureType::P, 0, "B")], "b"),
            inst(&[(FeatureType::P, 0, "B")], "b"),
        ];
        let tree = dtl_train(&data, &DtlConfig::default());
        let query = inst(&[(FeatureType::P, 0, "ZH")], "");
        assert_eq!(tree.predict(&query), "o");
    }

    #[test]
    fn chained_decision_nodes() {
        // C0(f_P)=/AO/ then R1(f_P)=/~/ -> 'o'; other right contexts differ.
        let data = vec![
            inst(&[(FeatureType::P, 0, "AO"), (FeatureType::P, 1, "~")], "o"),
            inst(&[(FeatureType::P, 0, "AO"), (FeatureType::P, 1, "~")], "o"),
            inst(&[(FeatureType::P, 0, "AO"), (FeatureType::P, 1, "R")], "oo"),
            inst(&[(FeatureType::P, 0, "AO"), (FeatureType::P, 1, "R")], "oo"),
            inst(&[(FeatureType::P, 0, "B"), (FeatureType::P, 1, "~")], "b"),
            inst(&[(FeatureType::P, 0, "B"), (FeatureType::P, 1, "R")], "b"),
        ];
        let tree = dtl_train(&data, &DtlConfig { min_leaf: 1, use_gain_ratio: true });
        let q = inst(&[(FeatureType::P, 0, "AO"), (FeatureType::P, 1, "~")], "");
        assert_eq!(tree.predict(&q), "o");
    }

    #[test]
    fn root_split_matches_brute_force_gain_ratio() {
        // 12 instances over 3 attributes; oracle computes gain ratios
        // directly and the root must agree.
        let rows = [
            ("x", "m", "0", "A"), ("x", "m", "1", "A"), ("x", "n", "0", "A"),
            ("x", "n", "1", "B"), ("y", "m", "0", "B"), ("y", "m", "1", "B"),
            ("y", "n", "0", "B"), ("y", "n", "1", "A"), ("x", "m", "0", "A"),
            ("y", "n", "0", "B"), ("x", "n", "1", "B"), ("y", "m", "1", "B"),
        ];
        let data: Vec<Instance> = rows
            .iter()
            .map(|&(a, b, c, label)| {
                inst(
                    &[(FeatureType::S, -1, a), (FeatureType::S, 0, b), (FeatureType::S, 1, c)],
                    label,
                )
            })
            .collect();
        let tree = dtl_train(&data, &DtlConfig::default());
        let labels: Vec<&str> = data.iter().map(|d| d.label.as_str()).collect();
        let mut best_attr = None;
        let mut best_score = 0.0;
        for attr in [(FeatureType::S, -1i8), (FeatureType::S, 0), (FeatureType::S, 1)] {
            let values: Vec<&str> = data.iter().map(|d| d.slot(attr.0, attr.1).unwrap()).collect();
            let (_, gr) = gain_ratio(&values, &labels);
            if gr > best_score {
                best_score = gr;
                best_attr = Some(attr);
            }
        }
        assert_eq!(tree.root_attribute(), best_attr);
    }
}

//! Evaluation harness: word accuracy, k-fold cross-validation plans,
//! experiment reports, and the bundled synthetic dataset generator.

mod experiments;
pub mod synthetic;

pub use experiments::{run_experiment, EvalConfig, EXPERIMENT_IDS};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::TransliterationPair;

/// Word accuracy: a word is correct iff its top-1 surface exactly
/// matches any gold variant's hyphen-stripped surface. Words without an
/// output count as wrong.
pub fn word_accuracy(
    outputs: &BTreeMap<String, String>,
    gold: &[TransliterationPair],
) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let correct = gold
        .iter()
        .filter(|pair| {
            outputs
                .get(&pair.source_string())
                .is_some_and(|out| pair.target_surfaces().contains(out))
        })
        .count();
    Ok(correct as f64 / gold.len() as f64)
}

/// Strict per-variant accuracy: the denominator counts (word, variant)
/// pairs and each variant must be matched individually.
pub fn word_accuracy_per_variant(
    outputs: &BTreeMap<String, String>,
    gold: &[TransliterationPair],
) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut total = 0usize;
    let mut correct = 0usize;
    for pair in gold {
        let out = outputs.get(&pair.source_string());
        for surface in pair.target_surfaces() {
            total += 1;
            if out == Some(&surface) {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / total as f64)
}

/// A reproducible cross-validation plan: disjoint test-index folds
/// covering the dataset, sizes differing by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// (training items, test items) for one fold.
    pub fn split<'a, T>(&self, items: &'a [T], fold: usize) -> (Vec<&'a T>, Vec<&'a T>) {
        let test_set: std::collections::BTreeSet<usize> =
            self.folds[fold].iter().copied().collect();
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, item) in items.iter().enumerate() {
            if test_set.contains(&i) {
                test.push(item);
            } else {
                train.push(item);
            }
        }
        (train, test)
    }
}

/// Seeded shuffle followed by round-robin assignment.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k == 0 || k > n {
        return Err(Error::BadFoldCount { k, n });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (j, idx) in indices.into_iter().enumerate() {
        folds[j % k].push(idx);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldPlan { k, seed, folds })
}

/// One report table: per-fold values plus their mean in the last column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub values: Vec<f64>,
}

impl Table {
    /// Standard layout: one column per fold plus a trailing mean.
    pub fn per_fold(title: impl Into<String>, k: usize) -> Table {
        let mut columns: Vec<String> = (1..=k).map(|i| format!("fold{i}")).collect();
        columns.push("mean".to_string());
        Table { title: title.into(), columns, rows: Vec::new() }
    }

    /// Appends a row of per-fold values; the mean is computed here so it
    /// is always their exact arithmetic mean.
    pub fn push_fold_row(&mut self, label: impl Into<String>, folds: &[f64]) {
        let mean = folds.iter().sum::<f64>() / folds.len() as f64;
        let mut values = folds.to_vec();
        values.push(mean);
        self.rows.push(TableRow { label: label.into(), values });
    }

    /// The trailing mean of a row added with `push_fold_row`.
    pub fn mean_of(&self, label: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.label == label).and_then(|r| r.values.last().copied())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: EvalConfig,
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub fn table(&self, title: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.title == title)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "experiment: {}", self.experiment).unwrap();
        for table in &self.tables {
            writeln!(out).unwrap();
            writeln!(out, "## {}", table.title).unwrap();
            let label_width = table
                .rows
                .iter()
                .map(|r| r.label.len())
                .chain(std::iter::once(4))
                .max()
                .unwrap();
            write!(out, "{:label_width$}", "").unwrap();
            for c in &table.columns {
                write!(out, "  {c:>10}").unwrap();
            }
            writeln!(out).unwrap();
            for row in &table.rows {
                write!(out, "{:label_width$}", row.label).unwrap();
                for v in &row.values {
                    write!(out, "  {v:>10.4}").unwrap();
                }
                writeln!(out).unwrap();
            }
        }
        out
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::word_to_graphemes;
    use std::collections::BTreeSet;

    fn pair(word: &str, targets: &[&str]) -> TransliterationPair {
        TransliterationPair {
            source: word_to_graphemes(word).unwrap(),
            targets: targets.iter().map(|t| t.to_string()).collect::<BTreeSet<_>>(),
        }
    }

    #[test]
    fn accuracy_counts_any_variant_match() {
        let gold = vec![pair("micro", &["ma-i-ku-ro", "mi-ku-ro"]), pair("board", &["bo-deu"])];
        let mut outputs = BTreeMap::new();
        outputs.insert("micro".to_string(), "mikuro".to_string());
        outputs.insert("board".to_string(), "wrong".to_string());
        assert_eq!(word_accuracy(&outputs, &gold).unwrap(), 0.5);
        outputs.insert("board".to_string(), "bodeu".to_string());
        assert_eq!(word_accuracy(&outputs, &gold).unwrap(), 1.0);
    }

    #[test]
    fn missing_output_counts_as_wrong() {
        let gold = vec![pair("a", &["a"]), pair("b", &["beu"]), pair("c", &["keu"]), pair("d", &["deu"])];
        let mut outputs = BTreeMap::new();
        outputs.insert("a".to_string(), "a".to_string());
        assert_eq!(word_accuracy(&outputs, &gold).unwrap(), 0.25);
    }

    #[test]
    fn empty_gold_is_an_error() {
        assert!(word_accuracy(&BTreeMap::new(), &[]).is_err());
    }

    #[test]
    fn strict_mode_counts_variants() {
        let gold = vec![pair("micro", &["ma-i-ku-ro", "mi-ku-ro"])];
        let mut outputs = BTreeMap::new();
        outputs.insert("micro".to_string(), "mikuro".to_string());
        assert_eq!(word_accuracy(&outputs, &gold).unwrap(), 1.0);
        assert_eq!(word_accuracy_per_variant(&outputs, &gold).unwrap(), 0.5);
    }

    #[test]
    fn folds_partition_with_balanced_sizes() {
        let plan = make_folds(7172, 7, 42).unwrap();
        let sizes: BTreeSet<usize> = plan.folds.iter().map(|f| f.len()).collect();
        assert_eq!(sizes, BTreeSet::from([1024, 1025]));
        let mut all: Vec<usize> = plan.folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..7172).collect::<Vec<_>>());
    }

    #[test]
    fn singleton_folds_and_determinism() {
        let a = make_folds(10, 10, 7).unwrap();
        assert!(a.folds.iter().all(|f| f.len() == 1));
        let b = make_folds(10, 10, 7).unwrap();
        assert_eq!(a, b);
        let c = make_folds(10, 10, 8).unwrap();
        assert_ne!(a, c);
        assert!(make_folds(3, 4, 0).is_err());
    }

    #[test]
    fn fold_split_is_complementary() {
        let items: Vec<i32> = (0..10).collect();
        let plan = make_folds(10, 3, 1).unwrap();
        for f in 0..3 {
            let (train, test) = plan.split(&items, f);
            assert_eq!(train.len() + test.len(), 10);
        }
    }

    #[test]
    fn fold_row_mean_is_exact() {
        let mut t = Table::per_fold("x", 3);
        t.push_fold_row("r", &[0.25, 0.5, 0.75]);
        let row = &t.rows[0];
        let mean = row.values.last().unwrap();
        let expect = (0.25 + 0.5 + 0.75) / 3.0;
        assert!((mean - expect).abs() < 1e-12);
        assert_eq!(row.values.len(), 4);
    }
}

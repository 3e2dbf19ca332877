//! Conditional maximum entropy classifier. Feature functions are binary:
//! a history (condition set from the expansion) paired with an output
//! label. Training maximizes the L2-regularized conditional
//! log-likelihood by limited-memory quasi-Newton ascent with an exact
//! line search; the objective is non-decreasing per accepted step.

use std::collections::{BTreeMap, HashMap};

use rustc_hash::FxHashMap;

use serde::{Deserialize, Serialize};

use crate::features::{expand_with_arity, Condition, History, Instance};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemConfig {
    /// Gaussian prior sigma; weight penalty is w^2 / (2 sigma^2).
    pub l2_sigma: f64,
    pub max_iter: usize,
    /// Stop when the gradient max-norm falls below this.
    pub tol: f64,
    /// Feature-combination arity cap (1 = singletons only).
    pub max_arity: usize,
}

impl Default for MemConfig {
    fn default() -> Self {
        MemConfig { l2_sigma: 1.0, max_iter: 200, tol: 1e-4, max_arity: 3 }
    }
}

/// Sentinel padding for histories with fewer than three conditions.
const NO_SLOT: u32 = u32::MAX;

/// One stored history in the scoring index: the other (up to two)
/// condition ids it needs besides its key condition, and the offset of
/// its (label, weight) row in `row_data`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Posting {
    other1: u32,
    other2: u32,
    hid: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxEntModel {
    labels: Vec<String>,
    /// Interned histories; index = history id.
    histories: Vec<History>,
    /// Per history id: (label index, weight index), sorted by label.
    features: Vec<Vec<(u32, u32)>>,
    weights: Vec<f64>,
    max_arity: usize,
    pub iterations: usize,
    pub final_objective: f64,
    #[serde(skip)]
    history_index: HashMap<History, u32>,
    /// Interned condition ids, rebuilt from `histories`.
    #[serde(skip)]
    slot_ids: FxHashMap<Condition, u32>,
    /// Inverted index: each history filed under its rarest condition
    /// (fewest containing histories), so scoring scans only histories
    /// whose rarest condition is active in the instance.
    #[serde(skip)]
    postings: Vec<Vec<Posting>>,
    /// Flattened feature rows for cache-friendly scoring: history id ->
    /// row_data[row_offsets[hid]..row_offsets[hid+1]].
    #[serde(skip)]
    row_offsets: Vec<u32>,
    #[serde(skip)]
    row_data: Vec<(u32, u32)>,
}

impl MaxEntModel {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Rebuilds the lookup indices after deserialization.
    pub fn rebuild_index(&mut self) {
        self.history_index = self
            .histories
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), i as u32))
            .collect();
        self.slot_ids.clear();
        let id_lists: Vec<Vec<u32>> = self
            .histories
            .iter()
            .map(|history| {
                history
                    .iter()
                    .map(|slot| {
                        let next = self.slot_ids.len() as u32;
                        *self.slot_ids.entry(slot.clone()).or_insert(next)
                    })
                    .collect()
            })
            .collect();
        let n_ids = self.slot_ids.len();
        let mut freq = vec![0u32; n_ids];
        for ids in &id_lists {
            for &id in ids {
                freq[id as usize] += 1;
            }
        }
        self.postings = vec![Vec::new(); n_ids];
        for (hid, ids) in id_lists.iter().enumerate() {
            let key = *ids
                .iter()
                .min_by_key(|&&id| (freq[id as usize], id))
                .expect("histories are non-empty");
            let mut others = [NO_SLOT; 2];
            for (slot, &id) in ids.iter().filter(|&&id| id != key).enumerate() {
                others[slot] = id;
            }
            self.postings[key as usize].push(Posting {
                other1: others[0],
                other2: others[1],
                hid: hid as u32,
            });
        }
        self.row_offsets = Vec::with_capacity(self.features.len() + 1);
        self.row_offsets.push(0);
        self.row_data = Vec::new();
        for row in &self.features {
            self.row_data.extend_from_slice(row);
            self.row_offsets.push(self.row_data.len() as u32);
        }
    }

    fn scores(&self, instance: &Instance) -> Vec<f64> {
        let mut scores = vec![0.0f64; self.labels.len()];
        let n_ids = self.slot_ids.len();
        let mut present = vec![false; n_ids];
        let mut active: Vec<u32> = Vec::with_capacity(instance.slots.len());
        for slot in &instance.slots {
            if let Some(&id) = self.slot_ids.get(slot) {
                present[id as usize] = true;
                active.push(id);
            }
        }
        for &id in &active {
            for p in &self.postings[id as usize] {
                if (p.other1 == NO_SLOT || present[p.other1 as usize])
                    && (p.other2 == NO_SLOT || present[p.other2 as usize])
                {
                    let start = self.row_offsets[p.hid as usize] as usize;
                    let end = self.row_offsets[p.hid as usize + 1] as usize;
                    for &(label, widx) in &self.row_data[start..end] {
                        scores[label as usize] += self.weights[widx as usize];
                    }
                }
            }
        }
        scores
    }

    /// Exact softmax over per-label summed weights; unseen histories
    /// contribute nothing. Sums to 1 within 1e-9.
    pub fn predict_dist(&self, instance: &Instance) -> BTreeMap<String, f64> {
        let scores = self.scores(instance);
        let probs = softmax(&scores);
        self.labels.iter().cloned().zip(probs).collect()
    }

    pub fn predict(&self, instance: &Instance) -> String {
        let scores = self.scores(instance);
        let mut best = 0usize;
        for (i, &s) in scores.iter().enumerate() {
            // Strict comparison keeps the first (lexicographically
            // smallest) label on ties.
            if s > scores[best] {
                best = i;
            }
        }
        self.labels[best].clone()
    }

    /// Log-probability of one label, for force-decoding.
    pub fn log_prob(&self, instance: &Instance, label: &str) -> f64 {
        let scores = self.scores(instance);
        let idx = match self.labels.iter().position(|l| l == label) {
            Some(i) => i,
            None => return f64::NEG_INFINITY,
        };
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let logz = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        scores[idx] - logz
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn mem_train(instances: &[Instance], config: &MemConfig) -> MaxEntModel {
    assert!(!instances.is_empty(), "mem_train requires at least one instance");
    let mut labels: Vec<String> = Vec::new();
    for inst in instances {
        if !labels.contains(&inst.label) {
            labels.push(inst.label.clone());
        }
    }
    labels.sort();
    if labels.len() == 1 {
        eprintln!("warning: single-label training data; maxent model is degenerate");
        let mut model = MaxEntModel {
            labels,
            histories: Vec::new(),
            features: Vec::new(),
            weights: Vec::new(),
            max_arity: config.max_arity,
            iterations: 0,
            final_objective: 0.0,
            history_index: HashMap::new(),
            slot_ids: FxHashMap::default(),
            postings: Vec::new(),
            row_offsets: Vec::new(),
            row_data: Vec::new(),
        };
        model.rebuild_index();
        return model;
    }
    let label_of = |name: &str| labels.iter().position(|l| l == name).unwrap() as u32;

    // Intern histories and instantiate (history, label) feature functions.
    let mut history_index: HashMap<History, u32> = HashMap::new();
    let mut histories: Vec<History> = Vec::new();
    let mut features: Vec<Vec<(u32, u32)>> = Vec::new();
    let mut n_weights = 0u32;
    // Per instance: active history ids and gold label index.
    let mut compiled: Vec<(Vec<u32>, u32)> = Vec::with_capacity(instances.len());
    for inst in instances {
        let y = label_of(&inst.label);
        let mut active = Vec::new();
        for history in expand_with_arity(inst, config.max_arity) {
            let hid = *history_index.entry(history.clone()).or_insert_with(|| {
                histories.push(history);
                features.push(Vec::new());
                (histories.len() - 1) as u32
            });
            active.push(hid);
            let row = &mut features[hid as usize];
            if let Err(pos) = row.binary_search_by_key(&y, |&(l, _)| l) {
                row.insert(pos, (y, n_weights));
                n_weights += 1;
            }
        }
        compiled.push((active, y));
    }

    let n_labels = labels.len();
    let inv_var = 1.0 / (config.l2_sigma * config.l2_sigma);

    // Flatten each instance's active (label, weight) feature functions
    // into one contiguous array so every optimization pass is a linear
    // scan. Rows are complete here: the compile loop above has seen
    // every instance.
    let n_instances = compiled.len();
    let mut offsets: Vec<usize> = Vec::with_capacity(n_instances + 1);
    offsets.push(0);
    let mut flat: Vec<(u32, u32)> = Vec::new();
    for (active, _) in &compiled {
        for &hid in active {
            flat.extend_from_slice(&features[hid as usize]);
        }
        offsets.push(flat.len());
    }
    let golds: Vec<u32> = compiled.iter().map(|(_, y)| *y).collect();

    let log_likelihood_terms = |scores: &[f64], y: usize| -> f64 {
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let logz = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        scores[y] - logz
    };

    let mut weights = vec![0.0f64; n_weights as usize];
    // Objective at zero weights: uniform prediction, no penalty.
    let mut obj = -(n_instances as f64) * (n_labels as f64).ln();
    let mut iterations = 0;
    // Per-instance label scores under the current weights, the gradient,
    // and the search direction. Scores are linear in the weights, so the
    // objective restricted to any line w + s·d is exactly computable
    // from these cached scores — no extra passes over the feature lists.
    let mut scores_w = vec![0.0f64; n_instances * n_labels];
    let mut scores_d = vec![0.0f64; n_instances * n_labels];
    // Limited-memory BFGS ascent with an exact line search: the
    // restricted objective is strictly concave in the step size, so its
    // unique maximizer is found by safeguarded Newton on the sign change
    // of the directional derivative.
    const LBFGS_MEMORY: usize = 15;
    // History of (weight delta, gradient delta, 1 / (delta_w · delta_g)).
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut grad_prev: Vec<f64> = Vec::new();
    let mut w_delta_pending: Vec<f64> = Vec::new();
    for _ in 0..config.max_iter {
        iterations += 1;
        let mut grad = vec![0.0f64; weights.len()];
        for i in 0..n_instances {
            let row = &mut scores_w[i * n_labels..(i + 1) * n_labels];
            row.fill(0.0);
            for &(label, widx) in &flat[offsets[i]..offsets[i + 1]] {
                row[label as usize] += weights[widx as usize];
            }
            let probs = softmax(row);
            let y = golds[i];
            for &(label, widx) in &flat[offsets[i]..offsets[i + 1]] {
                let obs = if label == y { 1.0 } else { 0.0 };
                grad[widx as usize] += obs - probs[label as usize];
            }
        }
        for (g, w) in grad.iter_mut().zip(&weights) {
            *g -= inv_var * w;
        }
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < config.tol {
            break;
        }
        // Record the curvature pair from the previous accepted step. The
        // pair is stored as (delta_w, -delta_g): for a concave objective
        // delta_w · delta_g < 0 along any ascent step, so the negated
        // pair has the positive curvature product the inverse-Hessian
        // recursion needs. Degenerate pairs are skipped.
        if !w_delta_pending.is_empty() {
            let g_delta_neg: Vec<f64> =
                grad_prev.iter().zip(&grad).map(|(gp, g)| gp - g).collect();
            let wg: f64 =
                w_delta_pending.iter().zip(&g_delta_neg).map(|(a, b)| a * b).sum();
            if wg > 1e-12 {
                if history.len() == LBFGS_MEMORY {
                    history.remove(0);
                }
                history.push((
                    std::mem::take(&mut w_delta_pending),
                    g_delta_neg,
                    1.0 / wg,
                ));
            }
            w_delta_pending.clear();
        }
        // Standard two-loop recursion; with the negated pairs it yields
        // dir = B · grad where B approximates the inverse of minus the
        // Hessian (positive definite), so dir is an ascent direction.
        let mut dir = grad.clone();
        let mut alphas = vec![0.0f64; history.len()];
        for (j, (wd, gd, rho)) in history.iter().enumerate().rev() {
            let a = rho * wd.iter().zip(&dir).map(|(x, q)| x * q).sum::<f64>();
            for (q, y) in dir.iter_mut().zip(gd) {
                *q -= a * y;
            }
            alphas[j] = a;
        }
        let mut steepest = history.is_empty();
        if let Some((wd, gd, _)) = history.last() {
            let wg: f64 = wd.iter().zip(gd).map(|(a, b)| a * b).sum();
            let gg: f64 = gd.iter().map(|y| y * y).sum();
            let gamma = wg / gg;
            for q in dir.iter_mut() {
                *q *= gamma;
            }
        }
        for (j, (wd, gd, rho)) in history.iter().enumerate() {
            let b = rho * gd.iter().zip(&dir).map(|(y, q)| y * q).sum::<f64>();
            for (q, x) in dir.iter_mut().zip(wd) {
                *q += (alphas[j] - b) * x;
            }
        }
        let mut d_dot_g: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();
        if d_dot_g <= 0.0 {
            // Not an ascent direction (numerical breakdown): fall back
            // to steepest ascent.
            dir.copy_from_slice(&grad);
            d_dot_g = grad.iter().map(|g| g * g).sum();
            steepest = true;
        }
        for i in 0..n_instances {
            let row = &mut scores_d[i * n_labels..(i + 1) * n_labels];
            row.fill(0.0);
            for &(label, widx) in &flat[offsets[i]..offsets[i + 1]] {
                row[label as usize] += dir[widx as usize];
            }
        }
        let w_dot_d: f64 = weights.iter().zip(&dir).map(|(w, d)| w * d).sum();
        let d_dot_d: f64 = dir.iter().map(|d| d * d).sum();
        // First and second derivatives of the restricted objective at
        // step s. The second derivative is minus the softmax variance of
        // the direction scores, so it is always negative: the restricted
        // objective is strictly concave.
        let dphi = |s: f64| -> (f64, f64) {
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            let mut trial = vec![0.0f64; n_labels];
            for i in 0..n_instances {
                let base = i * n_labels;
                for l in 0..n_labels {
                    trial[l] = scores_w[base + l] + s * scores_d[base + l];
                }
                let probs = softmax(&trial);
                let mut mean = 0.0;
                let mut second = 0.0;
                for (l, &p) in probs.iter().enumerate() {
                    let v = scores_d[base + l];
                    mean += p * v;
                    second += p * v * v;
                }
                d1 += scores_d[base + golds[i] as usize] - mean;
                d2 -= second - mean * mean;
            }
            (d1 - inv_var * (w_dot_d + s * d_dot_d), d2 - inv_var * d_dot_d)
        };
        // dphi(0) = d·∇obj > 0; double until the derivative turns
        // negative, then run safeguarded Newton on the derivative's
        // unique sign change (the maximizer).
        let mut lo = 0.0f64;
        let mut hi = 1.0 / (1.0 + d_dot_d.sqrt() / (1.0 + d_dot_g.sqrt()));
        let mut bracketed = false;
        let mut cur = (f64::NAN, f64::NAN);
        for _ in 0..60 {
            cur = dphi(hi);
            if cur.0 <= 0.0 {
                bracketed = true;
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        let step = if bracketed {
            let mut s = hi;
            let mut within_tol = false;
            for _ in 0..40 {
                let (f, fp) = cur;
                if f.abs() <= 1e-9 * d_dot_g {
                    within_tol = true;
                    break;
                }
                if hi - lo <= 1e-12 * hi {
                    break;
                }
                if f > 0.0 {
                    lo = s;
                } else {
                    hi = s;
                }
                let newton = s - f / fp;
                s = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                cur = dphi(s);
            }
            // Within tolerance of the stationary point, or on its ascent
            // side, s is safe; otherwise fall back to the largest probe
            // with a positive derivative, which is below the maximizer.
            if within_tol || cur.0 >= 0.0 {
                s
            } else {
                lo
            }
        } else {
            hi
        };
        let objective_at = |s: f64| -> f64 {
            let mut ll = 0.0;
            let mut trial = vec![0.0f64; n_labels];
            for i in 0..n_instances {
                let base = i * n_labels;
                for l in 0..n_labels {
                    trial[l] = scores_w[base + l] + s * scores_d[base + l];
                }
                ll += log_likelihood_terms(&trial, golds[i] as usize);
            }
            let w_dot_w: f64 = weights.iter().map(|x| x * x).sum();
            ll - 0.5 * inv_var * (w_dot_w + 2.0 * s * w_dot_d + s * s * d_dot_d)
        };
        let trial_obj = objective_at(step);
        let improved = trial_obj > obj;
        if improved {
            for (w, d) in weights.iter_mut().zip(&dir) {
                *w += step * d;
            }
            w_delta_pending = dir.iter().map(|d| step * d).collect();
            grad_prev = grad;
        }
        if trial_obj - obj < 1e-10 * (1.0 + obj.abs()) {
            // Negligible gain. A quasi-Newton direction can stall while
            // the gradient is still large; discard the curvature history
            // (restarting from steepest ascent) and only stop if a pure
            // gradient step stalls too.
            if steepest {
                break;
            }
            history.clear();
            w_delta_pending.clear();
        }
        if improved {
            obj = trial_obj;
        }
    }

    let mut model = MaxEntModel {
        labels,
        histories,
        features,
        weights,
        max_arity: config.max_arity,
        iterations,
        final_objective: obj,
        history_index: HashMap::new(),
        slot_ids: FxHashMap::default(),
        postings: Vec::new(),
        row_offsets: Vec::new(),
        row_data: Vec::new(),
    };
    model.rebuild_index();
    model
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
    fn separable_data_reaches_training_accuracy_one() {
        let data = vec![
            inst(&[(FeatureType::S, 0, "a")], "A"),
            inst(&[(FeatureType::S, 0, "b")], "B"),
        ];
        let model = mem_train(&data, &MemConfig::default());
        for d in &data {
            assert_eq!(model.predict(d), d.label);
        }
    }

    #[test]
    fn no_active_features_gives_uniform() {
        let data = vec![
            inst(&[(FeatureType::S, 0, "a")], "A"),
            inst(&[(FeatureType::S, 0, "b")], "B"),
        ];
        let model = mem_train(&data, &MemConfig::default());
        let unseen = inst(&[(FeatureType::S, 0, "zzz")], "");
        let dist = model.predict_dist(&unseen);
        assert!((dist["A"] - 0.5).abs() < 1e-12);
        assert!((dist["B"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_single_weight() {
        // One weight ln 2 on label A's lone feature, two labels: P(A)=2/3.
        let data = vec![
            inst(&[(FeatureType::S, 0, "a")], "A"),
            inst(&[(FeatureType::S, 0, "b")], "B"),
        ];
        let mut model = mem_train(&data, &MemConfig::default());
        // Overwrite weights by hand to the closed-form case.
        for w in &mut model.weights {
            *w = 0.0;
        }
        let hid = model.history_index[&vec![Slot {
            ftype: FeatureType::S,
            pos: 0,
            symbol: "a".into(),
        }]];
        let a_index = model.labels.iter().position(|l| l == "A").unwrap() as u32;
        let widx = model.features[hid as usize]
            .iter()
            .find(|&&(l, _)| l == a_index)
            .unwrap()
            .1;
        model.weights[widx as usize] = 2.0f64.ln();
        let dist = model.predict_dist(&inst(&[(FeatureType::S, 0, "a")], ""));
        assert!((dist["A"] - 2.0 / 3.0).abs() < 1e-12, "P(A) = {}", dist["A"]);
    }

    #[test]
    fn distribution_sums_to_one() {
        let data = vec![
            inst(&[(FeatureType::S, 0, "a"), (FeatureType::S, 1, "x")], "A"),
            inst(&[(FeatureType::S, 0, "b"), (FeatureType::S, 1, "x")], "B"),
            inst(&[(FeatureType::S, 0, "a"), (FeatureType::S, 1, "y")], "C"),
        ];
        let model = mem_train(&data, &MemConfig::default());
        for d in &data {
            let total: f64 = model.predict_dist(d).values().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn xor_needs_pairwise_combinations() {
        let data = vec![
            inst(&[(FeatureType::S, -1, "0"), (FeatureType::S, 1, "0")], "0"),
            inst(&[(FeatureType::S, -1, "0"), (FeatureType::S, 1, "1")], "1"),
            inst(&[(FeatureType::S, -1, "1"), (FeatureType::S, 1, "0")], "1"),
            inst(&[(FeatureType::S, -1, "1"), (FeatureType::S, 1, "1")], "0"),
        ];
        let accuracy = |model: &MaxEntModel| {
            data.iter().filter(|d| model.predict(d) == d.label).count() as f64 / 4.0
        };
        let with = mem_train(&data, &MemConfig { max_iter: 500, ..MemConfig::default() });
        assert_eq!(accuracy(&with), 1.0);
        let without = mem_train(
            &data,
            &MemConfig { max_arity: 1, max_iter: 500, ..MemConfig::default() },
        );
        assert!(accuracy(&without) <= 0.75, "linear model solved xor");
    }

    #[test]
    fn single_label_degenerates_gracefully() {
        let data = vec![inst(&[(FeatureType::S, 0, "a")], "A")];
        let model = mem_train(&data, &MemConfig::default());
        assert_eq!(model.predict(&data[0]), "A");
        assert!((model.predict_dist(&data[0])["A"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_not_below_zero_weight_model() {
        let data = vec![
            inst(&[(FeatureType::S, 0, "a")], "A"),
            inst(&[(FeatureType::S, 0, "b")], "B"),
            inst(&[(FeatureType::S, 0, "a")], "B"),
        ];
        let model = mem_train(&data, &MemConfig::default());
        let zero_ll = 3.0 * (0.5f64).ln(); // uniform over two labels
        assert!(model.final_objective >= zero_ll - 1e-9);
    }
}

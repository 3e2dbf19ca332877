//! The experiment suite: hybrid-weight sweep, model/learner comparison,
//! dictionary split, context-window sweep, training-size sweep, overlap
//! analysis, and ranking evaluation.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::dataset::PronDict;
use crate::error::{Error, Result};
use crate::harness::{make_folds, ExperimentReport, Table};
use crate::learners::{LearnerKind, MemConfig};
use crate::pipeline::{
    dedup_candidates, interpolate_pool, train_model_set, Candidate, HybridConfig,
    PooledHypothesis, TrainConfig,
};
use crate::ranking::{
    rank, select_method, FrequencyProvider, RankConfig, RankEntry, SearchMethod,
};
use crate::types::TransliterationPair;

pub const EXPERIMENT_IDS: [&str; 7] = [
    "hybrid_sweep",
    "comparison",
    "dictionary",
    "window",
    "datasize",
    "overlap",
    "rank_eval",
];

#[derive(Debug, Clone, Serialize)]
pub struct EvalConfig {
    pub folds: usize,
    pub seed: u64,
    pub learner: LearnerKind,
    pub window_k: usize,
    pub beam: usize,
    pub alpha: f64,
    pub mem: MemConfig,
    /// Count (word, variant) pairs instead of any-variant word matches.
    pub strict_variants: bool,
    /// Demote single-unit candidates under keyword searches in rank_eval.
    pub demote_single_unit: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 5,
            seed: 42,
            learner: LearnerKind::Mem,
            window_k: 3,
            beam: 5,
            alpha: 0.5,
            mem: MemConfig::default(),
            strict_variants: false,
            demote_single_unit: false,
        }
    }
}

impl EvalConfig {
    fn train_config(&self, learner: LearnerKind) -> TrainConfig {
        TrainConfig { window_k: self.window_k, mem: self.mem.clone(), ..TrainConfig::new(learner) }
    }
}

/// Everything computed for one test word on one fold.
struct WordEval {
    word: String,
    gold: BTreeSet<String>,
    registered: bool,
    g: Vec<Candidate>,
    p: Vec<Candidate>,
    c: Vec<Candidate>,
    /// Hybrid pool; empty for learners without probabilities.
    pool: Vec<PooledHypothesis>,
}

impl WordEval {
    fn h(&self, alpha: f64) -> Vec<Candidate> {
        interpolate_pool(&self.pool, HybridConfig { alpha })
    }

    fn correct_top1(&self, candidates: &[Candidate]) -> bool {
        candidates.first().is_some_and(|c| self.gold.contains(&c.surface))
    }

    fn combined(&self, alpha: f64) -> Vec<Candidate> {
        let mut all = Vec::new();
        all.extend(self.g.iter().cloned());
        all.extend(self.p.iter().cloned());
        if !self.pool.is_empty() {
            all.extend(self.h(alpha));
        }
        all.extend(self.c.iter().cloned());
        dedup_candidates(all)
    }
}

fn evaluate_fold(
    train: &[TransliterationPair],
    test: &[TransliterationPair],
    dict: &PronDict,
    learner: LearnerKind,
    cfg: &EvalConfig,
) -> Result<Vec<WordEval>> {
    let set = train_model_set(train, dict, &cfg.train_config(learner), cfg.beam)?;
    let mut out = Vec::with_capacity(test.len());
    for pair in test {
        let word = pair.source_string();
        let allow_missing = |r: Result<Vec<Candidate>>| match r {
            Ok(c) => Ok(c),
            Err(Error::MissingModel(_)) => Ok(Vec::new()),
            Err(e) => Err(e),
        };
        let g = allow_missing(set.psi_g(&pair.source))?;
        let p = allow_missing(set.psi_p(&pair.source))?;
        let c = allow_missing(set.psi_c(&pair.source))?;
        let pool = if learner == LearnerKind::Mem {
            match set.hybrid_pool(&pair.source) {
                Ok(pool) => pool,
                Err(Error::MissingModel(_)) => Vec::new(),
                Err(e) => return Err(e),
            }
        } else {
            Vec::new()
        };
        out.push(WordEval {
            word,
            gold: pair.target_surfaces(),
            registered: dict.contains(&pair.source_string()),
            g,
            p,
            c,
            pool,
        });
    }
    Ok(out)
}

/// Runs every fold, in parallel, in fold order.
fn evaluate_folds(
    pairs: &[TransliterationPair],
    dict: &PronDict,
    learner: LearnerKind,
    cfg: &EvalConfig,
    shrink_train: Option<f64>,
) -> Result<Vec<Vec<WordEval>>> {
    let plan = make_folds(pairs.len(), cfg.folds, cfg.seed)?;
    let jobs: Vec<(Vec<TransliterationPair>, Vec<TransliterationPair>)> = (0..cfg.folds)
        .map(|f| {
            let (train, test) = plan.split(pairs, f);
            let mut train: Vec<TransliterationPair> = train.into_iter().cloned().collect();
            if let Some(fraction) = shrink_train {
                let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed ^ (0x5eed + f as u64));
                train.shuffle(&mut rng);
                let keep = ((fraction * train.len() as f64).ceil() as usize).max(1);
                train.truncate(keep);
                train.sort_by_key(|p| p.source_string());
            }
            (train, test.into_iter().cloned().collect())
        })
        .collect();
    // Batch fold threads by the available cores: oversubscribing a
    // single core makes the memory-heavy trainings thrash each other's
    // cache. Results stay in fold order either way.
    let batch = std::thread::available_parallelism().map_or(1, |n| n.get()).max(1);
    let mut results = Vec::with_capacity(jobs.len());
    for chunk in jobs.chunks(batch) {
        let chunk_results: Vec<Result<Vec<WordEval>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|(train, test)| {
                    scope.spawn(move || evaluate_fold(train, test, dict, learner, cfg))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("fold thread")).collect()
        });
        for r in chunk_results {
            results.push(r?);
        }
    }
    Ok(results)
}

/// Word accuracy over one fold given a per-word top-1 extractor.
fn fold_wa(
    evals: &[WordEval],
    strict: bool,
    top1: impl Fn(&WordEval) -> Option<String>,
) -> f64 {
    if evals.is_empty() {
        return 0.0;
    }
    if strict {
        let mut total = 0usize;
        let mut correct = 0usize;
        for e in evals {
            let out = top1(e);
            for surface in &e.gold {
                total += 1;
                if out.as_deref() == Some(surface.as_str()) {
                    correct += 1;
                }
            }
        }
        if total == 0 {
            return 0.0;
        }
        correct as f64 / total as f64
    } else {
        let correct = evals
            .iter()
            .filter(|e| top1(e).is_some_and(|s| e.gold.contains(&s)))
            .count();
        correct as f64 / evals.len() as f64
    }
}

fn top1_of(cands: &[Candidate]) -> Option<String> {
    cands.first().map(|c| c.surface.clone())
}

fn per_fold_wa(
    folds: &[Vec<WordEval>],
    strict: bool,
    top1: impl Fn(&WordEval) -> Option<String> + Copy,
) -> Vec<f64> {
    folds.iter().map(|f| fold_wa(f, strict, top1)).collect()
}

pub fn run_experiment(
    id: &str,
    pairs: &[TransliterationPair],
    dict: &PronDict,
    cfg: &EvalConfig,
    providers: Option<&[&dyn FrequencyProvider]>,
) -> Result<ExperimentReport> {
    let tables = match id {
        "hybrid_sweep" => hybrid_sweep(pairs, dict, cfg)?,
        "comparison" => comparison(pairs, dict, cfg)?,
        "dictionary" => dictionary(pairs, dict, cfg)?,
        "window" => window(pairs, dict, cfg)?,
        "datasize" => datasize(pairs, dict, cfg)?,
        "overlap" => overlap(pairs, dict, cfg)?,
        "rank_eval" => rank_eval(pairs, dict, cfg, providers)?,
        other => return Err(Error::UnknownExperiment(other.to_string())),
    };
    Ok(ExperimentReport { experiment: id.to_string(), config: cfg.clone(), tables })
}

fn hybrid_sweep(
    pairs: &[TransliterationPair],
    dict: &PronDict,
    cfg: &EvalConfig,
) -> Result<Vec<Table>> {
    let folds = evaluate_folds(pairs, dict, LearnerKind::Mem, cfg, None)?;
    let mut table = Table::per_fold("hybrid interpolation sweep", cfg.folds);
    for step in 0..=10u32 {
        let alpha = f64::from(step) / 10.0;
        let wa = per_fold_wa(&folds, cfg.strict_variants, |e| top1_of(&e.h(alpha)));
        table.push_fold_row(format!("alpha={alpha:.1}"), &wa);
    }
    table.push_fold_row("psi_G", &per_fold_wa(&folds, cfg.strict_variants, |e| top1_of(&e.g)));
    table.push_fold_row("psi_P", &per_fold_wa(&folds, cfg.strict_variants, |e| top1_of(&e.p)));
    Ok(vec![table])
}

fn comparison(
    pairs: &[TransliterationPair],
    dict: &PronDict,
    cfg: &EvalConfig,
) -> Result<Vec<Table>> {
    let mut table = Table::per_fold("model comparison", cfg.folds);
    let strict = cfg.strict_variants;
    for learner in [LearnerKind::Mem, LearnerKind::Dtl, LearnerKind::Mbl] {
        let folds = evaluate_folds(pairs, dict, learner, cfg, None)?;
        let name = learner.name();
        table.push_fold_row(format!("{name} psi_G"), &per_fold_wa(&folds, strict, |e| top1_of(&e.g)));
        table.push_fold_row(format!("{name} psi_P"), &per_fold_wa(&folds, strict, |e| top1_of(&e.p)));
        if learner == LearnerKind::Mem {
            let alpha = cfg.alpha;
            table.push_fold_row(
                format!("{name} psi_H"),
                &per_fold_wa(&folds, strict, |e| top1_of(&e.h(alpha))),
            );
        }
        table.push_fold_row(format!("{name} psi_C"), &per_fold_wa(&folds, strict, |e| top1_of(&e.c)));
        // Any-correct unions: the word counts as correct when at least one
        // member model's top-1 is correct.
        let union_gpc = |e: &WordEval| -> Option<String> {
            for cands in [&e.g, &e.p, &e.c] {
                if e.correct_top1(cands) {
                    return top1_of(cands);
                }
            }
            top1_of(&e.g)
        };
        table.push_fold_row(format!("{name} psi_G+P+C"), &per_fold_wa(&folds, strict, union_gpc));
        if learner == LearnerKind::Mem {
            let alpha = cfg.alpha;
            let union_all = move |e: &WordEval| -> Option<String> {
                let h = e.h(alpha);
                for cands in [&e.g, &e.p, &h, &e.c] {
                    if e.correct_top1(cands) {
                        return top1_of(cands);
                    }
                }
                top1_of(&e.g)
            };
            table.push_fold_row(format!("{name} psi_G+P+H+C"), &per_fold_wa(&folds, strict, union_all));
        }
    }
    Ok(vec![table])
}

fn dictionary(
    pairs: &[TransliterationPair],
    dict: &PronDict,
    cfg: &EvalConfig,
) -> Result<Vec<Table>> {
    let folds = evaluate_folds(pairs, dict, cfg.learner, cfg, None)?;
    let mut wa_table = Table::per_fold("registered/unregistered word accuracy", cfg.folds);
    let mut count_table = Table::per_fold("registered/unregistered counts", cfg.folds);
    let subsets: [(&str, Box<dyn Fn(&WordEval) -> bool>); 2] = [
        ("registered", Box::new(|e: &WordEval| e.registered)),
        ("unregistered", Box::new(|e: &WordEval| !e.registered)),
    ];
    for (subset_name, keep) in &subsets {
        let subset_folds: Vec<Vec<&WordEval>> =
            folds.iter().map(|f| f.iter().filter(|e| keep(e)).collect()).collect();
        let counts: Vec<f64> = subset_folds.iter().map(|f| f.len() as f64).collect();
        count_table.push_fold_row(subset_name.to_string(), &counts);
        let models: [(&str, Box<dyn Fn(&WordEval) -> Option<String>>); 4] = [
            ("psi_G", Box::new(|e: &WordEval| top1_of(&e.g))),
            ("psi_P", Box::new(|e: &WordEval| top1_of(&e.p))),
            ("psi_H", {
                let alpha = cfg.alpha;
                Box::new(move |e: &WordEval| top1_of(&e.h(alpha)))
            }),
            ("psi_C", Box::new(|e: &WordEval| top1_of(&e.c))),
        ];
        for (model_name, top1) in &models {
            if *model_name == "psi_H" && cfg.learner != LearnerKind::Mem {
                continue;
            }
            let wa: Vec<f64> = subset_folds
                .iter()
                .map(|f| {
                    if f.is_empty() {
                        return 0.0;
                    }
                    let correct = f
                        .iter()
                        .filter(|e| top1(e).is_some_and(|s| e.gold.contains(&s)))
                        .count();
                    correct as f64 / f.len() as f64
                })
                .collect();
            wa_table.push_fold_row(format!("{model_name} {subset_name}"), &wa);
        }
    }
    Ok(vec![wa_table, count_table])
}

fn window(pairs: &[TransliterationPair], dict: &PronDict, cfg: &EvalConfig) -> Result<Vec<Table>> {
    let mut table = Table::per_fold("context window sweep", cfg.folds);
    for k in 1..=5usize {
        let sub_cfg = EvalConfig { window_k: k, ..cfg.clone() };
        let folds = evaluate_folds(pairs, dict, cfg.learner, &sub_cfg, None)?;
        let strict = cfg.strict_variants;
        table.push_fold_row(format!("k={k} psi_G"), &per_fold_wa(&folds, strict, |e| top1_of(&e.g)));
        table.push_fold_row(format!("k={k} psi_P"), &per_fold_wa(&folds, strict, |e| top1_of(&e.p)));
        if cfg.learner == LearnerKind::Mem {
            let alpha = cfg.alpha;
            table.push_fold_row(
                format!("k={k} psi_H"),
                &per_fold_wa(&folds, strict, |e| top1_of(&e.h(alpha))),
            );
        }
        table.push_fold_row(format!("k={k} psi_C"), &per_fold_wa(&folds, strict, |e| top1_of(&e.c)));
    }
    Ok(vec![table])
}

fn datasize(pairs: &[TransliterationPair], dict: &PronDict, cfg: &EvalConfig) -> Result<Vec<Table>> {
    let mut table = Table::per_fold("training size sweep", cfg.folds);
    for percent in [20u32, 40, 60, 80, 100] {
        let fraction = f64::from(percent) / 100.0;
        let folds = evaluate_folds(pairs, dict, cfg.learner, cfg, Some(fraction))?;
        let strict = cfg.strict_variants;
        table.push_fold_row(
            format!("{percent}% psi_G"),
            &per_fold_wa(&folds, strict, |e| top1_of(&e.g)),
        );
        table.push_fold_row(
            format!("{percent}% psi_P"),
            &per_fold_wa(&folds, strict, |e| top1_of(&e.p)),
        );
        if cfg.learner == LearnerKind::Mem {
            let alpha = cfg.alpha;
            table.push_fold_row(
                format!("{percent}% psi_H"),
                &per_fold_wa(&folds, strict, |e| top1_of(&e.h(alpha))),
            );
        }
        table.push_fold_row(
            format!("{percent}% psi_C"),
            &per_fold_wa(&folds, strict, |e| top1_of(&e.c)),
        );
    }
    Ok(vec![table])
}

fn overlap(pairs: &[TransliterationPair], dict: &PronDict, cfg: &EvalConfig) -> Result<Vec<Table>> {
    let folds = evaluate_folds(pairs, dict, LearnerKind::Mem, cfg, None)?;
    let alpha = cfg.alpha;
    // Per fold, the set of correctly transliterated word indices per model.
    let model_names = ["G", "P", "H", "C"];
    let correct_sets: Vec<[BTreeSet<usize>; 4]> = folds
        .iter()
        .map(|fold| {
            let mut sets: [BTreeSet<usize>; 4] = Default::default();
            for (i, e) in fold.iter().enumerate() {
                let h = e.h(alpha);
                for (s, cands) in [&e.g, &e.p, &h, &e.c].into_iter().enumerate() {
                    if e.correct_top1(cands) {
                        sets[s].insert(i);
                    }
                }
            }
            sets
        })
        .collect();
    let mut table = Table::per_fold("correct-set overlap counts", cfg.folds);
    for (m, name) in model_names.iter().enumerate() {
        let sizes: Vec<f64> = correct_sets.iter().map(|s| s[m].len() as f64).collect();
        table.push_fold_row(format!("|{name}|"), &sizes);
    }
    for a in 0..4 {
        for b in (a + 1)..4 {
            let inter: Vec<f64> = correct_sets
                .iter()
                .map(|s| s[a].intersection(&s[b]).count() as f64)
                .collect();
            let union: Vec<f64> =
                correct_sets.iter().map(|s| s[a].union(&s[b]).count() as f64).collect();
            table.push_fold_row(format!("|{}∩{}|", model_names[a], model_names[b]), &inter);
            table.push_fold_row(format!("|{}∪{}|", model_names[a], model_names[b]), &union);
        }
    }
    let inter4: Vec<f64> = correct_sets
        .iter()
        .map(|s| {
            s[0].iter().filter(|i| s[1].contains(i) && s[2].contains(i) && s[3].contains(i)).count()
                as f64
        })
        .collect();
    let union4: Vec<f64> = correct_sets
        .iter()
        .map(|s| {
            let mut u = s[0].clone();
            for t in &s[1..] {
                u.extend(t.iter().copied());
            }
            u.len() as f64
        })
        .collect();
    table.push_fold_row("|G∩P∩H∩C|", &inter4);
    table.push_fold_row("|G∪P∪H∪C|", &union4);
    Ok(vec![table])
}

/// Offline frequency oracle derived from the gold data: each gold
/// surface gets the strictly largest phrasal count.
struct GoldOracleProvider {
    gold: BTreeMap<String, BTreeSet<String>>,
}

impl FrequencyProvider for GoldOracleProvider {
    fn engine_id(&self) -> &str {
        "gold-oracle"
    }

    fn count(&self, method: SearchMethod, source: &str, candidate: &str) -> Result<u64> {
        match method {
            SearchMethod::Bps => Ok(self
                .gold
                .get(source)
                .is_some_and(|s| s.contains(candidate))
                .then_some(100)
                .unwrap_or(1)),
            _ => Ok(0),
        }
    }
}

fn rank_eval(
    pairs: &[TransliterationPair],
    dict: &PronDict,
    cfg: &EvalConfig,
    providers: Option<&[&dyn FrequencyProvider]>,
) -> Result<Vec<Table>> {
    let folds = evaluate_folds(pairs, dict, LearnerKind::Mem, cfg, None)?;
    let oracle = GoldOracleProvider {
        gold: pairs
            .iter()
            .map(|p| (p.source_string(), p.target_surfaces()))
            .collect(),
    };
    let oracle_refs: [&dyn FrequencyProvider; 1] = [&oracle];
    let providers: &[&dyn FrequencyProvider] = providers.unwrap_or(&oracle_refs);
    let rank_config = RankConfig { demote_single_unit: cfg.demote_single_unit };

    let k_folds = cfg.folds;
    let mut all_topk = vec![[0.0f64; 3]; k_folds];
    let mut ctc_topk = vec![[0.0f64; 3]; k_folds];
    let mut ctc_sizes = vec![0.0f64; k_folds];
    // Per (method index 0..3 = BPS/BKS/MKS/NONE): NTC, RTC, top-k hits.
    let mut ntc = vec![[0.0f64; 4]; k_folds];
    let mut rtc = vec![[0.0f64; 4]; k_folds];
    let mut method_topk = vec![[[0.0f64; 3]; 4]; k_folds];
    let mut production_errors = vec![0.0f64; k_folds];
    let mut ranking_errors = vec![0.0f64; k_folds];

    for (f, fold) in folds.iter().enumerate() {
        for e in fold {
            let candidates = e.combined(cfg.alpha);
            let entries: Vec<RankEntry> = candidates
                .iter()
                .map(|c| RankEntry {
                    surface: c.surface.clone(),
                    single_unit: c.units.iter().filter(|u| !u.is_null()).count() == 1,
                })
                .collect();
            let selection = select_method(&e.word, &entries, providers);
            let order: Vec<String> = match selection.method {
                Some(m) => rank(&e.word, &entries, m, providers, &rank_config)
                    .into_iter()
                    .map(|r| r.surface)
                    .collect(),
                // No method applies: fall back to model-score order.
                None => candidates.iter().map(|c| c.surface.clone()).collect(),
            };
            let has_correct = candidates.iter().any(|c| e.gold.contains(&c.surface));
            let midx = match selection.method {
                Some(SearchMethod::Bps) => 0,
                Some(SearchMethod::Bks) => 1,
                Some(SearchMethod::Mks) => 2,
                None => 3,
            };
            ntc[f][midx] += 1.0;
            if has_correct {
                rtc[f][midx] += 1.0;
            }
            for k in 0..3 {
                let hit = order.iter().take(k + 1).any(|s| e.gold.contains(s));
                if hit {
                    all_topk[f][k] += 1.0;
                    method_topk[f][midx][k] += 1.0;
                    if has_correct {
                        ctc_topk[f][k] += 1.0;
                    }
                }
            }
            if has_correct {
                ctc_sizes[f] += 1.0;
            } else {
                production_errors[f] += 1.0;
            }
            if has_correct && !order.first().is_some_and(|s| e.gold.contains(s)) {
                ranking_errors[f] += 1.0;
            }
        }
    }

    let n_per_fold: Vec<f64> = folds.iter().map(|f| f.len() as f64).collect();
    let frac = |num: &[f64], den: &[f64]| -> Vec<f64> {
        num.iter().zip(den).map(|(n, d)| if *d > 0.0 { n / d } else { 0.0 }).collect()
    };

    let mut accuracy = Table::per_fold("ranking accuracy", k_folds);
    for k in 0..3 {
        let hits: Vec<f64> = all_topk.iter().map(|t| t[k]).collect();
        accuracy.push_fold_row(format!("ALL Top-{}", k + 1), &frac(&hits, &n_per_fold));
    }
    for k in 0..3 {
        let hits: Vec<f64> = ctc_topk.iter().map(|t| t[k]).collect();
        accuracy.push_fold_row(format!("CTC Top-{}", k + 1), &frac(&hits, &ctc_sizes));
    }

    let mut methods = Table::per_fold("search method performance", k_folds);
    let method_names = ["BPS", "BKS", "MKS", "NONE"];
    for (m, name) in method_names.iter().enumerate() {
        let ntc_m: Vec<f64> = ntc.iter().map(|t| t[m]).collect();
        let rtc_m: Vec<f64> = rtc.iter().map(|t| t[m]).collect();
        methods.push_fold_row(format!("{name} NTC"), &ntc_m);
        methods.push_fold_row(format!("{name} RTC"), &rtc_m);
        for k in 0..3 {
            let hits: Vec<f64> = method_topk.iter().map(|t| t[m][k]).collect();
            methods.push_fold_row(format!("{name} Top-{}", k + 1), &frac(&hits, &ntc_m));
        }
    }

    let mut errors = Table::per_fold("error classification", k_folds);
    errors.push_fold_row("production errors", &production_errors);
    errors.push_fold_row("ranking errors", &ranking_errors);

    Ok(vec![accuracy, methods, errors])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::{generate, SyntheticConfig};

    fn small_dataset(size: usize) -> (Vec<TransliterationPair>, PronDict) {
        let data = generate(11, size, &SyntheticConfig::default()).unwrap();
        let dict = PronDict::from_entries(data.dict_entries);
        (data.pairs, dict)
    }

    fn fast_cfg() -> EvalConfig {
        EvalConfig {
            folds: 2,
            window_k: 1,
            mem: MemConfig { max_iter: 60, ..MemConfig::default() },
            ..EvalConfig::default()
        }
    }

    #[test]
    fn unknown_experiment_is_rejected() {
        let (pairs, dict) = small_dataset(10);
        let err = run_experiment("nope", &pairs, &dict, &EvalConfig::default(), None);
        assert!(matches!(err, Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn experiment_ids_all_dispatch() {
        // Just the cheapest experiment for each structural check; the
        // heavy sweeps get exercised in integration tests.
        assert_eq!(EXPERIMENT_IDS.len(), 7);
        assert!(EXPERIMENT_IDS.contains(&"hybrid_sweep"));
    }

    #[test]
    fn hybrid_sweep_has_all_alpha_rows_and_matching_endpoints() {
        let (pairs, dict) = small_dataset(60);
        let report = run_experiment("hybrid_sweep", &pairs, &dict, &fast_cfg(), None).unwrap();
        let table = report.table("hybrid interpolation sweep").unwrap();
        assert_eq!(table.rows.len(), 13);
        for step in 0..=10u32 {
            let label = format!("alpha={:.1}", f64::from(step) / 10.0);
            assert!(table.mean_of(&label).is_some(), "missing {label}");
        }
        // alpha=0 ranks by the grapheme model alone; alpha=1 by the
        // phoneme model alone.
        assert_eq!(table.mean_of("alpha=0.0"), table.mean_of("psi_G"));
        assert_eq!(table.mean_of("alpha=1.0"), table.mean_of("psi_P"));
    }

    #[test]
    fn comparison_reports_every_learner() {
        let (pairs, dict) = small_dataset(40);
        let report = run_experiment("comparison", &pairs, &dict, &fast_cfg(), None).unwrap();
        let table = report.table("model comparison").unwrap();
        for learner in ["MEM", "DTL", "MBL"] {
            for model in ["psi_G", "psi_P", "psi_C", "psi_G+P+C"] {
                let label = format!("{learner} {model}");
                assert!(table.mean_of(&label).is_some(), "missing {label}");
            }
        }
        assert!(table.mean_of("MEM psi_H").is_some());
        assert!(table.mean_of("DTL psi_H").is_none());
        // A union can never score below its members.
        let union = table.mean_of("MEM psi_G+P+C").unwrap();
        for member in ["MEM psi_G", "MEM psi_P", "MEM psi_C"] {
            assert!(union >= table.mean_of(member).unwrap() - 1e-12);
        }
    }

    #[test]
    fn dictionary_split_covers_all_words() {
        let (pairs, dict) = small_dataset(50);
        let report = run_experiment("dictionary", &pairs, &dict, &fast_cfg(), None).unwrap();
        let counts = report.table("registered/unregistered counts").unwrap();
        let reg: f64 = counts.rows[0].values[..2].iter().sum();
        let unreg: f64 = counts.rows[1].values[..2].iter().sum();
        assert_eq!(reg + unreg, 50.0);
        assert!(report.table("registered/unregistered word accuracy").is_some());
    }

    #[test]
    fn datasize_sweep_uses_shrunken_training_sets() {
        let (pairs, dict) = small_dataset(40);
        let report = run_experiment("datasize", &pairs, &dict, &fast_cfg(), None).unwrap();
        let table = report.table("training size sweep").unwrap();
        for percent in [20, 40, 60, 80, 100] {
            assert!(table.mean_of(&format!("{percent}% psi_G")).is_some());
        }
    }

    #[test]
    fn overlap_counts_are_consistent() {
        let (pairs, dict) = small_dataset(50);
        let report = run_experiment("overlap", &pairs, &dict, &fast_cfg(), None).unwrap();
        let table = report.table("correct-set overlap counts").unwrap();
        let g = table.mean_of("|G|").unwrap();
        let p = table.mean_of("|P|").unwrap();
        let inter = table.mean_of("|G∩P|").unwrap();
        let union = table.mean_of("|G∪P|").unwrap();
        assert!((g + p - inter - union).abs() < 1e-9, "inclusion-exclusion");
        assert!(table.mean_of("|G∪P∪H∪C|").unwrap() >= g);
        assert!(table.mean_of("|G∩P∩H∩C|").unwrap() <= inter + 1e-12);
    }

    #[test]
    fn rank_eval_with_gold_oracle_maximizes_ctc_top1() {
        let (pairs, dict) = small_dataset(60);
        let report = run_experiment("rank_eval", &pairs, &dict, &fast_cfg(), None).unwrap();
        let accuracy = report.table("ranking accuracy").unwrap();
        // The gold oracle gives every correct candidate the strictly
        // largest count, so whenever a correct candidate exists it ranks
        // first.
        assert_eq!(accuracy.mean_of("CTC Top-1"), Some(1.0));
        let all1 = accuracy.mean_of("ALL Top-1").unwrap();
        let all2 = accuracy.mean_of("ALL Top-2").unwrap();
        let all3 = accuracy.mean_of("ALL Top-3").unwrap();
        assert!(all1 <= all2 && all2 <= all3);
        let errors = report.table("error classification").unwrap();
        // With a perfect oracle all residual errors are production errors.
        assert_eq!(errors.mean_of("ranking errors"), Some(0.0));
        assert!(report.table("search method performance").is_some());
    }

    #[test]
    fn reports_are_byte_identical_for_same_seed() {
        let (pairs, dict) = small_dataset(40);
        let cfg = fast_cfg();
        let a = run_experiment("hybrid_sweep", &pairs, &dict, &cfg, None).unwrap();
        let b = run_experiment("hybrid_sweep", &pairs, &dict, &cfg, None).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }
}

//! Monotone 1:1-with-null alignment: EM-trained association tables plus
//! a Viterbi aligner that folds unmatched right-side symbols into the
//! preceding position's unit (this is how multi-letter target units like
//! `deu` arise).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::PronDict;
use crate::error::{Error, Result};
use crate::types::{AlignedTriple, Grapheme, Phoneme, TargetGrapheme, NULL_SYMBOL};

const SCORE_FLOOR: f64 = 1e-6;
const EM_TOL: f64 = 1e-4;
const EM_MAX_ITER: usize = 50;

/// Row-stochastic association weights; the null symbol `~` appears on
/// exactly one side of each entry (left null = inserted right symbol,
/// right null = deleted left symbol).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AssociationTable {
    scores: BTreeMap<String, BTreeMap<String, f64>>,
}

impl AssociationTable {
    pub fn score(&self, left: &str, right: &str) -> f64 {
        self.scores
            .get(left)
            .and_then(|row| row.get(right))
            .copied()
            .unwrap_or(0.0)
            .max(SCORE_FLOOR)
    }

    /// Raw weight without the floor; absent entries are 0.
    pub fn weight(&self, left: &str, right: &str) -> f64 {
        self.scores.get(left).and_then(|row| row.get(right)).copied().unwrap_or(0.0)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&String, &BTreeMap<String, f64>)> {
        self.scores.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    /// left[i] links to right[j]
    Link,
    /// left[i] links to null
    LeftNull,
    /// right[j] links to null (later folded into the preceding unit)
    RightNull,
}

/// Trains an association table by EM over monotone 1:1-with-null
/// alignments. Deterministic: uniform initialization, ordered maps.
pub fn train_alignment(pairs: &[(Vec<String>, Vec<String>)]) -> Result<AssociationTable> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for (a, b) in pairs {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyCorpus);
        }
    }
    // Uniform initialization over every observed right symbol plus null.
    let mut right_inventory: Vec<String> = Vec::new();
    let mut left_inventory: Vec<String> = Vec::new();
    for (a, b) in pairs {
        for s in a {
            if !left_inventory.contains(s) {
                left_inventory.push(s.clone());
            }
        }
        for s in b {
            if !right_inventory.contains(s) {
                right_inventory.push(s.clone());
            }
        }
    }
    let mut table = AssociationTable::default();
    let uniform = 1.0 / (right_inventory.len() + 1) as f64;
    for left in left_inventory.iter().chain(std::iter::once(&NULL_SYMBOL.to_string())) {
        let row = table.scores.entry(left.clone()).or_default();
        for right in &right_inventory {
            row.insert(right.clone(), uniform);
        }
        if left != NULL_SYMBOL {
            row.insert(NULL_SYMBOL.to_string(), uniform);
        }
    }
    // Null row has no null->null entry; renormalize it.
    normalize_rows(&mut table);

    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..EM_MAX_ITER {
        let mut counts: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        let mut ll = 0.0;
        for (a, b) in pairs {
            ll += expected_counts(a, b, &table, &mut counts);
        }
        // The probability floor makes the M-step slightly inexact, so
        // allow a tiny relative dip in the log-likelihood.
        debug_assert!(
            ll >= prev_ll - 1e-6 * (1.0 + prev_ll.abs()),
            "EM log-likelihood decreased: {prev_ll} -> {ll}"
        );
        prev_ll = ll;
        let mut next = AssociationTable { scores: counts };
        normalize_rows(&mut next);
        let delta = max_delta(&table, &next);
        table = next;
        if delta < EM_TOL {
            break;
        }
    }
    Ok(table)
}

fn normalize_rows(table: &mut AssociationTable) {
    for row in table.scores.values_mut() {
        let total: f64 = row.values().sum();
        if total > 0.0 {
            for v in row.values_mut() {
                *v /= total;
            }
        }
    }
}

fn max_delta(old: &AssociationTable, new: &AssociationTable) -> f64 {
    let mut delta: f64 = 0.0;
    for (left, row) in &new.scores {
        for (right, v) in row {
            delta = delta.max((v - old.weight(left, right)).abs());
        }
    }
    for (left, row) in &old.scores {
        for (right, v) in row {
            delta = delta.max((v - new.weight(left, right)).abs());
        }
    }
    delta
}

// Lattice states carry the last move taken. Deletions directly adjacent
// to insertions are forbidden (LeftNull <-> RightNull transitions): such
// a pair is always expressible as a link, and allowing it opens a
// degenerate all-null EM fixed point.
const STATE_LINK: usize = 0; // also the start state
const STATE_LEFT_NULL: usize = 1;
const STATE_RIGHT_NULL: usize = 2;

fn move_allowed(from: usize, mv: Move) -> bool {
    match mv {
        Move::Link => true,
        Move::LeftNull => from != STATE_RIGHT_NULL,
        Move::RightNull => from != STATE_LEFT_NULL,
    }
}

/// Forward-backward over the monotone alignment lattice; accumulates
/// posterior link counts and returns the pair's log-likelihood.
fn expected_counts(
    a: &[String],
    b: &[String],
    table: &AssociationTable,
    counts: &mut BTreeMap<String, BTreeMap<String, f64>>,
) -> f64 {
    let n = a.len();
    let m = b.len();
    let idx = |i: usize, j: usize, s: usize| (i * (m + 1) + j) * 3 + s;
    let moves = |i: usize, j: usize| {
        let mut out: Vec<(Move, usize, usize, usize, f64)> = Vec::with_capacity(3);
        if i < n && j < m {
            out.push((Move::Link, i + 1, j + 1, STATE_LINK, table.score(&a[i], &b[j])));
        }
        if i < n {
            out.push((Move::LeftNull, i + 1, j, STATE_LEFT_NULL, table.score(&a[i], NULL_SYMBOL)));
        }
        if j < m {
            out.push((Move::RightNull, i, j + 1, STATE_RIGHT_NULL, table.score(NULL_SYMBOL, &b[j])));
        }
        out
    };
    let mut fwd = vec![0.0f64; (n + 1) * (m + 1) * 3];
    fwd[idx(0, 0, STATE_LINK)] = 1.0;
    for i in 0..=n {
        for j in 0..=m {
            for s in 0..3 {
                let cur = fwd[idx(i, j, s)];
                if cur == 0.0 {
                    continue;
                }
                for (mv, ni, nj, ns, w) in moves(i, j) {
                    if move_allowed(s, mv) {
                        fwd[idx(ni, nj, ns)] += cur * w;
                    }
                }
            }
        }
    }
    let total: f64 = (0..3).map(|s| fwd[idx(n, m, s)]).sum();
    if total == 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut bwd = vec![0.0f64; (n + 1) * (m + 1) * 3];
    for s in 0..3 {
        bwd[idx(n, m, s)] = 1.0;
    }
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            for s in 0..3 {
                if i == n && j == m {
                    continue;
                }
                let mut acc = 0.0;
                for (mv, ni, nj, ns, w) in moves(i, j) {
                    if move_allowed(s, mv) {
                        acc += w * bwd[idx(ni, nj, ns)];
                    }
                }
                bwd[idx(i, j, s)] = acc;
            }
        }
    }
    let mut add = |left: &str, right: &str, v: f64| {
        *counts.entry(left.to_string()).or_default().entry(right.to_string()).or_insert(0.0) += v;
    };
    for i in 0..=n {
        for j in 0..=m {
            for s in 0..3 {
                let f = fwd[idx(i, j, s)];
                if f == 0.0 {
                    continue;
                }
                for (mv, ni, nj, ns, w) in moves(i, j) {
                    if !move_allowed(s, mv) {
                        continue;
                    }
                    let posterior = f * w * bwd[idx(ni, nj, ns)] / total;
                    match mv {
                        Move::Link => add(&a[i], &b[j], posterior),
                        Move::LeftNull => add(&a[i], NULL_SYMBOL, posterior),
                        Move::RightNull => add(NULL_SYMBOL, &b[j], posterior),
                    }
                }
            }
        }
    }
    total.ln()
}

/// Viterbi alignment. Returns one group of right-side symbols per left
/// position: empty group = null link, multi-symbol group = folded
/// insertions. Flattening the groups reproduces `b` exactly.
pub fn align_pair(a: &[String], b: &[String], table: &AssociationTable) -> Vec<Vec<String>> {
    assert!(!a.is_empty() && !b.is_empty(), "align_pair requires non-empty sequences");
    let n = a.len();
    let m = b.len();
    let idx = |i: usize, j: usize, s: usize| (i * (m + 1) + j) * 3 + s;
    let mut best = vec![f64::NEG_INFINITY; (n + 1) * (m + 1) * 3];
    let mut back: Vec<Option<usize>> = vec![None; (n + 1) * (m + 1) * 3];
    best[idx(0, 0, STATE_LINK)] = 0.0;
    for i in 0..=n {
        for j in 0..=m {
            for s in 0..3 {
                let cur = best[idx(i, j, s)];
                if cur == f64::NEG_INFINITY {
                    continue;
                }
                // Candidate order encodes the tie-break: non-null links first.
                let mut candidates: Vec<(usize, Move, f64)> = Vec::with_capacity(3);
                if i < n && j < m && move_allowed(s, Move::Link) {
                    candidates.push((
                        idx(i + 1, j + 1, STATE_LINK),
                        Move::Link,
                        table.score(&a[i], &b[j]).ln(),
                    ));
                }
                if i < n && move_allowed(s, Move::LeftNull) {
                    candidates.push((
                        idx(i + 1, j, STATE_LEFT_NULL),
                        Move::LeftNull,
                        table.score(&a[i], NULL_SYMBOL).ln(),
                    ));
                }
                if j < m && move_allowed(s, Move::RightNull) {
                    candidates.push((
                        idx(i, j + 1, STATE_RIGHT_NULL),
                        Move::RightNull,
                        table.score(NULL_SYMBOL, &b[j]).ln(),
                    ));
                }
                for (target, _, w) in candidates {
                    let score = cur + w;
                    if score > best[target] {
                        best[target] = score;
                        back[target] = Some(idx(i, j, s));
                    }
                }
            }
        }
    }
    // Recover the move sequence from the best final state to the origin.
    let mut end = STATE_LINK;
    for s in 1..3 {
        if best[idx(n, m, s)] > best[idx(n, m, end)] {
            end = s;
        }
    }
    let mut moves = Vec::new();
    let mut cur = idx(n, m, end);
    let origin = idx(0, 0, STATE_LINK);
    while cur != origin {
        let s = cur % 3;
        let mv = match s {
            STATE_LINK => Move::Link,
            STATE_LEFT_NULL => Move::LeftNull,
            _ => Move::RightNull,
        };
        moves.push(mv);
        cur = back[cur].expect("full lattice is reachable");
    }
    moves.reverse();
    // Fold: each left position takes its linked symbol; right-null
    // symbols merge into the most recent left position (or the first,
    // when they precede every link).
    let mut groups: Vec<Vec<String>> = vec![Vec::new(); n];
    let mut leading: Vec<String> = Vec::new();
    let (mut ai, mut bi) = (0usize, 0usize);
    let mut last_left: Option<usize> = None;
    for mv in moves {
        match mv {
            Move::Link => {
                groups[ai].push(b[bi].clone());
                last_left = Some(ai);
                ai += 1;
                bi += 1;
            }
            Move::LeftNull => {
                last_left = Some(ai);
                ai += 1;
            }
            Move::RightNull => {
                match last_left {
                    Some(pos) => groups[pos].push(b[bi].clone()),
                    None => leading.push(b[bi].clone()),
                }
                bi += 1;
            }
        }
    }
    if !leading.is_empty() {
        leading.extend(groups[0].drain(..));
        groups[0] = leading;
    }
    groups
}

fn grapheme_symbols(word: &[Grapheme]) -> Vec<String> {
    word.iter().map(|g| g.as_char().to_string()).collect()
}

fn phoneme_symbols(phones: &[Phoneme]) -> Vec<String> {
    phones.iter().map(|p| p.symbol().to_string()).collect()
}

fn target_letter_symbols(target: &str) -> Vec<String> {
    target.chars().filter(|&c| c != '-').map(|c| c.to_string()).collect()
}

/// Aligns a pronunciation onto a word, one phoneme unit per grapheme
/// (null `~` for silent letters, `+`-joined compounds for fused phones).
pub fn align_phonemes(
    word: &[Grapheme],
    phones: &[Phoneme],
    table: &AssociationTable,
) -> Result<Vec<Phoneme>> {
    let groups = align_pair(&grapheme_symbols(word), &phoneme_symbols(phones), table);
    groups
        .iter()
        .map(|g| {
            if g.is_empty() {
                Ok(Phoneme::null())
            } else {
                Phoneme::new(&g.join("+"))
            }
        })
        .collect()
}

/// Aligns a romanized target string onto a word, one target-grapheme
/// unit per position.
pub fn align_targets(
    word: &[Grapheme],
    target: &str,
    table: &AssociationTable,
) -> Result<Vec<TargetGrapheme>> {
    let letters = target_letter_symbols(target);
    if letters.is_empty() {
        return Err(Error::InvalidSymbol(format!("target {target:?} has no letters")));
    }
    let groups = align_pair(&grapheme_symbols(word), &letters, table);
    Ok(groups
        .iter()
        .map(|g| {
            if g.is_empty() {
                TargetGrapheme::null()
            } else {
                TargetGrapheme::new(&g.concat()).expect("non-empty unit")
            }
        })
        .collect())
}

/// Association tables for both alignment problems, trained together.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignmentTables {
    pub grapheme_phoneme: AssociationTable,
    pub grapheme_target: AssociationTable,
}

/// Trains the grapheme-phoneme table from dictionary entries for the
/// corpus words and the grapheme-target table from the pairs themselves.
pub fn train_tables(
    pairs: &[crate::types::TransliterationPair],
    dict: &PronDict,
) -> Result<AlignmentTables> {
    let mut gp: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    let mut st: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    for pair in pairs {
        let word = pair.source_string();
        if let Some(variants) = dict.lookup(&word) {
            for variant in variants {
                gp.push((grapheme_symbols(&pair.source), phoneme_symbols(variant)));
            }
        }
        for target in &pair.targets {
            let letters = target_letter_symbols(target);
            if !letters.is_empty() {
                st.push((grapheme_symbols(&pair.source), letters));
            }
        }
    }
    if gp.is_empty() {
        // No corpus word is in the dictionary; fall back to the whole dict.
        for (word, variants) in dict.entries() {
            let graphemes: Vec<String> = word.chars().map(|c| c.to_string()).collect();
            for variant in variants {
                gp.push((graphemes.clone(), phoneme_symbols(variant)));
            }
        }
    }
    let grapheme_phoneme = if gp.is_empty() {
        AssociationTable::default()
    } else {
        train_alignment(&gp)?
    };
    let grapheme_target = train_alignment(&st)?;
    Ok(AlignmentTables { grapheme_phoneme, grapheme_target })
}

/// Builds one training triple per (word, target-variant) combination.
/// Words absent from the dictionary get all-null phonemes and the
/// `phonemes_missing` flag unless a g2p fallback is supplied.
pub fn build_triples(
    pairs: &[crate::types::TransliterationPair],
    dict: &PronDict,
    tables: &AlignmentTables,
    g2p: Option<&dyn Fn(&[Grapheme]) -> Vec<Phoneme>>,
) -> Result<Vec<AlignedTriple>> {
    let mut triples = Vec::new();
    for pair in pairs {
        let word = pair.source_string();
        let phonemes = match dict.lookup(&word) {
            Some(variants) => Some(align_phonemes(
                &pair.source,
                &variants[0],
                &tables.grapheme_phoneme,
            )?),
            None => g2p.map(|f| f(&pair.source)),
        };
        let missing = phonemes.is_none();
        let phonemes =
            phonemes.unwrap_or_else(|| vec![Phoneme::null(); pair.source.len()]);
        if phonemes.len() != pair.source.len() {
            return Err(Error::LengthMismatch {
                context: format!("g2p output for {word:?}"),
            });
        }
        for target in &pair.targets {
            let units = align_targets(&pair.source, target, &tables.grapheme_target)?;
            let mut triple = AlignedTriple::new(pair.source.clone(), phonemes.clone(), units)?;
            triple.phonemes_missing = missing;
            triples.push(triple);
        }
    }
    Ok(triples)
}

//! Windowed classification instances and the maximum-entropy feature
//! function expansion.
//!
//! Instances hold one slot per (feature type, relative position) inside
//! the window; positions past the word edges carry the boundary symbol
//! `$`, and feature types a component function does not use are simply
//! absent. The previous-output feature is `f_P` at positions -k..-1 for
//! the grapheme-to-phoneme component and `f_T` at -k..-1 for the rest.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::types::{AlignedTriple, Grapheme, Phoneme};

pub const BOUNDARY: &str = "$";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureType {
    S,
    Stype,
    P,
    Ptype,
    T,
}

impl FeatureType {
    /// Feature-type group for combination purposes: S/Stype, P/Ptype, T.
    pub fn group(self) -> u8 {
        match self {
            FeatureType::S | FeatureType::Stype => 0,
            FeatureType::P | FeatureType::Ptype => 1,
            FeatureType::T => 2,
        }
    }
}

/// The four component functions of the transliteration framework.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    /// graphemes -> phonemes
    SP,
    /// graphemes -> target graphemes
    ST,
    /// phonemes -> target graphemes
    PT,
    /// grapheme-phoneme pairs -> target graphemes
    SPT,
}

impl ComponentKind {
    pub fn name(self) -> &'static str {
        match self {
            ComponentKind::SP => "SP",
            ComponentKind::ST => "ST",
            ComponentKind::PT => "PT",
            ComponentKind::SPT => "SPT",
        }
    }

    /// The feature type that carries previous outputs at -k..-1.
    pub fn output_feature(self) -> FeatureType {
        match self {
            ComponentKind::SP => FeatureType::P,
            _ => FeatureType::T,
        }
    }

    pub fn uses_grapheme_context(self) -> bool {
        !matches!(self, ComponentKind::PT)
    }

    pub fn uses_phoneme_context(self) -> bool {
        matches!(self, ComponentKind::PT | ComponentKind::SPT)
    }
}

impl FromStr for ComponentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Ok(ComponentKind::SP),
            "st" => Ok(ComponentKind::ST),
            "pt" => Ok(ComponentKind::PT),
            "spt" => Ok(ComponentKind::SPT),
            other => Err(Error::Config(format!("unknown component kind {other:?}"))),
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One filled context slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub ftype: FeatureType,
    pub pos: i8,
    pub symbol: String,
}

/// A classification event: context slots plus the output label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instance {
    pub slots: Vec<Slot>,
    pub label: String,
}

impl Instance {
    pub fn slot(&self, ftype: FeatureType, pos: i8) -> Option<&str> {
        self.slots
            .iter()
            .find(|s| s.ftype == ftype && s.pos == pos)
            .map(|s| s.symbol.as_str())
    }
}

fn push_window(
    slots: &mut Vec<Slot>,
    ftype: FeatureType,
    positions: std::ops::RangeInclusive<i32>,
    i: usize,
    len: usize,
    at: &dyn Fn(usize) -> String,
) {
    for off in positions {
        let j = i as i32 + off;
        let symbol = if j < 0 || j >= len as i32 { BOUNDARY.to_string() } else { at(j as usize) };
        slots.push(Slot { ftype, pos: off as i8, symbol });
    }
}

/// Builds the instance for position `i`. `prev_outputs` are the outputs
/// already produced (gold at training time, predicted when decoding);
/// only its last `k` items are consulted.
pub fn build_instance(
    kind: ComponentKind,
    k: usize,
    i: usize,
    s: &[Grapheme],
    p: &[Phoneme],
    prev_outputs: &[String],
) -> Instance {
    let k_i32 = k as i32;
    let len = if kind == ComponentKind::PT { p.len() } else { s.len() };
    let mut slots = Vec::new();
    if kind.uses_grapheme_context() {
        push_window(&mut slots, FeatureType::S, -k_i32..=k_i32, i, s.len(), &|j| {
            s[j].as_char().to_string()
        });
        push_window(&mut slots, FeatureType::Stype, -k_i32..=k_i32, i, s.len(), &|j| {
            s[j].class().tag().to_string()
        });
    }
    if kind.uses_phoneme_context() {
        push_window(&mut slots, FeatureType::P, -k_i32..=k_i32, i, p.len(), &|j| {
            p[j].symbol().to_string()
        });
        push_window(&mut slots, FeatureType::Ptype, -k_i32..=k_i32, i, p.len(), &|j| {
            p[j].class().tag().to_string()
        });
    }
    // Previous outputs at -k..-1.
    let out_type = kind.output_feature();
    push_window(&mut slots, out_type, -k_i32..=-1, i, len.min(prev_outputs.len()), &|j| {
        prev_outputs[j].clone()
    });
    slots.sort();
    Instance { slots, label: String::new() }
}

/// One instance per position of the triple, previous-output slots filled
/// from gold outputs.
pub fn make_instances(triple: &AlignedTriple, kind: ComponentKind, k: usize) -> Vec<Instance> {
    assert!(k >= 1, "window size must be at least 1");
    let s = triple.graphemes();
    let p = triple.phonemes();
    let t = triple.targets();
    let mut gold_outputs: Vec<String> = Vec::with_capacity(s.len());
    let mut out = Vec::with_capacity(s.len());
    for i in 0..triple.len() {
        let mut inst = build_instance(kind, k, i, s, p, &gold_outputs);
        let label = match kind {
            ComponentKind::SP => p[i].symbol().to_string(),
            _ => t[i].unit().to_string(),
        };
        inst.label = label.clone();
        gold_outputs.push(label);
        out.push(inst);
    }
    out
}

/// One activating condition of a feature function history.
pub type Condition = Slot;

/// A feature-function history: a sorted, duplicate-free set of conditions.
pub type History = Vec<Condition>;

/// Expands an instance into every feature-function history:
/// singletons, pairs/triples within one feature type, and pairs/triples
/// across the three type-group pairings (S/Stype x P/Ptype, S/Stype x T,
/// P/Ptype x T), capped at arity 3.
pub fn expand_feature_functions(instance: &Instance) -> Vec<History> {
    expand_with_arity(instance, 3)
}

pub fn expand_with_arity(instance: &Instance, max_arity: usize) -> Vec<History> {
    let slots = &instance.slots;
    let mut out: Vec<History> = Vec::new();
    // (a) singletons
    for s in slots {
        out.push(vec![s.clone()]);
    }
    if max_arity < 2 {
        return out;
    }
    // (b) pairs and triples within one feature type
    for ftype in [FeatureType::S, FeatureType::Stype, FeatureType::P, FeatureType::Ptype, FeatureType::T] {
        let same: Vec<&Slot> = slots.iter().filter(|s| s.ftype == ftype).collect();
        push_combos(&mut out, &same, max_arity, |_| true);
    }
    // (c) pairs and triples across each type-group pairing, at least one
    // condition from each side.
    for (g1, g2) in [(0u8, 1u8), (0, 2), (1, 2)] {
        let pool: Vec<&Slot> =
            slots.iter().filter(|s| s.ftype.group() == g1 || s.ftype.group() == g2).collect();
        push_combos(&mut out, &pool, max_arity, |combo| {
            combo.iter().any(|s| s.ftype.group() == g1) && combo.iter().any(|s| s.ftype.group() == g2)
        });
    }
    out
}

fn push_combos(out: &mut Vec<History>, pool: &[&Slot], max_arity: usize, keep: impl Fn(&[&Slot]) -> bool) {
    let n = pool.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if keep(&[pool[i], pool[j]]) {
                out.push(vec![pool[i].clone(), pool[j].clone()]);
            }
            if max_arity >= 3 {
                for l in (j + 1)..n {
                    if keep(&[pool[i], pool[j], pool[l]]) {
                        out.push(vec![pool[i].clone(), pool[j].clone(), pool[l].clone()]);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{word_to_graphemes, Phoneme, TargetGrapheme};
    use std::collections::HashSet;

    fn board_triple() -> AlignedTriple {
        let s = word_to_graphemes("board").unwrap();
        let p: Vec<Phoneme> =
            ["B", "AO", "~", "R", "D"].iter().map(|x| Phoneme::new(x).unwrap()).collect();
        let t: Vec<TargetGrapheme> = ["b", "o", "~", "~", "deu"]
            .iter()
            .map(|x| TargetGrapheme::new(x).unwrap())
            .collect();
        AlignedTriple::new(s, p, t).unwrap()
    }

    #[test]
    fn spt_first_position_matches_framework_row() {
        // Table-4-shaped check for position 0 of board, k=3.
        let inst = &make_instances(&board_triple(), ComponentKind::SPT, 3)[0];
        for pos in -3..0 {
            assert_eq!(inst.slot(FeatureType::S, pos), Some("$"));
            assert_eq!(inst.slot(FeatureType::P, pos), Some("$"));
            assert_eq!(inst.slot(FeatureType::T, pos), Some("$"));
        }
        assert_eq!(inst.slot(FeatureType::S, 0), Some("b"));
        assert_eq!(inst.slot(FeatureType::P, 0), Some("B"));
        assert_eq!(
            (1..=3).map(|i| inst.slot(FeatureType::S, i).unwrap()).collect::<Vec<_>>(),
            vec!["o", "a", "r"]
        );
        assert_eq!(
            (1..=3).map(|i| inst.slot(FeatureType::Stype, i).unwrap()).collect::<Vec<_>>(),
            vec!["V", "V", "C"]
        );
        assert_eq!(
            (1..=3).map(|i| inst.slot(FeatureType::P, i).unwrap()).collect::<Vec<_>>(),
            vec!["AO", "~", "R"]
        );
        assert_eq!(
            (1..=3).map(|i| inst.slot(FeatureType::Ptype, i).unwrap()).collect::<Vec<_>>(),
            vec!["V", "SIL", "C"]
        );
        assert_eq!(inst.label, "b");
        assert_eq!(inst.slot(FeatureType::T, 0), None, "f_T has no current slot");
    }

    #[test]
    fn sp_uses_phonemes_only_as_previous_outputs() {
        let insts = make_instances(&board_triple(), ComponentKind::SP, 3);
        let first = &insts[0];
        assert_eq!(first.label, "B");
        assert_eq!(first.slot(FeatureType::P, 0), None, "f_P right context is unused in SP");
        assert_eq!(first.slot(FeatureType::P, 1), None);
        assert_eq!(first.slot(FeatureType::P, -1), Some("$"));
        // Position 2 sees the gold previous phonemes.
        let third = &insts[2];
        assert_eq!(third.slot(FeatureType::P, -1), Some("AO"));
        assert_eq!(third.slot(FeatureType::P, -2), Some("B"));
        assert_eq!(third.label, "~");
    }

    #[test]
    fn single_letter_word_saturates_boundaries() {
        let s = word_to_graphemes("a").unwrap();
        let p = vec![Phoneme::new("AH").unwrap()];
        let t = vec![TargetGrapheme::new("a").unwrap()];
        let triple = AlignedTriple::new(s, p, t).unwrap();
        let inst = &make_instances(&triple, ComponentKind::SPT, 2)[0];
        for slot in &inst.slots {
            if slot.pos != 0 {
                assert_eq!(slot.symbol, "$", "slot {slot:?}");
            }
        }
    }

    #[test]
    fn pt_instance_has_no_grapheme_slots() {
        let inst = &make_instances(&board_triple(), ComponentKind::PT, 3)[0];
        assert!(inst.slots.iter().all(|s| s.ftype != FeatureType::S && s.ftype != FeatureType::Stype));
        assert_eq!(inst.label, "b");
    }

    #[test]
    fn determinism_and_totality() {
        let triple = board_triple();
        let a = make_instances(&triple, ComponentKind::SPT, 3);
        let b = make_instances(&triple, ComponentKind::SPT, 3);
        assert_eq!(a, b);
        assert_eq!(a.len(), triple.len());
    }

    #[test]
    fn expansion_contains_paper_examples() {
        let inst = &make_instances(&board_triple(), ComponentKind::SPT, 3)[0];
        let histories = expand_feature_functions(inst);
        let pair = vec![
            Slot { ftype: FeatureType::S, pos: 0, symbol: "b".into() },
            Slot { ftype: FeatureType::P, pos: 0, symbol: "B".into() },
        ];
        assert!(histories.contains(&pair), "missing {{f_S@0=b, f_P@0=/B/}}");
        let singleton = vec![Slot { ftype: FeatureType::S, pos: -1, symbol: "$".into() }];
        assert!(histories.contains(&singleton), "missing {{f_S@-1=$}}");
    }

    #[test]
    fn expansion_is_duplicate_free_and_matches_brute_force_count() {
        // k=1, 1-letter word: the oracle enumerates all subsets of size
        // 1..=3 and keeps those admitted by the expansion rules.
        let s = word_to_graphemes("a").unwrap();
        let p = vec![Phoneme::new("AH").unwrap()];
        let t = vec![TargetGrapheme::new("a").unwrap()];
        let triple = AlignedTriple::new(s, p, t).unwrap();
        let inst = &make_instances(&triple, ComponentKind::SPT, 1)[0];
        let histories = expand_feature_functions(inst);
        let set: HashSet<&History> = histories.iter().collect();
        assert_eq!(set.len(), histories.len(), "duplicate histories");

        let slots = &inst.slots;
        let mut expected = 0usize;
        let n = slots.len();
        let admissible = |combo: &[&Slot]| -> bool {
            if combo.len() == 1 {
                return true;
            }
            let same_type = combo.iter().all(|s| s.ftype == combo[0].ftype);
            if same_type {
                return true;
            }
            let groups: HashSet<u8> = combo.iter().map(|s| s.ftype.group()).collect();
            groups.len() == 2
        };
        for i in 0..n {
            expected += 1;
            for j in (i + 1)..n {
                if admissible(&[&slots[i], &slots[j]]) {
                    expected += 1;
                }
                for l in (j + 1)..n {
                    if admissible(&[&slots[i], &slots[j], &slots[l]]) {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(histories.len(), expected);
    }
}

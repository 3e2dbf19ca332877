//! Seeded synthetic dataset generator. Letters fall into three rule
//! classes so each transliteration model has a designed failure mode:
//!
//! - grapheme-only letters: two letters share one phoneme but map to
//!   different target units, so the phoneme layer underdetermines the
//!   output;
//! - phoneme-only letters: one letter takes one of two pronunciations
//!   per word (recorded in the synthetic dictionary), and the target
//!   unit follows the pronunciation, so the letter alone
//!   underdetermines the output;
//! - correspondence letters: the target unit depends jointly on the
//!   letter and its pronunciation, so only a model reading both layers
//!   can resolve it.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::types::{word_to_graphemes, Phoneme, PronEntry, TransliterationPair};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    /// Fraction of positions drawn from grapheme-only letters.
    pub grapheme_only: f64,
    /// Fraction of positions drawn from phoneme-only letters.
    pub phoneme_only: f64,
    pub min_len: usize,
    pub max_len: usize,
    /// Fraction of words entered into the synthetic dictionary.
    pub dict_coverage: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            grapheme_only: 0.3,
            phoneme_only: 0.3,
            min_len: 3,
            max_len: 6,
            dict_coverage: 0.9,
        }
    }
}

/// Grapheme-only rules: (letter, phoneme, target unit). Letter pairs
/// share a phoneme.
const GRAPHEME_ONLY: [(char, &str, &str); 8] = [
    ('b', "B", "ba"),
    ('p', "B", "pa"),
    ('d', "D", "da"),
    ('t', "D", "ta"),
    ('g', "G", "ga"),
    ('j', "G", "ja"),
    ('m', "M", "ma"),
    ('n', "M", "na"),
];

/// Phoneme-only rules: (letter, [(phoneme, target unit); 2]). The word
/// decides which pronunciation applies.
const PHONEME_ONLY: [(char, [(&str, &str); 2]); 4] = [
    ('a', [("AA", "a"), ("AE", "ae")]),
    ('e', [("EH", "e"), ("IY", "i")]),
    ('o', [("AO", "o"), ("OW", "u")]),
    ('i', [("IH", "yi"), ("AY", "ai")]),
];

/// Correspondence rules: (letter, [(phoneme, target unit); 2]). Letter
/// pairs share both pronunciations, and the unit differs across all four
/// (letter, phoneme) combinations.
const CORRESPONDENCE: [(char, [(&str, &str); 2]); 4] = [
    ('c', [("K", "ka"), ("CH", "cha")]),
    ('k', [("K", "keu"), ("CH", "chi")]),
    ('s', [("S", "seu"), ("SH", "syu")]),
    ('z', [("S", "jeu"), ("SH", "jyu")]),
];

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub pairs: Vec<TransliterationPair>,
    pub dict_entries: Vec<PronEntry>,
}

/// Generates `size` distinct words. Deterministic for a given seed and
/// config.
pub fn generate(seed: u64, size: usize, config: &SyntheticConfig) -> Result<SyntheticDataset> {
    if size == 0 {
        return Err(Error::Config("synthetic size must be positive".into()));
    }
    if config.grapheme_only + config.phoneme_only > 1.0 {
        return Err(Error::Config("rule fractions exceed 1".into()));
    }
    if config.min_len == 0 || config.min_len > config.max_len {
        return Err(Error::Config("bad length range".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut pairs = Vec::with_capacity(size);
    let mut dict_entries = Vec::with_capacity(size);
    let mut attempts = 0usize;
    while pairs.len() < size {
        attempts += 1;
        if attempts > size * 200 {
            return Err(Error::Config(format!(
                "could not generate {size} distinct words (alphabet too small for this length range)"
            )));
        }
        let len = rng.gen_range(config.min_len..=config.max_len);
        let mut word = String::with_capacity(len);
        let mut phones: Vec<Phoneme> = Vec::with_capacity(len);
        let mut units: Vec<&str> = Vec::with_capacity(len);
        for _ in 0..len {
            let roll: f64 = rng.gen();
            if roll < config.grapheme_only {
                let (c, p, u) = GRAPHEME_ONLY[rng.gen_range(0..GRAPHEME_ONLY.len())];
                word.push(c);
                phones.push(Phoneme::new(p).expect("rule table phoneme"));
                units.push(u);
            } else if roll < config.grapheme_only + config.phoneme_only {
                let (c, variants) = PHONEME_ONLY[rng.gen_range(0..PHONEME_ONLY.len())];
                let (p, u) = variants[rng.gen_range(0..2)];
                word.push(c);
                phones.push(Phoneme::new(p).expect("rule table phoneme"));
                units.push(u);
            } else {
                let (c, variants) = CORRESPONDENCE[rng.gen_range(0..CORRESPONDENCE.len())];
                let (p, u) = variants[rng.gen_range(0..2)];
                word.push(c);
                phones.push(Phoneme::new(p).expect("rule table phoneme"));
                units.push(u);
            }
        }
        // Draw the dictionary-membership roll even for rejected
        // duplicates so acceptance is independent of collision history.
        let in_dict = rng.gen_bool(config.dict_coverage.clamp(0.0, 1.0));
        if !seen.insert(word.clone()) {
            continue;
        }
        let source = word_to_graphemes(&word).expect("alphabet is a-z");
        let target = units.join("-");
        pairs.push(TransliterationPair { source: source.clone(), targets: BTreeSet::from([target]) });
        if in_dict {
            dict_entries.push(PronEntry { word: source, variants: vec![phones] });
        }
    }
    Ok(SyntheticDataset { pairs, dict_entries })
}

/// Writes the dictionary entries in the standard pronunciation-dictionary
/// text format (uppercase word, space-separated phones).
pub fn write_pron_dict(entries: &[PronEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for entry in entries {
        let word = entry.word_string().to_ascii_uppercase();
        for (i, variant) in entry.variants.iter().enumerate() {
            if i == 0 {
                write!(out, "{word} ").unwrap();
            } else {
                write!(out, "{word}({}) ", i + 1).unwrap();
            }
            let phones: Vec<&str> = variant.iter().map(|p| p.symbol()).collect();
            writeln!(out, " {}", phones.join(" ")).unwrap();
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

//! Domain vocabulary shared by every other module: graphemes, phonemes,
//! target graphemes, symbol classes, and the aligned training triple.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The closed ARPAbet inventory with stress digits stripped (39 phones).
pub const ARPABET: [&str; 39] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH",
    "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH", "UH",
    "UW", "V", "W", "Y", "Z", "ZH",
];

const ARPABET_VOWELS: [&str; 15] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW",
];

/// The null symbol, written `~` for target graphemes and `/~/` for phonemes.
pub const NULL_SYMBOL: &str = "~";

/// Symbol class tags used as `f_Stype` / `f_Ptype` feature values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymbolClass {
    Consonant,
    Vowel,
    SemiVowel,
    Silence,
}

impl SymbolClass {
    pub fn tag(self) -> &'static str {
        match self {
            SymbolClass::Consonant => "C",
            SymbolClass::Vowel => "V",
            SymbolClass::SemiVowel => "SV",
            SymbolClass::Silence => "SIL",
        }
    }
}

/// One lowercase Latin letter of the source word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Grapheme(char);

impl Grapheme {
    pub fn new(c: char) -> Result<Self> {
        if c.is_ascii_lowercase() {
            Ok(Grapheme(c))
        } else {
            Err(Error::InvalidSymbol(format!("grapheme must be a-z, got {c:?}")))
        }
    }

    pub fn as_char(self) -> char {
        self.0
    }

    pub fn class(self) -> SymbolClass {
        match self.0 {
            'a' | 'e' | 'i' | 'o' | 'u' => SymbolClass::Vowel,
            _ => SymbolClass::Consonant,
        }
    }
}

impl fmt::Display for Grapheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ARPAbet phone, the null phoneme `~`, or a `+`-joined compound of
/// phones fused onto one grapheme position by the aligner (e.g. `K+S`
/// for the letter *x*).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Phoneme(String);

impl Phoneme {
    pub fn new(symbol: &str) -> Result<Self> {
        if symbol == NULL_SYMBOL {
            return Ok(Phoneme(symbol.to_string()));
        }
        if symbol.is_empty() {
            return Err(Error::InvalidSymbol("empty phoneme".into()));
        }
        for part in symbol.split('+') {
            if !ARPABET.contains(&part) {
                return Err(Error::InvalidSymbol(format!("unknown phoneme {symbol:?}")));
            }
        }
        Ok(Phoneme(symbol.to_string()))
    }

    pub fn null() -> Self {
        Phoneme(NULL_SYMBOL.to_string())
    }

    /// Strips a trailing stress digit (`AO1` -> `AO`) before validating.
    pub fn from_cmu(code: &str) -> Result<Self> {
        let stripped = code.trim_end_matches(|c: char| c.is_ascii_digit());
        Phoneme::new(stripped)
    }

    pub fn is_null(&self) -> bool {
        self.0 == NULL_SYMBOL
    }

    pub fn symbol(&self) -> &str {
        &self.0
    }

    pub fn class(&self) -> SymbolClass {
        if self.is_null() {
            return SymbolClass::Silence;
        }
        // Compound phonemes classify by their first phone.
        let first = self.0.split('+').next().unwrap();
        if ARPABET_VOWELS.contains(&first) {
            SymbolClass::Vowel
        } else if first == "W" || first == "Y" {
            SymbolClass::SemiVowel
        } else {
            SymbolClass::Consonant
        }
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A romanized target-language unit, or the null unit `~`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TargetGrapheme(String);

impl TargetGrapheme {
    pub fn new(unit: &str) -> Result<Self> {
        if unit.is_empty() {
            return Err(Error::InvalidSymbol("empty target grapheme".into()));
        }
        Ok(TargetGrapheme(unit.to_string()))
    }

    pub fn null() -> Self {
        TargetGrapheme(NULL_SYMBOL.to_string())
    }

    pub fn is_null(&self) -> bool {
        self.0 == NULL_SYMBOL
    }

    pub fn unit(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TargetGrapheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Canonical comparison form: all non-null units concatenated with
/// hyphens removed. Word accuracy matches on this form.
pub fn surface_form(units: &[TargetGrapheme]) -> String {
    units
        .iter()
        .filter(|u| !u.is_null())
        .flat_map(|u| u.unit().chars())
        .filter(|&c| c != '-')
        .collect()
}

/// A source word and its set of gold transliterations
/// (hyphen-separated syllable strings, variants allowed).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransliterationPair {
    pub source: Vec<Grapheme>,
    pub targets: BTreeSet<String>,
}

impl TransliterationPair {
    pub fn source_string(&self) -> String {
        self.source.iter().map(|g| g.as_char()).collect()
    }

    /// Gold surfaces in canonical (hyphen-stripped) form.
    pub fn target_surfaces(&self) -> BTreeSet<String> {
        self.targets
            .iter()
            .map(|t| t.chars().filter(|&c| c != '-').collect())
            .collect()
    }
}

/// A pronunciation dictionary entry: word plus one or more phone sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PronEntry {
    pub word: Vec<Grapheme>,
    pub variants: Vec<Vec<Phoneme>>,
}

impl PronEntry {
    pub fn word_string(&self) -> String {
        self.word.iter().map(|g| g.as_char()).collect()
    }
}

/// Equal-length grapheme / phoneme / target-grapheme sequences: the unit
/// of training. `s` never contains nulls; `p` and `t` may.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedTriple {
    s: Vec<Grapheme>,
    p: Vec<Phoneme>,
    t: Vec<TargetGrapheme>,
    /// True when the phoneme layer is a placeholder (word absent from the
    /// dictionary and no g2p model supplied); such triples only feed
    /// grapheme-based training.
    pub phonemes_missing: bool,
}

impl AlignedTriple {
    pub fn new(s: Vec<Grapheme>, p: Vec<Phoneme>, t: Vec<TargetGrapheme>) -> Result<Self> {
        if s.len() != p.len() || s.len() != t.len() {
            return Err(Error::LengthMismatch {
                context: format!("aligned triple: |s|={} |p|={} |t|={}", s.len(), p.len(), t.len()),
            });
        }
        if s.is_empty() {
            return Err(Error::InvalidSymbol("empty aligned triple".into()));
        }
        Ok(AlignedTriple { s, p, t, phonemes_missing: false })
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn graphemes(&self) -> &[Grapheme] {
        &self.s
    }

    pub fn phonemes(&self) -> &[Phoneme] {
        &self.p
    }

    pub fn targets(&self) -> &[TargetGrapheme] {
        &self.t
    }

    pub fn surface(&self) -> String {
        surface_form(&self.t)
    }
}

/// Parses a source word into graphemes after lowercasing; rejects
/// anything outside a-z.
pub fn word_to_graphemes(word: &str) -> Result<Vec<Grapheme>> {
    let lowered = word.trim().to_ascii_lowercase();
    if lowered.is_empty() {
        return Err(Error::InvalidSymbol("empty source word".into()));
    }
    lowered.chars().map(Grapheme::new).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tg(u: &str) -> TargetGrapheme {
        TargetGrapheme::new(u).unwrap()
    }

    #[test]
    fn surface_form_strips_nulls_and_hyphens() {
        let units = vec![tg("b"), tg("o"), TargetGrapheme::null(), TargetGrapheme::null(), tg("deu")];
        assert_eq!(surface_form(&units), "bodeu");
        assert_eq!(surface_form(&[TargetGrapheme::null()]), "");
        assert_eq!(surface_form(&[tg("de-i"), tg("teo")]), "deiteo");
    }

    #[test]
    fn arpabet_inventory_is_closed() {
        assert_eq!(ARPABET.len(), 39);
        assert!(Phoneme::new("AO").is_ok());
        assert!(Phoneme::new("XX").is_err());
        assert!(Phoneme::new("~").unwrap().is_null());
        assert_eq!(Phoneme::from_cmu("AO1").unwrap().symbol(), "AO");
    }

    #[test]
    fn compound_phoneme_from_alignment() {
        let p = Phoneme::new("K+S").unwrap();
        assert_eq!(p.class(), SymbolClass::Consonant);
        assert!(Phoneme::new("K+QQ").is_err());
    }

    #[test]
    fn phoneme_classes() {
        assert_eq!(Phoneme::new("AO").unwrap().class(), SymbolClass::Vowel);
        assert_eq!(Phoneme::new("W").unwrap().class(), SymbolClass::SemiVowel);
        assert_eq!(Phoneme::new("Y").unwrap().class(), SymbolClass::SemiVowel);
        assert_eq!(Phoneme::null().class(), SymbolClass::Silence);
        assert_eq!(Phoneme::new("B").unwrap().class(), SymbolClass::Consonant);
    }

    #[test]
    fn grapheme_classes() {
        assert_eq!(Grapheme::new('a').unwrap().class(), SymbolClass::Vowel);
        assert_eq!(Grapheme::new('b').unwrap().class(), SymbolClass::Consonant);
        assert!(Grapheme::new('B').is_err());
        assert!(Grapheme::new('3').is_err());
    }

    #[test]
    fn triple_length_invariant() {
        let s = word_to_graphemes("ab").unwrap();
        let p = vec![Phoneme::new("AE").unwrap(), Phoneme::new("B").unwrap()];
        let t = vec![tg("a"), tg("beu")];
        assert!(AlignedTriple::new(s.clone(), p.clone(), t.clone()).is_ok());
        assert!(AlignedTriple::new(s, p, vec![tg("a")]).is_err());
    }
}

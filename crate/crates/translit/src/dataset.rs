//! Dataset ingestion: transliteration pair files, the CMU pronunciation
//! dictionary format, and the optional pre-aligned triple TSV.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{
    word_to_graphemes, AlignedTriple, Grapheme, Phoneme, PronEntry, TargetGrapheme,
    TransliterationPair,
};

/// A line that failed ingestion, kept for reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedLine {
    pub line: usize,
    pub content: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct PairsOutcome {
    pub pairs: Vec<TransliterationPair>,
    pub rejected: Vec<RejectedLine>,
}

/// Reads a UTF-8 TSV of `source<TAB>target` lines. Repeated source lines
/// accumulate target variants; duplicates collapse by set semantics.
pub fn parse_pairs(path: impl AsRef<Path>) -> Result<PairsOutcome> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut by_source: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut rejected = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut reject = |reason: &str| {
            rejected.push(RejectedLine {
                line: idx + 1,
                content: raw.to_string(),
                reason: reason.to_string(),
            });
        };
        let Some((src, tgt)) = line.split_once('\t') else {
            reject("missing tab separator");
            continue;
        };
        let tgt = tgt.trim();
        if tgt.is_empty() {
            reject("empty target");
            continue;
        }
        match word_to_graphemes(src) {
            Ok(graphemes) => {
                let key: String = graphemes.iter().map(|g| g.as_char()).collect();
                by_source.entry(key).or_default().insert(tgt.to_string());
            }
            Err(e) => reject(&e.to_string()),
        }
    }
    if by_source.is_empty() {
        return Err(Error::EmptyDataset { path: path.into() });
    }
    let pairs = by_source
        .into_iter()
        .map(|(src, targets)| TransliterationPair {
            source: word_to_graphemes(&src).expect("source already validated"),
            targets,
        })
        .collect();
    Ok(PairsOutcome { pairs, rejected })
}

/// Writes pairs in canonical order: sources ascending, one line per
/// target variant. `parse_pairs . write_pairs` is the identity.
pub fn write_pairs(pairs: &[TransliterationPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let mut sorted: Vec<&TransliterationPair> = pairs.iter().collect();
    sorted.sort_by_key(|p| p.source_string());
    for pair in sorted {
        let src = pair.source_string();
        for tgt in &pair.targets {
            out.push_str(&src);
            out.push('\t');
            out.push_str(tgt);
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct PronDictOutcome {
    pub entries: Vec<PronEntry>,
    pub rejected: Vec<RejectedLine>,
}

/// Parses a CMU-dict-format file: `WORD  P1 P2 ...` with `WORD(2)`
/// alternate entries and `;;;` comment lines. Stress digits are
/// stripped; words with non-alphabetic symbols are skipped with a report.
pub fn parse_pron_dict(path: impl AsRef<Path>) -> Result<PronDictOutcome> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut by_word: BTreeMap<String, Vec<Vec<Phoneme>>> = BTreeMap::new();
    let mut rejected = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with(";;;") {
            continue;
        }
        let mut reject = |reason: String| {
            rejected.push(RejectedLine { line: idx + 1, content: raw.to_string(), reason });
        };
        let Some((head, phones)) = line.split_once(char::is_whitespace) else {
            reject("missing pronunciation".into());
            continue;
        };
        // "WORD(2)" marks an alternate pronunciation of WORD.
        let word_part = match head.split_once('(') {
            Some((w, _)) => w,
            None => head,
        };
        let graphemes = match word_to_graphemes(word_part) {
            Ok(g) => g,
            Err(e) => {
                reject(e.to_string());
                continue;
            }
        };
        let mut variant = Vec::new();
        let mut ok = true;
        for code in phones.split_whitespace() {
            match Phoneme::from_cmu(code) {
                Ok(p) if !p.is_null() => variant.push(p),
                Ok(_) => {
                    reject(format!("null phoneme in dictionary entry {head}"));
                    ok = false;
                    break;
                }
                Err(e) => {
                    reject(e.to_string());
                    ok = false;
                    break;
                }
            }
        }
        if !ok || variant.is_empty() {
            if variant.is_empty() && ok {
                reject("empty pronunciation".into());
            }
            continue;
        }
        let key: String = graphemes.iter().map(|g| g.as_char()).collect();
        let variants = by_word.entry(key).or_default();
        if !variants.contains(&variant) {
            variants.push(variant);
        }
    }
    let entries = by_word
        .into_iter()
        .map(|(word, variants)| PronEntry {
            word: word_to_graphemes(&word).expect("word already validated"),
            variants,
        })
        .collect();
    Ok(PronDictOutcome { entries, rejected })
}

/// In-memory pronunciation dictionary keyed by source word.
#[derive(Debug, Clone, Default)]
pub struct PronDict {
    by_word: BTreeMap<String, Vec<Vec<Phoneme>>>,
}

impl PronDict {
    pub fn from_entries(entries: Vec<PronEntry>) -> Self {
        let mut by_word = BTreeMap::new();
        for e in entries {
            by_word.insert(e.word_string(), e.variants);
        }
        PronDict { by_word }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::from_entries(parse_pron_dict(path)?.entries))
    }

    pub fn lookup(&self, word: &str) -> Option<&[Vec<Phoneme>]> {
        self.by_word.get(word).map(|v| v.as_slice())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.by_word.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.by_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_word.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &Vec<Vec<Phoneme>>)> {
        self.by_word.iter()
    }
}

/// Parses the pre-aligned triple TSV: one word per line, space-separated
/// `s|p|t` columns per position. Lets users bypass the EM aligner with
/// gold alignments.
pub fn parse_aligned_tsv(path: impl AsRef<Path>) -> Result<Vec<AlignedTriple>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut triples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut s = Vec::new();
        let mut p = Vec::new();
        let mut t = Vec::new();
        for col in line.split_whitespace() {
            let parts: Vec<&str> = col.split('|').collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    path: path.into(),
                    line: idx + 1,
                    message: format!("expected s|p|t, got {col:?}"),
                });
            }
            let err = |message: String| Error::Parse { path: path.into(), line: idx + 1, message };
            let mut chars = parts[0].chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(err(format!("source column must be one letter, got {:?}", parts[0])));
            };
            s.push(Grapheme::new(c).map_err(|e| err(e.to_string()))?);
            p.push(Phoneme::new(parts[1]).map_err(|e| err(e.to_string()))?);
            t.push(TargetGrapheme::new(parts[2]).map_err(|e| err(e.to_string()))?);
        }
        if s.is_empty() {
            continue;
        }
        triples.push(AlignedTriple::new(s, p, t)?);
    }
    if triples.is_empty() {
        return Err(Error::EmptyDataset { path: path.into() });
    }
    Ok(triples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_pair_line() {
        let f = write_temp("board\tbo-deu\n");
        let out = parse_pairs(f.path()).unwrap();
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].source_string(), "board");
        assert_eq!(out.pairs[0].targets.iter().next().unwrap(), "bo-deu");
        assert!(out.rejected.is_empty());
    }

    #[test]
    fn variants_accumulate_and_dedup() {
        let f = write_temp("micro\tma-i-ku-ro\nmicro\tmi-ku-ro\nmicro\tmi-ku-ro\n");
        let out = parse_pairs(f.path()).unwrap();
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].targets.len(), 2);
    }

    #[test]
    fn bad_lines_reported_not_dropped_silently() {
        let f = write_temp("don't\tdon-teu\nboard\tbo-deu\nx123\ty\n");
        let out = parse_pairs(f.path()).unwrap();
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.rejected.len(), 2);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let f = write_temp("don't\tx\n");
        assert!(matches!(parse_pairs(f.path()), Err(Error::EmptyDataset { .. })));
        assert!(parse_pairs("/nonexistent/path").is_err());
    }

    #[test]
    fn pairs_roundtrip_is_identity() {
        let f = write_temp("micro\tmi-ku-ro\nboard\tbo-deu\nmicro\tma-i-ku-ro\n");
        let out = parse_pairs(f.path()).unwrap();
        let g = tempfile::NamedTempFile::new().unwrap();
        write_pairs(&out.pairs, g.path()).unwrap();
        let back = parse_pairs(g.path()).unwrap();
        assert_eq!(back.pairs, out.pairs);
    }

    #[test]
    fn cmu_dict_basics() {
        let f = write_temp(";;; comment\nBOARD  B AO1 R D\nA  AH0\nA(2)  EY1\nC3PO  S IY\n");
        let out = parse_pron_dict(f.path()).unwrap();
        assert_eq!(out.entries.len(), 2);
        let board = out.entries.iter().find(|e| e.word_string() == "board").unwrap();
        assert_eq!(board.variants.len(), 1);
        let phones: Vec<&str> = board.variants[0].iter().map(|p| p.symbol()).collect();
        assert_eq!(phones, vec!["B", "AO", "R", "D"]);
        let a = out.entries.iter().find(|e| e.word_string() == "a").unwrap();
        assert_eq!(a.variants.len(), 2);
        assert_eq!(out.rejected.len(), 1); // C3PO
    }

    #[test]
    fn aligned_tsv_roundtrip() {
        let f = write_temp("b|B|b o|AO|o a|~|~ r|R|~ d|D|deu\n");
        let triples = parse_aligned_tsv(f.path()).unwrap();
        assert_eq!(triples.len(), 1);
        assert_eq!(triples[0].len(), 5);
        assert_eq!(triples[0].surface(), "bodeu");
    }
}

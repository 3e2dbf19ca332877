//! Composes trained classifiers into the four component functions
//! (grapheme→phoneme, grapheme→target, phoneme→target, pair→target) and
//! the four transliteration models: grapheme-based (G), phoneme-based
//! (P), hybrid interpolation (H), and correspondence-based (C).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::align::{align_phonemes, AssociationTable};
use crate::artifact::{load_model, save_model, ModelArtifact, ARTIFACT_VERSION};
use crate::dataset::PronDict;
use crate::error::{Error, Result};
use crate::features::{build_instance, make_instances, ComponentKind, Instance};
use crate::learners::{
    dtl_train, mbl_train, mem_train, DtlConfig, LearnerKind, MblConfig, MemConfig,
    TrainedClassifier,
};
use crate::types::{surface_form, AlignedTriple, Grapheme, Phoneme, PronEntry, TargetGrapheme};

pub const DEFAULT_BEAM: usize = 5;
pub const DEFAULT_WINDOW: usize = 3;

/// Floor applied before taking logs of interpolated probabilities so
/// candidate scores stay finite.
const PROB_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelTag {
    G,
    P,
    H,
    C,
}

impl ModelTag {
    pub fn name(self) -> &'static str {
        match self {
            ModelTag::G => "G",
            ModelTag::P => "P",
            ModelTag::H => "H",
            ModelTag::C => "C",
        }
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g" => Ok(ModelTag::G),
            "p" => Ok(ModelTag::P),
            "h" => Ok(ModelTag::H),
            "c" => Ok(ModelTag::C),
            other => Err(Error::Config(format!("unknown model tag {other:?}"))),
        }
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One candidate transliteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Canonical (hyphen-stripped) surface string.
    pub surface: String,
    pub units: Vec<TargetGrapheme>,
    /// Log-probability for MEM-backed models; 0 for greedy DTL/MBL paths.
    pub score: f64,
    pub provenance: BTreeSet<ModelTag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub alpha: f64,
}

impl HybridConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must be in [0,1], got {alpha}")));
        }
        Ok(HybridConfig { alpha })
    }
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig { alpha: 0.5 }
    }
}

/// One hybrid-pool member with its probability under each side.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledHypothesis {
    pub surface: String,
    pub units: Vec<TargetGrapheme>,
    pub pr_g: f64,
    pub pr_p: f64,
}

/// Scores a hybrid pool at one interpolation weight.
pub fn interpolate_pool(pool: &[PooledHypothesis], cfg: HybridConfig) -> Vec<Candidate> {
    let out = pool
        .iter()
        .map(|h| Candidate {
            surface: h.surface.clone(),
            units: h.units.clone(),
            score: (cfg.alpha * h.pr_p + (1.0 - cfg.alpha) * h.pr_g).max(PROB_FLOOR).ln(),
            provenance: BTreeSet::from([ModelTag::H]),
        })
        .collect();
    dedup_candidates(out)
}

/// A trained component-function classifier plus its decode metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedComponent {
    pub kind: ComponentKind,
    pub window_k: usize,
    pub classifier: TrainedClassifier,
}

/// Serialized payload of one `.tlm` file.
#[derive(Serialize, Deserialize)]
struct ComponentPayload {
    component: TrainedComponent,
    /// Grapheme-phoneme association table (grapheme→phoneme models only).
    table: Option<AssociationTable>,
    /// Pronunciation entries bundled with grapheme→phoneme models so the
    /// dictionary path works without the original dictionary file.
    dict: Option<Vec<PronEntry>>,
}

/// Learner-specific training knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learner: LearnerKind,
    pub window_k: usize,
    pub mem: MemConfig,
    pub dtl: DtlConfig,
    pub mbl: MblConfig,
}

impl TrainConfig {
    pub fn new(learner: LearnerKind) -> Self {
        TrainConfig {
            learner,
            window_k: DEFAULT_WINDOW,
            mem: MemConfig::default(),
            dtl: DtlConfig::default(),
            mbl: MblConfig::default(),
        }
    }
}

fn train_classifier(instances: &[Instance], config: &TrainConfig) -> TrainedClassifier {
    match config.learner {
        LearnerKind::Mem => TrainedClassifier::Mem(mem_train(instances, &config.mem)),
        LearnerKind::Dtl => TrainedClassifier::Dtl(dtl_train(instances, &config.dtl)),
        LearnerKind::Mbl => TrainedClassifier::Mbl(mbl_train(instances, &config.mbl)),
    }
}

/// Trains one component function. Triples without a phoneme layer only
/// feed the grapheme→target component.
pub fn train_component(
    triples: &[AlignedTriple],
    kind: ComponentKind,
    config: &TrainConfig,
) -> Result<TrainedComponent> {
    let usable: Vec<&AlignedTriple> = triples
        .iter()
        .filter(|t| kind == ComponentKind::ST || !t.phonemes_missing)
        .collect();
    let instances: Vec<Instance> =
        usable.iter().flat_map(|t| make_instances(t, kind, config.window_k)).collect();
    if instances.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(TrainedComponent { kind, window_k: config.window_k, classifier: train_classifier(&instances, config) })
}

/// The grapheme→phoneme path: a pronunciation dictionary (with the
/// alignment table that maps variants onto letter positions) plus a
/// trained classifier for out-of-dictionary words.
#[derive(Debug, Clone)]
pub struct G2pModel {
    pub component: TrainedComponent,
    pub table: AssociationTable,
    pub dict: PronDict,
}

impl G2pModel {
    /// Dictionary variants aligned per letter, else beam-search estimates.
    /// Every returned sequence has exactly one phoneme unit per grapheme.
    pub fn pronunciations(
        &self,
        word: &[Grapheme],
        beam: usize,
    ) -> Result<Vec<(Vec<Phoneme>, f64)>> {
        let word_str: String = word.iter().map(|g| g.as_char()).collect();
        if let Some(variants) = self.dict.lookup(&word_str) {
            return variants
                .iter()
                .map(|v| Ok((align_phonemes(word, v, &self.table)?, 0.0)))
                .collect();
        }
        let decoded = decode(&self.component, word, None, beam)?;
        decoded
            .into_iter()
            .map(|(labels, score)| {
                let phones: Result<Vec<Phoneme>> =
                    labels.iter().map(|l| Phoneme::new(l)).collect();
                Ok((phones?, score))
            })
            .collect()
    }
}

/// Left-to-right decode. MEM models beam-search the label distribution;
/// DTL/MBL follow the single greedy path (no distribution exists to rank
/// alternatives). Results sorted by score descending, ties broken
/// lexicographically on the output surface.
pub fn decode(
    component: &TrainedComponent,
    s: &[Grapheme],
    p: Option<&[Phoneme]>,
    beam: usize,
) -> Result<Vec<(Vec<String>, f64)>> {
    let kind = component.kind;
    let k = component.window_k;
    if kind.uses_phoneme_context() {
        let p = p.ok_or_else(|| {
            Error::UnsupportedConfiguration(format!("{kind} decode requires phonemes"))
        })?;
        if p.len() != s.len() {
            return Err(Error::LengthMismatch {
                context: format!("decode {kind}: |s|={} |p|={}", s.len(), p.len()),
            });
        }
    }
    let empty: Vec<Phoneme> = Vec::new();
    let p = p.unwrap_or(&empty);
    let len = s.len();
    assert!(beam >= 1, "beam width must be at least 1");

    match &component.classifier {
        TrainedClassifier::Mem(model) => {
            // (outputs, score) hypotheses.
            let mut hyps: Vec<(Vec<String>, f64)> = vec![(Vec::new(), 0.0)];
            for i in 0..len {
                let mut next: Vec<(Vec<String>, f64)> = Vec::new();
                for (outputs, score) in &hyps {
                    let inst = build_instance(kind, k, i, s, p, outputs);
                    for (label, prob) in model.predict_dist(&inst) {
                        let mut extended = outputs.clone();
                        extended.push(label);
                        next.push((extended, score + prob.max(PROB_FLOOR).ln()));
                    }
                }
                sort_hypotheses(&mut next);
                next.truncate(beam);
                hyps = next;
            }
            sort_hypotheses(&mut hyps);
            Ok(hyps)
        }
        _ => {
            let mut outputs: Vec<String> = Vec::with_capacity(len);
            for i in 0..len {
                let inst = build_instance(kind, k, i, s, p, &outputs);
                outputs.push(component.classifier.predict(&inst));
            }
            Ok(vec![(outputs, 0.0)])
        }
    }
}

fn sort_hypotheses(hyps: &mut [(Vec<String>, f64)]) {
    hyps.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite scores")
            .then_with(|| joined_surface(&a.0).cmp(&joined_surface(&b.0)))
            .then_with(|| a.0.cmp(&b.0))
    });
}

fn joined_surface(labels: &[String]) -> String {
    labels
        .iter()
        .filter(|l| l.as_str() != crate::types::NULL_SYMBOL)
        .flat_map(|l| l.chars())
        .filter(|&c| c != '-')
        .collect()
}

/// Sum of per-position log-probabilities for one exact output sequence
/// (force-decoding). MEM only.
pub fn force_decode(
    component: &TrainedComponent,
    s: &[Grapheme],
    p: Option<&[Phoneme]>,
    outputs: &[String],
) -> Result<f64> {
    let TrainedClassifier::Mem(model) = &component.classifier else {
        return Err(Error::UnsupportedConfiguration(
            "force-decoding needs label probabilities (maximum entropy only)".into(),
        ));
    };
    let empty: Vec<Phoneme> = Vec::new();
    let p_slice = p.unwrap_or(&empty);
    let mut score = 0.0;
    for (i, label) in outputs.iter().enumerate() {
        let inst = build_instance(component.kind, component.window_k, i, s, p_slice, &outputs[..i]);
        score += model.log_prob(&inst, label);
    }
    Ok(score)
}

/// Everything needed to transliterate: the per-component classifiers and
/// the grapheme→phoneme path.
#[derive(Debug, Clone, Default)]
pub struct ModelSet {
    pub st: Option<TrainedComponent>,
    pub pt: Option<TrainedComponent>,
    pub spt: Option<TrainedComponent>,
    pub g2p: Option<G2pModel>,
    pub beam: usize,
}

impl ModelSet {
    fn require(&self, which: &str) -> Result<&TrainedComponent> {
        match which {
            "st" => self.st.as_ref().ok_or_else(|| Error::MissingModel("ST".into())),
            "pt" => self.pt.as_ref().ok_or_else(|| Error::MissingModel("PT".into())),
            "spt" => self.spt.as_ref().ok_or_else(|| Error::MissingModel("SPT".into())),
            _ => unreachable!(),
        }
    }

    fn require_g2p(&self) -> Result<&G2pModel> {
        self.g2p.as_ref().ok_or_else(|| Error::MissingModel("SP (grapheme→phoneme)".into()))
    }

    /// Grapheme-based model: decode the word's letters directly.
    pub fn psi_g(&self, word: &[Grapheme]) -> Result<Vec<Candidate>> {
        let st = self.require("st")?;
        let decoded = decode(st, word, None, self.beam)?;
        Ok(dedup_candidates(candidates_from(decoded, ModelTag::G)?))
    }

    /// Phoneme-based model: union over pronunciations of phoneme decodes.
    pub fn psi_p(&self, word: &[Grapheme]) -> Result<Vec<Candidate>> {
        self.psi_via_pronunciations(word, "pt", ModelTag::P)
    }

    /// Correspondence-based model: decode grapheme-phoneme pairs jointly.
    pub fn psi_c(&self, word: &[Grapheme]) -> Result<Vec<Candidate>> {
        self.psi_via_pronunciations(word, "spt", ModelTag::C)
    }

    fn psi_via_pronunciations(
        &self,
        word: &[Grapheme],
        which: &str,
        tag: ModelTag,
    ) -> Result<Vec<Candidate>> {
        let component = self.require(which)?;
        let g2p = self.require_g2p()?;
        let mut all = Vec::new();
        for (phones, lp) in g2p.pronunciations(word, self.beam)? {
            let decoded = decode(component, word, Some(&phones), self.beam)?;
            for mut c in candidates_from(decoded, tag)? {
                c.score += lp;
                all.push(c);
            }
        }
        Ok(dedup_candidates(all))
    }

    /// Hybrid candidate pool: every distinct unit sequence produced by
    /// the grapheme- or phoneme-based model, with both sequence
    /// probabilities attached (force-decoded on the side that did not
    /// produce it). Interpolating the pool at different weights is cheap.
    pub fn hybrid_pool(&self, word: &[Grapheme]) -> Result<Vec<PooledHypothesis>> {
        let st = self.require("st")?;
        let pt = self.require("pt")?;
        if !matches!(st.classifier, TrainedClassifier::Mem(_))
            || !matches!(pt.classifier, TrainedClassifier::Mem(_))
        {
            return Err(Error::UnsupportedConfiguration(
                "hybrid interpolation needs probabilities (maximum entropy only)".into(),
            ));
        }
        let g2p = self.require_g2p()?;
        let pronunciations = g2p.pronunciations(word, self.beam)?;

        let mut pool: BTreeSet<Vec<String>> = BTreeSet::new();
        for c in self.psi_g(word)?.into_iter().chain(self.psi_p(word)?) {
            pool.insert(c.units.iter().map(|u| u.unit().to_string()).collect());
        }

        let mut out = Vec::new();
        for units in pool {
            let pr_g = force_decode(st, word, None, &units)?.exp();
            let mut pr_p = 0.0f64;
            for (phones, lp) in &pronunciations {
                let s = force_decode(pt, word, Some(phones), &units)? + lp;
                pr_p = pr_p.max(s.exp());
            }
            let tgs: Result<Vec<TargetGrapheme>> =
                units.iter().map(|u| TargetGrapheme::new(u)).collect();
            let tgs = tgs?;
            out.push(PooledHypothesis { surface: surface_form(&tgs), units: tgs, pr_g, pr_p });
        }
        Ok(out)
    }

    /// Hybrid model: rescore the pooled unit sequences as
    /// α·Pr_P + (1-α)·Pr_G.
    pub fn psi_h(&self, word: &[Grapheme], cfg: HybridConfig) -> Result<Vec<Candidate>> {
        Ok(interpolate_pool(&self.hybrid_pool(word)?, cfg))
    }

    /// Surface-deduplicated union over the requested models, provenance
    /// merged, score = max of member scores.
    pub fn combine(
        &self,
        models: &BTreeSet<ModelTag>,
        word: &[Grapheme],
        cfg: HybridConfig,
    ) -> Result<Vec<Candidate>> {
        let mut all = Vec::new();
        for tag in models {
            let mut part = match tag {
                ModelTag::G => self.psi_g(word)?,
                ModelTag::P => self.psi_p(word)?,
                ModelTag::H => self.psi_h(word, cfg)?,
                ModelTag::C => self.psi_c(word)?,
            };
            all.append(&mut part);
        }
        Ok(dedup_candidates(all))
    }

    /// Saves one component as a standalone model file (the same format
    /// `save` writes per component).
    pub fn save_component_file(&self, kind: ComponentKind, path: impl AsRef<Path>) -> Result<()> {
        match kind {
            ComponentKind::SP => {
                let g2p = self.require_g2p()?;
                let entries: Vec<PronEntry> = g2p
                    .dict
                    .entries()
                    .map(|(word, variants)| PronEntry {
                        word: crate::types::word_to_graphemes(word).expect("validated"),
                        variants: variants.clone(),
                    })
                    .collect();
                save_component(&g2p.component, Some(&g2p.table), Some(entries), path)
            }
            ComponentKind::ST => save_component(self.require("st")?, None, None, path),
            ComponentKind::PT => save_component(self.require("pt")?, None, None, path),
            ComponentKind::SPT => save_component(self.require("spt")?, None, None, path),
        }
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if let Some(g2p) = &self.g2p {
            let entries: Vec<PronEntry> = g2p
                .dict
                .entries()
                .map(|(word, variants)| PronEntry {
                    word: crate::types::word_to_graphemes(word).expect("validated"),
                    variants: variants.clone(),
                })
                .collect();
            save_component(
                &g2p.component,
                Some(&g2p.table),
                Some(entries),
                dir.join("sp.tlm"),
            )?;
        }
        for (component, name) in
            [(&self.st, "st.tlm"), (&self.pt, "pt.tlm"), (&self.spt, "spt.tlm")]
        {
            if let Some(c) = component {
                save_component(c, None, None, dir.join(name))?;
            }
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>, beam: usize) -> Result<Self> {
        let dir = dir.as_ref();
        let mut set = ModelSet { beam, ..ModelSet::default() };
        let sp_path = dir.join("sp.tlm");
        if sp_path.exists() {
            let (component, table, dict) = load_component(&sp_path)?;
            set.g2p = Some(G2pModel {
                component,
                table: table.ok_or_else(|| {
                    Error::Corrupt("grapheme→phoneme model lacks its alignment table".into())
                })?,
                dict: PronDict::from_entries(dict.unwrap_or_default()),
            });
        }
        for (slot, name) in [
            (&mut set.st, "st.tlm"),
            (&mut set.pt, "pt.tlm"),
            (&mut set.spt, "spt.tlm"),
        ] {
            let path = dir.join(name);
            if path.exists() {
                *slot = Some(load_component(&path)?.0);
            }
        }
        Ok(set)
    }
}

fn candidates_from(decoded: Vec<(Vec<String>, f64)>, tag: ModelTag) -> Result<Vec<Candidate>> {
    decoded
        .into_iter()
        .map(|(labels, score)| {
            let units: Result<Vec<TargetGrapheme>> =
                labels.iter().map(|l| TargetGrapheme::new(l)).collect();
            let units = units?;
            Ok(Candidate {
                surface: surface_form(&units),
                units,
                score,
                provenance: BTreeSet::from([tag]),
            })
        })
        .collect()
}

/// Deduplicates by surface keeping the best score, merging provenance;
/// output sorted by score descending, ties lexicographic on surface.
pub fn dedup_candidates(candidates: Vec<Candidate>) -> Vec<Candidate> {
    let mut by_surface: BTreeMap<String, Candidate> = BTreeMap::new();
    for c in candidates {
        match by_surface.get_mut(&c.surface) {
            None => {
                by_surface.insert(c.surface.clone(), c);
            }
            Some(existing) => {
                existing.provenance.extend(c.provenance.iter().copied());
                if c.score > existing.score {
                    let provenance = existing.provenance.clone();
                    *existing = c;
                    existing.provenance = provenance;
                }
            }
        }
    }
    let mut out: Vec<Candidate> = by_surface.into_values().collect();
    out.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("finite scores")
            .then_with(|| a.surface.cmp(&b.surface))
    });
    out
}

fn save_component(
    component: &TrainedComponent,
    table: Option<&AssociationTable>,
    dict: Option<Vec<PronEntry>>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let payload = ComponentPayload {
        component: component.clone(),
        table: table.cloned(),
        dict,
    };
    let artifact = ModelArtifact {
        version: ARTIFACT_VERSION,
        component_kind: component.kind.name().to_string(),
        learner_kind: component.classifier.kind().name().to_string(),
        window_k: component.window_k as u32,
        label_inventory: component.classifier.labels().to_vec(),
        payload: serde_json::to_vec(&payload)
            .map_err(|e| Error::Corrupt(format!("serialize: {e}")))?,
    };
    save_model(&artifact, path)
}

fn load_component(
    path: impl AsRef<Path>,
) -> Result<(TrainedComponent, Option<AssociationTable>, Option<Vec<PronEntry>>)> {
    let artifact = load_model(path)?;
    let mut payload: ComponentPayload = serde_json::from_slice(&artifact.payload)
        .map_err(|e| Error::Corrupt(format!("deserialize: {e}")))?;
    if let TrainedClassifier::Mem(m) = &mut payload.component.classifier {
        m.rebuild_index();
    }
    Ok((payload.component, payload.table, payload.dict))
}

/// Trains the whole model set: alignment tables, then the
/// grapheme→phoneme classifier from dictionary-covered words, then the
/// three target-producing components with grapheme→phoneme fallback for
/// out-of-dictionary words.
pub fn train_model_set(
    pairs: &[crate::types::TransliterationPair],
    dict: &PronDict,
    config: &TrainConfig,
    beam: usize,
) -> Result<ModelSet> {
    let tables = crate::align::train_tables(pairs, dict)?;
    let base_triples = crate::align::build_triples(pairs, dict, &tables, None)?;

    let g2p = match train_component(&base_triples, ComponentKind::SP, config) {
        Ok(component) => Some(G2pModel {
            component,
            table: tables.grapheme_phoneme.clone(),
            dict: dict.clone(),
        }),
        Err(Error::EmptyCorpus) => None,
        Err(e) => return Err(e),
    };

    let triples = match &g2p {
        Some(model) => {
            let fallback = |s: &[Grapheme]| -> Vec<Phoneme> {
                model
                    .pronunciations(s, 1)
                    .ok()
                    .and_then(|mut v| if v.is_empty() { None } else { Some(v.remove(0).0) })
                    .unwrap_or_else(|| vec![Phoneme::null(); s.len()])
            };
            crate::align::build_triples(pairs, dict, &tables, Some(&fallback))?
        }
        None => base_triples,
    };

    let st = Some(train_component(&triples, ComponentKind::ST, config)?);
    let optional = |kind| match train_component(&triples, kind, config) {
        Ok(c) => Ok(Some(c)),
        Err(Error::EmptyCorpus) => Ok(None),
        Err(e) => Err(e),
    };
    let pt = optional(ComponentKind::PT)?;
    let spt = optional(ComponentKind::SPT)?;
    Ok(ModelSet { st, pt, spt, g2p, beam })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_aligned_tsv;
    use crate::types::word_to_graphemes;
    use std::io::Write;

    fn board_triples() -> Vec<AlignedTriple> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        // The worked example plus a contrast word so training has 2 labels
        // in every component.
        writeln!(f, "b|B|b o|AO|o a|~|~ r|R|~ d|D|deu").unwrap();
        writeln!(f, "c|K|k a|AE|a r|R|reu").unwrap();
        parse_aligned_tsv(f.path()).unwrap()
    }

    fn mem_config() -> TrainConfig {
        TrainConfig { window_k: 2, ..TrainConfig::new(LearnerKind::Mem) }
    }

    #[test]
    fn spt_decode_reproduces_worked_example() {
        let triples = board_triples();
        let spt = train_component(&triples, ComponentKind::SPT, &mem_config()).unwrap();
        let word = word_to_graphemes("board").unwrap();
        let phones: Vec<Phoneme> =
            ["B", "AO", "~", "R", "D"].iter().map(|s| Phoneme::new(s).unwrap()).collect();
        let decoded = decode(&spt, &word, Some(&phones), 5).unwrap();
        assert_eq!(decoded[0].0, vec!["b", "o", "~", "~", "deu"]);
        assert_eq!(joined_surface(&decoded[0].0), "bodeu");
    }

    #[test]
    fn beam_one_equals_greedy_argmax_chain() {
        let triples = board_triples();
        let st = train_component(&triples, ComponentKind::ST, &mem_config()).unwrap();
        let word = word_to_graphemes("board").unwrap();
        let wide = decode(&st, &word, None, 5).unwrap();
        let narrow = decode(&st, &word, None, 1).unwrap();
        assert_eq!(narrow.len(), 1);
        // Greedy path: argmax label at each position given the prefix.
        let TrainedClassifier::Mem(model) = &st.classifier else { unreachable!() };
        let mut outputs: Vec<String> = Vec::new();
        for i in 0..word.len() {
            let inst = build_instance(ComponentKind::ST, st.window_k, i, &word, &[], &outputs);
            let dist = model.predict_dist(&inst);
            let best = dist
                .iter()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(a.0)))
                .unwrap()
                .0
                .clone();
            outputs.push(best);
        }
        assert_eq!(narrow[0].0, outputs);
        // The wide beam's best is at least as good as the greedy path.
        assert!(wide[0].1 >= narrow[0].1 - 1e-12);
    }

    #[test]
    fn decode_scores_are_sorted_and_replayable() {
        let triples = board_triples();
        let st = train_component(&triples, ComponentKind::ST, &mem_config()).unwrap();
        let word = word_to_graphemes("board").unwrap();
        let decoded = decode(&st, &word, None, 5).unwrap();
        for pair in decoded.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
        }
        for (labels, score) in &decoded {
            let replay = force_decode(&st, &word, None, labels).unwrap();
            assert!((replay - score).abs() < 1e-9, "replay {replay} != {score}");
        }
    }

    #[test]
    fn greedy_learners_emit_one_candidate() {
        let triples = board_triples();
        let config = TrainConfig { window_k: 2, ..TrainConfig::new(LearnerKind::Dtl) };
        let st = train_component(&triples, ComponentKind::ST, &config).unwrap();
        let word = word_to_graphemes("board").unwrap();
        let decoded = decode(&st, &word, None, 5).unwrap();
        assert_eq!(decoded.len(), 1);
        assert_eq!(decoded[0].1, 0.0);
    }

    #[test]
    fn hybrid_rejects_greedy_learners() {
        let triples = board_triples();
        let config = TrainConfig { window_k: 2, ..TrainConfig::new(LearnerKind::Mbl) };
        let st = train_component(&triples, ComponentKind::ST, &config).unwrap();
        let pt = train_component(&triples, ComponentKind::PT, &config).unwrap();
        let sp = train_component(&triples, ComponentKind::SP, &config).unwrap();
        let set = ModelSet {
            st: Some(st),
            pt: Some(pt),
            spt: None,
            g2p: Some(G2pModel {
                component: sp,
                table: AssociationTable::default(),
                dict: PronDict::default(),
            }),
            beam: 5,
        };
        let word = word_to_graphemes("board").unwrap();
        let err = set.psi_h(&word, HybridConfig::default()).unwrap_err();
        assert!(matches!(err, Error::UnsupportedConfiguration(_)));
    }

    #[test]
    fn combine_is_idempotent_and_order_independent() {
        let c1 = Candidate {
            surface: "bodeu".into(),
            units: vec![TargetGrapheme::new("bodeu").unwrap()],
            score: -1.0,
            provenance: BTreeSet::from([ModelTag::G]),
        };
        let c2 = Candidate {
            surface: "bodeu".into(),
            units: vec![TargetGrapheme::new("bodeu").unwrap()],
            score: -0.5,
            provenance: BTreeSet::from([ModelTag::P]),
        };
        let c3 = Candidate {
            surface: "podeu".into(),
            units: vec![TargetGrapheme::new("podeu").unwrap()],
            score: -2.0,
            provenance: BTreeSet::from([ModelTag::C]),
        };
        let merged = dedup_candidates(vec![c1.clone(), c2.clone(), c3.clone()]);
        let merged_rev = dedup_candidates(vec![c3.clone(), c2.clone(), c1.clone()]);
        assert_eq!(merged, merged_rev);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged[0].surface, "bodeu");
        assert_eq!(merged[0].score, -0.5);
        assert_eq!(merged[0].provenance, BTreeSet::from([ModelTag::G, ModelTag::P]));
        let again = dedup_candidates(merged.clone());
        assert_eq!(again, merged);
    }

    #[test]
    fn model_set_roundtrips_through_disk() {
        let triples = board_triples();
        let config = mem_config();
        let st = train_component(&triples, ComponentKind::ST, &config).unwrap();
        let sp = train_component(&triples, ComponentKind::SP, &config).unwrap();
        let set = ModelSet {
            st: Some(st),
            pt: None,
            spt: None,
            g2p: Some(G2pModel {
                component: sp,
                table: AssociationTable::default(),
                dict: PronDict::default(),
            }),
            beam: 5,
        };
        let dir = tempfile::tempdir().unwrap();
        set.save(dir.path()).unwrap();
        let loaded = ModelSet::load(dir.path(), 5).unwrap();
        let word = word_to_graphemes("board").unwrap();
        assert_eq!(
            set.psi_g(&word).unwrap(),
            loaded.psi_g(&word).unwrap(),
            "loaded model must decode identically"
        );
        assert!(loaded.pt.is_none() && loaded.spt.is_none());
        assert!(loaded.g2p.is_some());
    }

    #[test]
    fn exhaustive_beam_matches_brute_force() {
        // Tiny model: beam as wide as the whole sequence space must agree
        // with explicit enumeration.
        let triples = board_triples();
        let st = train_component(&triples, ComponentKind::ST, &mem_config()).unwrap();
        let word = word_to_graphemes("car").unwrap();
        let labels = st.classifier.labels().to_vec();
        let exhaustive = labels.len().pow(word.len() as u32);
        let decoded = decode(&st, &word, None, exhaustive).unwrap();

        let mut best: Option<(Vec<String>, f64)> = None;
        let mut stack: Vec<Vec<String>> = vec![Vec::new()];
        while let Some(prefix) = stack.pop() {
            if prefix.len() == word.len() {
                let score = force_decode(&st, &word, None, &prefix).unwrap();
                let better = match &best {
                    None => true,
                    Some((bl, bs)) => {
                        score > *bs
                            || ((score - bs).abs() < 1e-12
                                && joined_surface(&prefix) < joined_surface(bl))
                    }
                };
                if better {
                    best = Some((prefix, score));
                }
                continue;
            }
            for l in &labels {
                let mut next = prefix.clone();
                next.push(l.clone());
                stack.push(next);
            }
        }
        let (best_labels, best_score) = best.unwrap();
        assert_eq!(decoded[0].0, best_labels);
        assert!((decoded[0].1 - best_score).abs() < 1e-9);
    }
}

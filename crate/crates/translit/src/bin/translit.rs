//! Command-line interface for training, transliterating, ranking, and
//! running the evaluation experiments.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use translit::dataset::{parse_pairs, write_pairs, PronDict};
use translit::error::{Error, Result};
use translit::features::ComponentKind;
use translit::harness::synthetic::{generate, write_pron_dict, SyntheticConfig};
use translit::harness::{run_experiment, EvalConfig, EXPERIMENT_IDS};
use translit::learners::LearnerKind;
use translit::pipeline::{
    HybridConfig, ModelSet, ModelTag, TrainConfig, DEFAULT_BEAM, DEFAULT_WINDOW,
};
use translit::ranking::{
    rank, select_method, CorpusProvider, FixtureProvider, FrequencyProvider, HttpProvider,
    RankConfig, RankEntry,
};
use translit::types::{word_to_graphemes, Grapheme};

#[derive(Parser)]
#[command(
    name = "translit",
    version,
    about = "Statistical machine transliteration: training, decoding, \
             web-frequency ranking, and evaluation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one component model and write it to a model file.
    Train {
        /// TSV of `source<TAB>target` transliteration pairs.
        #[arg(long)]
        pairs: PathBuf,
        /// Pronunciation dictionary (uppercase word, space-separated phones).
        #[arg(long)]
        dict: PathBuf,
        /// Component to save: sp, st, pt, or spt.
        #[arg(long)]
        component: String,
        /// Learner: mem, dtl, or mbl.
        #[arg(long)]
        learner: String,
        /// Context window half-width.
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        /// Output model file (conventionally <component>.tlm).
        #[arg(long)]
        out: PathBuf,
    },
    /// Produce transliteration candidates for words.
    Transliterate {
        /// Directory holding sp.tlm / st.tlm / pt.tlm / spt.tlm.
        #[arg(long)]
        models: PathBuf,
        /// Comma-separated model tags out of g,p,h,c.
        #[arg(long, default_value = "g,p,h,c")]
        model_set: String,
        /// Hybrid interpolation weight on the phoneme model.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Beam width for probabilistic decoding.
        #[arg(long, default_value_t = DEFAULT_BEAM)]
        beam: usize,
        /// A single word to transliterate.
        #[arg(long, conflicts_with = "input")]
        word: Option<String>,
        /// File with one word per line.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Rank candidate transliterations by web/corpus frequency.
    Rank {
        /// Directory holding the trained model files.
        #[arg(long)]
        models: PathBuf,
        /// Frequency provider, one of corpus:PATH, http:CONF, fixture:PATH.
        /// May be given multiple times for multiple engines.
        #[arg(long, required = true)]
        provider: Vec<String>,
        /// A single word to rank candidates for.
        #[arg(long, conflicts_with = "input")]
        word: Option<String>,
        /// File with one word per line.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run one cross-validated experiment and write a JSON report.
    Evaluate {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        /// Number of cross-validation folds.
        #[arg(long, default_value_t = 5)]
        folds: usize,
        /// Seed for fold assignment and subsampling.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// One of: hybrid_sweep, comparison, dictionary, window,
        /// datasize, overlap, rank_eval.
        #[arg(long)]
        experiment: String,
        /// Where to write the JSON report.
        #[arg(long)]
        report: PathBuf,
    },
    /// Generate a seeded synthetic dataset (pairs file plus a
    /// pronunciation dictionary written next to it with extension .dict).
    GenSynthetic {
        #[arg(long)]
        seed: u64,
        /// Number of distinct words to generate.
        #[arg(long)]
        size: usize,
        /// Output pairs file; the dictionary goes to the same path with
        /// extension .dict.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (e.g. `translit ... | head`) instead
    // of panicking on the failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { pairs, dict, component, learner, window, out } => {
            let kind = ComponentKind::from_str(&component)?;
            let learner = LearnerKind::from_str(&learner)?;
            let data = parse_pairs(&pairs)?;
            report_rejects("pairs", &data.rejected);
            let dict = PronDict::load(&dict)?;
            let config = TrainConfig { window_k: window, ..TrainConfig::new(learner) };
            let set = translit::pipeline::train_model_set(&data.pairs, &dict, &config, DEFAULT_BEAM)?;
            set.save_component_file(kind, &out)?;
            println!(
                "trained {} component ({} learner, window {window}) on {} pairs -> {}",
                kind.name(),
                learner.name(),
                data.pairs.len(),
                out.display()
            );
            Ok(())
        }
        Command::Transliterate { models, model_set, alpha, beam, word, input } => {
            let set = ModelSet::load(&models, beam)?;
            let tags: BTreeSet<ModelTag> = model_set
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| ModelTag::from_str(s.trim()))
                .collect::<Result<_>>()?;
            if tags.is_empty() {
                return Err(Error::Config("empty model set".into()));
            }
            let cfg = HybridConfig::new(alpha)?;
            for w in words(word, input)? {
                let graphemes = word_to_graphemes(&w)?;
                let candidates = set.combine(&tags, &graphemes, cfg)?;
                for c in candidates {
                    let provenance: Vec<String> =
                        c.provenance.iter().map(|t| t.to_string()).collect();
                    println!("{w}\t{}\t{:.6}\t{}", c.surface, c.score, provenance.join("+"));
                }
            }
            Ok(())
        }
        Command::Rank { models, provider, word, input } => {
            let set = ModelSet::load(&models, DEFAULT_BEAM)?;
            let providers = load_providers(&provider)?;
            let provider_refs: Vec<&dyn FrequencyProvider> =
                providers.iter().map(|p| p.as_ref()).collect();
            let rank_config = RankConfig::default();
            for w in words(word, input)? {
                let graphemes = word_to_graphemes(&w)?;
                let candidates = candidates_for_ranking(&set, &graphemes)?;
                let entries: Vec<RankEntry> = candidates
                    .iter()
                    .map(|c| RankEntry {
                        surface: c.surface.clone(),
                        single_unit: c.units.iter().filter(|u| !u.is_null()).count() == 1,
                    })
                    .collect();
                let selection = select_method(&w, &entries, &provider_refs);
                for engine in &selection.failed_engines {
                    eprintln!("warning: engine {engine} failed for {w}; counted as zero");
                }
                match selection.method {
                    Some(method) => {
                        let ranked = rank(&w, &entries, method, &provider_refs, &rank_config);
                        for r in ranked {
                            println!("{w}\t{}\t{}\t{:.4}", method.name(), r.surface, r.rf);
                        }
                    }
                    None => {
                        // No search method found any frequency evidence;
                        // fall back to model-score order.
                        for c in &candidates {
                            println!("{w}\tNONE\t{}\t{:.4}", c.surface, 0.0);
                        }
                    }
                }
            }
            Ok(())
        }
        Command::Evaluate { pairs, dict, folds, seed, experiment, report } => {
            if !EXPERIMENT_IDS.contains(&experiment.as_str()) {
                return Err(Error::UnknownExperiment(format!(
                    "{experiment} (known: {})",
                    EXPERIMENT_IDS.join(", ")
                )));
            }
            let data = parse_pairs(&pairs)?;
            report_rejects("pairs", &data.rejected);
            let dict = PronDict::load(&dict)?;
            let cfg = EvalConfig { folds, seed, ..EvalConfig::default() };
            let result = run_experiment(&experiment, &data.pairs, &dict, &cfg, None)?;
            result.write_json(&report)?;
            print!("{}", result.render_text());
            println!("\nreport written to {}", report.display());
            Ok(())
        }
        Command::GenSynthetic { seed, size, out } => {
            let data = generate(seed, size, &SyntheticConfig::default())?;
            write_pairs(&data.pairs, &out)?;
            let dict_path = out.with_extension("dict");
            write_pron_dict(&data.dict_entries, &dict_path)?;
            println!(
                "wrote {} pairs to {} and {} dictionary entries to {}",
                data.pairs.len(),
                out.display(),
                data.dict_entries.len(),
                dict_path.display()
            );
            Ok(())
        }
    }
}

fn words(word: Option<String>, input: Option<PathBuf>) -> Result<Vec<String>> {
    match (word, input) {
        (Some(w), None) => Ok(vec![w]),
        (None, Some(path)) => {
            let text =
                std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let words: Vec<String> =
                text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
            if words.is_empty() {
                return Err(Error::Config(format!("{} contains no words", path.display())));
            }
            Ok(words)
        }
        _ => Err(Error::Config("give exactly one of --word or --input".into())),
    }
}

fn report_rejects(what: &str, rejected: &[translit::dataset::RejectedLine]) {
    for r in rejected {
        eprintln!("warning: skipped {what} line {}: {} ({})", r.line, r.content, r.reason);
    }
}

fn load_providers(specs: &[String]) -> Result<Vec<Box<dyn FrequencyProvider>>> {
    let mut out: Vec<Box<dyn FrequencyProvider>> = Vec::new();
    for spec in specs {
        let Some((kind, path)) = spec.split_once(':') else {
            return Err(Error::Config(format!(
                "provider {spec:?} is not of the form corpus:PATH, http:CONF, or fixture:PATH"
            )));
        };
        match kind {
            "corpus" => {
                let id = PathBuf::from(path)
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "corpus".to_string());
                out.push(Box::new(CorpusProvider::load(id, path)?));
            }
            "http" => {
                for engine in HttpProvider::load_config(path)? {
                    out.push(Box::new(engine));
                }
            }
            "fixture" => {
                for fixture in FixtureProvider::load_file(path)? {
                    out.push(Box::new(fixture));
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown provider kind {other:?} (expected corpus, http, or fixture)"
                )));
            }
        }
    }
    Ok(out)
}

/// Candidate pool for ranking: the union of every model the loaded set
/// supports (hybrid only when the learner provides probabilities).
fn candidates_for_ranking(
    set: &ModelSet,
    word: &[Grapheme],
) -> Result<Vec<translit::pipeline::Candidate>> {
    let mut tags = BTreeSet::from([ModelTag::G]);
    if set.g2p.is_some() && set.pt.is_some() {
        tags.insert(ModelTag::P);
        if set.hybrid_pool(word).is_ok() {
            tags.insert(ModelTag::H);
        }
    }
    if set.g2p.is_some() && set.spt.is_some() {
        tags.insert(ModelTag::C);
    }
    let candidates = set.combine(&tags, word, HybridConfig::default())?;
    if candidates.is_empty() {
        return Err(Error::Config("no candidates produced".into()));
    }
    Ok(candidates)
}

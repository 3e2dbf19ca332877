//! Web/corpus-frequency candidate ranking: the bilingual-phrasal →
//! bilingual-keyword → monolingual-keyword search cascade, per-engine
//! normalized frequencies, and the summed relevance score.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SearchMethod {
    /// Bilingual phrasal search: candidate adjacent to the source word.
    Bps,
    /// Bilingual keyword search: both terms anywhere in a document.
    Bks,
    /// Monolingual keyword search: the candidate alone.
    Mks,
}

impl SearchMethod {
    pub fn name(self) -> &'static str {
        match self {
            SearchMethod::Bps => "BPS",
            SearchMethod::Bks => "BKS",
            SearchMethod::Mks => "MKS",
        }
    }
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A frequency source (search engine or offline stand-in). Must be safe
/// for concurrent queries; identical queries within one session must
/// return identical counts.
pub trait FrequencyProvider: Sync {
    fn engine_id(&self) -> &str;
    fn count(&self, method: SearchMethod, source: &str, candidate: &str) -> Result<u64>;
}

/// One candidate entering the ranking step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankEntry {
    pub surface: String,
    /// True when the candidate consists of a single target unit; such
    /// candidates attract spurious keyword hits and can be demoted.
    pub single_unit: bool,
}

impl RankEntry {
    pub fn new(surface: impl Into<String>) -> Self {
        RankEntry { surface: surface.into(), single_unit: false }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RankConfig {
    /// Demote single-unit candidates to rank-last under keyword searches.
    pub demote_single_unit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub surface: String,
    /// Raw per-engine frequencies under the selected method.
    pub wf: BTreeMap<String, u64>,
    /// Per-engine normalized frequencies over the candidate set.
    pub nwf: BTreeMap<String, f64>,
    /// Sum of normalized frequencies across engines.
    pub rf: f64,
}

/// Outcome of the method cascade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSelection {
    pub method: Option<SearchMethod>,
    /// Engines whose queries failed (they contributed 0).
    pub failed_engines: BTreeSet<String>,
}

/// Applies the cascade: the first method whose double sum over engines
/// and candidates is nonzero wins; later methods are never queried.
pub fn select_method(
    source: &str,
    candidates: &[RankEntry],
    providers: &[&dyn FrequencyProvider],
) -> MethodSelection {
    let mut failed_engines = BTreeSet::new();
    for method in [SearchMethod::Bps, SearchMethod::Bks, SearchMethod::Mks] {
        let mut total: u64 = 0;
        for provider in providers {
            for c in candidates {
                match provider.count(method, source, &c.surface) {
                    Ok(n) => total += n,
                    Err(_) => {
                        failed_engines.insert(provider.engine_id().to_string());
                    }
                }
            }
        }
        if total != 0 {
            return MethodSelection { method: Some(method), failed_engines };
        }
    }
    MethodSelection { method: None, failed_engines }
}

/// Ranks the candidate set under one method: per-engine normalization
/// over exactly this set, relevance = sum of normalized frequencies.
/// Engines whose set total is 0 (or whose queries fail) contribute 0.
pub fn rank(
    source: &str,
    candidates: &[RankEntry],
    method: SearchMethod,
    providers: &[&dyn FrequencyProvider],
    config: &RankConfig,
) -> Vec<RankedCandidate> {
    let mut ranked: Vec<RankedCandidate> = candidates
        .iter()
        .map(|c| RankedCandidate {
            surface: c.surface.clone(),
            wf: BTreeMap::new(),
            nwf: BTreeMap::new(),
            rf: 0.0,
        })
        .collect();
    for provider in providers {
        let engine = provider.engine_id().to_string();
        let counts: Vec<u64> = candidates
            .iter()
            .map(|c| provider.count(method, source, &c.surface).unwrap_or(0))
            .collect();
        let total: u64 = counts.iter().sum();
        for (r, &wf) in ranked.iter_mut().zip(&counts) {
            let nwf = if total > 0 { wf as f64 / total as f64 } else { 0.0 };
            r.wf.insert(engine.clone(), wf);
            r.nwf.insert(engine.clone(), nwf);
            r.rf += nwf;
        }
    }
    let demoted: BTreeSet<String> = if config.demote_single_unit && method != SearchMethod::Bps {
        candidates.iter().filter(|c| c.single_unit).map(|c| c.surface.clone()).collect()
    } else {
        BTreeSet::new()
    };
    ranked.sort_by(|a, b| {
        let da = demoted.contains(&a.surface);
        let db = demoted.contains(&b.surface);
        da.cmp(&db)
            .then_with(|| b.rf.partial_cmp(&a.rf).expect("finite relevance"))
            .then_with(|| {
                let total_a: u64 = a.wf.values().sum();
                let total_b: u64 = b.wf.values().sum();
                total_b.cmp(&total_a)
            })
            .then_with(|| a.surface.cmp(&b.surface))
    });
    ranked
}

fn normalize_token(token: &str) -> String {
    token
        .chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(|c| c.to_lowercase())
        .collect()
}

/// Offline frequency source backed by a line-delimited text corpus.
/// Tokens are matched case- and punctuation-insensitively (parenthesized
/// and hyphenated forms count).
pub struct CorpusProvider {
    id: String,
    /// Tokenized lines, tokens normalized.
    lines: Vec<Vec<String>>,
    /// token → line ids containing it.
    index: BTreeMap<String, BTreeSet<usize>>,
}

impl CorpusProvider {
    pub fn load(id: impl Into<String>, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_text(id, &text))
    }

    pub fn from_text(id: impl Into<String>, text: &str) -> Self {
        let mut lines = Vec::new();
        let mut index: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for raw in text.lines() {
            let tokens: Vec<String> = raw
                .split_whitespace()
                .map(normalize_token)
                .filter(|t| !t.is_empty())
                .collect();
            if tokens.is_empty() {
                continue;
            }
            let line_id = lines.len();
            for t in &tokens {
                index.entry(t.clone()).or_default().insert(line_id);
            }
            lines.push(tokens);
        }
        CorpusProvider { id: id.into(), lines, index }
    }

    fn lines_with(&self, token: &str) -> Option<&BTreeSet<usize>> {
        self.index.get(&normalize_token(token))
    }
}

impl FrequencyProvider for CorpusProvider {
    fn engine_id(&self) -> &str {
        &self.id
    }

    fn count(&self, method: SearchMethod, source: &str, candidate: &str) -> Result<u64> {
        let cand = normalize_token(candidate);
        let Some(cand_lines) = self.lines_with(&cand) else {
            return Ok(0);
        };
        match method {
            SearchMethod::Mks => Ok(cand_lines.len() as u64),
            SearchMethod::Bks => {
                let src = normalize_token(source);
                let Some(src_lines) = self.lines_with(&src) else {
                    return Ok(0);
                };
                Ok(cand_lines.intersection(src_lines).count() as u64)
            }
            SearchMethod::Bps => {
                let src = normalize_token(source);
                let mut n = 0u64;
                for &line_id in cand_lines {
                    let tokens = &self.lines[line_id];
                    let adjacent = tokens.windows(2).any(|w| {
                        (w[0] == src && w[1] == cand) || (w[0] == cand && w[1] == src)
                    });
                    if adjacent {
                        n += 1;
                    }
                }
                Ok(n)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct QueryRecord {
    pub engine: String,
    pub method: SearchMethod,
    pub source: String,
    pub candidate: String,
}

/// Fixed-count provider for tests and fixture files. Records every
/// query so cascade behavior can be asserted.
pub struct FixtureProvider {
    id: String,
    /// (method, source, candidate) → count; missing entries count 0.
    counts: BTreeMap<(SearchMethod, String, String), u64>,
    log: Mutex<Vec<QueryRecord>>,
    /// When set, every query fails with this message (transport-failure
    /// simulation).
    fail: Option<String>,
}

impl FixtureProvider {
    pub fn new(id: impl Into<String>) -> Self {
        FixtureProvider { id: id.into(), counts: BTreeMap::new(), log: Mutex::new(Vec::new()), fail: None }
    }

    pub fn failing(id: impl Into<String>, message: impl Into<String>) -> Self {
        let mut p = Self::new(id);
        p.fail = Some(message.into());
        p
    }

    pub fn set(&mut self, method: SearchMethod, source: &str, candidate: &str, count: u64) {
        self.counts.insert((method, source.to_string(), candidate.to_string()), count);
    }

    /// Loads a fixture TSV: `engine<TAB>method<TAB>source<TAB>candidate<TAB>count`
    /// lines, `#` comments. Returns one provider per engine id, sorted.
    pub fn load_file(path: impl AsRef<Path>) -> Result<Vec<FixtureProvider>> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut by_engine: BTreeMap<String, FixtureProvider> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let err = |message: String| Error::Parse { path: path.into(), line: idx + 1, message };
            if parts.len() != 5 {
                return Err(err(format!("expected 5 tab-separated fields, got {}", parts.len())));
            }
            let method = match parts[1].to_ascii_uppercase().as_str() {
                "BPS" => SearchMethod::Bps,
                "BKS" => SearchMethod::Bks,
                "MKS" => SearchMethod::Mks,
                other => return Err(err(format!("unknown search method {other:?}"))),
            };
            let count: u64 =
                parts[4].parse().map_err(|_| err(format!("bad count {:?}", parts[4])))?;
            by_engine
                .entry(parts[0].to_string())
                .or_insert_with(|| FixtureProvider::new(parts[0]))
                .set(method, parts[2], parts[3], count);
        }
        if by_engine.is_empty() {
            return Err(Error::EmptyDataset { path: path.into() });
        }
        Ok(by_engine.into_values().collect())
    }

    pub fn queries(&self) -> Vec<QueryRecord> {
        self.log.lock().expect("query log").clone()
    }

    /// True if any recorded query used the given method.
    pub fn queried(&self, method: SearchMethod) -> bool {
        self.queries().iter().any(|q| q.method == method)
    }
}

impl FrequencyProvider for FixtureProvider {
    fn engine_id(&self) -> &str {
        &self.id
    }

    fn count(&self, method: SearchMethod, source: &str, candidate: &str) -> Result<u64> {
        self.log.lock().expect("query log").push(QueryRecord {
            engine: self.id.clone(),
            method,
            source: source.to_string(),
            candidate: candidate.to_string(),
        });
        if let Some(message) = &self.fail {
            return Err(Error::Config(message.clone()));
        }
        Ok(self
            .counts
            .get(&(method, source.to_string(), candidate.to_string()))
            .copied()
            .unwrap_or(0))
    }
}

/// Configuration for one live search engine.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HttpEngineConfig {
    pub id: String,
    /// URL templates per method with `{source}` / `{candidate}`
    /// placeholders (already percent-encoding-safe values are assumed).
    pub bps_url: String,
    pub bks_url: String,
    pub mks_url: String,
    /// Regular expression whose first capture group is the hit count.
    pub count_pattern: String,
    /// Maximum queries per second; 0 disables throttling.
    pub rate_limit_qps: f64,
}

/// Live search-engine client with a mandatory disk cache: one file per
/// (engine, method, query hash). `TRANSLIT_CACHE_DIR` overrides the
/// cache location.
pub struct HttpProvider {
    config: HttpEngineConfig,
    pattern: regex::Regex,
    cache_dir: PathBuf,
    client: reqwest::blocking::Client,
    last_request: Mutex<Option<Instant>>,
    /// Failed queries (returned 0), kept for reporting.
    diagnostics: Mutex<Vec<String>>,
}

pub fn default_cache_dir() -> PathBuf {
    std::env::var_os("TRANSLIT_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".translit-cache"))
}

impl HttpProvider {
    pub fn new(config: HttpEngineConfig) -> Result<Self> {
        if config.bps_url.is_empty() || config.bks_url.is_empty() || config.mks_url.is_empty() {
            return Err(Error::Config(format!(
                "engine {:?}: all three query templates are required",
                config.id
            )));
        }
        let pattern = regex::Regex::new(&config.count_pattern)
            .map_err(|e| Error::Config(format!("engine {:?}: bad count pattern: {e}", config.id)))?;
        Ok(HttpProvider {
            config,
            pattern,
            cache_dir: default_cache_dir(),
            client: reqwest::blocking::Client::new(),
            last_request: Mutex::new(None),
            diagnostics: Mutex::new(Vec::new()),
        })
    }

    /// Loads one or more engine configs from a JSON file (a single object
    /// or an array of objects).
    pub fn load_config(path: impl AsRef<Path>) -> Result<Vec<HttpProvider>> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let configs: Vec<HttpEngineConfig> = if text.trim_start().starts_with('[') {
            serde_json::from_str(&text)
        } else {
            serde_json::from_str::<HttpEngineConfig>(&text).map(|c| vec![c])
        }
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        configs.into_iter().map(HttpProvider::new).collect()
    }

    pub fn diagnostics(&self) -> Vec<String> {
        self.diagnostics.lock().expect("diagnostics").clone()
    }

    fn url_for(&self, method: SearchMethod, source: &str, candidate: &str) -> String {
        let template = match method {
            SearchMethod::Bps => &self.config.bps_url,
            SearchMethod::Bks => &self.config.bks_url,
            SearchMethod::Mks => &self.config.mks_url,
        };
        template.replace("{source}", source).replace("{candidate}", candidate)
    }

    fn cache_path(&self, method: SearchMethod, url: &str) -> PathBuf {
        let digest = Sha256::digest(url.as_bytes());
        let hash: String = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();
        self.cache_dir.join(format!("{}-{}-{}.txt", self.config.id, method.name(), hash))
    }

    fn throttle(&self) {
        if self.config.rate_limit_qps <= 0.0 {
            return;
        }
        let min_gap = Duration::from_secs_f64(1.0 / self.config.rate_limit_qps);
        let mut last = self.last_request.lock().expect("rate limiter");
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < min_gap {
                std::thread::sleep(min_gap - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn note(&self, message: String) {
        self.diagnostics.lock().expect("diagnostics").push(message);
    }
}

impl FrequencyProvider for HttpProvider {
    fn engine_id(&self) -> &str {
        &self.config.id
    }

    fn count(&self, method: SearchMethod, source: &str, candidate: &str) -> Result<u64> {
        let url = self.url_for(method, source, candidate);
        let cache = self.cache_path(method, &url);
        if let Ok(text) = fs::read_to_string(&cache) {
            if let Some(first) = text.lines().next() {
                if let Ok(n) = first.trim().parse::<u64>() {
                    return Ok(n);
                }
            }
        }
        self.throttle();
        let body = match self.client.get(&url).send().and_then(|r| r.error_for_status()) {
            Ok(resp) => match resp.text() {
                Ok(t) => t,
                Err(e) => {
                    self.note(format!("{url}: unreadable body: {e}"));
                    return Ok(0);
                }
            },
            Err(e) => {
                self.note(format!("{url}: {e}"));
                return Ok(0);
            }
        };
        let count = match self.pattern.captures(&body).and_then(|c| c.get(1)) {
            Some(m) => {
                let digits: String = m.as_str().chars().filter(|c| c.is_ascii_digit()).collect();
                match digits.parse::<u64>() {
                    Ok(n) => n,
                    Err(_) => {
                        self.note(format!("{url}: unparsable count {:?}", m.as_str()));
                        0
                    }
                }
            }
            None => {
                self.note(format!("{url}: count pattern not found"));
                0
            }
        };
        if fs::create_dir_all(&self.cache_dir).is_ok() {
            let stamp = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            // Last writer wins on races; each write is a full small file.
            let _ = fs::write(&cache, format!("{count}\n{stamp}\n"));
        }
        Ok(count)
    }
}

//! Flat `key = value` pipeline configuration with `TOPICVD_` environment
//! overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::assemble::AssemblyRules;
use crate::clip::FrameSelection;
use crate::corpus::{ScenarioKind, SplitRules, Topic};
use crate::error::{Error, Result};
use crate::fusion::ScoreFn;
use crate::metrics::TokenizeLang;
use crate::subtitle::MarkupFilter;

pub const ENV_PREFIX: &str = "TOPICVD_";

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "top-level seed; required"),
    ("documentaries", "TSV of title, topic, source SRT, target SRT (`-` for a mixed file); required"),
    ("out_dir", "run directory (default `run`)"),
    ("strict", "reject malformed SRT blocks instead of skipping them (default false)"),
    ("markup.blacklist", "characters removed from subtitle text (default music notes)"),
    ("markup.strip_speaker_dash", "drop leading speaker dashes (default true)"),
    ("assembly.source_terminals", "sentence-final marks for the source language (default .!?…)"),
    ("assembly.target_terminals", "sentence-final marks for the target language (default 。！？…)"),
    ("assembly.max_gap_ms", "silence that closes a sentence (default 5000)"),
    ("assembly.max_cues", "maximum cues per sentence (default 8)"),
    ("scoring.vectors", "vector file; enables quality scoring"),
    ("scoring.threshold", "drop pairs scoring below this value (default none)"),
    ("split.file", "explicit split file instead of a seeded split"),
    ("split.two_heldout_from", "documentary count from which a topic holds out two per split (default 20)"),
    ("augment.extra", "extra corpus manifest merged into the training split"),
    ("augment.claims", "expected post-augmentation sizes, e.g. `Technology:16654,Nature:32488`"),
    ("scenario.kind", "training scenario to materialise"),
    ("scenario.topic", "test topic for the scenario"),
    ("context.k", "context clips retrieved per subtitle; 0 disables (default 1)"),
    ("context.before_only", "only retrieve earlier subtitles (default false)"),
    ("context.similarity", "`lexical` or `embedding` (default lexical)"),
    ("fusion.g", "alignment score function: identity or scaled (default identity)"),
    ("fusion.text", "text feature matrix"),
    ("fusion.video", "video feature matrix"),
    ("fusion.raw_video", "bi-attention over raw frames instead of the selective-attention output (default false)"),
    ("frames.rate_hz", "frame extraction rate (default 1)"),
    ("frames.ssim_threshold", "SSIM above which a frame is dropped (default 0.5)"),
    ("frames.ssim_window", "SSIM window side (default 8)"),
    ("bleu.hyp", "hypothesis file, one sentence per line"),
    ("bleu.ref", "reference file, one sentence per line"),
    ("bleu.lang", "`en` or `zh` tokenization (default zh)"),
    ("bleu.lowercase", "case-fold before scoring (default false)"),
    ("bleu.smoothing", "add-epsilon smoothing for zero-match orders (default none)"),
];

/// `KEY` → `TOPICVD_KEY` with dots replaced by underscores.
pub fn env_key(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.to_uppercase().replace('.', "_"))
}

/// Parses `key = value` lines; `#` starts a comment line.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::parse(i + 1, format!("unknown key `{key}`")));
        }
        if out.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::parse(i + 1, format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextSimilarity {
    Lexical,
    Embedding,
}

impl FromStr for ContextSimilarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lexical" => Ok(ContextSimilarity::Lexical),
            "embedding" => Ok(ContextSimilarity::Embedding),
            other => Err(Error::Config(format!("unknown similarity `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub documentaries: PathBuf,
    pub out_dir: PathBuf,
    pub strict: bool,
    pub markup: MarkupFilter,
    pub assembly: AssemblyRules,
    pub vectors: Option<PathBuf>,
    pub score_threshold: Option<f64>,
    pub split_file: Option<PathBuf>,
    pub split_rules: SplitRules,
    pub extra_manifest: Option<PathBuf>,
    pub augment_claims: Vec<(Topic, usize)>,
    pub scenario: Option<(ScenarioKind, Topic)>,
    pub context_k: usize,
    pub context_before_only: bool,
    pub context_similarity: ContextSimilarity,
    pub score_fn: ScoreFn,
    pub fusion_text: Option<PathBuf>,
    pub fusion_video: Option<PathBuf>,
    pub fusion_raw_video: bool,
    pub frames: FrameSelection,
    pub bleu_hyp: Option<PathBuf>,
    pub bleu_ref: Option<PathBuf>,
    pub bleu_lang: TokenizeLang,
    pub bleu_lowercase: bool,
    pub bleu_smoothing: Option<f64>,
}

fn value<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
        })
        .transpose()
}

fn flag(map: &BTreeMap<String, String>, key: &str, default: bool) -> Result<bool> {
    match map.get(key).map(|v| v.to_ascii_lowercase()) {
        None => Ok(default),
        Some(v) => match v.as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(Error::Config(format!("invalid boolean `{v}` for `{key}`"))),
        },
    }
}

fn parse_claims(text: &str) -> Result<Vec<(Topic, usize)>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (topic, count) = item
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("claim `{item}` is not `Topic:count`")))?;
            let count = count
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid count in claim `{item}`")))?;
            Ok((topic.trim().parse()?, count))
        })
        .collect()
}

/// Markup settings from `markup.*` keys.
pub fn markup_filter(map: &BTreeMap<String, String>) -> Result<MarkupFilter> {
    let mut markup = MarkupFilter::default();
    if let Some(chars) = map.get("markup.blacklist") {
        markup.blacklist = chars.chars().filter(|c| !c.is_whitespace()).collect();
    }
    markup.strip_speaker_dash = flag(map, "markup.strip_speaker_dash", true)?;
    Ok(markup)
}

/// Sentence boundary rules from `assembly.*` keys.
pub fn assembly_rules(map: &BTreeMap<String, String>) -> Result<AssemblyRules> {
    let mut assembly = AssemblyRules::default();
    if let Some(t) = map.get("assembly.source_terminals") {
        assembly.source_terminals = t.chars().filter(|c| !c.is_whitespace()).collect();
    }
    if let Some(t) = map.get("assembly.target_terminals") {
        assembly.target_terminals = t.chars().filter(|c| !c.is_whitespace()).collect();
    }
    if let Some(v) = value(map, "assembly.max_gap_ms")? {
        assembly.max_gap_ms = v;
    }
    if let Some(v) = value(map, "assembly.max_cues")? {
        assembly.max_cues = v;
    }
    if assembly.max_cues == 0 {
        return Err(Error::Config("`assembly.max_cues` must be positive".into()));
    }
    Ok(assembly)
}

/// Key/value settings from an optional file merged with environment
/// overrides, plus the directory relative paths resolve against.
pub fn load_map(
    path: Option<&Path>,
    env: impl Fn(&str) -> Option<String>,
) -> Result<(BTreeMap<String, String>, PathBuf)> {
    let (mut map, base) = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            (parse_key_values(&text)?, base)
        }
        None => (BTreeMap::new(), PathBuf::from(".")),
    };
    for (key, _) in KEYS {
        if let Some(v) = env(&env_key(key)) {
            map.insert(key.to_string(), v);
        }
    }
    Ok((map, base))
}

impl PipelineConfig {
    /// Builds a config from already-merged key/value pairs. Relative paths
    /// resolve against `base`.
    pub fn from_map(map: &BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let path = |key: &str| map.get(key).map(|v| base.join(v));
        let seed = value(map, "seed")?
            .ok_or_else(|| Error::Config("`seed` is required".into()))?;
        let documentaries =
            path("documentaries").ok_or_else(|| Error::Config("`documentaries` is required".into()))?;

        let markup = markup_filter(map)?;
        let assembly = assembly_rules(map)?;

        let mut split_rules = SplitRules::default();
        if let Some(v) = value(map, "split.two_heldout_from")? {
            split_rules.two_heldout_from = v;
        }

        let scenario = match (map.get("scenario.kind"), map.get("scenario.topic")) {
            (None, None) => None,
            (Some(kind), Some(topic)) => Some((kind.parse()?, topic.parse()?)),
            _ => {
                return Err(Error::Config(
                    "`scenario.kind` and `scenario.topic` must be given together".into(),
                ))
            }
        };

        let mut frames = FrameSelection::default();
        if let Some(v) = value(map, "frames.rate_hz")? {
            frames.rate_hz = v;
        }
        if let Some(v) = value(map, "frames.ssim_threshold")? {
            frames.ssim_threshold = v;
        }
        if let Some(v) = value(map, "frames.ssim_window")? {
            frames.ssim.window = v;
        }
        if !(frames.rate_hz > 0.0) {
            return Err(Error::Config("`frames.rate_hz` must be positive".into()));
        }

        let bleu_lang = match map.get("bleu.lang").map(String::as_str) {
            None | Some("zh") => TokenizeLang::Zh,
            Some("en") => TokenizeLang::En,
            Some(other) => return Err(Error::Config(format!("unknown BLEU language `{other}`"))),
        };

        let config = PipelineConfig {
            seed,
            documentaries,
            out_dir: path("out_dir").unwrap_or_else(|| base.join("run")),
            strict: flag(map, "strict", false)?,
            markup,
            assembly,
            vectors: path("scoring.vectors"),
            score_threshold: value(map, "scoring.threshold")?,
            split_file: path("split.file"),
            split_rules,
            extra_manifest: path("augment.extra"),
            augment_claims: map
                .get("augment.claims")
                .map(|c| parse_claims(c))
                .transpose()?
                .unwrap_or_default(),
            scenario,
            context_k: value(map, "context.k")?.unwrap_or(1),
            context_before_only: flag(map, "context.before_only", false)?,
            context_similarity: value(map, "context.similarity")?
                .unwrap_or(ContextSimilarity::Lexical),
            score_fn: match map.get("fusion.g") {
                Some(g) => g.parse()?,
                None => ScoreFn::default(),
            },
            fusion_text: path("fusion.text"),
            fusion_video: path("fusion.video"),
            fusion_raw_video: flag(map, "fusion.raw_video", false)?,
            frames,
            bleu_hyp: path("bleu.hyp"),
            bleu_ref: path("bleu.ref"),
            bleu_lang,
            bleu_lowercase: flag(map, "bleu.lowercase", false)?,
            bleu_smoothing: value(map, "bleu.smoothing")?,
        };
        if config.fusion_text.is_some() != config.fusion_video.is_some() {
            return Err(Error::Config("`fusion.text` and `fusion.video` must be given together".into()));
        }
        if config.bleu_hyp.is_some() != config.bleu_ref.is_some() {
            return Err(Error::Config("`bleu.hyp` and `bleu.ref` must be given together".into()));
        }
        if config.score_threshold.is_some() && config.vectors.is_none() {
            return Err(Error::Config("`scoring.threshold` needs `scoring.vectors`".into()));
        }
        if config.context_similarity == ContextSimilarity::Embedding
            && config.vectors.is_none()
            && config.context_k > 0
        {
            return Err(Error::Config("embedding context similarity needs `scoring.vectors`".into()));
        }
        Ok(config)
    }

    /// Reads `path` and applies overrides from `env` (keyed by [`env_key`]).
    pub fn load_with(path: &Path, env: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let (map, base) = load_map(Some(path), env)?;
        Self::from_map(&map, &base)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::load_with(path, |k| std::env::var(k).ok())
    }
}

//! Cosine-similarity quality estimation over externally produced sentence
//! embeddings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assemble::SentencePair;
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::subtitle::Language;

/// Cosine similarity clamped to `[-1, 1]`.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!("vectors of length {} and {}", u.len(), v.len())));
    }
    if u.is_empty() {
        return Err(Error::Dimension("empty vectors".into()));
    }
    let (mut dot, mut uu, mut vv) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in u.iter().zip(v) {
        dot = dot + a * b;
        uu = uu + a * a;
        vv = vv + b * b;
    }
    if !(dot.is_finite() && uu.is_finite() && vv.is_finite()) {
        return Err(Error::NonFinite("cosine operands".into()));
    }
    if uu == T::zero() || vv == T::zero() {
        return Err(Error::ZeroVector("cosine operand".into()));
    }
    let c = dot / (uu.sqrt() * vv.sqrt());
    Ok(c.max(-T::one()).min(T::one()))
}

/// Quality estimation score: `100 * max(0, cosine)` rounded to two decimals,
/// with the raw cosine retained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QeScore {
    pub value: f64,
    pub cosine: f64,
}

impl QeScore {
    pub fn from_cosine(cosine: f64) -> Self {
        let value = (100.0 * cosine.max(0.0) * 100.0).round() / 100.0;
        QeScore { value, cosine }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmbeddingKey {
    pub documentary: String,
    pub position: u32,
    pub language: Language,
}

impl EmbeddingKey {
    pub fn new(documentary: impl Into<String>, position: u32, language: Language) -> Self {
        EmbeddingKey {
            documentary: documentary.into(),
            position,
            language,
        }
    }
}

/// In-memory vector file: every record shares one dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<EmbeddingKey, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedVectors {
    pub store: EmbeddingStore,
    pub warnings: Vec<String>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        EmbeddingStore {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, key: EmbeddingKey, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension(format!(
                "vector for ({}, {}, {}) has {} entries, store dim is {}",
                key.documentary,
                key.position,
                key.language,
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "vector for ({}, {}, {})",
                key.documentary, key.position, key.language
            )));
        }
        self.vectors.insert(key, vector);
        Ok(())
    }

    pub fn get(&self, documentary: &str, position: u32, language: Language) -> Option<&[f64]> {
        self.vectors
            .get(&EmbeddingKey::new(documentary, position, language))
            .map(Vec::as_slice)
    }

    /// Reads the vector file format: a `dim=<d>` header, then
    /// `documentary TAB position TAB language TAB floats` per line.
    ///
    /// A bad header is an error; bad records are skipped with a warning.
    pub fn parse(text: &str) -> Result<ParsedVectors> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "missing `dim=<d>` header"))?;
        let dim: usize = header
            .trim()
            .strip_prefix("dim=")
            .and_then(|d| d.trim().parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::parse(1, format!("expected `dim=<d>` header, found `{header}`")))?;

        let mut store = EmbeddingStore::new(dim);
        let mut warnings = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let record = Self::parse_record(line).and_then(|(key, v)| {
                if store.vectors.contains_key(&key) {
                    return Err(format!("duplicate key ({}, {}, {})", key.documentary, key.position, key.language));
                }
                store.insert(key, v).map_err(|e| e.to_string())
            });
            if let Err(msg) = record {
                warnings.push(format!("line {lineno}: {msg}"));
            }
        }
        Ok(ParsedVectors { store, warnings })
    }

    fn parse_record(line: &str) -> std::result::Result<(EmbeddingKey, Vec<f64>), String> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
        }
        let position: u32 = fields[1]
            .trim()
            .parse()
            .map_err(|_| format!("bad position `{}`", fields[1]))?;
        let language: Language = fields[2].parse().map_err(|e: Error| e.to_string())?;
        let vector = fields[3]
            .split_whitespace()
            .map(|x| x.parse::<f64>().map_err(|_| format!("bad float `{x}`")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok((EmbeddingKey::new(fields[0], position, language), vector))
    }

    pub fn read(path: &Path) -> Result<ParsedVectors> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("dim={}\n", self.dim);
        for (key, v) in &self.vectors {
            let floats: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                key.documentary,
                key.position,
                key.language,
                floats.join(" ")
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MissingVector {
    pub documentary: String,
    pub position: u32,
    pub language: Language,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredPairs {
    pub pairs: Vec<SentencePair>,
    pub missing: Vec<MissingVector>,
}

/// Scores every pair whose source and target vectors are both present.
/// Pairs without vectors pass through unscored and are listed in `missing`.
pub fn score_pairs(pairs: &[SentencePair], store: &EmbeddingStore) -> Result<ScoredPairs> {
    let mut out = ScoredPairs::default();
    for pair in pairs {
        let src = store.get(&pair.documentary, pair.position, Language::Source);
        let tgt = store.get(&pair.documentary, pair.position, Language::Target);
        let mut scored = pair.clone();
        match (src, tgt) {
            (Some(u), Some(v)) => {
                scored.score = Some(QeScore::from_cosine(cosine(u, v)?));
            }
            _ => {
                for (lang, present) in [(Language::Source, src.is_some()), (Language::Target, tgt.is_some())] {
                    if !present {
                        out.missing.push(MissingVector {
                            documentary: pair.documentary.clone(),
                            position: pair.position,
                            language: lang,
                        });
                    }
                }
                scored.score = None;
            }
        }
        out.pairs.push(scored);
    }
    Ok(out)
}

/// Splits pairs into those scoring at least `threshold` and the rest.
pub fn filter_by_score(
    pairs: &[SentencePair],
    threshold: f64,
) -> Result<(Vec<SentencePair>, Vec<SentencePair>)> {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for pair in pairs {
        let score = pair.score.ok_or_else(|| Error::Unscored {
            documentary: pair.documentary.clone(),
            position: pair.position,
        })?;
        if score.value >= threshold {
            kept.push(pair.clone());
        } else {
            dropped.push(pair.clone());
        }
    }
    Ok((kept, dropped))
}

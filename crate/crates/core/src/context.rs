//! Retrieval of the most similar subtitles within one documentary, used as
//! contextual video clips for the subtitle being translated.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::{CorpusManifest, CorpusRecord};
use crate::error::{Error, Result};
use crate::scoring::{cosine, EmbeddingStore};
use crate::subtitle::{is_han, Language};

#[derive(Debug, Clone, Copy)]
pub enum Similarity<'a> {
    /// Cosine of the source-side sentence embeddings.
    Embedding(&'a EmbeddingStore),
    /// Token-set Jaccard on the source texts.
    Lexical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub position: u32,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextSet {
    pub documentary: String,
    pub position: u32,
    pub neighbors: Vec<Neighbor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContextQuery {
    pub k: usize,
    /// Only consider subtitles positioned before the anchor.
    pub before_only: bool,
}

fn tokens(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut word = String::new();
    for c in text.chars().flat_map(char::to_lowercase) {
        if is_han(c) {
            if !word.is_empty() {
                out.insert(std::mem::take(&mut word));
            }
            out.insert(c.to_string());
        } else if c.is_alphanumeric() || c == '\'' {
            word.push(c);
        } else if !word.is_empty() {
            out.insert(std::mem::take(&mut word));
        }
    }
    if !word.is_empty() {
        out.insert(word);
    }
    out
}

/// Jaccard similarity of normalized token sets. Words are lowercased with
/// surrounding punctuation removed; each Han character is its own token.
/// Two texts without tokens are identical (1.0).
pub fn lexical_similarity(a: &str, b: &str) -> f64 {
    jaccard(&tokens(a), &tokens(b))
}

fn jaccard(ta: &BTreeSet<String>, tb: &BTreeSet<String>) -> f64 {
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let inter = ta.intersection(tb).count();
    let union = ta.len() + tb.len() - inter;
    inter as f64 / union as f64
}

/// Per-record data the similarity needs, computed once per record.
enum Feature<'a> {
    Tokens(BTreeSet<String>),
    Vector(&'a [f64]),
}

fn feature<'a>(sim: Similarity<'a>, r: &CorpusRecord) -> Result<Feature<'a>> {
    match sim {
        Similarity::Lexical => Ok(Feature::Tokens(tokens(&r.source_text))),
        Similarity::Embedding(store) => store
            .get(r.title(), r.position(), Language::Source)
            .map(Feature::Vector)
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "no source vector for ({}, {})",
                    r.title(),
                    r.position()
                ))
            }),
    }
}

fn compare(a: &Feature<'_>, b: &Feature<'_>) -> Result<f64> {
    match (a, b) {
        (Feature::Tokens(x), Feature::Tokens(y)) => Ok(jaccard(x, y)),
        (Feature::Vector(x), Feature::Vector(y)) => cosine(x, y),
        _ => unreachable!("features of one similarity kind"),
    }
}

/// Ranks the candidates of one anchor; `docs` holds (position, feature)
/// for every record of the anchor's documentary.
fn rank(docs: &[(u32, Feature<'_>)], anchor: usize, query: ContextQuery) -> Result<Vec<Neighbor>> {
    let (position, ref anchor_feature) = docs[anchor];
    let mut neighbors = Vec::new();
    if query.k > 0 {
        for (p, f) in docs {
            if *p == position || (query.before_only && *p > position) {
                continue;
            }
            neighbors.push(Neighbor {
                position: *p,
                similarity: compare(anchor_feature, f)?,
            });
        }
    }
    neighbors.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.position.abs_diff(position).cmp(&b.position.abs_diff(position)))
            .then(a.position.cmp(&b.position))
    });
    neighbors.truncate(query.k);
    Ok(neighbors)
}

/// Top-`k` subtitles of the anchor's documentary by similarity, ties broken
/// by temporal proximity to the anchor and then by earlier position.
pub fn retrieve_context(
    manifest: &CorpusManifest,
    documentary: &str,
    position: u32,
    query: ContextQuery,
    sim: Similarity<'_>,
) -> Result<ContextSet> {
    manifest
        .find(documentary, position)
        .ok_or_else(|| Error::UnknownAnchor {
            documentary: documentary.to_string(),
            position,
        })?;
    let docs = manifest
        .records()
        .iter()
        .filter(|r| r.title() == documentary)
        .map(|r| Ok((r.position(), feature(sim, r)?)))
        .collect::<Result<Vec<_>>>()?;
    let anchor = docs.iter().position(|(p, _)| *p == position).expect("anchor found above");
    Ok(ContextSet {
        documentary: documentary.to_string(),
        position,
        neighbors: rank(&docs, anchor, query)?,
    })
}

/// Context sets for every record of the manifest, in manifest order.
/// Equivalent to calling [`retrieve_context`] per record, with each
/// record's tokens or vector looked up once.
pub fn retrieve_all(
    manifest: &CorpusManifest,
    query: ContextQuery,
    sim: Similarity<'_>,
) -> Result<Vec<ContextSet>> {
    let mut by_doc: BTreeMap<&str, Vec<(u32, Feature<'_>)>> = BTreeMap::new();
    let mut slots = Vec::with_capacity(manifest.len());
    for r in manifest.records() {
        let docs = by_doc.entry(r.title()).or_default();
        slots.push((r.title(), docs.len()));
        docs.push((r.position(), feature(sim, r)?));
    }
    slots
        .into_iter()
        .map(|(title, i)| {
            let docs = &by_doc[title];
            Ok(ContextSet {
                documentary: title.to_string(),
                position: docs[i].0,
                neighbors: rank(docs, i, query)?,
            })
        })
        .collect()
}

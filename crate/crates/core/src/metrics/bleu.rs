use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BleuConfig {
    /// Add-epsilon smoothing: an order with zero matches uses `eps / total`
    /// as its precision. `None` leaves such corpora at BLEU 0.
    pub smoothing: Option<f64>,
}

/// Clipped n-gram counts for a corpus or a shard of one. Shards merge exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct NgramStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl NgramStats {
    pub fn from_sentence<T: Eq + Hash>(hypothesis: &[T], reference: &[T]) -> Self {
        let mut stats = NgramStats {
            hyp_len: hypothesis.len() as u64,
            ref_len: reference.len() as u64,
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            if hypothesis.len() < n {
                continue;
            }
            let ref_counts = ngram_counts(reference, n);
            let hyp_counts = ngram_counts(hypothesis, n);
            stats.totals[n - 1] = (hypothesis.len() + 1 - n) as u64;
            stats.matches[n - 1] = hyp_counts
                .iter()
                .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
                .sum();
        }
        stats
    }

    pub fn merge(&mut self, other: &NgramStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    pub fn report(&self, config: &BleuConfig) -> BleuReport {
        let mut precisions = [0.0; MAX_ORDER];
        for n in 0..MAX_ORDER {
            let (m, t) = (self.matches[n], self.totals[n]);
            precisions[n] = match (m, t, config.smoothing) {
                (_, 0, _) => 0.0,
                (0, t, Some(eps)) => eps / t as f64,
                (m, t, _) => m as f64 / t as f64,
            };
        }
        let brevity_penalty = if self.hyp_len == 0 {
            0.0
        } else if self.hyp_len < self.ref_len {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        } else {
            1.0
        };
        let bleu = if precisions.iter().any(|&p| p <= 0.0) {
            0.0
        } else {
            let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
            brevity_penalty * mean_log.exp()
        };
        BleuReport {
            bleu,
            bleu100: bleu * 100.0,
            precisions,
            brevity_penalty,
            hyp_len: self.hyp_len,
            ref_len: self.ref_len,
        }
    }
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BleuReport {
    pub bleu: f64,
    /// `bleu * 100`, the scale used in result tables.
    pub bleu100: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

/// Corpus-level BLEU-4 with one reference per hypothesis.
pub fn bleu4<T: Eq + Hash>(
    hypotheses: &[Vec<T>],
    references: &[Vec<T>],
    config: &BleuConfig,
) -> Result<BleuReport> {
    if hypotheses.len() != references.len() {
        return Err(Error::Dimension(format!(
            "{} hypotheses but {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    if hypotheses.is_empty() {
        return Err(Error::Invalid("BLEU over an empty corpus".into()));
    }
    let mut stats = NgramStats::default();
    for (h, r) in hypotheses.iter().zip(references) {
        stats.merge(&NgramStats::from_sentence(h, r));
    }
    Ok(stats.report(config))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenizeLang {
    /// Whitespace tokens.
    En,
    /// One token per non-whitespace character.
    Zh,
}

pub fn tokenize(text: &str, lang: TokenizeLang, lowercase: bool) -> Vec<String> {
    let text = if lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    match lang {
        TokenizeLang::En => text.split_whitespace().map(str::to_string).collect(),
        TokenizeLang::Zh => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s, TokenizeLang::En, false)
    }

    #[test]
    fn perfect_match() {
        let c = vec![toks("the cat sat on the mat"), toks("a b c d e")];
        let r = bleu4(&c, &c, &BleuConfig::default()).unwrap();
        assert_eq!(r.bleu, 1.0);
        assert_eq!(r.brevity_penalty, 1.0);
    }

    #[test]
    fn zero_overlap() {
        let r = bleu4(&[toks("a b c d")], &[toks("w x y z")], &BleuConfig::default()).unwrap();
        assert_eq!(r.bleu, 0.0);
    }

    #[test]
    fn clipping() {
        let s = NgramStats::from_sentence(&toks("the the the the"), &toks("the cat"));
        assert_eq!(s.matches[0], 1);
        assert_eq!(s.totals[0], 4);
    }

    #[test]
    fn short_hypothesis_has_no_higher_orders() {
        let s = NgramStats::from_sentence(&toks("a b"), &toks("a b c"));
        assert_eq!(s.totals, [2, 1, 0, 0]);
        assert_eq!(s.report(&BleuConfig::default()).bleu, 0.0);
    }

    #[test]
    fn smoothing_lifts_zero_orders() {
        let h = vec![toks("a b c x")];
        let r = vec![toks("a b c d")];
        assert_eq!(bleu4(&h, &r, &BleuConfig::default()).unwrap().bleu, 0.0);
        let smoothed = bleu4(&h, &r, &BleuConfig { smoothing: Some(0.1) }).unwrap();
        assert!(smoothed.bleu > 0.0);
        assert!((smoothed.precisions[3] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(bleu4::<String>(&[], &[], &BleuConfig::default()).is_err());
        assert!(bleu4(&[toks("a")], &[], &BleuConfig::default()).is_err());
    }

    #[test]
    fn zh_character_tokens() {
        assert_eq!(tokenize("几百 万年", TokenizeLang::Zh, false), vec!["几", "百", "万", "年"]);
        assert_eq!(tokenize("The Cat", TokenizeLang::En, true), vec!["the", "cat"]);
    }
}

//! Straightforward reference implementations the library is checked against.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use topicvd::clip::ClipRecord;
use topicvd::corpus::{CorpusManifest, CorpusRecord, Topic};
use topicvd::fusion::{FeatureMatrix, Matrix, ScoreFn};
use topicvd::scoring::{EmbeddingKey, EmbeddingStore};
use topicvd::subtitle::{Language, SubtitleTrack, Timecode};

pub type Grid = Vec<Vec<f64>>;

pub fn text(g: &Grid) -> FeatureMatrix<f64> {
    FeatureMatrix::text(Matrix::from_rows(g).unwrap()).unwrap()
}

pub fn video(g: &Grid) -> FeatureMatrix<f64> {
    FeatureMatrix::video(Matrix::from_rows(g).unwrap()).unwrap()
}

pub fn grid(m: &Matrix<f64>) -> Grid {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

pub fn g_factor(g: ScoreFn, d: usize) -> f64 {
    match g {
        ScoreFn::Identity => 1.0,
        ScoreFn::Scaled => 1.0 / (d as f64).sqrt(),
    }
}

pub fn scores(h: &Grid, a: &Grid, factor: f64) -> Grid {
    let mut s = vec![vec![0.0; a.len()]; h.len()];
    for n in 0..h.len() {
        for l in 0..a.len() {
            let mut dot = 0.0;
            for k in 0..h[0].len() {
                dot += h[n][k] * a[l][k];
            }
            s[n][l] = factor * dot;
        }
    }
    s
}

pub fn selective(h: &Grid, v: &Grid) -> Grid {
    let d = h[0].len();
    let s = scores(h, v, 1.0 / (d as f64).sqrt());
    let mut out = vec![vec![0.0; d]; h.len()];
    for n in 0..h.len() {
        let denom: f64 = s[n].iter().map(|x| x.exp()).sum();
        for l in 0..v.len() {
            let w = s[n][l].exp() / denom;
            for k in 0..d {
                out[n][k] += w * v[l][k];
            }
        }
    }
    out
}

/// Enhanced (text, video) features of bidirectional attention.
pub fn bi(h: &Grid, a: &Grid, factor: f64) -> (Grid, Grid) {
    let (n_len, l_len, d) = (h.len(), a.len(), h[0].len());
    let s = scores(h, a, factor);
    let mut hbar = h.clone();
    let mut abar = a.clone();
    for n in 0..n_len {
        let row: f64 = (0..l_len).map(|l| s[n][l].exp()).sum();
        for l in 0..l_len {
            let col: f64 = (0..n_len).map(|m| s[m][l].exp()).sum();
            let wt = s[n][l].exp() / row;
            let wv = s[n][l].exp() / col;
            for k in 0..d {
                hbar[n][k] += wt * a[l][k];
                abar[l][k] += wv * h[n][k];
            }
        }
    }
    (hbar, abar)
}

pub fn max_diff(a: &Grid, b: &Grid) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len());
            x.iter().zip(y).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

pub struct Instance {
    pub h: Grid,
    pub v: Grid,
    pub g: ScoreFn,
}

fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Grid {
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

/// Small random fusion inputs: 1..=6 tokens, 1..=7 frames, 1..=8 dims.
pub fn instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(1..=6);
            let l = rng.gen_range(1..=7);
            let d = rng.gen_range(1..=8);
            Instance {
                h: random_grid(&mut rng, n, d),
                v: random_grid(&mut rng, l, d),
                g: if i % 2 == 0 { ScoreFn::Identity } else { ScoreFn::Scaled },
            }
        })
        .collect()
}

/// Mean over every (clipped) 8x8 window of the SSIM formula with
/// population statistics computed directly from the pixels.
pub fn ssim(a: &Grid, b: &Grid) -> f64 {
    let (h, w) = (a.len(), a[0].len());
    let (wh, ww) = (8.min(h), 8.min(w));
    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    let mut total = 0.0;
    let mut count = 0.0;
    for y0 in 0..=h - wh {
        for x0 in 0..=w - ww {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for y in y0..y0 + wh {
                for x in x0..x0 + ww {
                    xs.push(a[y][x]);
                    ys.push(b[y][x]);
                }
            }
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let vx = xs.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / n;
            let vy = ys.iter().map(|v| (v - my).powi(2)).sum::<f64>() / n;
            let cov = xs.iter().zip(&ys).map(|(p, q)| (p - mx) * (q - my)).sum::<f64>() / n;
            total += (2.0 * mx * my + c1) * (2.0 * cov + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1.0;
        }
    }
    total / count
}

/// Counts sentences by splitting the newline-joined cue texts after each
/// line-final terminal mark.
pub fn regex_sentence_count(track: &SubtitleTrack, chinese: bool) -> usize {
    let joined: String = track.cues.iter().map(|c| c.text() + "\n").collect();
    let boundary = if chinese {
        Regex::new(r"(?m)[。！？…]$").unwrap()
    } else {
        Regex::new(r"(?m)[.!?…]$").unwrap()
    };
    boundary.split(&joined).filter(|p| !p.trim().is_empty()).count()
}

/// Hand-counted 3-pair BLEU fixture and its score.
///
/// Clipped matches / totals by order:
///   1: 6+3+2 / 6+4+4 = 11/14    2: 5+1+1 / 5+3+3 = 7/11
///   3: 4+0+0 / 4+2+2 = 4/8      4: 3+0+0 / 3+1+1 = 3/5
/// hyp 14 tokens, ref 16 tokens → BP = exp(1 - 16/14)
pub fn bleu_fixture() -> ([(&'static str, &'static str); 3], f64) {
    let pairs = [
        ("the cat sat on the mat", "the cat sat on the mat"),
        ("a b c d", "a b x d e"),
        ("x y x y", "x y z w w"),
    ];
    (pairs, (-1.0f64 / 7.0).exp() * (0.5f64 * 0.5 * 0.6).powf(0.25))
}

pub const DOC: &str = "Doc";

fn record(title: &str, position: u32, text: &str) -> CorpusRecord {
    let start = u64::from(position) * 4000;
    CorpusRecord {
        clip: ClipRecord {
            title: title.into(),
            topic: Topic::History,
            start: Timecode::from_millis(start),
            end: Timecode::from_millis(start + 3000),
            position,
            score: None,
            clip_path: ClipRecord::clip_path_for(title, position),
        },
        source_text: text.into(),
        target_text: "字".into(),
    }
}

/// Pairs of `Doc` with words `w<i>` and the given vectors, plus a
/// three-pair decoy documentary.
pub fn context_fixture(words: &[Vec<u8>], vectors: &[Vec<i8>]) -> (CorpusManifest, EmbeddingStore) {
    let mut records = Vec::new();
    let mut store = EmbeddingStore::new(3);
    for (i, (w, v)) in words.iter().zip(vectors).enumerate() {
        let p = i as u32 + 1;
        let text: Vec<String> = w.iter().map(|x| format!("w{x}")).collect();
        records.push(record(DOC, p, &text.join(" ")));
        let v: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
        store.insert(EmbeddingKey::new(DOC, p, Language::Source), v).unwrap();
    }
    for p in 1..=3 {
        records.push(record("Decoy", p, "w1 w2 w3"));
        store.insert(EmbeddingKey::new("Decoy", p, Language::Source), vec![1.0, 1.0, 1.0]).unwrap();
    }
    (CorpusManifest::new(records).unwrap(), store)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

pub fn jaccard(a: &str, b: &str) -> f64 {
    let sa: BTreeSet<&str> = a.split(' ').filter(|s| !s.is_empty()).collect();
    let sb: BTreeSet<&str> = b.split(' ').filter(|s| !s.is_empty()).collect();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64
}

/// Repeated arg-max over every candidate: highest similarity, then nearest
/// in position, then earliest.
pub fn top_k(sims: &[(u32, f64)], anchor: u32, k: usize) -> Vec<u32> {
    let mut left: Vec<(u32, f64)> = sims.to_vec();
    let mut out = Vec::new();
    while out.len() < k && !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            let (p, s) = left[i];
            let (bp, bs) = left[best];
            let better = s > bs
                || (s == bs && p.abs_diff(anchor) < bp.abs_diff(anchor))
                || (s == bs && p.abs_diff(anchor) == bp.abs_diff(anchor) && p < bp);
            if better {
                best = i;
            }
        }
        out.push(left.remove(best).0);
    }
    out
}

/// Positions of `Doc` that are candidates for `anchor` among `n` pairs.
pub fn candidates(n: u32, anchor: u32, before_only: bool) -> Vec<u32> {
    (1..=n).filter(|&p| p != anchor && (!before_only || p < anchor)).collect()
}

//! Clip manifests, cutter command plans, transcript verification and the
//! heuristic frame-selection baselines.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assemble::SentencePair;
use crate::corpus::Topic;
use crate::error::{Error, Result};
use crate::metrics::{ssim_with, FrameImage, SsimConfig};
use crate::num::Scalar;
use crate::subtitle::Timecode;

/// One video-subtitle pair: the per-pair metadata columns plus the clip path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub title: String,
    pub topic: Topic,
    pub start: Timecode,
    pub end: Timecode,
    pub position: u32,
    pub score: Option<f64>,
    pub clip_path: String,
}

impl ClipRecord {
    pub fn clip_path_for(title: &str, position: u32) -> String {
        format!("{title}/{position}.mp4")
    }

    pub fn duration_ms(&self) -> u64 {
        self.end.millis.saturating_sub(self.start.millis)
    }
}

/// One record per pair, spanning the source sentence's time segment.
/// Records are grouped by documentary in first-appearance order and sorted
/// by position within each documentary.
pub fn build_manifest(pairs: &[SentencePair]) -> Result<Vec<ClipRecord>> {
    let mut seen = HashSet::new();
    let mut order: Vec<&str> = Vec::new();
    for p in pairs {
        if !seen.insert((p.documentary.as_str(), p.position)) {
            return Err(Error::DuplicateRecord {
                documentary: p.documentary.clone(),
                position: p.position,
            });
        }
        if p.source.start >= p.source.end {
            return Err(Error::Invalid(format!(
                "pair ({}, {}) has an empty time segment",
                p.documentary, p.position
            )));
        }
        if !order.contains(&p.documentary.as_str()) {
            order.push(&p.documentary);
        }
    }
    let mut records: Vec<ClipRecord> = pairs
        .iter()
        .map(|p| ClipRecord {
            title: p.documentary.clone(),
            topic: p.topic,
            start: p.source.start,
            end: p.source.end,
            position: p.position,
            score: p.score.map(|s| s.value),
            clip_path: ClipRecord::clip_path_for(&p.documentary, p.position),
        })
        .collect();
    records.sort_by_key(|r| {
        (
            order.iter().position(|t| *t == r.title).unwrap_or(usize::MAX),
            r.position,
        )
    });
    Ok(records)
}

/// Declarative cut directive; the module never runs the cutter itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutDirective {
    pub input: String,
    pub start: Timecode,
    pub end: Timecode,
    pub output: String,
}

impl CutDirective {
    /// Tab-separated `input start end output` line.
    pub fn to_line(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.input, self.start, self.end, self.output)
    }

    /// Argument vector for an `ffmpeg` invocation that performs this cut.
    pub fn ffmpeg_args(&self) -> Vec<String> {
        let dotted = |t: Timecode| t.to_string().replace(',', ".");
        vec![
            "-ss".into(),
            dotted(self.start),
            "-to".into(),
            dotted(self.end),
            "-i".into(),
            self.input.clone(),
            "-c".into(),
            "copy".into(),
            self.output.clone(),
        ]
    }
}

pub fn emit_cut_plan(manifest: &[ClipRecord]) -> Vec<CutDirective> {
    manifest
        .iter()
        .map(|r| CutDirective {
            input: r.title.clone(),
            start: r.start,
            end: r.end,
            output: r.clip_path.clone(),
        })
        .collect()
}

pub fn cut_plan_text(plan: &[CutDirective]) -> String {
    let mut out = String::new();
    for d in plan {
        let _ = writeln!(out, "{}", d.to_line());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub start: Timecode,
    pub end: Timecode,
    pub text: String,
}

/// Parses `start TAB end TAB text` lines.
pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptSegment>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(s), Some(e), Some(t)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(i + 1, "expected `start TAB end TAB text`"));
        };
        let start = s.parse().map_err(|m| Error::parse(i + 1, m))?;
        let end = e.parse().map_err(|m| Error::parse(i + 1, m))?;
        out.push(TranscriptSegment {
            start,
            end,
            text: t.to_string(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verification {
    Verified { distance: f64 },
    Flagged { distance: f64 },
    Unverifiable,
}

impl Verification {
    pub fn needs_review(&self) -> bool {
        !matches!(self, Verification::Verified { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptCheck {
    pub documentary: String,
    pub position: u32,
    #[serde(flatten)]
    pub outcome: Verification,
}

pub const DEFAULT_MISMATCH_THRESHOLD: f64 = 0.3;

/// Lowercases, drops punctuation and collapses whitespace so that subtitle
/// text and recognizer output compare on content only.
pub fn normalize_for_comparison(text: &str) -> String {
    text.chars()
        .filter(|c| !c.is_ascii_punctuation() && !is_wide_punctuation(*c))
        .collect::<String>()
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_wide_punctuation(c: char) -> bool {
    matches!(c, '，' | '。' | '！' | '？' | '、' | '；' | '：' | '“' | '”' | '‘' | '’' | '…' | '—')
}

/// Levenshtein distance over chars divided by the longer length.
pub fn normalized_edit_distance(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()] as f64 / longest as f64
}

/// Compares each pair's source text with the transcript segment that
/// overlaps it most; pairs above `threshold` are flagged for review.
pub fn verify_transcript(
    pairs: &[SentencePair],
    transcript: &[TranscriptSegment],
    threshold: f64,
) -> Vec<TranscriptCheck> {
    pairs
        .iter()
        .map(|p| {
            let best = transcript
                .iter()
                .map(|seg| {
                    let lo = seg.start.max(p.source.start).millis;
                    let hi = seg.end.min(p.source.end).millis;
                    (hi.saturating_sub(lo), seg)
                })
                .filter(|(ov, _)| *ov > 0)
                .fold(None::<(u64, &TranscriptSegment)>, |acc, cur| match acc {
                    Some(a) if a.0 >= cur.0 => Some(a),
                    _ => Some(cur),
                });
            let outcome = match best {
                None => Verification::Unverifiable,
                Some((_, seg)) => {
                    let distance = normalized_edit_distance(
                        &normalize_for_comparison(&p.source.text),
                        &normalize_for_comparison(&seg.text),
                    );
                    if distance > threshold {
                        Verification::Flagged { distance }
                    } else {
                        Verification::Verified { distance }
                    }
                }
            };
            TranscriptCheck {
                documentary: p.documentary.clone(),
                position: p.position,
                outcome,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSelection {
    pub rate_hz: f64,
    pub ssim_threshold: f64,
    pub ssim: SsimConfig,
}

impl Default for FrameSelection {
    fn default() -> Self {
        FrameSelection {
            rate_hz: 1.0,
            ssim_threshold: 0.5,
            ssim: SsimConfig::default(),
        }
    }
}

/// Keeps the first frame of every `1 / rate_hz` slot measured from the
/// first frame's timestamp.
pub fn subsample<T: Clone>(frames: &[FrameImage<T>], rate_hz: f64) -> Vec<&FrameImage<T>> {
    let Some(first) = frames.first() else {
        return Vec::new();
    };
    let origin = first.timestamp.millis;
    let mut last_slot = None;
    frames
        .iter()
        .filter(|f| {
            let elapsed = f.timestamp.millis.saturating_sub(origin) as f64 / 1000.0;
            let slot = (elapsed * rate_hz).floor() as u64;
            if last_slot == Some(slot) {
                false
            } else {
                last_slot = Some(slot);
                true
            }
        })
        .collect()
}

/// Subsamples at `rate_hz`, then drops every frame whose SSIM with the most
/// recently kept frame exceeds the threshold. The first frame is always kept.
pub fn select_frames_heuristic<T: Scalar>(
    frames: &[FrameImage<T>],
    selection: &FrameSelection,
) -> Result<Vec<FrameImage<T>>> {
    if !(0.0..=1.0).contains(&selection.ssim_threshold) {
        return Err(Error::Invalid(format!(
            "SSIM threshold {} outside [0, 1]",
            selection.ssim_threshold
        )));
    }
    if !(selection.rate_hz > 0.0 && selection.rate_hz.is_finite()) {
        return Err(Error::Invalid(format!("frame rate {} must be positive", selection.rate_hz)));
    }
    let threshold = T::lit(selection.ssim_threshold);
    let mut kept: Vec<FrameImage<T>> = Vec::new();
    for frame in subsample(frames, selection.rate_hz) {
        match kept.last() {
            Some(last) if ssim_with(last, frame, &selection.ssim)? > threshold => {}
            _ => kept.push(frame.clone()),
        }
    }
    Ok(kept)
}

/// First, middle (`n / 2`, zero-based) and last frame.
pub fn select_frames_endpoints<T: Clone>(frames: &[FrameImage<T>]) -> Result<[FrameImage<T>; 3]> {
    let n = frames.len();
    if n == 0 {
        return Err(Error::Invalid("no frames to select from".into()));
    }
    Ok([frames[0].clone(), frames[n / 2].clone(), frames[n - 1].clone()])
}

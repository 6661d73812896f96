//! SubRip (SRT) parsing, canonical serialization and markup stripping.
//!
//! Canonical output uses `\n` line endings, a `,` millisecond separator and
//! one blank line after every cue, so `parse_srt(serialize_srt(t)) == t`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Millisecond offset from the start of a video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timecode {
    pub millis: u64,
}

impl Timecode {
    pub const fn from_millis(millis: u64) -> Self {
        Timecode { millis }
    }

    pub fn seconds(self) -> f64 {
        self.millis as f64 / 1000.0
    }
}

impl fmt::Display for Timecode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = self.millis % 1000;
        let total_secs = self.millis / 1000;
        let s = total_secs % 60;
        let m = (total_secs / 60) % 60;
        let h = total_secs / 3600;
        write!(f, "{h:02}:{m:02}:{s:02},{ms:03}")
    }
}

impl FromStr for Timecode {
    type Err = String;

    /// Accepts `H+:MM:SS,mmm` and `H+:MM:SS.mmm`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("malformed timecode `{s}`");
        let (hms, ms) = s.rsplit_once([',', '.']).ok_or_else(bad)?;
        let mut parts = hms.split(':');
        let (h, m, sec) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(h), Some(m), Some(sec), None) => (h, m, sec),
            _ => return Err(bad()),
        };
        let digits = |t: &str, len: Option<usize>| {
            !t.is_empty()
                && t.bytes().all(|b| b.is_ascii_digit())
                && len.map_or(true, |l| t.len() == l)
        };
        if !digits(h, None) || !digits(m, Some(2)) || !digits(sec, Some(2)) || !digits(ms, Some(3))
        {
            return Err(bad());
        }
        let h: u64 = h.parse().map_err(|_| bad())?;
        let m: u64 = m.parse().map_err(|_| bad())?;
        let sec: u64 = sec.parse().map_err(|_| bad())?;
        let ms: u64 = ms.parse().map_err(|_| bad())?;
        if m >= 60 || sec >= 60 {
            return Err(bad());
        }
        let millis = h
            .checked_mul(3_600_000)
            .and_then(|v| v.checked_add(m * 60_000 + sec * 1000 + ms))
            .ok_or_else(bad)?;
        Ok(Timecode { millis })
    }
}

impl Serialize for Timecode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timecode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Which side of the bilingual corpus a piece of text belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Source,
    Target,
    Mixed,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::Source => "source",
            Language::Target => "target",
            Language::Mixed => "mixed",
        }
    }

    /// Tags a block of text lines. The corpus is English source, Chinese target:
    /// lines containing CJK characters are target text, all others source.
    pub fn detect<S: AsRef<str>>(lines: &[S]) -> Language {
        let cjk = lines.iter().filter(|l| contains_cjk(l.as_ref())).count();
        match cjk {
            0 => Language::Source,
            n if n == lines.len() => Language::Target,
            _ => Language::Mixed,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "source" | "src" => Ok(Language::Source),
            "target" | "tgt" => Ok(Language::Target),
            "mixed" => Ok(Language::Mixed),
            other => Err(Error::Invalid(format!("unknown language tag `{other}`"))),
        }
    }
}

/// Han ideographs (CJK unified, extension A/B+, compatibility).
pub fn is_han(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF | 0x20000..=0x2FA1F)
}

pub fn contains_cjk(s: &str) -> bool {
    s.chars().any(is_han)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtitleCue {
    pub index: u32,
    pub start: Timecode,
    pub end: Timecode,
    pub lines: Vec<String>,
    pub language: Language,
}

impl SubtitleCue {
    pub fn new(index: u32, start: u64, end: u64, lines: Vec<String>) -> Self {
        let language = Language::detect(&lines);
        SubtitleCue {
            index,
            start: Timecode::from_millis(start),
            end: Timecode::from_millis(end),
            lines,
            language,
        }
    }

    /// Cue text with lines joined by a single space.
    pub fn text(&self) -> String {
        self.lines.join(" ")
    }

    pub fn duration_ms(&self) -> u64 {
        self.end.millis.saturating_sub(self.start.millis)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SubtitleTrack {
    pub cues: Vec<SubtitleCue>,
    pub source_path: String,
}

impl SubtitleTrack {
    pub fn new(cues: Vec<SubtitleCue>) -> Self {
        SubtitleTrack {
            cues,
            source_path: String::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.cues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cues.is_empty()
    }
}

/// Non-fatal problem found while parsing in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSrt {
    pub track: SubtitleTrack,
    pub warnings: Vec<ParseWarning>,
}

/// Parses an SRT byte stream.
///
/// In strict mode any malformed cue block or start-time regression is an
/// error carrying the offending line number. In lenient mode malformed blocks
/// are skipped and regressions kept, each with a recorded warning.
pub fn parse_srt(raw: &[u8], strict: bool) -> Result<ParsedSrt> {
    let raw = raw.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(raw);
    let text = std::str::from_utf8(raw)?;

    let mut cues: Vec<SubtitleCue> = Vec::new();
    let mut warnings = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();

    let mut flush = |block: &mut Vec<(usize, &str)>| -> Result<()> {
        if block.is_empty() {
            return Ok(());
        }
        let first_line = block[0].0;
        match parse_block(block) {
            Ok(cue) => {
                if let Some(prev) = cues.last() {
                    if cue.start < prev.start {
                        if strict {
                            return Err(Error::StartRegression {
                                index: cue.index,
                                start: cue.start.to_string(),
                                previous: prev.start.to_string(),
                            });
                        }
                        warnings.push(ParseWarning {
                            line: first_line,
                            message: format!(
                                "cue {} starts at {} before previous start {}",
                                cue.index, cue.start, prev.start
                            ),
                        });
                    }
                }
                cues.push(cue);
            }
            Err((line, message)) => {
                if strict {
                    return Err(Error::parse(line, message));
                }
                warnings.push(ParseWarning {
                    line,
                    message: format!("cue skipped: {message}"),
                });
            }
        }
        block.clear();
        Ok(())
    };

    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            flush(&mut block)?;
        } else {
            block.push((i + 1, line));
        }
    }
    flush(&mut block)?;

    Ok(ParsedSrt {
        track: SubtitleTrack::new(cues),
        warnings,
    })
}

pub fn parse_srt_file(path: &Path, strict: bool) -> Result<ParsedSrt> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut parsed = parse_srt(&raw, strict)?;
    parsed.track.source_path = path.display().to_string();
    Ok(parsed)
}

fn parse_block(block: &[(usize, &str)]) -> std::result::Result<SubtitleCue, (usize, String)> {
    let (index_line, index_text) = block[0];
    let index: u32 = index_text
        .trim()
        .parse()
        .ok()
        .filter(|&i| i > 0)
        .ok_or_else(|| (index_line, format!("expected positive cue index, found `{index_text}`")))?;

    let (time_line, time_text) = *block
        .get(1)
        .ok_or_else(|| (index_line, format!("cue {index} has no timecode line")))?;
    let (start, rest) = time_text
        .split_once("-->")
        .ok_or_else(|| (time_line, format!("expected `start --> end`, found `{time_text}`")))?;
    // Trailing positioning hints (`X1:... Y1:...`) after the end time are ignored.
    let end = rest.split_whitespace().next().unwrap_or("");
    let start: Timecode = start.parse().map_err(|e| (time_line, e))?;
    let end: Timecode = end.parse().map_err(|e| (time_line, e))?;
    if start >= end {
        return Err((time_line, format!("cue {index} ends at {end}, not after its start {start}")));
    }

    let lines: Vec<String> = block[2..].iter().map(|(_, l)| l.trim().to_string()).collect();
    if lines.is_empty() {
        return Err((time_line, format!("cue {index} has no text")));
    }
    let language = Language::detect(&lines);
    Ok(SubtitleCue {
        index,
        start,
        end,
        lines,
        language,
    })
}

/// Canonical SRT text for a track.
pub fn serialize_srt(track: &SubtitleTrack) -> Vec<u8> {
    let mut out = String::new();
    for cue in &track.cues {
        out.push_str(&format!("{}\n{} --> {}\n", cue.index, cue.start, cue.end));
        for line in &cue.lines {
            out.push_str(line);
            out.push('\n');
        }
        out.push('\n');
    }
    out.into_bytes()
}

/// Which display markup and one-language-only symbols [`strip_markup`] removes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkupFilter {
    /// Characters deleted wherever they occur.
    pub blacklist: Vec<char>,
    /// Drop leading `-` / `–` speaker-change markers on each line.
    pub strip_speaker_dash: bool,
}

impl Default for MarkupFilter {
    fn default() -> Self {
        MarkupFilter {
            blacklist: vec!['♪', '♫', '♬', '♩', '♭', '♯'],
            strip_speaker_dash: true,
        }
    }
}

impl MarkupFilter {
    pub fn with_blacklist(blacklist: impl IntoIterator<Item = char>) -> Self {
        MarkupFilter {
            blacklist: blacklist.into_iter().collect(),
            ..Default::default()
        }
    }

    /// Cleans one line of text. Runs to a fixpoint so the result is stable
    /// under repeated application (e.g. nested `<<b>i>` tags).
    pub fn clean_line(&self, line: &str) -> String {
        let mut current = line.to_string();
        loop {
            let next = self.clean_once(&current);
            if next == current {
                return next;
            }
            current = next;
        }
    }

    fn clean_once(&self, line: &str) -> String {
        let no_tags = remove_delimited(line, '<', '>');
        let no_codes = remove_delimited(&no_tags, '{', '}');
        let filtered: String = no_codes
            .chars()
            .filter(|c| !self.blacklist.contains(c))
            .collect();
        let mut collapsed = filtered.split_whitespace().collect::<Vec<_>>().join(" ");
        if self.strip_speaker_dash {
            while let Some(rest) = collapsed
                .strip_prefix('-')
                .or_else(|| collapsed.strip_prefix('–'))
            {
                collapsed = rest.trim_start().to_string();
            }
        }
        collapsed
    }
}

/// Removes `open ... close` spans that contain no nested `open`.
fn remove_delimited(s: &str, open: char, close: char) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending = String::new();
    let mut inside = false;
    for c in s.chars() {
        if inside {
            if c == close {
                inside = false;
                pending.clear();
            } else if c == open {
                out.push_str(&pending);
                pending.clear();
                pending.push(c);
            } else {
                pending.push(c);
            }
        } else if c == open {
            inside = true;
            pending.push(c);
        } else {
            out.push(c);
        }
    }
    out.push_str(&pending);
    out
}

/// Returns the cue with markup removed from every line. Lines that become
/// empty are dropped; time fields and index are unchanged.
pub fn strip_markup(cue: &SubtitleCue, filter: &MarkupFilter) -> SubtitleCue {
    let lines: Vec<String> = cue
        .lines
        .iter()
        .map(|l| filter.clean_line(l))
        .filter(|l| !l.is_empty())
        .collect();
    let language = if lines.is_empty() {
        cue.language
    } else {
        Language::detect(&lines)
    };
    SubtitleCue {
        lines,
        language,
        ..cue.clone()
    }
}

/// Strips every cue and drops the ones left without text.
pub fn clean_track(track: &SubtitleTrack, filter: &MarkupFilter) -> (SubtitleTrack, usize) {
    let before = track.cues.len();
    let cues: Vec<SubtitleCue> = track
        .cues
        .iter()
        .map(|c| strip_markup(c, filter))
        .filter(|c| !c.lines.is_empty())
        .collect();
    let dropped = before - cues.len();
    (
        SubtitleTrack {
            cues,
            source_path: track.source_path.clone(),
        },
        dropped,
    )
}

/// Splits a bilingual track into parallel source and target tracks.
///
/// Mixed cues contribute their CJK lines to the target track and the
/// remaining lines to the source track; single-language cues go whole to
/// their side.
pub fn split_mixed(track: &SubtitleTrack) -> (SubtitleTrack, SubtitleTrack) {
    let mut source = Vec::new();
    let mut target = Vec::new();
    for cue in &track.cues {
        let (tgt, src): (Vec<String>, Vec<String>) =
            cue.lines.iter().cloned().partition(|l| contains_cjk(l));
        if !src.is_empty() {
            source.push(SubtitleCue {
                lines: src,
                language: Language::Source,
                ..cue.clone()
            });
        }
        if !tgt.is_empty() {
            target.push(SubtitleCue {
                lines: tgt,
                language: Language::Target,
                ..cue.clone()
            });
        }
    }
    let path = track.source_path.clone();
    (
        SubtitleTrack {
            cues: source,
            source_path: path.clone(),
        },
        SubtitleTrack {
            cues: target,
            source_path: path,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_first_table_row_block() {
        let parsed = parse_srt(b"1\n00:00:02,960 --> 00:00:09,800\nHello\n", true).unwrap();
        assert_eq!(parsed.track.cues.len(), 1);
        let cue = &parsed.track.cues[0];
        assert_eq!(cue.start.millis, 2960);
        assert_eq!(cue.end.millis, 9800);
        assert_eq!(cue.lines, vec!["Hello"]);
        assert_eq!(cue.language, Language::Source);
    }

    #[test]
    fn empty_input_gives_empty_track() {
        let parsed = parse_srt(b"", true).unwrap();
        assert!(parsed.track.is_empty());
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn hour_timecode() {
        let tc: Timecode = "01:21:44,639".parse().unwrap();
        assert_eq!(tc.millis, 4_904_639);
        assert_eq!(tc.to_string(), "01:21:44,639");
    }

    #[test]
    fn dot_separator_accepted_comma_emitted() {
        let tc: Timecode = "00:00:01.500".parse().unwrap();
        assert_eq!(tc.millis, 1500);
        assert_eq!(tc.to_string(), "00:00:01,500");
    }

    #[test]
    fn rejects_out_of_range_fields() {
        assert!("00:60:00,000".parse::<Timecode>().is_err());
        assert!("00:00:60,000".parse::<Timecode>().is_err());
        assert!("00:00:00,1000".parse::<Timecode>().is_err());
        assert!("00:00,000".parse::<Timecode>().is_err());
        assert!("aa:00:00,000".parse::<Timecode>().is_err());
    }

    #[test]
    fn bom_and_crlf_tolerated() {
        let raw = b"\xEF\xBB\xBF1\r\n00:00:01,000 --> 00:00:02,000\r\nHi\r\n\r\n";
        let parsed = parse_srt(raw, true).unwrap();
        assert_eq!(parsed.track.cues[0].lines, vec!["Hi"]);
    }

    #[test]
    fn invalid_utf8_rejected() {
        assert!(matches!(parse_srt(b"1\n\xff\xfe", false), Err(Error::Encoding(_))));
    }

    #[test]
    fn strict_reports_line_of_bad_timecode() {
        let raw = b"1\n00:00:01,000 --> 00:00:02,000\nA\n\n2\n00:00:0x,000 --> 00:00:04,000\nB\n";
        match parse_srt(raw, true) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        let lenient = parse_srt(raw, false).unwrap();
        assert_eq!(lenient.track.cues.len(), 1);
        assert_eq!(lenient.warnings.len(), 1);
        assert_eq!(lenient.warnings[0].line, 6);
    }

    #[test]
    fn regression_is_strict_error_lenient_warning() {
        let raw = b"1\n00:00:05,000 --> 00:00:06,000\nA\n\n2\n00:00:01,000 --> 00:00:02,000\nB\n";
        assert!(matches!(parse_srt(raw, true), Err(Error::StartRegression { index: 2, .. })));
        let lenient = parse_srt(raw, false).unwrap();
        assert_eq!(lenient.track.cues.len(), 2);
        assert_eq!(lenient.warnings.len(), 1);
    }

    #[test]
    fn indices_taken_from_file() {
        let raw = b"7\n00:00:01,000 --> 00:00:02,000\nA\n\n9\n00:00:03,000 --> 00:00:04,000\nB\n";
        let t = parse_srt(raw, true).unwrap().track;
        assert_eq!(t.cues.iter().map(|c| c.index).collect::<Vec<_>>(), vec![7, 9]);
    }

    #[test]
    fn positioning_hints_ignored() {
        let raw = b"1\n00:00:01,000 --> 00:00:02,000 X1:10 X2:20\nA\n";
        let t = parse_srt(raw, true).unwrap().track;
        assert_eq!(t.cues[0].end.millis, 2000);
    }

    #[test]
    fn serialize_single_cue() {
        let track = SubtitleTrack::new(vec![SubtitleCue::new(1, 2960, 9800, vec!["Hello".into()])]);
        let out = String::from_utf8(serialize_srt(&track)).unwrap();
        assert_eq!(out, "1\n00:00:02,960 --> 00:00:09,800\nHello\n\n");
        assert!(serialize_srt(&SubtitleTrack::default()).is_empty());
    }

    #[test]
    fn mixed_cue_detection_and_split() {
        let raw = "1\n00:00:01,000 --> 00:00:02,000\n在几百万年内\nwithin a few million years\n";
        let t = parse_srt(raw.as_bytes(), true).unwrap().track;
        assert_eq!(t.cues[0].language, Language::Mixed);
        let (src, tgt) = split_mixed(&t);
        assert_eq!(src.cues[0].lines, vec!["within a few million years"]);
        assert_eq!(tgt.cues[0].lines, vec!["在几百万年内"]);
        assert_eq!(tgt.cues[0].language, Language::Target);
    }

    #[test]
    fn strip_examples() {
        let f = MarkupFilter::default();
        assert_eq!(f.clean_line("<i>within a few</i> million years"), "within a few million years");
        assert_eq!(f.clean_line("{\\an8}Hello"), "Hello");
        assert_eq!(f.clean_line("already clean"), "already clean");
        assert_eq!(f.clean_line("♪ la la ♪"), "la la");
        assert_eq!(f.clean_line("- Who is it?"), "Who is it?");
        assert_eq!(f.clean_line("  spaced   out  "), "spaced out");
        assert_eq!(f.clean_line("<<b>i>x"), "x");
    }

    #[test]
    fn strip_keeps_times_and_drops_empty_lines() {
        let cue = SubtitleCue::new(3, 100, 200, vec!["<b>Hi</b>".into(), "♪♪".into()]);
        let out = strip_markup(&cue, &MarkupFilter::default());
        assert_eq!(out.lines, vec!["Hi"]);
        assert_eq!((out.index, out.start, out.end), (3, cue.start, cue.end));
    }

    #[test]
    fn clean_track_drops_textless_cues() {
        let t = SubtitleTrack::new(vec![
            SubtitleCue::new(1, 0, 1000, vec!["♪".into()]),
            SubtitleCue::new(2, 1000, 2000, vec!["Hello.".into()]),
        ]);
        let (clean, dropped) = clean_track(&t, &MarkupFilter::default());
        assert_eq!(dropped, 1);
        assert_eq!(clean.cues[0].index, 2);
    }
}

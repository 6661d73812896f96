//! Reassembly of split subtitle cues into sentences and bilingual pairing.

use serde::{Deserialize, Serialize};

use crate::corpus::Topic;
use crate::scoring::QeScore;
use crate::subtitle::{Language, SubtitleTrack, Timecode};

/// Boundary rules for [`assemble_sentences`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyRules {
    pub source_terminals: Vec<char>,
    pub target_terminals: Vec<char>,
    /// A silence longer than this between two cues closes the sentence.
    pub max_gap_ms: u64,
    /// A sentence holds at most this many cues.
    pub max_cues: usize,
}

impl Default for AssemblyRules {
    fn default() -> Self {
        AssemblyRules {
            source_terminals: vec!['.', '!', '?', '…'],
            target_terminals: vec!['。', '！', '？', '…'],
            max_gap_ms: 5000,
            max_cues: 8,
        }
    }
}

/// Closing quotes and brackets that may follow a terminal mark.
const CLOSERS: &[char] = &[
    '"', '\'', '”', '’', ')', ']', '}', '）', '」', '』', '】', '》', '〉',
];

impl AssemblyRules {
    pub fn terminals(&self, language: Language) -> &[char] {
        match language {
            Language::Target => &self.target_terminals,
            _ => &self.source_terminals,
        }
    }

    /// True when `text` ends with a terminal mark, possibly followed by
    /// closing quotes or brackets.
    pub fn ends_sentence(&self, text: &str, language: Language) -> bool {
        let trimmed = text.trim_end().trim_end_matches(CLOSERS);
        trimmed
            .chars()
            .last()
            .is_some_and(|c| self.terminals(language).contains(&c))
    }

    fn joiner(language: Language) -> &'static str {
        match language {
            Language::Target => "",
            _ => " ",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub start: Timecode,
    pub end: Timecode,
    pub member_cues: Vec<u32>,
    pub language: Language,
}

impl Sentence {
    pub fn overlap_ms(&self, other: &Sentence) -> u64 {
        let lo = self.start.max(other.start).millis;
        let hi = self.end.min(other.end).millis;
        hi.saturating_sub(lo)
    }

    pub fn duration_ms(&self) -> u64 {
        self.end.millis.saturating_sub(self.start.millis)
    }
}

/// Groups consecutive cues into sentences.
///
/// A boundary follows a cue when its text ends with a terminal mark, when
/// the silence before the next cue exceeds `max_gap_ms`, or when the
/// sentence already holds `max_cues` cues.
pub fn assemble_sentences(track: &SubtitleTrack, rules: &AssemblyRules) -> Vec<Sentence> {
    let mut sentences = Vec::new();
    let mut open: Option<Sentence> = None;
    let max_cues = rules.max_cues.max(1);

    for (i, cue) in track.cues.iter().enumerate() {
        let text = cue.text();
        let language = cue.language;
        let sentence = open.get_or_insert_with(|| Sentence {
            text: String::new(),
            start: cue.start,
            end: cue.end,
            member_cues: Vec::new(),
            language,
        });
        if !sentence.text.is_empty() && !text.is_empty() {
            sentence.text.push_str(AssemblyRules::joiner(sentence.language));
        }
        sentence.text.push_str(&text);
        sentence.start = sentence.start.min(cue.start);
        sentence.end = sentence.end.max(cue.end);
        sentence.member_cues.push(cue.index);

        let gap_exceeded = track.cues.get(i + 1).map_or(true, |next| {
            next.start.millis.saturating_sub(cue.end.millis) > rules.max_gap_ms
        });
        if rules.ends_sentence(&text, language)
            || gap_exceeded
            || sentence.member_cues.len() >= max_cues
        {
            sentences.extend(open.take());
        }
    }
    sentences.extend(open.take());
    sentences
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePair {
    pub documentary: String,
    pub topic: Topic,
    pub position: u32,
    pub source: Sentence,
    pub target: Sentence,
    #[serde(default)]
    pub score: Option<QeScore>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: Vec<SentencePair>,
    pub unmatched_source: Vec<Sentence>,
    pub unmatched_target: Vec<Sentence>,
}

/// Aligns source and target sentences by temporal overlap.
///
/// Candidate pairs with positive overlap are accepted greedily from the
/// largest overlap down; ties go to the earlier target sentence, then the
/// earlier source sentence. Sentences left without a partner are reported.
/// Pairs are ordered by source start time and numbered 1..K.
pub fn pair_bilingual(
    source: &[Sentence],
    target: &[Sentence],
    documentary: &str,
    topic: Topic,
) -> Pairing {
    let mut candidates: Vec<(u64, usize, usize)> = Vec::new();
    for (i, s) in source.iter().enumerate() {
        for (j, t) in target.iter().enumerate() {
            let ov = s.overlap_ms(t);
            if ov > 0 {
                candidates.push((ov, j, i));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut src_match: Vec<Option<usize>> = vec![None; source.len()];
    let mut tgt_used = vec![false; target.len()];
    for (_, j, i) in candidates {
        if src_match[i].is_none() && !tgt_used[j] {
            src_match[i] = Some(j);
            tgt_used[j] = true;
        }
    }

    let mut matched: Vec<(usize, usize)> = src_match
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.map(|j| (i, j)))
        .collect();
    matched.sort_by_key(|&(i, _)| (source[i].start, i));

    let pairs = matched
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| SentencePair {
            documentary: documentary.to_string(),
            topic,
            position: k as u32 + 1,
            source: source[i].clone(),
            target: target[j].clone(),
            score: None,
        })
        .collect();
    Pairing {
        pairs,
        unmatched_source: source
            .iter()
            .zip(&src_match)
            .filter(|(_, m)| m.is_none())
            .map(|(s, _)| s.clone())
            .collect(),
        unmatched_target: target
            .iter()
            .zip(&tgt_used)
            .filter(|(_, used)| !**used)
            .map(|(t, _)| t.clone())
            .collect(),
    }
}

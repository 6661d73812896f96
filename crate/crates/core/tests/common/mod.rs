#![allow(dead_code)]

pub mod oracle;

use proptest::prelude::*;

use topicvd::corpus::{synthetic_corpus, CorpusManifest, Count, SplitSpec, Topic, TopicShape};
use topicvd::subtitle::{SubtitleCue, SubtitleTrack, Timecode};

pub const TITLE: &str = "An Honest Liar.mp4";

/// (start, end, position, score) of the four published rows.
pub const LIAR_ROWS: [(&str, &str, u32, f64); 4] = [
    ("00:00:02,960", "00:00:09,800", 1, 92.93),
    ("00:00:12,040", "00:00:15,040", 2, 92.75),
    ("01:21:44,639", "01:21:47,879", 872, 87.01),
    ("01:21:47,879", "01:21:49,719", 873, 83.55),
];

pub fn millis(h: u64, m: u64, s: u64, ms: u64) -> u64 {
    ((h * 60 + m) * 60 + s) * 1000 + ms
}

/// Cue times of an 873-sentence documentary whose first two and last two
/// sentences sit at the published timestamps.
pub fn liar_intervals() -> Vec<(u64, u64)> {
    let mut out = vec![
        (millis(0, 0, 2, 960), millis(0, 0, 9, 800)),
        (millis(0, 0, 12, 40), millis(0, 0, 15, 40)),
    ];
    for i in 0..869u64 {
        let start = 20_000 + i * 5_000;
        out.push((start, start + 3_000));
    }
    out.push((millis(1, 21, 44, 639), millis(1, 21, 47, 879)));
    out.push((millis(1, 21, 47, 879), millis(1, 21, 49, 719)));
    out
}

fn srt(intervals: &[(u64, u64)], text: impl Fn(usize) -> String) -> String {
    let mut out = String::new();
    for (i, &(s, e)) in intervals.iter().enumerate() {
        out.push_str(&format!(
            "{}\r\n{} --> {}\r\n{}\r\n\r\n",
            i + 1,
            Timecode::from_millis(s),
            Timecode::from_millis(e),
            text(i)
        ));
    }
    out
}

/// Source SRT, target SRT and a vector file for the sample documentary.
/// The vectors of each published row have cosine `score / 100`.
pub fn liar_files() -> (String, String, String) {
    let intervals = liar_intervals();
    let src = srt(&intervals, |i| format!("<i>Sentence number {}.</i>", i + 1));
    let tgt = srt(&intervals, |i| format!("第{}句。", i + 1));
    let mut vectors = String::from("dim=2\n");
    for p in 1..=intervals.len() as u32 {
        let cos = LIAR_ROWS
            .iter()
            .find(|r| r.2 == p)
            .map_or(0.9, |r| r.3 / 100.0);
        let sin = (1.0f64 - cos * cos).sqrt();
        vectors.push_str(&format!("{TITLE}\t{p}\tsource\t1 0\n"));
        vectors.push_str(&format!("{TITLE}\t{p}\ttarget\t{cos:.17} {sin:.17}\n"));
    }
    (src, tgt, vectors)
}

fn count(pairs: usize, documentaries: usize) -> Count {
    Count { pairs, documentaries }
}

/// Per-topic (train, valid, test) pair/documentary counts of the published split table.
pub fn topic_split_shape() -> Vec<TopicShape> {
    let rows = [
        (Topic::Economy, (5080, 7), (1483, 1), (1904, 1)),
        (Topic::Food, (1574, 6), (705, 1), (508, 2)),
        (Topic::History, (17542, 42), (1034, 1), (1047, 2)),
        (Topic::Figure, (24748, 25), (1446, 2), (1307, 2)),
        (Topic::Military, (2162, 3), (1036, 4), (1138, 1)),
        (Topic::Nature, (26015, 90), (1474, 5), (1482, 8)),
        (Topic::Social, (11415, 13), (1486, 2), (1033, 1)),
        (Topic::Technology, (13966, 33), (1765, 2), (1580, 2)),
    ];
    rows.iter()
        .map(|&(topic, tr, va, te)| TopicShape {
            topic,
            train: count(tr.0, tr.1),
            valid: count(va.0, va.1),
            test: count(te.0, te.1),
        })
        .collect()
}

/// (label, train, valid, test, total) cells as published.
pub const TOPIC_SPLIT_CELLS: [(&str, &str, &str, &str, &str); 9] = [
    ("Economy", "5,080 / 7", "1,483 / 1", "1,904 / 1", "8,467 / 9"),
    ("Food", "1,574 / 6", "705 / 1", "508 / 2", "2,787 / 9"),
    ("History", "17,542 / 42", "1,034 / 1", "1,047 / 2", "19,623 / 45"),
    ("Figure", "24,748 / 25", "1,446 / 2", "1,307 / 2", "27,501 / 29"),
    ("Military", "2,162 / 3", "1,036 / 4", "1,138 / 1", "4,336 / 8"),
    ("Nature", "26,015 / 90", "1,474 / 5", "1,482 / 8", "28,971 / 103"),
    ("Social", "11,415 / 13", "1,486 / 2", "1,033 / 1", "13,934 / 16"),
    ("Technology", "13,966 / 33", "1,765 / 2", "1,580 / 2", "17,311 / 37"),
    ("Total", "102,502 / 219", "10,429 / 18", "9,999 / 19", "122,930 / 256"),
];

pub fn topic_split_corpus() -> (CorpusManifest, SplitSpec) {
    synthetic_corpus(&topic_split_shape()).unwrap()
}

/// The augmentation corpus: 31 Nature documentaries with 6,433 pairs and
/// 10 Technology documentaries with 2,688 pairs, titled apart from the base.
pub fn augmentation_corpus() -> CorpusManifest {
    let shape = [
        TopicShape {
            topic: Topic::Nature,
            train: count(6433, 31),
            valid: Count::default(),
            test: Count::default(),
        },
        TopicShape {
            topic: Topic::Technology,
            train: count(2688, 10),
            valid: Count::default(),
            test: Count::default(),
        },
    ];
    let (m, _) = synthetic_corpus(&shape).unwrap();
    let records = m
        .records()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.clip.title = format!("extra {}", r.clip.title);
            r.clip.clip_path = format!("{}/{}.mp4", r.clip.title, r.clip.position);
            r
        })
        .collect();
    CorpusManifest::new(records).unwrap()
}

pub fn line_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z0-9][A-Za-z0-9,.!?' ]{0,30}[A-Za-z0-9.!?]",
        "[一-龥]{1,12}[。！？]?",
        "[A-Za-z]{1,8}",
    ]
    .prop_map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
    .prop_filter("non-empty", |s| !s.is_empty())
}

/// Tracks with non-decreasing starts, positive durations and 1..=3 lines per cue.
pub fn track_strategy(max_cues: usize) -> impl Strategy<Value = SubtitleTrack> {
    prop::collection::vec(
        (0u64..20_000, 1u64..10_000, prop::collection::vec(line_strategy(), 1..=3)),
        0..=max_cues,
    )
    .prop_map(|specs| {
        let mut start = 0;
        let cues = specs
            .into_iter()
            .enumerate()
            .map(|(i, (gap, dur, lines))| {
                start += gap;
                SubtitleCue::new(i as u32 + 1, start, start + dur, lines)
            })
            .collect();
        SubtitleTrack::new(cues)
    })
}

/// Single-language tracks whose sentence boundaries come only from
/// terminal punctuation: cues are contiguous and never more than seven in
/// a row lack a terminal mark.
pub fn punctuated_track_strategy(chinese: bool) -> impl Strategy<Value = SubtitleTrack> {
    let words = if chinese { "[一-龥]{1,6}" } else { "[a-z]{1,6}( [a-z]{1,6}){0,3}" };
    let marks: &'static [&'static str] = if chinese {
        &["。", "！", "？", "…", "", ""]
    } else {
        &[".", "!", "?", "…", "", "", ",", ";"]
    };
    prop::collection::vec((words, prop::sample::select(marks), 200u64..4_000), 1..40).prop_map(
        move |specs| {
            let terminal = if chinese { "。" } else { "." };
            let mut start = 0;
            let mut run = 0;
            let cues = specs
                .into_iter()
                .enumerate()
                .map(|(i, (w, m, dur))| {
                    let mut text = format!("{w}{m}");
                    let ends = [".", "!", "?", "…", "。", "！", "？"].iter().any(|t| text.ends_with(t));
                    if !ends && run == 7 {
                        text.push_str(terminal);
                    }
                    run = if ends || run == 7 { 0 } else { run + 1 };
                    let cue = SubtitleCue::new(i as u32 + 1, start, start + dur, vec![text]);
                    start += dur;
                    cue
                })
                .collect();
            SubtitleTrack::new(cues)
        },
    )
}

mod common;

use proptest::prelude::*;
use topicvd::assemble::{assemble_sentences, pair_bilingual, AssemblyRules, Sentence};
use topicvd::corpus::Topic;
use topicvd::subtitle::{Language, SubtitleTrack, Timecode};

fn check_partition(track: &SubtitleTrack, sentences: &[Sentence], rules: &AssemblyRules) -> Result<(), TestCaseError> {
    let members: Vec<u32> = sentences.iter().flat_map(|s| s.member_cues.clone()).collect();
    let indices: Vec<u32> = track.cues.iter().map(|c| c.index).collect();
    prop_assert_eq!(members, indices);
    let mut next = 0;
    for s in sentences {
        prop_assert!(!s.member_cues.is_empty());
        prop_assert!(s.member_cues.len() <= rules.max_cues);
        let cues = &track.cues[next..next + s.member_cues.len()];
        next += cues.len();
        let start = cues.iter().map(|c| c.start).min().unwrap();
        let end = cues.iter().map(|c| c.end).max().unwrap();
        prop_assert_eq!((s.start, s.end), (start, end));
        prop_assert!(s.start < s.end);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn assembly_partitions_cues(track in common::track_strategy(30), max_cues in 1usize..10, gap in 0u64..8000) {
        let rules = AssemblyRules { max_cues, max_gap_ms: gap, ..Default::default() };
        let sentences = assemble_sentences(&track, &rules);
        check_partition(&track, &sentences, &rules)?;
    }

    #[test]
    fn punctuation_boundaries_match_regex_split(
        (chinese, track) in any::<bool>().prop_flat_map(|c| (Just(c), common::punctuated_track_strategy(c)))
    ) {
        let sentences = assemble_sentences(&track, &AssemblyRules::default());
        prop_assert_eq!(sentences.len(), common::oracle::regex_sentence_count(&track, chinese));
        for s in &sentences {
            prop_assert!(!s.text.contains('\n'));
        }
    }

    #[test]
    fn pairing_accounts_for_every_sentence(
        src in common::track_strategy(15),
        tgt in common::track_strategy(15),
    ) {
        let rules = AssemblyRules::default();
        let s = assemble_sentences(&src, &rules);
        let t = assemble_sentences(&tgt, &rules);
        let pairing = pair_bilingual(&s, &t, "doc", Topic::Nature);
        prop_assert_eq!(pairing.pairs.len() + pairing.unmatched_source.len(), s.len());
        prop_assert_eq!(pairing.pairs.len() + pairing.unmatched_target.len(), t.len());
        for (k, p) in pairing.pairs.iter().enumerate() {
            prop_assert_eq!(p.position as usize, k + 1);
            prop_assert!(p.source.overlap_ms(&p.target) > 0);
            prop_assert!(p.score.is_none());
        }
        for w in pairing.pairs.windows(2) {
            prop_assert!(w[0].source.start <= w[1].source.start);
        }
    }
}

fn sentence(start: u64, end: u64, language: Language) -> Sentence {
    Sentence {
        text: format!("{start}"),
        start: Timecode::from_millis(start),
        end: Timecode::from_millis(end),
        member_cues: vec![1],
        language,
    }
}

/// Maximum total overlap over all one-to-one matchings, by DP over subsets
/// of target sentences. Returns the matching as (source, target) indices.
fn best_matching(src: &[Sentence], tgt: &[Sentence]) -> Vec<(usize, usize)> {
    let m = tgt.len();
    let full = 1usize << m;
    // best[i][mask]: best total using sources i.. with targets in mask used
    let mut best = vec![vec![0u64; full]; src.len() + 1];
    let mut choice = vec![vec![None; full]; src.len() + 1];
    for i in (0..src.len()).rev() {
        for mask in 0..full {
            let mut value = best[i + 1][mask];
            let mut pick = None;
            for j in 0..m {
                if mask & (1 << j) != 0 {
                    continue;
                }
                let ov = src[i].overlap_ms(&tgt[j]);
                if ov == 0 {
                    continue;
                }
                let v = ov + best[i + 1][mask | (1 << j)];
                if v > value {
                    value = v;
                    pick = Some(j);
                }
            }
            best[i][mask] = value;
            choice[i][mask] = pick;
        }
    }
    let mut out = Vec::new();
    let mut mask = 0;
    for i in 0..src.len() {
        if let Some(j) = choice[i][mask] {
            out.push((i, j));
            mask |= 1 << j;
        }
    }
    out
}

proptest! {
    #[test]
    fn jittered_pairing_matches_exhaustive_optimum(
        durations in prop::collection::vec(500u64..5000, 1..11),
        gaps in prop::collection::vec(0u64..3000, 11),
    ) {
        let mut src = Vec::new();
        let mut at = 1000;
        for (d, g) in durations.iter().zip(&gaps) {
            at += g;
            src.push(sentence(at, at + d, Language::Source));
            at += d;
        }
        let tgt: Vec<Sentence> = src
            .iter()
            .map(|s| sentence(s.start.millis + 200, s.end.millis + 200, Language::Target))
            .collect();
        let oracle = best_matching(&src, &tgt);
        let pairing = pair_bilingual(&src, &tgt, "doc", Topic::Food);
        let got: Vec<(u64, u64)> = pairing.pairs.iter().map(|p| (p.source.start.millis, p.target.start.millis)).collect();
        let want: Vec<(u64, u64)> = oracle.iter().map(|&(i, j)| (src[i].start.millis, tgt[j].start.millis)).collect();
        prop_assert_eq!(got, want);
        prop_assert!(pairing.unmatched_source.is_empty() && pairing.unmatched_target.is_empty());
    }
}

#[test]
fn regex_oracle_on_fixed_track() {
    use topicvd::subtitle::SubtitleCue;
    let cues = ["Hello", "world.", "How are", "you?", "Fine"]
        .iter()
        .enumerate()
        .map(|(i, t)| SubtitleCue::new(i as u32 + 1, i as u64 * 1000, i as u64 * 1000 + 900, vec![t.to_string()]))
        .collect();
    let track = SubtitleTrack::new(cues);
    let sentences = assemble_sentences(&track, &AssemblyRules::default());
    assert_eq!(common::oracle::regex_sentence_count(&track, false), 3);
    let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
    assert_eq!(texts, vec!["Hello world.", "How are you?", "Fine"]);
}

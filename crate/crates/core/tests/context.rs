mod common;

use proptest::prelude::*;

use common::oracle::{self, context_fixture as fixture, DOC};
use topicvd::context::{lexical_similarity, retrieve_all, retrieve_context, ContextQuery, Similarity};
use topicvd::subtitle::Language;

fn fixture_strategy() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<Vec<i8>>)> {
    (
        prop::collection::vec(prop::collection::vec(0u8..8, 1..5), 20),
        prop::collection::vec(
            prop::collection::vec(-2i8..3, 3).prop_filter("nonzero", |v| v.iter().any(|&x| x != 0)),
            20,
        ),
    )
}

proptest! {
    #[test]
    fn retrieval_matches_exhaustive_scan(
        (words, vectors) in fixture_strategy(),
        anchor in 1u32..=20,
        before_only in any::<bool>(),
    ) {
        let (manifest, store) = fixture(&words, &vectors);
        let candidates = oracle::candidates(20, anchor, before_only);
        let vec_of = |p: u32| store.get(DOC, p, Language::Source).unwrap().to_vec();
        let text_of = |p: u32| manifest.find(DOC, p).unwrap().source_text.clone();
        for k in [1usize, 3, 10] {
            let query = ContextQuery { k, before_only };

            let emb: Vec<(u32, f64)> = candidates.iter().map(|&p| (p, oracle::cosine(&vec_of(anchor), &vec_of(p)))).collect();
            let got = retrieve_context(&manifest, DOC, anchor, query, Similarity::Embedding(&store)).unwrap();
            let got_pos: Vec<u32> = got.neighbors.iter().map(|n| n.position).collect();
            prop_assert_eq!(&got_pos, &oracle::top_k(&emb, anchor, k));
            prop_assert_eq!(got_pos.len(), k.min(candidates.len()));

            let lex: Vec<(u32, f64)> = candidates.iter().map(|&p| (p, oracle::jaccard(&text_of(anchor), &text_of(p)))).collect();
            let got = retrieve_context(&manifest, DOC, anchor, query, Similarity::Lexical).unwrap();
            let got_pos: Vec<u32> = got.neighbors.iter().map(|n| n.position).collect();
            prop_assert_eq!(got_pos, oracle::top_k(&lex, anchor, k));
            for n in &got.neighbors {
                prop_assert!((n.similarity - oracle::jaccard(&text_of(anchor), &text_of(n.position))).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn larger_k_extends_smaller_k((words, vectors) in fixture_strategy(), anchor in 1u32..=20) {
        let (manifest, store) = fixture(&words, &vectors);
        let run = |k| {
            retrieve_context(&manifest, DOC, anchor, ContextQuery { k, before_only: false }, Similarity::Embedding(&store))
                .unwrap()
                .neighbors
        };
        let ten = run(10);
        for k in [1, 3] {
            prop_assert_eq!(&run(k)[..], &ten[..k]);
        }
        prop_assert!(ten.windows(2).all(|w| w[0].similarity >= w[1].similarity));
    }

    #[test]
    fn batch_retrieval_equals_per_anchor((words, vectors) in fixture_strategy(), k in 0usize..12, before_only in any::<bool>()) {
        let (manifest, store) = fixture(&words, &vectors);
        let query = ContextQuery { k, before_only };
        for sim in [Similarity::Lexical, Similarity::Embedding(&store)] {
            let all = retrieve_all(&manifest, query, sim).unwrap();
            prop_assert_eq!(all.len(), manifest.len());
            for (set, r) in all.iter().zip(manifest.records()) {
                prop_assert_eq!(set, &retrieve_context(&manifest, r.title(), r.position(), query, sim).unwrap());
            }
        }
    }
}

#[test]
fn retrieval_stays_within_documentary() {
    let words: Vec<Vec<u8>> = (0..20).map(|i| vec![i as u8 % 4]).collect();
    let vectors: Vec<Vec<i8>> = (0..20).map(|_| vec![1, 1, 1]).collect();
    let (manifest, store) = fixture(&words, &vectors);
    let set = retrieve_context(&manifest, DOC, 5, ContextQuery { k: 25, before_only: false }, Similarity::Embedding(&store)).unwrap();
    assert_eq!(set.neighbors.len(), 19);
    // all cosines tie at 1, so proximity orders them
    let first: Vec<u32> = set.neighbors.iter().take(5).map(|n| n.position).collect();
    assert_eq!(first, vec![4, 6, 3, 7, 2]);
    let none = retrieve_context(&manifest, DOC, 1, ContextQuery { k: 3, before_only: true }, Similarity::Lexical).unwrap();
    assert!(none.neighbors.is_empty());
    assert!(retrieve_context(&manifest, DOC, 21, ContextQuery { k: 1, before_only: false }, Similarity::Lexical).is_err());
}

#[test]
fn lexical_similarity_treats_han_characters_as_tokens() {
    assert_eq!(lexical_similarity("Hello, world!", "hello world"), 1.0);
    assert!((lexical_similarity("我爱你", "我爱他") - 0.5).abs() < 1e-12);
    assert_eq!(lexical_similarity("", ""), 1.0);
    assert_eq!(lexical_similarity("a", ""), 0.0);
}

use proptest::prelude::*;
use regex::Regex;
use soundweave::corpus::{
    check_disjoint, parse_book, parse_embeddings, parse_srt, write_srt, Cue, DEFAULT_CHAPTER_MARKER,
    EmbeddingBundle, SubtitleTrack,
};

const WORDS: &[&str] = &[
    "the", "owl", "Harry", "said", "Mr.", "Dumbledore", "door!", "snow.", "J.", "why?", "\"Stop.\"", "(quietly)",
    "tea,", "it.\"", "Hagrid", "no.", "Then", "and", "e.g.", "Run!",
];

fn paragraph_line() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..12).prop_map(|w| w.join(" "))
}

fn paragraph() -> impl Strategy<Value = String> {
    prop::collection::vec(paragraph_line(), 1..3).prop_map(|lines| lines.join("\n"))
}

fn raw_book() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::collection::vec(paragraph(), 1..5), 1..4).prop_map(|chapters| {
        let mut out = String::from("Front matter that is ignored.\n\n");
        for (i, paras) in chapters.iter().enumerate() {
            out.push_str(&format!("CHAPTER {}\n\n", i + 1));
            for p in paras {
                out.push_str(p);
                out.push_str("\n\n\n");
            }
        }
        out
    })
}

fn marker() -> Regex {
    Regex::new(DEFAULT_CHAPTER_MARKER).unwrap()
}

proptest! {
    #[test]
    fn book_text_round_trip(raw in raw_book()) {
        let book = parse_book(&raw, &marker()).unwrap();
        let again = parse_book(&book.to_text(), &marker()).unwrap();
        prop_assert_eq!(&again, &book);
        for p in book.chapters.iter().flat_map(|c| &c.paragraphs) {
            let words: usize = p.sentences.iter().map(|s| s.split_whitespace().count()).sum();
            prop_assert_eq!(p.word_count, words);
        }
    }

    #[test]
    fn embeddings_round_trip(
        rows in prop::collection::vec(prop::collection::vec(-10.0f32..10.0, 4), 1..20),
    ) {
        let ids: Vec<String> = (0..rows.len()).map(|i| format!("ch:0:par:{i}")).collect();
        let bundle = EmbeddingBundle::from_vectors(ids, 4, rows).unwrap();
        let again = parse_embeddings(&bundle.manifest_text(), &bundle.blob()).unwrap();
        prop_assert_eq!(&again, &bundle);
        for id in bundle.ids() {
            if !bundle.is_zero(id) {
                let v = bundle.get(id).unwrap();
                let norm: f32 = v.iter().map(|x| x * x).sum::<f32>().sqrt();
                prop_assert!((norm - 1.0).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn subtitles_round_trip(
        cues in prop::collection::vec((0u64..5000, 1u64..4000, paragraph_line()), 1..15),
    ) {
        let mut t = 0;
        let track = SubtitleTrack {
            cues: cues
                .into_iter()
                .map(|(gap, len, text)| {
                    let start = t + gap;
                    t = start + len;
                    Cue { start_ms: start, end_ms: start + len, text }
                })
                .collect(),
        };
        let (parsed, warnings) = parse_srt(&write_srt(&track)).unwrap();
        prop_assert!(warnings.is_empty());
        let (again, _) = parse_srt(&write_srt(&parsed)).unwrap();
        prop_assert_eq!(again, parsed);
    }
}

#[test]
fn shared_ids_across_bundles_are_rejected() {
    let a = EmbeddingBundle::from_vectors(vec!["x".into()], 2, vec![vec![1.0, 0.0]]).unwrap();
    let b = EmbeddingBundle::from_vectors(vec!["x".into()], 2, vec![vec![0.0, 1.0]]).unwrap();
    let c = EmbeddingBundle::from_vectors(vec!["y".into()], 2, vec![vec![0.0, 1.0]]).unwrap();
    assert!(check_disjoint(&[&a, &c]).is_ok());
    assert!(check_disjoint(&[&a, &b]).is_err());
}

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use soundweave::align::{CoarseAlignment, DialogueMatch};
use soundweave::corpus::{sentence_key, EmbeddingBundle, EmotionScoreTable, EmotionScores, Shot, ShotTable};
use soundweave::fingerprint::{TrackLog, TrackLogEntry};
use soundweave::musicseg::{Mode, MusicSegment};
use soundweave::refine::{match_segment_scenes, EvidenceKind, RefineParams, SentenceScore};
use soundweave::scenes::Scene;
use soundweave::textseg::{ChapterSegment, Emotion};
use soundweave::weave::{check_manifest, emotion_retrieve, weave_all, Provenance};

fn segment(chapter: usize, index: usize, first: usize, last: usize) -> ChapterSegment {
    ChapterSegment {
        chapter_index: chapter,
        segment_index: index,
        first_paragraph: first,
        last_paragraph: last,
        word_count: 120,
        emotion: None,
        matched_scenes: BTreeSet::new(),
    }
}

fn unit(v: &[f32]) -> Vec<f32> {
    let n = v.iter().map(|x| x * x).sum::<f32>().sqrt().max(1e-6);
    v.iter().map(|x| x / n).collect()
}

/// Two chapters of four paragraphs (one sentence each), six scenes of two
/// shots: scenes 0-2 belong to chapter 0, 3-5 to chapter 1.
#[derive(Debug)]
struct World {
    sentences: EmbeddingBundle,
    scores: Vec<SentenceScore>,
    shots: ShotTable,
    scenes: Vec<Scene>,
    coarse: CoarseAlignment,
}

fn world(sentence_vecs: Vec<Vec<f32>>, frame_vecs: Vec<Vec<f32>>, dialogue: Vec<(usize, usize, u32)>) -> World {
    let mut ids = Vec::new();
    let mut scores = Vec::new();
    for c in 0..2 {
        for p in 0..4 {
            ids.push(sentence_key(c, p, 0));
            scores.push(SentenceScore {
                chapter: c,
                paragraph: p,
                sentence: 0,
                segment: usize::from(p >= 2),
                tfidf: (p + 1) as f64,
                concreteness: 4.0,
                kept: true,
            });
        }
    }
    let sentences = EmbeddingBundle::from_vectors(ids, 3, sentence_vecs).unwrap();
    let shots = ShotTable {
        shots: frame_vecs
            .into_iter()
            .enumerate()
            .map(|(i, f)| Shot {
                shot_id: i as u32,
                start_ms: i as u64 * 1000,
                end_ms: i as u64 * 1000 + 1000,
                frame_embeddings: vec![unit(&f)],
            })
            .collect(),
    };
    let scenes = (0..6)
        .map(|s| Scene {
            scene_id: s as u32,
            first_shot: 2 * s,
            last_shot: 2 * s + 1,
            start_ms: 2000 * s as u64,
            end_ms: 2000 * s as u64 + 2000,
            character_histogram: BTreeMap::new(),
            dialogues: vec![],
        })
        .collect();
    let coarse = CoarseAlignment {
        scene_to_chapter: vec![0, 0, 0, 1, 1, 1],
        dialogue_matches: dialogue
            .into_iter()
            .map(|(chapter, paragraph, scene_id)| DialogueMatch {
                chapter,
                paragraph,
                sentence: 0,
                scene_id,
                cue_time_ms: 2000 * u64::from(scene_id) + 500,
                lcs_score: 0.9,
            })
            .collect(),
        low_similarity: vec![],
    };
    World {
        sentences,
        scores,
        shots,
        scenes,
        coarse,
    }
}

fn world_strategy() -> impl Strategy<Value = World> {
    let vec3 = prop::collection::vec(-1.0f32..1.0, 3)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f32>() > 1e-3);
    (
        prop::collection::vec(vec3.clone(), 8),
        prop::collection::vec(vec3, 12),
        prop::collection::vec((0usize..2, 0usize..4, 0u32..3), 0..4),
    )
        .prop_map(|(s, f, d)| {
            // keep dialogue inside the coarse chapter of its scene
            let d = d.into_iter().map(|(c, p, s)| (c, p, s + 3 * c as u32)).collect();
            world(s, f, d)
        })
}

fn matched(w: &World, seg: &ChapterSegment, params: &RefineParams) -> BTreeSet<u32> {
    match_segment_scenes(seg, &w.scores, &w.sentences, &w.shots, &w.scenes, &w.coarse, params)
        .unwrap()
        .into_iter()
        .map(|m| m.scene_id)
        .collect()
}

proptest! {
    #[test]
    fn raising_theta_never_adds_scenes(w in world_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for seg in [segment(0, 0, 0, 1), segment(0, 1, 2, 3), segment(1, 0, 0, 3)] {
            let low = matched(&w, &seg, &RefineParams { theta: lo, ..RefineParams::default() });
            let high = matched(&w, &seg, &RefineParams { theta: hi, ..RefineParams::default() });
            prop_assert!(high.is_subset(&low));
        }
    }

    #[test]
    fn matches_stay_in_the_coarse_chapter(w in world_strategy(), theta in -1.0f64..0.5) {
        for seg in [segment(0, 0, 0, 3), segment(1, 0, 0, 3)] {
            let allowed: BTreeSet<u32> = w.coarse.scenes_of(seg.chapter_index).into_iter().collect();
            let got = matched(&w, &seg, &RefineParams { theta, ..RefineParams::default() });
            prop_assert!(got.is_subset(&allowed));
        }
    }

    #[test]
    fn zero_kept_sentences_means_dialogue_only(w in world_strategy()) {
        let params = RefineParams { top_k: 0, theta: -1.0, ..RefineParams::default() };
        for seg in [segment(0, 0, 0, 1), segment(1, 0, 0, 3)] {
            let got = match_segment_scenes(&seg, &w.scores, &w.sentences, &w.shots, &w.scenes, &w.coarse, &params)
                .unwrap();
            let expected: BTreeSet<(u32, u64)> = w
                .coarse
                .dialogue_matches
                .iter()
                .filter(|m| m.chapter == seg.chapter_index && seg.contains(m.paragraph))
                .map(|m| (m.scene_id, m.cue_time_ms))
                .collect();
            let actual: BTreeSet<(u32, u64)> = got
                .iter()
                .flat_map(|m| m.evidence.iter().map(move |e| (m.scene_id, e.movie_ms)))
                .collect();
            prop_assert!(got.iter().flat_map(|m| &m.evidence).all(|e| e.kind == EvidenceKind::Dialogue));
            prop_assert_eq!(actual, expected);
        }
    }
}

// ---------------------------------------------------------------- weave

fn music(track: u32, index: usize, mode: Option<Mode>) -> MusicSegment {
    MusicSegment {
        track_id: track,
        segment_index: index,
        start_s: 20.0 * index as f64,
        end_s: 20.0 * index as f64 + 20.0,
        mean_keystrength: vec![0.0; 24],
        mode,
    }
}

#[test]
fn retrieval_is_uniform_over_compatible_excerpts() {
    let pool = vec![
        music(1, 0, Some(Mode::Major)),
        music(1, 1, Some(Mode::Minor)),
        music(2, 0, Some(Mode::Major)),
        music(2, 1, None),
        music(3, 0, Some(Mode::Major)),
        music(3, 1, Some(Mode::Minor)),
    ];
    let seg = segment(0, 0, 0, 3);
    let mut counts: BTreeMap<(u32, usize), u32> = BTreeMap::new();
    for seed in 0..1000 {
        let e = emotion_retrieve(&seg, Emotion::Positive, &pool, seed, 3000).unwrap();
        *counts.entry((e.track_id, e.music_segment)).or_default() += 1;
    }
    assert_eq!(counts.len(), 3, "{counts:?}");
    for (key, n) in &counts {
        assert_eq!(key.1, 0, "only major excerpts are compatible");
        assert!((283..=383).contains(n), "{key:?} chosen {n} times");
    }
}

fn emotion_table(labels: &[(usize, usize, Emotion)]) -> EmotionScoreTable {
    EmotionScoreTable {
        rows: labels
            .iter()
            .map(|&(c, p, e)| {
                let s = match e {
                    Emotion::Positive => EmotionScores { positive: 0.8, neutral: 0.1, negative: 0.1 },
                    Emotion::Neutral => EmotionScores { positive: 0.1, neutral: 0.8, negative: 0.1 },
                    Emotion::Negative => EmotionScores { positive: 0.1, neutral: 0.1, negative: 0.8 },
                };
                ((c, p), s)
            })
            .collect(),
    }
}

fn emotion() -> impl Strategy<Value = Emotion> {
    prop::sample::select(vec![Emotion::Positive, Emotion::Neutral, Emotion::Negative])
}

proptest! {
    #[test]
    fn woven_manifest_is_sound_and_deterministic(
        labels in prop::collection::vec(emotion(), 6),
        modes in prop::collection::vec(prop::sample::select(vec![Some(Mode::Major), Some(Mode::Minor), None]), 3..8),
        seed in any::<u64>(),
        cue_scene in prop::option::of(0u32..3),
    ) {
        // both valences present so every emotion has a pool
        let mut pool: Vec<MusicSegment> = modes.iter().enumerate().map(|(i, &m)| music(1 + i as u32 % 2, i, m)).collect();
        pool.push(music(3, 0, Some(Mode::Major)));
        pool.push(music(3, 1, Some(Mode::Minor)));
        let segments = vec![segment(0, 0, 0, 1), segment(0, 1, 2, 2), segment(1, 0, 0, 2)];
        let table = emotion_table(&[
            (0, 0, labels[0]), (0, 1, labels[1]), (0, 2, labels[2]),
            (1, 0, labels[3]), (1, 1, labels[4]), (1, 2, labels[5]),
        ]);
        let matches = cue_scene
            .map(|s| vec![soundweave::refine::SegmentSceneMatch {
                chapter: 0,
                segment: 0,
                scene_id: s,
                evidence: vec![soundweave::refine::Evidence { kind: EvidenceKind::Frame, movie_ms: 40_000, score: 0.8 }],
            }])
            .unwrap_or_default();
        let log = TrackLog {
            entries: vec![TrackLogEntry { movie_ms: 35_000, track_id: 3, confidence: 20, offset_s: 12.0 }],
        };
        let a = weave_all("book", &segments, &matches, &log, &pool, &table, seed, 3000).unwrap();
        let b = weave_all("book", &segments, &matches, &log, &pool, &table, seed, 3000).unwrap();
        prop_assert_eq!(a.to_json(), b.to_json());
        let problems = check_manifest(&a, &segments, &matches, &log, &pool);
        prop_assert!(problems.is_empty(), "{:?}", problems);
        let keys: Vec<(usize, usize)> = a.entries.iter().map(|e| (e.chapter, e.segment)).collect();
        prop_assert_eq!(keys, vec![(0, 0), (0, 1), (1, 0)]);
        for e in &a.entries {
            if let Provenance::MovieCue { .. } = e.provenance {
                prop_assert_eq!(e.track_id, 3);
                prop_assert!(cue_scene.is_some());
            }
        }
        let reread = soundweave::weave::SoundtrackManifest::from_json(&a.to_json()).unwrap();
        prop_assert_eq!(reread.to_json(), a.to_json());
    }
}

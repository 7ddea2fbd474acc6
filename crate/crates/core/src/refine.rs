//! Segment-level alignment.
//!
//! A chapter segment is matched to the scenes of its chapter either through
//! dialogue evidence inherited from the coarse alignment or through visual
//! evidence: its most informative concrete sentences are compared with the
//! frame embeddings of candidate scenes.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::CoarseAlignment;
use crate::corpus::{sentence_key, BookStructure, ConcretenessLexicon, CorpusError, EmbeddingBundle, ShotTable};
use crate::scenes::Scene;
use crate::text::tokens;
use crate::textseg::ChapterSegment;
use crate::tsv;

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("chapter {chapter} has no aligned scenes")]
    NoCandidateScenes { chapter: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("invalid parameter: {0}")]
    Config(String),
    #[error("segment match table line {line}: {message}")]
    Table { line: usize, message: String },
}

impl RefineError {
    pub fn kind(&self) -> &'static str {
        match self {
            RefineError::NoCandidateScenes { .. } => "NoCandidateScenes",
            RefineError::Corpus(e) => e.kind(),
            RefineError::Config(_) => "InvalidConfig",
            RefineError::Table { .. } => "MalformedTable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    /// Sentence-frame cosine must exceed this.
    pub theta: f64,
    /// Sentences per segment compared with frames.
    pub top_k: usize,
    pub concreteness_threshold: f64,
    /// Minimum share of content tokens that must have a lexicon rating.
    pub min_coverage: f64,
}

impl Default for RefineParams {
    fn default() -> Self {
        RefineParams {
            theta: 0.3,
            top_k: 5,
            concreteness_threshold: 3.0,
            min_coverage: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub chapter: usize,
    pub paragraph: usize,
    pub sentence: usize,
    pub segment: usize,
    pub tfidf: f64,
    pub concreteness: f64,
    pub kept: bool,
}

/// Stopwords: the given list when non-empty, otherwise the 100 most frequent
/// tokens of the book (ties by token).
pub fn stopwords_or_default(book: &BookStructure, provided: &HashSet<String>) -> HashSet<String> {
    if !provided.is_empty() {
        return provided.clone();
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for s in book.chapters.iter().flat_map(|c| &c.paragraphs).flat_map(|p| &p.sentences) {
        for t in tokens(s) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(100).map(|(t, _)| t).collect()
}

/// TF-IDF and concreteness of every sentence, with the chapter segments as
/// the document collection. Sentences whose content tokens are less than
/// `min_coverage` rated by the lexicon are left out.
pub fn score_sentences(
    book: &BookStructure,
    segments: &[ChapterSegment],
    lexicon: &ConcretenessLexicon,
    stopwords: &HashSet<String>,
    params: &RefineParams,
) -> Vec<SentenceScore> {
    let content = |s: &str| -> Vec<String> {
        tokens(s).into_iter().filter(|t| !stopwords.contains(t)).collect()
    };
    // term frequencies per segment, relative to the segment's content tokens
    let tf: Vec<HashMap<String, f64>> = segments
        .iter()
        .map(|seg| {
            let mut counts: HashMap<String, f64> = HashMap::new();
            let mut total = 0.0;
            for p in seg.paragraphs() {
                for s in &book.chapters[seg.chapter_index].paragraphs[p].sentences {
                    for t in content(s) {
                        *counts.entry(t).or_default() += 1.0;
                        total += 1.0;
                    }
                }
            }
            counts.values_mut().for_each(|c| *c /= total);
            counts
        })
        .collect();
    let mut df: HashMap<&str, f64> = HashMap::new();
    for counts in &tf {
        for w in counts.keys() {
            *df.entry(w.as_str()).or_default() += 1.0;
        }
    }
    let n_docs = segments.len() as f64;
    let mut out = Vec::new();
    for (d, seg) in segments.iter().enumerate() {
        let chapter = &book.chapters[seg.chapter_index];
        for p in seg.paragraphs() {
            let par = &chapter.paragraphs[p];
            for (si, sentence) in par.sentences.iter().enumerate() {
                let words = content(sentence);
                if words.is_empty() {
                    continue;
                }
                let ratings: Vec<f64> = words.iter().filter_map(|w| lexicon.rating(w)).collect();
                if (ratings.len() as f64) < params.min_coverage * words.len() as f64 {
                    continue;
                }
                let concreteness = ratings.iter().sum::<f64>() / ratings.len() as f64;
                let tfidf = words
                    .iter()
                    .map(|w| tf[d][w] * (n_docs / df[w.as_str()]).ln())
                    .sum::<f64>()
                    / words.len() as f64;
                out.push(SentenceScore {
                    chapter: seg.chapter_index,
                    paragraph: p,
                    sentence: si,
                    segment: seg.segment_index,
                    tfidf,
                    concreteness,
                    kept: !par.is_quote(si) && concreteness >= params.concreteness_threshold,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceKind {
    Dialogue,
    Frame,
}

impl EvidenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EvidenceKind::Dialogue => "dialogue",
            EvidenceKind::Frame => "frame",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub kind: EvidenceKind,
    pub movie_ms: u64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSceneMatch {
    pub chapter: usize,
    pub segment: usize,
    pub scene_id: u32,
    pub evidence: Vec<Evidence>,
}

fn cosine32(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

/// Scenes matched to one segment. `scores` may hold sentences of any
/// segment; only kept sentences of this segment are used.
#[allow(clippy::too_many_arguments)]
pub fn match_segment_scenes(
    segment: &ChapterSegment,
    scores: &[SentenceScore],
    sentences: &EmbeddingBundle,
    shots: &ShotTable,
    scenes: &[Scene],
    coarse: &CoarseAlignment,
    params: &RefineParams,
) -> Result<Vec<SegmentSceneMatch>, RefineError> {
    let chapter = segment.chapter_index;
    let candidates = coarse.scenes_of(chapter);
    if candidates.is_empty() {
        return Err(RefineError::NoCandidateScenes { chapter });
    }
    let mut evidence: BTreeMap<u32, Vec<Evidence>> = BTreeMap::new();
    for m in &coarse.dialogue_matches {
        if m.chapter == chapter && segment.contains(m.paragraph) && candidates.contains(&m.scene_id) {
            evidence.entry(m.scene_id).or_default().push(Evidence {
                kind: EvidenceKind::Dialogue,
                movie_ms: m.cue_time_ms,
                score: m.lcs_score,
            });
        }
    }

    let mut kept: Vec<&SentenceScore> = scores
        .iter()
        .filter(|s| s.kept && s.chapter == chapter && segment.contains(s.paragraph))
        .collect();
    kept.sort_by(|a, b| {
        b.tfidf
            .total_cmp(&a.tfidf)
            .then((a.paragraph, a.sentence).cmp(&(b.paragraph, b.sentence)))
    });
    kept.truncate(params.top_k);
    let mut vectors = Vec::with_capacity(kept.len());
    for s in &kept {
        let key = sentence_key(chapter, s.paragraph, s.sentence);
        match sentences.require(&key) {
            Ok(v) => vectors.push(v),
            Err(CorpusError::ZeroEmbedding(_)) => log::warn!("zero sentence embedding {key}"),
            Err(e) => return Err(e.into()),
        }
    }
    if !vectors.is_empty() {
        for &scene_id in &candidates {
            let scene = &scenes[scene_id as usize];
            for shot in &shots.shots[scene.first_shot..=scene.last_shot] {
                let best = shot
                    .frame_embeddings
                    .iter()
                    .flat_map(|f| vectors.iter().map(move |v| cosine32(v, f)))
                    .fold(f64::NEG_INFINITY, f64::max);
                if best > params.theta {
                    evidence.entry(scene_id).or_default().push(Evidence {
                        kind: EvidenceKind::Frame,
                        movie_ms: shot.midpoint_ms(),
                        score: best,
                    });
                }
            }
        }
    }
    Ok(evidence
        .into_iter()
        .map(|(scene_id, mut ev)| {
            ev.sort_by(|a, b| (a.movie_ms, a.kind).cmp(&(b.movie_ms, b.kind)));
            SegmentSceneMatch {
                chapter,
                segment: segment.segment_index,
                scene_id,
                evidence: ev,
            }
        })
        .collect())
}

/// All segment matches plus the segments that ended up unmatched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub matches: Vec<SegmentSceneMatch>,
    /// `(chapter, segment)` keys without any matched scene.
    pub unmatched: Vec<(usize, usize)>,
    /// Segments with at least one dialogue-evidenced scene.
    pub dialogue_matched: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn refine_all(
    segments: &[ChapterSegment],
    scores: &[SentenceScore],
    sentences: &EmbeddingBundle,
    shots: &ShotTable,
    scenes: &[Scene],
    coarse: &CoarseAlignment,
    params: &RefineParams,
) -> Result<Refinement, RefineError> {
    if !(0.0..=1.0).contains(&params.theta) {
        return Err(RefineError::Config(format!("theta {} outside [0, 1]", params.theta)));
    }
    let per_segment: Vec<Vec<SegmentSceneMatch>> = segments
        .par_iter()
        .map(|seg| {
            match match_segment_scenes(seg, scores, sentences, shots, scenes, coarse, params) {
                Err(RefineError::NoCandidateScenes { chapter }) => {
                    log::warn!("segment {chapter}/{} has no candidate scenes", seg.segment_index);
                    Ok(Vec::new())
                }
                other => other,
            }
        })
        .collect::<Result<_, _>>()?;
    let mut out = Refinement {
        matches: Vec::new(),
        unmatched: Vec::new(),
        dialogue_matched: 0,
    };
    for (seg, matches) in segments.iter().zip(per_segment) {
        if matches.is_empty() {
            out.unmatched.push((seg.chapter_index, seg.segment_index));
        }
        if matches
            .iter()
            .any(|m| m.evidence.iter().any(|e| e.kind == EvidenceKind::Dialogue))
        {
            out.dialogue_matched += 1;
        }
        out.matches.extend(matches);
    }
    Ok(out)
}

const HEADER: [&str; 6] = ["chapter", "segment", "scene", "evidence_kind", "movie_ms", "score"];

/// One row per evidence item.
pub fn segment_matches_tsv(matches: &[SegmentSceneMatch]) -> String {
    tsv::render(
        &HEADER,
        matches.iter().flat_map(|m| {
            m.evidence.iter().map(move |e| {
                vec![
                    m.chapter.to_string(),
                    m.segment.to_string(),
                    m.scene_id.to_string(),
                    e.kind.as_str().to_string(),
                    e.movie_ms.to_string(),
                    format!("{:.4}", e.score),
                ]
            })
        }),
    )
}

pub fn parse_segment_matches_tsv(raw: &str) -> Result<Vec<SegmentSceneMatch>, RefineError> {
    let err = |(line, message)| RefineError::Table { line, message };
    let mut grouped: BTreeMap<(usize, usize, u32), Vec<Evidence>> = BTreeMap::new();
    for row in tsv::read(raw, &HEADER).map_err(err)? {
        let kind = match row.fields[3].as_str() {
            "dialogue" => EvidenceKind::Dialogue,
            "frame" => EvidenceKind::Frame,
            other => return Err(err((row.line, format!("unknown evidence kind {other:?}")))),
        };
        let key = (
            tsv::field(&row, 0, "chapter").map_err(err)?,
            tsv::field(&row, 1, "segment").map_err(err)?,
            tsv::field(&row, 2, "scene").map_err(err)?,
        );
        grouped.entry(key).or_default().push(Evidence {
            kind,
            movie_ms: tsv::field(&row, 4, "movie_ms").map_err(err)?,
            score: tsv::field(&row, 5, "score").map_err(err)?,
        });
    }
    Ok(grouped
        .into_iter()
        .map(|((chapter, segment, scene_id), evidence)| SegmentSceneMatch {
            chapter,
            segment,
            scene_id,
            evidence,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_book, Shot, DEFAULT_CHAPTER_MARKER};
    use regex::Regex;
    use std::collections::BTreeSet;

    fn book() -> BookStructure {
        let raw = "CHAPTER ONE\n\nThe red apple fell on the table.\n\n\"Hello,\" said Ann.\n\nCHAPTER TWO\n\nA stone wall stood there.\n";
        parse_book(raw, &Regex::new(DEFAULT_CHAPTER_MARKER).unwrap()).unwrap()
    }

    fn seg(chapter: usize, segment: usize, first: usize, last: usize) -> ChapterSegment {
        ChapterSegment {
            chapter_index: chapter,
            segment_index: segment,
            first_paragraph: first,
            last_paragraph: last,
            word_count: 0,
            emotion: None,
            matched_scenes: BTreeSet::new(),
        }
    }

    fn lexicon(pairs: &[(&str, f64)]) -> ConcretenessLexicon {
        ConcretenessLexicon {
            ratings: pairs.iter().map(|(w, r)| (w.to_string(), *r)).collect(),
        }
    }

    #[test]
    fn idf_and_concreteness() {
        let b = book();
        let segs = vec![seg(0, 0, 0, 1), seg(1, 0, 0, 0)];
        let stop: HashSet<String> = ["the", "a", "on", "said"].iter().map(|s| s.to_string()).collect();
        let lex = lexicon(&[("red", 4.5), ("apple", 4.0), ("fell", 2.5), ("table", 4.9), ("hello", 1.5), ("ann", 4.0), ("stone", 4.8), ("wall", 4.9), ("stood", 2.0), ("there", 1.2)]);
        let s = score_sentences(&b, &segs, &lex, &stop, &RefineParams::default());
        assert_eq!(s.len(), 3);
        // every word of segment 0 appears only there: idf = ln 2
        let first = &s[0];
        let expect = (4.5 + 4.0 + 2.5 + 4.9) / 4.0;
        assert!((first.concreteness - expect).abs() < 1e-12);
        assert!((first.tfidf - 2f64.ln() / 6.0).abs() < 1e-12);
        assert!(first.kept);
        // the quote is never kept
        assert!(!s[1].kept);
        assert!((s[2].concreteness - (4.8 + 4.9 + 2.0 + 1.2) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn low_coverage_sentences_are_dropped() {
        let b = book();
        let segs = vec![seg(0, 0, 0, 0)];
        let stop: HashSet<String> = ["the", "on"].iter().map(|s| s.to_string()).collect();
        let s = score_sentences(&b, &segs, &lexicon(&[("red", 4.0)]), &stop, &RefineParams::default());
        assert!(s.is_empty());
    }

    #[test]
    fn default_stopwords_are_frequent_tokens() {
        let sw = stopwords_or_default(&book(), &HashSet::new());
        assert!(sw.contains("the"));
        let given: HashSet<String> = ["x".to_string()].into();
        assert_eq!(stopwords_or_default(&book(), &given), given);
    }

    fn fixture() -> (EmbeddingBundle, ShotTable, Vec<Scene>, CoarseAlignment) {
        let sentences = EmbeddingBundle::from_vectors(
            vec![sentence_key(0, 0, 0)],
            2,
            vec![vec![1.0, 0.0]],
        )
        .unwrap();
        let shots = ShotTable {
            shots: vec![
                Shot { shot_id: 0, start_ms: 0, end_ms: 1000, frame_embeddings: vec![vec![0.0, 1.0]] },
                Shot { shot_id: 1, start_ms: 1000, end_ms: 2000, frame_embeddings: vec![vec![0.0, 1.0], vec![1.0, 0.0]] },
                Shot { shot_id: 2, start_ms: 2000, end_ms: 3000, frame_embeddings: vec![vec![1.0, 0.0]] },
            ],
        };
        let scene = |id, a, b| Scene {
            scene_id: id,
            first_shot: a,
            last_shot: b,
            start_ms: a as u64 * 1000,
            end_ms: (b as u64 + 1) * 1000,
            character_histogram: Default::default(),
            dialogues: vec![],
        };
        let scenes = vec![scene(0, 0, 0), scene(1, 1, 1), scene(2, 2, 2)];
        let coarse = CoarseAlignment {
            scene_to_chapter: vec![0, 0, 1],
            dialogue_matches: vec![crate::align::DialogueMatch {
                chapter: 0,
                paragraph: 1,
                sentence: 0,
                scene_id: 0,
                cue_time_ms: 400,
                lcs_score: 1.0,
            }],
            low_similarity: vec![],
        };
        (sentences, shots, scenes, coarse)
    }

    fn kept_score() -> SentenceScore {
        SentenceScore { chapter: 0, paragraph: 0, sentence: 0, segment: 0, tfidf: 1.0, concreteness: 4.0, kept: true }
    }

    #[test]
    fn identical_frame_matches_only_within_chapter() {
        let (sentences, shots, scenes, coarse) = fixture();
        let params = RefineParams { theta: 0.9, ..RefineParams::default() };
        let m = match_segment_scenes(&seg(0, 0, 0, 1), &[kept_score()], &sentences, &shots, &scenes, &coarse, &params).unwrap();
        let ids: Vec<u32> = m.iter().map(|x| x.scene_id).collect();
        // scene 2 also holds an identical frame but belongs to chapter 1
        assert_eq!(ids, vec![0, 1]);
        assert_eq!(m[0].evidence[0].kind, EvidenceKind::Dialogue);
        assert_eq!(m[1].evidence[0].score, 1.0);
        assert_eq!(m[1].evidence[0].movie_ms, 1500);
    }

    #[test]
    fn zero_k_keeps_dialogue_evidence() {
        let (sentences, shots, scenes, coarse) = fixture();
        let params = RefineParams { top_k: 0, ..RefineParams::default() };
        let m = match_segment_scenes(&seg(0, 0, 0, 1), &[kept_score()], &sentences, &shots, &scenes, &coarse, &params).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m[0].evidence.iter().all(|e| e.kind == EvidenceKind::Dialogue));
        let none = CoarseAlignment { scene_to_chapter: vec![1, 1, 1], ..coarse };
        assert!(matches!(
            match_segment_scenes(&seg(0, 0, 0, 1), &[], &sentences, &shots, &scenes, &none, &params),
            Err(RefineError::NoCandidateScenes { chapter: 0 })
        ));
    }

    #[test]
    fn table_round_trip() {
        let (sentences, shots, scenes, coarse) = fixture();
        let m = match_segment_scenes(&seg(0, 0, 0, 1), &[kept_score()], &sentences, &shots, &scenes, &coarse, &RefineParams::default()).unwrap();
        assert_eq!(parse_segment_matches_tsv(&segment_matches_tsv(&m)).unwrap(), m);
    }
}

//! Narrative segmentation of chapters.
//!
//! Paragraph embeddings of one chapter are clustered with temporally weighted
//! first-neighbour clustering ([`tw_finch`]); one level of the resulting
//! hierarchy becomes the chapter's segments.

mod finch;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{paragraph_key, BookStructure, Chapter, CorpusError, EmbeddingBundle};
use crate::tsv;
use crate::vecmath::to_f64;

pub use finch::{tw_finch, Partition, PartitionHierarchy};

/// Hierarchy level used for segments unless configured otherwise.
pub const DEFAULT_PARTITION_LEVEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Positive,
    Neutral,
    Negative,
}

impl Emotion {
    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Positive => "positive",
            Emotion::Neutral => "neutral",
            Emotion::Negative => "negative",
        }
    }
}

/// A contiguous paragraph range of one chapter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChapterSegment {
    pub chapter_index: usize,
    pub segment_index: usize,
    pub first_paragraph: usize,
    /// Inclusive.
    pub last_paragraph: usize,
    pub word_count: usize,
    pub emotion: Option<Emotion>,
    pub matched_scenes: BTreeSet<u32>,
}

impl ChapterSegment {
    pub fn contains(&self, paragraph: usize) -> bool {
        (self.first_paragraph..=self.last_paragraph).contains(&paragraph)
    }

    pub fn paragraphs(&self) -> std::ops::RangeInclusive<usize> {
        self.first_paragraph..=self.last_paragraph
    }
}

#[derive(Debug, Error)]
pub enum TextSegError {
    #[error("clustering needs at least one point")]
    DegenerateInput,
    #[error("missing paragraph embedding {0:?}")]
    MissingEmbedding(String),
    #[error("partition level must be at least 1")]
    InvalidLevel,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("segments table line {line}: {message}")]
    Table { line: usize, message: String },
}

impl TextSegError {
    pub fn kind(&self) -> &'static str {
        match self {
            TextSegError::DegenerateInput => "DegenerateInput",
            TextSegError::MissingEmbedding(_) => "MissingEmbedding",
            TextSegError::InvalidLevel => "InvalidLevel",
            TextSegError::Corpus(e) => e.kind(),
            TextSegError::Table { .. } => "MalformedTable",
        }
    }
}

/// Segments one chapter at the given 1-based hierarchy level, clamped to the
/// deepest level available.
pub fn segment_chapter(
    chapter_index: usize,
    chapter: &Chapter,
    bundle: &EmbeddingBundle,
    level: usize,
) -> Result<Vec<ChapterSegment>, TextSegError> {
    Ok(segment_chapter_detailed(chapter_index, chapter, bundle, level)?.0)
}

/// Like [`segment_chapter`], also reporting whether the level was clamped.
fn segment_chapter_detailed(
    chapter_index: usize,
    chapter: &Chapter,
    bundle: &EmbeddingBundle,
    level: usize,
) -> Result<(Vec<ChapterSegment>, bool), TextSegError> {
    if level == 0 {
        return Err(TextSegError::InvalidLevel);
    }
    let features = chapter
        .paragraphs
        .iter()
        .enumerate()
        .map(|(p, _)| {
            let key = paragraph_key(chapter_index, p);
            match bundle.require(&key) {
                Ok(v) => Ok(to_f64(v)),
                Err(CorpusError::UnresolvedId(_)) => Err(TextSegError::MissingEmbedding(key)),
                Err(e) => Err(e.into()),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let hierarchy = tw_finch(&features)?;
    let clamped = level > hierarchy.levels.len();
    let partition = &hierarchy.levels[level.min(hierarchy.levels.len()) - 1];
    let segments = partition
        .clusters
        .iter()
        .enumerate()
        .map(|(s, cluster)| {
            let first = cluster[0];
            let last = *cluster.last().expect("clusters are non-empty");
            ChapterSegment {
                chapter_index,
                segment_index: s,
                first_paragraph: first,
                last_paragraph: last,
                word_count: chapter.paragraphs[first..=last]
                    .iter()
                    .map(|p| p.word_count)
                    .sum(),
                emotion: None,
                matched_scenes: BTreeSet::new(),
            }
        })
        .collect();
    Ok((segments, clamped))
}

/// Segments of a whole book plus chapters whose requested level was clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct BookSegmentation {
    pub segments: Vec<ChapterSegment>,
    pub clamped_chapters: Vec<usize>,
}

/// Segments every chapter in parallel; results are in chapter order.
pub fn segment_book(
    book: &BookStructure,
    bundle: &EmbeddingBundle,
    level: usize,
) -> Result<BookSegmentation, TextSegError> {
    let per_chapter = book
        .chapters
        .par_iter()
        .enumerate()
        .map(|(i, ch)| segment_chapter_detailed(i, ch, bundle, level))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = BookSegmentation {
        segments: Vec::new(),
        clamped_chapters: Vec::new(),
    };
    for (i, (segments, clamped)) in per_chapter.into_iter().enumerate() {
        if clamped && book.chapters[i].paragraphs.len() > 1 {
            out.clamped_chapters.push(i);
        }
        out.segments.extend(segments);
    }
    Ok(out)
}

const HEADER: [&str; 5] = ["chapter", "segment", "first_par", "last_par", "word_count"];

pub fn segments_tsv(segments: &[ChapterSegment]) -> String {
    tsv::render(
        &HEADER,
        segments.iter().map(|s| {
            vec![
                s.chapter_index.to_string(),
                s.segment_index.to_string(),
                s.first_paragraph.to_string(),
                s.last_paragraph.to_string(),
                s.word_count.to_string(),
            ]
        }),
    )
}

pub fn parse_segments_tsv(raw: &str) -> Result<Vec<ChapterSegment>, TextSegError> {
    let err = |(line, message)| TextSegError::Table { line, message };
    tsv::read(raw, &HEADER)
        .map_err(err)?
        .iter()
        .map(|row| {
            Ok(ChapterSegment {
                chapter_index: tsv::field(row, 0, "chapter").map_err(err)?,
                segment_index: tsv::field(row, 1, "segment").map_err(err)?,
                first_paragraph: tsv::field(row, 2, "first_par").map_err(err)?,
                last_paragraph: tsv::field(row, 3, "last_par").map_err(err)?,
                word_count: tsv::field(row, 4, "word_count").map_err(err)?,
                emotion: None,
                matched_scenes: BTreeSet::new(),
            })
        })
        .collect()
}

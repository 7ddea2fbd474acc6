//! Parsing and validation of every external input.
//!
//! All parsers are pure functions over borrowed text or bytes; file access is
//! limited to the thin `load_*`/`read_*` wrappers.

mod audio;
mod book;
mod embeddings;
mod shots;
mod srt;
mod tables;
mod transcript;

pub use audio::{read_wav, wav_bytes, write_wav, AudioBuffer};
pub use book::{
    apply_quotes, parse_book, parse_quotes, quotes_tsv, BookStructure, Chapter, Paragraph, Quote,
    QuoteAnnotation, DEFAULT_CHAPTER_MARKER,
};
pub use embeddings::{load_embeddings, parse_embeddings, EmbeddingBundle};
pub use shots::{parse_shot_table, shots_tsv, Shot, ShotTable};
pub use srt::{parse_srt, write_srt, Cue, OverlapWarning, SubtitleTrack};
pub use tables::{
    parse_album_index, parse_emotion_table, parse_lexicon, parse_stopwords, AlbumIndex,
    AlbumTrack, ConcretenessLexicon, EmotionScoreTable, EmotionScores,
};
pub use transcript::{parse_transcript, Transcript, TranscriptLine};

use thiserror::Error;

/// Key of a paragraph embedding.
pub fn paragraph_key(chapter: usize, paragraph: usize) -> String {
    format!("ch:{chapter}:par:{paragraph}")
}

/// Key of a sentence embedding.
pub fn sentence_key(chapter: usize, paragraph: usize, sentence: usize) -> String {
    format!("ch:{chapter}:par:{paragraph}:sent:{sentence}")
}

/// Key of a shot frame embedding.
pub fn frame_key(shot_id: u32, frame: usize) -> String {
    format!("shot:{shot_id}:frame:{frame}")
}

/// Checks that no id is defined by more than one bundle.
pub fn check_disjoint(bundles: &[&EmbeddingBundle]) -> Result<(), CorpusError> {
    let mut seen = std::collections::HashSet::new();
    for bundle in bundles {
        for id in bundle.ids() {
            if !seen.insert(id.as_str()) {
                return Err(CorpusError::AmbiguousId(id.clone()));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("chapter marker never matched a line")]
    NoChaptersFound,
    #[error("chapter {index} ({title:?}) has no paragraphs")]
    EmptyChapter { index: usize, title: String },
    #[error("malformed timestamp in subtitle cue {cue}")]
    MalformedTimestamp { cue: usize },
    #[error("transcript line {line}: expected `SPEAKER: utterance`")]
    MalformedTranscriptLine { line: usize },
    #[error("embedding blob holds {actual} bytes, manifest implies {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("duplicate embedding id {0:?}")]
    DuplicateId(String),
    #[error("non-finite value in embedding {0:?}")]
    NonFinite(String),
    #[error("embedding manifest: {0}")]
    Manifest(String),
    #[error("unresolved id {0:?}")]
    UnresolvedId(String),
    #[error("id {0:?} is defined by more than one embedding bundle")]
    AmbiguousId(String),
    #[error("embedding {0:?} is the zero vector")]
    ZeroEmbedding(String),
    #[error("{table} line {line}: {message}")]
    Table {
        table: &'static str,
        line: usize,
        message: String,
    },
    #[error("shot table: {0}")]
    Shots(String),
    #[error("audio: {0}")]
    Audio(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Wav(#[from] hound::Error),
}

impl CorpusError {
    pub fn kind(&self) -> &'static str {
        match self {
            CorpusError::NoChaptersFound => "NoChaptersFound",
            CorpusError::EmptyChapter { .. } => "EmptyChapter",
            CorpusError::MalformedTimestamp { .. } => "MalformedTimestamp",
            CorpusError::MalformedTranscriptLine { .. } => "MalformedTranscriptLine",
            CorpusError::SizeMismatch { .. } => "SizeMismatch",
            CorpusError::DuplicateId(_) => "DuplicateId",
            CorpusError::NonFinite(_) => "NonFinite",
            CorpusError::Manifest(_) => "ManifestFormat",
            CorpusError::UnresolvedId(_) => "UnresolvedId",
            CorpusError::AmbiguousId(_) => "AmbiguousId",
            CorpusError::ZeroEmbedding(_) => "ZeroEmbedding",
            CorpusError::Table { .. } => "MalformedTable",
            CorpusError::Shots(_) => "MalformedShotTable",
            CorpusError::Audio(_) => "Audio",
            CorpusError::Io(_) => "Io",
            CorpusError::Wav(_) => "Wav",
        }
    }

    pub(crate) fn table(table: &'static str) -> impl Fn((usize, String)) -> CorpusError {
        move |(line, message)| CorpusError::Table {
            table,
            line,
            message,
        }
    }
}

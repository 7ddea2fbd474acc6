use thiserror::Error;

use crate::{align, corpus, fingerprint, musicseg, refine, scenes, textseg, weave};

/// Any failure raised by a pipeline stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    TextSeg(#[from] textseg::TextSegError),
    #[error(transparent)]
    MusicSeg(#[from] musicseg::MusicSegError),
    #[error(transparent)]
    Scenes(#[from] scenes::SceneError),
    #[error(transparent)]
    Align(#[from] align::AlignError),
    #[error(transparent)]
    Refine(#[from] refine::RefineError),
    #[error(transparent)]
    Fingerprint(#[from] fingerprint::FingerprintError),
    #[error(transparent)]
    Weave(#[from] weave::WeaveError),
}

impl Error {
    /// Short machine-readable name of the underlying failure.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Corpus(e) => e.kind(),
            Error::TextSeg(e) => e.kind(),
            Error::MusicSeg(e) => e.kind(),
            Error::Scenes(e) => e.kind(),
            Error::Align(e) => e.kind(),
            Error::Refine(e) => e.kind(),
            Error::Fingerprint(e) => e.kind(),
            Error::Weave(e) => e.kind(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

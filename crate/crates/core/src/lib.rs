//! Book soundtrack assembly.
//!
//! The pipeline segments a book, the album of its movie adaptation and the
//! movie itself, aligns book chapters to movie scenes, identifies which album
//! track plays under each matched scene and finally assigns one loopable album
//! excerpt to every chapter segment.
//!
//! Stages, in dependency order:
//!
//! * [`corpus`] parses every external input into the data model.
//! * [`textseg`] splits chapters into narrative segments.
//! * [`musicseg`] splits album tracks into tonally cohesive excerpts.
//! * [`scenes`] groups movie shots into scenes.
//! * [`fingerprint`] identifies album tracks in the movie audio.
//! * [`align`] maps scenes onto chapters.
//! * [`refine`] maps scenes onto chapter segments.
//! * [`weave`] picks the excerpt for every segment and writes the manifest.

pub mod align;
pub mod corpus;
pub mod fingerprint;
pub mod musicseg;
pub mod refine;
pub mod scenes;
pub mod synth;
pub mod text;
pub mod textseg;
pub mod tsv;
pub mod weave;

mod error;
mod vecmath;

pub use error::{Error, Result};

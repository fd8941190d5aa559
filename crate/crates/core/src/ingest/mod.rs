//! Reading MusicXML into a tick-accurate score model.

mod container;
mod model;
mod parse;
mod unfold;

use std::path::Path;

use thiserror::Error;

pub use container::{extract_rootfile, open_container};
pub use model::{
    measure_timeline, Ending, Event, Measure, NoteEvent, Part, Pitch, RepeatMarks, ScoreDoc, Skip,
    TimeSignature, TupletMark, TupletMarkKind,
};
pub use parse::parse_musicxml;
pub use unfold::unfold_repeats;

/// Reasons a file never reaches the checks.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("container error: {0}")]
    Container(String),
    #[error("XML syntax error: {0}")]
    Xml(String),
    #[error("unsupported document: {0}")]
    Unsupported(String),
    #[error("ill-formed document: {0}")]
    IllFormed(String),
}

/// `open_container` followed by `parse_musicxml`, naming the score after the
/// file.
pub fn load_score(path: &Path, source_name: &str) -> Result<ScoreDoc, IngestError> {
    let bytes = open_container(path)?;
    parse_musicxml(&bytes, source_name)
}

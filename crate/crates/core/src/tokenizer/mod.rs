//! Linear token view of an unfolded score, one sequence per part.

mod build;

use std::fmt;

use crate::duration::{Rational, SymbolicDuration};
use crate::ingest::{Pitch, TimeSignature};
use crate::report::Diagnostic;

pub use build::tokenize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Bar {
        time: TimeSignature,
    },
    Note {
        voice: u32,
        pitch: Pitch,
        duration: SymbolicDuration,
        is_grace: bool,
        /// Tied to a later note.
        is_tied: bool,
    },
    Rest {
        voice: u32,
        duration: SymbolicDuration,
        full_measure: bool,
        /// Inserted by padding, not present in the source.
        synthetic: bool,
    },
    ChordStart {
        voice: u32,
        duration: SymbolicDuration,
        is_grace: bool,
    },
    ChordEnd {
        voice: u32,
    },
    TupletStart {
        voice: u32,
        base_unit: SymbolicDuration,
        n_normal: u32,
        n_actual: u32,
    },
    TupletEnd {
        voice: u32,
    },
    EndOfScore,
}

impl Token {
    pub fn voice(&self) -> Option<u32> {
        match *self {
            Token::Note { voice, .. }
            | Token::Rest { voice, .. }
            | Token::ChordStart { voice, .. }
            | Token::ChordEnd { voice }
            | Token::TupletStart { voice, .. }
            | Token::TupletEnd { voice } => Some(voice),
            Token::Bar { .. } | Token::EndOfScore => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Token::Bar { .. } => "Bar",
            Token::Note { .. } => "Note",
            Token::Rest { .. } => "Rest",
            Token::ChordStart { .. } => "ChordStart",
            Token::ChordEnd { .. } => "ChordEnd",
            Token::TupletStart { .. } => "TupletStart",
            Token::TupletEnd { .. } => "TupletEnd",
            Token::EndOfScore => "EndOfScore",
        }
    }
}

/// `base_unit × n_normal`: the span the tuplet occupies outside.
pub fn tuplet_normal_duration(base_unit: &SymbolicDuration, n_normal: u32) -> Rational {
    base_unit.quarters() * Rational::from_integer(n_normal as i128)
}

/// `base_unit × n_actual`: the content the tuplet holds inside.
pub fn tuplet_actual_duration(base_unit: &SymbolicDuration, n_actual: u32) -> Rational {
    base_unit.quarters() * Rational::from_integer(n_actual as i128)
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Bar { time } => write!(f, "Bar {time}"),
            Token::Note {
                voice,
                pitch,
                duration,
                is_grace,
                is_tied,
            } => {
                write!(f, "Note v{voice} {pitch} {duration}")?;
                if *is_grace {
                    f.write_str(" grace")?;
                }
                if *is_tied {
                    f.write_str(" tied")?;
                }
                Ok(())
            }
            Token::Rest {
                voice,
                duration,
                full_measure,
                synthetic,
            } => {
                write!(f, "Rest v{voice} {duration}")?;
                if *full_measure {
                    f.write_str(" full-measure")?;
                }
                if *synthetic {
                    f.write_str(" synthetic")?;
                }
                Ok(())
            }
            Token::ChordStart {
                voice,
                duration,
                is_grace,
            } => {
                write!(f, "ChordStart v{voice} {duration}")?;
                if *is_grace {
                    f.write_str(" grace")?;
                }
                Ok(())
            }
            Token::ChordEnd { voice } => write!(f, "ChordEnd v{voice}"),
            Token::TupletStart {
                voice,
                base_unit,
                n_normal,
                n_actual,
            } => write!(f, "TupletStart v{voice} {base_unit} {n_actual}:{n_normal}"),
            Token::TupletEnd { voice } => write!(f, "TupletEnd v{voice}"),
            Token::EndOfScore => f.write_str("EndOfScore"),
        }
    }
}

/// Where a token came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceLoc {
    pub measure: String,
    pub measure_index: usize,
    pub playback_index: Option<usize>,
    /// Quarters from the measure start; `None` for Bar and EndOfScore.
    pub onset: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub part: String,
    pub part_index: usize,
    pub tokens: Vec<Token>,
    /// Parallel to `tokens`.
    pub locations: Vec<SourceLoc>,
}

impl TokenSequence {
    pub(crate) fn push(&mut self, token: Token, loc: SourceLoc) {
        self.tokens.push(token);
        self.locations.push(loc);
    }

    /// One token per line with its source position, for fixture diffing.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, (t, l)) in self.tokens.iter().zip(&self.locations).enumerate() {
            let onset = l.onset.map_or_else(String::new, |o| format!(" @{o}"));
            let pb = l
                .playback_index
                .map_or_else(String::new, |p| format!(" #{p}"));
            out.push_str(&format!(
                "{i:>5}  {t}  [{}:{}{pb}{onset}]\n",
                self.part, l.measure
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tokenization {
    pub sequences: Vec<TokenSequence>,
    /// Padding and tuplet-marking problems found on the way.
    pub diagnostics: Vec<Diagnostic>,
}

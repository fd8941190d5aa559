use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::duration::Rational;

/// Stable identifiers. Renaming a variant is a breaking change for anything
/// keyed on the JSON output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Code {
    // individual stage
    DurationMismatch,
    SuspiciousSkip,
    SkipOutOfMeasure,
    DegenerateSkip,
    MissingSymbolicDuration,
    // contextual stage
    ScoreMustStartWithBar,
    VoiceDesyncAtBar,
    UnclosedChord,
    UnclosedTuplet,
    UnmatchedChordEnd,
    UnmatchedTupletEnd,
    MeasureOverflow,
    TupletOverflow,
    TupletUnderfilled,
    ChordDurationMismatch,
    DuplicateNoteInChord,
    RestInChord,
    FullMeasureRestNotAlone,
    DanglingTie,
    TokenAfterEnd,
    // tokenization and unfolding
    PaddingImpossible,
    MalformedTupletMarking,
    NestedTuplet,
    UnbalancedRepeat,
    JumpNotUnfolded,
    MultiPartScore,
    ContextualStageSkipped,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::DurationMismatch => "DurationMismatch",
            Code::SuspiciousSkip => "SuspiciousSkip",
            Code::SkipOutOfMeasure => "SkipOutOfMeasure",
            Code::DegenerateSkip => "DegenerateSkip",
            Code::MissingSymbolicDuration => "MissingSymbolicDuration",
            Code::ScoreMustStartWithBar => "ScoreMustStartWithBar",
            Code::VoiceDesyncAtBar => "VoiceDesyncAtBar",
            Code::UnclosedChord => "UnclosedChord",
            Code::UnclosedTuplet => "UnclosedTuplet",
            Code::UnmatchedChordEnd => "UnmatchedChordEnd",
            Code::UnmatchedTupletEnd => "UnmatchedTupletEnd",
            Code::MeasureOverflow => "MeasureOverflow",
            Code::TupletOverflow => "TupletOverflow",
            Code::TupletUnderfilled => "TupletUnderfilled",
            Code::ChordDurationMismatch => "ChordDurationMismatch",
            Code::DuplicateNoteInChord => "DuplicateNoteInChord",
            Code::RestInChord => "RestInChord",
            Code::FullMeasureRestNotAlone => "FullMeasureRestNotAlone",
            Code::DanglingTie => "DanglingTie",
            Code::TokenAfterEnd => "TokenAfterEnd",
            Code::PaddingImpossible => "PaddingImpossible",
            Code::MalformedTupletMarking => "MalformedTupletMarking",
            Code::NestedTuplet => "NestedTuplet",
            Code::UnbalancedRepeat => "UnbalancedRepeat",
            Code::JumpNotUnfolded => "JumpNotUnfolded",
            Code::MultiPartScore => "MultiPartScore",
            Code::ContextualStageSkipped => "ContextualStageSkipped",
        }
    }

    pub fn default_severity(self) -> Severity {
        match self {
            Code::MissingSymbolicDuration
            | Code::DegenerateSkip
            | Code::MalformedTupletMarking
            | Code::NestedTuplet
            | Code::UnbalancedRepeat
            | Code::JumpNotUnfolded
            | Code::ContextualStageSkipped => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Individual,
    Contextual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Where a diagnostic points in the source score.
///
/// `measure` and `measure_index` always name the measure as written, even
/// when the finding comes from an unfolded repeat; `playback_index` is set
/// for findings made on the unfolded sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Location {
    pub file: String,
    pub part: String,
    pub part_index: usize,
    pub measure: String,
    pub measure_index: usize,
    pub playback_index: Option<usize>,
    pub voice: Option<u32>,
    pub onset: Option<Rational>,
}

/// Code-specific payload values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataValue {
    Fraction(Rational),
    Integer(i64),
    Text(String),
}

impl From<Rational> for DataValue {
    fn from(r: Rational) -> Self {
        DataValue::Fraction(r)
    }
}

impl From<i64> for DataValue {
    fn from(n: i64) -> Self {
        DataValue::Integer(n)
    }
}

impl From<&str> for DataValue {
    fn from(s: &str) -> Self {
        DataValue::Text(s.to_string())
    }
}

impl From<String> for DataValue {
    fn from(s: String) -> Self {
        DataValue::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub code: Code,
    pub stage: Stage,
    pub severity: Severity,
    pub location: Location,
    pub message: String,
    pub data: BTreeMap<String, DataValue>,
}

impl Diagnostic {
    pub fn new(code: Code, stage: Stage, location: Location, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            stage,
            severity: code.default_severity(),
            location,
            message: message.into(),
            data: BTreeMap::new(),
        }
    }

    pub fn with_data(mut self, key: &str, value: impl Into<DataValue>) -> Self {
        self.data.insert(key.to_string(), value.into());
        self
    }

    pub fn with_severity(mut self, severity: Severity) -> Self {
        self.severity = severity;
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Total order used by every renderer.
    pub fn sort_key(&self) -> impl Ord + '_ {
        let l = &self.location;
        (
            &l.file,
            l.part_index,
            l.measure_index,
            l.playback_index,
            l.onset,
            l.voice,
            self.code,
            &self.message,
        )
    }
}

pub fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

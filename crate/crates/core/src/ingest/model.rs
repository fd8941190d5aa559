use std::fmt;

use crate::duration::{Rational, SymbolicDuration};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreDoc {
    pub source_name: String,
    pub parts: Vec<Part>,
}

impl ScoreDoc {
    pub fn measure_count(&self) -> usize {
        self.parts.iter().map(|p| p.measures.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Part {
    pub id: String,
    pub measures: Vec<Measure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeSignature {
    pub beats: u32,
    pub beat_type: u32,
}

impl TimeSignature {
    pub const COMMON: TimeSignature = TimeSignature {
        beats: 4,
        beat_type: 4,
    };

    /// Nominal measure length in quarter notes.
    pub fn quarters(self) -> Rational {
        Rational::new(4 * self.beats as i128, self.beat_type as i128)
            .expect("beat_type is positive")
    }
}

impl fmt::Display for TimeSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.beats, self.beat_type)
    }
}

/// A volta bracket covering this measure.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ending {
    pub numbers: Vec<u32>,
    /// The bracket closes on this measure's right barline.
    pub closes: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RepeatMarks {
    pub forward: bool,
    pub backward: bool,
    /// `times` attribute of the backward repeat (total passes).
    pub times: Option<u32>,
    pub ending: Option<Ending>,
}

impl RepeatMarks {
    pub fn is_empty(&self) -> bool {
        !self.forward && !self.backward && self.ending.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Measure {
    /// `number` attribute, verbatim.
    pub number_label: String,
    /// Position of the measure in its part as written.
    pub source_index: usize,
    /// Position in the unfolded sequence, once unfolded.
    pub playback_index: Option<usize>,
    pub divisions: i64,
    pub time: TimeSignature,
    pub events: Vec<Event>,
    pub repeat: RepeatMarks,
    /// Navigation jumps found in the measure (`dacapo`, `dalsegno`, ...).
    pub jumps: Vec<String>,
}

impl Measure {
    pub fn nominal_ticks(&self) -> Rational {
        self.time.quarters() * Rational::from_integer(self.divisions as i128)
    }

    pub fn notes(&self) -> impl Iterator<Item = &NoteEvent> {
        self.events.iter().filter_map(|e| match e {
            Event::Note(n) => Some(n),
            _ => None,
        })
    }
}

/// Diatonic step letter plus octave and chromatic alteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pitch {
    pub step: char,
    pub octave: i32,
    pub alter: Rational,
}

impl Pitch {
    /// Semitones above C-1, with microtonal alteration kept exact. Enharmonic
    /// spellings share a key.
    pub fn sounding_key(&self) -> Rational {
        let step = match self.step {
            'C' => 0,
            'D' => 2,
            'E' => 4,
            'F' => 5,
            'G' => 7,
            'A' => 9,
            'B' => 11,
            _ => 0,
        };
        Rational::from_integer(12 * (self.octave as i128 + 1) + step) + self.alter
    }
}

impl fmt::Display for Pitch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let acc = match (self.alter.numer(), self.alter.denom()) {
            (0, _) => String::new(),
            (1, 1) => "#".into(),
            (2, 1) => "##".into(),
            (-1, 1) => "b".into(),
            (-2, 1) => "bb".into(),
            _ => format!("[{}]", self.alter),
        };
        write!(f, "{}{}{}", self.step, acc, self.octave)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TupletMarkKind {
    Start,
    Stop,
}

/// A `<tuplet>` notation on a note.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TupletMark {
    pub kind: TupletMarkKind,
    pub number: u32,
    /// `<tuplet-actual>`/`<tuplet-normal>` numbers when the encoder gave them.
    pub explicit_ratio: Option<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoteEvent {
    /// `None` for rests.
    pub pitch: Option<Pitch>,
    pub voice: u32,
    pub staff: Option<u32>,
    pub ticks: i64,
    pub symbolic: Option<SymbolicDuration>,
    /// `<normal-type>`/`<normal-dot>` of the time modification, when present.
    pub tuplet_unit: Option<SymbolicDuration>,
    pub grace: bool,
    pub cue: bool,
    pub chord: bool,
    pub tie_start: bool,
    pub tie_stop: bool,
    pub tuplet_marks: Vec<TupletMark>,
    pub full_measure_rest: bool,
    pub printed: bool,
    pub onset_ticks: i64,
}

impl NoteEvent {
    pub fn is_rest(&self) -> bool {
        self.pitch.is_none()
    }

    pub fn describe(&self) -> String {
        let what = if self.is_rest() { "rest" } else { "note" };
        match &self.symbolic {
            Some(s) => format!("{s} {what}"),
            None => what.to_string(),
        }
    }
}

/// A `<backup>` or `<forward>`; `onset_ticks` is the cursor before the move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skip {
    pub ticks: i64,
    pub voice: Option<u32>,
    pub onset_ticks: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Note(NoteEvent),
    Backup(Skip),
    Forward(Skip),
}

impl Event {
    pub fn onset_ticks(&self) -> i64 {
        match self {
            Event::Note(n) => n.onset_ticks,
            Event::Backup(s) | Event::Forward(s) => s.onset_ticks,
        }
    }

    pub fn voice(&self) -> Option<u32> {
        match self {
            Event::Note(n) => Some(n.voice),
            Event::Backup(s) | Event::Forward(s) => s.voice,
        }
    }

    /// Signed cursor displacement caused by the event.
    pub fn cursor_delta(&self) -> i64 {
        match self {
            Event::Note(n) if n.chord => 0,
            Event::Note(n) => n.ticks,
            Event::Backup(s) => -s.ticks,
            Event::Forward(s) => s.ticks,
        }
    }
}

/// Events sorted by `(onset, voice, input order)`.
///
/// Onsets are the replayed cursor positions and may be negative when a
/// backup rewinds past the measure start.
pub fn measure_timeline(m: &Measure) -> Vec<(i64, &Event)> {
    let mut timeline: Vec<(usize, &Event)> = m.events.iter().enumerate().collect();
    timeline.sort_by_key(|(i, e)| (e.onset_ticks(), e.voice().unwrap_or(0), *i));
    timeline
        .into_iter()
        .map(|(_, e)| (e.onset_ticks(), e))
        .collect()
}

use std::borrow::Cow;
use std::collections::BTreeMap;

use crate::duration::{Rational, SymbolicDuration};
use crate::ingest::Pitch;
use crate::report::Code;
use crate::tokenizer::{tuplet_actual_duration, tuplet_normal_duration};

use super::Violation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupletState {
    /// Content accumulated so far, in quarters.
    pub position: Rational,
    pub unit: SymbolicDuration,
    pub n_normal: u32,
    pub n_actual: u32,
}

impl TupletState {
    pub fn new(unit: &SymbolicDuration, n_normal: u32, n_actual: u32) -> Self {
        TupletState {
            position: Rational::ZERO,
            unit: *unit,
            n_normal,
            n_actual,
        }
    }

    pub fn normal_duration(&self) -> Rational {
        tuplet_normal_duration(&self.unit, self.n_normal)
    }

    pub fn actual_duration(&self) -> Rational {
        tuplet_actual_duration(&self.unit, self.n_actual)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChordState {
    pub duration: SymbolicDuration,
    pub notes: Vec<Pitch>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoiceState {
    /// Measure capacity in quarters.
    pub duration: Rational,
    pub position: Rational,
    pub chord: Option<ChordState>,
    /// Open tuplets, innermost last.
    pub tuplets: Vec<TupletState>,
    pub full_rest: bool,
    pub has_content: bool,
}

impl VoiceState {
    pub fn new(duration: Rational) -> Self {
        VoiceState {
            duration,
            position: Rational::ZERO,
            chord: None,
            tuplets: Vec::new(),
            full_rest: false,
            has_content: false,
        }
    }

    /// Adds `q` at the innermost open level.
    pub(super) fn advance(&mut self, q: Rational) {
        match self.tuplets.last_mut() {
            Some(t) => t.position += q,
            None => self.position += q,
        }
    }
}

/// First note of a pending tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TieOrigin {
    pub token_index: usize,
    pub pitch: Pitch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreState {
    /// Voices seen in the current measure.
    pub voices: BTreeMap<u32, VoiceState>,
    /// Pending ties keyed by voice and sounding pitch.
    pub tied: BTreeMap<(u32, Rational), TieOrigin>,
    pub is_initial: bool,
    pub ended: bool,
    pub measure_duration: Rational,
}

impl ScoreState {
    pub fn initial() -> Self {
        ScoreState {
            voices: BTreeMap::new(),
            tied: BTreeMap::new(),
            is_initial: true,
            ended: false,
            measure_duration: Rational::ZERO,
        }
    }

    /// The voice's state, or a fresh one if it has not appeared yet.
    pub fn voice(&self, voice: u32) -> Cow<'_, VoiceState> {
        match self.voices.get(&voice) {
            Some(v) => Cow::Borrowed(v),
            None => Cow::Owned(VoiceState::new(self.measure_duration)),
        }
    }

    pub(super) fn voice_mut(&mut self, voice: u32) -> &mut VoiceState {
        let d = self.measure_duration;
        self.voices.entry(voice).or_insert_with(|| VoiceState::new(d))
    }

    pub(super) fn start_measure(&mut self, duration: Rational) {
        self.voices.clear();
        self.measure_duration = duration;
        self.is_initial = false;
    }

    /// A note resolves any tie pending on its pitch, then opens its own.
    pub(super) fn track_tie(&mut self, index: usize, voice: u32, pitch: Pitch, is_tied: bool) {
        let key = (voice, pitch.sounding_key());
        self.tied.remove(&key);
        if is_tied {
            self.tied.insert(
                key,
                TieOrigin {
                    token_index: index,
                    pitch,
                },
            );
        }
    }

    pub fn dangling_ties(&self) -> Vec<Violation> {
        let mut out: Vec<Violation> = self
            .tied
            .iter()
            .map(|(&(voice, _), origin)| {
                Violation::new(
                    Code::DanglingTie,
                    origin.token_index,
                    Some(voice),
                    format!("tie from {} never reaches a following note", origin.pitch),
                )
            })
            .collect();
        out.sort_by_key(|v| v.token_index);
        out
    }
}

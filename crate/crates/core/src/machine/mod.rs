//! Contextual validation: a guarded state machine over the token sequence.
//!
//! Every token is checked by a pure guard against the current state before
//! the state is updated. A failed guard is reported and the machine skips to
//! the next `Bar`, where all voices restart from zero.

mod state;


use std::fmt::Write as _;

use crate::config::Config;
use crate::duration::Rational;
use crate::report::{Code, DataValue, Diagnostic, Location, Stage};
use crate::tokenizer::{Token, TokenSequence};

pub use state::{ChordState, ScoreState, TieOrigin, TupletState, VoiceState};

/// A failed guard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: Code,
    pub token_index: usize,
    pub voice: Option<u32>,
    pub message: String,
    pub data: Vec<(String, DataValue)>,
}

impl Violation {
    fn new(code: Code, token_index: usize, voice: Option<u32>, message: impl Into<String>) -> Self {
        Violation {
            code,
            token_index,
            voice,
            message: message.into(),
            data: Vec::new(),
        }
    }

    fn with(mut self, key: &str, value: impl Into<DataValue>) -> Self {
        self.data.push((key.to_string(), value.into()));
        self
    }
}

fn fits(v: &VoiceState, needed: Rational, what: &str, index: usize, voice: u32, config: &Config) -> Result<(), Violation> {
    let (code, remaining, scope) = match v.tuplets.last() {
        Some(t) => (Code::TupletOverflow, t.actual_duration() - t.position, "tuplet"),
        None if config.allow_overflow => return Ok(()),
        None => (Code::MeasureOverflow, v.duration - v.position, "measure"),
    };
    if needed <= remaining {
        return Ok(());
    }
    Err(Violation::new(
        code,
        index,
        Some(voice),
        format!("{what} of {needed} quarters overflows the {scope}: only {remaining} left"),
    )
    .with("needed", needed)
    .with("remaining", remaining))
}

fn check_closed_and_synced(state: &ScoreState, index: usize) -> Result<(), Violation> {
    for (&voice, v) in &state.voices {
        if v.chord.is_some() {
            return Err(Violation::new(
                Code::UnclosedChord,
                index,
                Some(voice),
                "chord still open at the end of the measure",
            ));
        }
        if !v.tuplets.is_empty() {
            return Err(Violation::new(
                Code::UnclosedTuplet,
                index,
                Some(voice),
                "tuplet still open at the end of the measure",
            ));
        }
    }
    let filled: Vec<(u32, Rational)> = state
        .voices
        .iter()
        .filter(|(_, v)| !v.full_rest && !v.position.is_zero())
        .map(|(&k, v)| (k, v.position))
        .collect();
    if let Some(&(first_voice, first)) = filled.first() {
        if let Some(&(other_voice, other)) = filled.iter().find(|(_, p)| *p != first) {
            let listing: Vec<String> = filled.iter().map(|(k, p)| format!("v{k} at {p}")).collect();
            return Err(Violation::new(
                Code::VoiceDesyncAtBar,
                index,
                Some(other_voice),
                format!("voices end at different positions: {}", listing.join(", ")),
            )
            .with("first_voice", first_voice as i64)
            .with("first_position", first)
            .with("other_position", other));
        }
    }
    Ok(())
}

/// Whether `token` may be applied to `state`.
pub fn guard(state: &ScoreState, token: &Token, index: usize, config: &Config) -> Result<(), Violation> {
    if state.ended {
        return Err(Violation::new(
            Code::TokenAfterEnd,
            index,
            token.voice(),
            format!("{} after the end of the score", token.kind()),
        ));
    }
    if state.is_initial && !matches!(token, Token::Bar { .. }) {
        return Err(Violation::new(
            Code::ScoreMustStartWithBar,
            index,
            token.voice(),
            format!("score starts with {} instead of a bar", token.kind()),
        ));
    }
    let fmr = |voice: u32, msg: &str| {
        Err(Violation::new(
            Code::FullMeasureRestNotAlone,
            index,
            Some(voice),
            msg.to_string(),
        ))
    };
    match token {
        Token::Bar { .. } => check_closed_and_synced(state, index),
        Token::EndOfScore => {
            check_closed_and_synced(state, index)?;
            match state.dangling_ties().first() {
                Some(v) => Err(v.clone()),
                None => Ok(()),
            }
        }
        Token::Note {
            voice,
            pitch,
            duration,
            is_grace,
            ..
        } => {
            let v = state.voice(*voice);
            if let Some(chord) = &v.chord {
                if *is_grace {
                    return Err(Violation::new(
                        Code::UnclosedChord,
                        index,
                        Some(*voice),
                        "grace note inside an open chord",
                    ));
                }
                if *duration != chord.duration {
                    return Err(Violation::new(
                        Code::ChordDurationMismatch,
                        index,
                        Some(*voice),
                        format!("{pitch} is a {duration} in a {} chord", chord.duration),
                    )
                    .with("chord", chord.duration.quarters())
                    .with("note", duration.quarters()));
                }
                let key = pitch.sounding_key();
                if config.piano_rules {
                    if let Some(same) = chord.notes.iter().find(|p| p.sounding_key() == key) {
                        return Err(Violation::new(
                            Code::DuplicateNoteInChord,
                            index,
                            Some(*voice),
                            format!("{pitch} duplicates {same} in the same chord"),
                        ));
                    }
                }
                return Ok(());
            }
            if v.full_rest {
                return fmr(*voice, "note in a voice holding a full-measure rest");
            }
            if *is_grace {
                return Ok(());
            }
            fits(&v, duration.quarters(), &format!("{duration} note {pitch}"), index, *voice, config)
        }
        Token::Rest {
            voice,
            duration,
            full_measure,
            ..
        } => {
            let v = state.voice(*voice);
            if v.chord.is_some() {
                return Err(Violation::new(
                    Code::RestInChord,
                    index,
                    Some(*voice),
                    "rest inside a chord",
                ));
            }
            if v.full_rest {
                return fmr(*voice, "rest in a voice holding a full-measure rest");
            }
            if *full_measure {
                if v.has_content || !v.tuplets.is_empty() {
                    return fmr(*voice, "full-measure rest in a voice that already has content");
                }
                return Ok(());
            }
            fits(&v, duration.quarters(), &format!("{duration} rest"), index, *voice, config)
        }
        Token::ChordStart {
            voice,
            duration,
            is_grace,
        } => {
            let v = state.voice(*voice);
            if v.chord.is_some() {
                return Err(Violation::new(
                    Code::UnclosedChord,
                    index,
                    Some(*voice),
                    "chord starts inside an open chord",
                ));
            }
            if v.full_rest {
                return fmr(*voice, "chord in a voice holding a full-measure rest");
            }
            if *is_grace {
                return Ok(());
            }
            fits(&v, duration.quarters(), &format!("{duration} chord"), index, *voice, config)
        }
        Token::ChordEnd { voice } => match &state.voice(*voice).chord {
            None => Err(Violation::new(
                Code::UnmatchedChordEnd,
                index,
                Some(*voice),
                "chord end without an open chord",
            )),
            Some(c) if c.notes.is_empty() => Err(Violation::new(
                Code::UnmatchedChordEnd,
                index,
                Some(*voice),
                "chord closes without any note",
            )),
            Some(_) => Ok(()),
        },
        Token::TupletStart {
            voice,
            base_unit,
            n_normal,
            n_actual,
        } => {
            let v = state.voice(*voice);
            if v.chord.is_some() {
                return Err(Violation::new(
                    Code::UnclosedChord,
                    index,
                    Some(*voice),
                    "tuplet starts inside an open chord",
                ));
            }
            if v.full_rest {
                return fmr(*voice, "tuplet in a voice holding a full-measure rest");
            }
            let t = TupletState::new(base_unit, *n_normal, *n_actual);
            fits(
                &v,
                t.normal_duration(),
                &format!("{n_actual}:{n_normal} {base_unit} tuplet"),
                index,
                *voice,
                config,
            )
        }
        Token::TupletEnd { voice } => {
            let v = state.voice(*voice);
            if v.chord.is_some() {
                return Err(Violation::new(
                    Code::UnclosedChord,
                    index,
                    Some(*voice),
                    "tuplet ends inside an open chord",
                ));
            }
            match v.tuplets.last() {
                None => Err(Violation::new(
                    Code::UnmatchedTupletEnd,
                    index,
                    Some(*voice),
                    "tuplet end without an open tuplet",
                )),
                Some(t) if t.position != t.actual_duration() => Err(Violation::new(
                    Code::TupletUnderfilled,
                    index,
                    Some(*voice),
                    format!(
                        "tuplet holds {} of its {} quarters",
                        t.position,
                        t.actual_duration()
                    ),
                )
                .with("content", t.position)
                .with("expected", t.actual_duration())),
                Some(_) => Ok(()),
            }
        }
    }
}

/// Applies `token`; the guard must have passed.
pub fn update(state: &mut ScoreState, token: &Token, index: usize) {
    match token {
        Token::Bar { time } => state.start_measure(time.quarters()),
        Token::EndOfScore => state.ended = true,
        Token::Note {
            voice,
            pitch,
            duration,
            is_grace,
            is_tied,
        } => {
            let v = state.voice_mut(*voice);
            v.has_content = true;
            if *is_grace {
                return;
            }
            match &mut v.chord {
                Some(chord) => chord.notes.push(*pitch),
                None => v.advance(duration.quarters()),
            }
            state.track_tie(index, *voice, *pitch, *is_tied);
        }
        Token::Rest {
            voice,
            duration,
            full_measure,
            ..
        } => {
            let v = state.voice_mut(*voice);
            v.has_content = true;
            if *full_measure {
                v.full_rest = true;
                v.position = v.duration;
            } else {
                v.advance(duration.quarters());
            }
        }
        Token::ChordStart { voice, duration, .. } => {
            state.voice_mut(*voice).chord = Some(ChordState {
                duration: *duration,
                notes: Vec::new(),
            });
        }
        Token::ChordEnd { voice } => {
            let v = state.voice_mut(*voice);
            if let Some(chord) = v.chord.take() {
                v.has_content = true;
                v.advance(chord.duration.quarters());
            }
        }
        Token::TupletStart {
            voice,
            base_unit,
            n_normal,
            n_actual,
        } => {
            state
                .voice_mut(*voice)
                .tuplets
                .push(TupletState::new(base_unit, *n_normal, *n_actual));
        }
        Token::TupletEnd { voice } => {
            let v = state.voice_mut(*voice);
            if let Some(t) = v.tuplets.pop() {
                v.advance(t.normal_duration());
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    Rejected,
    /// Ignored while recovering from an earlier violation.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub verdict: Verdict,
    /// Violations, plus non-blocking notices on accepted tokens.
    pub findings: Vec<Violation>,
}

/// Folds guard and update over a token stream, recovering at bars.
#[derive(Debug, Clone)]
pub struct Machine<'c> {
    config: &'c Config,
    state: ScoreState,
    recovering: bool,
    next_index: usize,
}

impl<'c> Machine<'c> {
    pub fn new(config: &'c Config) -> Self {
        Machine {
            config,
            state: ScoreState::initial(),
            recovering: false,
            next_index: 0,
        }
    }

    pub fn state(&self) -> &ScoreState {
        &self.state
    }

    pub fn is_recovering(&self) -> bool {
        self.recovering
    }

    pub fn step(&mut self, token: &Token) -> Step {
        let index = self.next_index;
        self.next_index += 1;
        let skipped = Step {
            verdict: Verdict::Skipped,
            findings: Vec::new(),
        };

        if self.recovering && !self.state.ended {
            match token {
                Token::Bar { time } => {
                    self.state.start_measure(time.quarters());
                    self.recovering = false;
                    return skipped;
                }
                Token::EndOfScore => {
                    self.state.voices.clear();
                    self.recovering = false;
                }
                Token::Note {
                    voice,
                    pitch,
                    is_grace: false,
                    is_tied,
                    ..
                } => {
                    if !self.state.is_initial {
                        self.state.track_tie(index, *voice, *pitch, *is_tied);
                    }
                    return skipped;
                }
                _ => return skipped,
            }
        }

        match guard(&self.state, token, index, self.config) {
            Ok(()) => {
                let mut findings = Vec::new();
                if let Token::TupletStart { voice, .. } = token {
                    if !self.config.allow_nested_tuplets && !self.state.voice(*voice).tuplets.is_empty() {
                        findings.push(Violation::new(
                            Code::NestedTuplet,
                            index,
                            Some(*voice),
                            "tuplet nested inside another tuplet",
                        ));
                    }
                }
                update(&mut self.state, token, index);
                Step {
                    verdict: Verdict::Accepted,
                    findings,
                }
            }
            Err(v) => {
                let mut findings = vec![v];
                match token {
                    Token::Bar { time } => self.state.start_measure(time.quarters()),
                    Token::EndOfScore => {
                        if findings[0].code != Code::TokenAfterEnd {
                            findings.retain(|f| f.code != Code::DanglingTie);
                            findings.extend(self.state.dangling_ties());
                        }
                        self.state.ended = true;
                    }
                    _ if self.state.ended => {}
                    _ => self.recovering = true,
                }
                Step {
                    verdict: Verdict::Rejected,
                    findings,
                }
            }
        }
    }
}

/// Where a finding is reported. Violations raised by `Bar` or `EndOfScore`
/// concern the measure that just ended.
fn finding_location(seq: &TokenSequence, file: &str, v: &Violation) -> Location {
    let closes_measure = matches!(
        seq.tokens.get(v.token_index),
        Some(Token::Bar { .. } | Token::EndOfScore)
    ) && v.code != Code::DanglingTie;
    let idx = if closes_measure && v.token_index > 0 {
        v.token_index - 1
    } else {
        v.token_index
    };
    let src = seq.locations.get(idx).cloned().unwrap_or_default();
    Location {
        file: file.to_string(),
        part: seq.part.clone(),
        part_index: seq.part_index,
        measure: src.measure,
        measure_index: src.measure_index,
        playback_index: src.playback_index,
        voice: v.voice,
        onset: if closes_measure { None } else { src.onset },
    }
}

fn trace_line(out: &mut String, index: usize, token: &Token, step: &Step, state: &ScoreState) {
    let verdict = match step.verdict {
        Verdict::Accepted => "ok",
        Verdict::Rejected => "REJECT",
        Verdict::Skipped => "skip",
    };
    let voices: Vec<String> = state
        .voices
        .iter()
        .map(|(k, v)| {
            let mut s = format!("v{k} {} of {}", v.position, v.duration);
            for t in &v.tuplets {
                let _ = write!(s, " [{} of {}]", t.position, t.actual_duration());
            }
            if v.chord.is_some() {
                s.push_str(" (chord)");
            }
            if v.full_rest {
                s.push_str(" (full rest)");
            }
            s
        })
        .collect();
    let codes: Vec<&str> = step.findings.iter().map(|f| f.code.as_str()).collect();
    let _ = writeln!(
        out,
        "{index:>5}  {:<44} {verdict:<6} {}{}",
        token.to_string(),
        voices.join("; "),
        if codes.is_empty() {
            String::new()
        } else {
            format!("  <- {}", codes.join(","))
        }
    );
}

/// Runs the machine over one part and maps findings to diagnostics.
///
/// When `trace` is given, one line per transition is appended to it.
pub fn run_contextual(
    seq: &TokenSequence,
    file: &str,
    config: &Config,
    mut trace: Option<&mut String>,
) -> Vec<Diagnostic> {
    let mut machine = Machine::new(config);
    let mut out = Vec::new();
    for (i, token) in seq.tokens.iter().enumerate() {
        let step = machine.step(token);
        if let Some(t) = trace.as_deref_mut() {
            trace_line(t, i, token, &step, machine.state());
        }
        for v in step.findings {
            let mut d = Diagnostic::new(v.code, Stage::Contextual, finding_location(seq, file, &v), v.message);
            for (k, value) in v.data {
                d = d.with_data(&k, value);
            }
            out.push(d);
        }
    }
    out
}

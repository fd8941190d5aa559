//! Checks that need no musical context: each note, rest, backup and
//! forward is judged on its own.

use crate::config::Config;
use crate::duration::{decompose_into_rests, ticks_to_quarters, Rational};
use crate::ingest::{Event, Measure, NoteEvent, ScoreDoc, Skip};
use crate::report::{Code, Diagnostic, Location, Stage};

fn quarters(ticks: i64, divisions: i64) -> Rational {
    ticks_to_quarters(ticks, divisions).expect("parser guarantees positive divisions")
}

fn at(base: &Location, voice: Option<u32>, onset_ticks: i64, divisions: i64) -> Location {
    Location {
        voice,
        onset: Some(quarters(onset_ticks, divisions)),
        ..base.clone()
    }
}

/// Compares a note's written value with its `<duration>`.
pub fn check_event_duration(note: &NoteEvent, measure: &Measure, base: &Location) -> Option<Diagnostic> {
    let divisions = measure.divisions;
    let timeline = quarters(note.ticks, divisions);
    let loc = || at(base, Some(note.voice), note.onset_ticks, divisions);
    let mismatch = |what: String, theoretical: Rational| {
        Diagnostic::new(
            Code::DurationMismatch,
            Stage::Individual,
            loc(),
            format!("{what}: symbol says {theoretical}, timeline says {timeline} (quarters)"),
        )
        .with_data("theoretical", theoretical)
        .with_data("timeline", timeline)
    };

    if note.grace {
        return (note.ticks != 0).then(|| mismatch(format!("grace {}", note.describe()), Rational::ZERO));
    }
    // a whole-measure rest means "the whole measure", whatever its symbol
    if note.full_measure_rest && Rational::from_integer(note.ticks as i128) == measure.nominal_ticks() {
        return None;
    }
    match &note.symbolic {
        None if note.full_measure_rest => None,
        None => Some(
            Diagnostic::new(
                Code::MissingSymbolicDuration,
                Stage::Individual,
                loc(),
                format!("{} has no <type>; its duration {timeline} cannot be checked", note.describe()),
            )
            .with_data("timeline", timeline),
        ),
        Some(sym) => {
            let theoretical = sym.quarters();
            (theoretical != timeline).then(|| mismatch(note.describe(), theoretical))
        }
    }
}

/// A backup or forward must be expressible as a sequence of rests no
/// shorter than `min_unit`.
pub fn check_skip_decomposable(
    skip: &Skip,
    kind: &str,
    divisions: i64,
    min_unit: Rational,
    base: &Location,
) -> Option<Diagnostic> {
    let loc = at(base, skip.voice, skip.onset_ticks, divisions);
    if skip.ticks == 0 {
        return Some(Diagnostic::new(
            Code::DegenerateSkip,
            Stage::Individual,
            loc,
            format!("<{kind}> of zero duration"),
        ));
    }
    let q = quarters(skip.ticks, divisions);
    match decompose_into_rests(q, min_unit) {
        Ok(Some(_)) => None,
        _ => Some(
            Diagnostic::new(
                Code::SuspiciousSkip,
                Stage::Individual,
                loc,
                format!(
                    "<{kind}> of {} ticks ({q} quarters) is not a sum of rests of at least {min_unit} quarters",
                    skip.ticks
                ),
            )
            .with_data("ticks", skip.ticks)
            .with_data("quarters", q)
            .with_data("min_unit", min_unit),
        ),
    }
}

/// Backups that rewind past the start of their measure.
pub fn check_skip_bounds(measure: &Measure, base: &Location) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut cursor = 0i64;
    for e in &measure.events {
        if let Event::Backup(s) = e {
            let after = cursor - s.ticks;
            if after < 0 {
                let d = measure.divisions;
                out.push(
                    Diagnostic::new(
                        Code::SkipOutOfMeasure,
                        Stage::Individual,
                        at(base, None, s.onset_ticks, d),
                        format!(
                            "<backup> of {} quarters from position {} rewinds to {}, before the measure start",
                            quarters(s.ticks, d),
                            quarters(cursor, d),
                            quarters(after, d)
                        ),
                    )
                    .with_data("backup", quarters(s.ticks, d))
                    .with_data("position", quarters(cursor, d)),
                );
            }
        }
        cursor += e.cursor_delta();
    }
    out
}

/// All individual checks over the score as written, in document order.
pub fn run_individual(doc: &ScoreDoc, config: &Config) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for (pi, part) in doc.parts.iter().enumerate() {
        for m in &part.measures {
            let base = Location {
                file: doc.source_name.clone(),
                part: part.id.clone(),
                part_index: pi,
                measure: m.number_label.clone(),
                measure_index: m.source_index,
                ..Location::default()
            };
            for e in &m.events {
                let found = match e {
                    Event::Note(n) => check_event_duration(n, m, &base),
                    Event::Backup(s) => check_skip_decomposable(s, "backup", m.divisions, config.min_unit, &base),
                    Event::Forward(s) => check_skip_decomposable(s, "forward", m.divisions, config.min_unit, &base),
                };
                out.extend(found);
            }
            out.extend(check_skip_bounds(m, &base));
        }
    }
    out
}

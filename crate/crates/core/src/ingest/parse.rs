//! MusicXML partwise reader.
//!
//! Only what the checks need is modelled: timing, voices, pitch, ties,
//! tuplets, barline repeats and navigation jumps. Everything else is
//! skipped.

use roxmltree::{Document, Node, ParsingOptions};

use super::model::{
    Ending, Event, Measure, NoteEvent, Part, Pitch, RepeatMarks, ScoreDoc, Skip, TimeSignature,
    TupletMark, TupletMarkKind,
};
use super::IngestError;
use crate::duration::{NoteType, Rational, SymbolicDuration, TimeModification, MAX_DOTS};

/// Used when a part never declares `<divisions>`.
const DEFAULT_DIVISIONS: i64 = 1;

pub fn parse_musicxml(bytes: &[u8], source_name: &str) -> Result<ScoreDoc, IngestError> {
    let text = decode_text(bytes)?;
    let doc = Document::parse_with_options(
        &text,
        ParsingOptions {
            allow_dtd: true,
            ..ParsingOptions::default()
        },
    )
    .map_err(|e| IngestError::Xml(e.to_string()))?;

    let root = doc.root_element();
    match root.tag_name().name() {
        "score-partwise" => {}
        "score-timewise" => {
            return Err(IngestError::Unsupported(
                "score-timewise documents are not supported".into(),
            ))
        }
        other => {
            return Err(IngestError::Unsupported(format!(
                "root element <{other}> is not a MusicXML score"
            )))
        }
    }

    let parts = root
        .children()
        .filter(|n| n.has_tag_name("part"))
        .map(parse_part)
        .collect::<Result<Vec<_>, _>>()?;
    if parts.is_empty() {
        return Err(IngestError::IllFormed("score has no <part>".into()));
    }
    Ok(ScoreDoc {
        source_name: source_name.to_string(),
        parts,
    })
}

/// Honors a byte-order mark or the declared encoding; UTF-8 otherwise.
fn decode_text(bytes: &[u8]) -> Result<String, IngestError> {
    if let Some(rest) = bytes.strip_prefix(&[0xEF, 0xBB, 0xBF]) {
        return utf8(rest);
    }
    let utf16 = |rest: &[u8], le: bool| -> Result<String, IngestError> {
        let units: Vec<u16> = rest
            .chunks_exact(2)
            .map(|c| {
                if le {
                    u16::from_le_bytes([c[0], c[1]])
                } else {
                    u16::from_be_bytes([c[0], c[1]])
                }
            })
            .collect();
        String::from_utf16(&units).map_err(|_| IngestError::Xml("invalid UTF-16 text".into()))
    };
    if let Some(rest) = bytes.strip_prefix(&[0xFF, 0xFE]) {
        return utf16(rest, true);
    }
    if let Some(rest) = bytes.strip_prefix(&[0xFE, 0xFF]) {
        return utf16(rest, false);
    }

    let head = String::from_utf8_lossy(&bytes[..bytes.len().min(200)]).to_ascii_lowercase();
    let declared = head
        .split_once("encoding=")
        .and_then(|(_, rest)| {
            let quote = rest.chars().next()?;
            rest[1..].split(quote).next().map(str::to_string)
        })
        .unwrap_or_default();
    match declared.as_str() {
        "iso-8859-1" | "latin1" | "latin-1" | "us-ascii" | "windows-1252" => {
            Ok(bytes.iter().map(|&b| b as char).collect())
        }
        _ => utf8(bytes),
    }
}

fn utf8(bytes: &[u8]) -> Result<String, IngestError> {
    String::from_utf8(bytes.to_vec()).map_err(|e| IngestError::Xml(format!("invalid UTF-8: {e}")))
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

fn child_text<'a>(node: Node<'a, '_>, name: &str) -> Option<&'a str> {
    child(node, name).and_then(|n| n.text()).map(str::trim)
}

fn ill<T>(msg: String) -> Result<T, IngestError> {
    Err(IngestError::IllFormed(msg))
}

fn parse_int<T: std::str::FromStr>(text: &str, what: &str) -> Result<T, IngestError> {
    text.trim()
        .parse()
        .or_else(|_| ill(format!("<{what}> is not an integer: `{text}`")))
}

/// `<duration>` is a decimal in the schema; only whole tick counts are
/// meaningful for the timeline.
fn parse_ticks(text: &str, what: &str) -> Result<i64, IngestError> {
    let value: Rational = text
        .parse()
        .or_else(|_| ill(format!("<{what}> is not a number: `{text}`")))?;
    if !value.is_integer() || value.is_negative() {
        return ill(format!("<{what}> must be a non-negative whole number: `{text}`"));
    }
    i64::try_from(value.numer()).or_else(|_| ill(format!("<{what}> out of range: `{text}`")))
}

struct PartState {
    divisions: Option<i64>,
    time: Option<TimeSignature>,
    open_ending: Option<Vec<u32>>,
}

fn parse_part(part: Node) -> Result<Part, IngestError> {
    let id = part.attribute("id").unwrap_or_default().to_string();
    let mut state = PartState {
        divisions: None,
        time: None,
        open_ending: None,
    };
    let measures = part
        .children()
        .filter(|n| n.has_tag_name("measure"))
        .enumerate()
        .map(|(i, m)| parse_measure(m, i, &mut state))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Part { id, measures })
}

fn parse_time(node: Node) -> Result<Option<TimeSignature>, IngestError> {
    if child(node, "senza-misura").is_some() {
        return Ok(None);
    }
    let beats: Vec<&str> = node
        .children()
        .filter(|n| n.has_tag_name("beats"))
        .filter_map(|n| n.text())
        .collect();
    let types: Vec<&str> = node
        .children()
        .filter(|n| n.has_tag_name("beat-type"))
        .filter_map(|n| n.text())
        .collect();
    if beats.is_empty() || beats.len() != types.len() {
        return ill("<time> needs matching <beats> and <beat-type>".into());
    }
    // composite signatures such as 3+2/8 or 3/8 + 2/4 are summed over the
    // least common beat type
    let mut groups = Vec::new();
    for (b, t) in beats.iter().zip(&types) {
        let mut count: u64 = 0;
        for piece in b.split('+') {
            count += parse_int::<u32>(piece, "beats")? as u64;
        }
        let beat_type: u64 = parse_int::<u32>(t, "beat-type")? as u64;
        if count == 0 || beat_type == 0 {
            return ill(format!("time signature {b}/{t} must be positive"));
        }
        groups.push((count, beat_type));
    }
    let gcd = |mut a: u64, mut b: u64| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    let beat_type = groups.iter().fold(1, |l, &(_, t)| l / gcd(l, t) * t);
    let beats: u64 = groups.iter().map(|&(c, t)| c * (beat_type / t)).sum();
    let fits = |v: u64| u32::try_from(v).or_else(|_| ill(format!("time signature {v} out of range")));
    Ok(Some(TimeSignature {
        beats: fits(beats)?,
        beat_type: fits(beat_type)?,
    }))
}

fn parse_attributes(node: Node, state: &mut PartState) -> Result<(), IngestError> {
    if let Some(text) = child_text(node, "divisions") {
        let value = parse_ticks(text, "divisions")?;
        if value <= 0 {
            return ill(format!("<divisions> must be positive, got {value}"));
        }
        state.divisions = Some(value);
    }
    if let Some(time) = child(node, "time") {
        if let Some(ts) = parse_time(time)? {
            state.time = Some(ts);
        }
    }
    Ok(())
}

fn parse_pitch(node: Node, step_tag: &str, octave_tag: &str) -> Result<Pitch, IngestError> {
    let step = child_text(node, step_tag)
        .and_then(|s| s.chars().next())
        .map(|c| c.to_ascii_uppercase())
        .filter(|c| ('A'..='G').contains(c));
    let Some(step) = step else {
        return ill(format!("<{step_tag}> missing or invalid"));
    };
    let octave = match child_text(node, octave_tag) {
        Some(t) => parse_int(t, octave_tag)?,
        None => return ill(format!("<{octave_tag}> missing")),
    };
    let alter = match child_text(node, "alter") {
        Some(t) => t
            .parse()
            .or_else(|_| ill(format!("<alter> is not a number: `{t}`")))?,
        None => Rational::ZERO,
    };
    Ok(Pitch { step, octave, alter })
}

fn parse_note(node: Node) -> Result<NoteEvent, IngestError> {
    let grace = child(node, "grace").is_some();
    let cue = child(node, "cue").is_some();
    let chord = child(node, "chord").is_some();

    let mut full_measure_rest = false;
    let pitch = if let Some(p) = child(node, "pitch") {
        Some(parse_pitch(p, "step", "octave")?)
    } else if let Some(u) = child(node, "unpitched") {
        Some(parse_pitch(u, "display-step", "display-octave")?)
    } else if let Some(r) = child(node, "rest") {
        full_measure_rest = r.attribute("measure") == Some("yes");
        None
    } else {
        return ill("<note> has neither <pitch>, <unpitched> nor <rest>".into());
    };

    let ticks = match child_text(node, "duration") {
        Some(t) => parse_ticks(t, "duration")?,
        None => 0,
    };
    let voice = match child_text(node, "voice") {
        Some(t) => parse_int(t, "voice")?,
        None => 1,
    };
    let staff = child_text(node, "staff")
        .map(|t| parse_int(t, "staff"))
        .transpose()?;

    let dots = node.children().filter(|n| n.has_tag_name("dot")).count();
    if dots > MAX_DOTS as usize {
        return ill(format!("{dots} dots on a note (at most {MAX_DOTS})"));
    }
    let dots = dots as u8;

    let mut tuplet_unit = None;
    let time_modification = match child(node, "time-modification") {
        Some(tm) => {
            let actual = child_text(tm, "actual-notes")
                .map(|t| parse_int::<u32>(t, "actual-notes"))
                .transpose()?;
            let normal = child_text(tm, "normal-notes")
                .map(|t| parse_int::<u32>(t, "normal-notes"))
                .transpose()?;
            let (Some(actual), Some(normal)) = (actual, normal) else {
                return ill("<time-modification> needs <actual-notes> and <normal-notes>".into());
            };
            let tm_value = TimeModification::new(actual, normal)
                .or_else(|e| ill(e.to_string()))?;
            if let Some(nt) = child_text(tm, "normal-type") {
                let nt: NoteType = nt.parse().or_else(|e: crate::duration::DurationError| ill(e.to_string()))?;
                let ndots = tm.children().filter(|n| n.has_tag_name("normal-dot")).count();
                if ndots > MAX_DOTS as usize {
                    return ill(format!("{ndots} normal-dots (at most {MAX_DOTS})"));
                }
                tuplet_unit = Some(SymbolicDuration::dotted(nt, ndots as u8));
            }
            Some(tm_value)
        }
        None => None,
    };

    let symbolic = match child_text(node, "type") {
        Some(t) => {
            let nt: NoteType = t
                .parse()
                .or_else(|e: crate::duration::DurationError| ill(e.to_string()))?;
            Some(SymbolicDuration::new(nt, dots, time_modification).or_else(|e| ill(e.to_string()))?)
        }
        None => None,
    };

    let mut tie_start = false;
    let mut tie_stop = false;
    let mut record_tie = |t: Option<&str>| match t {
        Some("start") => tie_start = true,
        Some("stop") => tie_stop = true,
        _ => {}
    };
    for tie in node.children().filter(|n| n.has_tag_name("tie")) {
        record_tie(tie.attribute("type"));
    }
    let mut tuplet_marks = Vec::new();
    for notations in node.children().filter(|n| n.has_tag_name("notations")) {
        for n in notations.children().filter(|n| n.is_element()) {
            match n.tag_name().name() {
                "tied" => record_tie(n.attribute("type")),
                "tuplet" => {
                    let kind = match n.attribute("type") {
                        Some("start") => TupletMarkKind::Start,
                        Some("stop") => TupletMarkKind::Stop,
                        _ => continue,
                    };
                    let number = match n.attribute("number") {
                        Some(t) => parse_int(t, "tuplet number")?,
                        None => 1,
                    };
                    let count = |tag: &str| -> Option<u32> {
                        child(n, tag)
                            .and_then(|c| child_text(c, "tuplet-number"))
                            .and_then(|t| t.parse().ok())
                    };
                    let explicit_ratio = match (count("tuplet-actual"), count("tuplet-normal")) {
                        (Some(a), Some(b)) if a > 0 && b > 0 => Some((a, b)),
                        _ => None,
                    };
                    tuplet_marks.push(TupletMark {
                        kind,
                        number,
                        explicit_ratio,
                    });
                }
                _ => {}
            }
        }
    }

    Ok(NoteEvent {
        pitch,
        voice,
        staff,
        ticks,
        symbolic,
        tuplet_unit,
        grace,
        cue,
        chord,
        tie_start,
        tie_stop,
        tuplet_marks,
        full_measure_rest,
        printed: node.attribute("print-object") != Some("no"),
        onset_ticks: 0,
    })
}

fn record_jumps(node: Node, jumps: &mut Vec<String>) {
    for sound in node.descendants().filter(|n| n.has_tag_name("sound")) {
        for attr in ["dacapo", "dalsegno", "tocoda"] {
            if let Some(v) = sound.attribute(attr) {
                if v != "no" && !jumps.iter().any(|j| j == attr) {
                    jumps.push(attr.to_string());
                }
            }
        }
    }
}

fn parse_ending_numbers(text: &str) -> Vec<u32> {
    text.split([',', ' '])
        .filter_map(|t| t.trim().trim_end_matches('.').parse().ok())
        .collect()
}

fn parse_measure(node: Node, index: usize, state: &mut PartState) -> Result<Measure, IngestError> {
    let number_label = node.attribute("number").unwrap_or_default().to_string();
    let mut events = Vec::new();
    let mut cursor: i64 = 0;
    let mut head_onset: i64 = 0;
    let mut last_voice: Option<u32> = None;
    let mut frame: Option<(i64, Option<TimeSignature>)> = None;
    let mut repeat = RepeatMarks::default();
    let mut ending_starts: Option<Vec<u32>> = None;
    let mut ending_closes = false;
    let mut jumps = Vec::new();

    for child_node in node.children().filter(|n| n.is_element()) {
        let tag = child_node.tag_name().name();
        if matches!(tag, "note" | "backup" | "forward") && frame.is_none() {
            frame = Some((state.divisions.unwrap_or(DEFAULT_DIVISIONS), state.time));
        }
        match tag {
            "attributes" => parse_attributes(child_node, state)?,
            "note" => {
                let mut note = parse_note(child_node)?;
                if note.chord {
                    note.onset_ticks = head_onset;
                } else {
                    note.onset_ticks = cursor;
                    head_onset = cursor;
                    cursor += note.ticks;
                }
                last_voice = Some(note.voice);
                events.push(Event::Note(note));
            }
            "backup" => {
                let ticks = parse_ticks(child_text(child_node, "duration").unwrap_or("0"), "duration")?;
                events.push(Event::Backup(Skip {
                    ticks,
                    voice: None,
                    onset_ticks: cursor,
                }));
                cursor -= ticks;
            }
            "forward" => {
                let ticks = parse_ticks(child_text(child_node, "duration").unwrap_or("0"), "duration")?;
                let voice = match child_text(child_node, "voice") {
                    Some(t) => parse_int(t, "voice")?,
                    None => last_voice.unwrap_or(1),
                };
                events.push(Event::Forward(Skip {
                    ticks,
                    voice: Some(voice),
                    onset_ticks: cursor,
                }));
                cursor += ticks;
            }
            "barline" => {
                if let Some(r) = child(child_node, "repeat") {
                    match r.attribute("direction") {
                        Some("forward") => repeat.forward = true,
                        Some("backward") => {
                            repeat.backward = true;
                            repeat.times = r.attribute("times").and_then(|t| t.parse().ok());
                        }
                        _ => {}
                    }
                }
                if let Some(e) = child(child_node, "ending") {
                    match e.attribute("type") {
                        Some("start") => {
                            ending_starts =
                                Some(parse_ending_numbers(e.attribute("number").unwrap_or("")));
                        }
                        Some("stop") | Some("discontinue") => ending_closes = true,
                        _ => {}
                    }
                }
                record_jumps(child_node, &mut jumps);
            }
            "direction" | "sound" => record_jumps(child_node, &mut jumps),
            _ => {}
        }
    }

    let (divisions, time) =
        frame.unwrap_or((state.divisions.unwrap_or(DEFAULT_DIVISIONS), state.time));
    let time = time.unwrap_or(TimeSignature::COMMON);

    if let Some(numbers) = ending_starts {
        state.open_ending = Some(numbers);
    }
    if let Some(numbers) = state.open_ending.clone() {
        repeat.ending = Some(Ending {
            numbers,
            closes: ending_closes,
        });
        if ending_closes {
            state.open_ending = None;
        }
    }

    let mut measure = Measure {
        number_label,
        source_index: index,
        playback_index: None,
        divisions,
        time,
        events,
        repeat,
        jumps,
    };

    // many exporters write whole-measure rests as a typeless <rest/>
    let nominal = measure.nominal_ticks();
    for e in &mut measure.events {
        if let Event::Note(n) = e {
            if n.is_rest()
                && n.symbolic.is_none()
                && !n.grace
                && Rational::from_integer(n.ticks as i128) == nominal
            {
                n.full_measure_rest = true;
            }
        }
    }
    Ok(measure)
}

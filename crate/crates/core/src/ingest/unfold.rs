//! Expands repeat barlines and volta brackets into playback order.

use super::model::{Measure, Part, RepeatMarks, ScoreDoc};
use crate::report::{Code, Diagnostic, Location, Stage};

/// Returns the unfolded score plus warnings for marks that could not be
/// followed. A part with unbalanced marks is passed through unchanged.
pub fn unfold_repeats(doc: &ScoreDoc) -> (ScoreDoc, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let parts = doc
        .parts
        .iter()
        .enumerate()
        .map(|(pi, part)| {
            let at = |m: &Measure| Location {
                file: doc.source_name.clone(),
                part: part.id.clone(),
                part_index: pi,
                measure: m.number_label.clone(),
                measure_index: m.source_index,
                ..Location::default()
            };
            for m in &part.measures {
                if !m.jumps.is_empty() {
                    diags.push(
                        Diagnostic::new(
                            Code::JumpNotUnfolded,
                            Stage::Contextual,
                            at(m),
                            format!("navigation jump ({}) is not followed", m.jumps.join(", ")),
                        )
                        .with_data("jumps", m.jumps.join(",")),
                    );
                }
            }
            let order = match playback_order(&part.measures) {
                Ok(order) => order,
                Err((i, why)) => {
                    diags.push(Diagnostic::new(
                        Code::UnbalancedRepeat,
                        Stage::Contextual,
                        at(&part.measures[i]),
                        format!("{why}; repeats in this part are left unfolded"),
                    ));
                    (0..part.measures.len()).collect()
                }
            };
            let measures = order
                .into_iter()
                .enumerate()
                .map(|(k, i)| Measure {
                    playback_index: Some(k),
                    repeat: RepeatMarks::default(),
                    ..part.measures[i].clone()
                })
                .collect();
            Part {
                id: part.id.clone(),
                measures,
            }
        })
        .collect();
    (
        ScoreDoc {
            source_name: doc.source_name.clone(),
            parts,
        },
        diags,
    )
}

/// Largest ending number in the bracket run containing measure `i`.
fn last_ending_number(ms: &[Measure], i: usize) -> u32 {
    let has_ending = |k: usize| ms[k].repeat.ending.is_some();
    let mut lo = i;
    while lo > 0 && has_ending(lo - 1) {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < ms.len() && has_ending(hi + 1) {
        hi += 1;
    }
    (lo..=hi)
        .filter_map(|k| ms[k].repeat.ending.as_ref())
        .flat_map(|e| e.numbers.iter().copied())
        .max()
        .unwrap_or(0)
}

/// Source indices in playback order, or the offending measure and reason.
fn playback_order(ms: &[Measure]) -> Result<Vec<usize>, (usize, String)> {
    let mut open_forward: Option<usize> = None;
    for (i, m) in ms.iter().enumerate() {
        if m.repeat.forward {
            if let Some(prev) = open_forward {
                return Err((
                    i,
                    format!(
                        "forward repeat while the one in measure {} is still open",
                        ms[prev].number_label
                    ),
                ));
            }
            open_forward = Some(i);
        }
        if let Some(e) = &m.repeat.ending {
            if e.numbers.is_empty() {
                return Err((i, "volta bracket without a pass number".into()));
            }
        }
        if m.repeat.backward {
            open_forward = None;
        }
    }

    let limit = ms.len() * 16 + 16;
    let mut out = Vec::new();
    let mut i = 0;
    let mut repeat_start = 0;
    let mut pass: u32 = 1;
    while i < ms.len() {
        if out.len() > limit {
            return Err((i, "repeat structure does not terminate".into()));
        }
        let m = &ms[i];
        if m.repeat.forward && i != repeat_start {
            repeat_start = i;
            pass = 1;
        }
        if let Some(e) = &m.repeat.ending {
            if !e.numbers.contains(&pass) {
                i += 1;
                continue;
            }
        }
        out.push(i);
        if m.repeat.backward {
            let times = match (m.repeat.times, &m.repeat.ending) {
                (Some(t), _) => t,
                (None, Some(_)) => last_ending_number(ms, i).max(pass + 1),
                (None, None) => 2,
            };
            if pass < times {
                pass += 1;
                i = repeat_start;
                continue;
            }
            pass = 1;
            repeat_start = i + 1;
        } else if m.repeat.ending.as_ref().is_some_and(|e| e.closes) {
            pass = 1;
            repeat_start = i + 1;
        }
        i += 1;
    }
    Ok(out)
}

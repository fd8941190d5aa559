//! The full two-stage pipeline for one score.

use std::collections::BTreeSet;
use std::path::Path;

use crate::config::{Config, StageSelection};
use crate::individual::run_individual;
use crate::ingest::{load_score, unfold_repeats, IngestError, ScoreDoc};
use crate::machine::run_contextual;
use crate::report::{
    sort_diagnostics, Code, Diagnostic, Location, ScoreOutcome, Stage, StageOutcome,
};
use crate::tokenizer::tokenize;

/// Debug output requested alongside the diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Dumps {
    pub tokens: bool,
    pub state: bool,
}

#[derive(Debug, Clone, Default)]
pub struct FileReport {
    pub file: String,
    /// Sorted by location.
    pub diagnostics: Vec<Diagnostic>,
    pub outcome: ScoreOutcome,
    /// Set when the score was refused as a whole (see `Config::single_part`).
    pub rejected: Option<String>,
    pub token_dump: Option<String>,
    pub state_dump: Option<String>,
}

impl FileReport {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    /// Original measure labels holding an error of `stage`, deduplicated.
    pub fn flagged_labels(&self, stage: Stage) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for d in &self.diagnostics {
            if d.stage == stage && d.is_error() && seen.insert((d.location.part_index, d.location.measure_index)) {
                out.push(d.location.measure.clone());
            }
        }
        out
    }
}

/// Bar numbering shared by all parts: part `i` starts after the bars of
/// parts `0..i`.
fn part_offsets(counts: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut acc = 0;
    counts
        .map(|c| {
            let start = acc;
            acc += c;
            start
        })
        .collect()
}

fn outcome(diags: &[Diagnostic], stage: Stage, total_bars: usize, offsets: &[usize]) -> StageOutcome {
    let flagged_bars = diags
        .iter()
        .filter(|d| d.stage == stage && d.is_error())
        .map(|d| {
            let idx = match stage {
                Stage::Individual => d.location.measure_index,
                Stage::Contextual => d.location.playback_index.unwrap_or(d.location.measure_index),
            };
            offsets.get(d.location.part_index).copied().unwrap_or(0) + idx
        })
        .collect();
    StageOutcome {
        total_bars,
        flagged_bars,
    }
}

/// Runs both stages on a parsed score.
pub fn check_document(doc: &ScoreDoc, config: &Config, dumps: Dumps) -> FileReport {
    let file = doc.source_name.clone();
    let mut report = FileReport {
        file: file.clone(),
        outcome: ScoreOutcome {
            file: file.clone(),
            ..ScoreOutcome::default()
        },
        ..FileReport::default()
    };

    if config.single_part && doc.parts.len() > 1 {
        let reason = format!("{} parts where one is expected", doc.parts.len());
        report.diagnostics.push(Diagnostic::new(
            Code::MultiPartScore,
            Stage::Individual,
            Location {
                file,
                ..Location::default()
            },
            reason.clone(),
        ));
        report.rejected = Some(reason);
        return report;
    }

    let (unfolded, mut diags) = unfold_repeats(doc);

    let run_stage1 = config.stages != StageSelection::Contextual;
    let mut stage1_errors = false;
    if run_stage1 {
        let found = run_individual(doc, config);
        stage1_errors = found.iter().any(Diagnostic::is_error);
        diags.extend(found);
        let offsets = part_offsets(doc.parts.iter().map(|p| p.measures.len()));
        let total = doc.parts.iter().map(|p| p.measures.len()).sum();
        report.outcome.individual = Some(outcome(&diags, Stage::Individual, total, &offsets));
    }

    if config.stages != StageSelection::Individual {
        if stage1_errors && !config.force_contextual {
            diags.push(Diagnostic::new(
                Code::ContextualStageSkipped,
                Stage::Contextual,
                Location {
                    file: file.clone(),
                    ..Location::default()
                },
                "contextual checks skipped because of duration errors",
            ));
        } else {
            let tokenization = tokenize(&unfolded, config);
            diags.extend(tokenization.diagnostics);
            let mut token_dump = String::new();
            let mut state_dump = String::new();
            for seq in &tokenization.sequences {
                if dumps.tokens {
                    token_dump.push_str(&format!("== tokens {file} part {} ==\n", seq.part));
                    token_dump.push_str(&seq.dump());
                }
                let trace = if dumps.state {
                    state_dump.push_str(&format!("== states {file} part {} ==\n", seq.part));
                    Some(&mut state_dump)
                } else {
                    None
                };
                diags.extend(run_contextual(seq, &file, config, trace));
            }
            report.token_dump = dumps.tokens.then_some(token_dump);
            report.state_dump = dumps.state.then_some(state_dump);
            let offsets = part_offsets(unfolded.parts.iter().map(|p| p.measures.len()));
            let total = unfolded.parts.iter().map(|p| p.measures.len()).sum();
            report.outcome.contextual = Some(outcome(&diags, Stage::Contextual, total, &offsets));
        }
    }

    sort_diagnostics(&mut diags);
    report.diagnostics = diags;
    report
}

/// Loads and checks one file. `name` is what diagnostics call it.
pub fn check_path(path: &Path, name: &str, config: &Config, dumps: Dumps) -> Result<FileReport, IngestError> {
    let doc = load_score(path, name)?;
    Ok(check_document(&doc, config, dumps))
}

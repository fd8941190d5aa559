//! Corpus-level error repartition, one row per detection stage.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::duration::Rational;

/// What one stage saw on one score.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageOutcome {
    pub total_bars: usize,
    /// Measures with at least one error-severity finding of this stage.
    pub flagged_bars: BTreeSet<usize>,
}

impl StageOutcome {
    pub fn is_flagged(&self) -> bool {
        !self.flagged_bars.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScoreOutcome {
    pub file: String,
    /// Bar count over the measures as written.
    pub individual: Option<StageOutcome>,
    /// Bar count over the unfolded playback sequence; `None` when the stage
    /// did not run on this score.
    pub contextual: Option<StageOutcome>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageStats {
    pub total_scores: usize,
    pub scores_with_errors: usize,
    pub total_bars: usize,
    pub bars_with_errors: usize,
    /// Median flagged-bar count over flagged scores only.
    pub median_flagged_bars: Option<Rational>,
}

impl StageStats {
    pub fn score_ratio(&self) -> Option<Rational> {
        ratio(self.scores_with_errors, self.total_scores)
    }

    pub fn bar_ratio(&self) -> Option<Rational> {
        ratio(self.bars_with_errors, self.total_bars)
    }

    fn from_outcomes<'a>(outcomes: impl Iterator<Item = &'a StageOutcome>) -> Self {
        let mut stats = StageStats::default();
        let mut flagged_counts = Vec::new();
        for o in outcomes {
            stats.total_scores += 1;
            stats.total_bars += o.total_bars;
            if o.is_flagged() {
                stats.scores_with_errors += 1;
                stats.bars_with_errors += o.flagged_bars.len();
                flagged_counts.push(o.flagged_bars.len());
            }
        }
        stats.median_flagged_bars = median(&mut flagged_counts);
        stats
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub individual: StageStats,
    pub contextual: StageStats,
    /// Files that could not be read or parsed, with the reason.
    pub failures: Vec<(String, String)>,
}

fn ratio(num: usize, den: usize) -> Option<Rational> {
    (den > 0).then(|| Rational::new(num as i128, den as i128).expect("den > 0"))
}

fn median(values: &mut [usize]) -> Option<Rational> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let n = values.len();
    let m = if n % 2 == 1 {
        Rational::from_integer(values[n / 2] as i128)
    } else {
        Rational::new((values[n / 2 - 1] + values[n / 2]) as i128, 2).expect("2 > 0")
    };
    Some(m)
}

pub fn aggregate(scores: &[ScoreOutcome], failures: &[(String, String)]) -> CorpusStats {
    let mut failures = failures.to_vec();
    failures.sort();
    CorpusStats {
        individual: StageStats::from_outcomes(scores.iter().filter_map(|s| s.individual.as_ref())),
        contextual: StageStats::from_outcomes(scores.iter().filter_map(|s| s.contextual.as_ref())),
        failures,
    }
}

/// Percentage with one decimal, rounded half up, from an exact ratio.
pub fn format_percent(r: Option<Rational>) -> String {
    match r {
        None => "—".to_string(),
        Some(r) => {
            let tenths = r * Rational::from_integer(1000);
            let rounded = (tenths.numer() * 2 + tenths.denom()) / (tenths.denom() * 2);
            format!("{}.{}%", rounded / 10, rounded % 10)
        }
    }
}

fn format_median(m: Option<Rational>) -> String {
    match m {
        None => "—".to_string(),
        Some(m) if m.is_integer() => m.to_string(),
        Some(m) => format!("{}.5", m.numer() / 2),
    }
}

/// Aligned table with one row per stage.
pub fn render_stats(stats: &CorpusStats) -> String {
    let header = [
        "Stage",
        "Scores",
        "Scores w/ errors",
        "% scores",
        "Bars",
        "Bars w/ errors",
        "% bars",
        "Median bars w/ errors",
    ];
    let row = |name: &str, s: &StageStats| -> Vec<String> {
        vec![
            name.to_string(),
            s.total_scores.to_string(),
            s.scores_with_errors.to_string(),
            format_percent(s.score_ratio()),
            s.total_bars.to_string(),
            s.bars_with_errors.to_string(),
            format_percent(s.bar_ratio()),
            format_median(s.median_flagged_bars),
        ]
    };
    let rows = [
        header.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
        row("Individual", &stats.individual),
        row("Contextual", &stats.contextual),
    ];
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, w))| {
                let pad = w - cell.chars().count();
                if i == 0 {
                    format!("{cell}{}", " ".repeat(pad))
                } else {
                    format!("{}{cell}", " ".repeat(pad))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    if !stats.failures.is_empty() {
        let _ = writeln!(out, "\nUnparsed files: {}", stats.failures.len());
        for (file, reason) in &stats.failures {
            let _ = writeln!(out, "  {file}: {reason}");
        }
    }
    out
}

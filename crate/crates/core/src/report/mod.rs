//! Diagnostic model, renderers and corpus statistics.

mod diagnostic;
mod render;
mod stats;

pub use diagnostic::{sort_diagnostics, Code, DataValue, Diagnostic, Location, Severity, Stage};
pub use render::{parse_json, render_json, render_text, SCHEMA_VERSION};
pub use stats::{
    aggregate, format_percent, render_stats, CorpusStats, ScoreOutcome, StageOutcome, StageStats,
};

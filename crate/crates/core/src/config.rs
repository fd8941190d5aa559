use crate::duration::{Rational, DEFAULT_MIN_UNIT};

/// Which detection stages run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageSelection {
    Individual,
    Contextual,
    #[default]
    All,
}

/// Rule switches shared by both stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    /// Shortest rest allowed when decomposing skips and padding gaps, in
    /// quarters.
    pub min_unit: Rational,
    /// Reject duplicate pitches inside one chord.
    pub piano_rules: bool,
    /// Let voices run past the nominal measure length.
    pub allow_overflow: bool,
    /// Silence the warning on tuplets nested inside tuplets.
    pub allow_nested_tuplets: bool,
    /// Run the contextual stage even when the individual stage found errors.
    pub force_contextual: bool,
    /// Report scores with more than one part.
    pub single_part: bool,
    pub stages: StageSelection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            min_unit: DEFAULT_MIN_UNIT,
            piano_rules: true,
            allow_overflow: false,
            allow_nested_tuplets: false,
            force_contextual: false,
            single_part: false,
            stages: StageSelection::All,
        }
    }
}

//! Symbolic note values and their exact length in quarter notes.
//!
//! Everything on the duration path is a [`Rational`]; the timeline value of
//! an element (`<duration>` ticks over `<divisions>`) and its theoretical
//! value (`<type>`, `<dot>`, `<time-modification>`) are compared exactly.

mod rational;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rational::Rational;

/// Maximum number of augmentation dots accepted on a note.
pub const MAX_DOTS: u8 = 4;

/// The 128th note, in quarters. Default granularity for skip and gap checks.
pub const DEFAULT_MIN_UNIT: Rational = Rational::from_reduced(1, 32);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DurationError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("arithmetic overflow in duration computation")]
    Overflow,
    #[error("cannot parse `{0}` as a number")]
    Unparsable(String),
    #[error("<divisions> must be a positive integer, got {0}")]
    InvalidDivisions(i64),
    #[error("unknown note type `{0}`")]
    UnknownNoteType(String),
    #[error("{0} dots exceed the maximum of {MAX_DOTS}")]
    TooManyDots(u8),
    #[error("time modification {actual}:{normal} must use positive counts")]
    InvalidTimeModification { actual: u32, normal: u32 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// MusicXML `<type>` values, shortest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NoteType {
    #[serde(rename = "1024th")]
    N1024th,
    #[serde(rename = "512th")]
    N512th,
    #[serde(rename = "256th")]
    N256th,
    #[serde(rename = "128th")]
    N128th,
    #[serde(rename = "64th")]
    N64th,
    #[serde(rename = "32nd")]
    N32nd,
    #[serde(rename = "16th")]
    N16th,
    #[serde(rename = "eighth")]
    Eighth,
    #[serde(rename = "quarter")]
    Quarter,
    #[serde(rename = "half")]
    Half,
    #[serde(rename = "whole")]
    Whole,
    #[serde(rename = "breve")]
    Breve,
    #[serde(rename = "long")]
    Long,
    #[serde(rename = "maxima")]
    Maxima,
}

impl NoteType {
    pub const ALL: [NoteType; 14] = [
        NoteType::N1024th,
        NoteType::N512th,
        NoteType::N256th,
        NoteType::N128th,
        NoteType::N64th,
        NoteType::N32nd,
        NoteType::N16th,
        NoteType::Eighth,
        NoteType::Quarter,
        NoteType::Half,
        NoteType::Whole,
        NoteType::Breve,
        NoteType::Long,
        NoteType::Maxima,
    ];

    /// Exponent `k` such that the undotted value is `2^k` quarters.
    pub fn log2_quarters(self) -> i32 {
        self as i32 - 8
    }

    pub fn quarters(self) -> Rational {
        Rational::pow2(self.log2_quarters())
    }

    /// Inverse of [`NoteType::quarters`].
    pub fn from_quarters(q: Rational) -> Option<NoteType> {
        let k = q.log2_exact()?;
        let idx = usize::try_from(k + 8).ok()?;
        NoteType::ALL.get(idx).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NoteType::N1024th => "1024th",
            NoteType::N512th => "512th",
            NoteType::N256th => "256th",
            NoteType::N128th => "128th",
            NoteType::N64th => "64th",
            NoteType::N32nd => "32nd",
            NoteType::N16th => "16th",
            NoteType::Eighth => "eighth",
            NoteType::Quarter => "quarter",
            NoteType::Half => "half",
            NoteType::Whole => "whole",
            NoteType::Breve => "breve",
            NoteType::Long => "long",
            NoteType::Maxima => "maxima",
        }
    }
}

impl FromStr for NoteType {
    type Err = DurationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        NoteType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            // MusicXML 1.x spelled the 16th as "sixteenth" in some exporters
            .or(match s {
                "sixteenth" => Some(NoteType::N16th),
                "thirty-second" => Some(NoteType::N32nd),
                _ => None,
            })
            .ok_or_else(|| DurationError::UnknownNoteType(s.to_string()))
    }
}

impl fmt::Display for NoteType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `<time-modification>`: `actual` notes in the time of `normal` notes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeModification {
    pub actual: u32,
    pub normal: u32,
}

impl TimeModification {
    pub fn new(actual: u32, normal: u32) -> Result<Self, DurationError> {
        if actual == 0 || normal == 0 {
            return Err(DurationError::InvalidTimeModification { actual, normal });
        }
        Ok(TimeModification { actual, normal })
    }

    /// Factor applied to the written value: `normal / actual`.
    pub fn factor(self) -> Rational {
        Rational::new(self.normal as i128, self.actual as i128).expect("actual > 0")
    }
}

/// A written note value: symbol, dots and optional tuplet ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicDuration {
    pub note_type: NoteType,
    pub dots: u8,
    pub time_modification: Option<TimeModification>,
}

impl SymbolicDuration {
    pub fn new(
        note_type: NoteType,
        dots: u8,
        time_modification: Option<TimeModification>,
    ) -> Result<Self, DurationError> {
        if dots > MAX_DOTS {
            return Err(DurationError::TooManyDots(dots));
        }
        if let Some(tm) = time_modification {
            TimeModification::new(tm.actual, tm.normal)?;
        }
        Ok(SymbolicDuration {
            note_type,
            dots,
            time_modification,
        })
    }

    pub const fn plain(note_type: NoteType) -> Self {
        SymbolicDuration {
            note_type,
            dots: 0,
            time_modification: None,
        }
    }

    pub const fn dotted(note_type: NoteType, dots: u8) -> Self {
        SymbolicDuration {
            note_type,
            dots,
            time_modification: None,
        }
    }

    /// The same symbol with its tuplet ratio removed.
    pub fn without_modification(self) -> Self {
        SymbolicDuration {
            time_modification: None,
            ..self
        }
    }

    /// Theoretical length in quarter notes.
    pub fn quarters(&self) -> Rational {
        quarters_of(self)
    }
}

impl fmt::Display for SymbolicDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for _ in 0..self.dots {
            f.write_str("dotted ")?;
        }
        write!(f, "{}", self.note_type)?;
        if let Some(tm) = self.time_modification {
            write!(f, " ({}:{})", tm.actual, tm.normal)?;
        }
        Ok(())
    }
}

/// `base × (2 − 2^−dots) × normal / actual`.
pub fn quarters_of(sym: &SymbolicDuration) -> Rational {
    let base = sym.note_type.quarters();
    let dot_factor = Rational::from_integer(2) - Rational::pow2(-(sym.dots as i32));
    let value = base * dot_factor;
    match sym.time_modification {
        Some(tm) => value * tm.factor(),
        None => value,
    }
}

pub fn ticks_to_quarters(ticks: i64, divisions: i64) -> Result<Rational, DurationError> {
    if divisions <= 0 {
        return Err(DurationError::InvalidDivisions(divisions));
    }
    Rational::new(ticks as i128, divisions as i128)
}

/// Checks that `unit` is a power-of-two number of quarters within the range
/// of written note values.
pub fn validate_min_unit(unit: Rational) -> Result<NoteType, DurationError> {
    NoteType::from_quarters(unit).ok_or_else(|| {
        DurationError::InvalidArgument(format!(
            "minimal unit {unit} is not the value of an undotted note"
        ))
    })
}

/// Splits `q` into undotted rests, longest first.
///
/// Returns `Ok(None)` when `q` is not a whole multiple of `min_unit`; the
/// binary expansion is then impossible at that granularity.
pub fn decompose_into_rests(
    q: Rational,
    min_unit: Rational,
) -> Result<Option<Vec<SymbolicDuration>>, DurationError> {
    if !q.is_positive() {
        return Err(DurationError::InvalidArgument(format!(
            "cannot decompose non-positive duration {q}"
        )));
    }
    let unit_type = validate_min_unit(min_unit)?;
    let units = q.checked_div(min_unit).ok_or(DurationError::Overflow)?;
    if !units.is_integer() {
        return Ok(None);
    }
    let mut count = units.numer();
    let mut rests = Vec::new();

    let longest = NoteType::Maxima;
    let shift = longest.log2_quarters() - unit_type.log2_quarters();
    let per_longest = 1i128 << shift;
    rests.extend(std::iter::repeat_n(
        SymbolicDuration::plain(longest),
        (count / per_longest) as usize,
    ));
    count %= per_longest;

    for bit in (0..shift).rev() {
        if count & (1 << bit) != 0 {
            let idx = (unit_type as i32 + bit) as usize;
            rests.push(SymbolicDuration::plain(NoteType::ALL[idx]));
        }
    }
    Ok(Some(rests))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn base_values_span_1024th_to_maxima() {
        assert_eq!(NoteType::N1024th.quarters(), r(1, 256));
        assert_eq!(NoteType::Quarter.quarters(), Rational::ONE);
        assert_eq!(NoteType::Maxima.quarters(), r(32, 1));
        for t in NoteType::ALL {
            assert_eq!(NoteType::from_quarters(t.quarters()), Some(t));
            assert_eq!(t.as_str().parse::<NoteType>().unwrap(), t);
        }
        assert!("crotchet".parse::<NoteType>().is_err());
    }

    #[test]
    fn quarters_of_examples() {
        assert_eq!(quarters_of(&SymbolicDuration::plain(NoteType::Half)), r(2, 1));
        assert_eq!(
            quarters_of(&SymbolicDuration::dotted(NoteType::Quarter, 1)),
            r(3, 2)
        );
        let tm = TimeModification::new(14, 8).unwrap();
        let s = SymbolicDuration::new(NoteType::N32nd, 0, Some(tm)).unwrap();
        assert_eq!(quarters_of(&s), r(1, 14));
        let tm = TimeModification::new(7, 8).unwrap();
        let s = SymbolicDuration::new(NoteType::Eighth, 0, Some(tm)).unwrap();
        assert_eq!(quarters_of(&s), r(4, 7));
    }

    #[test]
    fn rejects_malformed_symbols() {
        assert_eq!(
            SymbolicDuration::new(NoteType::Quarter, 5, None),
            Err(DurationError::TooManyDots(5))
        );
        assert!(TimeModification::new(0, 2).is_err());
        assert!(TimeModification::new(3, 0).is_err());
    }

    #[test]
    fn ticks_examples() {
        assert_eq!(ticks_to_quarters(48, 24).unwrap(), r(2, 1));
        assert_eq!(ticks_to_quarters(0, 480).unwrap(), Rational::ZERO);
        assert_eq!(ticks_to_quarters(34, 480).unwrap(), r(17, 240));
        assert_eq!(
            ticks_to_quarters(4, 0),
            Err(DurationError::InvalidDivisions(0))
        );
    }

    #[test]
    fn decomposition_examples() {
        let unit = r(1, 32);
        assert_eq!(
            decompose_into_rests(r(45, 480), unit).unwrap(),
            Some(vec![
                SymbolicDuration::plain(NoteType::N64th),
                SymbolicDuration::plain(NoteType::N128th)
            ])
        );
        assert_eq!(decompose_into_rests(r(46, 480), unit).unwrap(), None);
        assert_eq!(
            decompose_into_rests(Rational::ONE, unit).unwrap(),
            Some(vec![SymbolicDuration::plain(NoteType::Quarter)])
        );
        assert!(decompose_into_rests(Rational::ZERO, unit).is_err());
        assert!(decompose_into_rests(r(-1, 2), unit).is_err());
        assert!(decompose_into_rests(Rational::ONE, r(3, 32)).is_err());
    }

    #[test]
    fn decomposition_beyond_maxima_repeats_longest() {
        let rests = decompose_into_rests(r(65, 1), r(1, 32)).unwrap().unwrap();
        assert_eq!(
            rests,
            vec![
                SymbolicDuration::plain(NoteType::Maxima),
                SymbolicDuration::plain(NoteType::Maxima),
                SymbolicDuration::plain(NoteType::Quarter),
            ]
        );
    }

    fn any_symbol() -> impl Strategy<Value = SymbolicDuration> {
        (
            0usize..14,
            0u8..=MAX_DOTS,
            proptest::option::of((1u32..20, 1u32..20)),
        )
            .prop_map(|(t, d, tm)| {
                SymbolicDuration::new(
                    NoteType::ALL[t],
                    d,
                    tm.map(|(a, n)| TimeModification::new(a, n).unwrap()),
                )
                .unwrap()
            })
    }

    proptest! {
        #[test]
        fn dot_sum_law(t in 0usize..14, d in 0u8..MAX_DOTS) {
            let nt = NoteType::ALL[t];
            let fewer = quarters_of(&SymbolicDuration::dotted(nt, d));
            let more = quarters_of(&SymbolicDuration::dotted(nt, d + 1));
            prop_assert_eq!(more, fewer + nt.quarters() * Rational::pow2(-(d as i32 + 1)));
        }

        #[test]
        fn time_modification_inverse(sym in any_symbol()) {
            if let Some(tm) = sym.time_modification {
                let ratio = Rational::new(tm.actual as i128, tm.normal as i128).unwrap();
                prop_assert_eq!(quarters_of(&sym) * ratio, quarters_of(&sym.without_modification()));
            }
        }

        #[test]
        fn decomposition_sums_back(k in 1i128..100_000, den_exp in 0u32..=8) {
            let q = Rational::new(k, 1 << den_exp).unwrap();
            let unit = Rational::new(1, 256).unwrap();
            let rests = decompose_into_rests(q, unit).unwrap().expect("dyadic input decomposes");
            prop_assert_eq!(rests.iter().map(quarters_of).sum::<Rational>(), q);
            prop_assert!(rests.windows(2).all(|w| w[0].note_type >= w[1].note_type));
            prop_assert!(rests.iter().all(|s| s.dots == 0 && s.time_modification.is_none()));
        }
    }
}

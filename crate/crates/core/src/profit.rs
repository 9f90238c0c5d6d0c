//! Evaluation functions and the profit of a received message sequence.
//!
//! A received sequence `a_1 < a_2 < ... < a_n` observed up to horizon `T` is
//! scored on its extended form `{0, a_1, ..., a_n, T + 1}`: every gap between
//! neighbours, including the two boundary gaps, contributes `f(gap)`.

use std::f64::consts::{FRAC_PI_4, LN_2};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Per-gap evaluation function.
///
/// All variants satisfy `f(1) = 1` except `Arctan`, which is normalised so
/// that `f(1) = 1` as well (`arctan(1) = pi/4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EvalFn {
    /// `1 + ln d`
    #[default]
    NaturalLog,
    /// `1 + log2 d`
    Log2,
    /// `sqrt d`
    Sqrt,
    /// `arctan(d) / (pi / 4)`
    Arctan,
}

impl EvalFn {
    pub const ALL: [EvalFn; 4] = [
        EvalFn::NaturalLog,
        EvalFn::Log2,
        EvalFn::Sqrt,
        EvalFn::Arctan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EvalFn::NaturalLog => "ln",
            EvalFn::Log2 => "log2",
            EvalFn::Sqrt => "sqrt",
            EvalFn::Arctan => "arctan",
        }
    }

    /// Evaluates `f(d)`. Gaps are positive; `d = 0` is a domain error.
    pub fn eval(self, d: u64) -> Result<f64> {
        if d == 0 {
            return Err(Error::domain("eval", "gap must be at least 1"));
        }
        Ok(self.eval_gap(d))
    }

    pub(crate) fn eval_gap(self, d: u64) -> f64 {
        let x = d as f64;
        match self {
            EvalFn::NaturalLog => 1.0 + x.ln(),
            EvalFn::Log2 => 1.0 + x.log2(),
            EvalFn::Sqrt => x.sqrt(),
            EvalFn::Arctan => x.atan() / FRAC_PI_4,
        }
    }

    /// Computes `sum f(better) - sum f(worse)` without the cancellation a
    /// direct subtraction suffers when both sums are large and close.
    ///
    /// Logarithmic variants compare exact integer products; the arctan
    /// variant works on the complement `arctan(1/d)`, which stays small for
    /// large gaps. Zero gaps are a domain error.
    pub fn advantage(self, better: &[u64], worse: &[u64]) -> Result<f64> {
        if better.iter().chain(worse).any(|&d| d == 0) {
            return Err(Error::domain("advantage", "gap must be at least 1"));
        }
        let count_diff = better.len() as f64 - worse.len() as f64;
        Ok(match self {
            EvalFn::NaturalLog => count_diff + ln_ratio(better, worse),
            EvalFn::Log2 => count_diff + ln_ratio(better, worse) / LN_2,
            EvalFn::Sqrt => {
                let sum = |ds: &[u64]| ds.iter().map(|&d| (d as f64).sqrt()).sum::<f64>();
                sum(better) - sum(worse)
            }
            EvalFn::Arctan => {
                // arctan(d) = pi/2 - arctan(1/d) for d > 0
                let tail = |ds: &[u64]| ds.iter().map(|&d| (1.0 / d as f64).atan()).sum::<f64>();
                2.0 * count_diff + (tail(worse) - tail(better)) / FRAC_PI_4
            }
        })
    }
}

/// `ln(prod(num) / prod(den))`, exact while both products fit in 128 bits.
fn ln_ratio(num: &[u64], den: &[u64]) -> f64 {
    let product = |ds: &[u64]| {
        ds.iter()
            .try_fold(1u128, |acc, &d| acc.checked_mul(u128::from(d)))
    };
    match (product(num), product(den)) {
        (Some(p), Some(q)) => {
            if p >= q {
                ((p - q) as f64 / q as f64).ln_1p()
            } else {
                -((q - p) as f64 / p as f64).ln_1p()
            }
        }
        _ => {
            let sum = |ds: &[u64]| ds.iter().map(|&d| (d as f64).ln()).sum::<f64>();
            sum(num) - sum(den)
        }
    }
}

impl fmt::Display for EvalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EvalFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ln" | "natural-log" => Ok(EvalFn::NaturalLog),
            "log2" => Ok(EvalFn::Log2),
            "sqrt" => Ok(EvalFn::Sqrt),
            "arctan" | "atan" => Ok(EvalFn::Arctan),
            other => Err(Error::domain(
                "eval-fn",
                format!(
                    "unknown evaluation function `{other}` (expected ln, log2, sqrt or arctan)"
                ),
            )),
        }
    }
}

/// A received sequence: strictly increasing message numbers in `[1, horizon]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceView {
    members: Vec<u64>,
    horizon: u64,
}

impl SequenceView {
    pub fn new(members: Vec<u64>, horizon: u64) -> Result<Self> {
        let mut prev = 0;
        for &a in &members {
            if a <= prev {
                return Err(Error::domain(
                    "sequence",
                    format!("members must be strictly increasing and >= 1 (saw {a} after {prev})"),
                ));
            }
            prev = a;
        }
        if prev > horizon {
            return Err(Error::domain(
                "sequence",
                format!("member {prev} lies beyond horizon {horizon}"),
            ));
        }
        Ok(Self { members, horizon })
    }

    /// The fully received sequence `{1, ..., horizon}`.
    pub fn dense(horizon: u64) -> Self {
        Self {
            members: (1..=horizon).collect(),
            horizon,
        }
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, seq: u64) -> bool {
        self.members.binary_search(&seq).is_ok()
    }

    /// Gaps of the extended sequence `{0, a_1, ..., a_n, T + 1}`.
    pub fn extend(&self) -> GapList {
        let mut gaps = Vec::with_capacity(self.members.len() + 1);
        let mut prev = 0;
        for &a in self
            .members
            .iter()
            .chain(std::iter::once(&(self.horizon + 1)))
        {
            gaps.push(a - prev);
            prev = a;
        }
        GapList(gaps)
    }

    pub fn profit(&self, f: EvalFn) -> f64 {
        self.extend().profit(f)
    }
}

/// Gaps between neighbours of an extended sequence. Every gap is at least 1
/// and the gaps sum to `T + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapList(Vec<u64>);

impl GapList {
    pub fn gaps(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn max_gap(&self) -> u64 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn profit(&self, f: EvalFn) -> f64 {
        self.0.iter().map(|&d| f.eval_gap(d)).sum()
    }
}

/// Free-function form of [`SequenceView::extend`].
pub fn extend(seq: &SequenceView) -> GapList {
    seq.extend()
}

/// Free-function form of [`SequenceView::profit`].
pub fn profit(seq: &SequenceView, f: EvalFn) -> f64 {
    seq.profit(f)
}

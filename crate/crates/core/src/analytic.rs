//! Closed-form profits of the four policies under `f(d) = 1 + ln d`, and a
//! grid check of the inequalities relating them.
//!
//! All formulas assume no dequeues happen while `T` messages arrive into a
//! buffer of capacity `L`, with `T >= L >= 1`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// Integer decomposition shared by the closed forms:
///
/// ```text
/// T = K*L + p            1 <= K, 0 <= p < L
/// K = 2^k + q            0 <= q < 2^k,  r = 2^k
/// q*L + p = s*r + t      0 <= t < r,    0 <= s < L
/// l = L + s              T = r*l + t
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decomposition {
    pub big_k: u64,
    pub p: u64,
    pub k: u32,
    pub q: u64,
    pub r: u64,
    pub s: u64,
    pub t: u64,
    pub l: u64,
}

fn check_domain(op: &'static str, horizon: u64, capacity: u64) -> Result<()> {
    if capacity == 0 || horizon < capacity {
        return Err(Error::domain(
            op,
            format!("requires T >= L >= 1 (T = {horizon}, L = {capacity})"),
        ));
    }
    Ok(())
}

pub fn decompose(horizon: u64, capacity: u64) -> Result<Decomposition> {
    check_domain("decompose", horizon, capacity)?;
    let (big_k, p) = (horizon / capacity, horizon % capacity);
    let k = big_k.ilog2();
    let r = 1u64 << k;
    let q = big_k - r;
    let rest = q * capacity + p;
    let (s, t) = (rest / r, rest % r);
    Ok(Decomposition {
        big_k,
        p,
        k,
        q,
        r,
        s,
        t,
        l: capacity + s,
    })
}

/// Continuous-relaxation optimum: `(L + 1) * ln((T + 1) / (L + 1)) + L + 1`.
pub fn profit_oracle(horizon: u64, capacity: u64) -> Result<f64> {
    check_domain("profit_oracle", horizon, capacity)?;
    let slots = capacity as f64 + 1.0;
    Ok(slots * ((horizon as f64 + 1.0) / slots).ln() + slots)
}

/// Drop-Oldest keeps `{T - L + 1, ..., T}`: `L + ln(T - L + 1) + 1`.
pub fn profit_ros(horizon: u64, capacity: u64) -> Result<f64> {
    check_domain("profit_ros", horizon, capacity)?;
    Ok(capacity as f64 + ((horizon - capacity + 1) as f64).ln() + 1.0)
}

/// 2-Sample keeps the multiples of `r^ = 2^ceil(log2((T + 1) / (L + 1)))`.
pub fn profit_2sample(horizon: u64, capacity: u64) -> Result<f64> {
    check_domain("profit_2sample", horizon, capacity)?;
    // smallest power of two with r^ * (L + 1) >= T + 1
    let mut stride = 1u64;
    while u128::from(stride) * (u128::from(capacity) + 1) < u128::from(horizon) + 1 {
        stride *= 2;
    }
    let count = horizon / stride;
    let tail = horizon - stride * count;
    Ok(count as f64 * ((stride as f64).ln() + 1.0) + ((tail + 1) as f64).ln() + 1.0)
}

/// `L * (ln r + 1) + (l - L) * ln 2 + ln(t + 1) + 1` over [`decompose`].
pub fn profit_optsample(horizon: u64, capacity: u64) -> Result<f64> {
    let d = decompose(horizon, capacity)?;
    Ok(capacity as f64 * ((d.r as f64).ln() + 1.0)
        + (d.l - capacity) as f64 * LN_2
        + ((d.t + 1) as f64).ln()
        + 1.0)
}

/// The ratio floor constant `2 - ln 2 + ln ln 2`.
pub fn ratio_constant() -> f64 {
    2.0 - LN_2 + LN_2.ln()
}

/// Slack allowed on the inequality side of every grid comparison.
pub const LEMMA_TOLERANCE: f64 = 1e-12;

type ProfitFormula = fn(u64, u64) -> Result<f64>;

/// The closed forms the grid check compares. Swappable so that a corrupted
/// formula can be fed through the same machinery as a negative control.
#[derive(Clone, Copy)]
pub struct Formulas {
    pub ros: ProfitFormula,
    pub two_sample: ProfitFormula,
    pub optsample: ProfitFormula,
    pub oracle: ProfitFormula,
}

impl Formulas {
    pub const CLOSED_FORM: Formulas = Formulas {
        ros: profit_ros,
        two_sample: profit_2sample,
        optsample: profit_optsample,
        oracle: profit_oracle,
    };
}

impl Default for Formulas {
    fn default() -> Self {
        Self::CLOSED_FORM
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma {
    /// OptSample >= Drop-Oldest
    OptBeatsRos,
    /// OptSample >= 2-Sample
    OptBeatsTwoSample,
    /// min(C, L/(L+1)) <= OptSample / Oracle
    RatioLowerBound,
    /// OptSample / Oracle <= 1
    RatioUpperBound,
}

impl Lemma {
    pub fn describe(self) -> &'static str {
        match self {
            Lemma::OptBeatsRos => "P_optsample >= P_ros",
            Lemma::OptBeatsTwoSample => "P_optsample >= P_2sample",
            Lemma::RatioLowerBound => "min(C, L/(L+1)) <= P_optsample / P_oracle",
            Lemma::RatioUpperBound => "P_optsample / P_oracle <= 1",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaViolation {
    pub lemma: Lemma,
    pub horizon: u64,
    pub capacity: u64,
    /// How far the inequality missed, always positive.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    /// Grid points evaluated.
    pub points: usize,
    /// Individual inequality checks that held.
    pub passed: usize,
    pub violations: Vec<LemmaViolation>,
    /// Smallest OptSample/Oracle ratio seen, with its `(T, L)`.
    pub worst_ratio: f64,
    pub worst_at: (u64, u64),
    /// Smallest `ratio - min(C, L/(L+1))` margin seen.
    pub worst_margin: f64,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn failed(&self) -> usize {
        self.violations.len()
    }
}

pub fn verify_lemmas(capacities: &[u64], t_max: u64) -> Result<LemmaReport> {
    verify_lemmas_with(&Formulas::CLOSED_FORM, capacities, t_max)
}

/// Checks every inequality for each `L` in `capacities` and `T` in `[L, t_max]`.
/// Violations are collected, not raised.
pub fn verify_lemmas_with(
    formulas: &Formulas,
    capacities: &[u64],
    t_max: u64,
) -> Result<LemmaReport> {
    let c = ratio_constant();
    let mut report = LemmaReport {
        points: 0,
        passed: 0,
        violations: Vec::new(),
        worst_ratio: f64::INFINITY,
        worst_at: (0, 0),
        worst_margin: f64::INFINITY,
    };
    for &capacity in capacities {
        if capacity == 0 || t_max < capacity {
            return Err(Error::domain(
                "verify_lemmas",
                format!("every L must satisfy 1 <= L <= T_max (L = {capacity}, T_max = {t_max})"),
            ));
        }
        let floor = c.min(capacity as f64 / (capacity as f64 + 1.0));
        for horizon in capacity..=t_max {
            let opt = (formulas.optsample)(horizon, capacity)?;
            let ros = (formulas.ros)(horizon, capacity)?;
            let two = (formulas.two_sample)(horizon, capacity)?;
            let oracle = (formulas.oracle)(horizon, capacity)?;
            let ratio = opt / oracle;
            report.points += 1;
            if ratio < report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_at = (horizon, capacity);
            }
            report.worst_margin = report.worst_margin.min(ratio - floor);

            // each entry is (lemma, amount by which the inequality is short)
            let checks = [
                (Lemma::OptBeatsRos, ros - opt),
                (Lemma::OptBeatsTwoSample, two - opt),
                (Lemma::RatioLowerBound, floor - ratio),
                (Lemma::RatioUpperBound, ratio - 1.0),
            ];
            for (lemma, shortfall) in checks {
                if shortfall > LEMMA_TOLERANCE || shortfall.is_nan() {
                    report.violations.push(LemmaViolation {
                        lemma,
                        horizon,
                        capacity,
                        excess: shortfall,
                    });
                } else {
                    report.passed += 1;
                }
            }
        }
    }
    Ok(report)
}

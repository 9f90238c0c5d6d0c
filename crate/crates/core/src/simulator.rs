//! Drives arrival traces through the policies and records the profit of the
//! buffered messages after every arrival.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic;
use crate::error::{Error, Result};
use crate::policies::{oracle_sequence, MessageRecord, PolicyKind, PolicyState};
use crate::profit::{EvalFn, SequenceView};

/// One curve of the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    Policy(PolicyKind),
    /// The offline nearest-integer optimum, recomputed for every `T`.
    Oracle,
    /// The continuous-relaxation optimum from the closed form (natural log only).
    OracleAnalytic,
}

impl Series {
    pub fn name(&self) -> String {
        match self {
            Series::Policy(kind) => kind.name(),
            Series::Oracle => "oracle".to_string(),
            Series::OracleAnalytic => "oracle-analytic".to_string(),
        }
    }

    /// Drop-Oldest, 2-Sample, OptSample and the discrete Oracle.
    pub fn standard() -> Vec<Series> {
        vec![
            Series::Oracle,
            Series::Policy(PolicyKind::DropOldest),
            Series::Policy(PolicyKind::TWO_SAMPLE),
            Series::Policy(PolicyKind::OptSample),
        ]
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Series {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Series::Oracle),
            "oracle-analytic" => Ok(Series::OracleAnalytic),
            other => other.parse().map(Series::Policy),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub capacity: usize,
    pub t_max: u64,
    pub eval_fn: EvalFn,
    pub series: Vec<Series>,
    /// When set, one message is dequeued after every second arrival, so the
    /// link drains at half the arrival rate.
    pub drain: bool,
}

impl Scenario {
    pub fn new(capacity: usize, t_max: u64) -> Self {
        Self {
            capacity,
            t_max,
            eval_fn: EvalFn::NaturalLog,
            series: Series::standard(),
            drain: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.capacity == 0 || self.t_max == 0 {
            return Err(Error::domain(
                "scenario",
                "capacity and arrivals must be at least 1",
            ));
        }
        if self.series.is_empty() {
            return Err(Error::domain("scenario", "no series selected"));
        }
        if self.series.contains(&Series::OracleAnalytic) && self.eval_fn != EvalFn::NaturalLog {
            return Err(Error::domain(
                "scenario",
                "oracle-analytic has a closed form only for the natural-log evaluation function",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub horizon: u64,
    pub policy: String,
    pub profit: f64,
    /// Sample stride at this instant; 1 for series without one.
    pub rate: u64,
    pub occupancy: usize,
}

/// Per-arrival record of one online policy.
#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub kind: PolicyKind,
    pub rows: Vec<TraceRow>,
    /// Buffer contents after arrival `T`, at index `T - 1`.
    pub snapshots: Vec<SequenceView>,
}

/// Feeds arrivals `1..=t_max` through one policy.
pub fn run_policy(
    kind: PolicyKind,
    capacity: usize,
    t_max: u64,
    eval_fn: EvalFn,
    drain: bool,
) -> Result<PolicyRun> {
    let mut state = PolicyState::new(kind, capacity)?;
    let mut rows = Vec::with_capacity(t_max as usize);
    let mut snapshots = Vec::with_capacity(t_max as usize);
    for horizon in 1..=t_max {
        state.enqueue(MessageRecord::bare(horizon)?)?;
        if drain && horizon % 2 == 0 {
            state.dequeue();
        }
        let contents = state.contents(horizon)?;
        rows.push(TraceRow {
            horizon,
            policy: kind.name(),
            profit: contents.profit(eval_fn),
            rate: state.rate(),
            occupancy: state.len(),
        });
        snapshots.push(contents);
    }
    Ok(PolicyRun {
        kind,
        rows,
        snapshots,
    })
}

fn oracle_rows(scenario: &Scenario, analytic_form: bool) -> Result<Vec<TraceRow>> {
    let capacity = scenario.capacity as u64;
    (1..=scenario.t_max)
        .map(|horizon| {
            let (profit, occupancy) = if horizon < capacity {
                // everything fits
                (
                    SequenceView::dense(horizon).profit(scenario.eval_fn),
                    horizon as usize,
                )
            } else if analytic_form {
                (
                    analytic::profit_oracle(horizon, capacity)?,
                    scenario.capacity,
                )
            } else {
                let seq = oracle_sequence(horizon, capacity)?;
                (seq.profit(scenario.eval_fn), seq.len())
            };
            let name = if analytic_form {
                Series::OracleAnalytic
            } else {
                Series::Oracle
            };
            Ok(TraceRow {
                horizon,
                policy: name.name(),
                profit,
                rate: 1,
                occupancy,
            })
        })
        .collect()
}

/// One row per series and arrival count, grouped by series in scenario order.
pub fn run(scenario: &Scenario) -> Result<Vec<TraceRow>> {
    scenario.validate()?;
    let mut rows = Vec::with_capacity(scenario.series.len() * scenario.t_max as usize);
    for series in &scenario.series {
        match *series {
            Series::Policy(kind) => rows.extend(
                run_policy(
                    kind,
                    scenario.capacity,
                    scenario.t_max,
                    scenario.eval_fn,
                    scenario.drain,
                )?
                .rows,
            ),
            Series::Oracle => rows.extend(oracle_rows(scenario, false)?),
            Series::OracleAnalytic => rows.extend(oracle_rows(scenario, true)?),
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "T,policy,profit,rate,occupancy";

/// Writes the rows as CSV (LF line endings, 9 fractional digits) and returns
/// the number of bytes written.
pub fn emit_csv<W: Write>(rows: &[TraceRow], mut sink: W) -> Result<usize> {
    if rows.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{:.9},{},{}\n",
            row.horizon, row.policy, row.profit, row.rate, row.occupancy
        ));
    }
    sink.write_all(out.as_bytes())?;
    sink.flush()?;
    Ok(out.len())
}

/// `later ∩ {1..earlier.horizon} ⊆ earlier`: nothing discarded by time
/// `earlier.horizon` reappears later.
pub fn no_refind(earlier: &SequenceView, later: &SequenceView) -> bool {
    later
        .members()
        .iter()
        .take_while(|&&a| a <= earlier.horizon())
        .all(|&a| earlier.contains(a))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub pairs_checked: usize,
    /// Horizons `(T1, T2)` of the first pair that broke the property.
    pub first_violation: Option<(u64, u64)>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks [`no_refind`] on `pairs` random snapshot pairs `T1 < T2`.
pub fn feasibility_audit(snapshots: &[SequenceView], pairs: usize, seed: u64) -> AuditReport {
    let mut report = AuditReport {
        pairs_checked: 0,
        first_violation: None,
    };
    if snapshots.len() < 2 {
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pairs {
        let i = rng.gen_range(0..snapshots.len() - 1);
        let j = rng.gen_range(i + 1..snapshots.len());
        report.pairs_checked += 1;
        if !no_refind(&snapshots[i], &snapshots[j]) {
            report.first_violation = Some((snapshots[i].horizon(), snapshots[j].horizon()));
            break;
        }
    }
    report
}

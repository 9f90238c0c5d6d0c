//! Exhaustive searches used as ground truth on small instances.
//!
//! [`brute_force_optimal`] explores every online discard schedule, so its
//! answer is the best any feasible policy can do: a message, once discarded,
//! never comes back. [`exhaustive_subset_optimum`] drops that constraint and
//! scores every subset of `{1..T}` directly.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::profit::{EvalFn, SequenceView};

/// Upper bound on the branch count either search agrees to explore.
pub const SEARCH_LIMIT: u128 = 10_000_000;

/// Profits closer than this are treated as ties.
const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_profit: f64,
    pub best_sequence: SequenceView,
    pub nodes_explored: u64,
}

/// Higher profit wins; near-ties go to the lexicographically smaller sequence.
fn better(candidate: (f64, &[u64]), incumbent: (f64, &[u64])) -> bool {
    let diff = candidate.0 - incumbent.0;
    if diff.abs() <= TIE_EPSILON {
        candidate.1.cmp(incumbent.1) == Ordering::Less
    } else {
        diff > 0.0
    }
}

fn profit_of(members: &[u64], horizon: u64, f: EvalFn) -> f64 {
    let mut prev = 0;
    let mut total = 0.0;
    for &a in members.iter().chain(std::iter::once(&(horizon + 1))) {
        total += f.eval_gap(a - prev);
        prev = a;
    }
    total
}

/// Best final profit over every online schedule that keeps the buffer full
/// and, at each arrival in `[L + 1, T]`, discards exactly one of the `L`
/// buffered messages or the newcomer.
pub fn brute_force_optimal(horizon: u64, capacity: u64, f: EvalFn) -> Result<SearchResult> {
    if capacity == 0 || horizon < capacity {
        return Err(Error::domain(
            "brute_force_optimal",
            format!("requires T >= L >= 1 (T = {horizon}, L = {capacity})"),
        ));
    }
    let branches = (u128::from(capacity) + 1)
        .checked_pow((horizon - capacity) as u32)
        .unwrap_or(u128::MAX);
    if branches > SEARCH_LIMIT {
        return Err(Error::InstanceTooLarge {
            size: branches,
            limit: SEARCH_LIMIT,
        });
    }

    let mut search = OnlineSearch {
        horizon,
        f,
        memo: HashMap::new(),
        nodes: 0,
    };
    let initial: Vec<u64> = (1..=capacity).collect();
    let (best_profit, best) = search.best(initial, capacity + 1);
    Ok(SearchResult {
        best_profit,
        best_sequence: SequenceView::new(best, horizon)?,
        nodes_explored: search.nodes,
    })
}

struct OnlineSearch {
    horizon: u64,
    f: EvalFn,
    memo: HashMap<(Vec<u64>, u64), (f64, Vec<u64>)>,
    nodes: u64,
}

impl OnlineSearch {
    /// Best reachable final buffer from `buffer` with `arrival` about to land.
    fn best(&mut self, buffer: Vec<u64>, arrival: u64) -> (f64, Vec<u64>) {
        if arrival > self.horizon {
            let p = profit_of(&buffer, self.horizon, self.f);
            return (p, buffer);
        }
        let key = (buffer, arrival);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        self.nodes += 1;
        let buffer = &key.0;

        // discarding the newcomer
        let mut best = self.best(buffer.clone(), arrival + 1);
        for drop in 0..buffer.len() {
            let mut next = Vec::with_capacity(buffer.len());
            next.extend(
                buffer
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != drop)
                    .map(|(_, &a)| a),
            );
            next.push(arrival);
            let candidate = self.best(next, arrival + 1);
            if better((candidate.0, &candidate.1), (best.0, &best.1)) {
                best = candidate;
            }
        }
        self.memo.insert(key, best.clone());
        best
    }
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(u128::from(n - i)) / u128::from(i + 1);
    }
    acc
}

/// Best profit over all subsets of `{1..T}` with at most `L` members,
/// ignoring the no-refind constraint.
pub fn exhaustive_subset_optimum(horizon: u64, capacity: u64, f: EvalFn) -> Result<SearchResult> {
    let size = capacity.min(horizon);
    let count = binomial(horizon, size);
    if count > SEARCH_LIMIT {
        return Err(Error::InstanceTooLarge {
            size: count,
            limit: SEARCH_LIMIT,
        });
    }
    let mut search = SubsetSearch {
        horizon,
        size,
        f,
        chosen: Vec::with_capacity(size as usize),
        best: (profit_of(&[], horizon, f), Vec::new()),
        nodes: 0,
    };
    search.descend(0, 0.0);
    let (best_profit, best) = search.best;
    Ok(SearchResult {
        best_profit,
        best_sequence: SequenceView::new(best, horizon)?,
        nodes_explored: search.nodes,
    })
}

struct SubsetSearch {
    horizon: u64,
    size: u64,
    f: EvalFn,
    chosen: Vec<u64>,
    best: (f64, Vec<u64>),
    nodes: u64,
}

impl SubsetSearch {
    /// `partial` is the profit of the gaps up to the last chosen member.
    fn descend(&mut self, last: u64, partial: f64) {
        self.nodes += 1;
        let total = partial + self.f.eval_gap(self.horizon + 1 - last);
        if better((total, &self.chosen), (self.best.0, &self.best.1)) {
            self.best = (total, self.chosen.clone());
        }
        if self.chosen.len() as u64 == self.size {
            return;
        }
        for next in last + 1..=self.horizon {
            self.chosen.push(next);
            self.descend(next, partial + self.f.eval_gap(next - last));
            self.chosen.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN: EvalFn = EvalFn::NaturalLog;

    #[test]
    fn full_buffer_has_no_choices() {
        for l in 1..=6 {
            let r = brute_force_optimal(l, l, LN).unwrap();
            assert!((r.best_profit - (l + 1) as f64).abs() < 1e-12);
            assert_eq!(r.best_sequence, SequenceView::dense(l));
            let r = exhaustive_subset_optimum(l, l, LN).unwrap();
            assert_eq!(r.best_sequence, SequenceView::dense(l));
        }
    }

    #[test]
    fn five_two_instance() {
        let r = brute_force_optimal(5, 2, LN).unwrap();
        assert_eq!(r.best_sequence.members(), &[2, 4]);
        assert!((r.best_profit - 5.079_441_541_679_836).abs() < 1e-9);
    }

    #[test]
    fn nine_four_dominates_optsample() {
        let r = brute_force_optimal(9, 4, LN).unwrap();
        assert!(r.best_profit >= 5.0 + 5.0 * 2f64.ln() - 1e-12);
    }

    #[test]
    fn subset_optimum_matches_uniform_spacing() {
        let r = exhaustive_subset_optimum(9, 4, LN).unwrap();
        assert_eq!(r.best_sequence.members(), &[2, 4, 6, 8]);
        let r = exhaustive_subset_optimum(14, 4, LN).unwrap();
        assert_eq!(r.best_sequence.members(), &[3, 6, 9, 12]);
    }

    #[test]
    fn result_profit_matches_sequence() {
        for f in EvalFn::ALL {
            let r = brute_force_optimal(8, 3, f).unwrap();
            assert!((r.best_sequence.profit(f) - r.best_profit).abs() < 1e-12);
            assert!(r.best_sequence.len() <= 3);
            let r = exhaustive_subset_optimum(10, 3, f).unwrap();
            assert!((r.best_sequence.profit(f) - r.best_profit).abs() < 1e-12);
        }
    }

    #[test]
    fn guards_refuse_large_instances() {
        assert!(matches!(
            brute_force_optimal(40, 4, LN),
            Err(Error::InstanceTooLarge { .. })
        ));
        assert!(matches!(
            exhaustive_subset_optimum(200, 10, LN),
            Err(Error::InstanceTooLarge { .. })
        ));
        assert!(brute_force_optimal(3, 4, LN).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(12, 3), 220);
        assert_eq!(binomial(4, 4), 1);
        assert_eq!(binomial(4, 0), 1);
    }
}

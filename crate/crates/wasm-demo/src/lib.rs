//! Browser bindings for the interactive demo page in `www/`.
//!
//! Each export has a plain Rust counterpart returning `Result<_, String>` so
//! the logic is testable natively; the `#[wasm_bindgen]` wrappers only convert
//! errors into JavaScript exceptions.

use optsample_core::analytic;
use optsample_core::simulator::{self, Scenario, Series};
use optsample_core::{EvalFn, MessageRecord, PolicyKind, PolicyState};
use wasm_bindgen::prelude::*;

/// Keeps a single slider drag from freezing the page.
pub const MAX_ARRIVALS: u64 = 200_000;

fn check_size(capacity: u32, t_max: u64) -> Result<(), String> {
    if capacity == 0 {
        return Err("capacity must be at least 1".into());
    }
    if t_max == 0 || t_max > MAX_ARRIVALS {
        return Err(format!("arrivals must be in 1..={MAX_ARRIVALS}"));
    }
    Ok(())
}

fn parse_series(list: &str) -> Result<Vec<Series>, String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Series>().map_err(|e| e.to_string()))
        .collect()
}

/// Profit after every arrival, series-major: `t_max` values per series.
pub fn curves(
    capacity: u32,
    t_max: u64,
    eval_fn: &str,
    series: &str,
    drain: bool,
) -> Result<Vec<f64>, String> {
    check_size(capacity, t_max)?;
    let scenario = Scenario {
        capacity: capacity as usize,
        t_max,
        eval_fn: eval_fn.parse::<EvalFn>().map_err(|e| e.to_string())?,
        series: parse_series(series)?,
        drain,
    };
    let rows = simulator::run(&scenario).map_err(|e| e.to_string())?;
    Ok(rows.into_iter().map(|r| r.profit).collect())
}

/// Sequence numbers held by `policy` after `horizon` arrivals with no draining.
pub fn contents(policy: &str, capacity: u32, horizon: u64) -> Result<Vec<u64>, String> {
    check_size(capacity, horizon)?;
    let kind = policy.parse::<PolicyKind>().map_err(|e| e.to_string())?;
    let mut state = PolicyState::new(kind, capacity as usize).map_err(|e| e.to_string())?;
    for seq in 1..=horizon {
        let record = MessageRecord::bare(seq).map_err(|e| e.to_string())?;
        state.enqueue(record).map_err(|e| e.to_string())?;
    }
    Ok(state.kept_seqs())
}

/// OptSample profit over the oracle bound for T = 1..=t_max (1.0 while T <= L).
pub fn ratios(capacity: u32, t_max: u64) -> Result<Vec<f64>, String> {
    check_size(capacity, t_max)?;
    let l = u64::from(capacity);
    (1..=t_max)
        .map(|t| {
            if t <= l {
                return Ok(1.0);
            }
            let opt = analytic::profit_optsample(t, l).map_err(|e| e.to_string())?;
            let oracle = analytic::profit_oracle(t, l).map_err(|e| e.to_string())?;
            Ok(opt / oracle)
        })
        .collect()
}

/// Guaranteed floor on the ratio curve, `min(C, L/(L+1))`.
#[wasm_bindgen]
pub fn ratio_floor(capacity: u32) -> f64 {
    let l = f64::from(capacity.max(1));
    analytic::ratio_constant().min(l / (l + 1.0))
}

#[wasm_bindgen]
pub fn profit_curves(
    capacity: u32,
    t_max: u32,
    eval_fn: &str,
    series: &str,
    drain: bool,
) -> Result<Vec<f64>, JsError> {
    curves(capacity, u64::from(t_max), eval_fn, series, drain).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn buffer_contents(policy: &str, capacity: u32, horizon: u32) -> Result<Vec<f64>, JsError> {
    contents(policy, capacity, u64::from(horizon))
        .map(|seqs| seqs.into_iter().map(|s| s as f64).collect())
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn ratio_curve(capacity: u32, t_max: u32) -> Result<Vec<f64>, JsError> {
    ratios(capacity, u64::from(t_max)).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_are_series_major() {
        let values = curves(
            10,
            100,
            "ln",
            "oracle,drop-oldest,2-sample,optsample",
            false,
        )
        .unwrap();
        assert_eq!(values.len(), 400);
        let last = |i: usize| values[i * 100 + 99];
        assert!(last(1) < last(3) && last(3) <= last(0));
    }

    #[test]
    fn contents_match_known_buffer() {
        assert_eq!(
            contents("optsample", 8, 20).unwrap(),
            vec![4, 8, 10, 12, 14, 16, 18, 20]
        );
        assert_eq!(contents("drop-oldest", 3, 10).unwrap(), vec![8, 9, 10]);
    }

    #[test]
    fn ratio_curve_stays_above_floor() {
        for capacity in [1, 4, 16] {
            let floor = ratio_floor(capacity);
            let curve = ratios(capacity, 3000).unwrap();
            assert!(curve
                .iter()
                .all(|&r| r >= floor - 1e-12 && r <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(curves(0, 10, "ln", "optsample", false).is_err());
        assert!(curves(4, MAX_ARRIVALS + 1, "ln", "optsample", false).is_err());
        assert!(curves(4, 10, "cube", "optsample", false).is_err());
        assert!(contents("lifo", 4, 10).is_err());
    }
}

//! Buffer-management policies that stay useful through link outages.
//!
//! When a link drops, a bounded publisher buffer has to discard something.
//! Drop-Oldest keeps only the newest messages and leaves one long hole;
//! the sampling policies here keep an evenly thinned history instead. The
//! crate scores a received sequence with a gap-based profit function, gives
//! closed forms for each policy's profit, and cross-checks them against
//! simulation and exhaustive search.
//!
//! ```
//! use optsample_core::{analytic, MessageRecord, PolicyKind, PolicyState, EvalFn};
//!
//! let mut buffer = PolicyState::new(PolicyKind::OptSample, 8).unwrap();
//! for seq in 1..=20 {
//!     buffer.enqueue(MessageRecord::bare(seq).unwrap()).unwrap();
//! }
//! assert_eq!(buffer.kept_seqs(), vec![4, 8, 10, 12, 14, 16, 18, 20]);
//! let simulated = buffer.contents(20).unwrap().profit(EvalFn::NaturalLog);
//! assert!((simulated - analytic::profit_optsample(20, 8).unwrap()).abs() < 1e-9);
//! ```

pub mod analytic;
pub mod bruteforce;
mod error;
pub mod policies;
pub mod profit;
pub mod simulator;
pub mod transport;

pub use error::{Error, Result};
pub use policies::{oracle_sequence, EnqueueOutcome, MessageRecord, PolicyKind, PolicyState};
pub use profit::{EvalFn, GapList, SequenceView};

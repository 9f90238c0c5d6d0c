//! Online buffer-management policies and the offline oracle sequence.
//!
//! Every policy owns a bounded buffer of at most `capacity` messages, kept in
//! arrival order. Arrivals must carry strictly increasing sequence numbers.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::profit::SequenceView;

/// A sequence-numbered message flowing through a buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageRecord {
    pub seq: u64,
    pub payload: Vec<u8>,
    /// Monotonic tick supplied by the producer (arrival index, nanoseconds, ...).
    pub enqueued_at: u64,
}

impl MessageRecord {
    pub fn new(seq: u64, payload: Vec<u8>, enqueued_at: u64) -> Result<Self> {
        if seq == 0 {
            return Err(Error::domain("message", "sequence numbers start at 1"));
        }
        Ok(Self {
            seq,
            payload,
            enqueued_at,
        })
    }

    /// A payload-free message stamped with its own sequence number.
    pub fn bare(seq: u64) -> Result<Self> {
        Self::new(seq, Vec::new(), seq)
    }
}

/// What happened to one arrival.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnqueueOutcome {
    /// Whether the arriving message was stored.
    pub admitted: bool,
    /// Buffered messages evicted while handling the arrival, oldest first.
    /// Drop-Oldest and OptSample evict at most one; a δ-Sample resample may
    /// evict several.
    pub evicted: Vec<u64>,
}

impl EnqueueOutcome {
    fn admitted() -> Self {
        Self {
            admitted: true,
            evicted: Vec::new(),
        }
    }

    fn rejected() -> Self {
        Self::default()
    }

    /// The single evicted message, for policies that evict at most one.
    pub fn dropped_seq(&self) -> Option<u64> {
        self.evicted.first().copied()
    }

    /// Messages lost by this arrival: evictions plus the arrival itself if rejected.
    pub fn lost(&self) -> usize {
        self.evicted.len() + usize::from(!self.admitted)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Evict the oldest buffered message on overflow.
    DropOldest,
    /// Resample the whole buffer down by `delta` on overflow.
    DeltaSample { delta: u64 },
    /// Evict one message at a sweeping cursor, doubling the stride per sweep.
    OptSample,
}

impl PolicyKind {
    pub const TWO_SAMPLE: PolicyKind = PolicyKind::DeltaSample { delta: 2 };

    pub fn name(&self) -> String {
        match self {
            PolicyKind::DropOldest => "drop-oldest".to_string(),
            PolicyKind::DeltaSample { delta } => format!("{delta}-sample"),
            PolicyKind::OptSample => "optsample".to_string(),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop-oldest" | "ros" => return Ok(PolicyKind::DropOldest),
            "optsample" => return Ok(PolicyKind::OptSample),
            _ => {}
        }
        if let Some(delta) = s
            .strip_suffix("-sample")
            .and_then(|d| d.parse::<u64>().ok())
        {
            if delta >= 2 {
                return Ok(PolicyKind::DeltaSample { delta });
            }
        }
        Err(Error::domain(
            "policy",
            format!("unknown policy `{s}` (expected drop-oldest, optsample or <delta>-sample with delta >= 2)"),
        ))
    }
}

/// Buffer state of one policy instance.
///
/// Not internally synchronized; callers serialize access.
#[derive(Debug, Clone)]
pub struct PolicyState {
    kind: PolicyKind,
    capacity: usize,
    kept: VecDeque<MessageRecord>,
    rate: u64,
    cursor: usize,
    last_arrival: u64,
}

impl PolicyState {
    pub fn new(kind: PolicyKind, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::domain("policy", "capacity must be at least 1"));
        }
        if let PolicyKind::DeltaSample { delta } = kind {
            if delta < 2 {
                return Err(Error::domain("policy", "delta must be at least 2"));
            }
        }
        Ok(Self {
            kind,
            capacity,
            kept: VecDeque::with_capacity(capacity),
            rate: 1,
            cursor: 0,
            last_arrival: 0,
        })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.kept.len() >= self.capacity
    }

    /// Current sample stride; always 1 for Drop-Oldest.
    pub fn rate(&self) -> u64 {
        self.rate
    }

    /// Index of the next message OptSample evicts; 0 for other policies.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn kept(&self) -> impl Iterator<Item = &MessageRecord> {
        self.kept.iter()
    }

    pub fn kept_seqs(&self) -> Vec<u64> {
        self.kept.iter().map(|m| m.seq).collect()
    }

    /// Offers one arrival to the buffer.
    pub fn enqueue(&mut self, msg: MessageRecord) -> Result<EnqueueOutcome> {
        if msg.seq <= self.last_arrival {
            return Err(Error::NonMonotonic {
                seq: msg.seq,
                last: self.last_arrival,
            });
        }
        self.last_arrival = msg.seq;
        let outcome = match self.kind {
            PolicyKind::DropOldest => self.drop_oldest_enqueue(msg),
            PolicyKind::DeltaSample { delta } => self.delta_sample_enqueue(msg, delta),
            PolicyKind::OptSample => self.optsample_enqueue(msg),
        };
        debug_assert!(self.kept.len() <= self.capacity);
        Ok(outcome)
    }

    fn drop_oldest_enqueue(&mut self, msg: MessageRecord) -> EnqueueOutcome {
        let mut outcome = EnqueueOutcome::admitted();
        if self.is_full() {
            if let Some(old) = self.kept.pop_front() {
                outcome.evicted.push(old.seq);
            }
        }
        self.kept.push_back(msg);
        outcome
    }

    fn delta_sample_enqueue(&mut self, msg: MessageRecord, delta: u64) -> EnqueueOutcome {
        if !msg.seq.is_multiple_of(self.rate) {
            return EnqueueOutcome::rejected();
        }
        let mut evicted = Vec::new();
        // A single resample frees room for every capacity >= 2; with capacity
        // 1 the surviving message may need a second pass.
        while self.is_full() && msg.seq.is_multiple_of(self.rate) {
            self.rate *= delta;
            let rate = self.rate;
            self.kept.retain(|m| {
                let keep = m.seq.is_multiple_of(rate);
                if !keep {
                    evicted.push(m.seq);
                }
                keep
            });
        }
        let admitted = msg.seq.is_multiple_of(self.rate) && !self.is_full();
        if admitted {
            self.kept.push_back(msg);
        }
        EnqueueOutcome { admitted, evicted }
    }

    fn optsample_enqueue(&mut self, msg: MessageRecord) -> EnqueueOutcome {
        if !self.is_full() {
            self.relax_rate();
            if !msg.seq.is_multiple_of(self.rate) {
                return EnqueueOutcome::rejected();
            }
            self.kept.push_back(msg);
            return EnqueueOutcome::admitted();
        }
        if !msg.seq.is_multiple_of(self.rate) {
            return EnqueueOutcome::rejected();
        }
        let old = self
            .kept
            .remove(self.cursor)
            .expect("cursor stays below capacity while the buffer is full");
        self.kept.push_back(msg);
        self.cursor += 1;
        if self.cursor == self.capacity {
            self.rate *= 2;
            self.cursor = 0;
        }
        EnqueueOutcome {
            admitted: true,
            evicted: vec![old.seq],
        }
    }

    /// Recovery rule: an arrival that finds free room halves the stride.
    fn relax_rate(&mut self) {
        if self.rate > 1 {
            self.rate /= 2;
        }
    }

    /// Removes the oldest buffered message for transmission.
    pub fn dequeue(&mut self) -> Option<MessageRecord> {
        let msg = self.kept.pop_front()?;
        if self.kind == PolicyKind::OptSample {
            self.cursor = self.cursor.saturating_sub(1);
        }
        Some(msg)
    }

    /// Snapshot of the buffered sequence numbers scored against `horizon`.
    pub fn contents(&self, horizon: u64) -> Result<SequenceView> {
        SequenceView::new(self.kept_seqs(), horizon)
    }

    #[cfg(test)]
    fn from_parts(
        kind: PolicyKind,
        capacity: usize,
        seqs: &[u64],
        rate: u64,
        cursor: usize,
    ) -> Self {
        let mut state = Self::new(kind, capacity).unwrap();
        state.kept = seqs
            .iter()
            .map(|&s| MessageRecord::bare(s).unwrap())
            .collect();
        state.rate = rate;
        state.cursor = cursor;
        state.last_arrival = seqs.last().copied().unwrap_or(0);
        state
    }
}

/// The offline optimum: `capacity` messages spaced `(T + 1) / (L + 1)` apart,
/// each rounded to the nearest integer (halves round up).
pub fn oracle_sequence(horizon: u64, capacity: u64) -> Result<SequenceView> {
    if capacity == 0 || horizon < capacity {
        return Err(Error::domain(
            "oracle_sequence",
            format!("requires T >= L >= 1 (T = {horizon}, L = {capacity})"),
        ));
    }
    let num = u128::from(horizon) + 1;
    let den = u128::from(capacity) + 1;
    let mut members = Vec::with_capacity(capacity as usize);
    let mut prev = 0u64;
    for i in 1..=u128::from(capacity) {
        // floor(i * num / den + 1/2)
        let rounded = ((2 * i * num + den) / (2 * den)) as u64;
        let a = rounded.max(prev + 1);
        members.push(a);
        prev = a;
    }
    SequenceView::new(members, horizon)
}

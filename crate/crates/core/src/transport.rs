//! A single-topic publisher/subscriber over a byte stream, with the policy
//! buffer as the only queue between the message source and the socket.
//!
//! Wire format, big-endian, no padding:
//!
//! ```text
//! +------------+------------+-----------------+
//! | len: u32   | seq: u64   | payload         |
//! +------------+------------+-----------------+
//! len = 8 + payload length
//! ```
//!
//! Link outages are expressed in arrival counts rather than wall-clock time so
//! that a run is reproducible: while the link is down the publisher keeps
//! buffering, and the policy alone decides what survives.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::str::FromStr;
use std::sync::{Condvar, Mutex, MutexGuard};
use std::thread;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::policies::{MessageRecord, PolicyKind, PolicyState};
use crate::profit::{EvalFn, SequenceView};

/// Bytes before the payload: length and sequence number.
pub const HEADER_LEN: usize = 12;
pub const MAX_PAYLOAD: usize = u32::MAX as usize - 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub seq: u64,
    pub payload: Vec<u8>,
}

pub fn encode_frame(seq: u64, payload: &[u8]) -> Result<Vec<u8>> {
    if seq == 0 {
        return Err(Error::domain("encode_frame", "sequence numbers start at 1"));
    }
    if payload.len() > MAX_PAYLOAD {
        return Err(Error::domain(
            "encode_frame",
            format!("payload of {} bytes exceeds {MAX_PAYLOAD}", payload.len()),
        ));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&((payload.len() + 8) as u32).to_be_bytes());
    out.extend_from_slice(&seq.to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

fn check_length(len: u32) -> Result<()> {
    if len < 8 {
        return Err(Error::Protocol(format!(
            "frame length {len} is shorter than the 8-byte sequence number"
        )));
    }
    Ok(())
}

fn check_seq(seq: u64) -> Result<()> {
    if seq == 0 {
        return Err(Error::Protocol("frame carries sequence number 0".into()));
    }
    Ok(())
}

/// Decodes one frame from the front of `buf`.
///
/// Returns `Ok(None)` when `buf` holds only part of a frame, otherwise the
/// frame and the number of bytes it occupied.
pub fn decode_frame(buf: &[u8]) -> Result<Option<(Frame, usize)>> {
    if buf.len() < 4 {
        return Ok(None);
    }
    let len = u32::from_be_bytes(buf[..4].try_into().expect("4 bytes"));
    check_length(len)?;
    let total = 4 + len as usize;
    if buf.len() < total {
        return Ok(None);
    }
    let seq = u64::from_be_bytes(buf[4..12].try_into().expect("8 bytes"));
    check_seq(seq)?;
    let frame = Frame {
        seq,
        payload: buf[12..total].to_vec(),
    };
    Ok(Some((frame, total)))
}

/// Reads the next frame; `Ok(None)` on a clean end of stream between frames.
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Option<Frame>> {
    let mut len_buf = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match reader.read(&mut len_buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::Protocol("stream ended inside a frame header".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_be_bytes(len_buf);
    check_length(len)?;
    let mut seq_buf = [0u8; 8];
    reader.read_exact(&mut seq_buf).map_err(truncated)?;
    let seq = u64::from_be_bytes(seq_buf);
    check_seq(seq)?;
    let body = u64::from(len) - 8;
    let mut payload = Vec::new();
    reader.take(body).read_to_end(&mut payload)?;
    if payload.len() as u64 != body {
        return Err(Error::Protocol(
            "stream ended inside a frame payload".into(),
        ));
    }
    Ok(Some(Frame { seq, payload }))
}

fn truncated(err: io::Error) -> Error {
    if err.kind() == io::ErrorKind::UnexpectedEof {
        Error::Protocol("stream ended inside a frame header".into())
    } else {
        err.into()
    }
}

/// Arrivals `start..=end` land while the link is down; transmission resumes
/// right after arrival `end` has been buffered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisruptionWindow {
    pub start: u64,
    pub end: u64,
}

impl DisruptionWindow {
    /// Number of arrivals buffered during the outage.
    pub fn arrivals(&self) -> u64 {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DisruptionSchedule {
    windows: Vec<DisruptionWindow>,
}

impl DisruptionSchedule {
    pub fn new(windows: Vec<DisruptionWindow>) -> Result<Self> {
        let mut prev_end = 0;
        for w in &windows {
            if w.start == 0 || w.end < w.start {
                return Err(Error::domain(
                    "disruption",
                    format!(
                        "window {}-{} is empty or starts before arrival 1",
                        w.start, w.end
                    ),
                ));
            }
            if w.start <= prev_end {
                return Err(Error::domain(
                    "disruption",
                    "windows must be ordered and disjoint",
                ));
            }
            prev_end = w.end;
        }
        Ok(Self { windows })
    }

    pub fn none() -> Self {
        Self::default()
    }

    /// One outage covering `arrivals` consecutive arrivals from `start`.
    pub fn single(start: u64, arrivals: u64) -> Result<Self> {
        if arrivals == 0 {
            return Err(Error::domain(
                "disruption",
                "a window covers at least one arrival",
            ));
        }
        Self::new(vec![DisruptionWindow {
            start,
            end: start + arrivals - 1,
        }])
    }

    pub fn windows(&self) -> &[DisruptionWindow] {
        &self.windows
    }

    /// Whether the sender may transmit once `arrival` has been buffered.
    pub fn link_up_after(&self, arrival: u64) -> bool {
        !self
            .windows
            .iter()
            .any(|w| w.start <= arrival && arrival < w.end)
    }
}

impl FromStr for DisruptionSchedule {
    type Err = Error;

    /// Comma-separated inclusive arrival ranges, e.g. `41-160,300-320`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::none());
        }
        let windows = s
            .split(',')
            .map(|part| {
                let (a, b) = part.trim().split_once('-').ok_or_else(|| {
                    Error::domain("disruption", format!("expected START-END, got `{part}`"))
                })?;
                let parse = |v: &str| {
                    v.trim().parse::<u64>().map_err(|_| {
                        Error::domain("disruption", format!("bad arrival index `{v}`"))
                    })
                };
                Ok(DisruptionWindow {
                    start: parse(a)?,
                    end: parse(b)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(windows)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublishConfig {
    pub policy: PolicyKind,
    pub capacity: usize,
    pub schedule: DisruptionSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PublishSummary {
    pub published: u64,
    /// Arrivals rejected plus buffered messages evicted.
    pub dropped: u64,
    pub sent: u64,
}

struct Shared {
    state: PolicyState,
    link_up: bool,
    finished: bool,
    failed: bool,
}

struct Channel {
    shared: Mutex<Shared>,
    changed: Condvar,
}

impl Channel {
    fn lock(&self) -> MutexGuard<'_, Shared> {
        self.shared.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn wait<'a>(&self, guard: MutexGuard<'a, Shared>) -> MutexGuard<'a, Shared> {
        self.changed.wait(guard).unwrap_or_else(|p| p.into_inner())
    }
}

/// Publishes `source` (message `i` gets sequence number `i`, from 1) into
/// `sink` through the configured policy.
///
/// The calling thread produces; a second thread takes messages off the buffer
/// and writes frames while the link is up. After every arrival that leaves the
/// link up, the producer waits for the buffer to drain, so the set of messages
/// that reach the sink depends only on the source, the policy and the
/// schedule. When the source is exhausted the remaining buffer is flushed.
pub fn publish<I, W>(source: I, config: &PublishConfig, sink: W) -> Result<PublishSummary>
where
    I: IntoIterator<Item = Vec<u8>>,
    W: Write + Send,
{
    let channel = Channel {
        shared: Mutex::new(Shared {
            state: PolicyState::new(config.policy, config.capacity)?,
            link_up: true,
            finished: false,
            failed: false,
        }),
        changed: Condvar::new(),
    };

    thread::scope(|scope| {
        let sender = scope.spawn(|| send_loop(&channel, sink));
        let produced = produce(&channel, source, &config.schedule);
        {
            let mut shared = channel.lock();
            shared.finished = true;
        }
        channel.changed.notify_all();
        let sent = sender.join().expect("sender thread panicked");
        let (published, dropped) = produced?;
        Ok(PublishSummary {
            published,
            dropped,
            sent: sent?,
        })
    })
}

fn produce<I>(channel: &Channel, source: I, schedule: &DisruptionSchedule) -> Result<(u64, u64)>
where
    I: IntoIterator<Item = Vec<u8>>,
{
    let (mut published, mut dropped) = (0u64, 0u64);
    for (seq, payload) in (1u64..).zip(source) {
        let mut shared = channel.lock();
        if shared.failed {
            break;
        }
        let outcome = shared
            .state
            .enqueue(MessageRecord::new(seq, payload, seq)?)?;
        published += 1;
        dropped += outcome.lost() as u64;
        shared.link_up = schedule.link_up_after(seq);
        channel.changed.notify_all();
        if shared.link_up {
            while !shared.state.is_empty() && !shared.failed {
                shared = channel.wait(shared);
            }
        }
    }
    Ok((published, dropped))
}

fn send_loop<W: Write>(channel: &Channel, sink: W) -> Result<u64> {
    let mut sink = BufWriter::new(sink);
    let mut sent = 0u64;
    loop {
        let next = {
            let mut shared = channel.lock();
            loop {
                if shared.link_up || shared.finished {
                    if let Some(msg) = shared.state.dequeue() {
                        break Some(msg);
                    }
                    if shared.finished {
                        break None;
                    }
                }
                shared = channel.wait(shared);
            }
        };
        channel.changed.notify_all();
        let Some(msg) = next else { break };
        let written = encode_frame(msg.seq, &msg.payload).and_then(|frame| {
            sink.write_all(&frame)
                .and_then(|_| sink.flush())
                .map_err(Error::from)
        });
        if let Err(err) = written {
            channel.lock().failed = true;
            channel.changed.notify_all();
            return Err(err);
        }
        sent += 1;
    }
    sink.flush()?;
    Ok(sent)
}

/// Connects to `endpoint` and publishes over TCP.
pub fn publish_tcp<I, A>(source: I, config: &PublishConfig, endpoint: A) -> Result<PublishSummary>
where
    I: IntoIterator<Item = Vec<u8>>,
    A: ToSocketAddrs + std::fmt::Debug,
{
    let stream = TcpStream::connect(&endpoint).map_err(|source| Error::Connect {
        endpoint: format!("{endpoint:?}"),
        source,
    })?;
    stream.set_nodelay(true)?;
    let summary = publish(source, config, &stream)?;
    stream.shutdown(std::net::Shutdown::Write)?;
    Ok(summary)
}

/// What the subscriber saw.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverReport {
    pub received_seqs: Vec<u64>,
    /// Largest difference between consecutive received numbers, counting the
    /// leading gap from 0; 0 when nothing arrived.
    pub max_gap: u64,
    /// Profit of the received sequence scored against `horizon`.
    pub achieved_profit: f64,
    pub horizon: u64,
}

impl ReceiverReport {
    /// Scores `received` against `horizon`, which defaults to the last
    /// received number when the publisher's count is unknown.
    pub fn new(received: Vec<u64>, horizon: Option<u64>) -> Result<Self> {
        let horizon = horizon.unwrap_or_else(|| received.last().copied().unwrap_or(0));
        let view = SequenceView::new(received, horizon)?;
        let mut prev = 0;
        let mut max_gap = 0;
        for &a in view.members() {
            max_gap = max_gap.max(a - prev);
            prev = a;
        }
        Ok(Self {
            achieved_profit: view.profit(EvalFn::NaturalLog),
            max_gap,
            horizon,
            received_seqs: view.members().to_vec(),
        })
    }

    pub fn summary_line(&self) -> String {
        format!(
            "received={} max_gap={} profit={:.9}",
            self.received_seqs.len(),
            self.max_gap,
            self.achieved_profit
        )
    }
}

/// Decodes frames from `reader` until the stream closes.
pub fn receive<R: Read>(reader: R, horizon: Option<u64>) -> Result<ReceiverReport> {
    let mut reader = BufReader::new(reader);
    let mut received = Vec::new();
    while let Some(frame) = read_frame(&mut reader)? {
        if let Some(&last) = received.last() {
            if frame.seq <= last {
                return Err(Error::Protocol(format!(
                    "sequence number {} arrived after {last}",
                    frame.seq
                )));
            }
        }
        received.push(frame.seq);
    }
    if let (Some(h), Some(&last)) = (horizon, received.last()) {
        if last > h {
            return Err(Error::Protocol(format!(
                "received sequence number {last} beyond the published count {h}"
            )));
        }
    }
    ReceiverReport::new(received, horizon)
}

/// A bound listener that accepts a single publisher.
pub struct Subscriber {
    listener: TcpListener,
}

impl Subscriber {
    pub fn bind<A: ToSocketAddrs>(endpoint: A) -> Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(endpoint)?,
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts one connection and reads it to the end.
    pub fn accept(&self, horizon: Option<u64>) -> Result<ReceiverReport> {
        let (stream, _) = self.listener.accept()?;
        receive(stream, horizon)
    }
}

/// Binds `endpoint`, accepts one publisher and reports what it delivered.
pub fn subscribe<A: ToSocketAddrs>(endpoint: A, horizon: Option<u64>) -> Result<ReceiverReport> {
    Subscriber::bind(endpoint)?.accept(horizon)
}

/// Deterministic pseudo-random payloads of fixed size.
pub fn synthetic_source(
    count: u64,
    payload_len: usize,
    seed: u64,
) -> impl Iterator<Item = Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(move |_| {
        let mut payload = vec![0u8; payload_len];
        rng.fill_bytes(&mut payload);
        payload
    })
}

//! Bulk-synchronous runtime for the window protocol.
//!
//! Each subdomain is a worker. A round has five phases — predict, exchange,
//! select, reduce, update — and all communication is tagged with
//! `(window, phase)` so stragglers and protocol bugs are detected instead of
//! silently reordered. One worker implementation runs under two transports:
//!
//! * [`RunMode::Single`]: workers are stepped round-robin on the calling
//!   thread with mailbox queues; the reference ordering.
//! * [`RunMode::Parallel`]: one OS thread per worker over mpsc channels.
//!
//! Every value a worker computes depends only on message *content*, never on
//! arrival order (maps are keyed, reductions are order-free), so both modes
//! produce bitwise-identical fields.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::rc::Rc;
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::config::{RswrConfig, RunMode};
use crate::decomposition::{partition, Decomposition, Subdomain};
use crate::engine::{self, PredictExchange, WindowPlan};
use crate::error::{Result, RswrError};
use crate::pde::{BoundarySide, FieldSlab, WaveState};

/// How long a worker waits for a peer message before declaring the protocol
/// broken. Rounds take microseconds; this is purely a deadlock backstop.
const WORKER_RECV_TIMEOUT: Duration = Duration::from_secs(120);
const DRIVER_RECV_TIMEOUT: Duration = Duration::from_secs(300);

/// Phases of one protocol round, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Predict,
    Exchange,
    Select,
    Reduce,
    Update,
}

/// Per-side outcome of the select phase, broadcast inside a [`SpanVote`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideVote {
    pub pair: (usize, usize),
    pub capped_span: usize,
    /// Absolute comparison tolerance used for this pair this window.
    pub epsilon: f64,
}

/// One worker's span proposal: the minimum over its interface sides, plus the
/// per-side detail every peer needs to reproduce the global decision.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanVote {
    pub worker: usize,
    pub value: usize,
    pub sides: Vec<SideVote>,
}

/// Wall-clock seconds a worker spent in each phase, summed over all rounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub predict: f64,
    pub exchange: f64,
    pub select: f64,
    pub reduce: f64,
    pub update: f64,
}

impl PhaseTimings {
    fn fold_max(&mut self, other: &PhaseTimings) {
        self.predict = self.predict.max(other.predict);
        self.exchange = self.exchange.max(other.exchange);
        self.select = self.select.max(other.select);
        self.reduce = self.reduce.max(other.reduce);
        self.update = self.update.max(other.update);
    }
}

/// Final message of a worker: its timings and traffic counters.
#[derive(Debug, Clone, Serialize)]
pub struct TerminationNotice {
    pub worker: usize,
    pub timings: PhaseTimings,
    pub field_messages_sent: u64,
    pub scalar_messages_sent: u64,
}

/// Capped span agreed for one subdomain pair in one window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairSpan {
    pub pair: (usize, usize),
    pub capped_span: usize,
    pub epsilon: f64,
}

/// What happened in one committed window.
#[derive(Debug, Clone, Serialize)]
pub struct WindowSummary {
    pub k: u64,
    pub start_step: u64,
    pub t_start: f64,
    pub predict_steps: usize,
    pub accepted_span: usize,
    pub pair_spans: Vec<PairSpan>,
}

/// Everything worth reporting about a completed run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub mode: RunMode,
    pub worker_threads: usize,
    pub n_subdomains: usize,
    pub n_total_steps: u64,
    pub dt: f64,
    pub n_windows: u64,
    pub windows: Vec<WindowSummary>,
    /// Inter-worker messages carrying field data (overlap slabs and flux
    /// series) per round: two per adjacent pair.
    pub field_messages_per_round: usize,
    pub field_messages_total: u64,
    /// Span votes and global decisions; small fixed-size payloads.
    pub scalar_messages_total: u64,
    /// Per-phase maximum across workers.
    pub phase_seconds: PhaseTimings,
}

/// Committed windows (stitched to the global grid) plus the run report.
#[derive(Debug)]
pub struct RswrOutput {
    pub windows: Vec<FieldSlab>,
    pub report: RunReport,
}

/// Everything that travels between participants.
#[derive(Debug)]
pub struct Message {
    /// `(window, phase)` that produced this message.
    pub round: (u64, Phase),
    pub from: usize,
    pub kind: MessageKind,
}

#[derive(Debug)]
pub enum MessageKind {
    PredictExchange(PredictExchange),
    SpanVote(SpanVote),
    GlobalSpanDecision { span: usize },
    /// Worker-to-driver: one committed subdomain slab. Worker 0 attaches the
    /// window summary.
    WindowResult { slab: FieldSlab, summary: Option<WindowSummary> },
    /// Worker-to-driver: clean shutdown.
    TerminationNotice(TerminationNotice),
    /// Worker-to-driver: the run failed on this worker.
    Failure(RswrError),
}

/// Minimum over per-worker vote values, with a completeness check: a missing
/// vote is a protocol failure, not a quiet minimum over fewer workers.
pub fn min_reduce(votes: &BTreeMap<usize, usize>, n_workers: usize) -> Result<usize> {
    for worker in 0..n_workers {
        if !votes.contains_key(&worker) {
            return Err(RswrError::Protocol(format!(
                "span reduction is missing the vote of worker {worker}"
            )));
        }
    }
    if votes.len() != n_workers {
        return Err(RswrError::Protocol(format!(
            "span reduction got {} votes for {n_workers} workers",
            votes.len()
        )));
    }
    votes.values().min().copied().ok_or_else(|| {
        RswrError::InvalidInput("span reduction over zero workers".to_string())
    })
}

/// Message routing seen by one worker.
pub trait Transport {
    fn send(&mut self, to: usize, message: Message) -> Result<()>;
    /// Next message addressed to this worker. Blocks (with a deadlock
    /// timeout) in parallel mode; in single-threaded mode the scheduler
    /// guarantees the mailbox is non-empty whenever this is called.
    fn recv_next(&mut self) -> Result<Message>;
}

#[derive(Debug, PartialEq, Eq)]
enum MessageClass {
    Deliver,
    Stash,
    Reject,
}

/// A message for a later phase (or the next round) from a worker that raced
/// ahead is stashed; one from an earlier phase can only be a duplicate or a
/// protocol bug and is rejected.
fn classify(expected: (u64, Phase), got: (u64, Phase)) -> MessageClass {
    use std::cmp::Ordering::*;
    match got.cmp(&expected) {
        Equal => MessageClass::Deliver,
        Greater => MessageClass::Stash,
        Less => MessageClass::Reject,
    }
}

struct Bus {
    mailboxes: Vec<VecDeque<Message>>,
}

/// Single-threaded transport: shared mailbox queues, FIFO per recipient.
struct BusTransport {
    id: usize,
    bus: Rc<RefCell<Bus>>,
}

impl Transport for BusTransport {
    fn send(&mut self, to: usize, message: Message) -> Result<()> {
        let mut bus = self.bus.borrow_mut();
        let boxes = &mut bus.mailboxes;
        if to >= boxes.len() {
            return Err(RswrError::Internal(format!("message addressed to unknown worker {to}")));
        }
        boxes[to].push_back(message);
        Ok(())
    }

    fn recv_next(&mut self) -> Result<Message> {
        self.bus.borrow_mut().mailboxes[self.id].pop_front().ok_or_else(|| {
            RswrError::Internal(format!(
                "worker {} polled an empty mailbox; the single-threaded scheduler ran a phase \
                 before its inputs were produced",
                self.id
            ))
        })
    }
}

/// One-thread-per-worker transport over mpsc channels.
struct ChannelTransport {
    id: usize,
    peers: Vec<Sender<Message>>,
    inbox: Receiver<Message>,
}

impl Transport for ChannelTransport {
    fn send(&mut self, to: usize, message: Message) -> Result<()> {
        if to >= self.peers.len() {
            return Err(RswrError::Internal(format!("message addressed to unknown worker {to}")));
        }
        self.peers[to]
            .send(message)
            .map_err(|_| RswrError::Protocol(format!("worker {to} hung up; cannot deliver")))
    }

    fn recv_next(&mut self) -> Result<Message> {
        match self.inbox.recv_timeout(WORKER_RECV_TIMEOUT) {
            Ok(m) => Ok(m),
            Err(RecvTimeoutError::Timeout) => Err(RswrError::Protocol(format!(
                "worker {} waited {WORKER_RECV_TIMEOUT:?} for a peer message; a sibling worker \
                 stalled or died",
                self.id
            ))),
            Err(RecvTimeoutError::Disconnected) => Err(RswrError::Protocol(format!(
                "all peers of worker {} hung up mid-round",
                self.id
            ))),
        }
    }
}

/// Per-window working set, populated phase by phase.
struct WindowScratch {
    predict_steps: usize,
    left_drive: Option<Vec<f64>>,
    right_drive: Option<Vec<f64>>,
    /// Exchanges I sent, by pair.
    sent: BTreeMap<(usize, usize), PredictExchange>,
    /// Exchanges I received, by pair.
    received: BTreeMap<(usize, usize), PredictExchange>,
    my_vote: Option<SpanVote>,
    /// All side votes of all workers, deduplicated by pair.
    assembled: BTreeMap<(usize, usize), SideVote>,
    accepted: Option<usize>,
}

/// One subdomain's worker: state, plan, and the phase methods. The same code
/// runs under both transports.
struct WorkerCore {
    id: usize,
    sub: Subdomain,
    decomp: Arc<Decomposition>,
    config: Arc<RswrConfig>,
    dt: f64,
    n_total: u64,
    state: WaveState,
    plan: WindowPlan,
    steps_done: u64,
    /// Running max of |u| over each pair's exchanged overlap slabs; both pair
    /// members compute the same value, so the derived tolerance is symmetric.
    pair_running_max: BTreeMap<(usize, usize), f64>,
    pending: VecDeque<Message>,
    timings: PhaseTimings,
    field_sent: u64,
    scalar_sent: u64,
    scratch: Option<WindowScratch>,
}

impl WorkerCore {
    fn new(
        sub: Subdomain,
        decomp: Arc<Decomposition>,
        config: Arc<RswrConfig>,
        n_total: u64,
    ) -> WorkerCore {
        let dt = config.dt();
        let plan = WindowPlan::first(config.initial_predict(), dt);
        let state = WaveState::at_rest(sub.n_nodes());
        WorkerCore {
            id: sub.id,
            sub,
            decomp,
            config,
            dt,
            n_total,
            state,
            plan,
            steps_done: 0,
            pair_running_max: BTreeMap::new(),
            pending: VecDeque::new(),
            timings: PhaseTimings::default(),
            field_sent: 0,
            scalar_sent: 0,
            scratch: None,
        }
    }

    fn pair_with(&self, neighbor: usize) -> (usize, usize) {
        (self.id.min(neighbor), self.id.max(neighbor))
    }

    fn interface_neighbors(&self) -> Vec<(BoundarySide, usize)> {
        let mut out = Vec::new();
        for side in [BoundarySide::Left, BoundarySide::Right] {
            if let Some(n) = self.sub.neighbor(side) {
                out.push((side, n));
            }
        }
        out
    }

    /// Collects exactly one message of the given round tag from each expected
    /// sender, honoring the stash-or-reject discipline for everything else.
    fn collect(
        &mut self,
        transport: &mut dyn Transport,
        tag: (u64, Phase),
        expected: &BTreeSet<usize>,
    ) -> Result<Vec<Message>> {
        let mut got: BTreeMap<usize, Message> = BTreeMap::new();
        let mut leftovers: VecDeque<Message> = VecDeque::new();
        while let Some(m) = self.pending.pop_front() {
            if classify(tag, m.round) == MessageClass::Deliver {
                Self::admit(tag, m, expected, &mut got)?;
            } else {
                leftovers.push_back(m);
            }
        }
        self.pending = leftovers;
        while got.len() < expected.len() {
            let m = transport.recv_next()?;
            match classify(tag, m.round) {
                MessageClass::Deliver => Self::admit(tag, m, expected, &mut got)?,
                MessageClass::Stash => self.pending.push_back(m),
                MessageClass::Reject => {
                    return Err(RswrError::Protocol(format!(
                        "worker {} got a stale message from worker {} tagged {:?} while \
                         collecting {:?}",
                        self.id, m.from, m.round, tag
                    )));
                }
            }
        }
        Ok(got.into_values().collect())
    }

    fn admit(
        tag: (u64, Phase),
        m: Message,
        expected: &BTreeSet<usize>,
        got: &mut BTreeMap<usize, Message>,
    ) -> Result<()> {
        if !expected.contains(&m.from) {
            return Err(RswrError::Protocol(format!(
                "unexpected sender {} for round {tag:?}",
                m.from
            )));
        }
        if got.insert(m.from, m).is_some() {
            return Err(RswrError::Protocol(format!(
                "duplicate message for round {tag:?}"
            )));
        }
        Ok(())
    }

    /// Predict phase and the sending half of the exchange phase.
    fn predict_and_exchange(&mut self, transport: &mut dyn Transport) -> Result<()> {
        let started = Instant::now();
        let k = self.plan.k;
        let remaining = (self.n_total - self.steps_done) as usize;
        let predict_steps = self.plan.predict_steps.min(remaining);
        let drive_for = |side: BoundarySide| -> Option<Vec<f64>> {
            if self.sub.neighbor(side).is_none() {
                Some(self.config.boundary_series(side, self.plan.start_step, predict_steps))
            } else {
                None
            }
        };
        let left_drive = drive_for(BoundarySide::Left);
        let right_drive = drive_for(BoundarySide::Right);
        let predicted = engine::predict(
            &self.sub,
            &self.state,
            predict_steps,
            left_drive.as_deref(),
            right_drive.as_deref(),
            self.dt,
            self.config.wave_speed,
        )?;
        self.timings.predict += started.elapsed().as_secs_f64();

        let started = Instant::now();
        let mut sent = BTreeMap::new();
        for (side, neighbor) in self.interface_neighbors() {
            let exchange = PredictExchange::from_prediction(&self.sub, &self.decomp, &predicted, side)?;
            sent.insert(exchange.pair, exchange.clone());
            transport.send(
                neighbor,
                Message {
                    round: (k, Phase::Exchange),
                    from: self.id,
                    kind: MessageKind::PredictExchange(exchange),
                },
            )?;
            self.field_sent += 1;
        }
        self.timings.exchange += started.elapsed().as_secs_f64();
        self.scratch = Some(WindowScratch {
            predict_steps,
            left_drive,
            right_drive,
            sent,
            received: BTreeMap::new(),
            my_vote: None,
            assembled: BTreeMap::new(),
            accepted: None,
        });
        Ok(())
    }

    /// Receiving half of the exchange phase, then span selection and the
    /// all-to-all vote broadcast.
    fn select_and_vote(&mut self, transport: &mut dyn Transport) -> Result<()> {
        let k = self.plan.k;
        let neighbors: BTreeSet<usize> =
            self.interface_neighbors().into_iter().map(|(_, n)| n).collect();

        let started = Instant::now();
        let messages = self.collect(transport, (k, Phase::Exchange), &neighbors)?;
        self.timings.exchange += started.elapsed().as_secs_f64();

        let started = Instant::now();
        let mut scratch = self
            .scratch
            .take()
            .ok_or_else(|| RswrError::Internal("select phase ran before predict".to_string()))?;
        for m in messages {
            let MessageKind::PredictExchange(exchange) = m.kind else {
                return Err(RswrError::Protocol(format!(
                    "worker {} expected a field exchange from worker {}, got {:?}",
                    self.id, m.from, m.round
                )));
            };
            if exchange.receiver != self.id {
                return Err(RswrError::Protocol(format!(
                    "exchange addressed to worker {} arrived at worker {}",
                    exchange.receiver, self.id
                )));
            }
            let mine = scratch.sent.get(&exchange.pair).ok_or_else(|| {
                RswrError::Protocol(format!(
                    "worker {} received an exchange for pair {:?} it does not share",
                    self.id, exchange.pair
                ))
            })?;
            if exchange.overlap_slab.n_steps() != scratch.predict_steps
                || exchange.overlap_first_node != mine.overlap_first_node
            {
                return Err(RswrError::Protocol(format!(
                    "exchange for pair {:?} disagrees with the local plan: {} steps from node \
                     {}, expected {} steps from node {}",
                    exchange.pair,
                    exchange.overlap_slab.n_steps(),
                    exchange.overlap_first_node,
                    scratch.predict_steps,
                    mine.overlap_first_node
                )));
            }
            scratch.received.insert(exchange.pair, exchange);
        }

        let mut sides = Vec::new();
        for (&pair, mine) in &scratch.sent {
            let theirs = scratch.received.get(&pair).ok_or_else(|| {
                RswrError::Protocol(format!("no exchange arrived for pair {pair:?}"))
            })?;
            let region = self
                .decomp
                .overlap_of(pair.0, pair.1)?
                .ok_or_else(|| {
                    RswrError::Internal(format!("pair {pair:?} has no overlap region"))
                })?;
            let running = self.pair_running_max.entry(pair).or_insert(0.0);
            *running = running
                .max(mine.overlap_slab.max_abs())
                .max(theirs.overlap_slab.max_abs());
            let epsilon = self.config.epsilon_rel * running.max(1.0);
            let selected = engine::select_span(&mine.overlap_slab, &theirs.overlap_slab, epsilon)?;
            let capped = engine::cap_span(selected, region.width_cells, self.config.safety_steps)?;
            sides.push(SideVote { pair, capped_span: capped, epsilon });
        }
        let value = sides.iter().map(|s| s.capped_span).min().unwrap_or(scratch.predict_steps);
        let vote = SpanVote { worker: self.id, value, sides };
        for peer in 0..self.decomp.n_subdomains() {
            if peer != self.id {
                transport.send(
                    peer,
                    Message {
                        round: (k, Phase::Select),
                        from: self.id,
                        kind: MessageKind::SpanVote(vote.clone()),
                    },
                )?;
                self.scalar_sent += 1;
            }
        }
        scratch.my_vote = Some(vote);
        self.scratch = Some(scratch);
        self.timings.select += started.elapsed().as_secs_f64();
        Ok(())
    }

    /// Assembles all votes, reproduces the global decision, and cross-checks
    /// it against worker 0's broadcast.
    fn reduce(&mut self, transport: &mut dyn Transport) -> Result<()> {
        let started = Instant::now();
        let k = self.plan.k;
        let n = self.decomp.n_subdomains();
        let others: BTreeSet<usize> = (0..n).filter(|&w| w != self.id).collect();
        let messages = self.collect(transport, (k, Phase::Select), &others)?;

        let mut scratch = self
            .scratch
            .take()
            .ok_or_else(|| RswrError::Internal("reduce phase ran before select".to_string()))?;
        let my_vote = scratch
            .my_vote
            .clone()
            .ok_or_else(|| RswrError::Internal("reduce phase found no local vote".to_string()))?;

        let mut vote_values: BTreeMap<usize, usize> = BTreeMap::new();
        let mut pair_counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut absorb = |vote: &SpanVote,
                          assembled: &mut BTreeMap<(usize, usize), SideVote>|
         -> Result<()> {
            vote_values.insert(vote.worker, vote.value);
            for side in &vote.sides {
                *pair_counts.entry(side.pair).or_insert(0) += 1;
                match assembled.get(&side.pair) {
                    None => {
                        assembled.insert(side.pair, *side);
                    }
                    Some(existing) => {
                        if existing.capped_span != side.capped_span
                            || existing.epsilon.to_bits() != side.epsilon.to_bits()
                        {
                            return Err(RswrError::Protocol(format!(
                                "pair {:?} was voted {} (eps {:e}) and {} (eps {:e}); the two \
                                 owners disagree",
                                side.pair,
                                existing.capped_span,
                                existing.epsilon,
                                side.capped_span,
                                side.epsilon
                            )));
                        }
                    }
                }
            }
            Ok(())
        };
        absorb(&my_vote, &mut scratch.assembled)?;
        for m in messages {
            let MessageKind::SpanVote(vote) = m.kind else {
                return Err(RswrError::Protocol(format!(
                    "worker {} expected a span vote from worker {}",
                    self.id, m.from
                )));
            };
            if vote.worker != m.from {
                return Err(RswrError::Protocol(format!(
                    "vote of worker {} delivered by worker {}",
                    vote.worker, m.from
                )));
            }
            absorb(&vote, &mut scratch.assembled)?;
        }
        drop(absorb);

        let expected_pairs: BTreeSet<(usize, usize)> =
            self.decomp.overlaps.iter().map(|o| o.pair).collect();
        let voted_pairs: BTreeSet<(usize, usize)> = scratch.assembled.keys().copied().collect();
        if voted_pairs != expected_pairs {
            return Err(RswrError::Protocol(format!(
                "votes cover pairs {voted_pairs:?} but the decomposition has {expected_pairs:?}"
            )));
        }
        if let Some((&pair, &count)) = pair_counts.iter().find(|(_, &c)| c != 2) {
            return Err(RswrError::Protocol(format!(
                "pair {pair:?} was voted by {count} workers, expected both owners"
            )));
        }

        let zero = scratch.assembled.values().find(|s| s.capped_span == 0).copied();
        let global = match zero {
            Some(_) => 0,
            None => {
                let spans: BTreeMap<(usize, usize), usize> = scratch
                    .assembled
                    .iter()
                    .map(|(&pair, side)| (pair, side.capped_span))
                    .collect();
                let global = engine::global_span(&spans, scratch.predict_steps)?;
                let reduced = min_reduce(&vote_values, n)?;
                if reduced != global {
                    return Err(RswrError::Protocol(format!(
                        "vote reduction gives {reduced} but the pair map gives {global}"
                    )));
                }
                global
            }
        };

        // Worker 0 broadcasts the decision; everyone else verifies it matches
        // the locally reproduced value, so a divergent reduction can never
        // commit different spans on different workers.
        if self.id == 0 {
            for peer in 1..n {
                transport.send(
                    peer,
                    Message {
                        round: (k, Phase::Reduce),
                        from: 0,
                        kind: MessageKind::GlobalSpanDecision { span: global },
                    },
                )?;
                self.scalar_sent += 1;
            }
        } else {
            let from_zero: BTreeSet<usize> = [0usize].into_iter().collect();
            let mut decision = self.collect(transport, (k, Phase::Reduce), &from_zero)?;
            let m = decision.pop().ok_or_else(|| {
                RswrError::Internal("decision collection returned nothing".to_string())
            })?;
            let MessageKind::GlobalSpanDecision { span } = m.kind else {
                return Err(RswrError::Protocol(
                    "expected the global span decision from worker 0".to_string(),
                ));
            };
            if span != global {
                return Err(RswrError::Protocol(format!(
                    "worker 0 decided span {span} but worker {} reproduced {global}",
                    self.id
                )));
            }
        }

        if global == 0 {
            let side = zero.expect("zero global span implies a zero side vote");
            return Err(RswrError::ZeroSpan {
                window: k,
                pair: side.pair,
                epsilon: side.epsilon,
                overlap_cells: self.config.overlap_cells,
            });
        }
        scratch.accepted = Some(global);
        self.scratch = Some(scratch);
        self.timings.reduce += started.elapsed().as_secs_f64();
        Ok(())
    }

    /// Commits the accepted span, emits the window to the driver, and plans
    /// the next window. Returns whether more windows remain.
    fn update_and_emit(&mut self, driver: &Sender<Message>) -> Result<bool> {
        let started = Instant::now();
        let k = self.plan.k;
        let scratch = self
            .scratch
            .take()
            .ok_or_else(|| RswrError::Internal("update phase ran before reduce".to_string()))?;
        let span = scratch
            .accepted
            .ok_or_else(|| RswrError::Internal("update phase found no accepted span".to_string()))?;

        let flux_for = |side: BoundarySide| {
            self.sub
                .neighbor(side)
                .and_then(|n| scratch.received.get(&self.pair_with(n)))
                .map(|ex| &ex.output_flux)
        };
        let (slab, new_state) = engine::update_window(
            &self.sub,
            &self.state,
            span,
            flux_for(BoundarySide::Left),
            flux_for(BoundarySide::Right),
            scratch.left_drive.as_deref(),
            scratch.right_drive.as_deref(),
            self.dt,
            self.config.wave_speed,
        )?;
        self.state = new_state;
        self.steps_done += span as u64;

        let summary = (self.id == 0).then(|| WindowSummary {
            k,
            start_step: self.plan.start_step,
            t_start: self.plan.t_start,
            predict_steps: scratch.predict_steps,
            accepted_span: span,
            pair_spans: scratch
                .assembled
                .values()
                .map(|s| PairSpan { pair: s.pair, capped_span: s.capped_span, epsilon: s.epsilon })
                .collect(),
        });
        driver
            .send(Message {
                round: (k, Phase::Update),
                from: self.id,
                kind: MessageKind::WindowResult { slab, summary },
            })
            .map_err(|_| RswrError::Protocol("run driver hung up".to_string()))?;

        self.plan = engine::advance_plan(&self.plan, span, self.config.beta, self.dt);
        let more = self.steps_done < self.n_total;
        self.timings.update += started.elapsed().as_secs_f64();
        if !more {
            driver
                .send(Message {
                    round: (k, Phase::Update),
                    from: self.id,
                    kind: MessageKind::TerminationNotice(TerminationNotice {
                        worker: self.id,
                        timings: self.timings,
                        field_messages_sent: self.field_sent,
                        scalar_messages_sent: self.scalar_sent,
                    }),
                })
                .map_err(|_| RswrError::Protocol("run driver hung up".to_string()))?;
        }
        Ok(more)
    }
}

/// Driver-side accumulation of worker output.
#[derive(Default)]
struct Assembly {
    slabs: BTreeMap<u64, BTreeMap<usize, FieldSlab>>,
    summaries: BTreeMap<u64, WindowSummary>,
    notices: BTreeMap<usize, TerminationNotice>,
    failures: Vec<(usize, RswrError)>,
}

impl Assembly {
    fn absorb(&mut self, message: Message) -> Result<()> {
        let k = message.round.0;
        let from = message.from;
        match message.kind {
            MessageKind::WindowResult { slab, summary } => {
                if self.slabs.entry(k).or_default().insert(from, slab).is_some() {
                    return Err(RswrError::Internal(format!(
                        "worker {from} delivered window {k} twice"
                    )));
                }
                if let Some(s) = summary {
                    self.summaries.insert(k, s);
                }
                Ok(())
            }
            MessageKind::TerminationNotice(notice) => {
                if self.notices.insert(from, notice).is_some() {
                    return Err(RswrError::Internal(format!(
                        "worker {from} terminated twice"
                    )));
                }
                Ok(())
            }
            MessageKind::Failure(error) => {
                self.failures.push((from, error));
                Ok(())
            }
            other => Err(RswrError::Internal(format!(
                "driver received a worker-to-worker message: {other:?}"
            ))),
        }
    }

    fn settled(&self, n_workers: usize) -> bool {
        let failed: BTreeSet<usize> = self.failures.iter().map(|(w, _)| *w).collect();
        self.notices.len() + failed.len() >= n_workers
    }

    fn into_output(
        mut self,
        decomp: &Decomposition,
        report_base: ReportBase,
    ) -> Result<RswrOutput> {
        if !self.failures.is_empty() {
            // All deterministic failures are identical across workers; prefer
            // the protocol-meaningful zero-span diagnosis over secondary
            // timeouts, then the lowest worker id.
            self.failures.sort_by_key(|(w, _)| *w);
            let idx = self
                .failures
                .iter()
                .position(|(_, e)| matches!(e, RswrError::ZeroSpan { .. }))
                .unwrap_or(0);
            return Err(self.failures.swap_remove(idx).1);
        }
        let n = decomp.n_subdomains();
        let n_windows = self.slabs.len() as u64;
        let mut windows = Vec::with_capacity(self.slabs.len());
        let mut summaries = Vec::with_capacity(self.slabs.len());
        for (i, (k, mut per_worker)) in std::mem::take(&mut self.slabs).into_iter().enumerate() {
            if k != i as u64 + 1 {
                return Err(RswrError::Internal(format!(
                    "window sequence has a gap: position {i} holds window {k}"
                )));
            }
            let parts = (0..n)
                .map(|w| {
                    per_worker.remove(&w).ok_or_else(|| {
                        RswrError::Internal(format!("window {k} lacks the slab of worker {w}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            windows.push(engine::stitch(&parts, decomp)?);
            summaries.push(self.summaries.remove(&k).ok_or_else(|| {
                RswrError::Internal(format!("window {k} has no summary"))
            })?);
        }

        let field_total: u64 = self.notices.values().map(|n| n.field_messages_sent).sum();
        let scalar_total: u64 = self.notices.values().map(|n| n.scalar_messages_sent).sum();
        let field_per_round = if n_windows > 0 {
            if field_total % n_windows != 0 {
                return Err(RswrError::Internal(format!(
                    "{field_total} field messages over {n_windows} rounds is not an integer rate"
                )));
            }
            (field_total / n_windows) as usize
        } else {
            2 * (n - 1)
        };
        let mut phase_seconds = PhaseTimings::default();
        for notice in self.notices.values() {
            phase_seconds.fold_max(&notice.timings);
        }
        Ok(RswrOutput {
            windows,
            report: RunReport {
                mode: report_base.mode,
                worker_threads: report_base.worker_threads,
                n_subdomains: n,
                n_total_steps: report_base.n_total,
                dt: report_base.dt,
                n_windows,
                windows: summaries,
                field_messages_per_round: field_per_round,
                field_messages_total: field_total,
                scalar_messages_total: scalar_total,
                phase_seconds,
            },
        })
    }
}

struct ReportBase {
    mode: RunMode,
    worker_threads: usize,
    n_total: u64,
    dt: f64,
}

fn run_single(mut workers: Vec<WorkerCore>, driver: Sender<Message>) -> Result<()> {
    let n = workers.len();
    let bus = Rc::new(RefCell::new(Bus { mailboxes: (0..n).map(|_| VecDeque::new()).collect() }));
    let mut transports: Vec<BusTransport> =
        (0..n).map(|id| BusTransport { id, bus: Rc::clone(&bus) }).collect();
    loop {
        for (w, t) in workers.iter_mut().zip(&mut transports) {
            w.predict_and_exchange(t)?;
        }
        for (w, t) in workers.iter_mut().zip(&mut transports) {
            w.select_and_vote(t)?;
        }
        for (w, t) in workers.iter_mut().zip(&mut transports) {
            w.reduce(t)?;
        }
        let mut more = None;
        for w in &mut workers {
            let this = w.update_and_emit(&driver)?;
            if *more.get_or_insert(this) != this {
                return Err(RswrError::Internal(
                    "workers disagree on whether the run is finished".to_string(),
                ));
            }
        }
        if more != Some(true) {
            return Ok(());
        }
    }
}

fn run_parallel(workers: Vec<WorkerCore>, driver: Sender<Message>) -> Result<Vec<std::thread::JoinHandle<()>>> {
    let n = workers.len();
    let mut senders = Vec::with_capacity(n);
    let mut inboxes = Vec::with_capacity(n);
    for _ in 0..n {
        let (tx, rx) = channel();
        senders.push(tx);
        inboxes.push(rx);
    }
    let mut handles = Vec::with_capacity(n);
    for (mut worker, inbox) in workers.into_iter().zip(inboxes) {
        let id = worker.id;
        let mut transport = ChannelTransport { id, peers: senders.clone(), inbox };
        let driver = driver.clone();
        let handle = std::thread::Builder::new()
            .name(format!("rswr-worker-{id}"))
            .spawn(move || {
                let fail = |worker: &WorkerCore, driver: &Sender<Message>, error: RswrError| {
                    let _ = driver.send(Message {
                        round: (worker.plan.k, Phase::Predict),
                        from: worker.id,
                        kind: MessageKind::Failure(error),
                    });
                };
                loop {
                    if let Err(e) = worker.predict_and_exchange(&mut transport) {
                        return fail(&worker, &driver, e);
                    }
                    if let Err(e) = worker.select_and_vote(&mut transport) {
                        return fail(&worker, &driver, e);
                    }
                    if let Err(e) = worker.reduce(&mut transport) {
                        return fail(&worker, &driver, e);
                    }
                    match worker.update_and_emit(&driver) {
                        Err(e) => return fail(&worker, &driver, e),
                        Ok(false) => return,
                        Ok(true) => {}
                    }
                }
            })?;
        handles.push(handle);
    }
    Ok(handles)
}

/// Runs the full protocol described by `config` and returns the committed
/// windows plus the run report. `t_end = 0` is a valid empty run.
///
/// Setting the environment variable `RSWR_THREADS=1` forces the
/// single-threaded scheduler even in parallel mode; the report records the
/// thread count actually used.
pub fn run_rswr(config: &RswrConfig) -> Result<RswrOutput> {
    config.validate()?;
    let grid = config.grid()?;
    let decomp = Arc::new(partition(&grid, config.n_subdomains, config.overlap_cells)?);
    let n = decomp.n_subdomains();
    let n_total = config.n_total_steps();
    let dt = config.dt();
    let threads_override = std::env::var("RSWR_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    let use_threads = config.mode == RunMode::Parallel && threads_override != Some(1);
    let base = ReportBase {
        mode: config.mode,
        worker_threads: if use_threads { n } else { 1 },
        n_total,
        dt,
    };
    if n_total == 0 {
        return Ok(RswrOutput {
            windows: vec![],
            report: RunReport {
                mode: base.mode,
                worker_threads: base.worker_threads,
                n_subdomains: n,
                n_total_steps: 0,
                dt,
                n_windows: 0,
                windows: vec![],
                field_messages_per_round: 2 * (n - 1),
                field_messages_total: 0,
                scalar_messages_total: 0,
                phase_seconds: PhaseTimings::default(),
            },
        });
    }

    let shared = Arc::new(config.clone());
    let workers: Vec<WorkerCore> = decomp
        .subdomains
        .iter()
        .map(|sub| WorkerCore::new(sub.clone(), Arc::clone(&decomp), Arc::clone(&shared), n_total))
        .collect();

    let (driver_tx, driver_rx) = channel();
    let mut assembly = Assembly::default();
    if use_threads {
        let handles = run_parallel(workers, driver_tx)?;
        while !assembly.settled(n) {
            match driver_rx.recv_timeout(DRIVER_RECV_TIMEOUT) {
                Ok(m) => assembly.absorb(m)?,
                Err(RecvTimeoutError::Timeout) => {
                    return Err(RswrError::Protocol(format!(
                        "run driver heard nothing for {DRIVER_RECV_TIMEOUT:?}"
                    )));
                }
                Err(RecvTimeoutError::Disconnected) => break,
            }
        }
        for handle in handles {
            handle
                .join()
                .map_err(|_| RswrError::Internal("a worker thread panicked".to_string()))?;
        }
        if !assembly.settled(n) {
            return Err(RswrError::Internal(
                "workers exited without termination notices".to_string(),
            ));
        }
    } else {
        run_single(workers, driver_tx)?;
        while let Ok(m) = driver_rx.try_recv() {
            assembly.absorb(m)?;
        }
    }
    assembly.into_output(&decomp, base)
}

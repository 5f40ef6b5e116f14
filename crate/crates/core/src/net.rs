//! Synchronous round engine for a fully connected `n`-node network.
//!
//! Every round, each live node hands the engine an [`Intent`]: the messages it
//! wants to send plus an optional annotation of the task it is working on. The
//! adversary sees all intents before delivery, picks which nodes crash during
//! the round and which of their outgoing messages are lost, and the engine then
//! delivers whatever survives. A receiver that gets nothing from a sender sees
//! `None`, the BOTTOM symbol.
//!
//! Crashes are permanent and the total number of crashes is capped at
//! `floor(alpha * n)`; an adversary asking for more is a bug and aborts the run.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::io;

use fixedbitset::FixedBitSet;
use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::adversary::{CrashAdversary, CrashDecision, Suppression};

/// One `ceil(log2 n)`-bit field of a message.
pub type Word = u64;

/// Node identifier in `1..=n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(u32);

impl NodeId {
    pub fn new(id: u32) -> Self {
        assert!(id >= 1, "node ids start at 1");
        NodeId(id)
    }

    pub fn from_index(index: usize) -> Self {
        NodeId(index as u32 + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Message body, a short sequence of words.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Payload(SmallVec<[Word; 4]>);

impl Payload {
    pub fn new(words: &[Word]) -> Self {
        Payload(SmallVec::from_slice(words))
    }

    pub fn word(w: Word) -> Self {
        Payload::new(&[w])
    }

    pub fn words(&self) -> &[Word] {
        &self.0
    }

    pub fn fields(&self) -> usize {
        self.0.len()
    }
}

impl From<&[Word]> for Payload {
    fn from(words: &[Word]) -> Self {
        Payload::new(words)
    }
}

/// A delivered point-to-point message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Message {
    pub sender: NodeId,
    pub receiver: NodeId,
    pub payload: Payload,
    pub bit_size: u64,
}

/// Which protocol layer a task attempt belongs to. Only used for reporting and
/// by adversaries that target specific tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    Plain,
    ComputeMessages,
    Inner,
    Outer,
}

/// A node's declaration that it is working on `task` this round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Attempt {
    pub layer: Layer,
    pub task: u64,
}

/// Everything a node wants to do in one round.
#[derive(Clone, Debug, Default)]
pub struct Intent {
    /// Sent to every other node (not to the sender itself).
    pub broadcast: Option<Payload>,
    /// Point-to-point messages. A node may address itself; that message never
    /// crosses the network but is still subject to the sender crashing.
    pub unicast: Vec<(NodeId, Payload)>,
    pub attempt: Option<Attempt>,
}

impl Intent {
    pub fn idle() -> Self {
        Intent::default()
    }

    pub fn is_silent(&self) -> bool {
        self.broadcast.is_none() && self.unicast.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimConfig {
    pub n: usize,
    pub alpha: f64,
    /// Fields per message per ordered pair per round.
    pub bandwidth_words: usize,
    pub seed: u64,
    pub max_rounds: u64,
}

impl SimConfig {
    pub fn new(n: usize, alpha: f64) -> Self {
        SimConfig {
            n,
            alpha,
            bandwidth_words: 4,
            seed: 0,
            max_rounds: 100_000,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_rounds(mut self, max_rounds: u64) -> Self {
        self.max_rounds = max_rounds;
        self
    }

    pub fn with_bandwidth(mut self, words: usize) -> Self {
        self.bandwidth_words = words;
        self
    }

    /// `floor(alpha * n)`.
    pub fn crash_budget(&self) -> usize {
        crash_budget(self.n, self.alpha)
    }

    /// Bits in one word, `ceil(log2 n)` (at least 1).
    pub fn word_bits(&self) -> u64 {
        ceil_log2(self.n).max(1) as u64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(SimError::InvalidConfig("n must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(SimError::InvalidConfig(format!(
                "alpha must lie in [0, 1), got {}",
                self.alpha
            )));
        }
        if self.bandwidth_words == 0 {
            return Err(SimError::InvalidConfig(
                "bandwidth_words must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub fn crash_budget(n: usize, alpha: f64) -> usize {
    // The small slack keeps products like 0.3 * 10 from landing just below an
    // integer.
    (alpha * n as f64 + 1e-9).floor() as usize
}

pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
    #[error("round {round}: node {sender} sent {fields} fields to {receiver}, limit is {limit}")]
    BandwidthExceeded {
        round: u64,
        sender: NodeId,
        receiver: NodeId,
        fields: usize,
        limit: usize,
    },
    #[error("round {round}: node {sender} sent more than one message to {receiver}")]
    DuplicateMessage {
        round: u64,
        sender: NodeId,
        receiver: NodeId,
    },
    #[error("round {round}: message addressed to unknown node {receiver}")]
    UnknownNode { round: u64, receiver: u32 },
    #[error("round {round}: adversary requested {requested} crashes with {remaining} left in the budget")]
    BudgetExceeded {
        round: u64,
        requested: usize,
        remaining: usize,
    },
    #[error("round {round}: adversary tried to crash node {node}, which is not alive")]
    InvalidCrash { round: u64, node: NodeId },
    #[error("no halt after {0} rounds")]
    MaxRoundsExceeded(u64),
}

/// Per-run traffic counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NetMetrics {
    pub rounds: u64,
    pub messages: u64,
    pub bits: u64,
    pub suppressed: u64,
    pub max_edge_bits: u64,
    pub crashes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub round: u64,
    pub sender: u32,
    pub receiver: u32,
    pub bits: u64,
    pub suppressed: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrashRow {
    pub round: u64,
    pub node: u32,
}

/// Full message-level record of a run. Only kept when enabled, since a single
/// broadcast round already produces `n(n-1)` rows.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub messages: Vec<TraceRow>,
    pub crashes: Vec<CrashRow>,
}

impl Trace {
    pub fn write_messages_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "sender", "receiver", "bits", "suppressed"])?;
        for row in &self.messages {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_crashes_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "node"])?;
        for row in &self.crashes {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn messages_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_messages_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn crashes_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_crashes_csv(&mut buf).expect("in-memory csv");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// What the adversary gets to look at before a round is delivered.
pub struct RoundView<'a> {
    pub round: u64,
    pub n: usize,
    pub alive: &'a FixedBitSet,
    pub intents: &'a [Intent],
    pub budget_left: usize,
    pub crashes_so_far: usize,
}

impl RoundView<'_> {
    pub fn is_alive(&self, node: NodeId) -> bool {
        self.alive.contains(node.index())
    }

    pub fn alive_count(&self) -> usize {
        self.alive.count_ones(..)
    }
}

/// The result of one round from the receivers' point of view.
#[derive(Debug)]
pub struct Delivery {
    round: u64,
    n: usize,
    broadcasts: Vec<Option<Payload>>,
    /// Suppressed receivers of each sender that crashed this round.
    suppressed: Vec<Option<FixedBitSet>>,
    inboxes: Vec<Vec<(NodeId, Payload)>>,
    lost_unicasts: Vec<(NodeId, NodeId)>,
    crashed: Vec<NodeId>,
}

impl Delivery {
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn crashed(&self) -> &[NodeId] {
        &self.crashed
    }

    /// Broadcast payload of `sender` as seen by `receiver`, `None` for BOTTOM.
    pub fn broadcast_from(&self, receiver: NodeId, sender: NodeId) -> Option<&Payload> {
        if receiver == sender {
            return None;
        }
        let payload = self.broadcasts[sender.index()].as_ref()?;
        if self.is_suppressed(sender, receiver) {
            None
        } else {
            Some(payload)
        }
    }

    /// Whether `sender`'s message to `receiver` was dropped because `sender`
    /// crashed this round.
    pub fn is_suppressed(&self, sender: NodeId, receiver: NodeId) -> bool {
        self.suppressed[sender.index()]
            .as_ref()
            .is_some_and(|s| s.contains(receiver.index()))
    }

    /// Receivers that `sender`'s broadcast did not reach (only non-empty for
    /// senders that crashed this round).
    pub fn suppressed_receivers(&self, sender: NodeId) -> Option<&FixedBitSet> {
        self.suppressed[sender.index()].as_ref()
    }

    pub fn has_broadcast(&self, sender: NodeId) -> bool {
        self.broadcasts[sender.index()].is_some()
    }

    pub fn broadcast_payload(&self, sender: NodeId) -> Option<&Payload> {
        self.broadcasts[sender.index()].as_ref()
    }

    /// Point-to-point messages received by `receiver`, ordered by sender.
    pub fn unicasts(&self, receiver: NodeId) -> &[(NodeId, Payload)] {
        &self.inboxes[receiver.index()]
    }

    /// Whatever `receiver` got from `sender` this round.
    pub fn from(&self, receiver: NodeId, sender: NodeId) -> Option<&Payload> {
        if let Some(p) = self.broadcast_from(receiver, sender) {
            return Some(p);
        }
        let inbox = &self.inboxes[receiver.index()];
        inbox
            .binary_search_by_key(&sender, |(s, _)| *s)
            .ok()
            .map(|i| &inbox[i].1)
    }

    pub fn inbox(&self, receiver: NodeId) -> Inbox<'_> {
        Inbox {
            me: receiver,
            delivery: self,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Receiver-side view of a [`Delivery`].
pub struct Inbox<'a> {
    me: NodeId,
    delivery: &'a Delivery,
}

impl Inbox<'_> {
    pub fn me(&self) -> NodeId {
        self.me
    }

    /// `None` is BOTTOM.
    pub fn get(&self, sender: NodeId) -> Option<&Payload> {
        self.delivery.from(self.me, sender)
    }

    pub fn messages(&self) -> Vec<(NodeId, &Payload)> {
        (0..self.delivery.n)
            .map(NodeId::from_index)
            .filter_map(|s| self.get(s).map(|p| (s, p)))
            .collect()
    }
}

/// Materialized record of one round, as returned by [`Network::run_round`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundOutcome {
    pub round: u64,
    pub delivered: Vec<Message>,
    pub crashed_this_round: Vec<NodeId>,
    pub suppressed: Vec<(NodeId, NodeId)>,
}

/// Per-node state machine driven one round at a time.
pub trait NodeProgram {
    fn intent(&mut self, round: u64) -> Intent;
    fn deliver(&mut self, round: u64, inbox: Inbox<'_>);
}

/// The round engine.
pub struct Network {
    config: SimConfig,
    alive: FixedBitSet,
    round: u64,
    metrics: NetMetrics,
    trace: Option<Trace>,
    digest: std::collections::hash_map::DefaultHasher,
}

impl Network {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let mut alive = FixedBitSet::with_capacity(config.n);
        alive.insert_range(..);
        Ok(Network {
            config,
            alive,
            round: 0,
            metrics: NetMetrics::default(),
            trace: None,
            digest: Default::default(),
        })
    }

    /// Start keeping a message-level trace.
    pub fn record_trace(&mut self) {
        self.trace.get_or_insert_with(Trace::default);
    }

    pub fn trace(&self) -> Option<&Trace> {
        self.trace.as_ref()
    }

    pub fn take_trace(&mut self) -> Option<Trace> {
        self.trace.take()
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n
    }

    /// Rounds executed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn metrics(&self) -> &NetMetrics {
        &self.metrics
    }

    pub fn is_alive(&self, node: NodeId) -> bool {
        self.alive.contains(node.index())
    }

    pub fn alive(&self) -> &FixedBitSet {
        &self.alive
    }

    pub fn alive_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.alive.ones().map(NodeId::from_index)
    }

    pub fn crashes(&self) -> usize {
        self.metrics.crashes
    }

    pub fn budget_left(&self) -> usize {
        self.config.crash_budget() - self.metrics.crashes
    }

    /// Order-sensitive fingerprint of every intent and crash decision so far.
    pub fn digest(&self) -> u64 {
        self.digest.finish()
    }

    /// Run one round. `intents` is indexed by node; entries of crashed nodes
    /// are ignored.
    pub fn exchange(
        &mut self,
        mut intents: Vec<Intent>,
        adversary: &mut dyn CrashAdversary,
    ) -> Result<Delivery, SimError> {
        let n = self.config.n;
        assert_eq!(intents.len(), n, "one intent per node");
        let round = self.round + 1;
        for (i, intent) in intents.iter_mut().enumerate() {
            if !self.alive.contains(i) {
                *intent = Intent::idle();
            }
        }
        self.validate_intents(round, &mut intents)?;

        let decision = {
            let view = RoundView {
                round,
                n,
                alive: &self.alive,
                intents: &intents,
                budget_left: self.budget_left(),
                crashes_so_far: self.metrics.crashes,
            };
            adversary.decide(&view)
        };
        let suppressed = self.apply_decision(round, &decision)?;

        let word_bits = self.config.word_bits();
        let mut broadcasts = Vec::with_capacity(n);
        let mut inboxes: Vec<Vec<(NodeId, Payload)>> = vec![Vec::new(); n];
        let mut trace_rows = Vec::new();
        let mut lost_unicasts = Vec::new();
        let tracing = self.trace.is_some();

        round.hash(&mut self.digest);
        for (s, intent) in intents.into_iter().enumerate() {
            let sender = NodeId::from_index(s);
            let sup = suppressed[s].as_ref();
            if let Some(p) = &intent.broadcast {
                let bits = p.fields() as u64 * word_bits;
                let dropped = sup.map_or(0, |b| b.count_ones(..) - usize::from(b.contains(s)));
                let sent = (n - 1 - dropped) as u64;
                self.metrics.messages += sent;
                self.metrics.bits += sent * bits;
                self.metrics.suppressed += dropped as u64;
                if sent > 0 {
                    self.metrics.max_edge_bits = self.metrics.max_edge_bits.max(bits);
                }
                (s, 0u8, p.words()).hash(&mut self.digest);
                if tracing {
                    for r in (0..n).filter(|&r| r != s) {
                        let lost = sup.is_some_and(|b| b.contains(r));
                        trace_rows.push(TraceRow {
                            round,
                            sender: sender.get(),
                            receiver: r as u32 + 1,
                            bits,
                            suppressed: lost as u8,
                        });
                    }
                }
            }
            for (receiver, payload) in intent.unicast {
                let bits = payload.fields() as u64 * word_bits;
                let lost = sup.is_some_and(|b| b.contains(receiver.index()));
                (s, 1u8, receiver.get(), payload.words(), lost).hash(&mut self.digest);
                if tracing {
                    trace_rows.push(TraceRow {
                        round,
                        sender: sender.get(),
                        receiver: receiver.get(),
                        bits,
                        suppressed: lost as u8,
                    });
                }
                if lost {
                    self.metrics.suppressed += 1;
                    lost_unicasts.push((sender, receiver));
                    continue;
                }
                self.metrics.messages += 1;
                self.metrics.bits += bits;
                self.metrics.max_edge_bits = self.metrics.max_edge_bits.max(bits);
                inboxes[receiver.index()].push((sender, payload));
            }
            broadcasts.push(intent.broadcast);
        }

        let crashed: Vec<NodeId> = decision.crashes.iter().map(|(v, _)| *v).collect();
        for v in &crashed {
            (2u8, v.get()).hash(&mut self.digest);
        }
        if let Some(trace) = self.trace.as_mut() {
            trace_rows.sort_by_key(|r| (r.sender, r.receiver));
            trace.messages.extend(trace_rows);
            let mut sorted = crashed.clone();
            sorted.sort();
            trace.crashes.extend(sorted.iter().map(|v| CrashRow {
                round,
                node: v.get(),
            }));
        }

        self.round = round;
        self.metrics.rounds = round;
        Ok(Delivery {
            round,
            n,
            broadcasts,
            suppressed,
            inboxes,
            lost_unicasts,
            crashed,
        })
    }

    /// Run a round with no traffic at all. The adversary still gets its turn.
    pub fn idle_round(&mut self, adversary: &mut dyn CrashAdversary) -> Result<Delivery, SimError> {
        self.exchange(vec![Intent::idle(); self.config.n], adversary)
    }

    fn validate_intents(&self, round: u64, intents: &mut [Intent]) -> Result<(), SimError> {
        let n = self.config.n;
        let limit = self.config.bandwidth_words;
        let mut seen = FixedBitSet::with_capacity(n);
        for (s, intent) in intents.iter_mut().enumerate() {
            let sender = NodeId::from_index(s);
            if let Some(p) = &intent.broadcast {
                if p.fields() > limit {
                    let receiver = NodeId::from_index(if s == 0 && n > 1 { 1 } else { 0 });
                    return Err(SimError::BandwidthExceeded {
                        round,
                        sender,
                        receiver,
                        fields: p.fields(),
                        limit,
                    });
                }
            }
            if intent.unicast.is_empty() {
                continue;
            }
            intent.unicast.sort_by_key(|(r, _)| *r);
            seen.clear();
            for (receiver, payload) in &intent.unicast {
                if receiver.get() == 0 || receiver.index() >= n {
                    return Err(SimError::UnknownNode {
                        round,
                        receiver: receiver.get(),
                    });
                }
                if payload.fields() > limit {
                    return Err(SimError::BandwidthExceeded {
                        round,
                        sender,
                        receiver: *receiver,
                        fields: payload.fields(),
                        limit,
                    });
                }
                let r = receiver.index();
                let clashes_broadcast = intent.broadcast.is_some() && r != s;
                if seen.contains(r) || clashes_broadcast {
                    return Err(SimError::DuplicateMessage {
                        round,
                        sender,
                        receiver: *receiver,
                    });
                }
                seen.insert(r);
            }
        }
        Ok(())
    }

    fn apply_decision(
        &mut self,
        round: u64,
        decision: &CrashDecision,
    ) -> Result<Vec<Option<FixedBitSet>>, SimError> {
        let n = self.config.n;
        let remaining = self.budget_left();
        if decision.crashes.len() > remaining {
            return Err(SimError::BudgetExceeded {
                round,
                requested: decision.crashes.len(),
                remaining,
            });
        }
        let mut suppressed: Vec<Option<FixedBitSet>> = vec![None; n];
        for (node, how) in &decision.crashes {
            let i = node.index();
            if node.get() == 0 || i >= n || !self.alive.contains(i) || suppressed[i].is_some() {
                return Err(SimError::InvalidCrash { round, node: *node });
            }
            let mut set = FixedBitSet::with_capacity(n);
            match how {
                Suppression::All => set.insert_range(..),
                Suppression::None => {}
                Suppression::Only(rs) => {
                    for r in rs.iter().filter(|r| r.get() >= 1 && r.index() < n) {
                        set.insert(r.index());
                    }
                }
                Suppression::AllExcept(rs) => {
                    set.insert_range(..);
                    for r in rs.iter().filter(|r| r.get() >= 1 && r.index() < n) {
                        set.set(r.index(), false);
                    }
                }
            }
            suppressed[i] = Some(set);
        }
        for (node, _) in &decision.crashes {
            self.alive.set(node.index(), false);
        }
        self.metrics.crashes += decision.crashes.len();
        Ok(suppressed)
    }

    /// Drive a set of [`NodeProgram`]s through one round. `programs[i]` is the
    /// program of node `i + 1`; crashed nodes are never called.
    pub fn run_round<P: NodeProgram>(
        &mut self,
        programs: &mut [P],
        adversary: &mut dyn CrashAdversary,
    ) -> Result<RoundOutcome, SimError> {
        assert_eq!(programs.len(), self.config.n, "one program per node");
        let round = self.round + 1;
        let intents: Vec<Intent> = programs
            .iter_mut()
            .enumerate()
            .map(|(i, p)| {
                if self.alive.contains(i) {
                    p.intent(round)
                } else {
                    Intent::idle()
                }
            })
            .collect();
        let delivery = self.exchange(intents, adversary)?;

        let n = self.config.n;
        let word_bits = self.config.word_bits();
        let message = |s: NodeId, r: NodeId, p: &Payload| Message {
            sender: s,
            receiver: r,
            payload: p.clone(),
            bit_size: p.fields() as u64 * word_bits,
        };
        let mut delivered = Vec::new();
        let mut suppressed = Vec::new();
        for r in (0..n).map(NodeId::from_index) {
            for (s, p) in delivery.unicasts(r) {
                delivered.push(message(*s, r, p));
            }
        }
        for s in (0..n).map(NodeId::from_index) {
            let Some(p) = delivery.broadcast_payload(s) else {
                continue;
            };
            for r in (0..n).map(NodeId::from_index).filter(|&r| r != s) {
                if delivery.is_suppressed(s, r) {
                    suppressed.push((s, r));
                } else {
                    delivered.push(message(s, r, p));
                }
            }
        }
        suppressed.extend(delivery.lost_unicasts.iter().copied());
        delivered.sort_by_key(|m| (m.sender, m.receiver));
        suppressed.sort();
        let mut crashed_this_round = delivery.crashed.clone();
        crashed_this_round.sort();
        for (i, program) in programs.iter_mut().enumerate() {
            if self.alive.contains(i) {
                program.deliver(round, delivery.inbox(NodeId::from_index(i)));
            }
        }
        Ok(RoundOutcome {
            round,
            delivered,
            crashed_this_round,
            suppressed,
        })
    }

    /// Run rounds until `halt` accepts the trace so far. `halt` is checked
    /// before every round, so a predicate that is immediately true yields an
    /// empty trace.
    pub fn run_until<P, F>(
        &mut self,
        programs: &mut [P],
        adversary: &mut dyn CrashAdversary,
        mut halt: F,
    ) -> Result<Vec<RoundOutcome>, SimError>
    where
        P: NodeProgram,
        F: FnMut(&[RoundOutcome]) -> bool,
    {
        let mut trace = Vec::new();
        loop {
            if halt(&trace) {
                return Ok(trace);
            }
            if trace.len() as u64 >= self.config.max_rounds {
                return Err(SimError::MaxRoundsExceeded(self.config.max_rounds));
            }
            trace.push(self.run_round(programs, adversary)?);
        }
    }
}

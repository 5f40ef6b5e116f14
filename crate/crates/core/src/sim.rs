//! Crash-resilient simulation of a fault-free congested-clique algorithm.
//!
//! Every simulated round `r` runs two task-completion instances over the `n`
//! node identities:
//!
//! 1. *compute messages*: rebuild the state of identity `l` from storage,
//!    derive the messages `M_l(r)` it sends, and store them;
//! 2. *deliver*: a node adopts identity `l`, announces it, and then all nodes
//!    jointly run a nested instance whose tasks push `M_j(r)[l]` to whoever
//!    adopted `l`. The adopter stores what it collected as `S_l(r)`.
//!
//! All executors of a slot work in lockstep so their store and retrieve
//! traffic never competes for an edge.

use fixedbitset::FixedBitSet;
use serde::Serialize;
use thiserror::Error;

use crate::adversary::CrashAdversary;
use crate::ecc::{CodecError, CodecParams};
use crate::net::{Attempt, Intent, Layer, Network, NodeId, Payload};
use crate::store::{Key, Storage, StoreError};
use crate::task::{
    instance_rounds, run_task_completion, FamilyCache, SlotExecutor, TcError, TcOutcome, TcParams,
};

pub type Sym = u64;

/// A deterministic `T`-round congested-clique algorithm in which every node
/// sends one symbol from `[0, n)` to every node in every round.
///
/// The state of a node after round `r` is folded from its input and the
/// messages it received in rounds `1..=r`; the state is `n` symbols long.
pub trait SimulatedAlgorithm {
    fn name(&self) -> &'static str;
    fn rounds(&self) -> usize;
    /// `S_l(0)`, `n` symbols.
    fn input(&self, n: usize, node: NodeId) -> Vec<Sym>;
    fn init_state(&self, n: usize, node: NodeId, input: &[Sym]) -> Vec<Sym>;
    /// State after round `round` from the state before it and `S_l(round)`.
    fn fold_state(
        &self,
        n: usize,
        node: NodeId,
        round: usize,
        state: &[Sym],
        received: &[Sym],
    ) -> Vec<Sym>;
    /// `M_l(round)`: entry `j` goes to node `j + 1`.
    fn messages(&self, n: usize, node: NodeId, round: usize, state: &[Sym]) -> Vec<Sym>;
}

/// Round 1: everyone sends its id to everyone. Output is the received vector.
#[derive(Clone, Debug)]
pub struct Echo {
    pub rounds: usize,
}

impl SimulatedAlgorithm for Echo {
    fn name(&self) -> &'static str {
        "echo"
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn input(&self, n: usize, node: NodeId) -> Vec<Sym> {
        vec![node.index() as Sym; n]
    }

    fn init_state(&self, _n: usize, _node: NodeId, input: &[Sym]) -> Vec<Sym> {
        input.to_vec()
    }

    fn fold_state(
        &self,
        _n: usize,
        _node: NodeId,
        _round: usize,
        _state: &[Sym],
        received: &[Sym],
    ) -> Vec<Sym> {
        received.to_vec()
    }

    fn messages(&self, _n: usize, _node: NodeId, _round: usize, state: &[Sym]) -> Vec<Sym> {
        state.to_vec()
    }
}

/// A token per node moves `r` places forward in round `r`.
#[derive(Clone, Debug)]
pub struct TokenExchange {
    pub rounds: usize,
}

impl SimulatedAlgorithm for TokenExchange {
    fn name(&self) -> &'static str {
        "token"
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn input(&self, n: usize, node: NodeId) -> Vec<Sym> {
        let mut s = vec![0; n];
        s[0] = (node.index() as Sym * 7 + 3) % n as Sym;
        s
    }

    fn init_state(&self, _n: usize, _node: NodeId, input: &[Sym]) -> Vec<Sym> {
        input.to_vec()
    }

    fn fold_state(
        &self,
        n: usize,
        node: NodeId,
        round: usize,
        state: &[Sym],
        received: &[Sym],
    ) -> Vec<Sym> {
        let from = (node.index() + n - round % n) % n;
        let mut s = state.to_vec();
        s[0] = received[from];
        s[round % n] = (s[round % n] + received[from]) % n as Sym;
        s
    }

    fn messages(&self, n: usize, node: NodeId, round: usize, state: &[Sym]) -> Vec<Sym> {
        let mut m = vec![0; n];
        m[(node.index() + round) % n] = state[0];
        m
    }
}

/// Every round each node broadcasts a value and replaces it by the sum of
/// the values of all nodes up to itself.
#[derive(Clone, Debug)]
pub struct PrefixSum {
    pub rounds: usize,
}

impl SimulatedAlgorithm for PrefixSum {
    fn name(&self) -> &'static str {
        "prefix-sum"
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn input(&self, n: usize, node: NodeId) -> Vec<Sym> {
        let mut s = vec![0; n];
        s[0] = node.index() as Sym;
        s
    }

    fn init_state(&self, _n: usize, _node: NodeId, input: &[Sym]) -> Vec<Sym> {
        input.to_vec()
    }

    fn fold_state(
        &self,
        n: usize,
        node: NodeId,
        _round: usize,
        state: &[Sym],
        received: &[Sym],
    ) -> Vec<Sym> {
        let mut s = state.to_vec();
        s[0] = received[..=node.index()].iter().sum::<Sym>() % n as Sym;
        s
    }

    fn messages(&self, n: usize, _node: NodeId, _round: usize, state: &[Sym]) -> Vec<Sym> {
        vec![state[0]; n]
    }
}

/// Round 1 spreads all ids; later rounds forward ids learned earlier, each
/// receiver getting a different one.
#[derive(Clone, Debug)]
pub struct AllPairs {
    pub rounds: usize,
}

impl SimulatedAlgorithm for AllPairs {
    fn name(&self) -> &'static str {
        "all-pairs"
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn input(&self, n: usize, node: NodeId) -> Vec<Sym> {
        vec![node.index() as Sym; n]
    }

    fn init_state(&self, _n: usize, _node: NodeId, input: &[Sym]) -> Vec<Sym> {
        input.to_vec()
    }

    fn fold_state(
        &self,
        _n: usize,
        _node: NodeId,
        _round: usize,
        _state: &[Sym],
        received: &[Sym],
    ) -> Vec<Sym> {
        received.to_vec()
    }

    fn messages(&self, n: usize, node: NodeId, _round: usize, state: &[Sym]) -> Vec<Sym> {
        (0..n).map(|j| state[(j + node.index()) % n]).collect()
    }
}

/// Built-in algorithms with their default round counts.
pub fn corpus() -> Vec<Box<dyn SimulatedAlgorithm>> {
    vec![
        Box::new(Echo { rounds: 1 }),
        Box::new(TokenExchange { rounds: 3 }),
        Box::new(PrefixSum { rounds: 4 }),
        Box::new(AllPairs { rounds: 2 }),
    ]
}

/// Looks up a corpus algorithm by name, optionally overriding its round count.
pub fn algorithm_by_name(name: &str, rounds: Option<usize>) -> Option<Box<dyn SimulatedAlgorithm>> {
    let alg: Box<dyn SimulatedAlgorithm> = match name {
        "echo" => Box::new(Echo {
            rounds: rounds.unwrap_or(1),
        }),
        "token" | "token-exchange" => Box::new(TokenExchange {
            rounds: rounds.unwrap_or(3),
        }),
        "prefix-sum" | "prefix" => Box::new(PrefixSum {
            rounds: rounds.unwrap_or(4),
        }),
        "all-pairs" => Box::new(AllPairs {
            rounds: rounds.unwrap_or(2),
        }),
        _ => return None,
    };
    Some(alg)
}

/// Crash-free execution: `(messages, received)` with `messages[r][l]` being
/// `M_l(r)` (index 0 unused) and `received[r][l]` being `S_l(r)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reference {
    pub messages: Vec<Vec<Vec<Sym>>>,
    pub received: Vec<Vec<Vec<Sym>>>,
}

impl Reference {
    /// `M_j(T)` for every node, or the inputs when `T = 0`.
    pub fn outputs(&self) -> &[Vec<Sym>] {
        let t = self.messages.len() - 1;
        if t == 0 {
            &self.received[0]
        } else {
            &self.messages[t]
        }
    }
}

pub fn reference_run(alg: &dyn SimulatedAlgorithm, n: usize) -> Reference {
    let t = alg.rounds();
    let nodes: Vec<NodeId> = (0..n).map(NodeId::from_index).collect();
    let inputs: Vec<Vec<Sym>> = nodes.iter().map(|&v| alg.input(n, v)).collect();
    let mut state: Vec<Vec<Sym>> = nodes
        .iter()
        .map(|&v| alg.init_state(n, v, &inputs[v.index()]))
        .collect();
    let mut messages = vec![Vec::new()];
    let mut received = vec![inputs];
    for r in 1..=t {
        let m: Vec<Vec<Sym>> = nodes
            .iter()
            .map(|&v| alg.messages(n, v, r, &state[v.index()]))
            .collect();
        let s: Vec<Vec<Sym>> = (0..n).map(|l| (0..n).map(|i| m[i][l]).collect()).collect();
        for &v in &nodes {
            state[v.index()] = alg.fold_state(n, v, r, &state[v.index()], &s[v.index()]);
        }
        messages.push(m);
        received.push(s);
    }
    Reference { messages, received }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlobKind {
    /// `S_l(r)`: what `l` received in round `r` (its input for `r = 0`).
    Received = 0,
    /// `M_l(r)`.
    Messages = 1,
    /// Folded state after round `r`, compact mode only.
    State = 2,
}

/// Fixed numbering of all stored blobs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyMap {
    pub n: usize,
}

impl KeyMap {
    pub fn key(&self, kind: BlobKind, node: NodeId, round: usize) -> Key {
        ((round * self.n + node.index()) * 3 + kind as usize) as Key
    }

    pub fn decode(&self, key: Key) -> (BlobKind, NodeId, usize) {
        let key = key as usize;
        let kind = match key % 3 {
            0 => BlobKind::Received,
            1 => BlobKind::Messages,
            _ => BlobKind::State,
        };
        let rest = key / 3;
        (kind, NodeId::from_index(rest % self.n), rest / self.n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimParams {
    pub alpha: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Rebuild state from a stored compact state instead of the full history.
    pub compact: bool,
    /// Compare every stored blob with the crash-free run after each phase.
    pub check_phases: bool,
}

impl SimParams {
    pub const DEFAULT_B: usize = 4;
    pub const DEFAULT_EPSILON: f64 = 0.3;

    pub fn new(alpha: f64, seed: u64) -> Self {
        SimParams {
            alpha,
            b: Self::DEFAULT_B,
            epsilon: Self::DEFAULT_EPSILON,
            seed,
            compact: false,
            check_phases: true,
        }
    }

    fn tc(&self, n: usize) -> TcParams {
        TcParams::new(n, self.b, self.epsilon, self.seed)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error(transparent)]
    Tc(#[from] TcError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Counters shared by the executors of one simulation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SimStats {
    pub inner_instances: u64,
    /// Nested instances whose ledger checks failed (should stay zero).
    pub inner_violations: u64,
    /// Adopters that survived but did not collect every entry.
    pub incomplete_collections: u64,
    pub decode_failures: u64,
    /// Receivers that got two different values for the same entry.
    pub delivery_conflicts: u64,
}

fn attempt(layer: Layer, task: Option<u64>) -> Option<Attempt> {
    task.map(|task| Attempt { layer, task })
}

/// Rounds of one compute-messages slot for round `r`.
pub fn compute_slot_rounds(parts: usize, r: usize, compact: bool) -> u64 {
    let retrieve = 1 + parts as u64;
    let store = parts as u64;
    if compact {
        let retrieves = if r >= 2 { 2 } else { 1 };
        retrieves * retrieve + 2 * store
    } else {
        r as u64 * retrieve + store
    }
}

/// Rounds of one deliver slot of the nested instance.
pub fn inner_slot_rounds(parts: usize) -> u64 {
    1 + parts as u64 + 1
}

/// Rounds of one adopt-and-collect slot.
pub fn outer_slot_rounds(n: usize, parts: usize, b: usize, epsilon: f64) -> u64 {
    1 + instance_rounds(n, epsilon, b, inner_slot_rounds(parts)) + parts as u64
}

/// Closed-form total rounds of a simulation.
pub fn simulation_rounds(n: usize, t: usize, parts: usize, params: &SimParams) -> u64 {
    (1..=t)
        .map(|r| {
            instance_rounds(
                n,
                params.epsilon,
                params.b,
                compute_slot_rounds(parts, r, params.compact),
            ) + instance_rounds(
                n,
                params.epsilon,
                params.b,
                outer_slot_rounds(n, parts, params.b, params.epsilon),
            )
        })
        .sum()
}

/// Executor of compute-messages tasks for one round `r`; task `l` is
/// identity `l`.
pub struct ComputeMessages<'a> {
    pub alg: &'a dyn SimulatedAlgorithm,
    pub storage: &'a mut Storage,
    pub keys: KeyMap,
    pub round: usize,
    pub compact: bool,
    pub stats: &'a mut SimStats,
}

impl ComputeMessages<'_> {
    fn parts(&self) -> usize {
        self.storage.codec().parts(self.keys.n)
    }

    fn retrieve_all(
        &mut self,
        net: &mut Network,
        adversary: &mut dyn CrashAdversary,
        assignment: &[Option<u64>],
        kind: BlobKind,
        round: usize,
        out: &mut [Option<Vec<Vec<Sym>>>],
    ) -> Result<(), TcError> {
        let keys: Vec<Option<Key>> = assignment
            .iter()
            .map(|t| t.map(|l| self.keys.key(kind, NodeId::new(l as u32), round)))
            .collect();
        let parts = self.parts();
        let hook = |v: usize| attempt(Layer::ComputeMessages, assignment[v]);
        let got = self
            .storage
            .multi_retrieve(net, adversary, &keys, parts, &hook)?;
        for (v, res) in got.into_iter().enumerate() {
            match (res, out[v].as_mut()) {
                (Some(Ok(blob)), Some(acc)) => acc.push(blob),
                (Some(Err(_)), Some(_)) => {
                    self.stats.decode_failures += 1;
                    out[v] = None;
                }
                (None, _) => out[v] = None,
                _ => {}
            }
        }
        Ok(())
    }
}

impl SlotExecutor for ComputeMessages<'_> {
    fn slot_rounds(&self) -> u64 {
        compute_slot_rounds(self.parts(), self.round, self.compact)
    }

    fn run_slot(
        &mut self,
        net: &mut Network,
        adversary: &mut dyn CrashAdversary,
        assignment: &[Option<u64>],
    ) -> Result<Vec<bool>, TcError> {
        let n = self.keys.n;
        let r = self.round;
        let mut fetched: Vec<Option<Vec<Vec<Sym>>>> =
            assignment.iter().map(|t| t.map(|_| Vec::new())).collect();
        if self.compact {
            if r >= 2 {
                self.retrieve_all(
                    net,
                    adversary,
                    assignment,
                    BlobKind::State,
                    r - 2,
                    &mut fetched,
                )?;
            }
            self.retrieve_all(
                net,
                adversary,
                assignment,
                BlobKind::Received,
                r - 1,
                &mut fetched,
            )?;
        } else {
            for j in 0..r {
                self.retrieve_all(
                    net,
                    adversary,
                    assignment,
                    BlobKind::Received,
                    j,
                    &mut fetched,
                )?;
            }
        }

        // blobs[v] = (M_l(r), state to store alongside in compact mode)
        let mut blobs: Vec<Option<(Vec<Sym>, Vec<Sym>)>> = vec![None; n];
        for (v, got) in fetched.iter().enumerate() {
            let (Some(l), Some(got)) = (assignment[v], got) else {
                continue;
            };
            let node = NodeId::new(l as u32);
            let state = if self.compact {
                if r >= 2 {
                    self.alg.fold_state(n, node, r - 1, &got[0], &got[1])
                } else {
                    self.alg.init_state(n, node, &got[0])
                }
            } else {
                let mut s = self.alg.init_state(n, node, &got[0]);
                for (j, received) in got.iter().enumerate().skip(1) {
                    s = self.alg.fold_state(n, node, j, &s, received);
                }
                s
            };
            blobs[v] = Some((self.alg.messages(n, node, r, &state), state));
        }

        let parts = self.parts();
        let hook = |v: usize| attempt(Layer::ComputeMessages, assignment[v]);
        let jobs: Vec<Option<(Key, &[Sym])>> = blobs
            .iter()
            .zip(assignment)
            .map(|(b, t)| match (b, t) {
                (Some((m, _)), Some(l)) => Some((
                    self.keys.key(BlobKind::Messages, NodeId::new(*l as u32), r),
                    &m[..],
                )),
                _ => None,
            })
            .collect();
        let mut ok = self
            .storage
            .multi_store(net, adversary, &jobs, parts, &hook)?;
        if self.compact {
            let jobs: Vec<Option<(Key, &[Sym])>> = blobs
                .iter()
                .zip(assignment)
                .map(|(b, t)| match (b, t) {
                    (Some((_, s)), Some(l)) => Some((
                        self.keys
                            .key(BlobKind::State, NodeId::new(*l as u32), r - 1),
                        &s[..],
                    )),
                    _ => None,
                })
                .collect();
            let ok2 = self
                .storage
                .multi_store(net, adversary, &jobs, parts, &hook)?;
            ok.iter_mut().zip(ok2).for_each(|(a, b)| *a &= b);
        }
        Ok(ok)
    }
}

/// Executor of the nested delivery tasks; task `l'` pushes `M_l'(r)[l_u]` to
/// every node `u` that announced identity `l_u`.
pub struct Deliver<'a> {
    pub storage: &'a mut Storage,
    pub keys: KeyMap,
    pub round: usize,
    /// `identities[x][u]`: the identity node `x` heard `u` announce.
    pub identities: &'a [Vec<Option<u32>>],
    /// `collected[u][l']`: what `u` received for source `l'`.
    pub collected: Vec<Vec<Option<Sym>>>,
    pub stats: &'a mut SimStats,
}

impl SlotExecutor for Deliver<'_> {
    fn slot_rounds(&self) -> u64 {
        inner_slot_rounds(self.storage.codec().parts(self.keys.n))
    }

    fn run_slot(
        &mut self,
        net: &mut Network,
        adversary: &mut dyn CrashAdversary,
        assignment: &[Option<u64>],
    ) -> Result<Vec<bool>, TcError> {
        let n = self.keys.n;
        let parts = self.storage.codec().parts(n);
        let keys: Vec<Option<Key>> = assignment
            .iter()
            .map(|t| {
                t.map(|l| {
                    self.keys
                        .key(BlobKind::Messages, NodeId::new(l as u32), self.round)
                })
            })
            .collect();
        let hook = |v: usize| attempt(Layer::Inner, assignment[v]);
        let fetched = self
            .storage
            .multi_retrieve(net, adversary, &keys, parts, &hook)?;

        let mut ok = vec![false; n];
        let intents = (0..n)
            .map(|x| {
                let mut intent = Intent {
                    attempt: hook(x),
                    ..Intent::default()
                };
                if let (Some(src), Some(res)) = (assignment[x], &fetched[x]) {
                    match res {
                        Ok(m) => {
                            ok[x] = true;
                            intent.unicast = self.identities[x]
                                .iter()
                                .enumerate()
                                .filter_map(|(u, id)| {
                                    id.map(|id| {
                                        (
                                            NodeId::from_index(u),
                                            Payload::new(&[src, m[id as usize - 1]]),
                                        )
                                    })
                                })
                                .collect();
                        }
                        Err(_) => self.stats.decode_failures += 1,
                    }
                }
                intent
            })
            .collect();
        let delivery = net.exchange(intents, adversary)?;
        for u in net.alive().ones() {
            for (_, p) in delivery.unicasts(NodeId::from_index(u)) {
                let w = p.words();
                let slot = &mut self.collected[u][w[0] as usize - 1];
                if slot.is_some_and(|old| old != w[1]) {
                    self.stats.delivery_conflicts += 1;
                }
                *slot = Some(w[1]);
            }
        }
        Ok(ok)
    }
}

/// Executor of adopt-and-collect tasks for one round `r`; task `l` is
/// identity `l`.
pub struct AdoptAndCollect<'a> {
    pub storage: &'a mut Storage,
    pub keys: KeyMap,
    pub round: usize,
    pub inner: TcParams,
    pub cache: FamilyCache,
    pub stats: &'a mut SimStats,
    /// Outcomes of the nested instances, when requested.
    pub inner_outcomes: Option<Vec<TcOutcome>>,
}

impl SlotExecutor for AdoptAndCollect<'_> {
    fn slot_rounds(&self) -> u64 {
        let n = self.keys.n;
        outer_slot_rounds(
            n,
            self.storage.codec().parts(n),
            self.inner.b,
            self.inner.epsilon,
        )
    }

    fn run_slot(
        &mut self,
        net: &mut Network,
        adversary: &mut dyn CrashAdversary,
        assignment: &[Option<u64>],
    ) -> Result<Vec<bool>, TcError> {
        let n = self.keys.n;
        let parts = self.storage.codec().parts(n);
        let hook = |v: usize| attempt(Layer::Outer, assignment[v]);

        let intents = (0..n)
            .map(|v| Intent {
                broadcast: assignment[v].map(Payload::word),
                attempt: hook(v),
                ..Intent::default()
            })
            .collect();
        let delivery = net.exchange(intents, adversary)?;
        let identities: Vec<Vec<Option<u32>>> = (0..n)
            .map(|x| {
                (0..n)
                    .map(|u| {
                        if x == u {
                            assignment[x].map(|l| l as u32)
                        } else {
                            delivery
                                .broadcast_from(NodeId::from_index(x), NodeId::from_index(u))
                                .map(|p| p.words()[0] as u32)
                        }
                    })
                    .collect()
            })
            .collect();

        let mut deliver = Deliver {
            storage: &mut *self.storage,
            keys: self.keys,
            round: self.round,
            identities: &identities,
            collected: vec![vec![None; n]; n],
            stats: &mut *self.stats,
        };
        let outcome =
            run_task_completion(net, adversary, &self.inner, &mut deliver, &mut self.cache)?;
        let collected = std::mem::take(&mut deliver.collected);
        self.stats.inner_instances += 1;
        if !(outcome.sound() && outcome.progress_ok() && outcome.fully_verified) {
            self.stats.inner_violations += 1;
        }
        if let Some(all) = self.inner_outcomes.as_mut() {
            all.push(outcome);
        }

        let mut blobs: Vec<Option<Vec<Sym>>> = vec![None; n];
        for v in 0..n {
            if assignment[v].is_none() || !net.is_alive(NodeId::from_index(v)) {
                continue;
            }
            let full: Option<Vec<Sym>> = collected[v].iter().copied().collect();
            match full {
                Some(s) => blobs[v] = Some(s),
                None => self.stats.incomplete_collections += 1,
            }
        }
        let jobs: Vec<Option<(Key, &[Sym])>> = blobs
            .iter()
            .zip(assignment)
            .map(|(b, t)| match (b, t) {
                (Some(s), Some(l)) => Some((
                    self.keys
                        .key(BlobKind::Received, NodeId::new(*l as u32), self.round),
                    &s[..],
                )),
                _ => None,
            })
            .collect();
        Ok(self
            .storage
            .multi_store(net, adversary, &jobs, parts, &hook)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    ComputeMessages,
    Deliver,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::ComputeMessages => "compute",
            Phase::Deliver => "deliver",
        }
    }
}

/// One phase of one simulated round.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub round: usize,
    pub phase: Phase,
    pub rounds: u64,
    pub crashes: usize,
    pub iterations: usize,
    pub sound: bool,
    pub progress_ok: bool,
    /// Stored blobs of this phase match the crash-free run; `None` when not
    /// checked.
    pub matches_reference: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimOutcome {
    pub algorithm: &'static str,
    pub n: usize,
    pub t: usize,
    pub rounds: u64,
    pub phases: Vec<PhaseRow>,
    pub stats: SimStats,
    /// `M_j(T)` decoded from the surviving nodes' storage.
    pub outputs: Vec<Vec<Sym>>,
    /// `S_j(T)` decoded the same way.
    pub received: Vec<Vec<Sym>>,
    pub reference_outputs: Vec<Vec<Sym>>,
    pub reference_received: Vec<Vec<Sym>>,
    pub store_conflicts: u64,
}

impl SimOutcome {
    /// Outputs and final received vectors equal the crash-free run.
    pub fn matches_reference(&self) -> bool {
        self.outputs == self.reference_outputs && self.received == self.reference_received
    }

    pub fn phases_ok(&self) -> bool {
        self.phases
            .iter()
            .all(|p| p.sound && p.progress_ok && p.matches_reference != Some(false))
    }
}

/// Blobs of `kind` for round `r` of every identity, decoded from the live
/// nodes' storage.
pub fn read_round(
    storage: &Storage,
    keys: KeyMap,
    kind: BlobKind,
    r: usize,
    alive: &FixedBitSet,
) -> Result<Vec<Vec<Sym>>, CodecError> {
    (0..keys.n)
        .map(|l| storage.read_back(keys.key(kind, NodeId::from_index(l), r), keys.n, alive))
        .collect()
}

/// Stores every input `S_l(0)` as if before round 1.
pub fn preload_inputs(
    storage: &mut Storage,
    keys: KeyMap,
    alg: &dyn SimulatedAlgorithm,
) -> Result<(), StoreError> {
    for l in 0..keys.n {
        let node = NodeId::from_index(l);
        storage.preload(
            keys.key(BlobKind::Received, node, 0),
            &alg.input(keys.n, node),
        )?;
    }
    Ok(())
}

/// Runs the full simulation of `alg` on `net`.
pub fn simulate(
    net: &mut Network,
    adversary: &mut dyn CrashAdversary,
    alg: &dyn SimulatedAlgorithm,
    params: &SimParams,
) -> Result<SimOutcome, SimulationError> {
    let n = net.n();
    let t = alg.rounds();
    let codec = CodecParams::for_network(n, params.alpha)?;
    let mut storage = Storage::new(codec);
    let keys = KeyMap { n };
    preload_inputs(&mut storage, keys, alg)?;
    let reference = reference_run(alg, n);
    let tc = params.tc(n);
    let mut stats = SimStats::default();
    let mut cache = FamilyCache::new();
    let mut phases = Vec::new();
    let start = net.round();

    for r in 1..=t {
        let before = (net.round(), net.crashes());
        let mut exec = ComputeMessages {
            alg,
            storage: &mut storage,
            keys,
            round: r,
            compact: params.compact,
            stats: &mut stats,
        };
        let out = run_task_completion(net, adversary, &tc, &mut exec, &mut cache)?;
        let matches = params.check_phases.then(|| {
            read_round(&storage, keys, BlobKind::Messages, r, net.alive())
                .ok()
                .as_ref()
                == Some(&reference.messages[r])
        });
        phases.push(phase_row(
            r,
            Phase::ComputeMessages,
            before,
            net,
            &out,
            matches,
        ));

        let before = (net.round(), net.crashes());
        let mut exec = AdoptAndCollect {
            storage: &mut storage,
            keys,
            round: r,
            inner: tc.clone(),
            cache: FamilyCache::new(),
            stats: &mut stats,
            inner_outcomes: None,
        };
        let out = run_task_completion(net, adversary, &tc, &mut exec, &mut cache)?;
        let matches = params.check_phases.then(|| {
            read_round(&storage, keys, BlobKind::Received, r, net.alive())
                .ok()
                .as_ref()
                == Some(&reference.received[r])
        });
        phases.push(phase_row(r, Phase::Deliver, before, net, &out, matches));
    }

    let (outputs, received) = if t == 0 {
        let inputs = read_round(&storage, keys, BlobKind::Received, 0, net.alive())?;
        (inputs.clone(), inputs)
    } else {
        (
            read_round(&storage, keys, BlobKind::Messages, t, net.alive())?,
            read_round(&storage, keys, BlobKind::Received, t, net.alive())?,
        )
    };
    Ok(SimOutcome {
        algorithm: alg.name(),
        n,
        t,
        rounds: net.round() - start,
        phases,
        stats,
        outputs,
        received,
        reference_outputs: reference.outputs().to_vec(),
        reference_received: reference.received[t].clone(),
        store_conflicts: storage.conflicts(),
    })
}

fn phase_row(
    r: usize,
    phase: Phase,
    before: (u64, usize),
    net: &Network,
    out: &TcOutcome,
    matches: Option<bool>,
) -> PhaseRow {
    PhaseRow {
        round: r,
        phase,
        rounds: net.round() - before.0,
        crashes: net.crashes() - before.1,
        iterations: out.iterations.len(),
        sound: out.sound(),
        progress_ok: out.progress_ok(),
        matches_reference: matches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AdversarySpec, NoCrashes};
    use crate::net::SimConfig;

    #[test]
    fn key_map_is_a_bijection() {
        let keys = KeyMap { n: 5 };
        let mut seen = std::collections::HashSet::new();
        for r in 0..4 {
            for l in 0..5 {
                for kind in [BlobKind::Received, BlobKind::Messages, BlobKind::State] {
                    let k = keys.key(kind, NodeId::from_index(l), r);
                    assert!(seen.insert(k));
                    assert_eq!(keys.decode(k), (kind, NodeId::from_index(l), r));
                }
            }
        }
    }

    #[test]
    fn reference_echo() {
        let r = reference_run(&Echo { rounds: 1 }, 4);
        assert_eq!(
            r.outputs(),
            &[
                vec![0, 0, 0, 0],
                vec![1, 1, 1, 1],
                vec![2, 2, 2, 2],
                vec![3, 3, 3, 3]
            ]
        );
        assert_eq!(r.received[1][2], vec![0, 1, 2, 3]);
    }

    #[test]
    fn zero_rounds_returns_inputs() {
        let mut net = Network::new(SimConfig::new(8, 0.25)).unwrap();
        let out = simulate(
            &mut net,
            &mut NoCrashes,
            &Echo { rounds: 0 },
            &SimParams::new(0.25, 1),
        )
        .unwrap();
        assert_eq!(out.rounds, 0);
        assert!(out.matches_reference());
    }

    #[test]
    fn echo_without_crashes() {
        let n = 8;
        let mut net = Network::new(SimConfig::new(n, 0.25)).unwrap();
        let params = SimParams::new(0.25, 1);
        let out = simulate(&mut net, &mut NoCrashes, &Echo { rounds: 1 }, &params).unwrap();
        assert!(out.matches_reference() && out.phases_ok());
        let parts = CodecParams::for_network(n, 0.25).unwrap().parts(n);
        assert_eq!(out.rounds, simulation_rounds(n, 1, parts, &params));
    }

    #[test]
    fn corpus_under_suite_small() {
        let n = 8;
        for alg in corpus() {
            for spec in AdversarySpec::suite() {
                let mut net = Network::new(SimConfig::new(n, 0.25).with_seed(3)).unwrap();
                let mut adv = spec.build(n, 0.25, 3);
                let out = simulate(&mut net, &mut adv, alg.as_ref(), &SimParams::new(0.25, 3))
                    .unwrap_or_else(|e| panic!("{} {spec}: {e}", alg.name()));
                assert!(out.matches_reference(), "{} {spec}", alg.name());
                assert!(out.phases_ok(), "{} {spec}", alg.name());
                assert_eq!(out.store_conflicts, 0);
                assert_eq!(out.stats.delivery_conflicts, 0);
            }
        }
    }

    #[test]
    fn compact_mode_matches() {
        let n = 8;
        let params = SimParams {
            compact: true,
            ..SimParams::new(0.25, 2)
        };
        let alg = PrefixSum { rounds: 4 };
        let mut net = Network::new(SimConfig::new(n, 0.25)).unwrap();
        let mut adv = AdversarySpec::Frontload.build(n, 0.25, 2);
        let out = simulate(&mut net, &mut adv, &alg, &params).unwrap();
        assert!(out.matches_reference() && out.phases_ok());
        let parts = CodecParams::for_network(n, 0.25).unwrap().parts(n);
        assert_eq!(out.rounds, simulation_rounds(n, 4, parts, &params));
    }
}

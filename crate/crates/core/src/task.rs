//! Crash-resilient task completion.
//!
//! Every iteration guesses how many tasks are still unverified (`k_i`), hands
//! each node the tasks whose covering set contains it, gives everyone a fixed
//! window of `2B` slots to work through its unknown tasks, and then has every
//! node broadcast whether it finished its list. A node learns that a task is
//! done only through such a report, so knowledge is always sound; the covering
//! family's load balance is what makes the unverified count shrink.
//!
//! Execution is split into slots of a fixed number of rounds. What happens
//! inside a slot is up to a [`SlotExecutor`]; the driver only decides who
//! attempts which task.

use std::collections::HashMap;
use std::rc::Rc;

use fixedbitset::FixedBitSet;
use serde::Serialize;
use thiserror::Error;

use crate::adversary::CrashAdversary;
use crate::covering::{
    certify_load_balance, generate_with_retry, BalanceCertificate, FamilyError, FamilyParams,
};
use crate::net::{Attempt, Intent, Layer, Network, NodeId, Payload, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TcError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("{missing} task(s) still unverified after the last iteration (batch {batch})")]
    IncompleteAfterSchedule { batch: usize, missing: usize },
    #[error("slot took {actual} rounds, expected {expected}")]
    SlotLength { expected: u64, actual: u64 },
    #[error("invalid task-completion parameters: {0}")]
    InvalidParams(String),
    #[error("executor failure: {0}")]
    Executor(String),
}

/// `ceil((1 - eps)^(i-1) m)` for every `i` whose unrounded value is still at
/// least one.
pub fn iteration_schedule(m: usize, epsilon: f64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        let x = (1.0 - epsilon).powi(i) * m as f64;
        if x < 1.0 - 1e-9 || m == 0 {
            return out;
        }
        out.push(ceil_tol(x));
        i += 1;
    }
}

fn ceil_tol(x: f64) -> usize {
    (x - 1e-9).ceil().max(0.0) as usize
}

/// The iterations actually run: the schedule cut right after the first
/// `k_i <= 2B`.
pub fn effective_schedule(m: usize, epsilon: f64, b: usize) -> Vec<usize> {
    let mut s = iteration_schedule(m, epsilon);
    if let Some(pos) = s.iter().position(|&k| k <= 2 * b) {
        s.truncate(pos + 1);
    }
    s
}

/// Total rounds of one instance: iterations times `2 B R + 1`.
pub fn instance_rounds(m: usize, epsilon: f64, b: usize, slot_rounds: u64) -> u64 {
    effective_schedule(m, epsilon, b).len() as u64 * (2 * b as u64 * slot_rounds + 1)
}

/// Drives one slot of task execution.
pub trait SlotExecutor {
    /// Rounds every slot takes, regardless of who works.
    fn slot_rounds(&self) -> u64;

    /// Runs one slot. `assignment[v]` is the (1-based, instance-local) task
    /// node `v + 1` attempts, if any. Returns, per node, whether its attempt
    /// succeeded; the driver additionally requires the node to be alive.
    fn run_slot(
        &mut self,
        net: &mut Network,
        adversary: &mut dyn CrashAdversary,
        assignment: &[Option<u64>],
    ) -> Result<Vec<bool>, TcError>;
}

/// Tasks with no observable effect that take `rounds` rounds each and complete
/// exactly when their executor survives them.
#[derive(Clone, Debug)]
pub struct AbstractTasks {
    pub rounds: u64,
    /// Added to local ids to form the global task id seen by adversaries.
    pub id_offset: u64,
}

impl AbstractTasks {
    pub fn new(rounds: u64) -> Self {
        AbstractTasks {
            rounds,
            id_offset: 0,
        }
    }
}

impl SlotExecutor for AbstractTasks {
    fn slot_rounds(&self) -> u64 {
        self.rounds
    }

    fn run_slot(
        &mut self,
        net: &mut Network,
        adversary: &mut dyn CrashAdversary,
        assignment: &[Option<u64>],
    ) -> Result<Vec<bool>, TcError> {
        for _ in 0..self.rounds {
            let intents = assignment
                .iter()
                .map(|t| Intent {
                    attempt: t.map(|t| Attempt {
                        layer: Layer::Plain,
                        task: self.id_offset + t,
                    }),
                    ..Intent::default()
                })
                .collect();
            net.exchange(intents, adversary)?;
        }
        Ok(vec![true; assignment.len()])
    }
}

/// Per-node task sets `T_{i,v}` for one `k`.
#[derive(Debug)]
pub struct Assignment {
    /// Bitset over local task indices (0-based) per node.
    pub node_tasks: Vec<FixedBitSet>,
    pub certificate: Option<BalanceCertificate>,
}

/// `(n, m, k, B, eps bits, seed, certification samples)`.
type FamilyKey = (usize, usize, usize, usize, u64, u64, usize);

/// Families are a pure function of their parameters, so instances that share
/// `(n, m, k, B, eps, seed)` share one.
#[derive(Default)]
pub struct FamilyCache {
    map: HashMap<FamilyKey, Rc<Assignment>>,
}

impl FamilyCache {
    pub fn new() -> Self {
        FamilyCache::default()
    }

    pub fn get(
        &mut self,
        params: FamilyParams,
        certify_samples: usize,
    ) -> Result<Rc<Assignment>, FamilyError> {
        let key = (
            params.n,
            params.m,
            params.k,
            params.b,
            params.epsilon.to_bits(),
            params.seed,
            certify_samples,
        );
        if let Some(a) = self.map.get(&key) {
            return Ok(a.clone());
        }
        let family = generate_with_retry(params, 16)?;
        let certificate = if certify_samples > 0 {
            Some(certify_load_balance(
                &family,
                params.k,
                certify_samples,
                params.seed,
            )?)
        } else {
            None
        };
        let mut node_tasks = vec![FixedBitSet::with_capacity(params.m); params.n];
        for t in 1..=params.m {
            for &v in family.member_indices(t) {
                node_tasks[v as usize].insert(t - 1);
            }
        }
        let a = Rc::new(Assignment {
            node_tasks,
            certificate,
        });
        self.map.insert(key, a.clone());
        Ok(a)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TcParams {
    /// Number of tasks in this instance.
    pub m: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Samples for load-balance certification of every family used; zero
    /// skips certification.
    pub certify_samples: usize,
    /// Batch number, only used for labelling.
    pub batch: usize,
}

impl TcParams {
    pub fn new(m: usize, b: usize, epsilon: f64, seed: u64) -> Self {
        TcParams {
            m,
            b,
            epsilon,
            seed,
            certify_samples: 0,
            batch: 0,
        }
    }

    fn validate(&self, n: usize) -> Result<(), TcError> {
        if self.m == 0 || self.m > n {
            return Err(TcError::InvalidParams(format!(
                "need 1 <= m <= n, got m = {}, n = {n}",
                self.m
            )));
        }
        if self.b == 0 {
            return Err(TcError::InvalidParams("B must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(TcError::InvalidParams(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Ledger snapshot at the start of an iteration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub batch: usize,
    pub iteration: usize,
    pub k: usize,
    /// Tasks not known to every live node.
    pub unverified: usize,
    pub alive: usize,
    pub crashes_so_far: usize,
    /// Network round at which the iteration starts.
    pub rounds_cumulative: u64,
    /// Every live node's knowledge is a subset of the completed tasks.
    pub sound: bool,
    pub all_tasks_branch: bool,
    /// Live nodes whose report this iteration was 1.
    pub reported_done: usize,
}

impl IterationRecord {
    pub fn progress_ok(&self) -> bool {
        self.unverified <= self.k
    }
}

/// Ground truth about task executions; never consulted by node logic.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TaskLedger {
    /// Round of first completion per task (0-based local index).
    pub completed_at: Vec<Option<u64>>,
    pub attempts: u64,
    pub completions: u64,
}

impl TaskLedger {
    fn new(m: usize) -> Self {
        TaskLedger {
            completed_at: vec![None; m],
            ..TaskLedger::default()
        }
    }

    pub fn completed(&self) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(self.completed_at.len());
        for (i, c) in self.completed_at.iter().enumerate() {
            if c.is_some() {
                b.insert(i);
            }
        }
        b
    }

    pub fn completed_count(&self) -> usize {
        self.completed_at.iter().filter(|c| c.is_some()).count()
    }

    /// Tasks not completed by the end of `round`.
    pub fn incomplete_after(&self, round: u64) -> usize {
        self.completed_at
            .iter()
            .filter(|c| c.is_none_or(|r| r > round))
            .count()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TcOutcome {
    pub params: TcParams,
    pub rounds: u64,
    pub slot_rounds: u64,
    pub iterations: Vec<IterationRecord>,
    pub ledger: TaskLedger,
    /// Final knowledge check: every live node knows every task.
    pub fully_verified: bool,
    pub final_sound: bool,
    #[serde(skip)]
    pub certificates: Vec<(usize, BalanceCertificate)>,
}

impl TcOutcome {
    pub fn progress_ok(&self) -> bool {
        self.iterations.iter().all(IterationRecord::progress_ok)
    }

    pub fn sound(&self) -> bool {
        self.final_sound && self.iterations.iter().all(|r| r.sound)
    }
}

/// Runs one instance on tasks `1..=params.m`. Fails with
/// [`TcError::IncompleteAfterSchedule`] if some live node is still missing a
/// task at the end, which can only happen when the model is violated.
pub fn run_task_completion(
    net: &mut Network,
    adversary: &mut dyn CrashAdversary,
    params: &TcParams,
    executor: &mut dyn SlotExecutor,
    cache: &mut FamilyCache,
) -> Result<TcOutcome, TcError> {
    let n = net.n();
    params.validate(n)?;
    let m = params.m;
    let b = params.b;
    let window = 2 * b;
    let slot_rounds = executor.slot_rounds();
    let start_round = net.round();
    let mut ledger = TaskLedger::new(m);
    let mut knowledge = vec![FixedBitSet::with_capacity(m); n];
    let mut all_tasks = FixedBitSet::with_capacity(m);
    all_tasks.insert_range(..);
    let mut records = Vec::new();
    let mut certificates = Vec::new();

    for (i, &k) in effective_schedule(m, params.epsilon, b).iter().enumerate() {
        let all_branch = k <= window;
        let assignment = if all_branch {
            None
        } else {
            let fp = FamilyParams::new(n, m, k, b, params.epsilon, params.seed);
            let a = cache.get(fp, params.certify_samples)?;
            if let Some(c) = &a.certificate {
                certificates.push((k, c.clone()));
            }
            Some(a)
        };
        let tasks_of = |v: usize| -> &FixedBitSet {
            match &assignment {
                Some(a) => &a.node_tasks[v],
                None => &all_tasks,
            }
        };

        let mut record = snapshot(net, &knowledge, &ledger, params.batch, i + 1, k, all_branch);

        // U_{i,v} in increasing id order; a node may only get through `window`.
        let mut lists: Vec<Vec<u64>> = vec![Vec::new(); n];
        let mut overflow = vec![false; n];
        for v in net.alive().ones() {
            let mut it = tasks_of(v).difference(&knowledge[v]);
            lists[v].extend(it.by_ref().take(window).map(|t| t as u64 + 1));
            overflow[v] = it.next().is_some();
        }
        let mut finished = vec![true; n];
        for slot in 0..window {
            let assignment: Vec<Option<u64>> = (0..n)
                .map(|v| {
                    (net.is_alive(NodeId::from_index(v)))
                        .then(|| lists[v].get(slot).copied())
                        .flatten()
                })
                .collect();
            if assignment.iter().all(Option::is_none) {
                // Idle slots still take their rounds and give the adversary its turns.
                for _ in 0..slot_rounds {
                    net.idle_round(adversary)?;
                }
                continue;
            }
            let before = net.round();
            let ok = executor.run_slot(net, adversary, &assignment)?;
            let took = net.round() - before;
            if took != slot_rounds {
                return Err(TcError::SlotLength {
                    expected: slot_rounds,
                    actual: took,
                });
            }
            for (v, t) in assignment.iter().enumerate() {
                let Some(t) = *t else { continue };
                ledger.attempts += 1;
                if ok[v] && net.is_alive(NodeId::from_index(v)) {
                    ledger.completions += 1;
                    let slot = &mut ledger.completed_at[t as usize - 1];
                    if slot.is_none() {
                        *slot = Some(net.round());
                    }
                } else {
                    finished[v] = false;
                }
            }
        }

        // Report round.
        let reports: Vec<bool> = (0..n)
            .map(|v| net.is_alive(NodeId::from_index(v)) && finished[v] && !overflow[v])
            .collect();
        let intents = reports
            .iter()
            .enumerate()
            .map(|(v, &s)| Intent {
                broadcast: net
                    .is_alive(NodeId::from_index(v))
                    .then(|| Payload::word(s as u64)),
                ..Intent::default()
            })
            .collect();
        let delivery = net.exchange(intents, adversary)?;
        record.reported_done = reports.iter().filter(|&&s| s).count();
        records.push(record);

        // Senders whose report reached everyone contribute to a shared union.
        let mut shared = FixedBitSet::with_capacity(m);
        let mut partial = Vec::new();
        for (u, &s) in reports.iter().enumerate() {
            if !s {
                continue;
            }
            let sender = NodeId::from_index(u);
            match delivery.suppressed_receivers(sender) {
                None => shared.union_with(tasks_of(u)),
                Some(_) => partial.push(sender),
            }
        }
        for v in net.alive().ones() {
            let receiver = NodeId::from_index(v);
            let c = &mut knowledge[v];
            c.union_with(&shared);
            if reports[v] {
                c.union_with(tasks_of(v));
            }
            for &u in &partial {
                if delivery
                    .broadcast_from(receiver, u)
                    .is_some_and(|p| p.words()[0] == 1)
                {
                    c.union_with(tasks_of(u.index()));
                }
            }
        }
        if all_branch {
            break;
        }
    }

    let last = snapshot(
        net,
        &knowledge,
        &ledger,
        params.batch,
        records.len() + 1,
        0,
        false,
    );
    let outcome = TcOutcome {
        params: params.clone(),
        rounds: net.round() - start_round,
        slot_rounds,
        iterations: records,
        ledger,
        fully_verified: last.unverified == 0,
        final_sound: last.sound,
        certificates,
    };
    if last.unverified > 0 {
        return Err(TcError::IncompleteAfterSchedule {
            batch: params.batch,
            missing: last.unverified,
        });
    }
    Ok(outcome)
}

fn snapshot(
    net: &Network,
    knowledge: &[FixedBitSet],
    ledger: &TaskLedger,
    batch: usize,
    iteration: usize,
    k: usize,
    all_tasks_branch: bool,
) -> IterationRecord {
    let m = ledger.completed_at.len();
    let completed = ledger.completed();
    let mut common = FixedBitSet::with_capacity(m);
    common.insert_range(..);
    let mut sound = true;
    for v in net.alive().ones() {
        common.intersect_with(&knowledge[v]);
        sound &= knowledge[v].is_subset(&completed);
    }
    IterationRecord {
        batch,
        iteration,
        k,
        unverified: m - common.count_ones(..),
        alive: net.alive().count_ones(..),
        crashes_so_far: net.crashes(),
        rounds_cumulative: net.round(),
        sound,
        all_tasks_branch,
        reported_done: 0,
    }
}

/// Outcome of a batched run over `M` abstract tasks.
#[derive(Clone, Debug, Serialize)]
pub struct BatchedOutcome {
    pub total_tasks: usize,
    pub batch_size: usize,
    pub rounds: u64,
    pub batches: Vec<TcOutcome>,
}

impl BatchedOutcome {
    pub fn iterations(&self) -> impl Iterator<Item = &IterationRecord> {
        self.batches.iter().flat_map(|b| b.iterations.iter())
    }

    pub fn all_verified(&self) -> bool {
        self.batches.iter().all(|b| b.fully_verified)
    }

    pub fn completed_tasks(&self) -> usize {
        self.batches
            .iter()
            .map(|b| b.ledger.completed_count())
            .sum()
    }

    pub fn progress_ok(&self) -> bool {
        self.batches.iter().all(TcOutcome::progress_ok)
    }

    pub fn sound(&self) -> bool {
        self.batches.iter().all(TcOutcome::sound)
    }

    pub fn iteration_count(&self) -> usize {
        self.batches.iter().map(|b| b.iterations.len()).sum()
    }

    /// Tasks (global ids are `1..=M`) not completed by the end of `round`.
    pub fn incomplete_after(&self, round: u64) -> usize {
        self.batches
            .iter()
            .map(|b| b.ledger.incomplete_after(round))
            .sum::<usize>()
            + (self.total_tasks - self.batches.iter().map(|b| b.params.m).sum::<usize>())
    }
}

/// Runs `M` abstract tasks of `r` rounds each in contiguous batches of
/// `batch_size`, one instance after another on the same network.
#[allow(clippy::too_many_arguments)]
pub fn run_batched(
    net: &mut Network,
    adversary: &mut dyn CrashAdversary,
    total_tasks: usize,
    batch_size: usize,
    r: u64,
    b: usize,
    epsilon: f64,
    seed: u64,
    cache: &mut FamilyCache,
) -> Result<BatchedOutcome, TcError> {
    if total_tasks == 0 || batch_size == 0 || r == 0 {
        return Err(TcError::InvalidParams(
            "M, batch size and R must be positive".into(),
        ));
    }
    let start = net.round();
    let count = total_tasks.div_ceil(batch_size);
    let mut batches = Vec::with_capacity(count);
    for batch in 0..count {
        let lo = batch * batch_size;
        let m = batch_size.min(total_tasks - lo);
        let mut exec = AbstractTasks {
            rounds: r,
            id_offset: lo as u64,
        };
        let params = TcParams {
            batch: batch + 1,
            ..TcParams::new(m, b, epsilon, seed)
        };
        batches.push(run_task_completion(
            net, adversary, &params, &mut exec, cache,
        )?);
    }
    Ok(BatchedOutcome {
        total_tasks,
        batch_size,
        rounds: net.round() - start,
        batches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AdversarySpec, CrashDecision, NoCrashes, Suppression};
    use crate::net::{RoundView, SimConfig};
    use proptest::prelude::*;

    #[test]
    fn schedules() {
        assert_eq!(&iteration_schedule(100, 0.1)[..3], &[100, 90, 81]);
        assert_eq!(iteration_schedule(1, 0.1), vec![1]);
        assert_eq!(iteration_schedule(1000, 0.1).len(), 66);
        assert_eq!(effective_schedule(4, 0.1, 4), vec![4]);
        let s = effective_schedule(64, 0.2, 4);
        assert_eq!(*s.last().unwrap(), 7);
        assert!(s[..s.len() - 1].iter().all(|&k| k > 8));
    }

    #[test]
    fn all_tasks_branch_small_instance() {
        let mut net = Network::new(SimConfig::new(8, 0.0)).unwrap();
        let mut exec = AbstractTasks::new(1);
        let params = TcParams::new(4, 4, 0.1, 1);
        let out = run_task_completion(
            &mut net,
            &mut NoCrashes,
            &params,
            &mut exec,
            &mut FamilyCache::new(),
        )
        .unwrap();
        assert_eq!(out.rounds, 9);
        assert_eq!(out.iterations.len(), 1);
        assert!(out.fully_verified && out.sound());
    }

    #[test]
    fn window_scales_with_r() {
        let mut net = Network::new(SimConfig::new(8, 0.0)).unwrap();
        let mut exec = AbstractTasks::new(3);
        let params = TcParams::new(4, 4, 0.1, 1);
        let out = run_task_completion(
            &mut net,
            &mut NoCrashes,
            &params,
            &mut exec,
            &mut FamilyCache::new(),
        )
        .unwrap();
        assert_eq!(out.rounds, 2 * 4 * 3 + 1);
    }

    #[test]
    fn first_iteration_suffices_without_crashes() {
        let mut net = Network::new(SimConfig::new(64, 0.0)).unwrap();
        let params = TcParams::new(8, 8, 0.1, 1);
        let out = run_task_completion(
            &mut net,
            &mut NoCrashes,
            &params,
            &mut AbstractTasks::new(1),
            &mut FamilyCache::new(),
        )
        .unwrap();
        assert_eq!(out.iterations.len(), 1);
        assert_eq!(out.ledger.completed_count(), 8);
    }

    /// Crashes node 3 during the first report round, letting only node 1 hear it.
    struct LeakyReport;

    impl CrashAdversary for LeakyReport {
        fn decide(&mut self, view: &RoundView<'_>) -> CrashDecision {
            let reporting = view.intents[2].broadcast.is_some();
            if reporting && view.is_alive(NodeId::new(3)) {
                CrashDecision {
                    crashes: vec![(NodeId::new(3), Suppression::AllExcept(vec![NodeId::new(1)]))],
                }
            } else {
                CrashDecision::none()
            }
        }
    }

    #[test]
    fn partial_report_is_sound() {
        let n = 32;
        let mut net = Network::new(SimConfig::new(n, 0.25)).unwrap();
        let params = TcParams::new(32, 2, 0.2, 3);
        let out = run_task_completion(
            &mut net,
            &mut LeakyReport,
            &params,
            &mut AbstractTasks::new(1),
            &mut FamilyCache::new(),
        )
        .unwrap();
        assert_eq!(net.crashes(), 1);
        assert!(out.sound() && out.fully_verified && out.progress_ok());
    }

    #[test]
    fn every_suite_adversary_is_survived() {
        for spec in AdversarySpec::suite()
            .into_iter()
            .chain([AdversarySpec::LowerBound])
        {
            for &alpha in &[0.25, 0.5, 0.75] {
                let n = 64;
                let mut net = Network::new(SimConfig::new(n, alpha)).unwrap();
                let mut adv = spec.build(n, alpha, 5);
                let eps = crate::covering::practical_epsilon(alpha);
                let out = run_batched(
                    &mut net,
                    &mut adv,
                    2 * n,
                    n,
                    1,
                    4,
                    eps,
                    5,
                    &mut FamilyCache::new(),
                )
                .unwrap_or_else(|e| panic!("{spec} alpha={alpha}: {e}"));
                assert!(
                    out.all_verified() && out.sound() && out.progress_ok(),
                    "{spec} alpha={alpha}"
                );
                assert_eq!(out.completed_tasks(), 2 * n);
                let per = instance_rounds(n, eps, 4, 1);
                assert_eq!(out.rounds, 2 * per);
            }
        }
    }

    #[test]
    fn batching_arithmetic() {
        let mut net = Network::new(SimConfig::new(16, 0.0)).unwrap();
        let out = run_batched(
            &mut net,
            &mut NoCrashes,
            40,
            16,
            1,
            4,
            0.2,
            0,
            &mut FamilyCache::new(),
        )
        .unwrap();
        assert_eq!(out.batches.len(), 3);
        assert_eq!(out.batches[2].params.m, 8);
        assert_eq!(out.completed_tasks(), 40);
    }

    proptest! {
        #[test]
        fn ceiling_chain(eps in 0.01f64..0.99, m in 1usize..100_000, i in 1i32..200) {
            let x = 1.0 - eps;
            let k_i = ((x.powi(i - 1) * m as f64) - 1e-9).ceil();
            let next = ((x.powi(i) * m as f64) - 1e-9).ceil();
            prop_assert!((x * k_i + 1e-9).floor() <= next);
        }

        #[test]
        fn schedule_shrinks(m in 1usize..5000, eps in 0.05f64..0.5) {
            let s = iteration_schedule(m, eps);
            prop_assert_eq!(s[0], m);
            prop_assert!(s.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}

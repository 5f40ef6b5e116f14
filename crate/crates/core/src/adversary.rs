//! Crash policies.
//!
//! An adversary is consulted once per round after every live node has declared
//! its intent, and answers with the set of nodes that crash during that round
//! together with which of their outgoing messages are lost. Policies are
//! deterministic functions of what they observe and of their own seeded RNG.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::net::{NodeId, RoundView};

/// Which outgoing messages of a crashing node fail to arrive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Suppression {
    All,
    None,
    Only(Vec<NodeId>),
    AllExcept(Vec<NodeId>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrashDecision {
    pub crashes: Vec<(NodeId, Suppression)>,
}

impl CrashDecision {
    pub fn none() -> Self {
        CrashDecision::default()
    }

    pub fn crash_all_silent(nodes: impl IntoIterator<Item = NodeId>) -> Self {
        CrashDecision {
            crashes: nodes.into_iter().map(|v| (v, Suppression::All)).collect(),
        }
    }
}

pub trait CrashAdversary {
    fn decide(&mut self, view: &RoundView<'_>) -> CrashDecision;

    fn name(&self) -> &str {
        "custom"
    }
}

impl<A: CrashAdversary + ?Sized> CrashAdversary for Box<A> {
    fn decide(&mut self, view: &RoundView<'_>) -> CrashDecision {
        (**self).decide(view)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Never crashes anything.
#[derive(Clone, Debug, Default)]
pub struct NoCrashes;

impl CrashAdversary for NoCrashes {
    fn decide(&mut self, _view: &RoundView<'_>) -> CrashDecision {
        CrashDecision::none()
    }

    fn name(&self) -> &str {
        "none"
    }
}

/// Each live node crashes with probability `p` per round while budget lasts.
/// A crashing node loses each of its outgoing messages independently with
/// probability one half, which is what produces inconsistent views.
#[derive(Clone, Debug)]
pub struct RandomCrashes {
    p: f64,
    rng: ChaCha8Rng,
}

impl RandomCrashes {
    pub const DEFAULT_P: f64 = 0.01;

    pub fn new(p: f64, seed: u64) -> Self {
        RandomCrashes {
            p,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0ff_ee00_0001),
        }
    }
}

impl CrashAdversary for RandomCrashes {
    fn decide(&mut self, view: &RoundView<'_>) -> CrashDecision {
        let mut crashes = Vec::new();
        for i in view.alive.ones() {
            if crashes.len() == view.budget_left {
                break;
            }
            if self.rng.gen::<f64>() < self.p {
                let lost: Vec<NodeId> = (0..view.n)
                    .filter(|_| self.rng.gen::<bool>())
                    .map(NodeId::from_index)
                    .collect();
                crashes.push((NodeId::from_index(i), Suppression::Only(lost)));
            }
        }
        CrashDecision { crashes }
    }

    fn name(&self) -> &str {
        "random"
    }
}

/// Spends the whole budget in the first round on the lowest-numbered nodes.
#[derive(Clone, Debug, Default)]
pub struct Frontload {
    fired: bool,
}

impl Frontload {
    pub fn new() -> Self {
        Frontload::default()
    }
}

impl CrashAdversary for Frontload {
    fn decide(&mut self, view: &RoundView<'_>) -> CrashDecision {
        if self.fired {
            return CrashDecision::none();
        }
        self.fired = true;
        CrashDecision::crash_all_silent(
            view.alive
                .ones()
                .take(view.budget_left)
                .map(NodeId::from_index),
        )
    }

    fn name(&self) -> &str {
        "frontload"
    }
}

/// Crashes every node that works on one particular task id (at any layer),
/// lowest ids first, until the budget is gone.
#[derive(Clone, Debug)]
pub struct Targeted {
    task: u64,
}

impl Targeted {
    pub fn new(task: u64) -> Self {
        Targeted { task }
    }
}

impl CrashAdversary for Targeted {
    fn decide(&mut self, view: &RoundView<'_>) -> CrashDecision {
        let victims = view
            .alive
            .ones()
            .filter(|&i| view.intents[i].attempt.is_some_and(|a| a.task == self.task))
            .take(view.budget_left)
            .map(NodeId::from_index);
        CrashDecision::crash_all_silent(victims)
    }

    fn name(&self) -> &str {
        "targeted"
    }
}

/// One step of the lower-bound adversary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBoundStep {
    pub step: u32,
    pub round: u64,
    /// `|T_i|`, the number of tasks kept incomplete by this step.
    pub kept: usize,
    /// `|T_{i-1}|`.
    pub previous: usize,
    pub alive_before: usize,
    /// Largest attempt count among the kept tasks.
    pub max_attempts: usize,
    /// `floor(2 n' / k')` from the averaging argument.
    pub attempt_bound: usize,
    pub crashed: usize,
}

/// The lower-bound adversary for `M = n` tasks of one round each.
///
/// It keeps a shrinking set of incomplete tasks. On every round in which some
/// node attempts a task it picks the `floor(alpha n / log2(n)^i)` tasks of the
/// current set with the fewest attempters (ties to the smaller id) and crashes
/// exactly those attempters, so none of the picked tasks completes. It stops
/// once the next set would be smaller than [`LowerBound::MIN_KEPT`] or would
/// fail to halve.
#[derive(Clone, Debug)]
pub struct LowerBound {
    n: usize,
    alpha: f64,
    incomplete: Vec<u64>,
    steps: Vec<LowerBoundStep>,
    halted: bool,
}

impl LowerBound {
    pub const MIN_KEPT: usize = 4;

    pub fn new(n: usize, alpha: f64) -> Self {
        LowerBound {
            n,
            alpha,
            incomplete: (1..=n as u64).collect(),
            steps: Vec::new(),
            halted: false,
        }
    }

    /// `floor(alpha n / log2(n)^i)`.
    pub fn target_size(n: usize, alpha: f64, step: u32) -> usize {
        let log = (n as f64).log2();
        let value = alpha * n as f64 / log.powi(step as i32);
        (value + 1e-9).floor() as usize
    }

    pub fn steps(&self) -> &[LowerBoundStep] {
        &self.steps
    }

    /// Tasks the adversary is currently keeping incomplete.
    pub fn kept(&self) -> &[u64] {
        &self.incomplete
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn total_crashes(&self) -> usize {
        self.steps.iter().map(|s| s.crashed).sum()
    }
}

impl CrashAdversary for LowerBound {
    fn decide(&mut self, view: &RoundView<'_>) -> CrashDecision {
        if self.halted {
            return CrashDecision::none();
        }
        let working = view.alive.ones().any(|i| view.intents[i].attempt.is_some());
        if !working {
            return CrashDecision::none();
        }
        let step = self.steps.len() as u32 + 1;
        let kept = Self::target_size(self.n, self.alpha, step);
        let previous_target = Self::target_size(self.n, self.alpha, step - 1);
        if kept < Self::MIN_KEPT || kept > previous_target / 2 || kept > self.incomplete.len() {
            self.halted = true;
            return CrashDecision::none();
        }

        let mut attempts: Vec<(usize, u64)> = self.incomplete.iter().map(|&t| (0, t)).collect();
        for i in view.alive.ones() {
            if let Some(a) = view.intents[i].attempt {
                if let Ok(pos) = self.incomplete.binary_search(&a.task) {
                    attempts[pos].0 += 1;
                }
            }
        }
        attempts.sort();
        attempts.truncate(kept);
        let mut chosen: Vec<u64> = attempts.iter().map(|&(_, t)| t).collect();
        chosen.sort_unstable();

        let victims: Vec<NodeId> = view
            .alive
            .ones()
            .filter(|&i| {
                view.intents[i]
                    .attempt
                    .is_some_and(|a| chosen.binary_search(&a.task).is_ok())
            })
            .map(NodeId::from_index)
            .collect();
        let alive_before = view.alive_count();
        self.steps.push(LowerBoundStep {
            step,
            round: view.round,
            kept,
            previous: self.incomplete.len(),
            alive_before,
            max_attempts: attempts.iter().map(|&(c, _)| c).max().unwrap_or(0),
            attempt_bound: 2 * alive_before / self.incomplete.len(),
            crashed: victims.len(),
        });
        self.incomplete = chosen;
        // Deliberately not clamped: overspending is reported by the engine as
        // a budget error.
        CrashDecision::crash_all_silent(victims)
    }

    fn name(&self) -> &str {
        "lowerbound"
    }
}

/// Parsed adversary selection, e.g. `random:p=0.02` or `targeted:task=3`.
#[derive(Clone, Debug, PartialEq)]
pub enum AdversarySpec {
    None,
    Random { p: f64 },
    Frontload,
    Targeted { task: u64 },
    LowerBound,
}

impl AdversarySpec {
    /// The policies every scenario is expected to survive. The lower-bound
    /// policy is only defined for one-round tasks, so callers add it when
    /// that applies.
    pub fn suite() -> Vec<AdversarySpec> {
        vec![
            AdversarySpec::None,
            AdversarySpec::Random {
                p: RandomCrashes::DEFAULT_P,
            },
            AdversarySpec::Frontload,
            AdversarySpec::Targeted { task: 1 },
        ]
    }

    pub fn build(&self, n: usize, alpha: f64, seed: u64) -> Box<dyn CrashAdversary> {
        match self {
            AdversarySpec::None => Box::new(NoCrashes),
            AdversarySpec::Random { p } => Box::new(RandomCrashes::new(*p, seed)),
            AdversarySpec::Frontload => Box::new(Frontload::new()),
            AdversarySpec::Targeted { task } => Box::new(Targeted::new(*task)),
            AdversarySpec::LowerBound => Box::new(LowerBound::new(n, alpha)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdversarySpec::None => "none",
            AdversarySpec::Random { .. } => "random",
            AdversarySpec::Frontload => "frontload",
            AdversarySpec::Targeted { .. } => "targeted",
            AdversarySpec::LowerBound => "lowerbound",
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversarySpec::Random { p } => write!(f, "random:p={p}"),
            AdversarySpec::Targeted { task } => write!(f, "targeted:task={task}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for AdversarySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, params) = match s.split_once(':') {
            Some((k, p)) => (k.trim(), p.trim()),
            None => (s.trim(), ""),
        };
        let param = |key: &str| -> Result<Option<&str>, String> {
            let mut found = None;
            for kv in params.split(',').filter(|kv| !kv.trim().is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| format!("malformed adversary parameter `{kv}`"))?;
                if k.trim() != key {
                    return Err(format!(
                        "unknown parameter `{}` for adversary `{kind}`",
                        k.trim()
                    ));
                }
                found = Some(v.trim());
            }
            Ok(found)
        };
        let no_params = |spec: AdversarySpec| {
            if params.is_empty() {
                Ok(spec)
            } else {
                Err(format!("adversary `{kind}` takes no parameters"))
            }
        };
        match kind {
            "none" => no_params(AdversarySpec::None),
            "frontload" => no_params(AdversarySpec::Frontload),
            "lowerbound" => no_params(AdversarySpec::LowerBound),
            "random" => {
                let p = match param("p")? {
                    Some(v) => v.parse::<f64>().map_err(|e| format!("bad p: {e}"))?,
                    None => RandomCrashes::DEFAULT_P,
                };
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("p must lie in [0, 1], got {p}"));
                }
                Ok(AdversarySpec::Random { p })
            }
            "targeted" => {
                let task = match param("task")? {
                    Some(v) => v.parse::<u64>().map_err(|e| format!("bad task: {e}"))?,
                    None => 1,
                };
                Ok(AdversarySpec::Targeted { task })
            }
            other => Err(format!("unknown adversary `{other}`")),
        }
    }
}

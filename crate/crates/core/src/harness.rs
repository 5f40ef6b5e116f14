//! Scenario files, metrics rows and scaling sweeps.
//!
//! A scenario is a flat `key = value` file (`#` starts a comment). Every key
//! has a default, listed by [`Scenario::explain`].

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::adversary::{AdversarySpec, LowerBound, LowerBoundStep};
use crate::covering::{
    certify_load_balance, derive_constants, generate_with_retry, practical_epsilon,
    verify_size_bounds, FamilyError, FamilyParams,
};
use crate::net::{NetMetrics, Network, SimConfig, SimError};
use crate::sim::{algorithm_by_name, simulate, SimParams, SimulationError};
use crate::task::{run_batched, BatchedOutcome, FamilyCache, IterationRecord, TcError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    FamilyGen,
    FamilyVerify,
    RunTc,
    RunSim,
    LowerBound,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::FamilyGen => "family-gen",
            Experiment::FamilyVerify => "family-verify",
            Experiment::RunTc => "run-tc",
            Experiment::RunSim => "run-sim",
            Experiment::LowerBound => "lowerbound",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "family-gen" => Experiment::FamilyGen,
            "family-verify" => Experiment::FamilyVerify,
            "run-tc" => Experiment::RunTc,
            "run-sim" => Experiment::RunSim,
            "lowerbound" => Experiment::LowerBound,
            other => return Err(format!("unknown experiment `{other}`")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Desk-scale `B` and `eps`.
    Practical,
    /// Constants from the existence argument; only tiny instances finish.
    Theory,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "practical" => Ok(Mode::Practical),
            "theory" => Ok(Mode::Theory),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {field}: {msg}")]
pub struct ConfigError {
    /// 1-based line; 0 for problems not tied to a line.
    pub line: usize,
    pub field: String,
    pub msg: String,
}

impl ConfigError {
    fn new(line: usize, field: &str, msg: impl Into<String>) -> Self {
        ConfigError {
            line,
            field: field.to_string(),
            msg: msg.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    pub n: usize,
    /// Total tasks `M`.
    pub tasks: usize,
    /// Tasks per batch; 0 picks the mode's default.
    pub batch: usize,
    /// Simulated rounds `T`; 0 keeps the algorithm's default.
    pub t: usize,
    pub r: u64,
    pub alpha: f64,
    pub b: usize,
    /// 0 picks the mode's default.
    pub epsilon: f64,
    pub mode: Mode,
    pub adversary: AdversarySpec,
    pub algo: String,
    pub compact: bool,
    /// `k` for family experiments; 0 picks `ceil(m / 2)` clamped to `[B, m]`.
    pub k: usize,
    /// Load-balance samples for family experiments.
    pub samples: usize,
    pub seed: u64,
    pub repetitions: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "default".into(),
            experiment: Experiment::RunTc,
            n: 64,
            tasks: 64,
            batch: 0,
            t: 0,
            r: 1,
            alpha: 0.25,
            b: 4,
            epsilon: 0.0,
            mode: Mode::Practical,
            adversary: AdversarySpec::None,
            algo: "echo".into(),
            compact: false,
            k: 0,
            samples: 1000,
            seed: 1,
            repetitions: 1,
        }
    }
}

const KEYS: &[(&str, &str)] = &[
    ("name", "label used in metrics rows"),
    (
        "experiment",
        "family-gen | family-verify | run-tc | run-sim | lowerbound",
    ),
    ("n", "number of nodes"),
    ("M", "total number of tasks"),
    (
        "batch",
        "tasks per batch, 0 = n (practical) or floor(c n) (theory)",
    ),
    ("T", "simulated rounds, 0 = algorithm default"),
    ("R", "rounds per task"),
    ("alpha", "crash fraction in [0, 1)"),
    ("B", "family load parameter (practical mode)"),
    (
        "epsilon",
        "family slack, 0 = clamp((1-alpha)/(6+alpha), 0.05, 0.3)",
    ),
    ("mode", "practical | theory"),
    (
        "adversary",
        "none | random[:p=P] | frontload | targeted[:task=ID] | lowerbound",
    ),
    ("algo", "echo | token | prefix-sum | all-pairs"),
    ("compact", "true | false, compact simulation state"),
    (
        "k",
        "family experiments: k, 0 = ceil(m/2) clamped to [B, m]",
    ),
    ("samples", "family experiments: load-balance samples"),
    ("seed", "run seed"),
    ("repetitions", "times to repeat the run"),
];

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut s = Scenario::default();
        let mut name_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(line_no, line, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            s.set(key, value)
                .map_err(|msg| ConfigError::new(line_no, key, msg))?;
            name_set |= key == "name";
        }
        if !name_set {
            s.name = s.experiment.as_str().to_string();
        }
        s.validate()?;
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
        }
        match key {
            "name" => self.name = value.to_string(),
            "experiment" => self.experiment = value.parse()?,
            "n" => self.n = num(value)?,
            "M" | "tasks" => self.tasks = num(value)?,
            "batch" | "m" => self.batch = num(value)?,
            "T" => self.t = num(value)?,
            "R" => self.r = num(value)?,
            "alpha" => self.alpha = num(value)?,
            "B" => self.b = num(value)?,
            "epsilon" => self.epsilon = num(value)?,
            "mode" => self.mode = value.parse()?,
            "adversary" => self.adversary = value.parse()?,
            "algo" => self.algo = value.to_string(),
            "compact" => self.compact = num(value)?,
            "k" => self.k = num(value)?,
            "samples" => self.samples = num(value)?,
            "seed" => self.seed = num(value)?,
            "repetitions" => self.repetitions = num(value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field: &str, msg: String| Err(ConfigError::new(0, field, msg));
        if self.n < 2 || self.n > 1 << 16 {
            return err("n", format!("must lie in [2, 65536], got {}", self.n));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return err("alpha", format!("must lie in [0, 1), got {}", self.alpha));
        }
        if self.tasks == 0 {
            return err("M", "must be positive".into());
        }
        if self.r == 0 {
            return err("R", "must be positive".into());
        }
        if self.b == 0 {
            return err("B", "must be positive".into());
        }
        if self.epsilon != 0.0 && !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return err(
                "epsilon",
                format!("must lie in (0, 1), got {}", self.epsilon),
            );
        }
        if self.batch > self.n {
            return err(
                "batch",
                format!("at most n = {}, got {}", self.n, self.batch),
            );
        }
        if self.repetitions == 0 {
            return err("repetitions", "must be positive".into());
        }
        if self.samples == 0 {
            return err("samples", "must be positive".into());
        }
        if algorithm_by_name(&self.algo, None).is_none() {
            return err("algo", format!("unknown algorithm `{}`", self.algo));
        }
        if self.adversary == AdversarySpec::LowerBound && self.r != 1 {
            return err("adversary", "lowerbound is only defined for R = 1".into());
        }
        Ok(())
    }

    /// Writes the scenario back in the file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.pairs() {
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("name", self.name.clone()),
            ("experiment", self.experiment.as_str().into()),
            ("n", self.n.to_string()),
            ("M", self.tasks.to_string()),
            ("batch", self.batch.to_string()),
            ("T", self.t.to_string()),
            ("R", self.r.to_string()),
            ("alpha", self.alpha.to_string()),
            ("B", self.b.to_string()),
            ("epsilon", self.epsilon.to_string()),
            (
                "mode",
                if self.mode == Mode::Theory {
                    "theory"
                } else {
                    "practical"
                }
                .into(),
            ),
            ("adversary", self.adversary.to_string()),
            ("algo", self.algo.clone()),
            ("compact", self.compact.to_string()),
            ("k", self.k.to_string()),
            ("samples", self.samples.to_string()),
            ("seed", self.seed.to_string()),
            ("repetitions", self.repetitions.to_string()),
        ]
    }

    /// Every key with its default and meaning.
    pub fn explain() -> String {
        let defaults = Scenario::default().pairs();
        let mut out = String::from("# scenario keys (key = default  # meaning)\n");
        for ((key, meaning), (_, value)) in KEYS.iter().zip(defaults) {
            out.push_str(&format!("{key} = {value}  # {meaning}\n"));
        }
        out
    }

    /// `(epsilon, B, batch size)` actually used.
    pub fn resolved(&self) -> (f64, usize, usize) {
        match self.mode {
            Mode::Practical => {
                let eps = if self.epsilon > 0.0 {
                    self.epsilon
                } else {
                    practical_epsilon(self.alpha)
                };
                let batch = if self.batch > 0 { self.batch } else { self.n };
                (eps, self.b, batch)
            }
            Mode::Theory => {
                let c = derive_constants(self.alpha);
                let eps = if self.epsilon > 0.0 {
                    self.epsilon
                } else {
                    c.epsilon
                };
                let c = crate::covering::TheoryConstants::from_epsilon(eps);
                let batch = if self.batch > 0 {
                    self.batch
                } else {
                    ((c.c * self.n as f64).floor() as usize).max(1)
                };
                (eps, c.b as usize, batch)
            }
        }
    }

    /// A one-line description from which the run can be reproduced.
    pub fn banner(&self) -> String {
        let (eps, b, batch) = self.resolved();
        format!(
            "# crashclique {} name={} n={} M={} batch={} R={} T={} alpha={} B={} epsilon={} adversary={} algo={} seed={}",
            self.experiment.as_str(),
            self.name,
            self.n,
            self.tasks,
            batch,
            self.r,
            self.t,
            self.alpha,
            b,
            eps,
            self.adversary,
            self.algo,
            self.seed
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("config error, {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Tc(#[from] TcError),
    #[error(transparent)]
    Sim(#[from] SimulationError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        HarnessError::Tc(TcError::Sim(e))
    }
}

impl HarnessError {
    fn sim_error(&self) -> Option<&SimError> {
        match self {
            HarnessError::Tc(TcError::Sim(e)) => Some(e),
            HarnessError::Sim(SimulationError::Tc(TcError::Sim(e))) => Some(e),
            HarnessError::Sim(SimulationError::Store(crate::store::StoreError::Sim(e))) => Some(e),
            _ => None,
        }
    }

    /// 2 config error, 3 invariant violation, 4 adversary overspent its budget.
    pub fn exit_code(&self) -> i32 {
        if let Some(SimError::BudgetExceeded { .. }) = self.sim_error() {
            return 4;
        }
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Family(FamilyError::InvalidParams(_)) => 2,
            HarnessError::Tc(TcError::InvalidParams(_)) => 2,
            HarnessError::Io(_) => 1,
            _ => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub rep: usize,
    pub rounds_total: u64,
    pub crashes_total: usize,
    pub iterations: usize,
    pub messages_total: u64,
    pub max_edge_bits: u64,
    /// Seconds; the only column that is not reproducible.
    pub wallclock: f64,
}

impl MetricsRow {
    fn from_net(
        s: &Scenario,
        rep: usize,
        m: &NetMetrics,
        iterations: usize,
        started: Instant,
    ) -> Self {
        MetricsRow {
            scenario: s.name.clone(),
            rep,
            rounds_total: m.rounds,
            crashes_total: m.crashes,
            iterations,
            messages_total: m.messages,
            max_edge_bits: m.max_edge_bits,
            wallclock: started.elapsed().as_secs_f64(),
        }
    }
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "scenario",
            "rep",
            "rounds_total",
            "crashes_total",
            "iterations",
            "messages_total",
            "max_edge_bits",
            "wallclock",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-iteration rows of a task-completion run.
pub fn write_iterations_csv<'a, W: Write>(
    rows: impl IntoIterator<Item = &'a IterationRecord>,
    out: W,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "batch",
        "iteration",
        "k_i",
        "N_i",
        "crashes_so_far",
        "rounds_cumulative",
    ])?;
    for r in rows {
        w.write_record([
            r.batch.to_string(),
            r.iteration.to_string(),
            r.k.to_string(),
            r.unverified.to_string(),
            r.crashes_so_far.to_string(),
            r.rounds_cumulative.to_string(),
        ])?;
    }
    w.flush()
}

/// A finished task-completion run with its invariant checks.
#[derive(Clone, Debug)]
pub struct TcRun {
    pub outcome: BatchedOutcome,
    pub metrics: NetMetrics,
    pub lower_bound: Option<Vec<LowerBoundStep>>,
    pub messages_csv: Option<String>,
    pub crashes_csv: Option<String>,
    pub digest: u64,
}

impl TcRun {
    /// Knowledge sound, progress bounded, everything verified.
    pub fn invariants_hold(&self) -> bool {
        self.outcome.all_verified() && self.outcome.sound() && self.outcome.progress_ok()
    }
}

/// Runs task completion for a scenario.
pub fn run_tc(s: &Scenario, trace: bool) -> Result<TcRun, HarnessError> {
    s.validate()?;
    let (eps, b, batch) = s.resolved();
    let mut net = Network::new(
        SimConfig::new(s.n, s.alpha)
            .with_seed(s.seed)
            .with_max_rounds(u64::MAX),
    )?;
    if trace {
        net.record_trace();
    }
    let mut lower = None;
    let mut generic;
    let adversary: &mut dyn crate::adversary::CrashAdversary =
        if s.adversary == AdversarySpec::LowerBound {
            lower = Some(LowerBound::new(s.n, s.alpha));
            lower.as_mut().unwrap()
        } else {
            generic = s.adversary.build(s.n, s.alpha, s.seed);
            &mut generic
        };
    let mut cache = FamilyCache::new();
    let outcome = run_batched(
        &mut net, adversary, s.tasks, batch, s.r, b, eps, s.seed, &mut cache,
    )?;
    let t = net.take_trace();
    Ok(TcRun {
        outcome,
        metrics: net.metrics().clone(),
        lower_bound: lower.map(|l| l.steps().to_vec()),
        messages_csv: t.as_ref().map(|t| t.messages_csv()),
        crashes_csv: t.as_ref().map(|t| t.crashes_csv()),
        digest: net.digest(),
    })
}

/// Runs one repetition of a scenario.
pub fn run_once(s: &Scenario, rep: usize) -> Result<MetricsRow, HarnessError> {
    let started = Instant::now();
    match s.experiment {
        Experiment::RunTc | Experiment::LowerBound => {
            let mut s = s.clone();
            if s.experiment == Experiment::LowerBound {
                s.adversary = AdversarySpec::LowerBound;
                s.r = 1;
                s.tasks = s.n;
            }
            let run = run_tc(&s, false)?;
            if !run.invariants_hold() {
                return Err(HarnessError::Invariant(
                    "task-completion ledger check failed".into(),
                ));
            }
            Ok(MetricsRow::from_net(
                &s,
                rep,
                &run.metrics,
                run.outcome.iteration_count(),
                started,
            ))
        }
        Experiment::RunSim => {
            let alg = algorithm_by_name(&s.algo, (s.t > 0).then_some(s.t)).ok_or_else(|| {
                ConfigError::new(0, "algo", format!("unknown algorithm `{}`", s.algo))
            })?;
            let mut net = Network::new(SimConfig::new(s.n, s.alpha).with_seed(s.seed))?;
            let mut adv = s.adversary.build(s.n, s.alpha, s.seed);
            let mut params = SimParams::new(s.alpha, s.seed);
            params.b = s.b;
            if s.epsilon > 0.0 {
                params.epsilon = s.epsilon;
            }
            params.compact = s.compact;
            let out = simulate(&mut net, &mut adv, alg.as_ref(), &params)?;
            if !out.matches_reference() || !out.phases_ok() {
                return Err(HarnessError::Invariant(
                    "simulated outputs differ from the fault-free run".into(),
                ));
            }
            let iterations = out.phases.iter().map(|p| p.iterations).sum();
            Ok(MetricsRow::from_net(
                s,
                rep,
                net.metrics(),
                iterations,
                started,
            ))
        }
        Experiment::FamilyGen | Experiment::FamilyVerify => {
            let params = family_params(s);
            let family = generate_with_retry(params, 16)?;
            let sizes = verify_size_bounds(&family);
            if !sizes.passed() {
                return Err(HarnessError::Invariant(format!(
                    "size bounds violated: {:?}",
                    sizes.violations
                )));
            }
            let mut iterations = 0;
            if s.experiment == Experiment::FamilyVerify {
                let cert = certify_load_balance(&family, params.k, s.samples, s.seed)?;
                iterations = cert.samples;
                if !cert.passed() {
                    return Err(HarnessError::Invariant(format!(
                        "load balance not certified: {cert}"
                    )));
                }
            }
            Ok(MetricsRow {
                scenario: s.name.clone(),
                rep,
                rounds_total: 0,
                crashes_total: 0,
                iterations,
                messages_total: 0,
                max_edge_bits: 0,
                wallclock: started.elapsed().as_secs_f64(),
            })
        }
    }
}

/// Family parameters of a family experiment.
pub fn family_params(s: &Scenario) -> FamilyParams {
    let (eps, b, batch) = s.resolved();
    let m = batch.min(s.n);
    let k = if s.k > 0 {
        s.k
    } else {
        m.div_ceil(2).clamp(b.min(m), m)
    };
    FamilyParams::new(s.n, m, k, b, eps, s.seed)
}

/// Runs every repetition of a scenario.
pub fn run_scenario(s: &Scenario) -> Result<Vec<MetricsRow>, HarnessError> {
    s.validate()?;
    (0..s.repetitions).map(|rep| run_once(s, rep + 1)).collect()
}

/// Parses and runs a scenario file.
pub fn run_scenario_file(path: &std::path::Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    run_scenario(&Scenario::parse(&text)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub adversary: String,
    pub rounds: u64,
    pub crashes: usize,
    pub log2_n: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Largest ratio per `n` (worst adversary), in sweep order.
    pub worst: Vec<(usize, f64)>,
    /// max over `n` of the worst ratio divided by the min over `n`.
    pub spread: f64,
}

/// Runs `base` for every `n` across the adversary suite (plus the lower-bound
/// policy for one-round tasks) and reports `rounds / log2 n`. Task counts scale
/// with `n`: `M` becomes `n * (base.M / base.n)` rounded up.
pub fn scaling_sweep(base: &Scenario, ns: &[usize]) -> Result<SweepReport, HarnessError> {
    if ns.len() < 3 || ns.iter().any(|n| !n.is_power_of_two()) {
        return Err(ConfigError::new(0, "n", "need at least three powers of two").into());
    }
    let mut specs = AdversarySpec::suite();
    if base.r == 1 && base.experiment != Experiment::RunSim {
        specs.push(AdversarySpec::LowerBound);
    }
    let mut rows = Vec::new();
    let mut worst = Vec::new();
    for &n in ns {
        let mut w: f64 = 0.0;
        for spec in &specs {
            let mut s = base.clone();
            s.n = n;
            s.tasks = (base.tasks * n).div_ceil(base.n);
            if *spec == AdversarySpec::LowerBound {
                s.tasks = n;
            }
            s.adversary = spec.clone();
            s.repetitions = 1;
            let row = run_once(&s, 1)?;
            let log = (n as f64).log2();
            let ratio = row.rounds_total as f64 / log;
            w = w.max(ratio);
            rows.push(SweepRow {
                n,
                adversary: spec.to_string(),
                rounds: row.rounds_total,
                crashes: row.crashes_total,
                log2_n: log,
                ratio,
            });
        }
        worst.push((n, w));
    }
    let max = worst.iter().map(|w| w.1).fold(f64::MIN, f64::max);
    let min = worst.iter().map(|w| w.1).fold(f64::MAX, f64::min);
    Ok(SweepReport {
        rows,
        worst,
        spread: max / min,
    })
}

/// Least-squares fit of `rounds ~ c1 T^2 log n + c2 T log^2 n` at fixed `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    pub n: usize,
    pub points: Vec<(usize, u64)>,
    pub c1: f64,
    pub c2: f64,
    /// Largest `max(measured / fitted, fitted / measured)`.
    pub worst_factor: f64,
}

pub fn fit_sim_growth(n: usize, points: &[(usize, u64)]) -> GrowthFit {
    let log = (n as f64).log2();
    let xs: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|&(t, r)| {
            let t = t as f64;
            (t * t * log, t * log * log, r as f64)
        })
        .collect();
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x1, x2, y) in &xs {
        a11 += x1 * x1;
        a12 += x1 * x2;
        a22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    let det = a11 * a22 - a12 * a12;
    let (c1, c2) = if det.abs() > 1e-12 {
        ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
    } else {
        (b1 / a11, 0.0)
    };
    let worst_factor = xs
        .iter()
        .map(|&(x1, x2, y)| {
            let fit = c1 * x1 + c2 * x2;
            if fit <= 0.0 {
                f64::INFINITY
            } else {
                (y / fit).max(fit / y)
            }
        })
        .fold(1.0, f64::max);
    GrowthFit {
        n,
        points: points.to_vec(),
        c1,
        c2,
        worst_factor,
    }
}

/// Simulation rounds for each `T` at fixed `n`, fitted to the growth form.
pub fn sim_growth(base: &Scenario, ts: &[usize]) -> Result<GrowthFit, HarnessError> {
    let mut points = Vec::new();
    for &t in ts {
        let mut s = base.clone();
        s.experiment = Experiment::RunSim;
        s.t = t;
        s.repetitions = 1;
        points.push((t, run_once(&s, 1)?.rounds_total));
    }
    Ok(fit_sim_growth(base.n, &points))
}

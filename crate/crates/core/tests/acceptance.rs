//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run a subset with `cargo test --test acceptance -- 3 9`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crashclique::adversary::{AdversarySpec, CrashAdversary, CrashDecision, LowerBound, NoCrashes};
use crashclique::covering::{
    binomial, certify_load_balance, generate_with_retry, verify_size_bounds, CoveringFamily,
    FamilyParams, EXHAUSTIVE_LIMIT,
};
use crashclique::ecc::{next_prime, CodecParams};
use crashclique::harness::{
    run_tc, scaling_sweep, write_iterations_csv, write_metrics_csv, Scenario,
};
use crashclique::net::{Network, NodeId, RoundView, SimConfig};
use crashclique::sim::{
    algorithm_by_name, corpus, reference_run, simulate, AdoptAndCollect, BlobKind, ComputeMessages,
    Deliver, KeyMap, SimParams, SimStats, SimulatedAlgorithm,
};
use crashclique::store::Storage;
use crashclique::task::{FamilyCache, SlotExecutor, TcParams};

type Outcome = Result<String, String>;
type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let criteria: Vec<Criterion> = vec![
        (1, "covering family size bounds", c1_size_bounds),
        (2, "covering family load balance", c2_load_balance),
        (3, "task completion correctness", c3_correctness),
        (4, "unverified count bounded by k_i", c4_progress),
        (5, "knowledge soundness", c5_soundness),
        (6, "logarithmic round scaling", c6_scaling),
        (7, "erasure codec", c7_codec),
        (8, "store/retrieve round counts", c8_store_rounds),
        (9, "robust simulation end to end", c9_simulation),
        (10, "idempotence under duplicate execution", c10_idempotence),
        (
            11,
            "lower-bound adversary per-step guarantee",
            c11_lower_bound,
        ),
        (12, "determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {id:>2} ({name}): {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} ({name}): {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- families

/// The 50 `(n, B, eps)` combinations, drawn without replacement from the full
/// grid, with `m = n / 4` and `k = ceil(m / 2)` clamped to `[B, m]`.
fn family_grid() -> Vec<FamilyParams> {
    let mut grid = Vec::new();
    for n in (6..=12).map(|e| 1usize << e) {
        for b in [4, 8, 16] {
            for eps in [0.1, 0.2, 0.3] {
                grid.push((n, b, eps));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut picked: Vec<usize> = sample(&mut rng, grid.len(), 50).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let (n, b, eps) = grid[g];
            let m = n / 4;
            let k = m.div_ceil(2).clamp(b.min(m), m);
            FamilyParams::new(n, m, k, b, eps, 1000 + i as u64)
        })
        .collect()
}

fn families() -> Result<Vec<CoveringFamily>, String> {
    family_grid()
        .into_iter()
        .map(|p| generate_with_retry(p, 16).map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn c1_size_bounds() -> Outcome {
    let started = Instant::now();
    let fams = families()?;
    let mut sets = 0;
    for f in &fams {
        let report = verify_size_bounds(f);
        sets += f.len();
        check(report.passed(), || {
            format!(
                "{:?}: {} of {} sets outside [{}, {}]",
                f.params(),
                report.violations.len(),
                f.len(),
                report.lower,
                report.upper
            )
        })?;
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} families, {sets} sets, all within bounds",
        fams.len()
    ))
}

fn c2_load_balance() -> Outcome {
    let fams = families()?;
    let mut failures = Vec::new();
    let mut worst = 1.0f64;
    for (i, f) in fams.iter().enumerate() {
        let p = *f.params();
        let cert = certify_load_balance(f, p.k, 10_000, 7 + i as u64).map_err(|e| e.to_string())?;
        let exhaustive_expected = binomial(p.m, p.k) <= EXHAUSTIVE_LIMIT;
        check(cert.exhaustive == exhaustive_expected, || {
            format!("{p:?}: wrong enumeration mode")
        })?;
        worst = worst.min(cert.pass_fraction());
        if cert.pass_fraction() < 0.99 {
            failures.push(format!(
                "n={} B={} eps={} k={}: {:.3}",
                p.n,
                p.b,
                p.epsilon,
                p.k,
                cert.pass_fraction()
            ));
        }

        // k = B: every node carries load exactly B.
        let degenerate = FamilyParams {
            k: p.b.min(p.m),
            ..p
        };
        let fam = generate_with_retry(degenerate, 16).map_err(|e| e.to_string())?;
        let cert = certify_load_balance(&fam, degenerate.k, 10_000, 11 + i as u64)
            .map_err(|e| e.to_string())?;
        check(cert.per_sample.iter().all(|s| s.good == p.n), || {
            format!("k=B family n={} B={} has a sample with |J| < n", p.n, p.b)
        })?;
    }
    check(failures.is_empty(), || {
        format!(
            "{} of {} families below 99% of samples with |J| >= (1-eps)n (worst pass fraction {worst:.3}); e.g. {}",
            failures.len(),
            fams.len(),
            failures.iter().take(4).cloned().collect::<Vec<_>>().join(", ")
        )
    })?;
    Ok(format!(
        "{} families certified, worst pass fraction {worst:.3}; k=B exact",
        fams.len()
    ))
}

// ---------------------------------------------------------- task completion

struct GridRun {
    label: String,
    verified: bool,
    completed: usize,
    tasks: usize,
    progress_ok: bool,
    sound: bool,
}

fn tc_grid() -> Result<(Vec<GridRun>, Duration), String> {
    let started = Instant::now();
    let mut runs = Vec::new();
    for n in [32usize, 64, 128, 256] {
        for alpha in [0.25, 0.5, 0.75] {
            for r in [1u64, 3] {
                for tasks in [n, 4 * n] {
                    let mut specs = AdversarySpec::suite();
                    if r == 1 {
                        specs.push(AdversarySpec::LowerBound);
                    }
                    for spec in specs {
                        let s = Scenario {
                            n,
                            tasks,
                            r,
                            alpha,
                            adversary: spec.clone(),
                            seed: 3,
                            ..Scenario::default()
                        };
                        let label = format!("n={n} alpha={alpha} R={r} M={tasks} adversary={spec}");
                        let run = run_tc(&s, false).map_err(|e| format!("{label}: {e}"))?;
                        runs.push(GridRun {
                            label,
                            verified: run.outcome.all_verified(),
                            completed: run.outcome.completed_tasks(),
                            tasks,
                            progress_ok: run.outcome.progress_ok(),
                            sound: run.outcome.sound(),
                        });
                    }
                }
            }
        }
    }
    Ok((runs, started.elapsed()))
}

fn c3_correctness() -> Outcome {
    let (runs, elapsed) = tc_grid()?;
    for r in &runs {
        check(r.verified && r.completed == r.tasks, || {
            format!(
                "{}: {} of {} completed, verified={}",
                r.label, r.completed, r.tasks, r.verified
            )
        })?;
    }
    check(elapsed < Duration::from_secs(300), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} runs, all tasks completed and verified",
        runs.len()
    ))
}

fn c4_progress() -> Outcome {
    let (runs, _) = tc_grid()?;
    for r in &runs {
        check(r.progress_ok, || {
            format!("{}: N_i > k_i at some boundary", r.label)
        })?;
    }
    Ok(format!("{} runs, N_i <= k_i at every boundary", runs.len()))
}

fn c5_soundness() -> Outcome {
    let (runs, _) = tc_grid()?;
    for r in &runs {
        check(r.sound, || {
            format!("{}: some node knew an incomplete task as done", r.label)
        })?;
    }
    Ok(format!(
        "{} runs, every C_(i,v) within the completed set",
        runs.len()
    ))
}

fn c6_scaling() -> Outcome {
    let base = Scenario {
        n: 64,
        tasks: 64,
        r: 1,
        alpha: 0.5,
        seed: 5,
        ..Scenario::default()
    };
    let report = scaling_sweep(&base, &[64, 128, 256, 512, 1024]).map_err(|e| e.to_string())?;
    let ratios: Vec<String> = report
        .worst
        .iter()
        .map(|(n, r)| format!("{n}:{r:.1}"))
        .collect();
    check(report.spread < 1.5, || {
        format!("spread {:.3} >= 1.5 ({})", report.spread, ratios.join(" "))
    })?;
    Ok(format!(
        "spread {:.3}, worst rounds/log2 n {}",
        report.spread,
        ratios.join(" ")
    ))
}

// ------------------------------------------------------------------ storage

fn c7_codec() -> Outcome {
    let golden = CodecParams::new(5, 2, 4).map_err(|e| e.to_string())?;
    check(
        golden.encode(&[1, 2]).ok() == Some(vec![1, 3, 0, 2]),
        || "golden encode".into(),
    )?;
    check(
        golden.decode(&[Some(1), Some(3), Some(0), Some(2)]).ok() == Some(vec![1, 2]),
        || "golden decode".into(),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut exhaustive = 0u64;
    for n in 2..=12usize {
        let p = next_prime(n as u64);
        for k in 1..n {
            let c = CodecParams::new(p, k, n).map_err(|e| e.to_string())?;
            let msg: Vec<u64> = (0..k).map(|_| rng.gen_range(0..p)).collect();
            let word = c.encode(&msg).map_err(|e| e.to_string())?;
            for mask in 0u32..(1 << n) {
                if mask.count_ones() as usize > n - k {
                    continue;
                }
                let rx: Vec<Option<u64>> = (0..n)
                    .map(|i| (mask >> i & 1 == 0).then_some(word[i]))
                    .collect();
                check(c.decode(&rx).ok().as_ref() == Some(&msg), || {
                    format!("N={n} K={k} mask={mask:b}")
                })?;
                exhaustive += 1;
            }
        }
    }

    let mut random = 0;
    for n in [16usize, 64, 256, 1024] {
        for alpha in [0.25, 0.5, 0.75] {
            let c = CodecParams::for_network(n, alpha).map_err(|e| e.to_string())?;
            let erasures = (alpha * n as f64).floor() as usize;
            let mut msg = Vec::new();
            let mut word = Vec::new();
            for i in 0..1000 {
                if i % 10 == 0 {
                    msg = (0..c.k).map(|_| rng.gen_range(0..c.p())).collect();
                    word = c.encode(&msg).map_err(|e| e.to_string())?;
                }
                let mut rx: Vec<Option<u64>> = word.iter().copied().map(Some).collect();
                for j in sample(&mut rng, n, erasures) {
                    rx[j] = None;
                }
                check(c.decode(&rx).ok().as_ref() == Some(&msg), || {
                    format!("n={n} alpha={alpha} pattern {i}")
                })?;
                random += 1;
            }
        }
    }
    Ok(format!(
        "{exhaustive} exhaustive patterns, {random} random patterns, golden vector"
    ))
}

fn c8_store_rounds() -> Outcome {
    let mut checked = 0;
    for n in [16usize, 64, 100] {
        for alpha in [0.25, 0.5] {
            for spec in [AdversarySpec::None, AdversarySpec::Random { p: 0.02 }] {
                let codec = CodecParams::for_network(n, alpha).map_err(|e| e.to_string())?;
                let mut storage = Storage::new(codec);
                let mut net = Network::new(SimConfig::new(n, alpha).with_seed(9))
                    .map_err(|e| e.to_string())?;
                let mut adv = spec.build(n, alpha, 9);
                let rho_n = codec.k;
                for (key, mult) in [1usize, 2, 5].into_iter().enumerate() {
                    let len = mult * rho_n;
                    let blob: Vec<u64> = (0..len as u64).map(|x| (x * 7 + 3) % codec.p()).collect();
                    let node = net.alive().ones().next().map(NodeId::from_index).unwrap();
                    let before = net.round();
                    let stored = storage
                        .net_store(&mut net, &mut adv, node, key as u64, &blob)
                        .map_err(|e| e.to_string())?;
                    let store_rounds = net.round() - before;
                    let node = net.alive().ones().next().map(NodeId::from_index).unwrap();
                    let before = net.round();
                    let got = storage
                        .net_retrieve(&mut net, &mut adv, node, key as u64, len)
                        .map_err(|e| e.to_string())?;
                    let retrieve_rounds = net.round() - before;
                    let parts = len.div_ceil(rho_n) as u64;
                    check(
                        store_rounds == parts && retrieve_rounds == 1 + parts,
                        || {
                            format!("n={n} alpha={alpha} |S|={len}: store {store_rounds}, retrieve {retrieve_rounds}, expected {parts} and {}", parts + 1)
                        },
                    )?;
                    check(
                        !stored || got.as_deref().is_none_or(|g| g == &blob[..]),
                        || format!("n={n} alpha={alpha} |S|={len}: retrieved blob differs"),
                    )?;
                    checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "{checked} store/retrieve pairs match the closed forms"
    ))
}

// --------------------------------------------------------------- simulation

fn c9_simulation() -> Outcome {
    let started = Instant::now();
    let mut runs = 0;
    for alg in corpus() {
        for n in [16usize, 32, 64] {
            for spec in AdversarySpec::suite() {
                let alpha = 0.5;
                let mut net = Network::new(SimConfig::new(n, alpha).with_seed(21))
                    .map_err(|e| e.to_string())?;
                let mut adv = spec.build(n, alpha, 21);
                let params = SimParams::new(alpha, 21);
                let out = simulate(&mut net, &mut adv, alg.as_ref(), &params)
                    .map_err(|e| format!("{} n={n} {spec}: {e}", alg.name()))?;
                check(out.outputs == out.reference_outputs, || {
                    format!(
                        "{} n={n} {spec}: outputs differ from the crash-free run",
                        alg.name()
                    )
                })?;
                runs += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(600), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("{runs} runs match the crash-free reference"))
}

/// Crashes a fixed set of nodes silently in the first round it is asked.
struct CrashOnce(Vec<NodeId>);

impl CrashAdversary for CrashOnce {
    fn decide(&mut self, _: &RoundView<'_>) -> CrashDecision {
        CrashDecision::crash_all_silent(std::mem::take(&mut self.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FuzzKind {
    Compute,
    Deliver,
    Adopt,
}

/// Everything one fuzz execution leaves behind.
#[derive(Debug, PartialEq)]
struct FuzzResult {
    directories: Vec<crashclique::store::Directory>,
    collected: Option<Vec<Vec<Option<u64>>>>,
    completed: FixedBitSet,
}

struct FuzzCase {
    n: usize,
    alpha: f64,
    alg: Box<dyn SimulatedAlgorithm>,
    round: usize,
    compact: bool,
    kind: FuzzKind,
    crashed: Vec<NodeId>,
    /// Tasks (1-based identities) to execute.
    tasks: Vec<u64>,
    /// Slots of the duplicated run.
    dup_slots: Vec<Vec<Option<u64>>>,
    /// Identity announced by each node, for the delivery executor.
    announced: Vec<Option<u32>>,
    seed: u64,
}

fn fuzz_case(rng: &mut ChaCha8Rng, seed: u64) -> FuzzCase {
    let n = rng.gen_range(5..=10);
    let alpha = [0.0, 0.25, 0.5][rng.gen_range(0..3)];
    let algs = corpus();
    let pick = rng.gen_range(0..algs.len());
    let alg = algorithm_by_name(algs[pick].name(), None).unwrap();
    let round = rng.gen_range(1..=alg.rounds());
    let kind = [FuzzKind::Compute, FuzzKind::Deliver, FuzzKind::Adopt][rng.gen_range(0..3)];
    let budget = (alpha * n as f64).floor() as usize;
    let crash_count = rng.gen_range(0..=budget);
    let crashed: Vec<NodeId> = sample(rng, n, crash_count)
        .into_iter()
        .map(NodeId::from_index)
        .collect();
    let alive: Vec<usize> = (0..n)
        .filter(|v| !crashed.iter().any(|c| c.index() == *v))
        .collect();
    let count = rng.gen_range(1..=alive.len());
    let tasks: Vec<u64> = sample(rng, n, count)
        .into_iter()
        .map(|l| l as u64 + 1)
        .collect();

    // Duplicated run: every task runs on 1..=3 nodes in the first slot, and a
    // random subset runs again in a second slot.
    let mut dup_slots = Vec::new();
    let mut first = vec![None; n];
    let mut free: Vec<usize> = alive.clone();
    for &t in &tasks {
        let copies = rng.gen_range(1..=3);
        for c in 0..copies {
            if free.is_empty() || (c > 0 && free.len() < tasks.len()) {
                break;
            }
            let v = free.swap_remove(rng.gen_range(0..free.len()));
            first[v] = Some(t);
        }
    }
    for &t in &tasks {
        if !first.contains(&Some(t)) {
            // Every task must appear at least once; a node is always free
            // because there are at least as many live nodes as tasks.
            let v = (0..n)
                .find(|v| alive.contains(v) && first[*v].is_none())
                .unwrap();
            first[v] = Some(t);
        }
    }
    dup_slots.push(first);
    let mut second = vec![None; n];
    for &t in &tasks {
        if rng.gen_bool(0.5) {
            let v = alive[rng.gen_range(0..alive.len())];
            if second[v].is_none() {
                second[v] = Some(t);
            }
        }
    }
    dup_slots.push(second);

    let announced = (0..n)
        .map(|_| rng.gen_bool(0.7).then(|| rng.gen_range(1..=n as u32)))
        .collect();
    FuzzCase {
        n,
        alpha,
        alg,
        round,
        compact: rng.gen_bool(0.5),
        kind,
        crashed,
        tasks,
        dup_slots,
        announced,
        seed,
    }
}

fn run_fuzz(case: &FuzzCase, slots: &[Vec<Option<u64>>]) -> Result<FuzzResult, String> {
    let n = case.n;
    let keys = KeyMap { n };
    let codec = CodecParams::for_network(n, case.alpha).map_err(|e| e.to_string())?;
    let mut storage = Storage::new(codec);
    let reference = reference_run(case.alg.as_ref(), n);
    let r = case.round;
    let err = |e: &dyn std::fmt::Display| e.to_string();
    for l in 0..n {
        let id = NodeId::from_index(l);
        for j in 0..r {
            storage
                .preload(
                    keys.key(BlobKind::Received, id, j),
                    &reference.received[j][l],
                )
                .map_err(|e| err(&e))?;
        }
        storage
            .preload(
                keys.key(BlobKind::Messages, id, r),
                &reference.messages[r][l],
            )
            .map_err(|e| err(&e))?;
        if r >= 2 {
            let mut state = case.alg.init_state(n, id, &reference.received[0][l]);
            for j in 1..=r - 2 {
                state = case
                    .alg
                    .fold_state(n, id, j, &state, &reference.received[j][l]);
            }
            storage
                .preload(keys.key(BlobKind::State, id, r - 2), &state)
                .map_err(|e| err(&e))?;
        }
    }
    let mut net =
        Network::new(SimConfig::new(n, case.alpha).with_seed(case.seed)).map_err(|e| err(&e))?;
    net.idle_round(&mut CrashOnce(case.crashed.clone()))
        .map_err(|e| err(&e))?;
    let mut stats = SimStats::default();
    let mut completed = FixedBitSet::with_capacity(n + 1);
    let mut collected = None;
    let mut adv = NoCrashes;
    match case.kind {
        FuzzKind::Compute => {
            let mut exec = ComputeMessages {
                alg: case.alg.as_ref(),
                storage: &mut storage,
                keys,
                round: r,
                compact: case.compact,
                stats: &mut stats,
            };
            for slot in slots {
                let ok = exec
                    .run_slot(&mut net, &mut adv, slot)
                    .map_err(|e| err(&e))?;
                mark(&mut completed, slot, &ok);
            }
        }
        FuzzKind::Deliver => {
            let identities: Vec<Vec<Option<u32>>> = vec![case.announced.clone(); n];
            let mut exec = Deliver {
                storage: &mut storage,
                keys,
                round: r,
                identities: &identities,
                collected: vec![vec![None; n]; n],
                stats: &mut stats,
            };
            for slot in slots {
                let ok = exec
                    .run_slot(&mut net, &mut adv, slot)
                    .map_err(|e| err(&e))?;
                mark(&mut completed, slot, &ok);
            }
            collected = Some(exec.collected);
        }
        FuzzKind::Adopt => {
            let mut exec = AdoptAndCollect {
                storage: &mut storage,
                keys,
                round: r,
                inner: TcParams::new(n, 4, 0.3, case.seed),
                cache: FamilyCache::new(),
                stats: &mut stats,
                inner_outcomes: None,
            };
            for slot in slots {
                let ok = exec
                    .run_slot(&mut net, &mut adv, slot)
                    .map_err(|e| err(&e))?;
                mark(&mut completed, slot, &ok);
            }
        }
    }
    Ok(FuzzResult {
        directories: storage.directories().to_vec(),
        collected,
        completed,
    })
}

fn mark(completed: &mut FixedBitSet, slot: &[Option<u64>], ok: &[bool]) {
    for (t, &done) in slot.iter().zip(ok) {
        if let (Some(t), true) = (t, done) {
            completed.insert(*t as usize);
        }
    }
}

fn c10_idempotence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut counts = [0usize; 3];
    for i in 0..1000u64 {
        let case = fuzz_case(&mut rng, i);
        let mut single = vec![None; case.n];
        let mut free = (0..case.n).filter(|v| !case.crashed.iter().any(|c| c.index() == *v));
        for &t in &case.tasks {
            single[free.next().unwrap()] = Some(t);
        }
        let once = run_fuzz(&case, &[single])?;
        let twice = run_fuzz(&case, &case.dup_slots)?;
        check(once == twice, || {
            format!(
                "case {i}: {:?} n={} alpha={} {} r={} compact={} differs",
                case.kind,
                case.n,
                case.alpha,
                case.alg.name(),
                case.round,
                case.compact
            )
        })?;
        check(once.completed.count_ones(..) == case.tasks.len(), || {
            format!("case {i}: not every task completed")
        })?;
        counts[case.kind as usize] += 1;
    }
    Ok(format!(
        "1000 cases ({} compute, {} deliver, {} adopt) identical to single execution",
        counts[0], counts[1], counts[2]
    ))
}

// -------------------------------------------------------------- lower bound

fn c11_lower_bound() -> Outcome {
    let mut details = Vec::new();
    for n in [256usize, 1024] {
        let alpha = 0.5;
        let s = Scenario {
            n,
            tasks: n,
            r: 1,
            alpha,
            adversary: AdversarySpec::LowerBound,
            seed: 1,
            ..Scenario::default()
        };
        let run = run_tc(&s, false).map_err(|e| e.to_string())?;
        let steps = run.lower_bound.clone().unwrap_or_default();
        let budget = (alpha * n as f64).floor() as usize;
        check(run.metrics.crashes <= budget, || {
            format!("n={n}: {} crashes > {budget}", run.metrics.crashes)
        })?;
        let mut step = 1;
        while LowerBound::target_size(n, alpha, step) >= LowerBound::MIN_KEPT {
            let target = LowerBound::target_size(n, alpha, step);
            let st = steps
                .iter()
                .find(|st| st.step == step)
                .ok_or_else(|| format!("n={n}: adversary never reached step {step}"))?;
            let incomplete = run.outcome.incomplete_after(st.round);
            check(incomplete >= target, || {
                format!(
                    "n={n} step {step}: {incomplete} incomplete after round {} < {target}",
                    st.round
                )
            })?;
            details.push(format!("n={n} step {step}: {incomplete} >= {target}"));
            step += 1;
        }
    }
    Ok(details.join("; "))
}

// -------------------------------------------------------------- determinism

fn c12_determinism() -> Outcome {
    let scenarios = [
        "experiment = run-tc\nn = 64\nM = 256\nR = 3\nalpha = 0.5\nadversary = random:p=0.03\nseed = 17\n",
        "experiment = run-tc\nn = 128\nM = 128\nalpha = 0.5\nadversary = lowerbound\nseed = 4\n",
        "experiment = run-tc\nn = 32\nM = 64\nalpha = 0.75\nadversary = targeted:task=5\nseed = 8\n",
    ];
    let mut compared = 0;
    for text in scenarios {
        let s = Scenario::parse(text).map_err(|e| e.to_string())?;
        let a = tc_artifacts(&s)?;
        let b = tc_artifacts(&s)?;
        check(a == b, || format!("{}: replay differs", s.banner()))?;
        compared += 1;
    }
    for alg in ["token", "prefix-sum"] {
        let a = sim_artifacts(alg)?;
        let b = sim_artifacts(alg)?;
        check(a == b, || format!("{alg}: simulation replay differs"))?;
        compared += 1;
    }
    Ok(format!("{compared} scenarios replayed byte-identically"))
}

fn tc_artifacts(s: &Scenario) -> Result<Vec<Vec<u8>>, String> {
    let run = run_tc(s, true).map_err(|e| e.to_string())?;
    let mut iterations = Vec::new();
    write_iterations_csv(run.outcome.iterations(), &mut iterations).map_err(|e| e.to_string())?;
    let mut rows = crashclique::harness::run_scenario(s).map_err(|e| e.to_string())?;
    rows.iter_mut().for_each(|r| r.wallclock = 0.0);
    let mut metrics = Vec::new();
    write_metrics_csv(&rows, &mut metrics).map_err(|e| e.to_string())?;
    Ok(vec![
        run.messages_csv.unwrap_or_default().into_bytes(),
        run.crashes_csv.unwrap_or_default().into_bytes(),
        iterations,
        metrics,
    ])
}

fn sim_artifacts(alg: &str) -> Result<Vec<Vec<u8>>, String> {
    let n = 16;
    let alpha = 0.5;
    let alg = algorithm_by_name(alg, None).unwrap();
    let mut net =
        Network::new(SimConfig::new(n, alpha).with_seed(33)).map_err(|e| e.to_string())?;
    net.record_trace();
    let mut adv = AdversarySpec::Random { p: 0.02 }.build(n, alpha, 33);
    let out = simulate(&mut net, &mut adv, alg.as_ref(), &SimParams::new(alpha, 33))
        .map_err(|e| e.to_string())?;
    let trace = net.take_trace().ok_or("no trace")?;
    let phases: String = out
        .phases
        .iter()
        .map(|p| {
            format!(
                "{},{},{},{}\n",
                p.round,
                p.phase.as_str(),
                p.rounds,
                p.crashes
            )
        })
        .collect();
    Ok(vec![
        trace.messages_csv().into_bytes(),
        trace.crashes_csv().into_bytes(),
        phases.into_bytes(),
    ])
}

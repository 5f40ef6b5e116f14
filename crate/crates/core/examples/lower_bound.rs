//! Plays the lower-bound adversary against task completion with one-round
//! tasks and prints each step's guarantee next to the ledger.
//!
//! cargo run --release --example lower_bound -- [n] [alpha]

use crashclique::adversary::{AdversarySpec, LowerBound};
use crashclique::harness::{run_tc, Scenario};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(1024, |s| s.parse().expect("n"));
    let alpha: f64 = args.get(1).map_or(0.5, |s| s.parse().expect("alpha"));

    let s = Scenario {
        n,
        tasks: n,
        r: 1,
        alpha,
        adversary: AdversarySpec::LowerBound,
        ..Scenario::default()
    };
    let run = run_tc(&s, false).expect("run");
    for st in run.lower_bound.as_deref().unwrap_or_default() {
        println!(
            "step {} at round {:>3}: kept {:>4} (target {:>4}), incomplete {:>4}, crashed {:>3}, max attempts {} <= {}",
            st.step,
            st.round,
            st.kept,
            LowerBound::target_size(n, alpha, st.step),
            run.outcome.incomplete_after(st.round),
            st.crashed,
            st.max_attempts,
            st.attempt_bound
        );
    }
    println!(
        "rounds={} crashes={} budget={} all verified={}",
        run.metrics.rounds,
        run.metrics.crashes,
        (alpha * n as f64).floor(),
        run.outcome.all_verified()
    );
}

//! Runs task completion against every adversary in the suite and prints the
//! per-iteration progress of the first batch.
//!
//! cargo run --release --example task_completion -- [n] [M] [R] [alpha]

use crashclique::adversary::AdversarySpec;
use crashclique::harness::{run_tc, Scenario};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(128, |s| s.parse().expect("n"));
    let tasks: usize = args.get(1).map_or(2 * n, |s| s.parse().expect("M"));
    let r: u64 = args.get(2).map_or(1, |s| s.parse().expect("R"));
    let alpha: f64 = args.get(3).map_or(0.5, |s| s.parse().expect("alpha"));

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
            ..Scenario::default()
        };
        let run = run_tc(&s, false).expect("run");
        println!(
            "{spec:<16} rounds={:>6} crashes={:>4} iterations={:>4} completed={}/{tasks} sound={} progress_ok={}",
            run.metrics.rounds,
            run.metrics.crashes,
            run.outcome.iteration_count(),
            run.outcome.completed_tasks(),
            run.outcome.sound(),
            run.outcome.progress_ok()
        );
        if spec.name() == "random" {
            for it in run.outcome.iterations().filter(|it| it.batch == 1).take(8) {
                println!(
                    "    iteration {:>2}: k={:>4} unverified={:>4} alive={:>4} crashes={:>3}",
                    it.iteration, it.k, it.unverified, it.alive, it.crashes_so_far
                );
            }
        }
    }
}

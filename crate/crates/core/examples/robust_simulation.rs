//! Simulates a corpus algorithm under crashes and compares the stored outputs
//! with a fault-free run.
//!
//! cargo run --release --example robust_simulation -- [algo] [n] [alpha] [adversary]

use std::time::Instant;

use crashclique::adversary::AdversarySpec;
use crashclique::net::{Network, SimConfig};
use crashclique::sim::{algorithm_by_name, simulate, SimParams};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let algo = args.first().map_or("prefix-sum", String::as_str);
    let n: usize = args.get(1).map_or(32, |s| s.parse().expect("n"));
    let alpha: f64 = args.get(2).map_or(0.5, |s| s.parse().expect("alpha"));
    let spec: AdversarySpec = args
        .get(3)
        .map_or("random", String::as_str)
        .parse()
        .expect("adversary");

    let alg = algorithm_by_name(algo, None).expect("unknown algorithm");
    let mut net = Network::new(SimConfig::new(n, alpha).with_seed(7)).expect("config");
    let mut adv = spec.build(n, alpha, 7);
    let started = Instant::now();
    let out =
        simulate(&mut net, &mut adv, alg.as_ref(), &SimParams::new(alpha, 7)).expect("simulation");

    println!(
        "algorithm={} n={n} T={} adversary={spec}",
        out.algorithm, out.t
    );
    for p in &out.phases {
        println!(
            "  r={} phase={:<8} rounds={:>7} crashes={:>3} iterations={}",
            p.round,
            p.phase.as_str(),
            p.rounds,
            p.crashes,
            p.iterations
        );
    }
    println!(
        "rounds={} crashes={} messages={} matches_reference={} elapsed={:.2?}",
        out.rounds,
        net.crashes(),
        net.metrics().messages,
        out.matches_reference(),
        started.elapsed()
    );
}

//! Sweeps n over powers of two and reports rounds / log2 n for the worst
//! adversary, then fits simulation rounds over T.
//!
//! cargo run --release --example scaling_sweep

use crashclique::harness::{scaling_sweep, sim_growth, Scenario};

fn main() {
    let base = Scenario {
        n: 64,
        tasks: 64,
        alpha: 0.5,
        ..Scenario::default()
    };
    let report = scaling_sweep(&base, &[64, 128, 256, 512, 1024]).expect("sweep");
    for row in &report.rows {
        println!(
            "n={:>5} {:<16} rounds={:>5} crashes={:>4} rounds/log2n={:.2}",
            row.n, row.adversary, row.rounds, row.crashes, row.ratio
        );
    }
    println!("spread of worst ratios: {:.3}", report.spread);

    let sim = Scenario {
        n: 16,
        algo: "token".into(),
        alpha: 0.25,
        ..Scenario::default()
    };
    let fit = sim_growth(&sim, &[1, 2, 3, 4]).expect("simulation");
    println!(
        "simulation at n=16: rounds {:?}, fit c1={:.2} c2={:.2}, worst factor {:.2}",
        fit.points, fit.c1, fit.c2, fit.worst_factor
    );
}

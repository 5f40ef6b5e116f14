//! Generates a covering family, checks its set sizes and samples the load
//! balance over random k-subsets.
//!
//! cargo run --release --example covering_family -- [n] [m] [k] [B] [epsilon]

use crashclique::covering::{
    certify_load_balance, generate_with_retry, verify_size_bounds, FamilyParams,
};

fn main() {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .take(4)
        .map(|s| s.parse().expect("integer"))
        .collect();
    let n = args.first().copied().unwrap_or(512);
    let m = args.get(1).copied().unwrap_or(128);
    let k = args.get(2).copied().unwrap_or(64);
    let b = args.get(3).copied().unwrap_or(16);
    let eps: f64 = std::env::args()
        .nth(5)
        .map_or(0.3, |s| s.parse().expect("epsilon"));

    let params = FamilyParams::new(n, m, k, b, eps, 1);
    let family = generate_with_retry(params, 16).expect("generation");
    let sizes = verify_size_bounds(&family);
    let (lo, hi) = params.load_bounds();
    println!(
        "n={n} m={m} k={k} B={b} eps={eps} p={:.4}",
        params.inclusion_probability()
    );
    println!(
        "set sizes must lie in [{}, {}]: {} violations, smallest {} largest {}",
        sizes.lower,
        sizes.upper,
        sizes.violations.len(),
        (1..=family.len())
            .map(|i| family.set_size(i))
            .min()
            .unwrap(),
        (1..=family.len())
            .map(|i| family.set_size(i))
            .max()
            .unwrap()
    );

    let cert = certify_load_balance(&family, k, 2000, 2).expect("certification");
    let mean_good: f64 =
        cert.per_sample.iter().map(|s| s.good as f64).sum::<f64>() / cert.samples as f64;
    println!("{cert}");
    println!(
        "loads in [{lo}, {hi}] on {:.1}% of nodes on average; {} nodes required",
        100.0 * mean_good / n as f64,
        params.min_good()
    );

    let degenerate =
        generate_with_retry(FamilyParams::new(n, m, b, b, eps, 1), 16).expect("generation");
    let cert = certify_load_balance(&degenerate, b, 200, 3).expect("certification");
    println!("k = B: {cert}");
}

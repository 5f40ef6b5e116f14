//! Stores a blob across the network, crashes nodes, and reads it back.
//!
//! cargo run --release --example erasure_store -- [n] [alpha] [len]

use crashclique::adversary::Frontload;
use crashclique::ecc::CodecParams;
use crashclique::net::{Network, NodeId, SimConfig};
use crashclique::store::Storage;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(64, |s| s.parse().expect("n"));
    let alpha: f64 = args.get(1).map_or(0.5, |s| s.parse().expect("alpha"));

    let codec = CodecParams::for_network(n, alpha).expect("codec");
    let len: usize = args.get(2).map_or(3 * codec.k, |s| s.parse().expect("len"));
    println!(
        "n={n} alpha={alpha}: p={} K={} N={} relative distance {:.3}",
        codec.p(),
        codec.k,
        codec.n,
        codec.relative_distance()
    );

    let blob: Vec<u64> = (0..len as u64).map(|x| (x * x + 1) % codec.p()).collect();
    let mut storage = Storage::new(codec);
    let mut net = Network::new(SimConfig::new(n, alpha)).expect("config");
    let mut quiet = crashclique::adversary::NoCrashes;

    let start = net.round();
    storage
        .net_store(&mut net, &mut quiet, NodeId::new(1), 42, &blob)
        .expect("store");
    println!("stored {len} symbols in {} rounds", net.round() - start);

    // The lowest ids go first, including the writer.
    let mut crash = Frontload::new();
    net.idle_round(&mut crash).expect("crash round");
    let reader = NodeId::from_index(net.alive().ones().next().expect("survivor"));
    println!("{} nodes crashed; node {reader} reads", net.crashes());

    let start = net.round();
    let got = storage
        .net_retrieve(&mut net, &mut quiet, reader, 42, len)
        .expect("retrieve");
    println!(
        "retrieved in {} rounds, intact: {}",
        net.round() - start,
        got.as_deref() == Some(&blob[..])
    );
}

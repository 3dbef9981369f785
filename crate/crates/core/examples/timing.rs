//! Wall time of one full ensemble vector: `cargo run --release --example timing [side]`.

use std::time::Instant;

use censemble::config::Config;
use censemble::pipeline::compute_ensemble;
use censemble::synth::{default_specs, render};

fn main() {
    let side: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(400);
    let cfg = Config { target_pixels: side * side, ..Config::default() };
    for spec in default_specs(1) {
        let img = render(&spec, 0, 1900.0, side, side);
        let t = Instant::now();
        let v = compute_ensemble(&img, &cfg).expect("ensemble");
        println!("{:15} {} features in {:.3}s", spec.label, v.len(), t.elapsed().as_secs_f64());
    }
}

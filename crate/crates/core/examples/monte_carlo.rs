//! Monte Carlo over the default parameter ranges.
//!
//!     cargo run --release --example monte_carlo -- [SEED] [SAMPLES]

use streamgwp::diary::synth_average_participant;
use streamgwp::params::default_params;
use streamgwp::scenarios::{default_ranges, monte_carlo, McConfig, DEFAULT_SAMPLES, DEFAULT_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(DEFAULT_SEED);
    let samples = args.next().map(|s| s.parse()).transpose()?.unwrap_or(DEFAULT_SAMPLES);
    let params = default_params();
    let cfg = McConfig::triangular_around(&params, &default_ranges(), seed, samples)?;
    let s = monte_carlo(&params, &synth_average_participant(), None, &cfg)?;
    println!("seed {seed}, {} samples", s.n_samples);
    println!("mean {:.4}  sd {:.4}", s.mean, s.sd);
    println!("p5 {:.4}  p50 {:.4}  p95 {:.4}  (kg CO2-eq./week)", s.p5, s.p50, s.p95);
    Ok(())
}

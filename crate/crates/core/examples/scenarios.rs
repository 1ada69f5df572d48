//! Built-in what-if scenarios against the average participant, plus one
//! composed on the fly.

use streamgwp::diary::synth_average_participant;
use streamgwp::engine::FootprintOptions;
use streamgwp::params::default_params;
use streamgwp::scenarios::{apply_scenario, builtin_scenario, weekly_total, BUILTIN_SCENARIOS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = default_params();
    let ds = synth_average_participant();
    let opts = FootprintOptions::default();
    let baseline = weekly_total(&params, &ds, None, opts)?;
    println!("{:<40} {:>8} {:>8}", "scenario", "kg/week", "change");
    println!("{:<40} {:>8.3}", "baseline", baseline);

    let mut specs: Vec<_> = BUILTIN_SCENARIOS.iter().map(|(n, _)| builtin_scenario(n).unwrap()).collect();
    specs.push(specs[0].merge(&specs[1]));
    for spec in &specs {
        let (p, d) = apply_scenario(spec, &params, &ds)?;
        let total = weekly_total(&p, &d, None, opts)?;
        println!("{:<40} {:>8.3} {:>7.1}%", spec.name, total, 100.0 * (total / baseline - 1.0));
    }
    Ok(())
}

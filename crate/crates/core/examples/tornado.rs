//! One-at-a-time sensitivity of the average participant's weekly footprint.

use streamgwp::diary::synth_average_participant;
use streamgwp::params::default_params;
use streamgwp::scenarios::{default_ranges, tornado};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = tornado(&default_params(), &synth_average_participant(), None, &default_ranges())?;
    println!("baseline {:.3} kg CO2-eq./week\n", report.baseline_total);
    for r in report.rows.iter().take(12) {
        let bar = "#".repeat((r.swing / report.baseline_total * 200.0).round() as usize);
        println!(
            "{:<36} ±{:>2.0}%  {:.3} .. {:.3}  {bar}",
            r.key.to_string(),
            100.0 * r.fraction,
            r.low_total.min(r.high_total),
            r.low_total.max(r.high_total)
        );
    }
    Ok(())
}

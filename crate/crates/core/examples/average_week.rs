//! Footprint of the built-in average participant, grouped like the published figures.

use streamgwp::diary::{synth_average_participant, AVERAGE_PARTICIPANT};
use streamgwp::engine::{annual_budget_share, annual_kg, footprint, FootprintOptions, DEFAULT_ANNUAL_BUDGET_KG};
use streamgwp::params::default_params;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = default_params();
    let ds = synth_average_participant();
    let week = footprint(&params, &ds, &AVERAGE_PARTICIPANT.into(), FootprintOptions::default())?;

    println!("{:<30} {:>7} {:>10} {:>10} {:>10} {:>10}", "", "hours", "device", "electric", "traffic", "total");
    let row = |label: &str, c: &streamgwp::engine::Cell| {
        println!(
            "{:<30} {:>7.3} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            label, c.hours, c.gwp.production_kg, c.gwp.operation_kg, c.gwp.traffic_kg, c.gwp.total()
        );
    };
    for (device, cell) in week.by_device() {
        row(device.label(), &cell);
    }
    println!();
    for (platform, cell) in week.by_platform() {
        row(platform.label(), &cell);
    }
    println!();
    for ((platform, device), cell) in week.by_platform_device() {
        row(&format!("{} / {}", platform.as_str(), device.as_str()), &cell);
    }

    let total = week.total().gwp.total();
    println!();
    println!("weekly total      {total:.3} kg CO2-eq.");
    println!("annualised        {:.1} kg CO2-eq.", annual_kg(total));
    println!(
        "budget share      {:.2} % of {DEFAULT_ANNUAL_BUDGET_KG} kg",
        100.0 * annual_budget_share(total, DEFAULT_ANNUAL_BUDGET_KG)?
    );
    Ok(())
}

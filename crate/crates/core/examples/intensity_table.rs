//! Per-hour GWP intensity of each device, optionally under another grid mix.
//!
//!     cargo run --example intensity_table -- 0.3

use streamgwp::engine::intensity_table;
use streamgwp::params::default_params;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut params = default_params();
    if let Some(g) = std::env::args().nth(1) {
        params.grid_device.kg_per_kwh = g.parse()?;
        params.grid_device.region_label = "custom".into();
        params.validate()?;
    }
    println!("device grid: {} ({} kg/kWh)", params.grid_device.region_label, params.grid_device.kg_per_kwh);
    println!("{:<12} {:>10} {:>12} {:>10} {:>8}", "kg/h", "device", "electricity", "traffic", "sum");
    for r in intensity_table(&params)? {
        println!(
            "{:<12} {:>10.4} {:>12.4} {:>10.4} {:>8.4}",
            r.device.label(),
            r.production_kg_per_h,
            r.electricity_kg_per_h,
            r.traffic_kg_per_h,
            r.total_kg_per_h
        );
    }
    Ok(())
}

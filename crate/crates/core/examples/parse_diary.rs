//! Parse a diary and profile file and summarise what was read.
//!
//!     cargo run --example parse_diary -- diary.csv profiles.csv
//!
//! Without arguments the built-in average participant is used.

use streamgwp::diary::{parse_dataset, synth_average_participant, weekly_device_hours};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let ds = match args.as_slice() {
        [diary, profiles] => parse_dataset(diary, profiles)?,
        [] => synth_average_participant(),
        _ => return Err("usage: parse_diary [DIARY.csv PROFILES.csv]".into()),
    };
    println!("{} participants, {} entries", ds.participants().len(), ds.entries().len());
    for w in ds.warnings() {
        println!("warning: {w}");
    }
    for id in ds.participant_ids() {
        let hours = weekly_device_hours(&ds, id)?;
        let list: Vec<String> = hours.iter().map(|(d, h)| format!("{d} {h:.2} h")).collect();
        println!("{id}: {}", list.join(", "));
    }
    Ok(())
}

//! Writes the full report set for the built-in average participant into a
//! directory, the same way the `streamgwp` binary does.
//!
//!     cargo run --example reports -- out/

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "reports".into());
    let commands: [&[&str]; 6] = [
        &["intensity"],
        &["footprint", "--by", "device"],
        &["footprint", "--by", "platform-device"],
        &["scenario", "--scenario", "phone_instead_of_tv"],
        &["tornado"],
        &["mc", "--samples", "2000"],
    ];
    for args in commands {
        let mut argv = vec!["streamgwp"];
        argv.extend(args);
        argv.extend(["--out-dir", &dir, "--format", "delimited"]);
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = streamgwp::cli::run(argv, &mut out, &mut err);
        eprint!("{}", String::from_utf8_lossy(&err));
        println!("{} -> exit {code}", args.join(" "));
    }
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .map(|d| d.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    files.sort();
    println!("wrote {} files to {dir}: {}", files.len(), files.join(", "));
}

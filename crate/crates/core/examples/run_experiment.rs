//! Driving the experiment runner from code: take a preset, shrink it, and
//! write its CSV series and manifest to a directory.

use std::path::PathBuf;

use mbsense::experiment::{preset, run};

fn main() {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("mbsense-demo"));
    let mut cfg = preset("fig9").expect("known preset");
    cfg.trials = 5_000;
    match run(&cfg.to_toml(), None, Some(&out)) {
        Ok(m) => {
            println!("{} -> {}", m.experiment, out.display());
            for (file, rows) in &m.series {
                println!("  {file}: {rows} rows");
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}

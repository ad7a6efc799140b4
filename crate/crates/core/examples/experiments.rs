//! Runs the experiments from a config file (or the defaults) and writes
//! the tables into a directory.
//!
//! cargo run --release --example experiments -- [config] [out_dir]

use std::path::PathBuf;
use std::time::Instant;

use xplain::eval::{emit_tables, run_all, tables, ExperimentConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(p) => {
            ExperimentConfig::parse(&std::fs::read_to_string(p).expect("readable config")).expect("valid config")
        }
        None => ExperimentConfig::default(),
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "runs/experiments".into()));
    let t = Instant::now();
    let rep = run_all(&cfg).expect("experiments run");
    emit_tables(&rep, &out).expect("tables written");
    for (name, text) in tables(&rep) {
        println!("{name}\n{text}");
    }
    eprintln!("done in {:?}", t.elapsed());
}

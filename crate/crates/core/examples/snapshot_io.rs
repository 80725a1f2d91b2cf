//! Writes a short run to a directory, reads a snapshot back and checks that it
//! reproduces the final state bit for bit.
//!
//! ```text
//! cargo run --release --example snapshot_io -- [out_dir]
//! ```

use std::path::PathBuf;

use logch::config::RunConfig;
use logch::io::{read_snapshot, snapshot_name, write_run};
use logch::timestepper::run;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("logch_snapshot_io"), PathBuf::from);
    let cfg = RunConfig {
        t_end: 2e-4,
        record_every: 5,
        snapshot_every: 10,
        out_dir: dir.clone(),
        ..RunConfig::default()
    };
    let out = run(&cfg).expect("run");
    for path in write_run(&dir, &cfg, &out, true).expect("write") {
        println!("{}", path.display());
    }

    let last = &out.final_state;
    let (g, t) = read_snapshot(dir.join(snapshot_name(last.step))).expect("read");
    let identical = g.values().iter().zip(last.g.values()).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("step {} at t = {t}: bit-identical = {identical}", last.step);
}

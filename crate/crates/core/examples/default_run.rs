//! Evolves the default configuration and summarizes the monitored quantities.
//!
//! ```text
//! cargo run --release --example default_run -- [t_end]
//! ```

use std::time::Instant;

use logch::config::RunConfig;
use logch::diagnostics::{bounded_monitors, energy_increases, mass_drift};
use logch::timestepper::run;

fn main() {
    let mut cfg = RunConfig::default();
    if let Some(t) = std::env::args().nth(1) {
        cfg.t_end = t.parse().expect("t_end must be a number");
    }
    let start = Instant::now();
    let out = match run(&cfg) {
        Ok(out) => out,
        Err(fail) => {
            eprintln!("run failed: {fail}");
            std::process::exit(2);
        }
    };
    let secs = start.elapsed().as_secs_f64();
    let steps = out.final_state.step;

    println!("{:>12} {:>24} {:>24} {:>12} {:>12}", "t", "mass_u", "energy", "max|u|", "|grad K|");
    for r in &out.records {
        println!(
            "{:>12.5e} {:>24.16e} {:>24.16e} {:>12.6} {:>12.5e}",
            r.t, r.mass_u, r.energy, r.max_abs_u, r.grad_k_l2
        );
    }
    println!();
    println!("{steps} steps in {secs:.2} s ({:.2} ms/step)", 1e3 * secs / steps.max(1) as f64);
    println!("mass drift          {:.3e}", mass_drift(&out.records));
    println!("energy increases    {}", energy_increases(&out.records).len());
    println!("separation floor    {:.6e}", out.separation_floor());
    println!("monitor violations  {}", bounded_monitors(&out.records).len());
}

//! Evolves the transformed equation next to direct `u` solvers with the
//! truncated and exact logarithmic potentials, from the same smooth `u₀`.
//!
//! ```text
//! cargo run --release --example compare_baselines -- [dt] [t_end] [amplitude] [band]
//! ```

use std::time::Instant;

use logch::compare::compare;
use logch::config::{ICSpec, RunConfig};
use logch::dynamics::PotentialMode;

fn main() {
    let mut args = std::env::args().skip(1);
    let dt: f64 = args.next().map_or(1e-5, |s| s.parse().expect("dt"));
    let t_end: f64 = args.next().map_or(0.1, |s| s.parse().expect("t_end"));
    let amplitude: f64 = args.next().map_or(0.3, |s| s.parse().expect("amplitude"));
    let band: usize = args.next().map_or(1, |s| s.parse().expect("band"));
    let mut cfg = RunConfig {
        t_end,
        ic: ICSpec::RandomPerturbation {
            mean_u: 0.2,
            amplitude,
            band,
        },
        record_every: 1000,
        ..RunConfig::default()
    };
    cfg.scheme.dt = dt;

    let baselines = [PotentialMode::Truncated(100), PotentialMode::ExactLog];
    let start = Instant::now();
    let report = match compare(&cfg, &baselines) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("compare failed: {e}");
            std::process::exit(2);
        }
    };
    println!("{:.1} s", start.elapsed().as_secs_f64());
    print!("{:>8} {:>14} {:>14}", "t", "mass (g)", "energy (g)");
    for b in &baselines {
        print!(" {:>22}", format!("|du| {b}"));
    }
    println!();
    for r in &report.rows {
        print!("{:>8.4} {:>14.10} {:>14.10}", r.t, r.transformed.mass_u, r.transformed.energy);
        for d in &r.max_diff_u {
            print!(" {d:>22.3e}");
        }
        println!();
    }
}

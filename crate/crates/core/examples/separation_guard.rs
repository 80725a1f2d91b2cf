//! A stripe integrated with a step far too coarse for it. The solver stops
//! with a separation-loss error instead of producing |u| ≥ 1, and the last
//! good state is returned.
//!
//! ```text
//! cargo run --release --example separation_guard
//! ```

use logch::config::{ICSpec, RunConfig};
use logch::spectral::GridSpec;
use logch::timestepper::{run, SchemeSpec};

fn main() {
    let cfg = RunConfig {
        grid: GridSpec::new(32).unwrap(),
        scheme: SchemeSpec {
            dt: 1e-3,
            ..SchemeSpec::default()
        },
        t_end: 0.1,
        ic: ICSpec::TanhStripe { width: 0.5 },
        record_every: 1,
        ..RunConfig::default()
    };
    match run(&cfg) {
        Ok(out) => println!("unexpectedly survived to t = {}", out.final_state.t),
        Err(fail) => {
            println!("stopped: {}", fail.error);
            println!("numerical failure: {}", fail.error.is_numerical());
            let last = &fail.partial.final_state;
            println!("last good state: step {}, t = {}, max|u| = {}", last.step, last.t, last.g.max_abs().tanh());
            for r in &fail.partial.records {
                println!("  t = {:.3e}  max|u| = {:.17}  max|g| = {:.3}", r.t, r.max_abs_u, r.max_abs_g);
            }
        }
    }
}

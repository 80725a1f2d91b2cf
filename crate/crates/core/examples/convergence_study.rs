//! Temporal order of ETD1 and ETDRK2 on a smooth configuration, measured
//! against a Richardson-extrapolated reference.
//!
//! ```text
//! cargo run --release --example convergence_study
//! ```

use logch::config::{ICSpec, RunConfig};
use logch::timestepper::{convergence_study, SchemeKind};

fn main() {
    let mut cfg = RunConfig {
        t_end: 2e-3,
        ic: ICSpec::RandomPerturbation {
            mean_u: 0.2,
            amplitude: 0.1,
            band: 1,
        },
        ..RunConfig::default()
    };
    let dts = [4e-5, 2e-5, 1e-5, 5e-6, 2.5e-6];
    for kind in [SchemeKind::Etd1, SchemeKind::Etdrk2] {
        cfg.scheme.kind = kind;
        let table = convergence_study(&cfg, &dts).expect("study");
        println!("{kind} (formal order {})", kind.order());
        for r in &table.rows {
            match r.observed_order {
                Some(o) => println!("  dt = {:<8e} error = {:.4e}  order = {o:.3}", r.dt, r.error),
                None => println!("  dt = {:<8e} error = {:.4e}", r.dt, r.error),
            }
        }
    }
}

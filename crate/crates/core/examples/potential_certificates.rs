//! Scalar facts about the logarithmic potential: binodal and spinodal points,
//! the quartic approximation and how fast the Taylor truncation converges.
//!
//! ```text
//! cargo run --release --example potential_certificates -- [theta] [theta_c]
//! ```

use logch::potential::{binodal, f_of_u, fpp_of_u, free_energy_f, spinodal, truncated_f, PotentialParams};
use logch::verify::quartic_minima;

fn main() {
    let arg = |i: usize, d: f64| std::env::args().nth(i).map_or(d, |s| s.parse().expect("numeric argument"));
    let p = match PotentialParams::new(arg(1, 1.0), arg(2, 2.0), 1.0) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    println!("theta = {}, theta_c = {}", p.theta, p.theta_c);

    let ub = binodal(&p).unwrap();
    let us = spinodal(&p).unwrap();
    println!("binodal   u+ = {ub:.16}   f(u+)   = {:.3e}", f_of_u(ub, &p).unwrap());
    println!("spinodal  us = {us:.16}   F''(us) = {:.3e}", fpp_of_u(us, &p).unwrap());
    println!("well depth F(u+) = {:.12}", free_energy_f(ub, &p).unwrap());

    println!();
    println!("truncated series F_N vs exact F");
    println!("{:>6} {:>14} {:>14} {:>14}", "N", "u = 0.5", "u = 0.9", "u = 0.99");
    for order in [1, 2, 5, 10, 20, 50, 100] {
        print!("{order:>6}");
        for u in [0.5, 0.9, 0.99] {
            let err = (truncated_f(u, order, &p) - free_energy_f(u, &p).unwrap()).abs();
            print!(" {err:>14.3e}");
        }
        println!();
    }

    println!();
    let [lo, hi] = quartic_minima(0.75).unwrap();
    println!("quartic minima at theta/theta_c = 3/4: {lo:.15}, {hi:.15}");
}

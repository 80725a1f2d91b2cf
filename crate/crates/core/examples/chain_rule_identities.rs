//! Checks the chain-rule expansions of the derivatives of `u = tanh g` and the
//! assembled right-hand side against spectral oracles computed on a 4× finer
//! grid, for random band-limited `g` of growing bandwidth.
//!
//! ```text
//! cargo run --release --example chain_rule_identities -- [n] [sup|g|]
//! ```

use logch::dynamics::rhs_g;
use logch::potential::PotentialParams;
use logch::spectral::{GridSpec, SpectralGrid};
use logch::verify::{identity_errors, max_test_band, random_band_limited, rhs_error};

fn main() {
    let n: usize = std::env::args().nth(1).map_or(128, |s| s.parse().expect("n"));
    let sup: f64 = std::env::args().nth(2).map_or(2.0, |s| s.parse().expect("sup"));
    let grid = GridSpec::new(n).expect("grid size");
    let sg = SpectralGrid::new(grid);
    let p = PotentialParams::default();

    println!("n = {n}, max|g| = {sup}, relative L-inf errors");
    println!(
        "{:>5} {:>11} {:>11} {:>11} {:>11} {:>11}",
        "band", "grad u", "lap u", "grad lap u", "bilap u", "rhs"
    );
    for band in 1..=max_test_band(grid) {
        let g = random_band_limited(grid, band, sup, band as u64).unwrap();
        let e = identity_errors(&sg, &g).unwrap();
        let r = rhs_error(&sg, &g, &p).unwrap();
        println!(
            "{band:>5} {:>11.2e} {:>11.2e} {:>11.2e} {:>11.2e} {r:>11.2e}",
            e[0], e[1], e[2], e[3]
        );
    }

    let g = random_band_limited(grid, 3, sup, 7).unwrap();
    let b = rhs_g(&sg, &g, &p).unwrap();
    println!();
    println!("term sizes (max abs) for a band-3 field");
    println!("{:>14} {:>11.4e}", "total", b.total.max_abs());
    for (name, f) in b.terms() {
        println!("{name:>14} {:>11.4e}", f.max_abs());
    }
}

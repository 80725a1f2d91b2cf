//! The self-check suite behind `logch verify`: chain-rule identities and the
//! right-hand side against spectral oracles, scalar certificates of the
//! potential, and invariants of a short run.

use std::fmt;

use crate::config::{make_initial, ICSpec, RunConfig};
use crate::diagnostics::{bounded_monitors, energy_increases, mass_drift};
use crate::dynamics::{rhs_g, rhs_g_oracle_refined, GDerivatives};
use crate::error::Result;
use crate::potential::{binodal, f_of_u, fpp_of_u, quartic_f, spinodal, truncated_f, truncated_f_prime, PotentialParams};
use crate::spectral::{Axis, GridSpec, RealField, SpectralGrid};
use crate::timestepper::{run, Formulation, SchemeKind, SchemeSpec, State, Stepper};
use crate::transform::{bilap_u_expansion, grad_lap_u_expansion, grad_u_expansion, lap_u_expansion};

/// Refinement factor of the spectral oracles.
pub const ORACLE_REFINEMENT: usize = 4;

/// Largest Fourier bandwidth of the random test fields.
///
/// Two limits apply: cubic products of `∇g` must stay inside the 2/3-rule band
/// (band ≤ n/9) for the dealiased expansions to be exact, and `tanh g` with
/// `max|g| = 2` must be resolved by the refined oracle, which holds up to
/// about `n/16` at refinement 4.
pub fn max_test_band(grid: GridSpec) -> usize {
    (grid.n() / 16).clamp(1, 8)
}

/// A random field with `max(|mx|,|my|) ≤ band`, zero mean and `max|g| = sup`.
pub fn random_band_limited(grid: GridSpec, band: usize, sup: f64, seed: u64) -> Result<RealField> {
    make_initial(
        &ICSpec::RandomPerturbation {
            mean_u: 0.0,
            amplitude: sup,
            band,
        },
        grid,
        seed,
    )
}

/// Derivatives of `u = tanh g` taken spectrally on a grid `factor` times finer.
#[derive(Clone, Debug)]
pub struct UDerivatives {
    pub grad: [RealField; 2],
    pub lap: RealField,
    pub grad_lap: [RealField; 2],
    pub bilap: RealField,
}

pub fn u_derivatives_oracle(sg: &SpectralGrid, g: &RealField, factor: usize) -> Result<UDerivatives> {
    let fine = sg.refine(g, factor)?;
    let fsg = SpectralGrid::new(fine.grid());
    let u = fine.map(f64::tanh);
    let down = |f: RealField| sg.restrict(&f, factor);
    let lap = fsg.laplacian(&u)?;
    Ok(UDerivatives {
        grad: [down(fsg.derivative(&u, Axis::X)?)?, down(fsg.derivative(&u, Axis::Y)?)?],
        grad_lap: [down(fsg.derivative(&lap, Axis::X)?)?, down(fsg.derivative(&lap, Axis::Y)?)?],
        lap: down(lap)?,
        bilap: down(fsg.bilaplacian(&u)?)?,
    })
}

/// The same derivatives from the chain-rule expansions in `g`.
pub fn u_derivatives_expanded(sg: &SpectralGrid, g: &RealField) -> Result<UDerivatives> {
    let d = GDerivatives::compute(sg, g)?;
    let grid = g.grid();
    let field = |f: &dyn Fn(usize) -> f64| RealField::from_vec(grid, (0..d.len()).map(f).collect());
    Ok(UDerivatives {
        grad: [
            field(&|i| grad_u_expansion(&d.jet(i), 0))?,
            field(&|i| grad_u_expansion(&d.jet(i), 1))?,
        ],
        lap: field(&|i| lap_u_expansion(&d.jet(i)))?,
        grad_lap: [
            field(&|i| grad_lap_u_expansion(&d.jet(i), 0))?,
            field(&|i| grad_lap_u_expansion(&d.jet(i), 1))?,
        ],
        bilap: field(&|i| bilap_u_expansion(&d.jet(i)))?,
    })
}

/// `max|a - b| / max|b|` over all components.
pub fn rel_linf(a: &[&RealField], b: &[&RealField]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.max_abs()).fold(0.0, f64::max);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Relative errors of `[∂ᵢu, Δu, Δ∂ᵢu, Δ²u]`, expansion vs oracle.
pub fn identity_errors(sg: &SpectralGrid, g: &RealField) -> Result<[f64; 4]> {
    let o = u_derivatives_oracle(sg, g, ORACLE_REFINEMENT)?;
    let e = u_derivatives_expanded(sg, g)?;
    Ok([
        rel_linf(&[&e.grad[0], &e.grad[1]], &[&o.grad[0], &o.grad[1]]),
        rel_linf(&[&e.lap], &[&o.lap]),
        rel_linf(&[&e.grad_lap[0], &e.grad_lap[1]], &[&o.grad_lap[0], &o.grad_lap[1]]),
        rel_linf(&[&e.bilap], &[&o.bilap]),
    ])
}

/// Relative error of the assembled right-hand side against `cosh²(g)ΔK`.
pub fn rhs_error(sg: &SpectralGrid, g: &RealField, p: &PotentialParams) -> Result<f64> {
    let r = rhs_g(sg, g, p)?.total;
    let o = rhs_g_oracle_refined(sg, g, p, ORACLE_REFINEMENT)?;
    Ok(rel_linf(&[&r], &[&o]))
}

/// Sign change of `f` on `[lo, hi]`, bisected to machine precision.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Roots of `F_1'` away from the origin for `theta/theta_c = ratio`
/// (`theta_c = 1`), found by bisection on `[-1.5, -0.5]` and `[0.5, 1.5]`.
pub fn quartic_minima(ratio: f64) -> Result<[f64; 2]> {
    let p = PotentialParams::new(ratio, 1.0, 1.0)?;
    let d = |u: f64| truncated_f_prime(u, 1, &p);
    Ok([bisect(d, -1.5, -0.5), bisect(d, 0.5, 1.5)])
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<44} {:>12.3e} <= {:<10.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance
        )
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub config: RunConfig,
    pub fields: usize,
    pub steps: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            config: RunConfig::default(),
            fields: 20,
            steps: 1000,
        }
    }
}

/// Runs every check; the suite passes when all of them do.
pub fn run_suite(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let cfg = &opts.config;
    cfg.validate()?;
    let p = cfg.params;
    let sg = SpectralGrid::new(cfg.grid);
    let mut checks = Vec::new();

    let band = max_test_band(cfg.grid);
    let mut worst = [0.0f64; 5];
    for k in 0..opts.fields {
        let g = random_band_limited(cfg.grid, 1 + k % band, 2.0, cfg.seed.wrapping_add(k as u64))?;
        let ids = identity_errors(&sg, &g)?;
        for (w, e) in worst.iter_mut().zip(ids.iter().chain([rhs_error(&sg, &g, &p)?].iter())) {
            *w = w.max(*e);
        }
    }
    for (name, w) in ["identity grad u", "identity lap u", "identity grad lap u", "identity bilap u"]
        .iter()
        .zip(worst)
    {
        checks.push(Check::at_most(*name, w, 1e-7));
    }
    checks.push(Check::at_most("rhs vs cosh^2(g) lap K", worst[4], 1e-6));

    let ub = binodal(&p)?;
    checks.push(Check::at_most("|f(binodal)|", f_of_u(ub, &p)?.abs(), 1e-12));
    checks.push(Check::at_most("|F''(spinodal)|", fpp_of_u(spinodal(&p)?, &p)?.abs(), 1e-12));
    let quartic_gap = (-100..=100)
        .map(|i| {
            let u = i as f64 / 101.0;
            (truncated_f(u, 1, &p) - quartic_f(u, &p)).abs()
        })
        .fold(0.0, f64::max);
    checks.push(Check::at_most("|F_1 - F_quartic|", quartic_gap, 1e-14));
    let minima = quartic_minima(0.75)?;
    checks.push(Check::at_most(
        "quartic minima at +-1 (theta/theta_c = 3/4)",
        (minima[0] + 1.0).abs().max((minima[1] - 1.0).abs()),
        1e-10,
    ));

    let mut steady = 0.0f64;
    for kind in [SchemeKind::Etd1, SchemeKind::Etdrk2] {
        let mut st = Stepper::new(&sg, SchemeSpec::new(kind, cfg.scheme.dt)?, p.nu)?;
        for c in [-3.0, -0.4, 0.0, 0.7, 5.0] {
            let mut s = State::initial(RealField::constant(cfg.grid, c));
            for _ in 0..100 {
                let next = st.step(&s, Formulation::Transformed, &p)?;
                steady = steady.max(next.g.max_abs_diff(&s.g));
                s = next;
            }
        }
    }
    checks.push(Check::at_most("constant state change per step", steady, 1e-14));

    let mut short = cfg.clone();
    short.t_end = cfg.scheme.dt * opts.steps as f64;
    short.record_every = short.record_every.min(opts.steps.max(1));
    match run(&short) {
        Ok(out) => {
            checks.push(Check::at_most("mass drift", mass_drift(&out.records), 1e-8));
            checks.push(Check::at_most(
                "energy increases",
                energy_increases(&out.records).len() as f64,
                0.0,
            ));
            checks.push(Check::at_most(
                "max |u| (strictly below 1)",
                out.records.iter().map(|r| r.max_abs_u).fold(0.0, f64::max),
                1.0 - f64::EPSILON,
            ));
            checks.push(Check::at_most(
                "bounded-monitor violations",
                bounded_monitors(&out.records).len() as f64,
                0.0,
            ));
        }
        Err(fail) => checks.push(Check {
            name: format!("run ({})", fail.error),
            value: f64::NAN,
            tolerance: 0.0,
            passed: false,
        }),
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_resolves_test_fields() {
        let grid = GridSpec::new(64).unwrap();
        let sg = SpectralGrid::new(grid);
        let p = PotentialParams::default();
        for band in [1, 3, max_test_band(grid)] {
            let g = random_band_limited(grid, band, 2.0, band as u64).unwrap();
            assert_eq!(g.max_abs(), 2.0);
            let e = identity_errors(&sg, &g).unwrap();
            assert!(e.iter().all(|&x| x <= 1e-7), "band {band}: {e:?}");
            assert!(rhs_error(&sg, &g, &p).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn quartic_minima_track_closed_form() {
        // F_1' = theta u^3/3 + (theta - theta_c) u vanishes at u² = 3(theta_c - theta)/theta
        for ratio in [0.6, 0.75, 0.9] {
            let [lo, hi] = quartic_minima(ratio).unwrap();
            let exact = (3.0 * (1.0 - ratio) / ratio).sqrt();
            if exact > 0.5 && exact < 1.5 {
                assert!((hi - exact).abs() < 1e-12 && (lo + exact).abs() < 1e-12, "{ratio}");
            }
        }
    }
}

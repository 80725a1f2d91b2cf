//! Run-time monitors: mass, energy, separation, `‖∇K‖₂` and the means of
//! `g` and `K`.
//!
//! Integrals over the unit torus are grid means.

use crate::dynamics::{chemical_potential_k, check_guard, LapUMode};
use crate::error::Result;
use crate::potential::{free_energy_f, PotentialParams};
use crate::spectral::{RealField, SpectralGrid};
use crate::timestepper::State;
use crate::transform::{ln_cosh, one_minus_abs_u, sech2};

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Mean of `u`.
    pub mass_u: f64,
    /// Ginzburg–Landau energy `ψ`.
    pub energy: f64,
    pub max_abs_u: f64,
    pub max_abs_g: f64,
    pub grad_k_l2: f64,
    pub g_mean: f64,
    pub k_mean: f64,
    /// `‖g - ḡ‖₂`
    pub g_fluct_l2: f64,
    /// `ψ(tₙ) - ψ(tₙ₋₁)` against the previous record; absent on the first.
    pub dissipation_check: Option<f64>,
}

impl DiagnosticsRecord {
    /// CSV column names, in order.
    pub const COLUMNS: [&'static str; 10] = [
        "t",
        "mass_u",
        "energy",
        "max_abs_u",
        "max_abs_g",
        "grad_K_L2",
        "g_mean",
        "K_mean",
        "g_fluct_L2",
        "dissipation_check",
    ];

    /// `1 - max|u|`, computed without cancellation.
    pub fn separation_floor(&self) -> f64 {
        one_minus_abs_u(self.max_abs_g)
    }

    pub fn values(&self) -> [Option<f64>; 10] {
        [
            Some(self.t),
            Some(self.mass_u),
            Some(self.energy),
            Some(self.max_abs_u),
            Some(self.max_abs_g),
            Some(self.grad_k_l2),
            Some(self.g_mean),
            Some(self.k_mean),
            Some(self.g_fluct_l2),
            self.dissipation_check,
        ]
    }
}

/// `F(tanh g) = θ(g tanh g - ln cosh g) - (θ_c/2) tanh²g`, finite for every finite `g`.
pub fn bulk_energy_g(g: f64, p: &PotentialParams) -> f64 {
    let u = g.tanh();
    p.theta * (g * u - ln_cosh(g)) - 0.5 * p.theta_c * u * u
}

/// `ψ = ∫ (ν/2)|∇u|² + F(u)` with `|∇u|² = sech⁴(g)|∇g|²`.
pub fn energy(sg: &SpectralGrid, g: &RealField, p: &PotentialParams) -> Result<f64> {
    check_guard(g.values())?;
    let [gx, gy] = sg.gradient(g)?;
    let n = g.values().len();
    let mut sum = 0.0;
    for i in 0..n {
        let gv = g.values()[i];
        let s2 = sech2(gv);
        let grad_u2 = s2 * s2 * (gx.values()[i].powi(2) + gy.values()[i].powi(2));
        sum += 0.5 * p.nu * grad_u2 + bulk_energy_g(gv, p);
    }
    Ok(sum / n as f64)
}

/// Energy of a `u` field with the logarithmic `F`; NaN if any `|u| ≥ 1`.
pub fn energy_u(sg: &SpectralGrid, u: &RealField, p: &PotentialParams) -> Result<f64> {
    let [ux, uy] = sg.gradient(u)?;
    let n = u.values().len();
    let mut sum = 0.0;
    for i in 0..n {
        let f = free_energy_f(u.values()[i], p).unwrap_or(f64::NAN);
        sum += 0.5 * p.nu * (ux.values()[i].powi(2) + uy.values()[i].powi(2)) + f;
    }
    Ok(sum / n as f64)
}

/// Mean of `tanh g`.
pub fn mass(g: &RealField) -> f64 {
    g.values().iter().map(|v| v.tanh()).sum::<f64>() / g.values().len() as f64
}

/// `(max|u|, max|g|)` with `max|u| = tanh(max|g|)`.
pub fn separation(g: &RealField) -> (f64, f64) {
    let max_abs_g = g.max_abs();
    (max_abs_g.tanh(), max_abs_g)
}

/// `‖∇K‖₂` by Parseval.
pub fn grad_k_norm(sg: &SpectralGrid, g: &RealField, p: &PotentialParams) -> Result<f64> {
    let k = chemical_potential_k(sg, g, p, LapUMode::Expansion)?;
    grad_l2_parseval(sg, &k)
}

fn grad_l2_parseval(sg: &SpectralGrid, f: &RealField) -> Result<f64> {
    let fh = sg.forward(f)?;
    let n2 = f.values().len() as f64;
    let s: f64 = fh
        .coeffs()
        .iter()
        .zip(sg.k_squared())
        .map(|(c, k2)| k2 * c.norm_sqr())
        .sum();
    Ok(s.sqrt() / n2)
}

/// Every diagnostic of `s`; `dissipation_check` is filled when `prev_energy` is given.
pub fn record(sg: &SpectralGrid, s: &State, prev_energy: Option<f64>, p: &PotentialParams) -> Result<DiagnosticsRecord> {
    let g = &s.g;
    let k = chemical_potential_k(sg, g, p, LapUMode::Expansion)?;
    let e = energy(sg, g, p)?;
    let (max_abs_u, max_abs_g) = separation(g);
    let g_mean = g.mean();
    let g_fluct_l2 = (g.values().iter().map(|v| (v - g_mean).powi(2)).sum::<f64>() / g.values().len() as f64).sqrt();
    Ok(DiagnosticsRecord {
        t: s.t,
        mass_u: mass(g),
        energy: e,
        max_abs_u,
        max_abs_g,
        grad_k_l2: grad_l2_parseval(sg, &k)?,
        g_mean,
        k_mean: k.mean(),
        g_fluct_l2,
        dissipation_check: prev_energy.map(|pe| e - pe),
    })
}

/// Rows where `ψ` rose by more than `1e-10·(1+|ψ|)`.
pub fn energy_increases(records: &[DiagnosticsRecord]) -> Vec<usize> {
    records
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].energy - w[0].energy > 1e-10 * (1.0 + w[0].energy.abs()))
        .map(|(i, _)| i + 1)
        .collect()
}

/// Largest `|mass(t) - mass(0)|` over the records.
pub fn mass_drift(records: &[DiagnosticsRecord]) -> f64 {
    match records.first() {
        Some(r0) => records.iter().map(|r| (r.mass_u - r0.mass_u).abs()).fold(0.0, f64::max),
        None => 0.0,
    }
}

/// A bounded-quantity monitor that tripped.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorViolation {
    pub quantity: &'static str,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

/// `‖∇K‖₂` must stay within 2× its running max after the first 10% of the
/// records; `‖g-ḡ‖₂`, `|ḡ|` and `|K̄|` within 10× their max over the first 10%.
pub fn bounded_monitors(records: &[DiagnosticsRecord]) -> Vec<MonitorViolation> {
    let mut out = Vec::new();
    if records.is_empty() {
        return out;
    }
    let head = (records.len() / 10).max(1);
    let getters: [(&'static str, fn(&DiagnosticsRecord) -> f64); 3] = [
        ("g_fluct_L2", |r| r.g_fluct_l2),
        ("g_mean", |r| r.g_mean.abs()),
        ("K_mean", |r| r.k_mean.abs()),
    ];
    for (name, get) in getters {
        let ref_max = records[..head].iter().map(get).fold(0.0, f64::max);
        let bound = 10.0 * ref_max;
        for r in &records[head..] {
            // a quantity that starts at zero must stay at round-off
            if get(r) > bound.max(1e-12) {
                out.push(MonitorViolation {
                    quantity: name,
                    t: r.t,
                    value: get(r),
                    bound,
                });
            }
        }
    }
    let mut running = records[..head].iter().map(|r| r.grad_k_l2).fold(0.0, f64::max);
    for r in &records[head..] {
        if r.grad_k_l2 > 2.0 * running.max(1e-12) {
            out.push(MonitorViolation {
                quantity: "grad_K_L2",
                t: r.t,
                value: r.grad_k_l2,
                bound: 2.0 * running,
            });
        }
        running = running.max(r.grad_k_l2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    const P: PotentialParams = PotentialParams {
        theta: 1.0,
        theta_c: 2.0,
        nu: 1.0,
    };

    fn sg(n: usize) -> SpectralGrid {
        SpectralGrid::new(GridSpec::new(n).unwrap())
    }

    #[test]
    fn constant_fields() {
        let s = sg(16);
        let z = RealField::zeros(s.grid());
        assert_eq!(energy(&s, &z, &P).unwrap(), 0.0);
        assert_eq!(mass(&z), 0.0);
        assert_eq!(separation(&z), (0.0, 0.0));
        assert_eq!(grad_k_norm(&s, &z, &P).unwrap(), 0.0);
        for c in [0.3, -1.7, 4.0] {
            let g = RealField::constant(s.grid(), c);
            let e = energy(&s, &g, &P).unwrap();
            let f = free_energy_f(c.tanh(), &P).unwrap();
            assert!((e - f).abs() < 1e-12, "{e} {f}");
            assert!(grad_k_norm(&s, &g, &P).unwrap() < 1e-12);
        }
    }

    #[test]
    fn stable_energy_form_matches_direct() {
        for i in 0..=1000 {
            let g = -5.0 + 10.0 * i as f64 / 1000.0;
            let direct = free_energy_f(g.tanh(), &P).unwrap();
            assert!((bulk_energy_g(g, &P) - direct).abs() <= 1e-10, "g = {g}");
        }
        // still finite where tanh g rounds to ±1
        assert!(bulk_energy_g(40.0, &P).is_finite());
        assert!(free_energy_f(40f64.tanh(), &P).is_err());
    }

    #[test]
    fn odd_field_has_zero_mass() {
        let s = sg(32);
        let g = RealField::from_fn(s.grid(), |x, y| (2.0 * PI * x).sin() * (1.0 + 0.5 * (2.0 * PI * y).cos()) * 3.0);
        assert!(mass(&g).abs() <= 1e-14);
    }

    #[test]
    fn spike_separation() {
        let s = sg(16);
        let mut g = RealField::zeros(s.grid());
        g.values_mut()[17] = 10.0;
        assert_eq!(separation(&g), (10f64.tanh(), 10.0));
        assert!(separation(&g).0 < 1.0);
    }

    #[test]
    fn grad_k_matches_linearization() {
        let s = sg(64);
        let lin = 4.0 * PI * PI * P.nu - P.theta_c + P.theta;
        for eps in [1e-2, 5e-3] {
            let g = RealField::from_fn(s.grid(), |x, _| eps * (2.0 * PI * x).cos());
            let exact = lin * eps * 2.0 * PI / 2f64.sqrt();
            let got = grad_k_norm(&s, &g, &P).unwrap();
            let rel = (got - exact).abs() / exact;
            assert!(rel <= 10.0 * eps * eps, "{rel}");
        }
    }

    #[test]
    fn record_fields() {
        let s = sg(16);
        let st = State {
            g: RealField::constant(s.grid(), 0.5),
            t: 0.25,
            step: 3,
        };
        let r0 = record(&s, &st, None, &P).unwrap();
        assert!(r0.dissipation_check.is_none());
        assert_eq!(r0.t, 0.25);
        assert!((r0.max_abs_u - r0.max_abs_g.tanh()).abs() <= 1e-12);
        let r1 = record(&s, &st, Some(r0.energy), &P).unwrap();
        assert_eq!(r1.dissipation_check, Some(0.0));
        assert!((r0.k_mean - (-P.theta_c * 0.5f64.tanh() + P.theta * 0.5)).abs() < 1e-14);
        assert_eq!(r0.g_fluct_l2, 0.0);
    }
}

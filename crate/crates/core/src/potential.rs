//! Flory–Huggins logarithmic free energy and its regularized variants.
//!
//! With `theta < theta_c` the bulk energy
//!
//! ```text
//! F(u) = theta/2 [(1+u) ln(1+u) + (1-u) ln(1-u)] - theta_c/2 u^2
//! ```
//!
//! is a symmetric double well on (-1, 1) with minima at the binodal points
//! `±u₊` and a concave region `(-u_s, u_s)` (the spinodal interval).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::atanh_odd;

/// Physical constants of the free energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialParams {
    /// Temperature.
    pub theta: f64,
    /// Critical temperature.
    pub theta_c: f64,
    /// Gradient-energy coefficient.
    pub nu: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            theta: 1.0,
            theta_c: 2.0,
            nu: 1.0,
        }
    }
}

impl PotentialParams {
    pub fn new(theta: f64, theta_c: f64, nu: f64) -> Result<Self> {
        let p = Self { theta, theta_c, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return Err(Error::invalid("theta", format!("must be positive, got {}", self.theta)));
        }
        if !(self.theta_c.is_finite() && self.theta_c > self.theta) {
            return Err(Error::invalid(
                "theta_c",
                format!(
                    "must exceed theta (deep quench 0 < theta < theta_c), got theta = {}, theta_c = {}",
                    self.theta, self.theta_c
                ),
            ));
        }
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::invalid("nu", format!("must be positive, got {}", self.nu)));
        }
        Ok(())
    }
}

fn check_open_interval(what: &'static str, u: f64) -> Result<()> {
    if u.abs() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value: u })
    }
}

/// Bulk free energy `F(u)`.
pub fn free_energy_f(u: f64, p: &PotentialParams) -> Result<f64> {
    check_open_interval("free_energy_F", u)?;
    // (1+u)ln(1+u) + (1-u)ln(1-u) rearranged so small |u| does not cancel
    let entropy = 2.0 * u * atanh_odd(u) + (-u * u).ln_1p();
    Ok(0.5 * p.theta * entropy - 0.5 * p.theta_c * u * u)
}

/// `f = F'(u) = -theta_c u + theta/2 ln((1+u)/(1-u))`.
pub fn f_of_u(u: f64, p: &PotentialParams) -> Result<f64> {
    check_open_interval("f_of_u", u)?;
    Ok(-p.theta_c * u + p.theta * atanh_odd(u))
}

/// `F''(u) = theta/(1-u^2) - theta_c`.
pub fn fpp_of_u(u: f64, p: &PotentialParams) -> Result<f64> {
    check_open_interval("fpp_of_u", u)?;
    Ok(p.theta / ((1.0 - u) * (1.0 + u)) - p.theta_c)
}

fn require_deep_quench(what: &'static str, p: &PotentialParams) -> Result<()> {
    if p.theta > 0.0 && p.theta < p.theta_c {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value: p.theta / p.theta_c,
        })
    }
}

/// Positive binodal point `u₊`, the root of `(1/u) ln((1+u)/(1-u)) = 2 theta_c/theta`.
///
/// The left-hand side is increasing on (0, 1), so plain bisection is used.
pub fn binodal(p: &PotentialParams) -> Result<f64> {
    require_deep_quench("binodal", p)?;
    let target = p.theta_c / p.theta;
    // atanh(u)/u - theta_c/theta, negative near 0 and +inf at 1
    let q = |u: f64| u.atanh() / u - target;
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Spinodal point `u_s = sqrt(1 - theta/theta_c)`.
pub fn spinodal(p: &PotentialParams) -> Result<f64> {
    require_deep_quench("spinodal", p)?;
    Ok((1.0 - p.theta / p.theta_c).sqrt())
}

/// Partial sum `F_N(u) = -theta_c/2 u^2 + theta sum_{k=0}^{N} u^{2k+2}/((2k+1)(2k+2))`.
pub fn truncated_f(u: f64, order: usize, p: &PotentialParams) -> f64 {
    let u2 = u * u;
    let mut power = u2;
    let mut sum = 0.0;
    for k in 0..=order {
        let k = k as f64;
        let next = sum + power / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
        // later terms are smaller still (|u| < 1), so the sum is final
        if next == sum && u2 < 1.0 {
            break;
        }
        sum = next;
        power *= u2;
    }
    -0.5 * p.theta_c * u2 + p.theta * sum
}

/// Derivative of [`truncated_f`]: `-theta_c u + theta sum_{k=0}^{N} u^{2k+1}/(2k+1)`.
pub fn truncated_f_prime(u: f64, order: usize, p: &PotentialParams) -> f64 {
    let u2 = u * u;
    let mut power = u;
    let mut sum = 0.0;
    for k in 0..=order {
        let next = sum + power / (2 * k + 1) as f64;
        if next == sum && u2 < 1.0 {
            break;
        }
        sum = next;
        power *= u2;
    }
    -p.theta_c * u + p.theta * sum
}

/// The usual quartic approximation `theta/2 u^4/6 + (theta - theta_c)/2 u^2`.
pub fn quartic_f(u: f64, p: &PotentialParams) -> f64 {
    let u2 = u * u;
    0.5 * p.theta * u2 * u2 / 6.0 + 0.5 * (p.theta - p.theta_c) * u2
}

/// C¹ logarithm regularization: `ln r` above `eps`, its tangent line below.
pub fn phi_eps(r: f64, eps: f64) -> f64 {
    if r >= eps {
        r.ln()
    } else {
        eps.ln() - 1.0 + r / eps
    }
}

/// Chemical potential with both logarithms replaced by [`phi_eps`]; defined on all of R.
pub fn phi_eps_f(u: f64, eps: f64, p: &PotentialParams) -> f64 {
    -p.theta_c * u + 0.5 * p.theta * (phi_eps(1.0 + u, eps) - phi_eps(1.0 - u, eps))
}

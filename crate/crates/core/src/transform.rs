//! The change of variables `u = tanh g` and the chain-rule expansions of
//! `Δu`, `Δ∂ᵢu` and `Δ²u` in terms of derivatives of `g`.
//!
//! Every finite `g` maps to `|u| < 1`, so working in `g` keeps the solution
//! strictly separated from the pure phases by construction. The factor
//! `1/(1-u²)` that appears when dividing the `u` equation through by `u'(g)`
//! is `cosh²g`, which is finite for finite `g`.

use crate::error::{Error, Result};

/// Largest `|g|` for which [`cosh2`] is evaluated. `cosh²(300) ≈ 2.4e259`.
pub const G_MAX: f64 = 300.0;

#[inline]
pub fn u_of_g(g: f64) -> f64 {
    g.tanh()
}

/// `1 - |tanh g|` evaluated as `2e^{-2|g|}/(1+e^{-2|g|})`. Stays positive long
/// after `tanh g` itself has rounded to 1.
#[inline]
pub fn one_minus_abs_u(g: f64) -> f64 {
    let e = (-2.0 * g.abs()).exp();
    2.0 * e / (1.0 + e)
}

/// `atanh` made exactly odd; libm's is not always.
#[inline]
pub(crate) fn atanh_odd(u: f64) -> f64 {
    u.abs().atanh().copysign(u)
}

/// `atanh u`; errors outside the open interval (-1, 1).
pub fn g_of_u(u: f64) -> Result<f64> {
    if u.abs() < 1.0 {
        Ok(atanh_odd(u))
    } else {
        Err(Error::Domain {
            what: "g_of_u",
            value: u,
        })
    }
}

/// `1 - tanh²g` evaluated as `4e^{-2|g|}/(1+e^{-2|g|})²`, which cannot overflow.
#[inline]
pub fn sech2(g: f64) -> f64 {
    let e = (-2.0 * g.abs()).exp();
    let d = 1.0 + e;
    4.0 * e / (d * d)
}

/// `cosh²g = 1/(1-u²)`, guarded by [`G_MAX`].
#[inline]
pub fn cosh2(g: f64) -> Result<f64> {
    if g.abs() > G_MAX || g.is_nan() {
        return Err(Error::Overflow { g, limit: G_MAX });
    }
    let c = g.cosh();
    Ok(c * c)
}

/// `ln cosh g = |g| + ln((1 + e^{-2|g|})/2)`.
#[inline]
pub fn ln_cosh(g: f64) -> f64 {
    let a = g.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln(1+u)` for `u = tanh g`, without forming `1+u`.
#[inline]
pub fn ln_one_plus_u(g: f64) -> f64 {
    g - ln_cosh(g)
}

/// `ln(1-u)` for `u = tanh g`, without forming `1-u`.
#[inline]
pub fn ln_one_minus_u(g: f64) -> f64 {
    -g - ln_cosh(g)
}

/// Derivatives of `g` at one grid point. Repeated indices are summed, so
/// e.g. `gradg_dot_gradlapg = Σᵢ ∂ᵢg ∂ᵢΔg`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointJet {
    pub g: f64,
    pub grad_g: [f64; 2],
    pub lap_g: f64,
    pub grad_lap_g: [f64; 2],
    pub bilap_g: f64,
    /// `∇(|∇g|²)`
    pub grad_gradsq: [f64; 2],
    /// `Δ(|∇g|²)`
    pub lap_gradsq: f64,
    /// `∇·(∇g Δg)`
    pub div_gradg_lapg: f64,
    /// `∇·(∇g |∇g|²)`
    pub div_gradg_gradsq: f64,
    pub gradg_dot_gradlapg: f64,
}

impl PointJet {
    #[inline]
    pub fn gradsq(&self) -> f64 {
        self.grad_g[0] * self.grad_g[0] + self.grad_g[1] * self.grad_g[1]
    }

    #[inline]
    pub fn gradg_dot_grad_gradsq(&self) -> f64 {
        self.grad_g[0] * self.grad_gradsq[0] + self.grad_g[1] * self.grad_gradsq[1]
    }

    pub fn is_finite(&self) -> bool {
        [
            self.g,
            self.grad_g[0],
            self.grad_g[1],
            self.lap_g,
            self.grad_lap_g[0],
            self.grad_lap_g[1],
            self.bilap_g,
            self.grad_gradsq[0],
            self.grad_gradsq[1],
            self.lap_gradsq,
            self.div_gradg_lapg,
            self.div_gradg_gradsq,
            self.gradg_dot_gradlapg,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// `∂ᵢu = (1-u²)∂ᵢg`.
#[inline]
pub fn grad_u_expansion(j: &PointJet, axis: usize) -> f64 {
    sech2(j.g) * j.grad_g[axis]
}

/// `Δu = (1-u²)Δg + (2u³-2u)|∇g|²`.
#[inline]
pub fn lap_u_expansion(j: &PointJet) -> f64 {
    let u = u_of_g(j.g);
    sech2(j.g) * j.lap_g + (2.0 * u * u * u - 2.0 * u) * j.gradsq()
}

/// `Δ∂ᵢu = (1-u²)∂ᵢΔg + (2u³-2u)∂ᵢ(|∇g|²) + (2u³-2u)∂ᵢg Δg + (-6u⁴+8u²-2)∂ᵢg |∇g|²`.
#[inline]
pub fn grad_lap_u_expansion(j: &PointJet, axis: usize) -> f64 {
    let u = u_of_g(j.g);
    let u2 = u * u;
    let c3 = 2.0 * u2 * u - 2.0 * u;
    let c4 = -6.0 * u2 * u2 + 8.0 * u2 - 2.0;
    let gi = j.grad_g[axis];
    sech2(j.g) * j.grad_lap_g[axis] + c3 * j.grad_gradsq[axis] + c3 * gi * j.lap_g + c4 * gi * j.gradsq()
}

/// Full expansion of `Δ²u`:
///
/// ```text
/// (1-u²)Δ²g
///   + (2u³-2u)      [Δ(|∇g|²) + ∇·(∇gΔg) + ∂ᵢg Δ∂ᵢg]
///   + (-6u⁴+8u²-2)  [∇·(∇g|∇g|²) + ∇g·∇(|∇g|²) + |∇g|²Δg]
///   + (-24u³+16u)(1-u²)|∇g|⁴
/// ```
#[inline]
pub fn bilap_u_expansion(j: &PointJet) -> f64 {
    let u = u_of_g(j.g);
    let u2 = u * u;
    let s = sech2(j.g);
    let gradsq = j.gradsq();
    let c3 = 2.0 * u2 * u - 2.0 * u;
    let c4 = -6.0 * u2 * u2 + 8.0 * u2 - 2.0;
    let c5 = (-24.0 * u2 * u + 16.0 * u) * s;
    s * j.bilap_g
        + c3 * (j.lap_gradsq + j.div_gradg_lapg + j.gradg_dot_gradlapg)
        + c4 * (j.div_gradg_gradsq + j.gradg_dot_grad_gradsq() + gradsq * j.lap_g)
        + c5 * gradsq * gradsq
}

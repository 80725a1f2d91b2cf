//! Run configuration (TOML) and initial conditions.
//!
//! Every table and key is optional; missing entries take the defaults below.
//!
//! ```toml
//! t_end = 0.05
//! seed = 0
//! record_every = 100
//! snapshot_every = 1000
//! out_dir = "out"
//! grid = 128
//!
//! [params]
//! theta = 1.0
//! theta_c = 2.0
//! nu = 1.0
//!
//! [scheme]
//! kind = "ETDRK2"
//! dt = 1e-5
//!
//! [ic]
//! kind = "random-perturbation"
//! mean_u = 0.2
//! amplitude = 0.01
//! band = 1
//! ```

use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialParams;
use crate::spectral::{GridSpec, RealField, SpectralGrid};
use crate::timestepper::SchemeSpec;
use crate::transform::g_of_u;

/// Initial data, always specified in the `g` variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ICSpec {
    /// `g₀ = atanh(mean_u) + δ`, with `δ` a random combination of Fourier modes
    /// `max(|mx|,|my|) ≤ band`, zero mean, rescaled so that `max|δ| = amplitude`.
    RandomPerturbation { mean_u: f64, amplitude: f64, band: usize },
    /// `g₀ = cos(2πx)/width`: two flat stripes joined by interfaces of
    /// thickness about `width/2π` in `u`.
    TanhStripe { width: f64 },
    /// `g₀ = amplitude·cos(2π(mx·x + my·y))`.
    SingleMode { m: [i64; 2], amplitude: f64 },
}

impl Default for ICSpec {
    fn default() -> Self {
        ICSpec::RandomPerturbation {
            mean_u: 0.2,
            amplitude: 0.01,
            band: 1,
        }
    }
}

impl ICSpec {
    pub fn validate(&self, grid: GridSpec) -> Result<()> {
        match *self {
            ICSpec::RandomPerturbation { mean_u, amplitude, band } => {
                if !(mean_u.abs() < 1.0) {
                    return Err(Error::invalid("ic.mean_u", format!("{mean_u} is not in (-1, 1)")));
                }
                if !(amplitude > 0.0 && amplitude.is_finite()) {
                    return Err(Error::invalid("ic.amplitude", "must be positive and finite"));
                }
                if band == 0 || band > grid.dealias_cutoff() {
                    return Err(Error::invalid(
                        "ic.band",
                        format!("{band} is not in 1..={}", grid.dealias_cutoff()),
                    ));
                }
            }
            ICSpec::TanhStripe { width } => {
                if !(width > 0.0 && width.is_finite()) {
                    return Err(Error::invalid("ic.width", "must be positive and finite"));
                }
            }
            ICSpec::SingleMode { m, amplitude } => {
                if !amplitude.is_finite() {
                    return Err(Error::invalid("ic.amplitude", "must be finite"));
                }
                let half = (grid.n() / 2) as i64;
                if m.iter().any(|c| c.abs() >= half) {
                    return Err(Error::invalid("ic.m", format!("{m:?} not resolved on {grid}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: PotentialParams,
    pub grid: GridSpec,
    pub scheme: SchemeSpec,
    pub t_end: f64,
    pub ic: ICSpec,
    #[serde(with = "seed_repr")]
    pub seed: u64,
    pub record_every: u64,
    pub snapshot_every: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: PotentialParams::default(),
            grid: GridSpec::default(),
            scheme: SchemeSpec::default(),
            t_end: 0.05,
            ic: ICSpec::default(),
            seed: 0,
            record_every: 100,
            snapshot_every: 1000,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| e.prefixed("params"))?;
        self.scheme.validate().map_err(|e| e.prefixed("scheme"))?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", "must be nonnegative and finite"));
        }
        self.n_steps()?;
        self.ic.validate(self.grid)?;
        if self.record_every == 0 {
            return Err(Error::invalid("record_every", "must be positive"));
        }
        if self.snapshot_every == 0 {
            return Err(Error::invalid("snapshot_every", "must be positive"));
        }
        Ok(())
    }

    /// Number of steps to `t_end`; errors unless `dt` divides `t_end`.
    pub fn n_steps(&self) -> Result<u64> {
        steps_for(self.t_end, self.scheme.dt)
    }
}

/// TOML integers are signed, so seeds above `i64::MAX` are written as decimal
/// strings; either form is accepted on input.
mod seed_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => s.serialize_i64(v),
            Err(_) => s.serialize_str(&seed.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => u64::try_from(v).map_err(|_| de::Error::custom(format!("seed {v} is negative"))),
            Repr::Text(t) => t.parse().map_err(|_| de::Error::custom(format!("seed `{t}` is not a u64"))),
        }
    }
}

pub(crate) fn steps_for(t_end: f64, dt: f64) -> Result<u64> {
    let r = t_end / dt;
    let n = r.round();
    if (r - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::invalid("t_end", format!("{t_end} is not a multiple of dt = {dt}")));
    }
    Ok(n as u64)
}

/// Builds `g₀`. Deterministic in `(ic, grid, seed)`.
pub fn make_initial(ic: &ICSpec, grid: GridSpec, seed: u64) -> Result<RealField> {
    ic.validate(grid)?;
    use std::f64::consts::PI;
    match *ic {
        ICSpec::RandomPerturbation { mean_u, amplitude, band } => {
            let sg = SpectralGrid::new(grid);
            let n = grid.n();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
            let b = band as i64;
            for my in -b..=b {
                for mx in -b..=b {
                    // one draw per conjugate pair
                    if (my, mx) <= (0, 0) {
                        continue;
                    }
                    let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    coeffs[grid.index(my) * n + grid.index(mx)] = c;
                    coeffs[grid.index(-my) * n + grid.index(-mx)] = c.conj();
                }
            }
            let delta = sg.inverse_slice(&coeffs);
            let peak = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let g_mean = g_of_u(mean_u)?;
            let scale = amplitude / peak;
            RealField::from_vec(grid, delta.into_iter().map(|d| g_mean + scale * d).collect())
        }
        ICSpec::TanhStripe { width } => Ok(RealField::from_fn(grid, |x, _| (2.0 * PI * x).cos() / width)),
        ICSpec::SingleMode { m, amplitude } => {
            let (mx, my) = (m[0] as f64, m[1] as f64);
            Ok(RealField::from_fn(grid, |x, y| amplitude * (2.0 * PI * (mx * x + my * y)).cos()))
        }
    }
}

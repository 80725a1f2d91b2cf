//! Exponential time differencing for `v_t = -νΔ²v + N(v)`.
//!
//! The stiff operator `L = -νΔ²` is diagonal in Fourier space and integrated
//! exactly; everything else goes in `N` and is handled by φ-function
//! quadrature of the Duhamel integral:
//!
//! ```text
//! ETD1:    v̂ₙ₊₁ = E v̂ₙ + dt φ₁ N̂(vₙ)
//! ETDRK2:  â    = E v̂ₙ + dt φ₁ N̂(vₙ)
//!          v̂ₙ₊₁ = â + dt φ₂ (N̂(a) - N̂(vₙ))
//! ```
//!
//! with `E = e^{-ν|k|⁴dt}` and `φ₁, φ₂` evaluated at `-ν|k|⁴dt`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{make_initial, steps_for, RunConfig};
use crate::diagnostics::{record, DiagnosticsRecord};
use crate::dynamics::{g_nonlinear_into, u_nonlinear_into, PotentialMode, Workspace};
use crate::error::{Error, Result};
use crate::potential::PotentialParams;
use crate::spectral::{RealField, SpectralGrid};
use crate::transform::G_MAX;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "ETD1")]
    Etd1,
    #[default]
    #[serde(rename = "ETDRK2")]
    Etdrk2,
}

impl SchemeKind {
    /// Formal order of accuracy in `dt`.
    pub fn order(self) -> u32 {
        match self {
            SchemeKind::Etd1 => 1,
            SchemeKind::Etdrk2 => 2,
        }
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    /// Case-insensitive `ETD1` or `ETDRK2`.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ETD1" => Ok(SchemeKind::Etd1),
            "ETDRK2" => Ok(SchemeKind::Etdrk2),
            _ => Err(Error::invalid("scheme", format!("unknown scheme `{s}` (expected ETD1 or ETDRK2)"))),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Etd1 => "ETD1",
            SchemeKind::Etdrk2 => "ETDRK2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub dt: f64,
}

impl Default for SchemeSpec {
    fn default() -> Self {
        Self {
            kind: SchemeKind::Etdrk2,
            dt: 1e-5,
        }
    }
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, dt: f64) -> Result<Self> {
        let s = Self { kind, dt };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

/// A point on a fixed-step trajectory: `t = step·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub g: RealField,
    pub t: f64,
    pub step: u64,
}

impl State {
    pub fn initial(g: RealField) -> Self {
        Self { g, t: 0.0, step: 0 }
    }
}

/// What is being evolved and with which nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Formulation {
    /// `g = atanh u` with the full transformed nonlinearity.
    Transformed,
    /// `u` directly, with the chemical potential of the given potential.
    Direct(PotentialMode),
    /// `N ≡ 0`: the pure semigroup.
    LinearOnly,
}

/// Precomputed multipliers for one `(grid, scheme, ν)`, plus working storage.
#[derive(Clone, Debug)]
pub struct Stepper {
    sg: SpectralGrid,
    scheme: SchemeSpec,
    e: Vec<f64>,
    dt_phi1: Vec<f64>,
    dt_phi2: Vec<f64>,
    ws: Workspace,
    n0: Vec<Complex64>,
    na: Vec<Complex64>,
}

impl Stepper {
    pub fn new(sg: &SpectralGrid, scheme: SchemeSpec, nu: f64) -> Result<Self> {
        scheme.validate()?;
        let dt = scheme.dt;
        let scaled = |m: crate::spectral::Multiplier| m.values().iter().map(|v| dt * v).collect();
        let len = sg.grid().len();
        Ok(Self {
            sg: sg.clone(),
            scheme,
            e: sg.semigroup_multiplier(dt, nu).values().to_vec(),
            dt_phi1: scaled(sg.phi1_multiplier(dt, nu)),
            dt_phi2: scaled(sg.phi2_multiplier(dt, nu)),
            ws: Workspace::new(len),
            n0: vec![Complex64::new(0.0, 0.0); len],
            na: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    pub fn scheme(&self) -> SchemeSpec {
        self.scheme
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.sg
    }

    fn nonlinear(
        sg: &SpectralGrid,
        ws: &mut Workspace,
        vh: &[Complex64],
        f: Formulation,
        p: &PotentialParams,
        out: &mut [Complex64],
    ) -> Result<()> {
        match f {
            Formulation::Transformed => g_nonlinear_into(sg, vh, p, ws, out),
            Formulation::Direct(mode) => u_nonlinear_into(sg, vh, p, mode, ws, out),
            Formulation::LinearOnly => {
                out.fill(Complex64::new(0.0, 0.0));
                Ok(())
            }
        }
    }

    /// One step in spectral space, from `vh` into `out`.
    pub fn advance_into(
        &mut self,
        vh: &[Complex64],
        out: &mut [Complex64],
        f: Formulation,
        p: &PotentialParams,
    ) -> Result<()> {
        Self::nonlinear(&self.sg, &mut self.ws, vh, f, p, &mut self.n0)?;
        for i in 0..vh.len() {
            out[i] = vh[i] * self.e[i] + self.n0[i] * self.dt_phi1[i];
        }
        if self.scheme.kind == SchemeKind::Etdrk2 {
            Self::nonlinear(&self.sg, &mut self.ws, out, f, p, &mut self.na)?;
            for i in 0..out.len() {
                out[i] += (self.na[i] - self.n0[i]) * self.dt_phi2[i];
            }
        }
        Ok(())
    }

    /// One step of a state; the returned state passes [`check_state`].
    pub fn step(&mut self, s: &State, f: Formulation, p: &PotentialParams) -> Result<State> {
        let vh = self.sg.forward(&s.g)?;
        let mut next = vec![Complex64::new(0.0, 0.0); vh.coeffs().len()];
        self.advance_into(vh.coeffs(), &mut next, f, p)
            .map_err(|e| stamp(e, s.t))?;
        let step = s.step + 1;
        let t = step as f64 * self.scheme.dt;
        let g = RealField::from_vec(s.g.grid(), self.sg.inverse_slice(&next))?;
        check_state(&g, t, f)?;
        Ok(State { g, t, step })
    }
}

fn stamp(e: Error, t: f64) -> Error {
    match e {
        Error::Overflow { g, .. } if g.is_nan() => Error::NonFinite { t },
        Error::Overflow { g, .. } => Error::SeparationLoss { t, max_abs_g: g.abs() },
        other => other,
    }
}

/// Rejects non-finite fields and, for the transformed variable, any `g` whose
/// `tanh` rounds to `±1` (`|g| ≳ 19.06`) or that exceeds `G_MAX`.
pub fn check_state(v: &RealField, t: f64, f: Formulation) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite { t });
    }
    if f == Formulation::Transformed {
        let max_abs_g = v.max_abs();
        if max_abs_g > G_MAX || max_abs_g.tanh() >= 1.0 {
            return Err(Error::SeparationLoss { t, max_abs_g });
        }
    }
    Ok(())
}

/// One first-order ETD step of the transformed equation.
pub fn step_etd1(sg: &SpectralGrid, s: &State, p: &PotentialParams, dt: f64) -> Result<State> {
    Stepper::new(sg, SchemeSpec::new(SchemeKind::Etd1, dt)?, p.nu)?.step(s, Formulation::Transformed, p)
}

/// One second-order (Cox–Matthews) ETD step of the transformed equation.
pub fn step_etdrk2(sg: &SpectralGrid, s: &State, p: &PotentialParams, dt: f64) -> Result<State> {
    Stepper::new(sg, SchemeSpec::new(SchemeKind::Etdrk2, dt)?, p.nu)?.step(s, Formulation::Transformed, p)
}

/// Fixed-step integrator that keeps the spectral state between steps.
#[derive(Clone, Debug)]
pub struct Integrator {
    stepper: Stepper,
    formulation: Formulation,
    params: PotentialParams,
    vh: Vec<Complex64>,
    next: Vec<Complex64>,
    z: Vec<Complex64>,
    scratch: Vec<f64>,
    state: State,
}

impl Integrator {
    pub fn new(
        sg: &SpectralGrid,
        scheme: SchemeSpec,
        formulation: Formulation,
        params: PotentialParams,
        v0: RealField,
    ) -> Result<Self> {
        params.validate()?;
        v0.check_grid(sg.grid())?;
        check_state(&v0, 0.0, formulation)?;
        let stepper = Stepper::new(sg, scheme, params.nu)?;
        let vh = sg.forward(&v0)?.into_coeffs();
        let len = vh.len();
        Ok(Self {
            stepper,
            formulation,
            params,
            next: vec![Complex64::new(0.0, 0.0); len],
            z: vec![Complex64::new(0.0, 0.0); len],
            scratch: vec![0.0; len],
            vh,
            state: State::initial(v0),
        })
    }

    /// Advances one step. On error the current state is left untouched.
    pub fn advance(&mut self) -> Result<()> {
        let t = self.state.t;
        self.stepper
            .advance_into(&self.vh, &mut self.next, self.formulation, &self.params)
            .map_err(|e| stamp(e, t))?;
        let step = self.state.step + 1;
        let t = step as f64 * self.stepper.scheme.dt;
        self.z.copy_from_slice(&self.next);
        let mut v = RealField::zeros(self.state.g.grid());
        self.stepper
            .sg
            .inverse_packed_into(&mut self.z, v.values_mut(), &mut self.scratch);
        check_state(&v, t, self.formulation)?;
        std::mem::swap(&mut self.vh, &mut self.next);
        self.state = State { g: v, t, step };
        Ok(())
    }

    pub fn advance_to_step(&mut self, step: u64) -> Result<()> {
        while self.state.step < step {
            self.advance()?;
        }
        Ok(())
    }

    /// Current state; `g` holds `u` for [`Formulation::Direct`].
    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn into_state(self) -> State {
        self.state
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.stepper.grid()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub t: f64,
    /// The transformed variable `g`.
    pub g: RealField,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub final_state: State,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
}

impl RunOutput {
    /// Smallest `1 - max|u|` over the recorded rows.
    pub fn separation_floor(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.separation_floor())
            .fold(f64::INFINITY, f64::min)
    }
}

/// A run that stopped early; `partial.final_state` is the last good state.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub partial: RunOutput,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (last good state: step {}, t = {})",
            self.error, self.partial.final_state.step, self.partial.final_state.t
        )
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Evolves the transformed equation from `make_initial(config.ic)` to `t_end`,
/// recording diagnostics every `record_every` steps and snapshots every
/// `snapshot_every` steps; the first and last steps are always included.
pub fn run(config: &RunConfig) -> std::result::Result<RunOutput, Box<RunFailure>> {
    let early = |error: Error, g: RealField| {
        Box::new(RunFailure {
            error,
            partial: RunOutput {
                final_state: State::initial(g),
                records: Vec::new(),
                snapshots: Vec::new(),
            },
        })
    };
    let g0 = match config.validate().and_then(|_| make_initial(&config.ic, config.grid, config.seed)) {
        Ok(g) => g,
        Err(e) => return Err(early(e, RealField::zeros(config.grid))),
    };
    run_from(config, g0)
}

/// As [`run`], from a given `g₀`.
pub fn run_from(config: &RunConfig, g0: RealField) -> std::result::Result<RunOutput, Box<RunFailure>> {
    let mut out = RunOutput {
        final_state: State::initial(g0.clone()),
        records: Vec::new(),
        snapshots: Vec::new(),
    };
    macro_rules! tryrun {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => return Err(Box::new(RunFailure { error, partial: out })),
            }
        };
    }
    tryrun!(config.validate());
    tryrun!(g0.check_grid(config.grid));
    let n_steps = tryrun!(config.n_steps());
    let sg = SpectralGrid::new(config.grid);
    let p = config.params;
    let mut integ = tryrun!(Integrator::new(&sg, config.scheme, Formulation::Transformed, p, g0));
    let mut prev_energy = None;
    loop {
        let s = integ.state();
        let step = s.step;
        let last = step == n_steps;
        if step % config.record_every == 0 || last {
            let r = tryrun!(record(&sg, s, prev_energy, &p));
            prev_energy = Some(r.energy);
            out.records.push(r);
        }
        if step % config.snapshot_every == 0 || last {
            out.snapshots.push(Snapshot {
                step,
                t: s.t,
                g: s.g.clone(),
            });
        }
        if last {
            break;
        }
        if let Err(error) = integ.advance() {
            out.final_state = integ.into_state();
            return Err(Box::new(RunFailure { error, partial: out }));
        }
    }
    out.final_state = integ.into_state();
    Ok(out)
}

/// How the reference solution of a convergence study is formed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reference {
    /// The finest-dt solution itself.
    Finest,
    /// Richardson extrapolation of the two finest solutions at the scheme's
    /// formal order `p`: `v_f + (v_f - v_2f)/(2^p - 1)`.
    #[default]
    Extrapolated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    /// `L²` (grid-mean) distance to the reference at `t_end`.
    pub error: f64,
    /// `log₂(e_{2dt}/e_dt)`; absent on the coarsest row.
    pub observed_order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub scheme: SchemeKind,
    pub reference_dt: f64,
    pub reference: Reference,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.observed_order).collect()
    }
}

/// Checks that `dts` strictly halve and each divides `t_end`.
pub fn validate_dts(dts: &[f64], t_end: f64) -> Result<()> {
    if dts.len() < 3 {
        return Err(Error::invalid("dts", "need at least three step sizes"));
    }
    for w in dts.windows(2) {
        if !((w[0] / w[1] - 2.0).abs() <= 1e-12) {
            return Err(Error::invalid(
                "dts",
                format!("{} -> {} is not a halving; step sizes must nest", w[0], w[1]),
            ));
        }
    }
    for &dt in dts {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dts", format!("{dt} is not positive")));
        }
        steps_for(t_end, dt).map_err(|_| Error::invalid("dts", format!("{dt} does not divide t_end = {t_end}")))?;
    }
    Ok(())
}

/// Runs the configured scheme at every `dt` in `dts` (strictly halving) to
/// `config.t_end`. The last entry produces the reference; the other entries
/// get a row each.
pub fn convergence_study(config: &RunConfig, dts: &[f64]) -> Result<ConvergenceTable> {
    convergence_study_with(config, dts, Formulation::Transformed, Reference::default())
}

pub fn convergence_study_with(
    config: &RunConfig,
    dts: &[f64],
    formulation: Formulation,
    reference: Reference,
) -> Result<ConvergenceTable> {
    validate_dts(dts, config.t_end)?;
    let mut base = config.clone();
    base.scheme.dt = dts[0];
    base.validate()?;
    let sg = SpectralGrid::new(config.grid);
    let v0 = make_initial(&config.ic, config.grid, config.seed)?;

    let finals = dts
        .iter()
        .map(|&dt| {
            let scheme = SchemeSpec::new(config.scheme.kind, dt)?;
            let mut integ = Integrator::new(&sg, scheme, formulation, config.params, v0.clone())?;
            integ.advance_to_step(steps_for(config.t_end, dt)?)?;
            Ok(integ.into_state().g)
        })
        .collect::<Result<Vec<_>>>()?;

    let m = finals.len();
    let fine = &finals[m - 1];
    let refsol = match reference {
        Reference::Finest => fine.clone(),
        Reference::Extrapolated => {
            let denom = (2f64.powi(config.scheme.kind.order() as i32)) - 1.0;
            fine.zip_map(&finals[m - 2], |f, c| f + (f - c) / denom)?
        }
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(m - 1);
    for (dt, v) in dts.iter().zip(&finals).take(m - 1) {
        let error = v.zip_map(&refsol, |a, b| a - b)?.l2_norm();
        let observed_order = rows.last().map(|prev| (prev.error / error).log2());
        rows.push(ConvergenceRow {
            dt: *dt,
            error,
            observed_order,
        });
    }
    Ok(ConvergenceTable {
        scheme: config.scheme.kind,
        reference_dt: dts[m - 1],
        reference,
        rows,
    })
}

//! Side-by-side evolution of the transformed equation and a direct `u`
//! solver from the same `u₀`.

use crate::config::{make_initial, RunConfig};
use crate::diagnostics::{energy, energy_u};
use crate::dynamics::PotentialMode;
use crate::error::Result;
use crate::spectral::{RealField, SpectralGrid};
use crate::timestepper::{Formulation, Integrator};

/// The few quantities both formulations can report.
#[derive(Clone, Debug, PartialEq)]
pub struct USummary {
    pub mass_u: f64,
    pub energy: f64,
    pub max_abs_u: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    pub transformed: USummary,
    /// One entry per baseline, in the order given.
    pub baselines: Vec<USummary>,
    /// `‖u_g - u_base‖∞` per baseline.
    pub max_diff_u: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub baselines: Vec<PotentialMode>,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    /// `‖u_g - u_base‖∞` at `t_end` per baseline.
    pub fn final_max_diff_u(&self) -> Vec<f64> {
        self.rows.last().map_or_else(Vec::new, |r| r.max_diff_u.clone())
    }
}

/// Evolves `g₀ = make_initial(config.ic)` with the transformed equation and
/// `u₀ = tanh g₀` with a direct solver per baseline, all with the same scheme
/// and `dt`, sampled every `record_every` steps.
pub fn compare(config: &RunConfig, baselines: &[PotentialMode]) -> Result<CompareReport> {
    config.validate()?;
    let n_steps = config.n_steps()?;
    let sg = SpectralGrid::new(config.grid);
    let p = config.params;
    let g0 = make_initial(&config.ic, config.grid, config.seed)?;
    let u0 = g0.map(f64::tanh);
    let mut gi = Integrator::new(&sg, config.scheme, Formulation::Transformed, p, g0)?;
    let mut us = baselines
        .iter()
        .map(|&m| Integrator::new(&sg, config.scheme, Formulation::Direct(m), p, u0.clone()))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    loop {
        let step = gi.state().step;
        if step % config.record_every == 0 || step == n_steps {
            let g = &gi.state().g;
            let ug = g.map(f64::tanh);
            let mut row = CompareRow {
                t: gi.state().t,
                transformed: USummary {
                    mass_u: ug.mean(),
                    energy: energy(&sg, g, &p)?,
                    max_abs_u: g.max_abs().tanh(),
                },
                baselines: Vec::new(),
                max_diff_u: Vec::new(),
            };
            for ui in &us {
                let u = &ui.state().g;
                row.baselines.push(summary_u(&sg, u, &p)?);
                row.max_diff_u.push(ug.max_abs_diff(u));
            }
            rows.push(row);
        }
        if step == n_steps {
            break;
        }
        gi.advance()?;
        for ui in us.iter_mut() {
            ui.advance()?;
        }
    }
    Ok(CompareReport {
        baselines: baselines.to_vec(),
        rows,
    })
}

fn summary_u(sg: &SpectralGrid, u: &RealField, p: &crate::potential::PotentialParams) -> Result<USummary> {
    Ok(USummary {
        mass_u: u.mean(),
        energy: energy_u(sg, u, p)?,
        max_abs_u: u.max_abs(),
    })
}

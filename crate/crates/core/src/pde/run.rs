use super::model::{ChemicalSpec, Interaction, ModelFunctions, RunConfig};
use super::step::{
    drift_velocity_chemo, grad_beta_sq, mobility_drift_sq, stable_dt, step_u, step_v_parabolic,
    vector_l2, NonlocalDrift,
};
use crate::domain::{norm_l2, Field, SpaceTimeSeries};
use crate::error::{Error, Result};
use crate::greens::{elliptic_solve, greens_kernel};
use crate::kernel::PeriodizedKernel;
use std::fmt::Write;

const MAX_HALVINGS: usize = 20;
/// Post-step tolerance on `0 <= u <= 1` before a step is rejected.
const BOUND_SLACK: f64 = 1e-9;

/// One row of the per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostic {
    pub time: f64,
    pub mass: f64,
    pub min_u: f64,
    pub max_u: f64,
    /// `int Phi(u)`.
    pub phi: f64,
    /// `int_0^t ||grad beta(u)||^2`.
    pub grad_beta_accum: f64,
    /// `int_0^t ||g(u) V||^2`.
    pub drift_accum: f64,
}

#[derive(Clone, Debug)]
pub struct SolverState {
    pub time: f64,
    pub u: Field,
    /// Chemical concentrations; empty for the nonlocal model.
    pub v: Vec<Field>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub series: SpaceTimeSeries,
    pub state: SolverState,
    pub steps: usize,
    pub rejected_steps: usize,
    /// Largest `||V||_2 / (||grad W||_1 ||u||_2)` seen, when the drift is a
    /// convolution (nonlocal and parabolic-elliptic runs).
    pub young_ratio_max: Option<f64>,
}

impl RunOutput {
    pub fn initial(&self) -> &Diagnostic {
        &self.state.diagnostics[0]
    }

    pub fn last(&self) -> &Diagnostic {
        self.state
            .diagnostics
            .last()
            .expect("at least the initial record")
    }

    /// Largest `|mass(t) - mass(0)| / mass(0)` (absolute when the mass is zero).
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.initial().mass;
        let scale = if m0.abs() > 0.0 { m0.abs() } else { 1.0 };
        self.state
            .diagnostics
            .iter()
            .map(|d| (d.mass - m0).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn min_u(&self) -> f64 {
        self.state
            .diagnostics
            .iter()
            .map(|d| d.min_u)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_u(&self) -> f64 {
        self.state
            .diagnostics
            .iter()
            .map(|d| d.max_u)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(accumulated ||grad beta||^2, 2 int Phi(u_0) + accumulated ||g V||^2)`.
    pub fn energy_budget(&self) -> (f64, f64) {
        let last = self.last();
        (
            last.grad_beta_accum,
            2.0 * self.initial().phi + last.drift_accum,
        )
    }
}

/// Checks `0 <= u_0 <= 1` pointwise.
pub fn validate_initial_density(u0: &Field) -> Result<()> {
    let (lo, hi) = (u0.min(), u0.max());
    if lo < 0.0 || hi > 1.0 {
        return Err(Error::Validation(format!(
            "initial density must satisfy 0 ≤ u_0 ≤ 1 a.e., found min {lo}, max {hi}"
        )));
    }
    Ok(())
}

enum Drive {
    Nonlocal(NonlocalDrift),
    Elliptic { chem: ChemicalSpec, young_l1: f64 },
    Parabolic(ChemicalSpec),
}

fn effective_kernel(chem: &ChemicalSpec, u0: &Field) -> Result<PeriodizedKernel> {
    let grid = *u0.grid();
    let kernels = chem
        .diffusivities
        .iter()
        .map(|&d| greens_kernel(d, &grid))
        .collect::<Result<Vec<_>>>()?;
    PeriodizedKernel::linear_combination(&chem.sensitivities, &kernels)
}

fn record(
    time: f64,
    u: &Field,
    model: &ModelFunctions,
    grad_beta_accum: f64,
    drift_accum: f64,
) -> Diagnostic {
    Diagnostic {
        time,
        mass: u.integral(),
        min_u: u.min(),
        max_u: u.max(),
        phi: u.map(|s| model.phi(s)).integral(),
        grad_beta_accum,
        drift_accum,
    }
}

fn interpolate(a: &Field, b: &Field, theta: f64) -> Field {
    if theta >= 1.0 {
        return b.clone();
    }
    a.scaled(1.0 - theta).axpy(theta, b).expect("same grid")
}

fn acceptable(u: &Field, model: &ModelFunctions) -> bool {
    let finite = u.values().iter().all(|x| x.is_finite());
    finite
        && u.min() >= -BOUND_SLACK
        && (!model.mobility.saturates() || u.max() <= 1.0 + BOUND_SLACK)
}

/// Integrates one of the three systems from `u0` up to `config.t_end`.
///
/// With [`Interaction::Chemotaxis`] and `xi = 0` the chemicals are slaved to
/// `u` by the screened-Poisson solve each step; with `xi > 0` they are
/// advanced by an implicit spectral step, starting from `v0` or, when that is
/// absent, from `w_j * u0`.
pub fn run(
    model: &ModelFunctions,
    interaction: &Interaction,
    u0: &Field,
    v0: Option<&[Field]>,
    config: &RunConfig,
) -> Result<RunOutput> {
    model.validate()?;
    config.validate()?;
    if *u0.grid() != config.grid {
        return Err(Error::Validation(
            "initial density grid differs from the run grid".into(),
        ));
    }
    validate_initial_density(u0)?;
    let grid = config.grid;

    let (drive, mut v) = match interaction {
        Interaction::Nonlocal(w) => {
            if *w.grid() != grid {
                return Err(Error::Validation(
                    "kernel grid differs from the run grid".into(),
                ));
            }
            if v0.is_some_and(|v| !v.is_empty()) {
                return Err(Error::Validation(
                    "the nonlocal model takes no chemical fields".into(),
                ));
            }
            (Drive::Nonlocal(NonlocalDrift::new(w)), Vec::new())
        }
        Interaction::Chemotaxis(chem) => {
            chem.validate()?;
            let v = match v0 {
                Some(v) => {
                    if v.len() != chem.len() {
                        return Err(Error::Validation(format!(
                            "{} initial chemical fields for {} chemicals",
                            v.len(),
                            chem.len()
                        )));
                    }
                    for f in v {
                        u0.check_same_grid(f)?;
                    }
                    v.to_vec()
                }
                None => chem
                    .diffusivities
                    .iter()
                    .map(|&d| elliptic_solve(d, u0))
                    .collect::<Result<Vec<_>>>()?,
            };
            if chem.is_parabolic_elliptic() {
                let young_l1 = NonlocalDrift::new(&effective_kernel(chem, u0)?).gradient_l1();
                (
                    Drive::Elliptic {
                        chem: chem.clone(),
                        young_l1,
                    },
                    v,
                )
            } else {
                (Drive::Parabolic(chem.clone()), v)
            }
        }
    };

    let targets = config.snapshot_times();
    let mut series = SpaceTimeSeries::new(grid);
    series.push(0.0, u0.clone())?;
    let mut next_target = 1;

    let mut u = u0.clone();
    let mut t = 0.0;
    let mut grad_beta_accum = 0.0;
    let mut drift_accum = 0.0;
    let mut diagnostics = vec![record(0.0, &u, model, 0.0, 0.0)];
    let mut steps = 0;
    let mut rejected = 0;
    let mut young_ratio_max: Option<f64> = None;

    while t < config.t_end {
        let velocity = match &drive {
            Drive::Nonlocal(op) => op.velocity(&u)?,
            Drive::Elliptic { chem, .. } => {
                for (vj, &d) in v.iter_mut().zip(&chem.diffusivities) {
                    *vj = elliptic_solve(d, &u)?;
                }
                drift_velocity_chemo(&v, &chem.sensitivities)?
            }
            Drive::Parabolic(chem) => drift_velocity_chemo(&v, &chem.sensitivities)?,
        };
        let young_l1 = match &drive {
            Drive::Nonlocal(op) => Some(op.gradient_l1()),
            Drive::Elliptic { young_l1, .. } => Some(*young_l1),
            Drive::Parabolic(_) => None,
        };
        if let Some(l1) = young_l1 {
            let bound = l1 * norm_l2(&u);
            let ratio = if bound > 0.0 {
                vector_l2(&velocity) / bound
            } else {
                0.0
            };
            young_ratio_max = Some(young_ratio_max.map_or(ratio, |m| m.max(ratio)));
        }

        let mut dt = config
            .dt
            .unwrap_or_else(|| stable_dt(&grid, &velocity, model, config.cfl_safety))
            .min(config.t_end - t);
        if !(dt > 1e-14 * config.t_end) {
            return Err(abort(t, "time step collapsed", diagnostics.last()));
        }
        let mut halvings = 0;
        let u_new = loop {
            let candidate = step_u(&u, &velocity, model, dt)?;
            if acceptable(&candidate, model) {
                break candidate;
            }
            halvings += 1;
            rejected += 1;
            if halvings > MAX_HALVINGS {
                let reason = format!(
                    "step rejected {MAX_HALVINGS} times (dt = {dt:e}, min u = {}, max u = {})",
                    candidate.min(),
                    candidate.max()
                );
                return Err(abort(t, &reason, diagnostics.last()));
            }
            dt *= 0.5;
        };

        grad_beta_accum += dt * grad_beta_sq(&u, model);
        drift_accum += dt * mobility_drift_sq(&u, &velocity, model);
        if let Drive::Parabolic(chem) = &drive {
            for (vj, &d) in v.iter_mut().zip(&chem.diffusivities) {
                *vj = step_v_parabolic(vj, &u_new, d, chem.xi, dt)?;
            }
        }

        let mut t_new = t + dt;
        if config.t_end - t_new <= 1e-12 * config.t_end {
            t_new = config.t_end;
        }
        while next_target < targets.len() && targets[next_target] <= t_new {
            let ts = targets[next_target];
            let snap = if ts == t_new {
                u_new.clone()
            } else {
                interpolate(&u, &u_new, (ts - t) / dt)
            };
            series.push(ts, snap)?;
            next_target += 1;
        }
        u = u_new;
        t = t_new;
        steps += 1;
        diagnostics.push(record(t, &u, model, grad_beta_accum, drift_accum));
    }

    if let Drive::Elliptic { chem, .. } = &drive {
        for (vj, &d) in v.iter_mut().zip(&chem.diffusivities) {
            *vj = elliptic_solve(d, &u)?;
        }
    }
    Ok(RunOutput {
        series,
        state: SolverState {
            time: t,
            u,
            v,
            diagnostics,
        },
        steps,
        rejected_steps: rejected,
        young_ratio_max,
    })
}

fn abort(time: f64, reason: &str, last: Option<&Diagnostic>) -> Error {
    let dump = last.map_or(String::new(), |d| {
        format!(
            "; last state: mass {:e}, min u {:e}, max u {:e}, phi {:e}",
            d.mass, d.min_u, d.max_u, d.phi
        )
    });
    Error::NumericalAbort {
        time,
        reason: format!("{reason}{dump}"),
    }
}

/// `time,mass,min_u,max_u,phi,grad_beta_accum` rows, 17 significant digits.
pub fn diagnostics_csv(diagnostics: &[Diagnostic]) -> String {
    let mut out = String::from("time,mass,min_u,max_u,phi,grad_beta_accum\n");
    for d in diagnostics {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            d.time, d.mass, d.min_u, d.max_u, d.phi, d.grad_beta_accum
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use crate::pde::model::{Beta, Mobility};

    fn pme() -> ModelFunctions {
        ModelFunctions::new(Beta::Power { gamma: 2.0 }, Mobility::VolumeFilling, 0.0).unwrap()
    }

    #[test]
    fn rejects_overfull_datum() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        let u0 = Field::constant(g, 1.2);
        let chem = ChemicalSpec::new(vec![1.0], vec![1.0], 0.0).unwrap();
        let err = run(
            &pme(),
            &Interaction::Chemotaxis(chem),
            &u0,
            None,
            &RunConfig::new(g, 0.1, 0.05),
        )
        .unwrap_err();
        assert!(err.to_string().contains("0 ≤ u_0 ≤ 1 a.e."));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn homogeneous_state_is_steady() {
        let g = Grid::new(2, 1.0, 8).unwrap();
        let u0 = Field::constant(g, 0.35);
        let chem = ChemicalSpec::new(vec![0.5, 1.0], vec![2.0, -1.0], 0.1).unwrap();
        let out = run(
            &pme(),
            &Interaction::Chemotaxis(chem),
            &u0,
            None,
            &RunConfig::new(g, 0.05, 0.01),
        )
        .unwrap();
        assert_eq!(out.series.len(), 6);
        for s in out.series.snapshots() {
            assert!(s.max_abs_diff(&u0).unwrap() < 1e-14);
        }
        for v in &out.state.v {
            assert!(v.max_abs_diff(&u0).unwrap() < 1e-14);
        }
        assert!(out.mass_drift() < 1e-14);
    }

    #[test]
    fn snapshots_hit_requested_times() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        let u0 = Field::from_fn(g, |x| 0.5 + 0.3 * (std::f64::consts::PI * x[0]).cos()).unwrap();
        let w = greens_kernel(1.0, &g).unwrap();
        let mut cfg = RunConfig::new(g, 0.1, 0.03);
        cfg.dt = Some(0.007);
        let out = run(&pme(), &Interaction::Nonlocal(w), &u0, None, &cfg).unwrap();
        assert_eq!(out.series.times(), &[0.0, 0.03, 0.06, 0.09, 0.1]);
        assert_eq!(out.steps, 15);
        assert_eq!(out.state.time, 0.1);
        assert!(out.young_ratio_max.unwrap() <= 1.0 + 1e-8);
    }
}

//! Time-dependent solvers: nonlocal aggregation-diffusion and the
//! parabolic-elliptic and parabolic-parabolic Keller-Segel systems, sharing
//! one finite-volume discretisation of the cell density.

mod model;
mod run;
mod step;

pub use model::{Beta, ChemicalSpec, Interaction, Mobility, ModelFunctions, RunConfig};
pub use run::{diagnostics_csv, run, validate_initial_density, Diagnostic, RunOutput, SolverState};
pub use step::{
    drift_velocity_chemo, drift_velocity_nonlocal, grad_beta_sq, mobility_drift_sq, stable_dt,
    step_u, step_v_parabolic, vector_l1, vector_l2, NonlocalDrift,
};

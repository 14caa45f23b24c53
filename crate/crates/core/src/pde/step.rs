use super::model::ModelFunctions;
use crate::domain::spectral::{self, squared_frequencies};
use crate::domain::{gradient, norm_l1, periodic_convolve, Field, Grid, Layout};
use crate::error::{Error, Result};
use crate::kernel::PeriodizedKernel;
use num_complex::Complex64;

/// `grad (W * u)`, evaluated both as `(grad_h W) * u` and as `grad_h (W * u)`.
/// The two agree up to round-off because centred differences commute with
/// circular convolution; a disagreement above `1e-10` is reported as an error.
pub fn drift_velocity_nonlocal(u: &Field, w: &PeriodizedKernel) -> Result<Vec<Field>> {
    u.check_same_grid(&w.field)?;
    let by_kernel_gradient = w
        .discrete_gradient()
        .iter()
        .map(|g| periodic_convolve(g, u))
        .collect::<Result<Vec<_>>>()?;
    let by_potential = gradient(&periodic_convolve(&w.field, u)?);
    let scale = by_kernel_gradient
        .iter()
        .map(|f| f.values().iter().fold(1.0, |m, v| f64::max(m, v.abs())))
        .fold(1.0, f64::max);
    for (a, b) in by_kernel_gradient.iter().zip(&by_potential) {
        let diff = a.max_abs_diff(b)?;
        if diff > 1e-10 * scale {
            return Err(Error::Comparison(format!(
                "drift routes disagree by {diff:e}"
            )));
        }
    }
    Ok(by_kernel_gradient)
}

/// `grad_h sum_j a_j v_j`.
pub fn drift_velocity_chemo(v: &[Field], a: &[f64]) -> Result<Vec<Field>> {
    if v.is_empty() || v.len() != a.len() {
        return Err(Error::Shape(format!(
            "{} chemicals for {} sensitivities",
            v.len(),
            a.len()
        )));
    }
    let mut total = Field::zeros(*v[0].grid());
    for (vj, aj) in v.iter().zip(a) {
        total = total.axpy(*aj, vj)?;
    }
    Ok(gradient(&total))
}

/// `(grad_h W) * u` with the kernel spectra computed once, for time loops.
#[derive(Clone, Debug)]
pub struct NonlocalDrift {
    grid: Grid,
    spectra: Vec<Vec<Complex64>>,
    gradient_l1: f64,
}

impl NonlocalDrift {
    pub fn new(w: &PeriodizedKernel) -> Self {
        let grad = w.discrete_gradient();
        let h = w.grid().cell_volume();
        let spectra = grad
            .iter()
            .map(|g| spectral::forward(g).into_iter().map(|c| c * h).collect())
            .collect();
        NonlocalDrift {
            grid: *w.grid(),
            spectra,
            gradient_l1: vector_l1(&grad),
        }
    }

    pub fn velocity(&self, u: &Field) -> Result<Vec<Field>> {
        if *u.grid() != self.grid {
            return Err(Error::Shape(
                "field and kernel live on different grids".into(),
            ));
        }
        let hat = spectral::forward(u);
        Ok(self
            .spectra
            .iter()
            .map(|s| {
                let prod = hat.iter().zip(s).map(|(a, b)| a * b).collect();
                spectral::inverse_real(&self.grid, u.layout(), prod)
            })
            .collect())
    }

    /// `|| |grad_h W| ||_{L^1}`, the constant in the Young bound.
    pub fn gradient_l1(&self) -> f64 {
        self.gradient_l1
    }
}

/// `int |V|` for a vector field, with `|.|` the Euclidean norm.
pub fn vector_l1(v: &[Field]) -> f64 {
    if v.len() == 1 {
        return norm_l1(&v[0]);
    }
    let g = v[0].grid();
    (0..g.len())
        .map(|i| v.iter().map(|f| f.values()[i].powi(2)).sum::<f64>().sqrt())
        .sum::<f64>()
        * g.cell_volume()
}

/// `( int |V|^2 )^{1/2}`.
pub fn vector_l2(v: &[Field]) -> f64 {
    let g = v[0].grid();
    (v.iter()
        .map(|f| f.values().iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        * g.cell_volume())
    .sqrt()
}

fn max_abs(v: &[Field]) -> f64 {
    v.iter()
        .flat_map(|f| f.values().iter())
        .fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// Explicit step bound `cfl min(h^2 / (2N max beta'), h / (2N max|V|))`.
pub fn stable_dt(grid: &Grid, velocity: &[Field], model: &ModelFunctions, cfl_safety: f64) -> f64 {
    let h = grid.spacing();
    let two_n = 2.0 * grid.dim() as f64;
    let diffusive = h * h / (two_n * model.max_diffusion_derivative() + f64::MIN_POSITIVE);
    let advective = h / (two_n * max_abs(velocity) + f64::MIN_POSITIVE);
    cfl_safety * diffusive.min(advective)
}

/// One explicit conservative finite-volume step for
/// `u_t = Laplace beta_eta(u) - div(g(u) V)`.
///
/// The advective face flux upwinds the non-decreasing factor of `g` from the
/// upwind cell and the non-increasing factor from the downwind cell, so it
/// vanishes whenever the donor is empty or the receiver is full. The face
/// velocity is the average of the two adjacent cell values.
pub fn step_u(u: &Field, velocity: &[Field], model: &ModelFunctions, dt: f64) -> Result<Field> {
    let grid = *u.grid();
    if velocity.len() != grid.dim() {
        return Err(Error::Shape(format!(
            "{} velocity components on a {}-D grid",
            velocity.len(),
            grid.dim()
        )));
    }
    for v in velocity {
        u.check_same_grid(v)?;
    }
    let h = grid.spacing();
    let uv = u.values();
    let beta: Vec<f64> = uv.iter().map(|&s| model.diffusion(s)).collect();
    let inc: Vec<f64> = uv
        .iter()
        .map(|&s| model.mobility.increasing_part(s))
        .collect();
    let dec: Vec<f64> = uv
        .iter()
        .map(|&s| model.mobility.decreasing_part(s))
        .collect();
    let mut div = vec![0.0; grid.len()];
    for (axis, vel) in velocity.iter().enumerate() {
        let vv = vel.values();
        for l in 0..grid.len() {
            let r = grid.neighbor(l, axis, 1);
            let face = 0.5 * (vv[l] + vv[r]);
            let advective = face.max(0.0) * inc[l] * dec[r] + face.min(0.0) * inc[r] * dec[l];
            let flux = advective - (beta[r] - beta[l]) / h;
            div[l] += flux;
            div[r] -= flux;
        }
    }
    let values = uv.iter().zip(&div).map(|(s, d)| s - dt / h * d).collect();
    Ok(Field::from_parts(grid, u.layout(), values))
}

/// `sum_faces ((beta(u_R) - beta(u_L)) / h)^2 h^N`, the discrete `||grad beta(u)||^2`.
pub fn grad_beta_sq(u: &Field, model: &ModelFunctions) -> f64 {
    let grid = u.grid();
    let h = grid.spacing();
    let beta: Vec<f64> = u.values().iter().map(|&s| model.diffusion(s)).collect();
    let mut acc = 0.0;
    for axis in 0..grid.dim() {
        for l in 0..grid.len() {
            let r = grid.neighbor(l, axis, 1);
            acc += ((beta[r] - beta[l]) / h).powi(2);
        }
    }
    acc * grid.cell_volume()
}

/// `|| g(u) V ||^2_{L^2}`.
pub fn mobility_drift_sq(u: &Field, velocity: &[Field], model: &ModelFunctions) -> f64 {
    let grid = u.grid();
    (0..grid.len())
        .map(|i| {
            let g = model.mobility.value(u.values()[i]);
            g * g * velocity.iter().map(|v| v.values()[i].powi(2)).sum::<f64>()
        })
        .sum::<f64>()
        * grid.cell_volume()
}

/// Backward-Euler step of `xi v_t = d Laplace v - v + u`, solved exactly in
/// Fourier space: `v_new = (v + r u) / (1 + r (1 + d |xi|^2))`, `r = dt / xi`.
pub fn step_v_parabolic(v: &Field, u: &Field, d: f64, xi: f64, dt: f64) -> Result<Field> {
    v.check_same_grid(u)?;
    if !(xi > 0.0) {
        return Err(Error::Validation(format!(
            "relaxation time must be positive, got {xi}"
        )));
    }
    if !(d > 0.0) {
        return Err(Error::Domain(format!(
            "diffusivity must be positive, got {d}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::Validation(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let grid = *v.grid();
    let r = dt / xi;
    let xi2 = squared_frequencies(&grid);
    let vh = spectral::forward(v);
    let uh = spectral::forward(u);
    let out = vh
        .iter()
        .zip(&uh)
        .zip(&xi2)
        .map(|((a, b), k2)| (a + b * r) / (1.0 + r * (1.0 + d * k2)))
        .collect();
    Ok(spectral::inverse_real(&grid, Layout::Cell, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::{elliptic_solve, greens_kernel};
    use crate::pde::model::{Beta, Mobility};
    use std::f64::consts::PI;

    fn heat() -> ModelFunctions {
        ModelFunctions::new(Beta::Linear, Mobility::VolumeFilling, 0.0).unwrap()
    }

    #[test]
    fn constant_density_has_no_drift() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let w = greens_kernel(0.3, &g).unwrap();
        let u = Field::constant(g, 0.4);
        for c in drift_velocity_nonlocal(&u, &w).unwrap() {
            assert!(c.values().iter().all(|x| x.abs() < 1e-13));
        }
        let z = PeriodizedKernel::zero(g);
        let u = Field::from_fn(g, |x| 0.5 + 0.2 * x[0]).unwrap();
        for c in drift_velocity_nonlocal(&u, &z).unwrap() {
            assert!(c.values().iter().all(|x| *x == 0.0));
        }
    }

    #[test]
    fn single_mode_drift_through_green() {
        // (grad_h w) * cos = grad_h of cos / (1 + d k^2); grad_h cos = -sin(kh)/h sin.
        let l = 1.0;
        let d = 1.0;
        let g = Grid::new(1, l, 64).unwrap();
        let k = PI / l;
        let h = g.spacing();
        let w = greens_kernel(d, &g).unwrap();
        let u = Field::from_fn(g, |x| (k * x[0]).cos()).unwrap();
        let vel = drift_velocity_nonlocal(&u, &w).unwrap();
        let expect = Field::from_fn(g, |x| {
            -((k * h).sin() / h) * (k * x[0]).sin() / (1.0 + d * k * k)
        })
        .unwrap();
        assert!(vel[0].max_abs_diff(&expect).unwrap() < 1e-12);
        let cached = NonlocalDrift::new(&w).velocity(&u).unwrap();
        assert!(cached[0].max_abs_diff(&vel[0]).unwrap() < 1e-13);
    }

    #[test]
    fn chemo_drift_cancels() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        let v1 = Field::from_fn(g, |x| (PI * x[0]).sin()).unwrap();
        let v2 = v1.scaled(-2.0 / 0.5);
        let vel = drift_velocity_chemo(&[v1.clone(), v2], &[2.0, 0.5]).unwrap();
        assert!(vel[0].values().iter().all(|x| x.abs() < 1e-14));
        let vel = drift_velocity_chemo(std::slice::from_ref(&v1), &[0.0]).unwrap();
        assert!(vel[0].values().iter().all(|x| *x == 0.0));
        assert!(drift_velocity_chemo(&[v1], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn heat_step_matches_discrete_symbol() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let h = g.spacing();
        let k = PI;
        let u = Field::from_fn(g, |x| 0.5 + 0.1 * (k * x[0]).cos()).unwrap();
        let zero = vec![Field::zeros(g)];
        let dt = 0.2 * h * h;
        let next = step_u(&u, &zero, &heat(), dt).unwrap();
        let factor = 1.0 - dt * 4.0 / (h * h) * (k * h / 2.0).sin().powi(2);
        let expect = Field::from_fn(g, |x| 0.5 + 0.1 * factor * (k * x[0]).cos()).unwrap();
        assert!(next.max_abs_diff(&expect).unwrap() < 1e-14);
    }

    #[test]
    fn pure_states_block_advection() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        let vel = vec![Field::from_fn(g, |x| 3.0 * (PI * x[0]).sin()).unwrap()];
        let model =
            ModelFunctions::new(Beta::Power { gamma: 2.0 }, Mobility::VolumeFilling, 0.0).unwrap();
        for c in [0.0, 1.0] {
            let u = Field::constant(g, c);
            assert_eq!(step_u(&u, &vel, &model, 1e-3).unwrap(), u);
        }
        // A sharp front still moves mass, but stays inside [0, 1].
        let u = Field::from_fn(g, |x| if x[0].abs() < 0.5 { 1.0 } else { 0.0 }).unwrap();
        let dt = stable_dt(&g, &vel, &model, 0.45);
        let next = step_u(&u, &vel, &model, dt).unwrap();
        assert!(next.min() >= 0.0 && next.max() <= 1.0);
        assert!((next.integral() - u.integral()).abs() < 1e-14);
    }

    #[test]
    fn implicit_v_step() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let c = Field::constant(g, 0.3);
        let next = step_v_parabolic(&c, &c, 0.7, 0.01, 0.5).unwrap();
        assert!(next.max_abs_diff(&c).unwrap() < 1e-15);

        let u = Field::from_fn(g, |x| 0.5 + 0.3 * (PI * x[0]).cos()).unwrap();
        let v = Field::zeros(g);
        let limit = step_v_parabolic(&v, &u, 0.7, 1.0, 1e8).unwrap();
        assert!(
            limit
                .max_abs_diff(&elliptic_solve(0.7, &u).unwrap())
                .unwrap()
                < 1e-6
        );

        let (d, xi, dt) = (0.4, 0.1, 0.05);
        let k = PI;
        let mode = Field::from_fn(g, |x| (k * x[0]).cos()).unwrap();
        let next = step_v_parabolic(&mode, &Field::zeros(g), d, xi, dt).unwrap();
        let amp = 1.0 / (1.0 + dt / xi * (1.0 + d * k * k));
        assert!(next.max_abs_diff(&mode.scaled(amp)).unwrap() < 1e-15);
    }

    #[test]
    fn young_bound_discrete() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let w = greens_kernel(0.2, &g).unwrap().scaled(-3.0);
        let drift = NonlocalDrift::new(&w);
        let u = Field::from_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1]) * 4.0).exp()).unwrap();
        let vel = drift.velocity(&u).unwrap();
        assert!(vector_l2(&vel) <= drift.gradient_l1() * crate::domain::norm_l2(&u) * (1.0 + 1e-8));
    }
}

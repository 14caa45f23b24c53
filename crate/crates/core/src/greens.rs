//! Periodic Green functions of `-d Laplace + 1` built in Fourier space, and
//! the screened-Poisson solve they represent.

use crate::domain::spectral::{self, squared_frequencies};
use crate::domain::{Field, Grid, Layout};
use crate::error::{Error, Result};
use crate::kernel::PeriodizedKernel;
use num_complex::Complex64;

/// Fourier multiplier `1 / (1 + d |xi|^2)`.
pub fn resolvent_symbol(d: f64, xi2: f64) -> f64 {
    1.0 / (1.0 + d * xi2)
}

fn check_d(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!(
            "diffusivity must be positive, got {d}"
        )));
    }
    Ok(())
}

/// Discrete delta `1/h^N` at displacement zero, in offset layout.
pub fn discrete_delta(grid: &Grid) -> Field {
    let mut v = vec![0.0; grid.len()];
    v[0] = 1.0 / grid.cell_volume();
    Field::from_parts(*grid, Layout::Offset, v)
}

/// Periodic Green function `w` with `(-d Laplace_h + I) w = delta_h`, where the
/// Laplacian uses the continuous frequencies `pi k / L`.
pub fn greens_periodic_spectral(d: f64, grid: &Grid) -> Result<Field> {
    check_d(d)?;
    Ok(spectral::apply_symbol(&discrete_delta(grid), |k2| {
        resolvent_symbol(d, k2)
    }))
}

/// Solves `(-d Laplace_h + I) v = u` exactly in Fourier space.
pub fn elliptic_solve(d: f64, u: &Field) -> Result<Field> {
    check_d(d)?;
    Ok(spectral::apply_symbol(u, |k2| resolvent_symbol(d, k2)))
}

/// Exact derivative of the trigonometric interpolant along each axis. The
/// Nyquist mode has no odd partner and is dropped.
pub fn spectral_gradient(field: &Field) -> Vec<Field> {
    let grid = *field.grid();
    let hat = spectral::forward(field);
    let n = grid.n();
    (0..grid.dim())
        .map(|axis| {
            let mut h = hat.clone();
            for (flat, c) in h.iter_mut().enumerate() {
                let i = grid.unflatten(flat)[axis];
                let k = if i == n / 2 { 0.0 } else { grid.frequency(i) };
                *c *= Complex64::new(0.0, k);
            }
            spectral::inverse_real(&grid, field.layout(), h)
        })
        .collect()
}

/// The periodic Green function of `-d Laplace + 1` as a convolution kernel.
pub fn greens_kernel(d: f64, grid: &Grid) -> Result<PeriodizedKernel> {
    let w = greens_periodic_spectral(d, grid)?;
    let g = spectral_gradient(&w);
    PeriodizedKernel::from_parts(w, g, 0)
}

/// Green functions `w_j` for distinct diffusivities `d_j` on one grid.
#[derive(Clone, Debug)]
pub struct GreensBasis {
    grid: Grid,
    diffusivities: Vec<f64>,
    fields: Vec<PeriodizedKernel>,
    symbols: Vec<Vec<f64>>,
}

impl GreensBasis {
    pub fn new(grid: Grid, diffusivities: &[f64]) -> Result<Self> {
        if diffusivities.is_empty() {
            return Err(Error::Validation(
                "a Green basis needs at least one diffusivity".into(),
            ));
        }
        for (i, &d) in diffusivities.iter().enumerate() {
            check_d(d)?;
            if diffusivities[..i].contains(&d) {
                return Err(Error::Validation(format!("diffusivity {d} appears twice")));
            }
        }
        let xi2 = squared_frequencies(&grid);
        let symbols = diffusivities
            .iter()
            .map(|&d| xi2.iter().map(|&k2| resolvent_symbol(d, k2)).collect())
            .collect();
        let fields = diffusivities
            .iter()
            .map(|&d| greens_kernel(d, &grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(GreensBasis {
            grid,
            diffusivities: diffusivities.to_vec(),
            fields,
            symbols,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.diffusivities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffusivities.is_empty()
    }

    pub fn diffusivities(&self) -> &[f64] {
        &self.diffusivities
    }

    pub fn fields(&self) -> &[PeriodizedKernel] {
        &self.fields
    }

    pub fn symbol(&self, j: usize) -> &[f64] {
        &self.symbols[j]
    }

    /// Basis restricted to its first `m` elements.
    pub fn truncated(&self, m: usize) -> GreensBasis {
        let m = m.min(self.len());
        GreensBasis {
            grid: self.grid,
            diffusivities: self.diffusivities[..m].to_vec(),
            fields: self.fields[..m].to_vec(),
            symbols: self.symbols[..m].to_vec(),
        }
    }

    /// `max |(-d_j Laplace_h + I) w_j - delta_h|`, scaled by `h^N`.
    pub fn residual(&self, j: usize) -> f64 {
        let d = self.diffusivities[j];
        let applied = spectral::apply_symbol(&self.fields[j].field, |k2| 1.0 + d * k2);
        let delta = discrete_delta(&self.grid);
        applied.max_abs_diff(&delta).expect("same grid") * self.grid.cell_volume()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{inner_product, periodic_convolve};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn green_integrates_to_one() {
        for dim in 1..=3 {
            let g = Grid::new(dim, 1.3, 8).unwrap();
            let w = greens_periodic_spectral(0.4, &g).unwrap();
            assert_relative_eq!(w.integral(), 1.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn constants_are_fixed() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let v = elliptic_solve(0.3, &Field::constant(g, 0.7)).unwrap();
        assert!(v.values().iter().all(|x| (x - 0.7).abs() < 1e-14));
    }

    #[test]
    fn single_mode() {
        let g = Grid::new(1, 1.0, 32).unwrap();
        let d = 0.5;
        let u = Field::from_fn(g, |x| (PI * x[0]).cos()).unwrap();
        let v = elliptic_solve(d, &u).unwrap();
        let expected = u.scaled(1.0 / (1.0 + d * PI * PI));
        assert!(v.max_abs_diff(&expected).unwrap() < 1e-14);
    }

    #[test]
    fn solve_of_delta_is_green() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let by_solve = elliptic_solve(0.2, &discrete_delta(&g)).unwrap();
        let w = greens_periodic_spectral(0.2, &g).unwrap();
        assert!(by_solve.max_abs_diff(&w).unwrap() < 1e-14);
    }

    #[test]
    fn convolution_identity_and_self_adjointness() {
        let g = Grid::new(1, 1.0, 64).unwrap();
        let u = Field::from_fn(g, |x| (-(4.0 * x[0]).powi(2)).exp()).unwrap();
        let b = Field::from_fn(g, |x| (3.0 * PI * x[0]).sin() + 0.5).unwrap();
        let d = 0.1;
        let w = greens_periodic_spectral(d, &g).unwrap();
        let v = elliptic_solve(d, &u).unwrap();
        assert!(v.max_abs_diff(&periodic_convolve(&w, &u).unwrap()).unwrap() < 1e-12);
        let lhs = inner_product(&v, &b).unwrap();
        let rhs = inner_product(&u, &elliptic_solve(d, &b).unwrap()).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn basis_validation_and_residuals() {
        let g = Grid::new(1, 1.0, 32).unwrap();
        assert!(GreensBasis::new(g, &[]).is_err());
        assert!(GreensBasis::new(g, &[1.0, 1.0]).is_err());
        assert!(GreensBasis::new(g, &[1.0, -1.0]).is_err());
        let b = GreensBasis::new(g, &[1.5, 1.25]).unwrap();
        for j in 0..b.len() {
            assert!(b.residual(j) < 1e-10);
        }
    }

    #[test]
    fn spectral_gradient_of_mode() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        let f = Field::from_fn(g, |x| (2.0 * PI * x[0]).sin()).unwrap();
        let df = Field::from_fn(g, |x| 2.0 * PI * (2.0 * PI * x[0]).cos()).unwrap();
        assert!(spectral_gradient(&f)[0].max_abs_diff(&df).unwrap() < 1e-12);
    }
}

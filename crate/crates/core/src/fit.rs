//! Least-squares fitting of a periodic kernel by periodic Green functions,
//! `W ~ sum_j a_j w_j`.
//!
//! Coefficients minimise the discrete `H^1` misfit plus a Tikhonov term,
//! `||W - sum a_j w_j||_{H^1_h}^2 + lambda ||a||^2`, and the `W^{1,1}` misfit is
//! reported alongside. The minimiser is computed by Householder QR of the
//! `H^1`-weighted design matrix stacked on `sqrt(lambda) I`, which solves the
//! regularised normal equations without squaring their condition number.

use crate::domain::{gradient, norm_l2, norm_w11, Field};
use crate::error::{Error, Result};
use crate::greens::GreensBasis;
use crate::kernel::PeriodizedKernel;
use std::fmt::Write as _;

/// Distinct diffusivities accumulating at a positive point.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusivitySequence {
    pub values: Vec<f64>,
    pub accumulation_point: f64,
}

/// `d_j = d_star (1 + 1/(j + 1))` for `j = 1..=m`.
pub fn default_diffusivities(m: usize, d_star: f64) -> Result<DiffusivitySequence> {
    if m == 0 {
        return Err(Error::Validation("need at least one diffusivity".into()));
    }
    if !(d_star > 0.0) {
        return Err(Error::Domain(format!(
            "accumulation point must be positive, got {d_star}"
        )));
    }
    let values = (1..=m)
        .map(|j| d_star * (1.0 + 1.0 / (j as f64 + 1.0)))
        .collect();
    Ok(DiffusivitySequence {
        values,
        accumulation_point: d_star,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub diffusivities: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub residual_w11: f64,
    pub residual_l2: f64,
    /// Discrete `H^1` misfit, the quantity actually minimised (without the penalty).
    pub residual_h1: f64,
    pub gram_condition_estimate: f64,
    pub regularization_weight: f64,
    /// Set when the regularised system has condition estimate above `1e12`.
    pub ill_conditioned: bool,
    /// For [`fit_to_tolerance`]: whether `residual_w11 < epsilon` was reached.
    pub converged: bool,
}

impl FitResult {
    pub fn m(&self) -> usize {
        self.coefficients.len()
    }

    /// `j,d_j,a_j` rows followed by a `# summary:` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,d_j,a_j\n");
        for (j, (d, a)) in self
            .diffusivities
            .iter()
            .zip(&self.coefficients)
            .enumerate()
        {
            let _ = writeln!(out, "{},{d:.16e},{a:.16e}", j + 1);
        }
        let _ = writeln!(
            out,
            "# summary: M={} residual_w11={:.16e} residual_l2={:.16e} residual_h1={:.16e} \
             gram_condition={:.6e} regularization={:.6e} converged={}",
            self.m(),
            self.residual_w11,
            self.residual_l2,
            self.residual_h1,
            self.gram_condition_estimate,
            self.regularization_weight,
            self.converged
        );
        out
    }
}

/// Columns of the design matrix: values then centred-difference gradient
/// components, all weighted by `sqrt(h^N)`.
fn h1_vector(field: &Field) -> Vec<f64> {
    let w = field.grid().cell_volume().sqrt();
    let mut v: Vec<f64> = field.values().iter().map(|x| x * w).collect();
    for g in gradient(field) {
        v.extend(g.values().iter().map(|x| x * w));
    }
    v
}

/// Discrete `H^1` inner product `<f, g> + <grad f, grad g>`.
pub fn h1_inner(a: &Field, b: &Field) -> Result<f64> {
    a.check_same_grid(b)?;
    Ok(h1_vector(a)
        .iter()
        .zip(h1_vector(b))
        .map(|(x, y)| x * y)
        .sum())
}

/// `1e-10 trace(G) / M` for the `H^1` Gram matrix of `basis`.
pub fn default_regularization(basis: &GreensBasis) -> f64 {
    let trace: f64 = basis
        .fields()
        .iter()
        .map(|k| h1_vector(&k.field).iter().map(|x| x * x).sum::<f64>())
        .sum();
    1e-10 * trace / basis.len() as f64
}

/// `sum_j a_j w_j`.
pub fn reconstruct(basis: &GreensBasis, coefficients: &[f64]) -> Result<PeriodizedKernel> {
    PeriodizedKernel::linear_combination(coefficients, &basis.fields()[..coefficients.len()])
}

pub fn fit_coefficients(
    target: &PeriodizedKernel,
    basis: &GreensBasis,
    regularization: f64,
) -> Result<FitResult> {
    target.field.check_same_grid(&basis.fields()[0].field)?;
    if !(regularization >= 0.0) || !regularization.is_finite() {
        return Err(Error::Validation(format!(
            "regularisation must be >= 0, got {regularization}"
        )));
    }
    let m = basis.len();
    let rhs = h1_vector(&target.field);
    let rows = rhs.len() + m;
    let sqrt_lambda = regularization.sqrt();
    let mut cols: Vec<Vec<f64>> = basis
        .fields()
        .iter()
        .enumerate()
        .map(|(j, k)| {
            let mut c = h1_vector(&k.field);
            c.resize(rows, 0.0);
            c[rhs.len() + j] = sqrt_lambda;
            c
        })
        .collect();
    let mut b = rhs;
    b.resize(rows, 0.0);

    let mut diag = vec![0.0; m];
    for k in 0..m {
        let norm = cols[k][k..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if cols[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            let reflect = |c: &mut [f64]| {
                let dot: f64 = v.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
                let s = 2.0 * dot / vnorm2;
                c.iter_mut().zip(&v).for_each(|(x, vi)| *x -= s * vi);
            };
            for col in cols.iter_mut().skip(k) {
                reflect(&mut col[k..]);
            }
            reflect(&mut b[k..]);
        }
        diag[k] = cols[k][k];
    }

    let mut a = vec![0.0; m];
    for i in (0..m).rev() {
        if diag[i] == 0.0 {
            continue;
        }
        let s: f64 = (i + 1..m).map(|j| cols[j][i] * a[j]).sum();
        a[i] = (b[i] - s) / diag[i];
    }

    let abs_diag: Vec<f64> = diag.iter().map(|d| d.abs()).collect();
    let dmax = abs_diag.iter().copied().fold(0.0, f64::max);
    let dmin = abs_diag.iter().copied().fold(f64::INFINITY, f64::min);
    let gram_condition_estimate = if dmin > 0.0 {
        (dmax / dmin).powi(2)
    } else {
        f64::INFINITY
    };

    let mut res = evaluate(target, basis, &a)?;
    res.regularization_weight = regularization;
    res.gram_condition_estimate = gram_condition_estimate;
    res.ill_conditioned = !(gram_condition_estimate < 1e12);
    Ok(res)
}

/// Residual norms of the coefficients `a`, computed from scratch.
pub fn evaluate(target: &PeriodizedKernel, basis: &GreensBasis, a: &[f64]) -> Result<FitResult> {
    let approx = reconstruct(basis, a)?;
    let diff = target.field.sub(&approx.field)?;
    let residual_h1 = h1_inner(&diff, &diff)?.sqrt();
    Ok(FitResult {
        diffusivities: basis.diffusivities()[..a.len()].to_vec(),
        coefficients: a.to_vec(),
        residual_w11: norm_w11(&diff),
        residual_l2: norm_l2(&diff),
        residual_h1,
        gram_condition_estimate: f64::NAN,
        regularization_weight: 0.0,
        ill_conditioned: false,
        converged: false,
    })
}

/// Refits with `M = 1, 2, 4, ...` (and finally `M_max`) Green functions from
/// [`default_diffusivities`] until `residual_w11 < epsilon`. Without success
/// the smallest-residual fit is returned with `converged = false`.
pub fn fit_to_tolerance(
    target: &PeriodizedKernel,
    epsilon: f64,
    m_max: usize,
    d_star: f64,
) -> Result<FitResult> {
    if !(epsilon > 0.0) {
        return Err(Error::Validation(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let seq = default_diffusivities(m_max, d_star)?;
    let full = GreensBasis::new(*target.grid(), &seq.values)?;
    let mut best: Option<FitResult> = None;
    for m in doubling_sequence(m_max) {
        let basis = full.truncated(m);
        let mut fit = fit_coefficients(target, &basis, default_regularization(&basis))?;
        if fit.residual_w11 < epsilon {
            fit.converged = true;
            return Ok(fit);
        }
        if best
            .as_ref()
            .is_none_or(|b| fit.residual_w11 < b.residual_w11)
        {
            best = Some(fit);
        }
    }
    Ok(best.expect("m_max >= 1"))
}

/// `1, 2, 4, ...` capped by and ending at `m_max`.
pub fn doubling_sequence(m_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = 1;
    while m < m_max {
        out.push(m);
        m *= 2;
    }
    out.push(m_max);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use crate::kernel::{periodize, RadialKernel};

    fn grid() -> Grid {
        Grid::new(1, 1.0, 64).unwrap()
    }

    #[test]
    fn default_sequence() {
        let s = default_diffusivities(3, 1.0).unwrap();
        assert_eq!(s.values, vec![1.5, 1.0 + 1.0 / 3.0, 1.25]);
        assert_eq!(default_diffusivities(1, 2.0).unwrap().values, vec![3.0]);
        let many = default_diffusivities(64, 0.3).unwrap().values;
        assert!(many.windows(2).all(|w| w[1] < w[0] && w[1] > 0.3));
    }

    #[test]
    fn recovers_scaled_basis_element() {
        let basis =
            GreensBasis::new(grid(), &default_diffusivities(3, 1.0).unwrap().values).unwrap();
        let target = basis.fields()[1].scaled(3.0);
        let fit = fit_coefficients(&target, &basis, 0.0).unwrap();
        assert!(fit.residual_w11 < 1e-8, "{}", fit.residual_w11);
        for (a, e) in fit.coefficients.iter().zip([0.0, 3.0, 0.0]) {
            assert!((a - e).abs() < 1e-6, "{:?}", fit.coefficients);
        }
    }

    #[test]
    fn zero_target() {
        let basis = GreensBasis::new(grid(), &[1.5, 1.2]).unwrap();
        let fit = fit_coefficients(&PeriodizedKernel::zero(grid()), &basis, 0.0).unwrap();
        assert_eq!(fit.coefficients, vec![0.0, 0.0]);
        assert_eq!(fit.residual_w11, 0.0);
        assert_eq!(fit.residual_l2, 0.0);
    }

    #[test]
    fn stored_residual_matches_recomputation() {
        let g = grid();
        let target = periodize(&RadialKernel::gaussian(0.3, 1).unwrap(), &g, 1e-10).unwrap();
        let basis = GreensBasis::new(g, &default_diffusivities(4, 0.05).unwrap().values).unwrap();
        let fit = fit_coefficients(&target, &basis, default_regularization(&basis)).unwrap();
        let again = evaluate(&target, &basis, &fit.coefficients).unwrap();
        assert!((again.residual_w11 - fit.residual_w11).abs() <= 1e-12 * fit.residual_w11.max(1.0));
    }

    #[test]
    fn normal_equations_hold() {
        let g = grid();
        let target = periodize(&RadialKernel::gaussian(0.3, 1).unwrap(), &g, 1e-10).unwrap();
        let basis = GreensBasis::new(g, &default_diffusivities(6, 0.05).unwrap().values).unwrap();
        let lambda = default_regularization(&basis);
        let fit = fit_coefficients(&target, &basis, lambda).unwrap();
        let approx = reconstruct(&basis, &fit.coefficients).unwrap();
        let r = target.field.sub(&approx.field).unwrap();
        let tnorm = h1_inner(&target.field, &target.field).unwrap().sqrt();
        for (j, w) in basis.fields().iter().enumerate() {
            let lhs = h1_inner(&r, &w.field).unwrap();
            let wnorm = h1_inner(&w.field, &w.field).unwrap().sqrt();
            let rel = (lhs - lambda * fit.coefficients[j]).abs() / (wnorm * tnorm);
            assert!(rel < 1e-8, "j={j} rel={rel}");
        }
    }

    #[test]
    fn tolerance_search() {
        let basis =
            GreensBasis::new(grid(), &default_diffusivities(1, 0.5).unwrap().values).unwrap();
        let target = basis.fields()[0].clone();
        let fit = fit_to_tolerance(&target, 1e-6, 16, 0.5).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.m(), 1);
    }

    #[test]
    fn doubling() {
        assert_eq!(doubling_sequence(1), vec![1]);
        assert_eq!(doubling_sequence(16), vec![1, 2, 4, 8, 16]);
        assert_eq!(doubling_sequence(12), vec![1, 2, 4, 8, 12]);
    }

    #[test]
    fn csv_layout() {
        let basis = GreensBasis::new(grid(), &[1.5, 1.2]).unwrap();
        let fit = fit_coefficients(&basis.fields()[0].clone(), &basis, 0.0).unwrap();
        let csv = fit.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "j,d_j,a_j");
        assert!(lines[1].starts_with("1,1.5"));
        assert!(lines[3].starts_with("# summary: M=2"));
    }
}

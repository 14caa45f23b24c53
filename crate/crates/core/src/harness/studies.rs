use super::config::ExperimentConfig;
use super::report::ExperimentReport;
use crate::domain::{norm_l2, norm_l2_spacetime, periodic_convolve, SpaceTimeSeries};
use crate::error::{Error, Result};
use crate::fit::{default_diffusivities, default_regularization, fit_coefficients, reconstruct};
use crate::greens::GreensBasis;
use crate::kernel::PeriodizedKernel;
use crate::pde::{run, vector_l1, vector_l2, ChemicalSpec, Interaction, RunOutput};
use std::thread;

/// `|| a - b ||_{L^2(Q_T)}` over matching snapshots.
pub fn compare_runs(a: &SpaceTimeSeries, b: &SpaceTimeSeries) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::Comparison("runs live on different grids".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Comparison(format!(
            "{} snapshots against {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Comparison(
            "runs share fewer than two snapshot times".into(),
        ));
    }
    for (s, t) in a.times().iter().zip(b.times()) {
        if (s - t).abs() > 1e-12 {
            return Err(Error::Comparison(format!(
                "snapshot times differ: {s} against {t}"
            )));
        }
    }
    let diffs = a
        .snapshots()
        .iter()
        .zip(b.snapshots())
        .map(|(x, y)| x.sub(y))
        .collect::<Result<Vec<_>>>()?;
    norm_l2_spacetime(&SpaceTimeSeries::from_parts(
        *a.grid(),
        a.times().to_vec(),
        diffs,
    )?)
}

/// Runs the jobs on scoped threads and returns results in input order.
fn parallel<T: Send, R: Send>(jobs: Vec<T>, f: impl Fn(T) -> R + Sync) -> Vec<R> {
    let f = &f;
    thread::scope(|s| {
        let handles: Vec<_> = jobs.into_iter().map(|j| s.spawn(move || f(j))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}

fn truncate_on_abort(
    id: &str,
    axis: &[f64],
    outcomes: Vec<Result<f64>>,
    metadata: Vec<String>,
) -> Result<ExperimentReport> {
    let mut errors = Vec::new();
    let mut partial = None;
    for o in outcomes {
        match o {
            Ok(e) => errors.push(e),
            Err(e @ Error::NumericalAbort { .. }) => {
                partial = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut report = ExperimentReport::new(id, axis[..errors.len()].to_vec(), errors, metadata)?;
    report.partial = partial;
    Ok(report)
}

/// Distance between the parabolic-parabolic runs at each `xi` and the
/// parabolic-elliptic run, all from the same datum and grid.
pub fn study_xi(cfg: &ExperimentConfig, xi_list: &[f64]) -> Result<ExperimentReport> {
    if xi_list.is_empty()
        || xi_list.windows(2).any(|w| w[1] >= w[0])
        || xi_list.iter().any(|x| !(*x > 0.0))
    {
        return Err(Error::Validation(
            "xi values must be positive and strictly decreasing".into(),
        ));
    }
    let chem = cfg.chemicals()?;
    let u0 = cfg.initial_density()?;
    let mut jobs = vec![0.0];
    jobs.extend_from_slice(xi_list);
    let runs = parallel(jobs, |xi| -> Result<RunOutput> {
        let spec = ChemicalSpec::new(chem.diffusivities.clone(), chem.sensitivities.clone(), xi)?;
        run(
            &cfg.model,
            &Interaction::Chemotaxis(spec),
            &u0,
            None,
            &cfg.run,
        )
    });
    let mut runs = runs.into_iter();
    let mut metadata = cfg.echo();
    metadata.push(format!("study.xi = {xi_list:?}"));
    let reference = match runs.next().expect("reference job") {
        Ok(r) => r,
        Err(e @ Error::NumericalAbort { .. }) => {
            let mut report = ExperimentReport::new("study-xi", vec![], vec![], metadata)?;
            report.partial = Some(format!("reference run: {e}"));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    let outcomes = runs
        .map(|r| r.and_then(|r| compare_runs(&r.series, &reference.series)))
        .collect();
    truncate_on_abort("study-xi", xi_list, outcomes, metadata)
}

/// Solution error of fitted-kernel runs against the run with `target`.
///
/// Each `W_M` is fitted with the first `M` default diffusivities and run as
/// the parabolic-elliptic system with chemicals `(d_j, a_j)`. Auxiliary
/// columns: `kernel_grad_l1` (`||grad_h (W_M - W)||_{L^1}`), `kernel_w11`
/// (the fit's `W^{1,1}` residual) and `young_ratio` (largest
/// `||grad_h(W_M - W) * u||_2 / (||grad_h(W_M - W)||_1 ||u||_2)` over the
/// snapshots of the reference run).
pub fn study_kernel(
    cfg: &ExperimentConfig,
    target: &PeriodizedKernel,
    m_list: &[usize],
) -> Result<ExperimentReport> {
    if m_list.is_empty() || m_list.windows(2).any(|w| w[1] <= w[0]) || m_list[0] == 0 {
        return Err(Error::Validation(
            "M values must be positive and strictly increasing".into(),
        ));
    }
    if *target.grid() != cfg.grid {
        return Err(Error::Validation(
            "target kernel grid differs from the run grid".into(),
        ));
    }
    let u0 = cfg.initial_density()?;
    let m_max = *m_list.last().expect("nonempty");
    let seq = default_diffusivities(m_max, cfg.d_star)?;
    let basis = GreensBasis::new(cfg.grid, &seq.values)?;
    let mut metadata = cfg.echo();
    metadata.push(format!("study.kernel_m = {m_list:?}"));

    let reference = run(
        &cfg.model,
        &Interaction::Nonlocal(target.clone()),
        &u0,
        None,
        &cfg.run,
    );
    let reference = match reference {
        Ok(r) => r,
        Err(e @ Error::NumericalAbort { .. }) => {
            let mut report = ExperimentReport::new("study-kernel", vec![], vec![], metadata)?;
            report.partial = Some(format!("reference run: {e}"));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };

    let mut fits = Vec::new();
    let mut fit_failure = None;
    for &m in m_list {
        let b = basis.truncated(m);
        let lambda = cfg.lambda.unwrap_or_else(|| default_regularization(&b));
        match fit_coefficients(target, &b, lambda) {
            Ok(f) => fits.push(f),
            Err(e) => {
                fit_failure = Some(format!("fit with M = {m} failed: {e}"));
                break;
            }
        }
    }

    let outcomes = parallel(fits.iter().collect(), |fit| -> Result<(f64, f64, f64)> {
        let approx = reconstruct(&basis, &fit.coefficients)?;
        let diff = approx.sub(target)?;
        let grad = diff.discrete_gradient();
        let grad_l1 = vector_l1(&grad);
        let mut young = 0.0f64;
        for u in reference.series.snapshots() {
            let drift = grad
                .iter()
                .map(|g| periodic_convolve(g, u))
                .collect::<Result<Vec<_>>>()?;
            let bound = grad_l1 * norm_l2(u);
            let lhs = vector_l2(&drift);
            if bound > 0.0 {
                young = young.max(lhs / bound);
            } else if lhs > 0.0 {
                young = f64::INFINITY;
            }
        }
        if young > 1.0 + 1e-8 {
            return Err(Error::Comparison(format!(
                "drift bound violated for M = {}: ratio {young}",
                fit.m()
            )));
        }
        let chem = ChemicalSpec::new(fit.diffusivities.clone(), fit.coefficients.clone(), 0.0)?;
        let out = run(
            &cfg.model,
            &Interaction::Chemotaxis(chem),
            &u0,
            None,
            &cfg.run,
        )?;
        Ok((
            compare_runs(&out.series, &reference.series)?,
            grad_l1,
            young,
        ))
    });

    let mut errors = Vec::new();
    let mut grad_l1 = Vec::new();
    let mut w11 = Vec::new();
    let mut young = Vec::new();
    let mut partial = fit_failure;
    for (o, fit) in outcomes.into_iter().zip(&fits) {
        match o {
            Ok((e, g, y)) => {
                errors.push(e);
                grad_l1.push(g);
                w11.push(fit.residual_w11);
                young.push(y);
            }
            Err(e @ Error::NumericalAbort { .. }) => {
                partial = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let axis = m_list[..errors.len()].iter().map(|&m| m as f64).collect();
    let mut report = ExperimentReport::new("study-kernel", axis, errors, metadata)?;
    report.auxiliary = vec![
        ("kernel_grad_l1".into(), grad_l1),
        ("kernel_w11".into(), w11),
        ("young_ratio".into(), young),
    ];
    report.partial = partial;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Field, Grid};

    fn series(times: &[f64], offsets: &[f64]) -> SpaceTimeSeries {
        let g = Grid::new(1, 1.0, 8).unwrap();
        SpaceTimeSeries::from_parts(
            g,
            times.to_vec(),
            offsets.iter().map(|&c| Field::constant(g, c)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn compare_identical_and_offset() {
        let a = series(&[0.0, 0.5, 1.0], &[0.0, 0.0, 0.0]);
        assert_eq!(compare_runs(&a, &a).unwrap(), 0.0);
        // Only the middle snapshot is off by c: trapezoid weight 1/2 + 1/2 = 1.
        let c = 0.3;
        let b = series(&[0.0, 0.5, 1.0], &[0.0, c, 0.0]);
        let expect = (c * c * 2.0 * 0.5).sqrt();
        assert!((compare_runs(&a, &b).unwrap() - expect).abs() < 1e-15);
        let short = series(&[0.0], &[0.0]);
        assert!(compare_runs(&short, &short).is_err());
        let shifted = series(&[0.0, 0.5, 1.1], &[0.0, 0.0, 0.0]);
        assert!(compare_runs(&a, &shifted).is_err());
    }
}

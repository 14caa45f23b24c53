//! Quick invariant checks on small grids, run by `hapchem selftest`.

use crate::domain::{periodic_convolve, Field, Grid, Layout};
use crate::error::Result;
use crate::greens::greens_kernel;
use crate::harness::compare_runs;
use crate::pde::{
    drift_velocity_nonlocal, run, ChemicalSpec, Interaction, ModelFunctions, RunConfig,
};
use crate::specfun::{bessel_k, BesselOrder};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn bump(g: Grid) -> Result<Field> {
    Field::from_fn(g, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        0.1 + 0.8 * (-8.0 * r2).exp()
    })
}

pub fn run_all() -> Vec<Check> {
    vec![
        check("bessel_k reference values", || {
            let cases = [
                (BesselOrder::ZERO, 1.0, 0.42102443824070834),
                (BesselOrder::ONE, 1.0, 0.6019072301972346),
                (BesselOrder::HALF, 2.0, 0.11993777196806145),
            ];
            let mut worst = 0.0f64;
            for (nu, r, expect) in cases {
                worst = worst.max((bessel_k(nu, r)? / expect - 1.0).abs());
            }
            Ok((worst < 1e-12, format!("max relative error {worst:e}")))
        }),
        check("convolution against direct sum", || {
            let g = Grid::new(2, 1.0, 8)?;
            let a = Field::offset_from_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp())?;
            let b = Field::from_fn(g, |x| (x[0] + 0.5 * x[1]).sin() + 1.0)?;
            let fast = periodic_convolve(&a, &b)?;
            let n = g.n();
            let mut worst = 0.0f64;
            for i in 0..g.len() {
                let ii = g.unflatten(i);
                let mut s = 0.0;
                for j in 0..g.len() {
                    let jj = g.unflatten(j);
                    let k = g.flatten(&[(ii[0] + n - jj[0]) % n, (ii[1] + n - jj[1]) % n]);
                    s += a.values()[k] * b.values()[j];
                }
                s *= g.cell_volume();
                worst = worst.max((fast.values()[i] - s).abs());
            }
            Ok((
                worst < 1e-12 && fast.layout() == Layout::Cell,
                format!("max difference {worst:e}"),
            ))
        }),
        check("drift routes agree", || {
            let g = Grid::new(2, 1.0, 16)?;
            let w = greens_kernel(0.5, &g)?;
            let v = drift_velocity_nonlocal(&bump(g)?, &w)?;
            Ok((v.len() == 2, "both drift routes within 1e-10".into()))
        }),
        check("mass and bounds, attractive chemotaxis", || {
            let g = Grid::new(1, 1.0, 64)?;
            let model = ModelFunctions::porous_medium(2.0)?;
            let chem = ChemicalSpec::new(vec![0.5, 0.1], vec![3.0, -1.0], 0.01)?;
            let out = run(
                &model,
                &Interaction::Chemotaxis(chem),
                &bump(g)?,
                None,
                &RunConfig::new(g, 0.05, 0.01),
            )?;
            let ok = out.mass_drift() <= 1e-10 && out.min_u() >= -1e-6 && out.max_u() <= 1.0 + 1e-6;
            Ok((
                ok,
                format!(
                    "mass drift {:e}, u in [{:e}, {:e}]",
                    out.mass_drift(),
                    out.min_u(),
                    out.max_u()
                ),
            ))
        }),
        check("single-Green coincidence", || {
            let g = Grid::new(1, 1.0, 64)?;
            let model = ModelFunctions::porous_medium(2.0)?;
            let cfg = RunConfig::new(g, 0.05, 0.01);
            let u0 = bump(g)?;
            let w = greens_kernel(1.0, &g)?.scaled(2.0);
            let a = run(&model, &Interaction::Nonlocal(w), &u0, None, &cfg)?;
            let chem = ChemicalSpec::new(vec![1.0], vec![2.0], 0.0)?;
            let b = run(&model, &Interaction::Chemotaxis(chem), &u0, None, &cfg)?;
            let d = compare_runs(&a.series, &b.series)?;
            Ok((d < 1e-8, format!("L2(Q_T) difference {d:e}")))
        }),
    ]
}

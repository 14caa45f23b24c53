use super::config::ExperimentConfig;
use super::plot::{line_chart, Series};
use super::report::ExperimentReport;
use super::{compare_runs, selftest, study_kernel, study_xi};
use crate::domain::io::{read_series, write_field, write_series};
use crate::error::{Error, Result};
use crate::fit::{
    default_diffusivities, default_regularization, fit_coefficients, fit_to_tolerance, FitResult,
};
use crate::greens::GreensBasis;
use crate::pde::{diagnostics_csv, run};
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "hapchem",
    version,
    about = "Nonlocal haptotaxis and Keller-Segel chemotaxis on periodic domains"
)]
struct Cli {
    /// Also write SVG line plots next to the CSV output.
    #[arg(long, global = true)]
    plot: bool,
    /// Output directory (defaults depend on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the configured kernel by Green functions and print j,d_j,a_j.
    FitKernel {
        config: PathBuf,
        /// Grow M by doubling until the W^{1,1} residual is below this.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Run the configured system, writing snapshots and diagnostics.
    Run { config: PathBuf },
    /// Relaxation-limit study over study.xi.
    StudyXi { config: PathBuf },
    /// Kernel-approximation study over kernel.m.
    StudyKernel { config: PathBuf },
    /// Print the L2(Q_T) distance between two written runs.
    Compare { run_a: PathBuf, run_b: PathBuf },
    /// Run the built-in invariant checks on small grids.
    Selftest,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 for invalid input, 2 for a numerical abort.
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn default_out(config: &Path, suffix: &str) -> PathBuf {
    let stem = config
        .file_stem()
        .map_or("hapchem".into(), |s| s.to_string_lossy().into_owned());
    PathBuf::from(format!("{stem}_{suffix}"))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::FitKernel { config, tolerance } => {
            let cfg = ExperimentConfig::from_path(config)?;
            let target = cfg.kernel_spec()?.build(&cfg.grid)?;
            let m_list = if cfg.kernel_m.is_empty() {
                vec![1, 2, 4, 8, 16]
            } else {
                cfg.kernel_m.clone()
            };
            let m_max = *m_list.last().expect("nonempty");
            let fit = match tolerance {
                Some(eps) => fit_to_tolerance(&target, *eps, m_max, cfg.d_star)?,
                None => {
                    let basis = GreensBasis::new(
                        cfg.grid,
                        &default_diffusivities(m_max, cfg.d_star)?.values,
                    )?;
                    fit_coefficients(
                        &target,
                        &basis,
                        cfg.lambda.unwrap_or_else(|| default_regularization(&basis)),
                    )?
                }
            };
            print!("{}", fit.to_csv());
            if let Some(dir) = &cli.out {
                write(&dir.join("fit.csv"), &fit.to_csv())?;
            }
            if cli.plot {
                let dir = cli
                    .out
                    .clone()
                    .unwrap_or_else(|| default_out(config, "fit"));
                let basis =
                    GreensBasis::new(cfg.grid, &default_diffusivities(m_max, cfg.d_star)?.values)?;
                let fits = m_list
                    .iter()
                    .map(|&m| {
                        let b = basis.truncated(m);
                        fit_coefficients(
                            &target,
                            &b,
                            cfg.lambda.unwrap_or_else(|| default_regularization(&b)),
                        )
                    })
                    .collect::<Result<Vec<FitResult>>>()?;
                let x: Vec<f64> = m_list.iter().map(|&m| m as f64).collect();
                let h1: Vec<f64> = fits.iter().map(|f| f.residual_h1).collect();
                let w11: Vec<f64> = fits.iter().map(|f| f.residual_w11).collect();
                let svg = line_chart(
                    "kernel fit residual",
                    "M",
                    "residual",
                    &[
                        Series {
                            name: "H1",
                            x: &x,
                            y: &h1,
                        },
                        Series {
                            name: "W11",
                            x: &x,
                            y: &w11,
                        },
                    ],
                    true,
                    true,
                );
                write(&dir.join("fit.svg"), &svg)?;
            }
            Ok(0)
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::from_path(config)?;
            let u0 = cfg.initial_density()?;
            let out = run(&cfg.model, &cfg.interaction()?, &u0, None, &cfg.run)?;
            let dir = cli
                .out
                .clone()
                .unwrap_or_else(|| default_out(config, "run"));
            write_series(&dir, &out.series)?;
            write(
                &dir.join("diagnostics.csv"),
                &diagnostics_csv(&out.state.diagnostics),
            )?;
            for (j, v) in out.state.v.iter().enumerate() {
                write_field(&dir.join(format!("chemical_{}.csv", j + 1)), v)?;
            }
            write(&dir.join("config.txt"), &(cfg.echo().join("\n") + "\n"))?;
            if cli.plot {
                let d = &out.state.diagnostics;
                let t: Vec<f64> = d.iter().map(|r| r.time).collect();
                let lo: Vec<f64> = d.iter().map(|r| r.min_u).collect();
                let hi: Vec<f64> = d.iter().map(|r| r.max_u).collect();
                let phi: Vec<f64> = d.iter().map(|r| r.phi).collect();
                let acc: Vec<f64> = d.iter().map(|r| r.grad_beta_accum).collect();
                let svg = line_chart(
                    "density range",
                    "t",
                    "u",
                    &[
                        Series {
                            name: "max u",
                            x: &t,
                            y: &hi,
                        },
                        Series {
                            name: "min u",
                            x: &t,
                            y: &lo,
                        },
                    ],
                    false,
                    false,
                );
                write(&dir.join("bounds.svg"), &svg)?;
                let svg = line_chart(
                    "energy",
                    "t",
                    "value",
                    &[
                        Series {
                            name: "int Phi(u)",
                            x: &t,
                            y: &phi,
                        },
                        Series {
                            name: "accumulated |grad beta|^2",
                            x: &t,
                            y: &acc,
                        },
                    ],
                    false,
                    false,
                );
                write(&dir.join("energy.svg"), &svg)?;
            }
            let (lhs, rhs) = out.energy_budget();
            println!(
                "steps {} (rejected {}), mass drift {:e}, u in [{:e}, {:e}], energy {:e} <= {:e}, output {}",
                out.steps,
                out.rejected_steps,
                out.mass_drift(),
                out.min_u(),
                out.max_u(),
                lhs,
                rhs + 0.05,
                dir.display()
            );
            Ok(0)
        }
        Command::StudyXi { config } => {
            let cfg = ExperimentConfig::from_path(config)?;
            let xi = if cfg.study_xi.is_empty() {
                vec![1e-1, 1e-2, 1e-3, 1e-4]
            } else {
                cfg.study_xi.clone()
            };
            let report = study_xi(&cfg, &xi)?;
            emit_report(cli, config, "study_xi", "xi", &report, true)
        }
        Command::StudyKernel { config } => {
            let cfg = ExperimentConfig::from_path(config)?;
            let target = cfg.kernel_spec()?.build(&cfg.grid)?;
            let m = if cfg.kernel_m.is_empty() {
                vec![1, 2, 4, 8, 16]
            } else {
                cfg.kernel_m.clone()
            };
            let report = study_kernel(&cfg, &target, &m)?;
            emit_report(cli, config, "study_kernel", "M", &report, true)
        }
        Command::Compare { run_a, run_b } => {
            let a = read_series(run_a)?;
            let b = read_series(run_b)?;
            println!("{:?}", compare_runs(&a, &b)?);
            Ok(0)
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            Ok(if checks.iter().all(|c| c.passed) {
                0
            } else {
                1
            })
        }
    }
}

fn emit_report(
    cli: &Cli,
    config: &Path,
    name: &str,
    axis: &str,
    report: &ExperimentReport,
    log_x: bool,
) -> Result<i32> {
    let dir = cli.out.clone().unwrap_or_else(|| default_out(config, name));
    write(&dir.join("report.csv"), &report.to_csv())?;
    print!("{}", report.to_csv());
    if cli.plot {
        let svg = line_chart(
            &report.experiment_id,
            axis,
            "L2(Q_T) error",
            &[Series {
                name: "error",
                x: &report.parameter_axis,
                y: &report.errors,
            }],
            log_x,
            true,
        );
        write(&dir.join(format!("{name}.svg")), &svg)?;
    }
    match &report.partial {
        Some(reason) => Err(Error::NumericalAbort {
            time: f64::NAN,
            reason: format!("experiment incomplete: {reason}"),
        }),
        None => Ok(0),
    }
}

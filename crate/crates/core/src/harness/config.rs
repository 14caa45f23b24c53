//! Experiment configuration: a TOML file of dotted keys.
//!
//! ```toml
//! seed = 7
//! grid.dim = 1
//! grid.L = 1.0
//! grid.n = 128
//! model.beta = "power"          # or "linear"
//! model.gamma = 2.0
//! model.eta = 0.0
//! model.g = "volume_filling"    # or "linear"
//! chem.xi = 0.01                # 0 selects the parabolic-elliptic system
//! chem.d = [1.0, 0.5]
//! chem.a = [2.0, -1.0]
//! init.type = "bump"
//! run.t_end = 0.25
//! run.dt = "auto"
//! run.snapshot_every = 0.05
//! run.cfl_safety = 0.45
//! ```
//!
//! With `kernel.*` keys and no `chem.*` keys the nonlocal model is run;
//! `model.system` forces the choice when both are present.

use crate::domain::{io, Field, Grid};
use crate::error::{Error, Result};
use crate::greens::greens_kernel;
use crate::kernel::{adhesion_potential, periodize, PeriodizedKernel, RadialKernel};
use crate::pde::{Beta, ChemicalSpec, Interaction, Mobility, ModelFunctions, RunConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use toml::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Nonlocal,
    Chemotaxis,
}

/// Force profile of an adhesion potential on `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmegaShape {
    /// `omega = 1`.
    Constant,
    /// `omega = 1 - r`.
    Linear,
}

#[derive(Clone, Debug, PartialEq)]
pub enum KernelKind {
    /// Periodic Green function of `-d Laplace + 1`.
    Greens {
        d: f64,
    },
    Adhesion {
        omega: OmegaShape,
    },
    Gaussian {
        sigma: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Multiplies the kernel.
    pub strength: f64,
    /// Lattice-sum truncation tolerance.
    pub tolerance: f64,
}

impl KernelSpec {
    pub fn build(&self, grid: &Grid) -> Result<PeriodizedKernel> {
        let k = match &self.kind {
            KernelKind::Greens { d } => greens_kernel(*d, grid)?,
            KernelKind::Adhesion { omega } => {
                let (f, label): (Arc<dyn Fn(f64) -> f64 + Send + Sync>, _) = match omega {
                    OmegaShape::Constant => (Arc::new(|_| 1.0), "adhesion(omega=1)"),
                    OmegaShape::Linear => (Arc::new(|r: f64| 1.0 - r), "adhesion(omega=1-r)"),
                };
                periodize(
                    &adhesion_potential(f, grid.dim(), label)?,
                    grid,
                    self.tolerance,
                )?
            }
            KernelKind::Gaussian { sigma } => periodize(
                &RadialKernel::gaussian(*sigma, grid.dim())?,
                grid,
                self.tolerance,
            )?,
        };
        Ok(k.scaled(self.strength))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    Constant {
        value: f64,
    },
    /// `background + amplitude cos^2(pi r / (2 width))` for `r < width`.
    Bump {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
        background: f64,
    },
    /// `background + amplitude exp(-r^2 / (2 width^2))`, `r` the periodic distance.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        amplitude: f64,
        background: f64,
    },
    /// `background + amplitude prod_axes cos(pi mode x / L)`.
    Cosine {
        mode: u32,
        amplitude: f64,
        background: f64,
    },
    /// `background + amplitude U(-1, 1)` per cell, seeded.
    Random {
        amplitude: f64,
        background: f64,
    },
    File {
        path: PathBuf,
    },
}

impl InitSpec {
    pub fn build(&self, grid: &Grid, seed: u64) -> Result<Field> {
        let l = grid.half_length();
        let periodic_r = |x: &[f64], c: &[f64]| -> f64 {
            x.iter()
                .zip(c)
                .map(|(xi, ci)| {
                    let d = (xi - ci).rem_euclid(2.0 * l);
                    d.min(2.0 * l - d).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        };
        let check_center = |c: &[f64]| {
            if c.len() != grid.dim() {
                Err(Error::Validation(format!(
                    "init.center needs {} coordinates",
                    grid.dim()
                )))
            } else {
                Ok(())
            }
        };
        match self {
            InitSpec::Constant { value } => Ok(Field::constant(*grid, *value)),
            InitSpec::Bump {
                center,
                width,
                amplitude,
                background,
            } => {
                check_center(center)?;
                Field::from_fn(*grid, |x| {
                    let r = periodic_r(x, center);
                    let bump = if r < *width {
                        (std::f64::consts::FRAC_PI_2 * r / width).cos().powi(2)
                    } else {
                        0.0
                    };
                    background + amplitude * bump
                })
            }
            InitSpec::Gaussian {
                center,
                width,
                amplitude,
                background,
            } => {
                check_center(center)?;
                Field::from_fn(*grid, |x| {
                    let r = periodic_r(x, center);
                    background + amplitude * (-0.5 * (r / width).powi(2)).exp()
                })
            }
            InitSpec::Cosine {
                mode,
                amplitude,
                background,
            } => {
                let k = std::f64::consts::PI * *mode as f64 / l;
                Field::from_fn(*grid, |x| {
                    background + amplitude * x.iter().map(|xi| (k * xi).cos()).product::<f64>()
                })
            }
            InitSpec::Random {
                amplitude,
                background,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values = (0..grid.len())
                    .map(|_| background + amplitude * rng.random_range(-1.0..1.0))
                    .collect();
                Field::new(*grid, values)
            }
            InitSpec::File { path } => {
                let f = io::read_field(path)?;
                if f.grid() != grid {
                    return Err(Error::Validation(format!(
                        "{} is not on the configured grid",
                        path.display()
                    )));
                }
                Ok(f)
            }
        }
    }
}

/// A fully resolved configuration, with every value the run depends on.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub grid: Grid,
    pub model: ModelFunctions,
    pub system: SystemKind,
    pub chem: Option<ChemicalSpec>,
    pub kernel: Option<KernelSpec>,
    pub init: InitSpec,
    pub run: RunConfig,
    pub seed: u64,
    /// `study.xi`, strictly decreasing.
    pub study_xi: Vec<f64>,
    /// `kernel.m`, strictly increasing.
    pub kernel_m: Vec<usize>,
    /// Accumulation point of the fitted diffusivities.
    pub d_star: f64,
    /// Tikhonov weight; `None` uses the default scaling.
    pub lambda: Option<f64>,
    echo: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        if let InitSpec::File { path: p } = &mut cfg.init {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Parse(format!("{e}")))?;
        let mut keys = Keys::default();
        flatten("", &table, &mut keys.values);

        let grid = Grid::new(
            keys.usize("grid.dim", Some(1))?,
            keys.f64("grid.L", Some(1.0))?,
            keys.usize("grid.n", Some(64))?,
        )?;

        let beta = match keys.string("model.beta", Some("power"))?.as_str() {
            "linear" => Beta::Linear,
            "power" => Beta::Power {
                gamma: keys.f64("model.gamma", Some(2.0))?,
            },
            other => {
                return Err(Error::Validation(format!(
                    "model.beta must be linear or power, got {other}"
                )))
            }
        };
        let mobility = match keys.string("model.g", Some("volume_filling"))?.as_str() {
            "volume_filling" => Mobility::VolumeFilling,
            "linear" => Mobility::Linear,
            other => {
                return Err(Error::Validation(format!(
                    "model.g must be volume_filling or linear, got {other}"
                )))
            }
        };
        let model = ModelFunctions::new(beta, mobility, keys.f64("model.eta", Some(0.0))?)?;

        let chem = if keys.has("chem.d") || keys.has("chem.a") {
            Some(ChemicalSpec::new(
                keys.f64_list("chem.d")?,
                keys.f64_list("chem.a")?,
                keys.f64("chem.xi", Some(0.0))?,
            )?)
        } else {
            None
        };

        let kernel = if keys.has_prefix("kernel.") {
            let kind = match keys.string("kernel.type", Some("adhesion"))?.as_str() {
                "greens" => KernelKind::Greens {
                    d: keys.f64("kernel.d", Some(1.0))?,
                },
                "adhesion" => KernelKind::Adhesion {
                    omega: match keys.string("kernel.omega", Some("constant"))?.as_str() {
                        "constant" => OmegaShape::Constant,
                        "linear" => OmegaShape::Linear,
                        other => {
                            return Err(Error::Validation(format!(
                                "kernel.omega must be constant or linear, got {other}"
                            )))
                        }
                    },
                },
                "gaussian" => KernelKind::Gaussian {
                    sigma: keys.f64("kernel.sigma", Some(0.2))?,
                },
                other => {
                    return Err(Error::Validation(format!(
                        "kernel.type must be greens, adhesion or gaussian, got {other}"
                    )))
                }
            };
            Some(KernelSpec {
                kind,
                strength: keys.f64("kernel.strength", Some(1.0))?,
                tolerance: keys.f64("kernel.tolerance", Some(1e-12))?,
            })
        } else {
            None
        };
        let kernel_m = if keys.has("kernel.m") {
            keys.usize_list("kernel.m")?
        } else {
            Vec::new()
        };
        if kernel_m.windows(2).any(|w| w[1] <= w[0]) || kernel_m.contains(&0) {
            return Err(Error::Validation(
                "kernel.m must be strictly increasing positive integers".into(),
            ));
        }
        let d_star = keys.f64("kernel.d_star", Some(0.05))?;
        let lambda = if keys.has("kernel.lambda") {
            Some(keys.f64("kernel.lambda", None)?)
        } else {
            None
        };

        let system = match keys.string("model.system", None).ok() {
            Some(s) => match s.as_str() {
                "nonlocal" => SystemKind::Nonlocal,
                "chemotaxis" => SystemKind::Chemotaxis,
                other => {
                    return Err(Error::Validation(format!(
                        "model.system must be nonlocal or chemotaxis, got {other}"
                    )))
                }
            },
            None if chem.is_some() => SystemKind::Chemotaxis,
            None => SystemKind::Nonlocal,
        };
        keys.echo(
            "model.system",
            format!("{:?}", format!("{system:?}").to_lowercase()),
        );

        let init = match keys.string("init.type", Some("bump"))?.as_str() {
            "constant" => InitSpec::Constant {
                value: keys.f64("init.value", Some(0.5))?,
            },
            kind @ ("bump" | "gaussian") => {
                let center = if keys.has("init.center") {
                    keys.f64_list("init.center")?
                } else {
                    vec![0.0; grid.dim()]
                };
                keys.echo("init.center", format!("{center:?}"));
                let width = keys.f64("init.width", Some(0.5 * grid.half_length()))?;
                let amplitude = keys.f64("init.amplitude", Some(0.8))?;
                let background = keys.f64("init.background", Some(0.1))?;
                if kind == "bump" {
                    InitSpec::Bump {
                        center,
                        width,
                        amplitude,
                        background,
                    }
                } else {
                    InitSpec::Gaussian {
                        center,
                        width,
                        amplitude,
                        background,
                    }
                }
            }
            "cosine" => InitSpec::Cosine {
                mode: keys.usize("init.mode", Some(1))? as u32,
                amplitude: keys.f64("init.amplitude", Some(0.3))?,
                background: keys.f64("init.background", Some(0.5))?,
            },
            "random" => InitSpec::Random {
                amplitude: keys.f64("init.amplitude", Some(0.1))?,
                background: keys.f64("init.background", Some(0.5))?,
            },
            "file" => InitSpec::File {
                path: PathBuf::from(keys.string("init.path", None)?),
            },
            other => return Err(Error::Validation(format!("unknown init.type {other}"))),
        };

        let t_end = keys.f64("run.t_end", Some(0.1))?;
        let dt = match keys.values.remove("run.dt") {
            None => None,
            Some(Value::String(s)) if s == "auto" => None,
            Some(v) => Some(as_f64("run.dt", &v)?),
        };
        keys.echo(
            "run.dt",
            dt.map_or("\"auto\"".to_string(), |d| format!("{d:e}")),
        );
        let mut run = RunConfig::new(
            grid,
            t_end,
            keys.f64("run.snapshot_every", Some(t_end / 10.0))?,
        );
        run.dt = dt;
        run.cfl_safety = keys.f64("run.cfl_safety", Some(0.45))?;
        run.validate()?;

        let seed = keys.usize("seed", Some(0))? as u64;
        let study_xi = if keys.has("study.xi") {
            keys.f64_list("study.xi")?
        } else {
            Vec::new()
        };
        if study_xi.windows(2).any(|w| w[1] >= w[0]) || study_xi.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::Validation(
                "study.xi must be strictly decreasing positive reals".into(),
            ));
        }

        if let Some(k) = keys.values.keys().next() {
            return Err(Error::Validation(format!("unknown configuration key {k}")));
        }
        Ok(ExperimentConfig {
            grid,
            model,
            system,
            chem,
            kernel,
            init,
            run,
            seed,
            study_xi,
            kernel_m,
            d_star,
            lambda,
            echo: keys.echo,
        })
    }

    pub fn initial_density(&self) -> Result<Field> {
        self.init.build(&self.grid, self.seed)
    }

    pub fn chemicals(&self) -> Result<&ChemicalSpec> {
        self.chem
            .as_ref()
            .ok_or_else(|| Error::Validation("configuration has no chem.d / chem.a".into()))
    }

    pub fn kernel_spec(&self) -> Result<&KernelSpec> {
        self.kernel
            .as_ref()
            .ok_or_else(|| Error::Validation("configuration has no kernel.* section".into()))
    }

    /// The drift selected by `model.system`.
    pub fn interaction(&self) -> Result<Interaction> {
        match self.system {
            SystemKind::Nonlocal => Ok(Interaction::Nonlocal(
                self.kernel_spec()?.build(&self.grid)?,
            )),
            SystemKind::Chemotaxis => Ok(Interaction::Chemotaxis(self.chemicals()?.clone())),
        }
    }

    /// Every resolved key, defaults included, as sorted `key = value` lines.
    pub fn echo(&self) -> Vec<String> {
        self.echo
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect()
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Validation(format!("{key} must be a number"))),
    }
}

/// Remaining raw values plus the echo of everything consumed.
#[derive(Default)]
struct Keys {
    values: BTreeMap<String, Value>,
    echo: BTreeMap<String, String>,
}

impl Keys {
    fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn has_prefix(&self, prefix: &str) -> bool {
        self.values.keys().any(|k| k.starts_with(prefix))
    }

    fn echo(&mut self, key: &str, value: String) {
        self.echo.insert(key.to_string(), value);
    }

    fn take(&mut self, key: &str) -> Result<Value> {
        self.values
            .remove(key)
            .ok_or_else(|| Error::Validation(format!("missing configuration key {key}")))
    }

    fn f64(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        let x = match (self.values.remove(key), default) {
            (Some(v), _) => as_f64(key, &v)?,
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::Validation(format!(
                    "missing configuration key {key}"
                )))
            }
        };
        self.echo(key, format!("{x:e}"));
        Ok(x)
    }

    fn usize(&mut self, key: &str, default: Option<usize>) -> Result<usize> {
        let x = match (self.values.remove(key), default) {
            (Some(Value::Integer(i)), _) if i >= 0 => i as usize,
            (Some(_), _) => {
                return Err(Error::Validation(format!(
                    "{key} must be a non-negative integer"
                )))
            }
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::Validation(format!(
                    "missing configuration key {key}"
                )))
            }
        };
        self.echo(key, x.to_string());
        Ok(x)
    }

    fn string(&mut self, key: &str, default: Option<&str>) -> Result<String> {
        let s = match (self.values.remove(key), default) {
            (Some(Value::String(s)), _) => s,
            (Some(_), _) => return Err(Error::Validation(format!("{key} must be a string"))),
            (None, Some(d)) => d.to_string(),
            (None, None) => {
                return Err(Error::Validation(format!(
                    "missing configuration key {key}"
                )))
            }
        };
        self.echo(key, format!("{s:?}"));
        Ok(s)
    }

    fn f64_list(&mut self, key: &str) -> Result<Vec<f64>> {
        let list = match self.take(key)? {
            Value::Array(a) => a
                .iter()
                .map(|v| as_f64(key, v))
                .collect::<Result<Vec<_>>>()?,
            v => vec![as_f64(key, &v)?],
        };
        self.echo(key, format!("{list:?}"));
        Ok(list)
    }

    fn usize_list(&mut self, key: &str) -> Result<Vec<usize>> {
        let list = match self.take(key)? {
            Value::Array(a) => a
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i > 0 => Ok(*i as usize),
                    _ => Err(Error::Validation(format!(
                        "{key} must hold positive integers"
                    ))),
                })
                .collect::<Result<Vec<_>>>()?,
            _ => return Err(Error::Validation(format!("{key} must be a list"))),
        };
        self.echo(key, format!("{list:?}"));
        Ok(list)
    }
}

use crate::domain::Grid;
use crate::error::{Error, Result};
use crate::kernel::PeriodizedKernel;

/// Nonlinear diffusion `beta`, strictly increasing with `beta(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta {
    Linear,
    /// Porous-medium `u^gamma`, `gamma >= 1`, extended oddly to `u < 0`.
    Power {
        gamma: f64,
    },
}

impl Beta {
    pub fn value(self, s: f64) -> f64 {
        match self {
            Beta::Linear => s,
            Beta::Power { gamma } => s.signum() * s.abs().powf(gamma),
        }
    }

    pub fn derivative(self, s: f64) -> f64 {
        match self {
            Beta::Linear => 1.0,
            Beta::Power { gamma } => gamma * s.abs().powf(gamma - 1.0),
        }
    }

    /// `Phi(s) = int_0^s beta`.
    pub fn primitive(self, s: f64) -> f64 {
        match self {
            Beta::Linear => 0.5 * s * s,
            Beta::Power { gamma } => s.abs().powf(gamma + 1.0) / (gamma + 1.0),
        }
    }
}

/// Mobility `g`, written as `g(u) = m_inc(u) m_dec(u)` with `m_inc`
/// non-decreasing and `m_dec` non-increasing so that faces can upwind each
/// factor separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mobility {
    /// `g(u) = u (1 - u)` on `[0, 1]`, zero outside.
    VolumeFilling,
    /// `g(u) = max(u, 0)`, no saturation.
    Linear,
}

impl Mobility {
    pub fn increasing_part(self, s: f64) -> f64 {
        match self {
            Mobility::VolumeFilling => s.clamp(0.0, 1.0),
            Mobility::Linear => s.max(0.0),
        }
    }

    pub fn decreasing_part(self, s: f64) -> f64 {
        match self {
            Mobility::VolumeFilling => (1.0 - s).clamp(0.0, 1.0),
            Mobility::Linear => 1.0,
        }
    }

    pub fn value(self, s: f64) -> f64 {
        self.increasing_part(s) * self.decreasing_part(s)
    }

    /// Lipschitz constant `L_g` with `|g(s)| <= L_g |s|`.
    pub fn lipschitz(self) -> f64 {
        1.0
    }

    pub fn saturates(self) -> bool {
        matches!(self, Mobility::VolumeFilling)
    }
}

/// `beta`, `g` and the regularisation `eta` giving `beta_eta(s) = eta s + beta(s)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelFunctions {
    pub beta: Beta,
    pub mobility: Mobility,
    pub eta: f64,
}

impl ModelFunctions {
    pub fn new(beta: Beta, mobility: Mobility, eta: f64) -> Result<Self> {
        let m = ModelFunctions {
            beta,
            mobility,
            eta,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn porous_medium(gamma: f64) -> Result<Self> {
        Self::new(Beta::Power { gamma }, Mobility::VolumeFilling, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if let Beta::Power { gamma } = self.beta {
            if !(gamma >= 1.0) || !gamma.is_finite() {
                return Err(Error::Validation(format!(
                    "porous-medium exponent must satisfy gamma >= 1, got {gamma}"
                )));
            }
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::Validation(format!(
                "eta must be >= 0, got {}",
                self.eta
            )));
        }
        if self.diffusion(0.0) != 0.0 {
            return Err(Error::Validation("beta(0) must vanish".into()));
        }
        for i in 1..=1000 {
            let s = i as f64 / 1000.0;
            if !(self.diffusion_derivative(s) > 0.0) {
                return Err(Error::Validation(format!(
                    "beta is not strictly increasing at s = {s}"
                )));
            }
        }
        Ok(())
    }

    /// `beta_eta(s)`.
    pub fn diffusion(&self, s: f64) -> f64 {
        self.eta * s + self.beta.value(s)
    }

    pub fn diffusion_derivative(&self, s: f64) -> f64 {
        self.eta + self.beta.derivative(s)
    }

    /// `max_{[0,1]} beta_eta'`, sampled at 1001 points.
    pub fn max_diffusion_derivative(&self) -> f64 {
        (0..=1000)
            .map(|i| self.diffusion_derivative(i as f64 / 1000.0))
            .fold(0.0, f64::max)
    }

    /// `int_0^s beta_eta`.
    pub fn phi(&self, s: f64) -> f64 {
        0.5 * self.eta * s * s + self.beta.primitive(s)
    }
}

/// Chemicals `v_j` with diffusivities `d_j`, sensitivities `a_j` (positive
/// attracts) and relaxation time `xi`; `xi = 0` is the parabolic-elliptic limit.
#[derive(Clone, Debug, PartialEq)]
pub struct ChemicalSpec {
    pub diffusivities: Vec<f64>,
    pub sensitivities: Vec<f64>,
    pub xi: f64,
}

impl ChemicalSpec {
    pub fn new(diffusivities: Vec<f64>, sensitivities: Vec<f64>, xi: f64) -> Result<Self> {
        let c = ChemicalSpec {
            diffusivities,
            sensitivities,
            xi,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.diffusivities.is_empty() || self.diffusivities.len() != self.sensitivities.len() {
            return Err(Error::Validation(format!(
                "{} diffusivities for {} sensitivities",
                self.diffusivities.len(),
                self.sensitivities.len()
            )));
        }
        if let Some(d) = self.diffusivities.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::Validation(format!(
                "diffusivity must be positive, got {d}"
            )));
        }
        if !(self.xi == 0.0 || (self.xi > 0.0 && self.xi <= 1.0)) {
            return Err(Error::Validation(format!(
                "xi must be 0 or in (0, 1], got {}",
                self.xi
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.diffusivities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diffusivities.is_empty()
    }

    pub fn is_parabolic_elliptic(&self) -> bool {
        self.xi == 0.0
    }
}

/// What drives the advection of `u`.
#[derive(Clone, Debug)]
pub enum Interaction {
    /// `grad (W * u)`.
    Nonlocal(PeriodizedKernel),
    /// `grad sum_j a_j v_j`.
    Chemotaxis(ChemicalSpec),
}

impl Interaction {
    pub fn system_name(&self) -> &'static str {
        match self {
            Interaction::Nonlocal(_) => "nonlocal",
            Interaction::Chemotaxis(c) if c.is_parabolic_elliptic() => "parabolic-elliptic",
            Interaction::Chemotaxis(_) => "parabolic-parabolic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub t_end: f64,
    /// Fixed step, or `None` for the CFL step.
    pub dt: Option<f64>,
    pub snapshot_every: f64,
    pub cfl_safety: f64,
}

impl RunConfig {
    pub fn new(grid: Grid, t_end: f64, snapshot_every: f64) -> Self {
        RunConfig {
            grid,
            t_end,
            dt: None,
            snapshot_every,
            cfl_safety: 0.45,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Validation(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt <= self.t_end) {
                return Err(Error::Validation(format!(
                    "dt must lie in (0, t_end], got {dt}"
                )));
            }
        }
        if !(self.snapshot_every > 0.0 && self.snapshot_every <= self.t_end) {
            return Err(Error::Validation(format!(
                "snapshot_every must lie in (0, t_end], got {}",
                self.snapshot_every
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety < 1.0) {
            return Err(Error::Validation(format!(
                "cfl_safety must lie in (0, 1), got {}",
                self.cfl_safety
            )));
        }
        Ok(())
    }

    /// `0, s, 2s, ...` below `t_end`, then `t_end`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut times = Vec::new();
        let mut k = 0usize;
        loop {
            let t = k as f64 * self.snapshot_every;
            if t >= self.t_end * (1.0 - 1e-12) {
                break;
            }
            times.push(t);
            k += 1;
        }
        times.push(self.t_end);
        times
    }
}

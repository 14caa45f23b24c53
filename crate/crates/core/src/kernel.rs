//! Radial whole-space kernels and their periodisation onto `[-L, L)^N`.

use crate::domain::{gradient, Field, Grid, Layout};
use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::specfun::{bessel_k, BesselOrder};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Bound on `|K(r)| + |K'(r)|` used to truncate lattice sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// `K(r) = 0` for `r >= radius`.
    CompactSupport { radius: f64 },
    /// `C (1 + r)^{-alpha}` for all `r`, `alpha > N`.
    Algebraic { c: f64, alpha: f64 },
    /// `C e^{-rate r}` for `r >= from`.
    Exponential { c: f64, rate: f64, from: f64 },
}

const SPOT_RADII: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];

/// Radial function `K(|x|)` on `R^N` with its radial derivative.
#[derive(Clone)]
pub struct RadialKernel {
    dim: usize,
    profile: Profile,
    derivative: Profile,
    decay: Decay,
    singular_at_origin: bool,
    label: String,
}

impl fmt::Debug for RadialKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialKernel")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("decay", &self.decay)
            .finish()
    }
}

impl RadialKernel {
    /// Builds a kernel and spot-checks the decay bound at `r = 0.5, 1, 2, 5, 10`.
    pub fn new(
        dim: usize,
        profile: Profile,
        derivative: Profile,
        decay: Decay,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Validation(format!(
                "kernel dimension must be 1..=3, got {dim}"
            )));
        }
        match decay {
            Decay::Algebraic { alpha, c } if !(alpha > dim as f64) || !(c > 0.0) => {
                return Err(Error::Validation(format!(
                    "decay exponent alpha = {alpha} must exceed N = {dim} (and C > 0)"
                )))
            }
            Decay::Exponential { c, rate, .. } if !(c > 0.0 && rate > 0.0) => {
                return Err(Error::Validation(
                    "exponential decay needs C > 0 and rate > 0".into(),
                ))
            }
            Decay::CompactSupport { radius } if !(radius > 0.0) => {
                return Err(Error::Validation("support radius must be positive".into()))
            }
            _ => {}
        }
        let k = RadialKernel {
            dim,
            profile,
            derivative,
            decay,
            singular_at_origin: false,
            label: label.into(),
        };
        k.check_decay()?;
        Ok(k)
    }

    fn check_decay(&self) -> Result<()> {
        let violated = |r: f64, bound: f64| {
            let lhs = self.value(r).abs() + self.radial_derivative(r).abs();
            if lhs > bound * (1.0 + 1e-9) + 1e-300 {
                Err(Error::Validation(format!(
                    "kernel `{}` violates its decay bound at r = {r}: {lhs:e} > {bound:e}",
                    self.label
                )))
            } else {
                Ok(())
            }
        };
        match self.decay {
            Decay::Algebraic { c, alpha } => {
                for r in SPOT_RADII {
                    violated(r, c * (1.0 + r).powf(-alpha))?;
                }
            }
            Decay::Exponential { c, rate, from } => {
                for r in SPOT_RADII.into_iter().filter(|&r| r >= from) {
                    violated(r, c * (-rate * r).exp())?;
                }
            }
            Decay::CompactSupport { radius } => {
                for r in [radius, 1.01 * radius, 1.5 * radius, 2.0 * radius] {
                    violated(r, 0.0)?;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.profile)(r)
    }

    pub fn radial_derivative(&self, r: f64) -> f64 {
        (self.derivative)(r)
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Multiplies profile and derivative by `c`.
    pub fn scaled(&self, c: f64) -> RadialKernel {
        let (p, d) = (self.profile.clone(), self.derivative.clone());
        let decay = match self.decay {
            Decay::Algebraic { c: k, alpha } => Decay::Algebraic {
                c: k * c.abs().max(f64::MIN_POSITIVE),
                alpha,
            },
            Decay::Exponential { c: k, rate, from } => Decay::Exponential {
                c: k * c.abs().max(f64::MIN_POSITIVE),
                rate,
                from,
            },
            other => other,
        };
        RadialKernel {
            dim: self.dim,
            profile: Arc::new(move |r| c * p(r)),
            derivative: Arc::new(move |r| c * d(r)),
            decay,
            singular_at_origin: self.singular_at_origin,
            label: format!("{c}*{}", self.label),
        }
    }

    /// Gaussian `exp(-r^2 / (2 sigma^2))`.
    pub fn gaussian(sigma: f64, dim: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Domain(format!(
                "Gaussian width must be positive, got {sigma}"
            )));
        }
        let s2 = sigma * sigma;
        // log of (1 + r/s2) exp(-r^2/(2 s2) + r) is concave; ternary search for the max.
        let log_env = |r: f64| (1.0 + r / s2).ln() - r * r / (2.0 * s2) + r;
        let (mut lo, mut hi) = (0.0f64, 10.0 * (1.0 + s2));
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if log_env(m1) < log_env(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let c = log_env(0.5 * (lo + hi)).exp() * (1.0 + 1e-6);
        RadialKernel::new(
            dim,
            Arc::new(move |r| (-r * r / (2.0 * s2)).exp()),
            Arc::new(move |r| -r / s2 * (-r * r / (2.0 * s2)).exp()),
            Decay::Exponential {
                c,
                rate: 1.0,
                from: 0.0,
            },
            format!("gaussian(sigma={sigma})"),
        )
    }
}

/// Whole-space Green function of `-d Laplace + 1` in dimension `dim`:
/// `k(x) = (2 pi)^{-N/2} d^{-N/4-1/2} |x|^{1-N/2} K_{N/2-1}(|x| / sqrt(d))`.
pub fn greens_free_space(d: f64, dim: usize) -> Result<RadialKernel> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!(
            "diffusivity must be positive, got {d}"
        )));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::Validation(format!(
            "Green functions exist here for N = 1..=3, got {dim}"
        )));
    }
    let sd = d.sqrt();
    let (profile, derivative): (Profile, Profile) = match dim {
        1 => (
            Arc::new(move |r: f64| (-r.abs() / sd).exp() / (2.0 * sd)),
            Arc::new(move |r: f64| -(-r.abs() / sd).exp() / (2.0 * d)),
        ),
        2 => {
            let c = 1.0 / (2.0 * PI * d);
            (
                Arc::new(move |r: f64| {
                    if r > 0.0 {
                        c * bessel_k(BesselOrder::ZERO, r / sd).expect("positive argument")
                    } else {
                        f64::INFINITY
                    }
                }),
                Arc::new(move |r: f64| {
                    if r > 0.0 {
                        -c / sd * bessel_k(BesselOrder::ONE, r / sd).expect("positive argument")
                    } else {
                        f64::NEG_INFINITY
                    }
                }),
            )
        }
        _ => {
            let nu = BesselOrder::for_dimension(3);
            let c = (2.0 * PI).powf(-1.5) * d.powf(-1.25);
            (
                Arc::new(move |r: f64| {
                    if r > 0.0 {
                        c * r.powf(-0.5) * bessel_k(nu, r / sd).expect("positive argument")
                    } else {
                        f64::INFINITY
                    }
                }),
                Arc::new(move |r: f64| {
                    if r > 0.0 {
                        -(-r / sd).exp() / (4.0 * PI * d * r) * (1.0 / r + 1.0 / sd)
                    } else {
                        f64::NEG_INFINITY
                    }
                }),
            )
        }
    };
    // r^{1-N/2} K_nu(r / sqrt d) e^{r / sqrt d} is non-increasing, so the
    // bound evaluated at `from` holds beyond it.
    let from = 0.5;
    let c = (profile(from).abs() + derivative(from).abs()) * (from / sd).exp() * (1.0 + 1e-9);
    let mut k = RadialKernel::new(
        dim,
        profile,
        derivative,
        Decay::Exponential {
            c,
            rate: 1.0 / sd,
            from,
        },
        format!("green(d={d},N={dim})"),
    )?;
    k.singular_at_origin = dim >= 2;
    Ok(k)
}

/// Potential with radial derivative `omega` on `[0, 1]`, vanishing for `r >= 1`:
/// `W(r) = -int_r^1 omega(s) ds`.
pub fn adhesion_potential(
    omega: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    dim: usize,
    label: impl Into<String>,
) -> Result<RadialKernel> {
    let gl = GaussLegendre::new(16);
    let om = omega.clone();
    let profile: Profile = Arc::new(move |r: f64| {
        if r >= 1.0 {
            0.0
        } else {
            -gl.integrate(r.max(0.0), 1.0, 2, |s| om(s))
        }
    });
    let derivative: Profile =
        Arc::new(move |r: f64| if r >= 1.0 || r <= 0.0 { 0.0 } else { omega(r) });
    RadialKernel::new(
        dim,
        profile,
        derivative,
        Decay::CompactSupport { radius: 1.0 },
        label,
    )
}

/// Periodic kernel on the grid in offset layout together with its gradient.
#[derive(Clone, Debug)]
pub struct PeriodizedKernel {
    pub field: Field,
    /// Periodised analytic gradient, one field per axis.
    pub gradient: Vec<Field>,
    /// Lattice images `|l|_inf <= truncation_radius_cells` were summed.
    pub truncation_radius_cells: usize,
}

impl PeriodizedKernel {
    /// Wraps an offset-layout field whose analytic gradient is supplied.
    pub fn from_parts(
        field: Field,
        gradient: Vec<Field>,
        truncation_radius_cells: usize,
    ) -> Result<Self> {
        if gradient.len() != field.grid().dim() {
            return Err(Error::Shape("gradient needs one component per axis".into()));
        }
        for g in &gradient {
            field.check_same_grid(g)?;
        }
        let field = field.with_layout_tag(Layout::Offset);
        let gradient = gradient
            .into_iter()
            .map(|g| g.with_layout_tag(Layout::Offset))
            .collect();
        Ok(PeriodizedKernel {
            field,
            gradient,
            truncation_radius_cells,
        })
    }

    pub fn zero(grid: Grid) -> Self {
        let z = Field::zeros(grid).with_layout_tag(Layout::Offset);
        PeriodizedKernel {
            gradient: vec![z.clone(); grid.dim()],
            field: z,
            truncation_radius_cells: 0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.field.grid()
    }

    /// Centred-difference gradient of the sampled field, the operator the
    /// solvers apply.
    pub fn discrete_gradient(&self) -> Vec<Field> {
        gradient(&self.field)
    }

    pub fn scaled(&self, c: f64) -> PeriodizedKernel {
        PeriodizedKernel {
            field: self.field.scaled(c),
            gradient: self.gradient.iter().map(|g| g.scaled(c)).collect(),
            truncation_radius_cells: self.truncation_radius_cells,
        }
    }

    /// `sum_j c_j k_j`.
    pub fn linear_combination(
        coeffs: &[f64],
        kernels: &[PeriodizedKernel],
    ) -> Result<PeriodizedKernel> {
        if coeffs.len() != kernels.len() || kernels.is_empty() {
            return Err(Error::Shape(format!(
                "{} coefficients for {} kernels",
                coeffs.len(),
                kernels.len()
            )));
        }
        let mut acc = PeriodizedKernel::zero(*kernels[0].grid());
        for (c, k) in coeffs.iter().zip(kernels) {
            acc.field = acc.field.axpy(*c, &k.field)?;
            for (a, g) in acc.gradient.iter_mut().zip(&k.gradient) {
                *a = a.axpy(*c, g)?;
            }
            acc.truncation_radius_cells =
                acc.truncation_radius_cells.max(k.truncation_radius_cells);
        }
        Ok(acc)
    }

    pub fn sub(&self, other: &PeriodizedKernel) -> Result<PeriodizedKernel> {
        PeriodizedKernel::linear_combination(&[1.0, -1.0], &[self.clone(), other.clone()])
    }
}

/// Largest image cell count periodize will sum, per axis.
const MAX_IMAGE_RADIUS: usize = 4096;
const MAX_IMAGE_WORK: f64 = 2e9;

/// Lattice radius `R` such that the images with `|l|_inf > R` contribute
/// less than `tolerance` to `sum |K|`, uniformly on `Omega`.
pub fn truncation_radius(decay: Decay, grid: &Grid, tolerance: f64) -> Result<usize> {
    let l = grid.half_length();
    let dim = grid.dim() as i32;
    // images with |l|_inf = m sit at distance >= L (2m - 1); there are at
    // most 2N (2m + 1)^{N-1} of them.
    let shell = |m: usize| 2.0 * dim as f64 * ((2 * m + 1) as f64).powi(dim - 1);
    match decay {
        Decay::CompactSupport { radius } => {
            let r = ((radius + l) / (2.0 * l)).ceil() as usize;
            Ok(r.saturating_sub(1))
        }
        Decay::Exponential { c, rate, from } => {
            let term = |m: usize| shell(m) * c * (-rate * l * (2 * m - 1) as f64).exp();
            for r in 0..=MAX_IMAGE_RADIUS {
                // the bound only covers images at distance >= from
                if l * ((2 * r + 1) as f64) < from {
                    continue;
                }
                let mut tail = 0.0;
                for m in r + 1..r + 100_000 {
                    let t = term(m);
                    tail += t;
                    if t <= 1e-20 * tolerance {
                        break;
                    }
                }
                if tail < tolerance {
                    return Ok(r);
                }
            }
            Err(Error::ToleranceUnreachable {
                tolerance,
                reason: "exponential tail needs too many images".into(),
            })
        }
        Decay::Algebraic { c, alpha } => {
            if !(alpha > dim as f64) {
                return Err(Error::ToleranceUnreachable {
                    tolerance,
                    reason: format!("alpha = {alpha} <= N makes the lattice sum diverge"),
                });
            }
            let term = |m: usize| shell(m) * c * (1.0 + l * (2 * m - 1) as f64).powf(-alpha);
            // sum_{m > R} term(m) <= int_R^inf of the monotone envelope, bounded
            // through (2m+1) <= 3m and 1 + L(2m-1) >= L m.
            let envelope_tail = |from: f64| {
                2.0 * dim as f64
                    * 3f64.powi(dim - 1)
                    * c
                    * l.powf(-alpha)
                    * from.powf(dim as f64 - alpha)
                    / (alpha - dim as f64)
            };
            let mut r = 0usize;
            let mut partial = 0.0;
            let terms: Vec<f64> = (1..=MAX_IMAGE_RADIUS + 1).map(term).collect();
            let total_head: f64 = terms.iter().sum();
            loop {
                let tail = total_head - partial + envelope_tail((MAX_IMAGE_RADIUS + 1) as f64);
                if tail < tolerance {
                    let work = ((2 * r + 1) as f64).powi(dim) * grid.len() as f64;
                    if work > MAX_IMAGE_WORK {
                        break;
                    }
                    return Ok(r);
                }
                if r >= MAX_IMAGE_RADIUS {
                    break;
                }
                partial += terms[r];
                r += 1;
            }
            Err(Error::ToleranceUnreachable {
                tolerance,
                reason: format!("algebraic decay alpha = {alpha} needs more than {r} image cells"),
            })
        }
    }
}

/// `W(x) = sum_{l in Z^N} K(x - 2 L l)` sampled at lattice displacements, and
/// the same sum for `grad K`. For kernels singular at the origin the
/// `l = 0` term of the origin cell is replaced by its cell average, and the
/// gradient there is zero by symmetry.
pub fn periodize(k: &RadialKernel, grid: &Grid, tolerance: f64) -> Result<PeriodizedKernel> {
    if k.dim() != grid.dim() {
        return Err(Error::Shape(format!(
            "kernel dimension {} does not match grid dimension {}",
            k.dim(),
            grid.dim()
        )));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Validation(
            "periodisation tolerance must be positive".into(),
        ));
    }
    let radius = truncation_radius(k.decay(), grid, tolerance)?;
    periodize_with_radius(k, grid, radius)
}

/// Lattice sum over the images `|l|_inf <= radius`.
pub fn periodize_with_radius(
    k: &RadialKernel,
    grid: &Grid,
    radius: usize,
) -> Result<PeriodizedKernel> {
    if k.dim() != grid.dim() {
        return Err(Error::Shape("kernel and grid dimensions differ".into()));
    }
    let dim = grid.dim();
    let two_l = 2.0 * grid.half_length();
    let images: Vec<[f64; 3]> = image_offsets(dim, radius)
        .into_iter()
        .map(|l| {
            [
                two_l * l[0] as f64,
                two_l * l[1] as f64,
                two_l * l[2] as f64,
            ]
        })
        .collect();
    let mut values = vec![0.0; grid.len()];
    let mut grads = vec![vec![0.0; grid.len()]; dim];
    let mut x = [0.0; 3];
    for flat in 0..grid.len() {
        let idx = grid.unflatten(flat);
        for a in 0..dim {
            x[a] = grid.offset_coordinate(idx[a]);
        }
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for img in &images {
            let mut y = [0.0; 3];
            let mut r2 = 0.0;
            for a in 0..dim {
                y[a] = x[a] - img[a];
                r2 += y[a] * y[a];
            }
            let r = r2.sqrt();
            if r == 0.0 {
                if k.singular_at_origin {
                    v += origin_cell_average(k, grid);
                } else {
                    v += k.value(0.0);
                }
                continue;
            }
            v += k.value(r);
            let dr = k.radial_derivative(r);
            for a in 0..dim {
                g[a] += dr * y[a] / r;
            }
        }
        values[flat] = v;
        for a in 0..dim {
            grads[a][flat] = g[a];
        }
    }
    let field = Field::with_layout(*grid, Layout::Offset, values)?;
    let gradient = grads
        .into_iter()
        .map(|g| Field::with_layout(*grid, Layout::Offset, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(PeriodizedKernel {
        field,
        gradient,
        truncation_radius_cells: radius,
    })
}

fn image_offsets(dim: usize, radius: usize) -> Vec<[i64; 3]> {
    let r = radius as i64;
    let range = || -r..=r;
    let mut out = Vec::new();
    match dim {
        1 => range().for_each(|i| out.push([i, 0, 0])),
        2 => range().for_each(|i| range().for_each(|j| out.push([i, j, 0]))),
        _ => range().for_each(|i| range().for_each(|j| range().for_each(|k| out.push([i, j, k])))),
    }
    out
}

/// Mean of `K(|x|)` over the cube `[-h/2, h/2]^N`.
///
/// The cube is split into `2N` pyramids with apex at the origin; on the
/// pyramid over the face `x_1 = a` the map `(lambda, s) -> lambda (a, s)` has
/// Jacobian `a lambda^{N-1}`, and `lambda = mu^2` smooths the singularity.
pub fn origin_cell_average(k: &RadialKernel, grid: &Grid) -> f64 {
    let dim = grid.dim();
    let a = 0.5 * grid.spacing();
    let radial = GaussLegendre::new(24);
    let lateral = GaussLegendre::new(16);
    let mu_nodes: Vec<(f64, f64)> = radial.mapped(0.0, 1.0).collect();
    let s_nodes: Vec<(f64, f64)> = lateral.mapped(-a, a).collect();
    let ray = |p_norm: f64| -> f64 {
        mu_nodes
            .iter()
            .map(|&(mu, w)| {
                let lambda = mu * mu;
                w * k.value(lambda * p_norm) * lambda.powi(dim as i32 - 1) * 2.0 * mu
            })
            .sum::<f64>()
            * a
    };
    let integral = match dim {
        1 => 2.0 * ray(a),
        2 => {
            s_nodes
                .iter()
                .map(|&(s, w)| w * ray((a * a + s * s).sqrt()))
                .sum::<f64>()
                * 4.0
        }
        _ => {
            let mut total = 0.0;
            for &(s, ws) in &s_nodes {
                for &(t, wt) in &s_nodes {
                    total += ws * wt * ray((a * a + s * s + t * t).sqrt());
                }
            }
            total * 6.0
        }
    };
    integral / (2.0 * a).powi(dim as i32)
}

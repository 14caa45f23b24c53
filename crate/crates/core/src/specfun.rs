//! Modified Bessel function of the second kind, `K_nu(r)`, for the orders
//! needed by screened-Poisson Green functions in one to three dimensions
//! (`nu = N/2 - 1`).
//!
//! Half-integer orders use the closed form. Orders 0 and 1 use the ascending
//! series for `r <= 2` and Temme's continued fraction (Steed's algorithm) for
//! `r > 2`.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_CROSSOVER: f64 = 2.0;
const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;

/// Order of a Bessel function, stored as `p` with `nu = p / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BesselOrder {
    twice_nu: i32,
}

impl BesselOrder {
    pub const MINUS_HALF: BesselOrder = BesselOrder { twice_nu: -1 };
    pub const ZERO: BesselOrder = BesselOrder { twice_nu: 0 };
    pub const HALF: BesselOrder = BesselOrder { twice_nu: 1 };
    pub const ONE: BesselOrder = BesselOrder { twice_nu: 2 };

    pub fn from_twice(twice_nu: i32) -> Self {
        BesselOrder { twice_nu }
    }

    /// Exact conversion from a real; fails unless `nu` is a multiple of 1/2.
    pub fn from_f64(nu: f64) -> Result<Self> {
        let p = 2.0 * nu;
        if !p.is_finite() || p.fract() != 0.0 || p.abs() > i32::MAX as f64 {
            return Err(Error::UnsupportedOrder(nu));
        }
        Ok(BesselOrder { twice_nu: p as i32 })
    }

    /// Order `N/2 - 1` of the Green function in dimension `dim`.
    pub fn for_dimension(dim: usize) -> Self {
        BesselOrder {
            twice_nu: dim as i32 - 2,
        }
    }

    pub fn twice(self) -> i32 {
        self.twice_nu
    }

    pub fn value(self) -> f64 {
        self.twice_nu as f64 / 2.0
    }

    pub fn is_supported(self) -> bool {
        self.twice_nu.abs() <= 2
    }
}

/// `K_nu(r)` for `nu` in `{-1, -1/2, 0, 1/2, 1}` and `r > 0`.
pub fn bessel_k(nu: BesselOrder, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("bessel_k requires r > 0, got {r}")));
    }
    // K_{-nu} = K_nu
    match nu.twice_nu.abs() {
        0 => Ok(k0_k1(r).0),
        1 => Ok(k_half(r)),
        2 => Ok(k0_k1(r).1),
        _ => Err(Error::UnsupportedOrder(nu.value())),
    }
}

/// Large-argument envelope `sqrt(pi / (2r)) e^{-r}`, exact for `nu = 1/2`.
pub fn asymptotic_envelope(r: f64) -> f64 {
    (FRAC_PI_2 / r).sqrt() * (-r).exp()
}

fn k_half(r: f64) -> f64 {
    asymptotic_envelope(r)
}

/// Returns `(K_0(r), K_1(r))`.
fn k0_k1(r: f64) -> (f64, f64) {
    if r <= SERIES_CROSSOVER {
        (k0_series(r), k1_series(r))
    } else {
        k0_k1_continued_fraction(r)
    }
}

fn k0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    let mut term = 1.0; // q^k / (k!)^2
    let mut psi = -EULER_GAMMA; // psi(k + 1)
    let mut i0 = 0.0;
    let mut tail = 0.0;
    for k in 0..MAX_ITER {
        if k > 0 {
            term *= q / (k * k) as f64;
            psi += 1.0 / k as f64;
        }
        i0 += term;
        tail += psi * term;
        if term < EPS * i0 {
            break;
        }
    }
    -log_half * i0 + tail
}

fn k1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let log_half = (0.5 * x).ln();
    let mut term = 1.0; // q^k / (k! (k+1)!)
    let mut psi_k1 = -EULER_GAMMA; // psi(k + 1)
    let mut psi_k2 = 1.0 - EULER_GAMMA; // psi(k + 2)
    let mut sum_i1 = 0.0;
    let mut sum_psi = 0.0;
    for k in 0..MAX_ITER {
        if k > 0 {
            term *= q / (k * (k + 1)) as f64;
            psi_k1 += 1.0 / k as f64;
            psi_k2 += 1.0 / (k + 1) as f64;
        }
        sum_i1 += term;
        sum_psi += (psi_k1 + psi_k2) * term;
        if term < EPS * sum_i1 {
            break;
        }
    }
    let i1 = 0.5 * x * sum_i1;
    1.0 / x + log_half * i1 - 0.25 * x * sum_psi
}

/// Temme's method for `x >= 2` with fractional order `mu = 0`: Steed's
/// evaluation of the continued fraction CF2 together with the series for the
/// normalisation sum.
fn k0_k1_continued_fraction(x: f64) -> (f64, f64) {
    let mu = 0.0_f64;
    let a1 = 0.25 - mu * mu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        a -= 2.0 * (i - 1) as f64;
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k_mu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    (k_mu, k_mu1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn half_order_closed_form() {
        let v = bessel_k(BesselOrder::HALF, 1.0).unwrap();
        assert_relative_eq!(v, (PI / 2.0).sqrt() * (-1.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(v, 0.461_068_504_447_894_4, max_relative = 1e-12);
    }

    #[test]
    fn evenness_is_exact() {
        for &r in &[0.01, 0.5, 2.0, 7.5, 19.0] {
            assert_eq!(
                bessel_k(BesselOrder::MINUS_HALF, r).unwrap(),
                bessel_k(BesselOrder::HALF, r).unwrap()
            );
            assert_eq!(
                bessel_k(BesselOrder::from_twice(-2), r).unwrap(),
                bessel_k(BesselOrder::ONE, r).unwrap()
            );
        }
    }

    #[test]
    fn reference_values() {
        // Abramowitz & Stegun table 9.8
        assert_relative_eq!(k0_k1(1.0).0, 0.421_024_438_240_708_3, max_relative = 1e-13);
        assert_relative_eq!(k0_k1(1.0).1, 0.601_907_230_197_234_6, max_relative = 1e-13);
        assert_relative_eq!(k0_k1(5.0).0, 3.691_098_334_042_594e-3, max_relative = 1e-12);
        assert_relative_eq!(k0_k1(5.0).1, 4.044_613_445_452_164e-3, max_relative = 1e-12);
    }

    #[test]
    fn branches_agree_at_crossover() {
        let x = SERIES_CROSSOVER;
        let (k0c, k1c) = k0_k1_continued_fraction(x);
        assert_relative_eq!(k0_series(x), k0c, max_relative = 1e-13);
        assert_relative_eq!(k1_series(x), k1c, max_relative = 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            bessel_k(BesselOrder::ZERO, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            bessel_k(BesselOrder::ZERO, -1.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            bessel_k(BesselOrder::from_twice(3), 1.0),
            Err(Error::UnsupportedOrder(_))
        ));
        assert!(BesselOrder::from_f64(0.3).is_err());
        assert_eq!(
            BesselOrder::from_f64(-0.5).unwrap(),
            BesselOrder::MINUS_HALF
        );
    }

    #[test]
    fn asymptotic_ratio_at_thirty() {
        for nu in [BesselOrder::ZERO, BesselOrder::HALF, BesselOrder::ONE] {
            let ratio = bessel_k(nu, 30.0).unwrap() / asymptotic_envelope(30.0);
            assert!(
                (0.95..=1.05).contains(&ratio),
                "nu={} ratio={ratio}",
                nu.value()
            );
        }
    }

    #[test]
    fn monotone_decreasing() {
        for nu in [BesselOrder::ZERO, BesselOrder::HALF, BesselOrder::ONE] {
            let mut prev = f64::INFINITY;
            for i in 0..400 {
                let r = 0.01 * 1.02f64.powi(i);
                let v = bessel_k(nu, r).unwrap();
                assert!(v < prev);
                prev = v;
            }
        }
    }
}

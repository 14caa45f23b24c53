//! Library numerics against independent test-side oracles.

mod common;

use common::{adaptive_quad, bessel_k_quadrature, bump, direct_convolution};
use hapchem::domain::{periodic_convolve, Field, Grid};
use hapchem::greens::{elliptic_solve, greens_periodic_spectral};
use hapchem::kernel::{greens_free_space, periodize, RadialKernel};
use hapchem::pde::{drift_velocity_nonlocal, NonlocalDrift};
use hapchem::specfun::{bessel_k, BesselOrder};
use std::f64::consts::PI;

#[test]
fn quadrature_oracle_is_sound() {
    let v = adaptive_quad(&|x: f64| x.sin(), 0.0, PI, 1e-15);
    assert!((v - 2.0).abs() < 1e-14);
    // K_{1/2}(r) = sqrt(pi / (2 r)) e^{-r} in closed form.
    for r in [0.05, 1.0, 7.5] {
        let exact = (PI / (2.0 * r)).sqrt() * (-r).exp();
        assert!((bessel_k_quadrature(0.5, r) / exact - 1.0).abs() < 1e-13);
    }
}

#[test]
fn bessel_matches_quadrature_off_grid() {
    for twice in [0, 2] {
        for r in [0.013, 0.5, 1.999, 2.001, 3.7, 11.0, 19.5] {
            let q = bessel_k_quadrature(twice as f64 / 2.0, r);
            let k = bessel_k(BesselOrder::from_twice(twice), r).unwrap();
            assert!(
                (k / q - 1.0).abs() < 1e-11,
                "twice_nu {twice} r {r}: {k} vs {q}"
            );
        }
    }
}

#[test]
fn convolution_matches_direct_sum() {
    for (dim, n) in [(1, 16), (2, 8), (3, 8)] {
        let g = Grid::new(dim, 0.7, n).unwrap();
        let a = Field::offset_from_fn(g, |x| 1.0 / (1.0 + x.iter().map(|v| v * v).sum::<f64>()))
            .unwrap();
        let b = bump(g);
        let fast = periodic_convolve(&a, &b).unwrap();
        let slow = direct_convolution(&a, &b);
        for (x, y) in fast.values().iter().zip(&slow) {
            assert!((x - y).abs() <= 1e-13 * y.abs().max(1.0));
        }
    }
}

#[test]
fn green_lattice_sum_converges_to_spectral_with_first_order() {
    // The spectral Green function truncates the 1/|k|^2 tail of the lattice
    // sum's Fourier series; the mismatch at the kink decays like h.
    let mut errs = Vec::new();
    for n in [64, 128, 256, 512] {
        let g = Grid::new(1, 1.0, n).unwrap();
        let s = greens_periodic_spectral(1.0, &g).unwrap();
        let l = periodize(&greens_free_space(1.0, 1).unwrap(), &g, 1e-14).unwrap();
        errs.push(s.max_abs_diff(&l.field).unwrap());
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 1.8 && ratio < 2.2, "{errs:?}");
    }
}

#[test]
fn green_lattice_sum_agrees_away_from_the_origin() {
    let g = Grid::new(1, 10.0, 1024).unwrap();
    let s = greens_periodic_spectral(1.0, &g).unwrap();
    let l = periodize(&greens_free_space(1.0, 1).unwrap(), &g, 1e-14).unwrap();
    for i in 0..g.len() {
        if g.offset_coordinate(i).abs() > 1.0 {
            assert!((s.values()[i] - l.field.values()[i]).abs() < 1e-4);
        }
    }
}

#[test]
fn nonlocal_drift_matches_direct_convolution_of_gradient() {
    let g = Grid::new(2, 1.0, 8).unwrap();
    let w = periodize(&RadialKernel::gaussian(0.3, 2).unwrap(), &g, 1e-14).unwrap();
    let u = bump(g);
    let v = drift_velocity_nonlocal(&u, &w).unwrap();
    for (axis, comp) in w.discrete_gradient().iter().enumerate() {
        let direct = direct_convolution(comp, &u);
        for (x, y) in v[axis].values().iter().zip(&direct) {
            assert!((x - y).abs() < 1e-13);
        }
    }
    let cached = NonlocalDrift::new(&w).velocity(&u).unwrap();
    assert!(cached[0].max_abs_diff(&v[0]).unwrap() < 1e-14);
}

#[test]
fn single_mode_velocity_through_elliptic_symbol() {
    // grad_h of cos(pi x / L) / (1 + d pi^2 / L^2), with the centred-difference
    // factor sin(kh)/h in place of k.
    let (l, d) = (2.0, 0.6);
    let g = Grid::new(1, l, 128).unwrap();
    let k = PI / l;
    let h = g.spacing();
    let u = Field::from_fn(g, |x| (k * x[0]).cos()).unwrap();
    let v = elliptic_solve(d, &u).unwrap();
    let expect = Field::from_fn(g, |x| (k * x[0]).cos() / (1.0 + d * k * k)).unwrap();
    assert!(v.max_abs_diff(&expect).unwrap() < 1e-14);
    let w = hapchem::greens::greens_kernel(d, &g).unwrap();
    let vel = drift_velocity_nonlocal(&u, &w).unwrap();
    let expect = Field::from_fn(g, |x| {
        -(k * h).sin() / h * (k * x[0]).sin() / (1.0 + d * k * k)
    })
    .unwrap();
    assert!(vel[0].max_abs_diff(&expect).unwrap() < 1e-13);
    // The continuous velocity is reached to second order in h.
    let continuous = Field::from_fn(g, |x| -k * (k * x[0]).sin() / (1.0 + d * k * k)).unwrap();
    assert!(vel[0].max_abs_diff(&continuous).unwrap() < k.powi(3) * h * h / 6.0 + 1e-14);
}

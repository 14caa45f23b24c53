//! Test-only oracles, written independently of the library's numerics.
#![allow(dead_code, clippy::excessive_precision)]

use hapchem::domain::{Field, Grid};
use std::path::PathBuf;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Gauss-Kronrod 7/15 on `[a, b]`: (Kronrod estimate, |Kronrod - Gauss|).
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature to absolute tolerance `tol`.
pub fn adaptive_quad(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol.max(50.0 * f64::EPSILON * v.abs()) || depth > 24 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}

/// `K_nu(r) = int_0^inf exp(-r cosh t) cosh(nu t) dt`, truncated where the
/// integrand has fallen by `e^{-60}` relative to its value at `t = 0`.
pub fn bessel_k_quadrature(nu: f64, r: f64) -> f64 {
    let t_max = (1.0 + 60.0 / r).acosh() + 1.0;
    let f = |t: f64| (-r * t.cosh()).exp() * (nu * t).cosh();
    // Half-unit panels keep each adaptive call on a gently varying integrand.
    let scale = f(0.0);
    let mut acc = 0.0;
    let mut a = 0.0;
    while a < t_max {
        let b = (a + 0.5).min(t_max);
        acc += adaptive_quad(&f, a, b, 1e-16 * scale);
        a = b;
    }
    acc
}

/// `c_i = h^N sum_j a_{i-j} b_j` by direct summation.
pub fn direct_convolution(a: &Field, b: &Field) -> Vec<f64> {
    let g = a.grid();
    let n = g.n();
    let dim = g.dim();
    (0..g.len())
        .map(|i| {
            let ii = g.unflatten(i);
            let mut s = 0.0;
            for j in 0..g.len() {
                let jj = g.unflatten(j);
                let mut k = [0usize; 3];
                for axis in 0..dim {
                    k[axis] = (ii[axis] + n - jj[axis]) % n;
                }
                s += a.values()[g.flatten(&k[..dim])] * b.values()[j];
            }
            s * g.cell_volume()
        })
        .collect()
}

/// Smooth bump in `[0.1, 0.9]` centred at the origin.
pub fn bump(grid: Grid) -> Field {
    Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        0.1 + 0.8 * (-8.0 * r2).exp()
    })
    .unwrap()
}

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// The shipped run configurations, sorted by name.
pub fn shipped_configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

use super::{spectral, Field, Layout};
use crate::error::Result;

/// Circular convolution `c_i = h^N sum_j a_{i-j} b_j`, the midpoint-rule
/// approximation of `int_Omega a(x - y) b(y) dy`, computed through the DFT.
///
/// When one argument is an offset-layout kernel the result takes the layout
/// of the other argument.
pub fn periodic_convolve(a: &Field, b: &Field) -> Result<Field> {
    a.check_same_grid(b)?;
    let grid = *a.grid();
    let layout = match (a.layout(), b.layout()) {
        (Layout::Offset, other) | (other, Layout::Offset) => other,
        _ => Layout::Cell,
    };
    let mut ha = spectral::forward(a);
    let hb = spectral::forward(b);
    let w = grid.cell_volume();
    for (x, y) in ha.iter_mut().zip(&hb) {
        *x *= *y * w;
    }
    Ok(spectral::inverse_real(&grid, layout, ha))
}

/// Second-order centred differences, one field per axis.
pub fn gradient(a: &Field) -> Vec<Field> {
    let g = *a.grid();
    let inv_2h = 0.5 / g.spacing();
    let v = a.values();
    (0..g.dim())
        .map(|axis| {
            let values = (0..g.len())
                .map(|i| (v[g.neighbor(i, axis, 1)] - v[g.neighbor(i, axis, -1)]) * inv_2h)
                .collect();
            Field::from_parts(g, a.layout(), values)
        })
        .collect()
}

pub fn norm_l1(a: &Field) -> f64 {
    a.values().iter().map(|v| v.abs()).sum::<f64>() * a.grid().cell_volume()
}

pub fn norm_l2(a: &Field) -> f64 {
    (a.values().iter().map(|v| v * v).sum::<f64>() * a.grid().cell_volume()).sqrt()
}

pub fn norm_linf(a: &Field) -> f64 {
    a.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `||a||_{L1} + sum_axes ||d_axis a||_{L1}` with the centred-difference gradient.
pub fn norm_w11(a: &Field) -> f64 {
    norm_l1(a) + gradient(a).iter().map(norm_l1).sum::<f64>()
}

/// Discrete `L2` inner product `sum a_i b_i h^N`.
pub fn inner_product(a: &Field, b: &Field) -> Result<f64> {
    a.check_same_grid(b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x * y)
        .sum::<f64>()
        * a.grid().cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn delta_convolution_is_a_shift() {
        let g = Grid::new(1, 1.0, 16).unwrap();
        let mut d = vec![0.0; 16];
        d[3] = 1.0 / g.spacing();
        let delta = Field::new(g, d).unwrap();
        let b = Field::from_fn(g, |x| (3.0 * x[0]).sin() + x[0]).unwrap();
        let c = periodic_convolve(&delta, &b).unwrap();
        assert!(c.max_abs_diff(&b.shifted(&[3])).unwrap() < 1e-13);
    }

    #[test]
    fn constants_convolve_to_volume() {
        let g = Grid::new(2, 1.5, 8).unwrap();
        let c = periodic_convolve(&Field::constant(g, 2.0), &Field::constant(g, 3.0)).unwrap();
        for &v in c.values() {
            assert_relative_eq!(v, 6.0 * 9.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn grid_mismatch_is_shape_error() {
        let a = Field::zeros(Grid::new(1, 1.0, 8).unwrap());
        let b = Field::zeros(Grid::new(1, 1.0, 16).unwrap());
        assert!(matches!(
            periodic_convolve(&a, &b),
            Err(crate::Error::Shape(_))
        ));
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = Grid::new(3, 1.0, 8).unwrap();
        for c in gradient(&Field::constant(g, 3.7)) {
            assert!(c.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn gradient_is_second_order() {
        let err = |n: usize| {
            let g = Grid::new(1, 1.0, n).unwrap();
            let f = Field::from_fn(g, |x| (PI * x[0]).sin()).unwrap();
            let exact = Field::from_fn(g, |x| PI * (PI * x[0]).cos()).unwrap();
            gradient(&f)[0].max_abs_diff(&exact).unwrap()
        };
        let order = (err(32) / err(64)).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn fourier_mode_is_eigenvector() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let h = g.spacing();
        for k in 1..4 {
            let xi = PI * k as f64 / g.half_length();
            let c = Field::from_fn(g, |x| (xi * x[0]).cos()).unwrap();
            let s = Field::from_fn(g, |x| (xi * x[0]).sin()).unwrap();
            // d/dx e^{i xi x} -> i sin(xi h)/h e^{i xi x}
            let lambda = (xi * h).sin() / h;
            let expected = s.scaled(-lambda);
            assert!(gradient(&c)[0].max_abs_diff(&expected).unwrap() < 1e-13);
        }
    }

    #[test]
    fn norms_of_constants() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let one = Field::constant(g, 1.0);
        assert_relative_eq!(norm_l1(&one), 2.0, max_relative = 1e-15);
        assert_relative_eq!(norm_l2(&one), 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(norm_w11(&one), 2.0, max_relative = 1e-15);
        let zero = Field::zeros(g);
        assert_eq!(norm_l1(&zero) + norm_l2(&zero) + norm_w11(&zero), 0.0);
    }

    #[test]
    fn sawtooth_l1() {
        let g = Grid::new(1, 1.0, 64).unwrap();
        let f = Field::from_fn(g, |x| x[0]).unwrap();
        assert!((norm_l1(&f) - 1.0).abs() <= g.spacing());
    }
}

//! N-dimensional discrete Fourier transforms on a [`Grid`] and diagonal
//! Fourier multipliers.

use super::{Field, Grid, Layout};
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place forward (unnormalised) or inverse (normalised by `1/n^N`) DFT.
pub fn fft_nd(grid: &Grid, data: &mut [Complex64], direction: FftDirection) {
    let n = grid.n();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction));
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..grid.dim() {
        let stride = grid.stride(axis);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(n) {
                fft.process_with_scratch(chunk, &mut scratch);
            }
            continue;
        }
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + k * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (k, v) in line.iter().enumerate() {
                    data[start + k * stride] = *v;
                }
            }
        }
    }
    if direction == FftDirection::Inverse {
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

pub fn forward(field: &Field) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = field
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_nd(field.grid(), &mut data, FftDirection::Forward);
    data
}

/// Inverse transform, keeping the real part.
pub fn inverse_real(grid: &Grid, layout: Layout, mut data: Vec<Complex64>) -> Field {
    fft_nd(grid, &mut data, FftDirection::Inverse);
    Field::from_parts(*grid, layout, data.into_iter().map(|c| c.re).collect())
}

/// `|xi_k|^2 = sum_axes (pi k_axis / L)^2` for every DFT index.
pub fn squared_frequencies(grid: &Grid) -> Vec<f64> {
    let per_axis: Vec<f64> = (0..grid.n()).map(|i| grid.frequency(i).powi(2)).collect();
    (0..grid.len())
        .map(|flat| {
            let idx = grid.unflatten(flat);
            (0..grid.dim()).map(|a| per_axis[idx[a]]).sum()
        })
        .collect()
}

/// Applies the radial Fourier multiplier `symbol(|xi|^2)` to `field`.
pub fn apply_symbol(field: &Field, symbol: impl Fn(f64) -> f64) -> Field {
    let xi2 = squared_frequencies(field.grid());
    let mut hat = forward(field);
    for (c, &k2) in hat.iter_mut().zip(&xi2) {
        *c *= symbol(k2);
    }
    inverse_real(field.grid(), field.layout(), hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_3d() {
        let g = Grid::new(3, 1.0, 8).unwrap();
        let f = Field::from_fn(g, |x| x[0] * x[1] - x[2].cos()).unwrap();
        let back = inverse_real(&g, Layout::Cell, forward(&f));
        assert!(back.max_abs_diff(&f).unwrap() < 1e-14);
    }

    #[test]
    fn zero_mode_is_sum() {
        let g = Grid::new(2, 1.0, 8).unwrap();
        let f = Field::from_fn(g, |x| 1.0 + x[0]).unwrap();
        let hat = forward(&f);
        assert!((hat[0].re - f.values().iter().sum::<f64>()).abs() < 1e-12);
    }
}

use crate::error::{Error, Result};

/// Uniform periodic lattice on `[-L, L)^N`.
///
/// Cell `i` along an axis has centre `-L + (i + 1/2) h`; indices wrap modulo
/// `n`. Multi-indices are flattened in row-major order, last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    half_length: f64,
    points_per_axis: usize,
}

impl Grid {
    pub fn new(dim: usize, half_length: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Validation(format!(
                "grid dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::Validation(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        if points_per_axis < 8 || !points_per_axis.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "points per axis must be even and at least 8, got {points_per_axis}"
            )));
        }
        Ok(Grid {
            dim,
            half_length,
            points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points_per_axis as f64
    }

    /// `h^N`, the quadrature weight of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// `|Omega| = (2L)^N`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat-index distance between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.points_per_axis.pow((self.dim - 1 - axis) as u32)
    }

    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut idx = [0usize; 3];
        for axis in (0..self.dim).rev() {
            idx[axis] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx[..self.dim]
            .iter()
            .fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    /// Flat index of the neighbour of `flat` shifted by `offset` cells along `axis`.
    pub fn neighbor(&self, flat: usize, axis: usize, offset: isize) -> usize {
        let n = self.points_per_axis as isize;
        let stride = self.stride(axis);
        let i = ((flat / stride) % self.points_per_axis) as isize;
        let j = (i + offset).rem_euclid(n) as usize;
        flat - (i as usize) * stride + j * stride
    }

    /// Signed lattice offset `i` or `i - n`, in `[-n/2, n/2)`.
    pub fn wrapped(&self, i: usize) -> isize {
        let n = self.points_per_axis;
        if i < n / 2 {
            i as isize
        } else {
            i as isize - n as isize
        }
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        -self.half_length + (i as f64 + 0.5) * self.spacing()
    }

    /// Displacement `wrapped(i) * h` addressed by index `i` of an offset-layout field.
    pub fn offset_coordinate(&self, i: usize) -> f64 {
        self.wrapped(i) as f64 * self.spacing()
    }

    /// Continuous angular frequency `pi k / L` of DFT index `i`.
    pub fn frequency(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.wrapped(i) as f64 / self.half_length
    }

    /// Same lattice with twice the resolution.
    pub fn refined(&self) -> Grid {
        Grid {
            points_per_axis: 2 * self.points_per_axis,
            ..*self
        }
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

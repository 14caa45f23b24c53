use super::grid::Grid;
use crate::error::{Error, Result};

/// How flat indices of a field map to points of space.
///
/// Densities and chemical concentrations live at cell centres. Convolution
/// kernels are stored by displacement so that index `i` holds the kernel at
/// `wrapped(i) * h`, which is what the circular convolution pairs with a
/// cell-centred density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Layout {
    #[default]
    Cell,
    Offset,
}

/// Real grid function with `n^N` finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    layout: Layout,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        Self::with_layout(grid, Layout::Cell, values)
    }

    pub fn with_layout(grid: Grid, layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values but grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite field value at index {i}"
            )));
        }
        Ok(Field {
            grid,
            layout,
            values,
        })
    }

    /// Internal constructor for values known to be finite and sized.
    pub(crate) fn from_parts(grid: Grid, layout: Layout, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field {
            grid,
            layout,
            values,
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Field::from_parts(grid, Layout::Cell, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Field::from_parts(grid, Layout::Cell, vec![c; grid.len()])
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::sample(grid, Layout::Cell, f)
    }

    /// Samples `f` at lattice displacements (offset layout).
    pub fn offset_from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::sample(grid, Layout::Offset, f)
    }

    fn sample(grid: Grid, layout: Layout, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut x = [0.0; 3];
        let values = (0..grid.len())
            .map(|flat| {
                let p = point_of(&grid, layout, flat, &mut x);
                f(p)
            })
            .collect();
        Self::with_layout(grid, layout, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_layout_tag(mut self, layout: Layout) -> Self {
        self.layout = layout;
        self
    }

    /// Coordinates of flat index `flat` under this field's layout.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut x = [0.0; 3];
        point_of(&self.grid, self.layout, flat, &mut x).to_vec()
    }

    /// `sum_i a_i h^N`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_parts(
            self.grid,
            self.layout,
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(Field::from_parts(self.grid, self.layout, values))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.axpy(1.0, other)
    }

    /// Cyclic shift by `shift[axis]` cells: `out[i + s] = self[i]`.
    pub fn shifted(&self, shift: &[isize]) -> Field {
        let g = self.grid;
        let n = g.n() as isize;
        let mut out = vec![0.0; g.len()];
        for (flat, &v) in self.values.iter().enumerate() {
            let idx = g.unflatten(flat);
            let mut target = [0usize; 3];
            for axis in 0..g.dim() {
                let s = shift.get(axis).copied().unwrap_or(0);
                target[axis] = (idx[axis] as isize + s).rem_euclid(n) as usize;
            }
            out[g.flatten(&target)] = v;
        }
        Field::from_parts(g, self.layout, out)
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Average of each `2^N` block of fine cells onto the half-resolution grid.
    pub fn restrict_to_coarse(&self) -> Result<Field> {
        let g = self.grid;
        if !g.n().is_multiple_of(4) {
            return Err(Error::Shape(format!(
                "cannot coarsen n = {} below 8",
                g.n()
            )));
        }
        let coarse = Grid::new(g.dim(), g.half_length(), g.n() / 2)?;
        let mut out = vec![0.0; coarse.len()];
        for (flat, &v) in self.values.iter().enumerate() {
            let idx = g.unflatten(flat);
            let c = [idx[0] / 2, idx[1] / 2, idx[2] / 2];
            out[coarse.flatten(&c)] += v;
        }
        let w = 0.5f64.powi(g.dim() as i32);
        out.iter_mut().for_each(|v| *v *= w);
        Ok(Field::from_parts(coarse, self.layout, out))
    }
}

fn point_of<'a>(grid: &Grid, layout: Layout, flat: usize, x: &'a mut [f64; 3]) -> &'a [f64] {
    let idx = grid.unflatten(flat);
    for axis in 0..grid.dim() {
        x[axis] = match layout {
            Layout::Cell => grid.cell_center(idx[axis]),
            Layout::Offset => grid.offset_coordinate(idx[axis]),
        };
    }
    &x[..grid.dim()]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        assert!(matches!(Field::new(g, vec![0.0; 7]), Err(Error::Shape(_))));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(g, v), Err(Error::Validation(_))));
    }

    #[test]
    fn shift_is_cyclic() {
        let g = Grid::new(1, 1.0, 8).unwrap();
        let f = Field::new(g, (0..8).map(|i| i as f64).collect()).unwrap();
        assert_eq!(f.shifted(&[1]).values()[0], 7.0);
        assert_eq!(f.shifted(&[3]).shifted(&[-3]), f);
    }

    #[test]
    fn restriction_preserves_integral() {
        let g = Grid::new(2, 1.0, 16).unwrap();
        let f = Field::from_fn(g, |x| (x[0] + 2.0 * x[1]).sin() + 1.0).unwrap();
        let c = f.restrict_to_coarse().unwrap();
        assert_eq!(c.grid().n(), 8);
        assert!((c.integral() - f.integral()).abs() < 1e-13);
    }
}

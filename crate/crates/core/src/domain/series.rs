use super::{norm_l2, Field, Grid};
use crate::error::{Error, Result};

/// Snapshots `u(t_k)` of one run on a fixed grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeSeries {
    grid: Grid,
    times: Vec<f64>,
    snapshots: Vec<Field>,
}

impl SpaceTimeSeries {
    pub fn new(grid: Grid) -> Self {
        SpaceTimeSeries {
            grid,
            times: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    pub fn from_parts(grid: Grid, times: Vec<f64>, snapshots: Vec<Field>) -> Result<Self> {
        let mut s = SpaceTimeSeries::new(grid);
        if times.len() != snapshots.len() {
            return Err(Error::Shape(format!(
                "{} times for {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        for (t, f) in times.into_iter().zip(snapshots) {
            s.push(t, f)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, time: f64, snapshot: Field) -> Result<()> {
        if *snapshot.grid() != self.grid {
            return Err(Error::Shape(
                "snapshot grid differs from series grid".into(),
            ));
        }
        if let Some(&last) = self.times.last() {
            if !(time > last) {
                return Err(Error::Validation(format!(
                    "snapshot times must increase strictly: {time} after {last}"
                )));
            }
        } else if time != 0.0 {
            return Err(Error::Validation(format!(
                "first snapshot must be at t = 0, got {time}"
            )));
        }
        self.times.push(time);
        self.snapshots.push(snapshot);
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn snapshots(&self) -> &[Field] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&Field> {
        self.snapshots.last()
    }

    /// Applies `f` to every snapshot, keeping the times.
    pub fn map_snapshots(&self, f: impl Fn(&Field) -> Result<Field>) -> Result<SpaceTimeSeries> {
        let snaps = self.snapshots.iter().map(f).collect::<Result<Vec<_>>>()?;
        let grid = snaps.first().map(|s| *s.grid()).unwrap_or(self.grid);
        SpaceTimeSeries::from_parts(grid, self.times.clone(), snaps)
    }
}

/// `||u||_{L2(Q_T)}`: trapezoidal rule in time over squared spatial norms.
pub fn norm_l2_spacetime(s: &SpaceTimeSeries) -> Result<f64> {
    if s.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "space-time norm needs at least 2 snapshots, got {}",
            s.len()
        )));
    }
    let sq: Vec<f64> = s.snapshots.iter().map(|f| norm_l2(f).powi(2)).collect();
    let total: f64 = s
        .times
        .windows(2)
        .zip(sq.windows(2))
        .map(|(t, q)| 0.5 * (t[1] - t[0]) * (q[0] + q[1]))
        .sum();
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Grid {
        Grid::new(1, 1.0, 8).unwrap()
    }

    #[test]
    fn constant_in_time() {
        let a = Field::from_fn(grid(), |x| 1.0 + x[0]).unwrap();
        let s = SpaceTimeSeries::from_parts(
            grid(),
            vec![0.0, 0.7, 2.0],
            vec![a.clone(), a.clone(), a.clone()],
        )
        .unwrap();
        assert_relative_eq!(
            norm_l2_spacetime(&s).unwrap(),
            norm_l2(&a) * 2f64.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn zeros_and_errors() {
        let z = Field::zeros(grid());
        let s = SpaceTimeSeries::from_parts(grid(), vec![0.0, 1.0], vec![z.clone(), z.clone()])
            .unwrap();
        assert_eq!(norm_l2_spacetime(&s).unwrap(), 0.0);
        let one = SpaceTimeSeries::from_parts(grid(), vec![0.0], vec![z]).unwrap();
        assert!(matches!(
            norm_l2_spacetime(&one),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn linear_ramp() {
        let a = Field::from_fn(grid(), |x| x[0].cos()).unwrap();
        let times: Vec<f64> = (0..11).map(|k| k as f64 / 10.0).collect();
        let snaps = times.iter().map(|&t| a.scaled(t)).collect();
        let s = SpaceTimeSeries::from_parts(grid(), times, snaps).unwrap();
        // trapezoid of t^2 with h = 0.1 overestimates 1/3 by h^2/6
        let expected = norm_l2(&a) * (1.0 / 3.0 + 0.01 / 6.0f64).sqrt();
        assert_relative_eq!(
            norm_l2_spacetime(&s).unwrap(),
            expected,
            max_relative = 1e-13
        );
        assert!((norm_l2_spacetime(&s).unwrap() - norm_l2(&a) / 3f64.sqrt()).abs() < 5e-3);
    }

    #[test]
    fn times_must_start_at_zero_and_increase() {
        let z = Field::zeros(grid());
        let mut s = SpaceTimeSeries::new(grid());
        assert!(s.push(0.5, z.clone()).is_err());
        s.push(0.0, z.clone()).unwrap();
        assert!(s.push(0.0, z).is_err());
    }
}

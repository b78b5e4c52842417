use crate::error::{Error, Result};
use crate::geometry::{Disk, Point};

use super::{Field, GridSpec};

/// Real samples at the cell centres of a uniform grid, row-major (`j·nx + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: GridSpec,
    values: Vec<f64>,
    support: Option<Disk>,
}

impl ScalarField2D {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let support = bounding_disk(&grid, &values);
        Ok(Self {
            grid,
            values,
            support,
        })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            support: None,
        }
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn(grid: GridSpec, f: impl Fn(Point) -> f64 + Sync) -> Result<Self> {
        use rayon::prelude::*;
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|k| f(grid.center(k % grid.nx, k / grid.nx)))
            .collect();
        Self::new(grid, values)
    }

    pub fn sample(grid: GridSpec, field: &dyn Field) -> Result<Self> {
        Self::from_fn(grid, |x| field.eval(x))
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L² norm `(Σ v² dx dy)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    /// `Σ u v dx dy`.
    pub fn inner(&self, other: &ScalarField2D) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_area())
    }

    pub fn check_same_grid(&self, other: &ScalarField2D) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Dimension("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Fails unless every sample within `margin` cells of the boundary is negligible.
    pub fn check_margin(&self, margin: usize) -> Result<()> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let tol = 1e-10 * self.max_abs().max(1e-300);
        let mut worst: f64 = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let inside = i >= margin && j >= margin && i + margin < nx && j + margin < ny;
                if !inside {
                    worst = worst.max(self.get(i, j).abs());
                }
            }
        }
        if worst > tol {
            return Err(Error::SupportMargin {
                margin,
                max_abs: worst,
            });
        }
        Ok(())
    }
}

impl Field for ScalarField2D {
    /// Bilinear interpolation between cell centres; constant extension across the
    /// outer half cell; zero outside the domain.
    fn eval(&self, x: Point) -> f64 {
        let g = &self.grid;
        if !g.domain.contains(x) {
            return 0.0;
        }
        let fx = (x[0] - g.domain.xmin) / g.dx() - 0.5;
        let fy = (x[1] - g.domain.ymin) / g.dy() - 0.5;
        let (i0, ax) = split(fx, g.nx);
        let (j0, ay) = split(fy, g.ny);
        let v00 = self.get(i0, j0);
        let v10 = self.get(i0 + 1, j0);
        let v01 = self.get(i0, j0 + 1);
        let v11 = self.get(i0 + 1, j0 + 1);
        (1.0 - ay) * ((1.0 - ax) * v00 + ax * v10) + ay * ((1.0 - ax) * v01 + ax * v11)
    }

    fn support(&self) -> Option<Disk> {
        self.support
    }
}

/// Lower index and clamped fraction for interpolation on `n` samples.
#[inline]
fn split(f: f64, n: usize) -> (usize, f64) {
    let i0 = (f.floor().max(0.0) as usize).min(n - 2);
    let a = (f - i0 as f64).clamp(0.0, 1.0);
    (i0, a)
}

fn bounding_disk(grid: &GridSpec, values: &[f64]) -> Option<Disk> {
    let (mut imin, mut imax, mut jmin, mut jmax) = (usize::MAX, 0, usize::MAX, 0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if values[grid.index(i, j)] != 0.0 {
                imin = imin.min(i);
                imax = imax.max(i);
                jmin = jmin.min(j);
                jmax = jmax.max(j);
            }
        }
    }
    if imin == usize::MAX {
        return None;
    }
    // interpolation reaches one cell beyond the last non-zero centre
    let lo = grid.center(imin, jmin);
    let hi = grid.center(imax, jmax);
    let (hx, hy) = (0.5 * (hi[0] - lo[0]) + grid.dx(), 0.5 * (hi[1] - lo[1]) + grid.dy());
    Some(Disk::new(
        [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
        hx.hypot(hy),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::square(32, std::f64::consts::PI)
    }

    #[test]
    fn constant_field_interpolates_exactly() {
        let f = ScalarField2D::from_fn(grid(), |_| 2.5).unwrap();
        for x in [[0.1, 0.2], [-3.1, 3.1], [3.14, -0.5]] {
            assert!((f.eval(x) - 2.5).abs() < 1e-14);
        }
        assert_eq!(f.eval([4.0, 0.0]), 0.0);
    }

    #[test]
    fn affine_exact_inside_hull() {
        let f = ScalarField2D::from_fn(grid(), |x| 1.0 + 2.0 * x[0] - x[1]).unwrap();
        let c = grid().center(7, 11);
        assert!((f.eval(c) - (1.0 + 2.0 * c[0] - c[1])).abs() < 1e-12);
        let x = [0.37, -1.21];
        assert!((f.eval(x) - (1.0 + 2.0 * x[0] - x[1])).abs() < 1e-12);
    }

    #[test]
    fn rejects_nan() {
        let mut v = vec![0.0; grid().len()];
        v[5] = f64::NAN;
        assert!(matches!(
            ScalarField2D::new(grid(), v),
            Err(Error::NonFinite { index: 5 })
        ));
    }

    #[test]
    fn margin_check() {
        let g = grid();
        let bump = ScalarField2D::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1]) * 8.0).exp()).unwrap();
        assert!(bump.check_margin(2).is_ok());
        let flat = ScalarField2D::from_fn(g, |_| 1.0).unwrap();
        assert!(matches!(flat.check_margin(2), Err(Error::SupportMargin { .. })));
    }

    #[test]
    fn support_disk_covers_nonzero_samples() {
        let g = grid();
        let f = ScalarField2D::from_fn(g, |x| if x[0] > 1.0 && x[1] < -0.5 { 1.0 } else { 0.0 })
            .unwrap();
        let d = f.support().unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                if f.get(i, j) != 0.0 {
                    assert!(d.contains(g.center(i, j)));
                }
            }
        }
    }
}

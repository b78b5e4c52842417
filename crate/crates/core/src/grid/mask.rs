use crate::error::{Error, Result};
use crate::geometry::Point;

use super::GridSpec;

/// Boolean cell mask on a field grid, e.g. the compact set `K` of a support constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    grid: GridSpec,
    cells: Vec<bool>,
}

impl RegionMask {
    pub fn new(grid: GridSpec, cells: Vec<bool>) -> Result<Self> {
        grid.validate()?;
        if cells.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "expected {} mask cells, got {}",
                grid.len(),
                cells.len()
            )));
        }
        let mask = Self { grid, cells };
        mask.validate()?;
        Ok(mask)
    }

    /// Cells whose centre satisfies `pred`.
    pub fn from_predicate(grid: GridSpec, pred: impl Fn(Point) -> bool) -> Result<Self> {
        let cells = (0..grid.len())
            .map(|k| pred(grid.center(k % grid.nx, k / grid.nx)))
            .collect();
        Self::new(grid, cells)
    }

    fn validate(&self) -> Result<()> {
        if !self.cells.iter().any(|&c| c) {
            return Err(Error::InvalidParameter("region mask is empty".into()));
        }
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for j in 0..ny {
            for i in 0..nx {
                let edge = i == 0 || j == 0 || i + 1 == nx || j + 1 == ny;
                if edge && self.cells[self.grid.index(i, j)] {
                    return Err(Error::InvalidParameter(
                        "region mask touches the domain boundary".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[self.grid.index(i, j)]
    }

    /// Whether the cell containing `x` is in the mask.
    pub fn contains(&self, x: Point) -> bool {
        self.grid
            .cell_of(x)
            .map(|(i, j)| self.get(i, j))
            .unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Flat indices of the selected cells in row-major order.
    pub fn indices(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&k| self.cells[k]).collect()
    }

    /// Centres of the selected cells.
    pub fn points(&self) -> Vec<Point> {
        self.indices()
            .into_iter()
            .map(|k| self.grid.center(k % self.grid.nx, k / self.grid.nx))
            .collect()
    }

    /// Largest distance between two selected cell centres (plus one cell diagonal).
    pub fn diameter(&self) -> f64 {
        let pts = self.points();
        let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in &pts {
            xmin = xmin.min(p[0]);
            xmax = xmax.max(p[0]);
            ymin = ymin.min(p[1]);
            ymax = ymax.max(p[1]);
        }
        (xmax - xmin).hypot(ymax - ymin) + self.grid.dx().hypot(self.grid.dy())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_mask() {
        let g = GridSpec::square(64, 1.0);
        let m = RegionMask::from_predicate(g, |x| {
            let r = x[0].hypot(x[1]);
            (0.5..=0.75).contains(&r)
        })
        .unwrap();
        assert!(m.contains([0.6, 0.0]));
        assert!(!m.contains([0.0, 0.0]));
        assert!(m.diameter() > 1.4);
    }

    #[test]
    fn rejects_empty_and_boundary() {
        let g = GridSpec::square(16, 1.0);
        assert!(RegionMask::from_predicate(g, |_| false).is_err());
        assert!(RegionMask::from_predicate(g, |_| true).is_err());
    }
}

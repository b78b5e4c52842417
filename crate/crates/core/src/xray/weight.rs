use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Direction, Point};
use crate::grid::{Field, GridSpec};

use super::forward::{beam_transform, transport_solution};

/// A weight `w(x, θ)` on the unit sphere bundle.
pub trait Weight: Send + Sync {
    fn eval(&self, x: Point, theta: Direction) -> f64;
}

impl<W: Weight + ?Sized> Weight for &W {
    fn eval(&self, x: Point, theta: Direction) -> f64 {
        (**self).eval(x, theta)
    }
}

impl<W: Weight + ?Sized> Weight for Arc<W> {
    fn eval(&self, x: Point, theta: Direction) -> f64 {
        (**self).eval(x, theta)
    }
}

pub type WeightFn = Arc<dyn Fn(Point, Direction) -> f64 + Send + Sync>;

/// Evaluable weight, analytic or grid-backed.
#[derive(Clone)]
pub enum WeightField {
    Constant(f64),
    Closure(WeightFn),
    Table(Arc<WeightTable>),
    /// `e^{−Ba}`.
    Attenuation { a: Arc<dyn Field>, h: f64 },
    /// `−e^{−Ba}u` with `u` the transport solution for `(a, f)`.
    Linearization {
        a: Arc<dyn Field>,
        f: Arc<dyn Field>,
        h: f64,
    },
}

impl fmt::Debug for WeightField {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightField::Constant(c) => write!(fm, "Constant({c})"),
            WeightField::Closure(_) => write!(fm, "Closure"),
            WeightField::Table(t) => write!(fm, "Table({}×{}×{})", t.grid.nx, t.grid.ny, t.ntheta),
            WeightField::Attenuation { h, .. } => write!(fm, "Attenuation(h={h})"),
            WeightField::Linearization { h, .. } => write!(fm, "Linearization(h={h})"),
        }
    }
}

impl WeightField {
    pub fn one() -> Self {
        WeightField::Constant(1.0)
    }

    pub fn closure(f: impl Fn(Point, Direction) -> f64 + Send + Sync + 'static) -> Self {
        WeightField::Closure(Arc::new(f))
    }

    /// `(x, θ) ↦ w(x, −θ)`.
    pub fn reflected(&self) -> Self {
        if let WeightField::Constant(c) = self {
            return WeightField::Constant(*c);
        }
        let w = self.clone();
        Self::closure(move |x, th| w.eval(x, th.reversed()))
    }

    /// `(x, θ) ↦ θ_k · w(x, θ)` for component `k ∈ {0, 1}`.
    pub fn times_direction(&self, k: usize) -> Self {
        let w = self.clone();
        Self::closure(move |x, th| th.vector()[k] * w.eval(x, th))
    }

    pub fn scaled(&self, c: f64) -> Self {
        if let WeightField::Constant(v) = self {
            return WeightField::Constant(c * v);
        }
        let w = self.clone();
        Self::closure(move |x, th| c * w.eval(x, th))
    }
}

impl Weight for WeightField {
    fn eval(&self, x: Point, theta: Direction) -> f64 {
        match self {
            WeightField::Constant(c) => *c,
            WeightField::Closure(f) => f(x, theta),
            WeightField::Table(t) => t.eval(x, theta),
            WeightField::Attenuation { a, h } => (-beam_transform(a.as_ref(), x, theta.vector(), *h)).exp(),
            WeightField::Linearization { a, f, h } => {
                let e = (-beam_transform(a.as_ref(), x, theta.vector(), *h)).exp();
                -e * transport_solution(a.as_ref(), f.as_ref(), x, theta.vector(), *h)
            }
        }
    }
}

/// Samples of a weight on `grid × {ϑ_k = 2πk/nθ}`; bilinear in `x`,
/// linear (periodic) or nearest in `ϑ`.
#[derive(Debug, Clone)]
pub struct WeightTable {
    pub grid: GridSpec,
    pub ntheta: usize,
    pub nearest: bool,
    values: Vec<f64>,
}

impl WeightTable {
    /// `values[(k·ny + j)·nx + i]` at cell centre `(i, j)` and angle index `k`.
    pub fn new(grid: GridSpec, ntheta: usize, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if ntheta == 0 || values.len() != grid.len() * ntheta {
            return Err(Error::Dimension(format!(
                "weight table needs {}×{} samples, got {}",
                grid.len(),
                ntheta,
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            grid,
            ntheta,
            nearest: false,
            values,
        })
    }

    pub fn sample(w: &dyn Weight, grid: GridSpec, ntheta: usize) -> Result<Self> {
        let n = grid.len();
        let values: Vec<f64> = (0..ntheta)
            .into_par_iter()
            .flat_map_iter(|k| {
                let th = Direction::from_angle(2.0 * std::f64::consts::PI * k as f64 / ntheta as f64);
                (0..n).map(move |idx| w.eval(grid.center(idx % grid.nx, idx / grid.nx), th))
            })
            .collect();
        Self::new(grid, ntheta, values)
    }

    pub fn with_nearest(mut self, nearest: bool) -> Self {
        self.nearest = nearest;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn slice_eval(&self, k: usize, x: Point) -> f64 {
        let g = &self.grid;
        if !g.domain.contains(x) {
            return 0.0;
        }
        let base = k * g.len();
        let fx = (x[0] - g.domain.xmin) / g.dx() - 0.5;
        let fy = (x[1] - g.domain.ymin) / g.dy() - 0.5;
        let i0 = (fx.floor().max(0.0) as usize).min(g.nx - 2);
        let j0 = (fy.floor().max(0.0) as usize).min(g.ny - 2);
        let ax = (fx - i0 as f64).clamp(0.0, 1.0);
        let ay = (fy - j0 as f64).clamp(0.0, 1.0);
        let v = |i: usize, j: usize| self.values[base + j * g.nx + i];
        (1.0 - ay) * ((1.0 - ax) * v(i0, j0) + ax * v(i0 + 1, j0))
            + ay * ((1.0 - ax) * v(i0, j0 + 1) + ax * v(i0 + 1, j0 + 1))
    }

    pub fn eval(&self, x: Point, theta: Direction) -> f64 {
        let s = theta.angle().rem_euclid(2.0 * std::f64::consts::PI) * self.ntheta as f64
            / (2.0 * std::f64::consts::PI);
        if self.nearest {
            let k = (s.round() as usize) % self.ntheta;
            return self.slice_eval(k, x);
        }
        let k0 = (s.floor() as usize) % self.ntheta;
        let k1 = (k0 + 1) % self.ntheta;
        let a = s - s.floor();
        (1.0 - a) * self.slice_eval(k0, x) + a * self.slice_eval(k1, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Primitive, Profile};

    #[test]
    fn reflected_and_direction_product() {
        let w = WeightField::closure(|x, th| 0.5 * (th.vector()[0] * x[0] + th.vector()[1] * x[1]));
        let th = Direction::from_angle(0.4);
        let x = [0.3, -0.2];
        assert!((w.reflected().eval(x, th) + w.eval(x, th)).abs() < 1e-15);
        assert!((w.times_direction(1).eval(x, th) - th.vector()[1] * w.eval(x, th)).abs() < 1e-15);
    }

    #[test]
    fn table_matches_smooth_weight() {
        let w = WeightField::closure(|x, th| (x[0] * th.vector()[0]).sin() + x[1] * th.vector()[1]);
        let grid = GridSpec::square(64, 1.0);
        let t = WeightTable::sample(&w, grid, 180).unwrap();
        for (x, a) in [([0.1, 0.2], 0.3), ([-0.5, 0.7], 2.9)] {
            let th = Direction::from_angle(a);
            assert!((t.eval(x, th) - w.eval(x, th)).abs() < 2e-3);
        }
    }

    #[test]
    fn attenuation_weight_of_unit_disk() {
        let a: Arc<dyn Field> = Arc::new(Primitive::centered(Profile::disk(1.0), 0.7));
        let w = WeightField::Attenuation { a, h: 1e-3 };
        let v = w.eval([0.0, 0.0], Direction::from_angle(1.0));
        assert!((v - (-0.7f64).exp()).abs() < 1e-12);
    }
}

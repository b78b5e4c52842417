use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, Direction, Point};
use crate::grid::{cubic_weights, Field, GridSpec};
use crate::xray::{transport_solution, Weight, WeightField};

/// Default finite-difference step for symbol partials.
pub const FD_STEP: f64 = 1e-4;

/// An odd function `W(x, θ)` on the sphere bundle, with its first partials.
pub trait Symbol: Send + Sync {
    fn value(&self, x: Point, theta: Direction) -> f64;

    /// `∇_x W`.
    fn grad_x(&self, x: Point, theta: Direction) -> Point {
        let h = FD_STEP;
        [
            (self.value([x[0] + h, x[1]], theta) - self.value([x[0] - h, x[1]], theta)) / (2.0 * h),
            (self.value([x[0], x[1] + h], theta) - self.value([x[0], x[1] - h], theta)) / (2.0 * h),
        ]
    }

    /// `∂W/∂ϑ`, the derivative in the polar angle of `θ`.
    fn d_angle(&self, x: Point, theta: Direction) -> f64 {
        let h = FD_STEP;
        let a = theta.angle();
        (self.value(x, Direction::from_angle(a + h)) - self.value(x, Direction::from_angle(a - h))) / (2.0 * h)
    }

    /// The transport solution `u(x, θ)` when the symbol comes from a source problem.
    fn transport(&self, _x: Point, _theta: Direction) -> Option<f64> {
        None
    }
}

impl<S: Symbol + ?Sized> Symbol for &S {
    fn value(&self, x: Point, theta: Direction) -> f64 {
        (**self).value(x, theta)
    }
    fn grad_x(&self, x: Point, theta: Direction) -> Point {
        (**self).grad_x(x, theta)
    }
    fn d_angle(&self, x: Point, theta: Direction) -> f64 {
        (**self).d_angle(x, theta)
    }
    fn transport(&self, x: Point, theta: Direction) -> Option<f64> {
        (**self).transport(x, theta)
    }
}

impl<S: Symbol + ?Sized> Symbol for Arc<S> {
    fn value(&self, x: Point, theta: Direction) -> f64 {
        (**self).value(x, theta)
    }
    fn grad_x(&self, x: Point, theta: Direction) -> Point {
        (**self).grad_x(x, theta)
    }
    fn d_angle(&self, x: Point, theta: Direction) -> f64 {
        (**self).d_angle(x, theta)
    }
    fn transport(&self, x: Point, theta: Direction) -> Option<f64> {
        (**self).transport(x, theta)
    }
}

/// `W = c·θ·x` with closed-form partials; `c = 1` is the determinant of the
/// weights `w1 = ½θ·x`, `w2 = 1`.
#[derive(Debug, Clone, Copy)]
pub struct LinearSymbol {
    pub scale: f64,
}

impl Default for LinearSymbol {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

impl Symbol for LinearSymbol {
    fn value(&self, x: Point, theta: Direction) -> f64 {
        self.scale * dot(theta.vector(), x)
    }
    fn grad_x(&self, _x: Point, theta: Direction) -> Point {
        let v = theta.vector();
        [self.scale * v[0], self.scale * v[1]]
    }
    fn d_angle(&self, x: Point, theta: Direction) -> f64 {
        self.scale * dot(theta.perp(), x)
    }
}

/// The pair `w1 = ½θ·x`, `w2 = 1`.
pub fn radial_example_weights() -> (WeightField, WeightField) {
    (
        WeightField::closure(|x, th| 0.5 * dot(th.vector(), x)),
        WeightField::one(),
    )
}

/// `w1(x,θ)w2(x,−θ) − w1(x,−θ)w2(x,θ)`.
pub fn weight_determinant(w1: &dyn Weight, w2: &dyn Weight, x: Point, theta: Direction) -> f64 {
    let back = theta.reversed();
    w1.eval(x, theta) * w2.eval(x, back) - w1.eval(x, back) * w2.eval(x, theta)
}

/// Symbol given as the determinant of a weight pair.
#[derive(Debug, Clone)]
pub struct WeightDeterminant {
    pub w1: WeightField,
    pub w2: WeightField,
}

impl Symbol for WeightDeterminant {
    fn value(&self, x: Point, theta: Direction) -> f64 {
        weight_determinant(&self.w1, &self.w2, x, theta)
    }
}

/// Weights of the linearized identification problem at `(a, f)`:
/// `w1 = −e^{−Ba}u`, `w2 = e^{−Ba}`.
pub fn weight_pair_from_af(a: Arc<dyn Field>, f: Arc<dyn Field>, h: f64) -> (WeightField, WeightField) {
    (
        WeightField::Linearization { a: a.clone(), f, h },
        WeightField::Attenuation { a, h },
    )
}

/// `u(x, θ) − u(x, −θ)`.
pub fn w0_value(a: &dyn Field, f: &dyn Field, x: Point, theta: Direction, h: f64) -> f64 {
    let v = theta.vector();
    transport_solution(a, f, x, v, h) - transport_solution(a, f, x, [-v[0], -v[1]], h)
}

/// `W0 = u − Ju` for a source `f` with attenuation `a`.
#[derive(Clone)]
pub struct IdentificationSymbol {
    pub a: Arc<dyn Field>,
    pub f: Arc<dyn Field>,
    pub h: f64,
}

impl IdentificationSymbol {
    pub fn new(a: Arc<dyn Field>, f: Arc<dyn Field>, h: f64) -> Self {
        Self { a, f, h }
    }
}

impl Symbol for IdentificationSymbol {
    fn value(&self, x: Point, theta: Direction) -> f64 {
        w0_value(self.a.as_ref(), self.f.as_ref(), x, theta, self.h)
    }
    fn transport(&self, x: Point, theta: Direction) -> Option<f64> {
        Some(transport_solution(self.a.as_ref(), self.f.as_ref(), x, theta.vector(), self.h))
    }
}

/// Principal symbol of `I*I` for a weight pair at `(x, ξ)`.
#[derive(Debug, Clone, Copy)]
pub struct NormalSymbol {
    /// The full 2×2 matrix, including the factor `π/|ξ|`.
    pub matrix: [[f64; 2]; 2],
    /// `π/|ξ|`.
    pub prefactor: f64,
    /// `|W(x, ξ⊥/|ξ|)|²`, so that `det matrix = prefactor² · det_core`.
    pub det_core: f64,
}

pub fn normal_symbol(w1: &dyn Weight, w2: &dyn Weight, x: Point, xi: Point) -> Result<NormalSymbol> {
    let n = norm(xi);
    if !(n > 0.0) {
        return Err(Error::ZeroCovector);
    }
    let plus = Direction::from_vector([-xi[1] / n, xi[0] / n]);
    let minus = plus.reversed();
    let (a_p, a_m) = (w1.eval(x, plus), w1.eval(x, minus));
    let (b_p, b_m) = (w2.eval(x, plus), w2.eval(x, minus));
    let c = PI / n;
    let matrix = [
        [c * (a_p * a_p + a_m * a_m), c * (a_p * b_p + a_m * b_m)],
        [c * (a_p * b_p + a_m * b_m), c * (b_p * b_p + b_m * b_m)],
    ];
    let w = a_p * b_m - b_p * a_m;
    Ok(NormalSymbol {
        matrix,
        prefactor: c,
        det_core: w * w,
    })
}

/// Covector `ξ = −θ⊥` whose conormal direction `ξ⊥/|ξ|` is `θ`.
#[inline]
pub fn covector_for(theta: Direction) -> Point {
    let n = theta.perp();
    [-n[0], -n[1]]
}

/// Direction `θ = ξ⊥/|ξ|`.
#[inline]
pub fn direction_of(xi: Point) -> Direction {
    Direction::from_vector([-xi[1], xi[0]])
}

/// A symbol sampled on `grid × nθ` angles and interpolated by cubic
/// convolution in all three variables, so that partials are cheap.
#[derive(Debug, Clone)]
pub struct TabulatedSymbol {
    grid: GridSpec,
    ntheta: usize,
    values: Vec<f64>,
    transport: Option<Vec<f64>>,
}

impl TabulatedSymbol {
    /// Samples `symbol` (and its transport, if any) at cell centres and angles `2πk/nθ`.
    pub fn sample(symbol: &dyn Symbol, grid: GridSpec, ntheta: usize) -> Result<Self> {
        grid.validate()?;
        if ntheta < 8 {
            return Err(Error::InvalidParameter("tabulated symbol needs nθ ≥ 8".into()));
        }
        let n = grid.len();
        let sample = |f: &(dyn Fn(Point, Direction) -> f64 + Sync)| -> Vec<f64> {
            (0..ntheta * n)
                .into_par_iter()
                .map(|idx| {
                    let (k, c) = (idx / n, idx % n);
                    let th = Direction::from_angle(2.0 * PI * k as f64 / ntheta as f64);
                    f(grid.center(c % grid.nx, c / grid.nx), th)
                })
                .collect()
        };
        let values = sample(&|x, th| symbol.value(x, th));
        let transport = if symbol.transport([0.0, 0.0], Direction::from_angle(0.0)).is_some() {
            Some(sample(&|x, th| symbol.transport(x, th).unwrap_or(0.0)))
        } else {
            None
        };
        Ok(Self {
            grid,
            ntheta,
            values,
            transport,
        })
    }

    fn interp(&self, table: &[f64], x: Point, theta: Direction) -> f64 {
        let g = &self.grid;
        let n = g.len();
        let fx = (x[0] - g.domain.xmin) / g.dx() - 0.5;
        let fy = (x[1] - g.domain.ymin) / g.dy() - 0.5;
        let fa = theta.angle().rem_euclid(2.0 * PI) * self.ntheta as f64 / (2.0 * PI);
        let (i0, wx) = (fx.floor(), cubic_weights(fx - fx.floor()));
        let (j0, wy) = (fy.floor(), cubic_weights(fy - fy.floor()));
        let (k0, wa) = (fa.floor(), cubic_weights(fa - fa.floor()));
        let clamp = |v: f64, len: usize| (v.max(0.0) as usize).min(len - 1);
        let mut acc = 0.0;
        for (c, wc) in wa.iter().enumerate() {
            let k = (k0 as isize + c as isize - 1).rem_euclid(self.ntheta as isize) as usize;
            let base = k * n;
            for (b, wb) in wy.iter().enumerate() {
                let j = clamp(j0 + b as f64 - 1.0, g.ny);
                for (a, wa_) in wx.iter().enumerate() {
                    let i = clamp(i0 + a as f64 - 1.0, g.nx);
                    acc += wc * wb * wa_ * table[base + j * g.nx + i];
                }
            }
        }
        acc
    }
}

impl Symbol for TabulatedSymbol {
    fn value(&self, x: Point, theta: Direction) -> f64 {
        // enforce oddness exactly
        0.5 * (self.interp(&self.values, x, theta) - self.interp(&self.values, x, theta.reversed()))
    }
    fn transport(&self, x: Point, theta: Direction) -> Option<f64> {
        self.transport.as_ref().map(|t| self.interp(t, x, theta))
    }
}

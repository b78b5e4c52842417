//! Discretization substrate: sampled fields and sinograms, region masks,
//! radial profiles, analytic phantoms, line quadrature and Sobolev norms.

mod field;
pub mod io;
mod mask;
mod phantom;
pub mod quadrature;
mod radial_fn;
pub mod scenario;
mod sinogram;
pub mod sobolev;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{union_support, Disk, Point};

pub use field::ScalarField2D;
pub use mask::RegionMask;
pub use phantom::{smooth_step, Phantom, Placement, Primitive, Profile, RadialLift, RadialPhantom};
pub use quadrature::{default_h, line_integral, DEFAULT_H_FRACTION};
pub use radial_fn::{RadialFunction, RadialProfile};
pub use sinogram::{cubic_weights, Sinogram, SinogramGeometry};

/// Anything that can be evaluated at a point of the plane and has bounded support.
pub trait Field: Send + Sync {
    fn eval(&self, x: Point) -> f64;

    /// A disk containing the support, `None` for the zero function.
    fn support(&self) -> Option<Disk>;

    /// Line parameters where the integrand jumps along `origin + t·theta`.
    /// Quadrature splits its cells there so piecewise-smooth phantoms integrate cleanly.
    fn breakpoints(&self, _origin: Point, _theta: Point, _out: &mut Vec<f64>) {}
}

impl<F: Field + ?Sized> Field for &F {
    fn eval(&self, x: Point) -> f64 {
        (**self).eval(x)
    }
    fn support(&self) -> Option<Disk> {
        (**self).support()
    }
    fn breakpoints(&self, origin: Point, theta: Point, out: &mut Vec<f64>) {
        (**self).breakpoints(origin, theta, out)
    }
}

impl<F: Field + ?Sized> Field for Arc<F> {
    fn eval(&self, x: Point) -> f64 {
        (**self).eval(x)
    }
    fn support(&self) -> Option<Disk> {
        (**self).support()
    }
    fn breakpoints(&self, origin: Point, theta: Point, out: &mut Vec<f64>) {
        (**self).breakpoints(origin, theta, out)
    }
}

impl<F: Field + ?Sized> Field for Box<F> {
    fn eval(&self, x: Point) -> f64 {
        (**self).eval(x)
    }
    fn support(&self) -> Option<Disk> {
        (**self).support()
    }
    fn breakpoints(&self, origin: Point, theta: Point, out: &mut Vec<f64>) {
        (**self).breakpoints(origin, theta, out)
    }
}

/// The zero function.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl Field for ZeroField {
    fn eval(&self, _x: Point) -> f64 {
        0.0
    }
    fn support(&self) -> Option<Disk> {
        None
    }
}

/// `Σ cᵢ Fᵢ`.
#[derive(Clone, Default)]
pub struct LinearCombination {
    terms: Vec<(f64, Arc<dyn Field>)>,
}

impl LinearCombination {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, coeff: f64, field: Arc<dyn Field>) -> Self {
        self.terms.push((coeff, field));
        self
    }

    pub fn push(&mut self, coeff: f64, field: Arc<dyn Field>) {
        self.terms.push((coeff, field));
    }
}

impl Field for LinearCombination {
    fn eval(&self, x: Point) -> f64 {
        self.terms.iter().map(|(c, f)| c * f.eval(x)).sum()
    }

    fn support(&self) -> Option<Disk> {
        self.terms
            .iter()
            .filter(|(c, _)| *c != 0.0)
            .fold(None, |acc, (_, f)| union_support(acc, f.support()))
    }

    fn breakpoints(&self, origin: Point, theta: Point, out: &mut Vec<f64>) {
        for (c, f) in &self.terms {
            if *c != 0.0 {
                f.breakpoints(origin, theta, out);
            }
        }
    }
}

/// Axis-aligned rectangle `[xmin,xmax]×[ymin,ymax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self::square(PI)
    }
}

impl Domain {
    /// `[−half, half]²`.
    pub fn square(half: f64) -> Self {
        Self {
            xmin: -half,
            xmax: half,
            ymin: -half,
            ymax: half,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn contains(&self, x: Point) -> bool {
        x[0] >= self.xmin && x[0] <= self.xmax && x[1] >= self.ymin && x[1] <= self.ymax
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.xmin, self.xmax, self.ymin, self.ymax]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.xmax <= self.xmin || self.ymax <= self.ymin {
            return Err(Error::InvalidGrid(format!("degenerate domain {self:?}")));
        }
        Ok(())
    }
}

/// Grid metadata for cell-centred samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub domain: Domain,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, domain: Domain) -> Result<Self> {
        let g = Self { nx, ny, domain };
        g.validate()?;
        Ok(g)
    }

    /// `n×n` cells on `[−half, half]²`.
    pub fn square(n: usize, half: f64) -> Self {
        Self {
            nx: n,
            ny: n,
            domain: Domain::square(half),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2×2 samples, got {}×{}",
                self.nx, self.ny
            )));
        }
        self.domain.validate()
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.domain.width() / self.nx as f64
    }

    #[inline]
    pub fn dy(&self) -> f64 {
        self.domain.height() / self.ny as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Centre of cell `(i, j)`; `i` runs along x, `j` along y.
    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Point {
        [
            self.domain.xmin + (i as f64 + 0.5) * self.dx(),
            self.domain.ymin + (j as f64 + 0.5) * self.dy(),
        ]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Cell containing `x`, if inside the domain.
    pub fn cell_of(&self, x: Point) -> Option<(usize, usize)> {
        if !self.domain.contains(x) {
            return None;
        }
        let i = (((x[0] - self.domain.xmin) / self.dx()) as usize).min(self.nx - 1);
        let j = (((x[1] - self.domain.ymin) / self.dy()) as usize).min(self.ny - 1);
        Some((i, j))
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }
}

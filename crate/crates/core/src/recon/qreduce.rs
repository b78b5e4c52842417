use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dot, perp, Direction, Disk, Point};
use crate::grid::{Domain, Field, GridSpec, ScalarField2D, Sinogram, SinogramGeometry};
use crate::microlocal::weight_determinant;
use crate::xray::{backprojection, weighted_xray, Weight};

/// `θ_k · w(x, −θ)`.
struct DirectedReflection<'a> {
    w: &'a dyn Weight,
    k: usize,
}

impl Weight for DirectedReflection<'_> {
    fn eval(&self, x: Point, theta: Direction) -> f64 {
        theta.vector()[self.k] * self.w.eval(x, theta.reversed())
    }
}

/// Fourth-order first differences along one axis, one-sided in the two
/// outermost samples at either end.
fn differentiate(f: &ScalarField2D, axis: usize) -> Result<ScalarField2D> {
    let g = *f.grid();
    let (n, h) = if axis == 0 { (g.nx, g.dx()) } else { (g.ny, g.dy()) };
    if n < 5 {
        return Err(Error::InvalidParameter("differences need at least 5 samples per axis".into()));
    }
    let at = |i: usize, j: usize, k: usize| if axis == 0 { f.get(k, j) } else { f.get(i, k) };
    let mut out = vec![0.0; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = if axis == 0 { i } else { j };
            let v = |m: usize| at(i, j, m);
            let d = match k {
                0 => -25.0 * v(0) + 48.0 * v(1) - 36.0 * v(2) + 16.0 * v(3) - 3.0 * v(4),
                1 => -3.0 * v(0) - 10.0 * v(1) + 18.0 * v(2) - 6.0 * v(3) + v(4),
                _ if k == n - 2 => 3.0 * v(n - 1) + 10.0 * v(n - 2) - 18.0 * v(n - 3) + 6.0 * v(n - 4) - v(n - 5),
                _ if k == n - 1 => {
                    25.0 * v(n - 1) - 48.0 * v(n - 2) + 36.0 * v(n - 3) - 16.0 * v(n - 4) + 3.0 * v(n - 5)
                }
                _ => -v(k + 2) + 8.0 * v(k + 1) - 8.0 * v(k - 1) + v(k - 2),
            };
            out[j * g.nx + i] = d / (12.0 * h);
        }
    }
    ScalarField2D::new(g, out)
}

/// Reduction of `I_{w1}g1 + I_{w2}g2 = h` to a system with scalar principal
/// symbol: returns `iPg` with
/// `2π·iPg = (∂₁I'_{θ₂Jw₂}h − ∂₂I'_{θ₁Jw₂}h, −∂₁I'_{θ₂Jw₁}h + ∂₂I'_{θ₁Jw₁}h)`,
/// `Jw(x, θ) = w(x, −θ)`. The principal symbol of `P` is
/// `W(x, ξ⊥/|ξ|)` with `W` the weight determinant.
pub fn q_reduce(w1: &dyn Weight, w2: &dyn Weight, h: &Sinogram, grid: GridSpec) -> Result<(ScalarField2D, ScalarField2D)> {
    grid.validate()?;
    let back = |w: &dyn Weight, k: usize| backprojection(&DirectedReflection { w, k }, h, grid);
    let combine = |w: &dyn Weight, sign: f64| -> Result<ScalarField2D> {
        let d1 = differentiate(&back(w, 1)?, 0)?;
        let d2 = differentiate(&back(w, 0)?, 1)?;
        let scale = sign / (2.0 * std::f64::consts::PI);
        let v = d1.values().iter().zip(d2.values()).map(|(a, b)| scale * (a - b)).collect();
        ScalarField2D::new(grid, v)
    };
    Ok((combine(w2, 1.0)?, combine(w1, -1.0)?))
}

/// `χ(x)·cos(λx·e + phase)` with `χ` a Gaussian of the given width.
struct CoherentState {
    center: Point,
    wave: Point,
    width: f64,
    phase: f64,
}

impl Field for CoherentState {
    fn eval(&self, x: Point) -> f64 {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r2 = dot(d, d) / (self.width * self.width);
        if r2 > 81.0 {
            return 0.0;
        }
        (-0.5 * r2).exp() * (dot(self.wave, d) + self.phase).cos()
    }

    fn support(&self) -> Option<Disk> {
        Some(Disk::new(self.center, 9.0 * self.width))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CoherentOptions {
    pub frequency: f64,
    /// Gaussian width of the envelope.
    pub width: f64,
    pub geom: SinogramGeometry,
    /// Line quadrature step.
    pub h: f64,
    /// Spacing of the difference grid around the centre.
    pub dx: f64,
}

impl Default for CoherentOptions {
    fn default() -> Self {
        Self {
            frequency: 64.0,
            width: 0.15,
            geom: SinogramGeometry {
                np: 1025,
                ntheta: 720,
                pmax: 1.5,
            },
            h: 2e-3,
            dx: 1.0 / 256.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoherentCheck {
    /// `P f_λ / f_λ` at the centre.
    pub measured: Complex64,
    /// `W(x, e⊥)`.
    pub expected: f64,
    /// `|measured − expected| / |expected|`.
    pub rel_error: f64,
}

/// Applies [`q_reduce`] to the data of the coherent state
/// `χ(x)e^{iλ(x−x₀)·e}` placed in the first component and compares the
/// quotient with `W(x₀, e⊥)`.
pub fn coherent_q_check(
    w1: &dyn Weight,
    w2: &dyn Weight,
    center: Point,
    direction: Direction,
    opts: &CoherentOptions,
) -> Result<CoherentCheck> {
    let wave = [opts.frequency * direction.vector()[0], opts.frequency * direction.vector()[1]];
    let part = |phase: f64| -> Result<f64> {
        let state = CoherentState {
            center,
            wave,
            width: opts.width,
            phase,
        };
        let h = weighted_xray(w1, &state, opts.geom, opts.h)?;
        let half = 2.5 * opts.dx;
        let patch = GridSpec::new(
            5,
            5,
            Domain {
                xmin: center[0] - half,
                xmax: center[0] + half,
                ymin: center[1] - half,
                ymax: center[1] + half,
            },
        )?;
        Ok(q_reduce(w1, w2, &h, patch)?.0.get(2, 2))
    };
    // iPf = Q(cos) + iQ(sin); f(x₀) = 1
    let ipf = Complex64::new(part(0.0)?, part(-std::f64::consts::FRAC_PI_2)?);
    let measured = ipf / Complex64::i();
    let expected = weight_determinant(w1, w2, center, Direction::from_vector(perp(direction.vector())));
    let rel_error = (measured - expected).norm() / expected.abs().max(f64::MIN_POSITIVE);
    Ok(CoherentCheck {
        measured,
        expected,
        rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Profile;
    use crate::microlocal::radial_example_weights;
    use crate::xray::WeightField;

    #[test]
    fn zero_data_gives_zero() {
        let (w1, w2) = radial_example_weights();
        let h = Sinogram::zeros(SinogramGeometry::new(33, 32, 1.0).unwrap());
        let (a, b) = q_reduce(&w1, &w2, &h, GridSpec::square(16, 1.0)).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        assert_eq!(b.max_abs(), 0.0);
    }

    #[test]
    fn differences_are_fourth_order_up_to_the_edge() {
        let err = |n: usize| {
            let g = GridSpec::square(n, 1.0);
            let f = ScalarField2D::from_fn(g, |x| (2.0 * x[0]).sin() * x[1].exp()).unwrap();
            let d = differentiate(&f, 0).unwrap();
            (0..g.len())
                .map(|k| {
                    let x = g.center(k % n, k / n);
                    (d.values()[k] - 2.0 * (2.0 * x[0]).cos() * x[1].exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!(ratio > 12.0, "{ratio}");
    }

    #[test]
    fn radial_first_component_is_annihilated() {
        let (w1, w2) = radial_example_weights();
        let g1 = crate::grid::RadialLift::new(Profile::bump(0.6));
        let geom = SinogramGeometry::new(257, 256, 1.0).unwrap();
        let h = weighted_xray(&w1, &g1, geom, 2e-3).unwrap();
        let (a, b) = q_reduce(&w1, &w2, &h, GridSpec::square(48, 1.0)).unwrap();
        assert!(a.max_abs().max(b.max_abs()) < 1e-3);
    }

    #[test]
    fn symbol_on_a_generic_pair() {
        let w1 = WeightField::closure(|x, th| 1.0 + 0.3 * th.vector()[0] + 0.2 * x[1]);
        let w2 = WeightField::closure(|x, th| 0.5 + 0.4 * th.vector()[1] * (1.0 + x[0]));
        let opts = CoherentOptions {
            frequency: 48.0,
            geom: SinogramGeometry::new(513, 360, 1.2).unwrap(),
            ..CoherentOptions::default()
        };
        let c = coherent_q_check(&w1, &w2, [0.2, -0.1], Direction::from_angle(0.4), &opts).unwrap();
        assert!(c.rel_error < 0.05, "{c:?}");
    }
}

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dot, Direction, Disk, Point};
use crate::grid::{Field, SinogramGeometry};
use crate::xray::{backprojection_at, weighted_xray, Weight};

/// Real or imaginary part of `χ(y) e^{iλ y·e}`.
#[derive(Clone, Copy)]
pub struct CoherentPart<'a> {
    pub envelope: &'a dyn Field,
    /// `λe`.
    pub wave: Point,
    pub imaginary: bool,
}

impl Field for CoherentPart<'_> {
    fn eval(&self, y: Point) -> f64 {
        let env = self.envelope.eval(y);
        if env == 0.0 {
            return 0.0;
        }
        let phase = dot(self.wave, y);
        env * if self.imaginary { phase.sin() } else { phase.cos() }
    }

    fn support(&self) -> Option<Disk> {
        self.envelope.support()
    }

    fn breakpoints(&self, origin: Point, theta: Point, out: &mut Vec<f64>) {
        self.envelope.breakpoints(origin, theta, out)
    }
}

/// Polar quadrature used for the singular-kernel side.
#[derive(Debug, Clone, Copy)]
pub struct KernelQuadrature {
    pub angles: usize,
    pub dt: f64,
}

impl Default for KernelQuadrature {
    fn default() -> Self {
        Self { angles: 512, dt: 5e-3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelCheck {
    pub points: Vec<Point>,
    pub via_backprojection: Vec<f64>,
    pub via_kernel: Vec<f64>,
    /// Relative discrete L² mismatch over `points`.
    pub mismatch: f64,
}

/// `∫ A(x, y, ·)/|x−y| f(y) dy` in polar coordinates around `x`, where the
/// Jacobian cancels the singularity.
pub fn kernel_integral(a: &dyn Weight, b: &dyn Weight, f: &dyn Field, x: Point, quad: KernelQuadrature) -> f64 {
    let Some(disk) = f.support() else {
        return 0.0;
    };
    let dphi = 2.0 * PI / quad.angles as f64;
    let mut acc = 0.0;
    for k in 0..quad.angles {
        let th = Direction::from_angle(k as f64 * dphi);
        let v = th.vector();
        let Some((t0, t1)) = disk.chord(x, v) else {
            continue;
        };
        let t0 = t0.max(0.0);
        if t1 <= t0 {
            continue;
        }
        let back = th.reversed();
        let (bp, bm) = (b.eval(x, th), b.eval(x, back));
        let n = ((t1 - t0) / quad.dt).ceil() as usize;
        let dt = (t1 - t0) / n as f64;
        let mut line = 0.0;
        for i in 0..n {
            let y = [x[0] + (t0 + (i as f64 + 0.5) * dt) * v[0], x[1] + (t0 + (i as f64 + 0.5) * dt) * v[1]];
            let fy = f.eval(y);
            if fy != 0.0 {
                line += (bp * a.eval(y, th) + bm * a.eval(y, back)) * fy;
            }
        }
        acc += line * dt;
    }
    acc * dphi
}

/// Evaluates `I'_b I_a f` at `points` by backprojecting the sampled forward
/// transform and by the singular-kernel integral, and compares the two.
pub fn verify_psdo_kernel(
    a: &dyn Weight,
    b: &dyn Weight,
    f: &dyn Field,
    points: &[Point],
    geom: SinogramGeometry,
    h: f64,
    quad: KernelQuadrature,
) -> Result<KernelCheck> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("no evaluation points".into()));
    }
    let sino = weighted_xray(a, f, geom, h)?;
    let via_backprojection: Vec<f64> = points.par_iter().map(|&x| backprojection_at(b, &sino, x)).collect();
    let via_kernel: Vec<f64> = points.par_iter().map(|&x| kernel_integral(a, b, f, x, quad)).collect();
    let num: f64 = via_backprojection.iter().zip(&via_kernel).map(|(p, q)| (p - q).powi(2)).sum();
    let den: f64 = via_kernel.iter().map(|q| q * q).sum();
    Ok(KernelCheck {
        points: points.to_vec(),
        via_backprojection,
        via_kernel,
        mismatch: if den > 0.0 { (num / den).sqrt() } else { num.sqrt() },
    })
}

/// `|ξ|` times the principal symbol of `I'_b I_a` at `θ₊ = ξ⊥/|ξ|`. With `ϑ`
/// running over the whole circle every point `y` is reached from `x` along
/// both `θ` and `−θ`, which gives `2π(a₊b₊ + a₋b₋)`.
pub fn symbol_amplitude(a: &dyn Weight, b: &dyn Weight, x: Point, plus: Direction) -> f64 {
    let minus = plus.reversed();
    2.0 * PI * (a.eval(x, plus) * b.eval(x, plus) + a.eval(x, minus) * b.eval(x, minus))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymbolCheck {
    pub lambda: f64,
    /// `λ Re⟨I_a f_λ, I_b f_λ⟩_Z / ‖χ‖²`.
    pub measured: f64,
    /// `symbol_amplitude` at the envelope centre.
    pub amplitude: f64,
    pub ratio: f64,
}

/// Coherent-state probe of the principal symbol of `I'_b I_a` at
/// `ξ = λe`, using `⟨I'_b I_a f_λ, f_λ⟩ = ⟨I_a f_λ, I_b f_λ⟩_Z`.
pub fn coherent_symbol_check(
    a: &dyn Weight,
    b: &dyn Weight,
    envelope: &dyn Field,
    e: Direction,
    lambda: f64,
    geom: SinogramGeometry,
    h: f64,
) -> Result<SymbolCheck> {
    geom.validate()?;
    if lambda > geom.nyquist() {
        return Err(Error::Aliasing {
            lambda,
            nyquist: geom.nyquist(),
        });
    }
    let disk = envelope.support().ok_or(Error::ZeroInput)?;
    let v = e.vector();
    let wave = [lambda * v[0], lambda * v[1]];
    let re = CoherentPart { envelope, wave, imaginary: false };
    let im = CoherentPart { envelope, wave, imaginary: true };
    let ar = weighted_xray(a, &re, geom, h)?;
    let ai = weighted_xray(a, &im, geom, h)?;
    let (br, bi) = (weighted_xray(b, &re, geom, h)?, weighted_xray(b, &im, geom, h)?);
    let pairing = ar.inner(&br)? + ai.inner(&bi)?;
    let mass = envelope_mass(envelope, disk);
    if !(mass > 0.0) {
        return Err(Error::ZeroInput);
    }
    let measured = lambda * pairing / mass;
    let amplitude = symbol_amplitude(a, b, disk.center, Direction::from_vector(e.perp()));
    Ok(SymbolCheck {
        lambda,
        measured,
        amplitude,
        ratio: measured / amplitude,
    })
}

/// `‖χ‖²` by the midpoint rule on the support square.
fn envelope_mass(envelope: &dyn Field, disk: Disk) -> f64 {
    let n = 1024;
    let ds = 2.0 * disk.radius / n as f64;
    let lo = [disk.center[0] - disk.radius, disk.center[1] - disk.radius];
    (0..n)
        .into_par_iter()
        .map(|j| {
            let y1 = lo[1] + (j as f64 + 0.5) * ds;
            (0..n)
                .map(|i| envelope.eval([lo[0] + (i as f64 + 0.5) * ds, y1]).powi(2))
                .sum::<f64>()
        })
        .sum::<f64>()
        * ds
        * ds
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Primitive, Profile, ZeroField};
    use crate::xray::WeightField;

    fn smooth_weights() -> (WeightField, WeightField) {
        (
            WeightField::closure(|x, th| 1.0 + 0.3 * x[0] * th.vector()[1] + 0.2 * th.vector()[0]),
            WeightField::closure(|x, th| 0.8 + 0.2 * x[1] - 0.3 * th.vector()[1]),
        )
    }

    #[test]
    fn kernel_and_backprojection_agree() {
        let (a, b) = smooth_weights();
        let f = Primitive::new(Profile::gaussian(0.3), [0.2, -0.1], 1.0);
        let pts: Vec<Point> = (0..5).flat_map(|i| (0..5).map(move |j| [0.3 * i as f64 - 0.4, 0.3 * j as f64 - 0.7])).collect();
        let geom = SinogramGeometry::new(401, 360, PI).unwrap();
        let c = verify_psdo_kernel(&a, &b, &f, &pts, geom, 2e-3, KernelQuadrature::default()).unwrap();
        assert!(c.mismatch < 1e-3, "{}", c.mismatch);
        let z = verify_psdo_kernel(&a, &b, &ZeroField, &pts, geom, 2e-3, KernelQuadrature::default()).unwrap();
        assert!(z.via_kernel.iter().chain(&z.via_backprojection).all(|v| *v == 0.0));
    }

    #[test]
    fn coherent_state_reads_amplitude() {
        let chi = Primitive::new(Profile::gaussian(0.2), [0.1, -0.2], 1.0);
        let (a, b) = smooth_weights();
        let geom = SinogramGeometry::new(401, 360, PI).unwrap();
        let c = coherent_symbol_check(&a, &b, &chi, Direction::from_angle(0.3), 64.0, geom, 5e-3).unwrap();
        assert!((c.ratio - 1.0).abs() < 0.05, "{c:?}");
    }
}

use crate::error::{Error, Result};
use crate::geometry::{add_scaled, circle_crossings, dot, union_support, Disk, Point};

use super::{Field, RadialProfile};

/// C^∞ step: 0 for `τ ≤ 0`, 1 for `τ ≥ 1`.
pub fn smooth_step(tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    if tau >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / tau).exp();
    let b = (-1.0 / (1.0 - tau)).exp();
    a / (a + b)
}

/// Gaussian profiles are cut at this many standard deviations.
const GAUSSIAN_CUTOFF: f64 = 7.5;

/// Canonical radial shapes, centred at the origin with unit amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    /// Indicator of `r < radius`; a positive `mollify` width smooths the rim
    /// over `[radius − w/2, radius + w/2]`.
    Disk { radius: f64, mollify: f64 },
    Annulus { r_in: f64, r_out: f64, mollify: f64 },
    /// `exp(−r²/2σ²)`.
    Gaussian { sigma: f64 },
    /// `(1 − r²/R²)^power` on `r < R`.
    Bump { radius: f64, power: f64 },
}

impl Profile {
    pub fn disk(radius: f64) -> Self {
        Profile::Disk {
            radius,
            mollify: 0.0,
        }
    }

    pub fn mollified_disk(radius: f64, width: f64) -> Self {
        Profile::Disk {
            radius,
            mollify: width,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Profile::Gaussian { sigma }
    }

    pub fn bump(radius: f64) -> Self {
        Profile::Bump { radius, power: 4.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Profile::Disk { radius, mollify } => radius > 0.0 && mollify >= 0.0 && mollify < 2.0 * radius,
            Profile::Annulus { r_in, r_out, mollify } => {
                r_in >= 0.0 && r_out > r_in && mollify >= 0.0 && mollify < r_out - r_in
            }
            Profile::Gaussian { sigma } => sigma > 0.0,
            Profile::Bump { radius, power } => radius > 0.0 && power > 0.0,
        };
        let finite = match *self {
            Profile::Disk { radius, mollify } => radius.is_finite() && mollify.is_finite(),
            Profile::Annulus { r_in, r_out, mollify } => {
                r_in.is_finite() && r_out.is_finite() && mollify.is_finite()
            }
            Profile::Gaussian { sigma } => sigma.is_finite(),
            Profile::Bump { radius, power } => radius.is_finite() && power.is_finite(),
        };
        if ok && finite {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad primitive shape {self:?}")))
        }
    }
}

impl RadialProfile for Profile {
    fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        match *self {
            Profile::Disk { radius, mollify } => {
                if mollify > 0.0 {
                    smooth_step((radius + 0.5 * mollify - r) / mollify)
                } else if r < radius {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Annulus { r_in, r_out, mollify } => {
                if mollify > 0.0 {
                    smooth_step((r - r_in + 0.5 * mollify) / mollify)
                        * smooth_step((r_out + 0.5 * mollify - r) / mollify)
                } else if r >= r_in && r < r_out {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Gaussian { sigma } => {
                if r < GAUSSIAN_CUTOFF * sigma {
                    (-r * r / (2.0 * sigma * sigma)).exp()
                } else {
                    0.0
                }
            }
            Profile::Bump { radius, power } => {
                if r < radius {
                    (1.0 - (r * r) / (radius * radius)).powf(power)
                } else {
                    0.0
                }
            }
        }
    }

    fn support_radius(&self) -> f64 {
        match *self {
            Profile::Disk { radius, mollify } => radius + 0.5 * mollify,
            Profile::Annulus { r_out, mollify, .. } => r_out + 0.5 * mollify,
            Profile::Gaussian { sigma } => GAUSSIAN_CUTOFF * sigma,
            Profile::Bump { radius, .. } => radius,
        }
    }

    fn radial_breakpoints(&self) -> Vec<f64> {
        match *self {
            Profile::Disk { radius, mollify } => {
                if mollify > 0.0 {
                    vec![radius - 0.5 * mollify, radius + 0.5 * mollify]
                } else {
                    vec![radius]
                }
            }
            Profile::Annulus { r_in, r_out, mollify } => {
                if mollify > 0.0 {
                    let h = 0.5 * mollify;
                    vec![(r_in - h).max(0.0), r_in + h, r_out - h, r_out + h]
                } else {
                    vec![r_in, r_out]
                }
            }
            Profile::Gaussian { sigma } => vec![GAUSSIAN_CUTOFF * sigma],
            Profile::Bump { radius, .. } => vec![radius],
        }
    }
}

/// Affine placement `x = center + M y` of a canonical shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    center: Point,
    inverse: Option<[[f64; 2]; 2]>,
    stretch: f64,
}

impl Placement {
    pub fn at(center: Point) -> Self {
        Self {
            center,
            inverse: None,
            stretch: 1.0,
        }
    }

    /// Placement with linear part `m` (row-major); `m` must be invertible.
    pub fn affine(center: Point, m: [[f64; 2]; 2]) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if !(det.abs() > 1e-12) || !det.is_finite() {
            return Err(Error::InvalidParameter("placement matrix is singular".into()));
        }
        let inverse = [
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ];
        // largest singular value of m
        let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
        let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
        let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
        let stretch = (0.5 * (a + d) + (0.25 * (a - d) * (a - d) + b * b).sqrt()).sqrt();
        Ok(Self {
            center,
            inverse: Some(inverse),
            stretch,
        })
    }

    pub fn center(&self) -> Point {
        self.center
    }

    #[inline]
    fn to_local(&self, x: Point) -> Point {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        self.apply_inverse(d)
    }

    #[inline]
    fn apply_inverse(&self, d: Point) -> Point {
        match &self.inverse {
            None => d,
            Some(m) => [m[0][0] * d[0] + m[0][1] * d[1], m[1][0] * d[0] + m[1][1] * d[1]],
        }
    }
}

/// One analytic building block: `amplitude · shape(M⁻¹(x − center))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub profile: Profile,
    pub placement: Placement,
    pub amplitude: f64,
}

impl Primitive {
    pub fn new(profile: Profile, center: Point, amplitude: f64) -> Self {
        Self {
            profile,
            placement: Placement::at(center),
            amplitude,
        }
    }

    pub fn centered(profile: Profile, amplitude: f64) -> Self {
        Self::new(profile, [0.0, 0.0], amplitude)
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }
}

impl Field for Primitive {
    fn eval(&self, x: Point) -> f64 {
        let y = self.placement.to_local(x);
        self.amplitude * self.profile.eval(y[0].hypot(y[1]))
    }

    fn support(&self) -> Option<Disk> {
        if self.amplitude == 0.0 {
            return None;
        }
        Some(Disk::new(
            self.placement.center,
            self.profile.support_radius() * self.placement.stretch,
        ))
    }

    fn breakpoints(&self, origin: Point, theta: Point, out: &mut Vec<f64>) {
        if self.amplitude == 0.0 {
            return;
        }
        // in local coordinates the line is y0 + t v with v = M⁻¹θ
        let y0 = self.placement.to_local(origin);
        let v = self.placement.apply_inverse(theta);
        let vv = dot(v, v);
        let tc = -dot(y0, v) / vv;
        let foot = add_scaled(y0, tc, v);
        let off2 = dot(foot, foot);
        for rho in self.profile.radial_breakpoints() {
            let r2 = rho * rho;
            if off2 < r2 {
                let half = ((r2 - off2) / vv).sqrt();
                out.push(tc - half);
                out.push(tc + half);
            }
        }
    }
}

/// Sum of primitives.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Phantom {
    pub primitives: Vec<Primitive>,
}

impl Phantom {
    pub fn new(primitives: Vec<Primitive>) -> Self {
        Self { primitives }
    }

    pub fn single(p: Primitive) -> Self {
        Self::new(vec![p])
    }

    pub fn is_zero(&self) -> bool {
        self.primitives.iter().all(|p| p.amplitude == 0.0)
    }

    /// The phantom as a function of `|x|`, if every primitive is an
    /// unstretched shape centred at the origin.
    pub fn radial(&self) -> Option<RadialPhantom> {
        self.primitives
            .iter()
            .all(|p| p.placement.inverse.is_none() && p.placement.center == [0.0, 0.0])
            .then(|| RadialPhantom(self.clone()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(
            self.primitives
                .iter()
                .map(|p| Primitive {
                    amplitude: c * p.amplitude,
                    ..*p
                })
                .collect(),
        )
    }
}

impl Field for Phantom {
    fn eval(&self, x: Point) -> f64 {
        self.primitives.iter().map(|p| p.eval(x)).sum()
    }

    fn support(&self) -> Option<Disk> {
        self.primitives
            .iter()
            .fold(None, |acc, p| union_support(acc, p.support()))
    }

    fn breakpoints(&self, origin: Point, theta: Point, out: &mut Vec<f64>) {
        for p in &self.primitives {
            p.breakpoints(origin, theta, out);
        }
    }
}

/// A [`Phantom`] known to be radial.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPhantom(Phantom);

impl RadialProfile for RadialPhantom {
    fn eval(&self, r: f64) -> f64 {
        self.0.primitives.iter().map(|p| p.amplitude * p.profile.eval(r)).sum()
    }

    fn support_radius(&self) -> f64 {
        self.0
            .primitives
            .iter()
            .filter(|p| p.amplitude != 0.0)
            .map(|p| p.profile.support_radius())
            .fold(0.0, f64::max)
    }

    fn radial_breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.0.primitives.iter().flat_map(|p| p.profile.radial_breakpoints()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }
}

/// `x ↦ g(|x|)` for a radial profile `g`.
#[derive(Debug, Clone)]
pub struct RadialLift<P> {
    pub profile: P,
}

impl<P: RadialProfile> RadialLift<P> {
    pub fn new(profile: P) -> Self {
        Self { profile }
    }
}

impl<P: RadialProfile> Field for RadialLift<P> {
    fn eval(&self, x: Point) -> f64 {
        self.profile.eval(x[0].hypot(x[1]))
    }

    fn support(&self) -> Option<Disk> {
        Some(Disk::new([0.0, 0.0], self.profile.support_radius()))
    }

    fn breakpoints(&self, origin: Point, theta: Point, out: &mut Vec<f64>) {
        for r in self.profile.radial_breakpoints() {
            circle_crossings([0.0, 0.0], r, origin, theta, out);
        }
    }
}

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::grid::{default_h, Domain, Field, RadialFunction, RadialLift, RadialProfile, ZeroField};
use crate::xray::{attenuated_line, foot, LinearizedOperator};

use super::abel::{abel_inverse, AbelOptions, AbelProfile};

/// Default cutoff width used when mollifying indicators.
pub const MOLLIFY_WIDTH: f64 = 0.05;

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions {
    pub abel: AbelOptions,
    /// Line quadrature step.
    pub h: f64,
    /// Angle at which the profile is sampled.
    pub angle: f64,
    /// Further angles at which independence of the angle is checked.
    pub check_angles: [f64; 3],
    /// Every n-th `p` sample enters the angle and parity checks.
    pub check_stride: usize,
    /// Largest accepted spread, relative to the profile maximum.
    pub spread_tol: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            abel: AbelOptions::default(),
            h: default_h(&Domain::default()),
            angle: 0.0,
            check_angles: [0.7, 2.3, 4.1],
            check_stride: 8,
            spread_tol: 1e-4,
        }
    }
}

/// An angle-independent sinogram profile with its inverse Abel transform.
#[derive(Debug, Clone, Serialize)]
pub struct RadialInversion {
    #[serde(skip)]
    pub profile: AbelProfile,
    #[serde(skip)]
    pub result: RadialFunction,
    /// `max |P_ω(p) − P(p)| / max |P|` over the check angles.
    pub spread: f64,
    /// `max |P(−p) − P(p)| / max |P|`.
    pub odd_part: f64,
}

fn invert_profile(line: impl Fn(f64, Direction) -> f64 + Sync, opts: &ProfileOptions) -> Result<RadialInversion> {
    let base = Direction::from_angle(opts.angle);
    let profile = AbelProfile::from_fn(opts.abel.np, opts.abel.pmax, |p| line(p, base))?;
    let scale = profile.max_abs();
    let checked: Vec<usize> = (0..profile.len()).step_by(opts.check_stride.max(1)).collect();
    let spread = opts
        .check_angles
        .iter()
        .map(|&ang| {
            let th = Direction::from_angle(ang);
            checked
                .par_iter()
                .map(|&i| (line(profile.p(i), th) - profile.values()[i]).abs())
                .reduce(|| 0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let odd_part = checked
        .par_iter()
        .map(|&i| (line(-profile.p(i), base) - profile.values()[i]).abs())
        .reduce(|| 0.0, f64::max);
    let (spread, odd_part) = if scale > 0.0 {
        (spread / scale, odd_part / scale)
    } else {
        (spread, odd_part)
    };
    if spread > opts.spread_tol {
        return Err(Error::AngularDependence {
            spread,
            tol: opts.spread_tol,
        });
    }
    let result = abel_inverse(&profile, &opts.abel)?;
    Ok(RadialInversion {
        profile,
        result,
        spread,
        odd_part,
    })
}

/// `p ↦ I_{JBf}δa(pθ⊥, θ)` at `a = 0`, where `JBf(x, θ) = u(x, θ)`.
pub fn transport_weighted_line(
    op: &LinearizedOperator,
    da: &dyn Field,
    p: f64,
    theta: Direction,
) -> f64 {
    -op.forward_line(da, &ZeroField, foot(p, theta), theta.vector())
}

/// Radial `δf` with `δX_{0,f}(δa, δf) = 0`: the inverse Abel transform of the
/// angle-independent profile of `I_{JBf}δa`.
pub fn null_pair(
    f: Arc<dyn RadialProfile>,
    da: &dyn RadialProfile,
    opts: &ProfileOptions,
) -> Result<RadialInversion> {
    let op = LinearizedOperator::new(Arc::new(ZeroField), Arc::new(RadialLift::new(f)), opts.h);
    let da = RadialLift::new(da);
    invert_profile(|p, th| transport_weighted_line(&op, &da, p, th), opts)
}

/// Radial `f₀` with `X_a f = X₀ f₀`.
pub fn equivalent_source(
    a: &dyn RadialProfile,
    f: &dyn RadialProfile,
    opts: &ProfileOptions,
) -> Result<RadialInversion> {
    let (a, f) = (RadialLift::new(a), RadialLift::new(f));
    invert_profile(|p, th| attenuated_line(&a, &f, foot(p, th), th.vector(), opts.h), opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Profile;
    use crate::radial::abel::{abel_forward, radial_relative_error};

    #[test]
    fn zero_inputs_give_zero() {
        let opts = ProfileOptions::default();
        let f: Arc<dyn RadialProfile> = Arc::new(Profile::mollified_disk(1.0, MOLLIFY_WIDTH));
        let zero = RadialFunction::zeros(16, 1.0);
        assert_eq!(null_pair(f, &zero, &opts).unwrap().result.max_abs(), 0.0);
        let a = Profile::gaussian(0.3);
        assert_eq!(equivalent_source(&a, &zero, &opts).unwrap().result.max_abs(), 0.0);
    }

    #[test]
    fn disk_background_null_pair() {
        let opts = ProfileOptions::default();
        let f: Arc<dyn RadialProfile> = Arc::new(Profile::mollified_disk(1.0, MOLLIFY_WIDTH));
        let da = Profile::bump(0.6);
        let pair = null_pair(f, &da, &opts).unwrap();
        assert!(pair.odd_part < 1e-5, "{}", pair.odd_part);
        let rdf = abel_forward(&pair.result, &opts.abel).unwrap();
        let rda = abel_forward(&da, &opts.abel).unwrap();
        let worst = (0..rdf.len())
            .map(|i| {
                let p = rdf.p(i);
                let s = (1.0 - p * p).max(0.0).sqrt();
                (s * rda.values()[i] - rdf.values()[i]).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn unattenuated_source_is_itself() {
        let opts = ProfileOptions::default();
        let f = Profile::mollified_disk(1.0, MOLLIFY_WIDTH);
        let eq = equivalent_source(&ZeroProfile, &f, &opts).unwrap();
        let err = radial_relative_error(&eq.result, &f);
        assert!(err < 1e-3, "{err}");
    }

    struct ZeroProfile;

    impl RadialProfile for ZeroProfile {
        fn eval(&self, _: f64) -> f64 {
            0.0
        }
        fn support_radius(&self) -> f64 {
            0.0
        }
    }
}

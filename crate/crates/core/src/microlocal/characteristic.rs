use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{dot, Direction, Point};

use super::symbol::Symbol;

/// Angular scan resolution over the full circle.
pub const DEFAULT_SCAN: usize = 720;
/// `|∂_ϑ W|` below this marks a degenerate zero.
pub const DEGENERATE_TOL: f64 = 1e-6;
/// `W(x, ·)` below this everywhere counts as identically zero.
pub const ZERO_TOL: f64 = 1e-10;
const BISECTION_TOL: f64 = 1e-10;

/// A zero `θ(x)` of `W(x, ·)`; `−θ` is a zero as well.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CharacteristicPoint {
    pub x: Point,
    /// Polar angle of the representative in `[0, π)`.
    pub angle: f64,
    pub degenerate: bool,
    /// `u(x, θ)` when the symbol carries a transport solution.
    pub v: Option<f64>,
}

impl CharacteristicPoint {
    pub fn direction(&self) -> Direction {
        Direction::from_angle(self.angle)
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum Characteristics {
    Directions(Vec<CharacteristicPoint>),
    /// `W(x, ·) ≡ 0`: every direction is characteristic.
    WholeCircle,
}

impl Characteristics {
    pub fn directions(&self) -> &[CharacteristicPoint] {
        match self {
            Characteristics::Directions(d) => d,
            Characteristics::WholeCircle => &[],
        }
    }

    pub fn is_whole_circle(&self) -> bool {
        matches!(self, Characteristics::WholeCircle)
    }
}

/// All zeros of `W(x, ·)` up to sign, by a sign-change scan with `ntheta`
/// samples on the circle followed by bisection.
pub fn characteristic_directions(symbol: &dyn Symbol, x: Point, ntheta: usize) -> Characteristics {
    // oddness reduces the scan to [0, π]
    let n = (ntheta / 2).max(4);
    let vals: Vec<f64> = (0..=n)
        .map(|k| symbol.value(x, Direction::from_angle(PI * k as f64 / n as f64)))
        .collect();
    if vals.iter().all(|v| v.abs() < ZERO_TOL) {
        return Characteristics::WholeCircle;
    }
    let mut roots = Vec::new();
    for k in 0..n {
        let (a0, a1) = (PI * k as f64 / n as f64, PI * (k + 1) as f64 / n as f64);
        let (v0, v1) = (vals[k], vals[k + 1]);
        if v0 == 0.0 {
            roots.push(a0);
        } else if v0 * v1 < 0.0 {
            roots.push(bisect(symbol, x, a0, a1, v0));
        }
    }
    let points = roots
        .into_iter()
        .map(|angle| {
            let angle = angle.rem_euclid(PI);
            let th = Direction::from_angle(angle);
            CharacteristicPoint {
                x,
                angle,
                degenerate: symbol.d_angle(x, th).abs() < DEGENERATE_TOL,
                v: symbol.transport(x, th),
            }
        })
        .collect::<Vec<_>>();
    let mut unique: Vec<CharacteristicPoint> = Vec::with_capacity(points.len());
    for p in points {
        let dup = unique.iter().any(|q| {
            let d = (q.angle - p.angle).abs();
            d.min(PI - d) < 1e-9
        });
        if !dup {
            unique.push(p);
        }
    }
    Characteristics::Directions(unique)
}

fn bisect(symbol: &dyn Symbol, x: Point, mut lo: f64, mut hi: f64, mut vlo: f64) -> f64 {
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let vm = symbol.value(x, Direction::from_angle(mid));
        if vm == 0.0 {
            return mid;
        }
        if (vm < 0.0) == (vlo < 0.0) {
            lo = mid;
            vlo = vm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Point of `Ω × S¹` where `W`, `θ·∂_x W` and `∂_ϑ W` are all small.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RptViolation {
    pub x: Point,
    pub angle: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RptReport {
    pub pass: bool,
    pub points_checked: usize,
    pub violations: Vec<RptViolation>,
}

/// Real-principal-type scan: flags `(x, θ)` with
/// `max(|W|, |θ·∂_x W|, |∂_ϑ W|) < tol`.
pub fn rpt_check(symbol: &dyn Symbol, points: &[Point], ntheta: usize, tol: f64) -> RptReport {
    let violations: Vec<RptViolation> = points
        .par_iter()
        .flat_map_iter(|&x| {
            (0..ntheta).filter_map(move |k| {
                let th = Direction::from_angle(2.0 * PI * k as f64 / ntheta as f64);
                let w = symbol.value(x, th).abs();
                if w >= tol {
                    return None;
                }
                let m = w
                    .max(dot(th.vector(), symbol.grad_x(x, th)).abs())
                    .max(symbol.d_angle(x, th).abs());
                (m < tol).then_some(RptViolation {
                    x,
                    angle: th.angle(),
                    magnitude: m,
                })
            })
        })
        .collect();
    RptReport {
        pass: violations.is_empty(),
        points_checked: points.len() * ntheta,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microlocal::symbol::{LinearSymbol, WeightDeterminant};
    use crate::xray::WeightField;

    #[test]
    fn radial_example_zeros_are_tangent() {
        let s = LinearSymbol::default();
        let x = [0.3, 0.4];
        let c = characteristic_directions(&s, x, DEFAULT_SCAN);
        let d = c.directions();
        assert_eq!(d.len(), 1);
        let th = d[0].direction().vector();
        assert!(dot(th, x).abs() < 1e-9);
        assert!(!d[0].degenerate);
        assert!(characteristic_directions(&s, [0.0, 0.0], DEFAULT_SCAN).is_whole_circle());
    }

    #[test]
    fn rpt_pass_and_fail() {
        let pts: Vec<Point> = (0..5).flat_map(|i| (0..5).map(move |j| [0.2 * i as f64 - 0.4, 0.2 * j as f64 - 0.4])).collect();
        let ok = rpt_check(&LinearSymbol::default(), &pts, 90, 1e-3);
        assert!(ok.pass);
        let w = WeightField::closure(|x, _| 1.0 + x[0]);
        let zero = WeightDeterminant { w1: w.clone(), w2: w };
        let bad = rpt_check(&zero, &pts, 90, 1e-3);
        assert!(!bad.pass);
        assert_eq!(bad.violations.len(), bad.points_checked);
    }
}

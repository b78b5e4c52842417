use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{norm, Point};
use crate::grid::RegionMask;

use super::characteristic::{characteristic_directions, Characteristics, DEFAULT_SCAN};
use super::symbol::{covector_for, direction_of, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ExitedRegion,
    MaxLength,
    StationaryProjection,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceOptions {
    /// RK4 step in the flow parameter (negative traces backwards).
    pub step: f64,
    /// Largest |flow parameter| before giving up.
    pub l_max: f64,
    /// `|∂_ξ p0|` below this counts as a stationary projection...
    pub stationary_tol: f64,
    /// ...when sustained for this many consecutive steps.
    pub stationary_steps: usize,
    /// Largest `|p0|` accepted at the seed.
    pub seed_tol: f64,
    /// Keep every n-th state (0 keeps only the endpoints).
    pub record_every: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            step: 1e-3,
            l_max: 50.0,
            stationary_tol: 1e-8,
            stationary_steps: 10,
            seed_tol: 1e-6,
            record_every: 1,
        }
    }
}

/// One state of a zero bicharacteristic.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RayState {
    pub t: f64,
    pub x: Point,
    pub xi: Point,
    pub p0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bicharacteristic {
    pub states: Vec<RayState>,
    pub termination: Termination,
    /// `max |p0|` over every step, recorded or not.
    pub max_drift: f64,
    pub steps: usize,
}

impl Bicharacteristic {
    pub fn last(&self) -> &RayState {
        self.states.last().expect("trace has at least its seed")
    }
}

#[inline]
fn p0(symbol: &dyn Symbol, x: Point, xi: Point) -> f64 {
    symbol.value(x, direction_of(xi))
}

/// `(ẋ, ξ̇) = (∂_ξ p0, −∂_x p0)` together with `|∂_ξ p0|`.
fn hamilton(symbol: &dyn Symbol, x: Point, xi: Point) -> ([f64; 4], f64) {
    let n = norm(xi);
    let th = direction_of(xi);
    let v = th.vector();
    let da = symbol.d_angle(x, th) / n;
    let g = symbol.grad_x(x, th);
    ([da * v[0], da * v[1], -g[0], -g[1]], da.abs())
}

/// Integrates the Hamiltonian flow of `p0(x, ξ) = W(x, ξ⊥/|ξ|)` from a
/// characteristic seed, renormalizing `|ξ| = 1` after every step.
pub fn trace_bicharacteristic(
    symbol: &dyn Symbol,
    x0: Point,
    xi0: Point,
    opts: &TraceOptions,
    inside: &dyn Fn(Point) -> bool,
) -> Result<Bicharacteristic> {
    let n0 = norm(xi0);
    if !(n0 > 0.0) {
        return Err(Error::ZeroCovector);
    }
    if !(opts.step != 0.0) || !(opts.l_max > 0.0) {
        return Err(Error::InvalidParameter("trace needs a non-zero step and positive l_max".into()));
    }
    let mut x = x0;
    let mut xi = [xi0[0] / n0, xi0[1] / n0];
    let value = p0(symbol, x, xi);
    if value.abs() > opts.seed_tol {
        return Err(Error::NonCharacteristicSeed {
            value: value.abs(),
            tol: opts.seed_tol,
        });
    }
    let dt = opts.step;
    let mut t = 0.0;
    let mut states = vec![RayState { t, x, xi, p0: value }];
    let mut max_drift = value.abs();
    let mut still = 0usize;
    let mut steps = 0usize;
    let termination = loop {
        let (k1, s1) = hamilton(symbol, x, xi);
        if s1 < opts.stationary_tol {
            still += 1;
            if still >= opts.stationary_steps {
                break Termination::StationaryProjection;
            }
        } else {
            still = 0;
        }
        let shift = |k: &[f64; 4], c: f64| -> (Point, Point) {
            (
                [x[0] + c * k[0], x[1] + c * k[1]],
                [xi[0] + c * k[2], xi[1] + c * k[3]],
            )
        };
        let (x2, xi2) = shift(&k1, 0.5 * dt);
        let (k2, _) = hamilton(symbol, x2, xi2);
        let (x3, xi3) = shift(&k2, 0.5 * dt);
        let (k3, _) = hamilton(symbol, x3, xi3);
        let (x4, xi4) = shift(&k3, dt);
        let (k4, _) = hamilton(symbol, x4, xi4);
        let mut inc = [0.0; 4];
        for c in 0..4 {
            inc[c] = dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        x = [x[0] + inc[0], x[1] + inc[1]];
        let nx = [xi[0] + inc[2], xi[1] + inc[3]];
        let nn = norm(nx);
        if !(nn > 0.0) {
            return Err(Error::ZeroCovector);
        }
        xi = [nx[0] / nn, nx[1] / nn];
        t += dt;
        steps += 1;
        let value = p0(symbol, x, xi);
        max_drift = max_drift.max(value.abs());
        let exited = !inside(x);
        let done = t.abs() >= opts.l_max;
        if exited || done || (opts.record_every > 0 && steps % opts.record_every == 0) {
            states.push(RayState { t, x, xi, p0: value });
        }
        if exited {
            break Termination::ExitedRegion;
        }
        if done {
            break Termination::MaxLength;
        }
    };
    if states.len() == 1 || states.last().map(|s| s.t) != Some(t) {
        let value = p0(symbol, x, xi);
        states.push(RayState { t, x, xi, p0: value });
    }
    Ok(Bicharacteristic {
        states,
        termination,
        max_drift,
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "TRAPPED")]
    Trapped,
    #[serde(rename = "NON-TRAPPING")]
    NonTrapping,
}

#[derive(Debug, Clone, Copy)]
pub struct TrapOptions {
    /// Approximate number of seed points over `K`.
    pub seeds: usize,
    pub step: f64,
    /// Defaults to ten times the diameter of `K`.
    pub l_max: Option<f64>,
    pub ntheta: usize,
    /// Witness trajectories kept in the report.
    pub keep_witnesses: usize,
}

impl Default for TrapOptions {
    fn default() -> Self {
        Self {
            seeds: 200,
            step: 1e-3,
            l_max: None,
            ntheta: DEFAULT_SCAN,
            keep_witnesses: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrapWitness {
    pub seed: Point,
    pub angle: Option<f64>,
    pub reason: String,
    pub trajectory: Vec<RayState>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrapParameters {
    pub step: f64,
    pub l_max: f64,
    pub ntheta: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrapReport {
    pub verdict: Verdict,
    pub witnesses: Vec<TrapWitness>,
    pub witness_count: usize,
    pub seeds: usize,
    pub traces: usize,
    pub parameters: TrapParameters,
    /// A trapped verdict resting on rays that merely outlived `l_max` is
    /// numerical evidence, not a proof.
    pub caveat: bool,
}

/// Seeds characteristic points on a lattice over `K`, traces each zero
/// bicharacteristic both ways, and reports whether any of them stays over `K`.
pub fn trapping_check(symbol: &dyn Symbol, region: &RegionMask, opts: &TrapOptions) -> Result<TrapReport> {
    let l_max = opts.l_max.unwrap_or(10.0 * region.diameter());
    let grid = *region.grid();
    let stride = ((region.count() as f64 / opts.seeds.max(1) as f64).sqrt().floor() as usize).max(1);
    let seeds: Vec<Point> = (0..grid.ny)
        .step_by(stride)
        .flat_map(|j| (0..grid.nx).step_by(stride).map(move |i| (i, j)))
        .filter(|&(i, j)| region.get(i, j))
        .map(|(i, j)| grid.center(i, j))
        .collect();
    let inside = |x: Point| region.contains(x);
    let trace_opts = TraceOptions {
        step: opts.step,
        l_max,
        record_every: 20,
        ..TraceOptions::default()
    };

    let outcomes: Vec<(usize, Vec<TrapWitness>)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut witnesses = Vec::new();
            let mut traces = 0;
            match characteristic_directions(symbol, seed, opts.ntheta) {
                Characteristics::WholeCircle => witnesses.push(TrapWitness {
                    seed,
                    angle: None,
                    reason: "whole-circle".into(),
                    trajectory: Vec::new(),
                }),
                Characteristics::Directions(dirs) => {
                    for d in dirs {
                        let xi = covector_for(d.direction());
                        for sign in [1.0, -1.0] {
                            let o = TraceOptions {
                                step: sign * trace_opts.step,
                                ..trace_opts
                            };
                            traces += 1;
                            let ray = match trace_bicharacteristic(symbol, seed, xi, &o, &inside) {
                                Ok(r) => r,
                                Err(_) => continue,
                            };
                            let reason = match ray.termination {
                                Termination::ExitedRegion => continue,
                                Termination::MaxLength => "max-length",
                                Termination::StationaryProjection => "stationary-projection",
                            };
                            witnesses.push(TrapWitness {
                                seed,
                                angle: Some(d.angle),
                                reason: reason.into(),
                                trajectory: ray.states,
                            });
                            break;
                        }
                    }
                }
            }
            (traces, witnesses)
        })
        .collect();

    let traces = outcomes.iter().map(|(t, _)| t).sum();
    let mut all: Vec<TrapWitness> = outcomes.into_iter().flat_map(|(_, w)| w).collect();
    let witness_count = all.len();
    let caveat = all.iter().any(|w| w.reason == "max-length");
    all.truncate(opts.keep_witnesses);
    Ok(TrapReport {
        verdict: if witness_count > 0 {
            Verdict::Trapped
        } else {
            Verdict::NonTrapping
        },
        witnesses: all,
        witness_count,
        seeds: seeds.len(),
        traces,
        parameters: TrapParameters {
            step: opts.step,
            l_max,
            ntheta: opts.ntheta,
        },
        caveat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microlocal::symbol::LinearSymbol;

    #[test]
    fn circle_ray_of_radial_example() {
        let s = LinearSymbol::default();
        let r0 = 0.6;
        let opts = TraceOptions {
            l_max: 2.0 * std::f64::consts::PI,
            record_every: 100,
            ..TraceOptions::default()
        };
        let ray = trace_bicharacteristic(&s, [0.0, r0], [0.0, 1.0], &opts, &|x| norm(x) < 2.0).unwrap();
        assert_eq!(ray.termination, Termination::MaxLength);
        let drift = ray.states.iter().fold(0.0f64, |m, st| m.max((norm(st.x) - r0).abs()));
        assert!(drift < 1e-6, "{drift}");
        assert!(ray.max_drift < 1e-5);
    }

    #[test]
    fn origin_is_stationary() {
        let s = LinearSymbol::default();
        let ray = trace_bicharacteristic(&s, [0.0, 0.0], [1.0, 0.0], &TraceOptions::default(), &|_| true).unwrap();
        assert_eq!(ray.termination, Termination::StationaryProjection);
        assert!(norm(ray.last().x) < 1e-12);
    }

    #[test]
    fn rejects_non_characteristic_seed() {
        let s = LinearSymbol::default();
        let r = trace_bicharacteristic(&s, [0.0, 0.5], [1.0, 0.0], &TraceOptions::default(), &|_| true);
        assert!(matches!(r, Err(Error::NonCharacteristicSeed { .. })));
    }
}

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::io::write_columns_csv;
use crate::grid::{cubic_weights, RadialFunction, RadialProfile};

/// Samples of an even function of `p` at `p_i = i·dp`, `i = 0..n`, taken to
/// vanish beyond the last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AbelProfile {
    dp: f64,
    values: Vec<f64>,
}

impl AbelProfile {
    pub fn new(dp: f64, values: Vec<f64>) -> Result<Self> {
        if !(dp > 0.0) || !dp.is_finite() {
            return Err(Error::InvalidParameter(format!("dp must be positive, got {dp}")));
        }
        if values.len() < 5 {
            return Err(Error::InvalidParameter("need at least 5 p samples".into()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { dp, values })
    }

    /// `n` samples spanning `[0, pmax]`.
    pub fn from_fn(n: usize, pmax: f64, g: impl Fn(f64) -> f64 + Sync) -> Result<Self> {
        let dp = pmax / (n.max(2) - 1) as f64;
        Self::new(dp, (0..n).into_par_iter().map(|i| g(i as f64 * dp)).collect())
    }

    #[inline]
    pub fn dp(&self) -> f64 {
        self.dp
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn p(&self, i: usize) -> f64 {
        i as f64 * self.dp
    }

    pub fn pmax(&self) -> f64 {
        self.p(self.len() - 1)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Cubic interpolation with the even extension.
    pub fn eval(&self, p: f64) -> f64 {
        interp(&self.values, self.dp, p, 1.0)
    }

    /// `d/dp` by fourth-order central differences.
    pub fn derivative(&self) -> Vec<f64> {
        let n = self.len() as isize;
        let at = |k: isize| -> f64 {
            if k < 0 {
                self.values[(-k).min(n - 1) as usize]
            } else if k < n {
                self.values[k as usize]
            } else {
                0.0
            }
        };
        (0..n)
            .map(|i| (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * self.dp))
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let p: Vec<f64> = (0..self.len()).map(|i| self.p(i)).collect();
        write_columns_csv(path, ["p", "Rg"], &p, &self.values)
    }
}

/// Keys cubic on `v_i = v(i·dp)` extended by `v(−p) = parity·v(p)` and by
/// zero beyond the last sample.
fn interp(values: &[f64], dp: f64, p: f64, parity: f64) -> f64 {
    let (p, sign) = if p < 0.0 { (-p, parity) } else { (p, 1.0) };
    let n = values.len() as isize;
    let s = p / dp;
    let k = s.floor();
    if k as isize > n {
        return 0.0;
    }
    let w = cubic_weights(s - k);
    let k = k as isize;
    let at = |m: isize| -> f64 {
        if m < 0 {
            parity * values[(-m).min(n - 1) as usize]
        } else if m < n {
            values[m as usize]
        } else {
            0.0
        }
    };
    sign * (0..4).map(|m| w[m] * at(k + m as isize - 1)).sum::<f64>()
}

/// Composite three-point Gauss–Legendre on `[a, b]` with `n` panels; no
/// node sits on a panel edge.
fn gauss3(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    const NODE: f64 = 0.774_596_669_241_483_4;
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let c = a + (i as f64 + 0.5) * h;
        let d = 0.5 * h * NODE;
        acc += 5.0 * (f(c - d) + f(c + d)) + 8.0 * f(c);
    }
    acc * h / 18.0
}

/// Sampling parameters for the Abel pair.
#[derive(Debug, Clone, Copy)]
pub struct AbelOptions {
    /// Samples of `Rg` on `[0, pmax]`.
    pub np: usize,
    pub pmax: f64,
    /// Samples of `g` on `[0, r_max)`.
    pub nr: usize,
    pub r_max: f64,
    /// Gauss–Legendre panels for the `q` integrals.
    pub nq: usize,
    /// Largest `|Rg|` allowed in the last two samples, relative to `max |Rg|`.
    pub tail_tol: f64,
}

impl Default for AbelOptions {
    fn default() -> Self {
        Self {
            np: 2049,
            pmax: PI,
            nr: 2048,
            r_max: PI,
            nq: 1024,
            tail_tol: 1e-6,
        }
    }
}

/// `Rg(p) = 2∫₀^∞ g(√(p²+q²)) dq` on `[0, pmax]`.
pub fn abel_forward(g: &dyn RadialProfile, opts: &AbelOptions) -> Result<AbelProfile> {
    let radius = g.support_radius();
    let mut breaks = g.radial_breakpoints();
    breaks.retain(|b| *b > 0.0 && *b < radius);
    breaks.sort_by(f64::total_cmp);
    AbelProfile::from_fn(opts.np, opts.pmax, |p| {
        if p >= radius {
            return 0.0;
        }
        let top = (radius * radius - p * p).sqrt();
        let mut cuts = vec![0.0];
        cuts.extend(breaks.iter().filter(|b| **b > p).map(|b| (b * b - p * p).sqrt()));
        cuts.push(top);
        let integrand = |q: f64| g.eval((p * p + q * q).sqrt());
        2.0 * cuts
            .windows(2)
            .map(|c| {
                let n = ((c[1] - c[0]) / top * opts.nq as f64).ceil() as usize;
                gauss3(c[0], c[1], n.max(8), integrand)
            })
            .sum::<f64>()
    })
}

/// `g(r) = −(1/π)∫_r^∞ (p²−r²)^{−1/2} Rg'(p) dp`, evaluated as
/// `−(1/π)∫₀^∞ Rg'(√(r²+q²))/√(r²+q²) dq`.
pub fn abel_inverse(rg: &AbelProfile, opts: &AbelOptions) -> Result<RadialFunction> {
    let scale = rg.max_abs();
    let n = rg.len();
    let tail = rg.values()[n - 2].abs().max(rg.values()[n - 1].abs());
    if tail > opts.tail_tol * scale {
        return Err(Error::NonDecayingTail { tail });
    }
    if scale == 0.0 {
        return Ok(RadialFunction::zeros(opts.nr, opts.r_max));
    }
    let d = rg.derivative();
    let dp = rg.dp();
    let pmax = rg.pmax();
    let dr = opts.r_max / opts.nr as f64;
    let values: Vec<f64> = (0..opts.nr)
        .into_par_iter()
        .map(|j| {
            let r = (j as f64 + 0.5) * dr;
            if r >= pmax {
                return 0.0;
            }
            let top = (pmax * pmax - r * r).sqrt();
            let integral = gauss3(0.0, top, opts.nq, |q| {
                let p = (r * r + q * q).sqrt();
                interp(&d, dp, p, -1.0) / p
            });
            -integral / PI
        })
        .collect();
    RadialFunction::new(opts.r_max, values)
}

/// Relative L² distance of two radial functions as functions on the plane.
pub fn radial_relative_error(got: &RadialFunction, want: &dyn RadialProfile) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in got.values().iter().enumerate() {
        let r = got.r(i);
        let w = want.eval(r);
        num += (v - w) * (v - w) * r;
        den += w * w * r;
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

pub fn write_radial_csv(path: &Path, g: &RadialFunction) -> Result<()> {
    let r: Vec<f64> = (0..g.nr()).map(|i| g.r(i)).collect();
    write_columns_csv(path, ["r", "g"], &r, g.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Profile;

    #[test]
    fn chord_length_and_gaussian() {
        let opts = AbelOptions::default();
        let disk = abel_forward(&Profile::disk(1.0), &opts).unwrap();
        for i in (0..disk.len()).step_by(97) {
            let p = disk.p(i);
            let want = if p < 1.0 { 2.0 * (1.0 - p * p).sqrt() } else { 0.0 };
            assert!((disk.values()[i] - want).abs() < 1e-6, "p = {p}");
        }
        let gauss = abel_forward(&Profile::gaussian(0.5), &opts).unwrap();
        for i in (0..gauss.len()).step_by(101) {
            let p = gauss.p(i);
            let want = 2.0 * PI.sqrt() * 0.5 * (-p * p / 0.5).exp() / 2.0f64.sqrt();
            assert!((gauss.values()[i] - want).abs() < 1e-8, "p = {p}");
        }
    }

    #[test]
    fn round_trip_bump() {
        let opts = AbelOptions::default();
        let g = Profile::bump(1.3);
        let back = abel_inverse(&abel_forward(&g, &opts).unwrap(), &opts).unwrap();
        let err = radial_relative_error(&back, &g);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn zero_and_tail() {
        let opts = AbelOptions::default();
        let z = AbelProfile::new(0.01, vec![0.0; 50]).unwrap();
        assert_eq!(abel_inverse(&z, &opts).unwrap().max_abs(), 0.0);
        let flat = AbelProfile::new(0.01, vec![1.0; 50]).unwrap();
        assert!(matches!(abel_inverse(&flat, &opts), Err(Error::NonDecayingTail { .. })));
    }
}

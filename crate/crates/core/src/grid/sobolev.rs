//! Sobolev norms through discrete Fourier series: on the torus for fields,
//! in `p` only for sinograms.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

use super::{ScalarField2D, Sinogram};

/// Zero margin (in cells) required of fields before their periodic extension is used.
pub const FIELD_MARGIN: usize = 2;

/// Relative size below which sinogram samples at `p = ±pmax` count as zero.
const BOUNDARY_TOL: f64 = 1e-9;

/// Signed frequency index of FFT bin `m` out of `n`.
#[inline]
fn signed_mode(m: usize, n: usize) -> f64 {
    if m <= n / 2 {
        m as f64
    } else {
        m as f64 - n as f64
    }
}

/// `H^s` norm on the torus spanned by the field's domain, after checking the zero margin.
pub fn sobolev_norm_field(f: &ScalarField2D, s: f64) -> Result<f64> {
    f.check_margin(FIELD_MARGIN)?;
    Ok(sobolev_norm_field_periodic(f, s))
}

/// `H^s` norm of the periodic extension, without the margin check.
pub fn sobolev_norm_field_periodic(f: &ScalarField2D, s: f64) -> f64 {
    let g = f.grid();
    let (nx, ny) = (g.nx, g.ny);
    let (lx, ly) = (g.domain.width(), g.domain.height());
    let mut planner = FftPlanner::<f64>::new();
    let fx = planner.plan_fft_forward(nx);
    let fy = planner.plan_fft_forward(ny);

    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for row in data.chunks_exact_mut(nx) {
        fx.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    let n = (nx * ny) as f64;
    let mut total = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            col[j] = data[j * nx + i];
        }
        fy.process(&mut col);
        let k1 = 2.0 * std::f64::consts::PI * signed_mode(i, nx) / lx;
        for (j, c) in col.iter().enumerate() {
            let k2 = 2.0 * std::f64::consts::PI * signed_mode(j, ny) / ly;
            let weight = (1.0 + k1 * k1 + k2 * k2).powf(s);
            total += weight * (c.norm_sqr() / (n * n));
        }
    }
    (lx * ly * total).sqrt()
}

/// `L²(Z)` norm of `(1 − ∂_p²)^{s/2} h`, after checking that `h` vanishes at `p = ±pmax`.
pub fn sobolev_norm_sinogram(h: &Sinogram, s: f64) -> Result<f64> {
    let geom = h.geometry();
    let scale = h.max_abs();
    let mut edge: f64 = 0.0;
    for j in 0..geom.ntheta {
        edge = edge.max(h.get(0, j).abs()).max(h.get(geom.np - 1, j).abs());
    }
    if scale > 0.0 && edge > BOUNDARY_TOL * scale {
        return Err(Error::BoundaryValues { max_abs: edge });
    }
    Ok(sobolev_norm_sinogram_periodic(h, s))
}

/// Same norm treating each row as periodic in `p` with period `2·pmax`, unchecked.
pub fn sobolev_norm_sinogram_periodic(h: &Sinogram, s: f64) -> f64 {
    let geom = h.geometry();
    // the last sample duplicates the first under periodicity
    let m = geom.np - 1;
    let period = 2.0 * geom.pmax;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let weights: Vec<f64> = (0..m)
        .map(|k| {
            let kp = 2.0 * std::f64::consts::PI * signed_mode(k, m) / period;
            (1.0 + kp * kp).powf(s)
        })
        .collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    let mut total = 0.0;
    for j in 0..geom.ntheta {
        for (b, &v) in buf.iter_mut().zip(&h.row(j)[..m]) {
            *b = Complex64::new(v, 0.0);
        }
        fft.process(&mut buf);
        let row: f64 = buf
            .iter()
            .zip(&weights)
            .map(|(c, w)| w * c.norm_sqr())
            .sum();
        total += period * row / (m * m) as f64;
    }
    (total * geom.dtheta()).sqrt()
}

/// `(1 − ∂_p²)^s h` with each row periodic in `p`, so that
/// `⟨h, sobolev_weight(h, s)⟩_Z` is the square of the periodic `H^s` norm.
/// The duplicated sample at `p = pmax` is set to zero.
pub fn sobolev_weight_sinogram(h: &Sinogram, s: f64) -> Sinogram {
    let geom = *h.geometry();
    let m = geom.np - 1;
    let period = 2.0 * geom.pmax;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let weights: Vec<f64> = (0..m)
        .map(|k| {
            let kp = 2.0 * std::f64::consts::PI * signed_mode(k, m) / period;
            (1.0 + kp * kp).powf(s) / m as f64
        })
        .collect();
    let mut out = vec![0.0; geom.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..geom.ntheta {
        for (b, &v) in buf.iter_mut().zip(&h.row(j)[..m]) {
            *b = Complex64::new(v, 0.0);
        }
        fwd.process(&mut buf);
        buf.iter_mut().zip(&weights).for_each(|(c, w)| *c *= w);
        inv.process(&mut buf);
        let row = &mut out[j * geom.np..(j + 1) * geom.np];
        for (o, c) in row.iter_mut().zip(&buf) {
            *o = c.re;
        }
    }
    Sinogram::new(geom, out).expect("finite input stays finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, SinogramGeometry};
    use std::f64::consts::PI;

    #[test]
    fn zero_field_has_zero_norm() {
        let f = ScalarField2D::zeros(GridSpec::square(16, PI));
        assert_eq!(sobolev_norm_field(&f, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn single_harmonic() {
        // cos(k·x) carries half the energy of e^{ik·x} in each of two modes
        let g = GridSpec::square(64, PI);
        let k = [3.0, -2.0];
        let f = ScalarField2D::from_fn(g, |x| (k[0] * x[0] + k[1] * x[1]).cos()).unwrap();
        for s in [0.0, 0.5, 1.0, -0.5] {
            let expect = 2.0 * PI * (1.0f64 + 13.0).powf(s / 2.0) / 2f64.sqrt();
            assert!((sobolev_norm_field_periodic(&f, s) - expect).abs() < 1e-10 * expect);
        }
    }

    #[test]
    fn field_s0_matches_grid_l2() {
        let g = GridSpec::square(96, PI);
        let f = ScalarField2D::from_fn(g, |x| {
            crate::grid::smooth_step(1.5 - x[0].hypot(x[1])) * (1.0 + 0.3 * x[0])
        })
        .unwrap();
        let a = sobolev_norm_field(&f, 0.0).unwrap();
        assert!((a - f.l2_norm()).abs() < 1e-10 * a);
    }

    #[test]
    fn sinogram_single_mode() {
        let geom = SinogramGeometry::new(129, 8, PI).unwrap();
        let n = 5.0;
        let h = Sinogram::from_fn(geom, |p, th| (n * p).cos() * (1.0 + 0.5 * th.angle().sin())).unwrap();
        let base = sobolev_norm_sinogram_periodic(&h, 0.0);
        for s in [0.5, 1.0, 2.0] {
            let v = sobolev_norm_sinogram_periodic(&h, s);
            assert!((v - (1.0f64 + n * n).powf(s / 2.0) * base).abs() < 1e-10 * v);
        }
        assert!(matches!(
            sobolev_norm_sinogram(&h, 0.0),
            Err(Error::BoundaryValues { .. })
        ));
    }

    #[test]
    fn weight_pairs_to_squared_norm() {
        let geom = SinogramGeometry::new(101, 12, 1.5).unwrap();
        let h = Sinogram::from_fn(geom, |p, th| (-(4.0 * p - th.angle().cos()).powi(2)).exp()).unwrap();
        for s in [0.0, 1.5, 3.0] {
            let pairing = h.inner(&sobolev_weight_sinogram(&h, s)).unwrap();
            let norm = sobolev_norm_sinogram_periodic(&h, s);
            assert!((pairing - norm * norm).abs() < 1e-10 * norm * norm);
        }
    }
}

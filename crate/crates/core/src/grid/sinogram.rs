use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Direction;

/// Sampling of the space of directed lines `{p θ⊥ + tθ}`.
///
/// `p_i = −pmax + i·2pmax/(np−1)` (endpoints included), `ϑ_j = 2πj/nθ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinogramGeometry {
    pub np: usize,
    pub ntheta: usize,
    pub pmax: f64,
}

impl Default for SinogramGeometry {
    fn default() -> Self {
        Self {
            np: 401,
            ntheta: 360,
            pmax: PI,
        }
    }
}

impl SinogramGeometry {
    pub fn new(np: usize, ntheta: usize, pmax: f64) -> Result<Self> {
        let g = Self { np, ntheta, pmax };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.np < 3 || self.ntheta < 1 || !(self.pmax > 0.0) || !self.pmax.is_finite() {
            return Err(Error::InvalidGrid(format!("bad sinogram geometry {self:?}")));
        }
        Ok(())
    }

    #[inline]
    pub fn dp(&self) -> f64 {
        2.0 * self.pmax / (self.np - 1) as f64
    }

    #[inline]
    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.ntheta as f64
    }

    #[inline]
    pub fn p(&self, i: usize) -> f64 {
        -self.pmax + i as f64 * self.dp()
    }

    #[inline]
    pub fn angle(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    #[inline]
    pub fn direction(&self, j: usize) -> Direction {
        Direction::from_angle(self.angle(j))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.np * self.ntheta
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.np + i
    }

    /// Nyquist limit `π/Δp` of the p-sampling.
    pub fn nyquist(&self) -> f64 {
        PI / self.dp()
    }
}

/// Real samples `h(p_i, ϑ_j)` stored angle-major (`j·np + i`). Lines are directed:
/// no symmetry between `(p, ϑ)` and `(−p, ϑ+π)` is assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    geom: SinogramGeometry,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(geom: SinogramGeometry, values: Vec<f64>) -> Result<Self> {
        geom.validate()?;
        if values.len() != geom.len() {
            return Err(Error::Dimension(format!(
                "expected {} sinogram samples, got {}",
                geom.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { geom, values })
    }

    pub fn zeros(geom: SinogramGeometry) -> Self {
        Self {
            geom,
            values: vec![0.0; geom.len()],
        }
    }

    pub fn from_fn(geom: SinogramGeometry, f: impl Fn(f64, Direction) -> f64 + Sync) -> Result<Self> {
        use rayon::prelude::*;
        let values: Vec<f64> = (0..geom.ntheta)
            .into_par_iter()
            .flat_map_iter(|j| {
                let th = geom.direction(j);
                let f = &f;
                (0..geom.np).map(move |i| f(geom.p(i), th))
            })
            .collect();
        Self::new(geom, values)
    }

    #[inline]
    pub fn geometry(&self) -> &SinogramGeometry {
        &self.geom
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.geom.index(i, j)]
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.geom.np..(j + 1) * self.geom.np]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `⟨g, h⟩_{L²(Z)}` with the rectangle rule `Δp·Δϑ`.
    pub fn inner(&self, other: &Sinogram) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.geom.dp()
            * self.geom.dtheta())
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.geom.dp() * self.geom.dtheta()).sqrt()
    }

    pub fn check_same(&self, other: &Sinogram) -> Result<()> {
        if self.geom != other.geom {
            return Err(Error::Dimension("sinograms have different geometry".into()));
        }
        Ok(())
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &Sinogram) -> Result<Sinogram> {
        self.check_same(other)?;
        Ok(Sinogram {
            geom: self.geom,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> Sinogram {
        Sinogram {
            geom: self.geom,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Cubic-convolution interpolation of row `j` at `p`; zero outside `[−pmax, pmax]`.
    pub fn interp_p(&self, j: usize, p: f64) -> f64 {
        interp_row(self.row(j), &self.geom, p)
    }
}

/// Keys cubic-convolution weights (a = −½) for fractional offset `t ∈ [0, 1)`,
/// applied to samples `k−1, k, k+1, k+2`.
#[inline]
pub fn cubic_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}

pub(crate) fn interp_row(row: &[f64], geom: &SinogramGeometry, p: f64) -> f64 {
    let s = (p + geom.pmax) / geom.dp();
    if !(s >= 0.0) || s > (geom.np - 1) as f64 {
        return 0.0;
    }
    let k = (s.floor() as usize).min(geom.np - 2);
    let w = cubic_weights(s - k as f64);
    let n = geom.np as isize;
    let mut acc = 0.0;
    for (m, wm) in w.iter().enumerate() {
        let idx = k as isize + m as isize - 1;
        if idx >= 0 && idx < n {
            acc += wm * row[idx as usize];
        }
    }
    acc
}

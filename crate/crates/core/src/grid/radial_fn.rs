use crate::error::{Error, Result};

/// A function of `r = |x|` with compact support.
pub trait RadialProfile: Send + Sync {
    fn eval(&self, r: f64) -> f64;

    /// Profile vanishes for `r ≥ support_radius()`.
    fn support_radius(&self) -> f64;

    /// Radii where the profile is not smooth.
    fn radial_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<P: RadialProfile + ?Sized> RadialProfile for &P {
    fn eval(&self, r: f64) -> f64 {
        (**self).eval(r)
    }
    fn support_radius(&self) -> f64 {
        (**self).support_radius()
    }
    fn radial_breakpoints(&self) -> Vec<f64> {
        (**self).radial_breakpoints()
    }
}

impl<P: RadialProfile + ?Sized> RadialProfile for std::sync::Arc<P> {
    fn eval(&self, r: f64) -> f64 {
        (**self).eval(r)
    }
    fn support_radius(&self) -> f64 {
        (**self).support_radius()
    }
    fn radial_breakpoints(&self) -> Vec<f64> {
        (**self).radial_breakpoints()
    }
}

/// Samples `g(r_i)` at `r_i = (i+½)·r_max/nr`.
///
/// Evaluation uses cubic convolution with the even extension about `r = 0`
/// and returns zero beyond `r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    r_max: f64,
    values: Vec<f64>,
}

impl RadialFunction {
    pub fn new(r_max: f64, values: Vec<f64>) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidParameter(format!("r_max must be positive, got {r_max}")));
        }
        if values.len() < 4 {
            return Err(Error::InvalidParameter("need at least 4 radial samples".into()));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { r_max, values })
    }

    pub fn from_fn(nr: usize, r_max: f64, g: impl Fn(f64) -> f64) -> Result<Self> {
        let dr = r_max / nr as f64;
        Self::new(r_max, (0..nr).map(|i| g((i as f64 + 0.5) * dr)).collect())
    }

    pub fn sample(nr: usize, r_max: f64, profile: &dyn RadialProfile) -> Result<Self> {
        Self::from_fn(nr, r_max, |r| profile.eval(r))
    }

    pub fn zeros(nr: usize, r_max: f64) -> Self {
        Self {
            r_max,
            values: vec![0.0; nr.max(4)],
        }
    }

    #[inline]
    pub fn nr(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    #[inline]
    pub fn dr(&self) -> f64 {
        self.r_max / self.values.len() as f64
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `(∫ g(r)² r dr · 2π)^{1/2}`, the L² norm of the radial lift.
    pub fn l2_norm_2d(&self) -> f64 {
        let dr = self.dr();
        (2.0 * std::f64::consts::PI
            * (0..self.nr())
                .map(|i| self.values[i] * self.values[i] * self.r(i))
                .sum::<f64>()
            * dr)
            .sqrt()
    }

    fn at(&self, k: isize) -> f64 {
        let n = self.values.len() as isize;
        if k < 0 {
            // even extension: r_{−1−i} = −r_i
            self.values[(-1 - k).min(n - 1) as usize]
        } else if k < n {
            self.values[k as usize]
        } else {
            0.0
        }
    }
}

impl RadialProfile for RadialFunction {
    fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_max {
            return 0.0;
        }
        let s = r / self.dr() - 0.5;
        let k = s.floor();
        let w = super::cubic_weights(s - k);
        let k = k as isize;
        (0..4).map(|m| w[m] * self.at(k + m as isize - 1)).sum()
    }

    fn support_radius(&self) -> f64 {
        self.r_max
    }
}

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Sinogram;

use super::operator::DiscreteOperator;

/// Relative rise of the residual tolerated before CGLS is declared divergent.
pub const DIVERGENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct CglsOptions {
    pub max_iter: usize,
    /// Stop once `‖Ag − h‖ ≤ tol·‖h‖`.
    pub tol: f64,
}

impl Default for CglsOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ReconReport {
    pub iterations: usize,
    /// `‖Ag_k − h‖_Z` for `k = 0..=iterations`.
    pub residual_history: Vec<f64>,
    /// `‖g_k − g†‖/‖g†‖` when the truth is known.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub error_history: Vec<f64>,
    pub relative_error: Option<f64>,
    pub sigma_min: Option<f64>,
    pub null_correlation: Option<f64>,
    pub converged: bool,
}

impl ReconReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }

    /// `k, residual[, error]` per iteration.
    pub fn write_history_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let with_error = !self.error_history.is_empty();
        writeln!(out, "{}", if with_error { "k,residual,error" } else { "k,residual" })?;
        for (k, r) in self.residual_history.iter().enumerate() {
            if with_error {
                writeln!(out, "{k},{r:e},{:e}", self.error_history[k])?;
            } else {
                writeln!(out, "{k},{r:e}")?;
            }
        }
        Ok(())
    }
}

/// Least squares `min ‖Ag − h‖_Z` over fields supported on the operator's
/// mask by conjugate gradients on the normal equations, from `g = 0`.
/// Returns the iterate of smallest residual.
pub fn cgls_solve(
    op: &DiscreteOperator,
    h: &Sinogram,
    opts: CglsOptions,
    truth: Option<&[f64]>,
) -> Result<(Vec<f64>, ReconReport)> {
    if h.geometry() != op.geometry() {
        return Err(Error::Dimension("data geometry does not match the operator".into()));
    }
    if let Some(t) = truth {
        if t.len() != op.dim() {
            return Err(Error::Dimension("truth has the wrong length".into()));
        }
    }
    let zw = op.geometry().dp() * op.geometry().dtheta();
    let data_norm = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>() * zw).sqrt();
    let truth_norm = truth.map(|t| op.norm(t));
    let error_of = |g: &[f64]| -> Option<f64> {
        let t = truth?;
        let d: Vec<f64> = g.iter().zip(t).map(|(a, b)| a - b).collect();
        let n = truth_norm.unwrap();
        Some(if n > 0.0 { op.norm(&d) / n } else { op.norm(&d) })
    };

    let mut g = vec![0.0; op.dim()];
    let mut r = h.values().to_vec();
    let h_norm = data_norm(&r);
    let mut report = ReconReport {
        residual_history: vec![h_norm],
        error_history: error_of(&g).into_iter().collect(),
        ..ReconReport::default()
    };
    if h_norm == 0.0 {
        report.relative_error = error_of(&g);
        report.converged = true;
        return Ok((g, report));
    }
    let mut s = op.adjoint(h)?;
    let mut p = s.clone();
    let mut gamma = op.inner(&s, &s);
    let mut best = (h_norm, 0usize, g.clone());
    let geom = *op.geometry();

    for k in 1..=opts.max_iter {
        if gamma == 0.0 {
            break;
        }
        let q = op.apply(&p)?.into_values();
        let qq = data_norm(&q).powi(2);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        g.iter_mut().zip(&p).for_each(|(x, d)| *x += alpha * d);
        r.iter_mut().zip(&q).for_each(|(x, d)| *x -= alpha * d);
        let res = data_norm(&r);
        let prev = *report.residual_history.last().unwrap();
        report.residual_history.push(res);
        if let Some(e) = error_of(&g) {
            report.error_history.push(e);
        }
        report.iterations = k;
        if res > prev * (1.0 + DIVERGENCE_TOL) {
            return Err(Error::Divergence {
                iteration: k,
                previous: prev,
                current: res,
            });
        }
        if res < best.0 {
            best = (res, k, g.clone());
        }
        if res <= opts.tol * h_norm {
            report.converged = true;
            break;
        }
        s = op.adjoint(&Sinogram::new(geom, r.clone())?)?;
        let gamma_new = op.inner(&s, &s);
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        p.iter_mut().zip(&s).for_each(|(x, d)| *x = d + beta * *x);
    }
    let g = best.2;
    report.relative_error = error_of(&g);
    Ok((g, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, RegionMask, SinogramGeometry};
    use crate::microlocal::radial_example_weights;
    use crate::recon::OperatorOptions;

    fn small_op() -> DiscreteOperator {
        let (w1, w2) = radial_example_weights();
        let mask = RegionMask::from_predicate(GridSpec::square(32, 1.0), |x| x[0].hypot(x[1]) < 0.6).unwrap();
        let geom = SinogramGeometry::new(33, 64, 1.0).unwrap();
        DiscreteOperator::from_weights(&w1, &w2, &mask, geom, OperatorOptions::default()).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let op = small_op();
        let (g, rep) = cgls_solve(&op, &Sinogram::zeros(*op.geometry()), CglsOptions::default(), None).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn residuals_decrease() {
        let op = small_op();
        let truth = op.pack_fn(|x| (3.0 * x[0]).sin() + x[1], |x| (2.0 * x[1]).cos());
        let h = op.apply(&truth).unwrap();
        let (_, rep) = cgls_solve(&op, &h, CglsOptions { max_iter: 60, tol: 0.0 }, Some(&truth)).unwrap();
        for w in rep.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-10));
        }
        assert!(rep.final_residual() < 1e-2 * rep.residual_history[0]);
        assert_eq!(rep.error_history.len(), rep.residual_history.len());
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let op = small_op();
        let other = Sinogram::zeros(SinogramGeometry::new(17, 8, 1.0).unwrap());
        assert!(matches!(
            cgls_solve(&op, &other, CglsOptions::default(), None),
            Err(Error::Dimension(_))
        ));
    }
}

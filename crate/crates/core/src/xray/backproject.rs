use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{dot, Point};
use crate::grid::{GridSpec, ScalarField2D, Sinogram};

use super::weight::Weight;

/// `I'_w ψ(x) = ∫_{S¹} w(x, θ) ψ(x·θ⊥, θ) dθ`: trapezoid sum over the sinogram
/// angles, cubic interpolation in `p`.
pub fn backprojection(w: &dyn Weight, psi: &Sinogram, grid: GridSpec) -> Result<ScalarField2D> {
    grid.validate()?;
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| backprojection_at(w, psi, grid.center(idx % grid.nx, idx / grid.nx)))
        .collect();
    ScalarField2D::new(grid, values)
}

/// `I'_w ψ` at a single point.
pub fn backprojection_at(w: &dyn Weight, psi: &Sinogram, x: Point) -> f64 {
    let geom = *psi.geometry();
    let mut acc = 0.0;
    for j in 0..geom.ntheta {
        let th = geom.direction(j);
        let v = psi.interp_p(j, dot(x, th.perp()));
        if v != 0.0 {
            acc += w.eval(x, th) * v;
        }
    }
    acc * geom.dtheta()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SinogramGeometry;
    use crate::xray::weight::WeightField;
    use std::f64::consts::PI;

    #[test]
    fn constant_backprojects_to_circle_measure() {
        let geom = SinogramGeometry::new(65, 90, PI).unwrap();
        let psi = Sinogram::from_fn(geom, |_, _| 1.0).unwrap();
        let grid = GridSpec::square(16, 1.0);
        let b = backprojection(&WeightField::one(), &psi, grid).unwrap();
        assert!(b.values().iter().all(|v| (v - 2.0 * PI).abs() < 1e-12));
        let odd = WeightField::closure(|_, th| th.vector()[0]);
        let b = backprojection(&odd, &psi, grid).unwrap();
        assert!(b.max_abs() < 1e-12);
    }
}

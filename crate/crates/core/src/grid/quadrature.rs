//! Composite midpoint rule along lines `t ↦ z + tθ`, clipped to the support and
//! split at the integrand's jump points.

use crate::geometry::{add_scaled, union_support, Point};

use super::{Domain, Field};

/// Default step as a fraction of the domain width.
pub const DEFAULT_H_FRACTION: f64 = 1e-3;

pub fn default_h(domain: &Domain) -> f64 {
    DEFAULT_H_FRACTION * domain.width()
}

/// Midpoints `t` and lengths `w` of the quadrature cells on one line.
#[derive(Debug, Clone, Default)]
pub struct Cells {
    pub t: Vec<f64>,
    pub w: Vec<f64>,
}

impl Cells {
    pub fn clear(&mut self) {
        self.t.clear();
        self.w.clear();
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Splits `[t0, t1]` at the `cuts` falling strictly inside and fills each piece
/// with equal cells no longer than `h`.
pub fn partition(t0: f64, t1: f64, cuts: &mut Vec<f64>, h: f64, cells: &mut Cells) {
    cells.clear();
    if !(t1 > t0) {
        return;
    }
    cuts.retain(|&c| c > t0 && c < t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut start = t0;
    for end in cuts.iter().copied().chain(std::iter::once(t1)) {
        let len = end - start;
        if len > 1e-15 {
            let n = (len / h).ceil().max(1.0) as usize;
            let dt = len / n as f64;
            for k in 0..n {
                cells.t.push(start + (k as f64 + 0.5) * dt);
                cells.w.push(dt);
            }
        }
        start = end;
    }
}

/// Parameter interval where the line meets the union of the supports.
pub fn support_chord(fields: &[&dyn Field], z: Point, theta: Point) -> Option<(f64, f64)> {
    let disk = fields
        .iter()
        .fold(None, |acc, f| union_support(acc, f.support()))?;
    disk.chord(z, theta)
}

/// Cells covering `[lo, hi]` ∩ (support chord of `fields`), split at all of their breakpoints.
pub fn line_cells(
    fields: &[&dyn Field],
    z: Point,
    theta: Point,
    lo: f64,
    hi: f64,
    h: f64,
    cells: &mut Cells,
) {
    cells.clear();
    let Some((c0, c1)) = support_chord(fields, z, theta) else {
        return;
    };
    let (t0, t1) = (c0.max(lo), c1.min(hi));
    if !(t1 > t0) {
        return;
    }
    let mut cuts = Vec::new();
    for f in fields {
        f.breakpoints(z, theta, &mut cuts);
    }
    partition(t0, t1, &mut cuts, h, cells);
}

/// `∫ f(z + tθ) dt` over the whole line.
pub fn line_integral(f: &dyn Field, z: Point, theta: Point, h: f64) -> f64 {
    let mut cells = Cells::default();
    line_cells(&[f], z, theta, f64::NEG_INFINITY, f64::INFINITY, h, &mut cells);
    cells
        .t
        .iter()
        .zip(&cells.w)
        .map(|(&t, &w)| w * f.eval(add_scaled(z, t, theta)))
        .sum()
}

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{add_scaled, dot, Direction, Disk, Point};
use crate::grid::{Field, GridSpec, Sinogram, SinogramGeometry};

use super::forward::{beam_transform, foot, transport_solution, March};
use super::weight::{WeightField, WeightTable};

/// The derivative `δX_{a,f}(δa, δf) = I_w δa + X_a δf` at a background `(a, f)`,
/// with `w = −e^{−Ba}u`.
#[derive(Clone)]
pub struct LinearizedOperator {
    a: Arc<dyn Field>,
    f: Arc<dyn Field>,
    h: f64,
}

impl LinearizedOperator {
    pub fn new(a: Arc<dyn Field>, f: Arc<dyn Field>, h: f64) -> Self {
        Self { a, f, h }
    }

    pub fn background(&self) -> (&Arc<dyn Field>, &Arc<dyn Field>) {
        (&self.a, &self.f)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `w(x, θ) = −e^{−Ba(x,θ)} u(x, θ)` evaluated pointwise.
    pub fn weight(&self, x: Point, theta: Direction) -> f64 {
        let v = theta.vector();
        -(-beam_transform(self.a.as_ref(), x, v, self.h)).exp()
            * transport_solution(self.a.as_ref(), self.f.as_ref(), x, v, self.h)
    }

    pub fn weight_field(&self) -> WeightField {
        WeightField::Linearization {
            a: self.a.clone(),
            f: self.f.clone(),
            h: self.h,
        }
    }

    /// The attenuation factor `e^{−Ba}` as a weight.
    pub fn attenuation_field(&self) -> WeightField {
        WeightField::Attenuation {
            a: self.a.clone(),
            h: self.h,
        }
    }

    /// `δX_{a,f}(δa, δf)` on one directed line.
    pub fn forward_line(&self, da: &dyn Field, df: &dyn Field, z: Point, theta: Point) -> f64 {
        let mut m = March::default();
        m.run(self.a.as_ref(), self.f.as_ref(), &[da, df], z, theta, self.h);
        let mut total = 0.0;
        for k in 0..m.cells.len() {
            let y = add_scaled(z, m.cells.t[k], theta);
            let w = m.cells.w[k];
            let dav = da.eval(y);
            let dfv = df.eval(y);
            total += (-m.c[k] * dav + m.e[k] * dfv) * w;
        }
        total
    }

    pub fn forward(&self, da: &dyn Field, df: &dyn Field, geom: SinogramGeometry) -> Result<Sinogram> {
        Sinogram::from_fn(geom, |p, th| self.forward_line(da, df, foot(p, th), th.vector()))
    }

    /// `(w, e^{−Ba})` at `z + tθ` for every `t` in `ts`, from a single march
    /// over the line that also covers `reach`; linear between march cells.
    pub fn weights_along(&self, z: Point, theta: Point, reach: Disk, ts: &[f64]) -> Vec<[f64; 2]> {
        let mut m = March::default();
        m.run(self.a.as_ref(), self.f.as_ref(), &[&Reach(reach)], z, theta, self.h);
        let n = m.cells.len();
        if n == 0 {
            return vec![[0.0, 1.0]; ts.len()];
        }
        let t = &m.cells.t;
        ts.iter()
            .map(|&s| {
                if s <= t[0] {
                    return [-m.c[0], m.e[0]];
                }
                if s >= t[n - 1] {
                    return [-m.c[n - 1], m.e[n - 1]];
                }
                let k = t.partition_point(|&q| q <= s) - 1;
                let al = (s - t[k]) / (t[k + 1] - t[k]);
                [
                    -((1.0 - al) * m.c[k] + al * m.c[k + 1]),
                    (1.0 - al) * m.e[k] + al * m.e[k + 1],
                ]
            })
            .collect()
    }

    /// Tabulates `w` on `grid × nθ` angles. Each angle is marched once along
    /// lines spaced half a cell apart; pixels interpolate between neighbouring lines.
    pub fn weight_table(&self, grid: GridSpec, ntheta: usize) -> Result<WeightTable> {
        let n = grid.len();
        let d = &grid.domain;
        let radius = d.xmin.abs().max(d.xmax.abs()).hypot(d.ymin.abs().max(d.ymax.abs()));
        let spacing = 0.5 * grid.dx().min(grid.dy());
        let nlines = (2.0 * radius / spacing).ceil() as usize + 1;
        let values: Vec<f64> = (0..ntheta)
            .into_par_iter()
            .flat_map_iter(|k| {
                let th = Direction::from_angle(2.0 * std::f64::consts::PI * k as f64 / ntheta as f64);
                let v = th.vector();
                let lines: Vec<LineTable> = (0..nlines)
                    .map(|l| {
                        let p = -radius + l as f64 * spacing;
                        let z = foot(p, th);
                        let mut m = March::default();
                        m.run(self.a.as_ref(), self.f.as_ref(), &[], z, v, self.h);
                        LineTable {
                            t: m.cells.t,
                            w: m.c.iter().map(|c| -c).collect(),
                            end: -m.total,
                        }
                    })
                    .collect();
                let n_perp = th.perp();
                (0..n).map(move |idx| {
                    let x = grid.center(idx % grid.nx, idx / grid.nx);
                    let s = (dot(x, n_perp) + radius) / spacing;
                    let l0 = (s.floor().max(0.0) as usize).min(nlines - 2);
                    let al = (s - l0 as f64).clamp(0.0, 1.0);
                    let t = dot(x, v);
                    (1.0 - al) * lines[l0].at(t) + al * lines[l0 + 1].at(t)
                })
            })
            .collect();
        WeightTable::new(grid, ntheta, values)
    }
}

/// Zero field whose only role is to widen a march to a given disk.
struct Reach(Disk);

impl Field for Reach {
    fn eval(&self, _: Point) -> f64 {
        0.0
    }
    fn support(&self) -> Option<Disk> {
        Some(self.0)
    }
}

/// `w` sampled at cell midpoints of one line, constant before and after.
struct LineTable {
    t: Vec<f64>,
    w: Vec<f64>,
    end: f64,
}

impl LineTable {
    fn at(&self, t: f64) -> f64 {
        if self.t.is_empty() || t <= self.t[0] {
            return 0.0;
        }
        let last = self.t.len() - 1;
        if t >= self.t[last] {
            return self.end;
        }
        let k = self.t.partition_point(|&s| s <= t) - 1;
        let a = (t - self.t[k]) / (self.t[k + 1] - self.t[k]);
        (1.0 - a) * self.w[k] + a * self.w[k + 1]
    }
}

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{add_scaled, Direction, Disk, Point};
use crate::grid::{cubic_weights, GridSpec, RegionMask, ScalarField2D, Sinogram, SinogramGeometry};
use crate::xray::{foot, LinearizedOperator, Weight};

/// Source of the two weights along a line.
pub trait LineWeights: Send + Sync {
    /// `(w1, w2)` at `z + tθ` for each `t` in `ts`.
    fn along(&self, z: Point, theta: Direction, reach: Disk, ts: &[f64]) -> Vec<[f64; 2]>;
}

/// Two pointwise weights.
pub struct WeightPair<A, B>(pub A, pub B);

impl<A: Weight, B: Weight> LineWeights for WeightPair<A, B> {
    fn along(&self, z: Point, theta: Direction, _: Disk, ts: &[f64]) -> Vec<[f64; 2]> {
        let v = theta.vector();
        ts.iter()
            .map(|&t| {
                let x = add_scaled(z, t, v);
                [self.0.eval(x, theta), self.1.eval(x, theta)]
            })
            .collect()
    }
}

/// `(−e^{−Ba}u, e^{−Ba})`, marched once per line.
impl LineWeights for LinearizedOperator {
    fn along(&self, z: Point, theta: Direction, reach: Disk, ts: &[f64]) -> Vec<[f64; 2]> {
        self.weights_along(z, theta.vector(), reach, ts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    Bilinear,
    Cubic,
    /// Six-point cubic convolution, fourth-order accurate.
    SixPoint,
}

fn six_point_kernel(s: f64) -> f64 {
    let s = s.abs();
    if s < 1.0 {
        (4.0 / 3.0 * s - 7.0 / 3.0) * s * s + 1.0
    } else if s < 2.0 {
        ((-7.0 / 12.0 * s + 3.0) * s - 59.0 / 12.0) * s + 2.5
    } else if s < 3.0 {
        ((s / 12.0 - 2.0 / 3.0) * s + 1.75) * s - 1.5
    } else {
        0.0
    }
}

fn six_point_weights(t: f64) -> [f64; 6] {
    std::array::from_fn(|m| six_point_kernel(t + 2.0 - m as f64))
}

#[derive(Debug, Clone, Copy)]
pub struct OperatorOptions {
    pub stencil: Stencil,
    /// Line samples per cell width.
    pub oversample: usize,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self {
            stencil: Stencil::SixPoint,
            oversample: 4,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    col: u32,
    v: [f32; 2],
}

#[derive(Debug, Clone, Copy)]
struct Row {
    line: u32,
    start: u32,
    end: u32,
}

/// `(g1, g2) ↦ I_{w1}g1 + I_{w2}g2` for fields supported on a mask, stored as
/// the sparse matrix (single-precision entries) of a ray-driven quadrature
/// over an interpolation stencil.
/// The adjoint is its exact transpose in the `L²(K)²`, `L²(Z)` inner products.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    mask: RegionMask,
    geom: SinogramGeometry,
    unknowns: Vec<usize>,
    rows: Vec<Row>,
    entries: Vec<Entry>,
}

pub(crate) fn stencil_taps(grid: &GridSpec, stencil: Stencil, x: Point, out: &mut Vec<(usize, f64)>) {
    out.clear();
    let fx = (x[0] - grid.domain.xmin) / grid.dx() - 0.5;
    let fy = (x[1] - grid.domain.ymin) / grid.dy() - 0.5;
    let (i0, j0) = (fx.floor(), fy.floor());
    let (ax, ay) = (fx - i0, fy - j0);
    let (i0, j0) = (i0 as isize, j0 as isize);
    let mut push = |i: isize, j: isize, w: f64| {
        if w != 0.0 && i >= 0 && j >= 0 && (i as usize) < grid.nx && (j as usize) < grid.ny {
            out.push((j as usize * grid.nx + i as usize, w));
        }
    };
    match stencil {
        Stencil::Bilinear => {
            push(i0, j0, (1.0 - ax) * (1.0 - ay));
            push(i0 + 1, j0, ax * (1.0 - ay));
            push(i0, j0 + 1, (1.0 - ax) * ay);
            push(i0 + 1, j0 + 1, ax * ay);
        }
        Stencil::Cubic => {
            let (wx, wy) = (cubic_weights(ax), cubic_weights(ay));
            for (b, wb) in wy.iter().enumerate() {
                for (a, wa) in wx.iter().enumerate() {
                    push(i0 + a as isize - 1, j0 + b as isize - 1, wa * wb);
                }
            }
        }
        Stencil::SixPoint => {
            let (wx, wy) = (six_point_weights(ax), six_point_weights(ay));
            for (b, wb) in wy.iter().enumerate() {
                for (a, wa) in wx.iter().enumerate() {
                    push(i0 + a as isize - 2, j0 + b as isize - 2, wa * wb);
                }
            }
        }
    }
}

impl DiscreteOperator {
    pub fn build(
        weights: &dyn LineWeights,
        mask: &RegionMask,
        geom: SinogramGeometry,
        opts: OperatorOptions,
    ) -> Result<Self> {
        geom.validate()?;
        if opts.oversample == 0 {
            return Err(Error::InvalidParameter("oversample must be positive".into()));
        }
        let grid = *mask.grid();
        let unknowns = mask.indices();
        let mut col_of = vec![u32::MAX; grid.len()];
        for (k, &idx) in unknowns.iter().enumerate() {
            col_of[idx] = k as u32;
        }
        let reach = mask_disk(mask);
        let ds = grid.dx().min(grid.dy()) / opts.oversample as f64;

        let per_angle: Vec<(Vec<Row>, Vec<Entry>)> = (0..geom.ntheta)
            .into_par_iter()
            .map(|j| {
                let th = geom.direction(j);
                let v = th.vector();
                let mut rows = Vec::new();
                let mut entries = Vec::new();
                let mut taps = Vec::with_capacity(16);
                let mut acc: Vec<(u32, f64, f64)> = Vec::new();
                let mut ts = Vec::new();
                for i in 0..geom.np {
                    let z = foot(geom.p(i), th);
                    let Some((t0, t1)) = reach.chord(z, v) else {
                        continue;
                    };
                    let n = ((t1 - t0) / ds).ceil().max(1.0) as usize;
                    let dt = (t1 - t0) / n as f64;
                    ts.clear();
                    ts.extend((0..n).map(|k| t0 + (k as f64 + 0.5) * dt));
                    let w = weights.along(z, th, reach, &ts);
                    acc.clear();
                    for (k, &t) in ts.iter().enumerate() {
                        stencil_taps(&grid, opts.stencil, add_scaled(z, t, v), &mut taps);
                        for &(idx, c) in &taps {
                            let col = col_of[idx];
                            if col != u32::MAX {
                                acc.push((col, c * dt * w[k][0], c * dt * w[k][1]));
                            }
                        }
                    }
                    if acc.is_empty() {
                        continue;
                    }
                    acc.sort_unstable_by_key(|e| e.0);
                    let start = entries.len();
                    let mut k = 0;
                    while k < acc.len() {
                        let col = acc[k].0;
                        let (mut a, mut b) = (0.0, 0.0);
                        while k < acc.len() && acc[k].0 == col {
                            a += acc[k].1;
                            b += acc[k].2;
                            k += 1;
                        }
                        entries.push(Entry {
                            col,
                            v: [a as f32, b as f32],
                        });
                    }
                    rows.push(Row {
                        line: geom.index(i, j) as u32,
                        start: start as u32,
                        end: entries.len() as u32,
                    });
                }
                (rows, entries)
            })
            .collect();

        let total: usize = per_angle.iter().map(|(_, e)| e.len()).sum();
        if total > u32::MAX as usize {
            return Err(Error::InvalidParameter("operator too large".into()));
        }
        let mut rows = Vec::new();
        let mut entries = Vec::with_capacity(total);
        for (r, e) in per_angle {
            let offset = entries.len() as u32;
            rows.extend(r.into_iter().map(|row| Row {
                line: row.line,
                start: row.start + offset,
                end: row.end + offset,
            }));
            entries.extend(e);
        }
        Ok(Self {
            mask: mask.clone(),
            geom,
            unknowns,
            rows,
            entries,
        })
    }

    /// Convenience constructor from two pointwise weights.
    pub fn from_weights(
        w1: &dyn Weight,
        w2: &dyn Weight,
        mask: &RegionMask,
        geom: SinogramGeometry,
        opts: OperatorOptions,
    ) -> Result<Self> {
        Self::build(&WeightPair(w1, w2), mask, geom, opts)
    }

    pub fn mask(&self) -> &RegionMask {
        &self.mask
    }

    pub fn grid(&self) -> &GridSpec {
        self.mask.grid()
    }

    pub fn geometry(&self) -> &SinogramGeometry {
        &self.geom
    }

    /// Unknowns per component.
    pub fn cells(&self) -> usize {
        self.unknowns.len()
    }

    /// Length of the packed vector `(g1, g2)`.
    pub fn dim(&self) -> usize {
        2 * self.unknowns.len()
    }

    pub fn nonzeros(&self) -> usize {
        self.entries.len()
    }

    pub fn apply(&self, g: &[f64]) -> Result<Sinogram> {
        self.check_dim(g)?;
        let m = self.cells();
        let (g1, g2) = g.split_at(m);
        let mut out = vec![0.0; self.geom.len()];
        let sums: Vec<(usize, f64)> = self
            .rows
            .par_iter()
            .map(|r| {
                let s = self.entries[r.start as usize..r.end as usize]
                    .iter()
                    .map(|e| e.v[0] as f64 * g1[e.col as usize] + e.v[1] as f64 * g2[e.col as usize])
                    .sum();
                (r.line as usize, s)
            })
            .collect();
        for (line, s) in sums {
            out[line] = s;
        }
        Sinogram::new(self.geom, out)
    }

    pub fn adjoint(&self, psi: &Sinogram) -> Result<Vec<f64>> {
        if psi.geometry() != &self.geom {
            return Err(Error::Dimension("sinogram geometry does not match the operator".into()));
        }
        let m = self.cells();
        let values = psi.values();
        let scale = self.geom.dp() * self.geom.dtheta() / self.grid().cell_area();
        let acc = self
            .rows
            .par_chunks(256)
            .fold(
                || vec![0.0; 2 * m],
                |mut acc, chunk| {
                    for r in chunk {
                        let y = values[r.line as usize];
                        if y == 0.0 {
                            continue;
                        }
                        for e in &self.entries[r.start as usize..r.end as usize] {
                            acc[e.col as usize] += e.v[0] as f64 * y;
                            acc[m + e.col as usize] += e.v[1] as f64 * y;
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![0.0; 2 * m],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        Ok(acc.into_iter().map(|v| v * scale).collect())
    }

    /// `L²(K)²` inner product of packed vectors.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.grid().cell_area()
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    /// Samples the two fields on the mask.
    pub fn pack(&self, g1: &ScalarField2D, g2: &ScalarField2D) -> Result<Vec<f64>> {
        g1.check_same_grid(g2)?;
        if g1.grid() != self.grid() {
            return Err(Error::Dimension("field grid does not match the operator".into()));
        }
        let (v1, v2) = (g1.values(), g2.values());
        Ok(self
            .unknowns
            .iter()
            .map(|&i| v1[i])
            .chain(self.unknowns.iter().map(|&i| v2[i]))
            .collect())
    }

    /// Packs `(g1(x), g2(x))` evaluated at the masked cell centres.
    pub fn pack_fn(&self, g1: impl Fn(Point) -> f64, g2: impl Fn(Point) -> f64) -> Vec<f64> {
        let grid = *self.grid();
        let pts: Vec<Point> = self.unknowns.iter().map(|&i| grid.center(i % grid.nx, i / grid.nx)).collect();
        pts.iter().map(|&x| g1(x)).chain(pts.iter().map(|&x| g2(x))).collect()
    }

    pub fn unpack(&self, g: &[f64]) -> Result<(ScalarField2D, ScalarField2D)> {
        self.check_dim(g)?;
        let grid = *self.grid();
        let m = self.cells();
        let mut v1 = vec![0.0; grid.len()];
        let mut v2 = vec![0.0; grid.len()];
        for (k, &i) in self.unknowns.iter().enumerate() {
            v1[i] = g[k];
            v2[i] = g[m + k];
        }
        Ok((ScalarField2D::new(grid, v1)?, ScalarField2D::new(grid, v2)?))
    }

    /// Grid indices of the unknowns, per component.
    pub fn cell_indices(&self) -> &[usize] {
        &self.unknowns
    }

    /// Cell centres of the unknowns.
    pub fn points(&self) -> Vec<Point> {
        let grid = *self.grid();
        self.unknowns.iter().map(|&i| grid.center(i % grid.nx, i / grid.nx)).collect()
    }

    fn check_dim(&self, g: &[f64]) -> Result<()> {
        if g.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "expected {} unknowns, got {}",
                self.dim(),
                g.len()
            )));
        }
        Ok(())
    }
}

/// Smallest centred disk around the bounding box of the mask, widened by the
/// stencil reach.
fn mask_disk(mask: &RegionMask) -> Disk {
    let grid = mask.grid();
    let pts = mask.points();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let r = pts
        .iter()
        .map(|p| (p[0] - c[0]).hypot(p[1] - c[1]))
        .fold(0.0, f64::max);
    Disk::new(c, r + 3.5 * grid.dx().max(grid.dy()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::microlocal::radial_example_weights;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn annulus_mask(n: usize) -> RegionMask {
        RegionMask::from_predicate(GridSpec::square(n, 1.0), |x| {
            let r = x[0].hypot(x[1]);
            (0.5..=0.75).contains(&r)
        })
        .unwrap()
    }

    #[test]
    fn adjoint_is_transpose() {
        let (w1, w2) = radial_example_weights();
        let mask = annulus_mask(48);
        let geom = SinogramGeometry::new(65, 90, 1.0).unwrap();
        for stencil in [Stencil::Bilinear, Stencil::Cubic, Stencil::SixPoint] {
            let op = DiscreteOperator::from_weights(&w1, &w2, &mask, geom, OperatorOptions { stencil, oversample: 2 })
                .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let g: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let psi = Sinogram::from_fn(geom, |p, th| (3.0 * p).sin() * (1.0 + th.vector()[0])).unwrap();
            let lhs = op.apply(&g).unwrap().inner(&psi).unwrap();
            let rhs = op.inner(&g, &op.adjoint(&psi).unwrap());
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} {rhs}");
        }
    }

    #[test]
    fn matches_line_quadrature_on_smooth_input() {
        let mask = RegionMask::from_predicate(GridSpec::square(96, 1.0), |x| x[0].hypot(x[1]) < 0.8).unwrap();
        let geom = SinogramGeometry::new(33, 16, 1.0).unwrap();
        let one = crate::xray::WeightField::one();
        let op = DiscreteOperator::from_weights(&one, &one, &mask, geom, OperatorOptions::default()).unwrap();
        let s = 0.15;
        let g = op.pack_fn(|x| (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * s * s)).exp(), |_| 0.0);
        let sino = op.apply(&g).unwrap();
        for j in 0..geom.ntheta {
            for i in 0..geom.np {
                let p = geom.p(i);
                let want = (2.0 * PI).sqrt() * s * (-p * p / (2.0 * s * s)).exp();
                assert!((sino.get(i, j) - want).abs() < 1e-4, "{} {}", sino.get(i, j), want);
            }
        }
    }
}

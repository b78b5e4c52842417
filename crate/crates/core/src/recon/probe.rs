use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::scenario::Region;
use crate::grid::sobolev::{sobolev_norm_field, sobolev_norm_sinogram, sobolev_weight_sinogram};
use crate::grid::{Domain, GridSpec, Phantom, Primitive, Profile, RadialProfile, ScalarField2D, SinogramGeometry};
use crate::xray::attenuated_xray;

use super::operator::{stencil_taps, DiscreteOperator, Stencil};

const STALL_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct KernelProbeOptions {
    /// Block size, i.e. number of candidate vectors.
    pub probes: usize,
    pub max_iter: usize,
    /// Stop once the lowest `σ` has dropped by less than `rel_tol·σ` over the
    /// last ten iterations. Below `1e-12` of the Rayleigh quotients of the random
    /// start `λ` counts as an exact null value.
    pub rel_tol: f64,
    /// Sobolev order of the data norm; `0` probes `A*A`.
    pub data_order: f64,
    pub seed: u64,
}

impl Default for KernelProbeOptions {
    fn default() -> Self {
        Self {
            probes: 4,
            max_iter: 300,
            rel_tol: 1e-3,
            data_order: 1.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NullCandidate {
    /// `‖Ag‖_{H^order(Z)} / ‖g‖_{L²}`.
    pub sigma: f64,
    /// `‖Nx − σ²x‖_T / σ²‖x‖_T`.
    pub residual: f64,
    /// `‖Π g1‖ / ‖g1‖` with `Π` the average over circles `|x| = r`.
    pub radial_correlation: f64,
    /// `‖g2‖ / ‖g‖`.
    pub g2_fraction: f64,
    #[serde(skip)]
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelProbe {
    pub sigma_min: f64,
    pub data_order: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Lowest `σ` after every iteration.
    pub history: Vec<f64>,
    pub candidates: Vec<NullCandidate>,
}

/// `A*ΛA g` with `Λ = (1 − ∂_p²)^order`.
fn normal(op: &DiscreteOperator, g: &[f64], order: f64) -> Result<Vec<f64>> {
    let ag = op.apply(g)?;
    let weighted = if order == 0.0 {
        ag
    } else {
        sobolev_weight_sinogram(&ag, order)
    };
    op.adjoint(&weighted)
}

/// `(1 − Δ)^{−order}` on the periodic grid, applied to each component of a
/// packed vector extended by zero off the mask.
struct Smoother {
    nx: usize,
    ny: usize,
    symbol: Vec<f64>,
    fx: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    fy: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
}

impl Smoother {
    fn new(op: &DiscreteOperator, order: f64) -> Self {
        Self::with_symbol(op, |k2| (1.0 + k2).powf(-order))
    }

    fn with_symbol(op: &DiscreteOperator, symbol_of: impl Fn(f64) -> f64) -> Self {
        let g = op.grid();
        let (nx, ny) = (g.nx, g.ny);
        let mode = |m: usize, n: usize, len: f64| {
            let k = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            2.0 * std::f64::consts::PI * k / len
        };
        let mut symbol = vec![0.0; nx * ny];
        for j in 0..ny {
            let k2 = mode(j, ny, g.domain.height());
            for i in 0..nx {
                let k1 = mode(i, nx, g.domain.width());
                symbol[j * nx + i] = symbol_of(k1 * k1 + k2 * k2) / (nx * ny) as f64;
            }
        }
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            symbol,
            fx: (planner.plan_fft_forward(nx), planner.plan_fft_inverse(nx)),
            fy: (planner.plan_fft_forward(ny), planner.plan_fft_inverse(ny)),
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let (fx, fy) = if inverse { (&self.fx.1, &self.fy.1) } else { (&self.fx.0, &self.fy.0) };
        for row in data.chunks_exact_mut(self.nx) {
            fx.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); self.ny];
        for i in 0..self.nx {
            for j in 0..self.ny {
                col[j] = data[j * self.nx + i];
            }
            fy.process(&mut col);
            for j in 0..self.ny {
                data[j * self.nx + i] = col[j];
            }
        }
    }

    fn apply(&self, cells: &[usize], v: &[f64]) -> Vec<f64> {
        let m = cells.len();
        let mut out = vec![0.0; v.len()];
        for c in 0..2 {
            let mut data = vec![Complex64::new(0.0, 0.0); self.nx * self.ny];
            for (k, &idx) in cells.iter().enumerate() {
                data[idx].re = v[c * m + k];
            }
            self.transform(&mut data, false);
            data.iter_mut().zip(&self.symbol).for_each(|(d, s)| *d *= s);
            self.transform(&mut data, true);
            for (k, &idx) in cells.iter().enumerate() {
                out[c * m + k] = data[idx].re;
            }
        }
        out
    }
}

type Block = Vec<Vec<f64>>;

/// `Σ_r coef[(r, col)]·basis[r]`.
fn combine(basis: &[&Vec<f64>], coef: &DMatrix<f64>, rows: std::ops::Range<usize>, col: usize) -> Vec<f64> {
    let mut out = vec![0.0; basis.first().map_or(0, |v| v.len())];
    for r in rows {
        let c = coef[(r, col)];
        if c != 0.0 {
            out.iter_mut().zip(basis[r]).for_each(|(o, x)| *o += c * x);
        }
    }
    out
}

/// Orthonormalizes `vs` against the orthonormal `fixed` and among
/// themselves by twice-repeated modified Gram–Schmidt, applying the same
/// operations to `images` when given. Vectors that lose all but `1e-10` of
/// their norm are dropped.
fn orthonormalize(op: &DiscreteOperator, fixed: &[&Vec<f64>], vs: Block, mut images: Option<(Block, &[&Vec<f64>])>) -> (Block, Block) {
    let mut out: Block = Vec::with_capacity(vs.len());
    let mut out_img: Block = Vec::new();
    for (k, mut v) in vs.into_iter().enumerate() {
        let mut img = images.as_mut().map(|(imgs, _)| std::mem::take(&mut imgs[k]));
        let start = op.norm(&v);
        if !(start > 0.0) || !start.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for (j, u) in fixed.iter().enumerate() {
                let c = op.inner(u, &v);
                v.iter_mut().zip(u.iter()).for_each(|(x, y)| *x -= c * y);
                if let (Some(img), Some((_, fimg))) = (img.as_mut(), images.as_ref()) {
                    img.iter_mut().zip(fimg[j].iter()).for_each(|(x, y)| *x -= c * y);
                }
            }
            for (j, u) in out.iter().enumerate() {
                let c = op.inner(u, &v);
                v.iter_mut().zip(u.iter()).for_each(|(x, y)| *x -= c * y);
                if let Some(img) = img.as_mut() {
                    img.iter_mut().zip(out_img[j].iter()).for_each(|(x, y)| *x -= c * y);
                }
            }
        }
        let norm = op.norm(&v);
        if norm <= 1e-10 * start {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        if let Some(mut img) = img {
            img.iter_mut().for_each(|x| *x /= norm);
            out_img.push(img);
        }
        out.push(v);
    }
    (out, out_img)
}

/// Smallest singular values of the operator from `L²(K)²` to `H^order(Z)`:
/// the lowest eigenpairs of the normal operator by locally optimal block
/// preconditioned conjugate gradients, preconditioned with `(1 − Δ)^{1/2−order}`.
pub fn kernel_probe(op: &DiscreteOperator, opts: KernelProbeOptions) -> Result<KernelProbe> {
    kernel_probe_from(op, opts, &[])
}

/// Carries a packed vector of `from` onto the mask of `to` by six-point
/// interpolation of both components.
pub fn transfer(from: &DiscreteOperator, to: &DiscreteOperator, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != from.dim() {
        return Err(Error::Dimension("vector does not match the source operator".into()));
    }
    let (g1, g2) = from.unpack(v)?;
    let grid = *from.grid();
    let interp = |f: &ScalarField2D, x: Point| {
        let mut taps = Vec::with_capacity(36);
        stencil_taps(&grid, Stencil::SixPoint, x, &mut taps);
        taps.iter().map(|&(i, w)| w * f.values()[i]).sum::<f64>()
    };
    Ok(to.pack_fn(|x| interp(&g1, x), |x| interp(&g2, x)))
}

/// Iterations between fresh applications of the normal operator to the
/// current block.
const REFRESH: usize = 25;

/// [`kernel_probe`] whose first Rayleigh–Ritz step runs over the given trial
/// vectors together with a block of smoothed random ones.
pub fn kernel_probe_from(op: &DiscreteOperator, opts: KernelProbeOptions, start: &[Vec<f64>]) -> Result<KernelProbe> {
    let b = opts.probes;
    if b == 0 || opts.max_iter == 0 {
        return Err(Error::InvalidParameter("probe counts must be positive".into()));
    }
    if op.dim() < 3 * b {
        return Err(Error::InvalidParameter("too few unknowns for the probe block".into()));
    }
    if start.iter().any(|v| v.len() != op.dim()) {
        return Err(Error::Dimension("start vector has the wrong length".into()));
    }
    let cells = op.cell_indices();
    let smoother = Smoother::new(op, opts.data_order - 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_of = |v: &[f64]| normal(op, v, opts.data_order);
    let apply_all = |vs: &Block| -> Result<Block> { vs.iter().map(|v| n_of(v)).collect() };

    let mut x: Block = start.to_vec();
    for _ in 0..b {
        let r: Vec<f64> = (0..op.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        x.push(smoother.apply(cells, &r));
    }
    x = orthonormalize(op, &[], x, None).0;
    if x.len() < b {
        return Err(Error::NoConvergence("could not form an independent start block".into()));
    }
    let mut nx = apply_all(&x)?;
    let mut p: Block = Vec::new();
    let mut np: Block = Vec::new();
    let mut lambda = vec![0.0; b];
    let mut history = Vec::new();
    let mut residuals = vec![f64::INFINITY; b];
    let mut converged = false;
    let mut iterations = 0;
    let mut floor = 0.0;

    for it in 0..=opts.max_iter {
        let w: Block = if it == 0 {
            Vec::new()
        } else {
            if it % REFRESH == 0 {
                nx = apply_all(&x)?;
            }
            let mut w = Vec::with_capacity(b);
            for k in 0..b {
                let r: Vec<f64> = nx[k].iter().zip(&x[k]).map(|(a, v)| a - lambda[k] * v).collect();
                let tr = smoother.apply(cells, &r);
                let scale = lambda[k].abs().max(floor).max(f64::MIN_POSITIVE) * op.inner(&x[k], &smoother.apply(cells, &x[k])).sqrt();
                residuals[k] = op.inner(&r, &tr).max(0.0).sqrt() / scale;
                w.push(tr);
            }
            iterations = it;
            history.push(lambda[0].max(0.0).sqrt());
            let settled = history.len() > STALL_WINDOW && {
                let then = history[history.len() - 1 - STALL_WINDOW];
                then - lambda[0].max(0.0).sqrt() <= opts.rel_tol * then
            };
            if settled || lambda[0] <= floor {
                converged = true;
                break;
            }
            if it == opts.max_iter {
                break;
            }
            w
        };
        // P ⟂ X, then W ⟂ (X, P); N is applied to the orthonormal W
        let xs: Vec<&Vec<f64>> = x.iter().collect();
        let nxs: Vec<&Vec<f64>> = nx.iter().collect();
        let (po, npo) = orthonormalize(op, &xs, std::mem::take(&mut p), Some((std::mem::take(&mut np), &nxs)));
        let fixed: Vec<&Vec<f64>> = x.iter().chain(po.iter()).collect();
        let wo = orthonormalize(op, &fixed, w, None).0;
        let nwo = apply_all(&wo)?;
        let basis: Vec<&Vec<f64>> = x.iter().chain(&wo).chain(&po).collect();
        let images: Vec<&Vec<f64>> = nx.iter().chain(&nwo).chain(&npo).collect();
        let m = basis.len();
        let mut h = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let a = 0.5 * (op.inner(basis[i], images[j]) + op.inner(images[i], basis[j]));
                h[(i, j)] = a;
                h[(j, i)] = a;
            }
        }
        let re = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| re.eigenvalues[i].total_cmp(&re.eigenvalues[j]));
        let mut y = DMatrix::zeros(m, b);
        for (c, &i) in order.iter().take(b).enumerate() {
            lambda[c] = re.eigenvalues[i];
            y.set_column(c, &re.eigenvectors.column(i));
        }
        if it > 0 {
            p = (0..b).map(|c| combine(&basis, &y, b..m, c)).collect();
            np = (0..b).map(|c| combine(&images, &y, b..m, c)).collect();
        } else {
            floor = 1e-12 * re.eigenvalues.iter().cloned().fold(0.0, f64::max);
        }
        let new_x: Block = (0..b).map(|c| combine(&basis, &y, 0..m, c)).collect();
        let new_nx: Block = (0..b).map(|c| combine(&images, &y, 0..m, c)).collect();
        x = new_x;
        nx = new_nx;
    }

    let candidates: Vec<NullCandidate> = (0..b)
        .map(|k| {
            let mut v = x[k].clone();
            let norm = op.norm(&v);
            if norm > 0.0 {
                v.iter_mut().for_each(|e| *e /= norm);
            }
            let (radial_correlation, g2_fraction) = null_diagnostics(op, &v);
            NullCandidate {
                sigma: lambda[k].max(0.0).sqrt(),
                residual: residuals[k],
                radial_correlation,
                g2_fraction,
                vector: v,
            }
        })
        .collect();
    Ok(KernelProbe {
        sigma_min: candidates[0].sigma,
        data_order: opts.data_order,
        iterations,
        converged,
        history,
        candidates,
    })
}

/// `(sin(kπ(r − r_in)/(r_out − r_in)), 0)` with `r = |x − center|`, zero
/// outside the shell.
pub fn radial_mode(op: &DiscreteOperator, center: Point, r_in: f64, r_out: f64, k: usize) -> Vec<f64> {
    op.pack_fn(
        |x| {
            let r = (x[0] - center[0]).hypot(x[1] - center[1]);
            if r > r_in && r < r_out {
                (k as f64 * std::f64::consts::PI * (r - r_in) / (r_out - r_in)).sin()
            } else {
                0.0
            }
        },
        |_| 0.0,
    )
}

/// `sin⁴(πt)·cos(kπt)` with `t = (r − r_in)/(r_out − r_in)`, zero outside the
/// shell; smooth across both rims.
pub fn shell_wave(r: f64, r_in: f64, r_out: f64, k: usize) -> f64 {
    if r <= r_in || r >= r_out {
        return 0.0;
    }
    let t = std::f64::consts::PI * (r - r_in) / (r_out - r_in);
    t.sin().powi(4) * (k as f64 * t).cos()
}

/// `(shell_wave(|x − center|), 0)`.
pub fn smooth_radial_mode(op: &DiscreteOperator, center: Point, r_in: f64, r_out: f64, k: usize) -> Vec<f64> {
    op.pack_fn(|x| shell_wave((x[0] - center[0]).hypot(x[1] - center[1]), r_in, r_out, k), |_| 0.0)
}

/// Radial modes `k = 1..=count`, the trial subspace for trapping studies.
pub fn radial_profiles(op: &DiscreteOperator, center: Point, r_in: f64, r_out: f64, count: usize) -> Vec<Vec<f64>> {
    (1..=count).map(|k| radial_mode(op, center, r_in, r_out, k)).collect()
}

/// Smallest and largest `|x − center|` over the unknowns, widened by half a cell.
pub fn radial_extent(op: &DiscreteOperator, center: Point) -> (f64, f64) {
    let half = 0.5 * op.grid().dx().max(op.grid().dy());
    let (lo, hi) = op
        .points()
        .iter()
        .map(|x| (x[0] - center[0]).hypot(x[1] - center[1]))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    ((lo - half).max(0.0), hi + half)
}

/// A random pair of localized plane waves `bump(|x − c|/ρ)·cos(2πn e·(x − c) + φ)`,
/// one per component, each bump lying inside the support.
pub fn smooth_sample(op: &DiscreteOperator, scale: usize, radius: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    let mask = op.mask();
    let d = op.grid().domain;
    let fits = |c: Point| {
        (0..16).all(|k| {
            let t = k as f64 * std::f64::consts::PI / 8.0;
            mask.contains(c) && mask.contains([c[0] + radius * t.cos(), c[1] + radius * t.sin()])
        })
    };
    let mut wave = || -> Result<(Point, Point, f64)> {
        for _ in 0..100_000 {
            let c = [rng.gen_range(d.xmin..d.xmax), rng.gen_range(d.ymin..d.ymax)];
            if fits(c) {
                let t = rng.gen_range(0.0..std::f64::consts::TAU);
                let k = 2.0 * std::f64::consts::PI * scale as f64;
                return Ok((c, [k * t.cos(), k * t.sin()], rng.gen_range(0.0..std::f64::consts::TAU)));
            }
        }
        Err(Error::InvalidParameter(format!("no bump of radius {radius} fits the support")))
    };
    let (a, b) = (wave()?, wave()?);
    let eval = |(c, k, phi): (Point, Point, f64), x: Point| {
        let y = [x[0] - c[0], x[1] - c[1]];
        Profile::bump(radius).eval(y[0].hypot(y[1])) * (k[0] * y[0] + k[1] * y[1] + phi).cos()
    };
    Ok(op.pack_fn(|x| eval(a, x), |x| eval(b, x)))
}

/// Radial correlation of the first component and the share of the second.
pub fn null_diagnostics(op: &DiscreteOperator, g: &[f64]) -> (f64, f64) {
    let m = op.cells();
    let (g1, g2) = g.split_at(m);
    let n1 = g1.iter().map(|v| v * v).sum::<f64>();
    let n2 = g2.iter().map(|v| v * v).sum::<f64>();
    let g2_fraction = if n1 + n2 > 0.0 { (n2 / (n1 + n2)).sqrt() } else { 0.0 };
    (radial_correlation(op, g1), g2_fraction)
}

/// `‖Π g‖/‖g‖` for one component on the operator's cells, `Π` averaging over
/// rings of width a quarter cell.
pub fn radial_correlation(op: &DiscreteOperator, g: &[f64]) -> f64 {
    let grid = op.grid();
    let width = 0.25 * grid.dx().min(grid.dy());
    let pts = op.points();
    let bin = |x: Point| (x[0].hypot(x[1]) / width) as usize;
    let nb = pts.iter().map(|&x| bin(x)).max().unwrap_or(0) + 1;
    let mut sum = vec![0.0; nb];
    let mut count = vec![0usize; nb];
    for (x, v) in pts.iter().zip(g) {
        let b = bin(*x);
        sum[b] += v;
        count[b] += 1;
    }
    let total: f64 = g.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return 0.0;
    }
    let proj: f64 = sum
        .iter()
        .zip(&count)
        .filter(|(_, c)| **c > 0)
        .map(|(s, c)| s * s / *c as f64)
        .sum();
    (proj / total).sqrt()
}

/// `(‖g1‖_{H^s} + ‖g2‖_{H^s}) / ‖Ag‖_{H^{s+3/2}(Z)}`.
pub fn stability_ratio(op: &DiscreteOperator, g: &[f64], s: f64) -> Result<f64> {
    if g.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroInput);
    }
    let (g1, g2) = op.unpack(g)?;
    let num = sobolev_norm_field(&g1, s)? + sobolev_norm_field(&g2, s)?;
    let den = sobolev_norm_sinogram(&op.apply(g)?, s + 1.5)?;
    Ok(if den > 0.0 { num / den } else { f64::INFINITY })
}

#[derive(Debug, Clone)]
pub struct HolderOptions {
    pub epsilons: Vec<f64>,
    /// Pairs drawn per scale.
    pub pairs: usize,
    /// Bumps per perturbation.
    pub bumps: usize,
    pub bump_radius: f64,
    /// Vary the attenuation as well as the source.
    pub vary_attenuation: bool,
    pub grid: GridSpec,
    pub geom: SinogramGeometry,
    pub h: f64,
    pub seed: u64,
}

impl Default for HolderOptions {
    fn default() -> Self {
        let domain = Domain::square(1.0);
        Self {
            epsilons: vec![1e-1, 1e-2, 1e-3],
            pairs: 3,
            bumps: 3,
            bump_radius: 0.1,
            vary_attenuation: true,
            grid: GridSpec::square(128, 1.0),
            geom: SinogramGeometry::new(129, 180, 1.0).expect("valid"),
            h: crate::grid::default_h(&domain),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderRow {
    pub epsilon: f64,
    /// `‖a1 − a2‖_{L²} + ‖f1 − f2‖_{L²}`.
    pub field_diff: f64,
    /// `‖X_{a1}f1 − X_{a2}f2‖_{H^{1/2}(Z)}`.
    pub data_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderTable {
    pub rows: Vec<HolderRow>,
    /// Slope of `log field_diff` against `log data_diff`.
    pub mu: Option<f64>,
    /// Intercept, `log C`.
    pub log_c: Option<f64>,
}

fn random_bumps(region: &Region, domain: &Domain, n: usize, radius: f64, rng: &mut ChaCha8Rng) -> Result<Phantom> {
    let fits = |c: Point| {
        region.contains(c)
            && (0..16).all(|k| {
                let t = k as f64 * std::f64::consts::PI / 8.0;
                region.contains([c[0] + radius * t.cos(), c[1] + radius * t.sin()])
            })
    };
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n {
        tries += 1;
        if tries > 100_000 {
            return Err(Error::InvalidParameter(format!("no bump of radius {radius} fits the region")));
        }
        let c = [
            rng.gen_range(domain.xmin..domain.xmax),
            rng.gen_range(domain.ymin..domain.ymax),
        ];
        if fits(c) {
            out.push(Primitive::new(Profile::bump(radius), c, rng.gen_range(-1.0..1.0)));
        }
    }
    Ok(Phantom::new(out))
}

fn plus(base: &Phantom, eps: f64, pert: &Phantom) -> Phantom {
    let mut p = base.primitives.clone();
    p.extend(pert.scaled(eps).primitives);
    Phantom::new(p)
}

/// Tabulates the Hölder-type stability of `(a, f) ↦ X_a f` around a background
/// under bump perturbations supported in `region`, and fits the exponent.
pub fn holder_probe(a0: &Phantom, f0: &Phantom, region: &Region, opts: &HolderOptions) -> Result<HolderTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let domain = opts.grid.domain;
    let mut rows = Vec::new();
    for &eps in &opts.epsilons {
        for _ in 0..opts.pairs {
            let draw = |rng: &mut ChaCha8Rng| random_bumps(region, &domain, opts.bumps, opts.bump_radius, rng);
            let (da1, df1, da2, df2) = (draw(&mut rng)?, draw(&mut rng)?, draw(&mut rng)?, draw(&mut rng)?);
            let (da1, da2) = if opts.vary_attenuation {
                (da1, da2)
            } else {
                (Phantom::default(), Phantom::default())
            };
            let (a1, f1) = (plus(a0, eps, &da1), plus(f0, eps, &df1));
            let (a2, f2) = (plus(a0, eps, &da2), plus(f0, eps, &df2));
            let diff = |p: &Phantom, q: &Phantom| -> Result<f64> {
                let d = plus(p, -1.0, q);
                Ok(ScalarField2D::sample(opts.grid, &d)?.l2_norm())
            };
            let field_diff = eps * (diff(&da1, &da2)? + diff(&df1, &df2)?);
            let x1 = attenuated_xray(&a1, &f1, opts.geom, opts.h)?;
            let x2 = attenuated_xray(&a2, &f2, opts.geom, opts.h)?;
            let data_diff = sobolev_norm_sinogram(&x1.axpy(-1.0, &x2)?, 0.5)?;
            rows.push(HolderRow {
                epsilon: eps,
                field_diff,
                data_diff,
            });
        }
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.field_diff > 0.0 && r.data_diff > 0.0)
        .map(|r| (r.data_diff.ln(), r.field_diff.ln()))
        .collect();
    let (mu, log_c) = fit_line(&pts).map_or((None, None), |(s, c)| (Some(s), Some(c)));
    Ok(HolderTable { rows, mu, log_c })
}

/// Least-squares slope and intercept; `None` without spread in `x`.
fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

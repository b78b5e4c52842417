use crate::error::Result;
use crate::geometry::{add_scaled, Direction, Point};
use crate::grid::quadrature::{line_cells, support_chord, Cells};
use crate::grid::{Field, Sinogram, SinogramGeometry};

use super::weight::Weight;

/// `∫_0^∞ a(x + tθ) dt`.
pub fn beam_transform(a: &dyn Field, x: Point, theta: Point, h: f64) -> f64 {
    let mut cells = Cells::default();
    line_cells(&[a], x, theta, 0.0, f64::INFINITY, h, &mut cells);
    cells
        .t
        .iter()
        .zip(&cells.w)
        .map(|(&t, &w)| w * a.eval(add_scaled(x, t, theta)))
        .sum()
}

/// `u(x, θ) = ∫_{−∞}^0 exp(−∫_t^0 a(x + sθ) ds) f(x + tθ) dt`, the signal
/// arriving at `x` in direction `θ` from behind.
pub fn transport_solution(a: &dyn Field, f: &dyn Field, x: Point, theta: Point, h: f64) -> f64 {
    let Some((f0, _)) = f.support().and_then(|d| d.chord(x, theta)) else {
        return 0.0;
    };
    if f0 >= 0.0 {
        return 0.0;
    }
    let mut cells = Cells::default();
    line_cells(&[a, f], x, theta, f0, 0.0, h, &mut cells);
    let mut exponent = 0.0;
    let mut u = 0.0;
    for k in (0..cells.len()).rev() {
        let y = add_scaled(x, cells.t[k], theta);
        let w = cells.w[k];
        let av = a.eval(y);
        let fv = f.eval(y);
        if fv != 0.0 {
            u += (-(exponent + 0.5 * av * w)).exp() * fv * w;
        }
        exponent += av * w;
    }
    u
}

/// Per-cell samples of one attenuated march: `e[k] = e^{−Ba}` and
/// `c[k] = e^{−Ba}u` at the cell midpoints.
#[derive(Debug, Default)]
pub(crate) struct March {
    pub cells: Cells,
    pub e: Vec<f64>,
    pub c: Vec<f64>,
    /// `Σ e_k f_k w_k`, the attenuated line integral.
    pub total: f64,
}

impl March {
    /// Runs over the union chord of `a`, `f` and `extra`, split at all their breakpoints.
    pub fn run(&mut self, a: &dyn Field, f: &dyn Field, extra: &[&dyn Field], z: Point, theta: Point, h: f64) {
        let mut fields: Vec<&dyn Field> = Vec::with_capacity(2 + extra.len());
        fields.push(a);
        fields.push(f);
        fields.extend_from_slice(extra);
        line_cells(&fields, z, theta, f64::NEG_INFINITY, f64::INFINITY, h, &mut self.cells);
        self.fill(a, f, z, theta);
    }

    pub fn fill(&mut self, a: &dyn Field, f: &dyn Field, z: Point, theta: Point) {
        let n = self.cells.len();
        self.e.clear();
        self.c.clear();
        self.e.resize(n, 0.0);
        self.c.resize(n, 0.0);
        let mut fv = vec![0.0; n];
        let mut tail = 0.0;
        for k in (0..n).rev() {
            let y = add_scaled(z, self.cells.t[k], theta);
            let w = self.cells.w[k];
            let av = a.eval(y);
            fv[k] = f.eval(y);
            self.e[k] = (-(tail + 0.5 * av * w)).exp();
            tail += av * w;
        }
        let mut acc = 0.0;
        for k in 0..n {
            let s = self.e[k] * fv[k] * self.cells.w[k];
            self.c[k] = acc + 0.5 * s;
            acc += s;
        }
        self.total = acc;
    }
}

/// `X_a f` on the directed line `z + tθ`.
pub fn attenuated_line(a: &dyn Field, f: &dyn Field, z: Point, theta: Point, h: f64) -> f64 {
    let Some((f0, _)) = f.support().and_then(|d| d.chord(z, theta)) else {
        return 0.0;
    };
    let mut cells = Cells::default();
    line_cells(&[a, f], z, theta, f0, f64::INFINITY, h, &mut cells);
    let mut tail = 0.0;
    let mut total = 0.0;
    for k in (0..cells.len()).rev() {
        let y = add_scaled(z, cells.t[k], theta);
        let w = cells.w[k];
        let av = a.eval(y);
        let fv = f.eval(y);
        if fv != 0.0 {
            total += (-(tail + 0.5 * av * w)).exp() * fv * w;
        }
        tail += av * w;
    }
    total
}

/// `I_w g` on the directed line `z + tθ`.
pub fn weighted_line(w: &dyn Weight, g: &dyn Field, z: Point, theta: Direction, h: f64) -> f64 {
    let mut cells = Cells::default();
    let v = theta.vector();
    line_cells(&[g], z, v, f64::NEG_INFINITY, f64::INFINITY, h, &mut cells);
    let mut total = 0.0;
    for (&t, &dt) in cells.t.iter().zip(&cells.w) {
        let y = add_scaled(z, t, v);
        let gv = g.eval(y);
        if gv != 0.0 {
            total += w.eval(y, theta) * gv * dt;
        }
    }
    total
}

/// Foot point `pθ⊥` of the line `(p, ϑ)`.
#[inline]
pub fn foot(p: f64, theta: Direction) -> Point {
    let n = theta.perp();
    [p * n[0], p * n[1]]
}

/// `X_a f` sampled on the sinogram grid.
pub fn attenuated_xray(a: &dyn Field, f: &dyn Field, geom: SinogramGeometry, h: f64) -> Result<Sinogram> {
    Sinogram::from_fn(geom, |p, th| attenuated_line(a, f, foot(p, th), th.vector(), h))
}

/// `I_w g` sampled on the sinogram grid.
pub fn weighted_xray(w: &dyn Weight, g: &dyn Field, geom: SinogramGeometry, h: f64) -> Result<Sinogram> {
    Sinogram::from_fn(geom, |p, th| weighted_line(w, g, foot(p, th), th, h))
}

/// `I_{w1} g1 + I_{w2} g2`.
pub fn combined_forward(
    w1: &dyn Weight,
    w2: &dyn Weight,
    g1: &dyn Field,
    g2: &dyn Field,
    geom: SinogramGeometry,
    h: f64,
) -> Result<Sinogram> {
    Sinogram::from_fn(geom, |p, th| {
        let z = foot(p, th);
        weighted_line(w1, g1, z, th, h) + weighted_line(w2, g2, z, th, h)
    })
}

/// `X_{a2} f2 − X_{a1} f1` next to its decomposition `I_w δa + X_{a2} δf`
/// with `w = −e^{−B a2} u1`.
#[derive(Debug, Clone)]
pub struct NonlinearDifference {
    pub difference: Sinogram,
    pub decomposition: Sinogram,
}

impl NonlinearDifference {
    /// Sup-norm mismatch between the two sides.
    pub fn residual(&self) -> f64 {
        self.difference
            .values()
            .iter()
            .zip(self.decomposition.values())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub fn nonlinear_difference(
    a1: &dyn Field,
    f1: &dyn Field,
    a2: &dyn Field,
    f2: &dyn Field,
    geom: SinogramGeometry,
    h: f64,
) -> Result<NonlinearDifference> {
    use rayon::prelude::*;
    let pairs: Vec<(f64, f64)> = (0..geom.ntheta)
        .into_par_iter()
        .flat_map_iter(|j| {
            let th = geom.direction(j);
            (0..geom.np).map(move |i| difference_line(a1, f1, a2, f2, foot(geom.p(i), th), th.vector(), h))
        })
        .collect();
    let (diff, dec): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(NonlinearDifference {
        difference: Sinogram::new(geom, diff)?,
        decomposition: Sinogram::new(geom, dec)?,
    })
}

fn difference_line(
    a1: &dyn Field,
    f1: &dyn Field,
    a2: &dyn Field,
    f2: &dyn Field,
    z: Point,
    theta: Point,
    h: f64,
) -> (f64, f64) {
    let mut cells = Cells::default();
    if support_chord(&[a1, f1, a2, f2], z, theta).is_none() {
        return (0.0, 0.0);
    }
    line_cells(&[a1, f1, a2, f2], z, theta, f64::NEG_INFINITY, f64::INFINITY, h, &mut cells);
    let n = cells.len();
    let mut e1 = vec![0.0; n];
    let mut e2 = vec![0.0; n];
    let mut vals = vec![[0.0; 4]; n];
    let (mut t1, mut t2) = (0.0, 0.0);
    for k in (0..n).rev() {
        let y = add_scaled(z, cells.t[k], theta);
        let w = cells.w[k];
        let v = [a1.eval(y), f1.eval(y), a2.eval(y), f2.eval(y)];
        e1[k] = (-(t1 + 0.5 * v[0] * w)).exp();
        e2[k] = (-(t2 + 0.5 * v[2] * w)).exp();
        t1 += v[0] * w;
        t2 += v[2] * w;
        vals[k] = v;
    }
    let (mut x1, mut x2, mut dec) = (0.0, 0.0, 0.0);
    let mut c1 = 0.0;
    for k in 0..n {
        let w = cells.w[k];
        let [av1, fv1, av2, fv2] = vals[k];
        let s1 = e1[k] * fv1 * w;
        // e^{−Ba1}u1 at the midpoint, then u1 itself
        let u1 = (c1 + 0.5 * s1) / e1[k];
        c1 += s1;
        x1 += s1;
        x2 += e2[k] * fv2 * w;
        dec += -e2[k] * u1 * (av2 - av1) * w + e2[k] * (fv2 - fv1) * w;
    }
    (x2 - x1, dec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Primitive, Profile};

    fn disk(amp: f64) -> Primitive {
        Primitive::centered(Profile::disk(1.0), amp)
    }

    #[test]
    fn beam_of_unit_disk() {
        let a = disk(1.0);
        for ang in [0.0, 1.0, 2.5] {
            let th = Direction::from_angle(ang).vector();
            assert!((beam_transform(&a, [0.0, 0.0], th, 1e-3) - 1.0).abs() < 1e-12);
        }
        assert!((beam_transform(&a, [-2.0, 0.0], [1.0, 0.0], 1e-3) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn transport_of_disk_without_attenuation() {
        let f = disk(1.0);
        let zero = crate::grid::ZeroField;
        let x = [0.3, -0.4];
        let th = Direction::from_angle(0.7);
        let v = th.vector();
        let tx = v[0] * x[0] + v[1] * x[1];
        let px = th.perp()[0] * x[0] + th.perp()[1] * x[1];
        let exact = tx + (1.0 - px * px).sqrt();
        assert!((transport_solution(&zero, &f, x, v, 1e-3) - exact).abs() < 1e-12);
    }

    #[test]
    fn attenuated_disk_profile() {
        let c = 0.8;
        let (a, f) = (disk(c), disk(1.0));
        for p in [0.0f64, 0.5, 0.9] {
            let l = (1.0 - p * p).sqrt();
            let exact = (1.0 - (-2.0 * c * l).exp()) / c;
            let th = Direction::from_angle(0.3);
            let v = attenuated_line(&a, &f, foot(p, th), th.vector(), 1e-3);
            assert!((v - exact).abs() < 1e-6, "p={p}: {v} vs {exact}");
        }
    }

    #[test]
    fn march_cumulative_matches_line() {
        let a = Primitive::centered(Profile::gaussian(0.5), 0.6);
        let f = Primitive::new(Profile::bump(0.8), [0.2, 0.1], 1.0);
        let th = Direction::from_angle(1.1);
        let z = foot(0.15, th);
        let mut m = March::default();
        m.run(&a, &f, &[], z, th.vector(), 1e-3);
        let direct = attenuated_line(&a, &f, z, th.vector(), 1e-3);
        let summed: f64 = (0..m.cells.len())
            .map(|k| m.e[k] * f.eval(add_scaled(z, m.cells.t[k], th.vector())) * m.cells.w[k])
            .sum();
        assert!((summed - direct).abs() < 1e-6);
        assert!((m.total - summed).abs() < 1e-14);
    }
}

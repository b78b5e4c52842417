//! Plane geometry shared by every operator: points, unit directions on S¹
//! and bounding disks used to clip lines to supports.

use std::f64::consts::PI;

pub type Point = [f64; 2];

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// `v⊥ = (−v₂, v₁)`.
#[inline]
pub fn perp(v: Point) -> Point {
    [-v[1], v[0]]
}

#[inline]
pub fn add_scaled(x: Point, t: f64, v: Point) -> Point {
    [x[0] + t * v[0], x[1] + t * v[1]]
}

/// A unit vector θ = (cos ϑ, sin ϑ) carrying its polar angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    angle: f64,
    v: Point,
}

impl Direction {
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { angle, v: [c, s] }
    }

    /// Normalizes `v`; panics on the zero vector.
    pub fn from_vector(v: Point) -> Self {
        let n = norm(v);
        assert!(n > 0.0, "direction from zero vector");
        Self {
            angle: v[1].atan2(v[0]),
            v: [v[0] / n, v[1] / n],
        }
    }

    #[inline]
    pub fn angle(&self) -> f64 {
        self.angle
    }

    #[inline]
    pub fn vector(&self) -> Point {
        self.v
    }

    #[inline]
    pub fn perp(&self) -> Point {
        perp(self.v)
    }

    /// −θ, i.e. the reversed direction.
    pub fn reversed(&self) -> Self {
        Self {
            angle: self.angle + PI,
            v: [-self.v[0], -self.v[1]],
        }
    }
}

/// Closed disk used as a support bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    /// Parameter interval `[t0, t1]` where `x + tθ` lies in the disk.
    pub fn chord(&self, x: Point, theta: Point) -> Option<(f64, f64)> {
        let d = [self.center[0] - x[0], self.center[1] - x[1]];
        let tc = dot(d, theta);
        let off2 = dot(d, d) - tc * tc;
        let r2 = self.radius * self.radius;
        if off2 >= r2 {
            return None;
        }
        let half = (r2 - off2).sqrt();
        Some((tc - half, tc + half))
    }

    pub fn contains(&self, x: Point) -> bool {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        dot(d, d) <= self.radius * self.radius
    }

    /// Disk containing both `self` and `other`.
    pub fn union(&self, other: &Disk) -> Disk {
        let d = [other.center[0] - self.center[0], other.center[1] - self.center[1]];
        let dist = norm(d);
        if dist + other.radius <= self.radius {
            return *self;
        }
        if dist + self.radius <= other.radius {
            return *other;
        }
        let radius = 0.5 * (dist + self.radius + other.radius);
        let shift = radius - self.radius;
        let center = if dist > 0.0 {
            add_scaled(self.center, shift / dist, d)
        } else {
            self.center
        };
        Disk { center, radius }
    }
}

/// Union of optional support bounds.
pub fn union_support(a: Option<Disk>, b: Option<Disk>) -> Option<Disk> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.union(&b)),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Parameter values where `x + tθ` crosses the circle `|y − c| = r`.
pub fn circle_crossings(center: Point, r: f64, x: Point, theta: Point, out: &mut Vec<f64>) {
    if let Some((t0, t1)) = Disk::new(center, r).chord(x, theta) {
        out.push(t0);
        out.push(t1);
    }
}

//! Ball and lens volumes, uniform ball sampling and periodic distances in
//! dimensions one and two.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Spatial dimension. Only the line and the plane are supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    pub fn from_usize(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            other => Err(Error::invalid(format!("unsupported dimension d={other}"))),
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_usize() as f64
    }

    /// Volume of the unit ball: 2 on the line, pi in the plane.
    pub fn unit_ball_volume(self) -> f64 {
        match self {
            Dim::One => 2.0,
            Dim::Two => PI,
        }
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_usize())
    }
}

/// A location in R^d. Unused trailing coordinates are kept at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    coords: [f64; 2],
    dim: Dim,
}

impl Point {
    pub fn d1(x: f64) -> Self {
        Point {
            coords: [x, 0.0],
            dim: Dim::One,
        }
    }

    pub fn d2(x: f64, y: f64) -> Self {
        Point {
            coords: [x, y],
            dim: Dim::Two,
        }
    }

    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        match coords {
            [x] => Ok(Point::d1(*x)),
            [x, y] => Ok(Point::d2(*x, *y)),
            _ => Err(Error::invalid(format!(
                "points must have 1 or 2 coordinates, got {}",
                coords.len()
            ))),
        }
    }

    pub fn origin(dim: Dim) -> Self {
        Point {
            coords: [0.0, 0.0],
            dim,
        }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim.as_usize()]
    }

    /// First coordinate; the half-space H is `{first() <= 0}`.
    pub fn first(&self) -> f64 {
        self.coords[0]
    }

    pub fn offset(&self, delta: &[f64]) -> Point {
        let mut p = *self;
        for (c, d) in p.coords.iter_mut().zip(delta) {
            *c += d;
        }
        p
    }

    pub fn scaled(&self, factor: f64) -> Point {
        let mut p = *self;
        for c in p.coords.iter_mut() {
            *c *= factor;
        }
        p
    }

    pub fn sub(&self, other: &Point) -> [f64; 2] {
        [
            self.coords[0] - other.coords[0],
            self.coords[1] - other.coords[1],
        ]
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let [dx, dy] = self.sub(other);
        dx.hypot(dy)
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        let mut p = *self;
        for (c, o) in p.coords.iter_mut().zip(other.coords.iter()) {
            *c = 0.5 * (*c + o);
        }
        p
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("radius must be positive and finite, got {r}")))
    }
}

/// Volume of a ball of radius `r`: `2r` in d=1 and `pi r^2` in d=2.
pub fn ball_volume(r: f64, dim: Dim) -> Result<f64> {
    check_radius(r)?;
    Ok(ball_volume_unchecked(r, dim))
}

#[inline]
pub(crate) fn ball_volume_unchecked(r: f64, dim: Dim) -> f64 {
    match dim {
        Dim::One => 2.0 * r,
        Dim::Two => PI * r * r,
    }
}

/// Volume of `B(0, r) ∩ B(z, r)` for `|z| = s`.
pub fn lens_volume(s: f64, r: f64, dim: Dim) -> Result<f64> {
    check_radius(r)?;
    if !(s >= 0.0) {
        return Err(Error::invalid(format!("separation must be nonnegative, got {s}")));
    }
    Ok(lens_volume_unchecked(s, r, dim))
}

#[inline]
pub(crate) fn lens_volume_unchecked(s: f64, r: f64, dim: Dim) -> f64 {
    if s >= 2.0 * r {
        return 0.0;
    }
    match dim {
        Dim::One => 2.0 * r - s,
        Dim::Two => {
            // two circular segments of half-chord height r - s/2
            let c = (s / (2.0 * r)).clamp(0.0, 1.0);
            let area = 2.0 * r * r * c.acos() - 0.5 * s * (4.0 * r * r - s * s).max(0.0).sqrt();
            area.max(0.0)
        }
    }
}

/// Uniform point in the closed ball `B(center, r)` (Euclidean, no wrapping).
pub fn sample_uniform_ball<R: Rng + ?Sized>(center: &Point, r: f64, rng: &mut R) -> Result<Point> {
    check_radius(r)?;
    Ok(sample_uniform_ball_unchecked(center, r, rng))
}

#[inline]
pub(crate) fn sample_uniform_ball_unchecked<R: Rng + ?Sized>(
    center: &Point,
    r: f64,
    rng: &mut R,
) -> Point {
    let delta = uniform_ball_offset(center.dim(), r, rng);
    center.offset(&delta)
}

#[inline]
pub(crate) fn uniform_ball_offset<R: Rng + ?Sized>(dim: Dim, r: f64, rng: &mut R) -> [f64; 2] {
    match dim {
        Dim::One => [r * (2.0 * rng.random::<f64>() - 1.0), 0.0],
        Dim::Two => {
            let rho = r * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            [rho * theta.cos(), rho * theta.sin()]
        }
    }
}

/// Periodic square domain of side `L`, identified with `(-L/2, L/2]^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Torus {
    side: f64,
    dim: Dim,
}

impl Torus {
    pub fn new(side: f64, dim: Dim) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::invalid(format!("torus side must be positive, got {side}")));
        }
        Ok(Torus { side, dim })
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim.as_usize() as i32)
    }

    /// Largest possible wrap-around distance, `L sqrt(d) / 2`.
    pub fn max_distance(&self) -> f64 {
        0.5 * self.side * self.dim.as_f64().sqrt()
    }

    /// Maps one coordinate into `(-L/2, L/2]`.
    #[inline]
    pub fn wrap(&self, x: f64) -> f64 {
        let half = 0.5 * self.side;
        let mut y = (x + half).rem_euclid(self.side) - half;
        if y <= -half {
            y += self.side;
        }
        y
    }

    /// Canonical representative of a point.
    pub fn normalize(&self, p: &Point) -> Point {
        let mut q = *p;
        for c in q.coords.iter_mut().take(self.dim.as_usize()) {
            *c = self.wrap(*c);
        }
        q
    }

    /// Builds a normalized point from raw coordinates.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        let p = Point::new(coords)?;
        if p.dim() != self.dim {
            return Err(Error::invalid("point dimension differs from torus dimension"));
        }
        Ok(self.normalize(&p))
    }

    /// Shortest wrapped displacement from `b` to `a`, per axis.
    #[inline]
    pub fn displacement(&self, a: &Point, b: &Point) -> [f64; 2] {
        let [dx, dy] = a.sub(b);
        match self.dim {
            Dim::One => [self.wrap(dx), 0.0],
            Dim::Two => [self.wrap(dx), self.wrap(dy)],
        }
    }

    #[inline]
    pub(crate) fn distance_unchecked(&self, a: &Point, b: &Point) -> f64 {
        let [dx, dy] = self.displacement(a, b);
        dx.hypot(dy)
    }
}

/// Minimum wrap-around Euclidean distance between two points of a torus.
pub fn torus_distance(a: &Point, b: &Point, torus: &Torus) -> Result<f64> {
    if a.dim() != torus.dim() || b.dim() != torus.dim() {
        return Err(Error::invalid("dimension mismatch between points and torus"));
    }
    Ok(torus.distance_unchecked(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ball_volume_examples() {
        assert_eq!(ball_volume(1.0, Dim::One).unwrap(), 2.0);
        assert!((ball_volume(0.033, Dim::One).unwrap() - 0.066).abs() < 1e-15);
        assert!((ball_volume(1.0, Dim::Two).unwrap() - 3.14159265).abs() < 1e-8);
        assert!(ball_volume(0.0, Dim::One).is_err());
        assert!(ball_volume(-1.0, Dim::Two).is_err());
        assert!(Dim::from_usize(3).is_err());
    }

    #[test]
    fn lens_volume_examples() {
        assert_eq!(lens_volume(0.0, 0.5, Dim::One).unwrap(), 1.0);
        assert!((lens_volume(0.3, 0.5, Dim::One).unwrap() - 0.7).abs() < 1e-15);
        // 10^7-sample indicator integration gave 1.22839 +- 0.00088
        assert!((lens_volume(1.0, 1.0, Dim::Two).unwrap() - 1.2283697).abs() < 1e-6);
        assert_eq!(lens_volume(2.0, 1.0, Dim::Two).unwrap(), 0.0);
        assert_eq!(lens_volume(3.0, 1.0, Dim::One).unwrap(), 0.0);
        assert!((lens_volume(0.0, 1.0, Dim::Two).unwrap() - PI).abs() < 1e-12);
        assert!(lens_volume(-0.1, 1.0, Dim::One).is_err());
    }

    #[test]
    fn lens_volume_is_monotone() {
        for dim in [Dim::One, Dim::Two] {
            let mut prev = f64::INFINITY;
            for i in 0..=300 {
                let s = i as f64 * 0.01;
                let v = lens_volume(s, 1.0, dim).unwrap();
                assert!(v <= prev + 1e-15);
                prev = v;
            }
            assert_eq!(prev, 0.0);
        }
    }

    #[test]
    fn torus_examples() {
        let t1 = Torus::new(20.0, Dim::One).unwrap();
        let a = t1.point(&[9.9]).unwrap();
        let b = t1.point(&[-9.9]).unwrap();
        assert!((torus_distance(&a, &b, &t1).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(torus_distance(&a, &a, &t1).unwrap(), 0.0);

        let t2 = Torus::new(8.0, Dim::Two).unwrap();
        let a = t2.point(&[3.9, 0.0]).unwrap();
        let b = t2.point(&[-3.9, 0.0]).unwrap();
        assert!((torus_distance(&a, &b, &t2).unwrap() - 0.2).abs() < 1e-12);
        assert!(torus_distance(&Point::d1(0.0), &a, &t2).is_err());
    }

    #[test]
    fn torus_normalization_range() {
        let t = Torus::new(20.0, Dim::One).unwrap();
        assert_eq!(t.wrap(10.0), 10.0);
        assert_eq!(t.wrap(-10.0), 10.0);
        assert!((t.wrap(30.5) + 9.5).abs() < 1e-12);
        for x in [-55.3, -10.0, 0.0, 9.999, 10.0, 10.001, 123.4] {
            let y = t.wrap(x);
            assert!(y > -10.0 && y <= 10.0, "{x} -> {y}");
        }
    }

    #[test]
    fn uniform_ball_support_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [Dim::One, Dim::Two] {
            let c = match dim {
                Dim::One => Point::d1(1.5),
                Dim::Two => Point::d2(1.5, -2.0),
            };
            let n = 100_000;
            let mut sum = [0.0; 2];
            let mut inner = 0usize;
            for _ in 0..n {
                let p = sample_uniform_ball(&c, 0.7, &mut rng).unwrap();
                let dist = p.distance(&c);
                assert!(dist <= 0.7 + 1e-12);
                if dist <= 0.35 {
                    inner += 1;
                }
                let d = p.sub(&c);
                sum[0] += d[0];
                sum[1] += d[1];
            }
            // per-coordinate variance of a uniform ball: r^2/3 (d=1), r^2/4 (d=2)
            let var = match dim {
                Dim::One => 0.49 / 3.0,
                Dim::Two => 0.49 / 4.0,
            };
            let se = (var / n as f64).sqrt();
            for s in sum.iter().take(dim.as_usize()) {
                assert!((s / n as f64).abs() < 3.0 * se);
            }
            let p = 0.5f64.powi(dim.as_usize() as i32);
            let frac = inner as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((frac - p).abs() < 3.0 * se, "{frac} vs {p}");
        }
    }
}

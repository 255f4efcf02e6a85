//! Points, balls, half-spaces and the three conformal point maps.
//!
//! Every map here is an involution. Dimensions are limited to 1, 2 and 3;
//! a [`Point`] stores three coordinates and ignores the ones above its
//! dimension (they are kept at zero).

use crate::error::{Error, Result};

/// Relative distance to an inversion center below which a point is treated
/// as the center itself.
pub const CENTER_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    dim: usize,
    coords: [f64; 3],
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        let dim = coords.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        let mut c = [0.0; 3];
        c[..dim].copy_from_slice(coords);
        Ok(Self { dim, coords: c })
    }

    /// The origin of `R^dim`.
    pub fn origin(dim: usize) -> Self {
        assert!((1..=3).contains(&dim), "dimension must be 1, 2 or 3");
        Self { dim, coords: [0.0; 3] }
    }

    /// Unit vector along coordinate `axis`.
    pub fn axis(dim: usize, axis: usize) -> Self {
        let mut p = Self::origin(dim);
        p.coords[axis] = 1.0;
        p
    }

    pub(crate) fn from_array(dim: usize, coords: [f64; 3]) -> Self {
        let mut c = coords;
        for v in c.iter_mut().skip(dim) {
            *v = 0.0;
        }
        Self { dim, coords: c }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub(crate) fn raw(&self) -> [f64; 3] {
        self.coords
    }

    pub fn dot(&self, other: &Point) -> f64 {
        (0..self.dim).map(|k| self.coords[k] * other.coords[k]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    pub fn scale(&self, s: f64) -> Point {
        let mut c = self.coords;
        c.iter_mut().for_each(|v| *v *= s);
        Point { dim: self.dim, coords: c }
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut c = self.coords;
        for k in 0..3 {
            c[k] += rhs.coords[k];
        }
        Point { dim: self.dim, coords: c }
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut c = self.coords;
        for k in 0..3 {
            c[k] -= rhs.coords[k];
        }
        Point { dim: self.dim, coords: c }
    }
}

/// Open ball `{x : |x - center| < radius}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn unit(dim: usize) -> Self {
        Self { center: Point::origin(dim), radius: 1.0 }
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dist(&self.center) < self.radius
    }
}

/// Open half-space `{x : x . normal > offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    normal: Point,
    offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Point, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "half-space normal must be a unit vector, |e| = {n}"
            )));
        }
        if !offset.is_finite() {
            return Err(Error::InvalidParameter("non-finite offset".into()));
        }
        Ok(Self { normal, offset })
    }

    /// Builds a half-space from any non-zero direction, normalizing it.
    pub fn from_direction(direction: Point, offset: f64) -> Result<Self> {
        let n = direction.norm();
        if n == 0.0 {
            return Err(Error::InvalidParameter("zero normal".into()));
        }
        Self::new(direction.scale(1.0 / n), offset)
    }

    /// `{x : x_N > 0}`.
    pub fn upper(dim: usize) -> Self {
        Self { normal: Point::axis(dim, dim - 1), offset: 0.0 }
    }

    pub fn normal(&self) -> Point {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dot(&self.normal) > self.offset
    }

    /// Coordinate axis and sign when the normal is `±e_k`.
    pub fn axis_aligned(&self) -> Option<(usize, f64)> {
        let c = self.normal.coords();
        let k = (0..c.len()).find(|&k| c[k].abs() == 1.0)?;
        if c.iter().enumerate().all(|(j, v)| j == k || *v == 0.0) {
            Some((k, c[k]))
        } else {
            None
        }
    }
}

/// Locus of an inversion or a reflection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Ball(Ball),
    HalfSpace(HalfSpace),
}

impl Region {
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Region::Ball(b) => b.contains(x),
            Region::HalfSpace(h) => h.contains(x),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Ball(b) => b.dim(),
            Region::HalfSpace(h) => h.dim(),
        }
    }

    /// The involution attached to the region.
    pub fn map(&self, x: &Point) -> Result<Point> {
        match self {
            Region::Ball(b) => invert_point(b, x),
            Region::HalfSpace(h) => Ok(reflect_point(h, x)),
        }
    }
}

impl From<Ball> for Region {
    fn from(b: Ball) -> Self {
        Region::Ball(b)
    }
}

impl From<HalfSpace> for Region {
    fn from(h: HalfSpace) -> Self {
        Region::HalfSpace(h)
    }
}

/// Inversion through the sphere `∂B`: `a + r^2 (x - a) / |x - a|^2`.
pub fn invert_point(b: &Ball, x: &Point) -> Result<Point> {
    let d = *x - b.center;
    let d2 = d.norm_sq();
    if d2.sqrt() < CENTER_EPS * b.radius {
        return Err(Error::Domain(format!(
            "inversion is undefined at its center {:?}",
            b.center.coords()
        )));
    }
    Ok(b.center + d.scale(b.radius * b.radius / d2))
}

/// Reflection through the hyperplane `∂H`: `x + 2 (t - x.e) e`.
pub fn reflect_point(h: &HalfSpace, x: &Point) -> Point {
    let s = 2.0 * (h.offset - x.dot(&h.normal));
    *x + h.normal.scale(s)
}

/// The pole `(0, ..., 0, -1)` of the Cayley-type map.
pub fn cayley_pole(dim: usize) -> Point {
    let mut p = Point::origin(dim);
    p.coords[dim - 1] = -1.0;
    p
}

/// Cayley-type map exchanging the unit ball and `{x_N > 0}`:
/// `(2x' / |x - e|^2, (1 - |x|^2) / |x - e|^2)` with `e = (0, ..., 0, -1)`.
pub fn cayley_point(x: &Point) -> Result<Point> {
    let dim = x.dim();
    let e = cayley_pole(dim);
    let d2 = (*x - e).norm_sq();
    if d2.sqrt() < CENTER_EPS {
        return Err(Error::Domain("Cayley map is undefined at its pole".into()));
    }
    let mut c = [0.0; 3];
    for k in 0..dim - 1 {
        c[k] = 2.0 * x.coords[k] / d2;
    }
    c[dim - 1] = (1.0 - x.norm_sq()) / d2;
    Ok(Point::from_array(dim, c))
}

/// The Cayley-type map is the inversion in the sphere of radius `√2`
/// around its pole; the lifted operator uses this ball.
pub fn cayley_ball(dim: usize) -> Ball {
    Ball { center: cayley_pole(dim), radius: std::f64::consts::SQRT_2 }
}

use crate::error::{Error, Result};
use crate::geometry::Point;

/// A uniform, cell-centered grid: sample `i` sits at `origin + (i + 1/2) h`,
/// so the covered box is `[origin, origin + n h]` on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    origin: [f64; 3],
    spacing: f64,
    extent: [usize; 3],
}

impl Grid {
    pub fn new(origin: Point, spacing: f64, extent: &[usize]) -> Result<Self> {
        let dim = origin.dim();
        if extent.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "extent has {} axes but origin has {dim}",
                extent.len()
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if extent.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter("extent must be positive".into()));
        }
        let mut e = [1usize; 3];
        e[..dim].copy_from_slice(extent);
        Ok(Self { dim, origin: origin.raw(), spacing, extent: e })
    }

    /// Grid covering `[min_k, max_k]` with `points_k` cells per axis. The
    /// spacing must come out equal on every axis.
    pub fn from_bounds(min: &[f64], max: &[f64], points: &[usize]) -> Result<Self> {
        if min.len() != max.len() || min.len() != points.len() {
            return Err(Error::InvalidParameter("grid bounds have mismatched lengths".into()));
        }
        if points.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParameter("extent must be positive".into()));
        }
        let h0 = (max[0] - min[0]) / points[0] as f64;
        for k in 1..min.len() {
            let h = (max[k] - min[k]) / points[k] as f64;
            if (h - h0).abs() > 1e-12 * h0.abs() {
                return Err(Error::InvalidParameter(format!(
                    "grid spacing differs between axes: {h0} vs {h}"
                )));
            }
        }
        Self::new(Point::new(min)?, h0, points)
    }

    /// The cube `[lo, hi]^dim` with `n` cells per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::from_bounds(&vec![lo; dim], &vec![hi; dim], &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Point {
        Point::from_array(self.dim, self.origin)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent[..self.dim]
    }

    pub(crate) fn extent3(&self) -> [usize; 3] {
        self.extent
    }

    pub(crate) fn origin3(&self) -> [f64; 3] {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Upper corner of the covered box.
    pub fn upper(&self) -> Point {
        let mut c = self.origin;
        for k in 0..self.dim {
            c[k] += self.extent[k] as f64 * self.spacing;
        }
        Point::from_array(self.dim, c)
    }

    pub(crate) fn unravel(&self, flat: usize) -> [usize; 3] {
        let e = self.extent;
        [flat / (e[1] * e[2]), (flat / e[2]) % e[1], flat % e[2]]
    }

    pub(crate) fn ravel(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.extent[1] + idx[1]) * self.extent[2] + idx[2]
    }

    pub(crate) fn coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + (i as f64 + 0.5) * self.spacing
    }

    /// Sample location of a flat index.
    pub fn point(&self, flat: usize) -> Point {
        let idx = self.unravel(flat);
        let mut c = [0.0; 3];
        for k in 0..self.dim {
            c[k] = self.coord(k, idx[k]);
        }
        Point::from_array(self.dim, c)
    }

    /// Same grid with doubled spacing; odd trailing cells are dropped.
    pub fn coarsen(&self) -> Result<Grid> {
        let mut e = self.extent;
        for v in e.iter_mut().take(self.dim) {
            *v /= 2;
            if *v == 0 {
                return Err(Error::InvalidParameter("grid too small to coarsen".into()));
            }
        }
        Ok(Grid { dim: self.dim, origin: self.origin, spacing: 2.0 * self.spacing, extent: e })
    }

    /// Whether `x` lies in the closed covered box.
    pub fn covers(&self, x: &Point) -> bool {
        let c = x.raw();
        (0..self.dim).all(|k| {
            let lo = self.origin[k];
            let hi = lo + self.extent[k] as f64 * self.spacing;
            c[k] >= lo && c[k] <= hi
        })
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

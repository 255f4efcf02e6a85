//! Grid-sampled functions and the lifted conformal operators acting on them.

mod grid;
mod io;
mod ops;
mod spec;

pub use grid::Grid;
pub use ops::{
    apply_cayley, apply_inversion, apply_reflection, invert_with_weight, split_in_out, LiftedOp,
};
pub use spec::ExtremizerSpec;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point, Region};
use crate::params::KernelParams;

/// Interpolation weights this close to 0 or 1 are snapped, so that maps
/// carrying sample points onto sample points reproduce values exactly.
const SNAP: f64 = 1e-9;

/// A real function on `R^N` sampled at the cells of a [`Grid`].
///
/// Off the grid the field is zero unless it carries an analytic tail from
/// the extremizer family.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    tail: Option<ExtremizerSpec>,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite field value".into()));
        }
        Ok(Self { grid, values, tail: None })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.len()], tail: None }
    }

    /// Samples `f` at every cell center.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        let values = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        Self { grid, values, tail: None }
    }

    /// Cell averages of `f` from `sub^N` midpoint subsamples per cell.
    pub fn from_fn_averaged<F>(grid: Grid, sub: usize, f: F) -> Self
    where
        F: Fn(&Point) -> f64 + Sync,
    {
        let sub = sub.max(1);
        let dim = grid.dim();
        let h = grid.spacing();
        let count = sub.pow(dim as u32);
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let c = grid.point(i).raw();
                let mut acc = 0.0;
                for s in 0..count {
                    let mut q = c;
                    let mut rem = s;
                    for v in q.iter_mut().take(dim) {
                        let j = rem % sub;
                        rem /= sub;
                        *v += ((j as f64 + 0.5) / sub as f64 - 0.5) * h;
                    }
                    acc += f(&Point::from_array(dim, q));
                }
                acc / count as f64
            })
            .collect();
        Self { grid, values, tail: None }
    }

    /// Samples a family member and keeps it as the analytic tail.
    pub fn from_spec(grid: Grid, spec: ExtremizerSpec) -> Result<Self> {
        if spec.dim() != grid.dim() {
            return Err(Error::InvalidParameter("spec and grid dimensions differ".into()));
        }
        let mut f = Self::from_fn(grid, |x| spec.eval(x));
        f.tail = Some(spec);
        Ok(f)
    }

    pub fn with_tail(mut self, tail: Option<ExtremizerSpec>) -> Self {
        self.tail = tail;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> Option<&ExtremizerSpec> {
        self.tail.as_ref()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Value at an arbitrary point by cubic convolution interpolation
    /// (Keys, `a = -1/2`) inside the covered box, falling back to linear
    /// weights on axes where the four-point stencil would leave the grid;
    /// the analytic tail (or zero) outside the box.
    pub fn sample(&self, x: &Point) -> f64 {
        if !self.grid.covers(x) {
            return self.tail.map_or(0.0, |t| t.eval(x));
        }
        let dim = self.dim();
        let ext = self.grid.extent3();
        let org = self.grid.origin3();
        let h = self.grid.spacing();
        let c = x.raw();
        // per axis: first stencil index and up to four weights
        let mut first = [0usize; 3];
        let mut weights = [[1.0f64, 0.0, 0.0, 0.0]; 3];
        let mut width = [1usize; 3];
        for k in 0..dim {
            let n = ext[k];
            let u = ((c[k] - org[k]) / h - 0.5).clamp(0.0, (n - 1) as f64);
            let mut i0 = u.floor() as usize;
            if i0 + 1 >= n {
                i0 = n.saturating_sub(2);
            }
            let mut t = u - i0 as f64;
            if t < SNAP {
                t = 0.0;
            } else if t > 1.0 - SNAP {
                t = 1.0;
            }
            if n < 2 {
                first[k] = 0;
                weights[k][0] = 1.0;
            } else if t == 0.0 || t == 1.0 {
                first[k] = i0 + t as usize;
                weights[k][0] = 1.0;
            } else if i0 >= 1 && i0 + 2 < n {
                let (t2, t3) = (t * t, t * t * t);
                first[k] = i0 - 1;
                weights[k] = [
                    0.5 * (-t3 + 2.0 * t2 - t),
                    0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
                    0.5 * (-3.0 * t3 + 4.0 * t2 + t),
                    0.5 * (t3 - t2),
                ];
                width[k] = 4;
            } else {
                first[k] = i0;
                weights[k][0] = 1.0 - t;
                weights[k][1] = t;
                width[k] = 2;
            }
        }
        let mut acc = 0.0;
        for a in 0..width[0] {
            for b in 0..width[1] {
                for d in 0..width[2] {
                    let w = weights[0][a] * weights[1][b] * weights[2][d];
                    if w != 0.0 {
                        acc += w * self.values[self.grid.ravel([first[0] + a, first[1] + b, first[2] + d])];
                    }
                }
            }
        }
        acc
    }

    /// Like [`Field::sample`], but beyond the box a field without a tail is
    /// continued along rays from the box midpoint as `|x - m|^(-weight)`,
    /// starting from its value where the ray leaves the sampled cells.
    pub fn sample_decaying(&self, x: &Point, weight: f64) -> f64 {
        if self.tail.is_some() || self.grid.covers(x) {
            return self.sample(x);
        }
        let dim = self.dim();
        let lo = self.grid.origin3();
        let hi = self.grid.upper().raw();
        let h = self.grid.spacing();
        let c = x.raw();
        let mut mid = [0.0; 3];
        let mut s = f64::INFINITY;
        for k in 0..dim {
            mid[k] = 0.5 * (lo[k] + hi[k]);
            let half = 0.5 * (hi[k] - lo[k]) - 0.5 * h;
            let d = (c[k] - mid[k]).abs();
            if d > 0.0 {
                s = s.min(half / d);
            }
        }
        if !(s.is_finite() && s > 0.0 && s < 1.0) {
            return self.sample(x);
        }
        let mut b = [0.0; 3];
        for k in 0..dim {
            b[k] = mid[k] + s * (c[k] - mid[k]);
        }
        let edge = self.sample(&Point::from_array(dim, b));
        edge * s.powf(weight)
    }

    /// `Σ |f|^p h^N`.
    pub fn power_mass(&self, p: f64) -> f64 {
        self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn scale(&self, c: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
            tail: self.tail.map(|t| ExtremizerSpec { alpha: c * t.alpha, ..t }),
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), tail: None }
    }

    fn zip(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect();
        Ok(Field { grid: self.grid, values, tail: None })
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip(other, |a, b| a - b)
    }

    /// Zero outside `region` (judged at cell centers).
    pub fn restrict(&self, region: &Region) -> Field {
        let values = (0..self.grid.len())
            .map(|i| if region.contains(&self.grid.point(i)) { self.values[i] } else { 0.0 })
            .collect();
        Field { grid: self.grid, values, tail: None }
    }

    /// Block average onto the grid of doubled spacing.
    pub fn coarsen(&self) -> Result<Field> {
        let cg = self.grid.coarsen()?;
        let dim = self.dim();
        let blocks = 1usize << dim;
        let values = (0..cg.len())
            .map(|ci| {
                let cidx = cg.unravel(ci);
                let mut acc = 0.0;
                for b in 0..blocks {
                    let mut idx = [0usize; 3];
                    for k in 0..dim {
                        idx[k] = 2 * cidx[k] + (b >> k & 1);
                    }
                    acc += self.values[self.grid.ravel(idx)];
                }
                acc / blocks as f64
            })
            .collect();
        Ok(Field { grid: cg, values, tail: self.tail })
    }

    /// Samples another field (with its tail) at this grid's cell centers.
    pub fn resample(&self, grid: Grid) -> Field {
        let values = (0..grid.len()).into_par_iter().map(|i| self.sample(&grid.point(i))).collect();
        Field { grid, values, tail: self.tail }
    }

    /// Mass-weighted centroid of `|f|^p`.
    pub fn centroid(&self, p: f64) -> Result<Point> {
        let mut acc = [0.0; 3];
        let mut tot = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let w = v.abs().powf(p);
            if w == 0.0 {
                continue;
            }
            let x = self.grid.point(i).raw();
            for k in 0..3 {
                acc[k] += w * x[k];
            }
            tot += w;
        }
        if tot == 0.0 {
            return Err(Error::ZeroField);
        }
        acc.iter_mut().for_each(|a| *a /= tot);
        Ok(Point::from_array(self.dim(), acc))
    }
}

/// `(Σ |f_i|^p h^N)^(1/p)`.
pub fn lp_norm(f: &Field, p: f64) -> f64 {
    f.power_mass(p).powf(1.0 / p)
}

/// Samples `α (β + |x - y|^2)^(-(2N - λ)/2)` and keeps it as the tail.
pub fn make_extremizer(spec: ExtremizerSpec, kp: &KernelParams, grid: Grid) -> Result<Field> {
    if grid.dim() != kp.dim() {
        return Err(Error::InvalidParameter("grid and kernel dimensions differ".into()));
    }
    let s = ExtremizerSpec::optimizer(spec.alpha, spec.beta, spec.center, kp)?;
    Field::from_spec(grid, s)
}

//! Half-mass balls and half-spaces for the density `|f|^power`.
//!
//! Cell coverage is exact in one dimension and along a coordinate axis.
//! Otherwise each cell is split into `3^N` sub-cells whose coverage ramps
//! linearly across a band one sub-cell wide, which keeps the mass profile
//! continuous and monotone so bisection can hit any tolerance.

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::geometry::{Point, Region};

/// Relative mass tolerance of the bisections.
pub const MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    /// radius or offset
    pub value: f64,
    /// `mass(value) - total/2`
    pub imbalance: f64,
    pub total: f64,
}

fn weights(f: &Field, power: f64) -> Vec<f64> {
    let vol = f.grid().cell_volume();
    f.values().iter().map(|v| v.abs().powf(power) * vol).collect()
}

fn sub_offsets(dim: usize, h: f64) -> Vec<[f64; 3]> {
    let count = 3usize.pow(dim as u32);
    (0..count)
        .map(|s| {
            let mut o = [0.0; 3];
            let mut rem = s;
            for v in o.iter_mut().take(dim) {
                *v = ((rem % 3) as f64 - 1.0) * h / 3.0;
                rem /= 3;
            }
            o
        })
        .collect()
}

/// Covered fraction of an interval of width `h` centered at `c` by `(lo, hi)`.
fn interval_fraction(c: f64, h: f64, lo: f64, hi: f64) -> f64 {
    let a = (c - 0.5 * h).max(lo);
    let b = (c + 0.5 * h).min(hi);
    ((b - a) / h).clamp(0.0, 1.0)
}

/// Coverage of a cell from the signed distances of its sub-cells.
fn ramp_fraction<F: Fn([f64; 3]) -> f64>(center: [f64; 3], subs: &[[f64; 3]], band: f64, signed: F) -> f64 {
    let mut acc = 0.0;
    for o in subs {
        let q = [center[0] + o[0], center[1] + o[1], center[2] + o[2]];
        acc += (signed(q) / band + 0.5).clamp(0.0, 1.0);
    }
    acc / subs.len() as f64
}

pub(crate) struct Profile {
    centers: Vec<[f64; 3]>,
    weights: Vec<f64>,
    dim: usize,
    h: f64,
    subs: Vec<[f64; 3]>,
    pub(crate) total: f64,
}

impl Profile {
    pub(crate) fn new(f: &Field, power: f64) -> Result<Self> {
        let w = weights(f, power);
        let on_grid: f64 = w.iter().sum();
        if !(on_grid > 0.0) {
            return Err(Error::ZeroField);
        }
        // a known tail contributes its off-grid mass, all of it outside any
        // ball that stays on the grid
        let total = f
            .tail()
            .and_then(|t| t.power_mass(power))
            .filter(|&m| m.is_finite() && m > on_grid)
            .unwrap_or(on_grid);
        let grid = f.grid();
        let (centers, weights): (Vec<_>, Vec<_>) = (0..grid.len())
            .filter(|&i| w[i] > 0.0)
            .map(|i| (grid.point(i).raw(), w[i]))
            .unzip();
        Ok(Self { centers, weights, dim: grid.dim(), h: grid.spacing(), subs: sub_offsets(grid.dim(), grid.spacing()), total })
    }

    pub(crate) fn ball(&self, a: &[f64; 3], r: f64) -> f64 {
        let h = self.h;
        let half_diag = 0.5 * h * (self.dim as f64).sqrt() + h / 3.0;
        let dist = |q: [f64; 3]| {
            ((q[0] - a[0]).powi(2) + (q[1] - a[1]).powi(2) + (q[2] - a[2]).powi(2)).sqrt()
        };
        let mut acc = 0.0;
        for (c, w) in self.centers.iter().zip(&self.weights) {
            if self.dim == 1 {
                acc += w * interval_fraction(c[0], h, a[0] - r, a[0] + r);
                continue;
            }
            let d = dist(*c);
            if d + half_diag <= r {
                acc += w;
            } else if d - half_diag < r {
                acc += w * ramp_fraction(*c, &self.subs, h / 3.0, |q| r - dist(q));
            }
        }
        acc
    }

    pub(crate) fn grid_total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub(crate) fn above(&self, e: &[f64; 3], t: f64) -> f64 {
        let h = self.h;
        let axis = (0..self.dim).find(|&k| (e[k].abs() - 1.0).abs() < 1e-15);
        let half_diag = 0.5 * h * (self.dim as f64).sqrt() + h / 3.0;
        let mut acc = 0.0;
        for (c, w) in self.centers.iter().zip(&self.weights) {
            if let Some(k) = axis {
                let frac = if e[k] > 0.0 {
                    interval_fraction(c[k], h, t, f64::INFINITY)
                } else {
                    interval_fraction(c[k], h, f64::NEG_INFINITY, -t)
                };
                acc += w * frac;
                continue;
            }
            let s = c[0] * e[0] + c[1] * e[1] + c[2] * e[2] - t;
            if s >= half_diag {
                acc += w;
            } else if s > -half_diag {
                acc += w * ramp_fraction(*c, &self.subs, h / 3.0, |q| q[0] * e[0] + q[1] * e[1] + q[2] * e[2] - t);
            }
        }
        acc
    }
}

/// Bisection for an increasing `mass(x)` on `[lo, hi]` to `total/2`.
fn bisect<F: Fn(f64) -> f64>(mass: F, mut lo: f64, mut hi: f64, total: f64) -> Result<Bisection> {
    let target = 0.5 * total;
    let tol = MASS_TOL * total;
    if mass(hi) < target - tol || mass(lo) > target + tol {
        return Err(Error::Bracketing(format!(
            "half of the mass {total:.6e} is not bracketed by [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let m = mass(mid);
        if (m - target).abs() <= tol {
            return Ok(Bisection { value: mid, imbalance: m - target, total });
        }
        if m < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let m = mass(mid);
    if (m - target).abs() <= tol {
        Ok(Bisection { value: mid, imbalance: m - target, total })
    } else {
        Err(Error::Bracketing(format!("mass profile jumps across one half at {mid}")))
    }
}

/// Mass of `|f|^power` on the grid inside the ball `B_r(a)`.
pub fn ball_mass(f: &Field, power: f64, a: &Point, r: f64) -> Result<f64> {
    Ok(Profile::new(f, power)?.ball(&a.raw(), r))
}

/// Mass of `|f|^power` in `{x·e > t}`.
pub fn halfspace_mass(f: &Field, power: f64, e: &Point, t: f64) -> Result<f64> {
    Ok(Profile::new(f, power)?.above(&e.raw(), t))
}

/// Radius of the ball about `a` holding half the mass of `|f|^power`,
/// counting the off-grid mass of a known tail as lying outside the ball.
pub fn ball_mass_radius(f: &Field, power: f64, a: &Point) -> Result<Bisection> {
    if a.dim() != f.dim() {
        return Err(Error::InvalidParameter("center and field dimensions differ".into()));
    }
    let prof = Profile::new(f, power)?;
    let ar = a.raw();
    let grid = f.grid();
    let (lo, hi) = (grid.origin().raw(), grid.upper().raw());
    let far = (0..f.dim())
        .map(|k| (ar[k] - lo[k]).abs().max((ar[k] - hi[k]).abs()).powi(2))
        .sum::<f64>()
        .sqrt()
        + grid.spacing();
    bisect(|r| prof.ball(&ar, r), 0.0, far, prof.total)
}

/// Offset `t` with half the grid mass of `|f|^power` in `{x·e > t}`; a
/// known tail is ignored.
pub fn halfspace_mass_offset(f: &Field, power: f64, e: &Point) -> Result<Bisection> {
    if e.dim() != f.dim() {
        return Err(Error::InvalidParameter("direction and field dimensions differ".into()));
    }
    let n = e.norm();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("direction must be a unit vector, |e| = {n}")));
    }
    let mut prof = Profile::new(f, power)?;
    prof.total = prof.weights.iter().sum();
    let er = e.raw();
    let grid = f.grid();
    let reach = grid.origin().norm().max(grid.upper().norm()) + grid.spacing();
    // mass above t decreases in t, so bisect on -t
    let b = bisect(|s| prof.above(&er, -s), -reach, reach, prof.total)?;
    Ok(Bisection { value: -b.value, ..b })
}

/// Fraction of the mass of `|f|^power` inside `region`, with the same
/// coverage and tail conventions as the two bisections.
pub fn region_fraction(f: &Field, power: f64, region: &Region) -> Result<f64> {
    let mut prof = Profile::new(f, power)?;
    let inside = match region {
        Region::Ball(b) => prof.ball(&b.center().raw(), b.radius()),
        Region::HalfSpace(hs) => {
            prof.total = prof.weights.iter().sum();
            prof.above(&hs.normal().raw(), hs.offset())
        }
    };
    Ok(inside / prof.total)
}

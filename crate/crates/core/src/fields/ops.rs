use rayon::prelude::*;

use super::{Field, ExtremizerSpec};
use crate::error::Result;
use crate::geometry::{cayley_ball, invert_point, reflect_point, Ball, HalfSpace, Point, Region, CENTER_EPS};
use crate::params::KernelParams;

/// A lifted conformal involution acting on fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiftedOp {
    Inversion(Ball),
    Reflection(HalfSpace),
    Cayley,
}

impl LiftedOp {
    pub fn apply(&self, f: &Field, kp: &KernelParams) -> Field {
        match self {
            LiftedOp::Inversion(b) => invert_with_weight(b, f, kp.weight()),
            LiftedOp::Reflection(h) => apply_reflection(h, f),
            LiftedOp::Cayley => apply_cayley(f, kp),
        }
    }
}

impl From<Region> for LiftedOp {
    fn from(r: Region) -> Self {
        match r {
            Region::Ball(b) => LiftedOp::Inversion(b),
            Region::HalfSpace(h) => LiftedOp::Reflection(h),
        }
    }
}

/// `(r/|x-a|)^weight f(Θx)`. Images beyond the box use the power-law
/// continuation of [`Field::sample_decaying`]; samples within `1e-14 r` of
/// the center take the limit value carried by the tail, or zero.
pub fn invert_with_weight(b: &Ball, f: &Field, weight: f64) -> Field {
    let grid = *f.grid();
    let a = b.center();
    let r = b.radius();
    let tail = f.tail().and_then(|t| t.inverted(b, weight));
    let center_value = match f.tail() {
        Some(t) if (2.0 * t.exponent - weight).abs() <= 1e-12 => t.alpha * r.powf(-weight),
        _ => 0.0,
    };
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let d = x.dist(&a);
            if d < CENTER_EPS * r {
                return center_value;
            }
            match invert_point(b, &x) {
                Ok(y) => (r / d).powf(weight) * f.sample_decaying(&y, weight),
                Err(_) => center_value,
            }
        })
        .collect();
    Field { grid, values, tail }
}

/// Lifted inversion with the functional's conformal weight `2N - λ`.
pub fn apply_inversion(b: &Ball, f: &Field, kp: &KernelParams) -> Field {
    invert_with_weight(b, f, kp.weight())
}

/// `f ∘ Θ_H`.
pub fn apply_reflection(h: &HalfSpace, f: &Field) -> Field {
    let grid = *f.grid();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| f.sample(&reflect_point(h, &grid.point(i))))
        .collect();
    Field { grid, values, tail: f.tail().map(|t| t.reflected(h)) }
}

/// Lifted Cayley-type transform `(√2/|x-e|)^(2N-λ) f(𝓑x)`.
pub fn apply_cayley(f: &Field, kp: &KernelParams) -> Field {
    invert_with_weight(&cayley_ball(kp.dim()), f, kp.weight())
}

/// Signed distance from the region's boundary, positive inside.
fn depth(region: &Region, x: &Point) -> f64 {
    match region {
        Region::Ball(b) => b.radius() - x.dist(&b.center()),
        Region::HalfSpace(h) => h.normal().dot(x) - h.offset(),
    }
}

/// Fraction of the cell around `x` lying in the region, from a sub-lattice
/// of midpoints; cells the boundary cannot reach return 0 or 1 directly.
fn inside_fraction(region: &Region, x: &Point, h: f64) -> f64 {
    let dim = x.dim();
    let d = depth(region, x);
    let reach = 0.5 * h * (dim as f64).sqrt();
    if d >= reach {
        return 1.0;
    }
    if d <= -reach {
        return 0.0;
    }
    let sub = [32usize, 8, 4][dim - 1];
    let total = sub.pow(dim as u32);
    let c = x.raw();
    let mut hits = 0usize;
    for idx in 0..total {
        let mut rem = idx;
        let mut y = c;
        for yk in y.iter_mut().take(dim) {
            let k = rem % sub;
            rem /= sub;
            *yk += h * ((k as f64 + 0.5) / sub as f64 - 0.5);
        }
        if depth(region, &Point::from_array(dim, y)) > 0.0 {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

/// The splices `f^i` (f inside the region, Θf outside) and `f^o`
/// (Θf inside, f outside). Cells cut by the boundary blend the two values
/// by the fraction of the cell on each side.
pub fn split_in_out(region: &Region, f: &Field, kp: &KernelParams) -> Result<(Field, Field)> {
    let tf = LiftedOp::from(*region).apply(f, kp);
    let grid = *f.grid();
    let h = grid.spacing();
    let p = kp.p();
    let fractions: Vec<f64> =
        (0..grid.len()).into_par_iter().map(|i| inside_fraction(region, &grid.point(i), h)).collect();
    let mut fi = Vec::with_capacity(grid.len());
    let mut fo = Vec::with_capacity(grid.len());
    let mut inside_mass = 0.0;
    let mut total = 0.0;
    for (i, &t) in fractions.iter().enumerate() {
        let w = f.values[i].abs().powf(p);
        total += w;
        inside_mass += t * w;
        let (a, b) = (f.values[i], tf.values[i]);
        fi.push(t * a + (1.0 - t) * b);
        fo.push(t * b + (1.0 - t) * a);
    }
    if total > 0.0 && (inside_mass / total - 0.5).abs() > 1e-3 {
        log::warn!(
            "region does not bisect the p-mass: inside fraction {:.6}",
            inside_mass / total
        );
    }
    // outside a ball the splice agrees with one of the two fields all the way out
    let (ti, to): (Option<ExtremizerSpec>, Option<ExtremizerSpec>) = match region {
        Region::Ball(_) => (tf.tail, f.tail),
        Region::HalfSpace(_) => (None, None),
    };
    Ok((
        Field { grid, values: fi, tail: ti },
        Field { grid, values: fo, tail: to },
    ))
}

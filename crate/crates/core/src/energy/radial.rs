use super::kernel::kappa_1d;
use super::sum::pairwise_sum;
use super::{EnergyResult, Quadrature, EST_FLOOR};
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::geometry::Point;
use crate::params::KernelParams;
use crate::quadrature::gauss_legendre;

/// A radial profile, piecewise constant on `[i dr, (i+1) dr)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    spacing: f64,
    values: Vec<f64>,
}

impl RadialProfile {
    pub fn new(spacing: f64, values: Vec<f64>) -> Result<Self> {
        if !(spacing > 0.0) || values.is_empty() {
            return Err(Error::InvalidParameter("radial profile needs dr > 0 and samples".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite profile value".into()));
        }
        Ok(Self { spacing, values })
    }

    /// Samples `f(r)` at the bin midpoints.
    pub fn from_fn<F: Fn(f64) -> f64>(spacing: f64, count: usize, f: F) -> Result<Self> {
        Self::new(spacing, (0..count).map(|i| f((i as f64 + 0.5) * spacing)).collect())
    }

    /// Reads the profile of a grid field along the first axis from `center`,
    /// rejecting fields that are not radial about it.
    pub fn from_field(f: &Field, center: &Point, spacing: f64, count: usize) -> Result<Self> {
        let dim = f.dim();
        let dirs: Vec<Point> = match dim {
            1 => vec![Point::new(&[-1.0])?],
            2 => vec![Point::new(&[0.0, 1.0])?, Point::new(&[-0.6, 0.8])?],
            _ => vec![Point::new(&[0.0, 0.0, 1.0])?, Point::new(&[0.0, -0.6, 0.8])?],
        };
        let axis = Point::axis(dim, 0);
        let scale = f.max_abs().max(f64::MIN_POSITIVE);
        let mut values = Vec::with_capacity(count);
        for i in 0..count {
            let r = (i as f64 + 0.5) * spacing;
            let v = f.sample(&(*center + axis.scale(r)));
            for d in &dirs {
                let w = f.sample(&(*center + d.scale(r)));
                if (w - v).abs() > 1e-2 * scale {
                    return Err(Error::Unsupported(format!("field is not radial at r = {r}")));
                }
            }
            values.push(v);
        }
        Self::new(spacing, values)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn coarsen(&self) -> Option<Self> {
        let n = self.values.len() / 2;
        (n > 0).then(|| Self {
            spacing: 2.0 * self.spacing,
            values: (0..n).map(|i| 0.5 * (self.values[2 * i] + self.values[2 * i + 1])).collect(),
        })
    }
}

/// Average of `|x - y|^-λ` over the sphere `|y| = s`, for `|x| = r`, in `R^3`.
pub fn angular_average(lam: f64, r: f64, s: f64) -> f64 {
    if (lam - 2.0).abs() < 1e-14 {
        ((r + s) / (r - s).abs()).ln() / (2.0 * r * s)
    } else {
        ((r + s).powf(2.0 - lam) - (r - s).abs().powf(2.0 - lam)) / ((2.0 - lam) * 2.0 * r * s)
    }
}

/// Antiderivatives of `φ(w)` and `w φ(w)`, where `φ(w) = w^q/q` (or `ln w` at q = 0).
fn prims(q: f64, w: f64) -> (f64, f64) {
    if w <= 0.0 {
        return (0.0, 0.0);
    }
    if q == 0.0 {
        let l = w.ln();
        (w * l - w, 0.5 * w * w * l - 0.25 * w * w)
    } else {
        (w.powf(q + 1.0) / (q * (q + 1.0)), w.powf(q + 2.0) / (q * (q + 2.0)))
    }
}

/// `∫_b^c s [φ(r+s) - φ(|r-s|)] ds`.
fn inner(q: f64, r: f64, b: f64, c: f64) -> f64 {
    let plus = {
        let (a0h, a1h) = prims(q, r + c);
        let (a0l, a1l) = prims(q, r + b);
        (a1h - r * a0h) - (a1l - r * a0l)
    };
    let seg_above = |lo: f64, hi: f64| {
        let (a0h, a1h) = prims(q, hi - r);
        let (a0l, a1l) = prims(q, lo - r);
        (r * a0h + a1h) - (r * a0l + a1l)
    };
    let seg_below = |lo: f64, hi: f64| {
        let (a0h, a1h) = prims(q, r - lo);
        let (a0l, a1l) = prims(q, r - hi);
        (r * a0h - a1h) - (r * a0l - a1l)
    };
    let minus = if c <= r {
        seg_below(b, c)
    } else if b >= r {
        seg_above(b, c)
    } else {
        seg_below(b, r) + seg_above(r, c)
    };
    plus - minus
}

fn radial_value(fr: &RadialProfile, gr: &RadialProfile, kp: &KernelParams) -> Result<f64> {
    let lam = kp.lambda();
    let dr = fr.spacing;
    let n = fr.values.len();
    match kp.dim() {
        1 => {
            let partial: Vec<f64> = (0..n)
                .map(|i| {
                    let fi = fr.values[i];
                    if fi == 0.0 {
                        return 0.0;
                    }
                    let row: f64 = (0..n)
                        .map(|j| gr.values[j] * (kappa_1d(i as i64 - j as i64, lam) + kappa_1d((i + j + 1) as i64, lam)))
                        .sum();
                    fi * row
                })
                .collect();
            Ok(2.0 * dr.powf(2.0 - lam) * pairwise_sum(&partial))
        }
        3 => {
            let q = 2.0 - lam;
            let rule = gauss_legendre(8);
            let partial: Vec<f64> = (0..n)
                .map(|i| {
                    let fi = fr.values[i];
                    if fi == 0.0 {
                        return 0.0;
                    }
                    let a = i as f64 * dr;
                    let row: f64 = (0..n)
                        .map(|j| {
                            let (b, c) = (j as f64 * dr, (j + 1) as f64 * dr);
                            let w: f64 = rule
                                .0
                                .iter()
                                .zip(rule.1.iter())
                                .map(|(x, wt)| {
                                    let r = a + 0.5 * dr * (x + 1.0);
                                    wt * r * inner(q, r, b, c)
                                })
                                .sum::<f64>()
                                * 0.5
                                * dr;
                            gr.values[j] * 0.5 * w
                        })
                        .sum();
                    fi * row
                })
                .collect();
            let four_pi = 4.0 * std::f64::consts::PI;
            Ok(four_pi * four_pi * pairwise_sum(&partial))
        }
        d => Err(Error::Unsupported(format!("radial energy is implemented for N = 1, 3; got {d}"))),
    }
}

/// `I_λ[f, g]` for radial `f, g` through the exact angular average.
pub fn energy_radial(fr: &RadialProfile, gr: &RadialProfile, kp: &KernelParams) -> Result<EnergyResult> {
    if fr.spacing != gr.spacing || fr.values.len() != gr.values.len() {
        return Err(Error::GridMismatch);
    }
    let value = radial_value(fr, gr, kp)?;
    let est_error = match (fr.coarsen(), gr.coarsen()) {
        (Some(a), Some(b)) => (value - radial_value(&a, &b, kp)?).abs() + EST_FLOOR * value.abs(),
        _ => value.abs(),
    };
    Ok(EnergyResult { value, quadrature: Quadrature::Radial, est_error })
}

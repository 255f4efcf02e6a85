//! Least-squares fits of `α (β + |x - y|^2)^(-exponent)` to grid fields.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::fields::{lp_norm, ExtremizerSpec, Field};
use crate::geometry::Point;
use crate::mass::ball_mass_radius;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyFit {
    pub spec: ExtremizerSpec,
    /// `‖f - fit‖_q / ‖f‖_q` on the grid
    pub fit_error: f64,
    pub converged: bool,
}

/// Parameters are `(ln α, ln β, y_1..y_N)`.
struct Problem<'a> {
    xs: Vec<[f64; 3]>,
    values: &'a [f64],
    dim: usize,
    exponent: f64,
    scale: f64,
    params: DVector<f64>,
}

impl Problem<'_> {
    fn model(&self, x: &[f64; 3]) -> (f64, f64, f64) {
        let a = self.params[0].exp();
        let b = self.params[1].exp();
        let mut d2 = 0.0;
        for k in 0..self.dim {
            d2 += (x[k] - self.params[2 + k]).powi(2);
        }
        let s = b + d2;
        (a * s.powf(-self.exponent), b, s)
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, p: &DVector<f64>) {
        self.params.copy_from(p);
    }

    fn params(&self) -> DVector<f64> {
        self.params.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = DVector::from_iterator(
            self.xs.len(),
            self.xs.iter().zip(self.values).map(|(x, v)| self.scale * (self.model(x).0 - v)),
        );
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let np = 2 + self.dim;
        let mut j = DMatrix::zeros(self.xs.len(), np);
        let e = self.exponent;
        for (i, x) in self.xs.iter().enumerate() {
            let (m, b, s) = self.model(x);
            let m = self.scale * m;
            j[(i, 0)] = m;
            j[(i, 1)] = -e * m * b / s;
            for k in 0..self.dim {
                j[(i, 2 + k)] = 2.0 * e * m * (x[k] - self.params[2 + k]) / s;
            }
        }
        j.iter().all(|v| v.is_finite()).then_some(j)
    }
}

/// Relative `L^q` distance between `f` and the family member on `f`'s grid.
pub fn family_error(f: &Field, spec: &ExtremizerSpec, q: f64) -> f64 {
    let model = Field::from_fn(*f.grid(), |x| spec.eval(x));
    let norm = lp_norm(f, q);
    match f.sub(&model) {
        Ok(d) if norm > 0.0 => lp_norm(&d, q) / norm,
        _ => f64::INFINITY,
    }
}

/// Starting point: centroid of `|f|^power`, `β` from the half-mass radius
/// about it (exact for the family when `power·exponent` is the mass
/// exponent), `α` from the value there.
fn initial_guess(f: &Field, exponent: f64, power: f64) -> Result<(f64, f64, Point)> {
    let y = f.centroid(power)?;
    let r = ball_mass_radius(f, power, &y).map(|b| b.value).unwrap_or(f.grid().spacing());
    let beta = (r * r).max(f.grid().spacing().powi(2));
    let peak = f.sample(&y).abs().max(1e-3 * f.max_abs());
    Ok((peak * beta.powf(exponent), beta, y))
}

/// Fits `α (β + |x - y|^2)^(-exponent)` to `f` by Levenberg–Marquardt over
/// `(ln α, ln β, y)`; the reported error is the relative `L^q` distance.
///
/// `power` picks the density `|f|^power` used to seed the center and scale.
pub fn fit_family(f: &Field, exponent: f64, power: f64, q: f64) -> Result<FamilyFit> {
    if f.is_zero() {
        return Err(Error::ZeroField);
    }
    if !(exponent > 0.0) {
        return Err(Error::InvalidParameter(format!("exponent must be positive, got {exponent}")));
    }
    let dim = f.dim();
    let (a0, b0, y0) = initial_guess(f, exponent, power)?;
    let grid = f.grid();
    let xs: Vec<[f64; 3]> = (0..grid.len()).map(|i| grid.point(i).raw()).collect();
    let l2 = lp_norm(f, 2.0);
    let mut params = DVector::zeros(2 + dim);
    params[0] = a0.ln();
    params[1] = b0.ln();
    for k in 0..dim {
        params[2 + k] = y0.coords()[k];
    }
    let problem = Problem {
        xs,
        values: f.values(),
        dim,
        exponent,
        scale: grid.cell_volume().sqrt() / l2,
        params,
    };
    let (done, report) = LevenbergMarquardt::new().with_patience(200).minimize(problem);
    let p = &done.params;
    if p.iter().any(|v| !v.is_finite()) || report.termination.was_usage_issue() {
        return Err(Error::DegenerateFit(format!("{:?}", report.termination)));
    }
    let center = Point::new(&p.as_slice()[2..])?;
    let spec = ExtremizerSpec::new(p[0].exp(), p[1].exp(), center, exponent)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    Ok(FamilyFit {
        spec,
        fit_error: family_error(f, &spec, q),
        converged: report.termination.was_successful(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    fn p(c: &[f64]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn self_fit_recovers_parameters() {
        for (dim, n) in [(1, 801), (2, 81)] {
            let center: Vec<f64> = [0.3, -0.2][..dim].to_vec();
            let spec = ExtremizerSpec::new(2.5, 0.7, p(&center), 0.75 * dim as f64).unwrap();
            let f = Field::from_spec(Grid::cube(dim, -8.0, 8.0, n).unwrap(), spec).unwrap().with_tail(None);
            let fit = fit_family(&f, spec.exponent, 1.0, 1.0).unwrap();
            assert!(fit.fit_error < 1e-8, "{fit:?}");
            assert!((fit.spec.alpha / 2.5 - 1.0).abs() < 1e-6);
            assert!((fit.spec.beta / 0.7 - 1.0).abs() < 1e-6);
            for k in 0..dim {
                assert!((fit.spec.center.coords()[k] - center[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn poor_start_still_converges() {
        // mass centroid is pulled away by a second small bump
        let spec = ExtremizerSpec::new(1.0, 0.3, p(&[1.0]), 1.0).unwrap();
        let g = Grid::cube(1, -10.0, 10.0, 2000).unwrap();
        let f = Field::from_fn(g, |x| spec.eval(x) + 0.02 * (-(x.coords()[0] + 6.0).powi(2)).exp());
        let fit = fit_family(&f, 1.0, 1.0, 1.0).unwrap();
        assert!((fit.spec.center.coords()[0] - 1.0).abs() < 1e-2, "{fit:?}");
        assert!(fit.fit_error < 0.05);
    }

    #[test]
    fn family_error_of_exact_member_is_zero() {
        let spec = ExtremizerSpec::new(1.0, 1.0, p(&[0.0]), 1.0).unwrap();
        let f = Field::from_fn(Grid::cube(1, -4.0, 4.0, 64).unwrap(), |x| spec.eval(x));
        assert_eq!(family_error(&f, &spec, 2.0), 0.0);
    }

    #[test]
    fn zero_field_rejected() {
        let f = Field::zeros(Grid::cube(1, -1.0, 1.0, 8).unwrap());
        assert_eq!(fit_family(&f, 1.0, 1.0, 1.0), Err(Error::ZeroField));
    }
}

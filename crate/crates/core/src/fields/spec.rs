use crate::error::{Error, Result};
use crate::geometry::{Ball, HalfSpace, Point};
use crate::params::KernelParams;

/// `α (β + |x - y|^2)^(-exponent)`.
///
/// Optimizers use `exponent = (2N - λ)/2`; the invariant densities of the
/// measure characterization use `exponent = N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremizerSpec {
    pub alpha: f64,
    pub beta: f64,
    pub center: Point,
    pub exponent: f64,
}

impl ExtremizerSpec {
    pub fn new(alpha: f64, beta: f64, center: Point, exponent: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        if !alpha.is_finite() || !exponent.is_finite() {
            return Err(Error::InvalidParameter("non-finite family parameter".into()));
        }
        Ok(Self { alpha, beta, center, exponent })
    }

    pub fn optimizer(alpha: f64, beta: f64, center: Point, kp: &KernelParams) -> Result<Self> {
        Self::new(alpha, beta, center, kp.weight() / 2.0)
    }

    pub fn density(alpha: f64, beta: f64, center: Point) -> Result<Self> {
        let n = center.dim() as f64;
        Self::new(alpha, beta, center, n)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn eval(&self, x: &Point) -> f64 {
        let d2 = (*x - self.center).norm_sq();
        self.alpha * (self.beta + d2).powf(-self.exponent)
    }

    /// Image under the lifted inversion of weight `weight`, when that
    /// image stays in the family (it does iff `weight = 2 exponent`).
    pub fn inverted(&self, b: &Ball, weight: f64) -> Option<Self> {
        if (2.0 * self.exponent - weight).abs() > 1e-12 {
            return None;
        }
        let a = b.center();
        let r2 = b.radius() * b.radius();
        let dy = self.center - a;
        let s = self.beta + dy.norm_sq();
        Some(Self {
            alpha: self.alpha * r2.powf(self.exponent) * s.powf(-self.exponent),
            beta: r2 * r2 * self.beta / (s * s),
            center: a + dy.scale(r2 / s),
            exponent: self.exponent,
        })
    }

    pub fn reflected(&self, h: &HalfSpace) -> Self {
        Self { center: crate::geometry::reflect_point(h, &self.center), ..*self }
    }

    /// Total mass `∫ spec dx`, finite only when `2 exponent > N`.
    pub fn mass(&self) -> Option<f64> {
        self.power_mass(1.0)
    }

    /// `∫ spec^power dx`, finite only when `2 exponent power > N`.
    pub fn power_mass(&self, power: f64) -> Option<f64> {
        let n = self.dim() as f64;
        let e = self.exponent * power;
        if 2.0 * e <= n {
            return None;
        }
        let g = |z: f64| statrs::function::gamma::ln_gamma(z);
        let ln = (n / 2.0) * std::f64::consts::PI.ln() + g(e - n / 2.0) - g(e)
            + (n / 2.0 - e) * self.beta.ln();
        Some(self.alpha.abs().powf(power) * ln.exp())
    }
}

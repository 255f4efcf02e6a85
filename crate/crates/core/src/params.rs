use crate::error::{Error, Result};

/// Dimension and kernel exponent of the functional `∬ f(x) g(y) |x-y|^-λ`.
///
/// The diagonal exponent `p = 2N / (2N - λ)` is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    dim: usize,
    lambda: f64,
}

impl KernelParams {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(lambda > 0.0 && lambda < dim as f64) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in (0, N); got lambda = {lambda} with N = {dim}"
            )));
        }
        Ok(Self { dim, lambda })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> f64 {
        let n = self.dim as f64;
        2.0 * n / (2.0 * n - self.lambda)
    }

    /// `N - λ`, the order of the Fourier multiplier `|ξ|^{λ-N}`.
    pub fn gamma(&self) -> f64 {
        self.dim as f64 - self.lambda
    }

    /// Conformal weight `2N - λ` of the lifted operators.
    pub fn weight(&self) -> f64 {
        2.0 * self.dim as f64 - self.lambda
    }

    /// Whether inversion positivity holds (`N <= 2` or `λ >= N - 2`).
    pub fn positivity_valid(&self) -> bool {
        self.dim <= 2 || self.lambda >= self.dim as f64 - 2.0
    }

    /// Whether positivity is strict for non-invariant fields (`λ > N - 2`).
    pub fn strictly_positive(&self) -> bool {
        self.lambda > self.dim as f64 - 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_exponent() {
        let kp = KernelParams::new(1, 0.5).unwrap();
        assert!((kp.p() - 4.0 / 3.0).abs() < 1e-15);
        assert!(kp.positivity_valid() && kp.strictly_positive());
    }

    #[test]
    fn range_checks() {
        assert!(KernelParams::new(3, 3.5).is_err());
        assert!(KernelParams::new(2, 0.0).is_err());
        assert!(KernelParams::new(4, 1.0).is_err());
        let kp = KernelParams::new(3, 0.5).unwrap();
        assert!(!kp.positivity_valid());
        let kp = KernelParams::new(3, 1.0).unwrap();
        assert!(kp.positivity_valid() && !kp.strictly_positive());
    }
}

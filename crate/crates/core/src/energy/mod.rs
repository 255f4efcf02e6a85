//! The bilinear Riesz-potential energy `I_λ[f, g] = ∬ f(x) g(y) |x-y|^-λ`.

mod fourier;
pub mod kernel;
mod radial;
pub(crate) mod sum;

pub use fourier::{calibrate_fourier, energy_fourier, fourier_sum, FourierCalibration};
pub use radial::{angular_average, energy_radial, RadialProfile};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::fields::{lp_norm, Field, LiftedOp};
use crate::params::KernelParams;

/// Relative floor added to every refinement-based error estimate.
pub const EST_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Direct,
    Radial,
    Fourier,
}

impl Quadrature {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quadrature::Direct => "direct",
            Quadrature::Radial => "radial",
            Quadrature::Fourier => "fourier",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyResult {
    pub value: f64,
    pub quadrature: Quadrature,
    pub est_error: f64,
}

impl EnergyResult {
    pub fn csv_row(&self) -> String {
        format!("{},{},{}", self.value, self.quadrature.as_str(), self.est_error)
    }
}

fn check_pair(f: &Field, g: &Field, kp: &KernelParams) -> Result<()> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    if f.dim() != kp.dim() {
        return Err(Error::InvalidParameter(format!(
            "field dimension {} does not match kernel dimension {}",
            f.dim(),
            kp.dim()
        )));
    }
    Ok(())
}

/// Energy of the piecewise-constant interpolants, no error estimate.
pub fn energy_value(f: &Field, g: &Field, kp: &KernelParams) -> Result<f64> {
    check_pair(f, g, kp)?;
    let grid = f.grid();
    let h = grid.spacing();
    let n = kp.dim() as f64;
    let s = sum::kernel_pair_sum(grid, kp.lambda(), f.values(), g.values());
    Ok(h.powf(2.0 * n - kp.lambda()) * s)
}

/// `value` and `|value(h) - value(2h)|` for a pipeline run on `f` and on
/// its block average.
pub fn refine_pair<F>(f: &Field, pipeline: F) -> Result<(f64, f64)>
where
    F: Fn(&Field) -> Result<f64>,
{
    let fine = pipeline(f)?;
    let coarse = match f.coarsen() {
        Ok(c) => pipeline(&c)?,
        Err(_) => return Ok((fine, fine.abs())),
    };
    Ok((fine, (fine - coarse).abs() + EST_FLOOR * fine.abs()))
}

/// Cell-pair quadrature of `I_λ[f, g]` with a spacing-doubling error estimate.
pub fn energy_direct(f: &Field, g: &Field, kp: &KernelParams) -> Result<EnergyResult> {
    let value = energy_value(f, g, kp)?;
    let est_error = match (f.coarsen(), g.coarsen()) {
        (Ok(fc), Ok(gc)) => {
            let coarse = energy_value(&fc, &gc, kp)?;
            (value - coarse).abs() + EST_FLOOR * value.abs()
        }
        _ => value.abs(),
    };
    Ok(EnergyResult { value, quadrature: Quadrature::Direct, est_error })
}

/// `π^(λ/2) Γ((N-λ)/2) / Γ(N-λ/2) (Γ(N)/Γ(N/2))^(1-λ/N)`.
pub fn sharp_constant(kp: &KernelParams) -> f64 {
    let n = kp.dim() as f64;
    let lam = kp.lambda();
    let ln = 0.5 * lam * std::f64::consts::PI.ln() + ln_gamma((n - lam) / 2.0)
        - ln_gamma(n - lam / 2.0)
        + (1.0 - lam / n) * (ln_gamma(n) - ln_gamma(n / 2.0));
    ln.exp()
}

fn quotient(f: &Field, kp: &KernelParams) -> Result<f64> {
    let norm = lp_norm(f, kp.p());
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(energy_value(f, f, kp)? / (norm * norm))
}

/// `I_λ[f, f] / ‖f‖_p^2`.
pub fn rayleigh_quotient(f: &Field, kp: &KernelParams) -> Result<f64> {
    quotient(f, kp)
}

/// Quotient with its spacing-doubling error estimate.
pub fn rayleigh_with_error(f: &Field, kp: &KernelParams) -> Result<(f64, f64)> {
    refine_pair(f, |x| quotient(x, kp))
}

/// Cell-averaged potential `∫ f(y) |x-y|^-λ dy` at every cell.
pub fn potential(f: &Field, kp: &KernelParams) -> Vec<f64> {
    let grid = f.grid();
    let h = grid.spacing();
    let n = kp.dim() as f64;
    let scale = h.powf(n - kp.lambda());
    sum::kernel_potential(grid, kp.lambda(), f.values()).into_iter().map(|v| v * scale).collect()
}

/// Coefficient of variation of `potential(f) / f^(p-1)` over the central
/// half of the box.
pub fn el_residual(f: &Field, kp: &KernelParams) -> Result<f64> {
    if f.dim() != kp.dim() {
        return Err(Error::InvalidParameter("field and kernel dimensions differ".into()));
    }
    if f.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParameter("field must be non-negative".into()));
    }
    if f.is_zero() {
        return Err(Error::ZeroField);
    }
    let q = kp.p() - 1.0;
    let pot = potential(f, kp);
    let grid = f.grid();
    let lo = grid.origin();
    let hi = grid.upper();
    let top = f.max_abs().powf(q);
    let mut ratios = Vec::new();
    for i in 0..grid.len() {
        let x = grid.point(i);
        let central = (0..grid.dim()).all(|k| {
            let mid = 0.5 * (lo.coords()[k] + hi.coords()[k]);
            let half = 0.5 * (hi.coords()[k] - lo.coords()[k]);
            (x.coords()[k] - mid).abs() <= 0.5 * half
        });
        let w = f.values()[i].powf(q);
        if central && w >= 1e-12 * top {
            ratios.push(pot[i] / w);
        }
    }
    if ratios.is_empty() {
        return Err(Error::ZeroField);
    }
    let m = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / m;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / m;
    Ok(var.sqrt() / mean.abs())
}

/// Energies of `f` and of its image under a lifted operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceCheck {
    pub before: EnergyResult,
    pub after: EnergyResult,
}

impl InvarianceCheck {
    pub fn gap(&self) -> f64 {
        (self.after.value - self.before.value).abs()
    }

    pub fn combined_est(&self) -> f64 {
        self.before.est_error + self.after.est_error
    }

    pub fn holds(&self) -> bool {
        self.gap() <= self.combined_est()
    }
}

/// `I[Tf]` against `I[f]`; the transformed energy's estimate reruns the
/// transform on the coarsened field.
pub fn invariance_check(f: &Field, op: &LiftedOp, kp: &KernelParams) -> Result<InvarianceCheck> {
    let before = energy_direct(f, f, kp)?;
    let (value, est) = refine_pair(f, |x| {
        let t = op.apply(x, kp);
        energy_value(&t, &t, kp)
    })?;
    Ok(InvarianceCheck {
        before,
        after: EnergyResult { value, quadrature: Quadrature::Direct, est_error: est },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_extremizer, ExtremizerSpec, Grid};
    use crate::geometry::{Ball, HalfSpace, Point};
    use proptest::prelude::*;

    fn kp(n: usize, l: f64) -> KernelParams {
        KernelParams::new(n, l).unwrap()
    }

    fn p(c: &[f64]) -> Point {
        Point::new(c).unwrap()
    }

    #[test]
    fn unit_interval_energy() {
        let g = Grid::cube(1, -1.0, 2.0, 60).unwrap();
        let f = Field::from_fn(g, |x| if (0.0..1.0).contains(&x.coords()[0]) { 1.0 } else { 0.0 });
        let e = energy_direct(&f, &f, &kp(1, 0.5)).unwrap();
        assert!((e.value - 8.0 / 3.0).abs() < 1e-12);
        let z = Field::zeros(g);
        assert_eq!(energy_direct(&z, &z, &kp(1, 0.5)).unwrap().value, 0.0);
    }

    #[test]
    fn sharp_constant_values() {
        let c = sharp_constant(&kp(1, 0.5));
        let want = statrs::function::gamma::gamma(0.25) / statrs::function::gamma::gamma(0.75);
        assert!((c - want).abs() < 1e-12 * want);
        assert!((c - 2.958675119).abs() < 1e-8);
        let c3 = sharp_constant(&kp(3, 1.0));
        let want3 = (4.0 / 3.0) * (4.0 / std::f64::consts::PI.sqrt()).powf(2.0 / 3.0);
        assert!((c3 - want3).abs() < 1e-12 * want3);
        assert!((c3 - 2.29401).abs() < 1e-5);
        assert!((sharp_constant(&kp(2, 1e-6)) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = Field::zeros(Grid::cube(1, 0.0, 1.0, 8).unwrap());
        let b = Field::zeros(Grid::cube(1, 0.0, 1.0, 16).unwrap());
        assert_eq!(energy_direct(&a, &b, &kp(1, 0.5)), Err(Error::GridMismatch));
    }

    #[test]
    fn extremizer_quotient_near_sharp_constant() {
        let k = kp(1, 0.5);
        let spec = ExtremizerSpec::optimizer(1.0, 1.0, p(&[0.0]), &k).unwrap();
        let f = make_extremizer(spec, &k, Grid::cube(1, -40.0, 40.0, 2048).unwrap()).unwrap();
        let q = rayleigh_quotient(&f, &k).unwrap();
        assert!((q / sharp_constant(&k) - 1.0).abs() < 1e-2, "{q}");
    }

    #[test]
    fn quotient_dilation_invariant() {
        let k = kp(1, 0.5);
        let g = Grid::cube(1, -8.0, 8.0, 1024).unwrap();
        let bump = |s: f64| Field::from_fn(g, move |x| (-(s * x.coords()[0]).powi(2)).exp());
        let q1 = rayleigh_quotient(&bump(1.0), &k).unwrap();
        let q2 = rayleigh_quotient(&bump(2.0), &k).unwrap();
        assert!((q1 - q2).abs() < 1e-3 * q1, "{q1} {q2}");
    }

    #[test]
    fn el_residual_extremizer_and_witness() {
        let k = kp(1, 0.5);
        let g = Grid::cube(1, -40.0, 40.0, 2048).unwrap();
        let spec = ExtremizerSpec::optimizer(1.0, 1.0, p(&[0.0]), &k).unwrap();
        let f = make_extremizer(spec, &k, g).unwrap();
        let r = el_residual(&f, &k).unwrap();
        assert!(r < 5e-2, "{r}");
        let two = Field::from_fn(g, |x| {
            let c = x.coords()[0];
            (-(c - 3.0).powi(2)).exp() + (-(c + 3.0).powi(2)).exp() + 1e-3
        });
        let rw = el_residual(&two, &k).unwrap();
        assert!(rw > 0.25, "{rw}");
        let r3 = el_residual(&f.scale(7.0), &k).unwrap();
        assert!((r3 - r).abs() < 1e-12);
    }

    #[test]
    fn refinement_ladder_shrinks_estimate() {
        let k = kp(2, 1.0);
        let mut last = f64::INFINITY;
        for n in [16usize, 32, 64] {
            let g = Grid::cube(2, -4.0, 4.0, n).unwrap();
            let f = Field::from_fn(g, |x| (-x.norm_sq()).exp());
            let e = energy_direct(&f, &f, &k).unwrap();
            assert!(e.est_error < last);
            last = e.est_error;
        }
    }

    #[test]
    fn reflection_and_inversion_invariance_1d() {
        let k = kp(1, 0.5);
        let g = Grid::cube(1, -10.0, 10.0, 2000).unwrap();
        let f = Field::from_fn(g, |x| (-(x.coords()[0] - 0.7).powi(2) * 2.0).exp());
        let h = HalfSpace::new(p(&[1.0]), 0.3).unwrap();
        assert!(invariance_check(&f, &LiftedOp::Reflection(h), &k).unwrap().holds());
        let b = Ball::new(p(&[-2.5]), 2.6).unwrap();
        assert!(invariance_check(&f, &LiftedOp::Inversion(b), &k).unwrap().holds());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn bilinear_and_symmetric(a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.2f64..0.9) {
            let k = kp(2, 1.3);
            let g = Grid::cube(2, -2.0, 2.0, 12).unwrap();
            let f = Field::from_fn(g, |x| (a * x.coords()[0]).sin() + 0.3);
            let g1 = Field::from_fn(g, |x| (-x.norm_sq() * c).exp());
            let g2 = Field::from_fn(g, |x| b * x.coords()[1]);
            let lhs = energy_value(&f, &g1.add(&g2).unwrap(), &k).unwrap();
            let rhs = energy_value(&f, &g1, &k).unwrap() + energy_value(&f, &g2, &k).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (lhs.abs() + rhs.abs() + 1.0));
            let s1 = energy_value(&f, &g1, &k).unwrap();
            let s2 = energy_value(&g1, &f, &k).unwrap();
            prop_assert!((s1 - s2).abs() <= 1e-13 * s1.abs().max(1.0));
        }

        #[test]
        fn positive_definite(seed in 0u64..10_000, dim in 1usize..=3) {
            let k = kp(dim, 0.5 * dim as f64);
            let n = [64usize, 12, 6][dim - 1];
            let g = Grid::cube(dim, -1.0, 1.0, n).unwrap();
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let vals: Vec<f64> = (0..g.len()).map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            }).collect();
            let f = Field::new(g, vals).unwrap();
            let e = energy_direct(&f, &f, &k).unwrap();
            prop_assert!(e.value >= -e.est_error);
        }

        #[test]
        fn quotient_below_sharp_constant(w in 0.3f64..2.0, shift in 0.5f64..3.0) {
            let k = kp(1, 0.5);
            let g = Grid::cube(1, -20.0, 20.0, 1024).unwrap();
            let f = Field::from_fn(g, |x| {
                let c = x.coords()[0];
                (-(c / w).powi(2)).exp() + 0.5 * (-(c - shift).powi(2)).exp()
            });
            let (q, est) = rayleigh_with_error(&f, &k).unwrap();
            prop_assert!(q <= sharp_constant(&k) + est);
        }
    }
}

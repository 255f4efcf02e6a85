use rustfft::num_complex::Complex64;

use super::sum::{fft_nd, pairwise_sum, shape};
use super::{energy_direct, EnergyResult, Quadrature, EST_FLOOR};
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::params::KernelParams;
use crate::quadrature::gauss_legendre;

/// Multiplier linking `∫ |ξ|^(λ-N) |f̂|^2 dξ` to the energy, fitted on a probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierCalibration {
    pub a_const: f64,
    pub calib_residual: f64,
}

/// `∫_{[-1/2,1/2]^N} |u|^(λ-N) du`.
fn zero_cell_integral(dim: usize, lam: f64) -> f64 {
    let n = dim as f64;
    let rule = gauss_legendre(16);
    let nodes: Vec<f64> = rule.0.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let weights: Vec<f64> = rule.1.iter().map(|t| 0.5 * t).collect();
    let inner = dim - 1;
    let mut j = 0.0;
    for idx in 0..16usize.pow(inner as u32) {
        let mut rem = idx;
        let mut wt = 1.0;
        let mut r2 = 1.0;
        for _ in 0..inner {
            let k = rem % 16;
            rem /= 16;
            wt *= weights[k];
            r2 += nodes[k] * nodes[k];
        }
        j += wt * r2.powf(0.5 * (lam - n));
    }
    2f64.powi(dim as i32) * n * 0.5f64.powf(lam) / lam * j
}

/// `∫ |ξ|^(λ-N) |f̂(ξ)|^2 dξ` for the piecewise-constant interpolant, with
/// `f̂(ξ) = ∫ f e^{-ixξ}`, from a zero-padded (x4) transform.
pub fn fourier_sum(f: &Field, kp: &KernelParams) -> f64 {
    let grid = f.grid();
    let h = grid.spacing();
    let dim = grid.dim();
    let n = dim as f64;
    let lam = kp.lambda();
    let e = shape(grid);
    let big = 4 * e.iter().copied().max().unwrap_or(1);
    let mut p = [1usize; 3];
    for k in 3 - dim..3 {
        p[k] = big;
    }
    let total = p[0] * p[1] * p[2];
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    for i0 in 0..e[0] {
        for i1 in 0..e[1] {
            for i2 in 0..e[2] {
                buf[(i0 * p[1] + i1) * p[2] + i2] =
                    Complex64::new(f.values()[(i0 * e[1] + i1) * e[2] + i2], 0.0);
            }
        }
    }
    fft_nd(&mut buf, p, false);
    let dxi = std::f64::consts::TAU / (big as f64 * h);
    let freq = |m: usize| -> f64 {
        let s = if m <= big / 2 { m as f64 } else { m as f64 - big as f64 };
        s * dxi
    };
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
    let hn2 = h.powf(2.0 * n);
    let mut terms = Vec::with_capacity(total);
    for m0 in 0..p[0] {
        for m1 in 0..p[1] {
            for m2 in 0..p[2] {
                let ms = [m0, m1, m2];
                let mut xi2 = 0.0;
                let mut s2 = 1.0;
                for k in 3 - dim..3 {
                    let xk = freq(ms[k]);
                    xi2 += xk * xk;
                    s2 *= sinc(0.5 * xk * h).powi(2);
                }
                if xi2 == 0.0 {
                    continue;
                }
                let amp = buf[(m0 * p[1] + m1) * p[2] + m2].norm_sqr() * hn2 * s2;
                terms.push(xi2.powf(0.5 * (lam - n)) * amp);
            }
        }
    }
    let body = pairwise_sum(&terms) * dxi.powf(n);
    let zero = buf[0].norm_sqr() * hn2 * dxi.powf(lam) * zero_cell_integral(dim, lam);
    body + zero
}

fn dilate(f: &Field, factor: f64) -> Result<Field> {
    let c = f.centroid(1.0)?;
    let grid = *f.grid();
    Ok(Field::from_fn(grid, |x| f.sample(&(c + (*x - c).scale(1.0 / factor)))))
}

/// Fits `a` so that `a ∫|ξ|^(λ-N)|f̂|^2` reproduces the direct energy of a
/// positive smooth probe; the residual is measured on the probe dilated by 2.
pub fn calibrate_fourier(kp: &KernelParams, probe: &Field) -> Result<FourierCalibration> {
    let second = dilate(probe, 2.0)?;
    calibrate_fourier_with(kp, probe, &second)
}

/// Calibration on `probe` with the residual measured on `check`.
pub fn calibrate_fourier_with(kp: &KernelParams, probe: &Field, check: &Field) -> Result<FourierCalibration> {
    if probe.values().iter().any(|&v| v < 0.0) || probe.is_zero() {
        return Err(Error::InvalidParameter("calibration probe must be positive".into()));
    }
    let e = energy_direct(probe, probe, kp)?;
    if e.est_error > 1e-2 * e.value {
        return Err(Error::InvalidParameter(format!(
            "calibration probe is under-resolved (relative error estimate {:.3e})",
            e.est_error / e.value
        )));
    }
    let a_const = e.value / fourier_sum(probe, kp);
    let ec = energy_direct(check, check, kp)?;
    let calib_residual = (a_const * fourier_sum(check, kp) - ec.value) / ec.value;
    Ok(FourierCalibration { a_const, calib_residual })
}

/// Calibrated Fourier-side energy `I_λ[f, f]`.
pub fn energy_fourier(f: &Field, kp: &KernelParams, cal: &FourierCalibration) -> Result<EnergyResult> {
    if f.dim() != kp.dim() {
        return Err(Error::InvalidParameter("field and kernel dimensions differ".into()));
    }
    let value = cal.a_const * fourier_sum(f, kp);
    let coarse = f.coarsen().map(|c| cal.a_const * fourier_sum(&c, kp)).unwrap_or(0.0);
    let est_error = (value - coarse).abs() + (cal.calib_residual.abs() + EST_FLOOR) * value.abs();
    Ok(EnergyResult { value, quadrature: Quadrature::Fourier, est_error })
}

//! The half-space representation of `I_λ[Θ_H f, f]` as a weighted square of
//! Laplace transforms, and its kernel.

use rustfft::num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::params::KernelParams;
use crate::quadrature::{cut_integral, gl_panels};

fn on_boundary_branch(kp: &KernelParams) -> bool {
    (kp.lambda() - (kp.dim() as f64 - 2.0)).abs() < 1e-12
}

fn require_positive_branch(kp: &KernelParams) -> Result<()> {
    if !kp.positivity_valid() {
        return Err(Error::InvalidParameter(format!(
            "no positive representation for lambda = {} < N - 2 = {}",
            kp.lambda(),
            kp.dim() as f64 - 2.0
        )));
    }
    Ok(())
}

/// `k(ξ', t) = ∫ e^{i ξ_N t} (|ξ'|^2 + ξ_N^2)^(-(N-λ)/2) dξ_N`, written as a
/// Laplace transform of a positive density.
pub fn kernel_k(kp: &KernelParams, xi_perp: f64, t: f64) -> Result<f64> {
    require_positive_branch(kp)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    if kp.dim() == 1 && xi_perp != 0.0 {
        return Err(Error::InvalidParameter("there is no transverse frequency in one dimension".into()));
    }
    if kp.dim() >= 2 && !(xi_perp > 0.0) {
        return Err(Error::InvalidParameter("transverse frequency must be positive".into()));
    }
    if on_boundary_branch(kp) {
        return Ok(std::f64::consts::PI / xi_perp * (-t * xi_perp).exp());
    }
    let gamma = kp.gamma();
    let jump = 2.0 * (0.5 * std::f64::consts::PI * gamma).sin();
    Ok(jump * cut_integral(xi_perp, gamma, 1.0 / t, |tau| (-tau * t).exp()))
}

/// Cells `[a, b)` with constant values along the half-line.
#[derive(Debug, Clone)]
pub(crate) struct HalfLine {
    cells: Vec<(f64, f64, f64)>,
}

impl HalfLine {
    pub(crate) fn new(cells: Vec<(f64, f64, f64)>) -> Self {
        Self { cells: cells.into_iter().filter(|c| c.2 != 0.0 && c.1 > c.0).collect() }
    }

    /// `∫_0^∞ e^{-τx} v(x) dx`, exact for the cells.
    pub(crate) fn laplace(&self, tau: f64) -> f64 {
        self.cells
            .iter()
            .map(|&(a, b, v)| {
                let width = if tau == 0.0 { b - a } else { -(-tau * (b - a)).exp_m1() / tau };
                v * (-tau * a).exp() * width
            })
            .sum()
    }

    fn scale(&self) -> f64 {
        self.cells.iter().map(|c| c.1).fold(0.0, f64::max).max(1e-300)
    }
}

/// `c̃ = 2^(N-1-λ) π^((N-2)/2) Γ((N-λ)/2) / Γ(λ/2)`, the Fourier constant of
/// the Riesz kernel in the partial-transform form.
fn fourier_prefactor(kp: &KernelParams) -> f64 {
    let n = kp.dim() as f64;
    let lam = kp.lambda();
    ((n - 1.0 - lam) * 2f64.ln() + 0.5 * (n - 2.0) * std::f64::consts::PI.ln()
        + ln_gamma(0.5 * (n - lam))
        - ln_gamma(0.5 * lam))
        .exp()
}

/// `J(ρ)`: the kernel integral of `|L v|^2` at transverse frequency `ρ`.
fn transverse_weight(kp: &KernelParams, v: &HalfLine, rho: f64) -> f64 {
    if on_boundary_branch(kp) {
        let l = v.laplace(rho);
        return std::f64::consts::PI / rho * l * l;
    }
    let gamma = kp.gamma();
    let jump = 2.0 * (0.5 * std::f64::consts::PI * gamma).sin();
    jump * cut_integral(rho, gamma, 1.0 / v.scale(), |tau| {
        let l = v.laplace(tau);
        l * l
    })
}

/// Squared transform of the transverse factor, `|∫ u(x') e^{-i ξ'·x'} dx'|^2`.
struct Transverse {
    dim: usize,
    h: f64,
    extent: [usize; 2],
    origin: [f64; 2],
    values: Vec<f64>,
    radius: f64,
}

impl Transverse {
    fn amp2(&self, xi: [f64; 2]) -> f64 {
        let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
        let h = self.h;
        let coord = |k: usize, j: usize| self.origin[k] + (j as f64 + 0.5) * h;
        if self.dim == 1 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &u) in self.values.iter().enumerate() {
                if u != 0.0 {
                    acc += u * Complex64::from_polar(1.0, -xi[0] * coord(0, j));
                }
            }
            return (h * sinc(0.5 * xi[0] * h)).powi(2) * acc.norm_sqr();
        }
        let (n0, n1) = (self.extent[0], self.extent[1]);
        let ph1: Vec<Complex64> = (0..n1).map(|j| Complex64::from_polar(1.0, -xi[1] * coord(1, j))).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for j0 in 0..n0 {
            let row = &self.values[j0 * n1..(j0 + 1) * n1];
            let mut inner = Complex64::new(0.0, 0.0);
            for (u, p) in row.iter().zip(&ph1) {
                if *u != 0.0 {
                    inner += *u * p;
                }
            }
            acc += inner * Complex64::from_polar(1.0, -xi[0] * coord(0, j0));
        }
        let s = h * h * sinc(0.5 * xi[0] * h) * sinc(0.5 * xi[1] * h);
        s * s * acc.norm_sqr()
    }
}

/// Right side of the representation formula for `f` supported in
/// `{x_N >= 0}`. In two and three dimensions `f` must factor as
/// `u(x') v(x_N)`.
pub fn halfspace_representation(f: &Field, kp: &KernelParams) -> Result<f64> {
    require_positive_branch(kp)?;
    if f.dim() != kp.dim() {
        return Err(Error::InvalidParameter("field and kernel dimensions differ".into()));
    }
    let grid = f.grid();
    let dim = grid.dim();
    let top = f.max_abs();
    if top == 0.0 {
        return Ok(0.0);
    }
    let last = dim - 1;
    for i in 0..grid.len() {
        let x = grid.point(i);
        if x.coords()[last] < 0.0 && f.values()[i].abs() > 1e-14 * top {
            return Err(Error::Support(format!(
                "field is non-zero at {:?}, outside the closed half-space",
                x.coords()
            )));
        }
    }
    let h = grid.spacing();
    let ext = grid.extent();
    let nn = ext[last];
    let rows = grid.len() / nn;
    // matrix M[row, i_N]
    let m = |r: usize, k: usize| f.values()[r * nn + k];
    let (mut rbest, mut kbest, mut best) = (0, 0, 0.0);
    for r in 0..rows {
        for k in 0..nn {
            if m(r, k).abs() > best {
                best = m(r, k).abs();
                rbest = r;
                kbest = k;
            }
        }
    }
    let u: Vec<f64> = (0..rows).map(|r| m(r, kbest)).collect();
    let v: Vec<f64> = (0..nn).map(|k| m(rbest, k) / m(rbest, kbest)).collect();
    if dim > 1 {
        for r in 0..rows {
            for k in 0..nn {
                if (m(r, k) - u[r] * v[k]).abs() > 1e-10 * top {
                    return Err(Error::Unsupported(
                        "representation oracle needs a separable field u(x')v(x_N) when N >= 2".into(),
                    ));
                }
            }
        }
    }
    let zn = grid.origin().coords()[last];
    let cells: Vec<(f64, f64, f64)> = (0..nn)
        .filter_map(|k| {
            let c = zn + (k as f64 + 0.5) * h;
            let b = c + 0.5 * h;
            (b > 0.0).then(|| ((c - 0.5 * h).max(0.0), b, v[k]))
        })
        .collect();
    let line = HalfLine::new(cells);
    let pref = fourier_prefactor(kp);
    if dim == 1 {
        return Ok(pref * u[0] * u[0] * transverse_weight(kp, &line, 0.0));
    }
    let origin = grid.origin();
    let mut tr_origin = [0.0; 2];
    let mut tr_extent = [1usize; 2];
    for k in 0..dim - 1 {
        tr_origin[k] = origin.coords()[k];
        tr_extent[k] = ext[k];
    }
    let mut radius: f64 = 0.0;
    for r in 0..rows {
        if u[r] == 0.0 {
            continue;
        }
        let x = grid.point(r * nn);
        let c = x.coords();
        radius = radius.max((0..dim - 1).map(|k| c[k] * c[k]).sum::<f64>().sqrt() + h);
    }
    let tr = Transverse { dim: dim - 1, h, extent: tr_extent, origin: tr_origin, values: u, radius };
    let scale = tr.radius.max(line.scale());
    Ok(pref * std::f64::consts::TAU.powf(-((dim - 1) as f64)) * outer_integral(kp, &tr, &line, scale))
}

/// `∫_{R^(N-1)} |û(ξ')|^2 J(|ξ'|) dξ'`.
fn outer_integral(kp: &KernelParams, tr: &Transverse, v: &HalfLine, scale: f64) -> f64 {
    let dim = kp.dim();
    let integrand = |rho: f64| -> f64 {
        let j = transverse_weight(kp, v, rho);
        if dim == 2 {
            2.0 * tr.amp2([rho, 0.0]) * j
        } else {
            let m = ((2.0 * rho * tr.radius).ceil() as usize + 16).min(1024);
            let dth = std::f64::consts::PI / m as f64;
            let ring: f64 = (0..m)
                .map(|k| {
                    let th = k as f64 * dth;
                    tr.amp2([rho * th.cos(), rho * th.sin()])
                })
                .sum();
            rho * 2.0 * dth * ring * j
        }
    };
    let lo = 1e-9 / scale;
    let mid = 1.0 / scale;
    let hi = 12.0 / tr.h;
    let mut breaks: Vec<f64> = (0..=9).map(|k| lo * 10f64.powi(k)).collect();
    let step = 0.5 / scale;
    let mut x = mid + step;
    while x < hi {
        breaks.push(x);
        x += step;
    }
    let body = gl_panels(&breaks, 8, integrand);
    // below `lo` the integrand is a power ρ^κ
    let kappa = (dim as f64 - 2.0)
        + if on_boundary_branch(kp) { -1.0 } else { (1.0 - kp.gamma()).min(0.0) };
    body + integrand(lo) * lo / (kappa + 1.0)
}

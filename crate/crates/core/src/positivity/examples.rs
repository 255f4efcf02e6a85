//! Two boundary cases of positivity in three dimensions: a non-invariant
//! field with zero reflected overlap at `λ = 1`, and a sign-indefinite
//! defect below it.

use rayon::prelude::*;
use statrs::function::erf::erf;
use statrs::function::gamma::gamma;

use super::{positivity_defect, PositivityReport};
use crate::energy::{energy_direct, energy_radial, EnergyResult, RadialProfile};
use crate::error::{Error, Result};
use crate::fields::{apply_reflection, Field, Grid};
use crate::geometry::{HalfSpace, Point, Region};
use crate::params::KernelParams;
use crate::quadrature::{gauss_legendre, gl_panels};

#[derive(Debug, Clone)]
pub struct NewtonExample {
    pub field: Field,
    /// `I[Θ_H f, f]` for `H = {x_3 > 0}`
    pub overlap: EnergyResult,
    /// `I[f, f]` of the continuum profile
    pub self_energy: EnergyResult,
    pub grid_self_energy: EnergyResult,
    /// `∫ f dx` on the grid
    pub mass: f64,
}

/// A radial zero-mass field around `(0, 0, 2)`: the normalized indicator of
/// `|x - a| < 1/2` minus the normalized indicator of `1/2 < |x - a| < 1`.
/// Spacing is `4 / n`.
pub fn newton_zero_overlap(kp: &KernelParams, n: usize) -> Result<NewtonExample> {
    if kp.dim() != 3 || (kp.lambda() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("the zero-overlap example needs N = 3 and lambda = 1".into()));
    }
    if n < 8 || n % 4 != 0 {
        return Err(Error::InvalidParameter(format!("n must be a multiple of 4 and at least 8, got {n}")));
    }
    let h = 4.0 / n as f64;
    let grid = Grid::new(Point::new(&[-2.0, -2.0, -4.0])?, h, &[n, n, 2 * n])?;
    let center = [0.0, 0.0, 2.0];
    let radius = |x: &Point| {
        let c = x.coords();
        ((c[0] - center[0]).powi(2) + (c[1] - center[1]).powi(2) + (c[2] - center[2]).powi(2)).sqrt()
    };
    let core = Field::from_fn_averaged(grid, 6, |x| if radius(x) < 0.5 { 1.0 } else { 0.0 });
    let shell = Field::from_fn_averaged(grid, 6, |x| {
        let r = radius(x);
        if (0.5..1.0).contains(&r) { 1.0 } else { 0.0 }
    });
    let vol = grid.cell_volume();
    let m_core: f64 = core.values().iter().sum::<f64>() * vol;
    let m_shell: f64 = shell.values().iter().sum::<f64>() * vol;
    let field = core.scale(1.0 / m_core).sub(&shell.scale(1.0 / m_shell))?;
    let mass = field.values().iter().sum::<f64>() * vol;
    let reflected = apply_reflection(&HalfSpace::upper(3), &field);
    let overlap = energy_direct(&reflected, &field, kp)?;
    let grid_self_energy = energy_direct(&field, &field, kp)?;
    // the continuum field is piecewise constant in r, so the radial rule
    // represents it exactly at both spacings
    let (core_value, shell_value) = (1.0 / ball_volume(0.5), -1.0 / (ball_volume(1.0) - ball_volume(0.5)));
    let profile = RadialProfile::from_fn(1.0 / 128.0, 128, |r| if r < 0.5 { core_value } else { shell_value })?;
    let self_energy = energy_radial(&profile, &profile, kp)?;
    Ok(NewtonExample { field, overlap, self_energy, grid_self_energy, mass })
}

fn ball_volume(r: f64) -> f64 {
    4.0 / 3.0 * std::f64::consts::PI * r.powi(3)
}

/// Search space for [`find_negative_defect`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// bump centers above the plane
    pub heights: Vec<f64>,
    pub widths: Vec<f64>,
    /// cells per smallest width on the verification grid
    pub resolution: usize,
    /// verification grids above this many cells are skipped
    pub max_cells: usize,
    /// how many ranked candidates to verify per sign
    pub candidates: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            heights: vec![0.0, 0.1, 0.2, 0.4, 0.8],
            widths: vec![0.1, 0.2, 0.4],
            resolution: 6,
            max_cells: 1 << 21,
            candidates: 4,
        }
    }
}

/// Relative accuracy of the scan; predicted defects closer to zero than this
/// are not sent to the grid.
const SCAN_NOISE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Witness {
    pub field: Field,
    pub report: PositivityReport,
    /// defect predicted by the semi-analytic scan
    pub predicted: f64,
    /// `(height, width)` of the positive bump
    pub first: (f64, f64),
    /// `(height, width)` of the negative bump
    pub second: (f64, f64),
    /// mass of the negative bump
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct SignWitnesses {
    pub negative: Witness,
    pub positive: Witness,
}

/// `x^ν K_ν(x)` tabulated in `ln x`.
struct BesselTable {
    nu: f64,
    ln_lo: f64,
    step: f64,
    ln_values: Vec<f64>,
    at_zero: f64,
}

impl BesselTable {
    const LO: f64 = 1e-10;
    const HI: f64 = 90.0;
    const POINTS: usize = 4096;

    fn new(nu: f64) -> Self {
        let ln_lo = Self::LO.ln();
        let step = (Self::HI.ln() - ln_lo) / (Self::POINTS - 1) as f64;
        let ln_values = (0..Self::POINTS)
            .into_par_iter()
            .map(|k| {
                let x = (ln_lo + step * k as f64).exp();
                nu * x.ln() + bessel_k(nu, x).ln()
            })
            .collect();
        Self { nu, ln_lo, step, ln_values, at_zero: 2f64.powf(nu - 1.0) * gamma(nu) }
    }

    fn eval(&self, x: f64) -> f64 {
        if x <= Self::LO {
            return self.at_zero;
        }
        if x >= Self::HI {
            return 0.0;
        }
        let u = (x.ln() - self.ln_lo) / self.step;
        let k = (u as usize).min(Self::POINTS - 2);
        let f = u - k as f64;
        ((1.0 - f) * self.ln_values[k] + f * self.ln_values[k + 1]).exp()
    }
}

/// `K_ν(x) = ∫_0^∞ e^{-x cosh u} cosh(νu) du`.
fn bessel_k(nu: f64, x: f64) -> f64 {
    let top = (1.0 + 60.0 / x).acosh();
    let panels = (top / 0.5).ceil() as usize;
    let breaks: Vec<f64> = (0..=panels).map(|k| top * k as f64 / panels as f64).collect();
    // factor e^{-x} out to keep large x representable
    gl_panels(&breaks, 16, |u| (-x * (u.cosh() - 1.0)).exp() * (nu * u).cosh()) * (-x).exp()
}

#[derive(Debug, Clone, Copy)]
struct Bump {
    height: f64,
    width: f64,
}

impl Bump {
    /// Quadrature for the normal profile, a unit-mass Gaussian cut at 0.
    fn profile(&self) -> Vec<(f64, f64)> {
        let rule = gauss_legendre(24);
        let lo = (self.height - 7.0 * self.width).max(0.0);
        let hi = self.height + 7.0 * self.width;
        let mut out = Vec::new();
        for (a, b) in [(lo, self.height.max(lo)), (self.height.max(lo), hi)] {
            if b <= a {
                continue;
            }
            let (c, hw) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in rule.0.iter().zip(&rule.1) {
                let s = c + hw * x;
                let g = (-(s - self.height).powi(2) / (2.0 * self.width * self.width)).exp()
                    / ((2.0 * std::f64::consts::PI).sqrt() * self.width);
                out.push((s, w * hw * g));
            }
        }
        out
    }
}

/// `I[Θ_H φ_1, φ_2]` for truncated unit-mass Gaussians centered on the
/// `x_3` axis, through the transverse Fourier transform:
/// `(2π)^-1 ∫ ρ e^{-ρ²(w_1²+w_2²)/2} ∫∫ v_1(s) v_2(t) F(ρ, s+t) ds dt dρ`
/// with `F(ρ, τ) = 2π/Γ(λ/2) (2τ/ρ)^ν K_ν(ρτ)`, `ν = 1 - λ/2`.
fn reflected_pair(table: &BesselTable, lam: f64, a: &Bump, b: &Bump) -> f64 {
    let nu = table.nu;
    let pa = a.profile();
    let pb = b.profile();
    let sigma = (a.width * a.width + b.width * b.width).sqrt();
    let pref = 2f64.powf(nu) / gamma(0.5 * lam);
    let integrand = |rho: f64| {
        let mut inner = 0.0;
        for &(s, ws) in &pa {
            for &(t, wt) in &pb {
                inner += ws * wt * table.eval(rho * (s + t));
            }
        }
        pref * rho.powf(1.0 - 2.0 * nu) * (-0.5 * rho * rho * sigma * sigma).exp() * inner
    };
    let lo = 1e-6 / sigma;
    let mut breaks: Vec<f64> = (0..=12).map(|k| lo * (1e6f64).powf(k as f64 / 12.0)).collect();
    for k in 1..=8 {
        breaks.push((1.0 + k as f64) / sigma);
    }
    let body = gl_panels(&breaks, 16, integrand);
    // ρ^{1-2ν} behaviour below `lo`
    body + integrand(lo) * lo / (2.0 - 2.0 * nu)
}

struct Candidate {
    first: Bump,
    second: Bump,
    weight: f64,
    predicted: f64,
    relative: f64,
}

fn cell_average(center: f64, width: f64, a: f64, b: f64) -> f64 {
    let z = std::f64::consts::SQRT_2 * width;
    0.5 * (erf((b - center) / z) - erf((a - center) / z)) / (b - a)
}

fn witness_field(c: &Candidate, opts: &SearchOptions) -> Option<Field> {
    let wmin = c.first.width.min(c.second.width);
    let wmax = c.first.width.max(c.second.width);
    let h = wmin / opts.resolution as f64;
    let across = ((4.0 * wmax) / (2.0 * h)).ceil() as usize;
    let up = ((c.first.height.max(c.second.height) + 5.0 * wmax) / (2.0 * h)).ceil() as usize;
    let (nx, nz) = (4 * across, 4 * up);
    if nx * nx * nz > opts.max_cells {
        return None;
    }
    let x0 = -((2 * across) as f64) * h;
    let z0 = -((2 * up) as f64) * h;
    let grid = Grid::new(Point::new(&[x0, x0, z0]).ok()?, h, &[nx, nx, nz]).ok()?;
    let bump = |b: &Bump, idx: [usize; 3]| {
        let mut v = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            let lo = if k == 2 { z0 } else { x0 } + i as f64 * h;
            let m = if k == 2 { b.height } else { 0.0 };
            v *= cell_average(m, b.width, lo, lo + h);
        }
        v
    };
    let values = (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let idx = grid.unravel(flat);
            if z0 + idx[2] as f64 * h < 0.0 {
                return 0.0;
            }
            bump(&c.first, idx) - c.weight * bump(&c.second, idx)
        })
        .collect();
    Field::new(grid, values).ok()
}

/// Scans opposite-sign pairs of truncated Gaussians above `{x_3 = 0}` and
/// returns grid-verified fields whose reflection defect is below
/// `-3·est_error` and above `3·est_error`.
pub fn find_negative_defect(kp: &KernelParams, opts: &SearchOptions) -> Result<SignWitnesses> {
    if kp.dim() != 3 {
        return Err(Error::InvalidParameter("the sign search runs in three dimensions".into()));
    }
    if opts.heights.iter().any(|&t| t < 0.0) || opts.widths.iter().any(|&w| w <= 0.0) {
        return Err(Error::InvalidParameter("heights must be non-negative and widths positive".into()));
    }
    let lam = kp.lambda();
    let table = BesselTable::new(1.0 - 0.5 * lam);
    let bumps: Vec<Bump> = opts
        .heights
        .iter()
        .flat_map(|&height| opts.widths.iter().map(move |&width| Bump { height, width }))
        .collect();
    let m = bumps.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let values: Vec<f64> =
        pairs.par_iter().map(|&(i, j)| reflected_pair(&table, lam, &bumps[i], &bumps[j])).collect();
    let mut gram = vec![0.0; m * m];
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        gram[i * m + j] = v;
        gram[j * m + i] = v;
    }
    let mut negative = Vec::new();
    let mut positive = Vec::new();
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let (a, b, d) = (gram[i * m + i], gram[i * m + j], gram[j * m + j]);
            // weight minimizing a - 2cb + c²d
            let c = b / d;
            let best = a - b * b / d;
            negative.push(Candidate { first: bumps[i], second: bumps[j], weight: c, predicted: best, relative: best / a });
            if i < j {
                let unit = a - 2.0 * b + d;
                positive.push(Candidate {
                    first: bumps[i],
                    second: bumps[j],
                    weight: 1.0,
                    predicted: unit,
                    relative: unit / (a + d),
                });
            }
        }
    }
    negative.sort_by(|x, y| x.relative.total_cmp(&y.relative));
    positive.sort_by(|x, y| y.relative.total_cmp(&x.relative));
    log::info!(
        "sign scan: most negative relative defect {:.3e}, most positive {:.3e}",
        negative.first().map_or(0.0, |c| c.relative),
        positive.first().map_or(0.0, |c| c.relative)
    );
    let region = Region::HalfSpace(HalfSpace::upper(3));
    let verify = |list: &[Candidate], want_negative: bool| -> Result<Option<Witness>> {
        let mut tried = 0;
        for c in list {
            if tried == opts.candidates || (want_negative && c.relative >= -SCAN_NOISE) {
                break;
            }
            let Some(field) = witness_field(c, opts) else { continue };
            tried += 1;
            let report = positivity_defect(&region, &field, kp)?;
            log::info!(
                "candidate {:?}/{:?} weight {:.4}: predicted {:.4e}, grid {:.4e} ± {:.2e}",
                c.first, c.second, c.weight, c.predicted, report.defect, report.est_error
            );
            let ok = if want_negative {
                report.defect < -3.0 * report.est_error
            } else {
                report.defect > 3.0 * report.est_error
            };
            if ok {
                return Ok(Some(Witness {
                    field,
                    report,
                    predicted: c.predicted,
                    first: (c.first.height, c.first.width),
                    second: (c.second.height, c.second.width),
                    weight: c.weight,
                }));
            }
        }
        Ok(None)
    };
    let Some(negative) = verify(&negative, true)? else {
        return Err(Error::SearchFailed(format!(
            "no negative defect beyond 3 error estimates for lambda = {lam}; best scanned relative defect {:.3e}",
            negative.first().map_or(0.0, |c| c.relative)
        )));
    };
    let Some(positive) = verify(&positive, false)? else {
        return Err(Error::SearchFailed(format!("no positive defect witness verified for lambda = {lam}")));
    };
    Ok(SignWitnesses { negative, positive })
}

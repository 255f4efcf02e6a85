//! Measures invariant under half-mass inversions: hemi-balls along rays,
//! the ball mapping one axis point to another, and numerical checks that a
//! density belongs to the family `α (β + |x - y|^2)^(-N)`.

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::fields::{apply_reflection, invert_with_weight, ExtremizerSpec, Field};
use crate::fit::fit_family;
use crate::geometry::{invert_point, reflect_point, Ball, HalfSpace, Point, Region, CENTER_EPS};
use crate::mass::{ball_mass_radius, Profile, MASS_TOL};

/// Relative distance under which a point counts as lying on a sphere.
const ON_SPHERE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    /// weighted atoms
    Cloud { points: Vec<Point>, weights: Vec<f64> },
    /// non-negative density on a grid
    Density(Field),
}

/// Axis-aligned box or ball used as a measurement target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Query {
    Cuboid { lo: Point, hi: Point },
    Ball(Ball),
}

impl Query {
    fn contains(&self, x: &Point) -> bool {
        match self {
            Query::Cuboid { lo, hi } => x
                .coords()
                .iter()
                .zip(lo.coords().iter().zip(hi.coords()))
                .all(|(v, (l, h))| v > l && v < h),
            Query::Ball(b) => b.contains(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HemiBallResult {
    pub center: Point,
    pub radius: f64,
    /// `μ(B) - total/2`
    pub mass_imbalance: f64,
}

impl Measure {
    pub fn cloud(points: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidParameter("cloud needs one weight per point".into()));
        }
        let dim = points[0].dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::InvalidParameter("cloud points of mixed dimension".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("cloud weights must be finite and non-negative".into()));
        }
        let m = Self::Cloud { points, weights };
        m.checked()
    }

    /// A grid density. In one dimension an analytic tail contributes its
    /// exact mass off the box; in higher dimensions the tail is dropped and
    /// the measure is the grid density alone.
    pub fn density(v: Field) -> Result<Self> {
        if v.values().iter().any(|&x| x < 0.0) {
            return Err(Error::Domain("density takes negative values".into()));
        }
        let v = if v.dim() == 1 { v } else { v.with_tail(None) };
        Self::Density(v).checked()
    }

    fn checked(self) -> Result<Self> {
        if !(self.total_mass()? > 0.0) {
            return Err(Error::ZeroField);
        }
        Ok(self)
    }

    /// Reads `x1,...,xN,weight` rows; a non-numeric first line is a header.
    pub fn read_cloud_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if lineno == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("line {}: {e}", lineno + 1))),
            };
            if row.len() < 2 {
                return Err(Error::Parse(format!("line {}: expected coordinates and a weight", lineno + 1)));
            }
            let (w, x) = row.split_last().expect("non-empty");
            points.push(Point::new(x)?);
            weights.push(*w);
        }
        Self::cloud(points, weights)
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::Cloud { points, .. } => points[0].dim(),
            Measure::Density(v) => v.dim(),
        }
    }

    /// Total mass; a density's analytic tail counts with its full mass.
    pub fn total_mass(&self) -> Result<f64> {
        match self {
            Measure::Cloud { weights, .. } => Ok(weights.iter().sum()),
            Measure::Density(v) => {
                Ok(Profile::new(v, 1.0)?.grid_total() + off_box(v, f64::NEG_INFINITY, f64::INFINITY))
            }
        }
    }

    /// Same measure scaled to unit mass.
    pub fn normalized(&self) -> Result<Self> {
        let t = self.total_mass()?;
        Ok(match self {
            Measure::Cloud { points, weights } => {
                Measure::Cloud { points: points.clone(), weights: weights.iter().map(|w| w / t).collect() }
            }
            Measure::Density(v) => Measure::Density(v.scale(1.0 / t)),
        })
    }

    /// `μ(B)`, atoms on the sphere counting half.
    pub fn ball_mass(&self, b: &Ball) -> Result<f64> {
        match self {
            Measure::Cloud { points, weights } => {
                let (a, r) = (b.center(), b.radius());
                Ok(points
                    .iter()
                    .zip(weights)
                    .map(|(x, w)| {
                        let d = x.dist(&a);
                        if (d - r).abs() <= ON_SPHERE * r {
                            0.5 * w
                        } else if d < r {
                            *w
                        } else {
                            0.0
                        }
                    })
                    .sum())
            }
            Measure::Density(v) => {
                let (a, r) = (b.center().coords()[0], b.radius());
                Ok(Profile::new(v, 1.0)?.ball(&b.center().raw(), r) + off_box(v, a - r, a + r))
            }
        }
    }

    /// `μ({x·e > t})` with the grid mass of a density (tails ignored).
    pub fn halfspace_mass(&self, h: &HalfSpace) -> Result<f64> {
        match self {
            Measure::Cloud { points, weights } => {
                let (e, t) = (h.normal(), h.offset());
                Ok(points
                    .iter()
                    .zip(weights)
                    .map(|(x, w)| {
                        let s = x.dot(&e) - t;
                        if s.abs() <= ON_SPHERE * (1.0 + t.abs()) {
                            0.5 * w
                        } else if s > 0.0 {
                            *w
                        } else {
                            0.0
                        }
                    })
                    .sum())
            }
            Measure::Density(v) => {
                let (e, t) = (h.normal().coords()[0], h.offset());
                let (lo, hi) = if e > 0.0 { (t * e, f64::INFINITY) } else { (f64::NEG_INFINITY, t * e) };
                Ok(Profile::new(v, 1.0)?.above(&h.normal().raw(), t) + off_box(v, lo, hi))
            }
        }
    }

    /// `μ(target)`.
    pub fn query_mass(&self, target: &Query) -> Result<f64> {
        match (self, target) {
            (_, Query::Ball(b)) => self.ball_mass(b),
            (Measure::Cloud { points, weights }, q) => {
                Ok(points.iter().zip(weights).filter(|(x, _)| q.contains(x)).map(|(_, w)| w).sum())
            }
            (Measure::Density(v), Query::Cuboid { lo, hi }) => {
                Ok(cuboid_mass(v, lo, hi) + off_box(v, lo.coords()[0], hi.coords()[0]))
            }
        }
    }
}

/// `∫_{-∞}^x` of a one-dimensional family member with `2 exponent > 1`.
fn tail_cdf(t: &ExtremizerSpec, x: f64) -> f64 {
    use statrs::function::beta::{beta, beta_reg};
    let e = t.exponent;
    let full = t.alpha * t.beta.powf(0.5 - e) * beta(e - 0.5, 0.5);
    if x.is_infinite() {
        return if x > 0.0 { full } else { 0.0 };
    }
    let z = x - t.center.coords()[0];
    let upper = 0.5 * full * beta_reg(e - 0.5, 0.5, t.beta / (t.beta + z * z));
    if z >= 0.0 { full - upper } else { upper }
}

/// Tail mass of a one-dimensional density over `(lo, hi)` outside the box.
fn off_box(v: &Field, lo: f64, hi: f64) -> f64 {
    let Some(t) = v.tail() else { return 0.0 };
    if v.dim() != 1 || t.exponent <= 0.5 {
        return 0.0;
    }
    let (b0, b1) = (v.grid().origin().coords()[0], v.grid().upper().coords()[0]);
    let piece = |a: f64, b: f64| if b > a { tail_cdf(t, b) - tail_cdf(t, a) } else { 0.0 };
    piece(lo, hi.min(b0)) + piece(lo.max(b1), hi)
}

/// Grid mass of `v` in an axis-aligned box, with exact cell coverage.
fn cuboid_mass(v: &Field, lo: &Point, hi: &Point) -> f64 {
    let grid = v.grid();
    let h = grid.spacing();
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let (lo, hi) = (lo.raw(), hi.raw());
    v.values()
        .iter()
        .enumerate()
        .filter(|(_, x)| **x != 0.0)
        .map(|(i, x)| {
            let c = grid.point(i).raw();
            let mut frac = 1.0;
            for k in 0..dim {
                let a = (c[k] - 0.5 * h).max(lo[k]);
                let b = (c[k] + 0.5 * h).min(hi[k]);
                frac *= ((b - a) / h).clamp(0.0, 1.0);
            }
            x * vol * frac
        })
        .sum()
}

/// `μ(Θ⁻¹(target))` for the inversion or reflection of `region`. Clouds
/// map their atoms; densities integrate the transported density
/// `(r/|x-a|)^(2N) v(Θx)` over the target.
pub fn pushforward_mass(m: &Measure, region: &Region, target: &Query) -> Result<f64> {
    if region.dim() != m.dim() {
        return Err(Error::InvalidParameter("region and measure dimensions differ".into()));
    }
    match m {
        Measure::Cloud { points, weights } => {
            let mut acc = 0.0;
            for (x, w) in points.iter().zip(weights) {
                let y = match region {
                    Region::Ball(b) => {
                        if x.dist(&b.center()) <= CENTER_EPS * b.radius() {
                            if *w > 0.0 {
                                return Err(Error::Domain("atom at the inversion center".into()));
                            }
                            continue;
                        }
                        invert_point(b, x)?
                    }
                    Region::HalfSpace(h) => reflect_point(h, x),
                };
                if target.contains(&y) {
                    acc += w;
                }
            }
            Ok(acc)
        }
        Measure::Density(v) => {
            let image = match region {
                Region::Ball(b) => invert_with_weight(b, v, 2.0 * v.dim() as f64),
                Region::HalfSpace(h) => apply_reflection(h, v),
            };
            Measure::Density(image).query_mass(target)
        }
    }
}

/// Bisection to full precision for an increasing continuous `g` with
/// `g(lo) < 0 < g(hi)`.
fn bisect_root<F: Fn(f64) -> Result<f64>>(g: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn ray_ball(e: &Point, u: f64, rho: f64) -> Result<Ball> {
    Ball::new(e.scale(u - rho), rho)
}

fn check_unit(e: &Point, dim: usize) -> Result<()> {
    if e.dim() != dim {
        return Err(Error::InvalidParameter("direction and measure dimensions differ".into()));
    }
    if (e.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("direction must be a unit vector".into()));
    }
    Ok(())
}

/// The ball through `u e` with center on the `e` axis carrying half of
/// `μ`: `B_ρ((u - ρ) e)`, whose mass grows from 0 as `ρ` grows.
pub fn hemiball_on_ray(m: &Measure, e: &Point, u: f64) -> Result<HemiBallResult> {
    check_unit(e, m.dim())?;
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::InvalidParameter(format!("u must be positive, got {u}")));
    }
    let total = m.total_mass()?;
    let plus = m.halfspace_mass(&HalfSpace::new(*e, 0.0)?)?;
    let minus = m.halfspace_mass(&HalfSpace::new(e.scale(-1.0), 0.0)?)?;
    if (plus - minus).abs() > MASS_TOL * (plus + minus) {
        return Err(Error::InvalidParameter(format!(
            "measure is not balanced across the plane normal to e: {plus:.9e} vs {minus:.9e}"
        )));
    }
    let half = 0.5 * total;
    if let Measure::Cloud { points, weights } = m {
        return cloud_hemiball(points, weights, e, u, half);
    }
    let mass = |rho: f64| m.ball_mass(&ray_ball(e, u, rho)?);
    let mut hi = u.max(1e-3);
    let mut tries = 0;
    while mass(hi)? < half {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::Bracketing(format!("no ball through u = {u} on the ray holds half the mass")));
        }
    }
    let rho = bisect_root(|r| Ok(mass(r)? - half), 0.0, hi)?;
    let ball = ray_ball(e, u, rho)?;
    let imbalance = m.ball_mass(&ball)? - half;
    if imbalance.abs() > MASS_TOL * total {
        return Err(Error::Bracketing(format!("hemi-ball mass is off by {imbalance:.3e}")));
    }
    Ok(HemiBallResult { center: ball.center(), radius: rho, mass_imbalance: imbalance })
}

/// Atoms enter `B_ρ((u - ρ)e)` at `ρ_x = |x - ue|² / (2(u - x·e))`; the
/// radius is placed where the accumulated weight crosses one half, on an
/// atom's sphere when that atom straddles it.
fn cloud_hemiball(points: &[Point], weights: &[f64], e: &Point, u: f64, half: f64) -> Result<HemiBallResult> {
    let ue = e.scale(u);
    let mut entry: Vec<(f64, f64)> = points
        .iter()
        .zip(weights)
        .filter(|(x, w)| **w > 0.0 && x.dot(e) < u)
        .map(|(x, w)| ((*x - ue).norm_sq() / (2.0 * (u - x.dot(e))), *w))
        .collect();
    entry.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut below = 0.0;
    let mut i = 0;
    while i < entry.len() {
        let rho = entry[i].0;
        let mut j = i;
        let mut on = 0.0;
        while j < entry.len() && entry[j].0 <= rho * (1.0 + ON_SPHERE) {
            on += entry[j].1;
            j += 1;
        }
        let (before, at, after) = (below, below + 0.5 * on, below + on);
        if before >= half && i > 0 {
            // strictly between the previous sphere and this one
            let r = 0.5 * (entry[i - 1].0 + rho);
            return Ok(HemiBallResult { center: e.scale(u - r), radius: r, mass_imbalance: before - half });
        }
        if after > half || (at - half).abs() <= MASS_TOL * half {
            return Ok(HemiBallResult { center: e.scale(u - rho), radius: rho, mass_imbalance: at - half });
        }
        below = after;
        i = j;
    }
    Err(Error::Bracketing(format!("rays through u = {u} never reach half the mass")))
}

/// A hemi-ball `B` centered on the `e` axis with `Θ_B(s e) = t e`, found
/// from the sign change of `|t e - a_u| |s e - a_u| - ρ_u²` over the
/// hemi-balls through `u e`, `u ∈ [s, t]`.
pub fn solve_mapping_ball(m: &Measure, e: &Point, s: f64, t: f64) -> Result<HemiBallResult> {
    if !(s >= 0.0 && t > s && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 0 <= s < t, got s = {s}, t = {t}")));
    }
    let se = e.scale(s);
    let te = e.scale(t);
    let gap = |u: f64| -> Result<(f64, HemiBallResult)> {
        let hb = hemiball_on_ray(m, e, u)?;
        Ok(((te - hb.center).norm() * (se - hb.center).norm() - hb.radius * hb.radius, hb))
    };
    const SAMPLES: usize = 64;
    // at s = 0 the hemi-ball through u e grows like 1/u and the gap stays
    // positive as u -> 0, so the table starts a little above 0
    let lo = if s > 0.0 { s } else { t / (4.0 * SAMPLES as f64) };
    let mut table = Vec::with_capacity(SAMPLES + 1);
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for k in 0..=SAMPLES {
        let u = lo + (t - lo) * k as f64 / SAMPLES as f64;
        let (g, _) = gap(u)?;
        table.push(format!("{u:.6}:{g:.3e}"));
        if let Some((u0, g0)) = prev {
            if g0 > 0.0 && g <= 0.0 {
                bracket = Some((u0, u));
                break;
            }
        }
        prev = Some((u, g));
    }
    let (a, b) = bracket.ok_or_else(|| Error::NoSignChange(table.join(" ")))?;
    let u = bisect_root(|u| Ok(-gap(u)?.0), a, b)?;
    let (_, hb) = gap(u)?;
    let ball = Ball::new(hb.center, hb.radius)?;
    let image = invert_point(&ball, &se)?;
    let miss = image.dist(&te);
    if miss > 1e-8 {
        return Err(Error::Bracketing(format!("mapping ball misses t e by {miss:.3e}")));
    }
    Ok(hb)
}

/// Largest relative violation of `v(x) = (r/|x-a|)^(2N) v(Θ_B x)` over the
/// samples whose image stays inside the sampled box.
pub fn check_pointwise_invariance(v: &Field, b: &Ball) -> Result<f64> {
    if b.dim() != v.dim() {
        return Err(Error::InvalidParameter("ball and density dimensions differ".into()));
    }
    let grid = v.grid();
    let h = grid.spacing();
    let lo = grid.origin().raw();
    let hi = grid.upper().raw();
    let dim = grid.dim();
    let inner = |y: &Point| (0..dim).all(|k| y.coords()[k] >= lo[k] + 0.5 * h && y.coords()[k] <= hi[k] - 0.5 * h);
    let floor = 1e-12 * v.max_abs();
    let w = 2.0 * dim as f64;
    let (a, r) = (b.center(), b.radius());
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let d = x.dist(&a);
        if d <= CENTER_EPS * r {
            continue;
        }
        let y = invert_point(b, &x)?;
        if !inner(&y) {
            continue;
        }
        let vx = v.values()[i];
        let dev = (vx - (r / d).powf(w) * v.sample(&y)).abs() / vx.abs().max(floor);
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Coefficient of variation of `r_a^(2N) v(a)` across `centers`, with
/// `r_a` the radius of the half-mass ball centered at `a`.
pub fn check_mass_identity(v: &Field, centers: &[Point]) -> Result<f64> {
    if centers.is_empty() {
        return Err(Error::InvalidParameter("no centers".into()));
    }
    let w = 2.0 * v.dim() as f64;
    let mut vals = Vec::with_capacity(centers.len());
    for a in centers {
        let r = ball_mass_radius(v, 1.0, a)?.value;
        vals.push(r.powf(w) * v.sample(a));
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if mean == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(var.sqrt() / mean.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialDerivative {
    /// central difference of `v` along `x/|x|`
    pub lhs: f64,
    /// `-N v(x) / ρ`, `ρ` the radius of the hemi-ball through `x` on its ray
    pub rhs: f64,
    /// stencil step
    pub step: f64,
}

/// Both sides of `∂_r v(x) = -N v(x) / ρ(x)` for a density radial about 0.
pub fn check_radial_derivative(v: &Field, x: &Point) -> Result<RadialDerivative> {
    let u = x.norm();
    if !(u > 0.0) {
        return Err(Error::InvalidParameter("x must differ from the origin".into()));
    }
    let e = x.scale(1.0 / u);
    let step = v.grid().spacing();
    let (xp, xm) = (*x + e.scale(step), *x - e.scale(step));
    let grid = v.grid();
    let h = grid.spacing();
    let (lo, hi) = (grid.origin().raw(), grid.upper().raw());
    for y in [&xp, &xm] {
        if (0..v.dim()).any(|k| y.coords()[k] < lo[k] + 0.5 * h || y.coords()[k] > hi[k] - 0.5 * h) {
            return Err(Error::Domain("finite-difference stencil leaves the grid".into()));
        }
    }
    let lhs = (v.sample(&xp) - v.sample(&xm)) / (2.0 * step);
    let hb = hemiball_on_ray(&Measure::density(v.clone())?, &e, u)?;
    let rhs = -(v.dim() as f64) * v.sample(x) / hb.radius;
    Ok(RadialDerivative { lhs, rhs, step })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityFit {
    pub alpha: f64,
    pub beta: f64,
    pub center: Point,
    /// relative `L¹` residual on the grid
    pub fit_error: f64,
    /// the fitted core is narrower than two cells, so the member's mass
    /// (`∝ β^(-N/2)` at fixed tail) is not resolved and grows under refinement
    pub mass_divergent: bool,
}

/// Fits `α (β + |x - y|^2)^(-N)` to `v`.
pub fn fit_invariant_density(v: &Field) -> Result<DensityFit> {
    if v.values().iter().any(|&x| x < 0.0) {
        return Err(Error::Domain("density takes negative values".into()));
    }
    let fit = fit_family(v, v.dim() as f64, 1.0, 1.0)?;
    let h = v.grid().spacing();
    Ok(DensityFit {
        alpha: fit.spec.alpha,
        beta: fit.spec.beta,
        center: fit.spec.center,
        fit_error: fit.fit_error,
        mass_divergent: fit.spec.beta.sqrt() < 2.0 * h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialReport {
    /// largest `|μ(B) - μ(B')| / μ(R^N)` over congruent balls at equal
    /// distance from the origin
    pub radial_violation: f64,
    /// largest `(μ(B_far) - μ(B_near))_+ / μ(R^N)` over congruent balls on
    /// a ray separated by `t - r > t' + r`
    pub monotone_violation: f64,
    pub pairs: usize,
}

fn directions(dim: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for k in 0..dim {
        out.push(Point::axis(dim, k));
        out.push(Point::axis(dim, k).scale(-1.0));
    }
    if dim >= 2 {
        let s = 1.0 / (dim as f64).sqrt();
        for signs in 0..(1usize << dim) {
            let c: Vec<f64> = (0..dim).map(|k| if signs >> k & 1 == 1 { -s } else { s }).collect();
            out.push(Point::new(&c).expect("finite"));
        }
    }
    out
}

/// Samples ball pairs about `origin` at scales set by the half-mass radius
/// there and reports the worst radiality and monotonicity violations.
pub fn check_radial_decreasing(m: &Measure, origin: &Point) -> Result<RadialReport> {
    if origin.dim() != m.dim() {
        return Err(Error::InvalidParameter("origin and measure dimensions differ".into()));
    }
    let total = m.total_mass()?;
    let scale = match m {
        Measure::Density(v) => ball_mass_radius(v, 1.0, origin)?.value,
        Measure::Cloud { points, weights } => {
            let mut d: Vec<(f64, f64)> = points.iter().zip(weights).map(|(x, w)| (x.dist(origin), *w)).collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut acc = 0.0;
            d.iter().find(|(_, w)| {
                acc += w;
                acc >= 0.5 * total
            }).map(|(r, _)| *r).unwrap_or(1.0).max(f64::MIN_POSITIVE)
        }
    };
    let dirs = directions(m.dim());
    let mut radial = 0.0f64;
    let mut monotone = 0.0f64;
    let mut pairs = 0;
    for &rf in &[0.1, 0.25, 0.5] {
        let r = rf * scale;
        for &tf in &[0.0, 0.5, 1.0, 2.0] {
            let t = tf * scale;
            let masses: Vec<f64> = dirs
                .iter()
                .map(|e| m.ball_mass(&Ball::new(*origin + e.scale(t), r)?))
                .collect::<Result<_>>()?;
            for i in 1..masses.len() {
                radial = radial.max((masses[i] - masses[0]).abs() / total);
                pairs += 1;
            }
            // a farther congruent ball on every ray
            let far = t + 2.0 * r + 0.25 * scale;
            for (e, near) in dirs.iter().zip(&masses) {
                let mf = m.ball_mass(&Ball::new(*origin + e.scale(far), r)?)?;
                monotone = monotone.max((mf - near) / total);
                pairs += 1;
            }
        }
    }
    Ok(RadialReport { radial_violation: radial, monotone_violation: monotone.max(0.0), pairs })
}

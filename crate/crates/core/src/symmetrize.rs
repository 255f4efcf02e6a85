//! Iterated splicing across half-mass balls and half-spaces.
//!
//! Each step replaces `f` by whichever of `f^i`, `f^o` has the larger
//! Rayleigh quotient, provided it beats `f`. A sweep visits the median
//! half-space along every axis and then a handful of half-mass balls around
//! the centroid; the run stops once a sweep gains less than `tol_stop`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{rayleigh_with_error, sharp_constant};
use crate::error::{Error, Result};
use crate::fields::{split_in_out, Field};
use crate::fit::{fit_family, FamilyFit};
use crate::geometry::{Ball, HalfSpace, Point, Region};
use crate::mass::{ball_mass_radius, halfspace_mass_offset, region_fraction, Bisection};
use crate::params::KernelParams;

/// Largest accepted `|inside fraction - 1/2|` of a splicing region.
pub const BISECT_TOL: f64 = 1e-5;

/// Radius of the ball about `a` carrying half of `∫|f|^p`.
pub fn hemiball_radius(f: &Field, kp: &KernelParams, a: &Point) -> Result<Bisection> {
    ball_mass_radius(f, kp.p(), a)
}

/// Offset `t` with half of `∫|f|^p` in `{x·e > t}`.
pub fn hemispace_offset(f: &Field, kp: &KernelParams, e: &Point) -> Result<Bisection> {
    halfspace_mass_offset(f, kp.p(), e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Inner,
    Outer,
    Keep,
}

impl Choice {
    pub fn as_str(&self) -> &'static str {
        match self {
            Choice::Inner => "i",
            Choice::Outer => "o",
            Choice::Keep => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub region: Region,
    pub quotient_before: f64,
    pub quotient_after: f64,
    /// spacing-doubling estimate of the returned field's quotient
    pub est_error: f64,
    pub choice: Choice,
}

impl StepRecord {
    fn csv_row(&self, step: usize) -> String {
        let (kind, center, size) = match self.region {
            Region::Ball(b) => ("ball", b.center(), b.radius()),
            Region::HalfSpace(h) => ("halfspace", h.normal(), h.offset()),
        };
        let center: Vec<String> = center.coords().iter().map(|c| format!("{c:.17e}")).collect();
        format!(
            "{step},{kind},{},{size:.17e},{:.17e},{:.17e},{},{:.17e}",
            center.join(","),
            self.quotient_before,
            self.quotient_after,
            self.choice.as_str(),
            self.est_error
        )
    }
}

/// Splices `f` across `region` and keeps the better half, or `f` itself
/// when neither half improves the quotient by more than `min_gain`
/// (relative).
pub fn symmetrization_step(
    f: &Field,
    kp: &KernelParams,
    region: &Region,
    min_gain: f64,
) -> Result<(Field, StepRecord)> {
    let frac = region_fraction(f, kp.p(), region)?;
    if (frac - 0.5).abs() > BISECT_TOL {
        return Err(Error::InvalidParameter(format!(
            "region holds {frac:.8} of the p-mass, not one half"
        )));
    }
    let (q0, e0) = rayleigh_with_error(f, kp)?;
    let (fi, fo) = split_in_out(region, f, kp)?;
    let (qi, ei) = rayleigh_with_error(&fi, kp)?;
    let (qo, eo) = rayleigh_with_error(&fo, kp)?;
    let (best, q, e, choice) =
        if qi >= qo { (fi, qi, ei, Choice::Inner) } else { (fo, qo, eo, Choice::Outer) };
    let record = StepRecord { region: *region, quotient_before: q0, quotient_after: q, est_error: e, choice };
    if q > q0 * (1.0 + min_gain) {
        Ok((best, record))
    } else {
        Ok((f.clone(), StepRecord { quotient_after: q0, est_error: e0, choice: Choice::Keep, ..record }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub max_sweeps: usize,
    /// stop when a sweep raises the quotient by less than this (relative)
    pub tol_stop: f64,
    /// ball centers at `centroid ± s r0 e_k` for each `s`, `r0` the
    /// hemi-ball radius about the centroid
    pub ball_offsets: Vec<f64>,
    pub min_gain: f64,
    /// random centers and directions instead of the axis sweep
    pub seed: Option<u64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { max_sweeps: 50, tol_stop: 1e-5, ball_offsets: vec![0.5, 1.0], min_gain: 1e-12, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizationTrace {
    pub steps: Vec<StepRecord>,
    pub sweeps: usize,
    pub converged: bool,
    pub field: Field,
    pub final_fit: FamilyFit,
    pub sharp_constant: f64,
}

impl SymmetrizationTrace {
    pub fn csv_header(dim: usize) -> String {
        let centers: Vec<String> = (1..=dim).map(|k| format!("center_{k}")).collect();
        format!(
            "step,region_kind,{},radius_or_offset,quotient_before,quotient_after,choice,est_error",
            centers.join(",")
        )
    }

    pub fn csv(&self) -> String {
        let mut out = Self::csv_header(self.field.dim());
        out.push('\n');
        for (i, s) in self.steps.iter().enumerate() {
            out.push_str(&s.csv_row(i));
            out.push('\n');
        }
        out
    }

    /// Steps whose quotient dropped by more than twice their estimate.
    pub fn monotonicity_violations(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.quotient_after < s.quotient_before - 2.0 * s.est_error)
            .count()
    }

    pub fn effective_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.choice != Choice::Keep).count()
    }

    pub fn final_quotient(&self) -> Option<f64> {
        self.steps.last().map(|s| s.quotient_after)
    }
}

fn unit(dim: usize, k: usize) -> Point {
    Point::axis(dim, k)
}

fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Point {
    loop {
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            let c: Vec<f64> = c.iter().map(|v| v / n).collect();
            return Point::new(&c).expect("finite");
        }
    }
}

/// Regions of one sweep; balls carry only their centers, radii are found
/// against the field current at each step.
enum Planned {
    Plane(Point),
    Ball(Point),
}

fn plan_sweep<R: Rng>(f: &Field, kp: &KernelParams, schedule: &Schedule, rng: Option<&mut R>) -> Result<Vec<Planned>> {
    let dim = f.dim();
    let c = f.centroid(kp.p())?;
    let r0 = hemiball_radius(f, kp, &c)?.value;
    let mut plan = Vec::new();
    match rng {
        None => {
            plan.extend((0..dim).map(|k| Planned::Plane(unit(dim, k))));
            plan.push(Planned::Ball(c));
            for &s in &schedule.ball_offsets {
                for k in 0..dim {
                    plan.push(Planned::Ball(c + unit(dim, k).scale(s * r0)));
                    plan.push(Planned::Ball(c + unit(dim, k).scale(-s * r0)));
                }
            }
        }
        Some(rng) => {
            let count = 1 + 2 * dim * schedule.ball_offsets.len().max(1);
            for _ in 0..dim {
                plan.push(Planned::Plane(random_unit(dim, rng)));
            }
            for _ in 0..count {
                let s = rng.gen_range(0.0..1.0);
                plan.push(Planned::Ball(c + random_unit(dim, rng).scale(s * r0)));
            }
        }
    }
    Ok(plan)
}

/// Runs sweeps of [`symmetrization_step`] from `f0` and fits the optimizer
/// family to the result.
pub fn run_symmetrization(f0: &Field, kp: &KernelParams, schedule: &Schedule) -> Result<SymmetrizationTrace> {
    if f0.dim() != kp.dim() {
        return Err(Error::InvalidParameter("field and kernel dimensions differ".into()));
    }
    if f0.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Domain("symmetrization needs a non-negative field".into()));
    }
    if f0.is_zero() {
        return Err(Error::ZeroField);
    }
    let mut rng = schedule.seed.map(ChaCha8Rng::seed_from_u64);
    let mut f = f0.clone();
    let mut steps = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;
    let (mut q_start, _) = rayleigh_with_error(&f, kp)?;
    while sweeps < schedule.max_sweeps {
        sweeps += 1;
        for planned in plan_sweep(&f, kp, schedule, rng.as_mut())? {
            let region = match planned {
                Planned::Plane(e) => {
                    let t = hemispace_offset(&f, kp, &e)?.value;
                    Region::HalfSpace(HalfSpace::new(e, t)?)
                }
                Planned::Ball(a) => {
                    let r = hemiball_radius(&f, kp, &a)?.value;
                    if !(r > 0.0) {
                        continue;
                    }
                    Region::Ball(Ball::new(a, r)?)
                }
            };
            let (next, record) = symmetrization_step(&f, kp, &region, schedule.min_gain)?;
            log::debug!("sweep {sweeps}: {:?} {:.12} -> {:.12}", record.choice, record.quotient_before, record.quotient_after);
            f = next;
            steps.push(record);
        }
        let q_end = steps.last().map(|s| s.quotient_after).unwrap_or(q_start);
        let gain = (q_end - q_start) / q_start;
        log::info!("sweep {sweeps}: quotient {q_end:.10}, gain {gain:.3e}");
        q_start = q_end;
        if gain < schedule.tol_stop {
            converged = true;
            break;
        }
    }
    let p = kp.p();
    let final_fit = fit_family(&f, kp.weight() / 2.0, p, p)?;
    Ok(SymmetrizationTrace { steps, sweeps, converged, field: f, final_fit, sharp_constant: sharp_constant(kp) })
}

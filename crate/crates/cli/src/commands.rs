//! One function per command; each fills a [`Report`].

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use thiserror::Error;

use confpos::{
    ball_mass_radius, check_mass_identity, check_pointwise_invariance, check_radial_decreasing,
    check_radial_derivative, energy_direct, find_negative_defect, fit_invariant_density,
    halfspace_representation, hemiball_on_ray, invariance_check, lp_norm, make_extremizer,
    newton_zero_overlap, positivity_defect, rayleigh_with_error, region_fraction, run_symmetrization,
    sharp_constant, apply_reflection, Ball, EnergyResult, ExtremizerSpec, Field, Grid, HalfSpace,
    KernelParams, LiftedOp, Measure, Point, PositivityReport, Region, Schedule, SearchOptions,
    SymmetrizationTrace, Witness,
};

use crate::config::{Command, ConfigError, FunctionSpec, RegionSpec, RunConfig};
use crate::report::{num, Report, Verdict};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numeric(#[from] confpos::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// 2 for anything the caller can fix in the config or inputs, 3 for
    /// failures of the numerics themselves.
    pub fn exit_code(&self) -> i32 {
        use confpos::Error as E;
        match self {
            RunError::Numeric(
                E::Bracketing(_) | E::NoSignChange(_) | E::SearchFailed(_) | E::DegenerateFit(_) | E::GridMismatch,
            ) => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, RunError>;

fn point(c: &[f64]) -> Result<Point> {
    Ok(Point::new(c)?)
}

fn center_or_origin(c: &Option<Vec<f64>>, dim: usize) -> Result<Point> {
    match c {
        Some(c) => point(c),
        None => Ok(Point::origin(dim)),
    }
}

fn coords(p: &Point) -> String {
    p.coords().iter().map(|c| num(*c)).collect::<Vec<_>>().join(",")
}

pub fn build_grid(cfg: &RunConfig) -> Result<Grid> {
    Ok(Grid::from_bounds(&cfg.grid.min, &cfg.grid.max, &cfg.grid.points)?)
}

pub fn build_field(cfg: &RunConfig) -> Result<Field> {
    let kp = &cfg.kernel;
    let dim = kp.dim();
    let field = match &cfg.function {
        FunctionSpec::Extremizer { alpha, beta, center } => {
            let spec = ExtremizerSpec::optimizer(*alpha, *beta, center_or_origin(center, dim)?, kp)?;
            make_extremizer(spec, kp, build_grid(cfg)?)?
        }
        FunctionSpec::Algebraic { alpha, beta, center, exponent } => {
            let spec = ExtremizerSpec::new(*alpha, *beta, center_or_origin(center, dim)?, *exponent)?;
            Field::from_spec(build_grid(cfg)?, spec)?
        }
        FunctionSpec::Indicator { center, radius } => {
            let c = center_or_origin(center, dim)?;
            let r = *radius;
            Field::from_fn(build_grid(cfg)?, |x| if x.dist(&c) < r { 1.0 } else { 0.0 })
        }
        FunctionSpec::Gaussians { bumps } => {
            let bumps: Vec<(Point, f64, f64)> =
                bumps.iter().map(|b| Ok((point(&b.center)?, b.width, b.weight))).collect::<Result<_>>()?;
            Field::from_fn(build_grid(cfg)?, |x| {
                bumps.iter().map(|(c, w, a)| a * (-x.dist(c).powi(2) / (w * w)).exp()).sum()
            })
        }
        FunctionSpec::File { path } => {
            let file = File::open(path)?;
            let f = Field::read_csv(BufReader::new(file))?;
            if f.dim() != dim {
                return Err(ConfigError::Invalid {
                    field: "function.path",
                    message: format!("field has dimension {}, kernel has {dim}", f.dim()),
                }
                .into());
            }
            f
        }
    };
    Ok(field)
}

fn build_region(spec: &RegionSpec) -> Result<Option<Region>> {
    Ok(match spec {
        RegionSpec::Ball { center, radius } => Some(Region::Ball(Ball::new(point(center)?, *radius)?)),
        RegionSpec::Halfspace { normal, offset } => {
            Some(Region::HalfSpace(HalfSpace::from_direction(point(normal)?, *offset)?))
        }
        RegionSpec::Cayley => None,
    })
}

fn write_field(dir: &Path, name: &str, f: &Field) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let w = BufWriter::new(File::create(dir.join(name))?);
    f.write_csv(w)?;
    Ok(())
}

fn kernel_facts(r: &mut Report, kp: &KernelParams) {
    r.fact("dim", kp.dim());
    r.value("lambda", kp.lambda());
    r.value("p", kp.p());
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let mut report = match cfg.command {
        Command::Energy => energy(cfg)?,
        Command::Transform => transform(cfg, out)?,
        Command::Positivity => positivity(cfg)?,
        Command::Represent => represent(cfg)?,
        Command::Symmetrize => symmetrize(cfg, out)?,
        Command::Hemiball => hemiball(cfg)?,
        Command::LizhuCheck => lizhu_check(cfg)?,
        Command::Counterexample => counterexample(cfg, out)?,
        Command::SharpConstant => sharp(cfg),
    };
    if let Some(seed) = cfg.seed {
        report.fact("seed", seed);
    }
    Ok(report)
}

fn energy(cfg: &RunConfig) -> Result<Report> {
    let kp = &cfg.kernel;
    let f = build_field(cfg)?;
    let e = energy_direct(&f, &f, kp)?;
    let (q, q_est) = rayleigh_with_error(&f, kp)?;
    let c = sharp_constant(kp);
    let mut r = Report::new("value,quadrature,est_error");
    r.row(e.csv_row());
    kernel_facts(&mut r, kp);
    r.value("lp_norm", lp_norm(&f, kp.p()));
    r.value("rayleigh_quotient", q);
    r.value("rayleigh_est_error", q_est);
    r.value("sharp_constant", c);
    let tol = cfg.tolerances.relative;
    r.verdict(Verdict::at_most("hls_bound", (q - c) / c, tol));
    if matches!(cfg.function, FunctionSpec::Extremizer { .. }) {
        r.verdict(Verdict::at_most("sharp_constant_match", ((q - c) / c).abs(), tol));
    }
    Ok(r)
}

fn energy_row(name: &str, e: &EnergyResult) -> String {
    format!("{name},{}", e.csv_row())
}

fn transform(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let kp = &cfg.kernel;
    let f = build_field(cfg)?;
    let spec = cfg.region.as_ref().expect("validated");
    let op = match build_region(spec)? {
        Some(region) => LiftedOp::from(region),
        None => LiftedOp::Cayley,
    };
    let check = invariance_check(&f, &op, kp)?;
    let mut r = Report::new("quantity,value,quadrature,est_error");
    r.row(energy_row("before", &check.before));
    r.row(energy_row("after", &check.after));
    kernel_facts(&mut r, kp);
    r.value("gap", check.gap());
    r.verdict(Verdict::at_most("energy_invariance", check.gap(), check.combined_est()));
    if cfg.write_fields {
        write_field(out, "transformed.csv", &op.apply(&f, kp))?;
    }
    Ok(r)
}

fn positivity(cfg: &RunConfig) -> Result<Report> {
    let kp = &cfg.kernel;
    let f = build_field(cfg)?;
    let region = build_region(cfg.region.as_ref().expect("validated"))?.expect("validated");
    let rep = positivity_defect(&region, &f, kp)?;
    let mut r = Report::new(PositivityReport::CSV_HEADER);
    r.row(rep.csv_row());
    kernel_facts(&mut r, kp);
    r.fact("positivity_valid", kp.positivity_valid());
    r.fact("strictly_positive", kp.strictly_positive());
    r.value("est_error", rep.est_error);
    r.value("est_error_via_g", rep.est_error_via_g);
    r.value("asymmetry", rep.asymmetry);
    r.fact("consistent", rep.consistent());
    let t = &cfg.tolerances;
    if kp.positivity_valid() {
        r.verdict(Verdict::at_least("nonnegativity", rep.defect, -t.defect_factor * rep.est_error));
        if kp.strictly_positive() && rep.asymmetry > t.asymmetry {
            r.verdict(Verdict::at_least("strictness", rep.defect, t.strict_factor * rep.est_error));
        }
        if let Some(o) = rep.oracle_value {
            r.verdict(Verdict::at_most(
                "representation_match",
                (rep.defect_via_g - o).abs(),
                t.defect_factor * rep.est_error_via_g,
            ));
        }
    } else {
        r.suppress("nonnegativity", "positivity does not hold for lambda < N - 2");
    }
    Ok(r)
}

fn represent(cfg: &RunConfig) -> Result<Report> {
    let kp = &cfg.kernel;
    let f = build_field(cfg)?;
    let value = halfspace_representation(&f, kp)?;
    let reflected = apply_reflection(&HalfSpace::upper(kp.dim()), &f);
    let direct = energy_direct(&reflected, &f, kp)?;
    let mut r = Report::new("representation,direct,quadrature,est_error");
    r.row(format!("{},{}", num(value), direct.csv_row()));
    kernel_facts(&mut r, kp);
    r.value("difference", (value - direct.value).abs());
    r.verdict(Verdict::at_most("representation_match", (value - direct.value).abs(), direct.est_error));
    if let Some(&want) = cfg.expected.as_ref().and_then(|e| e.first()) {
        r.value("expected", want);
        r.verdict(Verdict::at_most("expected_value", ((value - want) / want).abs(), cfg.tolerances.relative));
    }
    Ok(r)
}

fn schedule(cfg: &RunConfig) -> Schedule {
    let s = &cfg.schedule;
    let d = Schedule::default();
    Schedule {
        max_sweeps: s.max_sweeps.unwrap_or(d.max_sweeps),
        tol_stop: s.tol_stop.unwrap_or(d.tol_stop),
        ball_offsets: s.ball_offsets.clone().unwrap_or(d.ball_offsets),
        min_gain: s.min_gain.unwrap_or(d.min_gain),
        seed: cfg.seed,
    }
}

fn symmetrize(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let kp = &cfg.kernel;
    let f0 = build_field(cfg)?;
    let sched = schedule(cfg);
    let trace = run_symmetrization(&f0, kp, &sched)?;
    let mut r = Report::new(SymmetrizationTrace::csv_header(kp.dim()));
    for line in trace.csv().lines().skip(1) {
        r.row(line);
    }
    kernel_facts(&mut r, kp);
    r.fact("sweeps", trace.sweeps);
    r.fact("converged", trace.converged);
    r.fact("effective_steps", trace.effective_steps());
    r.fact("monotonicity_violations", trace.monotonicity_violations());
    if let Some(q) = trace.final_quotient() {
        r.value("final_quotient", q);
    }
    r.value("sharp_constant", trace.sharp_constant);
    let fit = &trace.final_fit;
    r.value("fit_alpha", fit.spec.alpha);
    r.value("fit_beta", fit.spec.beta);
    for (k, c) in fit.spec.center.coords().iter().enumerate() {
        r.value(&format!("fit_center_{}", k + 1), *c);
    }
    r.value("fit_error", fit.fit_error);
    r.verdict(Verdict::at_most("extremizer_fit", fit.fit_error, cfg.tolerances.fit_error));
    r.verdict(Verdict::at_most("monotone_trace", trace.monotonicity_violations() as f64, 0.0));
    r.verdict(Verdict::at_most("sweeps", trace.sweeps as f64, sched.max_sweeps as f64));
    if cfg.write_fields {
        write_field(out, "symmetrized.csv", &trace.field)?;
    }
    Ok(r)
}

fn measure(cfg: &RunConfig) -> Result<Measure> {
    match &cfg.measure {
        Some(path) => {
            let m = Measure::read_cloud_csv(BufReader::new(File::open(path)?))?;
            if m.dim() != cfg.kernel.dim() {
                return Err(ConfigError::Invalid { field: "measure", message: "dimension differs from kernel.dim".into() }
                    .into());
            }
            Ok(m)
        }
        None => Ok(Measure::density(build_field(cfg)?)?),
    }
}

fn compare_expected(r: &mut Report, cfg: &RunConfig, radii: &[f64]) {
    let Some(expected) = &cfg.expected else { return };
    for (i, (got, want)) in radii.iter().zip(expected).enumerate() {
        r.value(&format!("expected_{}", i + 1), *want);
        r.verdict(Verdict::at_most(&format!("radius_{}", i + 1), (got - want).abs(), cfg.tolerances.radius));
    }
}

fn hemiball(cfg: &RunConfig) -> Result<Report> {
    let kp = &cfg.kernel;
    let dim = kp.dim();
    let centers: Vec<String> = (1..=dim).map(|k| format!("center_{k}")).collect();
    let mut r = Report::new(format!("kind,{},radius,mass_error", centers.join(",")));
    kernel_facts(&mut r, kp);
    let tol = cfg.tolerances.mass_balance;
    let mut radii = Vec::new();
    if cfg.measure.is_none() {
        let f = build_field(cfg)?;
        let power = cfg.power.unwrap_or(kp.p());
        r.value("power", power);
        let list: Vec<Point> = match &cfg.centers {
            Some(c) => c.iter().map(|c| point(c)).collect::<Result<_>>()?,
            None if cfg.rays.is_empty() => vec![f.centroid(power)?],
            None => Vec::new(),
        };
        for (i, a) in list.iter().enumerate() {
            let b = ball_mass_radius(&f, power, a)?;
            let frac = region_fraction(&f, power, &Region::Ball(Ball::new(*a, b.value)?))?;
            let err = (frac - 0.5).abs();
            r.row(format!("ball,{},{},{}", coords(a), num(b.value), num(err)));
            r.verdict(Verdict::at_most(&format!("mass_balance_{}", i + 1), err, tol));
            radii.push(b.value);
        }
    }
    if !cfg.rays.is_empty() {
        let m = measure(cfg)?;
        let offset = radii.len();
        for (i, ray) in cfg.rays.iter().enumerate() {
            let d = point(&ray.direction)?;
            let e = d.scale(1.0 / d.norm());
            let hb = hemiball_on_ray(&m, &e, ray.u)?;
            r.row(format!("ray,{},{},{}", coords(&hb.center), num(hb.radius), num(hb.mass_imbalance)));
            r.verdict(Verdict::at_most(&format!("mass_balance_{}", offset + i + 1), hb.mass_imbalance, tol));
            radii.push(hb.radius);
        }
    }
    compare_expected(&mut r, cfg, &radii);
    Ok(r)
}

fn lizhu_check(cfg: &RunConfig) -> Result<Report> {
    let kp = &cfg.kernel;
    let dim = kp.dim();
    let mut r = Report::new("check,value");
    kernel_facts(&mut r, kp);
    if cfg.measure.is_some() {
        let m = measure(cfg)?.normalized()?;
        let origin = match cfg.centers.as_ref().and_then(|c| c.first()) {
            Some(c) => point(c)?,
            None => Point::origin(dim),
        };
        let rad = check_radial_decreasing(&m, &origin)?;
        r.row(format!("radial_violation,{}", num(rad.radial_violation)));
        r.row(format!("monotone_violation,{}", num(rad.monotone_violation)));
        r.fact("pairs", rad.pairs);
        return Ok(r);
    }
    let v = build_field(cfg)?;
    let t = &cfg.tolerances;
    let fit = fit_invariant_density(&v)?;
    let e0 = Point::axis(dim, 0);
    let width = fit.beta.sqrt();
    let centers: Vec<Point> = match &cfg.centers {
        Some(c) => c.iter().map(|c| point(c)).collect::<Result<_>>()?,
        None => (0..10).map(|i| fit.center + e0.scale(width * (-1.0 + 2.0 * i as f64 / 9.0))).collect(),
    };
    let cv = check_mass_identity(&v, &centers)?;
    let ball = match &cfg.region {
        Some(RegionSpec::Ball { center, radius }) => Ball::new(point(center)?, *radius)?,
        Some(_) => {
            return Err(ConfigError::Invalid { field: "region", message: "lizhu-check takes a ball".into() }.into())
        }
        // orthogonal to the fitted family: r^2 = β + |a - y|^2
        None => Ball::new(fit.center + e0.scale(width), (2.0 * fit.beta).sqrt())?,
    };
    let pointwise = check_pointwise_invariance(&v, &ball)?;
    let rad = check_radial_decreasing(&Measure::density(v.clone())?.normalized()?, &fit.center)?;
    r.row(format!("mass_identity_cv,{}", num(cv)));
    r.row(format!("pointwise_deviation,{}", num(pointwise)));
    r.row(format!("fit_error,{}", num(fit.fit_error)));
    r.row(format!("radial_violation,{}", num(rad.radial_violation)));
    r.row(format!("monotone_violation,{}", num(rad.monotone_violation)));
    r.value("fit_alpha", fit.alpha);
    r.value("fit_beta", fit.beta);
    for (k, c) in fit.center.coords().iter().enumerate() {
        r.value(&format!("fit_center_{}", k + 1), *c);
    }
    r.fact("mass_divergent", fit.mass_divergent);
    r.fact("ball_center", coords(&ball.center()).replace(',', " "));
    r.value("ball_radius", ball.radius());
    if let Ok(d) = check_radial_derivative(&v, &(fit.center + e0.scale(width))) {
        r.value("radial_derivative_lhs", d.lhs);
        r.value("radial_derivative_rhs", d.rhs);
    }
    r.verdict(Verdict::at_most("mass_identity", cv, t.mass_cv));
    r.verdict(Verdict::at_most("pointwise_invariance", pointwise, t.pointwise));
    if cfg.expected.is_some() {
        let radii: Vec<f64> =
            centers.iter().map(|a| Ok(ball_mass_radius(&v, 1.0, a)?.value)).collect::<Result<_>>()?;
        compare_expected(&mut r, cfg, &radii);
    }
    Ok(r)
}

fn witness_row(sign: &str, w: &Witness) -> String {
    format!(
        "{sign},{},{},{},{},{},{},{},{}",
        num(w.report.defect),
        num(w.report.est_error),
        num(w.predicted),
        num(w.first.0),
        num(w.first.1),
        num(w.second.0),
        num(w.second.1),
        num(w.weight)
    )
}

fn counterexample(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let kp = &cfg.kernel;
    let s = &cfg.search;
    let t = &cfg.tolerances;
    if (kp.lambda() - 1.0).abs() <= 1e-12 {
        let ex = newton_zero_overlap(kp, s.cells.unwrap_or(32))?;
        let mut r = Report::new("quantity,value,quadrature,est_error");
        r.row(energy_row("overlap", &ex.overlap));
        r.row(energy_row("self_energy", &ex.self_energy));
        r.row(energy_row("grid_self_energy", &ex.grid_self_energy));
        kernel_facts(&mut r, kp);
        r.value("mass", ex.mass);
        r.verdict(Verdict::at_most("zero_overlap", ex.overlap.value.abs(), ex.overlap.est_error));
        r.verdict(Verdict::at_least(
            "self_energy_positive",
            ex.self_energy.value,
            t.overlap_factor * ex.overlap.est_error,
        ));
        if cfg.write_fields {
            write_field(out, "zero_overlap.csv", &ex.field)?;
        }
        return Ok(r);
    }
    let d = SearchOptions::default();
    let opts = SearchOptions {
        heights: s.heights.clone().unwrap_or(d.heights),
        widths: s.widths.clone().unwrap_or(d.widths),
        resolution: s.resolution.unwrap_or(d.resolution),
        max_cells: s.max_cells.unwrap_or(d.max_cells),
        candidates: s.candidates.unwrap_or(d.candidates),
    };
    let w = find_negative_defect(kp, &opts)?;
    let mut r = Report::new(
        "sign,defect,est_error,predicted,first_height,first_width,second_height,second_width,weight",
    );
    r.row(witness_row("negative", &w.negative));
    r.row(witness_row("positive", &w.positive));
    kernel_facts(&mut r, kp);
    r.fact("positivity_valid", kp.positivity_valid());
    let (n, p) = (&w.negative.report, &w.positive.report);
    r.verdict(Verdict::at_most("negative_witness", n.defect, -t.witness_factor * n.est_error));
    r.verdict(Verdict::at_least("positive_witness", p.defect, t.witness_factor * p.est_error));
    if cfg.write_fields {
        write_field(out, "witness_negative.csv", &w.negative.field)?;
        write_field(out, "witness_positive.csv", &w.positive.field)?;
    }
    Ok(r)
}

fn sharp(cfg: &RunConfig) -> Report {
    let kp = &cfg.kernel;
    let c = sharp_constant(kp);
    let mut r = Report::new("dim,lambda,p,value");
    r.row(format!("{},{},{},{}", kp.dim(), num(kp.lambda()), num(kp.p()), num(c)));
    kernel_facts(&mut r, kp);
    r.verdict(Verdict::at_least("finite_positive", if c.is_finite() { c } else { f64::NAN }, f64::MIN_POSITIVE));
    if let Some(&want) = cfg.expected.as_ref().and_then(|e| e.first()) {
        r.value("expected", want);
        r.verdict(Verdict::at_most("expected_value", ((c - want) / want).abs(), cfg.tolerances.relative));
    }
    r
}

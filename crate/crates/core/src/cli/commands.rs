use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::{Direction, Point};
use crate::grid::io::read_sinogram;
use crate::grid::scenario::{Region, ScenarioSpec, SymbolChoice};
use crate::grid::{
    Field, GridSpec, LinearCombination, Profile, RadialFunction, RadialLift, RadialProfile, RegionMask, ScalarField2D,
    Sinogram, SinogramGeometry, ZeroField,
};
use crate::microlocal::{
    characteristic_directions, covector_for, radial_example_weights, trace_bicharacteristic, trapping_check,
    IdentificationSymbol, LinearSymbol, Symbol, TraceOptions, TrapOptions, TrapReport, Verdict,
    DEFAULT_SCAN,
};
use crate::radial::{
    abel_forward, abel_inverse, equivalent_source, null_pair, radial_relative_error, write_radial_csv, AbelOptions,
    ProfileOptions,
};
use crate::recon::{
    cgls_solve, holder_probe, kernel_probe_from, null_diagnostics, q_reduce, radial_extent, shell_wave, smooth_radial_mode,
    radial_profiles, smooth_sample, stability_ratio, CglsOptions, DiscreteOperator, HolderOptions,
    KernelProbeOptions, OperatorOptions,
};
use crate::xray::{attenuated_xray, LinearizedOperator, Weight, WeightField};

use super::{Cli, Command, Expectation, Output};

pub(super) fn dispatch(cli: &Cli, spec: &ScenarioSpec, out: &mut Output) -> Result<Option<String>> {
    match &cli.command {
        Command::Forward => forward(spec, out),
        Command::Linearize => linearize(spec, out),
        Command::Weights(args) => weights(spec, args.angle, out),
        Command::Rays(args) => rays(cli, spec, &args.from, args.step, out),
        Command::Trap(args) => trap(cli, spec, args.expect, args.seeds, args.step, out),
        Command::RadialNull => radial_null(cli, spec, out),
        Command::EquivalentSource => equivalent(cli, spec, out),
        Command::Reconstruct(args) => reconstruct(cli, spec, args.assume_non_trapping, args.data.as_deref(), out),
        Command::ProbeKernel(args) => probe_kernel(cli, spec, args.probes, args.hints, args.order, out),
        Command::ProbeStability(args) => probe_stability(spec, args, out),
        Command::Verify => verify(out),
    }
}

fn background(spec: &ScenarioSpec) -> (Arc<dyn Field>, Arc<dyn Field>) {
    (Arc::new(spec.a.clone()), Arc::new(spec.f.clone()))
}

fn weight_pair(spec: &ScenarioSpec) -> (WeightField, WeightField) {
    match spec.symbol {
        SymbolChoice::ExRadial => radial_example_weights(),
        SymbolChoice::Identification => {
            let (a, f) = background(spec);
            let op = LinearizedOperator::new(a, f, spec.h);
            (op.weight_field(), op.attenuation_field())
        }
    }
}

fn symbol(spec: &ScenarioSpec) -> Box<dyn Symbol> {
    match spec.symbol {
        SymbolChoice::ExRadial => Box::new(LinearSymbol::default()),
        SymbolChoice::Identification => {
            let (a, f) = background(spec);
            Box::new(IdentificationSymbol::new(a, f, spec.h))
        }
    }
}

fn region(spec: &ScenarioSpec) -> Result<(Region, RegionMask)> {
    let region = spec
        .region
        .ok_or_else(|| Error::Schema("this command needs a `region`".into()))?;
    let mask = region.mask(spec.grid)?;
    Ok((region, mask))
}

fn operator(spec: &ScenarioSpec, mask: &RegionMask) -> Result<DiscreteOperator> {
    let opts = OperatorOptions::default();
    match spec.symbol {
        SymbolChoice::ExRadial => {
            let (w1, w2) = radial_example_weights();
            DiscreteOperator::from_weights(&w1, &w2, mask, spec.sinogram, opts)
        }
        SymbolChoice::Identification => {
            let (a, f) = background(spec);
            DiscreteOperator::build(&LinearizedOperator::new(a, f, spec.h), mask, spec.sinogram, opts)
        }
    }
}

fn radial_input(ph: &crate::grid::Phantom, name: &str) -> Result<crate::grid::RadialPhantom> {
    ph.radial().ok_or_else(|| {
        Error::InvalidParameter(format!("`{name}` must consist of unstretched primitives centred at the origin"))
    })
}

fn profile_options(spec: &ScenarioSpec) -> ProfileOptions {
    ProfileOptions {
        h: spec.h,
        ..ProfileOptions::default()
    }
}

fn sup_ratio(num: &Sinogram, den: &Sinogram) -> f64 {
    let d = den.max_abs();
    if d > 0.0 {
        num.max_abs() / d
    } else {
        num.max_abs()
    }
}

/// Runs the trapping check and returns the guard message on a trapped verdict.
fn require_non_trapping(spec: &ScenarioSpec, mask: &RegionMask, out: &mut Output) -> Result<Option<String>> {
    let report = trapping_check(symbol(spec).as_ref(), mask, &TrapOptions::default())?;
    out.json("trap.json", &report)?;
    Ok((report.verdict == Verdict::Trapped)
        .then(|| "region is TRAPPED but the command assumes a non-trapping region".to_string()))
}

fn forward(spec: &ScenarioSpec, out: &mut Output) -> Result<Option<String>> {
    let s = attenuated_xray(&spec.a, &spec.f, spec.sinogram, spec.h)?;
    out.sinogram("sinogram", &s)?;
    out.param("h", spec.h);
    out.json("forward.json", &json!({ "geometry": spec.sinogram, "max_abs": s.max_abs() }))?;
    Ok(None)
}

fn linearize(spec: &ScenarioSpec, out: &mut Output) -> Result<Option<String>> {
    let (a, f) = background(spec);
    let op = LinearizedOperator::new(a.clone(), f.clone(), spec.h);
    let d = op.forward(&spec.da, &spec.df, spec.sinogram)?;
    out.sinogram("linearized", &d)?;
    let eps = spec.epsilon;
    let a2 = LinearCombination::new().with(1.0, a.clone()).with(eps, Arc::new(spec.da.clone()));
    let f2 = LinearCombination::new().with(1.0, f.clone()).with(eps, Arc::new(spec.df.clone()));
    let x1 = attenuated_xray(a.as_ref(), f.as_ref(), spec.sinogram, spec.h)?;
    let x2 = attenuated_xray(&a2, &f2, spec.sinogram, spec.h)?;
    let taylor = x2.axpy(-1.0, &x1)?.scaled(1.0 / eps).axpy(-1.0, &d)?;
    out.param("epsilon", eps);
    out.json(
        "linearize.json",
        &json!({
            "max_abs": d.max_abs(),
            "epsilon": eps,
            "taylor_residual": sup_ratio(&taylor, &d),
        }),
    )?;
    Ok(None)
}

fn weights(spec: &ScenarioSpec, angle_deg: f64, out: &mut Output) -> Result<Option<String>> {
    let theta = Direction::from_angle(angle_deg.to_radians());
    let (w1, w2) = weight_pair(spec);
    let sym = symbol(spec);
    let g = spec.grid;
    out.field("w1", &ScalarField2D::from_fn(g, |x| w1.eval(x, theta))?)?;
    out.field("w2", &ScalarField2D::from_fn(g, |x| w2.eval(x, theta))?)?;
    let det = ScalarField2D::from_fn(g, |x| sym.value(x, theta))?;
    out.field("determinant", &det)?;
    out.param("angle_deg", angle_deg);
    out.json(
        "weights.json",
        &json!({ "angle_deg": angle_deg, "determinant_max_abs": det.max_abs() }),
    )?;
    Ok(None)
}

#[derive(Serialize)]
struct RaySummary {
    seed: Point,
    angle: Option<f64>,
    whole_circle: bool,
    termination: Option<crate::microlocal::Termination>,
    steps: usize,
    max_drift: f64,
    /// `max ||x(t)| − |x(0)||` along the recorded states.
    radius_drift: f64,
}

fn rays(cli: &Cli, spec: &ScenarioSpec, from: &[Point], step: f64, out: &mut Output) -> Result<Option<String>> {
    let seeds: Vec<Point> = if from.is_empty() {
        vec![[0.25, 0.0], [0.5, 0.0], [0.75, 0.0], [0.0, 0.0]]
    } else {
        from.to_vec()
    };
    let sym = symbol(spec);
    let opts = TraceOptions {
        step,
        l_max: cli.lmax.unwrap_or(10.0),
        ..TraceOptions::default()
    };
    let domain = spec.grid.domain;
    let inside = |x: Point| domain.contains(x);
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (k, &x0) in seeds.iter().enumerate() {
        let chars = characteristic_directions(sym.as_ref(), x0, DEFAULT_SCAN);
        let angle = match chars.directions().first() {
            Some(c) => Some(c.angle),
            None if chars.is_whole_circle() => Some(0.0),
            None => None,
        };
        let Some(angle) = angle else {
            summary.push(RaySummary {
                seed: x0,
                angle: None,
                whole_circle: false,
                termination: None,
                steps: 0,
                max_drift: 0.0,
                radius_drift: 0.0,
            });
            continue;
        };
        let ray = trace_bicharacteristic(sym.as_ref(), x0, covector_for(Direction::from_angle(angle)), &opts, &inside)?;
        let r0 = x0[0].hypot(x0[1]);
        let radius_drift = ray
            .states
            .iter()
            .map(|s| (s.x[0].hypot(s.x[1]) - r0).abs())
            .fold(0.0, f64::max);
        rows.extend(
            ray.states
                .iter()
                .map(|s| vec![k as f64, s.t, s.x[0], s.x[1], s.xi[0], s.xi[1], s.p0]),
        );
        summary.push(RaySummary {
            seed: x0,
            angle: Some(angle),
            whole_circle: chars.is_whole_circle(),
            termination: Some(ray.termination),
            steps: ray.steps,
            max_drift: ray.max_drift,
            radius_drift,
        });
    }
    out.param("step", step);
    out.param("l_max", opts.l_max);
    out.csv("rays.csv", "ray,t,x,y,xi1,xi2,p0", rows)?;
    out.json("rays.json", &summary)?;
    Ok(None)
}

fn write_trap(report: &TrapReport, out: &mut Output) -> Result<()> {
    out.json("trap.json", report)?;
    let rows = report.witnesses.iter().enumerate().flat_map(|(k, w)| {
        w.trajectory
            .iter()
            .map(move |s| vec![k as f64, s.t, s.x[0], s.x[1]])
    });
    out.csv("witness.csv", "witness,t,x,y", rows)
}

fn trap(
    cli: &Cli,
    spec: &ScenarioSpec,
    expect: Option<Expectation>,
    seeds: usize,
    step: f64,
    out: &mut Output,
) -> Result<Option<String>> {
    let (_, mask) = region(spec)?;
    let opts = TrapOptions {
        seeds,
        step,
        l_max: cli.lmax,
        ..TrapOptions::default()
    };
    let report = trapping_check(symbol(spec).as_ref(), &mask, &opts)?;
    write_trap(&report, out)?;
    out.param("seeds", seeds);
    out.param("step", step);
    println!(
        "{}",
        match report.verdict {
            Verdict::Trapped => "TRAPPED",
            Verdict::NonTrapping => "NON-TRAPPING",
        }
    );
    let want = expect.map(|e| match e {
        Expectation::Trapped => Verdict::Trapped,
        Expectation::NonTrapping => Verdict::NonTrapping,
    });
    Ok(match want {
        Some(v) if v != report.verdict => Some(format!("verdict {:?} where {v:?} was asserted", report.verdict)),
        _ => None,
    })
}

fn radial_null(cli: &Cli, spec: &ScenarioSpec, out: &mut Output) -> Result<Option<String>> {
    let f = radial_input(&spec.f, "f")?;
    let da = radial_input(&spec.da, "perturbations.da")?;
    let opts = profile_options(spec);
    let inv = null_pair(Arc::new(f.clone()), &da, &opts)?;
    inv.profile.write_csv(&out.path("profile.csv"))?;
    out.adopt("profile.csv");
    write_radial_csv(&out.path("df.csv"), &inv.result)?;
    out.adopt("df.csv");
    let op = LinearizedOperator::new(Arc::new(ZeroField), Arc::new(RadialLift::new(f)), spec.h);
    let da_field = RadialLift::new(da);
    let df_field = RadialLift::new(inv.result.clone());
    let data = op.forward(&da_field, &ZeroField, spec.sinogram)?;
    let residual = op.forward(&da_field, &df_field, spec.sinogram)?;
    let ratio = sup_ratio(&residual, &data);
    let tol = cli.tol.unwrap_or(1e-3);
    out.json(
        "radial_null.json",
        &json!({ "spread": inv.spread, "odd_part": inv.odd_part, "residual_ratio": ratio, "tolerance": tol }),
    )?;
    Ok((ratio > tol).then(|| format!("null residual {ratio:.3e} exceeds {tol:.1e}")))
}

fn equivalent(cli: &Cli, spec: &ScenarioSpec, out: &mut Output) -> Result<Option<String>> {
    let a = radial_input(&spec.a, "a")?;
    let f = radial_input(&spec.f, "f")?;
    let inv = equivalent_source(&a, &f, &profile_options(spec))?;
    write_radial_csv(&out.path("f0.csv"), &inv.result)?;
    out.adopt("f0.csv");
    let xa = attenuated_xray(&spec.a, &spec.f, spec.sinogram, spec.h)?;
    let x0 = attenuated_xray(&ZeroField, &RadialLift::new(inv.result.clone()), spec.sinogram, spec.h)?;
    let ratio = sup_ratio(&xa.axpy(-1.0, &x0)?, &xa);
    let tol = cli.tol.unwrap_or(1e-3);
    out.json(
        "equivalent_source.json",
        &json!({ "spread": inv.spread, "odd_part": inv.odd_part, "residual_ratio": ratio, "tolerance": tol }),
    )?;
    Ok((ratio > tol).then(|| format!("sinogram mismatch {ratio:.3e} exceeds {tol:.1e}")))
}

fn write_pair(op: &DiscreteOperator, g: &[f64], stem: &str, out: &mut Output) -> Result<()> {
    let (g1, g2) = op.unpack(g)?;
    out.field(&format!("{stem}1"), &g1)?;
    out.field(&format!("{stem}2"), &g2)
}

fn reconstruct(
    cli: &Cli,
    spec: &ScenarioSpec,
    assume_non_trapping: bool,
    data: Option<&std::path::Path>,
    out: &mut Output,
) -> Result<Option<String>> {
    let (_, mask) = region(spec)?;
    if assume_non_trapping {
        if let Some(msg) = require_non_trapping(spec, &mask, out)? {
            return Ok(Some(msg));
        }
    }
    let op = operator(spec, &mask)?;
    let (h, truth) = match data {
        Some(path) => (read_sinogram(path)?, None),
        None => {
            let t = op.pack_fn(|x| spec.da.eval(x), |x| spec.df.eval(x));
            (op.apply(&t)?, Some(t))
        }
    };
    let opts = CglsOptions {
        max_iter: cli.steps.unwrap_or(200),
        tol: cli.tol.unwrap_or(1e-6),
    };
    let (g, mut report) = cgls_solve(&op, &h, opts, truth.as_deref())?;
    if let Some(t) = &truth {
        let err: Vec<f64> = g.iter().zip(t).map(|(a, b)| a - b).collect();
        report.null_correlation = Some(null_diagnostics(&op, &err).0);
    }
    write_pair(&op, &g, "g", out)?;
    out.param("max_iter", opts.max_iter);
    out.param("tol", opts.tol);
    report.write_history_csv(&out.path("history.csv"))?;
    out.adopt("history.csv");
    out.json("report.json", &report)?;
    Ok(None)
}

fn probe_kernel(
    cli: &Cli,
    spec: &ScenarioSpec,
    probes: usize,
    hints: usize,
    order: f64,
    out: &mut Output,
) -> Result<Option<String>> {
    let (_, mask) = region(spec)?;
    let op = operator(spec, &mask)?;
    let (r_in, r_out) = radial_extent(&op, [0.0, 0.0]);
    let start = radial_profiles(&op, [0.0, 0.0], r_in, r_out, hints);
    let opts = KernelProbeOptions {
        probes,
        max_iter: cli.steps.unwrap_or(300),
        rel_tol: cli.tol.unwrap_or(1e-3),
        data_order: order,
        seed: spec.seed,
    };
    let probe = kernel_probe_from(&op, opts, &start)?;
    if let Some(c) = probe.candidates.first() {
        write_pair(&op, &c.vector, "null", out)?;
    }
    out.csv(
        "history.csv",
        "iteration,sigma",
        probe.history.iter().enumerate().map(|(k, s)| vec![k as f64, *s]),
    )?;
    out.param("probes", probes);
    out.param("hints", hints);
    out.param("order", order);
    out.param("max_iter", opts.max_iter);
    out.param("rel_tol", opts.rel_tol);
    out.json("kernel.json", &probe)?;
    Ok(None)
}

/// A radial profile sampled on `nr` midpoints of `[0, r_max]`.
fn sampled(r_max: f64, nr: usize, g: impl Fn(f64) -> f64) -> Result<RadialFunction> {
    let dr = r_max / nr as f64;
    RadialFunction::new(r_max, (0..nr).map(|i| g((i as f64 + 0.5) * dr)).collect())
}

/// The radial family at scale `n`: `g1` a radial mode and `g2` zero for the
/// model weights, `(δa, δf)` a null pair for the identification problem.
fn radial_family(spec: &ScenarioSpec, op: &DiscreteOperator, n: usize) -> Result<Vec<f64>> {
    let (r_in, r_out) = radial_extent(op, [0.0, 0.0]);
    match spec.symbol {
        SymbolChoice::ExRadial => Ok(smooth_radial_mode(op, [0.0, 0.0], r_in, r_out, n - 1)),
        SymbolChoice::Identification => {
            let f = radial_input(&spec.f, "f")?;
            let opts = profile_options(spec);
            let da = sampled(r_out, 1024, |r| shell_wave(r, r_in, r_out, n - 1))?;
            let df = null_pair(Arc::new(f), &da, &opts)?.result;
            Ok(op.pack_fn(|x| da.eval(x[0].hypot(x[1])), |x| df.eval(x[0].hypot(x[1]))))
        }
    }
}

#[derive(Serialize)]
struct StabilityRow {
    family: &'static str,
    scale: usize,
    sample: usize,
    ratio: f64,
}

fn probe_stability(
    spec: &ScenarioSpec,
    args: &super::StabilityArgs,
    out: &mut Output,
) -> Result<Option<String>> {
    let (region, mask) = region(spec)?;
    if args.assume_non_trapping {
        if let Some(msg) = require_non_trapping(spec, &mask, out)? {
            return Ok(Some(msg));
        }
    }
    let op = operator(spec, &mask)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::new();
    for n in 1..=args.max_scale {
        for k in 0..args.samples {
            let g = smooth_sample(&op, n, args.radius, &mut rng)?;
            rows.push(StabilityRow {
                family: "random",
                scale: n,
                sample: k,
                ratio: stability_ratio(&op, &g, args.order)?,
            });
        }
        let g = radial_family(spec, &op, n)?;
        rows.push(StabilityRow {
            family: "radial",
            scale: n,
            sample: 0,
            ratio: stability_ratio(&op, &g, args.order)?,
        });
    }
    let max_of = |family: &str| -> Vec<f64> {
        (1..=args.max_scale)
            .map(|n| {
                rows.iter()
                    .filter(|r| r.family == family && r.scale == n)
                    .map(|r| r.ratio)
                    .fold(0.0, f64::max)
            })
            .collect()
    };
    let summary = json!({
        "order": args.order,
        "random_max_by_scale": max_of("random"),
        "radial_by_scale": max_of("radial"),
        "rows": rows,
    });
    out.json("stability.json", &summary)?;
    out.param("samples", args.samples);
    out.param("max_scale", args.max_scale);
    out.param("order", args.order);
    out.param("radius", args.radius);
    if args.holder {
        let opts = HolderOptions {
            grid: spec.grid,
            geom: spec.sinogram,
            h: spec.h,
            seed: spec.seed,
            ..HolderOptions::default()
        };
        let table = holder_probe(&spec.a, &spec.f, &region, &opts)?;
        out.csv(
            "holder.csv",
            "epsilon,field_diff,data_diff",
            table.rows.iter().map(|r| vec![r.epsilon, r.field_diff, r.data_diff]),
        )?;
        out.json("holder.json", &table)?;
    }
    Ok(None)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            pass: value < tolerance,
        }
    }
}

fn verify(out: &mut Output) -> Result<Option<String>> {
    let mut checks = Vec::new();

    let geom = SinogramGeometry::new(201, 360, 1.5)?;
    let disk = crate::grid::Primitive::centered(Profile::disk(1.0), 1.0);
    let s = attenuated_xray(&ZeroField, &disk, geom, 1e-3)?;
    let mut chord = 0.0f64;
    for j in 0..geom.ntheta {
        for i in 0..geom.np {
            let p = geom.p(i);
            if p.abs() <= 0.99 {
                chord = chord.max((s.get(i, j) - 2.0 * (1.0 - p * p).sqrt()).abs());
            }
        }
    }
    checks.push(Check::below("chord_length", chord, 5e-3));

    let (w1, w2) = radial_example_weights();
    let grid = GridSpec::square(32, 1.0);
    let mask = RegionMask::from_predicate(grid, |x| x[0].hypot(x[1]) < 0.7)?;
    let op = DiscreteOperator::from_weights(&w1, &w2, &mask, SinogramGeometry::new(65, 64, 1.0)?, OperatorOptions::default())?;
    let g = op.pack_fn(|x| (2.0 * x[0]).sin() + x[1], |x| (3.0 * x[1]).cos());
    let psi = Sinogram::from_fn(*op.geometry(), |p, th| (1.0 - p * p).max(0.0) * (1.0 + th.vector()[0]))?;
    let lhs = op.apply(&g)?.inner(&psi)?;
    let rhs = op.inner(&g, &op.adjoint(&psi)?);
    checks.push(Check::below("adjoint_duality", (lhs - rhs).abs() / lhs.abs().max(rhs.abs()), 1e-3));

    let abel = AbelOptions::default();
    let bump = Profile::bump(1.3);
    let back = abel_inverse(&abel_forward(&bump, &abel)?, &abel)?;
    checks.push(Check::below("abel_round_trip", radial_relative_error(&back, &bump), 1e-3));

    let trap_grid = GridSpec::square(64, 1.0);
    let verdict = |r: Region| -> Result<Verdict> {
        Ok(trapping_check(&LinearSymbol::default(), &r.mask(trap_grid)?, &TrapOptions::default())?.verdict)
    };
    let trapped = verdict(Region::annulus(0.4, 0.8))? == Verdict::Trapped;
    let open = verdict(Region::annulus_with_gap(0.4, 0.8, 0.0, 30.0))? == Verdict::NonTrapping;
    checks.push(Check::below("trapping_verdicts", if trapped && open { 0.0 } else { 1.0 }, 0.5));

    let h = crate::xray::weighted_xray(&w1, &RadialLift::new(Profile::bump(0.6)), SinogramGeometry::new(257, 256, 1.0)?, 2e-3)?;
    let (q1, q2) = q_reduce(&w1, &w2, &h, GridSpec::square(48, 1.0))?;
    checks.push(Check::below("q_reduce_radial_witness", q1.max_abs().max(q2.max_abs()), 1e-3));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    out.json("verify.json", &checks)?;
    for c in &checks {
        println!("{:<26} {:>12.4e}  < {:.1e}  {}", c.name, c.value, c.tolerance, if c.pass { "PASS" } else { "FAIL" });
    }
    Ok((!failed.is_empty()).then(|| format!("failed checks: {}", failed.join(", "))))
}

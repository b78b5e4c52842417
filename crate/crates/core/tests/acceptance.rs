//! Acceptance suite. Runs every criterion in order and prints one line each:
//!
//! ```text
//! cargo test --release -p idxray --test acceptance            # all
//! cargo test --release -p idxray --test acceptance -- 4 11    # a selection
//! ```

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use idxray::geometry::{dot, Direction, Point};
use idxray::grid::scenario::Region;
use idxray::grid::{
    Field, GridSpec, Phantom, Primitive, Profile, RadialFunction, RadialLift, RadialProfile, ScalarField2D,
    Sinogram, SinogramGeometry, ZeroField,
};
use idxray::microlocal::{
    coherent_symbol_check, radial_example_weights, trace_bicharacteristic, trapping_check, verify_psdo_kernel,
    w0_value, weight_determinant, weight_pair_from_af, KernelQuadrature, LinearSymbol, Termination, TraceOptions,
    TrapOptions, Verdict,
};
use idxray::radial::{
    abel_forward, abel_inverse, equivalent_source, null_pair, radial_relative_error, AbelOptions, ProfileOptions,
    MOLLIFY_WIDTH,
};
use idxray::recon::{
    cgls_solve, coherent_q_check, holder_probe, kernel_probe_from, q_reduce, radial_profiles, smooth_radial_mode,
    smooth_sample, stability_ratio, transfer, CglsOptions, CoherentOptions, DiscreteOperator, HolderOptions,
    KernelProbe, KernelProbeOptions, OperatorOptions,
};
use idxray::xray::{attenuated_xray, backprojection, weighted_xray, LinearizedOperator, WeightField};
use idxray::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn unit_disk() -> Primitive {
    Primitive::centered(Profile::disk(1.0), 1.0)
}

fn random_interior(r: &mut ChaCha8Rng, radius: f64) -> (Point, Direction) {
    let rho = radius * r.gen::<f64>().sqrt();
    let phi = r.gen_range(0.0..2.0 * PI);
    ([rho * phi.cos(), rho * phi.sin()], Direction::from_angle(r.gen_range(0.0..2.0 * PI)))
}

fn chord_length() -> Result<Outcome> {
    let geom = SinogramGeometry::new(301, 360, 1.5)?;
    let s = attenuated_xray(&ZeroField, &unit_disk(), geom, 1e-3)?;
    let mut err = 0.0f64;
    for j in 0..geom.ntheta {
        for i in 0..geom.np {
            let p = geom.p(i);
            if p.abs() <= 0.99 {
                err = err.max((s.get(i, j) - 2.0 * (1.0 - p * p).sqrt()).abs());
            }
        }
    }
    outcome(err < 5e-3, format!("max error {err:.2e} over 360 angles"))
}

fn weight_formula() -> Result<Outcome> {
    let op = LinearizedOperator::new(Arc::new(ZeroField), Arc::new(unit_disk()), 1e-3);
    let mut r = rng(2);
    let mut err = 0.0f64;
    for _ in 0..1000 {
        let (x, th) = random_interior(&mut r, 0.999);
        let exact = -(1.0 - dot(th.perp(), x).powi(2)).sqrt() - dot(th.vector(), x);
        err = err.max((op.weight(x, th) - exact).abs());
    }
    outcome(err < 1e-4, format!("max error {err:.2e} at 1000 points"))
}

fn w0_disk_identity() -> Result<Outcome> {
    let a: Arc<dyn Field> = Arc::new(ZeroField);
    let f: Arc<dyn Field> = Arc::new(unit_disk());
    let h = 1e-3;
    let (w1, w2) = weight_pair_from_af(a.clone(), f.clone(), h);
    let mut r = rng(2);
    let (mut det_err, mut odd_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (x, th) = random_interior(&mut r, 0.999);
        let tx = dot(th.vector(), x);
        det_err = det_err.max((weight_determinant(&w1, &w2, x, th) + 2.0 * tx).abs());
        odd_err = odd_err.max((w0_value(a.as_ref(), f.as_ref(), x, th, h) - 2.0 * tx).abs());
    }
    // the transport identity holds for u − Ju, the negative of the determinant
    let step = 1e-3;
    let mut fd_err = 0.0f64;
    for _ in 0..200 {
        let (x, th) = random_interior(&mut r, 0.9);
        let v = th.vector();
        let at = |s: f64| w0_value(a.as_ref(), f.as_ref(), [x[0] + s * v[0], x[1] + s * v[1]], th, h);
        let d = (at(step) - at(-step)) / (2.0 * step);
        fd_err = fd_err.max((d - 2.0 * f.eval(x)).abs());
    }
    outcome(
        det_err < 1e-4 && odd_err < 1e-4 && fd_err < 1e-3,
        format!("W0 vs −2θ·x {det_err:.2e}, u−Ju vs 2θ·x {odd_err:.2e}, θ·∂(u−Ju) − 2f {fd_err:.2e}"),
    )
}

fn circle_rays() -> Result<Outcome> {
    let s = LinearSymbol::default();
    let opts = TraceOptions {
        step: 1e-3,
        l_max: 2.0 * PI,
        record_every: 10,
        ..TraceOptions::default()
    };
    let mut drift = 0.0f64;
    let mut closure = 0.0f64;
    let mut all_full = true;
    for (k, radius) in [0.2, 0.45, 0.7, 0.95].into_iter().enumerate() {
        let phi = 0.7 * k as f64;
        let x0 = [radius * phi.cos(), radius * phi.sin()];
        let ray = trace_bicharacteristic(&s, x0, [phi.cos(), phi.sin()], &opts, &|x| x[0].hypot(x[1]) < 2.0)?;
        all_full &= ray.termination == Termination::MaxLength;
        drift = ray.states.iter().fold(drift, |m, st| m.max((st.x[0].hypot(st.x[1]) - radius).abs()));
        let end = ray.last().x;
        closure = closure.max((end[0] - x0[0]).hypot(end[1] - x0[1]));
    }
    let origin = trace_bicharacteristic(&s, [0.0, 0.0], [1.0, 0.0], &TraceOptions::default(), &|_| true)?;
    let stationary = origin.termination == Termination::StationaryProjection;
    outcome(
        drift < 1e-6 && all_full && stationary,
        format!("radius drift {drift:.2e} per revolution, closure {closure:.2e}, origin stationary: {stationary}"),
    )
}

fn trapping_verdicts() -> Result<Outcome> {
    let grid = GridSpec::square(64, 1.0);
    let verdict = |region: Region| -> Result<Verdict> {
        Ok(trapping_check(&LinearSymbol::default(), &region.mask(grid)?, &TrapOptions::default())?.verdict)
    };
    let mut r = rng(5);
    let (mut agree, mut total) = (0, 0);
    let mut misses = Vec::new();
    for k in 0..10 {
        let r_in = r.gen_range(0.25..0.45);
        let r_out = r.gen_range(0.7..0.9);
        let center = r.gen_range(-180.0..180.0);
        let half = r.gen_range(15.0..45.0);
        let c = r.gen_range(0.0..0.15);
        let psi = r.gen_range(0.0..2.0 * PI);
        let cases = [
            (Region::annulus(r_in, r_out), Verdict::Trapped),
            (Region::annulus_with_gap(r_in, r_out, center, half), Verdict::NonTrapping),
            (
                Region::Disk {
                    center: [c * psi.cos(), c * psi.sin()],
                    radius: r.gen_range(0.3..0.6),
                },
                Verdict::Trapped,
            ),
        ];
        for (i, (region, want)) in cases.into_iter().enumerate() {
            total += 1;
            if verdict(region)? == want {
                agree += 1;
            } else {
                misses.push(format!("{k}.{i}"));
            }
        }
    }
    outcome(agree == total, format!("{agree}/{total} verdicts agree {misses:?}"))
}

fn abel_round_trip() -> Result<Outcome> {
    let opts = AbelOptions::default();
    let mut r = rng(6);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let g = Profile::Bump {
            radius: r.gen_range(0.4..2.5),
            power: r.gen_range(3.0..8.0),
        };
        let back = abel_inverse(&abel_forward(&g, &opts)?, &opts)?;
        worst = worst.max(radial_relative_error(&back, &g));
    }
    outcome(worst < 1e-3, format!("worst relative L² error {worst:.2e} over 10 bumps"))
}

fn null_pair_identity() -> Result<Outcome> {
    let opts = ProfileOptions::default();
    let f = Profile::mollified_disk(1.0, MOLLIFY_WIDTH);
    let da = Profile::bump(0.6);
    let pair = null_pair(Arc::new(f), &da, &opts)?;

    let lin = LinearizedOperator::new(Arc::new(ZeroField), Arc::new(RadialLift::new(f)), 1e-3);
    let geom = SinogramGeometry::new(161, 12, 1.6)?;
    let da_field = RadialLift::new(da);
    let df_field = RadialLift::new(pair.result.clone());
    let total = lin.forward(&da_field, &df_field, geom)?;
    let alone = lin.forward(&da_field, &ZeroField, geom)?;
    let ratio = total.max_abs() / alone.max_abs();

    let rdf = abel_forward(&pair.result, &opts.abel)?;
    let rda = abel_forward(&da, &opts.abel)?;
    let radon = (0..rdf.len())
        .map(|i| {
            let p = rdf.p(i);
            ((1.0 - p * p).max(0.0).sqrt() * rda.values()[i] - rdf.values()[i]).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        ratio < 1e-3 && radon < 1e-3,
        format!("‖δX‖∞/‖I δa‖∞ {ratio:.2e}, Radon identity {radon:.2e}"),
    )
}

fn equivalent_sources() -> Result<Outcome> {
    let opts = ProfileOptions::default();
    let f = Profile::mollified_disk(1.0, MOLLIFY_WIDTH);
    let a = Phantom::single(Primitive::centered(f, 0.5)).radial().expect("centred");
    let eq = equivalent_source(&a, &f, &opts)?;
    let geom = SinogramGeometry::new(161, 12, 1.6)?;
    let xaf = attenuated_xray(&RadialLift::new(a), &RadialLift::new(f), geom, 1e-3)?;
    let x0f0 = attenuated_xray(&ZeroField, &RadialLift::new(eq.result.clone()), geom, 1e-3)?;
    let ratio = max_abs_diff(xaf.values(), x0f0.values()) / xaf.max_abs();
    let zero = RadialFunction::zeros(16, 1.0);
    let same = radial_relative_error(&equivalent_source(&zero, &f, &opts)?.result, &f);
    outcome(
        ratio < 1e-3 && same < 1e-3,
        format!("‖X_a f − X_0 f0‖∞/‖X_a f‖∞ {ratio:.2e}, a = 0 gives f within {same:.2e}"),
    )
}

fn smooth_weights() -> (WeightField, WeightField) {
    (
        WeightField::closure(|x, th| 1.0 + 0.3 * x[0] * th.vector()[1] + 0.2 * th.vector()[0]),
        WeightField::closure(|x, th| 0.8 + 0.2 * x[1] - 0.3 * th.vector()[1]),
    )
}

fn psdo_structure() -> Result<Outcome> {
    let (a, b) = smooth_weights();
    let geom = SinogramGeometry::new(401, 360, PI)?;
    let f = Primitive::new(Profile::gaussian(0.3), [0.2, -0.1], 1.0);
    let pts: Vec<Point> = (0..5)
        .flat_map(|i| (0..5).map(move |j| [0.3 * i as f64 - 0.4, 0.3 * j as f64 - 0.7]))
        .collect();
    let kernel = verify_psdo_kernel(&a, &b, &f, &pts, geom, 2e-3, KernelQuadrature::default())?;
    let chi = Primitive::new(Profile::gaussian(0.2), [0.1, -0.2], 1.0);
    let mut worst = 0.0f64;
    for angle in [0.3, 1.9] {
        let c = coherent_symbol_check(&a, &b, &chi, Direction::from_angle(angle), 64.0, geom, 5e-3)?;
        worst = worst.max((c.ratio - 1.0).abs());
    }
    outcome(
        kernel.mismatch < 1e-3 && worst < 0.05,
        format!("kernel mismatch {:.2e}, symbol ratio off by {worst:.2e} at λ = 64", kernel.mismatch),
    )
}

fn adjoint_duality() -> Result<Outcome> {
    let grid = GridSpec::square(256, 1.0);
    let geom = SinogramGeometry::new(257, 360, 1.0)?;
    let mut r = rng(10);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let (c1, c2, c3) = (r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5));
        let w = WeightField::closure(move |x, th| 1.0 + c1 * x[0] * th.vector()[1] + c2 * th.vector()[0] + c3 * x[1]);
        let center = [r.gen_range(-0.3..0.3), r.gen_range(-0.3..0.3)];
        let f = Primitive::new(Profile::gaussian(r.gen_range(0.1..0.2)), center, r.gen_range(0.5..2.0));
        let (m, phase, shift) = (r.gen_range(1..4) as f64, r.gen_range(0.0..2.0 * PI), r.gen_range(-0.2..0.2));
        let psi = Sinogram::from_fn(geom, |p, th| {
            let q = (p - shift) / 0.75;
            (1.0 - q * q).max(0.0).powi(4) * (1.0 + 0.5 * (m * th.angle() + phase).cos())
        })?;
        let lhs = weighted_xray(&w, &f, geom, 2e-3)?.inner(&psi)?;
        let rhs = ScalarField2D::sample(grid, &f)?.inner(&backprojection(&w, &psi, grid)?)?;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    outcome(worst < 1e-3, format!("worst relative mismatch {worst:.2e} over 10 pairs"))
}

fn model_operator(region: &Region, n: usize) -> Result<DiscreteOperator> {
    let (w1, w2) = radial_example_weights();
    let mask = region.mask(GridSpec::square(n, 1.0))?;
    let geom = SinogramGeometry::new(2 * n + 1, 2 * n, 1.0)?;
    DiscreteOperator::from_weights(&w1, &w2, &mask, geom, OperatorOptions::default())
}

/// Probes at 128 and then at 256, warm-started from the coarse candidates.
/// `at_coarse` runs on the 128 operator before it is dropped.
fn refine(region: &Region, mut at_coarse: impl FnMut(&DiscreteOperator) -> Result<()>) -> Result<[KernelProbe; 2]> {
    let opts = KernelProbeOptions {
        max_iter: 300,
        ..KernelProbeOptions::default()
    };
    let coarse = model_operator(region, 128)?;
    let p128 = kernel_probe_from(&coarse, opts, &radial_profiles(&coarse, [0.0, 0.0], 0.4, 0.8, 12))?;
    at_coarse(&coarse)?;
    let fine = model_operator(region, 256)?;
    let mut start = radial_profiles(&fine, [0.0, 0.0], 0.4, 0.8, 12);
    for c in &p128.candidates {
        start.push(transfer(&coarse, &fine, &c.vector)?);
    }
    drop(coarse);
    let p256 = kernel_probe_from(&fine, opts, &start)?;
    Ok([p128, p256])
}

fn band_limited_truths(op: &DiscreteOperator) -> Vec<Vec<f64>> {
    vec![
        op.pack_fn(|x| (PI * x[0]).cos() * (PI * x[1]).sin() + 0.5, |x| (2.0 * PI * x[1]).cos()),
        op.pack_fn(|x| x[0] - 0.5 * x[1] * x[1], |x| (PI * (x[0] + x[1])).sin()),
        op.pack_fn(|x| (1.5 * PI * x[1]).sin(), |x| 1.0 + (PI * x[0]).cos() * (PI * x[1]).cos()),
    ]
}

fn kernel_dichotomy() -> Result<Outcome> {
    let [t128, t256] = refine(&Region::annulus(0.4, 0.8), |_| Ok(()))?;
    let trap_ratio = t128.sigma_min / t256.sigma_min;
    let corr = t256.candidates[0].radial_correlation;
    println!(
        "    trapped: σ_min {:.4e} → {:.4e} (÷{trap_ratio:.2}), radial correlation {corr:.5}",
        t128.sigma_min, t256.sigma_min
    );

    let mut recon_err = Vec::new();
    let [g128, g256] = refine(&Region::annulus_with_gap(0.4, 0.8, 0.0, 30.0), |op| {
        for truth in band_limited_truths(op) {
            let h = op.apply(&truth)?;
            let (_, rep) = cgls_solve(op, &h, CglsOptions { max_iter: 200, tol: 0.0 }, Some(&truth))?;
            recon_err.push(rep.relative_error.unwrap_or(f64::INFINITY));
        }
        Ok(())
    })?;
    let gap_ratio = (g128.sigma_min / g256.sigma_min).max(g256.sigma_min / g128.sigma_min);
    let worst = recon_err.iter().copied().fold(0.0, f64::max);
    println!(
        "    non-trapping: σ_min {:.4e} → {:.4e} (×{gap_ratio:.3}), CGLS errors {}",
        g128.sigma_min, g256.sigma_min,
        sci(&recon_err)
    );
    outcome(
        trap_ratio >= 5.0 && corr > 0.99 && gap_ratio < 2.0 && worst < 0.05,
        format!("trapped ÷{trap_ratio:.1} (corr {corr:.4}), non-trapping ×{gap_ratio:.2}, CGLS worst {worst:.2e}"),
    )
}

fn q_reduction() -> Result<Outcome> {
    let (w1, w2) = radial_example_weights();
    let g1 = RadialLift::new(Profile::bump(0.6));
    let h = weighted_xray(&w1, &g1, SinogramGeometry::new(257, 256, 1.0)?, 2e-3)?;
    let (q1, q2) = q_reduce(&w1, &w2, &h, GridSpec::square(48, 1.0))?;
    let input = Profile::bump(0.6).eval(0.0);
    let witness = q1.max_abs().max(q2.max_abs()) / input;

    let opts = CoherentOptions::default();
    let (a, b) = smooth_weights();
    let model = coherent_q_check(&w1, &w2, [0.3, 0.4], Direction::from_angle(0.0), &opts)?;
    let generic = coherent_q_check(&a, &b, [0.2, -0.1], Direction::from_angle(0.4), &opts)?;
    let worst = model.rel_error.max(generic.rel_error);
    outcome(
        witness < 1e-3 && worst < 0.05,
        format!("radial witness {witness:.2e}, symbol error {worst:.2e} at λ = {}", opts.frequency),
    )
}

fn stability_probes() -> Result<Outcome> {
    let open = model_operator(&Region::annulus_with_gap(0.4, 0.8, 0.0, 30.0), 64)?;
    let mut r = rng(13);
    let mut by_scale = Vec::new();
    for n in 1..=6 {
        let mut m = 0.0f64;
        for _ in 0..5 {
            m = m.max(stability_ratio(&open, &smooth_sample(&open, n, 0.15, &mut r)?, 0.0)?);
        }
        by_scale.push(m);
    }
    drop(open);
    let sup = by_scale.iter().copied().fold(0.0, f64::max);
    let bounded = sup.is_finite() && sup <= 2.0 * by_scale[0];

    let family = [0, 2, 4];
    let mut null = Vec::new();
    for n in [64, 128] {
        let op = model_operator(&Region::annulus(0.4, 0.8), n)?;
        for k in family {
            null.push(stability_ratio(&op, &smooth_radial_mode(&op, [0.0, 0.0], 0.4, 0.8, k), 0.0)?);
        }
    }
    let (coarse, fine) = null.split_at(family.len());
    let divergent = coarse.iter().zip(fine).all(|(c, f)| *f >= 5.0 * c && *c > 10.0 * sup);

    let a0 = Phantom::single(Primitive::centered(Profile::mollified_disk(0.9, MOLLIFY_WIDTH), 0.5));
    let f0 = Phantom::single(Primitive::centered(Profile::mollified_disk(0.9, MOLLIFY_WIDTH), 1.0));
    let table = holder_probe(&a0, &f0, &Region::annulus_with_gap(0.3, 0.8, 0.0, 40.0), &HolderOptions::default())?;
    let finite = table.mu.is_some_and(f64::is_finite)
        && table.rows.iter().all(|row| row.field_diff.is_finite() && row.data_diff.is_finite());
    outcome(
        bounded && divergent && finite,
        format!(
            "random sup {sup:.3e} by scale {}, radial null at 64 {} and 128 {}, Hölder μ {:.3} over {} rows",
            sci(&by_scale),
            sci(coarse),
            sci(fine),
            table.mu.unwrap_or(f64::NAN),
            table.rows.len()
        ),
    )
}

type Check = fn() -> Result<Outcome>;

const CRITERIA: [(usize, &str, Check); 13] = [
    (1, "chord length", chord_length),
    (2, "weight formula", weight_formula),
    (3, "W0 disk identity", w0_disk_identity),
    (4, "circular rays", circle_rays),
    (5, "trapping verdicts", trapping_verdicts),
    (6, "Abel round trip", abel_round_trip),
    (7, "null pair", null_pair_identity),
    (8, "equivalent source", equivalent_sources),
    (9, "ΨDO structure", psdo_structure),
    (10, "adjoint duality", adjoint_duality),
    (11, "kernel dichotomy", kernel_dichotomy),
    (12, "Q-reduction", q_reduction),
    (13, "stability probes", stability_probes),
];

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, check) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(o)) => (o.pass, o.detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        println!(
            "criterion {id:>2} {name:<20} {} ({:.1}s)  {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

//! Python bindings: scenario-driven forward projection, trapping verdicts,
//! radial inversions and the command-line runner.

use std::sync::Arc;

use idxray::grid::scenario::{Region, ScenarioSpec};
use idxray::grid::{GridSpec, Profile, RadialProfile};
use idxray::microlocal::{trapping_check, LinearSymbol, TrapOptions, Verdict};
use idxray::radial::{abel_forward, abel_inverse, equivalent_source, null_pair, AbelOptions, ProfileOptions};
use idxray::xray::attenuated_xray;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: idxray::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn mollified_disk(radius: f64, width: f64) -> Profile {
    if width > 0.0 {
        Profile::mollified_disk(radius, width)
    } else {
        Profile::disk(radius)
    }
}

/// `(r, values)` sampled at the midpoints of the radial grid.
fn radial_samples(g: &idxray::grid::RadialFunction) -> (Vec<f64>, Vec<f64>) {
    ((0..g.nr()).map(|i| g.r(i)).collect(), g.values().to_vec())
}

#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Runs the `idxray` command line with `args` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn run(args: Vec<String>) -> i32 {
    idxray::cli::run_args(std::iter::once("idxray".to_string()).chain(args))
}

/// `X_a f` for a scenario given as JSON text: `(np, ntheta, pmax, values)`
/// with `values[j*np + i]` at `p_i`, angle `j`.
#[pyfunction]
fn forward(scenario_json: &str) -> PyResult<(usize, usize, f64, Vec<f64>)> {
    let spec = ScenarioSpec::from_json(scenario_json).map_err(py_err)?;
    let s = attenuated_xray(&spec.a, &spec.f, spec.sinogram, spec.h).map_err(py_err)?;
    let g = *s.geometry();
    Ok((g.np, g.ntheta, g.pmax, s.into_values()))
}

/// Verdict (`"TRAPPED"` or `"NON-TRAPPING"`) of the annulus
/// `r_in ≤ |x| ≤ r_out`, optionally minus a sector, for the weights with
/// determinant `θ·x`.
#[pyfunction]
#[pyo3(signature = (r_in, r_out, gap_center_deg=0.0, gap_half_width_deg=0.0, n=64))]
fn trap_verdict(r_in: f64, r_out: f64, gap_center_deg: f64, gap_half_width_deg: f64, n: usize) -> PyResult<&'static str> {
    let region = Region::annulus_with_gap(r_in, r_out, gap_center_deg, gap_half_width_deg);
    let mask = region.mask(GridSpec::square(n, 1.0)).map_err(py_err)?;
    let report = trapping_check(&LinearSymbol::default(), &mask, &TrapOptions::default()).map_err(py_err)?;
    Ok(match report.verdict {
        Verdict::Trapped => "TRAPPED",
        Verdict::NonTrapping => "NON-TRAPPING",
    })
}

/// Relative L² error of inverting the Abel transform of the bump
/// `(1 − r²/R²)^power`.
#[pyfunction]
#[pyo3(signature = (radius, power=4.0))]
fn abel_round_trip(radius: f64, power: f64) -> PyResult<f64> {
    let g = Profile::Bump { radius, power };
    g.validate().map_err(py_err)?;
    let opts = AbelOptions::default();
    let back = abel_inverse(&abel_forward(&g, &opts).map_err(py_err)?, &opts).map_err(py_err)?;
    Ok(idxray::radial::radial_relative_error(&back, &g))
}

/// Radial `f₀(r)` with `X_a f = X_0 f₀` for `a = c·disk`, `f = disk`
/// (mollified when `width > 0`): `(r, f0)`.
#[pyfunction]
#[pyo3(signature = (c, radius=1.0, width=0.05))]
fn equivalent_disk_source(c: f64, radius: f64, width: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let f = mollified_disk(radius, width);
    let a = idxray::grid::RadialFunction::new(
        f.support_radius(),
        (0..512).map(|i| c * f.eval((i as f64 + 0.5) * f.support_radius() / 512.0)).collect(),
    )
    .map_err(py_err)?;
    let inv = equivalent_source(&a, &f, &ProfileOptions::default()).map_err(py_err)?;
    Ok(radial_samples(&inv.result))
}

/// Radial `δf` pairing with the bump `δa = (1 − r²/R²)^4` in the kernel of the
/// linearization at `a = 0`, `f = disk`: `(r, δf)`.
#[pyfunction]
#[pyo3(signature = (bump_radius, radius=1.0, width=0.05))]
fn null_partner(bump_radius: f64, radius: f64, width: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let f = mollified_disk(radius, width);
    let inv = null_pair(Arc::new(f), &Profile::bump(bump_radius), &ProfileOptions::default()).map_err(py_err)?;
    Ok(radial_samples(&inv.result))
}

#[pymodule]
fn pyidxray(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(forward, m)?)?;
    m.add_function(wrap_pyfunction!(trap_verdict, m)?)?;
    m.add_function(wrap_pyfunction!(abel_round_trip, m)?)?;
    m.add_function(wrap_pyfunction!(equivalent_disk_source, m)?)?;
    m.add_function(wrap_pyfunction!(null_partner, m)?)?;
    Ok(())
}

//! Python bindings. Couplings may be given as floats or as exact tokens
//! such as `"-sqrt2"`; heavy computations release the interpreter lock.

use clap::Parser;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use rug::Float;

use heun_spectrum::analysis::{self, NegativeOnset};
use heun_spectrum::cli;
use heun_spectrum::frobenius;
use heun_spectrum::model::{self, PhysicalParams, ScaledModel};
use heun_spectrum::oracle::{self, GridSpec};
use heun_spectrum::precision::{format_sig, parse_exact, Precision};
use heun_spectrum::ritz::{self, BasisSpec, ConvergenceOptions};
use heun_spectrum::Error;

create_exception!(heun_spectrum, HeunError, PyException, "Base class of computation failures.");
create_exception!(heun_spectrum, PrecisionError, HeunError, "Working precision too low; raise `digits`.");
create_exception!(heun_spectrum, CheckFailure, HeunError, "A consistency check failed.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::Threshold => PyValueError::new_err(e.to_string()),
        Error::PrecisionExhausted { .. } => PrecisionError::new_err(e.to_string()),
        Error::CheckFailure(_) => CheckFailure::new_err(e.to_string()),
        _ => HeunError::new_err(e.to_string()),
    }
}

fn prec(digits: u32) -> PyResult<Precision> {
    Precision::digits(digits).map_err(to_py)
}

/// A coupling given from Python: exact token or float.
enum Alpha {
    Exact(String),
    Value(f64),
}

impl Alpha {
    fn from_py(obj: &Bound<'_, PyAny>) -> PyResult<Self> {
        if let Ok(s) = obj.cast::<PyString>() {
            return Ok(Alpha::Exact(s.to_str()?.to_owned()));
        }
        Ok(Alpha::Value(obj.extract::<f64>()?))
    }

    fn value(&self, p: Precision) -> heun_spectrum::Result<Float> {
        match self {
            Alpha::Exact(t) => parse_exact(t, p),
            Alpha::Value(v) if v.is_finite() => Ok(Float::with_val(p.bits(), *v)),
            Alpha::Value(v) => Err(Error::InvalidInput(format!("alpha must be finite, got {v}"))),
        }
    }

    fn model(&self, l: f64, p: Precision) -> heun_spectrum::Result<ScaledModel> {
        ScaledModel::with_alpha(l, self.value(p)?)
    }
}

/// One truncation family: fixed W and the real roots in alpha.
#[pyclass(frozen, get_all, skip_from_py_object, module = "heun_spectrum")]
#[derive(Clone)]
struct TruncationSolution {
    n: u32,
    l: f64,
    w: f64,
    roots: Vec<f64>,
    /// Roots printed with every working digit.
    roots_exact: Vec<String>,
    /// Nodes on (0, inf) of the polynomial eigenfunction at each root.
    nodes: Vec<usize>,
}

#[pymethods]
impl TruncationSolution {
    fn __repr__(&self) -> String {
        format!("TruncationSolution(n={}, l={}, W={}, roots={:?})", self.n, self.l, self.w, self.roots)
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "heun_spectrum")]
#[derive(Clone)]
struct RitzResult {
    size: usize,
    eigenvalues: Vec<f64>,
    eigenvalues_exact: Vec<String>,
    residual_norms: Vec<f64>,
    lost_digits: f64,
    digits: u32,
}

impl From<&ritz::RitzResult> for RitzResult {
    fn from(r: &ritz::RitzResult) -> Self {
        RitzResult {
            size: r.size,
            eigenvalues: r.eigenvalues_f64(),
            eigenvalues_exact: r.eigenvalues.iter().map(|w| format_sig(w, r.precision.digits as usize)).collect(),
            residual_norms: r.residual_norms.iter().map(Float::to_f64).collect(),
            lost_digits: r.lost_digits,
            digits: r.precision.digits,
        }
    }
}

#[pymethods]
impl RitzResult {
    fn __repr__(&self) -> String {
        format!("RitzResult(N={}, eigenvalues={:?})", self.size, self.eigenvalues)
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "heun_spectrum")]
#[derive(Clone)]
struct OracleLevel {
    value: f64,
    error_bar: f64,
    coarse: f64,
    fine: Option<f64>,
    boundary_mass: f64,
}

#[pymethods]
impl OracleLevel {
    fn __repr__(&self) -> String {
        format!("OracleLevel(value={}, error_bar={:e})", self.value, self.error_bar)
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "heun_spectrum")]
#[derive(Clone)]
struct HfReport {
    l: f64,
    alpha: f64,
    level: usize,
    lhs: f64,
    rhs: f64,
    abs_diff: f64,
    step: f64,
    basis_size: usize,
    w: f64,
}

#[pymethods]
impl HfReport {
    fn __repr__(&self) -> String {
        format!(
            "HfReport(alpha={}, level={}, lhs={}, rhs={}, abs_diff={:e})",
            self.alpha, self.level, self.lhs, self.rhs, self.abs_diff
        )
    }
}

/// Sampled W_level(alpha).
#[pyclass(frozen, from_py_object, module = "heun_spectrum")]
#[derive(Clone)]
struct SpectrumCurve {
    inner: analysis::SpectrumCurve,
}

#[pymethods]
impl SpectrumCurve {
    #[getter]
    fn l(&self) -> f64 {
        self.inner.l
    }

    #[getter]
    fn level(&self) -> usize {
        self.inner.level
    }

    #[getter]
    fn basis_size(&self) -> usize {
        self.inner.basis_size
    }

    #[getter]
    fn samples(&self) -> Vec<(f64, f64)> {
        self.inner.samples.clone()
    }

    /// Linear interpolation; None outside the sampled range.
    fn interpolate(&self, alpha: f64) -> Option<f64> {
        self.inner.interpolate(alpha)
    }

    fn __len__(&self) -> usize {
        self.inner.samples.len()
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.inner.alpha_range();
        format!("SpectrumCurve(level={}, alpha=[{lo}, {hi}], N={})", self.inner.level, self.inner.basis_size)
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "heun_spectrum")]
#[derive(Clone)]
struct OverlayPoint {
    n: u32,
    root_index: usize,
    alpha: f64,
    w: f64,
    level: usize,
    nodes: usize,
    curve_gap: f64,
    ritz_gap: f64,
    points_on_vertical: usize,
}

#[pymethods]
impl OverlayPoint {
    fn __repr__(&self) -> String {
        format!(
            "OverlayPoint(n={}, alpha={}, W={}, level={})",
            self.n, self.alpha, self.w, self.level
        )
    }
}

#[pyclass(frozen, get_all, skip_from_py_object, module = "heun_spectrum")]
#[derive(Clone)]
struct OverlayReport {
    l: f64,
    n_max: u32,
    points: Vec<OverlayPoint>,
    zero_alpha_ladder: Vec<(u32, usize)>,
    isolated: bool,
}

/// (printed, computed, pass)
type Cell = (String, String, bool);

#[pyclass(frozen, get_all, skip_from_py_object, module = "heun_spectrum")]
#[derive(Clone)]
struct TableReport {
    which: u8,
    alpha: String,
    mismatches: usize,
    passed: bool,
    /// (N, [(printed, computed, pass), ...]) per printed row.
    rows: Vec<(usize, Vec<Cell>)>,
}

#[pyfunction]
#[pyo3(signature = (n, l=0.0, digits=40))]
fn truncation_solutions(py: Python<'_>, n: u32, l: f64, digits: u32) -> PyResult<TruncationSolution> {
    let p = prec(digits)?;
    py.detach(|| {
        let sol = frobenius::truncation_solutions_with(l, n, p)?;
        let nodes = (1..=sol.alpha_roots.len())
            .map(|i| frobenius::polynomial_wavefunction(&sol, i).map(|w| w.node_count()))
            .collect::<heun_spectrum::Result<Vec<_>>>()?;
        Ok(TruncationSolution {
            n,
            l,
            w: sol.w_fixed_f64(),
            roots: sol.roots_f64(),
            roots_exact: sol.alpha_roots.iter().map(|r| format_sig(r, digits as usize)).collect(),
            nodes,
        })
    })
    .map_err(to_py)
}

/// Ritz eigenvalues for the first `size` basis functions.
#[pyfunction]
#[pyo3(signature = (l, alpha, size, digits=50))]
fn ritz_spectrum(py: Python<'_>, l: f64, alpha: &Bound<'_, PyAny>, size: usize, digits: u32) -> PyResult<RitzResult> {
    let a = Alpha::from_py(alpha)?;
    let p = prec(digits)?;
    py.detach(|| {
        let m = a.model(l, p)?;
        ritz::ritz_spectrum(&m, size, p).map(|r| RitzResult::from(&r))
    })
    .map_err(to_py)
}

/// One result per basis size; raises CheckFailure if a level rises with N.
#[pyfunction]
#[pyo3(signature = (l, alpha, sizes, count=4, digits=50))]
fn convergence_study(
    py: Python<'_>,
    l: f64,
    alpha: &Bound<'_, PyAny>,
    sizes: Vec<usize>,
    count: usize,
    digits: u32,
) -> PyResult<Vec<RitzResult>> {
    let a = Alpha::from_py(alpha)?;
    let p = prec(digits)?;
    py.detach(|| {
        let m = a.model(l, p)?;
        let study = ritz::convergence_study(&m, &sizes, count, p)?;
        Ok(study.results.iter().map(RitzResult::from).collect())
    })
    .map_err(to_py)
}

/// Grows the basis until the `count` lowest levels are stable.
#[pyfunction]
#[pyo3(signature = (l, alpha, count=4, digits=50, tolerance=1e-13, max_size=40))]
fn converged_spectrum(
    py: Python<'_>,
    l: f64,
    alpha: &Bound<'_, PyAny>,
    count: usize,
    digits: u32,
    tolerance: f64,
    max_size: usize,
) -> PyResult<RitzResult> {
    let a = Alpha::from_py(alpha)?;
    let p = prec(digits)?;
    let opts = ConvergenceOptions {
        tolerance,
        max_size,
        ..Default::default()
    };
    py.detach(|| {
        let m = a.model(l, p)?;
        ritz::converged_spectrum(&m, count, p, opts).map(|r| RitzResult::from(&r))
    })
    .map_err(to_py)
}

/// <1/xi> in Ritz state `level` at basis size `size`.
#[pyfunction]
#[pyo3(signature = (l, alpha, size, level=0, digits=50))]
fn expectation_inverse_xi(
    py: Python<'_>,
    l: f64,
    alpha: &Bound<'_, PyAny>,
    size: usize,
    level: usize,
    digits: u32,
) -> PyResult<f64> {
    let a = Alpha::from_py(alpha)?;
    let p = prec(digits)?;
    py.detach(|| {
        let m = a.model(l, p)?;
        let r = ritz::ritz_spectrum(&m, size, p)?;
        let basis = BasisSpec::new(l, size, r.precision)?;
        ritz::expectation_inverse_xi(&r, level, &basis).map(|v| v.to_f64())
    })
    .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (l, alpha, count=4, xi_max=12.0, npoints=20000, richardson=true))]
fn fd_spectrum(
    py: Python<'_>,
    l: f64,
    alpha: &Bound<'_, PyAny>,
    count: usize,
    xi_max: f64,
    npoints: usize,
    richardson: bool,
) -> PyResult<Vec<OracleLevel>> {
    let a = Alpha::from_py(alpha)?;
    let grid = GridSpec {
        xi_max,
        npoints,
        richardson,
    };
    py.detach(|| {
        let m = a.model(l, Precision::default())?;
        let s = oracle::fd_spectrum(&m, &grid, count)?;
        Ok(s.levels
            .iter()
            .map(|lv| OracleLevel {
                value: lv.value,
                error_bar: lv.error_bar,
                coarse: lv.coarse,
                fine: lv.fine,
                boundary_mass: lv.boundary_mass,
            })
            .collect())
    })
    .map_err(to_py)
}

/// Ratios of successive eigenvalue changes under grid halving (about 4).
#[pyfunction]
#[pyo3(signature = (l, alpha, count=4, xi_max=12.0, npoints=2500))]
fn grid_contraction(
    py: Python<'_>,
    l: f64,
    alpha: &Bound<'_, PyAny>,
    count: usize,
    xi_max: f64,
    npoints: usize,
) -> PyResult<Vec<f64>> {
    let a = Alpha::from_py(alpha)?;
    let grid = GridSpec {
        xi_max,
        npoints,
        richardson: false,
    };
    py.detach(|| oracle::grid_contraction(&a.model(l, Precision::default())?, &grid, count))
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (l, alpha, level=0, step=1e-3, richardson=false, digits=50))]
fn hellmann_feynman_check(
    py: Python<'_>,
    l: f64,
    alpha: &Bound<'_, PyAny>,
    level: usize,
    step: f64,
    richardson: bool,
    digits: u32,
) -> PyResult<HfReport> {
    let a = Alpha::from_py(alpha)?;
    let p = prec(digits)?;
    py.detach(|| {
        let r = analysis::hellmann_feynman_check(l, &a.value(p)?, level, step, richardson, p)?;
        Ok(HfReport {
            l: r.l,
            alpha: r.alpha,
            level: r.level,
            lhs: r.lhs,
            rhs: r.rhs,
            abs_diff: r.abs_diff,
            step: r.step,
            basis_size: r.basis_size,
            w: r.w,
        })
    })
    .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (l, alpha_min, alpha_max, step=0.05, levels=4, basis_n=20, digits=50))]
#[allow(clippy::too_many_arguments)]
fn spectrum_sweep(
    py: Python<'_>,
    l: f64,
    alpha_min: f64,
    alpha_max: f64,
    step: f64,
    levels: usize,
    basis_n: usize,
    digits: u32,
) -> PyResult<Vec<SpectrumCurve>> {
    let p = prec(digits)?;
    py.detach(|| analysis::spectrum_sweep(l, alpha_min, alpha_max, step, levels, basis_n, p))
        .map(|cs| cs.into_iter().map(|inner| SpectrumCurve { inner }).collect())
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (l, n_max, curves, digits=50))]
fn truncation_overlay(
    py: Python<'_>,
    l: f64,
    n_max: u32,
    curves: Vec<SpectrumCurve>,
    digits: u32,
) -> PyResult<OverlayReport> {
    let p = prec(digits)?;
    let inner: Vec<analysis::SpectrumCurve> = curves.into_iter().map(|c| c.inner).collect();
    let r = py.detach(|| analysis::truncation_overlay(l, n_max, &inner, p)).map_err(to_py)?;
    Ok(OverlayReport {
        l: r.l,
        n_max: r.n_max,
        points: r
            .points
            .iter()
            .map(|pt| OverlayPoint {
                n: pt.n,
                root_index: pt.root_index,
                alpha: pt.alpha,
                w: pt.w_truncation,
                level: pt.matched_levels[0],
                nodes: pt.nodes,
                curve_gap: pt.curve_gap,
                ritz_gap: pt.ritz_gap,
                points_on_vertical: pt.points_on_vertical,
            })
            .collect(),
        zero_alpha_ladder: r.zero_alpha_ladder,
        isolated: r.isolated,
    })
}

/// `(lo, hi)` bracketing the sign change of the ground curve, or None.
#[pyfunction]
fn negative_onset(curves: Vec<SpectrumCurve>) -> PyResult<Option<(f64, f64)>> {
    let inner: Vec<analysis::SpectrumCurve> = curves.into_iter().map(|c| c.inner).collect();
    match analysis::negative_onset(&inner).map_err(to_py)? {
        NegativeOnset::Bracket { lo, hi, .. } => Ok(Some((lo, hi))),
        NegativeOnset::NotFound { .. } => Ok(None),
    }
}

#[pyfunction]
#[pyo3(signature = (which, digits=50))]
fn reproduce_table(py: Python<'_>, which: u8, digits: u32) -> PyResult<TableReport> {
    let p = prec(digits)?;
    let r = py.detach(|| analysis::reproduce_table(which, p)).map_err(to_py)?;
    Ok(TableReport {
        which: r.which,
        alpha: r.alpha.clone(),
        mismatches: r.mismatches,
        passed: r.pass(),
        rows: r
            .rows
            .iter()
            .map(|row| {
                (
                    row.n,
                    row.cells
                        .iter()
                        .map(|c| (c.printed.clone(), c.computed.clone(), c.pass))
                        .collect(),
                )
            })
            .collect(),
    })
}

#[pyfunction]
#[pyo3(signature = (l, alpha, xi, centrifugal=false))]
fn effective_potential(l: f64, alpha: &Bound<'_, PyAny>, xi: f64, centrifugal: bool) -> PyResult<f64> {
    let a = Alpha::from_py(alpha)?;
    let m = a.model(l, Precision::default()).map_err(to_py)?;
    model::effective_potential(&m, xi, centrifugal).map_err(to_py)
}

/// alpha from physical parameters.
#[pyfunction]
#[pyo3(signature = (m, omega, q, e0, k=0.0))]
fn scale(m: f64, omega: f64, q: f64, e0: f64, k: f64) -> PyResult<f64> {
    let params = PhysicalParams::new(m, omega, q, e0, k).map_err(to_py)?;
    Ok(model::scale(&params, 0.0).map_err(to_py)?.alpha_f64())
}

/// Physical energy (omega/2) W + k^2/(2m).
#[pyfunction]
#[pyo3(signature = (w, m, omega, q, e0, k=0.0))]
fn unscale_energy(w: f64, m: f64, omega: f64, q: f64, e0: f64, k: f64) -> PyResult<f64> {
    let params = PhysicalParams::new(m, omega, q, e0, k).map_err(to_py)?;
    model::unscale_energy(w, &params).map_err(to_py)
}

/// Runs the command line in process: `(exit_status, output)`.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String) {
    let parsed = cli::Cli::try_parse_from(std::iter::once("heun".to_string()).chain(args));
    let parsed = match parsed {
        Ok(c) => c,
        Err(e) => return (e.exit_code(), e.to_string()),
    };
    py.detach(|| match cli::run(&parsed) {
        Ok((outcome, format)) => (outcome.exit_code(), outcome.render(format)),
        Err(e) => (e.exit_code(), e.to_string()),
    })
}

#[pymodule(name = "heun_spectrum")]
pub fn heun_spectrum_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("HeunError", py.get_type::<HeunError>())?;
    m.add("PrecisionError", py.get_type::<PrecisionError>())?;
    m.add("CheckFailure", py.get_type::<CheckFailure>())?;
    m.add_class::<TruncationSolution>()?;
    m.add_class::<RitzResult>()?;
    m.add_class::<OracleLevel>()?;
    m.add_class::<HfReport>()?;
    m.add_class::<SpectrumCurve>()?;
    m.add_class::<OverlayPoint>()?;
    m.add_class::<OverlayReport>()?;
    m.add_class::<TableReport>()?;
    m.add_function(wrap_pyfunction!(truncation_solutions, m)?)?;
    m.add_function(wrap_pyfunction!(ritz_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add_function(wrap_pyfunction!(converged_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(expectation_inverse_xi, m)?)?;
    m.add_function(wrap_pyfunction!(fd_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(grid_contraction, m)?)?;
    m.add_function(wrap_pyfunction!(hellmann_feynman_check, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(truncation_overlay, m)?)?;
    m.add_function(wrap_pyfunction!(negative_onset, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_table, m)?)?;
    m.add_function(wrap_pyfunction!(effective_potential, m)?)?;
    m.add_function(wrap_pyfunction!(scale, m)?)?;
    m.add_function(wrap_pyfunction!(unscale_energy, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("DEFAULT_DIGITS", heun_spectrum::precision::DEFAULT_DIGITS)?;
    Ok(())
}

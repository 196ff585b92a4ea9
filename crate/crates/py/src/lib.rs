//! Python module `lebrun`.

use num_traits::ToPrimitive;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lebrun_core::bergman::kernel::{epsilon_at, h_alpha, norm_ratio};
use lebrun_core::bergman::Weight;
use lebrun_core::coords::{self, ComplexPoint, Params, RadialPoint, SigmaPoint, DEFAULT_TOL};
use lebrun_core::expansion::{asymptotic_fit, coeffs_ricci_flat_contracted};
use lebrun_core::geometry::{curvature_at, metric_at, Mat2};
use lebrun_core::series::{exp_alpha_phi, parse_rational};
use lebrun_core::suite::{run_all, run_criterion, SuiteOptions, CRITERIA};
use lebrun_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn real_point(m: f64, u: f64, v: f64) -> PyResult<(Params, SigmaPoint, ComplexPoint)> {
    let prm = Params::new(m).map_err(err)?;
    let p = SigmaPoint::new(u, v).map_err(err)?;
    let x = coords::forward_map(p, prm).map_err(err)?;
    Ok((prm, p, ComplexPoint::real(x)))
}

fn mat(m: &Mat2) -> Vec<Vec<num_complex::Complex64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

/// `(U, V) -> (|z1|², |z2|²)`.
#[pyfunction]
fn forward_map(m: f64, u: f64, v: f64) -> PyResult<(f64, f64)> {
    let (_, _, z) = real_point(m, u, v)?;
    let x = z.radial();
    Ok((x.x1, x.x2))
}

/// `(|z1|², |z2|²) -> (U, V)`.
#[pyfunction]
#[pyo3(signature = (m, x1, x2, tol = DEFAULT_TOL))]
fn inverse_map(m: f64, x1: f64, x2: f64, tol: f64) -> PyResult<(f64, f64)> {
    let prm = Params::new(m).map_err(err)?;
    let x = RadialPoint::new(x1, x2).map_err(err)?;
    let p = coords::inverse_map(x, prm, tol).map_err(err)?;
    Ok((p.u, p.v))
}

/// Metric at the real point over `(U, V)`: keys `g`, `ginv`, `det`.
#[pyfunction]
fn metric<'py>(py: Python<'py>, m: f64, u: f64, v: f64) -> PyResult<Bound<'py, PyDict>> {
    let (prm, _, z) = real_point(m, u, v)?;
    let g = metric_at(z, prm).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("g", mat(&g.g))?;
    d.set_item("ginv", mat(&g.ginv))?;
    d.set_item("det", g.det)?;
    Ok(d)
}

/// Curvature invariants at the real point over `(U, V)`.
#[pyfunction]
fn curvature<'py>(py: Python<'py>, m: f64, u: f64, v: f64) -> PyResult<Bound<'py, PyDict>> {
    let (prm, _, z) = real_point(m, u, v)?;
    let c = curvature_at(z, prm).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("normR2", c.norm_r2)?;
    d.set_item("lapR2", c.lap_r2)?;
    d.set_item("rho", c.rho)?;
    d.set_item("ricci", mat(&c.ric))?;
    Ok(d)
}

/// `ε(U, V)` with its truncation bound and error estimate.
#[pyfunction]
#[pyo3(signature = (m, alpha, u = 0.0, v = 0.0, tol = 1e-12))]
fn epsilon<'py>(py: Python<'py>, m: f64, alpha: f64, u: f64, v: f64, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let prm = Params::new(m).map_err(err)?;
    let w = Weight::new(alpha).map_err(err)?;
    let p = SigmaPoint::new(u, v).map_err(err)?;
    let s = py.detach(|| epsilon_at(p, prm, w, tol)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("epsilon", s.value)?;
    d.set_item("trunc_bound", s.trunc_bound)?;
    d.set_item("abs_err", s.abs_err)?;
    d.set_item("window", s.window)?;
    Ok(d)
}

/// `(h_α, ‖1‖²_m/‖1‖²_0)` as `(value, abs_err)` pairs.
#[pyfunction]
fn balance(py: Python<'_>, m: f64, alpha: f64) -> PyResult<((f64, f64), (f64, f64))> {
    let prm = Params::new(m).map_err(err)?;
    let w = Weight::new(alpha).map_err(err)?;
    py.detach(|| {
        let h = h_alpha(prm, w)?;
        let r = norm_ratio(prm, w)?;
        Ok(((h.value, h.abs_err), (r.value, r.abs_err)))
    })
    .map_err(err)
}

/// Exact coefficients of `e^{αΦ}` as `(i, j, "p/q")` up to total degree `max_degree`.
#[pyfunction]
#[pyo3(signature = (m, alpha, max_degree = 4))]
fn series(m: &str, alpha: &str, max_degree: u32) -> PyResult<Vec<(u32, u32, String, f64)>> {
    let s = exp_alpha_phi(&parse_rational(m).map_err(err)?, &parse_rational(alpha).map_err(err)?, max_degree).map_err(err)?;
    Ok(s.terms()
        .into_iter()
        .map(|((i, j), c)| (i, j, c.to_string(), c.to_f64().unwrap_or(f64::NAN)))
        .collect())
}

/// Fit of `π²ε - α² ≈ c2 + c3/α` at `(U, V)`.
#[pyfunction]
#[pyo3(signature = (m, alphas, u = 0.0, v = 0.0, tol = 1e-14))]
fn englis_fit<'py>(py: Python<'py>, m: f64, alphas: Vec<f64>, u: f64, v: f64, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let prm = Params::new(m).map_err(err)?;
    let p = SigmaPoint::new(u, v).map_err(err)?;
    let fit = py.detach(|| asymptotic_fit(p, prm, &alphas, tol)).map_err(err)?;
    let a = coeffs_ricci_flat_contracted(p, prm);
    let d = PyDict::new(py);
    d.set_item("c2_fit", fit.c2)?;
    d.set_item("c3_fit", fit.c3)?;
    d.set_item("c2_curvature", a.a2)?;
    d.set_item("a3_contracted", a.a3)?;
    d.set_item("residual_norm", fit.residual_norm)?;
    d.set_item("condition", fit.condition)?;
    Ok(d)
}

/// Runs acceptance checks; returns one dict per check.
#[pyfunction]
#[pyo3(signature = (criteria = None))]
fn verify<'py>(py: Python<'py>, criteria: Option<Vec<u32>>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let opts = SuiteOptions::default();
    let results = match criteria {
        None => py.detach(|| run_all(opts)),
        Some(ids) => {
            if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > CRITERIA) {
                return Err(PyValueError::new_err(format!("criterion must be in 1..={CRITERIA}, got {bad}")));
            }
            py.detach(|| ids.iter().filter_map(|&i| run_criterion(i, opts)).collect())
        }
    };
    results
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("id", r.id)?;
            d.set_item("name", r.name)?;
            d.set_item("status", r.status.as_str())?;
            d.set_item("reference", r.reference)?;
            let measured = PyDict::new(py);
            for (k, v) in &r.measured {
                measured.set_item(k, v)?;
            }
            d.set_item("measured", measured)?;
            d.set_item("notes", r.notes.clone())?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn lebrun(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(forward_map, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_map, m)?)?;
    m.add_function(wrap_pyfunction!(metric, m)?)?;
    m.add_function(wrap_pyfunction!(curvature, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(balance, m)?)?;
    m.add_function(wrap_pyfunction!(series, m)?)?;
    m.add_function(wrap_pyfunction!(englis_fit, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}

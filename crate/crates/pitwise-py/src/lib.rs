//! Python bindings: the pointwise tests, combiners, Shapley influence,
//! baselines, PITOS, and the simulation laboratory.

// the #[pyfunction] macro expansion trips this lint on every binding
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pitwise::pitlab::experiment::{parse_sim_spec, run_experiment};
use pitwise::pitlab::{
    calibrate_loading_scale, copula_dependent_uniforms, exact_loo_pit, exact_posterior_pit,
    spp_pit, ConjugateHierSpec, Dgp, LowRankCopulaSpec,
};
use pitwise::{
    ad_test, cct, combined_test, ecdf_plot_data, influential_region, ks_test, pietc_pointwise,
    pitos_test, potc_pointwise, pritc_pointwise, shapley_values, tcct, tippett_min_p, Combiner,
    Method, Partition, PitKind, PitSample, PointwiseResult, Reference, TestReport,
};

fn err(e: pitwise::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn sample_from(values: Vec<f64>, rank_grid: Option<u32>) -> PyResult<PitSample> {
    let kind = match rank_grid {
        Some(s) => PitKind::RankBased { s },
        None => PitKind::Continuous,
    };
    PitSample::new(values, kind).map_err(err)
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let json = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let loads = py.import_bound("json")?.getattr("loads")?;
    loads.call1((json,))
}

fn report_dict<'py>(py: Python<'py>, report: &TestReport) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, report)
}

fn pointwise_dict<'py>(py: Python<'py>, pw: &PointwiseResult) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, pw)
}

fn parse_combiner(s: &str) -> PyResult<Combiner> {
    s.parse().map_err(err)
}

fn parse_reference(s: &str) -> PyResult<Reference> {
    s.parse().map_err(err)
}

/// Per-order-statistic beta p-values (POT-C).
#[pyfunction]
#[pyo3(signature = (values, rank_grid=None))]
fn potc<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    rank_grid: Option<u32>,
) -> PyResult<Bound<'py, PyAny>> {
    let sample = sample_from(values, rank_grid)?;
    pointwise_dict(py, &potc_pointwise(&sample).map_err(err)?)
}

/// Binomial p-values for scaled ECDF counts (PRIT-C). `partition=None` uses
/// the rank grid of a rank-based sample.
#[pyfunction]
#[pyo3(signature = (values, partition=None, rank_grid=None))]
fn pritc<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    partition: Option<Vec<f64>>,
    rank_grid: Option<u32>,
) -> PyResult<Bound<'py, PyAny>> {
    let sample = sample_from(values, rank_grid)?;
    let part = match partition {
        Some(points) => Partition::Points(points),
        None => Partition::Auto,
    };
    pointwise_dict(py, &pritc_pointwise(&sample, &part).map_err(err)?)
}

/// Reference-transform p-values (PIET-C); reference "exp:<rate>" or "normal".
#[pyfunction]
#[pyo3(signature = (values, reference="exp:1"))]
fn pietc<'py>(py: Python<'py>, values: Vec<f64>, reference: &str) -> PyResult<Bound<'py, PyAny>> {
    let sample = sample_from(values, None)?;
    pointwise_dict(
        py,
        &pietc_pointwise(&sample, parse_reference(reference)?).map_err(err)?,
    )
}

/// Global test: method in {potc, pritc, pietc}, combiner in {cct, tcct,
/// tippett}. Returns the test report as a dict.
#[pyfunction]
#[pyo3(signature = (values, method="potc", combiner="cct", alpha=0.05, reference="exp:1", partition=None, rank_grid=None))]
#[allow(clippy::too_many_arguments)]
fn test<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    method: &str,
    combiner: &str,
    alpha: f64,
    reference: &str,
    partition: Option<Vec<f64>>,
    rank_grid: Option<u32>,
) -> PyResult<Bound<'py, PyAny>> {
    let sample = sample_from(values, rank_grid)?;
    let method: Method = method.parse().map_err(err)?;
    let report = match method {
        Method::Ks => ks_test(&sample, alpha).map_err(err)?,
        Method::Ad => ad_test(&sample, alpha).map_err(err)?,
        Method::Pitos => pitos_test(&sample, 2 * sample.len(), alpha).map_err(err)?,
        Method::PotC | Method::PritC | Method::PietC => {
            let pw = match method {
                Method::PotC => potc_pointwise(&sample),
                Method::PritC => {
                    let part = match partition {
                        Some(points) => Partition::Points(points),
                        None => Partition::Auto,
                    };
                    pritc_pointwise(&sample, &part)
                }
                _ => pietc_pointwise(&sample, parse_reference(reference)?),
            }
            .map_err(err)?;
            combined_test(&pw, parse_combiner(combiner)?, alpha).map_err(err)?
        }
    };
    report_dict(py, &report)
}

/// Cauchy combination of p-values: returns (T, p_star).
#[pyfunction]
fn combine_cct(p_values: Vec<f64>) -> PyResult<(f64, f64)> {
    cct(&p_values).map_err(err)
}

/// Truncated Cauchy combination: returns (T, p_star).
#[pyfunction]
fn combine_tcct(p_values: Vec<f64>) -> PyResult<(f64, f64)> {
    tcct(&p_values).map_err(err)
}

/// Tippett's min-p with the independence global p-value.
#[pyfunction]
fn combine_tippett(p_values: Vec<f64>) -> PyResult<(f64, f64)> {
    tippett_min_p(&p_values).map_err(err)
}

/// Shapley values of the Cauchy transforms.
#[pyfunction]
fn shapley(cauchy_t: Vec<f64>) -> PyResult<Vec<f64>> {
    shapley_values(&cauchy_t).map_err(err)
}

/// Indices with Shapley value strictly above gamma.
#[pyfunction]
fn influential(phi: Vec<f64>, gamma: f64) -> PyResult<Vec<usize>> {
    Ok(influential_region(&phi, gamma)
        .map_err(err)?
        .into_iter()
        .collect())
}

/// Tilted-ECDF plot data with influence highlighting, as a list of dicts.
#[pyfunction]
#[pyo3(signature = (values, method="potc", combiner="cct", alpha=0.05, gamma=None, reference="exp:1", partition=None))]
#[allow(clippy::too_many_arguments)]
fn plot_data<'py>(
    py: Python<'py>,
    values: Vec<f64>,
    method: &str,
    combiner: &str,
    alpha: f64,
    gamma: Option<f64>,
    reference: &str,
    partition: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let sample = sample_from(values, None)?;
    let method: Method = method.parse().map_err(err)?;
    let pw = match method {
        Method::PotC => potc_pointwise(&sample),
        Method::PritC => {
            let part = match partition {
                Some(points) => Partition::Points(points),
                None => Partition::Auto,
            };
            pritc_pointwise(&sample, &part)
        }
        Method::PietC => pietc_pointwise(&sample, parse_reference(reference)?),
        _ => return Err(PyValueError::new_err("plot_data needs a pointwise method")),
    }
    .map_err(err)?;
    let report = combined_test(&pw, parse_combiner(combiner)?, alpha).map_err(err)?;
    let phi = shapley_values(&pw.cauchy_t).map_err(err)?;
    let max_phi = phi
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let gamma = gamma.unwrap_or(if report.reject { 0.0 } else { max_phi / 2.0 });
    let region = influential_region(&phi, gamma).map_err(err)?;
    let points = ecdf_plot_data(&sample, &pw, &region).map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("report", report_dict(py, &report)?)?;
    out.set_item("phi", phi)?;
    out.set_item("gamma", gamma)?;
    out.set_item("influential", region.into_iter().collect::<Vec<_>>())?;
    out.set_item("ecdf_points", to_py(py, &points)?)?;
    Ok(out.into_any())
}

fn dgp_from(name: &str, params: &Bound<'_, PyDict>) -> PyResult<Dgp> {
    let get = |key: &str| -> PyResult<f64> {
        params
            .get_item(key)?
            .ok_or_else(|| PyValueError::new_err(format!("dgp '{name}' needs '{key}'")))?
            .extract()
    };
    Ok(match name {
        "normal" => Dgp::Normal,
        "student_t" => Dgp::StudentT { nu: get("nu")? },
        "lognormal" => Dgp::LogNormal {
            sigma_log: get("sigma_log")?,
        },
        "generalized_normal" => Dgp::GeneralizedNormal {
            alpha: get("alpha")?,
            beta: get("beta")?,
        },
        "beta_binomial" => Dgp::BetaBinomial {
            trials: get("trials")? as u64,
            phi: get("phi")?,
        },
        "neg_binomial" => Dgp::NegBinomial { phi: get("phi")? },
        other => return Err(PyValueError::new_err(format!("unknown dgp '{other}'"))),
    })
}

/// Exact conjugate PIT values: variant in {loo, posterior, spp}. Returns
/// (data, pits) where data is the simulated G x m matrix.
#[pyfunction]
#[pyo3(signature = (groups, per_group, sigma, tau, mu0=0.0, dgp="normal", dgp_params=None, seed=0, variant="loo"))]
#[allow(clippy::too_many_arguments)]
fn conjugate_pits(
    py: Python<'_>,
    groups: usize,
    per_group: usize,
    sigma: f64,
    tau: f64,
    mu0: f64,
    dgp: &str,
    dgp_params: Option<Bound<'_, PyDict>>,
    seed: u64,
    variant: &str,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let params = dgp_params.unwrap_or_else(|| PyDict::new_bound(py));
    let spec = ConjugateHierSpec {
        groups,
        per_group,
        sigma,
        tau,
        mu0,
        dgp: dgp_from(dgp, &params)?,
        seed,
    };
    let data = spec.sample_data().map_err(err)?;
    let pits = match variant {
        "loo" => exact_loo_pit(&spec, &data),
        "posterior" => exact_posterior_pit(&spec, &data),
        "spp" => spp_pit(&spec, &data, seed),
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown PIT variant '{other}'"
            )))
        }
    }
    .map_err(err)?;
    Ok((data, pits.values().to_vec()))
}

/// Dependent uniforms from the low-rank Gaussian copula.
#[pyfunction]
#[pyo3(signature = (n, p, loading_scale, seed=0))]
fn copula_uniforms(n: usize, p: usize, loading_scale: f64, seed: u64) -> PyResult<Vec<f64>> {
    let spec = LowRankCopulaSpec {
        n,
        p,
        loading_scale,
        seed,
    };
    Ok(copula_dependent_uniforms(&spec)
        .map_err(err)?
        .values()
        .to_vec())
}

/// Loading scale whose mean pairwise latent correlation hits `target`.
#[pyfunction]
#[pyo3(signature = (n, p, seed, target))]
fn copula_calibrate(n: usize, p: usize, seed: u64, target: f64) -> PyResult<f64> {
    calibrate_loading_scale(n, p, seed, target).map_err(err)
}

/// Runs a Monte Carlo experiment from TOML text; returns the outcome dict.
#[pyfunction]
#[pyo3(signature = (spec_toml, jobs=1))]
fn simulate<'py>(py: Python<'py>, spec_toml: &str, jobs: usize) -> PyResult<Bound<'py, PyAny>> {
    let spec = parse_sim_spec(spec_toml).map_err(err)?;
    let outcome = run_experiment(&spec, jobs).map_err(err)?;
    to_py(py, &outcome)
}

#[pymodule]
fn pitwise_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(potc, m)?)?;
    m.add_function(wrap_pyfunction!(pritc, m)?)?;
    m.add_function(wrap_pyfunction!(pietc, m)?)?;
    m.add_function(wrap_pyfunction!(test, m)?)?;
    m.add_function(wrap_pyfunction!(combine_cct, m)?)?;
    m.add_function(wrap_pyfunction!(combine_tcct, m)?)?;
    m.add_function(wrap_pyfunction!(combine_tippett, m)?)?;
    m.add_function(wrap_pyfunction!(shapley, m)?)?;
    m.add_function(wrap_pyfunction!(influential, m)?)?;
    m.add_function(wrap_pyfunction!(plot_data, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate_pits, m)?)?;
    m.add_function(wrap_pyfunction!(copula_uniforms, m)?)?;
    m.add_function(wrap_pyfunction!(copula_calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}

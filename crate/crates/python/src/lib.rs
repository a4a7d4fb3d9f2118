//! Python bindings for the sequential-scattering simulator.
//!
//! Exposes the protocol runner, the closed-form concurrence and optimal
//! parameters, witness machinery, sweeps and the feasibility report, so the
//! whole toolkit can be driven from a notebook:
//!
//!     import nscatter_py as ns
//!     r = ns.run_protocol(4, tau=ns.optimal_time(1.0, 4), b_z=3.0)
//!     r["concurrence"]   # 0.7698...

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use nscatter_core::analysis;
use nscatter_core::dynamics;
use nscatter_core::entanglement;
use nscatter_core::feasibility;
use nscatter_core::hamiltonian;
use nscatter_core::verify;

fn err(e: nscatter_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_sweep_engine(name: &str) -> PyResult<analysis::SweepEngine> {
    match name {
        "closed_form" => Ok(analysis::SweepEngine::ClosedForm),
        "sector_oracle" => Ok(analysis::SweepEngine::SectorOracle),
        "collective" => Ok(analysis::SweepEngine::Collective),
        other => Err(PyValueError::new_err(format!(
            "unknown engine '{other}' (closed_form | sector_oracle | collective)"
        ))),
    }
}

fn parse_convention(name: &str) -> PyResult<entanglement::SignConvention> {
    match name {
        "corrected" => Ok(entanglement::SignConvention::Corrected),
        "paper" => Ok(entanglement::SignConvention::Paper),
        other => Err(PyValueError::new_err(format!(
            "unknown sign convention '{other}' (corrected | paper)"
        ))),
    }
}

fn rho_from_py(rows: Vec<Vec<Complex64>>) -> PyResult<entanglement::NeutronDensityMatrix> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(PyValueError::new_err("rho must be a 4x4 matrix"));
    }
    let m = nalgebra::Matrix4::from_fn(|i, j| rows[i][j]);
    entanglement::NeutronDensityMatrix::try_new(m).map_err(err)
}

fn rho_to_py(rho: &entanglement::NeutronDensityMatrix) -> Vec<Vec<Complex64>> {
    (0..4)
        .map(|i| (0..4).map(|j| rho.matrix()[(i, j)]).collect())
        .collect()
}

/// Closed-form concurrence for the one-magnon initial state.
#[pyfunction]
fn closed_form_concurrence(lam: f64, n: usize, b_z: f64, tau: f64) -> PyResult<f64> {
    entanglement::closed_form_concurrence(&entanglement::ClosedFormParams {
        lambda: lam,
        n,
        b_z,
        tau,
    })
    .map_err(err)
}

/// Optimal field strength `lambda * (N - 1)`.
#[pyfunction]
fn optimal_field(lam: f64, n: usize) -> PyResult<f64> {
    entanglement::optimal_field(lam, n).map_err(err)
}

/// Optimal interaction time `arccos(-1/3) / (4 lambda sqrt(N))`.
#[pyfunction]
fn optimal_time(lam: f64, n: usize) -> PyResult<f64> {
    entanglement::optimal_time(lam, n).map_err(err)
}

/// Run the four-stage protocol. Returns a dict with the concurrence, the
/// 4x4 two-neutron density matrix (|n2 n1> ordering), its purity, the
/// stage norms and the overlap with the reference scattered amplitudes.
#[pyfunction]
#[pyo3(signature = (n, tau, b_z = 0.0, lam = 1.0, j = 0.25, v0 = 0.0,
                    variant = "A", engine = "sector_oracle",
                    tau_f = 0.0, tau_f_prime = 0.0,
                    alpha = None, beta = None, lattice = "chain_periodic"))]
#[allow(clippy::too_many_arguments)]
fn run_protocol(
    py: Python<'_>,
    n: usize,
    tau: f64,
    b_z: f64,
    lam: f64,
    j: f64,
    v0: f64,
    variant: &str,
    engine: &str,
    tau_f: f64,
    tau_f_prime: f64,
    alpha: Option<Complex64>,
    beta: Option<Complex64>,
    lattice: &str,
) -> PyResult<Py<PyDict>> {
    let kind = match lattice {
        "chain_periodic" => hamiltonian::LatticeKind::ChainPeriodic,
        "chain_open" => hamiltonian::LatticeKind::ChainOpen,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown lattice '{other}' (chain_periodic | chain_open)"
            )))
        }
    };
    let init = match variant {
        "A" => dynamics::InitialStateSpec::variant_a(),
        "B" => match (alpha, beta) {
            (Some(a), Some(b)) => dynamics::InitialStateSpec::variant_b(a, b).map_err(err)?,
            (None, None) => dynamics::InitialStateSpec::variant_b_for_field(b_z, lam, n),
            _ => {
                return Err(PyValueError::new_err(
                    "variant B needs both alpha and beta (or neither)",
                ))
            }
        },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown variant '{other}' (A | B)"
            )))
        }
    };
    let engine_kind = match engine {
        "sector_oracle" => dynamics::EngineKind::SectorOracle,
        "collective" => dynamics::EngineKind::Collective,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown engine '{other}' (sector_oracle | collective)"
            )))
        }
    };
    let cfg = dynamics::ProtocolConfig {
        n,
        lattice: hamiltonian::LatticeSpec::new(kind, n).map_err(err)?,
        params: hamiltonian::CouplingParams {
            j,
            lambda: lam,
            b_z,
            v0,
        },
        init,
        tau_f,
        tau,
        tau_f_prime,
        engine: engine_kind,
    };
    cfg.validate().map_err(err)?;
    let protocol = dynamics::ProtocolEngine::new(&cfg).map_err(err)?;
    let result = protocol.run(tau).map_err(err)?;

    let out = PyDict::new(py);
    out.set_item("concurrence", result.concurrence().map_err(err)?)?;
    out.set_item("purity", result.neutron_rho.purity())?;
    out.set_item("rho", rho_to_py(&result.neutron_rho))?;
    out.set_item(
        "stage_norms",
        result.stages.iter().map(|s| s.norm).collect::<Vec<_>>(),
    )?;
    out.set_item(
        "reference_overlap",
        entanglement::reference_state_overlap(&result.final_state, protocol.basis())
            .map_err(err)?,
    )?;
    Ok(out.into())
}

/// Wootters concurrence of a 4x4 density matrix.
#[pyfunction]
fn concurrence(rho: Vec<Vec<Complex64>>) -> PyResult<f64> {
    entanglement::concurrence(&rho_from_py(rho)?).map_err(err)
}

/// The reference scattered amplitudes (mu, nu, xi, 0).
#[pyfunction]
fn reference_scattered_state() -> Vec<Complex64> {
    entanglement::reference_scattered_state()
        .iter()
        .cloned()
        .collect()
}

/// Exact witness expectation Tr(W rho).
#[pyfunction]
#[pyo3(signature = (rho, alpha, beta, convention = "corrected"))]
fn witness_expectation(
    rho: Vec<Vec<Complex64>>,
    alpha: f64,
    beta: f64,
    convention: &str,
) -> PyResult<f64> {
    let w =
        entanglement::WitnessSpec::new(alpha, beta, parse_convention(convention)?).map_err(err)?;
    Ok(entanglement::witness_expectation(&rho_from_py(rho)?, &w))
}

/// Shot-based witness estimate: returns (value, std_err).
#[pyfunction]
#[pyo3(signature = (rho, alpha, beta, shots_per_setting, seed, convention = "corrected"))]
fn measure_witness(
    rho: Vec<Vec<Complex64>>,
    alpha: f64,
    beta: f64,
    shots_per_setting: usize,
    seed: u64,
    convention: &str,
) -> PyResult<(f64, f64)> {
    let w =
        entanglement::WitnessSpec::new(alpha, beta, parse_convention(convention)?).map_err(err)?;
    let est = entanglement::measure_witness(&rho_from_py(rho)?, &w, shots_per_setting, seed)
        .map_err(err)?;
    Ok((est.value, est.std_err))
}

/// Rotate neutron 1 about z so the |01><10| coherence is real positive.
/// Returns (rho_aligned, angle).
#[pyfunction]
fn phase_align(rho: Vec<Vec<Complex64>>) -> PyResult<(Vec<Vec<Complex64>>, f64)> {
    let (aligned, theta) = rho_from_py(rho)?.phase_aligned();
    Ok((rho_to_py(&aligned), theta))
}

/// Peak concurrence over one oscillation period: returns (c_p, tau_at_peak).
#[pyfunction]
#[pyo3(signature = (n, lam, b_z, engine = "closed_form"))]
fn peak_concurrence(n: usize, lam: f64, b_z: f64, engine: &str) -> PyResult<(f64, f64)> {
    let p = analysis::peak_concurrence(n, lam, b_z, parse_sweep_engine(engine)?).map_err(err)?;
    Ok((p.c_p, p.tau))
}

/// Tolerance half-widths around the optimum: returns (delta_tau, delta_b).
#[pyfunction]
#[pyo3(signature = (n, lam, floor = 0.7))]
fn tolerance_widths(n: usize, lam: f64, floor: f64) -> PyResult<(f64, f64)> {
    let w = analysis::tolerance_widths(n, lam, floor).map_err(err)?;
    Ok((w.delta_tau, w.delta_b))
}

/// Least-squares slope of log C_p vs log N at zero field.
#[pyfunction]
fn zero_field_scaling_fit(n_values: Vec<usize>) -> PyResult<f64> {
    analysis::zero_field_scaling_fit(&n_values).map_err(err)
}

/// Concurrence sweep over tau; returns a list of (value, concurrence).
#[pyfunction]
#[pyo3(signature = (n, b_z, lo, hi, points, engine = "closed_form", variant = "A", lam = 1.0))]
#[allow(clippy::too_many_arguments)]
fn sweep_tau(
    n: usize,
    b_z: f64,
    lo: f64,
    hi: f64,
    points: usize,
    engine: &str,
    variant: &str,
    lam: f64,
) -> PyResult<Vec<(f64, f64)>> {
    let mut base = dynamics::ProtocolConfig::variant_a(n, b_z, 0.0).map_err(err)?;
    base.params.lambda = lam;
    if variant == "B" {
        base.init = dynamics::InitialStateSpec::variant_b_for_field(b_z, lam, n);
    } else if variant != "A" {
        return Err(PyValueError::new_err("variant must be A or B"));
    }
    let spec = analysis::SweepSpec::from_range(
        analysis::SweepVariable::Tau,
        lo,
        hi,
        points,
        base,
        parse_sweep_engine(engine)?,
    )
    .map_err(err)?;
    let result = analysis::sweep(&spec).map_err(err)?;
    Ok(result
        .rows
        .iter()
        .map(|r| (r.value, r.concurrence))
        .collect())
}

/// Monte-Carlo check that the dipolar direction average is (2/3) sigma.
#[pyfunction]
fn dipole_average_check(py: Python<'_>, samples: usize, seed: u64) -> PyResult<Py<PyDict>> {
    let r = hamiltonian::dipole_average_check(samples, seed).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("samples", r.samples)?;
    out.set_item("coeff_diag", r.coeff_diag.to_vec())?;
    out.set_item("coeff_std_err", r.coeff_std_err.to_vec())?;
    out.set_item("scalar_c", r.scalar_c)?;
    out.set_item("max_residual", r.max_residual)?;
    out.set_item("residual_bound", r.residual_bound)?;
    Ok(out.into())
}

/// Plain-text feasibility report for the reference ultra-cold-neutron
/// scenario with optional overrides.
#[pyfunction]
#[pyo3(signature = (a0_m = 1e-10, n_spins = 1e14, v_m_per_s = 7.0,
                    flight_path_m = 1.0, flux_per_m2_s = 1e8,
                    sample_area_m2 = 1e-2, t1_s = 1.0, t2_s = 1e-6,
                    b_target_t = 1e-2, d_target_m = 0.1))]
#[allow(clippy::too_many_arguments)]
fn feasibility_report(
    a0_m: f64,
    n_spins: f64,
    v_m_per_s: f64,
    flight_path_m: f64,
    flux_per_m2_s: f64,
    sample_area_m2: f64,
    t1_s: f64,
    t2_s: f64,
    b_target_t: f64,
    d_target_m: f64,
) -> PyResult<String> {
    use feasibility::{Dim, Quantity};
    let sc = feasibility::ExperimentScenario {
        a0: Quantity::meters(a0_m),
        n_spins,
        v: Quantity::new(v_m_per_s, Dim::METER_PER_SECOND),
        flight_path: Quantity::meters(flight_path_m),
        flux: Quantity::new(flux_per_m2_s, Dim::PER_M2_PER_S),
        sample_area: Quantity::new(sample_area_m2, Dim::M2),
        t1: Quantity::seconds(t1_s),
        t2: Quantity::seconds(t2_s),
        b_target: Quantity::tesla(b_target_t),
        d_target: Quantity::meters(d_target_m),
    };
    Ok(feasibility::feasibility_report(&sc)
        .map_err(err)?
        .to_string())
}

/// Run the verification suites; returns a list of (name, status, detail).
#[pyfunction]
#[pyo3(signature = (convention = "corrected"))]
fn run_verification(convention: &str) -> PyResult<Vec<(String, String, String)>> {
    let outcomes = verify::run_all(parse_convention(convention)?);
    Ok(outcomes
        .into_iter()
        .map(|o| (o.name.to_string(), o.status.label().to_string(), o.detail))
        .collect())
}

#[pymodule]
fn nscatter_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("PEAK_CONCURRENCE", entanglement::PEAK_CONCURRENCE)?;
    m.add_function(wrap_pyfunction!(closed_form_concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_field, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_time, m)?)?;
    m.add_function(wrap_pyfunction!(run_protocol, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(reference_scattered_state, m)?)?;
    m.add_function(wrap_pyfunction!(witness_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(measure_witness, m)?)?;
    m.add_function(wrap_pyfunction!(phase_align, m)?)?;
    m.add_function(wrap_pyfunction!(peak_concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(tolerance_widths, m)?)?;
    m.add_function(wrap_pyfunction!(zero_field_scaling_fit, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_tau, m)?)?;
    m.add_function(wrap_pyfunction!(dipole_average_check, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility_report, m)?)?;
    m.add_function(wrap_pyfunction!(run_verification, m)?)?;
    Ok(())
}

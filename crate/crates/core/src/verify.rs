//! Self-check harness behind the `verify` subcommand.
//!
//! Each suite exercises one correctness pillar end to end and reports a
//! single PASS/WARN/FAIL line. The central suite compares the brute-force
//! protocol concurrence against the closed form over a grid of sample
//! sizes, fields and interaction times; the others check the structural
//! invariances (free-evolution times, exchange constant, scalar potential),
//! engine equivalence, and the witness machinery.

use crate::analysis::{sweep, SweepEngine, SweepSpec, SweepVariable};
use crate::dynamics::{run_protocol, EngineKind, InitialStateSpec, ProtocolConfig, ProtocolEngine};
use crate::entanglement::{
    closed_form_concurrence, concurrence_at_optimal_field, measure_witness, optimal_field,
    optimal_time, phi_tilde, witness_expectation, witness_product_state_minimum, ClosedFormParams,
    SignConvention, WitnessSpec,
};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl SuiteOutcome {
    fn fail(name: &'static str, detail: String) -> Self {
        Self {
            name,
            status: Status::Fail,
            detail,
        }
    }

    fn from_result(name: &'static str, r: Result<(Status, String)>) -> Self {
        match r {
            Ok((status, detail)) => Self {
                name,
                status,
                detail,
            },
            Err(e) => Self::fail(name, format!("error: {e}")),
        }
    }
}

fn grid_taus(n: usize, b_z: f64, points: usize) -> Vec<f64> {
    let period = std::f64::consts::PI / phi_tilde(1.0, n, b_z);
    (0..points)
        .map(|i| period * i as f64 / (points - 1) as f64)
        .collect()
}

/// Oracle vs closed form over the reference grid; the central check.
pub fn suite_closed_form_match() -> SuiteOutcome {
    SuiteOutcome::from_result(
        "closed_form_match",
        (|| {
            let mut worst: f64 = 0.0;
            for n in 2usize..=10 {
                let b_values = [0.0, n as f64 - 1.0, 2.0 * n as f64];
                for b_z in b_values {
                    let mut cfg = ProtocolConfig::variant_a(n, b_z, 0.0)?;
                    cfg.engine = EngineKind::SectorOracle;
                    let engine = ProtocolEngine::new(&cfg)?;
                    for tau in grid_taus(n, b_z, 20) {
                        let oracle = engine.concurrence_at(tau)?;
                        let formula = closed_form_concurrence(&ClosedFormParams {
                            lambda: 1.0,
                            n,
                            b_z,
                            tau,
                        })?;
                        worst = worst.max((oracle - formula).abs());
                    }
                }
            }
            let status = if worst < 1e-8 {
                Status::Pass
            } else {
                Status::Fail
            };
            Ok((
                status,
                format!("max |oracle - closed form| = {worst:.3e} (tol 1e-8)"),
            ))
        })(),
    )
}

/// Concurrence independence from both free-evolution periods.
pub fn suite_free_evolution_invariance() -> SuiteOutcome {
    SuiteOutcome::from_result(
        "free_evolution_invariance",
        (|| {
            let tau = optimal_time(1.0, 4)?;
            let mut worst: f64 = 0.0;
            for b_z in [0.0, 3.0] {
                for variant_b in [false, true] {
                    let mut base = ProtocolConfig::variant_a(4, b_z, tau)?;
                    if variant_b {
                        base.init = InitialStateSpec::variant_b_for_field(b_z, 1.0, 4);
                    }
                    let reference = run_protocol(&base)?.concurrence()?;
                    for tf in [0.0, 0.7, 3.1, 42.0] {
                        for tfp in [0.0, 0.7, 3.1, 42.0] {
                            let mut cfg = base.clone();
                            cfg.tau_f = tf;
                            cfg.tau_f_prime = tfp;
                            let c = run_protocol(&cfg)?.concurrence()?;
                            worst = worst.max((c - reference).abs());
                        }
                    }
                }
            }
            let status = if worst < 1e-12 {
                Status::Pass
            } else {
                Status::Fail
            };
            Ok((
                status,
                format!("max concurrence shift = {worst:.3e} (tol 1e-12)"),
            ))
        })(),
    )
}

/// The exchange constant never moves the concurrence (periodic chain).
pub fn suite_j_invariance() -> SuiteOutcome {
    SuiteOutcome::from_result(
        "j_invariance",
        (|| {
            let tau = 0.21;
            let mut worst_a: f64 = 0.0;
            let mut worst_b: f64 = 0.0;
            for b_z in [0.0, 3.0] {
                for variant_b in [false, true] {
                    let mut reference = None;
                    for j in [0.1, 0.25, 1.0] {
                        let mut cfg = ProtocolConfig::variant_a(4, b_z, tau)?;
                        cfg.params.j = j;
                        if variant_b {
                            cfg.init = InitialStateSpec::variant_b_for_field(b_z, 1.0, 4);
                        }
                        let c = run_protocol(&cfg)?.concurrence()?;
                        match reference {
                            None => reference = Some(c),
                            Some(r) => {
                                let dev = (c - r).abs();
                                if variant_b {
                                    worst_b = worst_b.max(dev);
                                } else {
                                    worst_a = worst_a.max(dev);
                                }
                            }
                        }
                    }
                }
            }
            let status = if worst_a < 1e-10 && worst_b < 1e-10 {
                Status::Pass
            } else {
                Status::Fail
            };
            Ok((
                status,
                format!(
                "max shift: variant A {worst_a:.3e} (tol 1e-10), variant B {worst_b:.3e} (measured)"
            ),
            ))
        })(),
    )
}

/// A scalar potential during scattering is a sector-wide phase.
pub fn suite_v0_invariance() -> SuiteOutcome {
    SuiteOutcome::from_result(
        "v0_invariance",
        (|| {
            let tau = optimal_time(1.0, 6)?;
            let mut worst: f64 = 0.0;
            for variant_b in [false, true] {
                let mut reference = None;
                for v0 in [0.0, 5.0] {
                    let mut cfg = ProtocolConfig::variant_a(6, 5.0, tau)?;
                    cfg.params.v0 = v0;
                    if variant_b {
                        cfg.init = InitialStateSpec::variant_b_for_field(5.0, 1.0, 6);
                    }
                    let c = run_protocol(&cfg)?.concurrence()?;
                    match reference {
                        None => reference = Some(c),
                        Some(r) => worst = worst.max((c - r).abs()),
                    }
                }
            }
            let status = if worst < 1e-12 {
                Status::Pass
            } else {
                Status::Fail
            };
            Ok((
                status,
                format!("max concurrence shift = {worst:.3e} (tol 1e-12)"),
            ))
        })(),
    )
}

/// Sector oracle and collective engine agree.
pub fn suite_engine_equivalence() -> SuiteOutcome {
    SuiteOutcome::from_result(
        "engine_equivalence",
        (|| {
            let mut worst: f64 = 0.0;
            for n in 2..=10usize {
                let b_z = optimal_field(1.0, n)?;
                for tau_scale in [0.5, 1.0, 1.7] {
                    let tau = optimal_time(1.0, n)? * tau_scale;
                    let mut cfg = ProtocolConfig::variant_a(n, b_z, tau)?;
                    let c_sector = run_protocol(&cfg)?.concurrence()?;
                    cfg.engine = EngineKind::Collective;
                    let c_coll = run_protocol(&cfg)?.concurrence()?;
                    worst = worst.max((c_sector - c_coll).abs());
                }
            }
            // variant B at N = 4, balanced and polarized amplitudes
            for b_z in [0.0, 3.0] {
                let mut cfg = ProtocolConfig::variant_a(4, b_z, 0.37)?;
                cfg.init = InitialStateSpec::variant_b_for_field(b_z, 1.0, 4);
                let c_sector = run_protocol(&cfg)?.concurrence()?;
                cfg.engine = EngineKind::Collective;
                let c_coll = run_protocol(&cfg)?.concurrence()?;
                worst = worst.max((c_sector - c_coll).abs());
            }
            let status = if worst < 1e-10 {
                Status::Pass
            } else {
                Status::Fail
            };
            Ok((
                status,
                format!("max engine disagreement = {worst:.3e} (tol 1e-10)"),
            ))
        })(),
    )
}

/// Cross-check inside sweeps: closed form vs oracle row by row.
pub fn suite_sweep_cross_check() -> SuiteOutcome {
    SuiteOutcome::from_result(
        "sweep_cross_check",
        (|| {
            let base = ProtocolConfig::variant_a(4, 3.0, 0.0)?;
            let period = std::f64::consts::PI / phi_tilde(1.0, 4, 3.0);
            let s1 = sweep(&SweepSpec::from_range(
                SweepVariable::Tau,
                0.0,
                period,
                41,
                base.clone(),
                SweepEngine::ClosedForm,
            )?)?;
            let s2 = sweep(&SweepSpec::from_range(
                SweepVariable::Tau,
                0.0,
                period,
                41,
                base,
                SweepEngine::SectorOracle,
            )?)?;
            let mut worst: f64 = 0.0;
            for (a, b) in s1.rows.iter().zip(&s2.rows) {
                worst = worst.max((a.concurrence - b.concurrence).abs());
            }
            let status = if worst < 1e-8 {
                Status::Pass
            } else {
                Status::Fail
            };
            Ok((
                status,
                format!("max row difference = {worst:.3e} (tol 1e-8)"),
            ))
        })(),
    )
}

/// Closed-form structure: the optimal-field reduction and phi identity.
pub fn suite_closed_form_structure() -> SuiteOutcome {
    SuiteOutcome::from_result(
        "closed_form_structure",
        (|| {
            let mut worst: f64 = 0.0;
            for n in [3usize, 7, 21, 60] {
                let lambda = 0.3 + 0.17 * n as f64 % 1.9;
                let b = optimal_field(lambda, n)?;
                let phi = phi_tilde(lambda, n, b);
                let expect_phi = 2.0 * lambda * (n as f64).sqrt();
                worst = worst.max(((phi - expect_phi) / expect_phi).abs());
                for k in 1..=7 {
                    let tau = 0.11 * k as f64 / lambda;
                    let full = closed_form_concurrence(&ClosedFormParams {
                        lambda,
                        n,
                        b_z: b,
                        tau,
                    })?;
                    let reduced = concurrence_at_optimal_field(lambda, n, tau).clamp(0.0, 1.0);
                    worst = worst.max((full - reduced).abs());
                }
            }
            let status = if worst < 1e-12 {
                Status::Pass
            } else {
                Status::Fail
            };
            Ok((
                status,
                format!("max structural deviation = {worst:.3e} (tol 1e-12)"),
            ))
        })(),
    )
}

/// Witness machinery for the configured sign convention.
///
/// With the corrected sign the witness must go negative on the
/// (phase-aligned) optimal protocol output, stay non-negative on product
/// states, and the shot estimator must resolve the negativity at 5 sigma.
/// With the printed sign it evaluates to +2 a^2 b^2 on its own target; that
/// documented failure downgrades the suite to WARN rather than FAIL.
pub fn suite_witness(convention: SignConvention) -> SuiteOutcome {
    SuiteOutcome::from_result(
        "witness",
        (|| {
            let w = WitnessSpec::balanced(convention);
            let tau = optimal_time(1.0, 4)?;
            let cfg = ProtocolConfig::variant_a(4, 3.0, tau)?;
            let rho = run_protocol(&cfg)?.neutron_rho;
            let (aligned, _) = rho.phase_aligned();

            let min_prod = witness_product_state_minimum(&w, 100_000, 11);
            let exact = witness_expectation(&aligned, &w);
            let est = measure_witness(&aligned, &w, 100_000, 12)?;

            match convention {
                SignConvention::Corrected => {
                    let sigma = -est.value / est.std_err;
                    let ok = min_prod >= -1e-10 && exact < 0.0 && sigma > 5.0;
                    let status = if ok { Status::Pass } else { Status::Fail };
                    Ok((
                        status,
                        format!(
                            "Tr(W rho) = {exact:.4} on aligned output, {sigma:.0} sigma below 0 \
                         at 1e5 shots/setting; min over 1e5 product states = {min_prod:.2e}"
                        ),
                    ))
                }
                SignConvention::Paper => {
                    // the printed sign cannot certify its own target state
                    let h = std::f64::consts::FRAC_1_SQRT_2;
                    let target = nalgebra::Vector4::new(
                        crate::C64::new(0.0, 0.0),
                        crate::C64::new(h, 0.0),
                        crate::C64::new(h, 0.0),
                        crate::C64::new(0.0, 0.0),
                    );
                    let rho_t = crate::entanglement::NeutronDensityMatrix::from_pure(&target)?;
                    let on_target = witness_expectation(&rho_t, &w);
                    let reproduced = (on_target - 0.5).abs() < 1e-12;
                    let status = if reproduced {
                        Status::Warn
                    } else {
                        Status::Fail
                    };
                    Ok((
                        status,
                        format!(
                        "printed sign gives +2 a^2 b^2 = {on_target:.4} >= 0 on its own target; \
                         it cannot certify entanglement (documented; use the corrected sign)"
                    ),
                    ))
                }
            }
        })(),
    )
}

/// Run every suite. The witness convention is configurable because the
/// printed-sign failure mode must stay reproducible.
pub fn run_all(convention: SignConvention) -> Vec<SuiteOutcome> {
    vec![
        suite_closed_form_match(),
        suite_free_evolution_invariance(),
        suite_j_invariance(),
        suite_v0_invariance(),
        suite_engine_equivalence(),
        suite_sweep_cross_check(),
        suite_closed_form_structure(),
        suite_witness(convention),
    ]
}

/// True when no suite failed (warnings allowed).
pub fn all_passed(outcomes: &[SuiteOutcome]) -> bool {
    outcomes.iter().all(|o| o.status != Status::Fail)
}

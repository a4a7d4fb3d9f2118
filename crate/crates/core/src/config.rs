//! TOML run configuration.
//!
//! One file drives every subcommand; each section maps onto the owning
//! module's types and is validated by that module's preconditions before
//! any computation. Unknown keys are rejected at parse time.
//!
//! ```toml
//! seed = 7
//!
//! [protocol]
//! n = 4
//! lattice = "chain_periodic"     # or "chain_open"
//! engine = "sector_oracle"       # or "collective"
//! variant = "A"                  # or "B"
//! tau = 0.238829
//! tau_f = 0.0
//! tau_f_prime = 0.0
//! # alpha = [0.7071, 0.0]        # variant B amplitudes; default follows
//! # beta  = [0.7071, 0.0]        # the field-threshold rule B_t = 0.1*lambda*N
//!
//! [params]
//! j = 0.25
//! lambda = 1.0
//! b_z = 3.0
//! v0 = 0.0
//!
//! [sweep]
//! variable = "tau"               # or "b_z", "n"
//! lo = 0.0
//! hi = 0.65
//! points = 201
//! engine = "closed_form"
//!
//! [witness]
//! alpha = 0.70710678118654752
//! beta = 0.70710678118654752
//! sign_convention = "corrected"  # or "paper"
//! shots_per_setting = 100000
//! align_phase = true
//!
//! [scenario]
//! a0_m = 1e-10
//! n_spins = 1e14
//! v_m_per_s = 7.0
//! flight_path_m = 1.0
//! flux_per_m2_s = 1e8
//! sample_area_m2 = 1e-2
//! t1_s = 1.0
//! t2_s = 1e-6
//! b_target_t = 1e-2
//! d_target_m = 0.1
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::analysis::{SweepEngine, SweepSpec, SweepVariable};
use crate::dynamics::{EngineKind, InitialStateSpec, ProtocolConfig, Variant};
use crate::entanglement::{SignConvention, WitnessSpec};
use crate::error::{Error, Result};
use crate::feasibility::{Dim, ExperimentScenario, Quantity};
use crate::hamiltonian::{CouplingParams, LatticeKind, LatticeSpec};
use crate::C64;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every stochastic element (witness shots, dipole check).
    pub seed: Option<u64>,
    pub protocol: Option<ProtocolSection>,
    pub params: Option<ParamsSection>,
    pub sweep: Option<SweepSection>,
    pub witness: Option<WitnessSection>,
    pub scenario: Option<ScenarioSection>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub n: usize,
    #[serde(default = "default_lattice")]
    pub lattice: LatticeKind,
    #[serde(default = "default_engine")]
    pub engine: EngineKind,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    pub tau: f64,
    #[serde(default)]
    pub tau_f: f64,
    #[serde(default)]
    pub tau_f_prime: f64,
    /// Variant-B neutron amplitudes as [re, im]; defaulted from the field.
    pub alpha: Option<[f64; 2]>,
    pub beta: Option<[f64; 2]>,
}

fn default_lattice() -> LatticeKind {
    LatticeKind::ChainPeriodic
}

fn default_engine() -> EngineKind {
    EngineKind::SectorOracle
}

fn default_variant() -> Variant {
    Variant::A
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    #[serde(default = "default_j")]
    pub j: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub b_z: f64,
    #[serde(default)]
    pub v0: f64,
}

fn default_j() -> f64 {
    0.25
}

fn default_lambda() -> f64 {
    1.0
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self {
            j: default_j(),
            lambda: default_lambda(),
            b_z: 0.0,
            v0: 0.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVariable,
    #[serde(default = "default_sweep_engine")]
    pub engine: SweepEngine,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub points: Option<usize>,
    pub values: Option<Vec<f64>>,
}

fn default_sweep_engine() -> SweepEngine {
    SweepEngine::ClosedForm
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSection {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default = "default_convention")]
    pub sign_convention: SignConvention,
    #[serde(default = "default_shots")]
    pub shots_per_setting: usize,
    /// Reference the x/y settings to the frame where the |01><10| coherence
    /// is real positive (a local-unitary calibration).
    #[serde(default = "default_true")]
    pub align_phase: bool,
}

fn default_convention() -> SignConvention {
    SignConvention::Corrected
}

fn default_shots() -> usize {
    100_000
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub a0_m: f64,
    pub n_spins: f64,
    pub v_m_per_s: f64,
    pub flight_path_m: f64,
    pub flux_per_m2_s: f64,
    pub sample_area_m2: f64,
    pub t1_s: f64,
    pub t2_s: f64,
    #[serde(default = "default_b_target")]
    pub b_target_t: f64,
    #[serde(default = "default_d_target")]
    pub d_target_m: f64,
}

fn default_b_target() -> f64 {
    1e-2
}

fn default_d_target() -> f64 {
    0.1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn coupling_params(&self) -> CouplingParams {
        let p = self.params.clone().unwrap_or_default();
        CouplingParams {
            j: p.j,
            lambda: p.lambda,
            b_z: p.b_z,
            v0: p.v0,
        }
    }

    /// Materialize the protocol configuration, applying the field-threshold
    /// default for variant-B amplitudes when none are given.
    pub fn protocol_config(&self) -> Result<ProtocolConfig> {
        let section = self
            .protocol
            .as_ref()
            .ok_or_else(|| Error::Config("missing [protocol] section".into()))?;
        let params = self.coupling_params();
        let init = match section.variant {
            Variant::A => InitialStateSpec::variant_a(),
            Variant::B => match (section.alpha, section.beta) {
                (Some(a), Some(b)) => {
                    InitialStateSpec::variant_b(C64::new(a[0], a[1]), C64::new(b[0], b[1]))?
                }
                (None, None) => {
                    InitialStateSpec::variant_b_for_field(params.b_z, params.lambda, section.n)
                }
                _ => {
                    return Err(Error::Config(
                        "variant B needs both alpha and beta (or neither)".into(),
                    ))
                }
            },
        };
        let cfg = ProtocolConfig {
            n: section.n,
            lattice: LatticeSpec::new(section.lattice, section.n)?,
            params,
            init,
            tau_f: section.tau_f,
            tau: section.tau,
            tau_f_prime: section.tau_f_prime,
            engine: section.engine,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let section = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
        let base = self.protocol_config()?;
        let spec = match (&section.values, section.lo, section.hi, section.points) {
            (Some(values), None, None, None) => {
                let spec = SweepSpec {
                    variable: section.variable,
                    values: values.clone(),
                    base,
                    engine: section.engine,
                };
                spec.validate()?;
                spec
            }
            (None, Some(lo), Some(hi), Some(points)) => {
                SweepSpec::from_range(section.variable, lo, hi, points, base, section.engine)?
            }
            _ => {
                return Err(Error::Config(
                    "sweep needs either values = [...] or lo/hi/points".into(),
                ))
            }
        };
        Ok(spec)
    }

    pub fn witness_spec(&self) -> Result<(WitnessSpec, usize, bool)> {
        let section = self
            .witness
            .as_ref()
            .ok_or_else(|| Error::Config("missing [witness] section".into()))?;
        let spec = WitnessSpec::new(section.alpha, section.beta, section.sign_convention)?;
        if section.shots_per_setting == 0 {
            return Err(Error::Config("shots_per_setting must be >= 1".into()));
        }
        Ok((spec, section.shots_per_setting, section.align_phase))
    }

    pub fn scenario(&self) -> Result<ExperimentScenario> {
        let s = self
            .scenario
            .as_ref()
            .ok_or_else(|| Error::Config("missing [scenario] section".into()))?;
        let sc = ExperimentScenario {
            a0: Quantity::meters(s.a0_m),
            n_spins: s.n_spins,
            v: Quantity::new(s.v_m_per_s, Dim::METER_PER_SECOND),
            flight_path: Quantity::meters(s.flight_path_m),
            flux: Quantity::new(s.flux_per_m2_s, Dim::PER_M2_PER_S),
            sample_area: Quantity::new(s.sample_area_m2, Dim::M2),
            t1: Quantity::seconds(s.t1_s),
            t2: Quantity::seconds(s.t2_s),
            b_target: Quantity::tesla(s.b_target_t),
            d_target: Quantity::meters(s.d_target_m),
        };
        sc.validate()?;
        Ok(sc)
    }
}

/// FNV-1a hash of raw config bytes; embedded in every output header so
/// results can be traced back to the exact inputs.
pub fn config_hash(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

//! The four-stage protocol: initialize, free-evolve, scatter neutron 1,
//! free-evolve, scatter neutron 2.
//!
//! Free stages evolve under H0 alone; during a scattering window the
//! generator is H0 + H_m, so the field dependence of the concurrence enters
//! through the sample Zeeman term. The final state is
//!
//!   |psi_f> = U(H0+H2, tau) U(H0, tau_f') U(H0+H1, tau) U(H0, tau_f) |psi_0>
//!
//! with every propagator evaluated by exact eigendecomposition of its
//! Hermitian generator.
//!
//! Two engines run the same protocol: `SectorOracle` works in the full
//! flip-restricted basis with no structural assumptions (the brute-force
//! reference), `Collective` keeps only the neutron bits and the symmetric
//! magnon number (exact here, because the initial sample states are
//! permutation symmetric and the collective coupling preserves that).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::basis::{build_collective_basis, build_sector_basis, Basis, BasisTag, StateVector};
use crate::entanglement::{reduce_to_neutrons, NeutronDensityMatrix};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_h0, build_hint, CouplingParams, HamiltonianMatrix, LatticeSpec, Neutron,
};
use crate::C64;

const HERMITICITY_TOL: f64 = 1e-12;

/// Which initial state the protocol starts from.
///
/// Variant A: sample in the uniform one-magnon state, both neutrons up.
/// Variant B: sample all-up, both neutrons in `alpha|0> + beta|1>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
}

/// Initial-state specification. The neutron amplitudes are used by variant B
/// only; variant A forces both neutrons to |0>.
#[derive(Clone, Copy, Debug)]
pub struct InitialStateSpec {
    pub variant: Variant,
    pub alpha: C64,
    pub beta: C64,
}

impl InitialStateSpec {
    pub fn variant_a() -> Self {
        Self {
            variant: Variant::A,
            alpha: C64::new(1.0, 0.0),
            beta: C64::new(0.0, 0.0),
        }
    }

    pub fn variant_b(alpha: C64, beta: C64) -> Result<Self> {
        let spec = Self {
            variant: Variant::B,
            alpha,
            beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Variant-B amplitudes prescribed by the field: `alpha = beta = 1/sqrt(2)`
    /// in weak field, `alpha = 0, beta = 1` at or above the threshold
    /// `B_t = 0.1 * lambda * N`.
    pub fn variant_b_for_field(b_z: f64, lambda: f64, n: usize) -> Self {
        let b_t = 0.1 * lambda.abs() * n as f64;
        if b_z >= b_t && b_t > 0.0 {
            Self {
                variant: Variant::B,
                alpha: C64::new(0.0, 0.0),
                beta: C64::new(1.0, 0.0),
            }
        } else {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            Self {
                variant: Variant::B,
                alpha: C64::new(h, 0.0),
                beta: C64::new(h, 0.0),
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variant == Variant::B {
            let norm = self.alpha.norm_sqr() + self.beta.norm_sqr();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "neutron amplitudes must satisfy |alpha|^2 + |beta|^2 = 1, got {norm}"
                )));
            }
        }
        Ok(())
    }

    /// Largest total flip number the prepared state can hold.
    pub fn max_flips(&self) -> usize {
        match self.variant {
            Variant::A => 1,
            Variant::B => {
                if self.beta.norm() > 0.0 {
                    2
                } else {
                    0
                }
            }
        }
    }
}

/// Which machinery executes the evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    SectorOracle,
    Collective,
}

/// Everything needed to run one protocol instance.
#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub n: usize,
    pub lattice: LatticeSpec,
    pub params: CouplingParams,
    pub init: InitialStateSpec,
    pub tau_f: f64,
    pub tau: f64,
    pub tau_f_prime: f64,
    pub engine: EngineKind,
}

impl ProtocolConfig {
    /// Variant-A protocol with reference couplings and zero free-evolution
    /// times, the workhorse configuration.
    pub fn variant_a(n: usize, b_z: f64, tau: f64) -> Result<Self> {
        let cfg = Self {
            n,
            lattice: LatticeSpec::periodic(n)?,
            params: CouplingParams {
                b_z,
                ..Default::default()
            },
            init: InitialStateSpec::variant_a(),
            tau_f: 0.0,
            tau,
            tau_f_prime: 0.0,
            engine: EngineKind::SectorOracle,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "N must be >= 2, got {}",
                self.n
            )));
        }
        if self.lattice.n != self.n {
            return Err(Error::InvalidParameter(format!(
                "lattice N = {} does not match protocol N = {}",
                self.lattice.n, self.n
            )));
        }
        self.params.validate()?;
        self.init.validate()?;
        for (label, t) in [
            ("tau_f", self.tau_f),
            ("tau", self.tau),
            ("tau_f_prime", self.tau_f_prime),
        ] {
            if !(t >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{label} must be >= 0, got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Flip capacity needed by the initial state (at least 1 so the basis
    /// always has room for single-flip dynamics).
    fn flip_capacity(&self) -> usize {
        self.init.max_flips().max(1)
    }
}

/// Norm and protocol-clock record for one stage.
#[derive(Clone, Debug)]
pub struct StageRecord {
    pub label: &'static str,
    pub duration: f64,
    /// Protocol time at the end of the stage.
    pub time_end: f64,
    pub norm: f64,
}

/// Output of one protocol run.
#[derive(Clone, Debug)]
pub struct ProtocolResult {
    pub final_state: StateVector,
    pub neutron_rho: NeutronDensityMatrix,
    pub stages: Vec<StageRecord>,
}

impl ProtocolResult {
    pub fn concurrence(&self) -> Result<f64> {
        crate::entanglement::concurrence(&self.neutron_rho)
    }
}

/// Exact propagator `U(t) = V exp(-i E t) V^dag` from one eigendecomposition.
#[derive(Clone, Debug)]
pub struct Propagator {
    tag: BasisTag,
    eigenvalues: DVector<f64>,
    eigenvectors: nalgebra::DMatrix<C64>,
}

impl Propagator {
    pub fn new(h: &HamiltonianMatrix) -> Result<Self> {
        let defect = h.hermiticity_defect();
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let eig = h.matrix().clone().symmetric_eigen();
        Ok(Self {
            tag: h.tag(),
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn apply(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "evolution time must be >= 0, got {t}"
            )));
        }
        if state.tag() != self.tag {
            return Err(Error::BasisMismatch {
                expected: self.tag.to_string(),
                got: state.tag().to_string(),
            });
        }
        let mut coeffs = self.eigenvectors.adjoint() * state.amplitudes();
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= C64::new(0.0, -self.eigenvalues[k] * t).exp();
        }
        StateVector::new(self.tag, &self.eigenvectors * coeffs)
    }
}

/// Prepare the initial state over the given basis.
pub fn prepare_initial(spec: &InitialStateSpec, basis: &Basis) -> Result<StateVector> {
    spec.validate()?;
    let mut state = StateVector::zero(basis.tag());
    match (spec.variant, basis) {
        (Variant::A, Basis::Sector(b)) => {
            let n = b.n();
            let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
            for j in 0..n {
                let idx = b.index_of_sites(&[j as u8]).unwrap();
                state.amplitudes_mut()[idx] = amp;
            }
        }
        (Variant::A, Basis::Collective(b)) => {
            let idx = b.index_of(0, 0, 1).ok_or_else(|| {
                Error::InvalidParameter("variant A needs a basis with m_max >= 1".into())
            })?;
            state.amplitudes_mut()[idx] = C64::new(1.0, 0.0);
        }
        (Variant::B, Basis::Sector(b)) => {
            if spec.beta.norm() > 0.0 && b.k_max() < 2 {
                return Err(Error::InvalidParameter(
                    "variant B with beta != 0 reaches two flips; k_max = 2 required".into(),
                ));
            }
            let n = b.n();
            let entries = [
                (vec![], spec.alpha * spec.alpha),
                (vec![n as u8], spec.alpha * spec.beta),
                (vec![(n + 1) as u8], spec.beta * spec.alpha),
                (vec![n as u8, (n + 1) as u8], spec.beta * spec.beta),
            ];
            for (sites, amp) in entries {
                if amp.norm() > 0.0 {
                    let idx = b.index_of_sites(&sites).unwrap();
                    state.amplitudes_mut()[idx] = amp;
                }
            }
        }
        (Variant::B, Basis::Collective(b)) => {
            if spec.beta.norm() > 0.0 && b.m_max() < 2 {
                return Err(Error::InvalidParameter(
                    "variant B with beta != 0 reaches two flips; m_max = 2 required".into(),
                ));
            }
            let entries = [
                ((0u8, 0u8), spec.alpha * spec.alpha),
                ((1, 0), spec.beta * spec.alpha),
                ((0, 1), spec.alpha * spec.beta),
                ((1, 1), spec.beta * spec.beta),
            ];
            for ((b1, b2), amp) in entries {
                if amp.norm() > 0.0 {
                    let idx = b.index_of(b1, b2, 0).unwrap();
                    state.amplitudes_mut()[idx] = amp;
                }
            }
        }
    }
    Ok(state)
}

/// One-shot evolution `exp(-i H t) |state>` with a defensive Hermiticity
/// check; unitary by construction, so the norm is preserved.
pub fn evolve(state: &StateVector, h: &HamiltonianMatrix, t: f64) -> Result<StateVector> {
    Propagator::new(h)?.apply(state, t)
}

/// Interaction time from scattering kinematics: `tau = D / |k_z|`, the
/// classical transit time of a neutron of momentum `k_z` across a sample of
/// extent `D` (natural units).
pub fn interaction_time_from_kinematics(d: f64, k_z: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sample extent must be > 0, got {d}"
        )));
    }
    if k_z == 0.0 || !k_z.is_finite() {
        return Err(Error::InvalidParameter(
            "neutron momentum must be nonzero".into(),
        ));
    }
    Ok(d / k_z.abs())
}

/// Prebuilt propagators for one protocol configuration, reusable across
/// interaction times. Pure and immutable once built.
#[derive(Clone, Debug)]
pub struct ProtocolEngine {
    basis: Basis,
    psi0: StateVector,
    free: Propagator,
    scatter1: Propagator,
    scatter2: Propagator,
    tau_f: f64,
    tau_f_prime: f64,
}

impl ProtocolEngine {
    pub fn new(cfg: &ProtocolConfig) -> Result<Self> {
        cfg.validate()?;
        let capacity = cfg.flip_capacity();
        let basis = match cfg.engine {
            EngineKind::SectorOracle => Basis::Sector(build_sector_basis(cfg.n, capacity)?),
            EngineKind::Collective => Basis::Collective(build_collective_basis(cfg.n, capacity)?),
        };
        let psi0 = prepare_initial(&cfg.init, &basis)?;
        let h0 = build_h0(&basis, &cfg.lattice, &cfg.params)?;
        let h1 = h0.add(&build_hint(&basis, Neutron::One, &cfg.params)?)?;
        let h2 = h0.add(&build_hint(&basis, Neutron::Two, &cfg.params)?)?;
        Ok(Self {
            basis,
            psi0,
            free: Propagator::new(&h0)?,
            scatter1: Propagator::new(&h1)?,
            scatter2: Propagator::new(&h2)?,
            tau_f: cfg.tau_f,
            tau_f_prime: cfg.tau_f_prime,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    /// Run the four stages with scattering windows of length `tau`.
    pub fn run(&self, tau: f64) -> Result<ProtocolResult> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be >= 0, got {tau}"
            )));
        }
        let mut stages = Vec::with_capacity(4);
        let mut clock = 0.0;
        let mut state = self.psi0.clone();
        let plan: [(&'static str, &Propagator, f64); 4] = [
            ("free", &self.free, self.tau_f),
            ("scatter1", &self.scatter1, tau),
            ("free'", &self.free, self.tau_f_prime),
            ("scatter2", &self.scatter2, tau),
        ];
        for (label, prop, duration) in plan {
            state = prop.apply(&state, duration)?;
            clock += duration;
            let norm = state.norm();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "norm drifted to {norm} after stage {label}"
                )));
            }
            stages.push(StageRecord {
                label,
                duration,
                time_end: clock,
                norm,
            });
        }
        let neutron_rho = reduce_to_neutrons(&state, &self.basis)?;
        Ok(ProtocolResult {
            final_state: state,
            neutron_rho,
            stages,
        })
    }

    /// Concurrence of the run at interaction time `tau`.
    pub fn concurrence_at(&self, tau: f64) -> Result<f64> {
        self.run(tau)?.concurrence()
    }
}

/// Execute the configured protocol once.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<ProtocolResult> {
    ProtocolEngine::new(cfg)?.run(cfg.tau)
}

//! Free and scattering Hamiltonians over either basis.
//!
//! The free Hamiltonian of the sample is
//!
//!   H0 = -J * sum_<ij> sigma_i . sigma_j + B_z * sum_i sigma_z^i
//!
//! with the sums running over sample sites only; the neutrons are spectators
//! to H0 (their magnetic moment is three orders of magnitude below the
//! electrons'). The scattering Hamiltonian of neutron m is the collective
//! exchange coupling
//!
//!   H_m = V0 + lambda * (sigma_xm . Sum_i sigma_x^i
//!                       + sigma_ym . Sum_i sigma_y^i
//!                       + sigma_zm . Sum_i sigma_z^i),
//!
//! identity on the non-interacting neutron. Both conserve the total flip
//! number, so every matrix here is block diagonal in flip count.
//!
//! [`dipole_average_check`] backs the collective form of `H_m`: averaging the
//! dipolar double cross product `Q x (sigma x Q)` over scattering directions
//! leaves `(2/3) sigma`, a constant absorbable into `lambda`.

use nalgebra::{DMatrix, Matrix2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, BasisTag, CollectiveBasis, SectorBasis};
use crate::error::{Error, Result};
use crate::C64;

/// Sample lattice geometry. Only one-dimensional chains are supported; the
/// periodic chain is the default because it makes the uniform magnon an
/// exact eigenstate of H0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    ChainOpen,
    ChainPeriodic,
}

#[derive(Clone, Copy, Debug)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub n: usize,
}

impl LatticeSpec {
    pub fn new(kind: LatticeKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("N must be >= 2, got {n}")));
        }
        Ok(Self { kind, n })
    }

    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(LatticeKind::ChainPeriodic, n)
    }

    pub fn open(n: usize) -> Result<Self> {
        Self::new(LatticeKind::ChainOpen, n)
    }

    /// Nearest-neighbour pairs: N-1 bonds for the open chain, N for the
    /// periodic one. For N = 2 the periodic list contains the (0,1) bond
    /// twice, as the ring convention implies.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        match self.kind {
            LatticeKind::ChainOpen => (0..self.n - 1).map(|i| (i, i + 1)).collect(),
            LatticeKind::ChainPeriodic => (0..self.n).map(|i| (i, (i + 1) % self.n)).collect(),
        }
    }
}

/// Physical couplings in natural units. J = 1/4 and lambda = 1 are the
/// reference values used throughout; B_z = 0 is allowed.
#[derive(Clone, Copy, Debug)]
pub struct CouplingParams {
    pub j: f64,
    pub lambda: f64,
    pub b_z: f64,
    pub v0: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            j: 0.25,
            lambda: 1.0,
            b_z: 0.0,
            v0: 0.0,
        }
    }
}

impl CouplingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.j > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ferromagnetic exchange requires J > 0, got {}",
                self.j
            )));
        }
        if !(self.b_z >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "B_z must be >= 0, got {}",
                self.b_z
            )));
        }
        if !self.lambda.is_finite() || self.lambda == 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and nonzero, got {}",
                self.lambda
            )));
        }
        if !self.v0.is_finite() {
            return Err(Error::InvalidParameter("V0 must be finite".into()));
        }
        Ok(())
    }
}

/// Which neutron a scattering Hamiltonian couples to the sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Neutron {
    One,
    Two,
}

impl Neutron {
    /// Site index of this neutron among the `N+2` spins.
    pub fn site(&self, n: usize) -> usize {
        match self {
            Neutron::One => n,
            Neutron::Two => n + 1,
        }
    }
}

/// Hermitian operator over a tagged basis, in natural energy units.
#[derive(Clone, Debug)]
pub struct HamiltonianMatrix {
    tag: BasisTag,
    matrix: DMatrix<C64>,
}

impl HamiltonianMatrix {
    pub fn new(tag: BasisTag, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != tag.dim() || matrix.ncols() != tag.dim() {
            return Err(Error::BasisMismatch {
                expected: format!("{} (dim {})", tag, tag.dim()),
                got: format!("{}x{} matrix", matrix.nrows(), matrix.ncols()),
            });
        }
        Ok(Self { tag, matrix })
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Max-norm deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Sum of two operators over the same basis.
    pub fn add(&self, other: &HamiltonianMatrix) -> Result<HamiltonianMatrix> {
        if self.tag != other.tag {
            return Err(Error::BasisMismatch {
                expected: self.tag.to_string(),
                got: other.tag.to_string(),
            });
        }
        Ok(HamiltonianMatrix {
            tag: self.tag,
            matrix: &self.matrix + &other.matrix,
        })
    }

    /// Largest matrix element connecting configurations of different total
    /// flip count. Exactly zero for every operator built here.
    pub fn flip_block_defect(&self, basis: &Basis) -> f64 {
        let flips: Vec<usize> = match basis {
            Basis::Sector(b) => b.configs().iter().map(|c| c.flip_count()).collect(),
            Basis::Collective(b) => b
                .states()
                .iter()
                .map(|&(n1, n2, m)| (n1 + n2 + m) as usize)
                .collect(),
        };
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if flips[i] != flips[j] {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Assemble H0 over the given basis.
///
/// For the collective basis the lattice must be periodic; every magnon state
/// `|m>` is then an H0 eigenstate with energy `-J*N + B_z*(N - 2m)` (each
/// bond contributes +1 on a permutation-symmetric state).
pub fn build_h0(
    basis: &Basis,
    lattice: &LatticeSpec,
    p: &CouplingParams,
) -> Result<HamiltonianMatrix> {
    p.validate()?;
    if lattice.n != basis.n() {
        return Err(Error::BasisMismatch {
            expected: format!("lattice with N = {}", basis.n()),
            got: format!("lattice with N = {}", lattice.n),
        });
    }
    match basis {
        Basis::Sector(b) => build_h0_sector(b, lattice, p),
        Basis::Collective(b) => {
            if lattice.kind != LatticeKind::ChainPeriodic {
                return Err(Error::InvalidParameter(
                    "collective basis requires a periodic chain".into(),
                ));
            }
            build_h0_collective(b, lattice, p)
        }
    }
}

fn build_h0_sector(
    b: &SectorBasis,
    lattice: &LatticeSpec,
    p: &CouplingParams,
) -> Result<HamiltonianMatrix> {
    let n = b.n();
    let dim = b.dim();
    let bonds = lattice.bonds();
    let mut m = DMatrix::from_element(dim, dim, re(0.0));
    for (i, cfg) in b.configs().iter().enumerate() {
        let mut diag = 0.0;
        for &(a, c) in &bonds {
            let sa = if cfg.is_flipped(a) { -1.0 } else { 1.0 };
            let sc = if cfg.is_flipped(c) { -1.0 } else { 1.0 };
            // sigma_z sigma_z part of the exchange
            diag += -p.j * sa * sc;
            // transverse part hops a single flip across the bond
            if cfg.is_flipped(a) != cfg.is_flipped(c) {
                let target = cfg.toggled(a).toggled(c);
                let j = b.index_of(&target).expect("hop stays inside sector");
                m[(j, i)] += re(-2.0 * p.j);
            }
        }
        for site in 0..n {
            diag += p.b_z * if cfg.is_flipped(site) { -1.0 } else { 1.0 };
        }
        m[(i, i)] += re(diag);
    }
    HamiltonianMatrix::new(b.tag(), m)
}

fn build_h0_collective(
    b: &CollectiveBasis,
    lattice: &LatticeSpec,
    p: &CouplingParams,
) -> Result<HamiltonianMatrix> {
    let n = b.n() as f64;
    let n_bonds = lattice.bonds().len() as f64;
    let dim = b.dim();
    let mut m = DMatrix::from_element(dim, dim, re(0.0));
    for (i, &(_, _, mag)) in b.states().iter().enumerate() {
        m[(i, i)] = re(-p.j * n_bonds + p.b_z * (n - 2.0 * mag as f64));
    }
    HamiltonianMatrix::new(b.tag(), m)
}

/// Assemble the scattering Hamiltonian of one neutron over the given basis.
pub fn build_hint(
    basis: &Basis,
    neutron: Neutron,
    p: &CouplingParams,
) -> Result<HamiltonianMatrix> {
    p.validate()?;
    match basis {
        Basis::Sector(b) => build_hint_sector(b, neutron, p),
        Basis::Collective(b) => build_hint_collective(b, neutron, p),
    }
}

fn build_hint_sector(
    b: &SectorBasis,
    neutron: Neutron,
    p: &CouplingParams,
) -> Result<HamiltonianMatrix> {
    let n = b.n();
    let nsite = neutron.site(n);
    let dim = b.dim();
    let mut m = DMatrix::from_element(dim, dim, re(0.0));
    for (i, cfg) in b.configs().iter().enumerate() {
        let sn = if cfg.is_flipped(nsite) { -1.0 } else { 1.0 };
        let mut sz_sum = 0.0;
        for site in 0..n {
            let ss = if cfg.is_flipped(site) { -1.0 } else { 1.0 };
            sz_sum += ss;
            // sigma_x sigma_x + sigma_y sigma_y exchanges one flip between
            // the neutron and sample site, with element 2*lambda
            if cfg.is_flipped(site) != cfg.is_flipped(nsite) {
                let target = cfg.toggled(site).toggled(nsite);
                let j = b.index_of(&target).expect("flip-flop stays inside sector");
                m[(j, i)] += re(2.0 * p.lambda);
            }
        }
        m[(i, i)] += re(p.v0 + p.lambda * sn * sz_sum);
    }
    HamiltonianMatrix::new(b.tag(), m)
}

fn build_hint_collective(
    b: &CollectiveBasis,
    neutron: Neutron,
    p: &CouplingParams,
) -> Result<HamiltonianMatrix> {
    let n = b.n() as f64;
    let dim = b.dim();
    let mut m = DMatrix::from_element(dim, dim, re(0.0));
    for (i, &(n1, n2, mag)) in b.states().iter().enumerate() {
        let bit = match neutron {
            Neutron::One => n1,
            Neutron::Two => n2,
        };
        let sn = if bit == 1 { -1.0 } else { 1.0 };
        m[(i, i)] += re(p.v0 + p.lambda * sn * (n - 2.0 * mag as f64));
        // Collective flip-flop: the neutron trades a flip with the symmetric
        // magnon mode, |n_m = 1, m> <-> |n_m = 0, m+1> with the Dicke ladder
        // element sqrt((m+1)(N-m)).
        if bit == 1 {
            let (t1, t2) = match neutron {
                Neutron::One => (0, n2),
                Neutron::Two => (n1, 0),
            };
            if let Some(j) = b.index_of(t1, t2, mag + 1) {
                let amp = 2.0 * p.lambda * ((mag as f64 + 1.0) * (n - mag as f64)).sqrt();
                m[(j, i)] += re(amp);
                m[(i, j)] += re(amp);
            }
        }
    }
    HamiltonianMatrix::new(b.tag(), m)
}

/// Monte-Carlo evidence that the direction average of `Q x (sigma x Q)` is
/// `(2/3) sigma`, component by component.
#[derive(Clone, Debug)]
pub struct DipoleReport {
    pub samples: usize,
    /// Mean coefficient matrix `A[a][b]`, estimating `<delta_ab - Q_a Q_b>`.
    pub coefficient: [[f64; 3]; 3],
    /// Diagonal coefficients, each estimating the scalar c = 2/3.
    pub coeff_diag: [f64; 3],
    /// Standard error of each diagonal coefficient.
    pub coeff_std_err: [f64; 3],
    /// Mean of the diagonal coefficients. The sampled rows always satisfy
    /// `trace = 2` exactly (|Q| = 1), so this is 2/3 up to float rounding.
    pub scalar_c: f64,
    /// Largest off-diagonal coefficient magnitude.
    pub max_residual: f64,
    /// Reported residual scale, `3 / sqrt(samples)`.
    pub residual_bound: f64,
}

fn random_unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let u: f64 = rng.gen_range(-1.0..1.0);
        let v: f64 = rng.gen_range(-1.0..1.0);
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let f = 2.0 * (1.0 - s).sqrt();
            return [u * f, v * f, 1.0 - 2.0 * s];
        }
    }
}

/// Sample the 3x3 coefficient matrix of the spherical average.
fn sample_coefficients(samples: usize, seed: u64) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = [[0.0f64; 3]; 3];
    let mut sumsq = [[0.0f64; 3]; 3];
    for _ in 0..samples {
        let q = random_unit_vector(&mut rng);
        for a in 0..3 {
            for b in 0..3 {
                let val = if a == b {
                    1.0 - q[a] * q[a]
                } else {
                    -q[a] * q[b]
                };
                sum[a][b] += val;
                sumsq[a][b] += val * val;
            }
        }
    }
    let mut mean = [[0.0f64; 3]; 3];
    let mut se = [[0.0f64; 3]; 3];
    let nf = samples as f64;
    for a in 0..3 {
        for b in 0..3 {
            mean[a][b] = sum[a][b] / nf;
            let var = (sumsq[a][b] / nf - mean[a][b] * mean[a][b]).max(0.0) * nf / (nf - 1.0);
            se[a][b] = (var / nf).sqrt();
        }
    }
    (mean, se)
}

/// Run the spherical-average check with `samples >= 10^4` draws.
pub fn dipole_average_check(samples: usize, seed: u64) -> Result<DipoleReport> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1e4 samples, got {samples}"
        )));
    }
    let (mean, se) = sample_coefficients(samples, seed);
    let coeff_diag = [mean[0][0], mean[1][1], mean[2][2]];
    let coeff_std_err = [se[0][0], se[1][1], se[2][2]];
    let scalar_c = (coeff_diag[0] + coeff_diag[1] + coeff_diag[2]) / 3.0;
    let mut max_residual: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            if a != b {
                max_residual = max_residual.max(mean[a][b].abs());
            }
        }
    }
    Ok(DipoleReport {
        samples,
        coefficient: mean,
        coeff_diag,
        coeff_std_err,
        scalar_c,
        max_residual,
        residual_bound: 3.0 / (samples as f64).sqrt(),
    })
}

/// Apply the sampled spherical average to three operator components:
/// `M_a = sum_b A[a][b] C_b`. Zero input components give zero output.
pub fn spherical_average(
    components: &[Matrix2<C64>; 3],
    samples: usize,
    seed: u64,
) -> Result<[Matrix2<C64>; 3]> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1e4 samples, got {samples}"
        )));
    }
    let (mean, _) = sample_coefficients(samples, seed);
    let zero = Matrix2::from_element(C64::new(0.0, 0.0));
    let mut out = [zero, zero, zero];
    for a in 0..3 {
        for b in 0..3 {
            out[a] += components[b] * re(mean[a][b]);
        }
    }
    Ok(out)
}

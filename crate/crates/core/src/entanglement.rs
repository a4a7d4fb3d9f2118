//! Entanglement quantification and witnessing for the two neutrons.
//!
//! The two-neutron state lives in the product basis |00>, |01>, |10>, |11>
//! with the ordering |n2 n1> (neutron 2 first) fixed globally: index
//! `2*b2 + b1`. Concurrence follows the spin-flip construction
//! `C = max(0, l1 - l2 - l3 - l4)` with the `l_i` the descending square roots
//! of the eigenvalues of `rho (sy x sy) rho* (sy x sy)`.
//!
//! For the one-magnon initial state the concurrence after both scatterings
//! has the closed form
//!
//!   C(lambda, N, B_z, tau) = 8 sqrt(2) N lambda^2 sin^2(phi tau)
//!       / (phi^3 [B_z + lambda(1-N) + phi])
//!       * sqrt([phi^2 + phi(lambda - lambda N + B_z) - 2 lambda^2 N]
//!              [phi^2 - 4 lambda^2 N sin^2(phi tau)])
//!
//! with `phi = sqrt(B_z^2 - 2 B_z lambda (N-1) + lambda^2 (N+1)^2)`. At the
//! optimal field `B_z* = lambda (N-1)` this collapses to
//! `2 |cos(2 lambda sqrt(N) tau)| sin^2(2 lambda sqrt(N) tau)`, maximized at
//! `tau* = arccos(-1/3) / (4 lambda sqrt(N))` with peak `4/(3 sqrt(3))`.

use nalgebra::{Matrix4, Vector2, Vector4};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{Basis, StateVector};
use crate::error::{Error, Result};
use crate::C64;

const HERMITICITY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
/// Roundoff clamp for the closed-form radicands.
const RADICAND_TOL: f64 = 1e-9;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// 4x4 Hermitian, positive semidefinite, unit-trace state of the neutrons.
#[derive(Clone, Debug)]
pub struct NeutronDensityMatrix {
    m: Matrix4<C64>,
}

impl NeutronDensityMatrix {
    pub fn try_new(m: Matrix4<C64>) -> Result<Self> {
        let mut herm: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                herm = herm.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let trace = m.trace();
        if (trace - re(1.0)).norm() > TRACE_TOL {
            return Err(Error::BadTrace((trace - re(1.0)).norm()));
        }
        let eigs = m.symmetric_eigen().eigenvalues;
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite(min_eig));
        }
        Ok(Self { m })
    }

    pub fn from_pure(phi: &Vector4<C64>) -> Result<Self> {
        let n = phi.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "pure state norm {n} is not 1"
            )));
        }
        Self::try_new(phi * phi.adjoint())
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.m
    }

    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }

    /// `<phi| rho |phi>` for a pure reference state.
    pub fn fidelity_with_pure(&self, phi: &Vector4<C64>) -> f64 {
        (phi.adjoint() * self.m * phi)[(0, 0)].re
    }

    /// Rotate neutron 1 about z so the |01><10| coherence becomes real and
    /// non-negative. This fixes the measurement frame for the witness; it is
    /// a local unitary, so it cannot change any entanglement quantity.
    /// Returns the aligned state and the applied angle.
    pub fn phase_aligned(&self) -> (Self, f64) {
        let coh = self.m[(1, 2)]; // <01| rho |10>
        if coh.norm() == 0.0 {
            return (self.clone(), 0.0);
        }
        let theta = -coh.arg();
        let mut u = Matrix4::from_diagonal_element(re(1.0));
        let ph = C64::new(0.0, theta).exp();
        u[(1, 1)] = ph; // |01>: n1 flipped
        u[(3, 3)] = ph; // |11>: n1 flipped
        let m = u * self.m * u.adjoint();
        (Self { m }, theta)
    }
}

/// Trace out the sample, grouping basis states by their sample content.
pub fn reduce_to_neutrons(state: &StateVector, basis: &Basis) -> Result<NeutronDensityMatrix> {
    if state.tag() != basis.tag() {
        return Err(Error::BasisMismatch {
            expected: basis.tag().to_string(),
            got: state.tag().to_string(),
        });
    }
    // (neutron index 2*b2+b1, amplitude) grouped by identical sample part
    let mut groups: std::collections::BTreeMap<Vec<u8>, Vec<(usize, C64)>> =
        std::collections::BTreeMap::new();
    match basis {
        Basis::Sector(b) => {
            let n = b.n();
            for (i, cfg) in b.configs().iter().enumerate() {
                let (b1, b2) = cfg.neutron_bits(n);
                let key = cfg.sample_sites(n);
                groups
                    .entry(key)
                    .or_default()
                    .push(((2 * b2 + b1) as usize, state.amplitudes()[i]));
            }
        }
        Basis::Collective(b) => {
            for (i, &(n1, n2, m)) in b.states().iter().enumerate() {
                groups
                    .entry(vec![m])
                    .or_default()
                    .push(((2 * n2 + n1) as usize, state.amplitudes()[i]));
            }
        }
    }
    let mut rho = Matrix4::from_element(re(0.0));
    for members in groups.values() {
        for &(a, amp_a) in members {
            for &(b, amp_b) in members {
                rho[(a, b)] += amp_a * amp_b.conj();
            }
        }
    }
    NeutronDensityMatrix::try_new(rho)
}

/// sigma_y (x) sigma_y in the |n2 n1> product basis.
fn spin_flip_operator() -> Matrix4<C64> {
    let mut s = Matrix4::from_element(re(0.0));
    s[(0, 3)] = re(-1.0);
    s[(1, 2)] = re(1.0);
    s[(2, 1)] = re(1.0);
    s[(3, 0)] = re(-1.0);
    s
}

fn hermitian_sqrt(m: &Matrix4<C64>) -> Matrix4<C64> {
    let eig = m.symmetric_eigen();
    let mut out = Matrix4::from_element(re(0.0));
    for k in 0..4 {
        // Eigenvalues at the numerical-noise scale are exact zeros of the
        // underlying state; square-rooting them would inject sqrt(eps)
        // contamination into every downstream eigenvalue.
        let ev = eig.eigenvalues[k];
        let lam = if ev > 1e-13 { ev.sqrt() } else { 0.0 };
        let v = eig.eigenvectors.column(k);
        out += (v * v.adjoint()) * re(lam);
    }
    out
}

/// Wootters concurrence of a two-qubit state, in [0, 1].
///
/// The spin-flip eigenvalues are evaluated as the singular values of
/// `K = sqrt(rho) S sqrt(rho)*` (one checks `K K^dag = sqrt(rho) rho_tilde
/// sqrt(rho)`), which avoids square-rooting near-zero eigenvalues of the
/// triple product and keeps the result accurate to machine precision.
pub fn concurrence(rho: &NeutronDensityMatrix) -> Result<f64> {
    let s = spin_flip_operator();
    let sqrt_rho = hermitian_sqrt(&rho.m);
    let k = sqrt_rho * s * sqrt_rho.conjugate();
    let mut ls: Vec<f64> = k
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .collect();
    ls.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((ls[0] - ls[1] - ls[2] - ls[3]).clamp(0.0, 1.0))
}

/// Arguments of the closed-form concurrence.
#[derive(Clone, Copy, Debug)]
pub struct ClosedFormParams {
    pub lambda: f64,
    pub n: usize,
    pub b_z: f64,
    pub tau: f64,
}

impl ClosedFormParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "N must be >= 2, got {}",
                self.n
            )));
        }
        if !(self.b_z >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "B_z must be >= 0, got {}",
                self.b_z
            )));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be >= 0, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// The oscillation frequency `phi(lambda, N, B_z)`.
pub fn phi_tilde(lambda: f64, n: usize, b_z: f64) -> f64 {
    let nf = n as f64;
    (b_z * b_z - 2.0 * b_z * lambda * (nf - 1.0) + lambda * lambda * (nf + 1.0) * (nf + 1.0)).sqrt()
}

fn clamp_radicand(r: f64, scale: f64) -> Result<f64> {
    if r < -RADICAND_TOL * scale.max(1.0) {
        Err(Error::OutsideValidity(r))
    } else {
        Ok(r.max(0.0))
    }
}

/// Closed-form concurrence for the one-magnon initial state.
pub fn closed_form_concurrence(p: &ClosedFormParams) -> Result<f64> {
    p.validate()?;
    let nf = p.n as f64;
    let lam = p.lambda;
    let phi = phi_tilde(lam, p.n, p.b_z);
    let denom = p.b_z + lam * (1.0 - nf) + phi;
    if denom.abs() < 1e-12 * phi.max(1.0) {
        return Err(Error::DegenerateClosedForm(denom));
    }
    let s2 = (phi * p.tau).sin().powi(2);
    let scale = (lam * lam * nf).max(phi * phi);
    let rad1 = clamp_radicand(
        phi * phi + phi * (lam - lam * nf + p.b_z) - 2.0 * lam * lam * nf,
        scale,
    )?;
    let rad2 = clamp_radicand(phi * phi - 4.0 * lam * lam * nf * s2, scale)?;
    let c = 8.0 * std::f64::consts::SQRT_2 * nf * lam * lam * s2 / (phi.powi(3) * denom)
        * (rad1.sqrt() * rad2.sqrt());
    Ok(c.clamp(0.0, 1.0))
}

/// Concurrence at the optimal field: `2 |cos(2 lambda sqrt(N) tau)| sin^2(...)`.
pub fn concurrence_at_optimal_field(lambda: f64, n: usize, tau: f64) -> f64 {
    let x = 2.0 * lambda * (n as f64).sqrt() * tau;
    2.0 * x.cos().abs() * x.sin().powi(2)
}

/// Field maximizing the peak concurrence: `B_z* = lambda (N - 1)`.
pub fn optimal_field(lambda: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be >= 2, got {n}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    Ok(lambda * (n as f64 - 1.0))
}

/// Interaction time maximizing the concurrence at the optimal field.
pub fn optimal_time(lambda: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be >= 2, got {n}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    Ok((-1.0f64 / 3.0).acos() / (4.0 * lambda * (n as f64).sqrt()))
}

/// The peak concurrence at optimal field and time, `4 / (3 sqrt(3))`.
pub const PEAK_CONCURRENCE: f64 = 0.7698003589195010;

/// Two-neutron amplitudes after scattering at the optimal parameters:
/// `mu|00> + nu|01> + xi|10>` with weight ratios 1 : 6 : 2 and relative
/// phases `nu/mu = sqrt(6) e^{i 8 pi/9}`, `xi/mu = sqrt(2) e^{-i pi/2}`.
pub fn reference_scattered_state() -> Vector4<C64> {
    let mu = 1.0 / 3.0;
    let nu = re(mu * 6.0f64.sqrt()) * C64::new(0.0, 8.0 * std::f64::consts::PI / 9.0).exp();
    let xi = re(mu * 2.0f64.sqrt()) * C64::new(0.0, -std::f64::consts::FRAC_PI_2).exp();
    Vector4::new(re(mu), nu, xi, re(0.0))
}

/// Overlap `|<ref|psi>|^2` between the protocol output and the reference
/// amplitudes, with the |00> component paired with the one-magnon sample
/// state as flip-number conservation dictates.
pub fn reference_state_overlap(state: &StateVector, basis: &Basis) -> Result<f64> {
    let refv = reference_scattered_state();
    let mut reference = StateVector::zero(basis.tag());
    match basis {
        Basis::Sector(b) => {
            let n = b.n();
            let magnon_amp = refv[0] / re((n as f64).sqrt());
            for j in 0..n {
                let idx = b.index_of_sites(&[j as u8]).unwrap();
                reference.amplitudes_mut()[idx] = magnon_amp;
            }
            let idx01 = b.index_of_sites(&[n as u8]).unwrap();
            reference.amplitudes_mut()[idx01] = refv[1];
            let idx10 = b.index_of_sites(&[(n + 1) as u8]).unwrap();
            reference.amplitudes_mut()[idx10] = refv[2];
        }
        Basis::Collective(b) => {
            let i00 = b.index_of(0, 0, 1).ok_or_else(|| {
                Error::InvalidParameter("collective basis needs m_max >= 1".into())
            })?;
            reference.amplitudes_mut()[i00] = refv[0];
            reference.amplitudes_mut()[b.index_of(1, 0, 0).unwrap()] = refv[1];
            reference.amplitudes_mut()[b.index_of(0, 1, 0).unwrap()] = refv[2];
        }
    }
    Ok(reference.dot(state)?.norm_sqr())
}

/// Sign convention for the alpha*beta block of the witness.
///
/// As printed, the witness has `+alpha*beta` and evaluates to `+2 a^2 b^2`
/// on its own target, so it cannot certify it; the corrected convention
/// flips that block's sign. Both are kept so the discrepancy stays visible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    Paper,
    Corrected,
}

/// Witness targeting `alpha|01> + beta|10>` with real amplitudes.
#[derive(Clone, Copy, Debug)]
pub struct WitnessSpec {
    pub alpha: f64,
    pub beta: f64,
    pub convention: SignConvention,
}

impl WitnessSpec {
    pub fn new(alpha: f64, beta: f64, convention: SignConvention) -> Result<Self> {
        if alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidParameter(
                "witness amplitudes must be non-negative".into(),
            ));
        }
        if (alpha * alpha + beta * beta - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "witness amplitudes must satisfy alpha^2 + beta^2 = 1, got {}",
                alpha * alpha + beta * beta
            )));
        }
        Ok(Self {
            alpha,
            beta,
            convention,
        })
    }

    /// Balanced target `(|01> + |10>)/sqrt(2)`.
    pub fn balanced(convention: SignConvention) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: r,
            beta: r,
            convention,
        }
    }

    fn sign(&self) -> f64 {
        match self.convention {
            SignConvention::Paper => 1.0,
            SignConvention::Corrected => -1.0,
        }
    }
}

fn qubit_state(setting: char, up: bool) -> Vector2<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match (setting, up) {
        ('z', true) => Vector2::new(re(1.0), re(0.0)),
        ('z', false) => Vector2::new(re(0.0), re(1.0)),
        ('x', true) => Vector2::new(re(h), re(h)),
        ('x', false) => Vector2::new(re(h), re(-h)),
        ('y', true) => Vector2::new(re(h), C64::new(0.0, h)),
        ('y', false) => Vector2::new(re(h), C64::new(0.0, -h)),
        _ => unreachable!(),
    }
}

/// Rank-1 projector onto `|s2 on neutron 2> (x) |s1 on neutron 1>`.
fn product_projector(setting: char, up2: bool, up1: bool) -> Matrix4<C64> {
    let a = qubit_state(setting, up2);
    let b = qubit_state(setting, up1);
    let joint = a.kronecker(&b);
    &joint * joint.adjoint()
}

/// Outcome weights of one local setting; outcomes ordered (++, +-, -+, --).
fn setting_weights(w: &WitnessSpec, setting: char) -> [f64; 4] {
    let s = w.sign();
    match setting {
        'z' => [w.alpha * w.alpha, 0.0, 0.0, w.beta * w.beta],
        'x' => [s * w.alpha * w.beta, 0.0, 0.0, s * w.alpha * w.beta],
        'y' => [0.0, -s * w.alpha * w.beta, -s * w.alpha * w.beta, 0.0],
        _ => unreachable!(),
    }
}

const OUTCOMES: [(bool, bool); 4] = [(true, true), (true, false), (false, true), (false, false)];

/// Assemble the witness as a 4x4 Hermitian matrix.
pub fn witness_matrix(w: &WitnessSpec) -> Matrix4<C64> {
    let mut out = Matrix4::from_element(re(0.0));
    for setting in ['z', 'x', 'y'] {
        let weights = setting_weights(w, setting);
        for (k, &(up2, up1)) in OUTCOMES.iter().enumerate() {
            if weights[k] != 0.0 {
                out += product_projector(setting, up2, up1) * re(weights[k]);
            }
        }
    }
    out
}

/// Exact expectation `Tr(W rho)` (the infinite-shot limit).
pub fn witness_expectation(rho: &NeutronDensityMatrix, w: &WitnessSpec) -> f64 {
    (witness_matrix(w) * rho.matrix()).trace().re
}

/// Shot-based witness estimate.
#[derive(Clone, Debug)]
pub struct WitnessEstimate {
    pub value: f64,
    pub std_err: f64,
    pub shots_per_setting: usize,
    /// Weighted contribution of each setting (z, x, y order).
    pub setting_values: [f64; 3],
}

/// Simulate joint-outcome counting in the three local settings z(x)z, x(x)x,
/// y(x)y and combine the frequencies with the witness weights. Deterministic
/// for a given seed.
pub fn measure_witness(
    rho: &NeutronDensityMatrix,
    w: &WitnessSpec,
    shots_per_setting: usize,
    seed: u64,
) -> Result<WitnessEstimate> {
    if shots_per_setting == 0 {
        return Err(Error::InvalidParameter("shots must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut value = 0.0;
    let mut var = 0.0;
    let mut setting_values = [0.0f64; 3];
    for (si, setting) in ['z', 'x', 'y'].into_iter().enumerate() {
        let weights = setting_weights(w, setting);
        let mut probs = [0.0f64; 4];
        for (k, &(up2, up1)) in OUTCOMES.iter().enumerate() {
            probs[k] = (product_projector(setting, up2, up1) * rho.matrix())
                .trace()
                .re
                .max(0.0);
        }
        let total: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= total;
        }
        // multinomial draw
        let mut counts = [0usize; 4];
        for _ in 0..shots_per_setting {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = 3;
            for k in 0..4 {
                acc += probs[k];
                if u < acc {
                    chosen = k;
                    break;
                }
            }
            counts[chosen] += 1;
        }
        let mean: f64 = (0..4)
            .map(|k| weights[k] * counts[k] as f64 / shots_per_setting as f64)
            .sum();
        let second: f64 = (0..4)
            .map(|k| weights[k] * weights[k] * counts[k] as f64 / shots_per_setting as f64)
            .sum();
        setting_values[si] = mean;
        value += mean;
        var += (second - mean * mean).max(0.0) / shots_per_setting as f64;
    }
    Ok(WitnessEstimate {
        value,
        std_err: var.sqrt(),
        shots_per_setting,
        setting_values,
    })
}

/// Draw a Haar-random single-qubit pure state.
pub fn random_qubit_state(rng: &mut ChaCha8Rng) -> Vector2<C64> {
    let cos_theta: f64 = rng.gen_range(-1.0..1.0);
    let half = ((1.0 + cos_theta) / 2.0).sqrt();
    let other = ((1.0 - cos_theta) / 2.0).sqrt();
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Vector2::new(re(half), C64::new(0.0, phase).exp() * re(other))
}

/// Draw a random two-qubit product state |a>_{n2} (x) |b>_{n1}.
pub fn random_product_state(rng: &mut ChaCha8Rng) -> Vector4<C64> {
    let a = random_qubit_state(rng);
    let b = random_qubit_state(rng);
    a.kronecker(&b)
}

/// Minimum witness expectation over `count` random product states.
pub fn witness_product_state_minimum(w: &WitnessSpec, count: usize, seed: u64) -> f64 {
    let wm = witness_matrix(w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min = f64::INFINITY;
    for _ in 0..count {
        let v = random_product_state(&mut rng);
        let val = (v.adjoint() * wm * v)[(0, 0)].re;
        min = min.min(val);
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_collective_basis, build_sector_basis};
    use nalgebra::Matrix2;

    fn pure_rho(v: Vector4<C64>) -> NeutronDensityMatrix {
        let n = v.norm();
        NeutronDensityMatrix::from_pure(&(v / re(n))).unwrap()
    }

    #[test]
    fn concurrence_of_bell_state() {
        let v = Vector4::new(re(0.0), re(1.0), re(1.0), re(0.0));
        let c = concurrence(&pure_rho(v)).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concurrence_of_product_state() {
        let v = Vector4::new(re(0.5), re(0.5), re(0.5), re(0.5));
        let c = concurrence(&pure_rho(v)).unwrap();
        assert!(c < 1e-10);
    }

    #[test]
    fn concurrence_of_partially_entangled_state() {
        for alpha in [0.1f64, 0.3, 0.6, 0.9] {
            let beta = (1.0 - alpha * alpha).sqrt();
            let v = Vector4::new(re(0.0), re(alpha), re(beta), re(0.0));
            let c = concurrence(&pure_rho(v)).unwrap();
            assert!(
                (c - 2.0 * alpha * beta).abs() < 1e-12,
                "alpha={alpha}: {c} vs {}",
                2.0 * alpha * beta
            );
        }
    }

    fn random_su2(rng: &mut ChaCha8Rng) -> Matrix2<C64> {
        let a = random_qubit_state(rng);
        Matrix2::new(a[0], -a[1].conj(), a[1], a[0].conj())
    }

    #[test]
    fn concurrence_invariant_under_local_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut v = Vector4::from_fn(|_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            v /= re(v.norm());
            let rho = NeutronDensityMatrix::from_pure(&v).unwrap();
            let c0 = concurrence(&rho).unwrap();

            let u1 = random_su2(&mut rng);
            let u2 = random_su2(&mut rng);
            let u = u2.kronecker(&u1);
            let rotated = NeutronDensityMatrix::try_new(u * rho.matrix() * u.adjoint()).unwrap();
            let c1 = concurrence(&rotated).unwrap();
            assert!((c0 - c1).abs() < 1e-10, "c0={c0} c1={c1}");
        }
    }

    #[test]
    fn reduce_product_state() {
        let b = build_sector_basis(3, 1).unwrap();
        let basis = Basis::Sector(b.clone());
        let mut v = StateVector::zero(b.tag());
        // one flip spread over the sample, neutrons up
        for j in 0..3u8 {
            v.amplitudes_mut()[b.index_of_sites(&[j]).unwrap()] = re(1.0 / 3.0f64.sqrt());
        }
        let rho = reduce_to_neutrons(&v, &basis).unwrap();
        assert!((rho.matrix()[(0, 0)] - re(1.0)).norm() < 1e-12);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduce_orders_neutron_bits() {
        // flip fully on neutron 1 -> rho = |01><01| (index 1)
        let b = build_sector_basis(2, 1).unwrap();
        let basis = Basis::Sector(b.clone());
        let mut v = StateVector::zero(b.tag());
        v.amplitudes_mut()[b.index_of_sites(&[2]).unwrap()] = re(1.0);
        let rho = reduce_to_neutrons(&v, &basis).unwrap();
        assert!((rho.matrix()[(1, 1)] - re(1.0)).norm() < 1e-12);

        // flip fully on neutron 2 -> rho = |10><10| (index 2)
        let mut v = StateVector::zero(b.tag());
        v.amplitudes_mut()[b.index_of_sites(&[3]).unwrap()] = re(1.0);
        let rho = reduce_to_neutrons(&v, &basis).unwrap();
        assert!((rho.matrix()[(2, 2)] - re(1.0)).norm() < 1e-12);
    }

    #[test]
    fn reduce_sample_entangled_state_is_mixed() {
        // (|flip in sample> + |flip on neutron 1>)/sqrt(2): the two branches
        // carry different sample states, so the reduced state is diagonal
        let b = build_sector_basis(2, 1).unwrap();
        let basis = Basis::Sector(b.clone());
        let mut v = StateVector::zero(b.tag());
        let h = re(std::f64::consts::FRAC_1_SQRT_2);
        v.amplitudes_mut()[b.index_of_sites(&[0]).unwrap()] = h;
        v.amplitudes_mut()[b.index_of_sites(&[2]).unwrap()] = h;
        let rho = reduce_to_neutrons(&v, &basis).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(rho.matrix()[(i, j)].norm() < 1e-14);
                }
            }
        }
        assert!((rho.purity() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn closed_form_reference_values() {
        // zero-field peak at N=4: 8*4*3/5^3 = 0.768 at tau = pi/10
        let c = closed_form_concurrence(&ClosedFormParams {
            lambda: 1.0,
            n: 4,
            b_z: 0.0,
            tau: std::f64::consts::PI / 10.0,
        })
        .unwrap();
        assert!((c - 0.768).abs() < 1e-12, "c = {c}");

        // optimal field and time: 4/(3 sqrt(3))
        let tau = optimal_time(1.0, 4).unwrap();
        let c = closed_form_concurrence(&ClosedFormParams {
            lambda: 1.0,
            n: 4,
            b_z: 3.0,
            tau,
        })
        .unwrap();
        assert!((c - PEAK_CONCURRENCE).abs() < 1e-12, "c = {c}");

        // no interaction, no entanglement
        let c = closed_form_concurrence(&ClosedFormParams {
            lambda: 1.0,
            n: 4,
            b_z: 3.0,
            tau: 0.0,
        })
        .unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn closed_form_matches_optimal_field_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(2..=40usize);
            let lambda = rng.gen_range(0.2..3.0);
            let tau = rng.gen_range(0.0..2.0);
            let b = optimal_field(lambda, n).unwrap();
            let full = closed_form_concurrence(&ClosedFormParams {
                lambda,
                n,
                b_z: b,
                tau,
            })
            .unwrap();
            let reduced = concurrence_at_optimal_field(lambda, n, tau).clamp(0.0, 1.0);
            assert!(
                (full - reduced).abs() < 1e-12,
                "N={n} lambda={lambda} tau={tau}: {full} vs {reduced}"
            );
        }
    }

    #[test]
    fn phi_identity_at_optimal_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let n = rng.gen_range(2..=200usize);
            let lambda = rng.gen_range(0.1..5.0);
            let phi = phi_tilde(lambda, n, optimal_field(lambda, n).unwrap());
            let expect = 2.0 * lambda * (n as f64).sqrt();
            assert!((phi - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn optimal_values() {
        assert!((optimal_field(1.0, 4).unwrap() - 3.0).abs() < 1e-15);
        assert!((optimal_field(2.0, 101).unwrap() - 200.0).abs() < 1e-12);
        assert!(optimal_field(1.0, 1).is_err());

        let t4 = optimal_time(1.0, 4).unwrap();
        assert!((t4 - 0.23882915453112732).abs() < 1e-14, "tau* = {t4}");
        let t16 = optimal_time(1.0, 16).unwrap();
        assert!((t16 - t4 / 2.0).abs() < 1e-14);

        // plugging tau* into the optimal-field form yields the peak
        let c = concurrence_at_optimal_field(1.0, 9, optimal_time(1.0, 9).unwrap());
        assert!((c - PEAK_CONCURRENCE).abs() < 1e-12);
    }

    #[test]
    fn reference_state_moduli_and_concurrence() {
        let v = reference_scattered_state();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!((v[0].norm_sqr() - 1.0 / 9.0).abs() < 1e-12);
        assert!((v[1].norm_sqr() - 2.0 / 3.0).abs() < 1e-12);
        assert!((v[2].norm_sqr() - 2.0 / 9.0).abs() < 1e-12);
        assert_eq!(v[3], re(0.0));
        let c = concurrence(&NeutronDensityMatrix::from_pure(&v).unwrap()).unwrap();
        assert!((c - PEAK_CONCURRENCE).abs() < 1e-12);
    }

    #[test]
    fn witness_expectation_on_target() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let target = Vector4::new(re(0.0), re(h), re(h), re(0.0));
        let rho = pure_rho(target);

        // printed sign: +2 a^2 b^2 = +1/2 on its own target
        let w = WitnessSpec::balanced(SignConvention::Paper);
        let val = witness_expectation(&rho, &w);
        assert!((val - 0.5).abs() < 1e-12, "paper sign: {val}");

        // corrected sign: -1/2, and alpha^2 on |00>
        let w = WitnessSpec::balanced(SignConvention::Corrected);
        let val = witness_expectation(&rho, &w);
        assert!((val + 0.5).abs() < 1e-12, "corrected sign: {val}");

        let zero = pure_rho(Vector4::new(re(1.0), re(0.0), re(0.0), re(0.0)));
        let val = witness_expectation(&zero, &w);
        assert!((val - 0.5).abs() < 1e-12);
    }

    #[test]
    fn witness_nonnegative_on_product_states() {
        let w = WitnessSpec::new(0.8, 0.6, SignConvention::Corrected).unwrap();
        let min = witness_product_state_minimum(&w, 10_000, 17);
        assert!(min >= -1e-10, "min = {min}");
    }

    #[test]
    fn witness_linearity() {
        let w = WitnessSpec::balanced(SignConvention::Corrected);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let mut v1 = Vector4::from_fn(|_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            v1 /= re(v1.norm());
            let mut v2 = Vector4::from_fn(|_, _| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            v2 /= re(v2.norm());
            let p: f64 = rng.gen_range(0.0..1.0);
            let r1 = NeutronDensityMatrix::from_pure(&v1).unwrap();
            let r2 = NeutronDensityMatrix::from_pure(&v2).unwrap();
            let mix =
                NeutronDensityMatrix::try_new(r1.matrix() * re(p) + r2.matrix() * re(1.0 - p))
                    .unwrap();
            let lhs = witness_expectation(&mix, &w);
            let rhs = p * witness_expectation(&r1, &w) + (1.0 - p) * witness_expectation(&r2, &w);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn measured_witness_matches_expectation_in_distribution() {
        let v = reference_scattered_state();
        let rho = NeutronDensityMatrix::from_pure(&v).unwrap();
        let (aligned, _) = rho.phase_aligned();
        let w = WitnessSpec::balanced(SignConvention::Corrected);

        let exact = witness_expectation(&aligned, &w);
        let est = measure_witness(&aligned, &w, 200_000, 99).unwrap();
        assert!(
            (est.value - exact).abs() < 5.0 * est.std_err,
            "estimate {} vs exact {exact} (se {})",
            est.value,
            est.std_err
        );
        assert!(exact < 0.0);
    }

    #[test]
    fn shot_error_scales_with_inverse_sqrt() {
        let v = reference_scattered_state();
        let rho = NeutronDensityMatrix::from_pure(&v).unwrap();
        let (aligned, _) = rho.phase_aligned();
        let w = WitnessSpec::balanced(SignConvention::Corrected);
        let e2 = measure_witness(&aligned, &w, 100, 7).unwrap();
        let e4 = measure_witness(&aligned, &w, 10_000, 7).unwrap();
        let e6 = measure_witness(&aligned, &w, 1_000_000, 7).unwrap();
        let r24 = e2.std_err / e4.std_err;
        let r46 = e4.std_err / e6.std_err;
        assert!((r24 - 10.0).abs() < 2.0, "ratio {r24}");
        assert!((r46 - 10.0).abs() < 2.0, "ratio {r46}");
    }

    #[test]
    fn phase_alignment_preserves_concurrence() {
        let v = reference_scattered_state();
        let rho = NeutronDensityMatrix::from_pure(&v).unwrap();
        let (aligned, theta) = rho.phase_aligned();
        assert!(theta != 0.0);
        let coh = aligned.matrix()[(1, 2)];
        assert!(coh.im.abs() < 1e-14 && coh.re >= 0.0);
        let c0 = concurrence(&rho).unwrap();
        let c1 = concurrence(&aligned).unwrap();
        assert!((c0 - c1).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_density_matrices() {
        let mut m = Matrix4::from_element(re(0.0));
        m[(0, 0)] = re(0.5);
        m[(1, 1)] = re(0.6); // trace 1.1
        assert!(matches!(
            NeutronDensityMatrix::try_new(m),
            Err(Error::BadTrace(_))
        ));

        let mut m = Matrix4::from_element(re(0.0));
        m[(0, 0)] = re(1.0);
        m[(0, 1)] = re(0.3); // not Hermitian
        assert!(matches!(
            NeutronDensityMatrix::try_new(m),
            Err(Error::NotHermitian(_))
        ));

        let mut m = Matrix4::from_element(re(0.0));
        m[(0, 0)] = re(1.5);
        m[(1, 1)] = re(-0.5); // negative eigenvalue
        assert!(matches!(
            NeutronDensityMatrix::try_new(m),
            Err(Error::NotPositiveSemidefinite(_))
        ));
    }

    #[test]
    fn closed_form_rejects_bad_parameters() {
        assert!(closed_form_concurrence(&ClosedFormParams {
            lambda: -1.0,
            n: 4,
            b_z: 0.0,
            tau: 0.1
        })
        .is_err());
        assert!(closed_form_concurrence(&ClosedFormParams {
            lambda: 1.0,
            n: 1,
            b_z: 0.0,
            tau: 0.1
        })
        .is_err());
        assert!(closed_form_concurrence(&ClosedFormParams {
            lambda: 1.0,
            n: 4,
            b_z: -0.5,
            tau: 0.1
        })
        .is_err());
    }

    #[test]
    fn reference_overlap_against_collective_reference() {
        let cb = build_collective_basis(4, 1).unwrap();
        let basis = Basis::Collective(cb.clone());
        let mut v = StateVector::zero(cb.tag());
        let refv = reference_scattered_state();
        v.amplitudes_mut()[cb.index_of(0, 0, 1).unwrap()] = refv[0];
        v.amplitudes_mut()[cb.index_of(1, 0, 0).unwrap()] = refv[1];
        v.amplitudes_mut()[cb.index_of(0, 1, 0).unwrap()] = refv[2];
        let overlap = reference_state_overlap(&v, &basis).unwrap();
        assert!((overlap - 1.0).abs() < 1e-12);
    }
}

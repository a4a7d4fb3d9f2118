//! Flip-restricted and collective bases for the sample-plus-two-neutron system.
//!
//! Site indices `0..N-1` label the sample spins; `N` and `N+1` label neutrons
//! 1 and 2. Every Hamiltonian in scope conserves the total number of flipped
//! spins, and the protocol's initial states carry at most two flips, so the
//! exact ("sector") state space keeps only configurations with at most
//! `k_max <= 2` flips. The collective basis keeps the two neutron bits plus a
//! symmetric magnon number `m`, which is exact for the protocol because the
//! neutrons couple only to the uniform collective mode.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::C64;

/// Binomial coefficient; the arguments used here stay far below overflow.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// A set of flipped sites, strictly increasing, over `N+2` spins.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpinConfiguration {
    flipped: Vec<u8>,
}

impl SpinConfiguration {
    /// Build from a strictly increasing list of flipped site indices.
    pub fn new(flipped: Vec<u8>, n: usize) -> Result<Self> {
        if !flipped.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter(
                "flipped sites must be strictly increasing".into(),
            ));
        }
        if flipped.iter().any(|&s| (s as usize) >= n + 2) {
            return Err(Error::InvalidParameter(format!(
                "site index out of range for N = {n}"
            )));
        }
        Ok(Self { flipped })
    }

    pub fn flip_count(&self) -> usize {
        self.flipped.len()
    }

    pub fn sites(&self) -> &[u8] {
        &self.flipped
    }

    pub fn is_flipped(&self, site: usize) -> bool {
        self.flipped.binary_search(&(site as u8)).is_ok()
    }

    /// Flip bits of (neutron 1, neutron 2), i.e. sites `N` and `N+1`.
    pub fn neutron_bits(&self, n: usize) -> (u8, u8) {
        (self.is_flipped(n) as u8, self.is_flipped(n + 1) as u8)
    }

    /// Flipped sites restricted to the sample, `0..N-1`.
    pub fn sample_sites(&self, n: usize) -> Vec<u8> {
        self.flipped
            .iter()
            .copied()
            .filter(|&s| (s as usize) < n)
            .collect()
    }

    /// The configuration with `site` toggled, or `None` if unchanged ordering
    /// would be violated (never happens: toggling preserves sortedness).
    pub fn toggled(&self, site: usize) -> Self {
        let site = site as u8;
        let mut flipped = self.flipped.clone();
        match flipped.binary_search(&site) {
            Ok(pos) => {
                flipped.remove(pos);
            }
            Err(pos) => {
                flipped.insert(pos, site);
            }
        }
        Self { flipped }
    }
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.flipped.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// Identifies the basis a vector or operator is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisTag {
    Sector { n: usize, k_max: usize },
    Collective { n: usize, m_max: usize },
}

impl BasisTag {
    pub fn n(&self) -> usize {
        match *self {
            BasisTag::Sector { n, .. } | BasisTag::Collective { n, .. } => n,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            BasisTag::Sector { n, k_max } => (0..=k_max).map(|j| binomial(n + 2, j) as usize).sum(),
            BasisTag::Collective { m_max, .. } => 4 * (m_max + 1),
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BasisTag::Sector { n, k_max } => write!(f, "sector(N={n},k_max={k_max})"),
            BasisTag::Collective { n, m_max } => write!(f, "collective(N={n},m_max={m_max})"),
        }
    }
}

/// All configurations of `N+2` spins with at most `k_max` total flips,
/// ordered by flip count then lexicographically. The ordering is
/// deterministic so downstream matrices and CSV output are bit-stable.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    n: usize,
    k_max: usize,
    configs: Vec<SpinConfiguration>,
    index: BTreeMap<Vec<u8>, usize>,
}

/// Enumerate k-subsets of `0..n_sites` in lexicographic order.
fn subsets_lex(n_sites: usize, k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(binomial(n_sites, k) as usize);
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n_sites: usize, k: usize, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let remaining = k - current.len();
        for s in start..=(n_sites - remaining) {
            current.push(s as u8);
            rec(s + 1, n_sites, k, current, out);
            current.pop();
        }
    }
    if k == 0 {
        out.push(Vec::new());
    } else if k <= n_sites {
        rec(0, n_sites, k, &mut current, &mut out);
    }
    out
}

/// Build the flip-restricted basis.
///
/// `k_max` is capped at 2: the initial states plus two spin-1/2 probes can
/// never hold more than two flips under flip-number conservation.
pub fn build_sector_basis(n: usize, k_max: usize) -> Result<SectorBasis> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be >= 2, got {n}")));
    }
    if !(1..=2).contains(&k_max) {
        return Err(Error::InvalidParameter(format!(
            "k_max must be 1 or 2, got {k_max}"
        )));
    }
    let mut configs = Vec::new();
    for k in 0..=k_max {
        for sites in subsets_lex(n + 2, k) {
            configs.push(SpinConfiguration::new(sites, n)?);
        }
    }
    let index = configs
        .iter()
        .enumerate()
        .map(|(i, c)| (c.flipped.clone(), i))
        .collect();
    Ok(SectorBasis {
        n,
        k_max,
        configs,
        index,
    })
}

impl SectorBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag::Sector {
            n: self.n,
            k_max: self.k_max,
        }
    }

    pub fn configs(&self) -> &[SpinConfiguration] {
        &self.configs
    }

    pub fn config(&self, i: usize) -> &SpinConfiguration {
        &self.configs[i]
    }

    pub fn index_of(&self, config: &SpinConfiguration) -> Option<usize> {
        self.index.get(&config.flipped).copied()
    }

    pub fn index_of_sites(&self, sites: &[u8]) -> Option<usize> {
        self.index.get(sites).copied()
    }
}

/// Neutron-bit pair plus symmetric magnon number: `(n1, n2, m)`.
///
/// The magnon state `|m>` stands for the normalized uniform superposition of
/// all m-flip sample configurations; the normalization is applied when
/// embedding into a sector basis, which keeps this basis O(1) in N.
#[derive(Clone, Debug)]
pub struct CollectiveBasis {
    n: usize,
    m_max: usize,
    states: Vec<(u8, u8, u8)>,
}

/// Build the collective basis with `4 * (m_max + 1)` states.
pub fn build_collective_basis(n: usize, m_max: usize) -> Result<CollectiveBasis> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("N must be >= 2, got {n}")));
    }
    if m_max > 2 {
        return Err(Error::InvalidParameter(format!(
            "m_max must be 0, 1 or 2, got {m_max}"
        )));
    }
    if m_max > n {
        return Err(Error::InvalidParameter(format!(
            "magnon count m_max = {m_max} cannot exceed N = {n}"
        )));
    }
    let mut states = Vec::with_capacity(4 * (m_max + 1));
    for n1 in 0..2u8 {
        for n2 in 0..2u8 {
            for m in 0..=m_max as u8 {
                states.push((n1, n2, m));
            }
        }
    }
    Ok(CollectiveBasis { n, m_max, states })
}

impl CollectiveBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag::Collective {
            n: self.n,
            m_max: self.m_max,
        }
    }

    pub fn states(&self) -> &[(u8, u8, u8)] {
        &self.states
    }

    pub fn state(&self, i: usize) -> (u8, u8, u8) {
        self.states[i]
    }

    pub fn index_of(&self, n1: u8, n2: u8, m: u8) -> Option<usize> {
        if n1 > 1 || n2 > 1 || m as usize > self.m_max {
            return None;
        }
        Some((n1 as usize * 2 + n2 as usize) * (self.m_max + 1) + m as usize)
    }
}

/// Either basis, as accepted by the Hamiltonian builders and the dynamics.
#[derive(Clone, Debug)]
pub enum Basis {
    Sector(SectorBasis),
    Collective(CollectiveBasis),
}

impl Basis {
    pub fn n(&self) -> usize {
        match self {
            Basis::Sector(b) => b.n(),
            Basis::Collective(b) => b.n(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Basis::Sector(b) => b.dim(),
            Basis::Collective(b) => b.dim(),
        }
    }

    pub fn tag(&self) -> BasisTag {
        match self {
            Basis::Sector(b) => b.tag(),
            Basis::Collective(b) => b.tag(),
        }
    }
}

/// Complex amplitude vector over a tagged basis.
#[derive(Clone, Debug)]
pub struct StateVector {
    tag: BasisTag,
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(tag: BasisTag, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != tag.dim() {
            return Err(Error::BasisMismatch {
                expected: format!("{} (dim {})", tag, tag.dim()),
                got: format!("vector of length {}", amps.len()),
            });
        }
        Ok(Self { tag, amps })
    }

    pub fn zero(tag: BasisTag) -> Self {
        Self {
            amps: DVector::from_element(tag.dim(), C64::new(0.0, 0.0)),
            tag,
        }
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C64> {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Inner product `<self|other>`.
    pub fn dot(&self, other: &StateVector) -> Result<C64> {
        if self.tag != other.tag {
            return Err(Error::BasisMismatch {
                expected: self.tag.to_string(),
                got: other.tag.to_string(),
            });
        }
        Ok(self.amps.dotc(&other.amps))
    }
}

/// Embed a collective-basis vector into a sector basis over the same sample.
///
/// `|n1, n2, m>` maps to `C(N,m)^(-1/2) * sum` over all m-flip sample
/// configurations combined with the given neutron bits. This is an isometry
/// on the representable subspace; a nonzero amplitude on a state with more
/// than `k_max` total flips is a basis mismatch.
pub fn embed_collective_in_sector(
    v: &StateVector,
    cb: &CollectiveBasis,
    sb: &SectorBasis,
) -> Result<StateVector> {
    if v.tag() != cb.tag() {
        return Err(Error::BasisMismatch {
            expected: cb.tag().to_string(),
            got: v.tag().to_string(),
        });
    }
    if cb.n() != sb.n() {
        return Err(Error::BasisMismatch {
            expected: format!("sector basis with N = {}", cb.n()),
            got: sb.tag().to_string(),
        });
    }
    if cb.m_max() > sb.k_max() {
        return Err(Error::BasisMismatch {
            expected: format!("sector basis with k_max >= {}", cb.m_max()),
            got: sb.tag().to_string(),
        });
    }
    let n = cb.n();
    let mut out = StateVector::zero(sb.tag());
    for (i, &(n1, n2, m)) in cb.states().iter().enumerate() {
        let amp = v.amplitudes()[i];
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        let weight = amp / (binomial(n, m as usize) as f64).sqrt();
        for sample in subsets_lex(n, m as usize) {
            let mut sites = sample;
            if n1 == 1 {
                sites.push(n as u8);
            }
            if n2 == 1 {
                sites.push((n + 1) as u8);
            }
            let idx = sb.index_of_sites(&sites).ok_or(Error::BasisMismatch {
                expected: format!("sector basis containing {sites:?}"),
                got: sb.tag().to_string(),
            })?;
            out.amplitudes_mut()[idx] += weight;
        }
    }
    Ok(out)
}

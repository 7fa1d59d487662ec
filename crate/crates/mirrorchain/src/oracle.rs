//! Brute-force dense validator: full 2^N spin Hamiltonians, exact dense
//! evolution, and explicit Jordan-Wigner operator matrices. Everything in
//! [`crate::fock`] and [`crate::errmodel`] has a dense twin here for
//! certification on small instances. Capped at N = 10; it exists to
//! certify, not to scale.

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::fock::PureState;
use crate::linalg::{c, identity, kron, CMat, HermitianEig};
use num_complex::Complex64 as C64;

pub const MAX_ORACLE_SITES: usize = 10;

#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub n_sites: usize,
    pub entries: CMat,
}

impl DenseOperator {
    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn apply(&self, state: &PureState) -> PureState {
        let v = self.entries.clone() * state.as_vector();
        PureState::from_vector(self.n_sites, &v)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        crate::linalg::max_abs(&(self.entries.clone() - self.entries.adjoint()))
    }

    pub fn unitarity_residual(&self) -> f64 {
        crate::linalg::unitarity_residual(&self.entries)
    }
}

fn guard(n_sites: usize) -> Result<()> {
    if n_sites > MAX_ORACLE_SITES {
        return Err(Error::ResourceLimit { requested: n_sites, max: MAX_ORACLE_SITES });
    }
    Ok(())
}

fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[C64::ZERO, C64::ONE, C64::ONE, C64::ZERO])
}

fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[C64::ZERO, c(0.0, -1.0), c(0.0, 1.0), C64::ZERO])
}

fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[C64::ONE, C64::ZERO, C64::ZERO, -C64::ONE])
}

/// Tensor a single-site operator into the full register. Site 1 is the
/// least-significant bit, so it sits on the right of the Kronecker chain
/// built high-to-low.
fn embed_single(n_sites: usize, site: usize, op: &CMat) -> CMat {
    let mut m = identity(1);
    for s in (1..=n_sites).rev() {
        let factor = if s == site { op.clone() } else { identity(2) };
        m = kron(&m, &factor);
    }
    m
}

/// Dense single-site Pauli operators, used by tests and the tomography
/// simulator.
pub fn dense_pauli(n_sites: usize, site: usize, which: char) -> Result<DenseOperator> {
    guard(n_sites)?;
    let op = match which {
        'X' => pauli_x(),
        'Y' => pauli_y(),
        'Z' => pauli_z(),
        'I' => identity(2),
        other => return Err(Error::invalid(format!("unknown Pauli {other}"))),
    };
    Ok(DenseOperator { n_sites, entries: embed_single(n_sites, site, &op) })
}

/// The full spin Hamiltonian
/// `H = 1/2 sum J_i (X_i X_{i+1} + Y_i Y_{i+1}) - sum B_i Z_i`.
pub fn dense_hamiltonian(spec: &ChainSpec) -> Result<DenseOperator> {
    let n = spec.n_sites;
    guard(n)?;
    let dim = 1 << n;
    let mut h = CMat::zeros(dim, dim);
    for (i, &j) in spec.couplings.iter().enumerate() {
        let site = i + 1;
        let xx = embed_single(n, site, &pauli_x()) * embed_single(n, site + 1, &pauli_x());
        let yy = embed_single(n, site, &pauli_y()) * embed_single(n, site + 1, &pauli_y());
        h += (xx + yy) * c(0.5 * j, 0.0);
    }
    for (i, &b) in spec.fields.iter().enumerate() {
        h -= embed_single(n, i + 1, &pauli_z()) * c(b, 0.0);
    }
    Ok(DenseOperator { n_sites: n, entries: h })
}

/// Cached dense exponential `exp(-i H t)` evaluated at many times.
pub struct DenseEvolution {
    n_sites: usize,
    eig: HermitianEig,
}

impl DenseEvolution {
    pub fn new(h: &DenseOperator) -> Self {
        DenseEvolution { n_sites: h.n_sites, eig: HermitianEig::new(&h.entries) }
    }

    pub fn unitary(&self, t: f64) -> DenseOperator {
        DenseOperator { n_sites: self.n_sites, entries: self.eig.propagator(t) }
    }

    pub fn evolve(&self, state: &PureState, t: f64) -> PureState {
        let v = self.eig.evolve(&state.as_vector(), t);
        PureState::from_vector(self.n_sites, &v)
    }
}

/// One-shot exact evolution by dense Hermitian eigendecomposition.
pub fn dense_evolve(h: &DenseOperator, state: &PureState, t: f64) -> Result<PureState> {
    guard(h.n_sites)?;
    Ok(DenseEvolution::new(h).evolve(state, t))
}

/// Explicit Jordan-Wigner matrix of a single creator or annihilator:
/// Z-string over the sites below, then `(X ∓ iY)/2`.
pub fn dense_jw_single(n_sites: usize, site: usize, dagger: bool) -> Result<DenseOperator> {
    guard(n_sites)?;
    if site == 0 || site > n_sites {
        return Err(Error::invalid(format!("site {site} out of range 1..={n_sites}")));
    }
    let ladder = if dagger {
        // (X - iY)/2 = |1><0|
        CMat::from_row_slice(2, 2, &[C64::ZERO, C64::ZERO, C64::ONE, C64::ZERO])
    } else {
        CMat::from_row_slice(2, 2, &[C64::ZERO, C64::ONE, C64::ZERO, C64::ZERO])
    };
    let mut m = embed_single(n_sites, site, &ladder);
    for below in 1..site {
        m = m * embed_single(n_sites, below, &pauli_z());
    }
    Ok(DenseOperator { n_sites, entries: m })
}

/// Dense matrix of a written operator string: creators then annihilators,
/// each list left to right. Site collisions are legal (`a_k^† a_k` is the
/// number operator).
pub fn dense_jw_operator(
    n_sites: usize,
    creators: &[usize],
    annihilators: &[usize],
) -> Result<DenseOperator> {
    guard(n_sites)?;
    let dim = 1 << n_sites;
    let mut m = identity(dim);
    for &site in creators {
        m = m * dense_jw_single(n_sites, site, true)?.entries;
    }
    for &site in annihilators {
        m = m * dense_jw_single(n_sites, site, false)?.entries;
    }
    Ok(DenseOperator { n_sites, entries: m })
}

/// Total excitation number operator `sum Z_i`, for symmetry checks.
pub fn dense_total_z(n_sites: usize) -> Result<DenseOperator> {
    guard(n_sites)?;
    let dim = 1 << n_sites;
    let mut m = CMat::zeros(dim, dim);
    for site in 1..=n_sites {
        m += embed_single(n_sites, site, &pauli_z());
    }
    Ok(DenseOperator { n_sites, entries: m })
}

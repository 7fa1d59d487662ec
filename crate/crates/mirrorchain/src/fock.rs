//! Exact full-register quantum states with Jordan-Wigner fermionic
//! operators and excitation-sector time evolution.
//!
//! A [`PureState`] over `N` sites stores `2^N` complex amplitudes indexed
//! by occupation bitstring, with **site 1 as the least-significant bit**.
//! Every sign computation in the crate (Jordan-Wigner strings, hole
//! states) derives from this single convention.
//!
//! Evolution exploits the excitation-number symmetry of the chain
//! Hamiltonian: each k-excitation sector is exponentiated as a dense
//! Hermitian matrix of dimension C(N, k), which at the target scale
//! (N <= 14 or so) is exact and fast enough. Sectors with no amplitude
//! are skipped.

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, HermitianEig};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Mutex;

/// Norm below which a state is treated as annihilated.
pub const ZERO_STATE_TOL: f64 = 1e-14;

/// A full-register pure state, possibly unnormalized (error strings are
/// not individually unitary, so unnormalized states are first class).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PureState {
    n_sites: usize,
    #[serde(with = "crate::serial::c64_vec")]
    amplitudes: Vec<C64>,
    normalized: bool,
}

impl PureState {
    /// All sites empty.
    pub fn vacuum(n_sites: usize) -> Self {
        let mut amplitudes = vec![C64::ZERO; 1 << n_sites];
        amplitudes[0] = C64::ONE;
        PureState { n_sites, amplitudes, normalized: true }
    }

    /// A single computational basis state.
    pub fn basis_state(n_sites: usize, index: usize) -> Self {
        assert!(index < (1 << n_sites), "basis index out of range");
        let mut amplitudes = vec![C64::ZERO; 1 << n_sites];
        amplitudes[index] = C64::ONE;
        PureState { n_sites, amplitudes, normalized: true }
    }

    /// Occupation index with the given sites set.
    pub fn index_of_sites(sites: &[usize]) -> usize {
        sites.iter().fold(0usize, |acc, &s| acc | (1 << (s - 1)))
    }

    pub fn from_amplitudes(n_sites: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_sites {
            return Err(Error::invalid(format!(
                "expected 2^{n_sites} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let mut state = PureState { n_sites, amplitudes, normalized: false };
        state.normalized = (state.norm() - 1.0).abs() < 1e-10;
        Ok(state)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Normalize, returning the new state and the norm that was divided
    /// out. Errors on an annihilated state.
    pub fn normalize(&self) -> Result<(PureState, f64)> {
        let norm = self.norm();
        if norm < ZERO_STATE_TOL {
            return Err(Error::invalid("cannot normalize an annihilated (zero) state"));
        }
        let amplitudes = self.amplitudes.iter().map(|a| a / norm).collect();
        Ok((
            PureState { n_sites: self.n_sites, amplitudes, normalized: true },
            norm,
        ))
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        assert_eq!(self.n_sites, other.n_sites);
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, factor: C64) -> PureState {
        PureState {
            n_sites: self.n_sites,
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
            normalized: false,
        }
    }

    pub fn add(&self, other: &PureState) -> PureState {
        assert_eq!(self.n_sites, other.n_sites);
        PureState {
            n_sites: self.n_sites,
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + b)
                .collect(),
            normalized: false,
        }
    }

    pub fn zero_like(&self) -> PureState {
        PureState {
            n_sites: self.n_sites,
            amplitudes: vec![C64::ZERO; self.amplitudes.len()],
            normalized: false,
        }
    }

    /// Tensor product with `low` on sites `1..=low.n_sites` and `high` on
    /// the sites above.
    pub fn tensor(low: &PureState, high: &PureState) -> PureState {
        let n_sites = low.n_sites + high.n_sites;
        let mut amplitudes = vec![C64::ZERO; 1 << n_sites];
        for (h, ah) in high.amplitudes.iter().enumerate() {
            if ah == &C64::ZERO {
                continue;
            }
            let base = h << low.n_sites;
            for (l, al) in low.amplitudes.iter().enumerate() {
                amplitudes[base | l] = ah * al;
            }
        }
        PureState {
            n_sites,
            amplitudes,
            normalized: low.normalized && high.normalized,
        }
    }

    /// Squared norm within each excitation sector, indexed by excitation
    /// count.
    pub fn sector_weights(&self) -> Vec<f64> {
        let mut weights = vec![0.0; self.n_sites + 1];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            weights[idx.count_ones() as usize] += a.norm_sqr();
        }
        weights
    }

    pub fn as_vector(&self) -> CVec {
        CVec::from_column_slice(&self.amplitudes)
    }

    pub fn from_vector(n_sites: usize, v: &CVec) -> PureState {
        let mut state = PureState {
            n_sites,
            amplitudes: v.iter().cloned().collect(),
            normalized: false,
        };
        state.normalized = (state.norm() - 1.0).abs() < 1e-10;
        state
    }
}

fn check_site(state: &PureState, site: usize) -> Result<()> {
    if site == 0 || site > state.n_sites {
        return Err(Error::invalid(format!(
            "site {site} out of range 1..={}",
            state.n_sites
        )));
    }
    Ok(())
}

/// Jordan-Wigner sign for acting at `site`: parity of the occupied sites
/// strictly below it.
fn jw_sign(index: usize, site: usize) -> f64 {
    let below = index & ((1 << (site - 1)) - 1);
    if below.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Apply `a_site^†`. Basis states with the site already occupied map to
/// zero, so the result is generally unnormalized.
pub fn apply_create(state: &PureState, site: usize) -> Result<PureState> {
    check_site(state, site)?;
    let bit = 1usize << (site - 1);
    let mut out = state.zero_like();
    for (idx, a) in state.amplitudes.iter().enumerate() {
        if a == &C64::ZERO || idx & bit != 0 {
            continue;
        }
        out.amplitudes[idx | bit] = a * jw_sign(idx, site);
    }
    Ok(out)
}

/// Apply `a_site` (adjoint action of [`apply_create`]).
pub fn apply_annihilate(state: &PureState, site: usize) -> Result<PureState> {
    check_site(state, site)?;
    let bit = 1usize << (site - 1);
    let mut out = state.zero_like();
    for (idx, a) in state.amplitudes.iter().enumerate() {
        if a == &C64::ZERO || idx & bit == 0 {
            continue;
        }
        out.amplitudes[idx & !bit] = a * jw_sign(idx, site);
    }
    Ok(out)
}

/// Apply a product of creators and annihilators as written: all creators
/// to the left of all annihilators, each list left to right, so the
/// rightmost listed operator acts first.
pub fn apply_string(state: &PureState, creators: &[usize], annihilators: &[usize]) -> Result<PureState> {
    let mut current = state.clone();
    for &site in annihilators.iter().rev() {
        current = apply_annihilate(&current, site)?;
    }
    for &site in creators.iter().rev() {
        current = apply_create(&current, site)?;
    }
    Ok(current)
}

/// Reduced density matrix on an ordered list of sites. The k-th listed
/// site becomes local bit k-1 of the returned matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMatrix {
    pub region: Vec<usize>,
    #[serde(with = "crate::serial::c64_mat")]
    pub entries: CMat,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.diagonal().sum()
    }

    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).diagonal().sum().re
    }

    pub fn hermiticity_residual(&self) -> f64 {
        crate::linalg::max_abs(&(self.entries.clone() - self.entries.adjoint()))
    }

    /// Smallest eigenvalue; the positive-semidefinite invariant allows a
    /// tiny negative numerical fuzz.
    pub fn min_eigenvalue(&self) -> f64 {
        let eig = self.entries.clone().symmetric_eigen();
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self, tol_herm: f64, tol_trace: f64, tol_psd: f64) -> Result<()> {
        if self.hermiticity_residual() > tol_herm {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        if (self.trace().re - 1.0).abs() > tol_trace || self.trace().im.abs() > tol_trace {
            return Err(Error::invalid("density matrix trace is not 1"));
        }
        if self.min_eigenvalue() < -tol_psd {
            return Err(Error::invalid("density matrix is not positive semidefinite"));
        }
        Ok(())
    }
}

/// Partial trace over the complement of `region`. The input is normalized
/// first so the result has unit trace.
pub fn reduced_density(state: &PureState, region: &[usize]) -> Result<DensityMatrix> {
    if region.is_empty() {
        return Err(Error::invalid("reduced_density needs a nonempty region"));
    }
    for &s in region {
        check_site(state, s)?;
    }
    let (state, _) = state.normalize()?;
    let n = state.n_sites;
    let k = region.len();
    let dim = 1usize << k;
    let comp: Vec<usize> = (1..=n).filter(|s| !region.contains(s)).collect();
    let comp_dim = 1usize << comp.len();

    // Gather amplitudes as a (region) x (complement) table, then contract.
    let mut table = CMat::zeros(dim, comp_dim);
    for r in 0..dim {
        for e in 0..comp_dim {
            let mut idx = 0usize;
            for (bit, &site) in region.iter().enumerate() {
                if r & (1 << bit) != 0 {
                    idx |= 1 << (site - 1);
                }
            }
            for (bit, &site) in comp.iter().enumerate() {
                if e & (1 << bit) != 0 {
                    idx |= 1 << (site - 1);
                }
            }
            table[(r, e)] = state.amplitudes[idx];
        }
    }
    let entries = &table * table.adjoint();
    Ok(DensityMatrix { region: region.to_vec(), entries })
}

/// Overlap `<chi| rho |chi>` of a single-qubit reduced state with a target
/// pure qubit state `chi = chi0 |0> + chi1 |1>`.
pub fn fidelity_to(dm: &DensityMatrix, chi: (C64, C64)) -> Result<f64> {
    if dm.region.len() != 1 {
        return Err(Error::invalid(format!(
            "fidelity_to expects a single-site density matrix, got {} sites",
            dm.region.len()
        )));
    }
    let (a, b) = chi;
    let v = CVec::from_vec(vec![a, b]);
    let val = (v.adjoint() * &dm.entries * v)[(0, 0)];
    Ok(val.re)
}

/// Apply a unitary acting on the contiguous sites
/// `start_site ..= start_site + k - 1`, where `u` is `2^k x 2^k` over the
/// local bits in the global convention.
pub fn apply_unitary_contiguous(state: &PureState, start_site: usize, u: &CMat) -> Result<PureState> {
    check_site(state, start_site)?;
    let k = (u.nrows() as f64).log2().round() as usize;
    if u.nrows() != 1 << k || u.ncols() != 1 << k {
        return Err(Error::invalid("unitary dimension must be a power of two"));
    }
    if start_site + k - 1 > state.n_sites {
        return Err(Error::invalid("unitary extends past the end of the register"));
    }
    let low_bits = start_site - 1;
    let high_bits = state.n_sites - low_bits - k;
    let dim = 1usize << k;
    let mut out = state.zero_like();
    let mut gathered = vec![C64::ZERO; dim];
    for high in 0..(1usize << high_bits) {
        for low in 0..(1usize << low_bits) {
            let base = (high << (low_bits + k)) | low;
            for m in 0..dim {
                gathered[m] = state.amplitudes[base | (m << low_bits)];
            }
            for r in 0..dim {
                let mut acc = C64::ZERO;
                for m in 0..dim {
                    acc += u[(r, m)] * gathered[m];
                }
                out.amplitudes[base | (r << low_bits)] = acc;
            }
        }
    }
    out.normalized = state.normalized;
    Ok(out)
}

/// Per-sector eigendecompositions of a chain Hamiltonian, built lazily and
/// cached, so that one [`SectorEvolver`] serves a whole experiment.
pub struct SectorEvolver {
    spec: ChainSpec,
    cache: Mutex<HashMap<usize, std::sync::Arc<SectorEig>>>,
}

struct SectorEig {
    basis: Vec<usize>,
    eig: HermitianEig,
}

impl SectorEvolver {
    pub fn new(spec: &ChainSpec) -> Self {
        SectorEvolver { spec: spec.clone(), cache: Mutex::new(HashMap::new()) }
    }

    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    fn sector(&self, k: usize) -> std::sync::Arc<SectorEig> {
        let mut cache = self.cache.lock().unwrap();
        cache
            .entry(k)
            .or_insert_with(|| std::sync::Arc::new(build_sector(&self.spec, k)))
            .clone()
    }

    /// Evolve for `duration` (negative runs the dynamics backwards). Only
    /// sectors holding amplitude are touched, and per-sector weights are
    /// preserved exactly.
    pub fn evolve(&self, state: &PureState, duration: f64) -> PureState {
        assert_eq!(state.n_sites, self.spec.n_sites, "state/spec size mismatch");
        if duration == 0.0 {
            return state.clone();
        }
        let mut out = state.clone();
        for k in 0..=self.spec.n_sites {
            let occupied = state
                .amplitudes
                .iter()
                .enumerate()
                .any(|(i, a)| i.count_ones() as usize == k && a != &C64::ZERO);
            if !occupied {
                continue;
            }
            let sector = self.sector(k);
            let mut amps = CVec::from_fn(sector.basis.len(), |i, _| {
                state.amplitudes[sector.basis[i]]
            });
            amps = sector.eig.evolve(&amps, duration);
            for (i, &idx) in sector.basis.iter().enumerate() {
                out.amplitudes[idx] = amps[i];
            }
        }
        out
    }
}

/// Convenience wrapper building a throwaway [`SectorEvolver`].
pub fn evolve(state: &PureState, spec: &ChainSpec, duration: f64) -> PureState {
    SectorEvolver::new(spec).evolve(state, duration)
}

fn build_sector(spec: &ChainSpec, k: usize) -> SectorEig {
    let n = spec.n_sites;
    let basis: Vec<usize> = (0..(1usize << n))
        .filter(|idx| idx.count_ones() as usize == k)
        .collect();
    let index_of: HashMap<usize, usize> =
        basis.iter().enumerate().map(|(i, &idx)| (idx, i)).collect();
    let dim = basis.len();
    let mut h = CMat::zeros(dim, dim);
    for (col, &idx) in basis.iter().enumerate() {
        // Diagonal: -sum_i B_i z_i with z_i = +1 for an empty site.
        let mut diag = 0.0;
        for (i, &b) in spec.fields.iter().enumerate() {
            diag += b * if idx & (1 << i) != 0 { 1.0 } else { -1.0 };
        }
        h[(col, col)] = C64::new(diag, 0.0);
        // Hopping between adjacent sites carries no Jordan-Wigner sign.
        for bond in 0..n - 1 {
            let pair = (1usize << bond) | (1usize << (bond + 1));
            let occ = idx & pair;
            if occ != 0 && occ != pair {
                let flipped = idx ^ pair;
                let row = index_of[&flipped];
                h[(row, col)] = C64::new(spec.couplings[bond], 0.0);
            }
        }
    }
    SectorEig { basis, eig: HermitianEig::new(&h) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_state(n: usize, seed: u64) -> PureState {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<C64> = (0..(1 << n))
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        PureState::from_amplitudes(n, amps).unwrap().normalize().unwrap().0
    }

    #[test]
    fn create_on_vacuum_sets_the_site() {
        let vac = PureState::vacuum(2);
        let s = apply_create(&vac, 1).unwrap();
        assert_eq!(s.amplitude(0b01), C64::ONE);
        assert_eq!(s.amplitude(0b00), C64::ZERO);
    }

    #[test]
    fn creation_order_carries_the_anticommutation_sign() {
        let vac = PureState::vacuum(2);
        // Applying a_1^† then a_2^† is the operator a_2^† a_1^†; its
        // Z-string crosses the occupied site 1.
        let s12 = apply_create(&apply_create(&vac, 1).unwrap(), 2).unwrap();
        let s21 = apply_create(&apply_create(&vac, 2).unwrap(), 1).unwrap();
        assert_eq!(s12.amplitude(0b11), -C64::ONE);
        assert_eq!(s21.amplitude(0b11), C64::ONE);
    }

    #[test]
    fn annihilate_clears_the_site_and_crosses_z_strings() {
        let s = PureState::basis_state(2, 0b01);
        let cleared = apply_annihilate(&s, 1).unwrap();
        assert_eq!(cleared.amplitude(0), C64::ONE);
        // a_2 on |11> crosses the occupied site 1.
        let s = PureState::basis_state(2, 0b11);
        let out = apply_annihilate(&s, 2).unwrap();
        assert_eq!(out.amplitude(0b01), -C64::ONE);
    }

    #[test]
    fn create_twice_annihilates() {
        let s = apply_create(&PureState::vacuum(3), 2).unwrap();
        let z = apply_create(&s, 2).unwrap();
        assert!(z.norm() < 1e-15);
    }

    #[test]
    fn site_out_of_range_is_rejected() {
        let vac = PureState::vacuum(3);
        assert!(apply_create(&vac, 0).is_err());
        assert!(apply_create(&vac, 4).is_err());
        assert!(apply_annihilate(&vac, 7).is_err());
    }

    #[test]
    fn vacuum_is_stationary_without_fields() {
        let spec = ChainSpec::uniform_pst(5).unwrap();
        let vac = PureState::vacuum(5);
        let out = evolve(&vac, &spec, 0.9);
        assert!((out.amplitude(0) - C64::ONE).norm() < 1e-12);
    }

    #[test]
    fn vacuum_picks_up_only_the_field_phase() {
        let spec = ChainSpec::explicit(vec![1.0, 1.0], vec![0.3, -0.2, 0.5], 1.0).unwrap();
        let vac = PureState::vacuum(3);
        let t = 0.73;
        let out = evolve(&vac, &spec, t);
        // E_vac = -sum B
        let expected = (-C64::i() * (-0.6) * t).exp();
        assert!((out.amplitude(0) - expected).norm() < 1e-12);
    }

    #[test]
    fn one_excitation_evolution_matches_beta_matrix() {
        let spec = ChainSpec::uniform_pst(6).unwrap();
        let t = 0.61;
        let beta = crate::chain::propagator(&spec, t);
        let evolver = SectorEvolver::new(&spec);
        for start in 1..=6usize {
            let s = apply_create(&PureState::vacuum(6), start).unwrap();
            let out = evolver.evolve(&s, t);
            for m in 1..=6usize {
                let amp = out.amplitude(1 << (m - 1));
                assert!((amp - beta.entry(m, start)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn sector_weights_are_conserved() {
        let spec = ChainSpec::uniform_pst(5).unwrap();
        let s = random_state(5, 11);
        let before = s.sector_weights();
        let after = evolve(&s, &spec, 1.37).sector_weights();
        for (b, a) in before.iter().zip(&after) {
            assert_abs_diff_eq!(b, a, epsilon = 1e-12);
        }
    }

    #[test]
    fn evolve_round_trip_is_identity() {
        let spec = ChainSpec::uniform_pst(4).unwrap();
        let s = random_state(4, 3);
        let evolver = SectorEvolver::new(&spec);
        let back = evolver.evolve(&evolver.evolve(&s, 0.83), -0.83);
        let overlap = s.inner(&back);
        assert!((overlap - C64::ONE).norm() < 1e-12);
    }

    #[test]
    fn reduced_density_of_product_state_is_pure() {
        let chi = PureState::from_amplitudes(
            1,
            vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)],
        )
        .unwrap();
        let state = PureState::tensor(&chi, &PureState::vacuum(3));
        let rho = reduced_density(&state, &[1]).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entries[(0, 0)].re, 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entries[(1, 1)].re, 0.64, epsilon = 1e-12);
        let f = fidelity_to(&rho, (C64::new(0.6, 0.0), C64::new(0.0, 0.8))).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn bell_pair_reduces_to_maximally_mixed() {
        let mut amps = vec![C64::ZERO; 4];
        amps[0b00] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[0b11] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let state = PureState::from_amplitudes(2, amps).unwrap();
        let rho = reduced_density(&state, &[1]).unwrap();
        assert_abs_diff_eq!(rho.entries[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entries[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert!(rho.entries[(0, 1)].norm() < 1e-12);
        let f = fidelity_to(&rho, (C64::ONE, C64::ZERO)).unwrap();
        assert_abs_diff_eq!(f, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn reduced_density_invariants_on_random_state() {
        let s = random_state(5, 42);
        let rho = reduced_density(&s, &[4, 5]).unwrap();
        rho.validate(1e-12, 1e-10, 1e-10).unwrap();
        assert!(rho.purity() <= 1.0 + 1e-10);
    }

    #[test]
    fn empty_region_is_rejected() {
        let s = PureState::vacuum(3);
        assert!(reduced_density(&s, &[]).is_err());
    }

    #[test]
    fn fidelity_with_orthogonal_state_is_zero() {
        let chi = PureState::basis_state(1, 1);
        let state = PureState::tensor(&chi, &PureState::vacuum(2));
        let rho = reduced_density(&state, &[1]).unwrap();
        let f = fidelity_to(&rho, (C64::ONE, C64::ZERO)).unwrap();
        assert!(f.abs() < 1e-12);
    }

    #[test]
    fn fidelity_rejects_multi_site_regions() {
        let s = PureState::vacuum(3);
        let rho = reduced_density(&s, &[1, 2]).unwrap();
        assert!(fidelity_to(&rho, (C64::ONE, C64::ZERO)).is_err());
    }

    #[test]
    fn contiguous_unitary_application_matches_direct_expansion() {
        // Phase the top qubit of a 3-site register.
        let s = random_state(3, 9);
        let phase = C64::from_polar(1.0, 0.4);
        let u = CMat::from_row_slice(2, 2, &[C64::ONE, C64::ZERO, C64::ZERO, phase]);
        let out = apply_unitary_contiguous(&s, 3, &u).unwrap();
        for idx in 0..8usize {
            let expected = if idx & 0b100 != 0 {
                s.amplitude(idx) * phase
            } else {
                s.amplitude(idx)
            };
            assert!((out.amplitude(idx) - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn string_application_order_is_rightmost_first() {
        // The written product a_1^† a_2^† applies a_2^† first: no Z
        // crossing either step, so a_1^† a_2^† |00> = +|11>.
        let plus = apply_string(&PureState::vacuum(2), &[1, 2], &[]).unwrap();
        assert_eq!(plus.amplitude(0b11), C64::ONE);
        let minus = apply_string(&PureState::vacuum(2), &[2, 1], &[]).unwrap();
        assert_eq!(minus.amplitude(0b11), -C64::ONE);
    }
}

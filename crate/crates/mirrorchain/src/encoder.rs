//! Synthesis of protected encoding pairs from anticommutator constraints,
//! the vacuum-like state they annihilate, and initial-state construction.
//!
//! A logical qubit is carried by two fermionic modes
//! `Q_a^† = sum_i (eps_i^a a_i^† + eta_i^a a_i)` supported on the first D
//! sites. Protection against an error mode at site k and time t is the
//! linear condition that the transferred encoding mode anticommutes with
//! the decoding-region part of that error mode; all such conditions are
//! rows of one constraint matrix, and encodings are vectors in its null
//! space, post-processed to satisfy the mode orthonormality conditions:
//!
//! * Hermitian form: `sum_i (eps^a conj(eps^a') + eta^a conj(eta^a')) = delta_{a,a'}`
//! * bilinear form: `sum_i (eps^a eta^a' + eta^a eps^a') = 0` for all a, a'
//!
//! With `eta = 0` the bilinear condition is automatic and plain
//! orthonormal null vectors suffice. With `eta` free the pair must span a
//! totally isotropic plane of the bilinear form; this is built by root
//! finding on the form's restriction (a complex quadratic always has a
//! root), then Hermitian orthonormalization inside the isotropic plane.
//!
//! Slot convention: `eps_i` pairs with site `N - i + 1` of the decoding
//! region after transfer, i.e. coefficient vectors are stored
//! boundary-inward.

use crate::chain::ChainSpec;
use crate::errmodel::{heisenberg_mode_with, SystematicError};
use crate::error::{Error, Result};
use crate::fock::{self, PureState};
use crate::linalg::{self, CMat, CVec};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Relative singular-value threshold for rank decisions in the encoding
/// solve.
pub const NULL_SPACE_TOL: f64 = 1e-10;
/// Relative rank tolerance for the vacuum kernel.
pub const KERNEL_TOL: f64 = 1e-8;

/// One protected mode: coefficient vectors over the D encoding slots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodingMode {
    #[serde(with = "crate::serial::c64_vec")]
    pub epsilon: Vec<C64>,
    #[serde(with = "crate::serial::c64_vec")]
    pub eta: Vec<C64>,
}

impl EncodingMode {
    pub fn d(&self) -> usize {
        self.epsilon.len()
    }

    pub fn eta_is_zero(&self) -> bool {
        self.eta.iter().all(|z| z.norm() < 1e-14)
    }

    /// Coefficients on the local decoding register: local site j carries
    /// `eps_{D-j+1}` on the raising operator (and `eta_{D-j+1}` on the
    /// lowering one).
    pub fn local_raising_coeffs(&self) -> (Vec<C64>, Vec<C64>) {
        let mut eps = self.epsilon.clone();
        let mut eta = self.eta.clone();
        eps.reverse();
        eta.reverse();
        (eps, eta)
    }
}

/// Two orthogonal protected modes over the same region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodingPair {
    #[serde(rename = "D")]
    pub d: usize,
    pub q0: EncodingMode,
    pub q1: EncodingMode,
}

impl EncodingPair {
    pub fn eta_is_zero(&self) -> bool {
        self.q0.eta_is_zero() && self.q1.eta_is_zero()
    }

    /// Residual of the Hermitian orthonormality condition (worst entry of
    /// the 2x2 Gram matrix minus identity).
    pub fn hermitian_residual(&self) -> f64 {
        let modes = [&self.q0, &self.q1];
        let mut worst: f64 = 0.0;
        for (a, ma) in modes.iter().enumerate() {
            for (b, mb) in modes.iter().enumerate() {
                let g: C64 = ma
                    .epsilon
                    .iter()
                    .zip(&mb.epsilon)
                    .chain(ma.eta.iter().zip(&mb.eta))
                    .map(|(x, y)| x * y.conj())
                    .sum();
                let target = if a == b { C64::ONE } else { C64::ZERO };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    /// Residual of the bilinear isotropy condition over all mode pairs.
    pub fn bilinear_residual(&self) -> f64 {
        let modes = [&self.q0, &self.q1];
        let mut worst: f64 = 0.0;
        for ma in modes {
            for mb in modes {
                let b: C64 = ma
                    .epsilon
                    .iter()
                    .zip(&mb.eta)
                    .chain(ma.eta.iter().zip(&mb.epsilon))
                    .map(|(x, y)| x * y)
                    .sum();
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    /// Worst constraint-row violation across both modes.
    pub fn constraint_residual(&self, constraints: &EncodingConstraints) -> f64 {
        let mut worst: f64 = 0.0;
        for mode in [&self.q0, &self.q1] {
            for row in &constraints.rows {
                let v: C64 = row
                    .eps
                    .iter()
                    .zip(&mode.epsilon)
                    .chain(row.eta.iter().zip(&mode.eta))
                    .map(|(c, x)| c * x)
                    .sum();
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    /// Phase-dress the modes for the transferred picture: after the chain
    /// maps site i to its mirror, the raising part carries `e^{i phi}` and
    /// the lowering part `e^{-i phi}`. Both invariant forms above are
    /// unchanged by this.
    pub fn dressed(&self, phi: f64) -> EncodingPair {
        let up = C64::from_polar(1.0, phi);
        let dress = |m: &EncodingMode| EncodingMode {
            epsilon: m.epsilon.iter().map(|z| z * up).collect(),
            eta: m.eta.iter().map(|z| z * up.conj()).collect(),
        };
        EncodingPair { d: self.d, q0: dress(&self.q0), q1: dress(&self.q1) }
    }
}

/// One linear condition `sum_i (eps_coeff_i eps_i + eta_coeff_i eta_i) = 0`.
#[derive(Debug, Clone)]
pub struct ConstraintRow {
    pub eps: Vec<C64>,
    pub eta: Vec<C64>,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct EncodingConstraints {
    pub d: usize,
    pub rows: Vec<ConstraintRow>,
}

impl EncodingConstraints {
    pub fn empty(d: usize) -> Self {
        EncodingConstraints { d, rows: Vec::new() }
    }

    /// Add a protection row from the decoding-region part of a Heisenberg
    /// mode (weights over local slots 1..D). The epsilon condition pairs
    /// slot i with site N-i+1, hence the reversal; the eta condition is
    /// its complex conjugate.
    pub fn push_mode_rows(&mut self, decoding_part: &[C64], label: &str) {
        assert_eq!(decoding_part.len(), self.d);
        let mut reversed = decoding_part.to_vec();
        reversed.reverse();
        let conj: Vec<C64> = reversed.iter().map(|z| z.conj()).collect();
        self.rows.push(ConstraintRow {
            eps: reversed,
            eta: vec![C64::ZERO; self.d],
            label: format!("{label}/eps"),
        });
        self.rows.push(ConstraintRow {
            eps: vec![C64::ZERO; self.d],
            eta: conj,
            label: format!("{label}/eta"),
        });
    }

    /// Add a bare epsilon row (already in slot order). Probe-derived
    /// constraints use this: the probing procedure only justifies the
    /// creation-side conditions.
    pub fn push_eps_row(&mut self, row: Vec<C64>, label: &str) {
        assert_eq!(row.len(), self.d);
        self.rows.push(ConstraintRow {
            eps: row,
            eta: vec![C64::ZERO; self.d],
            label: label.to_string(),
        });
    }

    /// Rows that actually constrain an eta = 0 ansatz.
    fn eps_matrix(&self) -> CMat {
        let active: Vec<&ConstraintRow> = self
            .rows
            .iter()
            .filter(|r| r.eps.iter().any(|z| z.norm() > 0.0))
            .collect();
        CMat::from_fn(active.len(), self.d, |i, j| active[i].eps[j])
    }

    fn full_matrix(&self) -> CMat {
        CMat::from_fn(self.rows.len(), 2 * self.d, |i, j| {
            if j < self.d {
                self.rows[i].eps[j]
            } else {
                self.rows[i].eta[j - self.d]
            }
        })
    }
}

/// Assemble the anticommutator constraints for a list of errors: one
/// epsilon row and one eta row per (affected site, action time) pair.
pub fn assemble_constraints(
    spec: &ChainSpec,
    errors: &[SystematicError],
    d: usize,
) -> Result<EncodingConstraints> {
    if d < 2 || d > spec.n_sites {
        return Err(Error::invalid(format!(
            "encoding region size {d} out of range 2..={}",
            spec.n_sites
        )));
    }
    let props = crate::chain::Propagators::new(spec);
    let mut constraints = EncodingConstraints::empty(d);
    for (e_idx, error) in errors.iter().enumerate() {
        let sites: BTreeSet<usize> = error.strings.iter().flat_map(|s| s.sites()).collect();
        for &site in &sites {
            let mode = heisenberg_mode_with(&props, spec, site, error.action_time, d)?;
            constraints.push_mode_rows(
                &mode.decoding_part,
                &format!("err{e_idx}/site{site}@t={:.6}", error.action_time),
            );
        }
    }
    Ok(constraints)
}

/// Solve for a protected pair in the constraint null space.
///
/// With `eta_allowed = false` the eta components are pinned to zero and
/// two orthonormal null vectors are returned directly. Otherwise an
/// isotropic plane of the bilinear form is constructed inside the null
/// space. Fails with [`Error::InsufficientRegion`] when the null space is
/// too small either way; the caller owns any D-increment retry policy.
pub fn solve_encoding(
    constraints: &EncodingConstraints,
    d: usize,
    eta_allowed: bool,
) -> Result<EncodingPair> {
    if constraints.d != d {
        return Err(Error::invalid("constraint matrix was assembled for a different D"));
    }
    let pair = if !eta_allowed {
        let ns = linalg::null_space(&constraints.eps_matrix(), NULL_SPACE_TOL);
        if ns.len() < 2 {
            return Err(Error::InsufficientRegion { d, nullity: ns.len(), needed: 2 });
        }
        let zero = vec![C64::ZERO; d];
        EncodingPair {
            d,
            q0: EncodingMode { epsilon: ns[0].iter().cloned().collect(), eta: zero.clone() },
            q1: EncodingMode { epsilon: ns[1].iter().cloned().collect(), eta: zero },
        }
    } else {
        let ns = linalg::null_space(&constraints.full_matrix(), NULL_SPACE_TOL);
        let (v0, v1) = isotropic_pair(&ns, d)
            .ok_or(Error::InsufficientRegion { d, nullity: ns.len(), needed: 4 })?;
        let split = |v: &CVec| EncodingMode {
            epsilon: (0..d).map(|i| v[i]).collect(),
            eta: (0..d).map(|i| v[d + i]).collect(),
        };
        EncodingPair { d, q0: split(&v0), q1: split(&v1) }
    };

    // Certify every pair invariant before handing the encoding out.
    if pair.hermitian_residual() > 1e-10 {
        return Err(Error::InconsistentPair(format!(
            "orthonormality residual {:.3e}",
            pair.hermitian_residual()
        )));
    }
    if pair.bilinear_residual() > 1e-10 {
        return Err(Error::InconsistentPair(format!(
            "isotropy residual {:.3e}",
            pair.bilinear_residual()
        )));
    }
    let cres = pair.constraint_residual(constraints);
    if cres > 1e-9 {
        return Err(Error::InconsistentPair(format!("constraint residual {cres:.3e}")));
    }
    Ok(pair)
}

/// Symmetric bilinear form `B(v, w) = sum_i (v_eps w_eta + v_eta w_eps)`
/// on stacked (eps, eta) vectors.
fn bilinear(v: &CVec, w: &CVec, d: usize) -> C64 {
    (0..d).map(|i| v[i] * w[d + i] + v[d + i] * w[i]).sum()
}

/// An isotropic vector within span{a, b}: solve the complex quadratic
/// `B(a + c b, a + c b) = 0`. Always solvable unless the form is nonzero
/// only on `a`, in which case `b` itself is isotropic.
fn isotropic_in_plane(a: &CVec, b: &CVec, d: usize) -> CVec {
    let saa = bilinear(a, a, d);
    let sab = bilinear(a, b, d);
    let sbb = bilinear(b, b, d);
    let v = if sbb.norm() > 1e-13 {
        let disc = (sab * sab - saa * sbb).sqrt();
        let c1 = (-sab + disc) / sbb;
        let c2 = (-sab - disc) / sbb;
        // Prefer the smaller-coefficient root for conditioning.
        let c = if c1.norm() <= c2.norm() { c1 } else { c2 };
        a + b * c
    } else if sab.norm() > 1e-13 {
        a + b * (-saa / (sab * 2.0))
    } else if saa.norm() > 1e-13 {
        b.clone()
    } else {
        a.clone()
    };
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Two Hermitian-orthonormal vectors spanning a totally isotropic plane of
/// the bilinear form inside the given null-space basis, or None when the
/// space is too small.
fn isotropic_pair(basis: &[CVec], d: usize) -> Option<(CVec, CVec)> {
    if basis.len() < 2 {
        return None;
    }
    // All-zero restriction (e.g. pure-eps null spaces): any two vectors do.
    let degenerate = basis
        .iter()
        .all(|v| basis.iter().all(|w| bilinear(v, w, d).norm() < 1e-12));
    if degenerate {
        return Some((basis[0].clone(), basis[1].clone()));
    }
    let v1 = isotropic_in_plane(&basis[0], &basis[1], d);
    if bilinear(&v1, &v1, d).norm() > 1e-10 {
        return None;
    }
    // Restrict to vectors that are B-orthogonal to v1 and Hermitian-
    // orthogonal to it, then find a second isotropic vector there.
    let dim = 2 * d;
    let mut candidates: Vec<CVec> = Vec::new();
    let functional: Vec<C64> = basis.iter().map(|b| bilinear(&v1, b, d)).collect();
    let f_mat = CMat::from_fn(1, basis.len(), |_, j| functional[j]);
    for coeffs in linalg::null_space(&f_mat, 1e-12) {
        let mut w = CVec::zeros(dim);
        for (j, b) in basis.iter().enumerate() {
            w += b * coeffs[j];
        }
        let overlap = v1.dotc(&w);
        w -= &v1 * overlap;
        if w.norm() > 1e-9 {
            let n = w.norm();
            candidates.push(w / C64::new(n, 0.0));
        }
    }
    let v2 = match candidates.len() {
        0 => return None,
        1 => {
            let only = candidates.into_iter().next().unwrap();
            if bilinear(&only, &only, d).norm() > 1e-10 {
                return None;
            }
            only
        }
        _ => isotropic_in_plane(&candidates[0], &candidates[1], d),
    };
    if bilinear(&v2, &v2, d).norm() > 1e-10 || bilinear(&v1, &v2, d).norm() > 1e-10 {
        return None;
    }
    // Hermitian Gram-Schmidt inside the isotropic plane.
    let mut v2 = v2;
    let overlap = v1.dotc(&v2);
    v2 -= &v1 * overlap;
    let n = v2.norm();
    if n < 1e-9 {
        return None;
    }
    Some((v1, v2 / C64::new(n, 0.0)))
}

/// Dense 2^D matrix of the lowering operator `q_a` on the local decoding
/// register.
pub fn mode_lowering_matrix(mode: &EncodingMode) -> CMat {
    let d = mode.d();
    let dim = 1usize << d;
    let (eps_local, eta_local) = mode.local_raising_coeffs();
    let mut m = CMat::zeros(dim, dim);
    for col in 0..dim {
        let basis = PureState::basis_state(d, col);
        let mut out = basis.zero_like();
        for j in 1..=d {
            let ce = eps_local[j - 1].conj();
            if ce != C64::ZERO {
                out = out.add(&fock::apply_annihilate(&basis, j).unwrap().scale(ce));
            }
            let ch = eta_local[j - 1].conj();
            if ch != C64::ZERO {
                out = out.add(&fock::apply_create(&basis, j).unwrap().scale(ch));
            }
        }
        for row in 0..dim {
            m[(row, col)] = out.amplitude(row);
        }
    }
    m
}

/// Apply the raising operator `q_a^†` to a local decoding-register state.
pub fn apply_mode_raising(mode: &EncodingMode, state: &PureState) -> PureState {
    let d = mode.d();
    let (eps_local, eta_local) = mode.local_raising_coeffs();
    let mut out = state.zero_like();
    for j in 1..=d {
        if eps_local[j - 1] != C64::ZERO {
            out = out.add(&fock::apply_create(state, j).unwrap().scale(eps_local[j - 1]));
        }
        if eta_local[j - 1] != C64::ZERO {
            out = out.add(&fock::apply_annihilate(state, j).unwrap().scale(eta_local[j - 1]));
        }
    }
    out
}

/// All kernel states of the pair (solutions of `q_a |psi> = 0`), as a
/// deterministic orthonormal basis: the kernel projection of each
/// computational basis state, Gram-Schmidt kept in lexicographic order.
pub fn vacuum_kernel(pair: &EncodingPair) -> Result<Vec<PureState>> {
    let d = pair.d;
    let dim = 1usize << d;
    let m0 = mode_lowering_matrix(&pair.q0);
    let m1 = mode_lowering_matrix(&pair.q1);
    let mut stacked = CMat::zeros(2 * dim, dim);
    stacked.rows_mut(0, dim).copy_from(&m0);
    stacked.rows_mut(dim, dim).copy_from(&m1);
    let raw = linalg::null_space(&stacked, KERNEL_TOL);
    if raw.is_empty() {
        return Err(Error::InconsistentPair(
            "the mode pair annihilates no state".into(),
        ));
    }
    // Lexicographic re-pivot for reproducibility.
    let mut basis: Vec<CVec> = Vec::new();
    for idx in 0..dim {
        if basis.len() == raw.len() {
            break;
        }
        let e = CVec::from_fn(dim, |i, _| if i == idx { C64::ONE } else { C64::ZERO });
        let mut p = CVec::zeros(dim);
        for k in &raw {
            p += k * k.dotc(&e);
        }
        for b in &basis {
            let overlap = b.dotc(&p);
            p -= b * overlap;
        }
        if p.norm() > 1e-6 {
            let n = p.norm();
            basis.push(linalg::canonical_phase(&(p / C64::new(n, 0.0))));
        }
    }
    Ok(basis
        .into_iter()
        .map(|v| PureState::from_vector(d, &v))
        .collect())
}

/// The canonical vacuum-like state (first kernel basis vector) plus the
/// kernel dimension, which is 2^{D-2} for a consistent pair.
pub fn vacuum_state(pair: &EncodingPair) -> Result<(PureState, usize)> {
    let kernel = vacuum_kernel(pair)?;
    let dim = kernel.len();
    Ok((kernel.into_iter().next().unwrap(), dim))
}

/// Build the encoded initial state
/// `psi_I = (alpha Q_0^† + beta Q_1^†) psi_0`, where `psi_0` back-evolves
/// the complement-tensor-vacuum output target. Defaults to the canonical
/// kernel vector; see [`build_initial_state_with_vacuum`] to pick another.
pub fn build_initial_state(
    alpha: C64,
    beta: C64,
    pair: &EncodingPair,
    spec: &ChainSpec,
    complement: Option<&PureState>,
) -> Result<PureState> {
    let dressed = pair.dressed(spec.mode_phase()?);
    let (vac, _) = vacuum_state(&dressed)?;
    build_initial_state_with_vacuum(alpha, beta, pair, spec, complement, &vac)
}

/// As [`build_initial_state`] with an explicit kernel state on the
/// decoding register (must be annihilated by the dressed modes).
pub fn build_initial_state_with_vacuum(
    alpha: C64,
    beta: C64,
    pair: &EncodingPair,
    spec: &ChainSpec,
    complement: Option<&PureState>,
    vacuum: &PureState,
) -> Result<PureState> {
    if (alpha.norm_sqr() + beta.norm_sqr() - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("encoded amplitudes must satisfy |alpha|^2 + |beta|^2 = 1"));
    }
    let n = spec.n_sites;
    let d = pair.d;
    if d > n {
        return Err(Error::invalid("encoding region larger than the chain"));
    }
    let d_bar = n - d;
    if vacuum.n_sites() != d {
        return Err(Error::invalid("vacuum state dimension does not match D"));
    }
    let default_complement;
    let complement = match complement {
        Some(c) => {
            if c.n_sites() != d_bar {
                return Err(Error::invalid(format!(
                    "complement state must cover {d_bar} sites"
                )));
            }
            c
        }
        None => {
            default_complement = PureState::vacuum(d_bar);
            &default_complement
        }
    };

    let fields_zero = spec.fields.iter().all(|&b| b == 0.0);
    let complement_is_vacuum = complement.amplitude(0) == C64::ONE
        && complement.amplitudes().iter().skip(1).all(|z| *z == C64::ZERO);
    let vacuum_is_empty = vacuum.amplitude(0).norm() > 1.0 - 1e-12;

    // psi_0 = U(t_f)^† (complement ⊗ vacuum); for the all-empty target on a
    // field-free chain that is the register vacuum exactly.
    let psi_0 = if pair.eta_is_zero() && complement_is_vacuum && vacuum_is_empty && fields_zero {
        PureState::vacuum(n)
    } else {
        let psi_out = PureState::tensor(complement, vacuum);
        fock::evolve(&psi_out, spec, -spec.transfer_time)
    };

    // Q_a^† acts on the encoding region with the undressed coefficients.
    let mut psi = PureState::vacuum(n).zero_like();
    for (amp, mode) in [(alpha, &pair.q0), (beta, &pair.q1)] {
        if amp == C64::ZERO {
            continue;
        }
        let mut term = psi_0.zero_like();
        for i in 1..=d {
            let eps = mode.epsilon[i - 1];
            if eps != C64::ZERO {
                term = term.add(&fock::apply_create(&psi_0, i)?.scale(eps));
            }
            let eta = mode.eta[i - 1];
            if eta != C64::ZERO {
                term = term.add(&fock::apply_annihilate(&psi_0, i)?.scale(eta));
            }
        }
        psi = psi.add(&term.scale(amp));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InconsistentPair(format!(
            "encoded state norm {norm:.12} deviates from 1; the kernel state \
             is not annihilated by the modes"
        )));
    }
    Ok(psi.normalize()?.0)
}

/// Report from the two-qubit mirror encoding run.
#[derive(Debug, Clone, Serialize)]
pub struct MirrorEncodeReport {
    /// Fidelity of the (N-1, N) reduced state with the dual-rail target.
    pub fidelity: f64,
    /// Purity of that reduced state; 1 means the cut is separable.
    pub purity: f64,
    /// Recovered qubit amplitudes (alpha from site N, beta from site N-1),
    /// phase-normalized.
    #[serde(with = "crate::serial::c64_pair")]
    pub recovered_alpha: C64,
    #[serde(with = "crate::serial::c64_pair")]
    pub recovered_beta: C64,
    /// Population outside the dual-rail subspace of the last two sites.
    pub leakage: f64,
}

/// The two-qubit boundary encoding: information rides on
/// `(alpha a_1^† + beta a_2^†)|00>` while sites 3..N hold an arbitrary
/// state; after transfer the qubit is read from sites (N-1, N) with alpha
/// on N and beta on N-1, independent of the interior.
pub fn mirror_two_qubit_encode(
    alpha: C64,
    beta: C64,
    spec: &ChainSpec,
    interior: &PureState,
) -> Result<MirrorEncodeReport> {
    let n = spec.n_sites;
    if (alpha.norm_sqr() + beta.norm_sqr() - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("encoded amplitudes must satisfy |alpha|^2 + |beta|^2 = 1"));
    }
    if interior.n_sites() != n - 2 {
        return Err(Error::invalid(format!(
            "interior state must cover sites 3..{n} ({} sites)",
            n - 2
        )));
    }
    let mut pair_amps = vec![C64::ZERO; 4];
    pair_amps[0b01] = alpha; // a_1^† |00>
    pair_amps[0b10] = beta; // a_2^† |00>
    let pair = PureState::from_amplitudes(2, pair_amps)?;
    let psi_i = PureState::tensor(&pair, interior);
    let psi_f = fock::evolve(&psi_i, spec, spec.transfer_time);

    let rho = fock::reduced_density(&psi_f, &[n - 1, n])?;
    let purity = rho.purity();
    // Dual-rail target on local bits (site N-1 -> bit 0, site N -> bit 1).
    let chi = CVec::from_vec(vec![C64::ZERO, beta, alpha, C64::ZERO]);
    let fidelity = (chi.adjoint() * &rho.entries * &chi)[(0, 0)].re;

    let eig = rho.entries.clone().symmetric_eigen();
    let top = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let v = linalg::canonical_phase(&eig.eigenvectors.column(top).into_owned());
    let leakage = v[0].norm_sqr() + v[3].norm_sqr();
    Ok(MirrorEncodeReport {
        fidelity,
        purity,
        recovered_alpha: v[2],
        recovered_beta: v[1],
        leakage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::errmodel::{make_pauli_z_error, make_phase_error};
    use approx::assert_abs_diff_eq;

    fn haar_qubit(seed: u64) -> (C64, C64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let b = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        (a / norm, b / norm)
    }

    #[test]
    fn unconstrained_solve_recovers_the_two_qubit_encoding() {
        let constraints = EncodingConstraints::empty(2);
        let pair = solve_encoding(&constraints, 2, false).unwrap();
        assert!((pair.q0.epsilon[0] - C64::ONE).norm() < 1e-12);
        assert!((pair.q1.epsilon[1] - C64::ONE).norm() < 1e-12);
        assert!(pair.eta_is_zero());
    }

    #[test]
    fn single_site_error_rows_and_solution_at_d3() {
        let spec = ChainSpec::uniform_pst(10).unwrap();
        let err = make_pauli_z_error(5, spec.transfer_time / 3.0);
        let constraints = assemble_constraints(&spec, &[err], 3).unwrap();
        assert_eq!(constraints.rows.len(), 2);
        let pair = solve_encoding(&constraints, 3, false).unwrap();
        assert!(pair.hermitian_residual() < 1e-10);
        assert!(pair.bilinear_residual() < 1e-12);
        assert!(pair.constraint_residual(&constraints) < 1e-10);
    }

    #[test]
    fn constraint_rows_at_transfer_time_are_one_hot() {
        let spec = ChainSpec::uniform_pst(8).unwrap();
        let err = make_pauli_z_error(7, spec.transfer_time);
        let constraints = assemble_constraints(&spec, &[err], 3).unwrap();
        // Site 7 mirrors to slot N - i + 1 = 7 => i = 2.
        let eps_row = &constraints.rows[0].eps;
        assert!((eps_row[1] - C64::ONE).norm() < 1e-12);
        assert!(eps_row[0].norm() < 1e-12 && eps_row[2].norm() < 1e-12);
    }

    #[test]
    fn insufficient_region_is_reported_at_n_bar_plus_one() {
        let spec = ChainSpec::uniform_pst(10).unwrap();
        let t = spec.transfer_time / 3.0;
        let err = crate::errmodel::SystematicError::new(
            t,
            vec![crate::errmodel::ErrorString::new(C64::ONE, vec![4], vec![6])],
        )
        .unwrap();
        let constraints = assemble_constraints(&spec, &[err], 3).unwrap();
        match solve_encoding(&constraints, 3, false) {
            Err(Error::InsufficientRegion { d, nullity, .. }) => {
                assert_eq!(d, 3);
                assert_eq!(nullity, 1);
            }
            other => panic!("expected insufficient region, got {other:?}"),
        }
    }

    #[test]
    fn anticommutators_with_constrained_modes_vanish_densely() {
        let spec = ChainSpec::uniform_pst(10).unwrap();
        let t = spec.transfer_time / 3.0;
        let err = make_pauli_z_error(5, t);
        let d = 3;
        let constraints = assemble_constraints(&spec, &[err], d).unwrap();
        let pair = solve_encoding(&constraints, d, false).unwrap();
        let mode = crate::errmodel::heisenberg_mode(&spec, 5, t, d).unwrap();

        // F_5 on the local register and the raising matrices of both modes.
        let dim = 1usize << d;
        let mut f = CMat::zeros(dim, dim);
        for (j, coeff) in mode.decoding_part.iter().enumerate() {
            f += crate::oracle::dense_jw_single(d, j + 1, false).unwrap().entries * *coeff;
        }
        for m in [&pair.q0, &pair.q1] {
            let q_raise = mode_lowering_matrix(m).adjoint();
            let anti = &q_raise * &f + &f * &q_raise;
            assert!(crate::linalg::max_abs(&anti) < 1e-10);
            // eta = 0 makes the daggered anticommutator vanish identically.
            let anti_dag = &q_raise * f.adjoint() + f.adjoint() * &q_raise;
            assert!(crate::linalg::max_abs(&anti_dag) < 1e-12);
        }
    }

    #[test]
    fn kernel_dimension_is_two_to_the_d_minus_two() {
        for d in 2..=5usize {
            let constraints = EncodingConstraints::empty(d);
            let pair = solve_encoding(&constraints, d, false).unwrap();
            let (vac, dim) = vacuum_state(&pair).unwrap();
            assert_eq!(dim, 1 << (d - 2), "kernel dimension at D={d}");
            // eta = 0: the empty register is annihilated, and the
            // lexicographic pivot selects it first.
            assert!((vac.amplitude(0) - C64::ONE).norm() < 1e-10);
        }
    }

    #[test]
    fn trivial_pair_kernel_is_the_empty_state_only() {
        let constraints = EncodingConstraints::empty(2);
        let pair = solve_encoding(&constraints, 2, false).unwrap();
        let kernel = vacuum_kernel(&pair).unwrap();
        assert_eq!(kernel.len(), 1);
        assert!((kernel[0].amplitude(0) - C64::ONE).norm() < 1e-12);
    }

    #[test]
    fn eta_bearing_pair_annihilates_its_kernel_states() {
        // Constrain against a mid-chain error with eta free so the solver
        // must walk the isotropic route.
        let spec = ChainSpec::uniform_pst(8).unwrap();
        let err = make_phase_error(4, 1.1, spec.transfer_time / 4.0);
        let d = 4;
        let constraints = assemble_constraints(&spec, &[err], d).unwrap();
        let pair = solve_encoding(&constraints, d, true).unwrap();
        assert!(pair.hermitian_residual() < 1e-10);
        assert!(pair.bilinear_residual() < 1e-10);

        let kernel = vacuum_kernel(&pair).unwrap();
        assert_eq!(kernel.len(), 1 << (d - 2));
        let m0 = mode_lowering_matrix(&pair.q0);
        let m1 = mode_lowering_matrix(&pair.q1);
        for psi in &kernel {
            let v = psi.as_vector();
            assert!((&m0 * &v).norm() < 1e-10);
            assert!((&m1 * &v).norm() < 1e-10);
        }
    }

    #[test]
    fn initial_state_for_eta_zero_lives_on_the_boundary_sector() {
        let spec = ChainSpec::uniform_pst(8).unwrap();
        let constraints = EncodingConstraints::empty(3);
        let pair = solve_encoding(&constraints, 3, false).unwrap();
        let psi = build_initial_state(C64::ONE, C64::ZERO, &pair, &spec, None).unwrap();
        let weights = psi.sector_weights();
        assert_abs_diff_eq!(weights[1], 1.0, epsilon = 1e-12);
        for idx in 0..(1usize << 8) {
            if psi.amplitude(idx).norm() > 1e-12 {
                assert!(idx.count_ones() == 1 && idx < 8, "support outside sites 1..3");
            }
        }
    }

    #[test]
    fn logical_zero_and_one_are_orthogonal() {
        let spec = ChainSpec::uniform_pst(8).unwrap();
        let err = make_pauli_z_error(4, spec.transfer_time / 3.0);
        let constraints = assemble_constraints(&spec, &[err], 3).unwrap();
        let pair = solve_encoding(&constraints, 3, false).unwrap();
        let zero = build_initial_state(C64::ONE, C64::ZERO, &pair, &spec, None).unwrap();
        let one = build_initial_state(C64::ZERO, C64::ONE, &pair, &spec, None).unwrap();
        assert!(zero.inner(&one).norm() < 1e-10);
    }

    #[test]
    fn general_eta_initial_state_is_annihilated_by_transferred_modes() {
        let spec = ChainSpec::uniform_pst(8).unwrap();
        let err = make_phase_error(4, 0.9, spec.transfer_time / 4.0);
        let d = 4;
        let constraints = assemble_constraints(&spec, &[err], d).unwrap();
        let pair = solve_encoding(&constraints, d, true).unwrap();
        let dressed = pair.dressed(spec.mode_phase().unwrap());
        let (vac, _) = vacuum_state(&dressed).unwrap();
        let psi0 = {
            let psi_out = PureState::tensor(&PureState::vacuum(4), &vac);
            fock::evolve(&psi_out, &spec, -spec.transfer_time)
        };
        // Q_a psi_0 = 0 with the undressed coefficients.
        for mode in [&pair.q0, &pair.q1] {
            let mut out = psi0.zero_like();
            for i in 1..=d {
                let eps = mode.epsilon[i - 1].conj();
                if eps != C64::ZERO {
                    out = out.add(&fock::apply_annihilate(&psi0, i).unwrap().scale(eps));
                }
                let eta = mode.eta[i - 1].conj();
                if eta != C64::ZERO {
                    out = out.add(&fock::apply_create(&psi0, i).unwrap().scale(eta));
                }
            }
            assert!(out.norm() < 1e-9, "Q_a psi_0 residual {}", out.norm());
        }
        // And the encoded state is normalized without rescaling.
        let (alpha, beta) = haar_qubit(5);
        let psi = build_initial_state(alpha, beta, &pair, &spec, None).unwrap();
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn rejects_unnormalized_amplitudes() {
        let spec = ChainSpec::uniform_pst(6).unwrap();
        let constraints = EncodingConstraints::empty(2);
        let pair = solve_encoding(&constraints, 2, false).unwrap();
        assert!(build_initial_state(C64::ONE, C64::ONE, &pair, &spec, None).is_err());
    }

    #[test]
    fn mirror_encode_plain_interior_recovers_exactly() {
        let spec = ChainSpec::uniform_pst(6).unwrap();
        let (alpha, beta) = haar_qubit(1);
        let interior = PureState::vacuum(4);
        let report = mirror_two_qubit_encode(alpha, beta, &spec, &interior).unwrap();
        assert!(report.fidelity > 1.0 - 1e-10);
        assert!(report.purity > 1.0 - 1e-10);
        assert!(report.leakage < 1e-10);
    }

    #[test]
    fn mirror_encode_random_interior_keeps_fidelity() {
        use rand::{Rng, SeedableRng};
        let spec = ChainSpec::uniform_pst(8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let amps: Vec<C64> = (0..(1usize << 6))
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let interior = PureState::from_amplitudes(6, amps)
            .unwrap()
            .normalize()
            .unwrap()
            .0;
        let (alpha, beta) = haar_qubit(2);
        let report = mirror_two_qubit_encode(alpha, beta, &spec, &interior).unwrap();
        assert!(report.fidelity > 1.0 - 1e-10, "fidelity {}", report.fidelity);
        assert!(report.purity > 1.0 - 1e-10);
    }

    #[test]
    fn mirror_encode_branch_phase_for_filled_interior() {
        // Interior a_3^† a_4^† |00> on N=4: weight 2, so the predicted
        // branch sign is (-1)^(2+1) = -1 after the per-fermion transfer
        // phases are divided out.
        let spec = ChainSpec::uniform_pst(4).unwrap();
        let interior = PureState::basis_state(2, 0b11);
        let psi_i = PureState::tensor(
            &PureState::from_amplitudes(2, vec![C64::ZERO, C64::ONE, C64::ZERO, C64::ZERO])
                .unwrap(),
            &interior,
        );
        let psi_f = fock::evolve(&psi_i, &spec, spec.transfer_time);
        // Expected support: sites 1,2 filled (mirror of 3,4), qubit on site 4.
        let idx = 0b1011; // sites 1,2,4
        let phi = spec.phase().unwrap();
        let per_fermion = C64::from_polar(1.0, 3.0 * phi);
        let ratio = psi_f.amplitude(idx) / per_fermion;
        assert!((ratio - C64::new(-1.0, 0.0)).norm() < 1e-10, "ratio {ratio}");
    }
}

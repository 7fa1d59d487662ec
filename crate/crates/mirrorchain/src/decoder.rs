//! Logical vector sets on the decoding region, their orthogonalization,
//! the decoding unitary, and the end-to-end recovery pipeline.
//!
//! At the decoding time the register state is a sum over error branches:
//! for every string of every error and every split of that string across
//! the complement/decoding cut, a decoding-region vector
//! `P q_a^† |psi>` appears, where `P` multiplies the decoding-region
//! parts of the string's evolved modes and `psi` is the mode-pair kernel
//! state. Because constrained modes anticommute with every such factor,
//! the 0- and 1-branch vectors have equal Gram matrices and vanishing
//! cross overlaps; orthogonalizing the 0-set and replaying the identical
//! elimination coefficients on the 1-set therefore yields two jointly
//! orthonormal families, which the decoding unitary maps onto
//! computational labels with the logical qubit on the last site.
//!
//! The coefficient replay is mandatory, not an optimization: independent
//! orthogonalizations may differ on degenerate subspaces and break the
//! pairing that makes the decoder linear over branches.

use crate::chain::{ChainSpec, Propagators};
use crate::encoder::{self, EncodingPair};
use crate::errmodel::{self, SystematicError};
use crate::error::{Error, Result};
use crate::fock::{self, PureState};
use crate::linalg::{self, CMat, CVec};
use num_complex::Complex64 as C64;
use serde::Serialize;

/// Default relative tolerance for dropping dependent vectors.
pub const GS_DEFAULT_TOL: f64 = 1e-8;
/// Guard against runaway branch enumeration for pathological error lists.
const MAX_BRANCHES: usize = 1 << 16;

/// Which factor of an error string acts on the decoding region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ModeFactor {
    site: usize,
    dagger: bool,
}

/// Provenance of one branch: per error, the chosen string and the mask
/// selecting which factors landed on the decoding region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchFactor {
    pub error: usize,
    pub string: usize,
    pub mask: u32,
}

pub type BranchLabel = Vec<BranchFactor>;

#[derive(Debug, Clone)]
pub struct LabeledVector {
    pub label: BranchLabel,
    pub vector: CVec,
}

/// The two logical vector families over the 2^D decoding space, in
/// matching branch order.
#[derive(Debug, Clone)]
pub struct LogicalVectors {
    pub d: usize,
    /// Kernel state of the dressed pair that the branches act on.
    pub vacuum: PureState,
    pub z0: Vec<LabeledVector>,
    pub z1: Vec<LabeledVector>,
}

impl LogicalVectors {
    /// Largest overlap between a 0-vector and a 1-vector; zero when the
    /// encoding constraints hold.
    pub fn gram_cross_norm(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.z0 {
            for b in &self.z1 {
                worst = worst.max(a.vector.dotc(&b.vector).norm());
            }
        }
        worst
    }

    /// Largest deviation between the two Gram matrices.
    pub fn gram_equality_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.z0.iter().enumerate() {
            for (j, b) in self.z0.iter().enumerate() {
                let g0 = a.vector.dotc(&b.vector);
                let g1 = self.z1[i].vector.dotc(&self.z1[j].vector);
                worst = worst.max((g0 - g1).norm());
            }
        }
        worst
    }

    pub fn zero_branches(&self) -> Vec<&BranchLabel> {
        self.z0
            .iter()
            .filter(|v| v.vector.norm() < 1e-12)
            .map(|v| &v.label)
            .collect()
    }
}

/// Enumerate every error branch on the decoding region and apply it to
/// both encoded mode states. Errors act at their own times; the decoding
/// parts of their modes are evaluated there.
pub fn build_logical_vectors(
    pair: &EncodingPair,
    errors: &[SystematicError],
    spec: &ChainSpec,
) -> Result<LogicalVectors> {
    let dressed = pair.dressed(spec.mode_phase()?);
    let (vacuum, _) = encoder::vacuum_state(&dressed)?;
    build_logical_vectors_with_vacuum(pair, errors, spec, &vacuum)
}

/// As [`build_logical_vectors`] with an explicit kernel state; any kernel
/// element yields an equivalent decoder.
pub fn build_logical_vectors_with_vacuum(
    pair: &EncodingPair,
    errors: &[SystematicError],
    spec: &ChainSpec,
    vacuum: &PureState,
) -> Result<LogicalVectors> {
    let d = pair.d;
    let phi = spec.mode_phase()?;
    let dressed = pair.dressed(phi);
    let vacuum = vacuum.clone();
    let base0 = encoder::apply_mode_raising(&dressed.q0, &vacuum);
    let base1 = encoder::apply_mode_raising(&dressed.q1, &vacuum);

    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| {
        errors[a]
            .action_time
            .partial_cmp(&errors[b].action_time)
            .unwrap()
    });

    let props = Propagators::new(spec);
    // Per (error, site): decoding-region coefficients of the evolved mode.
    let mut mode_coeffs: Vec<std::collections::BTreeMap<usize, Vec<C64>>> = Vec::new();
    for &e_idx in &order {
        let error = &errors[e_idx];
        let mut per_site = std::collections::BTreeMap::new();
        for s in &error.strings {
            for site in s.sites() {
                if !per_site.contains_key(&site) {
                    let mode =
                        errmodel::heisenberg_mode_with(&props, spec, site, error.action_time, d)?;
                    per_site.insert(site, mode.decoding_part);
                }
            }
        }
        mode_coeffs.push(per_site);
    }

    // Branch choices per error: (string index, mask, factors in written order).
    let mut per_error_choices: Vec<Vec<(usize, u32, Vec<ModeFactor>)>> = Vec::new();
    let mut total: usize = 1;
    for &e_idx in &order {
        let error = &errors[e_idx];
        let mut choices = Vec::new();
        for (s_idx, s) in error.strings.iter().enumerate() {
            let n_ops = s.len();
            for mask in 0..(1u32 << n_ops) {
                let mut factors = Vec::new();
                for (j, &site) in s.creators.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        factors.push(ModeFactor { site, dagger: true });
                    }
                }
                for (j, &site) in s.annihilators.iter().enumerate() {
                    if mask & (1 << (s.creators.len() + j)) != 0 {
                        factors.push(ModeFactor { site, dagger: false });
                    }
                }
                choices.push((s_idx, mask, factors));
            }
        }
        total = total.saturating_mul(choices.len());
        per_error_choices.push(choices);
    }
    if total > MAX_BRANCHES {
        return Err(Error::DecoderConstruction(format!(
            "error expansion has {total} branches, beyond the {MAX_BRANCHES} cap"
        )));
    }

    let mut z0 = Vec::with_capacity(total);
    let mut z1 = Vec::with_capacity(total);
    let mut stack: Vec<usize> = vec![0; per_error_choices.len()];
    loop {
        // Apply the chosen factors: earliest error first, and within a
        // string the rightmost written factor first.
        let mut v0 = base0.clone();
        let mut v1 = base1.clone();
        let mut label = BranchLabel::new();
        for (pos, &choice) in stack.iter().enumerate() {
            let (s_idx, mask, ref factors) = per_error_choices[pos][choice];
            label.push(BranchFactor { error: order[pos], string: s_idx, mask });
            for f in factors.iter().rev() {
                let coeffs = &mode_coeffs[pos][&f.site];
                v0 = apply_restricted_mode(&v0, coeffs, f.dagger)?;
                v1 = apply_restricted_mode(&v1, coeffs, f.dagger)?;
            }
        }
        z0.push(LabeledVector { label: label.clone(), vector: v0.as_vector() });
        z1.push(LabeledVector { label, vector: v1.as_vector() });

        // Next cartesian index.
        let mut pos = 0;
        loop {
            if pos == stack.len() {
                return Ok(LogicalVectors { d, vacuum, z0, z1 });
            }
            stack[pos] += 1;
            if stack[pos] < per_error_choices[pos].len() {
                break;
            }
            stack[pos] = 0;
            pos += 1;
        }
        if stack.is_empty() {
            return Ok(LogicalVectors { d, vacuum, z0, z1 });
        }
    }
}

/// Apply `F = sum_m c_m f_m` (or its adjoint) on the local decoding
/// register.
fn apply_restricted_mode(state: &PureState, coeffs: &[C64], dagger: bool) -> Result<PureState> {
    let mut out = state.zero_like();
    for (j, &cm) in coeffs.iter().enumerate() {
        if cm == C64::ZERO {
            continue;
        }
        let term = if dagger {
            fock::apply_create(state, j + 1)?.scale(cm.conj())
        } else {
            fock::apply_annihilate(state, j + 1)?.scale(cm)
        };
        out = out.add(&term);
    }
    Ok(out)
}

/// One step of the recorded orthogonalization.
#[derive(Debug, Clone)]
pub enum GsStep {
    /// Input was (numerically) zero.
    ZeroInput,
    /// Input was dependent on earlier kept vectors.
    Dependent,
    /// Kept: elimination coefficients against prior kept vectors, and the
    /// residual norm divided out.
    Kept { coeffs: Vec<C64>, norm: f64 },
}

#[derive(Debug, Clone)]
pub struct GramSchmidt {
    pub kept: Vec<CVec>,
    pub steps: Vec<GsStep>,
}

/// Modified Gram-Schmidt with re-orthogonalization, recording every
/// elimination coefficient so the identical sequence can be replayed on a
/// second vector family.
pub fn gram_schmidt(vectors: &[CVec], tol: f64) -> GramSchmidt {
    let max_norm = vectors.iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
    let mut kept: Vec<CVec> = Vec::new();
    let mut steps = Vec::with_capacity(vectors.len());
    for v in vectors {
        if v.norm() <= tol * max_norm {
            steps.push(GsStep::ZeroInput);
            continue;
        }
        let mut w = v.clone();
        let mut coeffs = vec![C64::ZERO; kept.len()];
        for _ in 0..2 {
            for (j, q) in kept.iter().enumerate() {
                let c = q.dotc(&w);
                w -= q * c;
                coeffs[j] += c;
            }
        }
        let norm = w.norm();
        if norm <= tol * max_norm {
            steps.push(GsStep::Dependent);
        } else {
            kept.push(w / C64::new(norm, 0.0));
            steps.push(GsStep::Kept { coeffs, norm });
        }
    }
    GramSchmidt { kept, steps }
}

impl GramSchmidt {
    /// Replay the recorded elimination on a second family (same length,
    /// same branch order). Equal Gram matrices guarantee the result is
    /// again orthonormal; that is checked by the caller, not here.
    pub fn replay(&self, vectors: &[CVec]) -> Result<Vec<CVec>> {
        if vectors.len() != self.steps.len() {
            return Err(Error::DecoderConstruction(
                "replay family does not match the recorded steps".into(),
            ));
        }
        let mut kept: Vec<CVec> = Vec::new();
        for (v, step) in vectors.iter().zip(&self.steps) {
            match step {
                GsStep::ZeroInput | GsStep::Dependent => {}
                GsStep::Kept { coeffs, norm } => {
                    let mut w = v.clone();
                    for (j, c) in coeffs.iter().enumerate() {
                        w -= &kept[j] * *c;
                    }
                    kept.push(w / C64::new(*norm, 0.0));
                }
            }
        }
        Ok(kept)
    }
}

/// The decoding unitary on the 2^D register of the decoding region.
#[derive(Debug, Clone)]
pub struct DecoderUnitary {
    pub d: usize,
    pub matrix: CMat,
    /// Retained orthogonalized vectors per logical value.
    pub z: usize,
    /// Kernel state the logical vectors were built over.
    pub vacuum: PureState,
    pub unitarity_residual: f64,
    pub gram_cross_norm: f64,
    pub gram_equality_residual: f64,
}

/// Orthogonalize the 0-family, replay on the 1-family, map the r-th
/// vectors to `|r> ⊗ |a>_N`, and complete to a unitary on the rest of the
/// space.
pub fn build_decoder(lv: &LogicalVectors, tol: f64) -> Result<DecoderUnitary> {
    let d = lv.d;
    let dim = 1usize << d;
    let half = dim / 2;
    let vectors0: Vec<CVec> = lv.z0.iter().map(|v| v.vector.clone()).collect();
    let vectors1: Vec<CVec> = lv.z1.iter().map(|v| v.vector.clone()).collect();
    let gs = gram_schmidt(&vectors0, tol);
    let kept1 = gs.replay(&vectors1)?;
    let z = gs.kept.len();
    if 2 * z > dim {
        return Err(Error::DecoderConstruction(format!(
            "2z = {} exceeds the decoding space dimension {dim}",
            2 * z
        )));
    }

    // Joint orthonormality of both families is what the replay must
    // deliver; a failure means an invariant was broken upstream.
    let mut all: Vec<CVec> = Vec::with_capacity(2 * z);
    all.extend(gs.kept.iter().cloned());
    all.extend(kept1.iter().cloned());
    let a = CMat::from_fn(dim, all.len(), |i, j| all[j][i]);
    let joint = linalg::unitarity_residual(&a);
    if joint > 1e-8 {
        return Err(Error::DecoderConstruction(format!(
            "replayed families are not jointly orthonormal (residual {joint:.3e})"
        )));
    }

    // Orthonormal basis of the complement, lexicographically pivoted.
    let mut complement: Vec<CVec> = Vec::new();
    for idx in 0..dim {
        if all.len() + complement.len() == dim {
            break;
        }
        let mut w = CVec::from_fn(dim, |i, _| if i == idx { C64::ONE } else { C64::ZERO });
        for _ in 0..2 {
            for q in all.iter().chain(complement.iter()) {
                let c = q.dotc(&w);
                w -= q * c;
            }
        }
        if w.norm() > 1e-6 {
            let n = w.norm();
            complement.push(w / C64::new(n, 0.0));
        }
    }
    if all.len() + complement.len() != dim {
        return Err(Error::DecoderConstruction(
            "failed to complete the decoder to a full basis".into(),
        ));
    }

    let mut matrix = CMat::zeros(dim, dim);
    let mut used_images: Vec<bool> = vec![false; dim];
    for (r, q) in gs.kept.iter().enumerate() {
        add_dyad(&mut matrix, r, q);
        used_images[r] = true;
    }
    for (r, q) in kept1.iter().enumerate() {
        add_dyad(&mut matrix, half + r, q);
        used_images[half + r] = true;
    }
    let free_images: Vec<usize> = (0..dim).filter(|&i| !used_images[i]).collect();
    for (c, q) in complement.iter().enumerate() {
        add_dyad(&mut matrix, free_images[c], q);
    }

    let unitarity_residual = linalg::unitarity_residual(&matrix);
    if unitarity_residual > 1e-10 {
        return Err(Error::DecoderConstruction(format!(
            "decoder unitarity residual {unitarity_residual:.3e}"
        )));
    }
    Ok(DecoderUnitary {
        d,
        matrix,
        z,
        vacuum: lv.vacuum.clone(),
        unitarity_residual,
        gram_cross_norm: lv.gram_cross_norm(),
        gram_equality_residual: lv.gram_equality_residual(),
    })
}

/// matrix += |image><q|
fn add_dyad(matrix: &mut CMat, image: usize, q: &CVec) {
    for col in 0..q.len() {
        matrix[(image, col)] += q[col].conj();
    }
}

/// Machine-readable outcome of one protocol run.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolReport {
    pub fidelity: f64,
    pub baseline_fidelity: f64,
    pub unitarity_residual: f64,
    pub gram_cross_norm: f64,
    pub z: usize,
    #[serde(rename = "D")]
    pub d: usize,
    /// Norm of the register state after all errors (1 when the combined
    /// error is trace preserving on this input).
    pub final_norm: f64,
    /// Purity of the site-N reduced state after decoding.
    pub site_purity: f64,
}

/// Run the full pipeline for one `(alpha, beta)`:
/// encode -> evolve through the timed errors -> decode -> read site N.
/// The baseline repeats the run with the plain one-site input, no
/// encoding or decoding, and only the transfer phase undone.
pub fn run_protocol(
    alpha: C64,
    beta: C64,
    spec: &ChainSpec,
    pair: &EncodingPair,
    errors: &[SystematicError],
    decoder: &DecoderUnitary,
) -> Result<ProtocolReport> {
    if decoder.d != pair.d {
        return Err(Error::invalid(format!(
            "decoder was built for D = {} but the pair has D = {}",
            decoder.d, pair.d
        )));
    }
    let psi_i =
        encoder::build_initial_state_with_vacuum(alpha, beta, pair, spec, None, &decoder.vacuum)?;
    let evolver = fock::SectorEvolver::new(spec);
    let psi_f = evolve_through_errors(&evolver, spec, &psi_i, errors)?;
    let final_norm = psi_f.norm();
    let decoded = fock::apply_unitary_contiguous(&psi_f, spec.n_sites - pair.d + 1, &decoder.matrix)?;
    let rho = fock::reduced_density(&decoded, &[spec.n_sites])?;
    let fidelity = fock::fidelity_to(&rho, (alpha, beta))?;
    let site_purity = rho.purity();
    let baseline_fidelity = baseline_run(&evolver, spec, alpha, beta, errors)?;
    Ok(ProtocolReport {
        fidelity,
        baseline_fidelity,
        unitarity_residual: decoder.unitarity_residual,
        gram_cross_norm: decoder.gram_cross_norm,
        z: decoder.z,
        d: decoder.d,
        final_norm,
        site_purity,
    })
}

/// Convex mixture of error branches: each branch is a full timed error
/// list run as a pure experiment; outputs are weight-combined before the
/// fidelity read. Weights must sum to 1.
pub fn run_protocol_mixture(
    alpha: C64,
    beta: C64,
    spec: &ChainSpec,
    pair: &EncodingPair,
    branches: &[(f64, Vec<SystematicError>)],
    decoder: &DecoderUnitary,
) -> Result<ProtocolReport> {
    if branches.is_empty() {
        return Err(Error::invalid("mixture needs at least one branch"));
    }
    let total: f64 = branches.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::invalid(format!("mixture weights sum to {total}, expected 1")));
    }
    let mut rho: Option<CMat> = None;
    let mut baseline = 0.0;
    let mut report = None;
    for (w, errs) in branches {
        let r = run_protocol(alpha, beta, spec, pair, errs, decoder)?;
        baseline += w * r.baseline_fidelity;
        let psi_i = encoder::build_initial_state_with_vacuum(
            alpha,
            beta,
            pair,
            spec,
            None,
            &decoder.vacuum,
        )?;
        let evolver = fock::SectorEvolver::new(spec);
        let psi_f = evolve_through_errors(&evolver, spec, &psi_i, errs)?;
        let decoded =
            fock::apply_unitary_contiguous(&psi_f, spec.n_sites - pair.d + 1, &decoder.matrix)?;
        let dm = fock::reduced_density(&decoded, &[spec.n_sites])?;
        let scaled = dm.entries * C64::new(*w, 0.0);
        rho = Some(match rho {
            None => scaled,
            Some(acc) => acc + scaled,
        });
        report = Some(r);
    }
    let rho = fock::DensityMatrix { region: vec![spec.n_sites], entries: rho.unwrap() };
    let fidelity = fock::fidelity_to(&rho, (alpha, beta))?;
    let mut report = report.unwrap();
    report.fidelity = fidelity;
    report.baseline_fidelity = baseline;
    report.site_purity = rho.purity();
    Ok(report)
}

pub use crate::errmodel::evolve_through_errors;

/// Plain transfer of `(alpha, beta)` on site 1 with the same errors, no
/// protection; the transfer phase is undone by a local rotation on site N
/// before the read-out.
fn baseline_run(
    evolver: &fock::SectorEvolver,
    spec: &ChainSpec,
    alpha: C64,
    beta: C64,
    errors: &[SystematicError],
) -> Result<f64> {
    let n = spec.n_sites;
    let mut amps = vec![C64::ZERO; 1 << n];
    amps[0] = alpha;
    amps[1] = beta;
    let psi = PureState::from_amplitudes(n, amps)?;
    let psi_f = evolve_through_errors(evolver, spec, &psi, errors)?;
    let phase_fix = CMat::from_row_slice(
        2,
        2,
        &[
            C64::ONE,
            C64::ZERO,
            C64::ZERO,
            C64::from_polar(1.0, -spec.mode_phase()?),
        ],
    );
    let fixed = fock::apply_unitary_contiguous(&psi_f, n, &phase_fix)?;
    let rho = fock::reduced_density(&fixed, &[n])?;
    fock::fidelity_to(&rho, (alpha, beta))
}

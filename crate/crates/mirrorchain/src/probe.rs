//! Error identification by probing: run the chain with two fixed initial
//! states, read the decoding-region density matrix, and reconstruct the
//! spans of the error modes that matter, without ever consulting the
//! error's analytic description.
//!
//! With the register started in the all-empty state, only all-creator
//! strings survive, and their decoding-region modes show up in the
//! one-excitation sector. With the first D sites filled, strings carrying
//! one surplus annihilator punch a hole into the transferred block, and
//! the hole modes show up in the (D-1)-excitation sector (possibly with
//! extra, harmless directions). Each reconstructed span vector lowers to
//! one encoder constraint row; redundancy is tolerated by design.
//!
//! Tomography is exact by default. A finite-shot mode simulates Pauli
//! basis measurements over an informationally complete setting set and
//! estimates the density matrix by linear inversion projected back onto
//! the positive cone; it exists to study estimator statistics, not
//! protocol correctness.

use crate::chain::ChainSpec;
use crate::encoder::EncodingConstraints;
use crate::errmodel::{evolve_through_errors, SystematicError};
use crate::error::{Error, Result};
use crate::fock::{self, DensityMatrix, PureState, SectorEvolver};
use crate::linalg::{c, kron, CMat, CVec};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use crate::linalg::principal_angles;

/// Default relative eigenvalue retention threshold for exact tomography.
pub const EIG_TOL_DEFAULT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Vacuum,
    Filled,
}

/// How the decoding-region density matrix is obtained.
#[derive(Debug, Clone, Copy)]
pub enum Tomography {
    Exact,
    /// Simulated Pauli-basis measurements, `shots` per setting.
    Sampled { shots: u64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct ProbeOptions {
    pub tomography: Tomography,
    /// Retained eigenvalues exceed this times the largest.
    pub eig_tol: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { tomography: Tomography::Exact, eig_tol: EIG_TOL_DEFAULT }
    }
}

/// Result of one probe experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub kind: ProbeKind,
    /// Excitation sector of the decoding region that was post-selected.
    pub sector: usize,
    /// Retained eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Reconstructed mode-coefficient vectors over the D decoding slots,
    /// orthonormal, one per retained eigenvalue.
    #[serde(with = "crate::serial::c64_vec_vec")]
    pub span: Vec<Vec<C64>>,
    /// Weight found in the post-selected sector.
    pub post_selection_weight: f64,
    /// Decoding-region density matrix the span was read from.
    #[serde(skip)]
    pub reduced: DensityMatrix,
    /// Weight per excitation sector of the decoding region; sums to 1.
    #[serde(skip)]
    pub sector_weights: Vec<f64>,
    /// Frobenius distance moved by the positivity projection (0 in exact
    /// mode).
    pub inversion_residual: f64,
}

impl ProbeReport {
    pub fn d(&self) -> usize {
        self.reduced.region.len()
    }

    pub fn span_dim(&self) -> usize {
        self.span.len()
    }
}

/// Probe with the all-empty register. Surviving branches put creator
/// modes into the one-excitation sector of the decoding region.
pub fn probe_with_vacuum(
    spec: &ChainSpec,
    errors: &[SystematicError],
    d: usize,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let initial = PureState::vacuum(spec.n_sites);
    probe_run(spec, errors, d, initial, ProbeKind::Vacuum, opts)
}

/// Probe with the first D sites filled. Surplus-annihilator branches put
/// hole modes into the (D-1)-excitation sector of the decoding region.
pub fn probe_with_filled(
    spec: &ChainSpec,
    errors: &[SystematicError],
    d: usize,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let n = spec.n_sites;
    if d > n {
        return Err(Error::invalid("decoding region larger than the chain"));
    }
    let filled = PureState::basis_state(n, (1usize << d) - 1);
    probe_run(spec, errors, d, filled, ProbeKind::Filled, opts)
}

fn probe_run(
    spec: &ChainSpec,
    errors: &[SystematicError],
    d: usize,
    initial: PureState,
    kind: ProbeKind,
    opts: &ProbeOptions,
) -> Result<ProbeReport> {
    let n = spec.n_sites;
    if d < 2 || d > n {
        return Err(Error::invalid(format!("decoding region size {d} out of range 2..={n}")));
    }
    spec.phase()?;
    let evolver = SectorEvolver::new(spec);
    let psi_f = evolve_through_errors(&evolver, spec, &initial, errors)?;
    let region: Vec<usize> = (n - d + 1..=n).collect();
    let (reduced, inversion_residual) = match opts.tomography {
        Tomography::Exact => (fock::reduced_density(&psi_f, &region)?, 0.0),
        Tomography::Sampled { shots, seed } => {
            sampled_tomography(&psi_f, &region, Some(shots), seed)?
        }
    };

    let dim = 1usize << d;
    let mut sector_weights = vec![0.0; d + 1];
    for idx in 0..dim {
        sector_weights[idx.count_ones() as usize] += reduced.entries[(idx, idx)].re;
    }

    let sector = match kind {
        ProbeKind::Vacuum => 1,
        ProbeKind::Filled => d - 1,
    };
    // Local basis index of slot j within the post-selected sector, and the
    // sign relating the basis state to the mode operator acting on the
    // probe's reference block.
    let slot_index = |j: usize| -> usize {
        match kind {
            ProbeKind::Vacuum => 1usize << (j - 1),
            ProbeKind::Filled => (dim - 1) ^ (1usize << (j - 1)),
        }
    };
    let slot_sign = |j: usize| -> f64 {
        match kind {
            ProbeKind::Vacuum => 1.0,
            // f_j on the filled block crosses j-1 occupied sites.
            ProbeKind::Filled => {
                if (j - 1) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        }
    };

    let block = CMat::from_fn(d, d, |r, col| {
        reduced.entries[(slot_index(r + 1), slot_index(col + 1))]
    });
    let post_selection_weight = block.diagonal().iter().map(|z| z.re).sum::<f64>();

    let mut eigenvalues = Vec::new();
    let mut span: Vec<Vec<C64>> = Vec::new();
    if post_selection_weight > 1e-12 {
        let eig = block.symmetric_eigen();
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        for i in order {
            let lambda = eig.eigenvalues[i];
            if lambda > opts.eig_tol * lambda_max && lambda > 0.0 {
                eigenvalues.push(lambda);
                let v: Vec<C64> = (0..d)
                    .map(|j| eig.eigenvectors[(j, i)] * slot_sign(j + 1))
                    .collect();
                span.push(v);
            }
        }
    }

    Ok(ProbeReport {
        kind,
        sector,
        eigenvalues,
        span,
        post_selection_weight,
        reduced,
        sector_weights,
        inversion_residual,
    })
}

/// Lower reconstructed spans to encoder constraint rows (creation-only
/// encodings). The vacuum probe sees conjugated mode rows, the filled
/// probe sees them directly; both reverse into the boundary-inward slot
/// order. Near-parallel rows are deduplicated.
pub fn spans_to_constraints(v0: &ProbeReport, v1: &ProbeReport) -> Result<EncodingConstraints> {
    if v0.d() != v1.d() {
        return Err(Error::invalid("probe reports cover different region sizes"));
    }
    if v0.kind != ProbeKind::Vacuum || v1.kind != ProbeKind::Filled {
        return Err(Error::invalid("expected one vacuum report and one filled report"));
    }
    let d = v0.d();
    let mut constraints = EncodingConstraints::empty(d);
    let mut kept: Vec<CVec> = Vec::new();
    let mut push = |coeffs: Vec<C64>, label: String, constraints: &mut EncodingConstraints| {
        let mut row = coeffs;
        row.reverse();
        let v = CVec::from_vec(row.clone());
        let norm = v.norm();
        if norm < 1e-12 {
            return;
        }
        for q in &kept {
            let overlap = q.dotc(&v);
            let q_sq = C64::new(q.norm() * q.norm(), 0.0);
            if (&v - q * (overlap / q_sq)).norm() < 1e-10 * norm {
                return;
            }
        }
        kept.push(v);
        constraints.push_eps_row(row, &label);
    };
    for (i, s) in v0.span.iter().enumerate() {
        let conj: Vec<C64> = s.iter().map(|z| z.conj()).collect();
        push(conj, format!("probe-vacuum/{i}"), &mut constraints);
    }
    for (i, s) in v1.span.iter().enumerate() {
        push(s.clone(), format!("probe-filled/{i}"), &mut constraints);
    }
    Ok(constraints)
}

/// The reduced analytic constraint set the probes are expected to cover
/// for all-empty-register protocols: every site of an all-creator string,
/// and the last annihilator of each single-surplus string.
pub fn reduced_analytic_constraints(
    spec: &ChainSpec,
    errors: &[SystematicError],
    d: usize,
) -> Result<EncodingConstraints> {
    let props = crate::chain::Propagators::new(spec);
    let mut constraints = EncodingConstraints::empty(d);
    for (e_idx, error) in errors.iter().enumerate() {
        let mut sites: Vec<usize> = Vec::new();
        for s in &error.strings {
            match s.annihilator_surplus() {
                0 => sites.extend(s.sites()),
                1 => sites.push(*s.annihilators.last().unwrap()),
                _ => {}
            }
        }
        sites.sort_unstable();
        sites.dedup();
        for site in sites {
            let mode = crate::errmodel::heisenberg_mode_with(
                &props,
                spec,
                site,
                error.action_time,
                d,
            )?;
            let mut row = mode.decoding_part.clone();
            row.reverse();
            constraints.push_eps_row(row, &format!("analytic/err{e_idx}/site{site}"));
        }
    }
    Ok(constraints)
}

/// Largest relative residual of `inner`'s epsilon rows outside the row
/// span of `outer`; 0 means containment.
pub fn containment_residual(inner: &EncodingConstraints, outer: &EncodingConstraints) -> f64 {
    let basis = crate::linalg::orthonormalize(
        &outer
            .rows
            .iter()
            .filter(|r| r.eps.iter().any(|z| z.norm() > 0.0))
            .map(|r| CVec::from_vec(r.eps.clone()))
            .collect::<Vec<_>>(),
    );
    let mut worst: f64 = 0.0;
    for row in &inner.rows {
        let v = CVec::from_vec(row.eps.clone());
        let norm = v.norm();
        if norm < 1e-14 {
            continue;
        }
        let mut resid = v.clone();
        for q in &basis {
            let overlap = q.dotc(&resid);
            resid -= q * overlap;
        }
        worst = worst.max(resid.norm() / norm);
    }
    worst
}

/// Estimate the reduced density matrix on `region` from simulated
/// Pauli-basis measurement counts, `shots` per setting over all 3^k
/// settings; `None` is the exact sentinel. Returns the estimate and the
/// Frobenius distance moved by the positivity projection.
pub fn sampled_tomography(
    state: &PureState,
    region: &[usize],
    shots: Option<u64>,
    seed: u64,
) -> Result<(DensityMatrix, f64)> {
    let exact = fock::reduced_density(state, region)?;
    let shots = match shots {
        None => return Ok((exact, 0.0)),
        Some(s) => {
            if s == 0 {
                return Err(Error::invalid("shots must be at least 1"));
            }
            s
        }
    };
    let k = region.len();
    let dim = 1usize << k;
    let settings: Vec<Vec<u8>> = cartesian_settings(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Frequencies per setting from multinomial draws on the rotated state.
    let mut freqs: Vec<Vec<f64>> = Vec::with_capacity(settings.len());
    for setting in &settings {
        let rot = setting_rotation(setting);
        let rotated = &rot * &exact.entries * rot.adjoint();
        let mut probs: Vec<f64> = (0..dim).map(|i| rotated[(i, i)].re.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        for p in probs.iter_mut() {
            *p /= total;
        }
        let mut counts = vec![0u64; dim];
        for _ in 0..shots {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut outcome = dim - 1;
            for (o, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    outcome = o;
                    break;
                }
            }
            counts[outcome] += 1;
        }
        freqs.push(counts.into_iter().map(|n| n as f64 / shots as f64).collect());
    }

    // Linear inversion: estimate every Pauli expectation from all
    // compatible settings, then assemble rho.
    let mut rho = CMat::zeros(dim, dim);
    for pauli in cartesian_paulis(k) {
        let supp: Vec<usize> = (0..k).filter(|&q| pauli[q] != 0).collect();
        let mut est = 0.0;
        let mut n_compatible = 0usize;
        for (s_idx, setting) in settings.iter().enumerate() {
            if supp.iter().any(|&q| setting[q] != pauli[q]) {
                continue;
            }
            n_compatible += 1;
            let mut acc = 0.0;
            for (o, f) in freqs[s_idx].iter().enumerate() {
                let parity = supp.iter().filter(|&&q| o & (1 << q) != 0).count();
                acc += if parity % 2 == 0 { *f } else { -*f };
            }
            est += acc;
        }
        est /= n_compatible as f64;
        rho += pauli_matrix(&pauli) * c(est / dim as f64, 0.0);
    }

    // Euclidean projection onto the positive cone, then renormalize.
    let eig = rho.clone().symmetric_eigen();
    let mut projected = CMat::zeros(dim, dim);
    let mut trace = 0.0;
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 0.0 {
            let v = eig.eigenvectors.column(i);
            projected += (v * v.adjoint()) * c(lambda, 0.0);
            trace += lambda;
        }
    }
    projected /= c(trace, 0.0);
    let residual = (&projected - &rho).norm();
    Ok((
        DensityMatrix { region: region.to_vec(), entries: projected },
        residual,
    ))
}

/// All 3^k measurement settings, lexicographic in (X=1, Y=2, Z=3).
fn cartesian_settings(k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(3usize.pow(k as u32));
    let mut current = vec![1u8; k];
    loop {
        out.push(current.clone());
        let mut pos = 0;
        loop {
            if pos == k {
                return out;
            }
            current[pos] += 1;
            if current[pos] <= 3 {
                break;
            }
            current[pos] = 1;
            pos += 1;
        }
    }
}

/// All 4^k Pauli strings (0=I, 1=X, 2=Y, 3=Z).
fn cartesian_paulis(k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::with_capacity(4usize.pow(k as u32));
    let mut current = vec![0u8; k];
    loop {
        out.push(current.clone());
        let mut pos = 0;
        loop {
            if pos == k {
                return out;
            }
            current[pos] += 1;
            if current[pos] <= 3 {
                break;
            }
            current[pos] = 0;
            pos += 1;
        }
    }
}

fn single_pauli(which: u8) -> CMat {
    match which {
        0 => CMat::identity(2, 2),
        1 => CMat::from_row_slice(2, 2, &[C64::ZERO, C64::ONE, C64::ONE, C64::ZERO]),
        2 => CMat::from_row_slice(2, 2, &[C64::ZERO, c(0.0, -1.0), c(0.0, 1.0), C64::ZERO]),
        _ => CMat::from_row_slice(2, 2, &[C64::ONE, C64::ZERO, C64::ZERO, -C64::ONE]),
    }
}

fn pauli_matrix(pauli: &[u8]) -> CMat {
    let mut m = CMat::identity(1, 1);
    for &p in pauli.iter().rev() {
        m = kron(&m, &single_pauli(p));
    }
    m
}

/// Rotation mapping the chosen measurement basis to the computational
/// one: H for X, H S^† for Y, identity for Z.
fn setting_rotation(setting: &[u8]) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = CMat::from_row_slice(
        2,
        2,
        &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)],
    );
    let s_dag = CMat::from_row_slice(2, 2, &[C64::ONE, C64::ZERO, C64::ZERO, c(0.0, -1.0)]);
    let mut m = CMat::identity(1, 1);
    for &b in setting.iter().rev() {
        let rot = match b {
            1 => h.clone(),
            2 => &h * &s_dag,
            _ => CMat::identity(2, 2),
        };
        m = kron(&m, &rot);
    }
    m
}

/// Trace distance between two density matrices on the same region.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let diff = &a.entries - &b.entries;
    let eig = diff.symmetric_eigen();
    0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
}

//! Systematic errors as weighted fermionic operator strings, their
//! Heisenberg-picture modes, and the restriction of those modes to the
//! decoding region.
//!
//! An error is a sum of strings `gamma * (creators)(annihilators)` acting
//! instantaneously at a known time during the transfer. Because the chain
//! Hamiltonian is quadratic, a site operator evolved from its action time
//! to the decoding time remains a linear combination of site operators,
//! with coefficients read from the single-excitation propagator. The
//! split of that combination into complement and decoding-region parts
//! ([`ModeRestriction`]) is what the encoder constrains against.
//!
//! Sign conventions are never trusted from bookkeeping alone: the tests
//! conjugate operators densely and compare against the reconstruction,
//! which pins the propagator time argument once and for all.

use crate::chain::{ChainSpec, Propagators};
use crate::error::{Error, Result};
use crate::fock::{apply_string, PureState, ZERO_STATE_TOL};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// One term `gamma * a^†_{k_1} .. a^†_{k_m} a_{k_{m+1}} .. a_{k_n}` with
/// all creators written to the left of all annihilators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorString {
    #[serde(with = "crate::serial::c64_pair")]
    pub gamma: C64,
    #[serde(rename = "create")]
    pub creators: Vec<usize>,
    #[serde(rename = "annihilate")]
    pub annihilators: Vec<usize>,
}

impl ErrorString {
    pub fn identity(gamma: C64) -> Self {
        ErrorString { gamma, creators: Vec::new(), annihilators: Vec::new() }
    }

    pub fn new(gamma: C64, creators: Vec<usize>, annihilators: Vec<usize>) -> Self {
        ErrorString { gamma, creators, annihilators }
    }

    /// Total operator count n_i.
    pub fn len(&self) -> usize {
        self.creators.len() + self.annihilators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.creators.iter().chain(self.annihilators.iter()).copied()
    }

    /// Annihilator surplus `n_i - m_i`; the S_a classification of the
    /// probing procedure keys on this.
    pub fn annihilator_surplus(&self) -> usize {
        self.annihilators.len()
    }
}

/// A known error: a weighted sum of strings acting at one instant.
/// Multi-error experiments are lists of these with distinct times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystematicError {
    #[serde(rename = "time")]
    pub action_time: f64,
    pub strings: Vec<ErrorString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl SystematicError {
    pub fn new(action_time: f64, strings: Vec<ErrorString>) -> Result<Self> {
        if strings.is_empty() {
            return Err(Error::invalid("a systematic error needs at least one string"));
        }
        Ok(SystematicError { action_time, strings, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn max_site(&self) -> usize {
        self.strings.iter().flat_map(|s| s.sites()).max().unwrap_or(0)
    }
}

/// Union of all creator/annihilator sites across a list of errors, and
/// its cardinality n-bar. Invariant under string reordering and duplicate
/// listing; an identity-only error yields the empty set.
pub fn affected_sites(errors: &[SystematicError]) -> (BTreeSet<usize>, usize) {
    let sites: BTreeSet<usize> = errors
        .iter()
        .flat_map(|e| e.strings.iter())
        .flat_map(|s| s.sites())
        .collect();
    let n_bar = sites.len();
    (sites, n_bar)
}

/// A site operator at its action time, pushed forward to the decoding
/// time and split across the complement/decoding cut:
/// `U(t_f - t) a_k U(t_f - t)^† = sum_m c_m a_m` with `c_m` a row of the
/// operator-picture propagator at argument `t - t_f`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeRestriction {
    pub site: usize,
    pub time: f64,
    /// Coefficients over sites `1 ..= N - D`.
    #[serde(with = "crate::serial::c64_vec")]
    pub complement_part: Vec<C64>,
    /// Coefficients over sites `N - D + 1 ..= N`.
    #[serde(with = "crate::serial::c64_vec")]
    pub decoding_part: Vec<C64>,
}

impl ModeRestriction {
    /// Norm of the concatenated coefficient vector; 1 for a unitary
    /// propagator row.
    pub fn total_norm(&self) -> f64 {
        self.complement_part
            .iter()
            .chain(self.decoding_part.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Weight sitting inside the decoding region.
    pub fn decoding_weight(&self) -> f64 {
        self.decoding_part.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Heisenberg mode of the annihilator at `site`, acting at `action_time`,
/// for a decoding region of the last `d` sites.
pub fn heisenberg_mode(
    spec: &ChainSpec,
    site: usize,
    action_time: f64,
    d: usize,
) -> Result<ModeRestriction> {
    let props = Propagators::new(spec);
    heisenberg_mode_with(&props, spec, site, action_time, d)
}

/// As [`heisenberg_mode`] but reusing a cached propagator.
pub fn heisenberg_mode_with(
    props: &Propagators,
    spec: &ChainSpec,
    site: usize,
    action_time: f64,
    d: usize,
) -> Result<ModeRestriction> {
    let n = spec.n_sites;
    if site == 0 || site > n {
        return Err(Error::invalid(format!("site {site} out of range 1..={n}")));
    }
    if !(0.0..=spec.transfer_time).contains(&action_time) {
        return Err(Error::invalid(format!(
            "action time {action_time} outside [0, {}]",
            spec.transfer_time
        )));
    }
    if d < 2 || d > n {
        return Err(Error::invalid(format!("decoding region size {d} out of range 2..={n}")));
    }
    let beta = props.mode_beta(action_time - spec.transfer_time);
    let d_bar = n - d;
    let row: Vec<C64> = (1..=n).map(|m| beta.entry(site, m)).collect();
    Ok(ModeRestriction {
        site,
        time: action_time,
        complement_part: row[..d_bar].to_vec(),
        decoding_part: row[d_bar..].to_vec(),
    })
}

/// Outcome of applying an error: the (generally unnormalized) state and
/// its norm. A zero norm is the legal annihilated-state signal, not a
/// failure.
#[derive(Debug, Clone)]
pub struct AppliedError {
    pub state: PureState,
    pub norm: f64,
}

impl AppliedError {
    pub fn annihilated(&self) -> bool {
        self.norm < ZERO_STATE_TOL
    }
}

/// Apply an error to the register state at its action time: the weighted
/// sum over strings, each applied in written order.
pub fn apply_error(state: &PureState, error: &SystematicError) -> Result<AppliedError> {
    if error.max_site() > state.n_sites() {
        return Err(Error::invalid(format!(
            "error acts on site {} of a {}-site register",
            error.max_site(),
            state.n_sites()
        )));
    }
    let mut out = state.zero_like();
    for s in &error.strings {
        if s.gamma == C64::ZERO {
            continue;
        }
        let term = apply_string(state, &s.creators, &s.annihilators)?;
        out = out.add(&term.scale(s.gamma));
    }
    let norm = out.norm();
    Ok(AppliedError { state: out, norm })
}

/// Evolve from time 0 to the transfer time, applying each error at its
/// own instant. Simultaneous errors apply in list order.
pub fn evolve_through_errors(
    evolver: &crate::fock::SectorEvolver,
    spec: &ChainSpec,
    psi: &PureState,
    errors: &[SystematicError],
) -> Result<PureState> {
    let mut order: Vec<usize> = (0..errors.len()).collect();
    order.sort_by(|&a, &b| {
        errors[a]
            .action_time
            .partial_cmp(&errors[b].action_time)
            .unwrap()
    });
    let mut state = psi.clone();
    let mut now = 0.0;
    for &idx in &order {
        let err = &errors[idx];
        if !(0.0..=spec.transfer_time).contains(&err.action_time) {
            return Err(Error::invalid(format!(
                "error acts at t = {} outside [0, {}]",
                err.action_time, spec.transfer_time
            )));
        }
        state = evolver.evolve(&state, err.action_time - now);
        state = apply_error(&state, err)?.state;
        now = err.action_time;
    }
    Ok(evolver.evolve(&state, spec.transfer_time - now))
}

/// `Z_site = 1 - 2 a^† a` as an error at `action_time`.
pub fn make_pauli_z_error(site: usize, action_time: f64) -> SystematicError {
    SystematicError {
        action_time,
        strings: vec![
            ErrorString::identity(C64::ONE),
            ErrorString::new(C64::new(-2.0, 0.0), vec![site], vec![site]),
        ],
        label: Some(format!("Z_{site}")),
    }
}

/// `exp(i theta n_site)`: identity plus `(e^{i theta} - 1)` times the
/// number operator. At theta = pi this is exactly the Z error.
pub fn make_phase_error(site: usize, theta: f64, action_time: f64) -> SystematicError {
    let coeff = (C64::i() * theta).exp() - C64::ONE;
    let mut strings = vec![ErrorString::identity(C64::ONE)];
    if coeff != C64::ZERO {
        strings.push(ErrorString::new(coeff, vec![site], vec![site]));
    }
    SystematicError {
        action_time,
        strings,
        label: Some(format!("phase({theta:.4})_{site}")),
    }
}

/// `exp(i theta (a_n^† a_m + a_m^† a_n))` expanded exactly into strings.
/// The generator squares to the projector onto "exactly one of n, m
/// occupied", so the series terminates:
/// `E = 1 + i sin(theta) G + (cos(theta) - 1) G^2`.
pub fn make_hop_error(sites: (usize, usize), theta: f64, action_time: f64) -> Result<SystematicError> {
    let (n, m) = sites;
    if n == m {
        return Err(Error::invalid("hop error needs two distinct sites"));
    }
    let isin = C64::i() * theta.sin();
    let cosm1 = C64::new(theta.cos() - 1.0, 0.0);
    let mut strings = vec![ErrorString::identity(C64::ONE)];
    if isin != C64::ZERO {
        strings.push(ErrorString::new(isin, vec![n], vec![m]));
        strings.push(ErrorString::new(isin, vec![m], vec![n]));
    }
    if cosm1 != C64::ZERO {
        strings.push(ErrorString::new(cosm1, vec![n], vec![n]));
        strings.push(ErrorString::new(cosm1, vec![m], vec![m]));
        // G^2 also contains -2 n_n n_m = -2 a_n^† a_m^† a_m a_n.
        strings.push(ErrorString::new(cosm1 * -2.0, vec![n, m], vec![m, n]));
    }
    Ok(SystematicError {
        action_time,
        strings,
        label: Some(format!("hop({theta:.4})_{n},{m}")),
    })
}

/// Single-site bit flips have no low-weight fermionic expansion: `X_i`
/// drags its whole Jordan-Wigner string along, touching O(i) modes, so the
/// low-rate machinery does not apply.
pub fn make_bit_flip_error(site: usize, _action_time: f64) -> Result<SystematicError> {
    Err(Error::Unsupported(format!(
        "X_{site} expands into O({site}) fermionic modes; only errors with \
         few-site fermionic support are protectable here"
    )))
}

/// Wire format for errors: either a named constructor or explicit strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ErrorSpec {
    Named(NamedError),
    Explicit(SystematicError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NamedError {
    PauliZ { site: usize, time: f64 },
    Phase { site: usize, theta: f64, time: f64 },
    Hop { sites: (usize, usize), theta: f64, time: f64 },
}

impl ErrorSpec {
    pub fn to_error(&self) -> Result<SystematicError> {
        match self {
            ErrorSpec::Named(NamedError::PauliZ { site, time }) => {
                Ok(make_pauli_z_error(*site, *time))
            }
            ErrorSpec::Named(NamedError::Phase { site, theta, time }) => {
                Ok(make_phase_error(*site, *theta, *time))
            }
            ErrorSpec::Named(NamedError::Hop { sites, theta, time }) => {
                make_hop_error(*sites, *theta, *time)
            }
            ErrorSpec::Explicit(err) => {
                if err.strings.is_empty() {
                    return Err(Error::invalid("error has no strings"));
                }
                Ok(err.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, CMat, HermitianEig};
    use crate::oracle;
    use approx::assert_abs_diff_eq;

    fn dense_error_matrix(error: &SystematicError, n: usize) -> CMat {
        let dim = 1usize << n;
        let mut m = CMat::zeros(dim, dim);
        for s in &error.strings {
            m += oracle::dense_jw_operator(n, &s.creators, &s.annihilators)
                .unwrap()
                .entries
                * s.gamma;
        }
        m
    }

    #[test]
    fn affected_sites_unions_and_counts() {
        let e1 = make_pauli_z_error(5, 0.3);
        let (sites, n_bar) = affected_sites(&[e1.clone()]);
        assert_eq!(sites.into_iter().collect::<Vec<_>>(), vec![5]);
        assert_eq!(n_bar, 1);

        let e2 = SystematicError::new(
            0.4,
            vec![
                ErrorString::new(C64::ONE, vec![4], vec![5]),
                ErrorString::new(C64::ONE, vec![5, 7], vec![]),
            ],
        )
        .unwrap();
        let (sites, n_bar) = affected_sites(&[e1, e2]);
        assert_eq!(sites.into_iter().collect::<Vec<_>>(), vec![4, 5, 7]);
        assert_eq!(n_bar, 3);
    }

    #[test]
    fn identity_only_error_has_no_sites() {
        let e = SystematicError::new(0.2, vec![ErrorString::identity(C64::ONE)]).unwrap();
        let (sites, n_bar) = affected_sites(&[e]);
        assert!(sites.is_empty());
        assert_eq!(n_bar, 0);
    }

    #[test]
    fn affected_sites_ignores_order_and_duplicates() {
        let a = SystematicError::new(
            0.1,
            vec![ErrorString::new(C64::ONE, vec![3, 1], vec![1, 3, 3])],
        )
        .unwrap();
        let b = SystematicError::new(
            0.1,
            vec![
                ErrorString::new(C64::ONE, vec![1], vec![3]),
                ErrorString::new(C64::ONE, vec![3], vec![1]),
            ],
        )
        .unwrap();
        assert_eq!(affected_sites(&[a]), affected_sites(&[b]));
    }

    #[test]
    fn mode_at_transfer_time_is_the_site_itself() {
        let spec = ChainSpec::uniform_pst(6).unwrap();
        let mode = heisenberg_mode(&spec, 3, spec.transfer_time, 3).unwrap();
        assert_abs_diff_eq!(mode.total_norm(), 1.0, epsilon = 1e-12);
        // beta(0) = I: one-hot at site 3, which sits in the complement.
        assert!((mode.complement_part[2] - C64::ONE).norm() < 1e-12);
        assert!(mode.decoding_weight() < 1e-20);
        // With the region grown to cover site 3, the hot slot moves inside.
        let mode = heisenberg_mode(&spec, 3, spec.transfer_time, 4).unwrap();
        assert!((mode.decoding_part[0] - C64::ONE).norm() < 1e-12);
    }

    #[test]
    fn mode_at_time_zero_sits_on_the_mirror_site() {
        let spec = ChainSpec::uniform_pst(6).unwrap();
        let mode = heisenberg_mode(&spec, 2, 0.0, 3).unwrap();
        // Site 2 mirrors to site 5, inside the decoding region {4,5,6}.
        let local = 5 - (6 - 3) - 1;
        assert_abs_diff_eq!(mode.decoding_part[local].norm(), 1.0, epsilon = 1e-10);
        assert!(mode.complement_part.iter().all(|z| z.norm() < 1e-10));
    }

    #[test]
    fn mode_reconstruction_matches_dense_conjugation() {
        // Pins the propagator time argument: the reconstruction
        // sum_m beta_{k,m}(t - t_f) a_m must equal U(t_f - t) a_k U^†(t_f - t).
        for spec in [
            ChainSpec::uniform_pst(6).unwrap(),
            ChainSpec::explicit(
                ChainSpec::uniform_pst(6).unwrap().couplings,
                vec![0.4, -0.1, 0.3, 0.0, 0.2, -0.5],
                std::f64::consts::FRAC_PI_2,
            )
            .unwrap(),
        ] {
            let n = spec.n_sites;
            let h = oracle::dense_hamiltonian(&spec).unwrap();
            let evo = oracle::DenseEvolution::new(&h);
            for &k in &[1usize, 3, 5] {
                for &t in &[0.0, spec.transfer_time / 3.0, spec.transfer_time] {
                    let tau = spec.transfer_time - t;
                    let u = evo.unitary(tau).entries;
                    let a_k = oracle::dense_jw_single(n, k, false).unwrap().entries;
                    let conjugated = &u * a_k * u.adjoint();

                    let mode = heisenberg_mode(&spec, k, t, 3).unwrap();
                    let dim = 1usize << n;
                    let mut reconstructed = CMat::zeros(dim, dim);
                    for (i, coeff) in mode
                        .complement_part
                        .iter()
                        .chain(mode.decoding_part.iter())
                        .enumerate()
                    {
                        let a_m = oracle::dense_jw_single(n, i + 1, false).unwrap().entries;
                        reconstructed += a_m * *coeff;
                    }
                    assert!(
                        max_abs(&(conjugated - reconstructed)) < 1e-9,
                        "mode mismatch at k={k}, t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn pauli_z_error_matches_dense_z() {
        let n = 6;
        let err = make_pauli_z_error(5, 0.3);
        let dense = dense_error_matrix(&err, n);
        let z5 = oracle::dense_pauli(n, 5, 'Z').unwrap().entries;
        assert!(max_abs(&(dense - z5)) < 1e-14);
    }

    #[test]
    fn phase_error_is_unitary_and_reduces_to_z_at_pi() {
        let n = 5;
        let theta = 0.73;
        let err = make_phase_error(4, theta, 0.2);
        let dense = dense_error_matrix(&err, n);
        assert!(crate::linalg::unitarity_residual(&dense) < 1e-12);

        let at_pi = dense_error_matrix(&make_phase_error(4, std::f64::consts::PI, 0.2), n);
        let z = dense_error_matrix(&make_pauli_z_error(4, 0.2), n);
        assert!(max_abs(&(at_pi - z)) < 1e-12);

        let trivial = make_phase_error(3, 0.0, 0.2);
        assert_eq!(trivial.strings.len(), 1);
        assert!(trivial.strings[0].is_empty());
    }

    #[test]
    fn hop_error_matches_dense_exponential() {
        let n = 6;
        let theta = 1.1;
        let err = make_hop_error((4, 5), theta, 0.3).unwrap();
        let dense = dense_error_matrix(&err, n);
        assert!(crate::linalg::unitarity_residual(&dense) < 1e-10);

        // Oracle: exponentiate the quadratic generator directly.
        let hop = oracle::dense_jw_operator(n, &[4], &[5]).unwrap().entries
            + oracle::dense_jw_operator(n, &[5], &[4]).unwrap().entries;
        let expected = HermitianEig::new(&hop).propagator(-theta);
        assert!(max_abs(&(dense - expected)) < 1e-10);
    }

    #[test]
    fn hop_error_on_nonadjacent_sites_is_still_unitary() {
        let n = 6;
        let err = make_hop_error((2, 5), 0.9, 0.3).unwrap();
        let dense = dense_error_matrix(&err, n);
        assert!(crate::linalg::unitarity_residual(&dense) < 1e-10);
    }

    #[test]
    fn bit_flips_are_rejected() {
        match make_bit_flip_error(3, 0.1) {
            Err(Error::Unsupported(_)) => {}
            other => panic!("expected unsupported, got {other:?}"),
        }
    }

    #[test]
    fn apply_error_agrees_with_dense_matrix() {
        use rand::{Rng, SeedableRng};
        let n = 5;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let amps: Vec<C64> = (0..(1usize << n))
            .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let state = PureState::from_amplitudes(n, amps).unwrap().normalize().unwrap().0;
        let err = make_hop_error((2, 3), 0.8, 0.1).unwrap();
        let applied = apply_error(&state, &err).unwrap();
        let dense = dense_error_matrix(&err, n);
        let expected = dense * state.as_vector();
        for idx in 0..(1usize << n) {
            assert!((applied.state.amplitude(idx) - expected[idx]).norm() < 1e-12);
        }
        assert_abs_diff_eq!(applied.norm, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn annihilator_on_vacuum_signals_annihilation() {
        let err = SystematicError::new(
            0.1,
            vec![ErrorString::new(C64::ONE, vec![], vec![3])],
        )
        .unwrap();
        let applied = apply_error(&PureState::vacuum(5), &err).unwrap();
        assert!(applied.annihilated());
        assert_eq!(applied.norm, 0.0);
    }

    #[test]
    fn error_json_round_trip_and_named_forms() {
        let err = make_pauli_z_error(5, 0.5);
        let json = serde_json::to_string(&err).unwrap();
        assert!(json.contains("\"time\":0.5"));
        assert!(json.contains("\"create\":[5]"));
        let back: SystematicError = serde_json::from_str(&json).unwrap();
        assert_eq!(back.strings.len(), 2);

        let named: ErrorSpec =
            serde_json::from_str(r#"{"kind":"phase","site":6,"theta":1.0472,"time":0.52}"#)
                .unwrap();
        let lowered = named.to_error().unwrap();
        assert_eq!(lowered.strings.len(), 2);
        assert_eq!(lowered.strings[1].creators, vec![6]);
    }
}

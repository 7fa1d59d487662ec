//! Perfect-state-transfer chain specifications and the single-excitation
//! propagator that drives all dynamics.
//!
//! The chain Hamiltonian is the hopping model
//!
//! ```text
//! H = 1/2 sum_n J_n (X_n X_{n+1} + Y_n Y_{n+1}) - sum_n B_n Z_n
//! ```
//!
//! which conserves excitation number, so every quantity of interest is
//! determined by the N x N one-excitation block. Two conventions for that
//! block coexist and differ only by a multiple of the identity:
//!
//! * [`ChainSpec::single_excitation_hamiltonian`] is the literal projection
//!   of the spin Hamiltonian onto the one-excitation basis, with diagonal
//!   `2 B_n - sum_i B_i`. Its exponential [`Propagators::beta`] matches full
//!   register evolution entry for entry, including the vacuum phase.
//! * [`ChainSpec::one_body_matrix`] drops the `-sum_i B_i` identity shift
//!   (diagonal `2 B_n`). Its exponential [`Propagators::mode_beta`] is the
//!   matrix that appears in Heisenberg-picture mode evolution,
//!   `U(t) a_n U(t)^† = sum_m beta_{n,m}(-t) a_m`, where constant energy
//!   offsets cancel.
//!
//! For `B = 0` (the default engineered chain) the two are identical.
//!
//! Sites are 1-based in every public signature, matching the physics
//! convention used throughout the crate.

use crate::error::{Error, Result};
use crate::linalg::{CMat, HermitianEig};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

pub const DEFAULT_PST_TOL: f64 = 1e-10;

/// How the couplings of a chain were chosen. Only affects serialization
/// and reporting, not the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingScheme {
    UniformPst,
    Explicit,
}

/// An engineered chain: couplings, local fields, transfer time and, once
/// verified, the transfer phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSpec {
    pub n_sites: usize,
    /// J_1 .. J_{N-1}, all strictly positive.
    pub couplings: Vec<f64>,
    /// B_1 .. B_N.
    pub fields: Vec<f64>,
    pub transfer_time: f64,
    pub scheme: CouplingScheme,
    /// Transfer phase phi with U(t_f)|n> = e^{i phi}|N-n+1>. Set by
    /// [`ChainSpec::verified`]; not part of the wire format.
    #[serde(skip)]
    pub transfer_phase: Option<f64>,
}

impl ChainSpec {
    /// The standard engineered scheme `J_n = sqrt(n (N - n))`, `B = 0`,
    /// `t_f = pi / 2`, verified before being returned.
    pub fn uniform_pst(n_sites: usize) -> Result<Self> {
        if n_sites < 2 {
            return Err(Error::invalid(format!(
                "a chain needs at least 2 sites, got {n_sites}"
            )));
        }
        let couplings = (1..n_sites)
            .map(|n| ((n * (n_sites - n)) as f64).sqrt())
            .collect();
        let spec = ChainSpec {
            n_sites,
            couplings,
            fields: vec![0.0; n_sites],
            transfer_time: FRAC_PI_2,
            scheme: CouplingScheme::UniformPst,
            transfer_phase: None,
        };
        spec.verified(DEFAULT_PST_TOL)
    }

    /// A user-supplied chain. Lengths and positivity are validated here;
    /// perfect transfer is not assumed until [`ChainSpec::verified`] runs.
    pub fn explicit(couplings: Vec<f64>, fields: Vec<f64>, transfer_time: f64) -> Result<Self> {
        let n_sites = fields.len();
        if n_sites < 2 {
            return Err(Error::invalid("a chain needs at least 2 sites"));
        }
        if couplings.len() != n_sites - 1 {
            return Err(Error::invalid(format!(
                "expected {} couplings for {} sites, got {}",
                n_sites - 1,
                n_sites,
                couplings.len()
            )));
        }
        if let Some(j) = couplings.iter().find(|&&j| !(j > 0.0)) {
            return Err(Error::invalid(format!("couplings must be positive, got {j}")));
        }
        if !(transfer_time > 0.0) {
            return Err(Error::invalid("transfer time must be positive"));
        }
        Ok(ChainSpec {
            n_sites,
            couplings,
            fields,
            transfer_time,
            scheme: CouplingScheme::Explicit,
            transfer_phase: None,
        })
    }

    /// Validate after deserialization: a `uniform_pst` scheme regenerates
    /// its couplings, an `explicit` one is checked structurally.
    pub fn from_json(json: &str) -> Result<Self> {
        let raw: ChainSpec = serde_json::from_str(json)?;
        match raw.scheme {
            CouplingScheme::UniformPst => ChainSpec::uniform_pst(raw.n_sites),
            CouplingScheme::Explicit => {
                ChainSpec::explicit(raw.couplings, raw.fields, raw.transfer_time)
            }
        }
    }

    /// One-excitation block of the spin Hamiltonian: off-diagonal `J_n`,
    /// diagonal `2 B_n - sum_i B_i`.
    pub fn single_excitation_hamiltonian(&self) -> CMat {
        let field_sum: f64 = self.fields.iter().sum();
        self.tridiagonal(|n| 2.0 * self.fields[n] - field_sum)
    }

    /// One-body matrix of the fermionic hopping picture: off-diagonal `J_n`,
    /// diagonal `2 B_n`. Differs from the block above by `-sum_i B_i` times
    /// the identity.
    pub fn one_body_matrix(&self) -> CMat {
        self.tridiagonal(|n| 2.0 * self.fields[n])
    }

    fn tridiagonal(&self, diag: impl Fn(usize) -> f64) -> CMat {
        let n = self.n_sites;
        let mut h = CMat::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = C64::new(diag(i), 0.0);
        }
        for i in 0..n - 1 {
            h[(i, i + 1)] = C64::new(self.couplings[i], 0.0);
            h[(i + 1, i)] = C64::new(self.couplings[i], 0.0);
        }
        h
    }

    /// Check the mirror property `U(t_f)|n> = e^{i phi}|N-n+1>` and return
    /// phi (read off site 1, checked on every site).
    pub fn verify_pst(&self, tol: f64) -> Result<f64> {
        let beta = Propagators::new(self).beta(self.transfer_time);
        beta.mirror_phase(tol)
    }

    /// Returns a copy with `transfer_phase` recorded.
    pub fn verified(mut self, tol: f64) -> Result<Self> {
        let phi = self.verify_pst(tol)?;
        self.transfer_phase = Some(phi);
        Ok(self)
    }

    /// The verified transfer phase, or an error if `verified` never ran.
    pub fn phase(&self) -> Result<f64> {
        self.transfer_phase
            .ok_or_else(|| Error::invalid("chain spec has not been PST-verified"))
    }

    /// Mirror phase of the operator-picture propagator at `t_f`. Local
    /// rotations that undo the transfer phase, and the dressing of encoding
    /// modes, use this value: it is `phi - t_f * sum_i B_i`, coinciding with
    /// [`ChainSpec::phase`] for `B = 0`.
    pub fn mode_phase(&self) -> Result<f64> {
        let field_sum: f64 = self.fields.iter().sum();
        Ok(self.phase()? - self.transfer_time * field_sum)
    }
}

/// The single-excitation propagator `beta_{n,m}(t)` at a fixed time.
#[derive(Debug, Clone)]
pub struct BetaMatrix {
    pub time: f64,
    pub entries: CMat,
}

impl BetaMatrix {
    pub fn n_sites(&self) -> usize {
        self.entries.nrows()
    }

    /// Entry `beta_{n,m}` with 1-based sites.
    pub fn entry(&self, n: usize, m: usize) -> C64 {
        self.entries[(n - 1, m - 1)]
    }

    pub fn unitarity_residual(&self) -> f64 {
        crate::linalg::unitarity_residual(&self.entries)
    }

    /// Extract phi from the mirror entries, or report the worst offender.
    pub fn mirror_phase(&self, tol: f64) -> Result<f64> {
        let n = self.n_sites();
        let first = self.entry(n, 1);
        if (first.norm() - 1.0).abs() > tol {
            return Err(Error::NotPst {
                site: 1,
                deviation: (first.norm() - 1.0).abs(),
                tol,
            });
        }
        let phase = first / first.norm();
        let mut worst = (0usize, 0.0f64);
        for site in 1..=n {
            let dev = (self.entry(n - site + 1, site) - phase).norm();
            if dev > worst.1 {
                worst = (site, dev);
            }
        }
        if worst.1 > tol {
            return Err(Error::NotPst {
                site: worst.0,
                deviation: worst.1,
                tol,
            });
        }
        Ok(phase.arg())
    }
}

/// Cached eigendecomposition of the one-excitation block, for evaluating
/// propagators at many times.
#[derive(Debug, Clone)]
pub struct Propagators {
    n_sites: usize,
    eig: HermitianEig,
    field_sum: f64,
}

impl Propagators {
    pub fn new(spec: &ChainSpec) -> Self {
        Propagators {
            n_sites: spec.n_sites,
            eig: HermitianEig::new(&spec.single_excitation_hamiltonian()),
            field_sum: spec.fields.iter().sum(),
        }
    }

    /// `beta(t) = exp(-i H_1 t)` in the spin-block convention.
    pub fn beta(&self, t: f64) -> BetaMatrix {
        BetaMatrix {
            time: t,
            entries: self.eig.propagator(t),
        }
    }

    /// Operator-picture propagator `exp(-i h t)` with the identity shift
    /// removed; equals `e^{-i t sum B} beta(t)`.
    pub fn mode_beta(&self, t: f64) -> BetaMatrix {
        let mut b = self.beta(t);
        let phase = (-C64::i() * self.field_sum * t).exp();
        b.entries *= phase;
        b
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
}

/// Convenience one-shot wrappers over [`Propagators`].
pub fn propagator(spec: &ChainSpec, t: f64) -> BetaMatrix {
    Propagators::new(spec).beta(t)
}

pub fn mode_propagator(spec: &ChainSpec, t: f64) -> BetaMatrix {
    Propagators::new(spec).mode_beta(t)
}

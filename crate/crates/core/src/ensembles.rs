//! Random matrix samplers: Ginibre matrices, Haar unitaries, Hilbert–Schmidt
//! states `Y Y^dagger / tr(Y Y^dagger)` and Bures–Hall states
//! `(I + U) Y Y^dagger (I + U^dagger) / tr(...)`.
//!
//! For Bures–Hall states with `alpha = n - m > 0` the unitary `U` is drawn
//! with density proportional to `|det(I + U)|^{2 alpha}` against Haar
//! measure. Two Metropolis chains target that law:
//!
//! * [`ChainKind::MatrixWalk`] moves `U -> U exp(i eps H)` with `H` drawn from
//!   GUE. Each step costs an `m x m` eigendecomposition and determinant.
//! * [`ChainKind::Eigenphase`] exploits that the weight depends only on the
//!   eigenvalues of `U`. It runs single-site updates on the eigenphases
//!   against `prod_{j<k} |e^{i t_j} - e^{i t_k}|^2 prod_j |1 + e^{i t_j}|^{2 alpha}`
//!   and attaches fresh Haar eigenvectors to every returned sample. A sweep
//!   costs `O(m^2)` scalar operations.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::{eigh, CMatrix, DensityMatrix, HermitianMatrix};

/// Reproducible random source identified by `(seed, stream_id)`.
///
/// Streams with the same seed and different ids are independent ChaCha
/// streams under one key, so parallel workers can each own one.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub(crate) fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnsembleKind {
    #[serde(rename = "hs")]
    HilbertSchmidt,
    #[serde(rename = "bh")]
    BuresHall,
}

impl EnsembleKind {
    pub fn short_name(self) -> &'static str {
        match self {
            EnsembleKind::HilbertSchmidt => "hs",
            EnsembleKind::BuresHall => "bh",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hs" | "hilbert-schmidt" => Ok(EnsembleKind::HilbertSchmidt),
            "bh" | "bures-hall" => Ok(EnsembleKind::BuresHall),
            other => Err(Error::InvalidConfig(format!(
                "unknown ensemble '{other}' (expected hs or bh)"
            ))),
        }
    }
}

/// Ensemble of `m x m` reduced states of an `m x n` bipartite system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub m: usize,
    pub n: usize,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, m: usize, n: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("subsystem dimension m must be >= 1".into()));
        }
        if n < m {
            return Err(Error::InvalidConfig(format!(
                "alpha = n - m must be >= 0 (got m = {m}, n = {n})"
            )));
        }
        Ok(Self { kind, m, n })
    }

    pub fn hilbert_schmidt(m: usize, n: usize) -> Result<Self> {
        Self::new(EnsembleKind::HilbertSchmidt, m, n)
    }

    pub fn bures_hall(m: usize, n: usize) -> Result<Self> {
        Self::new(EnsembleKind::BuresHall, m, n)
    }

    /// Dimension difference `n - m`.
    pub fn alpha(&self) -> usize {
        self.n - self.m
    }
}

fn complex_normal(rng: &mut RngStream) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re = rng.standard_normal() * s;
    let im = rng.standard_normal() * s;
    Complex64::new(re, im)
}

/// `m x n` matrix of i.i.d. standard complex Gaussians (`E|z|^2 = 1`).
pub fn sample_ginibre(m: usize, n: usize, rng: &mut RngStream) -> CMatrix {
    // Column-major fill keeps the draw order fixed for a given shape.
    CMatrix::from_fn(m, n, |_, _| complex_normal(rng))
}

/// Haar-distributed `m x m` unitary.
///
/// QR of a square Ginibre matrix, with column `j` of `Q` multiplied by
/// `r_jj / |r_jj|` so the triangular factor has a positive diagonal.
pub fn sample_haar_unitary(m: usize, rng: &mut RngStream) -> CMatrix {
    orthonormalize(sample_ginibre(m, m, rng))
}

/// Unitary factor of the QR decomposition normalized to a positive `R`
/// diagonal.
fn orthonormalize(a: CMatrix) -> CMatrix {
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let norm = d.norm();
        if norm > 0.0 {
            let phase = d / norm;
            for i in 0..q.nrows() {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// `A A^dagger / tr(A A^dagger)`.
fn normalized_gram(a: &CMatrix) -> Result<DensityMatrix> {
    let trace: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    if !(trace > f64::MIN_POSITIVE) || !trace.is_finite() {
        return Err(Error::Singular {
            eigenvalue: trace,
            threshold: f64::MIN_POSITIVE,
        });
    }
    DensityMatrix::from_factor(a)
}

fn require_kind(spec: &EnsembleSpec, kind: EnsembleKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidConfig(format!(
            "sampler for {kind} called with a {} spec",
            spec.kind
        )));
    }
    Ok(())
}

/// One Hilbert–Schmidt state `Y Y^dagger / tr(Y Y^dagger)`.
pub fn sample_hs(spec: &EnsembleSpec, rng: &mut RngStream) -> Result<DensityMatrix> {
    require_kind(spec, EnsembleKind::HilbertSchmidt)?;
    let y = sample_ginibre(spec.m, spec.n, rng);
    normalized_gram(&y)
}

/// `(I + U) Y Y^dagger (I + U^dagger)` normalized to unit trace.
pub fn bures_hall_state(u: &CMatrix, y: &CMatrix) -> Result<DensityMatrix> {
    let m = u.nrows();
    if u.ncols() != m || y.nrows() != m {
        return Err(Error::ShapeMismatch {
            expected: format!("{m}x{m} unitary and {m}xn Ginibre factor"),
            found: format!("{}x{} and {}x{}", u.nrows(), u.ncols(), y.nrows(), y.ncols()),
        });
    }
    let shifted = u + CMatrix::identity(m, m);
    normalized_gram(&(shifted * y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    MatrixWalk,
    Eigenphase,
}

impl FromStr for ChainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix" | "matrix-walk" => Ok(ChainKind::MatrixWalk),
            "eigenphase" => Ok(ChainKind::Eigenphase),
            other => Err(Error::InvalidConfig(format!(
                "unknown chain kind '{other}' (expected matrix-walk or eigenphase)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub kind: ChainKind,
    /// Initial proposal scale; adapted during burn-in.
    pub step_scale: f64,
    pub burn_in: usize,
    /// Steps (matrix walk) or full sweeps (eigenphase) between returned
    /// samples.
    pub thinning: usize,
    pub chain_length: usize,
}

/// Steps per adaptation window during burn-in.
pub const ADAPT_WINDOW: usize = 100;
/// Acceptance rate the burn-in adaptation steers toward.
pub const TARGET_ACCEPTANCE: f64 = 0.3;
const ADAPT_FACTOR: f64 = 1.1;
/// Acceptance rates outside this band raise a diagnostic warning.
pub const ACCEPTANCE_BAND: (f64, f64) = (0.05, 0.95);
/// Proposals with `|det(I + U)|` below this are rejected outright.
pub const DET_FLOOR: f64 = 1e-300;
const REORTHONORMALIZE_EVERY: u64 = 256;

impl McmcConfig {
    /// Defaults for the matrix random walk on `U(m)`.
    pub fn matrix_walk(m: usize) -> Self {
        Self {
            kind: ChainKind::MatrixWalk,
            step_scale: 0.5 / (m as f64).sqrt(),
            burn_in: 2000,
            thinning: (m * m).max(10),
            chain_length: 1,
        }
    }

    /// Defaults for the eigenphase chain.
    pub fn eigenphase(m: usize) -> Self {
        Self {
            kind: ChainKind::Eigenphase,
            step_scale: PI / m as f64,
            burn_in: 2000,
            thinning: 10,
            chain_length: 1,
        }
    }

    pub fn for_kind(kind: ChainKind, m: usize) -> Self {
        match kind {
            ChainKind::MatrixWalk => Self::matrix_walk(m),
            ChainKind::Eigenphase => Self::eigenphase(m),
        }
    }

    pub fn with_chain_length(mut self, chain_length: usize) -> Self {
        self.chain_length = chain_length;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_scale > 0.0) || !self.step_scale.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "MCMC step scale must be positive, got {}",
                self.step_scale
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("MCMC thinning must be >= 1".into()));
        }
        if self.chain_length == 0 {
            return Err(Error::InvalidConfig("MCMC chain length must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct McmcDiagnostics {
    /// Proposals made after burn-in.
    pub proposed: u64,
    pub accepted: u64,
    pub burn_in_acceptance: f64,
    /// Proposal scale frozen at the end of burn-in.
    pub step_scale: f64,
    /// Proposals rejected because `|det(I + U')|` underflowed.
    pub singular_rejections: u64,
}

impl McmcDiagnostics {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    /// Warning text when the post-burn-in acceptance rate leaves
    /// [`ACCEPTANCE_BAND`].
    pub fn warning(&self) -> Option<String> {
        let rate = self.acceptance_rate();
        if rate.is_nan() {
            return None;
        }
        let (lo, hi) = ACCEPTANCE_BAND;
        if rate < lo || rate > hi {
            Some(format!(
                "MCMC acceptance rate {rate:.3} outside [{lo}, {hi}] (step scale {:.3e})",
                self.step_scale
            ))
        } else {
            None
        }
    }

    pub fn merge(&mut self, other: &McmcDiagnostics) {
        let total = (self.proposed + other.proposed) as f64;
        if total > 0.0 {
            self.step_scale =
                (self.step_scale * self.proposed as f64 + other.step_scale * other.proposed as f64) / total;
            self.burn_in_acceptance = (self.burn_in_acceptance * self.proposed as f64
                + other.burn_in_acceptance * other.proposed as f64)
                / total;
        }
        self.proposed += other.proposed;
        self.accepted += other.accepted;
        self.singular_rejections += other.singular_rejections;
    }
}

#[derive(Debug, Clone)]
enum ChainState {
    Matrix { u: CMatrix, log_weight: f64 },
    Phases { theta: Vec<f64> },
}

/// Metropolis chain on `U(m)` targeting `|det(I + U)|^{2 alpha}`.
#[derive(Debug, Clone)]
pub struct UnitaryChain {
    m: usize,
    alpha: f64,
    cfg: McmcConfig,
    step: f64,
    state: ChainState,
    diagnostics: McmcDiagnostics,
    accepted_since_cleanup: u64,
}

fn log_abs_det_shifted(u: &CMatrix) -> f64 {
    let m = u.nrows();
    let det = (u + CMatrix::identity(m, m)).determinant().norm();
    if det < DET_FLOOR {
        f64::NEG_INFINITY
    } else {
        det.ln()
    }
}

/// `exp(i eps H)` for Hermitian `H`.
fn unitary_exp(h: &HermitianMatrix, eps: f64) -> CMatrix {
    let s = eigh(h, true);
    let v = s.eigenvectors.expect("requested eigenvectors");
    let phases = DVector::from_iterator(
        s.eigenvalues.len(),
        s.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, eps * l)),
    );
    &v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

/// GUE draw `(G + G^dagger) / 2`.
fn sample_gue(m: usize, rng: &mut RngStream) -> HermitianMatrix {
    let g = sample_ginibre(m, m, rng);
    HermitianMatrix::new((&g + g.adjoint()).scale(0.5)).expect("symmetrized matrix is Hermitian")
}

fn wrap_angle(t: f64) -> f64 {
    let mut x = (t + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

fn ln_abs_sin_half(x: f64) -> f64 {
    (0.5 * x).sin().abs().ln()
}

fn ln_abs_cos_half(x: f64) -> f64 {
    (0.5 * x).cos().abs().ln()
}

impl UnitaryChain {
    /// Starts the chain (at `U = I` or equally spaced eigenphases) and runs
    /// the burn-in with step-size adaptation.
    pub fn new(m: usize, alpha: f64, cfg: McmcConfig, rng: &mut RngStream) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("unitary dimension must be >= 1".into()));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::domain("UnitaryChain::new", alpha, "requires alpha >= 0"));
        }
        cfg.validate()?;
        let state = match cfg.kind {
            ChainKind::MatrixWalk => {
                let u = CMatrix::identity(m, m);
                let log_weight = 2.0 * alpha * log_abs_det_shifted(&u);
                ChainState::Matrix { u, log_weight }
            }
            ChainKind::Eigenphase => ChainState::Phases {
                theta: (0..m).map(|j| -PI + 2.0 * PI * (j as f64 + 0.5) / m as f64).collect(),
            },
        };
        let mut chain = Self {
            m,
            alpha,
            cfg,
            step: cfg.step_scale,
            state,
            diagnostics: McmcDiagnostics::default(),
            accepted_since_cleanup: 0,
        };
        chain.burn_in(rng);
        Ok(chain)
    }

    fn burn_in(&mut self, rng: &mut RngStream) {
        let mut window_prop = 0u64;
        let mut window_acc = 0u64;
        let mut total_prop = 0u64;
        let mut total_acc = 0u64;
        for i in 1..=self.cfg.burn_in {
            let (p, a) = self.step_once(rng);
            window_prop += p;
            window_acc += a;
            total_prop += p;
            total_acc += a;
            if i % ADAPT_WINDOW == 0 && window_prop > 0 {
                let rate = window_acc as f64 / window_prop as f64;
                if rate > TARGET_ACCEPTANCE {
                    self.step *= ADAPT_FACTOR;
                } else {
                    self.step /= ADAPT_FACTOR;
                }
                self.step = self.step.min(PI);
                window_prop = 0;
                window_acc = 0;
            }
        }
        self.diagnostics.burn_in_acceptance = if total_prop > 0 {
            total_acc as f64 / total_prop as f64
        } else {
            f64::NAN
        };
        self.diagnostics.step_scale = self.step;
    }

    /// One matrix-walk step or one eigenphase sweep. Returns
    /// `(proposed, accepted)`; for the eigenphase chain only local moves
    /// are counted so the adaptation sees the tunable part.
    fn step_once(&mut self, rng: &mut RngStream) -> (u64, u64) {
        match &mut self.state {
            ChainState::Matrix { u, log_weight } => {
                let h = sample_gue(self.m, rng);
                let proposal = &*u * unitary_exp(&h, self.step);
                let accept = if self.alpha == 0.0 {
                    true
                } else {
                    let lw = 2.0 * self.alpha * log_abs_det_shifted(&proposal);
                    if lw == f64::NEG_INFINITY {
                        self.diagnostics.singular_rejections += 1;
                        false
                    } else {
                        let log_u: f64 = rng.random::<f64>().ln();
                        if log_u < lw - *log_weight {
                            *log_weight = lw;
                            true
                        } else {
                            false
                        }
                    }
                };
                if accept {
                    *u = proposal;
                    self.accepted_since_cleanup += 1;
                    if self.accepted_since_cleanup >= REORTHONORMALIZE_EVERY {
                        *u = orthonormalize(u.clone());
                        self.accepted_since_cleanup = 0;
                    }
                }
                (1, accept as u64)
            }
            ChainState::Phases { theta } => {
                let mut local_prop = 0;
                let mut local_acc = 0;
                for j in 0..theta.len() {
                    let local = rng.random::<bool>();
                    let candidate = if local {
                        wrap_angle(theta[j] + self.step * rng.standard_normal())
                    } else {
                        wrap_angle(PI * (2.0 * rng.random::<f64>() - 1.0))
                    };
                    let current = theta[j];
                    let mut delta = 0.0;
                    for (k, &tk) in theta.iter().enumerate() {
                        if k != j {
                            delta += 2.0 * (ln_abs_sin_half(candidate - tk) - ln_abs_sin_half(current - tk));
                        }
                    }
                    if self.alpha != 0.0 {
                        delta += 2.0 * self.alpha * (ln_abs_cos_half(candidate) - ln_abs_cos_half(current));
                    }
                    let accept = if delta.is_nan() || delta == f64::NEG_INFINITY {
                        false
                    } else {
                        rng.random::<f64>().ln() < delta
                    };
                    if accept {
                        theta[j] = candidate;
                    }
                    if local {
                        local_prop += 1;
                        local_acc += accept as u64;
                    }
                }
                (local_prop, local_acc)
            }
        }
    }

    /// Advances `thinning` steps and returns the current unitary.
    pub fn next_unitary(&mut self, rng: &mut RngStream) -> CMatrix {
        for _ in 0..self.cfg.thinning {
            let (p, a) = self.step_once(rng);
            self.diagnostics.proposed += p;
            self.diagnostics.accepted += a;
        }
        match &self.state {
            ChainState::Matrix { u, .. } => u.clone(),
            ChainState::Phases { theta } => {
                let w = sample_haar_unitary(self.m, rng);
                let phases = DVector::from_iterator(self.m, theta.iter().map(|&t| Complex64::from_polar(1.0, t)));
                &w * CMatrix::from_diagonal(&phases) * w.adjoint()
            }
        }
    }

    pub fn diagnostics(&self) -> &McmcDiagnostics {
        &self.diagnostics
    }

    pub fn config(&self) -> &McmcConfig {
        &self.cfg
    }
}

/// Output of [`mcmc_unitary_chain`].
#[derive(Debug, Clone)]
pub struct McmcRun {
    pub unitaries: Vec<CMatrix>,
    pub diagnostics: McmcDiagnostics,
}

/// Runs a fresh chain and collects `cfg.chain_length` thinned unitaries.
pub fn mcmc_unitary_chain(m: usize, alpha: f64, rng: &mut RngStream, cfg: McmcConfig) -> Result<McmcRun> {
    let mut chain = UnitaryChain::new(m, alpha, cfg, rng)?;
    let unitaries = (0..cfg.chain_length).map(|_| chain.next_unitary(rng)).collect();
    Ok(McmcRun {
        unitaries,
        diagnostics: chain.diagnostics.clone(),
    })
}

/// Bures–Hall sampler holding one persistent chain when `alpha > 0`.
#[derive(Debug, Clone)]
pub struct BuresHallSampler {
    spec: EnsembleSpec,
    chain: Option<UnitaryChain>,
}

impl BuresHallSampler {
    pub fn new(spec: EnsembleSpec, mcmc: McmcConfig, rng: &mut RngStream) -> Result<Self> {
        require_kind(&spec, EnsembleKind::BuresHall)?;
        let chain = if spec.alpha() == 0 {
            None
        } else {
            Some(UnitaryChain::new(spec.m, spec.alpha() as f64, mcmc, rng)?)
        };
        Ok(Self { spec, chain })
    }

    pub fn sample(&mut self, rng: &mut RngStream) -> Result<DensityMatrix> {
        let u = match &mut self.chain {
            Some(chain) => chain.next_unitary(rng),
            None => sample_haar_unitary(self.spec.m, rng),
        };
        let y = sample_ginibre(self.spec.m, self.spec.n, rng);
        bures_hall_state(&u, &y)
    }

    /// `true` when successive samples are independent (Haar `U`).
    pub fn is_iid(&self) -> bool {
        self.chain.is_none()
    }

    pub fn diagnostics(&self) -> Option<&McmcDiagnostics> {
        self.chain.as_ref().map(|c| c.diagnostics())
    }
}

/// One Bures–Hall state from a freshly burned-in chain.
pub fn sample_bh(spec: &EnsembleSpec, rng: &mut RngStream, mcmc: McmcConfig) -> Result<DensityMatrix> {
    BuresHallSampler::new(*spec, mcmc, rng)?.sample(rng)
}

/// Either ensemble behind one interface.
#[derive(Debug, Clone)]
pub enum StateSampler {
    HilbertSchmidt(EnsembleSpec),
    BuresHall(BuresHallSampler),
}

impl StateSampler {
    pub fn new(spec: EnsembleSpec, chain: ChainKind, rng: &mut RngStream) -> Result<Self> {
        Self::with_config(spec, McmcConfig::for_kind(chain, spec.m), rng)
    }

    pub fn with_config(spec: EnsembleSpec, mcmc: McmcConfig, rng: &mut RngStream) -> Result<Self> {
        Ok(match spec.kind {
            EnsembleKind::HilbertSchmidt => StateSampler::HilbertSchmidt(spec),
            EnsembleKind::BuresHall => StateSampler::BuresHall(BuresHallSampler::new(spec, mcmc, rng)?),
        })
    }

    pub fn sample(&mut self, rng: &mut RngStream) -> Result<DensityMatrix> {
        match self {
            StateSampler::HilbertSchmidt(spec) => sample_hs(spec, rng),
            StateSampler::BuresHall(s) => s.sample(rng),
        }
    }

    pub fn is_iid(&self) -> bool {
        match self {
            StateSampler::HilbertSchmidt(_) => true,
            StateSampler::BuresHall(s) => s.is_iid(),
        }
    }

    pub fn diagnostics(&self) -> Option<&McmcDiagnostics> {
        match self {
            StateSampler::HilbertSchmidt(_) => None,
            StateSampler::BuresHall(s) => s.diagnostics(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixcore::von_neumann_entropy;

    fn max_abs(a: &CMatrix) -> f64 {
        a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = sample_ginibre(3, 4, &mut RngStream::new(9, 0));
        let b = sample_ginibre(3, 4, &mut RngStream::new(9, 0));
        let c = sample_ginibre(3, 4, &mut RngStream::new(9, 1));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn ginibre_moments() {
        let mut rng = RngStream::new(1, 0);
        let draws = 100_000;
        let (m, n) = (2, 3);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut sq = Vec::with_capacity(draws * m * n);
        for _ in 0..draws {
            let g = sample_ginibre(m, n, &mut rng);
            for z in g.iter() {
                sum += z;
                sq.push(z.norm_sqr());
            }
        }
        let count = (draws * m * n) as f64;
        let bound = 4.0 / count.sqrt();
        assert!((sum.re / count).abs() < bound);
        assert!((sum.im / count).abs() < bound);
        let (mean, se) = mean_and_stderr(&sq);
        assert!((mean - 1.0).abs() < 4.0 * se, "E|z|^2 = {mean} +- {se}");
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = RngStream::new(2, 0);
        for m in 1..9 {
            let u = sample_haar_unitary(m, &mut rng);
            assert!(max_abs(&(u.adjoint() * &u - CMatrix::identity(m, m))) < 1e-12);
        }
    }

    #[test]
    fn hs_and_bh_states_have_unit_trace() {
        let mut rng = RngStream::new(4, 0);
        let hs = EnsembleSpec::hilbert_schmidt(3, 5).unwrap();
        let bh = EnsembleSpec::bures_hall(3, 3).unwrap();
        for _ in 0..50 {
            let r = sample_hs(&hs, &mut rng).unwrap();
            assert!((r.matrix().trace() - 1.0).abs() < 1e-12);
            let s = sample_bh(&bh, &mut rng, McmcConfig::matrix_walk(3)).unwrap();
            assert!((s.matrix().trace() - 1.0).abs() < 1e-12);
            assert!(s.spectrum().min() >= -1e-10);
        }
    }

    #[test]
    fn sampler_rejects_wrong_kind() {
        let mut rng = RngStream::new(4, 0);
        let bh = EnsembleSpec::bures_hall(2, 2).unwrap();
        assert!(sample_hs(&bh, &mut rng).is_err());
        assert!(EnsembleSpec::hilbert_schmidt(3, 2).is_err());
        assert!(EnsembleSpec::hilbert_schmidt(0, 2).is_err());
    }

    #[test]
    fn gram_normalization_is_scale_invariant() {
        let mut rng = RngStream::new(5, 0);
        let y = sample_ginibre(3, 4, &mut rng);
        let a = normalized_gram(&y).unwrap();
        let b = normalized_gram(&y.scale(7.25)).unwrap();
        let diff = a.matrix().as_matrix() - b.matrix().as_matrix();
        assert!(max_abs(&diff) < 1e-15);
    }

    #[test]
    fn degenerate_bures_hall_is_an_error() {
        let u = -CMatrix::identity(2, 2);
        let y = CMatrix::identity(2, 2);
        assert!(matches!(bures_hall_state(&u, &y), Err(Error::Singular { .. })));
    }

    #[test]
    fn chain_is_deterministic() {
        let cfg = McmcConfig::matrix_walk(3).with_chain_length(5);
        let a = mcmc_unitary_chain(3, 1.0, &mut RngStream::new(3, 7), cfg).unwrap();
        let b = mcmc_unitary_chain(3, 1.0, &mut RngStream::new(3, 7), cfg).unwrap();
        assert_eq!(a.unitaries, b.unitaries);
        assert_eq!(a.diagnostics, b.diagnostics);
        for u in &a.unitaries {
            assert!(max_abs(&(u.adjoint() * u - CMatrix::identity(3, 3))) < 1e-10);
        }
    }

    #[test]
    fn chain_rejects_bad_config() {
        let mut rng = RngStream::new(0, 0);
        let mut cfg = McmcConfig::matrix_walk(2);
        cfg.thinning = 0;
        assert!(UnitaryChain::new(2, 1.0, cfg, &mut rng).is_err());
        assert!(UnitaryChain::new(2, -1.0, McmcConfig::matrix_walk(2), &mut rng).is_err());
    }

    #[test]
    fn chain_adapts_into_acceptance_band() {
        for kind in [ChainKind::MatrixWalk, ChainKind::Eigenphase] {
            let cfg = McmcConfig::for_kind(kind, 3).with_chain_length(500);
            let run = mcmc_unitary_chain(3, 2.0, &mut RngStream::new(8, 0), cfg).unwrap();
            let rate = run.diagnostics.acceptance_rate();
            assert!(run.diagnostics.warning().is_none(), "{kind:?}: rate {rate}");
        }
    }

    #[test]
    fn bh_entropy_single_qubit_pair_smoke() {
        // m = n = 1 states are the scalar 1.
        let spec = EnsembleSpec::bures_hall(1, 1).unwrap();
        let mut rng = RngStream::new(0, 0);
        let s = sample_bh(&spec, &mut rng, McmcConfig::matrix_walk(1)).unwrap();
        assert!(von_neumann_entropy(&s).abs() < 1e-15);
    }

    #[test]
    fn wrap_angle_range() {
        for t in [-10.0, -PI, -1.0, 0.0, PI, 3.5, 20.0] {
            let w = wrap_angle(t);
            assert!(w > -PI && w <= PI, "{t} -> {w}");
            let turns = (w - t) / (2.0 * PI);
            assert!((turns - turns.round()).abs() < 1e-12);
        }
    }
}

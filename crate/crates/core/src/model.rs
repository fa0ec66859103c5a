//! System configuration, channel and codebook generation, and the
//! deterministic randomness contract.
//!
//! Every random draw in a simulation comes from a stream keyed by
//! `(seed, trial, purpose)`. Streams are ChaCha8 instances whose key is a
//! SHA-256 digest of the seed and purpose label and whose stream id is the
//! trial index, so results do not depend on scheduling order or worker
//! count.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::{haar_unitary, ComplexMatrix, ComplexVector};

/// Largest cooperation-link budget accepted (2^20 local codewords).
pub const MAX_BCL: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CodebookMode {
    #[default]
    Haar,
    Dft,
}

/// Feedback pipeline run by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Conventional,
    #[default]
    Cooperative,
    /// Closed-form mode switch picks one of the other two per SNR.
    Adaptive,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Conventional => "conventional",
            Mode::Cooperative => "cooperative",
            Mode::Adaptive => "adaptive",
        })
    }
}

/// Dimensions, SNR, feedback budgets and Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Transmit antennas at the access point.
    pub m: usize,
    /// Receive antennas per user.
    pub n: usize,
    /// Users in the cell.
    pub k: usize,
    /// Linear SNR.
    pub rho: f64,
    /// Cooperation-link bits; the local codebook has `2^b_cl` words.
    pub b_cl: u32,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub codebook_mode: CodebookMode,
    /// Keep one global codebook for the whole run instead of redrawing it
    /// every trial.
    #[serde(default)]
    pub fixed_global_codebook: bool,
}

impl SystemConfig {
    pub fn new(m: usize, n: usize, k: usize, rho: f64, b_cl: u32) -> Self {
        Self {
            m,
            n,
            k,
            rho,
            b_cl,
            trials: 10_000,
            seed: 0,
            codebook_mode: CodebookMode::Haar,
            fixed_global_codebook: false,
        }
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    /// Global feedback bits, `⌈log₂ M⌉`.
    pub fn b(&self) -> u32 {
        (self.m as f64).log2().ceil() as u32
    }

    /// Local codebook size `2^b_cl`.
    pub fn q_cl(&self) -> usize {
        1usize << self.b_cl
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if self.n + 1 > self.m {
            return Err(Error::Config(format!(
                "global combining needs N+1 <= M, got N={} M={}",
                self.n, self.m
            )));
        }
        if !self.k.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "K must be even to form cooperation pairs, got {}",
                self.k
            )));
        }
        if self.k < 2 * self.m {
            return Err(Error::Config(format!(
                "K must be at least 2M = {}, got {}",
                2 * self.m,
                self.k
            )));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if self.b_cl > MAX_BCL {
            return Err(Error::Config(format!(
                "b_cl must be at most {MAX_BCL}, got {}",
                self.b_cl
            )));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// What a random stream is used for. Distinct labels give independent
/// streams for the same trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    GlobalCodebook,
    LocalCodebook { b_cl: u32 },
    Channel { user: u32 },
    Noise { user: u32 },
    Symbols,
    Surrogate,
    Test(u64),
}

impl Purpose {
    fn label(&self) -> [u8; 16] {
        let (tag, a): (u64, u64) = match *self {
            Purpose::GlobalCodebook => (1, 0),
            Purpose::LocalCodebook { b_cl } => (2, b_cl as u64),
            Purpose::Channel { user } => (3, user as u64),
            Purpose::Noise { user } => (4, user as u64),
            Purpose::Symbols => (5, 0),
            Purpose::Surrogate => (6, 0),
            Purpose::Test(x) => (7, x),
        };
        let mut out = [0u8; 16];
        out[..8].copy_from_slice(&tag.to_le_bytes());
        out[8..].copy_from_slice(&a.to_le_bytes());
        out
    }
}

/// Counter-based random stream.
#[derive(Debug, Clone)]
pub struct RandomStream {
    inner: ChaCha8Rng,
}

impl RandomStream {
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// `CN(0, 1)`: real and imaginary parts each `N(0, 1/2)`.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.standard_normal() * s, self.standard_normal() * s)
    }

    /// Uniform phase `e^{iψ}`, `ψ ~ U[0, 2π)`.
    pub fn unit_phase(&mut self) -> Complex64 {
        let psi = self.inner.gen::<f64>() * std::f64::consts::TAU;
        Complex64::from_polar(1.0, psi)
    }

    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// Stream for `(seed, trial, purpose)` at resample attempt 0.
pub fn derive_trial_rng(seed: u64, trial: u64, purpose: Purpose) -> RandomStream {
    derive_trial_rng_attempt(seed, trial, purpose, 0)
}

/// Stream for a resampled draw of the same trial.
pub fn derive_trial_rng_attempt(
    seed: u64,
    trial: u64,
    purpose: Purpose,
    attempt: u32,
) -> RandomStream {
    let mut hasher = Sha256::new();
    hasher.update(b"coopfb-stream-v1");
    hasher.update(seed.to_le_bytes());
    hasher.update(purpose.label());
    hasher.update(attempt.to_le_bytes());
    let key: [u8; 32] = hasher.finalize().into();
    let mut inner = ChaCha8Rng::from_seed(key);
    inner.set_stream(trial);
    RandomStream { inner }
}

/// Per-user `N x M` channel with i.i.d. `CN(0,1)` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub user: usize,
    pub h: ComplexMatrix,
}

pub fn gen_channel(cfg: &SystemConfig, user: usize, rng: &mut RandomStream) -> ChannelMatrix {
    let data = (0..cfg.n * cfg.m).map(|_| rng.complex_gaussian()).collect();
    ChannelMatrix {
        user,
        h: ComplexMatrix::from_row_major(cfg.n, cfg.m, data),
    }
}

/// Unitary `M x M` codebook; codeword `m` is column `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalCodebook {
    c: ComplexMatrix,
    codewords: Vec<ComplexVector>,
}

impl GlobalCodebook {
    pub fn from_unitary(c: ComplexMatrix) -> Self {
        let codewords = (0..c.cols()).map(|j| c.column(j)).collect();
        Self { c, codewords }
    }

    /// Normalised DFT matrix, `[C]_{ij} = e^{-2πi ij/M} / √M`.
    pub fn dft(m: usize) -> Self {
        let scale = 1.0 / (m as f64).sqrt();
        let mut c = ComplexMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                let angle = -std::f64::consts::TAU * (i * j) as f64 / m as f64;
                c[(i, j)] = Complex64::from_polar(scale, angle);
            }
        }
        Self::from_unitary(c)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.c
    }

    pub fn size(&self) -> usize {
        self.codewords.len()
    }

    /// Zero-based codeword access.
    pub fn codeword(&self, m: usize) -> &ComplexVector {
        &self.codewords[m]
    }

    pub fn codewords(&self) -> &[ComplexVector] {
        &self.codewords
    }
}

pub fn gen_global_codebook(cfg: &SystemConfig, rng: &mut RandomStream) -> GlobalCodebook {
    match cfg.codebook_mode {
        CodebookMode::Haar => GlobalCodebook::from_unitary(haar_unitary(cfg.m, rng)),
        CodebookMode::Dft => GlobalCodebook::dft(cfg.m),
    }
}

/// RVQ codebook of `2^b_cl` isotropic unit vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCodebook {
    pub words: Vec<ComplexVector>,
}

pub fn gen_local_codebook(cfg: &SystemConfig, rng: &mut RandomStream) -> LocalCodebook {
    let words = (0..cfg.q_cl())
        .map(|_| loop {
            let v = ComplexVector::new((0..cfg.m).map(|_| rng.complex_gaussian()).collect());
            if let Some(u) = v.normalized() {
                break u;
            }
        })
        .collect();
    LocalCodebook { words }
}

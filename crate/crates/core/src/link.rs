//! Downlink symbol path of a cooperation unit, the four-term split of the
//! combined received scalar, and numerical SINR / sum rate.
//!
//! The received scalar at the MU after global combining is
//! `z̄ᴴ(√ρ H̄_dl x + n̄)` with `x = C s / √M`. Writing the downlink
//! effective channel as `h̄_qu + e_{b|m}` and splitting `h̄_qu` into its
//! component along `c^m` and the unit error `ē` gives the desired term,
//! global interference, local interference and noise.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::cooperation::{GlobalChannel, LocalCsi};
use crate::model::{ChannelMatrix, GlobalCodebook, RandomStream};
use crate::numerics::{inner, ComplexVector};
use crate::qbc::sinr_for_beam;
use crate::scheduler::ScheduleResult;

#[derive(Debug, Clone, PartialEq)]
pub struct DownlinkObservation {
    /// Signals at the MU's own antennas.
    pub y_a: ComplexVector,
    /// AU's locally combined and forwarded scalar.
    pub y_b_combined: Complex64,
    /// `[y_a; y_b_combined]`.
    pub y_bar: ComplexVector,
    pub symbols: ComplexVector,
    /// `[n_a; z_bᴴ n_b]`, the noise seen by the stacked receiver.
    pub noise_bar: ComplexVector,
}

/// Transmitted vector `x = C s / √M`.
pub fn transmit_vector(cb: &GlobalCodebook, s: &[Complex64]) -> ComplexVector {
    cb.matrix()
        .mul_vec(s)
        .scale_real(1.0 / (cb.size() as f64).sqrt())
}

/// Unit-modulus symbols with uniform phase on every beam.
pub fn draw_symbols(m: usize, rng: &mut RandomStream) -> ComplexVector {
    ComplexVector::new((0..m).map(|_| rng.unit_phase()).collect())
}

/// Runs the downlink of one cooperation unit: both users receive, the AU
/// combines with its local combiner and forwards, the MU stacks and
/// combines with `z_bar`. Returns the observation and the final scalar.
#[allow(clippy::too_many_arguments)]
pub fn simulate_symbol_path(
    h_a: &ChannelMatrix,
    h_b: &ChannelMatrix,
    local_b: &LocalCsi,
    z_bar: &[Complex64],
    cb: &GlobalCodebook,
    s: &[Complex64],
    rho: f64,
    rng: &mut RandomStream,
) -> (DownlinkObservation, Complex64) {
    let n = h_a.h.rows();
    let x = transmit_vector(cb, s);
    let sq = rho.sqrt();
    let n_a: Vec<Complex64> = (0..n).map(|_| rng.complex_gaussian()).collect();
    let n_b: Vec<Complex64> = (0..h_b.h.rows()).map(|_| rng.complex_gaussian()).collect();

    let y_a = h_a.h.mul_vec(&x).scale_real(sq).add(&ComplexVector::new(n_a.clone()));
    let y_b = h_b.h.mul_vec(&x).scale_real(sq).add(&ComplexVector::new(n_b.clone()));
    let y_b_combined = inner(&local_b.combiner, &y_b);

    let mut y_bar = y_a.as_slice().to_vec();
    y_bar.push(y_b_combined);
    let mut noise_bar = n_a;
    noise_bar.push(inner(&local_b.combiner, &n_b));
    let y_bar = ComplexVector::new(y_bar);
    let out = inner(z_bar, &y_bar);
    (
        DownlinkObservation {
            y_a,
            y_b_combined,
            y_bar,
            symbols: ComplexVector::new(s.to_vec()),
            noise_bar: ComplexVector::new(noise_bar),
        },
        out,
    )
}

/// `H̄_dlᴴ z̄`.
pub fn downlink_effective_channel(g: &GlobalChannel, z_bar: &[Complex64]) -> ComplexVector {
    g.downlink.conj_transpose_mul_vec(z_bar)
}

/// `H̄_quᴴ z̄`.
pub fn quantized_effective_channel(g: &GlobalChannel, z_bar: &[Complex64]) -> ComplexVector {
    g.quantized.conj_transpose_mul_vec(z_bar)
}

/// Local error carried into the downlink channel:
/// `e_{b|m} = ([z̄]_{N+1} ‖h_virt‖ sin φ) e_b`.
pub fn local_error_vector(local_b: &LocalCsi, z_bar: &[Complex64]) -> ComplexVector {
    let m = local_b.virtual_channel.len();
    match &local_b.error_direction {
        Some(e) => e.scale(z_bar[z_bar.len() - 1] * local_b.error_magnitude()),
        None => ComplexVector::zeros(m),
    }
}

/// Split of an effective channel against codeword `c`:
/// `h = ‖h‖ cos θ c + ‖h‖ sin θ ē` with `ē ⟂ c` unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct CodewordSplit {
    pub norm_sqr: f64,
    /// `cᴴh / ‖h‖`, real and nonnegative for QBC outputs.
    pub cos_theta: Complex64,
    pub sin2_theta: f64,
    /// `None` when `h` is exactly parallel to `c`.
    pub error_direction: Option<ComplexVector>,
}

pub fn split_against_codeword(h: &ComplexVector, c: &ComplexVector) -> CodewordSplit {
    let norm_sqr = h.norm_sqr();
    let norm = norm_sqr.sqrt();
    let proj = inner(c, h);
    let cos_theta = proj / norm;
    let sin2_theta = (1.0 - cos_theta.norm_sqr()).max(0.0);
    let residual = h.sub(&c.scale(proj));
    let mag = norm * sin2_theta.sqrt();
    let error_direction = (mag > 0.0).then(|| residual.scale_real(1.0 / mag));
    CodewordSplit {
        norm_sqr,
        cos_theta,
        sin2_theta,
        error_direction,
    }
}

/// Terms of the combined received scalar for beam `m`. The payload terms
/// are unscaled; [`DecompositionTerms::recombine`] applies `√(ρ/M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTerms {
    pub beam: usize,
    pub scale: f64,
    pub desired: Complex64,
    /// Global interference from each beam `ℓ` (zero at `ℓ = m`).
    pub global_interference: Vec<Complex64>,
    /// Local interference from each beam `ℓ` (zero at `ℓ = m`).
    pub local_interference: Vec<Complex64>,
    pub noise: Complex64,
}

impl DecompositionTerms {
    pub fn recombine(&self) -> Complex64 {
        let payload = self.desired
            + self.global_interference.iter().sum::<Complex64>()
            + self.local_interference.iter().sum::<Complex64>();
        payload * self.scale + self.noise
    }
}

/// Splits `z̄ᴴ(√ρ H̄_dl C s/√M + n̄)` for the MU scheduled on beam `m`.
#[allow(clippy::too_many_arguments)]
pub fn decompose_received(
    g: &GlobalChannel,
    local_b: &LocalCsi,
    z_bar: &[Complex64],
    cb: &GlobalCodebook,
    m: usize,
    s: &[Complex64],
    rho: f64,
    noise_bar: &[Complex64],
) -> DecompositionTerms {
    let size = cb.size();
    let h_qu = quantized_effective_channel(g, z_bar);
    let e_bm = local_error_vector(local_b, z_bar);
    let split = split_against_codeword(&h_qu, cb.codeword(m));
    let norm = split.norm_sqr.sqrt();

    let c_m = cb.codeword(m);
    let aligned = c_m.scale(split.cos_theta * norm).add(&e_bm);
    let desired = inner(&aligned, c_m) * s[m];

    let mut global_interference = vec![Complex64::new(0.0, 0.0); size];
    let mut local_interference = vec![Complex64::new(0.0, 0.0); size];
    let g_mag = norm * split.sin2_theta.sqrt();
    for l in (0..size).filter(|&l| l != m) {
        let c_l = cb.codeword(l);
        if let Some(e) = &split.error_direction {
            global_interference[l] = inner(e, c_l) * g_mag * s[l];
        }
        local_interference[l] = inner(&e_bm, c_l) * s[l];
    }
    DecompositionTerms {
        beam: m,
        scale: (rho / size as f64).sqrt(),
        desired,
        global_interference,
        local_interference,
        noise: inner(z_bar, noise_bar),
    }
}

/// SINR of beam `m` for a downlink effective channel, counting all other
/// beams as interference (full load).
pub fn numerical_sinr(h_eff: &[Complex64], cb: &GlobalCodebook, m: usize, rho: f64) -> f64 {
    sinr_for_beam(h_eff, cb, m, rho)
}

/// Lower-bound SINR with the exact local interference power
/// `|[z̄]_{N+1}|² ‖h_virt‖² sin² φ`.
pub fn lower_bound_sinr(u: f64, cos2_theta: f64, local_power: f64, rho: f64, m: usize) -> f64 {
    let r = rho / m as f64;
    r * u * cos2_theta / (1.0 + r * u * (1.0 - cos2_theta) + r * local_power)
}

/// Approximated SINR with the local interference replaced by its mean,
/// folded into `α`.
pub fn approximated_sinr(u: f64, cos2_theta: f64, alpha: f64, rho: f64, m: usize) -> f64 {
    let r = rho / (m as f64 * alpha);
    r * u * cos2_theta / (1.0 + r * u * (1.0 - cos2_theta))
}

/// `Σ log₂(1 + γ)`.
pub fn sum_rate_from_sinrs<I: IntoIterator<Item = f64>>(sinrs: I) -> f64 {
    sinrs.into_iter().map(|g| (1.0 + g).log2()).sum()
}

/// Sum over assigned beams of `log₂(1 + γ̌)`, with `γ̌` evaluated on each
/// scheduled user's downlink effective channel.
pub fn sum_rate_numerical(
    schedule: &ScheduleResult,
    downlink: &BTreeMap<usize, ComplexVector>,
    cb: &GlobalCodebook,
    rho: f64,
) -> f64 {
    sum_rate_from_sinrs(
        schedule
            .assigned_beams()
            .map(|(m, u)| numerical_sinr(&downlink[&u], cb, m, rho)),
    )
}

//! Closed-form results: expected local quantization error, the Gamma model
//! of the global effective norm, the approximated-SINR cdf, extreme-value
//! estimates of scheduled SINRs and sum rates, and the mode-switch rule.
//!
//! Logarithms inside the extreme-value estimates are natural; `log₂` is
//! used only for rates.

use crate::error::{Error, Result};
use crate::model::Mode;
use crate::numerics::{binomial, ln_beta, ln_gamma};

/// Derived constants for one `(M, N, Qcl, ρ)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisParams {
    pub m: usize,
    pub n: usize,
    pub q_cl: usize,
    pub rho: f64,
    /// Support edge of the local-error cdf.
    pub delta: f64,
    /// Expected local quantization error.
    pub omega: f64,
    /// Expected local interference power.
    pub nu: f64,
    /// Noise-plus-local-interference factor `1 + ρν/M`.
    pub alpha: f64,
    /// Scale of the global effective norm model.
    pub varrho_sq: f64,
}

impl AnalysisParams {
    pub fn new(m: usize, n: usize, q_cl: usize, rho: f64) -> Result<Self> {
        check_dims(m, n)?;
        let delta = local_error_delta(m, n)?;
        let omega = expected_local_error(m, n, q_cl)?;
        let nu = (m - n + 1) as f64 * omega / (n + 1) as f64;
        let alpha = 1.0 + rho * nu / m as f64;
        let varrho_sq = effective_norm_params(m, n, omega)?;
        Ok(Self {
            m,
            n,
            q_cl,
            rho,
            delta,
            omega,
            nu,
            alpha,
            varrho_sq,
        })
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if n == 0 || n >= m || m > 64 {
        return Err(Error::Domain(format!("need 1 <= N < M <= 64, got M={m}, N={n}")));
    }
    Ok(())
}

/// `δ = binom(M−1, N−1)^(−1/(M−N))`.
pub fn local_error_delta(m: usize, n: usize) -> Result<f64> {
    check_dims(m, n)?;
    let b = binomial((m - 1) as u32, (n - 1) as u32)? as f64;
    Ok(b.powf(-1.0 / (m - n) as f64))
}

/// Expected selected local error over `Qcl` RVQ codewords,
/// `Qcl · δ · B(Qcl, (M−N+1)/(M−N))`, evaluated in log domain.
pub fn expected_local_error(m: usize, n: usize, q_cl: usize) -> Result<f64> {
    if q_cl == 0 {
        return Err(Error::Domain("Qcl must be at least 1".into()));
    }
    let delta = local_error_delta(m, n)?;
    let e = (m - n + 1) as f64 / (m - n) as f64;
    let q = q_cl as f64;
    Ok((q.ln() + delta.ln() + ln_beta(q, e)?).exp())
}

/// Small-error cdf of a single codeword's local error, clamped to `[0, 1]`.
pub fn local_error_cdf(s: f64, m: usize, n: usize) -> Result<f64> {
    let delta = local_error_delta(m, n)?;
    if s <= 0.0 {
        return Ok(0.0);
    }
    if s > delta {
        return Ok(1.0);
    }
    let b = binomial((m - 1) as u32, (n - 1) as u32)? as f64;
    Ok((b * s.powi((m - n) as i32)).clamp(0.0, 1.0))
}

/// Comparison curve `[Qcl · binom(M−1, N−1)]^(−1/(M−N))` for the mean
/// local error.
pub fn comparison_local_error(m: usize, n: usize, q_cl: usize) -> Result<f64> {
    check_dims(m, n)?;
    let b = binomial((m - 1) as u32, (n - 1) as u32)? as f64;
    Ok((q_cl as f64 * b).powf(-1.0 / (m - n) as f64))
}

/// `ϱ²` with `ϱ⁻² = [N + M/((1−ω)(M−N+1))]/(N+1)`.
pub fn effective_norm_params(m: usize, n: usize, omega: f64) -> Result<f64> {
    check_dims(m, n)?;
    if !(0.0..1.0).contains(&omega) {
        return Err(Error::Domain(format!("omega must be in [0, 1), got {omega}")));
    }
    let inv = (n as f64 + m as f64 / ((1.0 - omega) * (m - n + 1) as f64)) / (n + 1) as f64;
    Ok(1.0 / inv)
}

/// Gamma density with shape `M−N` and scale `ϱ²`.
pub fn effective_norm_pdf(u: f64, m: usize, n: usize, varrho_sq: f64) -> Result<f64> {
    check_dims(m, n)?;
    if u < 0.0 {
        return Ok(0.0);
    }
    let k = (m - n) as f64;
    if u == 0.0 {
        return Ok(if k == 1.0 { 1.0 / varrho_sq } else { 0.0 });
    }
    let ln = (k - 1.0) * u.ln() - u / varrho_sq - k * varrho_sq.ln() - ln_gamma(k)?;
    Ok(ln.exp())
}

/// Matching cdf, `1 − e^(−x) Σ_{j<M−N} x^j / j!` with `x = u/ϱ²`.
pub fn effective_norm_cdf(u: f64, m: usize, n: usize, varrho_sq: f64) -> Result<f64> {
    check_dims(m, n)?;
    if u <= 0.0 {
        return Ok(0.0);
    }
    let x = u / varrho_sq;
    let mut term = 1.0;
    let mut acc = 1.0;
    for j in 1..(m - n) {
        term *= x / j as f64;
        acc += term;
    }
    Ok((1.0 - (-x).exp() * acc).clamp(0.0, 1.0))
}

/// Cdf of the approximated SINR,
/// `1 − binom(M−1, N) e^(−Mαx/(ρϱ²)) / (x+1)^(M−N−1)`, clamped to `[0, 1]`.
pub fn sinr_cdf(x: f64, m: usize, n: usize, rho: f64, alpha: f64, varrho_sq: f64) -> Result<f64> {
    check_dims(m, n)?;
    if x < 0.0 {
        return Ok(0.0);
    }
    let b = binomial((m - 1) as u32, n as u32)? as f64;
    let tail = b * (-(m as f64) * alpha * x / (rho * varrho_sq)).exp()
        / (x + 1.0).powi((m - n - 1) as i32);
    Ok((1.0 - tail).clamp(0.0, 1.0))
}

/// Candidate CQIs in the `beam`-th (one-based) selection round.
pub fn cqi_candidates(k: usize, m: usize, beam: usize, mode: Mode) -> Result<u64> {
    if beam == 0 || beam > m {
        return Err(Error::Domain(format!("beam {beam} outside 1..={m}")));
    }
    let users_left = match mode {
        Mode::Cooperative => k as i64 - 2 * (beam as i64 - 1),
        Mode::Conventional => k as i64 - (beam as i64 - 1),
        Mode::Adaptive => return Err(Error::Domain("adaptive has no candidate count".into())),
    };
    let q = users_left * (m - beam + 1) as i64;
    if q <= 0 {
        return Err(Error::Domain(format!("no CQI candidates for K={k}, beam {beam}")));
    }
    Ok(q as u64)
}

/// Extreme-value estimate `s[ln A − e·ln(ln A + 1/s)]`, `A = b·Q/s^e`.
fn extreme_value(scale: f64, exponent: i32, binom: f64, q: f64, k: usize, beam: usize) -> Result<f64> {
    let ln_a = binom.ln() + q.ln() - exponent as f64 * scale.ln();
    if ln_a <= 0.0 {
        return Err(Error::InvalidRegime {
            k: k as u32,
            m: beam as u32,
            argument: ln_a.exp(),
        });
    }
    Ok(scale * (ln_a - exponent as f64 * (ln_a + 1.0 / scale).ln()))
}

/// Estimated SINR of the MU scheduled in round `beam` (one-based).
#[allow(clippy::too_many_arguments)]
pub fn estimate_scheduled_sinr(
    beam: usize,
    k: usize,
    m: usize,
    n: usize,
    rho: f64,
    alpha: f64,
    varrho_sq: f64,
    mode: Mode,
) -> Result<f64> {
    check_dims(m, n)?;
    let q = cqi_candidates(k, m, beam, mode)? as f64;
    match mode {
        Mode::Cooperative => {
            let b = binomial((m - 1) as u32, n as u32)? as f64;
            let scale = rho * varrho_sq / (m as f64 * alpha);
            extreme_value(scale, (m - n - 1) as i32, b, q, k, beam)
        }
        Mode::Conventional => {
            let b = binomial((m - 1) as u32, (n - 1) as u32)? as f64;
            extreme_value(rho / m as f64, (m - n) as i32, b, q, k, beam)
        }
        Mode::Adaptive => Err(Error::Domain("estimate needs a concrete mode".into())),
    }
}

/// Estimated sum rate over all `M` beams.
pub fn estimate_sum_rate(k: usize, m: usize, n: usize, rho: f64, b_cl: u32, mode: Mode) -> Result<f64> {
    let (alpha, varrho_sq) = match mode {
        Mode::Cooperative => {
            let p = AnalysisParams::new(m, n, 1usize << b_cl, rho)?;
            (p.alpha, p.varrho_sq)
        }
        _ => (1.0, 1.0),
    };
    let mut r = 0.0;
    for beam in 1..=m {
        let g = estimate_scheduled_sinr(beam, k, m, n, rho, alpha, varrho_sq, mode)?;
        r += (1.0 + g).log2();
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDecision {
    pub mode: Mode,
    pub rate_cooperative: f64,
    pub rate_conventional: f64,
    /// `R_prop − R_conv`.
    pub delta_rate: f64,
}

/// Cooperation is chosen only when the cooperative estimate is strictly
/// larger.
pub fn decide(rate_cooperative: f64, rate_conventional: f64) -> ModeDecision {
    let delta_rate = rate_cooperative - rate_conventional;
    ModeDecision {
        mode: if delta_rate > 0.0 {
            Mode::Cooperative
        } else {
            Mode::Conventional
        },
        rate_cooperative,
        rate_conventional,
        delta_rate,
    }
}

pub fn mode_switch(k: usize, m: usize, n: usize, rho: f64, b_cl: u32) -> Result<ModeDecision> {
    let coop = estimate_sum_rate(k, m, n, rho, b_cl, Mode::Cooperative)?;
    let conv = estimate_sum_rate(k, m, n, rho, b_cl, Mode::Conventional)?;
    Ok(decide(coop, conv))
}

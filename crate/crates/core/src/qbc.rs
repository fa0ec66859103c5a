//! Quantization-based combining (QBC).
//!
//! For a target codeword `c` and a channel `H` with `n_r <= M` rows, the
//! combiner `z` makes the effective channel `Hᴴz` point along the
//! projection of `c` onto the row space of `H`, which is the direction in
//! that space closest to `c`. The same code serves local combining over
//! the `N` own antennas and global combining over `N + 1` rows.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{ChannelMatrix, GlobalCodebook};
use crate::numerics::{
    inner, orthonormal_basis, subspace_project_unit, Cholesky, ComplexMatrix, ComplexVector,
};

/// Result of combining towards one codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedChannel {
    /// Unit-norm receive combiner, one entry per channel row.
    pub combiner: ComplexVector,
    /// `Hᴴ z`.
    pub effective: ComplexVector,
    /// Zero-based index of the target codeword.
    pub codeword: usize,
}

impl CombinedChannel {
    /// `1 - |cᴴh|² / ‖h‖²` against an arbitrary unit vector `c`.
    pub fn quantization_error(&self, c: &[Complex64]) -> f64 {
        let h2 = self.effective.norm_sqr();
        1.0 - inner(c, &self.effective).norm_sqr() / h2
    }
}

/// QBC state prepared once per channel matrix: the orthonormal row-space
/// basis and the Cholesky factor of `H Hᴴ`.
#[derive(Debug, Clone)]
pub struct Combiner {
    h: ComplexMatrix,
    basis: ComplexMatrix,
    gram: Cholesky,
}

impl Combiner {
    pub fn new(h: &ComplexMatrix) -> Result<Self> {
        let basis = orthonormal_basis(h)?;
        let gram = Cholesky::new(&h.gram())?;
        Ok(Self {
            h: h.clone(),
            basis,
            gram,
        })
    }

    pub fn channel(&self) -> &ComplexMatrix {
        &self.h
    }

    /// `‖Qᴴc‖²`: the squared cosine between unit `c` and the effective
    /// channel that [`Combiner::combine`] would produce for it.
    pub fn alignment(&self, c: &[Complex64]) -> f64 {
        self.basis.conj_transpose_mul_vec(c).norm_sqr()
    }

    pub fn combine(&self, c: &[Complex64], codeword: usize) -> Result<CombinedChannel> {
        let projected = subspace_project_unit(c, &self.basis)?;
        let u = self.gram.solve(&self.h.mul_vec(&projected));
        let combiner = u
            .normalized()
            .ok_or(Error::DegenerateProjection)?;
        let effective = self.h.conj_transpose_mul_vec(&combiner);
        Ok(CombinedChannel {
            combiner,
            effective,
            codeword,
        })
    }
}

/// `z = normalize((H Hᴴ)⁻¹ H c_proj)`, `h_eff = Hᴴ z`.
pub fn combine_for_codeword(
    h: &ComplexMatrix,
    c: &[Complex64],
    codeword: usize,
) -> Result<CombinedChannel> {
    Combiner::new(h)?.combine(c, codeword)
}

/// `|hᴴc^ℓ|²` for every codeword `ℓ`.
pub fn beam_gains(h_eff: &[Complex64], cb: &GlobalCodebook) -> Vec<f64> {
    cb.codewords()
        .iter()
        .map(|c| inner(h_eff, c).norm_sqr())
        .collect()
}

/// `gains[m] / (M/ρ + Σ_{ℓ≠m} gains[ℓ])` with `M = gains.len()`.
#[inline]
pub fn sinr_from_gains(gains: &[f64], m: usize, rho: f64) -> f64 {
    let interference: f64 = gains
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != m)
        .map(|(_, g)| g)
        .sum();
    gains[m] / (gains.len() as f64 / rho + interference)
}

/// SINR of beam `m` (zero-based) for effective channel `h_eff` under
/// equal-power random beamforming over the codebook columns.
pub fn sinr_for_beam(h_eff: &[Complex64], cb: &GlobalCodebook, m: usize, rho: f64) -> f64 {
    sinr_from_gains(&beam_gains(h_eff, cb), m, rho)
}

/// CDI/CQI report of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiReport {
    pub user: usize,
    /// Zero-based selected codeword.
    pub cdi: usize,
    /// Linear SINR for the selected codeword.
    pub cqi: f64,
    pub combiner: ComplexVector,
}

/// Combiners and beam gains for every codeword of the global codebook.
/// SNR-independent, so one instance serves a whole SNR sweep.
#[derive(Debug, Clone)]
pub struct BeamSet {
    pub combined: Vec<CombinedChannel>,
    /// `gains[m][ℓ] = |h_{|m}ᴴ c^ℓ|²`.
    pub gains: Vec<Vec<f64>>,
}

impl BeamSet {
    pub fn new(h: &ComplexMatrix, cb: &GlobalCodebook) -> Result<Self> {
        let combiner = Combiner::new(h)?;
        let mut combined = Vec::with_capacity(cb.size());
        let mut gains = Vec::with_capacity(cb.size());
        for (m, c) in cb.codewords().iter().enumerate() {
            // A codeword orthogonal to the row space gets zero gain from
            // every combiner; any unit combiner then reports SINR 0.
            let cc = match combiner.combine(c, m) {
                Err(Error::DegenerateProjection) => {
                    combiner.combine(&combiner.basis.column(0), m)?
                }
                other => other?,
            };
            gains.push(beam_gains(&cc.effective, cb));
            combined.push(cc);
        }
        Ok(Self { combined, gains })
    }

    pub fn sinr(&self, m: usize, rho: f64) -> f64 {
        sinr_from_gains(&self.gains[m], m, rho)
    }

    /// Argmax over beams; ties go to the lowest index.
    pub fn select(&self, rho: f64) -> (usize, f64) {
        let mut best = (0, self.sinr(0, rho));
        for m in 1..self.gains.len() {
            let s = self.sinr(m, rho);
            if s > best.1 {
                best = (m, s);
            }
        }
        best
    }

    pub fn report(&self, user: usize, rho: f64) -> CsiReport {
        let (cdi, cqi) = self.select(rho);
        CsiReport {
            user,
            cdi,
            cqi,
            combiner: self.combined[cdi].combiner.clone(),
        }
    }
}

/// Combines towards every codeword, evaluates each SINR, and reports the best.
pub fn select_csi(ch: &ChannelMatrix, cb: &GlobalCodebook, rho: f64) -> Result<CsiReport> {
    Ok(BeamSet::new(&ch.h, cb)?.report(ch.user, rho))
}

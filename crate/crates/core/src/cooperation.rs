//! Cooperation-unit processing: local CSI over the RVQ codebook, the
//! stacked `(N+1) x M` global channel, global CSI, and MU/AU roles.

use num_complex::Complex64;

use crate::error::Result;
use crate::model::{ChannelMatrix, GlobalCodebook, LocalCodebook};
use crate::numerics::{ComplexMatrix, ComplexVector};
use crate::qbc::{BeamSet, Combiner, CsiReport};

/// Local CDI/CQI of one user plus the unquantized quantities it was
/// derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCsi {
    /// Zero-based index of the selected local codeword.
    pub index: usize,
    /// Selected codeword `v`.
    pub cdi: ComplexVector,
    /// `τ = ‖h_virt‖ cos φ`.
    pub cqi: f64,
    /// Local combiner over the `N` own antennas.
    pub combiner: ComplexVector,
    /// Unquantized virtual vector `h_virt = Hᴴ z`.
    pub virtual_channel: ComplexVector,
    /// `sin² φ = 1 - |vᴴ h_virt|² / ‖h_virt‖²`.
    pub sin2_phi: f64,
    /// Unit error direction `e_b` with `h_virt = τ v + ‖h_virt‖ sin φ e_b`;
    /// `None` when the error is exactly zero.
    pub error_direction: Option<ComplexVector>,
}

impl LocalCsi {
    /// `ĥ = τ v`.
    pub fn quantized_virtual(&self) -> ComplexVector {
        self.cdi.scale_real(self.cqi)
    }

    /// `‖h_virt‖ sin φ`.
    pub fn error_magnitude(&self) -> f64 {
        self.virtual_channel.norm() * self.sin2_phi.max(0.0).sqrt()
    }

    fn from_virtual(index: usize, cdi: &ComplexVector, combiner: ComplexVector, h_virt: ComplexVector) -> Self {
        let norm_sqr = h_virt.norm_sqr();
        let cos2 = (cdi.dot(&h_virt).norm_sqr() / norm_sqr).min(1.0);
        let sin2_phi = 1.0 - cos2;
        let cqi = norm_sqr.sqrt() * cos2.sqrt();
        let residual = h_virt.sub(&cdi.scale_real(cqi));
        let err_mag = norm_sqr.sqrt() * sin2_phi.max(0.0).sqrt();
        let error_direction = (err_mag > 0.0).then(|| residual.scale_real(1.0 / err_mag));
        Self {
            index,
            cdi: cdi.clone(),
            cqi,
            combiner,
            virtual_channel: h_virt,
            sin2_phi,
            error_direction,
        }
    }
}

/// Picks the local codeword with the largest `cos² φ` (lowest index on
/// ties) and returns the quantities for it.
///
/// `cos² φ_q` equals `‖Qᴴ d_q‖²` for the row-space basis `Q`, so only the
/// winning codeword needs a full combiner.
pub fn acquire_local_csi(ch: &ChannelMatrix, cb: &LocalCodebook) -> Result<LocalCsi> {
    let combiner = Combiner::new(&ch.h)?;
    let mut best = (0usize, f64::NEG_INFINITY);
    for (q, d) in cb.words.iter().enumerate() {
        let a = combiner.alignment(d);
        if a > best.1 {
            best = (q, a);
        }
    }
    let d = &cb.words[best.0];
    let cc = combiner.combine(d, best.0)?;
    Ok(LocalCsi::from_virtual(best.0, d, cc.combiner, cc.effective))
}

/// Stacked channels of a cooperation unit seen from the MU side.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalChannel {
    /// Own rows over the partner's quantized virtual row `ĥᴴ`.
    pub quantized: ComplexMatrix,
    /// Own rows over the partner's unquantized virtual row `h_virtᴴ`.
    pub downlink: ComplexMatrix,
}

fn stack(h: &ComplexMatrix, extra: &[Complex64]) -> ComplexMatrix {
    let mut data = h.as_slice().to_vec();
    data.extend(extra.iter().map(|z| z.conj()));
    ComplexMatrix::from_row_major(h.rows() + 1, h.cols(), data)
}

pub fn build_global_matrix(own: &ChannelMatrix, partner: &LocalCsi) -> GlobalChannel {
    GlobalChannel {
        quantized: stack(&own.h, &partner.quantized_virtual()),
        downlink: stack(&own.h, &partner.virtual_channel),
    }
}

/// Global QBC over the quantized global channel for every codeword.
pub fn global_beams(g: &GlobalChannel, cb: &GlobalCodebook) -> Result<BeamSet> {
    BeamSet::new(&g.quantized, cb)
}

/// Global CDI/CQI of `user`, together with the global combiner.
pub fn acquire_global_csi(
    user: usize,
    g: &GlobalChannel,
    cb: &GlobalCodebook,
    rho: f64,
) -> Result<(CsiReport, ComplexVector)> {
    let beams = global_beams(g, cb)?;
    let report = beams.report(user, rho);
    let z = report.combiner.clone();
    Ok((report, z))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoleAssignment {
    pub mu: usize,
    pub au: usize,
    pub mu_csi: CsiReport,
}

/// The user with the larger global CQI becomes MU; ties go to the lower
/// user index.
pub fn assign_roles(csi_a: CsiReport, csi_b: CsiReport) -> RoleAssignment {
    let (lo, hi) = if csi_a.user <= csi_b.user {
        (csi_a, csi_b)
    } else {
        (csi_b, csi_a)
    };
    if hi.cqi > lo.cqi {
        RoleAssignment {
            mu: hi.user,
            au: lo.user,
            mu_csi: hi,
        }
    } else {
        RoleAssignment {
            mu: lo.user,
            au: hi.user,
            mu_csi: lo,
        }
    }
}

/// Zero-based cooperation pairs `(0,1), (2,3), …`.
pub fn cooperation_pairs(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..k / 2).map(|i| (2 * i, 2 * i + 1))
}

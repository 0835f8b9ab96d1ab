//! Analytic honest-channel model producing expected measurement statistics.
//!
//! The source paper states the ingredients (fiber attenuation of one decade
//! per 50 km, misalignment error e_ch, dark counts) but not the detection
//! formulas; the model here is the artifact's reconstruction, documented
//! formula by formula and cross-checked against the Monte Carlo sampler.
//!
//! Detection model, for one intensity mu_A and one sender basis:
//! - Poissonian pulses split linearly, so each detector sees an independent
//!   Poissonian mean photon number. The matched line's total mean is
//!   mu_A eta_ch eta_line p_line, divided (1-e_ch) / e_ch between the
//!   correct and wrong detector. Misalignment acts as a global polarization
//!   rotation before the receiver, which affects both lines identically;
//!   mismatched-basis light splits between the two detectors of a line, and
//!   since only the line total enters any recorded statistic that split
//!   never appears in the formulas below.
//! - A detector with mean lambda clicks unless it sees no photon and no dark
//!   count ([`click_prob`]); a line clicks unless both of its detectors stay
//!   silent.
//! - A round is conclusive for a basis when exactly that line clicked; a bit
//!   error in a conclusive round requires the wrong detector to click and
//!   the correct one to stay silent, or a double click assigned to the wrong
//!   bit with probability 1/2.
//!
//! [`expected_stats`] assembles the passive receiver's per-intensity
//! fractions from these rules; [`active_expected_stats`] does the same for
//! an actively switched receiver where both bases see the Z-line efficiency
//! and cross clicks cannot occur. [`cell_probs`] exposes the per-(intensity,
//! sender-basis) class probabilities so the Monte Carlo sampler draws from
//! exactly the same model.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{IntensityTag, ObservedStats, PerIntensity, ReceiverModel, SourceModel};

/// Kilometers of fiber per decade of attenuation in the reference model.
pub const KM_PER_DECADE: f64 = 50.0;

fn default_km_per_decade() -> f64 {
    KM_PER_DECADE
}

/// Failure modes of channel construction.
#[derive(Debug, Error)]
pub enum ChannelError {
    /// A parameter left its allowed range.
    #[error("channel parameter {field} = {value} outside {expected}")]
    OutOfRange {
        /// Offending field name.
        field: &'static str,
        /// Offending value.
        value: f64,
        /// Human-readable expected range.
        expected: &'static str,
    },
}

/// Fiber link plus misalignment between sender and receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Fiber length in kilometers.
    pub length_km: f64,
    /// Misalignment error probability, at most 1/2.
    pub e_ch: f64,
    /// Attenuation scale: one decade of loss per this many kilometers.
    #[serde(default = "default_km_per_decade")]
    pub km_per_decade: f64,
}

impl ChannelModel {
    /// Channel transmittance for this model's length and attenuation scale.
    pub fn transmittance(&self) -> f64 {
        10f64.powf(-self.length_km / self.km_per_decade)
    }
}

/// Validate channel parameters, returning the model on success.
pub fn validate_channel(raw: ChannelModel) -> Result<ChannelModel, ChannelError> {
    if !(raw.length_km >= 0.0 && raw.length_km.is_finite()) {
        return Err(ChannelError::OutOfRange {
            field: "length_km",
            value: raw.length_km,
            expected: "[0, inf)",
        });
    }
    if !(0.0..=0.5).contains(&raw.e_ch) {
        return Err(ChannelError::OutOfRange {
            field: "e_ch",
            value: raw.e_ch,
            expected: "[0, 0.5]",
        });
    }
    if !(raw.km_per_decade > 0.0 && raw.km_per_decade.is_finite()) {
        return Err(ChannelError::OutOfRange {
            field: "km_per_decade",
            value: raw.km_per_decade,
            expected: "(0, inf)",
        });
    }
    Ok(raw)
}

/// Transmittance of l kilometers of reference fiber, 10^(-l/50).
pub fn fiber_transmittance(l_km: f64) -> Result<f64, ChannelError> {
    if !(l_km >= 0.0) {
        return Err(ChannelError::OutOfRange {
            field: "length_km",
            value: l_km,
            expected: "[0, inf)",
        });
    }
    Ok(10f64.powf(-l_km / KM_PER_DECADE))
}

/// Click probability of a threshold detector with Poissonian mean `lambda`
/// and dark-count probability `d`: 1 - (1-d) e^(-lambda).
pub fn click_prob(lambda: f64, d: f64) -> f64 {
    1.0 - (1.0 - d) * (-lambda).exp()
}

/// Outcome-class probabilities for one (intensity, sender basis) cell.
///
/// The five classes partition the cell's rounds; the two detection lines
/// click independently, so each probability is a product of line terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProbs {
    /// Conclusive in the sender's basis with the correct bit.
    pub conclusive_ok: f64,
    /// Conclusive in the sender's basis with a bit error.
    pub conclusive_err: f64,
    /// Conclusive in the other basis (discarded at sifting).
    pub mismatch: f64,
    /// Both lines clicked.
    pub cross: f64,
    /// No detector clicked.
    pub no_click: f64,
}

impl CellProbs {
    /// Probability of any click pattern, always 1 up to rounding.
    pub fn total(&self) -> f64 {
        self.conclusive_ok + self.conclusive_err + self.mismatch + self.cross + self.no_click
    }
}

/// Wrong-bit probability within a conclusive line: wrong detector clicked
/// and the correct stayed silent, plus half of the double clicks.
fn line_error(lambda_correct: f64, lambda_wrong: f64, d: f64) -> f64 {
    let c_c = click_prob(lambda_correct, d);
    let c_w = click_prob(lambda_wrong, d);
    c_w * (1.0 - c_c) + 0.5 * c_c * c_w
}

/// Line click probability given the line's total mean photon number.
fn line_click(lambda_total: f64, d: f64) -> f64 {
    1.0 - (1.0 - d) * (1.0 - d) * (-lambda_total).exp()
}

/// Class probabilities for the passive receiver, conditioned on intensity
/// and the sender's basis choice.
pub fn cell_probs(ch: &ChannelModel, m: &ReceiverModel, mu_a: f64, sender_z: bool) -> CellProbs {
    let eta_ch = ch.transmittance();
    let lambda_z = mu_a * eta_ch * m.eta_z * m.p_z;
    let lambda_x = mu_a * eta_ch * m.eta_x * m.p_x();
    let (lambda_matched, lambda_other) = if sender_z {
        (lambda_z, lambda_x)
    } else {
        (lambda_x, lambda_z)
    };
    let p_matched = line_click(lambda_matched, m.d);
    let p_other = line_click(lambda_other, m.d);
    let err = line_error(
        lambda_matched * (1.0 - ch.e_ch),
        lambda_matched * ch.e_ch,
        m.d,
    );
    CellProbs {
        conclusive_ok: (p_matched - err) * (1.0 - p_other),
        conclusive_err: err * (1.0 - p_other),
        mismatch: p_other * (1.0 - p_matched),
        cross: p_matched * p_other,
        no_click: (1.0 - p_matched) * (1.0 - p_other),
    }
}

/// Expected passive-receiver statistics for a channel, receiver, and source.
///
/// Per intensity: Q_Z = p_Z_alice P_Z (1 - P_X), E_X = p_X_alice err_X
/// (1 - P_Z), Q_cross summed over both sender bases; totals weighted by the
/// source's intensity probabilities, with e_Z weighted by each intensity's
/// sifted-key contribution.
pub fn expected_stats(ch: &ChannelModel, m: &ReceiverModel, src: &SourceModel) -> ObservedStats {
    let mut q_z = PerIntensity::from_fn(|_| 0.0);
    let mut e_x = PerIntensity::from_fn(|_| 0.0);
    let mut q_cross = PerIntensity::from_fn(|_| 0.0);
    let mut q_z_total = 0.0;
    let mut err_z_total = 0.0;
    for tag in IntensityTag::ALL {
        let mu_a = src.intensity(tag);
        let z_cell = cell_probs(ch, m, mu_a, true);
        let x_cell = cell_probs(ch, m, mu_a, false);
        let q = src.p_z_alice * (z_cell.conclusive_ok + z_cell.conclusive_err);
        let err_joint = src.p_z_alice * z_cell.conclusive_err;
        *q_z.get_mut(tag) = q;
        *e_x.get_mut(tag) = src.p_x_alice() * x_cell.conclusive_err;
        *q_cross.get_mut(tag) = src.p_z_alice * z_cell.cross + src.p_x_alice() * x_cell.cross;
        let weight = src.prob(tag);
        q_z_total += weight * q;
        err_z_total += weight * err_joint;
    }
    ObservedStats {
        q_z_given: q_z,
        e_x_given: e_x,
        q_cross_given: q_cross,
        q_z_total,
        e_z: if q_z_total > 0.0 {
            err_z_total / q_z_total
        } else {
            0.0
        },
    }
}

/// Expected statistics for an actively switched receiver.
///
/// Bob commits to a basis before detection, so every round sends all light
/// through the Z-line efficiency `m.eta_z` and cross clicks cannot occur;
/// `m.p_z` is ignored in favor of the explicit `p_z_bob`, which the sweep
/// optimizes separately. Dark counts `m.d` apply to the chosen line's two
/// detectors.
pub fn active_expected_stats(
    ch: &ChannelModel,
    m: &ReceiverModel,
    src: &SourceModel,
    p_z_bob: f64,
) -> ObservedStats {
    let eta_ch = ch.transmittance();
    let mut q_z = PerIntensity::from_fn(|_| 0.0);
    let mut e_x = PerIntensity::from_fn(|_| 0.0);
    let mut q_z_total = 0.0;
    let mut err_z_total = 0.0;
    for tag in IntensityTag::ALL {
        let lambda = src.intensity(tag) * eta_ch * m.eta_z;
        let p_click = line_click(lambda, m.d);
        let err = line_error(lambda * (1.0 - ch.e_ch), lambda * ch.e_ch, m.d);
        let q = src.p_z_alice * p_z_bob * p_click;
        let err_joint = src.p_z_alice * p_z_bob * err;
        *q_z.get_mut(tag) = q;
        *e_x.get_mut(tag) = src.p_x_alice() * (1.0 - p_z_bob) * err;
        let weight = src.prob(tag);
        q_z_total += weight * q;
        err_z_total += weight * err_joint;
    }
    ObservedStats {
        q_z_given: q_z,
        e_x_given: e_x,
        q_cross_given: PerIntensity::from_fn(|_| 0.0),
        q_z_total,
        e_z: if q_z_total > 0.0 {
            err_z_total / q_z_total
        } else {
            0.0
        },
    }
}

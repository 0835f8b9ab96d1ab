//! Asymptotic secret-key rates built from decoy-state bounds.
//!
//! Three variants share one skeleton: vacuum contribution plus single-photon
//! gain times the privacy-amplification factor, minus error-correction cost.
//!
//! - [`passive_rate`]: the passive receiver. Multi-photon leakage through
//!   simultaneous Z and X clicks erodes the single-photon gain by
//!   alpha * Qcross1_up before privacy amplification.
//! - [`virtual_rate`]: the same expression with the alpha penalty removed;
//!   an upper reference that quantifies what the cross-click correction
//!   costs.
//! - [`active_rate`]: a comparator for an actively switched receiver. The
//!   source paper plots this curve without specifying it, so the formula
//!   here is the standard asymptotic decoy rate with active sifting factors;
//!   reports label it `active-comparator` to mark the reconstruction.
//!
//! A rate is only claimed when its validity condition holds: positive
//! effective single-photon gain, entropy argument at most 1/2, and a
//! positive resulting rate. Anything else is reported as R = 0 with
//! `valid = false` and a reason; the privacy-amplification bound is never
//! evaluated outside its monotone range.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decoy::{estimate, DecoyEstimates};
use crate::model::{ObservedStats, ReceiverModel, SourceModel};
use crate::splitter_povm::{alpha, sifting_probs, SiftingProbs};

/// Error-correction inefficiency used throughout the artifact.
pub const C_EC_DEFAULT: f64 = 1.1;

/// Failure modes of the rate helpers.
#[derive(Debug, Error)]
pub enum KeyRateError {
    /// Binary entropy is only defined on [0, 1].
    #[error("binary entropy argument {x} outside [0, 1]")]
    EntropyDomain {
        /// The offending argument.
        x: f64,
    },
}

/// Shannon binary entropy h(x) in bits, with h(0) = h(1) = 0 by continuity.
pub fn binary_entropy(x: f64) -> Result<f64, KeyRateError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(KeyRateError::EntropyDomain { x });
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Which rate expression a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateVariant {
    /// Passive receiver with the cross-click penalty.
    #[serde(rename = "passive")]
    Passive,
    /// Passive receiver with the penalty removed.
    #[serde(rename = "virtual")]
    Virtual,
    /// Reconstructed actively switched comparator.
    #[serde(rename = "active-comparator")]
    ActiveComparator,
}

/// Building blocks of the rate, reported for inspection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateComponents {
    /// Lower bound on the vacuum contribution.
    #[serde(rename = "QZ0_low")]
    pub qz0_low: f64,
    /// Effective single-photon gain entering privacy amplification.
    pub single_photon_gain: f64,
    /// Entropy penalty h(h_arg) per single-photon key bit.
    pub entropy_penalty: f64,
}

/// Full description of one rate evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    /// Rate expression this report describes.
    pub variant: RateVariant,
    /// Key bits per non-sampling round; 0 whenever `valid` is false.
    #[serde(rename = "R")]
    pub r: f64,
    /// Whether the validity condition held and the rate is positive.
    pub valid: bool,
    /// Why the rate was clamped, when `valid` is false.
    pub reason: Option<String>,
    /// Argument of the privacy-amplification entropy; in [0, 1/2] whenever
    /// `valid`, 0 when the effective gain made it uncomputable.
    pub h_arg: f64,
    /// Privacy-amplification cost, gain * h(h_arg).
    #[serde(rename = "f_PA")]
    pub f_pa: f64,
    /// Error-correction cost, c_EC * Q_Z * h(e_Z).
    #[serde(rename = "f_EC")]
    pub f_ec: f64,
    /// Cross-click penalty alpha * Qcross1_up subtracted from the gain.
    pub alpha_term: f64,
    /// Ingredients of the final expression.
    pub components: RateComponents,
}

fn invalid_report(
    variant: RateVariant,
    reason: String,
    h_arg: f64,
    f_ec: f64,
    alpha_term: f64,
    qz0_low: f64,
    gain: f64,
) -> RateReport {
    RateReport {
        variant,
        r: 0.0,
        valid: false,
        reason: Some(reason),
        h_arg,
        f_pa: 0.0,
        f_ec,
        alpha_term,
        components: RateComponents {
            qz0_low,
            single_photon_gain: gain,
            entropy_penalty: 0.0,
        },
    }
}

/// Assemble a report from the computed bound ingredients.
///
/// `gain` is the effective single-photon term, `phase_fraction` the quantity
/// the entropy is evaluated at times `gain` (so h_arg = phase_fraction /
/// gain). Exposed for property tests that drive the arithmetic directly.
pub fn assemble_report(
    variant: RateVariant,
    qz0_low: f64,
    gain: f64,
    phase_fraction: f64,
    alpha_term: f64,
    f_ec: f64,
) -> RateReport {
    if gain <= 0.0 {
        return invalid_report(
            variant,
            "effective single-photon gain is nonpositive".to_string(),
            0.0,
            f_ec,
            alpha_term,
            qz0_low,
            gain,
        );
    }
    let h_arg = phase_fraction / gain;
    if h_arg > 0.5 {
        return invalid_report(
            variant,
            "phase-error condition violated: entropy argument exceeds 1/2".to_string(),
            h_arg,
            f_ec,
            alpha_term,
            qz0_low,
            gain,
        );
    }
    let entropy_penalty = binary_entropy(h_arg).expect("argument is in [0, 1/2]");
    let f_pa = gain * entropy_penalty;
    let r = qz0_low + gain - f_pa - f_ec;
    if r <= 0.0 {
        return invalid_report(
            variant,
            "rate is nonpositive after privacy amplification and error correction".to_string(),
            h_arg,
            f_ec,
            alpha_term,
            qz0_low,
            gain,
        );
    }
    RateReport {
        variant,
        r,
        valid: true,
        reason: None,
        h_arg,
        f_pa,
        f_ec,
        alpha_term,
        components: RateComponents {
            qz0_low,
            single_photon_gain: gain,
            entropy_penalty,
        },
    }
}

/// Sufficient condition for the passive rate to be claimable.
///
/// True iff the effective gain QZ1_low - alpha * Qcross1_up is positive and
/// (p_Z pt_Z)/(p_X pt_X) * EX1_up is at most half of it, i.e. the entropy
/// argument stays in the monotone range of h.
pub fn validity(est: &DecoyEstimates, sift: &SiftingProbs, src: &SourceModel, a: f64) -> bool {
    let gain = est.qz1_low - a * est.qcross1_up;
    if gain <= 0.0 {
        return false;
    }
    let lhs = src.p_z_alice * sift.pt_z / (src.p_x_alice() * sift.pt_x) * est.ex1_up;
    lhs <= 0.5 * gain
}

fn error_correction_cost(stats: &ObservedStats, c_ec: f64) -> f64 {
    c_ec * stats.q_z_total
        * binary_entropy(stats.e_z).expect("validated stats keep e_Z in [0, 1]")
}

/// Passive-receiver key rate from observed statistics.
///
/// R = QZ0_low + (QZ1_low - alpha Qcross1_up)(1 - h(h_arg)) - f_EC with
/// h_arg = p_Z pt_Z EX1_up / (p_X pt_X (QZ1_low - alpha Qcross1_up)) and
/// f_EC = c_EC * Q_Z_total * h(e_Z) from the observed totals. Every failure
/// mode (undefined alpha, failed validity, nonpositive rate) is encoded in
/// the report rather than an error.
pub fn passive_rate(
    stats: &ObservedStats,
    m: &ReceiverModel,
    src: &SourceModel,
    c_ec: f64,
) -> RateReport {
    let f_ec = error_correction_cost(stats, c_ec);
    let est = match estimate(stats, src) {
        Ok(est) => est,
        Err(e) => {
            return invalid_report(
                RateVariant::Passive,
                format!("decoy estimation failed: {e}"),
                0.0,
                f_ec,
                0.0,
                0.0,
                0.0,
            )
        }
    };
    let sift = match sifting_probs(m) {
        Ok(s) => s,
        Err(e) => {
            return invalid_report(
                RateVariant::Passive,
                format!("sifting undefined: {e}"),
                0.0,
                f_ec,
                0.0,
                est.qz0_low,
                0.0,
            )
        }
    };
    let a = match alpha(m) {
        Ok(a) => a,
        Err(e) => {
            return invalid_report(
                RateVariant::Passive,
                e.to_string(),
                0.0,
                f_ec,
                0.0,
                est.qz0_low,
                0.0,
            )
        }
    };
    let alpha_term = a * est.qcross1_up;
    let gain = est.qz1_low - alpha_term;
    let phase_fraction = src.p_z_alice * sift.pt_z / (src.p_x_alice() * sift.pt_x) * est.ex1_up;
    assemble_report(
        RateVariant::Passive,
        est.qz0_low,
        gain,
        phase_fraction,
        alpha_term,
        f_ec,
    )
}

/// Reference rate with the cross-click penalty removed.
///
/// Identical to [`passive_rate`] except the effective gain is QZ1_low
/// itself; alpha is never evaluated, so receivers with undefined alpha still
/// get a virtual rate.
pub fn virtual_rate(
    stats: &ObservedStats,
    m: &ReceiverModel,
    src: &SourceModel,
    c_ec: f64,
) -> RateReport {
    let f_ec = error_correction_cost(stats, c_ec);
    let est = match estimate(stats, src) {
        Ok(est) => est,
        Err(e) => {
            return invalid_report(
                RateVariant::Virtual,
                format!("decoy estimation failed: {e}"),
                0.0,
                f_ec,
                0.0,
                0.0,
                0.0,
            )
        }
    };
    let sift = match sifting_probs(m) {
        Ok(s) => s,
        Err(e) => {
            return invalid_report(
                RateVariant::Virtual,
                format!("sifting undefined: {e}"),
                0.0,
                f_ec,
                0.0,
                est.qz0_low,
                0.0,
            )
        }
    };
    let phase_fraction = src.p_z_alice * sift.pt_z / (src.p_x_alice() * sift.pt_x) * est.ex1_up;
    assemble_report(
        RateVariant::Virtual,
        est.qz0_low,
        est.qz1_low,
        phase_fraction,
        0.0,
        f_ec,
    )
}

/// Comparator rate for an actively switched receiver.
///
/// Expects statistics generated under the active channel model (both bases
/// see the Z-line efficiency, no cross clicks). Phase errors are rescaled by
/// the squared basis-bias ratio, with the receiver mirroring the sender's
/// bias: e_ph = (p_Z / p_X)^2 * EX1_up / QZ1_low.
pub fn active_rate(stats_active: &ObservedStats, src: &SourceModel, c_ec: f64) -> RateReport {
    let f_ec = error_correction_cost(stats_active, c_ec);
    let est = match estimate(stats_active, src) {
        Ok(est) => est,
        Err(e) => {
            return invalid_report(
                RateVariant::ActiveComparator,
                format!("decoy estimation failed: {e}"),
                0.0,
                f_ec,
                0.0,
                0.0,
                0.0,
            )
        }
    };
    let ratio = src.p_z_alice / src.p_x_alice();
    let phase_fraction = ratio * ratio * est.ex1_up;
    assemble_report(
        RateVariant::ActiveComparator,
        est.qz0_low,
        est.qz1_low,
        phase_fraction,
        0.0,
        f_ec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PerIntensity;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference_receiver() -> ReceiverModel {
        ReceiverModel {
            p_z: 0.9,
            d: 1e-7,
            eta_z: 0.7,
            eta_x: 0.7,
        }
    }

    fn reference_source() -> SourceModel {
        SourceModel {
            mu: 0.5,
            nu: 0.05,
            p_mu: 1.0,
            p_nu: 0.0,
            p_0: 0.0,
            p_z_alice: 0.9,
        }
    }

    fn frozen_stats() -> ObservedStats {
        // analytic channel at l = 0 for the reference parameters, frozen
        // from the independent reference pipeline
        ObservedStats {
            q_z_given: PerIntensity {
                signal: 0.23482567376367577,
                decoy: 0.02781079968936897,
                vacuum: 1.7999995491245308e-7,
            },
            e_x_given: PerIntensity {
                signal: 7.531651239735803e-5,
                decoy: 1.0166299974709295e-5,
                vacuum: 9.999997494736643e-9,
            },
            q_cross_given: PerIntensity {
                signal: 0.009293856395737673,
                decoy: 0.00010834880069853485,
                vacuum: 3.999999596108874e-14,
            },
            q_z_total: 0.23482567376367577,
            e_z: 0.030226078374210923,
        }
    }

    #[test]
    fn test_binary_entropy_anchors() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        // independently computed (0.11 -> 0.4999159...); symmetric
        assert!((binary_entropy(0.11).unwrap() - 0.499915958164528).abs() < 1e-15);
        assert!((binary_entropy(0.89).unwrap() - 0.499915958164528).abs() < 1e-15);
        assert!((binary_entropy(0.03).unwrap() - 0.1943918578315762).abs() < 1e-15);
        assert!(matches!(
            binary_entropy(-0.1),
            Err(KeyRateError::EntropyDomain { .. })
        ));
        assert!(matches!(
            binary_entropy(1.1),
            Err(KeyRateError::EntropyDomain { .. })
        ));
    }

    #[test]
    fn test_validity_trivial_cases() {
        let sift = sifting_probs(&reference_receiver()).unwrap();
        let src = reference_source();
        let est = DecoyEstimates {
            qz0_low: 0.0,
            qz1_low: 0.1,
            ex1_up: 0.0,
            qcross1_up: 0.01,
        };
        assert!(validity(&est, &sift, &src, 2.0));

        let balanced = DecoyEstimates {
            qz1_low: 0.02,
            qcross1_up: 0.01,
            ..est
        };
        assert!(
            !validity(&balanced, &sift, &src, 2.0),
            "zero effective gain must be invalid"
        );
    }

    #[test]
    fn test_passive_rate_zero_stats() {
        let zero = PerIntensity {
            signal: 0.0,
            decoy: 0.0,
            vacuum: 0.0,
        };
        let stats = ObservedStats {
            q_z_given: zero,
            e_x_given: zero,
            q_cross_given: zero,
            q_z_total: 0.0,
            e_z: 0.0,
        };
        let report = passive_rate(&stats, &reference_receiver(), &reference_source(), 1.1);
        assert_eq!(report.r, 0.0);
        assert_eq!(report.f_ec, 0.0);
        assert!(!report.valid);
    }

    #[test]
    fn test_passive_rate_error_free_channel_keeps_full_gain() {
        // single-photon-dominated yields with no errors and no cross clicks
        let src = reference_source();
        let profile = crate::decoy::YieldProfile {
            y_z: (0..41).map(|n| (0.3 * n as f64).min(1.0)).collect(),
            y_x_err: vec![0.0; 41],
            y_cross: vec![0.0; 41],
        };
        let gains = |mu: f64| crate::decoy::poisson_gain(&profile, mu).unwrap().0;
        let stats = ObservedStats {
            q_z_given: PerIntensity {
                signal: gains(src.mu),
                decoy: gains(src.nu),
                vacuum: 0.0,
            },
            e_x_given: PerIntensity {
                signal: 0.0,
                decoy: 0.0,
                vacuum: 0.0,
            },
            q_cross_given: PerIntensity {
                signal: 0.0,
                decoy: 0.0,
                vacuum: 0.0,
            },
            q_z_total: gains(src.mu),
            e_z: 0.0,
        };
        let report = passive_rate(&stats, &reference_receiver(), &src, 1.1);
        assert!(report.valid);
        assert_eq!(report.f_ec, 0.0);
        assert_eq!(report.f_pa, 0.0);
        assert_eq!(report.h_arg, 0.0);
        let est = estimate(&stats, &src).unwrap();
        assert!(
            (report.r - (est.qz0_low + est.qz1_low)).abs() < 1e-15,
            "with no errors the rate is the full bounded gain"
        );
    }

    #[test]
    fn test_passive_rate_frozen_pipeline_value() {
        // frozen from the independent reference pipeline (tools/reference_values.py)
        let report = passive_rate(&frozen_stats(), &reference_receiver(), &reference_source(), 1.1);
        assert!(report.valid);
        let expect = 0.08394632541696989;
        assert!(
            ((report.r - expect) / expect).abs() < 1e-12,
            "rate {} deviates from frozen value {}",
            report.r,
            expect
        );
        assert!((report.h_arg - 0.03119845651963066).abs() < 1e-13);
    }

    #[test]
    fn test_virtual_rate_frozen_pipeline_value() {
        let report = virtual_rate(&frozen_stats(), &reference_receiver(), &reference_source(), 1.1);
        assert!(report.valid);
        let expect = 0.08661744427287463;
        assert!(((report.r - expect) / expect).abs() < 1e-12);
        assert!((report.h_arg - 0.030687791069406674).abs() < 1e-13);
        assert_eq!(report.alpha_term, 0.0);
    }

    #[test]
    fn test_virtual_dominates_passive() {
        let passive = passive_rate(&frozen_stats(), &reference_receiver(), &reference_source(), 1.1);
        let virt = virtual_rate(&frozen_stats(), &reference_receiver(), &reference_source(), 1.1);
        assert!(virt.r >= passive.r);
        assert!(passive.alpha_term > 0.0);
    }

    #[test]
    fn test_virtual_equals_passive_without_cross_clicks() {
        let mut stats = frozen_stats();
        stats.q_cross_given = PerIntensity {
            signal: 0.0,
            decoy: 0.0,
            vacuum: 0.0,
        };
        let passive = passive_rate(&stats, &reference_receiver(), &reference_source(), 1.1);
        let virt = virtual_rate(&stats, &reference_receiver(), &reference_source(), 1.1);
        assert!((passive.r - virt.r).abs() < 1e-15);
    }

    #[test]
    fn test_passive_rate_alpha_undefined_is_flagged() {
        let m = ReceiverModel {
            p_z: 0.5,
            d: 0.0,
            eta_z: 1.0,
            eta_x: 0.1,
        };
        let report = passive_rate(&frozen_stats(), &m, &reference_source(), 1.1);
        assert!(!report.valid);
        assert_eq!(report.r, 0.0);
        assert!(report.reason.as_deref().unwrap().contains("alpha undefined"));
        // the virtual rate never needs alpha
        let virt = virtual_rate(&frozen_stats(), &m, &reference_source(), 1.1);
        assert!(virt.valid);
    }

    #[test]
    fn test_active_rate_error_free() {
        let src = reference_source();
        let profile = crate::decoy::YieldProfile {
            y_z: (0..41).map(|n| (0.3 * n as f64).min(1.0)).collect(),
            y_x_err: vec![0.0; 41],
            y_cross: vec![0.0; 41],
        };
        let gains = |mu: f64| crate::decoy::poisson_gain(&profile, mu).unwrap().0;
        let stats = ObservedStats {
            q_z_given: PerIntensity {
                signal: gains(src.mu),
                decoy: gains(src.nu),
                vacuum: 0.0,
            },
            e_x_given: PerIntensity {
                signal: 0.0,
                decoy: 0.0,
                vacuum: 0.0,
            },
            q_cross_given: PerIntensity {
                signal: 0.0,
                decoy: 0.0,
                vacuum: 0.0,
            },
            q_z_total: gains(src.mu),
            e_z: 0.0,
        };
        let report = active_rate(&stats, &src, 1.1);
        assert!(report.valid);
        let est = estimate(&stats, &src).unwrap();
        assert!((report.r - (est.qz0_low + est.qz1_low)).abs() < 1e-15);
        assert_eq!(report.variant, RateVariant::ActiveComparator);
    }

    #[test]
    fn test_report_never_claims_positive_rate_when_invalid() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..500 {
            let report = assemble_report(
                RateVariant::Passive,
                rng.random_range(0.0..=0.1),
                rng.random_range(-0.1..=0.5),
                rng.random_range(0.0..=0.2),
                rng.random_range(0.0..=0.05),
                rng.random_range(0.0..=0.3),
            );
            if !report.valid {
                assert_eq!(report.r, 0.0);
                assert!(report.reason.is_some());
            } else {
                assert!(report.r > 0.0);
                assert!(report.h_arg <= 0.5);
                assert!(report.h_arg >= 0.0);
            }
        }
    }

    #[test]
    fn test_rate_monotone_in_error_and_cross_bounds() {
        let sift = sifting_probs(&reference_receiver()).unwrap();
        let src = reference_source();
        let a = alpha(&reference_receiver()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let qz0 = rng.random_range(0.0..=0.01);
            let qz1 = rng.random_range(0.05..=0.4);
            let ex1 = rng.random_range(0.0..=0.002);
            let qc1 = rng.random_range(0.0..=0.002);
            let f_ec = rng.random_range(0.0..=0.02);
            let run = |ex1: f64, qc1: f64| {
                let gain = qz1 - a * qc1;
                let phase = src.p_z_alice * sift.pt_z / (src.p_x_alice() * sift.pt_x) * ex1;
                assemble_report(RateVariant::Passive, qz0, gain, phase, a * qc1, f_ec)
            };
            let base = run(ex1, qc1);
            let worse_err = run(ex1 * 1.5 + 1e-5, qc1);
            let worse_cross = run(ex1, qc1 * 1.5 + 1e-5);
            if base.valid && worse_err.valid {
                assert!(worse_err.r <= base.r + 1e-15);
            }
            if base.valid && worse_cross.valid {
                assert!(worse_cross.r <= base.r + 1e-15);
            }
            // virtual variant with the same inputs dominates
            let virt = assemble_report(
                RateVariant::Virtual,
                qz0,
                qz1,
                src.p_z_alice * sift.pt_z / (src.p_x_alice() * sift.pt_x) * ex1,
                0.0,
                f_ec,
            );
            if base.valid && virt.valid {
                assert!(virt.r >= base.r - 1e-15);
            }
        }
    }

    #[test]
    fn test_reported_h_arg_is_recomputable() {
        let report = passive_rate(&frozen_stats(), &reference_receiver(), &reference_source(), 1.1);
        let est = estimate(&frozen_stats(), &reference_source()).unwrap();
        let sift = sifting_probs(&reference_receiver()).unwrap();
        let src = reference_source();
        let a = alpha(&reference_receiver()).unwrap();
        let gain = est.qz1_low - a * est.qcross1_up;
        let expect = src.p_z_alice * sift.pt_z / (src.p_x_alice() * sift.pt_x) * est.ex1_up / gain;
        assert!((report.h_arg - expect).abs() < 1e-14);
        assert!((report.components.single_photon_gain - gain).abs() < 1e-15);
        assert!((report.f_pa - gain * report.components.entropy_penalty).abs() < 1e-15);
    }

    #[test]
    fn test_report_serializes_with_documented_field_names() {
        let report = passive_rate(&frozen_stats(), &reference_receiver(), &reference_source(), 1.1);
        let json = serde_json::to_value(&report).unwrap();
        for key in ["variant", "R", "valid", "h_arg", "f_PA", "f_EC", "alpha_term", "components"] {
            assert!(json.get(key).is_some(), "missing JSON key {key}");
        }
        assert_eq!(json["variant"], "passive");
        assert!(json["components"].get("QZ0_low").is_some());
        assert!(json["components"].get("single_photon_gain").is_some());
        assert!(json["components"].get("entropy_penalty").is_some());
    }
}

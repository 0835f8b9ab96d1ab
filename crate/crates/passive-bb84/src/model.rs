//! Protocol parameters and observed statistics shared by every other module.
//!
//! A [`ReceiverModel`] describes Bob's passive detection unit: a beam splitter
//! sending a fraction `p_Z` of the light to the Z-basis line and the rest to
//! the X-basis line, with per-line transmittances `eta_Z >= eta_X` (detector
//! efficiency included) and a dark-count probability `d` per detector per
//! pulse. The asymmetry `r = eta_X / eta_Z` is what the rest of the analysis
//! folds into a virtual three-way splitter, see [`splitting_probs`].
//!
//! A [`SourceModel`] describes Alice's decoy-state source: signal/decoy/vacuum
//! intensities `mu > nu > 0`, their selection probabilities, and her Z-basis
//! bias. [`ObservedStats`] carries the per-intensity announced ratios the rate
//! formula consumes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Validation failure for model parameters or observed statistics.
#[derive(Debug, Error)]
pub enum ModelError {
    /// A field is outside its allowed range.
    #[error("{field} = {value} outside allowed range {expected}")]
    OutOfRange {
        /// Field name as it appears in configuration files.
        field: &'static str,
        /// Offending value.
        value: f64,
        /// Human-readable description of the allowed range.
        expected: &'static str,
    },
    /// Line transmittances are ordered the wrong way.
    #[error("eta_X = {eta_x} exceeds eta_Z = {eta_z}; the X line cannot be more transmissive")]
    EtaOrder {
        /// Z-line transmittance.
        eta_z: f64,
        /// X-line transmittance.
        eta_x: f64,
    },
    /// Intensity selection probabilities do not form a distribution.
    #[error("p_mu + p_nu + p_0 = {sum} differs from 1 by more than 1e-9")]
    ProbSum {
        /// Actual sum of the three probabilities.
        sum: f64,
    },
    /// Signal and decoy intensities violate mu > nu > 0.
    #[error("intensities must satisfy mu > nu > 0, got mu = {mu}, nu = {nu}")]
    IntensityOrder {
        /// Signal intensity.
        mu: f64,
        /// Decoy intensity.
        nu: f64,
    },
}

/// Intensity setting tag; maps keep exact three-valued keys instead of floats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityTag {
    /// Signal pulses with mean photon number `mu`.
    Signal,
    /// Decoy pulses with mean photon number `nu`.
    Decoy,
    /// Vacuum pulses (intensity 0).
    Vacuum,
}

impl IntensityTag {
    /// All three tags in canonical order.
    pub const ALL: [IntensityTag; 3] = [
        IntensityTag::Signal,
        IntensityTag::Decoy,
        IntensityTag::Vacuum,
    ];

    /// Tag name as used in CSV files and reports.
    pub fn name(self) -> &'static str {
        match self {
            IntensityTag::Signal => "signal",
            IntensityTag::Decoy => "decoy",
            IntensityTag::Vacuum => "vacuum",
        }
    }

    /// Parse a CSV tag name.
    pub fn from_name(s: &str) -> Option<IntensityTag> {
        match s {
            "signal" => Some(IntensityTag::Signal),
            "decoy" => Some(IntensityTag::Decoy),
            "vacuum" => Some(IntensityTag::Vacuum),
            _ => None,
        }
    }
}

/// A value per intensity setting, keyed exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerIntensity<T> {
    /// Value for signal pulses.
    pub signal: T,
    /// Value for decoy pulses.
    pub decoy: T,
    /// Value for vacuum pulses.
    pub vacuum: T,
}

impl<T: Copy> PerIntensity<T> {
    /// Look up by tag.
    pub fn get(&self, tag: IntensityTag) -> T {
        match tag {
            IntensityTag::Signal => self.signal,
            IntensityTag::Decoy => self.decoy,
            IntensityTag::Vacuum => self.vacuum,
        }
    }

    /// Build from a function of the tag.
    pub fn from_fn(mut f: impl FnMut(IntensityTag) -> T) -> Self {
        PerIntensity {
            signal: f(IntensityTag::Signal),
            decoy: f(IntensityTag::Decoy),
            vacuum: f(IntensityTag::Vacuum),
        }
    }

    /// Mutable lookup by tag.
    pub fn get_mut(&mut self, tag: IntensityTag) -> &mut T {
        match tag {
            IntensityTag::Signal => &mut self.signal,
            IntensityTag::Decoy => &mut self.decoy,
            IntensityTag::Vacuum => &mut self.vacuum,
        }
    }
}

/// Bob's passive detection unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverModel {
    /// Beam-splitter probability of routing a photon to the Z line.
    #[serde(rename = "p_Z")]
    pub p_z: f64,
    /// Dark-count probability per detector per pulse.
    pub d: f64,
    /// Z-line transmittance, detector efficiency included.
    #[serde(rename = "eta_Z")]
    pub eta_z: f64,
    /// X-line transmittance, detector efficiency included.
    #[serde(rename = "eta_X")]
    pub eta_x: f64,
}

impl ReceiverModel {
    /// X-line probability `p_X = 1 - p_Z`.
    pub fn p_x(&self) -> f64 {
        1.0 - self.p_z
    }

    /// Line-transmittance ratio `r = eta_X / eta_Z`, in (0, 1].
    pub fn r(&self) -> f64 {
        self.eta_x / self.eta_z
    }
}

/// Check receiver parameters against the model's assumptions.
///
/// Requires `0.5 <= p_Z < 1` (the bias must favor the key basis),
/// `0 <= d <= 1`, and `0 < eta_X <= eta_Z <= 1`. Values of `p_Z` above 0.99
/// are accepted here; only the optimization presets restrict to 0.99.
pub fn validate_receiver(raw: ReceiverModel) -> Result<ReceiverModel, ModelError> {
    if !(raw.p_z >= 0.5 && raw.p_z < 1.0) {
        return Err(ModelError::OutOfRange {
            field: "p_Z",
            value: raw.p_z,
            expected: "[0.5, 1)",
        });
    }
    if !(0.0..=1.0).contains(&raw.d) {
        return Err(ModelError::OutOfRange {
            field: "d",
            value: raw.d,
            expected: "[0, 1]",
        });
    }
    if !(raw.eta_z > 0.0 && raw.eta_z <= 1.0) {
        return Err(ModelError::OutOfRange {
            field: "eta_Z",
            value: raw.eta_z,
            expected: "(0, 1]",
        });
    }
    if !(raw.eta_x > 0.0 && raw.eta_x <= 1.0) {
        return Err(ModelError::OutOfRange {
            field: "eta_X",
            value: raw.eta_x,
            expected: "(0, 1]",
        });
    }
    if raw.eta_x > raw.eta_z {
        return Err(ModelError::EtaOrder {
            eta_z: raw.eta_z,
            eta_x: raw.eta_x,
        });
    }
    Ok(raw)
}

/// Probabilities of the virtual three-way splitter.
///
/// The channel absorbs `eta_ch * eta_Z`; the residual line asymmetry becomes
/// a loss arm with probability `p_L`, leaving lossless Z' and X' arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplittingProbs {
    /// Z-arm probability, `p_Z' = p_Z`.
    pub p_zp: f64,
    /// X-arm probability, `p_X' = p_X * r`.
    pub p_xp: f64,
    /// Loss-arm probability, `p_L = 1 - p_Z' - p_X'`.
    pub p_l: f64,
}

/// Derive the three-way splitting probabilities from a validated receiver.
pub fn splitting_probs(m: &ReceiverModel) -> SplittingProbs {
    let p_zp = m.p_z;
    let p_xp = m.p_x() * m.r();
    // exact zero at r = 1; guard rounding just below it
    let p_l = (1.0 - p_zp - p_xp).max(0.0);
    SplittingProbs { p_zp, p_xp, p_l }
}

/// Alice's decoy-state source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    /// Signal intensity (mean photon number).
    pub mu: f64,
    /// Decoy intensity.
    pub nu: f64,
    /// Probability of choosing the signal intensity.
    pub p_mu: f64,
    /// Probability of choosing the decoy intensity.
    pub p_nu: f64,
    /// Probability of choosing vacuum.
    pub p_0: f64,
    /// Alice's probability of preparing in the Z basis.
    #[serde(rename = "p_Z_alice")]
    pub p_z_alice: f64,
}

impl SourceModel {
    /// Mean photon number for a tag.
    pub fn intensity(&self, tag: IntensityTag) -> f64 {
        match tag {
            IntensityTag::Signal => self.mu,
            IntensityTag::Decoy => self.nu,
            IntensityTag::Vacuum => 0.0,
        }
    }

    /// Selection probability for a tag.
    pub fn prob(&self, tag: IntensityTag) -> f64 {
        match tag {
            IntensityTag::Signal => self.p_mu,
            IntensityTag::Decoy => self.p_nu,
            IntensityTag::Vacuum => self.p_0,
        }
    }

    /// Alice's X-basis probability.
    pub fn p_x_alice(&self) -> f64 {
        1.0 - self.p_z_alice
    }

    /// The same source with selection probabilities replaced by (1, 0, 0).
    ///
    /// Encodes the asymptotic limit in which almost every round is a signal
    /// round while decoy statistics remain measurable; per-intensity observed
    /// ratios are conditional on the intensity, so they stay well defined.
    pub fn asymptotic_signal(&self) -> SourceModel {
        SourceModel {
            p_mu: 1.0,
            p_nu: 0.0,
            p_0: 0.0,
            ..*self
        }
    }
}

/// Check source parameters: `mu > nu > 0`, probabilities forming a
/// distribution within 1e-9, and `0 < p_Z_alice < 1`.
pub fn validate_source(raw: SourceModel) -> Result<SourceModel, ModelError> {
    if !(raw.mu > raw.nu && raw.nu > 0.0) {
        return Err(ModelError::IntensityOrder {
            mu: raw.mu,
            nu: raw.nu,
        });
    }
    for (field, value) in [("p_mu", raw.p_mu), ("p_nu", raw.p_nu), ("p_0", raw.p_0)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(ModelError::OutOfRange {
                field,
                value,
                expected: "[0, 1]",
            });
        }
    }
    let sum = raw.p_mu + raw.p_nu + raw.p_0;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ModelError::ProbSum { sum });
    }
    if !(raw.p_z_alice > 0.0 && raw.p_z_alice < 1.0) {
        return Err(ModelError::OutOfRange {
            field: "p_Z_alice",
            value: raw.p_z_alice,
            expected: "(0, 1)",
        });
    }
    Ok(raw)
}

/// Announced per-intensity ratios plus the sifted-key totals.
///
/// All per-intensity entries are fractions of rounds *with that intensity*:
/// `Q_Z` the fraction sifted into the Z key, `E_X` the fraction sifted into
/// the X sample with a bit error, `Q_cross` the fraction announced as basis
/// "cross" (both lines clicked). `Q_Z_total` and `e_Z` are the overall sifted
/// fraction and Z bit-error rate entering the error-correction cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedStats {
    /// Z-key gain per intensity.
    #[serde(rename = "Q_Z_given")]
    pub q_z_given: PerIntensity<f64>,
    /// X-basis error fraction per intensity.
    #[serde(rename = "E_X_given")]
    pub e_x_given: PerIntensity<f64>,
    /// Cross-click fraction per intensity.
    #[serde(rename = "Q_cross_given")]
    pub q_cross_given: PerIntensity<f64>,
    /// Overall sifted-key fraction.
    #[serde(rename = "Q_Z_total")]
    pub q_z_total: f64,
    /// Z-basis bit-error rate of the sifted key.
    #[serde(rename = "e_Z")]
    pub e_z: f64,
}

/// Check that every entry of the stats is a fraction in [0, 1].
pub fn validate_stats(raw: ObservedStats) -> Result<ObservedStats, ModelError> {
    let mut fields: Vec<(&'static str, f64)> = Vec::new();
    for tag in IntensityTag::ALL {
        fields.push(("Q_Z", raw.q_z_given.get(tag)));
        fields.push(("E_X", raw.e_x_given.get(tag)));
        fields.push(("Q_cross", raw.q_cross_given.get(tag)));
    }
    fields.push(("Q_Z_total", raw.q_z_total));
    fields.push(("e_Z", raw.e_z));
    for (field, value) in fields {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(ModelError::OutOfRange {
                field,
                value,
                expected: "[0, 1]",
            });
        }
    }
    Ok(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_receiver() -> ReceiverModel {
        ReceiverModel {
            p_z: 0.9,
            d: 1e-7,
            eta_z: 0.7,
            eta_x: 0.7,
        }
    }

    #[test]
    fn test_validate_receiver_accepts_reference_parameters() {
        let m = validate_receiver(paper_receiver()).unwrap();
        assert_eq!(m.r(), 1.0);
    }

    #[test]
    fn test_validate_receiver_accepts_boundary_bias() {
        let m = validate_receiver(ReceiverModel {
            p_z: 0.5,
            d: 0.0,
            eta_z: 1.0,
            eta_x: 1.0,
        })
        .unwrap();
        assert_eq!(m.r(), 1.0);
    }

    #[test]
    fn test_validate_receiver_rejects_low_bias() {
        let err = validate_receiver(ReceiverModel {
            p_z: 0.4,
            d: 0.0,
            eta_z: 1.0,
            eta_x: 1.0,
        });
        assert!(matches!(err, Err(ModelError::OutOfRange { field: "p_Z", .. })));
    }

    #[test]
    fn test_validate_receiver_rejects_eta_order() {
        let err = validate_receiver(ReceiverModel {
            p_z: 0.9,
            d: 0.0,
            eta_z: 0.5,
            eta_x: 0.7,
        });
        assert!(matches!(err, Err(ModelError::EtaOrder { .. })));
    }

    #[test]
    fn test_splitting_probs_examples() {
        let probs = splitting_probs(&paper_receiver());
        assert!((probs.p_zp - 0.9).abs() < 1e-15);
        assert!((probs.p_xp - 0.1).abs() < 1e-15);
        assert_eq!(probs.p_l, 0.0, "r = 1 leaves nothing for the loss arm");

        let m = ReceiverModel {
            p_z: 0.9,
            d: 0.0,
            eta_z: 1.0,
            eta_x: 0.5,
        };
        let probs = splitting_probs(&m);
        assert!((probs.p_zp - 0.9).abs() < 1e-15);
        assert!((probs.p_xp - 0.05).abs() < 1e-15);
        assert!((probs.p_l - 0.05).abs() < 1e-15);

        let m = ReceiverModel {
            p_z: 0.5,
            d: 0.0,
            eta_z: 1.0,
            eta_x: 0.5,
        };
        let probs = splitting_probs(&m);
        assert!((probs.p_zp - 0.5).abs() < 1e-15);
        assert!((probs.p_xp - 0.25).abs() < 1e-15);
        assert!((probs.p_l - 0.25).abs() < 1e-15);
    }

    #[test]
    fn test_splitting_probs_sum_to_one_and_r1_has_no_loss() {
        let mut k = 0u32;
        for pz_step in 0..50 {
            for r_step in 1..=20 {
                let m = ReceiverModel {
                    p_z: 0.5 + 0.01 * pz_step as f64,
                    d: 0.0,
                    eta_z: 1.0,
                    eta_x: r_step as f64 / 20.0,
                };
                let p = splitting_probs(&m);
                assert!(
                    (p.p_zp + p.p_xp + p.p_l - 1.0).abs() < 1e-15,
                    "splitting probabilities must sum to 1"
                );
                assert!(p.p_zp >= p.p_xp, "Z arm must dominate X arm");
                if r_step == 20 {
                    assert_eq!(p.p_l, 0.0, "r = 1 leaves no loss arm");
                }
                k += 1;
            }
        }
        assert_eq!(k, 1000);
    }

    #[test]
    fn test_validate_source() {
        let src = SourceModel {
            mu: 0.5,
            nu: 0.05,
            p_mu: 1.0,
            p_nu: 0.0,
            p_0: 0.0,
            p_z_alice: 0.9,
        };
        assert!(validate_source(src).is_ok());

        assert!(matches!(
            validate_source(SourceModel { nu: 0.5, ..src }),
            Err(ModelError::IntensityOrder { .. })
        ));
        assert!(matches!(
            validate_source(SourceModel {
                p_mu: 0.5,
                p_nu: 0.2,
                p_0: 0.2,
                ..src
            }),
            Err(ModelError::ProbSum { .. })
        ));
        assert!(matches!(
            validate_source(SourceModel {
                p_z_alice: 1.0,
                ..src
            }),
            Err(ModelError::OutOfRange {
                field: "p_Z_alice",
                ..
            })
        ));
    }

    #[test]
    fn test_asymptotic_signal_replaces_probs_only() {
        let src = SourceModel {
            mu: 0.5,
            nu: 0.05,
            p_mu: 1.0 / 3.0,
            p_nu: 1.0 / 3.0,
            p_0: 1.0 / 3.0,
            p_z_alice: 0.9,
        };
        let eff = src.asymptotic_signal();
        assert_eq!((eff.p_mu, eff.p_nu, eff.p_0), (1.0, 0.0, 0.0));
        assert_eq!((eff.mu, eff.nu, eff.p_z_alice), (src.mu, src.nu, src.p_z_alice));
    }

    #[test]
    fn test_receiver_json_field_names() {
        let m: ReceiverModel =
            serde_json::from_str(r#"{"p_Z":0.9,"d":1e-7,"eta_Z":0.7,"eta_X":0.7}"#).unwrap();
        assert_eq!(m, paper_receiver());
        let src: SourceModel = serde_json::from_str(
            r#"{"mu":0.5,"nu":0.05,"p_mu":1.0,"p_nu":0.0,"p_0":0.0,"p_Z_alice":0.9}"#,
        )
        .unwrap();
        assert_eq!(src.p_z_alice, 0.9);
    }

    #[test]
    fn test_validate_stats_rejects_out_of_range() {
        let zero = PerIntensity {
            signal: 0.0,
            decoy: 0.0,
            vacuum: 0.0,
        };
        let good = ObservedStats {
            q_z_given: zero,
            e_x_given: zero,
            q_cross_given: zero,
            q_z_total: 0.0,
            e_z: 0.0,
        };
        assert!(validate_stats(good).is_ok());
        let bad = ObservedStats {
            q_z_total: 1.5,
            ..good
        };
        assert!(validate_stats(bad).is_err());
    }
}

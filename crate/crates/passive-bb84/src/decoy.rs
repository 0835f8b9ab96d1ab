//! Decoy-state bounds on vacuum and single-photon contributions.
//!
//! From the per-intensity gains of a three-intensity source (signal mu,
//! decoy nu, vacuum) the estimators here bound the vacuum yield from below,
//! the single-photon Z yield from below, and the single-photon X-error and
//! cross-click yields from above. The general two-decoy forms take arbitrary
//! (nu1, nu2); [`estimate`] applies their (nu, 0) specialization and attaches
//! the Poisson prefactors that convert yields into per-round fractions.
//!
//! [`YieldProfile`] and [`poisson_gain`] form the forward model used to test
//! the estimators: generate gains from known per-photon-number yields, feed
//! them back through the bounds, and check the sandwich.
//!
//! All quantities are asymptotic expectations; there is no finite-key
//! fluctuation analysis here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{IntensityTag, ObservedStats, PerIntensity, SourceModel};

/// Failure modes of the decoy estimators and stats ingestion.
#[derive(Debug, Error)]
pub enum DecoyError {
    /// Generic bounds need nu1 > nu2 >= 0.
    #[error("decoy intensities must satisfy nu1 > nu2 >= 0, got nu1 = {nu1}, nu2 = {nu2}")]
    IntensityOrder {
        /// Larger decoy intensity.
        nu1: f64,
        /// Smaller decoy intensity.
        nu2: f64,
    },
    /// The single-photon lower bound additionally needs nu1 + nu2 < mu.
    #[error("single-photon bound requires nu1 + nu2 < mu, got mu = {mu}, nu1 = {nu1}, nu2 = {nu2}")]
    PremiseViolated {
        /// Signal intensity.
        mu: f64,
        /// Larger decoy intensity.
        nu1: f64,
        /// Smaller decoy intensity.
        nu2: f64,
    },
    /// Forward model truncated too early for the requested intensity.
    #[error("Poisson tail mass {mass:e} beyond n = {n_max} exceeds 1e-12 at mu_A = {mu_a}")]
    TailMass {
        /// Truncation photon number.
        n_max: usize,
        /// Intensity of the forward model.
        mu_a: f64,
        /// Probability mass above the truncation.
        mass: f64,
    },
    /// Stats CSV lacks a required row.
    #[error("stats CSV is missing row '{tag}'")]
    MissingRow {
        /// Missing intensity tag or "total".
        tag: String,
    },
    /// Stats CSV repeats a row.
    #[error("stats CSV has duplicate row '{tag}'")]
    DuplicateRow {
        /// Repeated intensity tag or "total".
        tag: String,
    },
    /// Stats CSV contains an unknown intensity tag.
    #[error("stats CSV has unknown intensity_tag '{tag}' (expected signal, decoy, vacuum, total)")]
    UnknownTag {
        /// The offending tag.
        tag: String,
    },
    /// The total row must carry Q_Z_total and e_Z but no Q_cross.
    #[error("stats CSV total row must leave Q_cross empty")]
    MalformedTotalRow,
    /// Underlying CSV parse failure.
    #[error("stats CSV parse error: {0}")]
    Csv(#[from] csv::Error),
    /// Assembled stats violate their range invariants.
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Per-photon-number yields of a synthetic test channel.
///
/// Index n holds the conditional probability of the event class given that
/// the source emitted n photons. Only the forward model for estimator tests;
/// real pipelines never see per-photon-number data.
#[derive(Debug, Clone)]
pub struct YieldProfile {
    /// Conclusive-Z yield per photon number.
    pub y_z: Vec<f64>,
    /// X-basis error yield per photon number.
    pub y_x_err: Vec<f64>,
    /// Cross-click yield per photon number.
    pub y_cross: Vec<f64>,
}

impl YieldProfile {
    /// Largest photon number carried by the profile.
    pub fn truncation(&self) -> usize {
        self.y_z.len().saturating_sub(1)
    }
}

/// Poisson weights e^{-mu} mu^n / n! for n = 0..=n_max.
fn poisson_weights(mu_a: f64, n_max: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n_max + 1);
    let mut term = (-mu_a).exp();
    for n in 0..=n_max {
        if n > 0 {
            term *= mu_a / n as f64;
        }
        w.push(term);
    }
    w
}

/// Poisson-weighted gains of a yield profile at source intensity mu_A.
///
/// Returns (Q_Z, E_X, Q_cross) as fractions per round. Errors if the
/// truncated Poisson tail carries more than 1e-12 probability.
pub fn poisson_gain(profile: &YieldProfile, mu_a: f64) -> Result<(f64, f64, f64), DecoyError> {
    let n_max = profile.truncation();
    let w = poisson_weights(mu_a, n_max);
    let tail = 1.0 - w.iter().sum::<f64>();
    if tail > 1e-12 {
        return Err(DecoyError::TailMass {
            n_max,
            mu_a,
            mass: tail,
        });
    }
    let dot = |y: &[f64]| y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
    Ok((
        dot(&profile.y_z),
        dot(&profile.y_x_err),
        dot(&profile.y_cross),
    ))
}

fn check_order(nu1: f64, nu2: f64) -> Result<(), DecoyError> {
    if !(nu2 >= 0.0 && nu1 > nu2) {
        return Err(DecoyError::IntensityOrder { nu1, nu2 });
    }
    Ok(())
}

/// Lower bound on the vacuum yield Y_{Z|0} from two decoy gains.
///
/// max{(nu1 Q_{nu2} e^{nu2} - nu2 Q_{nu1} e^{nu1}) / (nu1 - nu2), 0}; with
/// nu2 = 0 this reads the vacuum gain directly.
pub fn lower_y0(q_nu1: f64, q_nu2: f64, nu1: f64, nu2: f64) -> Result<f64, DecoyError> {
    check_order(nu1, nu2)?;
    let raw = (nu1 * q_nu2 * nu2.exp() - nu2 * q_nu1 * nu1.exp()) / (nu1 - nu2);
    Ok(raw.max(0.0))
}

/// Lower bound on the single-photon yield Y_{Z|1}.
///
/// mu / (mu nu1 - mu nu2 - nu1^2 + nu2^2) * (Q_{nu1} e^{nu1} - Q_{nu2}
/// e^{nu2} - (nu1^2 - nu2^2)/mu^2 * (Q_mu e^{mu} - Y0_low)), clamped at 0.
/// Requires 0 <= nu2 < nu1 and nu1 + nu2 < mu, which makes the leading
/// denominator positive.
pub fn lower_y1(
    q_mu: f64,
    q_nu1: f64,
    q_nu2: f64,
    y0_low: f64,
    mu: f64,
    nu1: f64,
    nu2: f64,
) -> Result<f64, DecoyError> {
    check_order(nu1, nu2)?;
    if !(nu1 + nu2 < mu) {
        return Err(DecoyError::PremiseViolated { mu, nu1, nu2 });
    }
    let denom = mu * nu1 - mu * nu2 - nu1 * nu1 + nu2 * nu2;
    let bracket = q_nu1 * nu1.exp()
        - q_nu2 * nu2.exp()
        - (nu1 * nu1 - nu2 * nu2) / (mu * mu) * (q_mu * mu.exp() - y0_low);
    Ok((mu / denom * bracket).max(0.0))
}

/// Upper bound on a single-photon yield from two per-intensity fractions.
///
/// (F_{nu1} e^{nu1} - F_{nu2} e^{nu2}) / (nu1 - nu2), clamped at 0. Applies
/// to any event class whose fraction is a Poisson mixture of nonnegative
/// yields, here the X-error and cross-click classes.
pub fn upper_y1_generic(f_nu1: f64, f_nu2: f64, nu1: f64, nu2: f64) -> Result<f64, DecoyError> {
    check_order(nu1, nu2)?;
    let raw = (f_nu1 * nu1.exp() - f_nu2 * nu2.exp()) / (nu1 - nu2);
    Ok(raw.max(0.0))
}

/// Decoy-state bounds scaled to fractions per non-sampling round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyEstimates {
    /// Lower bound on the vacuum contribution to the Z gain.
    #[serde(rename = "QZ0_low")]
    pub qz0_low: f64,
    /// Lower bound on the single-photon contribution to the Z gain.
    #[serde(rename = "QZ1_low")]
    pub qz1_low: f64,
    /// Upper bound on the single-photon X-error fraction.
    #[serde(rename = "EX1_up")]
    pub ex1_up: f64,
    /// Upper bound on the single-photon cross-click fraction.
    #[serde(rename = "Qcross1_up")]
    pub qcross1_up: f64,
}

/// The (nu, 0)-specialized bounds with their Poisson prefactors.
///
/// Delegates to the generic bounds at nu1 = nu, nu2 = 0, where the vacuum
/// intensity reads Y_{Z|0} directly, then scales: the vacuum bound by
/// p_mu e^{-mu} + p_nu e^{-nu} + p_0, the single-photon bounds by
/// p_mu mu e^{-mu} + p_nu nu e^{-nu}.
pub fn estimate(stats: &ObservedStats, src: &SourceModel) -> Result<DecoyEstimates, DecoyError> {
    let mu = src.mu;
    let nu = src.nu;
    let q = &stats.q_z_given;
    let y0_low = lower_y0(q.decoy, q.vacuum, nu, 0.0)?;
    let y1_low = lower_y1(q.signal, q.decoy, q.vacuum, y0_low, mu, nu, 0.0)?;
    let e1_up = upper_y1_generic(stats.e_x_given.decoy, stats.e_x_given.vacuum, nu, 0.0)?;
    let c1_up = upper_y1_generic(
        stats.q_cross_given.decoy,
        stats.q_cross_given.vacuum,
        nu,
        0.0,
    )?;
    let vac_prefactor = src.p_mu * (-mu).exp() + src.p_nu * (-nu).exp() + src.p_0;
    let single_prefactor = src.p_mu * mu * (-mu).exp() + src.p_nu * nu * (-nu).exp();
    Ok(DecoyEstimates {
        qz0_low: vac_prefactor * y0_low,
        qz1_low: single_prefactor * y1_low,
        ex1_up: single_prefactor * e1_up,
        qcross1_up: single_prefactor * c1_up,
    })
}

/// Tag naming the totals row of a stats CSV.
const TOTAL_TAG: &str = "total";

#[derive(Debug, Serialize, Deserialize)]
struct StatsRow {
    intensity_tag: String,
    #[serde(rename = "Q_Z")]
    q_z: f64,
    #[serde(rename = "E_X")]
    e_x: f64,
    #[serde(rename = "Q_cross")]
    q_cross: Option<f64>,
}

/// Parse observed statistics from CSV text.
///
/// Expected header `intensity_tag,Q_Z,E_X,Q_cross`, one row per intensity
/// tag (signal, decoy, vacuum) carrying the per-intensity conditional
/// fractions, plus one row tagged `total` carrying Q_Z_total in the Q_Z
/// column and e_Z in the E_X column with Q_cross left empty.
pub fn stats_from_csv(text: &str) -> Result<ObservedStats, DecoyError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut per: PerIntensity<Option<(f64, f64, f64)>> = PerIntensity {
        signal: None,
        decoy: None,
        vacuum: None,
    };
    let mut total: Option<(f64, f64)> = None;
    for record in reader.deserialize::<StatsRow>() {
        let row = record?;
        if row.intensity_tag == TOTAL_TAG {
            if row.q_cross.is_some() {
                return Err(DecoyError::MalformedTotalRow);
            }
            if total.replace((row.q_z, row.e_x)).is_some() {
                return Err(DecoyError::DuplicateRow {
                    tag: TOTAL_TAG.to_string(),
                });
            }
            continue;
        }
        let tag = IntensityTag::from_name(&row.intensity_tag).ok_or(DecoyError::UnknownTag {
            tag: row.intensity_tag.clone(),
        })?;
        let slot = match tag {
            IntensityTag::Signal => &mut per.signal,
            IntensityTag::Decoy => &mut per.decoy,
            IntensityTag::Vacuum => &mut per.vacuum,
        };
        let q_cross = row.q_cross.ok_or(DecoyError::MissingRow {
            tag: format!("{} (Q_cross column)", tag.name()),
        })?;
        if slot.replace((row.q_z, row.e_x, q_cross)).is_some() {
            return Err(DecoyError::DuplicateRow {
                tag: tag.name().to_string(),
            });
        }
    }
    let unwrap_tag = |v: Option<(f64, f64, f64)>, tag: IntensityTag| {
        v.ok_or(DecoyError::MissingRow {
            tag: tag.name().to_string(),
        })
    };
    let signal = unwrap_tag(per.signal, IntensityTag::Signal)?;
    let decoy = unwrap_tag(per.decoy, IntensityTag::Decoy)?;
    let vacuum = unwrap_tag(per.vacuum, IntensityTag::Vacuum)?;
    let (q_z_total, e_z) = total.ok_or(DecoyError::MissingRow {
        tag: TOTAL_TAG.to_string(),
    })?;
    let stats = ObservedStats {
        q_z_given: PerIntensity {
            signal: signal.0,
            decoy: decoy.0,
            vacuum: vacuum.0,
        },
        e_x_given: PerIntensity {
            signal: signal.1,
            decoy: decoy.1,
            vacuum: vacuum.1,
        },
        q_cross_given: PerIntensity {
            signal: signal.2,
            decoy: decoy.2,
            vacuum: vacuum.2,
        },
        q_z_total,
        e_z,
    };
    Ok(crate::model::validate_stats(stats)?)
}

/// Serialize observed statistics to the CSV layout read by
/// [`stats_from_csv`].
pub fn stats_to_csv(stats: &ObservedStats) -> String {
    let mut out = String::from("intensity_tag,Q_Z,E_X,Q_cross\n");
    for tag in IntensityTag::ALL {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e}\n",
            tag.name(),
            stats.q_z_given.get(tag),
            stats.e_x_given.get(tag),
            stats.q_cross_given.get(tag),
        ));
    }
    out.push_str(&format!(
        "{},{:.16e},{:.16e},\n",
        TOTAL_TAG, stats.q_z_total, stats.e_z
    ));
    out
}

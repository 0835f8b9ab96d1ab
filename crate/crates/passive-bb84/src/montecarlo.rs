//! Seeded stochastic simulation of the prepare-and-measure rounds.
//!
//! The sampler reproduces the analytic channel model by construction and
//! serves as its independent check: coherent-state photons route through
//! passive linear optics independently, so each round can be simulated
//! photon by photon ([`SimConfig::resolve_photon_numbers`] additionally
//! records photon-number-resolved diagnostics), or whole cells of rounds can
//! be drawn from the analytic class probabilities at once (aggregation, the
//! default, which handles 10^8 rounds in milliseconds).
//!
//! Rounds are partitioned into 6 cells (3 intensities x 2 sender bases) by
//! deterministic largest-remainder apportionment of the joint probabilities.
//! Cell k draws from its own ChaCha8 stream: the generator is seeded with
//! the master seed and `set_stream(k)`, with k = 2 * intensity_index +
//! basis_index (intensities ordered signal, decoy, vacuum; Z before X), so
//! results are reproducible regardless of scheduling.
//!
//! Classification follows the protocol text: a line's double click assigns a
//! random bit; any clicks on both lines, including a dark count opposite a
//! double click, announce the undetermined outcome and discard the round.
//! The per-round mode applies misalignment as the exact polarization
//! rotation with sin(theta) = sqrt(e_ch), so mismatched-basis light splits
//! between detectors with the correlated probabilities (1 +- sin(2 theta))/2
//! rather than 50/50; no recorded statistic distinguishes the two.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{cell_probs, ChannelModel};
use crate::model::{IntensityTag, ObservedStats, PerIntensity, ReceiverModel, SourceModel};

/// Largest round count the simulator accepts; keeps every count exactly
/// representable as f64 when converted to fractions.
pub const MAX_ROUNDS: u64 = 1 << 53;

/// Failure modes of simulation and comparison.
#[derive(Debug, Error)]
pub enum SimError {
    /// At least one round is required.
    #[error("n_rounds must be >= 1")]
    NoRounds,
    /// Round count too large for exact fraction arithmetic.
    #[error("n_rounds = {n} exceeds the supported maximum 2^53")]
    TooManyRounds {
        /// Requested round count.
        n: u64,
    },
    /// Photon-number diagnostics exist only in per-round mode.
    #[error("resolve_photon_numbers requires aggregation = false (per-round sampling)")]
    ResolveNeedsPerRound,
    /// A fraction with no sampling variance disagrees with its expectation.
    #[error(
        "zero-variance cell '{name}': observed {observed}, expected {expected}; \
         the comparison is undefined"
    )]
    ZeroVariance {
        /// Fraction name.
        name: String,
        /// Sampled value.
        observed: f64,
        /// Analytic expectation.
        expected: f64,
    },
}

/// Simulation run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of protocol rounds.
    pub n_rounds: u64,
    /// Master seed; cell streams derive from it.
    pub seed: u64,
    /// Track (n_A, n_B, class) counts; forces per-round sampling.
    #[serde(default)]
    pub resolve_photon_numbers: bool,
    /// Draw class counts per cell instead of looping rounds.
    #[serde(default = "default_aggregation")]
    pub aggregation: bool,
}

fn default_aggregation() -> bool {
    true
}

/// Validate simulation parameters, returning them on success.
pub fn validate_sim_config(raw: SimConfig) -> Result<SimConfig, SimError> {
    if raw.n_rounds == 0 {
        return Err(SimError::NoRounds);
    }
    if raw.n_rounds > MAX_ROUNDS {
        return Err(SimError::TooManyRounds { n: raw.n_rounds });
    }
    if raw.resolve_photon_numbers && raw.aggregation {
        return Err(SimError::ResolveNeedsPerRound);
    }
    Ok(raw)
}

/// Exclusive classification of a round's announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum EventClass {
    /// Sender chose Z and the Z line alone clicked.
    #[serde(rename = "Z-sift")]
    ZSift,
    /// Sender chose X and the X line alone clicked.
    #[serde(rename = "X-sift")]
    XSift,
    /// Only the line opposite the sender's basis clicked; discarded.
    #[serde(rename = "mismatch")]
    Mismatch,
    /// Both lines clicked; announced as undetermined.
    #[serde(rename = "cross")]
    Cross,
    /// No detector clicked.
    #[serde(rename = "no-click")]
    NoClick,
}

/// Click counts of one (intensity, sender basis) cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CellCounts {
    /// Rounds assigned to the cell.
    pub rounds: u64,
    /// Conclusive in the sender's basis, bit agreed.
    pub sift_ok: u64,
    /// Conclusive in the sender's basis, bit flipped.
    pub sift_err: u64,
    /// Conclusive in the other basis.
    pub mismatch: u64,
    /// Both lines clicked.
    pub cross: u64,
    /// Nothing clicked.
    pub no_click: u64,
}

impl CellCounts {
    /// Sum over the exclusive classes; equals `rounds` for a valid cell.
    pub fn classified(&self) -> u64 {
        self.sift_ok + self.sift_err + self.mismatch + self.cross + self.no_click
    }
}

/// Counts for both sender bases at one intensity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BasisCells {
    /// Sender chose Z.
    pub z: CellCounts,
    /// Sender chose X.
    pub x: CellCounts,
}

/// One photon-number-resolved diagnostic entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiagnosticCount {
    /// Photons emitted by the sender.
    pub n_a: u32,
    /// Photons surviving the channel to the receiver.
    pub n_b: u32,
    /// Announced class of the round.
    pub class: EventClass,
    /// Rounds with this signature.
    pub count: u64,
}

/// Reproducibility record of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngTrace {
    /// Master seed.
    pub seed: u64,
    /// Number of derived cell streams.
    pub streams: u64,
}

/// Complete outcome of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    /// Sampled statistics in the analytic model's format.
    pub stats: ObservedStats,
    /// Raw counts per (intensity, sender basis) cell.
    pub cells: PerIntensity<BasisCells>,
    /// (n_A, n_B, class) counts; empty unless photon numbers were resolved.
    pub diagnostics: Vec<DiagnosticCount>,
    /// Seed and stream bookkeeping.
    pub rng_trace: RngTrace,
}

/// Deterministic largest-remainder apportionment of `n` rounds.
fn apportion(n: u64, weights: &[f64]) -> Vec<u64> {
    let mut counts: Vec<u64> = weights
        .iter()
        .map(|w| ((n as f64) * w).floor() as u64)
        .collect();
    let mut assigned: u64 = counts.iter().sum();
    while assigned > n {
        let i = counts
            .iter()
            .enumerate()
            .max_by_key(|(_, c)| **c)
            .map(|(i, _)| i)
            .expect("weights are nonempty");
        counts[i] -= 1;
        assigned -= 1;
    }
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = (n as f64) * weights[a] - counts[a] as f64;
        let rb = (n as f64) * weights[b] - counts[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    let mut left = n - assigned;
    let mut k = 0;
    while left > 0 {
        counts[order[k % order.len()]] += 1;
        left -= 1;
        k += 1;
    }
    counts
}

fn cell_stream(tag: IntensityTag, sender_z: bool) -> u64 {
    let tag_idx = match tag {
        IntensityTag::Signal => 0,
        IntensityTag::Decoy => 1,
        IntensityTag::Vacuum => 2,
    };
    2 * tag_idx + if sender_z { 0 } else { 1 }
}

fn cell_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn binomial_draw(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    rng.sample(Binomial::new(n, p).expect("p clamped to (0, 1)"))
}

/// Sample one cell's class counts from the analytic probabilities.
fn sample_cell_aggregated(
    rng: &mut ChaCha8Rng,
    rounds: u64,
    p: &crate::channel::CellProbs,
) -> CellCounts {
    let classes = [
        p.conclusive_ok,
        p.conclusive_err,
        p.mismatch,
        p.cross,
        p.no_click,
    ];
    let mut out = [0u64; 5];
    let mut n_rem = rounds;
    let mut p_rem = 1.0f64;
    for (k, &pk) in classes.iter().enumerate().take(4) {
        let cond = if p_rem > 0.0 {
            (pk / p_rem).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let drawn = binomial_draw(rng, n_rem, cond);
        out[k] = drawn;
        n_rem -= drawn;
        p_rem -= pk;
    }
    out[4] = n_rem;
    CellCounts {
        rounds,
        sift_ok: out[0],
        sift_err: out[1],
        mismatch: out[2],
        cross: out[3],
        no_click: out[4],
    }
}

/// Probability that a photon lands on the first detector of each arm, given
/// the sender's basis, bit, and the misalignment rotation.
struct DetectorTable {
    /// [bit] -> P(first Z detector | photon in Z arm).
    z_first: [f64; 2],
    /// [bit] -> P(first X detector | photon in X arm).
    x_first: [f64; 2],
}

fn detector_table(sender_z: bool, e_ch: f64) -> DetectorTable {
    let sin_t = e_ch.sqrt();
    let cos_t = (1.0 - e_ch).sqrt();
    let sin_2t = 2.0 * sin_t * cos_t;
    if sender_z {
        DetectorTable {
            z_first: [1.0 - e_ch, e_ch],
            x_first: [(1.0 + sin_2t) / 2.0, (1.0 - sin_2t) / 2.0],
        }
    } else {
        DetectorTable {
            z_first: [(1.0 - sin_2t) / 2.0, (1.0 + sin_2t) / 2.0],
            x_first: [1.0 - e_ch, e_ch],
        }
    }
}

struct PerRoundCellOutput {
    counts: CellCounts,
    diagnostics: BTreeMap<(u32, u32, EventClass), u64>,
}

/// Simulate one cell photon by photon.
fn sample_cell_per_round(
    rng: &mut ChaCha8Rng,
    rounds: u64,
    mu_a: f64,
    sender_z: bool,
    ch: &ChannelModel,
    m: &ReceiverModel,
    resolve: bool,
) -> PerRoundCellOutput {
    let eta_ch = ch.transmittance();
    let table = detector_table(sender_z, ch.e_ch);
    let poisson = if mu_a > 0.0 {
        Some(Poisson::new(mu_a).expect("validated intensity"))
    } else {
        None
    };
    let mut counts = CellCounts {
        rounds,
        ..CellCounts::default()
    };
    let mut diagnostics = BTreeMap::new();
    for _ in 0..rounds {
        let bit = usize::from(rng.random::<bool>());
        let n_a = match &poisson {
            Some(p) => rng.sample(*p) as u64,
            None => 0,
        };
        // detectors: [z_first, z_second, x_first, x_second]
        let mut hit = [false; 4];
        let mut n_b = 0u64;
        for _ in 0..n_a {
            if eta_ch < 1.0 && rng.random::<f64>() >= eta_ch {
                continue;
            }
            n_b += 1;
            let to_z_arm = rng.random::<f64>() < m.p_z;
            let (eta_line, base, p_first) = if to_z_arm {
                (m.eta_z, 0, table.z_first[bit])
            } else {
                (m.eta_x, 2, table.x_first[bit])
            };
            if eta_line < 1.0 && rng.random::<f64>() >= eta_line {
                continue;
            }
            let first = rng.random::<f64>() < p_first;
            hit[base + usize::from(!first)] = true;
        }
        if m.d > 0.0 {
            for det in &mut hit {
                if !*det && rng.random::<f64>() < m.d {
                    *det = true;
                }
            }
        }
        let z_click = hit[0] || hit[1];
        let x_click = hit[2] || hit[3];
        let class = match (z_click, x_click) {
            (false, false) => {
                counts.no_click += 1;
                EventClass::NoClick
            }
            (true, true) => {
                counts.cross += 1;
                EventClass::Cross
            }
            (z, _) => {
                let matched = z == sender_z;
                if !matched {
                    counts.mismatch += 1;
                    EventClass::Mismatch
                } else {
                    let (first, second) = if z { (hit[0], hit[1]) } else { (hit[2], hit[3]) };
                    let measured = if first && second {
                        usize::from(rng.random::<bool>())
                    } else {
                        usize::from(second)
                    };
                    if measured == bit {
                        counts.sift_ok += 1;
                    } else {
                        counts.sift_err += 1;
                    }
                    if sender_z {
                        EventClass::ZSift
                    } else {
                        EventClass::XSift
                    }
                }
            }
        };
        if resolve {
            *diagnostics
                .entry((n_a as u32, n_b as u32, class))
                .or_insert(0) += 1;
        }
    }
    PerRoundCellOutput {
        counts,
        diagnostics,
    }
}

fn fraction(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Run the simulation described by `cfg` against the analytic channel model.
///
/// Deterministic in `cfg` (seed included); cells are sampled from
/// independent streams in a fixed order.
pub fn simulate(
    cfg: &SimConfig,
    ch: &ChannelModel,
    m: &ReceiverModel,
    src: &SourceModel,
) -> Result<SimResult, SimError> {
    let cfg = validate_sim_config(*cfg)?;
    let mut weights = Vec::with_capacity(6);
    for tag in IntensityTag::ALL {
        for sender_z in [true, false] {
            let p_basis = if sender_z {
                src.p_z_alice
            } else {
                src.p_x_alice()
            };
            weights.push(src.prob(tag) * p_basis);
        }
    }
    let cell_rounds = apportion(cfg.n_rounds, &weights);
    let mut cells: PerIntensity<BasisCells> = PerIntensity::from_fn(|_| BasisCells::default());
    let mut diagnostics: BTreeMap<(u32, u32, EventClass), u64> = BTreeMap::new();
    for (idx, tag) in IntensityTag::ALL.into_iter().enumerate() {
        for (b, sender_z) in [true, false].into_iter().enumerate() {
            let rounds = cell_rounds[2 * idx + b];
            let mut rng = cell_rng(cfg.seed, cell_stream(tag, sender_z));
            let counts = if cfg.aggregation {
                let probs = cell_probs(ch, m, src.intensity(tag), sender_z);
                sample_cell_aggregated(&mut rng, rounds, &probs)
            } else {
                let out = sample_cell_per_round(
                    &mut rng,
                    rounds,
                    src.intensity(tag),
                    sender_z,
                    ch,
                    m,
                    cfg.resolve_photon_numbers,
                );
                for (key, count) in out.diagnostics {
                    *diagnostics.entry(key).or_insert(0) += count;
                }
                out.counts
            };
            let cell = cells.get_mut(tag);
            if sender_z {
                cell.z = counts;
            } else {
                cell.x = counts;
            }
        }
    }
    let mut q_z = PerIntensity::from_fn(|_| 0.0);
    let mut e_x = PerIntensity::from_fn(|_| 0.0);
    let mut q_cross = PerIntensity::from_fn(|_| 0.0);
    let mut sift_z_total = 0u64;
    let mut err_z_total = 0u64;
    let mut q_z_count_total = 0u64;
    for tag in IntensityTag::ALL {
        let pair = cells.get(tag);
        let tag_rounds = pair.z.rounds + pair.x.rounds;
        let z_sift = pair.z.sift_ok + pair.z.sift_err;
        *q_z.get_mut(tag) = fraction(z_sift, tag_rounds);
        *e_x.get_mut(tag) = fraction(pair.x.sift_err, tag_rounds);
        *q_cross.get_mut(tag) = fraction(pair.z.cross + pair.x.cross, tag_rounds);
        sift_z_total += z_sift;
        err_z_total += pair.z.sift_err;
        q_z_count_total += z_sift;
    }
    let stats = ObservedStats {
        q_z_given: q_z,
        e_x_given: e_x,
        q_cross_given: q_cross,
        q_z_total: fraction(q_z_count_total, cfg.n_rounds),
        e_z: fraction(err_z_total, sift_z_total),
    };
    Ok(SimResult {
        stats,
        cells,
        diagnostics: diagnostics
            .into_iter()
            .map(|((n_a, n_b, class), count)| DiagnosticCount {
                n_a,
                n_b,
                class,
                count,
            })
            .collect(),
        rng_trace: RngTrace {
            seed: cfg.seed,
            streams: 6,
        },
    })
}

/// One fraction's sampled-vs-expected comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ZScore {
    /// Fraction name, e.g. "Q_Z|signal".
    pub name: String,
    /// Sampled value.
    pub observed: f64,
    /// Analytic expectation.
    pub expected: f64,
    /// Effective sample size behind the fraction.
    pub n: u64,
    /// (observed - expected) / binomial sigma; 0 when both sides agree
    /// exactly with zero variance.
    pub z: f64,
    /// Whether |z| exceeds 5.
    pub flagged: bool,
}

fn z_score(name: &str, observed: f64, expected: f64, n: u64) -> Result<ZScore, SimError> {
    let variance = expected * (1.0 - expected) / n.max(1) as f64;
    let z = if variance > 0.0 && n > 0 {
        (observed - expected) / variance.sqrt()
    } else if observed == expected {
        0.0
    } else {
        return Err(SimError::ZeroVariance {
            name: name.to_string(),
            observed,
            expected,
        });
    };
    Ok(ZScore {
        name: name.to_string(),
        observed,
        expected,
        n,
        z,
        flagged: z.abs() > 5.0,
    })
}

/// Compare sampled statistics against analytic expectations.
///
/// Produces one z-score per ObservedStats fraction using the expectation's
/// binomial variance at the cell's sample size. A cell with zero variance
/// (no rounds, or expectation exactly 0 or 1) is an error if the sampled
/// value disagrees, since no fluctuation can explain the difference.
pub fn compare(sim: &SimResult, expected: &ObservedStats) -> Result<Vec<ZScore>, SimError> {
    let mut scores = Vec::new();
    let mut n_total = 0u64;
    let mut sift_total = 0u64;
    for tag in IntensityTag::ALL {
        let pair = sim.cells.get(tag);
        let n_tag = pair.z.rounds + pair.x.rounds;
        n_total += n_tag;
        sift_total += pair.z.sift_ok + pair.z.sift_err;
        scores.push(z_score(
            &format!("Q_Z|{}", tag.name()),
            sim.stats.q_z_given.get(tag),
            expected.q_z_given.get(tag),
            n_tag,
        )?);
        scores.push(z_score(
            &format!("E_X|{}", tag.name()),
            sim.stats.e_x_given.get(tag),
            expected.e_x_given.get(tag),
            n_tag,
        )?);
        scores.push(z_score(
            &format!("Q_cross|{}", tag.name()),
            sim.stats.q_cross_given.get(tag),
            expected.q_cross_given.get(tag),
            n_tag,
        )?);
    }
    scores.push(z_score(
        "Q_Z_total",
        sim.stats.q_z_total,
        expected.q_z_total,
        n_total,
    )?);
    scores.push(z_score("e_Z", sim.stats.e_z, expected.e_z, sift_total)?);
    Ok(scores)
}

//! Fock-space oracle for the receiver's virtual three-way splitter and the
//! closed-form measurement operators it must reproduce.
//!
//! The receiver's passive unit is modeled as a splitter with arms Z', X', L
//! (probabilities from [`splitting_probs`]) followed by four threshold
//! detectors with dark-count probability `d`. On the n_B-photon subspace the
//! announced outcome classes {Z key, X key, no click, cross} induce operators
//! on system B. [`pushforward_povm`] builds them by brute force: it
//! enumerates every destination occupation of the six output modes, weights
//! each by an explicit enumeration of detector click patterns, and pushes the
//! result back through [`splitter_amplitude`]. [`closed_form_povm`] and
//! [`single_photon_povms`] implement the closed algebraic expressions the
//! brute force must match; their agreement is this module's core test.
//!
//! Also derived here: the single-photon sifting probabilities and the
//! equivalent active basis-choice bias ([`sifting_probs`]), the multi-photon
//! cross-click coefficient [`alpha`], and the per-photon-number outcome
//! probabilities [`conditional_event_probs`].

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::model::{splitting_probs, ReceiverModel, SplittingProbs};

/// Default photon-number cap for brute-force verification runs.
pub const N_MAX_DEFAULT: usize = 4;
/// Hard cap on the brute-force photon number (operator size 9x9).
pub const N_MAX_LIMIT: usize = 8;

/// Failure modes of the splitter analysis.
#[derive(Debug, Error)]
pub enum PovmError {
    /// Photon number outside the supported brute-force range.
    #[error("photon number n_B = {n_b} outside supported range [1, {max}]")]
    PhotonNumberOutOfRange {
        /// Requested photon number.
        n_b: usize,
        /// Upper limit.
        max: usize,
    },
    /// Closed forms cover only the multi-photon subspaces.
    #[error("closed-form coefficients require n_B >= 2 (n_B = {n_b}); use single_photon_povms")]
    ClosedFormNeedsMultiphoton {
        /// Requested photon number.
        n_b: usize,
    },
    /// Direct cross enumeration is only provided as a small-n_B test oracle.
    #[error("direct cross enumeration supports n_B <= 2 only (n_B = {n_b})")]
    DirectCrossRange {
        /// Requested photon number.
        n_b: usize,
    },
    /// The multi-photon coefficient's denominator is nonpositive.
    #[error(
        "alpha undefined: 1 - (p_Z'+p_L)^2 - (p_X'+p_L)^2 = {denominator} <= 0; \
         the multi-photon bound does not apply to this receiver"
    )]
    AlphaUndefined {
        /// Value of the offending denominator.
        denominator: f64,
    },
    /// Both conclusive probabilities vanish; basis frequencies are undefined.
    #[error("degenerate sifting: s_Z + s_X = 0 (d = 1 kills every conclusive outcome)")]
    DegenerateSifting,
}

/// Photon occupation of system B's two polarization modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccupationB {
    /// Photons in the horizontal mode.
    pub m_h: u32,
    /// Photons in the vertical mode.
    pub m_v: u32,
}

/// Photon occupation of the six splitter output modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccupationZXL {
    /// Z-line horizontal mode.
    pub m_zh: u32,
    /// Z-line vertical mode.
    pub m_zv: u32,
    /// X-line horizontal mode.
    pub m_xh: u32,
    /// X-line vertical mode.
    pub m_xv: u32,
    /// Loss-line horizontal mode.
    pub m_lh: u32,
    /// Loss-line vertical mode.
    pub m_lv: u32,
}

/// Announced outcome classes on the n_B-photon subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Conclusive Z-basis detection (Z line clicked, X line silent).
    ZKey,
    /// Conclusive X-basis detection.
    XKey,
    /// No detector clicked.
    NoClick,
    /// Both lines clicked; announced as basis "cross" and discarded.
    Cross,
}

impl Outcome {
    /// All four classes in canonical order.
    pub const ALL: [Outcome; 4] = [
        Outcome::ZKey,
        Outcome::XKey,
        Outcome::NoClick,
        Outcome::Cross,
    ];

    /// Label used in reports.
    pub fn name(self) -> &'static str {
        match self {
            Outcome::ZKey => "Z",
            Outcome::XKey => "X",
            Outcome::NoClick => "no-click",
            Outcome::Cross => "cross",
        }
    }
}

/// A Hermitian operator on the n_B-photon occupation basis of system B.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    /// Photon number of the subspace.
    pub n_b: usize,
    /// Basis states in fixed order (m_H descending).
    pub basis: Vec<OccupationB>,
    /// Real matrix entries in that basis.
    pub entries: DMatrix<f64>,
}

impl FockOperator {
    /// Zero operator on the n_B-photon subspace.
    pub fn zeros(n_b: usize) -> FockOperator {
        let basis = occupation_basis(n_b);
        let dim = basis.len();
        FockOperator {
            n_b,
            basis,
            entries: DMatrix::zeros(dim, dim),
        }
    }

    /// Identity operator on the n_B-photon subspace.
    pub fn identity(n_b: usize) -> FockOperator {
        let basis = occupation_basis(n_b);
        let dim = basis.len();
        FockOperator {
            n_b,
            basis,
            entries: DMatrix::identity(dim, dim),
        }
    }

    /// Largest absolute entry of the difference to another operator.
    pub fn max_abs_diff(&self, other: &FockOperator) -> f64 {
        (&self.entries - &other.entries).abs().max()
    }

    /// Largest deviation from symmetry, |A - A^T|_max.
    pub fn asymmetry(&self) -> f64 {
        (&self.entries - self.entries.transpose()).abs().max()
    }

    /// Smallest eigenvalue (operators here are symmetric by construction).
    pub fn min_eigenvalue(&self) -> f64 {
        self.entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Largest off-diagonal magnitude.
    pub fn max_offdiag(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.entries.nrows() {
            for j in 0..self.entries.ncols() {
                if i != j {
                    worst = worst.max(self.entries[(i, j)].abs());
                }
            }
        }
        worst
    }

    /// Largest deviation from `c * identity`.
    pub fn max_dev_from_scalar(&self, c: f64) -> f64 {
        let dim = self.entries.nrows();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { c } else { 0.0 };
                worst = worst.max((self.entries[(i, j)] - want).abs());
            }
        }
        worst
    }
}

/// Occupation basis of the n_B-photon subspace, m_H descending.
///
/// Index 0 is |n_B, 0> (all horizontal); at n_B = 1 index 0 is |H> and
/// index 1 is |V>.
pub fn occupation_basis(n_b: usize) -> Vec<OccupationB> {
    (0..=n_b)
        .map(|i| OccupationB {
            m_h: (n_b - i) as u32,
            m_v: i as u32,
        })
        .collect()
}

/// Exact multinomial coefficient n! / (k0! k1! k2!) with k0+k1+k2 = n.
fn multinomial3(k0: u32, k1: u32, k2: u32) -> u128 {
    fn binom(n: u32, k: u32) -> u128 {
        let mut acc: u128 = 1;
        for i in 0..k as u128 {
            acc = acc * (n as u128 - i) / (i + 1);
        }
        acc
    }
    let n = k0 + k1 + k2;
    binom(n, k0) * binom(n - k0, k1)
}

/// Transition amplitude `<dst| U |src, vac>` of the three-way splitter.
///
/// Zero unless each polarization sector is conserved
/// (m_ZH + m_XH + m_LH = m_H and likewise for V); otherwise the product over
/// the two sectors of sqrt(multinomial) times the square roots of the arm
/// probabilities raised to the arm occupations. Always nonnegative.
pub fn splitter_amplitude(src: &OccupationB, dst: &OccupationZXL, s: &SplittingProbs) -> f64 {
    if dst.m_zh + dst.m_xh + dst.m_lh != src.m_h || dst.m_zv + dst.m_xv + dst.m_lv != src.m_v {
        return 0.0;
    }
    let combinatorial = multinomial3(dst.m_zh, dst.m_xh, dst.m_lh)
        * multinomial3(dst.m_zv, dst.m_xv, dst.m_lv);
    let z = dst.m_zh + dst.m_zv;
    let x = dst.m_xh + dst.m_xv;
    let l = dst.m_lh + dst.m_lv;
    // all factors under one square root; the amplitude is a product of
    // nonnegative square roots, so no sign bookkeeping is needed
    (combinatorial as f64 * s.p_zp.powi(z as i32) * s.p_xp.powi(x as i32) * s.p_l.powi(l as i32))
        .sqrt()
}

/// Enumerate every destination occupation with the given mode totals.
fn destinations(n_b: usize) -> Vec<OccupationZXL> {
    let n = n_b as u32;
    let mut out = Vec::new();
    for m_zh in 0..=n {
        for m_zv in 0..=n - m_zh {
            for m_xh in 0..=n - m_zh - m_zv {
                for m_xv in 0..=n - m_zh - m_zv - m_xh {
                    for m_lh in 0..=n - m_zh - m_zv - m_xh - m_xv {
                        let m_lv = n - m_zh - m_zv - m_xh - m_xv - m_lh;
                        out.push(OccupationZXL {
                            m_zh,
                            m_zv,
                            m_xh,
                            m_xv,
                            m_lh,
                            m_lv,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Probability of each outcome class given a destination occupation.
///
/// Enumerates the 2^4 detector click patterns. A detector with at least one
/// photon clicks with certainty (threshold detector), an empty one clicks
/// with dark-count probability `d`. Any photon in the X line fires one of the
/// two X detectors with certainty, so only the line total matters for the
/// merged classes; the split between the two X detectors never affects which
/// class a pattern lands in.
fn class_weights(dst: &OccupationZXL, d: f64) -> [f64; 4] {
    let occupied = [
        dst.m_zh > 0,
        dst.m_zv > 0,
        dst.m_xh + dst.m_xv > 0,
        false,
    ];
    // weights indexed as Outcome::ALL: Z, X, no-click, cross
    let mut w = [0.0f64; 4];
    for pattern in 0..16u32 {
        let mut prob = 1.0;
        for (k, &occ) in occupied.iter().enumerate() {
            let p_click = if occ { 1.0 } else { d };
            prob *= if pattern >> k & 1 == 1 {
                p_click
            } else {
                1.0 - p_click
            };
        }
        if prob == 0.0 {
            continue;
        }
        let z_clicked = pattern & 0b0011 != 0;
        let x_clicked = pattern & 0b1100 != 0;
        let idx = match (z_clicked, x_clicked) {
            (true, false) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, true) => 3,
        };
        w[idx] += prob;
    }
    w
}

fn check_n_b(n_b: usize) -> Result<(), PovmError> {
    if n_b < 1 || n_b > N_MAX_LIMIT {
        return Err(PovmError::PhotonNumberOutOfRange {
            n_b,
            max: N_MAX_LIMIT,
        });
    }
    Ok(())
}

fn pushforward_accumulate(
    n_b: usize,
    m: &ReceiverModel,
    select: impl Fn(&[f64; 4]) -> f64,
) -> FockOperator {
    let s = splitting_probs(m);
    let basis = occupation_basis(n_b);
    let dim = basis.len();
    let mut entries = DMatrix::zeros(dim, dim);
    for dst in destinations(n_b) {
        let weight = select(&class_weights(&dst, m.d));
        if weight == 0.0 {
            continue;
        }
        let amps: Vec<f64> = basis
            .iter()
            .map(|b| splitter_amplitude(b, &dst, &s))
            .collect();
        for (i, &ai) in amps.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            for (j, &aj) in amps.iter().enumerate() {
                entries[(i, j)] += weight * ai * aj;
            }
        }
    }
    FockOperator { n_b, basis, entries }
}

/// Brute-force measurement operator for one outcome class on the n_B-photon
/// subspace.
///
/// Sums `weight(dst) * |amp(dst)><amp(dst)|` over every destination
/// occupation, with weights from the detector-pattern enumeration. The cross
/// class is returned as identity minus the other three; see
/// [`direct_cross_povm`] for the independent enumeration used to test that
/// subtraction.
pub fn pushforward_povm(
    n_b: usize,
    outcome: Outcome,
    m: &ReceiverModel,
) -> Result<FockOperator, PovmError> {
    check_n_b(n_b)?;
    match outcome {
        Outcome::ZKey => Ok(pushforward_accumulate(n_b, m, |w| w[0])),
        Outcome::XKey => Ok(pushforward_accumulate(n_b, m, |w| w[1])),
        Outcome::NoClick => Ok(pushforward_accumulate(n_b, m, |w| w[2])),
        Outcome::Cross => {
            let mut op = FockOperator::identity(n_b);
            for other in [Outcome::ZKey, Outcome::XKey, Outcome::NoClick] {
                op.entries -= pushforward_povm(n_b, other, m)?.entries;
            }
            Ok(op)
        }
    }
}

/// Cross-class operator by direct pattern enumeration, n_B <= 2 only.
///
/// Test oracle for the subtraction in [`pushforward_povm`].
pub fn direct_cross_povm(n_b: usize, m: &ReceiverModel) -> Result<FockOperator, PovmError> {
    check_n_b(n_b)?;
    if n_b > 2 {
        return Err(PovmError::DirectCrossRange { n_b });
    }
    Ok(pushforward_accumulate(n_b, m, |w| w[3]))
}

/// Closed-form scalar `c` such that the outcome operator is `c * identity`
/// on the n_B-photon subspace, n_B >= 2.
pub fn closed_form_povm(n_b: usize, outcome: Outcome, m: &ReceiverModel) -> Result<f64, PovmError> {
    check_n_b(n_b)?;
    if n_b < 2 {
        return Err(PovmError::ClosedFormNeedsMultiphoton { n_b });
    }
    Ok(merged_scalar(n_b, outcome, m))
}

fn merged_scalar(n_b: usize, outcome: Outcome, m: &ReceiverModel) -> f64 {
    let s = splitting_probs(m);
    let d = m.d;
    let q = (1.0 - d) * (1.0 - d);
    let n = n_b as i32;
    match outcome {
        Outcome::ZKey => q * ((s.p_zp + s.p_l).powi(n) - q * s.p_l.powi(n)),
        Outcome::XKey => q * ((s.p_xp + s.p_l).powi(n) - q * s.p_l.powi(n)),
        Outcome::NoClick => q * q * s.p_l.powi(n),
        Outcome::Cross => {
            1.0 - q
                * ((s.p_zp + s.p_l).powi(n) + (s.p_xp + s.p_l).powi(n) - q * s.p_l.powi(n))
        }
    }
}

/// The five announced single-photon operators plus the fail split.
///
/// `g_fail` merges the no-click and cross components; the two pieces are
/// exposed separately as diagnostics (`f_no_click`, `f_cross`) even though
/// the protocol announces only the merged failure.
#[derive(Debug, Clone)]
pub struct SinglePhotonPovms {
    /// Conclusive Z, bit 0.
    pub g_z0: FockOperator,
    /// Conclusive Z, bit 1.
    pub g_z1: FockOperator,
    /// Conclusive X, bit 0.
    pub g_x0: FockOperator,
    /// Conclusive X, bit 1.
    pub g_x1: FockOperator,
    /// Merged failure (no click or cross).
    pub g_fail: FockOperator,
    /// No-click component of the failure.
    pub f_no_click: FockOperator,
    /// Cross component of the failure.
    pub f_cross: FockOperator,
}

impl SinglePhotonPovms {
    /// The five announced operators in a fixed order.
    pub fn announced(&self) -> [(&'static str, &FockOperator); 5] {
        [
            ("G_Z0", &self.g_z0),
            ("G_Z1", &self.g_z1),
            ("G_X0", &self.g_x0),
            ("G_X1", &self.g_x1),
            ("G_fail", &self.g_fail),
        ]
    }
}

fn op2(n_b: usize, e: [[f64; 2]; 2]) -> FockOperator {
    FockOperator {
        n_b,
        basis: occupation_basis(n_b),
        entries: DMatrix::from_row_slice(2, 2, &[e[0][0], e[0][1], e[1][0], e[1][1]]),
    }
}

/// Closed-form single-photon operators with bit-value post-processing.
///
/// In the basis {|H>, |V>}: G_Z0 = (p_Z'|H><H| + p_L d 1)(1-d)^3
/// + (p_Z' d + p_L d^2)(1-d)^2 / 2, analogously for the others with |V>,
/// |D>, |Dbar|; the double-click term is split half-half between the bits.
pub fn single_photon_povms(m: &ReceiverModel) -> SinglePhotonPovms {
    let s = splitting_probs(m);
    let d = m.d;
    let f3 = (1.0 - d).powi(3);
    let f2 = (1.0 - d).powi(2);
    let proj_h = [[1.0, 0.0], [0.0, 0.0]];
    let proj_v = [[0.0, 0.0], [0.0, 1.0]];
    let proj_d = [[0.5, 0.5], [0.5, 0.5]];
    let proj_db = [[0.5, -0.5], [-0.5, 0.5]];
    let half_double_z = 0.5 * (s.p_zp * d + s.p_l * d * d) * f2;
    let half_double_x = 0.5 * (s.p_xp * d + s.p_l * d * d) * f2;
    let g = |arm: f64, proj: [[f64; 2]; 2], half_double: f64| {
        let mut e = [[0.0f64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let ident = if i == j { 1.0 } else { 0.0 };
                e[i][j] = (arm * proj[i][j] + s.p_l * d * ident) * f3 + half_double * ident;
            }
        }
        op2(1, e)
    };
    let g_z0 = g(s.p_zp, proj_h, half_double_z);
    let g_z1 = g(s.p_zp, proj_v, half_double_z);
    let g_x0 = g(s.p_xp, proj_d, half_double_x);
    let g_x1 = g(s.p_xp, proj_db, half_double_x);
    let nc = s.p_l * (1.0 - d).powi(4);
    let cr = 1.0 - (1.0 + 2.0 * s.p_l * d - s.p_l * d * d) * f2;
    let f_no_click = op2(1, [[nc, 0.0], [0.0, nc]]);
    let f_cross = op2(1, [[cr, 0.0], [0.0, cr]]);
    let mut g_fail = f_no_click.clone();
    g_fail.entries += &f_cross.entries;
    SinglePhotonPovms {
        g_z0,
        g_z1,
        g_x0,
        g_x1,
        g_fail,
        f_no_click,
        f_cross,
    }
}

/// Single-photon operators rebuilt from the six-output-mode dilation.
///
/// Independent oracle for [`single_photon_povms`]: the splitter plus the
/// X-line measurement basis form an isometry from {H, V} into six modes
/// (z_H, z_V, x_D, x_Dbar, l_H, l_V); threshold detectors are diagonal in the
/// mode occupation, so each operator is M^T diag(w) M with per-mode pattern
/// weights w.
pub fn single_photon_pushforward(m: &ReceiverModel) -> SinglePhotonPovms {
    let s = splitting_probs(m);
    let d = m.d;
    let half = 0.5f64.sqrt();
    // rows: z_H, z_V, x_D, x_Dbar, l_H, l_V; columns: input H, V
    let modes: [[f64; 2]; 6] = [
        [s.p_zp.sqrt(), 0.0],
        [0.0, s.p_zp.sqrt()],
        [s.p_xp.sqrt() * half, s.p_xp.sqrt() * half],
        [s.p_xp.sqrt() * half, -s.p_xp.sqrt() * half],
        [s.p_l.sqrt(), 0.0],
        [0.0, s.p_l.sqrt()],
    ];
    // weights per announced class, indexed z0, z1, x0, x1, no-click, cross
    let mut ops = vec![[[0.0f64; 2]; 2]; 6];
    for (mode, amp) in modes.iter().enumerate() {
        let mut w = [0.0f64; 6];
        for pattern in 0..16u32 {
            let mut prob = 1.0;
            for det in 0..4 {
                let p_click = if det == mode { 1.0 } else { d };
                prob *= if pattern >> det & 1 == 1 {
                    p_click
                } else {
                    1.0 - p_click
                };
            }
            if prob == 0.0 {
                continue;
            }
            let z = pattern & 0b0011;
            let x = pattern & 0b1100;
            match (z != 0, x != 0) {
                (true, true) => w[5] += prob,
                (false, false) => w[4] += prob,
                (true, false) => match z {
                    0b0001 => w[0] += prob,
                    0b0010 => w[1] += prob,
                    _ => {
                        w[0] += prob / 2.0;
                        w[1] += prob / 2.0;
                    }
                },
                (false, true) => match x {
                    0b0100 => w[2] += prob,
                    0b1000 => w[3] += prob,
                    _ => {
                        w[2] += prob / 2.0;
                        w[3] += prob / 2.0;
                    }
                },
            }
        }
        for (k, op) in ops.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    op[i][j] += w[k] * amp[i] * amp[j];
                }
            }
        }
    }
    let f_no_click = op2(1, ops[4]);
    let f_cross = op2(1, ops[5]);
    let mut g_fail = f_no_click.clone();
    g_fail.entries += &f_cross.entries;
    SinglePhotonPovms {
        g_z0: op2(1, ops[0]),
        g_z1: op2(1, ops[1]),
        g_x0: op2(1, ops[2]),
        g_x1: op2(1, ops[3]),
        g_fail,
        f_no_click,
        f_cross,
    }
}

/// Single-photon conclusive probabilities and the equivalent active bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiftingProbs {
    /// Probability of a conclusive Z outcome for a single photon.
    pub s_z: f64,
    /// Probability of a conclusive X outcome.
    pub s_x: f64,
    /// Equivalent active Z-basis probability, s_Z / (s_Z + s_X).
    pub pt_z: f64,
    /// Equivalent active X-basis probability.
    pub pt_x: f64,
}

/// Conclusive-outcome probabilities of the single-photon measurement.
///
/// s_Z = (p_Z' + 2 p_L d - p_L d^2)(1-d)^2, s_X likewise with p_X'; the
/// normalized pair (pt_Z, pt_X) is the basis bias of the equivalent actively
/// switched measurement.
pub fn sifting_probs(m: &ReceiverModel) -> Result<SiftingProbs, PovmError> {
    let s = splitting_probs(m);
    let d = m.d;
    let q = (1.0 - d) * (1.0 - d);
    let s_z = (s.p_zp + 2.0 * s.p_l * d - s.p_l * d * d) * q;
    let s_x = (s.p_xp + 2.0 * s.p_l * d - s.p_l * d * d) * q;
    let total = s_z + s_x;
    if total <= 0.0 {
        return Err(PovmError::DegenerateSifting);
    }
    Ok(SiftingProbs {
        s_z,
        s_x,
        pt_z: s_z / total,
        pt_x: s_x / total,
    })
}

/// Coefficient bounding multi-photon Z-key contamination by cross clicks.
///
/// alpha = p_Z (p_Z'+p_L)^2 / (1 - (p_Z'+p_L)^2 - (p_X'+p_L)^2). The
/// denominator can be nonpositive for strongly lossy X lines; that case is a
/// hard error surfaced to the rate pipeline, never a silent clamp.
pub fn alpha(m: &ReceiverModel) -> Result<f64, PovmError> {
    let s = splitting_probs(m);
    let zz = (s.p_zp + s.p_l) * (s.p_zp + s.p_l);
    let xx = (s.p_xp + s.p_l) * (s.p_xp + s.p_l);
    let denominator = 1.0 - (zz + xx);
    if denominator <= 0.0 {
        return Err(PovmError::AlphaUndefined { denominator });
    }
    Ok(m.p_z * zz / denominator)
}

/// Outcome-class probabilities for any state with n_B photons at the
/// receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalEventProbs {
    /// Conclusive Z.
    pub z: f64,
    /// Conclusive X.
    pub x: f64,
    /// No click.
    pub no_click: f64,
    /// Cross click.
    pub cross: f64,
}

/// Per-photon-number outcome probabilities, independent of the state.
///
/// Valid for n_B >= 1; at n_B = 1 the merged values agree with the traces of
/// the single-photon operators.
pub fn conditional_event_probs(
    n_b: usize,
    m: &ReceiverModel,
) -> Result<ConditionalEventProbs, PovmError> {
    if n_b < 1 {
        return Err(PovmError::PhotonNumberOutOfRange {
            n_b,
            max: N_MAX_LIMIT,
        });
    }
    let z = merged_scalar(n_b, Outcome::ZKey, m);
    let x = merged_scalar(n_b, Outcome::XKey, m);
    let no_click = merged_scalar(n_b, Outcome::NoClick, m);
    let cross = merged_scalar(n_b, Outcome::Cross, m);
    Ok(ConditionalEventProbs {
        z,
        x,
        no_click,
        cross,
    })
}

//! End-to-end acceptance gate.
//!
//! One test per shipped guarantee, each at its stated tolerance and runtime
//! budget; the test names are the pass/fail lines. Frozen numbers are from
//! the independent reference pipeline (tools/reference_values.py).

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use passive_bb84::channel::{expected_stats, ChannelModel};
use passive_bb84::decoy::{
    estimate, lower_y0, lower_y1, poisson_gain, upper_y1_generic, YieldProfile,
};
use passive_bb84::keyrate::passive_rate;
use passive_bb84::model::{IntensityTag, ObservedStats, ReceiverModel, SourceModel};
use passive_bb84::montecarlo::{compare, simulate, EventClass, SimConfig, SimResult};
use passive_bb84::splitter_povm::{
    alpha, closed_form_povm, direct_cross_povm, pushforward_povm, single_photon_povms,
    single_photon_pushforward, FockOperator, Outcome, PovmError,
};
use passive_bb84::sweep::{sweep, SweepRow, SweepSpec, SweepVariant};

fn assert_within(elapsed: Duration, budget_s: u64, what: &str) {
    assert!(
        elapsed < Duration::from_secs(budget_s),
        "{what} exceeded its {budget_s}s budget: {elapsed:?}"
    );
}

fn paper_receiver(p_z: f64, r: f64, d: f64) -> ReceiverModel {
    ReceiverModel {
        p_z,
        d,
        eta_z: 1.0,
        eta_x: r,
    }
}

#[test]
fn criterion_1_povm_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..100 {
        let m = paper_receiver(
            rng.random_range(0.5..=0.99),
            rng.random_range(0.01..=1.0),
            rng.random_range(0.0..=0.1),
        );
        let ctx = format!("trial {trial}: p_Z={} r={} d={}", m.p_z, m.eta_x, m.d);

        // n_B = 1: bit-resolved closed algebra vs the six-mode dilation
        let sp = single_photon_povms(&m);
        let dil = single_photon_pushforward(&m);
        for ((name, a), (_, b)) in sp.announced().iter().zip(dil.announced().iter()) {
            assert!(
                a.max_abs_diff(b) < 1e-10,
                "{ctx}: {name} disagrees with the dilation by {}",
                a.max_abs_diff(b)
            );
        }
        let mut total = FockOperator::zeros(1);
        for (_, op) in sp.announced() {
            total.entries += &op.entries;
        }
        assert!(
            total.max_abs_diff(&FockOperator::identity(1)) < 1e-12,
            "{ctx}: single-photon completeness"
        );
        for (name, op) in sp.announced() {
            assert!(
                op.min_eigenvalue() > -1e-12,
                "{ctx}: {name} not positive semidefinite"
            );
        }

        for n_b in 1..=4usize {
            let ops: Vec<FockOperator> = Outcome::ALL
                .iter()
                .map(|&o| pushforward_povm(n_b, o, &m).unwrap())
                .collect();
            // merged closed forms are scalar on the subspace for n_B >= 2
            if n_b >= 2 {
                for (op, &outcome) in ops.iter().zip(Outcome::ALL.iter()) {
                    let scalar = closed_form_povm(n_b, outcome, &m).unwrap();
                    assert!(
                        op.max_dev_from_scalar(scalar) < 1e-10,
                        "{ctx}: n_B={n_b} {} off closed form by {}",
                        outcome.name(),
                        op.max_dev_from_scalar(scalar)
                    );
                }
            }
            // the cross complement must match direct pattern enumeration
            if n_b <= 2 {
                let direct = direct_cross_povm(n_b, &m).unwrap();
                assert!(
                    ops[3].max_abs_diff(&direct) < 1e-10,
                    "{ctx}: n_B={n_b} cross complement vs direct enumeration"
                );
            }
            let mut total = FockOperator::zeros(n_b);
            for op in &ops {
                total.entries += &op.entries;
            }
            assert!(
                total.max_abs_diff(&FockOperator::identity(n_b)) < 1e-12,
                "{ctx}: n_B={n_b} completeness"
            );
            for (op, &outcome) in ops.iter().zip(Outcome::ALL.iter()) {
                assert!(
                    op.min_eigenvalue() > -1e-12,
                    "{ctx}: n_B={n_b} {} not positive semidefinite",
                    outcome.name()
                );
            }
        }
    }
    assert_within(start.elapsed(), 10, "criterion 1");
}

#[test]
fn criterion_2_decoy_sandwich() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for trial in 0..1000 {
        let n = 26;
        let profile = YieldProfile {
            y_z: (0..n).map(|_| rng.random_range(0.0..=1.0)).collect(),
            y_x_err: (0..n).map(|_| rng.random_range(0.0..=1.0)).collect(),
            y_cross: (0..n).map(|_| rng.random_range(0.0..=1.0)).collect(),
        };
        let mu: f64 = rng.random_range(0.4..=1.0);
        let nu2: f64 = rng.random_range(0.0..=0.08);
        let nu1 = rng.random_range(nu2 + 0.01..=(mu - nu2 - 0.01).min(0.3));
        let (q_mu, _, _) = poisson_gain(&profile, mu).unwrap();
        let (q_n1, e_n1, c_n1) = poisson_gain(&profile, nu1).unwrap();
        let (q_n2, e_n2, c_n2) = poisson_gain(&profile, nu2).unwrap();
        let y0 = lower_y0(q_n1, q_n2, nu1, nu2).unwrap();
        let y1 = lower_y1(q_mu, q_n1, q_n2, y0, mu, nu1, nu2).unwrap();
        let e1 = upper_y1_generic(e_n1, e_n2, nu1, nu2).unwrap();
        let c1 = upper_y1_generic(c_n1, c_n2, nu1, nu2).unwrap();
        let ctx = format!("trial {trial}: mu={mu} nu1={nu1} nu2={nu2}");
        assert!(profile.y_z[0] - y0 >= -1e-12, "{ctx}: vacuum lower bound");
        assert!(
            profile.y_z[1] - y1 >= -1e-12,
            "{ctx}: single-photon lower bound"
        );
        assert!(e1 - profile.y_x_err[1] >= -1e-12, "{ctx}: error upper bound");
        assert!(c1 - profile.y_cross[1] >= -1e-12, "{ctx}: cross upper bound");
    }
    assert_within(start.elapsed(), 5, "criterion 2");
}

static FULL_SWEEP: OnceLock<Vec<SweepRow>> = OnceLock::new();

fn full_sweep() -> &'static [SweepRow] {
    FULL_SWEEP.get_or_init(|| sweep(&SweepSpec::default()))
}

fn rows_of(variant: SweepVariant) -> Vec<&'static SweepRow> {
    full_sweep().iter().filter(|r| r.variant == variant).collect()
}

#[test]
fn criterion_3_distance_sweep_structure() {
    let start = Instant::now();
    let active = rows_of(SweepVariant::Active);
    let p1 = rows_of(SweepVariant::PassiveR1);
    let p05 = rows_of(SweepVariant::PassiveR05);
    assert_eq!(active.len(), 51);

    // (a) rowwise ordering wherever the lower curve is positive
    for i in 0..active.len() {
        if p1[i].r > 0.0 {
            assert!(
                active[i].r >= p1[i].r,
                "active {} < passive(r=1) {} at {} km",
                active[i].r,
                p1[i].r,
                active[i].length_km
            );
        }
        if p05[i].r > 0.0 {
            assert!(
                p1[i].r >= p05[i].r,
                "passive(r=1) {} < passive(r=0.5) {} at {} km",
                p1[i].r,
                p05[i].r,
                p1[i].length_km
            );
        }
    }

    // frozen short-fiber optima
    assert!((active[0].r - 0.10683866424767259).abs() < 1e-12);
    assert!((p1[0].r - 0.10370815627228971).abs() < 1e-12);
    assert!((p05[0].r - 0.10344954119250994).abs() < 1e-12);
    let virt = rows_of(SweepVariant::Virtual);
    assert!((virt[0].r - 0.1076878018355592).abs() < 1e-12);

    // (b) small intrinsic gap at zero length, large gap near each cutoff
    let gap0 = p1[0].gap_to_active.unwrap();
    assert!(
        (gap0 - 0.02930126464447137).abs() < 1e-12 && gap0 < 0.10,
        "short-fiber active-passive gap: {gap0}"
    );
    for (rows, frozen) in [(&p1, 0.9064704902261087), (&p05, 0.9666213549275148)] {
        let last = rows.iter().rev().find(|r| r.r > 0.0).expect("has positive rows");
        let gap = last.gap_to_active.unwrap();
        assert!(
            gap > 0.5 && (gap - frozen).abs() < 1e-12,
            "near-cutoff gap at {} km: {gap}",
            last.length_km
        );
    }

    // (c) active bias pins to the grid maximum at short distances...
    for row in active.iter().take(11) {
        assert!(
            (row.p_z - 0.99).abs() < 1e-12,
            "active optimal p_Z at {} km: {}",
            row.length_km,
            row.p_z
        );
    }
    // ...while the passive bias falls off over the last 50 km before cutoff
    let frozen_tail = [0.91, 0.90, 0.89, 0.87, 0.86, 0.84, 0.81, 0.79, 0.76, 0.71, 0.66];
    let tail: Vec<&&SweepRow> = p1.iter().filter(|r| r.length_km >= 200.0).collect();
    assert_eq!(tail.len(), frozen_tail.len());
    for (row, want) in tail.iter().zip(frozen_tail.iter()) {
        assert!(row.r > 0.0, "passive(r=1) must stay positive to 250 km");
        assert!(
            (row.p_z - want).abs() < 1e-9,
            "passive optimal p_Z at {} km: {} (frozen {want})",
            row.length_km,
            row.p_z
        );
    }
    for pair in tail.windows(2) {
        assert!(
            pair[1].p_z < pair[0].p_z - 1e-12,
            "optimal p_Z must strictly decrease: {} -> {} at {} km",
            pair[0].p_z,
            pair[1].p_z,
            pair[1].length_km
        );
    }
    assert_within(start.elapsed(), 120, "criterion 3");
}

#[test]
fn criterion_4_virtual_gap_below_one_percent() {
    let start = Instant::now();
    let p1 = rows_of(SweepVariant::PassiveR1);
    let virt = rows_of(SweepVariant::Virtual);
    let mut violations = Vec::new();
    for (p, v) in p1.iter().zip(virt.iter()) {
        if p.r <= 0.0 {
            continue;
        }
        let gap = (p.r - v.r).abs() / v.r;
        if gap >= 0.01 {
            violations.push(format!("{} km: |R - R'|/R' = {:.6}", p.length_km, gap));
        }
    }
    assert_within(start.elapsed(), 120, "criterion 4");
    assert!(
        violations.is_empty(),
        "virtual-vs-passive relative gap reaches the cross-click penalty floor \
         at short distances:\n{}",
        violations.join("\n")
    );
}

/// Stats with one fraction slot shifted by delta; slots 0..=8 are the
/// per-intensity conditionals, 9 the total gain, 10 the sifted error rate.
fn perturb(stats: &ObservedStats, slot: usize, delta: f64) -> ObservedStats {
    let mut out = *stats;
    let tag = IntensityTag::ALL[slot % 3];
    match slot {
        0..=2 => *out.q_z_given.get_mut(tag) += delta,
        3..=5 => *out.e_x_given.get_mut(tag) += delta,
        6..=8 => *out.q_cross_given.get_mut(tag) += delta,
        9 => out.q_z_total += delta,
        10 => out.e_z += delta,
        _ => unreachable!(),
    }
    out
}

fn slot_expected(stats: &ObservedStats, slot: usize) -> f64 {
    let tag = IntensityTag::ALL[slot % 3];
    match slot {
        0..=2 => stats.q_z_given.get(tag),
        3..=5 => stats.e_x_given.get(tag),
        6..=8 => stats.q_cross_given.get(tag),
        9 => stats.q_z_total,
        10 => stats.e_z,
        _ => unreachable!(),
    }
}

/// Binomial sample size behind each fraction slot.
fn slot_n(sim: &SimResult, n_rounds: u64, slot: usize) -> u64 {
    let tag = IntensityTag::ALL[slot % 3];
    match slot {
        0..=8 => {
            let pair = sim.cells.get(tag);
            pair.z.rounds + pair.x.rounds
        }
        9 => n_rounds,
        10 => IntensityTag::ALL
            .into_iter()
            .map(|t| {
                let c = sim.cells.get(t).z;
                c.sift_ok + c.sift_err
            })
            .sum(),
        _ => unreachable!(),
    }
}

#[test]
fn criterion_5_monte_carlo_vs_analytic() {
    let start = Instant::now();
    let m = ReceiverModel {
        p_z: 0.9,
        d: 1e-7,
        eta_z: 0.7,
        eta_x: 0.7,
    };
    // equal intensity weights keep every decoy cell populated
    let src = SourceModel {
        mu: 0.5,
        nu: 0.05,
        p_mu: 1.0 / 3.0,
        p_nu: 1.0 / 3.0,
        p_0: 1.0 / 3.0,
        p_z_alice: 0.9,
    };
    let c_ec = 1.1;
    let n_rounds = 100_000_000u64;
    // frozen analytic anchors per length: (Q_Z_total, R)
    let frozen = [
        (0.0, 0.08754555115099988, 0.033028252485144294),
        (50.0, 0.010213569179555439, 0.0030113515421296313),
        (100.0, 0.0010378443874161638, 0.0002968576256874415),
    ];
    for (i, &(l, frozen_q, frozen_r)) in frozen.iter().enumerate() {
        let ch = ChannelModel {
            length_km: l,
            e_ch: 0.03,
            km_per_decade: 50.0,
        };
        let expected = expected_stats(&ch, &m, &src);
        assert!(
            (expected.q_z_total - frozen_q).abs() < 1e-12,
            "analytic total gain moved at {l} km: {}",
            expected.q_z_total
        );
        let analytic = passive_rate(&expected, &m, &src, c_ec);
        assert!(analytic.valid, "analytic rate must be positive at {l} km");
        assert!(
            (analytic.r - frozen_r).abs() < 1e-12,
            "analytic rate moved at {l} km: {}",
            analytic.r
        );

        let cfg = SimConfig {
            n_rounds,
            seed: 500 + i as u64,
            resolve_photon_numbers: false,
            aggregation: true,
        };
        let sim = simulate(&cfg, &ch, &m, &src).unwrap();
        for score in compare(&sim, &expected).unwrap() {
            assert!(
                !score.flagged,
                "{l} km: {} off by {:.2} sigma (observed {}, expected {})",
                score.name, score.z, score.observed, score.expected
            );
        }

        // delta-method spread of the pipeline rate under binomial noise
        let rate_of = |stats: &ObservedStats| passive_rate(stats, &m, &src, c_ec).r;
        let mut var_r = 0.0f64;
        for slot in 0..11 {
            let p = slot_expected(&expected, slot);
            let n = slot_n(&sim, n_rounds, slot) as f64;
            let sigma = (p * (1.0 - p) / n).sqrt();
            if sigma == 0.0 {
                continue;
            }
            let h = sigma;
            let up = rate_of(&perturb(&expected, slot, h));
            let down = rate_of(&perturb(&expected, slot, -h));
            let d_r = (up - down) / (2.0 * h);
            var_r += (d_r * sigma).powi(2);
        }
        let sigma_r = var_r.sqrt();
        assert!(sigma_r > 0.0, "rate spread must be resolvable");

        let sampled = passive_rate(&sim.stats, &m, &src, c_ec);
        assert!(sampled.valid, "sampled rate must stay positive at {l} km");
        let dev = (sampled.r - analytic.r).abs();
        assert!(
            dev < 3.0 * sigma_r,
            "{l} km: sampled rate {} vs analytic {} is {:.2} combined sigma",
            sampled.r,
            analytic.r,
            dev / sigma_r
        );
    }
    assert_within(start.elapsed(), 60, "criterion 5");
}

#[test]
fn criterion_6_photon_number_ratio_law() {
    let start = Instant::now();
    // lossless line, no darks: every emitted photon reaches a detector, so
    // conditioning on n_A = n pins the delivered number n_B = n exactly.
    // Bob's splitter contributes (p_Z/p_X)^{n_B} and the sender's matching
    // active choice one more factor
    let p_z = 0.7;
    let m = paper_receiver(p_z, 1.0, 0.0);
    let ch = ChannelModel {
        length_km: 0.0,
        e_ch: 0.03,
        km_per_decade: 50.0,
    };
    let src = SourceModel {
        mu: 1.0,
        nu: 0.1,
        p_mu: 1.0,
        p_nu: 0.0,
        p_0: 0.0,
        p_z_alice: p_z,
    };
    let cfg = SimConfig {
        n_rounds: 2_000_000,
        seed: 6,
        resolve_photon_numbers: true,
        aggregation: false,
    };
    let sim = simulate(&cfg, &ch, &m, &src).unwrap();
    let count = |n_b: u32, class: EventClass| -> u64 {
        sim.diagnostics
            .iter()
            .filter(|e| e.n_a == n_b && e.n_b == n_b && e.class == class)
            .map(|e| e.count)
            .sum()
    };
    for n_b in 1..=2u32 {
        let z = count(n_b, EventClass::ZSift) as f64;
        let x = count(n_b, EventClass::XSift) as f64;
        assert!(
            z > 1000.0 && x > 1000.0,
            "need statistics at n_B = {n_b}: Z {z}, X {x}"
        );
        let observed = (z / x).ln();
        let want = (p_z / (1.0 - p_z)).ln() * (n_b as f64 + 1.0);
        let sigma = (1.0 / z + 1.0 / x).sqrt();
        assert!(
            (observed - want).abs() < 3.0 * sigma,
            "n_B = {n_b}: log conclusive ratio {observed} vs {want} ({:.2} sigma)",
            (observed - want).abs() / sigma
        );
    }
    assert_within(start.elapsed(), 30, "criterion 6");
}

#[test]
fn criterion_7_guard_rails() {
    // a balanced splitter with a lossy X line has no consistent
    // multi-photon contamination coefficient
    let m = paper_receiver(0.5, 0.1, 1e-7);
    match alpha(&m) {
        Err(PovmError::AlphaUndefined { denominator }) => {
            assert!(denominator <= 0.0);
        }
        other => panic!("alpha must be undefined at p_Z=0.5, r=0.1: {other:?}"),
    }

    // a phase-error argument beyond 1/2 must zero the rate, not evaluate
    // the entropy outside its domain
    let m = ReceiverModel {
        p_z: 0.9,
        d: 1e-7,
        eta_z: 0.7,
        eta_x: 0.7,
    };
    let src = SourceModel {
        mu: 0.5,
        nu: 0.05,
        p_mu: 1.0,
        p_nu: 0.0,
        p_0: 0.0,
        p_z_alice: 0.9,
    };
    let ch = ChannelModel {
        length_km: 0.0,
        e_ch: 0.03,
        km_per_decade: 50.0,
    };
    let mut stats = expected_stats(&ch, &m, &src);
    for tag in IntensityTag::ALL {
        *stats.e_x_given.get_mut(tag) = 0.45 * stats.q_z_given.get(tag);
    }
    let report = passive_rate(&stats, &m, &src, 1.1);
    assert!(!report.valid);
    assert_eq!(report.r, 0.0);
    assert_eq!(
        report.reason.as_deref(),
        Some("phase-error condition violated: entropy argument exceeds 1/2")
    );

    // the pipeline itself stays usable: decoy estimates exist even when the
    // rate does not
    assert!(estimate(&stats, &src).is_ok());
}

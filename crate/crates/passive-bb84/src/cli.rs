//! Command-line front end.
//!
//! One JSON configuration document feeds five subcommands:
//!
//! - `rate`: key-rate report from a stats CSV (passive, virtual, or active).
//! - `expected`: analytic statistics for the configured setup at a length.
//! - `simulate`: seeded Monte Carlo run.
//! - `verify-povm`: randomized cross-checks of the measurement operators.
//! - `sweep`: optimized distance tables.
//!
//! stdout carries exactly one machine-readable payload (JSON or CSV);
//! everything else goes to stderr. Exit codes: 0 success, 1 validation
//! failure (bad flags, malformed or out-of-range config/CSV content),
//! 2 verify-povm deviation above tolerance, 3 I/O failure (missing or
//! unwritable files).
//!
//! When `asymptotic_signal_weight` is set (the default), `rate` scores the
//! source as if all rounds carried the signal intensity, matching the
//! infinite-key convention used by the sweep; `expected` and `simulate`
//! always use the configured probabilities as written.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::channel::{expected_stats, validate_channel, ChannelModel};
use crate::decoy::{stats_from_csv, stats_to_csv};
use crate::keyrate::{active_rate, passive_rate, virtual_rate, C_EC_DEFAULT};
use crate::model::{
    validate_receiver, validate_source, validate_stats, ReceiverModel, SourceModel,
};
use crate::montecarlo::{simulate, SimConfig};
use crate::splitter_povm::{
    closed_form_povm, direct_cross_povm, pushforward_povm, single_photon_povms,
    single_photon_pushforward, FockOperator, Outcome, N_MAX_DEFAULT, N_MAX_LIMIT,
};
use crate::sweep::{rows_to_csv, sweep, validate_sweep_spec, SweepSpec};

/// Top-level configuration document.
#[derive(Debug, Clone, Deserialize)]
pub struct RunConfig {
    /// Receiver parameters.
    pub receiver: ReceiverModel,
    /// Source parameters.
    pub source: SourceModel,
    /// Fiber parameters.
    pub channel: ChannelModel,
    /// Error-correction inefficiency.
    #[serde(default = "default_c_ec", rename = "c_EC")]
    pub c_ec: f64,
    /// Score rates as if every round used the signal intensity.
    #[serde(default = "default_true")]
    pub asymptotic_signal_weight: bool,
    /// Sweep grids; defaults cover the reference tables.
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_c_ec() -> f64 {
    C_EC_DEFAULT
}

fn default_true() -> bool {
    true
}

/// Errors mapped to process exit codes.
#[derive(Debug)]
enum CliError {
    /// Filesystem failure: exit 3.
    Io(String),
    /// Content or range failure: exit 1.
    Invalid(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Io(_) => 3,
            CliError::Invalid(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Invalid(m) => m,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "passive-bb84",
    version,
    about = "Decoy-state BB84 key rates for a passively biased receiver"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Compute a key-rate report from observed statistics.
    Rate {
        /// JSON configuration file.
        #[arg(long)]
        config: String,
        /// Observed statistics CSV.
        #[arg(long)]
        stats: String,
        /// Score with the virtual-protocol bound instead of the passive one.
        #[arg(long = "virtual", conflicts_with = "active")]
        virtual_: bool,
        /// Treat the statistics as an actively switched receiver's.
        #[arg(long)]
        active: bool,
    },
    /// Print analytic statistics for the configured setup as CSV.
    Expected {
        /// JSON configuration file.
        #[arg(long)]
        config: String,
        /// Override the configured fiber length (km).
        #[arg(long)]
        length: Option<f64>,
    },
    /// Run the seeded Monte Carlo sampler and print its JSON result.
    Simulate {
        /// JSON configuration file.
        #[arg(long)]
        config: String,
        /// Number of rounds.
        #[arg(long)]
        rounds: u64,
        /// Master seed.
        #[arg(long)]
        seed: u64,
        /// Sample photon by photon and record (n_A, n_B, class) counts.
        #[arg(long)]
        resolve: bool,
        /// Also write the sampled statistics as CSV to this path.
        #[arg(long)]
        stats_out: Option<String>,
    },
    /// Cross-check measurement operators on random parameter draws.
    VerifyPovm {
        /// Random parameter draws per check.
        #[arg(long, default_value_t = 100)]
        trials: u32,
        /// Largest photon number to check (at most 8).
        #[arg(long, default_value_t = N_MAX_DEFAULT)]
        nmax: usize,
        /// Seed for the parameter draws.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Optimize key rates over the configured grids and print CSV.
    Sweep {
        /// JSON configuration file.
        #[arg(long)]
        config: String,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
}

fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))
}

fn write_file(path: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{path}: {e}")))
}

fn load_config(path: &str) -> Result<RunConfig, CliError> {
    let text = read_file(path)?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{path}: {e}")))?;
    let receiver =
        validate_receiver(cfg.receiver).map_err(|e| CliError::Invalid(format!("{path}: {e}")))?;
    let source =
        validate_source(cfg.source).map_err(|e| CliError::Invalid(format!("{path}: {e}")))?;
    let channel =
        validate_channel(cfg.channel).map_err(|e| CliError::Invalid(format!("{path}: {e}")))?;
    if !(cfg.c_ec >= 1.0 && cfg.c_ec.is_finite()) {
        return Err(CliError::Invalid(format!(
            "{path}: c_EC = {} outside [1, inf)",
            cfg.c_ec
        )));
    }
    let sweep = match cfg.sweep {
        Some(spec) => Some(
            validate_sweep_spec(spec).map_err(|e| CliError::Invalid(format!("{path}: {e}")))?,
        ),
        None => None,
    };
    Ok(RunConfig {
        receiver,
        source,
        channel,
        sweep,
        ..cfg
    })
}

fn run_rate(config: &str, stats: &str, virtual_: bool, active: bool) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    let text = read_file(stats)?;
    let parsed = stats_from_csv(&text).map_err(|e| CliError::Invalid(format!("{stats}: {e}")))?;
    let parsed =
        validate_stats(parsed).map_err(|e| CliError::Invalid(format!("{stats}: {e}")))?;
    let src = if cfg.asymptotic_signal_weight {
        cfg.source.asymptotic_signal()
    } else {
        cfg.source
    };
    let report = if active {
        active_rate(&parsed, &src, cfg.c_ec)
    } else if virtual_ {
        virtual_rate(&parsed, &cfg.receiver, &src, cfg.c_ec)
    } else {
        passive_rate(&parsed, &cfg.receiver, &src, cfg.c_ec)
    };
    let json = serde_json::to_string_pretty(&report)
        .expect("report serialization cannot fail");
    Ok(json + "\n")
}

fn run_expected(config: &str, length: Option<f64>) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    let mut channel = cfg.channel;
    if let Some(l) = length {
        channel.length_km = l;
        channel =
            validate_channel(channel).map_err(|e| CliError::Invalid(format!("--length: {e}")))?;
    }
    let stats = expected_stats(&channel, &cfg.receiver, &cfg.source);
    Ok(stats_to_csv(&stats))
}

fn run_simulate(
    config: &str,
    rounds: u64,
    seed: u64,
    resolve: bool,
    stats_out: Option<&str>,
) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    let sim_cfg = SimConfig {
        n_rounds: rounds,
        seed,
        resolve_photon_numbers: resolve,
        aggregation: !resolve,
    };
    let result = simulate(&sim_cfg, &cfg.channel, &cfg.receiver, &cfg.source)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    if let Some(path) = stats_out {
        write_file(path, &stats_to_csv(&result.stats))?;
    }
    let json =
        serde_json::to_string_pretty(&result).expect("result serialization cannot fail");
    Ok(json + "\n")
}

fn run_sweep(config: &str, out: Option<&str>) -> Result<String, CliError> {
    let cfg = load_config(config)?;
    let spec = match cfg.sweep {
        Some(spec) => spec,
        None => validate_sweep_spec(SweepSpec::default())
            .expect("default sweep spec is valid"),
    };
    let csv = rows_to_csv(&sweep(&spec));
    match out {
        Some(path) => {
            write_file(path, &csv)?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

/// One verify-povm check aggregated over the random draws.
struct VerifyCase {
    name: String,
    max_deviation: f64,
    tolerance: f64,
}

fn op_sum(ops: &[&FockOperator]) -> FockOperator {
    let mut acc = FockOperator::zeros(ops[0].n_b);
    for op in ops {
        acc.entries += &op.entries;
    }
    acc
}

/// Randomized operator cross-checks; returns the CSV report and whether
/// every case stayed within tolerance.
pub fn verify_povm(trials: u32, nmax: usize, seed: u64) -> Result<(String, bool), String> {
    if nmax == 0 || nmax > N_MAX_LIMIT {
        return Err(format!("nmax = {nmax} outside 1..={N_MAX_LIMIT}"));
    }
    if trials == 0 {
        return Err("trials must be >= 1".to_string());
    }
    let mut cases: Vec<VerifyCase> = Vec::new();
    let mut push = |name: String, tol: f64| {
        cases.push(VerifyCase {
            name,
            max_deviation: 0.0,
            tolerance: tol,
        });
        cases.len() - 1
    };
    let exact = 1e-12;
    let loose = 1e-10;
    let i_dilation = push("single_photon_vs_dilation".into(), exact);
    let i_complete1 = push("single_photon_completeness".into(), exact);
    let i_merge1 = push("merged_single_photon_consistency".into(), exact);
    let i_scalar: Vec<usize> = (2..=nmax)
        .map(|n| push(format!("scalar_class_vs_pushforward_n{n}"), loose))
        .collect();
    let i_direct: Vec<usize> = (1..=nmax.min(2))
        .map(|n| push(format!("completeness_direct_cross_n{n}"), loose))
        .collect();
    let i_pos: Vec<usize> = (1..=nmax)
        .map(|n| push(format!("positivity_n{n}"), loose))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let m = ReceiverModel {
            p_z: rng.random_range(0.5..0.99),
            d: rng.random_range(0.0..0.1),
            eta_z: 1.0,
            eta_x: rng.random_range(0.05..1.0),
        };
        let bump = |cases: &mut Vec<VerifyCase>, i: usize, dev: f64| {
            if dev > cases[i].max_deviation {
                cases[i].max_deviation = dev;
            }
        };

        let sp = single_photon_povms(&m);
        let dil = single_photon_pushforward(&m);
        let dev = [
            sp.g_z0.max_abs_diff(&dil.g_z0),
            sp.g_z1.max_abs_diff(&dil.g_z1),
            sp.g_x0.max_abs_diff(&dil.g_x0),
            sp.g_x1.max_abs_diff(&dil.g_x1),
            sp.g_fail.max_abs_diff(&dil.g_fail),
            sp.f_no_click.max_abs_diff(&dil.f_no_click),
            sp.f_cross.max_abs_diff(&dil.f_cross),
        ]
        .into_iter()
        .fold(0.0f64, f64::max);
        bump(&mut cases, i_dilation, dev);

        let announced = sp.announced();
        let total = op_sum(&announced.iter().map(|(_, op)| *op).collect::<Vec<_>>());
        bump(
            &mut cases,
            i_complete1,
            total.max_abs_diff(&FockOperator::identity(1)),
        );

        let merged: Vec<FockOperator> = Outcome::ALL
            .iter()
            .map(|&o| pushforward_povm(1, o, &m).expect("n_b = 1 is in range"))
            .collect();
        let z_sum = op_sum(&[&sp.g_z0, &sp.g_z1]);
        let x_sum = op_sum(&[&sp.g_x0, &sp.g_x1]);
        let dev = [
            merged[0].max_abs_diff(&z_sum),
            merged[1].max_abs_diff(&x_sum),
            merged[2].max_abs_diff(&sp.f_no_click),
            merged[3].max_abs_diff(&sp.f_cross),
        ]
        .into_iter()
        .fold(0.0f64, f64::max);
        bump(&mut cases, i_merge1, dev);

        for (k, n) in (2..=nmax).enumerate() {
            let mut dev = 0.0f64;
            for outcome in Outcome::ALL {
                let scalar = closed_form_povm(n, outcome, &m).expect("n_b >= 2");
                let op = pushforward_povm(n, outcome, &m).expect("n_b in range");
                dev = dev.max(op.max_dev_from_scalar(scalar));
            }
            bump(&mut cases, i_scalar[k], dev);
        }

        for (k, n) in (1..=nmax.min(2)).enumerate() {
            let direct = direct_cross_povm(n, &m).expect("n_b <= 2");
            let z = pushforward_povm(n, Outcome::ZKey, &m).expect("in range");
            let x = pushforward_povm(n, Outcome::XKey, &m).expect("in range");
            let nc = pushforward_povm(n, Outcome::NoClick, &m).expect("in range");
            let total = op_sum(&[&direct, &z, &x, &nc]);
            bump(
                &mut cases,
                i_direct[k],
                total.max_abs_diff(&FockOperator::identity(n)),
            );
        }

        for (k, n) in (1..=nmax).enumerate() {
            let mut worst = 0.0f64;
            for outcome in Outcome::ALL {
                let op = pushforward_povm(n, outcome, &m).expect("in range");
                worst = worst.max((-op.min_eigenvalue()).max(0.0));
            }
            bump(&mut cases, i_pos[k], worst);
        }
    }

    let mut all_pass = true;
    let mut csv = String::from("case,max_deviation,status\n");
    for case in &cases {
        let pass = case.max_deviation <= case.tolerance;
        all_pass &= pass;
        csv.push_str(&format!(
            "{},{:.3e},{}\n",
            case.name,
            case.max_deviation,
            if pass { "PASS" } else { "FAIL" }
        ));
    }
    Ok((csv, all_pass))
}

/// Execute parsed arguments; returns the stdout payload and exit code.
fn run(cli: Cli) -> Result<(String, i32), CliError> {
    match cli.cmd {
        Cmd::Rate {
            config,
            stats,
            virtual_,
            active,
        } => Ok((run_rate(&config, &stats, virtual_, active)?, 0)),
        Cmd::Expected { config, length } => Ok((run_expected(&config, length)?, 0)),
        Cmd::Simulate {
            config,
            rounds,
            seed,
            resolve,
            stats_out,
        } => Ok((
            run_simulate(&config, rounds, seed, resolve, stats_out.as_deref())?,
            0,
        )),
        Cmd::VerifyPovm {
            trials,
            nmax,
            seed,
        } => {
            let (csv, all_pass) = verify_povm(trials, nmax, seed).map_err(CliError::Invalid)?;
            Ok((csv, if all_pass { 0 } else { 2 }))
        }
        Cmd::Sweep { config, out } => Ok((run_sweep(&config, out.as_deref())?, 0)),
    }
}

/// Parse arguments and execute; returns the process exit code.
///
/// The first argument is the program name, as in `std::env::args`.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    1
                }
            };
        }
    };
    match run(cli) {
        Ok((payload, code)) => {
            print!("{payload}");
            code
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

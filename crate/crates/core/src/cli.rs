//! Command-line front end. [`run`] is what the `ia3` binary calls; it takes the
//! argument list and output streams explicitly so it can be driven in-process.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::metrics::{dof_sweep, high_snr_slope, rank_distribution, sum_rate_curve, Trial, DOF_SWEEP_CSV_HEADER};
use crate::network::{ChannelSet, NetworkConfig};
use crate::numerics::{Tolerance, DEFAULT_LEAKAGE_TOL, DEFAULT_RANK_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ia3", version, about = "Interference alignment for three-cell constant MIMO cellular networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the (M=16, N=8, K=2, d=3) example end to end and verify it.
    Demo(DemoArgs),
    /// Run one channel draw and emit its alignment report.
    Trial(TrialArgs),
    /// Histogram of precoder ranks over many draws.
    RankDist(RankDistArgs),
    /// Compare the best aligned DoF against the orthogonal baseline for a range of M.
    DofSweep(DofSweepArgs),
    /// Sum rate against SNR for one draw, with the fitted high-SNR slope.
    SumRate(SumRateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Base-station antennas.
    #[arg(long = "M")]
    pub m: usize,
    /// Mobile-station antennas.
    #[arg(long = "N")]
    pub n: usize,
    /// Users per cell.
    #[arg(long = "K")]
    pub k: usize,
    /// Streams per user.
    #[arg(long = "d")]
    pub d: usize,
}

impl ConfigArgs {
    fn config(&self) -> NetworkConfig {
        NetworkConfig {
            m: self.m,
            n: self.n,
            k: self.k,
            d: self.d,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output format; each subcommand has its own natural default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    #[arg(long, default_value_t = DEFAULT_LEAKAGE_TOL)]
    pub leakage_tol: f64,
}

impl CommonArgs {
    fn tolerance(&self) -> Result<Tolerance, Failure> {
        Tolerance::new(self.rank_tol, self.leakage_tol).map_err(|e| Failure::usage(e.to_string()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the channel draw as JSON to this file.
    #[arg(long)]
    pub dump_channels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["m", "channels"]))]
pub struct TrialArgs {
    #[arg(long = "M", requires_all = ["n", "k", "d"])]
    pub m: Option<usize>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long = "d")]
    pub d: Option<usize>,
    /// Load the channel draw from a JSON dump instead of generating one.
    #[arg(long, conflicts_with_all = ["m", "n", "k", "d"])]
    pub channels: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the channel draw as JSON to this file.
    #[arg(long)]
    pub dump_channels: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RankDistArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DofSweepArgs {
    #[arg(long = "m-min", visible_alias = "M-min", default_value_t = 5)]
    pub m_min: usize,
    #[arg(long = "m-max", visible_alias = "M-max", default_value_t = 32)]
    pub m_max: usize,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SumRateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// SNR points in dB, comma separated or repeated.
    #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub snr: Vec<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// A failed run: exit status plus the message for stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Configuration(_) => EXIT_CONFIG,
            Error::InvalidInput(_) => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// What a subcommand produced: the payload for stdout or `--out`, and an
/// optional verification failure reported after the payload is written.
struct Outcome {
    body: String,
    verdict: Result<(), Failure>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Outcome { body, verdict: Ok(()) }
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let out_path = match &cli.command {
        Command::Demo(a) => a.common.out.clone(),
        Command::Trial(a) => a.common.out.clone(),
        Command::RankDist(a) => a.common.out.clone(),
        Command::DofSweep(a) => a.out.clone(),
        Command::SumRate(a) => a.common.out.clone(),
    };
    let outcome = match execute(&cli.command) {
        Ok(o) => o,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            return f.code;
        }
    };
    let written = match out_path {
        Some(path) => fs::write(&path, &outcome.body).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => stdout.write_all(outcome.body.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        let _ = writeln!(stderr, "error: {msg}");
        return EXIT_USAGE;
    }
    match outcome.verdict {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Demo(a) => {
            let cfg = NetworkConfig::new(16, 8, 2, 3)?;
            let trial = Trial::run(&cfg, a.common.seed, &a.common.tolerance()?)?;
            trial_outcome(trial, &a.common, a.dump_channels.as_ref(), Format::Text)
        }
        Command::Trial(a) => {
            let tol = a.common.tolerance()?;
            let trial = match &a.channels {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
                    Trial::from_channels(ChannelSet::from_json(&text)?, &tol)?
                }
                None => {
                    let cfg = NetworkConfig {
                        m: a.m.unwrap_or_default(),
                        n: a.n.unwrap_or_default(),
                        k: a.k.unwrap_or_default(),
                        d: a.d.unwrap_or_default(),
                    };
                    Trial::run(&cfg, a.common.seed, &tol)?
                }
            };
            trial_outcome(trial, &a.common, a.dump_channels.as_ref(), Format::Json)
        }
        Command::RankDist(a) => {
            let tol = a.common.tolerance()?;
            if a.trials == 0 {
                return Err(Failure::usage("--trials must be at least 1"));
            }
            let hist = rank_distribution(&a.config.config(), a.trials, a.common.seed, &tol)?;
            let body = match a.common.format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&hist)?,
                Format::Csv | Format::Text => hist.to_csv(),
            };
            let verdict = match hist.failures.first() {
                None => Ok(()),
                Some((seed, msg)) => Err(Failure::numerical(format!(
                    "{} of {} trials failed; first at seed {seed}: {msg}",
                    hist.failures.len(),
                    hist.trials
                ))),
            };
            Ok(Outcome { body, verdict })
        }
        Command::DofSweep(a) => {
            if a.m_min < 2 || a.m_min > a.m_max {
                return Err(Failure::usage(format!(
                    "sweep needs 2 <= m-min <= m-max, got [{}, {}]",
                    a.m_min, a.m_max
                )));
            }
            let rows = dof_sweep(a.m_min, a.m_max)?;
            let body = match a.format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&rows)?,
                Format::Csv | Format::Text => {
                    let mut s = format!("{DOF_SWEEP_CSV_HEADER}\n");
                    for row in &rows {
                        s.push_str(&row.csv_line());
                        s.push('\n');
                    }
                    let below: Vec<String> = rows
                        .iter()
                        .filter(|r| r.ia_dof < r.orthogonal_dof)
                        .map(|r| r.m.to_string())
                        .collect();
                    s.push_str(&format!(
                        "# ia_dof<orthogonal_dof count={} M=[{}]\n",
                        below.len(),
                        below.join(",")
                    ));
                    s
                }
            };
            Ok(Outcome::ok(body))
        }
        Command::SumRate(a) => {
            let tol = a.common.tolerance()?;
            if a.snr.is_empty() {
                return Err(Failure::usage("--snr needs at least one value"));
            }
            let points = sum_rate_curve(&a.config.config(), a.common.seed, &a.snr, &tol)?;
            let slope = high_snr_slope(&points);
            let body = match a.common.format.unwrap_or(Format::Csv) {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Point {
                        snr_db: f64,
                        sum_rate_bits: f64,
                    }
                    #[derive(Serialize)]
                    struct Curve {
                        config: NetworkConfig,
                        seed: u64,
                        points: Vec<Point>,
                        slope: Option<f64>,
                    }
                    to_json(&Curve {
                        config: a.config.config(),
                        seed: a.common.seed,
                        points: points
                            .iter()
                            .map(|&(snr_db, sum_rate_bits)| Point { snr_db, sum_rate_bits })
                            .collect(),
                        slope,
                    })?
                }
                Format::Csv | Format::Text => {
                    let mut s = String::from("snr_db,sum_rate_bits\n");
                    for (snr, rate) in &points {
                        s.push_str(&format!("{snr},{rate}\n"));
                    }
                    if let Some(slope) = slope {
                        s.push_str(&format!("# slope={slope}\n"));
                    }
                    s
                }
            };
            Ok(Outcome::ok(body))
        }
    }
}

fn trial_outcome(
    trial: Trial,
    common: &CommonArgs,
    dump: Option<&PathBuf>,
    default_format: Format,
) -> Result<Outcome, Failure> {
    if let Some(path) = dump {
        fs::write(path, trial.channels.to_json()?)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let tol = common.tolerance()?;
    let report = &trial.report;
    let body = match common.format.unwrap_or(default_format) {
        Format::Json => report.to_json()? + "\n",
        Format::Csv => return Err(Failure::usage("alignment reports are available as json or text")),
        Format::Text => {
            let dims: Vec<String> = report.per_bs_interference_dim.iter().map(|d| d.to_string()).collect();
            let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
            format!(
                "eta={}, dims=[{}], decodable={}\nconfig={} seed={} method={:?}\nmax_ici_leakage={:e}, max_iui_leakage={:e}\n",
                report.eta_achieved,
                dims.join(","),
                report.decodable,
                report.config,
                report.seed,
                report.method,
                worst(&report.per_bs_ici_leakage),
                worst(&report.per_user_iui_leakage),
            )
        }
    };
    let failed = report.failed_checks(&tol);
    let verdict = if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical(format!("verification failed: {}", failed.join("; "))))
    };
    Ok(Outcome { body, verdict })
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::from(Error::Serialization(e.to_string())))
}

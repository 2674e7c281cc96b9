//! Command-line front end: bound sweeps, protocol sessions and Monte Carlo
//! attack experiments.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use blindpol_core::adversary::pns_monte_carlo;
use blindpol_core::session::to_hex;
use blindpol_core::{
    run_session, Attack, ChannelConfig, InfoBound, Mode, Pass, PnsStrategy, SessionConfig, Source,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit codes shared by every subcommand.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const IO: u8 = 3;
    pub const HASH_MISMATCH: u8 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] blindpol_core::Error),
}

impl CliError {
    fn is_broken_pipe(&self) -> bool {
        let io = match self {
            CliError::Io { source, .. } => Some(source),
            CliError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e),
                _ => None,
            },
            _ => None,
        };
        io.is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io { .. } | CliError::Csv(_) => exit::IO,
            CliError::Core(blindpol_core::Error::InvalidConfig(_)) => exit::USAGE,
            CliError::Core(blindpol_core::Error::Io(_))
            | CliError::Core(blindpol_core::Error::Json(_)) => exit::IO,
            CliError::Core(_) => exit::FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "blindpol",
    version,
    about = "Three-pass blind-polarization QKD simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the analytic information bounds over an (eta2, alpha) grid.
    Bound(BoundArgs),
    /// Run a key-agreement session and report the outcome.
    Session(SessionArgs),
    /// Compare Monte Carlo PNS scores with the analytic bound.
    AttackMc(AttackMcArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundAttack {
    Pns1,
    Pns2,
    All,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub attack: BoundAttack,
    /// Alpha grid as start:stop:step.
    #[arg(long, default_value = "0:6:0.05")]
    pub grid: String,
    /// Comma-separated intensity efficiencies.
    #[arg(long, value_delimiter = ',', default_values_t = [0.4, 0.5, 2.0 / 3.0, 0.9])]
    pub eta2: Vec<f64>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Basic,
    TwoPulse,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AttackArg {
    None,
    InterceptResend,
    Pns1,
    Pns2,
    Impersonation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PassArg {
    Prepare,
    Return,
    Deliver,
}

impl From<PassArg> for Pass {
    fn from(p: PassArg) -> Self {
        match p {
            PassArg::Prepare => Pass::Prepare,
            PassArg::Return => Pass::Return,
            PassArg::Deliver => Pass::Deliver,
        }
    }
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    #[arg(long, default_value_t = 128)]
    pub bits: usize,
    #[arg(long, value_enum, default_value = "basic")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1.0)]
    pub eta2: f64,
    /// Coherent-pulse amplitude; a single-photon source when absent.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    pub attack: AttackArg,
    /// Pass targeted by intercept-resend.
    #[arg(long, value_enum, default_value = "deliver")]
    pub pass: PassArg,
    /// Give the impersonating pair Bob's shuffling bit (diagnostic).
    #[arg(long)]
    pub knows_s: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON-lines transcript destination.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PnsArg {
    Pns1,
    Pns2,
}

#[derive(Debug, Args)]
pub struct AttackMcArgs {
    #[arg(long, value_enum)]
    pub attack: PnsArg,
    #[arg(long, default_value_t = 0.5)]
    pub eta2: f64,
    #[arg(long, default_value_t = 2.83)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    pub rounds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
        }
    };
    let stdout = io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) if e.is_broken_pipe() => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<u8, CliError> {
    match cli.command {
        Command::Bound(a) => cmd_bound(&a, stdout),
        Command::Session(a) => cmd_session(&a, stdout),
        Command::AttackMc(a) => cmd_attack_mc(&a, stdout),
    }
}

/// Renders a number with ten significant digits in plain decimal notation.
pub fn sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (9 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit, e.g. 9.9999999999
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
    let leading_zeros = s
        .trim_start_matches('-')
        .chars()
        .take_while(|&c| c == '0' || c == '.')
        .filter(|&c| c == '0')
        .count();
    if digits - leading_zeros > 10 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// Parses `start:stop:step` into the list of grid points.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("grid must be start:stop:step, got {spec:?}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(bad());
    }
    if step <= 0.0 {
        return Err(CliError::Usage(format!(
            "grid step must be positive, got {step}"
        )));
    }
    if stop < start {
        return Err(CliError::Usage(format!(
            "grid stop {stop} is below start {start}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
}

fn io_err(path: &str) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_string(),
        source,
    }
}

fn write_bound_rows<W: Write>(w: W, rows: &[(PnsStrategy, InfoBound)]) -> Result<(), CliError> {
    let mut csv = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    csv.write_record(["attack", "eta2", "alpha", "i_a2", "i_a3", "i_a4", "i_e"])?;
    for (strategy, b) in rows {
        csv.write_record([
            strategy.label().to_string(),
            sig10(b.eta2),
            sig10(b.alpha),
            sig10(b.i_a2),
            sig10(b.i_a3),
            sig10(b.i_a4),
            sig10(b.i_e),
        ])?;
    }
    csv.flush().map_err(io_err("csv output"))?;
    Ok(())
}

pub fn cmd_bound(args: &BoundArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let alphas = parse_grid(&args.grid)?;
    if alphas.iter().any(|&a| a < 0.0) {
        return Err(CliError::Usage("alpha grid must be non-negative".into()));
    }
    if args.eta2.is_empty() {
        return Err(CliError::Usage(
            "at least one eta2 value is required".into(),
        ));
    }
    let mut etas = args.eta2.clone();
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    let strategies: &[PnsStrategy] = match args.attack {
        BoundAttack::Pns1 => &[PnsStrategy::BeamSplitter],
        BoundAttack::Pns2 => &[PnsStrategy::EqualShare],
        BoundAttack::All => &[PnsStrategy::BeamSplitter, PnsStrategy::EqualShare],
    };

    let mut rows = Vec::with_capacity(strategies.len() * etas.len() * alphas.len());
    for &strategy in strategies {
        for &eta2 in &etas {
            for &alpha in &alphas {
                rows.push((strategy, strategy.bound(eta2, alpha)?));
            }
        }
    }

    match &args.out {
        Some(path) => {
            write_bound_rows(create(path)?, &rows)?;
            writeln!(stdout, "wrote {} rows to {}", rows.len(), path.display())
                .map_err(io_err("stdout"))?;
        }
        None => write_bound_rows(stdout, &rows)?,
    }
    Ok(exit::OK)
}

pub fn session_config(args: &SessionArgs) -> Result<SessionConfig, CliError> {
    let mode = match args.mode {
        ModeArg::Basic => Mode::Basic,
        ModeArg::TwoPulse => Mode::TwoPulse,
    };
    let source = match args.alpha {
        Some(alpha) => Source::Coherent { alpha },
        None => Source::SinglePhoton,
    };
    let attack = match args.attack {
        AttackArg::None => Attack::None,
        AttackArg::InterceptResend => Attack::InterceptResend {
            pass: args.pass.into(),
        },
        AttackArg::Pns1 => Attack::PnsAttack1,
        AttackArg::Pns2 => Attack::PnsAttack2,
        AttackArg::Impersonation => Attack::Impersonation {
            knows_s: args.knows_s,
        },
    };
    let channel = ChannelConfig::from_eta2(args.eta2, attack, args.seed)?;
    Ok(SessionConfig::new(args.bits, mode, source, channel))
}

pub fn cmd_session(args: &SessionArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let config = session_config(args)?;
    let transcript = run_session(&config)?;
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        transcript.write_jsonl(&mut w)?;
        w.flush().map_err(io_err(&path.display().to_string()))?;
    }

    let mode = match config.mode {
        Mode::Basic => "basic",
        Mode::TwoPulse => "two-pulse",
    };
    let verdict = if transcript.verified {
        "verified"
    } else {
        "MISMATCH"
    };
    let summary = format!(
        "mode: {mode}\nattack: {}\nseed: {}\nkey length: {}\nrounds: {}\ndiscarded: {}\nqber: {:.6}\nhash a: {}\nhash b: {}\nhash check: {verdict}\n",
        config.channel.attack.label(),
        config.channel.seed,
        transcript.alice_key.len(),
        transcript.rounds.len(),
        transcript.discard_count,
        transcript.qber(),
        to_hex(&transcript.hash_a),
        to_hex(&transcript.hash_b),
    );
    stdout
        .write_all(summary.as_bytes())
        .map_err(io_err("stdout"))?;
    Ok(if transcript.verified {
        exit::OK
    } else {
        exit::HASH_MISMATCH
    })
}

pub fn cmd_attack_mc(args: &AttackMcArgs, stdout: &mut dyn Write) -> Result<u8, CliError> {
    if args.rounds == 0 {
        return Err(CliError::Usage("rounds must be at least 1".into()));
    }
    let strategy = match args.attack {
        PnsArg::Pns1 => PnsStrategy::BeamSplitter,
        PnsArg::Pns2 => PnsStrategy::EqualShare,
    };
    let est = pns_monte_carlo(strategy, args.eta2, args.alpha, args.rounds, args.seed)?;

    let write = |w: &mut dyn Write| -> Result<(), CliError> {
        let mut csv = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        csv.write_record([
            "attack",
            "eta2",
            "alpha",
            "rounds",
            "seed",
            "pass1_mean",
            "pass2_mean",
            "pass3_mean",
            "mean_round_aggregate",
            "empirical",
            "analytic",
            "gap",
        ])?;
        csv.write_record([
            strategy.label().to_string(),
            sig10(args.eta2),
            sig10(args.alpha),
            args.rounds.to_string(),
            args.seed.to_string(),
            sig10(est.pass_means[0]),
            sig10(est.pass_means[1]),
            sig10(est.pass_means[2]),
            sig10(est.mean_round_aggregate),
            sig10(est.empirical),
            sig10(est.analytic.i_e),
            sig10(est.gap),
        ])?;
        csv.flush().map_err(io_err("csv output"))?;
        Ok(())
    };

    match &args.out {
        Some(path) => {
            let mut f = create(path)?;
            write(&mut f)?;
            writeln!(
                stdout,
                "{}: empirical {} analytic {} gap {}",
                strategy.label(),
                sig10(est.empirical),
                sig10(est.analytic.i_e),
                sig10(est.gap)
            )
            .map_err(io_err("stdout"))?;
        }
        None => write(stdout)?,
    }
    Ok(exit::OK)
}

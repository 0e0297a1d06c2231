//! Command-line front end for the `lpqfa` experiments.
//!
//! [`parse_args`] turns an argument vector into a validated [`RunConfig`];
//! [`execute`] runs it and returns the serialized report together with the
//! process exit code (0 success, 1 error, 2 hypothesis counterexample found).

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use thiserror::Error;

use lpqfa::experiments::{
    self, GeneratorChoice, LengthPolicy, ThresholdLength, TrialOptions,
};
use lpqfa::report::{Metadata, Precision, Report};
use lpqfa::rng::DEFAULT_MASTER_SEED;
use lpqfa::sequences::{cyclic_sequence, AikpsConfig, LogBase, ParameterSequence, ZeroPolicy};
use lpqfa::simulator::LetterPower;
use lpqfa::{PrimeModulus, QfaError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_COUNTEREXAMPLE: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Qfa(#[from] QfaError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Parser)]
#[command(name = "lpqfa", version, about = "Quantum finite automata for multiples of a prime: constructions, scans and table reproductions")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrecisionArg {
    Short,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LogBaseArg {
    Natural,
    Two,
    Ten,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = DEFAULT_MASTER_SEED)]
    seed: u64,
    /// Worker threads (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Six significant digits (short) or round-trip precision (full).
    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::Short)]
    precision: PrecisionArg,
    /// Draw random k from 1..p-1 instead of 0..p-1.
    #[arg(long, global = true)]
    exclude_zero_k: bool,
    /// Use the real-valued d = 2 ln(2p)/eps in the sqrt(eps) d threshold.
    #[arg(long, global = true)]
    unrounded_threshold: bool,
    /// Simulate a^j with the directly built letter power instead of repeated multiplication.
    #[arg(long, global = true)]
    fast_power_oracle: bool,
    /// Record wall time in the report metadata (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Worst-case error of the cyclic sequence for one generator.
    Epsilon {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        g: u64,
    },
    /// Closed form against explicit unitary simulation.
    Simulate {
        #[arg(long)]
        p: u64,
        /// Explicit parameters k_1,...,k_d.
        #[arg(long, value_delimiter = ',', conflicts_with = "g")]
        ks: Option<Vec<u64>>,
        /// Generator of a cyclic sequence (needs --d or --eps).
        #[arg(long)]
        g: Option<u64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        /// Word lengths to run.
        #[arg(long, value_delimiter = ',', required = true)]
        j: Vec<u64>,
    },
    /// Random and cyclic worst-case errors side by side.
    Table1 {
        #[arg(long)]
        eps: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        p_list: Vec<u64>,
        /// One generator per prime; defaults to the smallest primitive root.
        #[arg(long, value_delimiter = ',')]
        g_list: Option<Vec<u64>>,
        #[arg(long, default_value_t = 5000)]
        trials: u64,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Worst-case error for several generators of one prime.
    Table2 {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        g_list: Vec<u64>,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Exhaustive search for the best generator.
    Mingen {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<u64>,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Check the cyclic-sequence bound over a range of primes.
    Hypothesis {
        #[arg(long, default_value_t = 2)]
        p_min: u64,
        #[arg(long)]
        p_max: u64,
        /// Every length d < p.
        #[arg(long, conflicts_with = "eps")]
        all_d: bool,
        /// The single length required for this epsilon.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Fraction of random sequences meeting the bound.
    RandomRate {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 5000)]
        trials: u64,
        #[arg(long)]
        d: Option<usize>,
    },
    /// Cyclic against random sequences over a grid of instances.
    Compare {
        #[arg(long, value_delimiter = ',', required = true)]
        p_list: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true)]
        eps_list: Vec<f64>,
        /// Number of generators sampled per prime.
        #[arg(long, conflicts_with_all = ["g_list", "all_g"])]
        g_samples: Option<usize>,
        #[arg(long, value_delimiter = ',', conflicts_with = "all_g")]
        g_list: Option<Vec<u64>>,
        #[arg(long)]
        all_g: bool,
        #[arg(long, default_value_t = 200)]
        trials: u64,
    },
    /// Empirical tail of a random cosine sum against the martingale bound.
    Azuma {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        j: u64,
    },
    /// Explicit construction from prime inverses, with its exponential-sum bound.
    Aikps {
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<u64>,
        #[arg(long, default_value_t = 1.0)]
        eps_a: f64,
        #[arg(long, value_enum, default_value_t = LogBaseArg::Natural)]
        log_base: LogBaseArg,
    },
}

/// A validated command.
#[derive(Debug, Clone)]
pub enum Command {
    Epsilon { p: PrimeModulus, eps: f64, g: u64 },
    Simulate { seq: ParameterSequence, lengths: Vec<u64> },
    Table1 { eps: f64, rows: Vec<(PrimeModulus, u64)>, trials: u64 },
    Table2 { p: PrimeModulus, eps: f64, generators: Vec<u64> },
    Mingen { primes: Vec<PrimeModulus>, eps: f64 },
    Hypothesis { p_min: u64, p_max: u64, policy: LengthPolicy },
    RandomRate { p: PrimeModulus, eps: f64, trials: u64 },
    Compare { primes: Vec<PrimeModulus>, eps: Vec<f64>, choice: GeneratorChoice, trials: u64 },
    Azuma { p: PrimeModulus, d: usize, lambdas: Vec<f64>, trials: u64, j: u64 },
    Aikps { primes: Vec<PrimeModulus>, config: AikpsConfig },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Epsilon { .. } => "epsilon",
            Command::Simulate { .. } => "simulate",
            Command::Table1 { .. } => "table1",
            Command::Table2 { .. } => "table2",
            Command::Mingen { .. } => "mingen",
            Command::Hypothesis { .. } => "hypothesis",
            Command::RandomRate { .. } => "random-rate",
            Command::Compare { .. } => "compare",
            Command::Azuma { .. } => "azuma",
            Command::Aikps { .. } => "aikps",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub master_seed: u64,
    pub threads: usize,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub precision: Precision,
    pub options: TrialOptions,
    pub letter_power: LetterPower,
    pub timing: bool,
    /// The arguments as given, for report provenance.
    pub params: serde_json::Map<String, Value>,
    pub warnings: Vec<String>,
}

/// Outcome of [`parse_args`] when clap handled the request itself (help, version).
#[derive(Debug)]
pub enum Parsed {
    Run(Box<RunConfig>),
    Info(String),
}

fn prime(p: u64) -> Result<PrimeModulus, CliError> {
    PrimeModulus::new(p).map_err(CliError::from)
}

fn check_eps(eps: f64) -> Result<f64, CliError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(eps)
    } else {
        Err(QfaError::EpsilonOutOfRange(eps).into())
    }
}

fn generator(g: u64, p: &PrimeModulus) -> Result<u64, CliError> {
    if p.is_primitive_root(g) {
        Ok(g)
    } else {
        Err(QfaError::NotPrimitiveRoot { g, p: p.get() }.into())
    }
}

fn primes(list: &[u64]) -> Result<Vec<PrimeModulus>, CliError> {
    list.iter().map(|&p| prime(p)).collect()
}

pub fn parse_args<I, T>(argv: I) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Parsed::Info(e.to_string())),
                _ => Err(CliError::Usage(e.to_string())),
            };
        }
    };
    validate(cli).map(|c| Parsed::Run(Box::new(c)))
}

fn validate(cli: Cli) -> Result<RunConfig, CliError> {
    let c = cli.common;
    let mut params = serde_json::Map::new();
    let mut warnings = Vec::new();
    let mut d_override = None;
    let mut put = |k: &str, v: Value| {
        params.insert(k.to_owned(), v);
    };

    let mut length = |eps: Option<f64>, d: Option<usize>, warnings: &mut Vec<String>| -> Result<(), CliError> {
        if let Some(d) = d {
            if d == 0 {
                return Err(CliError::Usage("--d must be at least 1".into()));
            }
            if eps.is_some() {
                warnings.push(format!("both --eps and --d given; using d = {d}"));
            }
            d_override = Some(d);
        }
        Ok(())
    };

    let command = match cli.command {
        CliCommand::Epsilon { p, eps, d, g } => {
            let p = prime(p)?;
            let eps = match (eps, d) {
                (Some(e), _) => check_eps(e)?,
                (None, Some(_)) => 0.5,
                (None, None) => return Err(CliError::Usage("epsilon needs --eps or --d".into())),
            };
            length(Some(eps), d, &mut warnings)?;
            put("p", p.get().into());
            put("eps", eps.into());
            put("g", g.into());
            Command::Epsilon { g: generator(g, &p)?, p, eps }
        }
        CliCommand::Simulate { p, ks, g, d, eps, j } => {
            let pm = prime(p)?;
            put("p", p.into());
            put("j", j.clone().into());
            let seq = match (ks, g) {
                (Some(ks), _) => {
                    put("ks", ks.clone().into());
                    ParameterSequence::explicit(&pm, ks)?
                }
                (None, Some(g)) => {
                    let d = match (d, eps) {
                        (Some(d), e) => {
                            if e.is_some() {
                                warnings.push(format!("both --eps and --d given; using d = {d}"));
                            }
                            d
                        }
                        (None, Some(e)) => lpqfa::required_length(&pm, check_eps(e)?)?,
                        (None, None) => return Err(CliError::Usage("simulate --g needs --d or --eps".into())),
                    };
                    put("g", g.into());
                    put("d", d.into());
                    cyclic_sequence(generator(g, &pm)?, &pm, d)?
                }
                (None, None) => return Err(CliError::Usage("simulate needs --ks or --g".into())),
            };
            Command::Simulate { seq, lengths: j }
        }
        CliCommand::Table1 { eps, p_list, g_list, trials, d } => {
            let eps = check_eps(eps)?;
            length(Some(eps), d, &mut warnings)?;
            let ps = primes(&p_list)?;
            let gs = match g_list {
                Some(gs) if gs.len() != ps.len() => {
                    return Err(CliError::Usage("--g-list needs one generator per prime".into()))
                }
                Some(gs) => gs,
                None => ps.iter().map(lpqfa::numtheory::smallest_primitive_root).collect(),
            };
            let rows = ps
                .into_iter()
                .zip(gs)
                .map(|(p, g)| generator(g, &p).map(|g| (p, g)))
                .collect::<Result<Vec<_>, _>>()?;
            put("eps", eps.into());
            put("p_list", p_list.into());
            put("g_list", rows.iter().map(|r| r.1).collect::<Vec<_>>().into());
            put("trials", trials.into());
            Command::Table1 { eps, rows, trials }
        }
        CliCommand::Table2 { p, eps, g_list, d } => {
            let pm = prime(p)?;
            let eps = check_eps(eps)?;
            length(Some(eps), d, &mut warnings)?;
            let generators = g_list.iter().map(|&g| generator(g, &pm)).collect::<Result<Vec<_>, _>>()?;
            put("p", p.into());
            put("eps", eps.into());
            put("g_list", g_list.into());
            Command::Table2 { p: pm, eps, generators }
        }
        CliCommand::Mingen { p, eps, d } => {
            let eps = check_eps(eps)?;
            length(Some(eps), d, &mut warnings)?;
            put("p", p.clone().into());
            put("eps", eps.into());
            Command::Mingen { primes: primes(&p)?, eps }
        }
        CliCommand::Hypothesis { p_min, p_max, all_d, eps } => {
            if p_min > p_max {
                return Err(CliError::Usage("--p-min exceeds --p-max".into()));
            }
            let policy = match (all_d, eps) {
                (true, _) => LengthPolicy::AllBelowP,
                (false, Some(e)) => LengthPolicy::FromEps(check_eps(e)?),
                (false, None) => return Err(CliError::Usage("hypothesis needs --all-d or --eps".into())),
            };
            put("p_min", p_min.into());
            put("p_max", p_max.into());
            put("all_d", all_d.into());
            put("eps", eps.map_or(Value::Null, Value::from));
            Command::Hypothesis { p_min, p_max, policy }
        }
        CliCommand::RandomRate { p, eps, trials, d } => {
            let eps = check_eps(eps)?;
            length(Some(eps), d, &mut warnings)?;
            put("p", p.into());
            put("eps", eps.into());
            put("trials", trials.into());
            Command::RandomRate { p: prime(p)?, eps, trials }
        }
        CliCommand::Compare { p_list, eps_list, g_samples, g_list, all_g, trials } => {
            let eps = eps_list.iter().map(|&e| check_eps(e)).collect::<Result<Vec<_>, _>>()?;
            let choice = match (g_samples, g_list, all_g) {
                (_, _, true) => GeneratorChoice::All,
                (_, Some(list), _) => GeneratorChoice::List(list),
                (Some(n), _, _) => GeneratorChoice::Sample(n),
                _ => GeneratorChoice::Sample(10),
            };
            put("p_list", p_list.clone().into());
            put("eps_list", eps_list.into());
            put(
                "generators",
                match &choice {
                    GeneratorChoice::All => "all".into(),
                    GeneratorChoice::Sample(n) => format!("sample:{n}").into(),
                    GeneratorChoice::List(l) => l.clone().into(),
                },
            );
            put("trials", trials.into());
            Command::Compare { primes: primes(&p_list)?, eps, choice, trials }
        }
        CliCommand::Azuma { p, d, eps, lambdas, trials, j } => {
            let pm = prime(p)?;
            let d = match (d, eps) {
                (Some(d), e) => {
                    if e.is_some() {
                        warnings.push(format!("both --eps and --d given; using d = {d}"));
                    }
                    d
                }
                (None, Some(e)) => lpqfa::required_length(&pm, check_eps(e)?)?,
                (None, None) => return Err(CliError::Usage("azuma needs --d or --eps".into())),
            };
            if d == 0 {
                return Err(CliError::Usage("--d must be at least 1".into()));
            }
            put("p", p.into());
            put("d", d.into());
            put("lambdas", lambdas.clone().into());
            put("trials", trials.into());
            put("j", j.into());
            Command::Azuma { p: pm, d, lambdas, trials, j }
        }
        CliCommand::Aikps { p, eps_a, log_base } => {
            let log_base = match log_base {
                LogBaseArg::Natural => LogBase::Natural,
                LogBaseArg::Two => LogBase::Two,
                LogBaseArg::Ten => LogBase::Ten,
            };
            put("p", p.clone().into());
            put("eps_a", eps_a.into());
            put("log_base", serde_json::to_value(log_base).expect("enum serializes"));
            Command::Aikps { primes: primes(&p)?, config: AikpsConfig { eps_a, log_base } }
        }
    };

    let options = TrialOptions {
        zero_policy: if c.exclude_zero_k { ZeroPolicy::Exclude } else { ZeroPolicy::Include },
        d_override,
        threshold: if c.unrounded_threshold { ThresholdLength::Unrounded } else { ThresholdLength::Rounded },
    };
    params.insert("fast_power_oracle".into(), c.fast_power_oracle.into());
    if !warnings.is_empty() {
        params.insert("warnings".into(), warnings.clone().into());
    }
    Ok(RunConfig {
        command,
        master_seed: c.seed,
        threads: c.threads,
        format: c.format,
        output: c.output,
        precision: match c.precision {
            PrecisionArg::Short => Precision::Short,
            PrecisionArg::Full => Precision::Full,
        },
        options,
        letter_power: if c.fast_power_oracle { LetterPower::Direct } else { LetterPower::Iterated },
        timing: c.timing,
        params,
        warnings,
    })
}

/// Result of running a command.
#[derive(Debug, Clone)]
pub struct Execution {
    pub exit_code: u8,
    pub report: Report,
    pub rendered: String,
}

/// Runs the command on a pool of `config.threads` workers and renders the report.
pub fn execute(config: &RunConfig) -> Result<Execution, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if config.threads > 0 {
        builder = builder.num_threads(config.threads);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let start = Instant::now();
    let (mut report, exit_code) = pool.install(|| build_report(config))?;
    if config.timing {
        report.metadata.elapsed_ms = Some(start.elapsed().as_millis() as u64);
    }
    let rendered = match config.format {
        Format::Csv => report.to_csv_string(config.precision),
        Format::Json => report.to_json_string(config.precision),
    };
    Ok(Execution { exit_code, report, rendered })
}

fn build_report(config: &RunConfig) -> Result<(Report, u8), CliError> {
    let opts = &config.options;
    let mut meta = Metadata::new(config.command.name(), Some(config.master_seed));
    meta.params = config.params.clone();
    let meta = experiments::annotate(meta, opts);
    let report = match &config.command {
        Command::Epsilon { p, eps, g } => {
            let row = experiments::epsilon_row(p, *eps, *g, opts)?;
            experiments::epsilon_report(&[row], meta)
        }
        Command::Simulate { seq, lengths } => {
            let rows = experiments::simulate(seq, lengths, config.letter_power)?;
            experiments::simulate_report(&rows, meta)
        }
        Command::Table1 { eps, rows, trials } => {
            let out = rows
                .iter()
                .map(|(p, g)| experiments::table1_row(p, *eps, *g, *trials, config.master_seed, opts))
                .collect::<Result<Vec<_>, _>>()?;
            experiments::table1_report(&out, meta)
        }
        Command::Table2 { p, eps, generators } => {
            let rows = experiments::table2_scan(p, *eps, generators, opts)?;
            experiments::table2_report(&rows, meta)
        }
        Command::Mingen { primes, eps } => {
            let rows = primes
                .iter()
                .map(|p| experiments::minimal_generator(p, *eps, opts))
                .collect::<Result<Vec<_>, _>>()?;
            let mut report = experiments::mingen_report(&rows, meta);
            let ties: serde_json::Map<String, Value> =
                rows.iter().map(|r| (r.p.to_string(), Value::from(r.tied.clone()))).collect();
            report.summary("tied_generators", Value::Object(ties));
            report
        }
        Command::Hypothesis { p_min, p_max, policy } => {
            let outcome = experiments::hypothesis_scan(*p_min, *p_max, *policy)?;
            let report = experiments::hypothesis_report(&outcome, meta);
            let code = if outcome.counterexamples.is_empty() { EXIT_OK } else { EXIT_COUNTEREXAMPLE };
            return Ok((report, code));
        }
        Command::RandomRate { p, eps, trials } => {
            let row = experiments::random_success_rate(p, *eps, *trials, config.master_seed, opts)?;
            experiments::success_rate_report(&[row], meta)
        }
        Command::Compare { primes, eps, choice, trials } => {
            let cmp = experiments::random_vs_cyclic(primes, eps, choice, *trials, config.master_seed, opts)?;
            experiments::comparison_report(&cmp, meta)
        }
        Command::Azuma { p, d, lambdas, trials, j } => {
            let check =
                experiments::azuma_tail_check(p, *d, lambdas, *trials, config.master_seed, *j, opts.zero_policy)?;
            experiments::tail_report(&check, meta)
        }
        Command::Aikps { primes, config: aikps } => {
            let rows = primes
                .iter()
                .map(|p| experiments::aikps_row(p, *aikps))
                .collect::<Result<Vec<_>, _>>()?;
            experiments::aikps_report(&rows, meta)
        }
    };
    Ok((report, EXIT_OK))
}

/// Writes the rendered report, plus a metadata sidecar for CSV files.
pub fn write_output(config: &RunConfig, exec: &Execution) -> Result<(), CliError> {
    let Some(path) = &config.output else {
        print!("{}", exec.rendered);
        return Ok(());
    };
    write_file(path, &exec.rendered)?;
    if config.format == Format::Csv {
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".meta.json");
        let sidecar = PathBuf::from(sidecar);
        write_file(&sidecar, &exec.report.metadata_json_string())?;
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

/// Full program: parse, run, write. Returns the exit code.
pub fn run_main<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match parse_args(argv) {
        Ok(Parsed::Run(config)) => config,
        Ok(Parsed::Info(text)) => {
            print!("{text}");
            return EXIT_OK;
        }
        Err(CliError::Usage(msg)) if msg.starts_with("error:") => {
            eprint!("{msg}");
            return EXIT_ERROR;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    for w in &config.warnings {
        eprintln!("warning: {w}");
    }
    match execute(&config).and_then(|exec| write_output(&config, &exec).map(|_| exec.exit_code)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

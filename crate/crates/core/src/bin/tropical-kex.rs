use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use tropical_kex::attack::{self, AttackResult};
use tropical_kex::harness::{self, Instance, InstanceConfig};
use tropical_kex::protocol_one::run_exchange;
use tropical_kex::protocol_two::{self, AssocWitness};
use tropical_kex::{BigInt, Error, Matrix};

const EXIT_FAILURE: u8 = 1;
const EXIT_BAD_INPUT: u8 = 2;
const EXIT_ATTACK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "tropical-kex", version, about = "Min-plus key exchanges and the exponent-recovery attack")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a random instance (M, H, a, b) as JSON.
    Gen {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the first exchange honestly and print the transcript.
    Exchange {
        /// Instance file as written by `gen`; otherwise one is generated.
        #[arg(long)]
        instance: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover the private exponent (and the key, given M_b) from public matrices.
    Attack {
        #[arg(long)]
        m: PathBuf,
        #[arg(long)]
        h: PathBuf,
        #[arg(long = "m-a")]
        m_a: PathBuf,
        #[arg(long = "m-b")]
        m_b: Option<PathBuf>,
        #[arg(long, default_value_t = attack::DEFAULT_MAX_STEPS)]
        max_steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attack many generated instances and aggregate statistics.
    Bench {
        #[command(flatten)]
        config: ConfigArgs,
        /// Worker threads; trials are independent.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Directory receiving summary.json, trials.csv and timings.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Show that the second pair operation is not associative.
    CheckAssoc {
        /// Reproduce the fixed (A, B) counterexample.
        #[arg(long)]
        paper: bool,
        /// Also sample random triples for fresh witnesses.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = -3, allow_negative_numbers = true)]
        entry_min: i64,
        #[arg(long, default_value_t = 3, allow_negative_numbers = true)]
        entry_max: i64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

/// Instance parameters; each flag overrides the config file, which
/// overrides the built-in defaults.
#[derive(Args, Default)]
struct ConfigArgs {
    /// JSON file with any subset of the configuration fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    entry_min: Option<i64>,
    #[arg(long, allow_negative_numbers = true)]
    entry_max: Option<i64>,
    #[arg(long)]
    exp_min: Option<u64>,
    #[arg(long)]
    exp_max: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<InstanceConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => read_json(path)?,
            None => InstanceConfig::default(),
        };
        macro_rules! overlay {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        overlay!(order, entry_min, entry_max, exp_min, exp_max, seed, trials, max_steps);
        cfg.validate().map_err(|e| CliError::BadInput(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug)]
enum CliError {
    BadInput(String),
    AttackFailed(String),
    Other(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::AttackFailed { .. } => CliError::AttackFailed(e.to_string()),
            Error::DimensionMismatch { .. }
            | Error::NotSquare { .. }
            | Error::InfiniteEntry { .. }
            | Error::ZeroExponent
            | Error::InvalidConfig(_) => CliError::BadInput(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::BadInput(format!("{}: {e}", path.display())))
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>, file_name: &str) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(file_name), format!("{text}\n"))?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct AttackReport {
    attack: AttackResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    key: Option<Matrix>,
}

#[derive(Serialize)]
struct PaperReport {
    pair: protocol_two::PairTwo<BigInt>,
    square: protocol_two::PairTwo<BigInt>,
    left_times_square: protocol_two::PairTwo<BigInt>,
    square_times_left: protocol_two::PairTwo<BigInt>,
    associative: bool,
}

#[derive(Serialize)]
struct AssocReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    paper: Option<PaperReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampled: Option<SampleReport>,
}

#[derive(Serialize)]
struct SampleReport {
    samples_drawn: usize,
    witness: Option<AssocWitness<BigInt>>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen { config, trial, out } => {
            let cfg = config.resolve()?;
            let inst = harness::gen_instance::<BigInt>(&cfg, trial);
            emit_json(&inst, out.as_deref(), "instance.json")
        }
        Command::Exchange {
            instance,
            config,
            trial,
            out,
        } => {
            let inst: Instance<BigInt> = match instance {
                Some(path) => read_json(&path)?,
                None => harness::gen_instance(&config.resolve()?, trial),
            };
            let transcript = run_exchange(&inst.m, &inst.h, &inst.a, &inst.b)?;
            emit_json(&transcript, out.as_deref(), "transcript.json")
        }
        Command::Attack {
            m,
            h,
            m_a,
            m_b,
            max_steps,
            out,
        } => {
            let m: Matrix = read_json(&m)?;
            let h: Matrix = read_json(&h)?;
            let m_a: Matrix = read_json(&m_a)?;
            let report = match m_b {
                Some(path) => {
                    let m_b: Matrix = read_json(&path)?;
                    let rec = attack::recover_shared_key(&m, &h, &m_a, &m_b, max_steps)?;
                    AttackReport {
                        attack: rec.attack,
                        key: Some(rec.key),
                    }
                }
                None => AttackReport {
                    attack: attack::recover_exponent(&m, &h, &m_a, max_steps)?,
                    key: None,
                },
            };
            eprintln!("recovered a = {}", report.attack.recovered_a);
            emit_json(&report, out.as_deref(), "attack.json")
        }
        Command::Bench {
            config,
            jobs,
            out,
            format,
        } => {
            let cfg = config.resolve()?;
            let (summary, results) = harness::run_bench::<BigInt>(&cfg, jobs)?;
            if let Some(dir) = &out {
                fs::create_dir_all(dir)?;
                harness::write_trials_csv(&results, fs::File::create(dir.join("trials.csv"))?)?;
                harness::write_timings_csv(&results, fs::File::create(dir.join("timings.csv"))?)?;
                emit_json(&summary, Some(dir), "summary.json")?;
            }
            match format {
                Format::Csv => harness::write_trials_csv(&results, io::stdout().lock())?,
                _ => emit_json(&summary, None, "")?,
            }
            if summary.success_rate < 1.0 {
                return Err(CliError::AttackFailed(format!(
                    "success rate {} over {} trials",
                    summary.success_rate, summary.trials
                )));
            }
            Ok(())
        }
        Command::CheckAssoc {
            paper,
            samples,
            order,
            entry_min,
            entry_max,
            seed,
            format,
        } => {
            if !paper && samples == 0 {
                return Err(CliError::BadInput(
                    "nothing to do: pass --paper and/or --samples N".into(),
                ));
            }
            if order == 0 || entry_min > entry_max {
                return Err(CliError::BadInput("need order >= 1 and entry-min <= entry-max".into()));
            }
            let paper_report = if paper {
                let ab = protocol_two::counterexample_pair::<BigInt>();
                let square = ab.op(&ab)?;
                let left_times_square = ab.op(&square)?;
                let square_times_left = square.op(&ab)?;
                Some(PaperReport {
                    associative: left_times_square == square_times_left,
                    pair: ab,
                    square,
                    left_times_square,
                    square_times_left,
                })
            } else {
                None
            };
            let sampled = if samples > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let found = protocol_two::sample_violation::<BigInt, _>(
                    &mut rng,
                    order,
                    entry_min..=entry_max,
                    samples,
                )?;
                Some(match found {
                    Some((n, w)) => SampleReport {
                        samples_drawn: n,
                        witness: Some(w),
                    },
                    None => SampleReport {
                        samples_drawn: samples,
                        witness: None,
                    },
                })
            } else {
                None
            };
            let report = AssocReport {
                paper: paper_report,
                sampled,
            };
            match format {
                Format::Json => emit_json(&report, None, ""),
                _ => {
                    print_assoc_text(&report)?;
                    Ok(())
                }
            }
        }
    }
}

fn print_pair(out: &mut impl Write, label: &str, p: &protocol_two::PairTwo<BigInt>) -> io::Result<()> {
    writeln!(out, "{label}:")?;
    writeln!(out, "  M-component:")?;
    for line in p.m.to_string().lines() {
        writeln!(out, "    {line}")?;
    }
    writeln!(out, "  H-component:")?;
    for line in p.h.to_string().lines() {
        writeln!(out, "    {line}")?;
    }
    Ok(())
}

fn print_assoc_text(report: &AssocReport) -> io::Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if let Some(p) = &report.paper {
        writeln!(out, "A = {:?}, B = {:?}", p.pair.m, p.pair.h)?;
        print_pair(&mut out, "(A,B)^2", &p.square)?;
        print_pair(&mut out, "(A,B)(A,B)^2", &p.left_times_square)?;
        print_pair(&mut out, "(A,B)^2(A,B)", &p.square_times_left)?;
        if p.associative {
            writeln!(out, "verdict: (A,B)(A,B)^2 = (A,B)^2(A,B)")?;
        } else {
            writeln!(out, "verdict: (A,B)(A,B)^2 != (A,B)^2(A,B), the operation is not associative")?;
        }
    }
    if let Some(s) = &report.sampled {
        match &s.witness {
            Some(w) => {
                writeln!(out, "sampled witness after {} random triples:", s.samples_drawn)?;
                print_pair(&mut out, "p", &w.p)?;
                print_pair(&mut out, "q", &w.q)?;
                print_pair(&mut out, "r", &w.r)?;
                print_pair(&mut out, "(p q) r", &w.left)?;
                print_pair(&mut out, "p (q r)", &w.right)?;
            }
            None => writeln!(out, "no violation in {} random triples", s.samples_drawn)?,
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, msg) = match err {
                CliError::BadInput(m) => (EXIT_BAD_INPUT, m),
                CliError::AttackFailed(m) => (EXIT_ATTACK_FAILED, m),
                CliError::Other(m) => (EXIT_FAILURE, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

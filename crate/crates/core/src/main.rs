use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pqc_core::algebra::BitString;
use pqc_core::circuit::parse_circuit;
use pqc_core::lindblad::parse_hamiltonian;
use pqc_core::runner::{
    cmd_all, cmd_amplitude, cmd_lindblad, cmd_search, cmd_verify_gates, criterion_10, ground_space_observable,
    trajectory_csv, OutputFormat, Report, RunConfig, SCHEMA, SEED_RULE,
};

#[derive(Parser)]
#[command(name = "pqc", version, about = "Pauli quantum computing verification toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Overrides the per-suite pass tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Adds wall-clock timings to the report (breaks byte-identical output).
    #[arg(long, global = true)]
    timings: bool,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 10_000)]
    shots: usize,
    #[arg(long, global = true, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long = "t-max", global = true, default_value_t = 3.0)]
    t_max: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Checks every gate channel against its dense target.
    VerifyGates,
    /// Estimates <alpha|H^n U|0^n> through the Pauli pipeline and compares with the statevector.
    Amplitude {
        #[arg(long)]
        circuit: PathBuf,
        /// Bit string alpha, qubit 0 first. Defaults to all zeros.
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Integrates the block Lindbladian for a stabilizer Hamiltonian.
    Lindblad {
        #[arg(long)]
        hamiltonian: PathBuf,
        /// Also runs an RK4 step-halving study from this coarse step.
        #[arg(long = "convergence-dt")]
        convergence_dt: Option<f64>,
        /// Writes the sampled trajectory as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Recovers a planted bit string from the search oracle.
    Search {
        #[arg(long)]
        target: Option<String>,
        /// Number of bits; draws a random target from the seed when no target is given.
        #[arg(long)]
        n: Option<usize>,
        /// Runs the n = 3..8 recovery sweep and query-count fit instead.
        #[arg(long, conflicts_with_all = ["target", "n"])]
        sweep: bool,
    },
    /// Runs every numbered check.
    All,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(text: &str, pass: bool) -> Result<bool, Failure> {
    print!("{text}");
    if !text.ends_with('\n') {
        println!();
    }
    Ok(pass)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let g = &cli.global;
    if g.dt <= 0.0 || g.t_max <= 0.0 {
        return Err(Failure::Usage("--dt and --t-max must be positive".into()));
    }
    let cfg = RunConfig {
        seed: g.seed,
        shots: g.shots,
        dt: g.dt,
        t_max: g.t_max,
        tolerance: g.tolerance,
        format: g.format,
        timings: g.timings,
    };
    match cli.command {
        Command::VerifyGates => {
            let r = cmd_verify_gates(&cfg);
            emit(&r.render(cfg.format), r.pass)
        }
        Command::Amplitude { circuit, alpha } => {
            let c = parse_circuit(&read(&circuit)?)?;
            let alpha: BitString = match alpha {
                Some(a) => a.parse()?,
                None => BitString::zeros(c.num_qubits()),
            };
            if alpha.len() != c.num_qubits() {
                return Err(Failure::Usage(format!(
                    "alpha has {} bits but the circuit has {} qubits",
                    alpha.len(),
                    c.num_qubits()
                )));
            }
            let r = cmd_amplitude(&c, &alpha, &cfg)?;
            emit(&r.render(cfg.format), r.pass)
        }
        Command::Lindblad {
            hamiltonian,
            convergence_dt,
            trajectory,
        } => {
            let h = parse_hamiltonian(&read(&hamiltonian)?)?;
            let (summary, traj) = cmd_lindblad(&h, &cfg, convergence_dt).map_err(|e| Failure::Check(e.to_string()))?;
            if let Some(path) = trajectory {
                let o = ground_space_observable(&h).map_err(|e| Failure::Check(e.to_string()))?;
                std::fs::write(&path, trajectory_csv(&traj, o.as_ref()))
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            }
            emit(&summary.render(cfg.format), summary.pass)
        }
        Command::Search { target, n, sweep } => {
            if sweep {
                let suite = criterion_10(cfg.seed);
                let report = Report {
                    schema: SCHEMA,
                    command: "search-sweep".into(),
                    seed: cfg.seed,
                    seed_rule: SEED_RULE.into(),
                    pass: suite.pass,
                    suites: vec![suite],
                    total_seconds: None,
                };
                return emit(&report.render(cfg.format), report.pass);
            }
            let target: BitString = match (target, n) {
                (Some(t), n) => {
                    let t: BitString = t.parse()?;
                    if n.is_some_and(|n| n != t.len()) {
                        return Err(Failure::Usage("--n does not match the target length".into()));
                    }
                    t
                }
                (None, Some(n)) => {
                    if n == 0 || n > 16 {
                        return Err(Failure::Usage(format!("--n must be in 1..=16, got {n}")));
                    }
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    BitString::from_index(rng.random_range(0..1usize << n), n)
                }
                (None, None) => return Err(Failure::Usage("search needs --target or --n".into())),
            };
            let r = cmd_search(&target, &cfg)?;
            emit(&r.render(cfg.format), r.pass)
        }
        Command::All => {
            let r = cmd_all(&cfg);
            emit(&r.render(cfg.format), r.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(m)) => {
            eprintln!("pqc: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("pqc: {m}");
            ExitCode::from(2)
        }
    }
}

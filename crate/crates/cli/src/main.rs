use std::fs;
use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use convexplap_cli::{
    full_suite, liouville_catalog, read_lines, read_scenarios, run_scenario, run_suite, CliError, Command, Expect,
    Geometry, GrowthSpec, LiouvilleEntry, RunOptions, Scenario,
};

#[derive(Parser)]
#[command(
    name = "convexplap",
    version,
    about = "p-Laplacian, weak p-subharmonicity and growth experiments"
)]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory for CSV artifacts (scan series).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Multiplies every verdict tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Add a unix timestamp to the report.
    #[arg(long, global = true)]
    timestamp: bool,
    /// Worker threads (default: one per core).
    #[cfg(feature = "parallel")]
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the p-Laplacian.
    Plap {
        #[command(subcommand)]
        command: PlapCmd,
    },
    /// Scan the p-Laplacian of e^{|x|²} for sign changes.
    Counterexample(ScanArgs),
    /// Weak p-subharmonicity tests.
    Weakform {
        #[command(subcommand)]
        command: WeakCmd,
    },
    /// Growth classification.
    Growth {
        #[command(subcommand)]
        command: GrowthCmd,
    },
    /// Consistency of growth verdicts with the Liouville theorem.
    Liouville {
        /// Line-delimited entries {"profile", "p", "q", "n"}; default catalog otherwise.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Run line-delimited scenarios, or the built-in suite without a file.
    Suite { file: Option<PathBuf> },
}

#[derive(Subcommand)]
enum PlapCmd {
    Eval {
        /// Field spec, e.g. exp_norm_sq or expr:x1^2+x2^2.
        #[arg(long)]
        field: String,
        #[arg(long)]
        dim: usize,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = convexplap::plaplace::DEFAULT_EPSILON)]
        epsilon: f64,
    },
    Counterexample(ScanArgs),
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 3.0)]
    rmax: f64,
    #[arg(long, default_value_t = 3000)]
    samples: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpectArg {
    Holds,
    Fails,
    Undetermined,
    NotHolds,
}

impl From<ExpectArg> for Expect {
    fn from(e: ExpectArg) -> Self {
        match e {
            ExpectArg::Holds => Expect::Holds,
            ExpectArg::Fails => Expect::Fails,
            ExpectArg::Undetermined => Expect::Undetermined,
            ExpectArg::NotHolds => Expect::NotHolds,
        }
    }
}

#[derive(Subcommand)]
enum WeakCmd {
    Test {
        #[arg(long)]
        field: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// "lo,hi" for every axis or "lo,hi;lo,hi;..." per axis.
        #[arg(long, default_value = "-2,2", allow_hyphen_values = true)]
        region: String,
        #[arg(long, value_enum)]
        expect: Option<ExpectArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GeomArg {
    Euclidean,
    Hyperbolic,
}

#[derive(Subcommand)]
enum GrowthCmd {
    Classify {
        /// Radial profile: an expression in r or a catalog form (exp:-1, poly:1,0,1, ...).
        #[arg(long, allow_hyphen_values = true)]
        profile: String,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "euclidean")]
        geom: GeomArg,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, value_enum)]
        expect_balanced: Option<ExpectArg>,
    },
    /// Check the implication chain over line-delimited queries
    /// {"profile", "n", "geom", "p", "q"}.
    Chain {
        #[arg(long)]
        suite: PathBuf,
    },
}

fn scan_scenario(seed: u64, a: ScanArgs) -> Scenario {
    Scenario::new(
        format!("counterexample-n{}-p{}", a.n, a.p),
        seed,
        Command::CounterexampleScan {
            n: a.n,
            p: a.p,
            rmax: a.rmax,
            samples: a.samples,
        },
    )
}

fn emit(json: &str, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, format!("{json}\n"))?,
        None => {
            // a closed pipe (e.g. `| head`) is not an error
            if let Err(e) = writeln!(std::io::stdout().lock(), "{json}") {
                if e.kind() != ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let opts = RunOptions {
        tol_scale: cli.tol_scale,
        csv_dir: cli.csv.clone(),
        timestamp: cli.timestamp,
    };
    if opts.tol_scale.is_nan() || opts.tol_scale <= 0.0 {
        return Err(CliError::Schema(format!(
            "--tol-scale must be positive, got {}",
            opts.tol_scale
        )));
    }
    let seed = cli.seed;
    let scenario = match cli.command {
        Cmd::Plap {
            command:
                PlapCmd::Eval {
                    field,
                    dim,
                    point,
                    p,
                    epsilon,
                },
        } => Scenario::new(
            "plap-eval",
            seed,
            Command::PlapEval {
                field,
                dim,
                point,
                p,
                epsilon,
            },
        ),
        Cmd::Plap {
            command: PlapCmd::Counterexample(a),
        }
        | Cmd::Counterexample(a) => scan_scenario(seed, a),
        Cmd::Weakform {
            command:
                WeakCmd::Test {
                    field,
                    dim,
                    p,
                    trials,
                    region,
                    expect,
                },
        } => Scenario::new(
            "weakform-test",
            seed,
            Command::WeakformTest {
                field,
                dim,
                p,
                trials,
                region,
                expect: expect.map(Into::into),
            },
        ),
        Cmd::Growth {
            command:
                GrowthCmd::Classify {
                    profile,
                    n,
                    geom,
                    p,
                    q,
                    expect_balanced,
                },
        } => Scenario::new(
            "growth-classify",
            seed,
            Command::GrowthClassify {
                query: GrowthSpec {
                    profile,
                    n,
                    geom: match geom {
                        GeomArg::Euclidean => Geometry::Euclidean,
                        GeomArg::Hyperbolic => Geometry::Hyperbolic,
                    },
                    p,
                    q,
                },
                expect_balanced: expect_balanced.map(Into::into),
            },
        ),
        Cmd::Growth {
            command: GrowthCmd::Chain { suite },
        } => {
            let queries: Vec<GrowthSpec> = read_lines(&suite)?;
            Scenario::new("growth-chain", seed, Command::GrowthChain { queries })
        }
        Cmd::Liouville { catalog } => {
            let entries: Vec<LiouvilleEntry> = match catalog {
                Some(path) => read_lines(&path)?,
                None => liouville_catalog(),
            };
            Scenario::new("liouville", seed, Command::LiouvilleDemo { entries })
        }
        Cmd::Suite { file } => {
            let scenarios = match file {
                Some(path) => read_scenarios(&path)?,
                None => full_suite(seed),
            };
            let report = run_suite(&scenarios, &opts)?;
            emit(&report.to_json(), &cli.out)?;
            return Ok(report.exit_code());
        }
    };
    let report = run_scenario(&scenario, &opts)?;
    emit(&report.to_json(), &cli.out)?;
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("convexplap: {e}");
            return ExitCode::from(3);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("convexplap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `oscdecay` command-line tool.
//!
//! Exit codes: 0 success, 2 parse error, 3 guard violation, 4 quadrature
//! ceiling, 1 anything else. Output files are written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oscdecay::oscint::{CutoffKind, LambdaLadder};
use oscdecay::report::{self, Command, Format, Report, RunConfig};
use oscdecay::sublevel::{LadderConfig, Strategy};
use oscdecay::{Error, Parallelism};

#[derive(Parser, Debug)]
#[command(name = "oscdecay", version, about = "Decay rates for trilinear oscillatory integrals")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Hessian minors, α estimates and the best predicted exponent for a phase.
    Analyze,
    /// Numerical decay slope of Λ on a test family.
    Verify,
    /// Reproduce the d = 2 chart and the three-dimensional minor example.
    Table,
    /// Re-run the config embedded in a JSON report and compare the output.
    Replay { report: PathBuf },
}

#[derive(Args, Debug)]
struct Opts {
    /// Phase S(x, y), e.g. "1/2*x1^2*y1".
    #[arg(long, global = true)]
    phase: Option<String>,
    /// Dimension d [default: 2].
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Cutoff support half-width r [default: 1].
    #[arg(long, global = true)]
    support: Option<f64>,
    /// Master seed [default: 42].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Smallest ε [default: 1e-6].
    #[arg(long, global = true)]
    eps_min: Option<f64>,
    /// Largest ε [default: 0.1].
    #[arg(long, global = true)]
    eps_max: Option<f64>,
    /// Number of ε rungs [default: 6].
    #[arg(long, global = true)]
    eps_steps: Option<usize>,
    /// Monte Carlo samples per ε rung [default: 200000].
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Grid half-count per (x, y) axis [default: 8].
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Sublevel sampling strategy [default: pruned].
    #[arg(long, global = true, value_enum)]
    strategy: Option<StrategyArg>,
    /// Test family: scaled-box, aniso-box, unit-box, gaussian[:width[:exponent]],
    /// synthetic[:sigma] [default: scaled-box].
    #[arg(long, global = true)]
    family: Option<String>,
    /// Cutoff φ [default: bump].
    #[arg(long, global = true, value_enum)]
    cutoff: Option<CutoffArg>,
    /// Smallest λ [default: 100].
    #[arg(long, global = true)]
    lambda_min: Option<f64>,
    /// Largest λ [default: 1e5].
    #[arg(long, global = true)]
    lambda_max: Option<f64>,
    /// Number of λ rungs [default: 8].
    #[arg(long, global = true)]
    lambda_steps: Option<usize>,
    /// QMC points per replicate [default: 131072].
    #[arg(long, global = true)]
    points: Option<usize>,
    /// QMC replicates [default: 8].
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format. CSV applies to verify; the JSON report then goes next
    /// to the CSV file with a .json extension.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "OSCDECAY_THREADS")]
    threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Pruned,
    Uniform,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CutoffArg {
    Bump,
    One,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl Opts {
    fn config(&self, command: Command) -> oscdecay::Result<RunConfig> {
        let mut c = RunConfig {
            command,
            ..RunConfig::default()
        };
        let eps0 = LadderConfig::default();
        let lam0 = LambdaLadder::default();
        c.phase = self.phase.clone();
        c.dim = self.dim.unwrap_or(c.dim);
        c.support = self.support.unwrap_or(c.support);
        c.seed = self.seed.unwrap_or(c.seed);
        c.eps = LadderConfig {
            eps_min: self.eps_min.unwrap_or(eps0.eps_min),
            eps_max: self.eps_max.unwrap_or(eps0.eps_max),
            steps: self.eps_steps.unwrap_or(eps0.steps),
        };
        c.samples = self.samples.unwrap_or(c.samples);
        c.grid = self.grid.unwrap_or(c.grid);
        if let Some(s) = self.strategy {
            c.strategy = match s {
                StrategyArg::Pruned => Strategy::Pruned,
                StrategyArg::Uniform => Strategy::Uniform,
            };
        }
        if let Some(f) = &self.family {
            c.family = report::parse_family(f, c.dim)?;
        }
        if let Some(k) = self.cutoff {
            c.cutoff = match k {
                CutoffArg::Bump => CutoffKind::Bump,
                CutoffArg::One => CutoffKind::One,
            };
        }
        c.lambda = LambdaLadder {
            min: self.lambda_min.unwrap_or(lam0.min),
            max: self.lambda_max.unwrap_or(lam0.max),
            steps: self.lambda_steps.unwrap_or(lam0.steps),
        };
        c.points = self.points.unwrap_or(c.points);
        c.replicates = self.replicates.unwrap_or(c.replicates);
        c.out = self.out.as_ref().map(|p| p.display().to_string());
        if let Some(f) = self.format {
            c.format = match f {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            };
        }
        if c.format == Format::Csv && command != Command::Verify {
            return Err(Error::Invalid("--format csv is only available for verify".into()));
        }
        Ok(c)
    }
}

fn write_atomic(path: &Path, contents: &str) -> oscdecay::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn emit(path: Option<&Path>, contents: &str) -> oscdecay::Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn emit_report(report: &Report, out: Option<&Path>) -> oscdecay::Result<()> {
    // Render everything before touching the filesystem.
    let json = report.to_json()?;
    match report.config.format {
        Format::Json => emit(out, &json),
        Format::Csv => {
            let csv = report.to_csv()?;
            match out {
                Some(p) => {
                    write_atomic(&p.with_extension("json"), &json)?;
                    write_atomic(p, &csv)
                }
                None => {
                    if let report::Payload::Verify(v) = &report.payload {
                        eprintln!("slope {:.6} ± {:.6}", v.slope, v.slope_std_error);
                    }
                    emit(None, &csv)
                }
            }
        }
    }
}

fn parallelism(threads: Option<usize>) -> oscdecay::Result<Parallelism> {
    if let Some(n) = threads.filter(|&n| n > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    }
    Ok(Parallelism::default())
}

fn run(cli: Cli) -> oscdecay::Result<()> {
    let par = parallelism(cli.opts.threads)?;
    let out = cli.opts.out.as_deref();
    match cli.command {
        Cmd::Replay { report } => {
            let text = std::fs::read_to_string(&report)?;
            let outcome = report::replay(&text, par)?;
            emit(out, &outcome.json)?;
            if outcome.identical {
                eprintln!("replay matches {}", report.display());
                Ok(())
            } else {
                Err(Error::Invalid(format!(
                    "replay differs from {}",
                    report.display()
                )))
            }
        }
        cmd => {
            let command = match cmd {
                Cmd::Analyze => Command::Analyze,
                Cmd::Verify => Command::Verify,
                Cmd::Table => Command::Table,
                Cmd::Replay { .. } => unreachable!(),
            };
            let mut cfg = cli.opts.config(command)?;
            cfg.parallelism = par;
            let report = report::run(&cfg)?;
            emit_report(&report, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

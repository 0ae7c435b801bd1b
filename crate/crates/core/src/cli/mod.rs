//! The `gmult` command line: instance and report formats, the subcommands
//! and the invariant suite behind `gmult verify`.
//!
//! Exit codes: 0 success, 1 verification failure (or a non-invertible /
//! hypothesis-not-met verdict), 2 input error.

pub mod commands;
pub mod gen;
pub mod instance;
pub mod report;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::opspace::Tolerances;
use commands::{ConstructMode, Context, PerturbMode};
use instance::{Instance, InstanceFile};
use report::{digest, ReportFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "gmult",
    version,
    about = "Generalized g-frame multipliers: build, invert, verify"
)]
pub struct Cli {
    /// Seed for randomized checks and generation (overrides the file's seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Rank and invertibility tolerance (overrides the file's tolerances).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Print the JSON report instead of the text summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the JSON report (for `gen`: the instance) to this path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frame bounds, excess, classification and reconstruction residuals.
    Analyze {
        /// Instance file.
        file: PathBuf,
        /// Name of the frame to analyze.
        #[arg(long, default_value = "Lambda")]
        frame: String,
    },
    /// Assemble M = Σ Λᵢ* uᵢ Γᵢ and report its spectrum.
    Multiplier {
        /// Instance file.
        file: PathBuf,
    },
    /// The dual Γ† representing the inverse multiplier.
    Invert {
        /// Instance file.
        file: PathBuf,
        /// Competing duals tried in the uniqueness check.
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Build Γ (or Λ) realizing a prescribed multiplier.
    Construct {
        /// Instance file; `T` (and `Phi`) or `Psi`, `T1`, `T2` come from its operators.
        file: PathBuf,
        /// `lambda` needs a positive semi-definite symbol.
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Write the instance with the constructed frame added.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Multiplier-preserving transfer or the sufficient invertibility condition.
    Perturb {
        /// Instance file.
        file: PathBuf,
        /// Defaults to `transfer` when the file has `LambdaPrime`, else `sufficient` (needs `LambdaDual`).
        #[arg(long, value_enum)]
        mode: Option<PerturbArg>,
        /// Frame playing the role of Γ.
        #[arg(long, default_value = "Gamma")]
        gamma: String,
        /// Alternative solutions tried in the best-approximation check.
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Write a seeded random instance.
    Gen {
        /// Output path (alternative to --out); stdout when neither is given.
        path: Option<PathBuf>,
        /// Ambient dimension.
        #[arg(long)]
        n: usize,
        /// Comma-separated block sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        blocks: Vec<usize>,
        /// Condition cap for frames, symbol and operators.
        #[arg(long, default_value_t = 10.0)]
        cap: f64,
    },
    /// Run the invariant suite on a file or on random instances.
    Verify {
        /// Instance file.
        file: Option<PathBuf>,
        /// Generate and verify this many random instances instead of reading a file.
        #[arg(long, conflicts_with = "file")]
        random: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Gamma,
    GammaMinimal,
    Lambda,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PerturbArg {
    Transfer,
    Sufficient,
}

/// What a command produced: text for stdout plus an exit code.
#[derive(Debug)]
pub struct Output {
    pub stdout: String,
    pub code: i32,
}

fn read_instance(path: &Path) -> Result<(Instance, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let text =
        String::from_utf8(bytes.clone()).map_err(|_| Error::InvalidInput(format!("{}: not UTF-8", path.display())))?;
    let inst = Instance::parse(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    Ok((inst, digest(&bytes)))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn tolerances(flag: Option<f64>, file: Option<&InstanceFile>) -> Result<Tolerances> {
    let t = match (flag, file) {
        (Some(v), _) => Tolerances { rank: v, invert: v },
        (None, Some(f)) => f.tolerances(),
        (None, None) => Tolerances::default(),
    };
    t.validate()?;
    Ok(t)
}

fn finish(cli: &Cli, report: ReportFile) -> Result<Output> {
    let json = report.to_json();
    if let Some(p) = &cli.out {
        write_file(p, &json)?;
    }
    let code = report.verdict.exit_code();
    Ok(Output {
        stdout: if cli.json { json } else { report.to_text() },
        code,
    })
}

/// Execute a parsed command line.
pub fn execute(cli: &Cli) -> Result<Output> {
    if let Command::Gen { path, n, blocks, cap } = &cli.command {
        let file = gen::generate(*n, blocks, *cap, cli.seed.unwrap_or(0))?;
        let text = file.emit();
        return match path.as_ref().or(cli.out.as_ref()) {
            Some(p) => {
                write_file(p, &text)?;
                Ok(Output {
                    stdout: String::new(),
                    code: EXIT_OK,
                })
            }
            None => Ok(Output {
                stdout: text,
                code: EXIT_OK,
            }),
        };
    }
    if let Command::Verify { file: None, random } = &cli.command {
        let count = random.ok_or_else(|| Error::InvalidInput("verify needs a file or --random N".into()))?;
        let seed = cli.seed.unwrap_or(0);
        let tol = tolerances(cli.tol, None)?;
        tol.install()?;
        let ctx = Context {
            digest: digest(format!("random:{count}:{seed}").as_bytes()),
            seed,
            tolerances: tol,
        };
        return finish(cli, commands::verify_random(count, &ctx));
    }

    let path = match &cli.command {
        Command::Analyze { file, .. }
        | Command::Multiplier { file }
        | Command::Invert { file, .. }
        | Command::Construct { file, .. }
        | Command::Perturb { file, .. } => file,
        Command::Verify { file: Some(file), .. } => file,
        Command::Gen { .. } | Command::Verify { file: None, .. } => unreachable!("handled above"),
    };
    let (inst, input_digest) = read_instance(path)?;
    let tol = tolerances(cli.tol, Some(&inst.file))?;
    tol.install()?;
    let ctx = Context {
        digest: input_digest,
        seed: cli.seed.or(inst.file.seed).unwrap_or(0),
        tolerances: tol,
    };
    let report = match &cli.command {
        Command::Analyze { frame, .. } => commands::analyze(&inst, &ctx, frame)?,
        Command::Multiplier { .. } => commands::multiplier(&inst, &ctx)?,
        Command::Invert { trials, .. } => commands::invert(&inst, &ctx, *trials)?,
        Command::Construct { mode, emit, .. } => {
            let mode = match mode {
                ModeArg::Gamma => ConstructMode::Gamma,
                ModeArg::GammaMinimal => ConstructMode::GammaMinimal,
                ModeArg::Lambda => ConstructMode::Lambda,
            };
            let (report, file) = commands::construct(&inst, &ctx, mode)?;
            if let Some(p) = emit {
                write_file(p, &file.emit())?;
            }
            report
        }
        Command::Perturb {
            mode, gamma, trials, ..
        } => {
            let mode = match mode {
                Some(PerturbArg::Transfer) => PerturbMode::Transfer,
                Some(PerturbArg::Sufficient) => PerturbMode::Sufficient,
                None => commands::detect_perturb_mode(&inst),
            };
            commands::perturb(&inst, &ctx, mode, gamma, *trials)?
        }
        Command::Verify { .. } => commands::verify_instance(&inst, &ctx),
        Command::Gen { .. } => unreachable!("handled above"),
    };
    finish(cli, report)
}

/// Parse arguments, run, print, and return the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.stdout.as_bytes());
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

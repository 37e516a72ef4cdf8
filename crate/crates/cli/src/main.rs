//! `mahler`: run, census, verify and export staged constructions.
//!
//! Exit codes: 0 ok, 1 usage or config, 2 verification failure (including
//! checksum and parse errors), 3 search exhausted, 4 precision exhausted.

mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use mahler::construct::{init_stage, run_stage, statefile, StageState};
use mahler::corekit::{reduce_exact, Disk, PrecisionPolicy, SymbolicValue};
use mahler::cycles::{census, CycleStatus, SeedGrid};
use mahler::verify::{check_stage, InvariantReport};
use mahler::Error;
use rug::float::Round;
use rug::{Float, Rational};

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "mahler", version, about = "Staged Mahler-function construction with certified invariants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the stage-1 file from a config (or a manifest to replay).
    Init {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        stage_file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Starting precision; the ceiling is raised to match if needed.
        #[arg(long)]
        precision_bits: Option<u32>,
    },
    /// Advance a stage file, verifying each stage before it is written.
    Step {
        #[arg(long)]
        stage_file: PathBuf,
        #[arg(long, default_value_t = 1)]
        stages: usize,
    },
    /// Cycle census of the current function.
    Census {
        #[arg(long)]
        stage_file: PathBuf,
        /// Largest period; defaults to the stage index.
        #[arg(long)]
        max_period: Option<usize>,
        /// `center,radius`; defaults to `B(0, r_m)`.
        #[arg(long)]
        disk: Option<String>,
    },
    /// Full invariant report; exit 2 when any entry fails.
    Verify {
        #[arg(long)]
        stage_file: PathBuf,
    },
    Export {
        #[arg(long)]
        stage_file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Report)]
        format: Format,
        /// Largest coefficient index for `--format coefficients`.
        #[arg(long, default_value_t = 10)]
        max_k: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    State,
    Report,
    Coefficients,
}

enum Failure {
    Usage(String),
    Lib(Error),
    Rejected(Box<InvariantReport>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Precondition(_) | Error::InvalidSchedule(_) => 1,
        Error::Parse(_) | Error::Checksum => 2,
        Error::PrecisionExhausted { .. } => 4,
        _ => 3,
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Write via a temp file in the same directory, then rename.
fn write_atomic(path: &Path, text: &str) -> Outcome<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| Failure::Usage(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn load(path: &Path) -> Outcome<StageState> {
    Ok(statefile::from_text(&read(path)?)?)
}

fn load_verified(path: &Path) -> Outcome<StageState> {
    let s = load(path)?;
    let rep = check_stage(&s);
    if !rep.accepted() {
        return Err(Failure::Rejected(Box::new(rep)));
    }
    Ok(s)
}

fn load_manifest(stage_file: &Path, s: &StageState) -> RunManifest {
    fs::read_to_string(RunManifest::path_for(stage_file))
        .ok()
        .and_then(|t| RunManifest::from_text(&t).ok())
        .unwrap_or_else(|| RunManifest::new(s.config.clone()))
}

fn commit(stage_file: &Path, s: &StageState, manifest: &mut RunManifest) -> Outcome<()> {
    let text = statefile::to_text(s);
    write_atomic(stage_file, &text)?;
    let sum = text.lines().nth(1).and_then(|l| l.strip_prefix("checksum ")).unwrap_or_default().to_string();
    manifest.record(s.m, stage_file, &sum);
    write_atomic(&RunManifest::path_for(stage_file), &manifest.to_text())
}

fn cmd_init(config: &Path, stage_file: &Path, seed: Option<u64>, bits: Option<u32>) -> Outcome<()> {
    let mut cfg = RunManifest::config_from(&read(config)?)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(b) = bits {
        cfg.policy = PrecisionPolicy::new(b, cfg.policy.ceiling.max(b));
    }
    let s = init_stage(&cfg)?;
    let mut m = RunManifest::new(cfg);
    commit(stage_file, &s, &mut m)?;
    println!("stage 1: r = {}, a_0 = {}", s.radius(), s.coefficients[0].value);
    Ok(())
}

fn cmd_step(stage_file: &Path, count: usize) -> Outcome<()> {
    let mut s = load_verified(stage_file)?;
    let mut m = load_manifest(stage_file, &s);
    for _ in 0..count {
        let t = Instant::now();
        let next = run_stage(&s).map_err(|e| {
            eprintln!("stage {} -> {} failed: {e}", s.m, s.m + 1);
            Failure::Lib(e)
        })?;
        let rep = check_stage(&next);
        if !rep.accepted() {
            return Err(Failure::Rejected(Box::new(rep)));
        }
        commit(stage_file, &next, &mut m)?;
        println!(
            "stage {}: r = {}, terms = {}, orbits = {}, {:.1}s",
            next.m,
            next.radius(),
            next.f.terms.len(),
            next.orbits.len(),
            t.elapsed().as_secs_f64()
        );
        s = next;
    }
    Ok(())
}

fn cmd_census(stage_file: &Path, max_period: Option<usize>, disk: Option<&str>) -> Outcome<()> {
    let s = load_verified(stage_file)?;
    let disk: Disk = match disk {
        Some(d) => d.parse().map_err(|e: Error| Failure::Usage(format!("--disk: {e}")))?,
        None => s.disk(),
    };
    let top = max_period.unwrap_or(s.m);
    let c = census(&s.f, top, &disk, &s.f.nail_roots, SeedGrid::default(), &s.config.policy)?;
    println!("census of f_{} on {disk}", s.m);
    println!("{:>3} {:>6} {:>6} {:>7} {:>5} {:>6} {:>8}", "k", "#Per", "#Orb", "nailed", "free", "mixed", "grafted");
    for k in 1..=top {
        println!(
            "{:>3} {:>6} {:>6} {:>7} {:>5} {:>6} {:>8}",
            k,
            c.per(k),
            c.orb(k),
            c.count_status(k, CycleStatus::Nailed),
            c.count_status(k, CycleStatus::Free),
            c.count_status(k, CycleStatus::Mixed),
            s.orbits_of(k).count()
        );
    }
    Ok(())
}

fn coefficients_text(s: &StageState, max_k: usize) -> Outcome<String> {
    let mut out = format!("mahler-coefficients v1\nstage {}\n", s.m);
    out += "# k a_k b_k |a_k-b_k| theta_k below\n";
    let target = Float::with_val(64, 1e-40);
    for k in 0..=max_k {
        let a = s.f.taylor_coefficient(k);
        let b = s.f.base.taylor_coefficient(k);
        let theta = s.config.theta(k);
        let (shown, below) = match reduce_exact(&a) {
            Some(q) => {
                let d = &q - &b;
                let below = d.norm_sqr() < Rational::from(theta.square_ref());
                (format!("{q} {:.3e}", d.abs_upper().to_f64()), below)
            }
            None => {
                let e = SymbolicValue::sub(&a, &SymbolicValue::exact(b.clone()))
                    .enclose(&target, &s.config.policy)?;
                let ak = a.enclose(&target, &s.config.policy)?;
                let d = e.abs_upper();
                let below = d < Float::with_val_round(64, &theta, Round::Down).0;
                (format!("{ak} {:.3e}", d.to_f64()), below)
            }
        };
        out += &format!("{k} {shown} {b} {theta} {below}\n");
    }
    if s.m >= 2 {
        let t = mahler::entire::tail_certificate(&s.f, s.radius(), s.m, &|k| s.config.big_theta(k))?;
        out += &format!("tail r = {} bound = {:.6e}\n", t.radius, t.bound.to_f64());
    }
    Ok(out)
}

fn cmd_export(stage_file: &Path, format: Format, max_k: usize, output: Option<&Path>) -> Outcome<()> {
    let text = match format {
        Format::State => statefile::to_text(&load_verified(stage_file)?),
        Format::Report => check_stage(&load(stage_file)?).to_text(),
        Format::Coefficients => coefficients_text(&load_verified(stage_file)?, max_k)?,
    };
    match output {
        Some(p) => write_atomic(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Init { config, stage_file, seed, precision_bits } => cmd_init(&config, &stage_file, seed, precision_bits),
        Command::Step { stage_file, stages } => cmd_step(&stage_file, stages),
        Command::Census { stage_file, max_period, disk } => cmd_census(&stage_file, max_period, disk.as_deref()),
        Command::Verify { stage_file } => {
            let rep = check_stage(&load(&stage_file)?);
            print!("{rep}");
            if rep.accepted() {
                Ok(())
            } else {
                Err(Failure::Rejected(Box::new(rep)))
            }
        }
        Command::Export { stage_file, format, max_k, output } => cmd_export(&stage_file, format, max_k, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verify = matches!(cli.command, Command::Verify { .. });
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Rejected(rep)) => {
            if !verify {
                eprint!("{rep}");
            }
            for e in rep.failed() {
                eprintln!("failed: {} ({})", e.key, e.title);
            }
            ExitCode::from(2)
        }
    }
}

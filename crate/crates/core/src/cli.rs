//! Command-line front end. Every command that takes `--out` writes a
//! `manifest.json` next to its results; all files are written atomically.
//!
//! Exit codes: 0 pass, 1 failed verdict, 2 symbolic obstruction,
//! 3 numerical domain error, 4 usage or I/O error.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::curveflow::{conserved_report, evolve_vmkdv_with, EvolveOptions, FlowTrajectory};
use crate::diffpoly::{print, rat, GridFunction, Rational, SpectralGrid};
use crate::error::{Error, Result};
use crate::hasimoto::{angles_from_natural, gauge_report, natural_from_frenet, FrenetCurvatures, NaturalCurvatures};
use crate::laxpair::{killing_check, lambda_identities, max_residual, zero_curvature_residual};
use crate::operators::checks::{check_hereditary, check_jacobi, check_symplectic, nls_square_identity, nondegenerate_densities, random_field};
use crate::operators::hierarchy;
use crate::report::{write_atomic, write_json, RunManifest, Verdict};
use crate::rng::seeded;

#[derive(Parser, Debug)]
#[command(name = "vmkdv", version, about = "Vector mKdV hierarchy, Hasimoto gauge and Lax pair checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate S₀ … S_k of the hierarchy in the expression text format.
    Hierarchy {
        #[arg(short = 'n', default_value_t = 3)]
        n: usize,
        #[arg(short = 'k', long, default_value_t = 1)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named verification suite and print a JSON verdict.
    Verify {
        check: Check,
        #[command(flatten)]
        common: Common,
    },
    /// Transform curvature data through the Hasimoto gauge.
    Hasimoto {
        direction: Direction,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the vmKdV equation from a CSV profile or seeded data.
    Evolve {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(short = 'T', default_value_t = 1.0)]
        t_final: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1)]
        save_every: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Zero-curvature residual table along a stored trajectory.
    Laxcheck {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        lambdas: Vec<f64>,
        /// Ambient curvature; defaults to the trajectory's own.
        #[arg(long)]
        ambient: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        nu: f64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    #[arg(short = 'n', default_value_t = 3)]
    pub n: usize,
    /// Grid points.
    #[arg(short = 'N')]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub kappa_c: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub nu: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Symplectic,
    Jacobi,
    Hereditary,
    NlsSquare,
    Lambda,
    Killing,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    ToNatural,
    ToFrenet,
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::MaxOrderExceeded { .. }
        | Error::NonlocalArgument(_)
        | Error::NestingDepth(_)
        | Error::Undecided { .. }
        | Error::NonlocalHierarchyMember(_) => 2,
        Error::NonzeroMean { .. }
        | Error::GimbalLock { .. }
        | Error::PositivityLoss { .. }
        | Error::DegenerateFrenet { .. }
        | Error::BranchJump { .. }
        | Error::BlowUp { .. }
        | Error::StabilityViolation { .. }
        | Error::ConsistencyDrift { .. }
        | Error::InsufficientSnapshots(_) => 3,
        Error::MissingField(_)
        | Error::InvalidGrid(_)
        | Error::Dimension(_)
        | Error::Parse { .. }
        | Error::InvalidArgument(_)
        | Error::Io(_) => 4,
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Execute a command; `Ok(false)` is a failed verdict.
pub fn run(cmd: &Command) -> Result<bool> {
    let start = Instant::now();
    match cmd {
        Command::Hierarchy { n, steps, out } => cmd_hierarchy(*n, *steps, out.as_deref(), start),
        Command::Verify { check, common } => cmd_verify(*check, common, start),
        Command::Hasimoto { direction, input, out } => cmd_hasimoto(*direction, input, out, start),
        Command::Evolve {
            input,
            t_final,
            dt,
            save_every,
            common,
        } => cmd_evolve(input.as_deref(), *t_final, *dt, *save_every, common, start),
        Command::Laxcheck {
            traj,
            lambdas,
            ambient,
            nu,
            tolerance,
            out,
        } => cmd_laxcheck(traj, lambdas, *ambient, *nu, *tolerance, out.as_deref(), start),
    }
}

fn finish(dir: &Path, mut manifest: RunManifest, outputs: Vec<PathBuf>, start: Instant) -> Result<()> {
    manifest.outputs = outputs;
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    write_json(&dir.join("manifest.json"), &manifest)
}

// a closed pipe on stdout is not an error worth a panic
fn say(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn emit(value: &impl Serialize) -> Result<()> {
    say(&serde_json::to_string_pretty(value)?);
    Ok(())
}

fn rational(x: f64) -> Result<Rational> {
    // exact for the decimal inputs a user types
    let den = 1_000_000i64;
    let num = (x * den as f64).round();
    if !num.is_finite() || ((num / den as f64) - x).abs() > 1e-12 * x.abs().max(1.0) {
        return Err(Error::InvalidArgument(format!("{x} is not a short decimal")));
    }
    Ok(rat(num as i64, den))
}

#[derive(Serialize)]
struct LocalityReport {
    n: usize,
    members: Vec<MemberSummary>,
}

#[derive(Serialize)]
struct MemberSummary {
    index: usize,
    file: String,
    local: bool,
    terms: usize,
}

pub fn cmd_hierarchy(n: usize, steps: usize, out: Option<&Path>, start: Instant) -> Result<bool> {
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    if steps > 4 {
        return Err(Error::InvalidArgument("at most 4 recursion steps".into()));
    }
    let members = hierarchy(n, steps)?;
    let mut summaries = Vec::new();
    let mut texts = Vec::new();
    for (k, s) in members.iter().enumerate() {
        let text: String = s.0.iter().map(|e| print(e) + "\n").collect();
        summaries.push(MemberSummary {
            index: k,
            file: format!("S{k}.txt"),
            local: s.is_local(),
            terms: s.0.iter().map(|e| e.len()).sum(),
        });
        texts.push(text);
    }
    let report = LocalityReport { n, members: summaries };
    match out {
        Some(dir) => {
            let mut outputs = Vec::new();
            for (m, text) in report.members.iter().zip(&texts) {
                let p = dir.join(&m.file);
                write_atomic(&p, text.as_bytes())?;
                outputs.push(p);
            }
            let p = dir.join("locality.json");
            write_json(&p, &report)?;
            outputs.push(p);
            let manifest = RunManifest::new("hierarchy").param("n", n).param("steps", steps);
            finish(dir, manifest, outputs, start)?;
        }
        None => {
            for (k, text) in texts.iter().enumerate() {
                say(&format!("# S{k}\n{}", text.trim_end()));
            }
        }
    }
    Ok(true)
}

pub fn verify(check: Check, c: &Common) -> Result<Verdict> {
    let n = c.n;
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    Ok(match check {
        Check::Symplectic => check_symplectic(n)?,
        Check::Hereditary => check_hereditary(n, c.grid.unwrap_or(256), 1e-5, c.seed, false)?,
        Check::Jacobi => {
            let npts = c.grid.unwrap_or(64);
            let (good, bad) = check_jacobi(n, npts, c.seed, &nondegenerate_densities(n))?;
            let pass = good.relative() < 1e-6 && bad.relative() > 1e3 * good.relative().max(1e-9);
            Verdict::new("jacobi", n, Some(npts), good.relative(), pass)
                .detail("control_residual", bad.relative())
                .detail("seed", c.seed)
        }
        Check::NlsSquare => {
            if n != 3 {
                return Err(Error::InvalidArgument("nls-square is defined for n = 3".into()));
            }
            Verdict::new("nls-square", 3, None, 0.0, nls_square_identity()?)
        }
        Check::Lambda => {
            if n < 3 {
                return Err(Error::InvalidArgument("the Lax pair needs n >= 3".into()));
            }
            let checks = lambda_identities(n, &rational(c.nu)?, &rational(c.kappa_c)?);
            let pass = checks.iter().all(|k| k.pass);
            let first = checks.iter().find(|k| !k.pass).map(|k| k.order.clone());
            Verdict::new("lambda", n, None, 0.0, pass)
                .detail("orders", &checks)
                .detail("first_failure", first)
        }
        Check::Killing => Verdict::new("killing", n, None, 0.0, killing_check(n)),
    })
}

fn cmd_verify(check: Check, c: &Common, start: Instant) -> Result<bool> {
    let v = verify(check, c)?;
    emit(&v)?;
    if let Some(dir) = &c.out {
        let p = dir.join("verdict.json");
        write_json(&p, &v)?;
        let manifest = RunManifest::new("verify")
            .param("check", format!("{check:?}"))
            .param("n", c.n)
            .param("N", c.grid)
            .param("seed", c.seed)
            .param("nu", c.nu)
            .param("kappa_c", c.kappa_c);
        finish(dir, manifest, vec![p], start)?;
    }
    Ok(v.verdict)
}

fn cmd_hasimoto(direction: Direction, input: &Path, out: &Path, start: Instant) -> Result<bool> {
    let data = GridFunction::read_csv(input)?;
    let (frenet, natural, theta, name) = match direction {
        Direction::ToNatural => {
            let frenet = FrenetCurvatures(data);
            let (natural, theta) = natural_from_frenet(&frenet, None)?;
            (frenet, natural, theta, "natural.csv")
        }
        Direction::ToFrenet => {
            let natural = NaturalCurvatures(data);
            let (theta, frenet) = angles_from_natural(&natural)?;
            (frenet, natural, theta, "frenet.csv")
        }
    };
    let result = match direction {
        Direction::ToNatural => &natural.0,
        Direction::ToFrenet => &frenet.0,
    };
    let report = gauge_report(&frenet, &natural, &theta)?;
    let p_out = out.join(name);
    result.write_csv(&p_out)?;
    let p_theta = out.join("angles.csv");
    theta.as_grid_function().write_csv(&p_theta)?;
    let p_rep = out.join("gauge.json");
    write_json(&p_rep, &report)?;
    let manifest = RunManifest::new("hasimoto")
        .param("direction", format!("{direction:?}"))
        .param("n", frenet.n());
    let mut manifest = manifest;
    manifest.inputs.push(input.to_path_buf());
    finish(out, manifest, vec![p_out, p_theta, p_rep], start)?;
    emit(&report)?;
    Ok(true)
}

/// Seeded smooth initial data with `n − 1` components on `[0, 2π)`.
pub fn seeded_profile(n: usize, npts: usize, seed: u64) -> Result<GridFunction> {
    let grid = SpectralGrid::new(npts, 2.0 * PI)?;
    let mut rng = seeded(seed);
    Ok(random_field(&mut rng, &grid, n - 1, &[1, 2, 3], 0.5))
}

fn cmd_evolve(
    input: Option<&Path>,
    t_final: f64,
    dt: f64,
    save_every: usize,
    c: &Common,
    start: Instant,
) -> Result<bool> {
    let u0 = match input {
        Some(p) => GridFunction::read_csv(p)?,
        None => {
            if c.n < 2 {
                return Err(Error::InvalidArgument("n must be at least 2".into()));
            }
            seeded_profile(c.n, c.grid.unwrap_or(128), c.seed)?
        }
    };
    let opts = EvolveOptions {
        save_every,
        ..Default::default()
    };
    let traj = evolve_vmkdv_with(&u0, t_final, dt, c.kappa_c, &opts)?;
    let rows = conserved_report(&traj);
    let summary = serde_json::json!({
        "n": traj.dims() + 1,
        "grid": traj.grid().n(),
        "dt": traj.dt,
        "snapshots": traj.len(),
        "max_norm_drift": rows.iter().map(|r| r.norm_drift).fold(0.0, f64::max),
        "max_energy_drift": rows.iter().map(|r| r.energy_drift).fold(0.0, f64::max),
    });
    if let Some(dir) = &c.out {
        let mut outputs: Vec<PathBuf> = traj.write_dir(dir)?.into_iter().map(|f| dir.join(f)).collect();
        outputs.push(dir.join("trajectory.json"));
        let p = dir.join("conserved.json");
        write_json(&p, &rows)?;
        outputs.push(p);
        let mut manifest = RunManifest::new("evolve")
            .param("n", traj.dims() + 1)
            .param("N", traj.grid().n())
            .param("T", t_final)
            .param("dt", dt)
            .param("kappa_c", c.kappa_c)
            .param("seed", c.seed)
            .param("save_every", save_every);
        if let Some(p) = input {
            manifest.inputs.push(p.to_path_buf());
        }
        finish(dir, manifest, outputs, start)?;
    }
    emit(&summary)?;
    Ok(true)
}

fn cmd_laxcheck(
    traj_dir: &Path,
    lambdas: &[f64],
    ambient: Option<f64>,
    nu: f64,
    tolerance: f64,
    out: Option<&Path>,
    start: Instant,
) -> Result<bool> {
    let traj = FlowTrajectory::read_dir(traj_dir)?;
    let kappa = ambient.unwrap_or(traj.kappa_c);
    let rows = zero_curvature_residual(&traj, lambdas, nu, kappa)?;
    let worst = max_residual(&rows);
    let pass = worst < tolerance;
    if let Some(dir) = out {
        let p = dir.join("residual.json");
        write_json(&p, &rows)?;
        let mut manifest = RunManifest::new("laxcheck")
            .param("lambdas", lambdas)
            .param("nu", nu)
            .param("ambient_kappa", kappa)
            .param("tolerance", tolerance);
        manifest.inputs.push(traj_dir.to_path_buf());
        finish(dir, manifest, vec![p], start)?;
    }
    emit(&Verdict::new("laxcheck", traj.dims() + 1, Some(traj.grid().n()), worst, pass))?;
    Ok(pass)
}

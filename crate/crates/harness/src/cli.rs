use std::io::{self, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rfim_core::disagreement::{labeling, Fault, SolveOptions};
use rfim_core::disorder::sample_field;
use rfim_core::experiments::{ExperimentKind, ScaleMode};
use rfim_core::lattice::{BoxRegion, Sites};

use crate::config::{parse_seed, Overrides, RunConfig, DEFAULT_SEED, SEED_ENV};
use crate::error::{HarnessError, Result};
use crate::output;
use crate::verify::{run_verify, VerifyOptions};

#[derive(Debug, Parser)]
#[command(name = "rfim-lab", version, about = "Zero-temperature random-field Ising model experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one sample and print both ground states and the labeling.
    Gs(GsArgs),
    /// Probability that the origin is zero-labeled, and its decay rate.
    Mn(RunArgs),
    /// Geodesic length through the disagreement set.
    Geodesic(RunArgs),
    /// Annulus and rectangle crossing probabilities.
    Crossing(RunArgs),
    /// Exclusion of the two perturbation conditions under a global shift.
    Perturb(RunArgs),
    /// Common disagreement clusters reach the boundary under random shifts.
    Star(RunArgs),
    /// Common disagreement under an annulus shift.
    Annulus(RunArgs),
    /// Lattice animals of open coarse tiles.
    Animal(RunArgs),
    /// Reweighted versus direct estimates under a global shift.
    Ischeck(RunArgs),
    /// Run the acceptance suite at pinned seeds.
    Verify(VerifyArgs),
    /// Recompute the summary of a run directory and redraw its report.
    Report(ReportArgs),
}

fn seed_arg(s: &str) -> std::result::Result<u64, String> {
    parse_seed(s)
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (decimal or 0x-hex); defaults to $RFIM_LAB_SEED, then 0x00C0FFEE.
    #[arg(long, value_parser = seed_arg)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<u64>,
    /// Comma-separated disorder strengths.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Comma-separated system sizes.
    #[arg(long = "N", value_delimiter = ',')]
    pub n: Option<Vec<u32>>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory; defaults to results/<experiment>.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, value_parser = scale_mode)]
    pub scale_mode: Option<ScaleMode>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub alpha_prime: Option<f64>,
    /// Shift override for perturb, annulus and ischeck.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Upper end of the uniform shifts in star.
    #[arg(long)]
    pub shift_max: Option<f64>,
    #[arg(long)]
    pub aspect: Option<u32>,
    #[arg(long)]
    pub factor: Option<u32>,
    /// Coarse tile half-side for animal.
    #[arg(long)]
    pub n_prime: Option<u32>,
    /// Replace the disagreement set with the full box.
    #[arg(long)]
    pub diagnostic: bool,
    /// Record wall-clock time per sample (breaks byte-identical reruns).
    #[arg(long)]
    pub timing: bool,
    /// Flip one spin after every solve (negative control).
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

fn scale_mode(s: &str) -> std::result::Result<ScaleMode, String> {
    match s {
        "linear" => Ok(ScaleMode::Linear),
        "polynomial" => Ok(ScaleMode::Polynomial),
        _ => Err(format!("expected linear or polynomial, got {s:?}")),
    }
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            samples: self.samples,
            eps: self.eps.clone(),
            n: self.n.clone(),
            workers: self.workers,
            out: self.out.clone(),
            diagnostic: self.diagnostic,
            timing: self.timing,
            gamma: self.gamma,
            scale_mode: self.scale_mode,
            alpha: self.alpha,
            alpha_prime: self.alpha_prime,
            delta: self.delta,
            shift_max: self.shift_max,
            aspect: self.aspect,
            factor: self.factor,
            n_prime: self.n_prime,
        }
    }
}

#[derive(Debug, Args)]
pub struct GsArgs {
    #[arg(long = "N")]
    pub n: u32,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_parser = seed_arg)]
    pub seed: Option<u64>,
    /// Sample index under the master seed.
    #[arg(long, default_value_t = 0)]
    pub index: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = seed_arg)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Flip one spin after every solve (negative control).
    #[arg(long)]
    pub inject_fault: bool,
    /// Write verify.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory containing config.toml and records.jsonl.
    #[arg(long)]
    pub out: PathBuf,
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok().filter(|s| !s.trim().is_empty())
}

fn default_seed(flag: Option<u64>) -> Result<u64> {
    match (flag, env_seed()) {
        (Some(s), _) => Ok(s),
        (None, Some(s)) => parse_seed(&s).map_err(|e| HarnessError::Validation(format!("{SEED_ENV}: {e}"))),
        (None, None) => Ok(DEFAULT_SEED),
    }
}

fn kind_of(command: &Command) -> Option<(ExperimentKind, &RunArgs)> {
    Some(match command {
        Command::Mn(a) => (ExperimentKind::Mn, a),
        Command::Geodesic(a) => (ExperimentKind::Geodesic, a),
        Command::Crossing(a) => (ExperimentKind::Crossing, a),
        Command::Perturb(a) => (ExperimentKind::Perturb, a),
        Command::Star(a) => (ExperimentKind::Star, a),
        Command::Annulus(a) => (ExperimentKind::Annulus, a),
        Command::Animal(a) => (ExperimentKind::Animal, a),
        Command::Ischeck(a) => (ExperimentKind::IsCheck, a),
        _ => return None,
    })
}

pub fn execute(cli: Cli, out: &mut impl Write) -> Result<()> {
    let stdout = HarnessError::io("<stdout>");
    if let Some((kind, args)) = kind_of(&cli.command) {
        let config = RunConfig::resolve(kind, args.config.as_deref(), &args.overrides(), env_seed().as_deref())?;
        let solve = SolveOptions { fault: args.inject_fault.then_some(Fault::FlipOne), ..Default::default() };
        let outcome = output::run(&config, solve)?;
        writeln!(out, "{} records written to {}", outcome.records, outcome.dir.display()).map_err(stdout)?;
        return Ok(());
    }
    match cli.command {
        Command::Gs(a) => gs(&a, out),
        Command::Verify(a) => {
            let opts = VerifyOptions {
                seed: default_seed(a.seed)?,
                workers: a.workers.unwrap_or_else(crate::config::default_workers),
                fault: a.inject_fault,
            };
            if opts.workers == 0 {
                return Err(HarnessError::Validation("workers must be at least 1".into()));
            }
            let mut write_err = None;
            let report = run_verify(&opts, |c| {
                if let Err(e) = writeln!(out, "{}", c.line()).and_then(|_| out.flush()) {
                    write_err.get_or_insert(e);
                }
            });
            if let Some(e) = write_err {
                return Err(HarnessError::io("<stdout>")(e));
            }
            if let Some(dir) = a.out {
                std::fs::create_dir_all(&dir).map_err(HarnessError::io(&dir))?;
                let path = dir.join("verify.json");
                std::fs::write(&path, report.to_json()).map_err(HarnessError::io(&path))?;
            }
            let failed = report.failures();
            if failed > 0 {
                return Err(HarnessError::Verify { failed, total: report.criteria.len() });
            }
            Ok(())
        }
        Command::Report(a) => {
            let summary = output::rebuild(&a.out)?;
            writeln!(out, "summary of {} runs matches its records; report written to {}", summary.runs.len(), a.out.display())
                .map_err(stdout)
        }
        _ => unreachable!("experiment commands are handled above"),
    }
}

fn gs(a: &GsArgs, out: &mut impl Write) -> Result<()> {
    let seed = default_seed(a.seed)?;
    let region = BoxRegion::centered(a.n);
    let field = sample_field(&region, a.eps, seed, a.index)?;
    let sites = Arc::new(Sites::new(&region));
    let l = labeling(&field, &sites, SolveOptions::default())?;
    let io = |e: io::Error| HarnessError::io("<stdout>")(e);
    writeln!(out, "N = {}, eps = {}, seed = {seed:#x}, sample {}", a.n, a.eps, a.index).map_err(io)?;
    for (name, spins) in [("plus", &l.plus), ("minus", &l.minus)] {
        writeln!(out, "\n{name} boundary ground state (energy {:.6}):", spins.energy()).map_err(io)?;
        spins.dump(&mut *out).map_err(io)?;
    }
    writeln!(out, "\nlabels (+ both plus, - both minus, 0 disagree):").map_err(io)?;
    l.grid.dump(&mut *out).map_err(io)?;
    let zero = l.grid.labels().iter().filter(|x| matches!(x, rfim_core::disagreement::Label::Zero)).count();
    writeln!(out, "\n{zero} of {} sites disagree; tie: {}", sites.len(), l.tie).map_err(io)?;
    Ok(())
}

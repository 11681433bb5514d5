//! Monte Carlo drivers. Each experiment maps a sample index to one record per
//! system size, checking the per-sample invariants as it goes, and reduces an
//! ordered record stream to a summary.
//!
//! Records depend only on the parameters, the master seed and the sample
//! index, so summaries do not depend on the worker count.

mod animal;
mod annulus;
mod crossing;
mod geodesic;
mod ischeck;
mod mn;
mod perturb;
pub mod runner;
mod star;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::disagreement::{
    check_stability, disagreement_set, labeling, transitions, DisagreementSet, Labeling, SolveOptions,
};
use crate::disorder::{keyed, FieldSample};
use crate::error::{Error, Invariant, Result};
use crate::lattice::{BoxRegion, Region, Sites};
use crate::stats::{Proportion, Z95};

pub use animal::{AnimalReport, Independence};
pub use annulus::AnnulusReport;
pub use crossing::CrossingReport;
pub use ischeck::{IsReport, IsStatistic};
pub use mn::{DecayFit, DecayPoint, RateFit};
pub use perturb::ExclusionReport;
pub use star::StarReport;

pub use crate::percolation::{ExponentEstimate, GeodesicSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Probability that the origin is zero-labeled.
    Mn,
    /// Geodesic length through the disagreement set.
    Geodesic,
    /// Annulus and rectangle crossing probabilities.
    Crossing,
    /// Exclusion of the two perturbation conditions under a global shift.
    Perturb,
    /// Every common disagreement site reaches the boundary.
    Star,
    /// Common disagreement under an annulus shift.
    Annulus,
    /// Lattice animals of open coarse tiles.
    Animal,
    /// Change-of-measure identity.
    IsCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Mn,
        ExperimentKind::Geodesic,
        ExperimentKind::Crossing,
        ExperimentKind::Perturb,
        ExperimentKind::Star,
        ExperimentKind::Annulus,
        ExperimentKind::Animal,
        ExperimentKind::IsCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Mn => "mn",
            ExperimentKind::Geodesic => "geodesic",
            ExperimentKind::Crossing => "crossing",
            ExperimentKind::Perturb => "perturb",
            ExperimentKind::Star => "star",
            ExperimentKind::Annulus => "annulus",
            ExperimentKind::Animal => "animal",
            ExperimentKind::IsCheck => "ischeck",
        }
    }

    /// Salt mixed into the bootstrap seed so kinds sharing a master seed resample independently.
    fn salt(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown experiment kind {s:?}")))
    }
}

/// How `K` and `delta` are chosen in the exclusion experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// `K = N/4`, `delta = gamma/N`.
    #[default]
    Linear,
    /// `K = N^(alpha alpha')`, `delta = N^(-alpha alpha'^2)`.
    Polynomial,
}

pub const DEFAULT_ASPECT: u32 = 4;
pub const DEFAULT_FACTOR: u32 = 8;
pub const DEFAULT_ALPHA: f64 = 1.5;
pub const DEFAULT_ALPHA_PRIME: f64 = 0.9;
pub const DEFAULT_ISCHECK_DELTA: f64 = 0.25;
pub const DEFAULT_SHIFT_MAX: f64 = 1.0;
/// Companion boxes of coarse tiles have doubled side length.
pub const ANIMAL_FACTOR: u32 = 2;

/// Everything that determines the records of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub kind: ExperimentKind,
    /// System sizes in increasing order.
    pub n_list: Vec<u32>,
    pub epsilon: f64,
    pub samples: u64,
    pub master_seed: u64,
    pub gamma: f64,
    pub scale_mode: ScaleMode,
    pub alpha: f64,
    pub alpha_prime: f64,
    /// Shift override for `perturb`, `annulus` and `ischeck`.
    pub delta: Option<f64>,
    pub aspect: u32,
    pub factor: u32,
    pub n_prime: u32,
    /// Upper end of the uniform shifts in `star`.
    pub shift_max: f64,
    /// Replace the disagreement set by the full box (or all tiles open).
    pub diagnostic: bool,
    /// Attach wall-clock time to records; makes runs non-reproducible byte-wise.
    pub timing: bool,
}

impl ExperimentParams {
    pub fn new(kind: ExperimentKind, n_list: Vec<u32>, epsilon: f64, samples: u64, master_seed: u64) -> Self {
        Self {
            kind,
            n_list,
            epsilon,
            samples,
            master_seed,
            gamma: crate::disorder::DEFAULT_GAMMA,
            scale_mode: ScaleMode::Linear,
            alpha: DEFAULT_ALPHA,
            alpha_prime: DEFAULT_ALPHA_PRIME,
            delta: None,
            aspect: DEFAULT_ASPECT,
            factor: DEFAULT_FACTOR,
            n_prime: 2,
            shift_max: DEFAULT_SHIFT_MAX,
            diagnostic: false,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.n_list.is_empty() {
            return bad("at least one N is required".into());
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("N values must be strictly increasing, got {:?}", self.n_list));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        let pow2 = |what: &str, min: u32| -> Result<()> {
            for &n in &self.n_list {
                if !n.is_power_of_two() || n < min {
                    return Err(Error::Parameter(format!(
                        "{what} needs N to be a power of two >= {min}, got {n}"
                    )));
                }
            }
            Ok(())
        };
        match self.kind {
            ExperimentKind::Mn => {
                if self.samples < 100 {
                    return bad(format!("mn needs at least 100 samples, got {}", self.samples));
                }
                if let Some(&n) = self.n_list.last() {
                    if n > 4096 {
                        return bad(format!("N = {n} is beyond the supported range"));
                    }
                }
            }
            ExperimentKind::Geodesic => pow2("geodesic", 16)?,
            ExperimentKind::Crossing => {
                pow2("crossing", 32)?;
                if self.aspect == 0 || self.factor == 0 {
                    return bad("aspect and factor must be positive".into());
                }
            }
            ExperimentKind::Perturb => {
                pow2("perturb", 4)?;
                match self.scale_mode {
                    ScaleMode::Linear if !(self.gamma > 0.0) => {
                        return bad(format!("gamma must be positive, got {}", self.gamma))
                    }
                    ScaleMode::Polynomial => crate::disorder::check_exponents(self.alpha, self.alpha_prime)?,
                    _ => {}
                }
                if let Some(d) = self.delta {
                    if !(d > 0.0 && d.is_finite()) {
                        return bad(format!("delta must be positive, got {d}"));
                    }
                }
            }
            ExperimentKind::Star => {
                pow2("star", 1)?;
                if !(self.shift_max >= 0.0 && self.shift_max.is_finite()) {
                    return bad(format!("shift_max must be nonnegative, got {}", self.shift_max));
                }
            }
            ExperimentKind::Annulus => {
                pow2("annulus", 32)?;
                match self.delta {
                    Some(d) if !(d >= 0.0 && d.is_finite()) => {
                        return bad(format!("delta must be nonnegative, got {d}"))
                    }
                    Some(_) => {}
                    None => crate::disorder::check_exponents(self.alpha, self.alpha_prime)?,
                }
            }
            ExperimentKind::Animal => {
                if !self.n_prime.is_power_of_two() {
                    return bad(format!("N' = {} must be a power of two", self.n_prime));
                }
                for &n in &self.n_list {
                    crate::percolation::coarse_grid(n, self.n_prime)?;
                }
            }
            ExperimentKind::IsCheck => {
                if let Some(d) = self.delta {
                    if !(d > 0.0 && d.is_finite()) {
                        return bad(format!("delta must be positive, got {d}"));
                    }
                }
                if self.n_list.iter().any(|&n| n > 64) {
                    return bad("ischeck weights degenerate beyond N = 64".into());
                }
            }
        }
        Ok(())
    }

    pub fn max_n(&self) -> u32 {
        self.n_list.last().copied().unwrap_or(0)
    }

    fn bootstrap_seed(&self) -> u64 {
        keyed::mix64(self.master_seed ^ keyed::mix64(self.kind.salt()))
    }
}

/// One sample at one system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub kind: ExperimentKind,
    #[serde(rename = "N")]
    pub n: u32,
    pub epsilon: f64,
    pub master_seed: u64,
    pub sample_index: u64,
    pub scalars: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub tie: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

impl ExperimentRecord {
    fn new(params: &ExperimentParams, n: u32, sample_index: u64) -> Self {
        Self {
            kind: params.kind,
            n,
            epsilon: params.epsilon,
            master_seed: params.master_seed,
            sample_index,
            scalars: BTreeMap::new(),
            flags: BTreeMap::new(),
            tie: false,
            wall_time: None,
        }
    }

    fn scalar(mut self, name: &str, value: f64) -> Self {
        self.scalars.insert(name.to_string(), value);
        self
    }

    fn flag(mut self, name: &str, value: bool) -> Self {
        self.flags.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).copied()
    }

    pub fn is(&self, name: &str) -> bool {
        self.flags.get(name).copied().unwrap_or(false)
    }
}

/// Per-kind aggregate of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Summary {
    Mn(DecayFit),
    Geodesic(ExponentEstimate),
    Crossing { per_n: Vec<CrossingReport> },
    Perturb { per_n: Vec<ExclusionReport> },
    Star { per_n: Vec<StarReport> },
    Annulus { per_n: Vec<AnnulusReport> },
    Animal { per_n: Vec<AnimalReport> },
    IsCheck { per_n: Vec<IsReport> },
}

/// Binomial estimate with its Wald standard error and 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionSummary {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl From<Proportion> for ProportionSummary {
    fn from(p: Proportion) -> Self {
        let (ci_low, ci_high) = p.interval(Z95);
        Self { successes: p.successes, trials: p.trials, estimate: p.estimate(), se: p.se(), ci_low, ci_high }
    }
}

/// Solver configuration that does not affect the records of a correct run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    pub solve: SolveOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 1, solve: SolveOptions::default() }
    }
}

/// Labels of one field on one region, after the inline checks.
struct Audited {
    labeling: Labeling,
    c: DisagreementSet,
    components: usize,
}

/// Solve, then check the monotone coupling (inside `labeling`) and the
/// stability inequality for every zero cluster.
fn audited(field: &FieldSample, sites: &Arc<Sites>, solve: SolveOptions) -> Result<Audited> {
    let labeling = labeling(field, sites, solve)?;
    let components = check_stability(field, &labeling.grid)?;
    let c = disagreement_set(&labeling.grid);
    Ok(Audited { labeling, c, components })
}

/// An upward shift may only move labels up.
fn check_raise(before: &Audited, after: &Audited) -> Result<()> {
    let t = transitions(&before.labeling.grid, &after.labeling.grid)?;
    if t.is_monotone_up() {
        Ok(())
    } else {
        Err(Error::violation(Invariant::ShiftMonotonicity, format!("a positive shift lowered some labels: {:?}", t.0)))
    }
}

fn box_sites(n: u32) -> Arc<Sites> {
    Arc::new(Sites::new(&BoxRegion::centered(n)))
}

/// Per-run precomputation shared by all workers.
enum Prepared {
    Mn(mn::Prep),
    Geodesic(geodesic::Prep),
    Crossing(crossing::Prep),
    Perturb(perturb::Prep),
    Star(star::Prep),
    Annulus(annulus::Prep),
    Animal(animal::Prep),
    IsCheck(ischeck::Prep),
}

impl Prepared {
    fn new(params: &ExperimentParams) -> Result<Self> {
        Ok(match params.kind {
            ExperimentKind::Mn => Prepared::Mn(mn::Prep::new(params)),
            ExperimentKind::Geodesic => Prepared::Geodesic(geodesic::Prep::new(params)),
            ExperimentKind::Crossing => Prepared::Crossing(crossing::Prep::new(params)?),
            ExperimentKind::Perturb => Prepared::Perturb(perturb::Prep::new(params)?),
            ExperimentKind::Star => Prepared::Star(star::Prep::new(params)),
            ExperimentKind::Annulus => Prepared::Annulus(annulus::Prep::new(params)?),
            ExperimentKind::Animal => Prepared::Animal(animal::Prep::new(params)?),
            ExperimentKind::IsCheck => Prepared::IsCheck(ischeck::Prep::new(params)),
        })
    }

    fn sample(&self, params: &ExperimentParams, solve: SolveOptions, index: u64) -> Result<Vec<ExperimentRecord>> {
        match self {
            Prepared::Mn(p) => p.sample(params, solve, index),
            Prepared::Geodesic(p) => p.sample(params, solve, index),
            Prepared::Crossing(p) => p.sample(params, solve, index),
            Prepared::Perturb(p) => p.sample(params, solve, index),
            Prepared::Star(p) => p.sample(params, solve, index),
            Prepared::Annulus(p) => p.sample(params, solve, index),
            Prepared::Animal(p) => p.sample(params, solve, index),
            Prepared::IsCheck(p) => p.sample(params, solve, index),
        }
    }
}

/// Run every sample, streaming records to `sink` in sample order, and return
/// all records. Stops at the first error; records already passed to `sink`
/// stay valid.
pub fn run_records<E: From<Error>>(
    params: &ExperimentParams,
    options: RunOptions,
    mut sink: impl FnMut(&ExperimentRecord) -> std::result::Result<(), E>,
) -> std::result::Result<Vec<ExperimentRecord>, E> {
    params.validate()?;
    let prepared = Prepared::new(params)?;
    let mut all = Vec::new();
    runner::ordered_map(
        params.samples,
        options.workers,
        |i| {
            let start = params.timing.then(Instant::now);
            let mut records = prepared.sample(params, options.solve, i)?;
            if let Some(start) = start {
                let t = start.elapsed().as_secs_f64();
                for r in &mut records {
                    r.wall_time = Some(t);
                }
            }
            Ok(records)
        },
        |_, records| -> std::result::Result<(), E> {
            for r in &records {
                sink(r)?;
            }
            all.extend(records);
            Ok(())
        },
    )?;
    Ok(all)
}

/// Reduce records (in sample order) to the run summary.
pub fn summarize(params: &ExperimentParams, records: &[ExperimentRecord]) -> Result<Summary> {
    params.validate()?;
    for r in records {
        if r.kind != params.kind || !params.n_list.contains(&r.n) {
            return Err(Error::Precondition(format!(
                "record for {} at N = {} does not belong to this run",
                r.kind, r.n
            )));
        }
    }
    let per_n = |n: u32| records.iter().filter(move |r| r.n == n);
    Ok(match params.kind {
        ExperimentKind::Mn => Summary::Mn(mn::summarize(params, records)?),
        ExperimentKind::Geodesic => Summary::Geodesic(geodesic::summarize(params, records)?),
        ExperimentKind::Crossing => Summary::Crossing {
            per_n: params.n_list.iter().map(|&n| crossing::summarize(params, n, per_n(n))).collect(),
        },
        ExperimentKind::Perturb => Summary::Perturb {
            per_n: params.n_list.iter().map(|&n| perturb::summarize(params, n, per_n(n))).collect::<Result<_>>()?,
        },
        ExperimentKind::Star => Summary::Star {
            per_n: params.n_list.iter().map(|&n| star::summarize(params, n, per_n(n))).collect(),
        },
        ExperimentKind::Annulus => Summary::Annulus {
            per_n: params.n_list.iter().map(|&n| annulus::summarize(params, n, per_n(n))).collect::<Result<_>>()?,
        },
        ExperimentKind::Animal => Summary::Animal {
            per_n: params.n_list.iter().map(|&n| animal::summarize(params, n, per_n(n))).collect::<Result<_>>()?,
        },
        ExperimentKind::IsCheck => Summary::IsCheck {
            per_n: params.n_list.iter().map(|&n| ischeck::summarize(params, n, per_n(n))).collect::<Result<_>>()?,
        },
    })
}

/// Records and summary of a complete run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub records: Vec<ExperimentRecord>,
    pub summary: Summary,
}

pub fn run(params: &ExperimentParams, options: RunOptions) -> Result<Outcome> {
    let records = run_records::<Error>(params, options, |_| Ok(()))?;
    let summary = summarize(params, &records)?;
    Ok(Outcome { records, summary })
}

fn workers_available() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run_default(params: &ExperimentParams) -> Result<Summary> {
    Ok(run(params, RunOptions { workers: workers_available(), ..Default::default() })?.summary)
}

/// `m_N` for each `N`, with the exponential decay fit.
pub fn estimate_mn(n_list: &[u32], epsilon: f64, samples: u64, master_seed: u64) -> Result<DecayFit> {
    let p = ExperimentParams::new(ExperimentKind::Mn, n_list.to_vec(), epsilon, samples, master_seed);
    match run_default(&p)? {
        Summary::Mn(fit) => Ok(fit),
        _ => unreachable!("mn runs summarize to a decay fit"),
    }
}

/// Median geodesic growth exponent.
pub fn estimate_geodesic_exponent(
    n_list: &[u32],
    epsilon: f64,
    samples: u64,
    master_seed: u64,
) -> Result<ExponentEstimate> {
    let p = ExperimentParams::new(ExperimentKind::Geodesic, n_list.to_vec(), epsilon, samples, master_seed);
    match run_default(&p)? {
        Summary::Geodesic(e) => Ok(e),
        _ => unreachable!("geodesic runs summarize to an exponent estimate"),
    }
}

fn single<T>(per_n: Vec<T>) -> T {
    per_n.into_iter().next().expect("one N per run")
}

pub fn estimate_crossing_bounds(n: u32, epsilon: f64, samples: u64, master_seed: u64) -> Result<CrossingReport> {
    let p = ExperimentParams::new(ExperimentKind::Crossing, vec![n], epsilon, samples, master_seed);
    match run_default(&p)? {
        Summary::Crossing { per_n } => Ok(single(per_n)),
        _ => unreachable!(),
    }
}

/// Exclusion counts with `K = N/4`, `delta = gamma/N`.
pub fn check_perturbation_exclusion(
    n: u32,
    epsilon: f64,
    gamma: f64,
    samples: u64,
    master_seed: u64,
) -> Result<ExclusionReport> {
    let mut p = ExperimentParams::new(ExperimentKind::Perturb, vec![n], epsilon, samples, master_seed);
    p.gamma = gamma;
    match run_default(&p)? {
        Summary::Perturb { per_n } => Ok(single(per_n)),
        _ => unreachable!(),
    }
}

/// Uniform shifts on `[0, shift_max)`.
pub fn check_star_percolation(
    n: u32,
    epsilon: f64,
    shift_max: f64,
    samples: u64,
    master_seed: u64,
) -> Result<StarReport> {
    let mut p = ExperimentParams::new(ExperimentKind::Star, vec![n], epsilon, samples, master_seed);
    p.shift_max = shift_max;
    match run_default(&p)? {
        Summary::Star { per_n } => Ok(single(per_n)),
        _ => unreachable!(),
    }
}

pub fn importance_sampling_check(
    n: u32,
    epsilon: f64,
    delta: f64,
    samples: u64,
    master_seed: u64,
) -> Result<IsReport> {
    let mut p = ExperimentParams::new(ExperimentKind::IsCheck, vec![n], epsilon, samples, master_seed);
    p.delta = Some(delta);
    match run_default(&p)? {
        Summary::IsCheck { per_n } => Ok(single(per_n)),
        _ => unreachable!(),
    }
}

pub fn annulus_mstar_experiment(
    n: u32,
    epsilon: f64,
    alpha: f64,
    alpha_prime: f64,
    samples: u64,
    master_seed: u64,
) -> Result<AnnulusReport> {
    let mut p = ExperimentParams::new(ExperimentKind::Annulus, vec![n], epsilon, samples, master_seed);
    p.alpha = alpha;
    p.alpha_prime = alpha_prime;
    match run_default(&p)? {
        Summary::Annulus { per_n } => Ok(single(per_n)),
        _ => unreachable!(),
    }
}

pub fn coarse_percolation_experiment(
    n: u32,
    n_prime: u32,
    epsilon: f64,
    samples: u64,
    master_seed: u64,
) -> Result<AnimalReport> {
    let mut p = ExperimentParams::new(ExperimentKind::Animal, vec![n], epsilon, samples, master_seed);
    p.n_prime = n_prime;
    match run_default(&p)? {
        Summary::Animal { per_n } => Ok(single(per_n)),
        _ => unreachable!(),
    }
}

/// Size of `c` inside `region`, for records.
fn count_in(c: &DisagreementSet, region: &impl Region) -> f64 {
    c.count_in(region) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert!("bogus".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn validation() {
        let ok = ExperimentParams::new(ExperimentKind::Mn, vec![0, 4], 1.0, 100, 1);
        ok.validate().unwrap();
        let mut p = ok.clone();
        p.samples = 0;
        assert!(p.validate().is_err());
        p = ok.clone();
        p.samples = 99;
        assert!(p.validate().is_err());
        p = ok.clone();
        p.n_list = vec![4, 4];
        assert!(p.validate().is_err());
        p = ok.clone();
        p.epsilon = 0.0;
        assert!(p.validate().is_err());
        p = ExperimentParams::new(ExperimentKind::Crossing, vec![16], 1.0, 10, 1);
        assert!(p.validate().is_err());
        p.n_list = vec![32];
        p.validate().unwrap();
        p = ExperimentParams::new(ExperimentKind::Geodesic, vec![8], 1.0, 10, 1);
        assert!(p.validate().is_err());
        p = ExperimentParams::new(ExperimentKind::Animal, vec![8], 1.0, 10, 1);
        p.n_prime = 16;
        assert!(p.validate().is_err());
    }

    #[test]
    fn records_serialize_with_stable_names() {
        let p = ExperimentParams::new(ExperimentKind::Mn, vec![0], 4.0, 100, 9);
        let r = ExperimentRecord::new(&p, 0, 3).flag("origin_zero", true).scalar("size", 1.0);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"mn","N":0,"epsilon":4.0,"master_seed":9,"sample_index":3,"scalars":{"size":1.0},"flags":{"origin_zero":true},"tie":false}"#
        );
        let back: ExperimentRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        for kind in ExperimentKind::ALL {
            let n = match kind {
                ExperimentKind::Mn => vec![0, 2, 4],
                ExperimentKind::Geodesic => vec![16],
                ExperimentKind::Crossing | ExperimentKind::Annulus => vec![32],
                ExperimentKind::Animal => vec![8],
                _ => vec![4],
            };
            let samples = if kind == ExperimentKind::Mn { 100 } else { 12 };
            let mut p = ExperimentParams::new(kind, n, 1.0, samples, 77);
            p.delta = (kind == ExperimentKind::IsCheck).then_some(0.25);
            let one = run(&p, RunOptions { workers: 1, ..Default::default() }).unwrap();
            let many = run(&p, RunOptions { workers: 3, ..Default::default() }).unwrap();
            assert_eq!(one.records, many.records, "{kind}");
            assert_eq!(
                serde_json::to_string(&one.summary).unwrap(),
                serde_json::to_string(&many.summary).unwrap(),
                "{kind}"
            );
        }
    }

    #[test]
    fn injected_fault_fails_loudly() {
        let p = ExperimentParams::new(ExperimentKind::Mn, vec![2], 1.0, 100, 5);
        let options = RunOptions {
            workers: 2,
            solve: SolveOptions { fault: Some(crate::disagreement::Fault::FlipOne), ..Default::default() },
        };
        let mut seen = 0;
        let err = run_records::<Error>(&p, options, |_| {
            seen += 1;
            Ok(())
        })
        .unwrap_err();
        assert!(err.is_invariant_violation());
        assert_eq!(seen, 0);
    }

    #[test]
    fn timing_is_opt_in() {
        let mut p = ExperimentParams::new(ExperimentKind::Mn, vec![0], 1.0, 100, 5);
        let plain = run(&p, RunOptions::default()).unwrap();
        assert!(plain.records.iter().all(|r| r.wall_time.is_none()));
        p.timing = true;
        let timed = run(&p, RunOptions::default()).unwrap();
        assert!(timed.records.iter().all(|r| r.wall_time.is_some()));
    }
}

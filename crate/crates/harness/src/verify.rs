//! The acceptance suite: twelve checks at pinned seeds, each reported as PASS or FAIL.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rfim_core::disagreement::{labeling, Backend, Fault, SolveOptions};
use rfim_core::disorder::keyed::mix64;
use rfim_core::disorder::{sample_field, FIXED_SCALE};
use rfim_core::experiments::{
    run_records, summarize, ExperimentKind, ExperimentParams, ExperimentRecord, RunOptions, Summary,
};
use rfim_core::groundstate::{ground_state_bruteforce, hamiltonian, solve, Boundary};
use rfim_core::lattice::{ring, AnnulusRegion, BoxRegion, Region, Sites, Vertex, VertexSet, ORIGIN};
use rfim_core::percolation::{cross_hard, has_winding_cycle};
use rfim_core::{Error, Invariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{default_workers, DEFAULT_SEED};

/// `erf(1/sqrt 2)`: the probability that a standard normal lies in `(-1, 1)`.
pub const ERF_INV_SQRT2: f64 = 0.682_689_492_137_085_9;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub workers: usize,
    /// Flip one spin after every solve; the coupling criterion must then fail.
    pub fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, workers: default_workers(), fault: false }
    }
}

impl VerifyOptions {
    fn solve(&self) -> SolveOptions {
        SolveOptions { fault: self.fault.then_some(Fault::FlipOne), ..Default::default() }
    }

    fn seed_for(&self, id: u8) -> u64 {
        mix64(self.seed ^ mix64(u64::from(id)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Wall-clock time; kept out of the serialized report so it stays reproducible.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "{} {:>2} {:<28} {:>8.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub fault: bool,
    pub criteria: Vec<Criterion>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.criteria.iter().filter(|c| !c.passed).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}

/// One experiment run inside the suite; coupling and stability are checked on
/// every sample of every run, so those criteria aggregate over this log.
struct SuiteRun {
    name: String,
    samples: u64,
    components: u64,
    error: Option<Error>,
}

#[derive(Default)]
struct Log {
    runs: Vec<SuiteRun>,
}

impl Log {
    fn run(&mut self, name: &str, params: &ExperimentParams, opts: &VerifyOptions) -> Result<(Vec<ExperimentRecord>, Summary), String> {
        let options = RunOptions { workers: opts.workers, solve: opts.solve() };
        let mut samples = std::collections::BTreeSet::new();
        let mut components = 0.0;
        let result = run_records::<Error>(params, options, |r| {
            samples.insert((r.sample_index, r.n));
            components += r.get("stability_components").unwrap_or(0.0);
            Ok(())
        })
        .and_then(|records| Ok((summarize(params, &records)?, records)));
        let error = result.as_ref().err().cloned();
        self.runs.push(SuiteRun {
            name: name.to_owned(),
            samples: samples.len() as u64,
            components: components as u64,
            error,
        });
        result.map(|(s, r)| (r, s)).map_err(|e| format!("{name}: {e}"))
    }

    fn aggregate(&self, kind: Invariant) -> (bool, String) {
        let samples: u64 = self.runs.iter().map(|r| r.samples).sum();
        let hits: Vec<&SuiteRun> = self.runs.iter().filter(|r| r.error.as_ref().and_then(Error::invariant) == Some(kind)).collect();
        let aborted: Vec<&str> = self.runs.iter().filter(|r| r.error.is_some()).map(|r| r.name.as_str()).collect();
        if let Some(first) = hits.first() {
            return (false, format!("{} violated in {}: {}", kind, first.name, first.error.as_ref().unwrap()));
        }
        if !aborted.is_empty() {
            return (false, format!("runs aborted before every sample was checked: {}", aborted.join(", ")));
        }
        (samples > 0, format!("{} runs, {samples} size-samples checked", self.runs.len()))
    }
}

fn params(kind: ExperimentKind, n: &[u32], eps: f64, samples: u64, seed: u64) -> ExperimentParams {
    ExperimentParams::new(kind, n.to_vec(), eps, samples, seed)
}

fn c1_oracle(opts: &VerifyOptions, log: &mut Log) -> (bool, String) {
    let region = BoxRegion::centered(1);
    let sites = Arc::new(Sites::new(&region));
    let seed = opts.seed_for(1);
    let (mut compared, mut mismatches) = (0u64, Vec::new());
    let mut error = None;
    let brute = SolveOptions { backend: Backend::BruteForce, fault: None };
    'outer: for eps in [0.5, 1.0, 4.0] {
        for index in 0..200 {
            let step = || -> rfim_core::Result<Option<String>> {
                let field = sample_field(&region, eps, seed, index)?;
                for bc in [Boundary::Plus, Boundary::Minus] {
                    let cut = solve(&field, &region, bc)?;
                    let exact = ground_state_bruteforce(&field, &region, bc)?;
                    let (e_cut, e_exact) = (hamiltonian(&cut.minimal, &field)?, hamiltonian(&exact, &field)?);
                    if cut.maximal.spins() != exact.spins() || (e_cut - e_exact).abs() > 1e-9 * e_exact.abs().max(1.0) {
                        return Ok(Some(format!("eps {eps}, sample {index}, {bc} boundary")));
                    }
                }
                let a = labeling(&field, &sites, opts.solve())?;
                let b = labeling(&field, &sites, brute)?;
                Ok((a.grid != b.grid).then(|| format!("eps {eps}, sample {index}: labelings differ")))
            };
            match step() {
                Ok(None) => compared += 1,
                Ok(Some(m)) => mismatches.push(m),
                Err(e) => {
                    error = Some(e);
                    break 'outer;
                }
            }
        }
    }
    log.runs.push(SuiteRun { name: "oracle".into(), samples: compared, components: 0, error: error.clone() });
    match (error, mismatches.first()) {
        (Some(e), _) => (false, format!("oracle: {e}")),
        (None, Some(m)) => (false, format!("{} mismatches, first at {m}", mismatches.len())),
        (None, None) => (compared == 600, format!("{compared}/600 fields agree in spins, energy and labels")),
    }
}

fn c3_domain(opts: &VerifyOptions, log: &mut Log) -> (bool, String) {
    let p = params(ExperimentKind::Mn, &[4, 8, 16], 1.0, 300, opts.seed_for(3));
    match log.run("domain monotonicity", &p, opts) {
        Ok(_) => (true, "300/300 samples nested for N in {4, 8, 16}".into()),
        Err(e) => (false, e),
    }
}

fn c4_single_site(opts: &VerifyOptions, log: &mut Log) -> (bool, String) {
    let seed = opts.seed_for(4);
    let p = params(ExperimentKind::Mn, &[0], 4.0, 10_000, seed);
    let start = Instant::now();
    let (records, summary) = match log.run("single site", &p, opts) {
        Ok(x) => x,
        Err(e) => return (false, e),
    };
    let elapsed = start.elapsed();
    let threshold = (4.0 * FIXED_SCALE) as i64;
    let mut wrong = 0;
    for r in &records {
        let field = sample_field(&BoxRegion::centered(0), 4.0, seed, r.sample_index).and_then(|f| f.fixed_at(0));
        match field {
            Ok(h) if (h.abs() < threshold) == r.is("origin_zero") => {}
            _ => wrong += 1,
        }
    }
    let Summary::Mn(fit) = summary else { unreachable!() };
    let m = fit.points[0].m_hat;
    let z = (m.estimate - ERF_INV_SQRT2) / m.se;
    let passed = wrong == 0 && z.abs() <= 3.0 && elapsed < Duration::from_secs(10);
    (
        passed,
        format!(
            "m0 = {:.4} +/- {:.4} vs {ERF_INV_SQRT2:.4} (z = {z:.2}); {wrong} samples contradict |h_o| < 4; run {:.2}s",
            m.estimate,
            m.se,
            elapsed.as_secs_f64()
        ),
    )
}

fn c5_exclusion(opts: &VerifyOptions, log: &mut Log) -> (bool, String) {
    let mut parts = Vec::new();
    let mut passed = true;
    for eps in [0.5, 1.0] {
        let mut p = params(ExperimentKind::Perturb, &[16], eps, 500, opts.seed_for(5));
        p.gamma = 100.0;
        match log.run(&format!("exclusion eps {eps}"), &p, opts) {
            Ok((_, Summary::Perturb { per_n })) => {
                let r = &per_n[0];
                passed &= r.both == 0;
                parts.push(format!(
                    "eps {eps}: both {} (neither {}, a only {}, b only {})",
                    r.both, r.neither, r.only_a, r.only_b
                ));
            }
            Ok(_) => unreachable!(),
            Err(e) => {
                passed = false;
                parts.push(e);
            }
        }
    }
    (passed, parts.join("; "))
}

fn c6_percolation(opts: &VerifyOptions, log: &mut Log) -> (bool, String) {
    let p = params(ExperimentKind::Star, &[16], 1.0, 200, opts.seed_for(6));
    match log.run("percolation", &p, opts) {
        Ok((_, Summary::Star { per_n })) => {
            let r = &per_n[0];
            (
                r.violations == 0,
                format!("{} clusters in {} nonempty C_* samples all reach the boundary", r.components_checked, r.c_star_nonempty),
            )
        }
        Ok(_) => unreachable!(),
        Err(e) => (false, e),
    }
}

fn c8_change_of_measure(opts: &VerifyOptions, log: &mut Log) -> (bool, String) {
    let mut p = params(ExperimentKind::IsCheck, &[8], 1.0, 5000, opts.seed_for(8));
    p.delta = Some(0.25);
    match log.run("change of measure", &p, opts) {
        Ok((_, Summary::IsCheck { per_n })) => {
            let r = &per_n[0];
            let s = r.statistics.iter().find(|s| s.name == "origin_zero").expect("origin statistic");
            (
                s.agree && r.weight_agree,
                format!(
                    "P(zero) direct {:.4} vs reweighted {:.4} (z = {:.2}); mean weight {:.4} +/- {:.4} (z = {:.2})",
                    s.direct_mean, s.reweighted_mean, s.z, r.weight_mean, r.weight_se, r.weight_z
                ),
            )
        }
        Ok(_) => unreachable!(),
        Err(e) => (false, e),
    }
}

/// Outcome of comparing the hard crossing with the winding-cycle oracle.
#[derive(Debug, Clone, Default)]
pub struct DualityCheck {
    pub evaluations: u64,
    pub mismatches: Vec<String>,
}

fn subset(sites: &[Vertex], mask: u64) -> impl Iterator<Item = Vertex> + '_ {
    sites.iter().enumerate().filter(move |(i, _)| mask >> i & 1 == 1).map(|(_, &v)| v)
}

/// Every subset of the single ring `Lambda_{r+1} \ Lambda_r`.
pub fn duality_one_ring(r: u32) -> DualityCheck {
    let ann = AnnulusRegion::centered(r + 1, r).expect("valid annulus");
    let sites: Vec<Vertex> = ring(ORIGIN, r + 1).iter().collect();
    let mut out = DualityCheck::default();
    for mask in 0..1u64 << sites.len() {
        let c: VertexSet = subset(&sites, mask).collect();
        out.evaluations += 1;
        if cross_hard(&ann, &c) != has_winding_cycle(&ann, &c) {
            out.mismatches.push(format!("{mask:#x}"));
        }
    }
    out
}

/// All `2^(|inner ring| + |outer ring|)` subsets of `Lambda_{r+2} \ Lambda_r`.
///
/// Both predicates are increasing in `C`. Fix the inner-ring part `S`. An
/// 8-connected complement path from the hole to the outside must step from an
/// inner site outside `S` to an 8-adjacent outer site outside `C`, so the hard
/// crossing holds exactly when `C` contains `T(S)`, the outer sites 8-adjacent
/// to the inner ring minus `S`. Checking both predicates true at `S + T(S)` and
/// false at `S + (outer ring - w)` for each `w` in `T(S)` therefore decides
/// agreement on every outer-ring completion of `S`.
pub fn duality_two_rings(r: u32) -> DualityCheck {
    let ann = AnnulusRegion::centered(r + 2, r).expect("valid annulus");
    let inner: Vec<Vertex> = ring(ORIGIN, r + 1).iter().collect();
    let outer: Vec<Vertex> = ring(ORIGIN, r + 2).iter().collect();
    let mut out = DualityCheck::default();
    let mut check = |c: &VertexSet, expect: bool, what: &str, mask: u64| {
        out.evaluations += 1;
        let (hard, winding) = (cross_hard(&ann, c), has_winding_cycle(&ann, c));
        if hard != expect || winding != expect {
            out.mismatches.push(format!("{what} for inner mask {mask:#x}: hard {hard}, winding {winding}"));
        }
    };
    for mask in 0..1u64 << inner.len() {
        let s: Vec<Vertex> = subset(&inner, mask).collect();
        let open: Vec<Vertex> = subset(&inner, !mask).collect();
        let t: Vec<Vertex> = outer.iter().copied().filter(|w| open.iter().any(|u| u.linf(*w) == 1)).collect();
        let least: VertexSet = s.iter().chain(&t).copied().collect();
        check(&least, true, "least completion", mask);
        for w in &t {
            let most: VertexSet = s.iter().chain(outer.iter().filter(|x| *x != w)).copied().collect();
            check(&most, false, "largest completion missing one blocker", mask);
        }
    }
    out
}

/// Uniform random subsets of `Lambda_{r+2} \ Lambda_r` against the closed form.
pub fn duality_random(r: u32, count: u64, seed: u64) -> DualityCheck {
    let ann = AnnulusRegion::centered(r + 2, r).expect("valid annulus");
    let inner: Vec<Vertex> = ring(ORIGIN, r + 1).iter().collect();
    let outer: Vec<Vertex> = ring(ORIGIN, r + 2).iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DualityCheck::default();
    for k in 0..count {
        let c: VertexSet = inner.iter().chain(&outer).copied().filter(|_| rng.random_bool(0.75)).collect();
        let blocked = !inner
            .iter()
            .filter(|u| !c.contains(**u))
            .any(|u| outer.iter().any(|w| !c.contains(*w) && u.linf(*w) == 1));
        out.evaluations += 1;
        let (hard, winding) = (cross_hard(&ann, &c), has_winding_cycle(&ann, &c));
        if hard != blocked || winding != blocked {
            out.mismatches.push(format!("random subset {k}: closed form {blocked}, hard {hard}, winding {winding}"));
        }
    }
    out
}

fn c9_duality(opts: &VerifyOptions) -> (bool, String) {
    let start = Instant::now();
    let one = duality_one_ring(1);
    let two = duality_two_rings(1);
    let random = duality_random(1, 100_000, opts.seed_for(9));
    let elapsed = start.elapsed();
    let mismatches: Vec<&String> = one.mismatches.iter().chain(&two.mismatches).chain(&random.mismatches).collect();
    let detail = format!(
        "{} subsets of the 16-site ring, 2^40 subsets of the 40-site annulus via {} evaluations, {} random subsets; {} mismatches{}",
        one.evaluations,
        two.evaluations,
        random.evaluations,
        mismatches.len(),
        mismatches.first().map(|m| format!(" (first: {m})")).unwrap_or_default()
    );
    (mismatches.is_empty() && elapsed < Duration::from_secs(120), detail)
}

fn c10_decay(opts: &VerifyOptions, log: &mut Log) -> (bool, String) {
    let p = params(ExperimentKind::Mn, &[4, 8, 16, 32], 2.0, 4000, opts.seed_for(10));
    match log.run("decay", &p, opts) {
        Ok((_, Summary::Mn(fit))) => {
            let m: Vec<String> = fit.points.iter().map(|p| format!("{}:{:.4}", p.n, p.m_hat.estimate)).collect();
            let (passed, rate) = match &fit.rate {
                Some(r) => (
                    r.c_low.is_some_and(|lo| lo > 0.0),
                    format!(
                        "c = {:.4} (95% CI {}, {})",
                        r.c_hat,
                        r.c_low.map_or("none".into(), |x| format!("{x:.4}")),
                        r.c_high.map_or("none".into(), |x| format!("{x:.4}"))
                    ),
                ),
                None => (false, "no rate fit".into()),
            };
            (
                passed && fit.strictly_decreasing,
                format!("m_N {}; strictly decreasing {}; {rate}", m.join(" "), fit.strictly_decreasing),
            )
        }
        Ok(_) => unreachable!(),
        Err(e) => (false, e),
    }
}

fn c11_geodesic(opts: &VerifyOptions, log: &mut Log) -> (bool, String) {
    let p = params(ExperimentKind::Geodesic, &[16, 32, 64], 0.5, 500, opts.seed_for(11));
    match log.run("geodesic", &p, opts) {
        Ok((records, Summary::Geodesic(est))) => {
            let short = records
                .iter()
                .filter(|r| r.get("geodesic").is_some_and(|d| d < f64::from(r.n / 4)))
                .count();
            let finite: Vec<String> = est.per_n.iter().map(|s| format!("{}:{}/{}", s.n, s.finite, s.samples)).collect();
            let every_size = est.per_n.iter().all(|s| s.finite > 0) && est.excluded.is_empty();
            let fmt = |x: Option<f64>| x.map_or("none".into(), |x| format!("{x:.3}"));
            (
                short == 0 && every_size,
                format!(
                    "{short} finite lengths below N/4; finite {}; alpha = {} (95% CI {}, {})",
                    finite.join(" "),
                    fmt(est.alpha_hat),
                    fmt(est.confidence_low),
                    fmt(est.confidence_high)
                ),
            )
        }
        Ok(_) => unreachable!(),
        Err(e) => (false, e),
    }
}

pub const PARALLEL_WORKERS: usize = 8;

/// Small runs of every experiment, compared byte for byte between one worker
/// and two runs on [`PARALLEL_WORKERS`].
pub fn determinism_battery(seed: u64, solve: SolveOptions) -> Result<usize, String> {
    let mut cases = vec![
        params(ExperimentKind::Mn, &[0, 4, 8, 16], 2.0, 300, seed),
        params(ExperimentKind::Geodesic, &[16, 32], 0.5, 60, seed),
        params(ExperimentKind::Crossing, &[32], 1.0, 40, seed),
        params(ExperimentKind::Perturb, &[16], 1.0, 60, seed),
        params(ExperimentKind::Star, &[16], 1.0, 60, seed),
        params(ExperimentKind::Annulus, &[32], 1.0, 40, seed),
        params(ExperimentKind::Animal, &[16], 1.0, 40, seed),
        params(ExperimentKind::IsCheck, &[8], 1.0, 300, seed),
    ];
    cases[7].delta = Some(0.25);
    let run_once = |p: &ExperimentParams, workers: usize| -> Result<String, String> {
        let options = RunOptions { workers, solve };
        let records = run_records::<Error>(p, options, |_| Ok(())).map_err(|e| format!("{}: {e}", p.kind))?;
        let summary = summarize(p, &records).map_err(|e| format!("{}: {e}", p.kind))?;
        Ok(serde_json::to_string(&(records, summary)).expect("serializable"))
    };
    for p in &cases {
        let serial = run_once(p, 1)?;
        for _ in 0..2 {
            if run_once(p, PARALLEL_WORKERS)? != serial {
                return Err(format!("{} differs between 1 and {PARALLEL_WORKERS} workers", p.kind));
            }
        }
    }
    Ok(cases.len())
}

fn c12_determinism(opts: &VerifyOptions) -> (bool, String) {
    match determinism_battery(opts.seed_for(12), opts.solve()) {
        Ok(n) => (true, format!("{n} experiments identical across 1 worker and two runs on {PARALLEL_WORKERS}")),
        Err(e) => (false, e),
    }
}

pub const NAMES: [&str; 12] = [
    "oracle equivalence",
    "monotone coupling",
    "domain monotonicity",
    "single-site closed form",
    "exclusion",
    "percolation of C_*",
    "stability inequality",
    "change of measure",
    "duality exhaustive",
    "decay trend",
    "geodesic bound",
    "determinism",
];

/// Run all criteria, calling `on_done` as each one finishes.
pub fn run_verify(opts: &VerifyOptions, mut on_done: impl FnMut(&Criterion)) -> VerifyReport {
    let mut log = Log::default();
    let mut criteria = Vec::new();
    let mut record = |id: u8, f: &mut dyn FnMut(&mut Log) -> (bool, String), log: &mut Log| {
        let start = Instant::now();
        let (passed, detail) = f(log);
        let c = Criterion { id, name: NAMES[usize::from(id) - 1], passed, detail, elapsed: start.elapsed() };
        on_done(&c);
        criteria.push(c);
    };
    record(1, &mut |log| {
        let start = Instant::now();
        let (ok, detail) = c1_oracle(opts, log);
        let t = start.elapsed();
        (ok && t < Duration::from_secs(5), format!("{detail}; {:.2}s", t.as_secs_f64()))
    }, &mut log);
    record(3, &mut |log| c3_domain(opts, log), &mut log);
    record(4, &mut |log| c4_single_site(opts, log), &mut log);
    record(5, &mut |log| c5_exclusion(opts, log), &mut log);
    record(6, &mut |log| c6_percolation(opts, log), &mut log);
    record(8, &mut |log| c8_change_of_measure(opts, log), &mut log);
    record(9, &mut |_| c9_duality(opts), &mut log);
    record(10, &mut |log| c10_decay(opts, log), &mut log);
    record(11, &mut |log| c11_geodesic(opts, log), &mut log);
    record(2, &mut |log| log.aggregate(Invariant::Coupling), &mut log);
    record(
        7,
        &mut |log| {
            let (ok, detail) = log.aggregate(Invariant::Stability);
            let components: u64 = log.runs.iter().map(|r| r.components).sum();
            (ok && components > 0, format!("{detail}; {components} zero clusters checked under both boundaries"))
        },
        &mut log,
    );
    record(12, &mut |_| c12_determinism(opts), &mut log);
    criteria.sort_by_key(|c| c.id);
    VerifyReport { seed: opts.seed, fault: opts.fault, criteria }
}

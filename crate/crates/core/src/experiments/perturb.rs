//! Under a global upward shift `delta`, the common disagreement set `C_*`
//! cannot both be long (geodesic at least `K`) and be concentrated inside
//! `Lambda_{N/4}` relative to `Lambda_{N/2} \ Lambda_{N/4}`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{audited, box_sites, check_raise, count_in, ExperimentParams, ExperimentRecord, ScaleMode};
use crate::disagreement::{common_disagreement, SolveOptions};
use crate::disorder::{quantize, sample_field, PerturbationParams, PerturbationSpec, FIXED_SCALE};
use crate::error::{Error, Invariant, Result};
use crate::lattice::{AnnulusRegion, BoxRegion, Sites};
use crate::percolation::dyadic_geodesic;

struct Size {
    n: u32,
    sites: Arc<Sites>,
    k: f64,
    delta: f64,
    inner: BoxRegion,
    annulus: AnnulusRegion,
}

/// `(K, delta)` for one size.
pub fn exclusion_constants(params: &ExperimentParams, n: u32) -> Result<(f64, f64)> {
    let pp = match params.scale_mode {
        ScaleMode::Linear => PerturbationParams::linear(n, params.gamma)?,
        ScaleMode::Polynomial => PerturbationParams::polynomial(n, params.alpha, params.alpha_prime)?,
    };
    Ok((pp.k, params.delta.unwrap_or(pp.delta)))
}

/// The shift the solver actually applies, on its fixed-point grid.
pub fn effective_delta(delta: f64) -> f64 {
    quantize(delta) as f64 / FIXED_SCALE
}

pub(super) struct Prep {
    sizes: Vec<Size>,
}

impl Prep {
    pub(super) fn new(params: &ExperimentParams) -> Result<Self> {
        let mut sizes = Vec::new();
        for &n in &params.n_list {
            let (k, delta) = exclusion_constants(params, n)?;
            sizes.push(Size {
                n,
                sites: box_sites(n),
                k,
                delta,
                inner: BoxRegion::centered(n / 4),
                annulus: AnnulusRegion::centered(n / 2, n / 4)?,
            });
        }
        Ok(Self { sizes })
    }

    pub(super) fn sample(
        &self,
        params: &ExperimentParams,
        solve: SolveOptions,
        index: u64,
    ) -> Result<Vec<ExperimentRecord>> {
        let field = sample_field(&BoxRegion::centered(params.max_n()), params.epsilon, params.master_seed, index)?;
        let mut out = Vec::new();
        for size in &self.sizes {
            let shifted = field.perturb(&PerturbationSpec::GlobalShift { delta: size.delta })?;
            let before = audited(&field, &size.sites, solve)?;
            let after = audited(&shifted, &size.sites, solve)?;
            check_raise(&before, &after)?;
            let c_star = common_disagreement(&before.c, &after.c)?;

            let distance = dyadic_geodesic(&c_star, size.n);
            let inner = count_in(&c_star, &size.inner);
            let ring = count_in(&c_star, &size.annulus);
            let a = distance.is_none_or(|d| f64::from(d) >= size.k);
            let b = inner * effective_delta(size.delta) > 8.0 / size.k * ring;
            if a && b {
                return Err(Error::violation(Invariant::Exclusion, format!(
                    "sample {index}, N = {}: both exclusion conditions hold (distance {distance:?}, \
                     |C* in inner box| = {inner}, |C* in annulus| = {ring})",
                    size.n
                )));
            }
            let mut r = ExperimentRecord::new(params, size.n, index)
                .flag("a", a)
                .flag("b", b)
                .scalar("c_star_size", c_star.len() as f64)
                .scalar("c_star_inner", inner)
                .scalar("c_star_annulus", ring)
                .scalar("stability_components", (before.components + after.components) as f64);
            if let Some(d) = distance {
                r = r.scalar("distance", f64::from(d));
            }
            r.tie = before.labeling.tie || after.labeling.tie;
            out.push(r);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub epsilon: f64,
    pub mode: ScaleMode,
    pub k: f64,
    pub delta: f64,
    pub samples: u64,
    pub neither: u64,
    pub only_a: u64,
    pub only_b: u64,
    pub both: u64,
    /// Samples with a nonempty common disagreement set.
    pub c_star_nonempty: u64,
}

pub(super) fn summarize<'a>(
    params: &ExperimentParams,
    n: u32,
    records: impl Iterator<Item = &'a ExperimentRecord>,
) -> Result<ExclusionReport> {
    let (k, delta) = exclusion_constants(params, n)?;
    let mut rep = ExclusionReport {
        n,
        epsilon: params.epsilon,
        mode: params.scale_mode,
        k,
        delta,
        samples: 0,
        neither: 0,
        only_a: 0,
        only_b: 0,
        both: 0,
        c_star_nonempty: 0,
    };
    for r in records {
        rep.samples += 1;
        match (r.is("a"), r.is("b")) {
            (false, false) => rep.neither += 1,
            (true, false) => rep.only_a += 1,
            (false, true) => rep.only_b += 1,
            (true, true) => rep.both += 1,
        }
        rep.c_star_nonempty += u64::from(r.get("c_star_size").unwrap_or(0.0) > 0.0);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run, ExperimentKind, RunOptions, Summary};

    fn report(eps: f64, mode: ScaleMode, samples: u64) -> ExclusionReport {
        let mut p = ExperimentParams::new(ExperimentKind::Perturb, vec![16], eps, samples, 19);
        p.scale_mode = mode;
        match run(&p, RunOptions::default()).unwrap().summary {
            Summary::Perturb { mut per_n } => per_n.remove(0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn constants() {
        let p = ExperimentParams::new(ExperimentKind::Perturb, vec![16], 1.0, 1, 0);
        assert_eq!(exclusion_constants(&p, 16).unwrap(), (4.0, 6.25));
        let mut q = p.clone();
        q.scale_mode = ScaleMode::Polynomial;
        let (k, d) = exclusion_constants(&q, 16).unwrap();
        assert!((k - 16f64.powf(1.35)).abs() < 1e-9);
        assert!((d - 16f64.powf(-1.215)).abs() < 1e-12);
        assert_eq!(effective_delta(0.25), 0.25);
        assert!((effective_delta(d) - d).abs() <= 0.5 / FIXED_SCALE);
    }

    #[test]
    fn both_never_happens() {
        for (eps, mode) in [(1.0, ScaleMode::Linear), (0.5, ScaleMode::Polynomial)] {
            let r = report(eps, mode, 40);
            assert_eq!(r.both, 0);
            assert_eq!(r.neither + r.only_a + r.only_b, 40);
        }
    }

    #[test]
    fn empty_common_set_gives_only_a() {
        let p = ExperimentParams::new(ExperimentKind::Perturb, vec![16], 1.0, 20, 19);
        let out = run(&p, RunOptions::default()).unwrap();
        let empty: Vec<_> = out.records.iter().filter(|r| r.get("c_star_size") == Some(0.0)).collect();
        assert!(!empty.is_empty());
        for r in empty {
            assert!(r.is("a") && !r.is("b"));
            assert_eq!(r.get("distance"), None);
        }
    }
}

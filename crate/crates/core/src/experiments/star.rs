//! Under nonnegative pointwise shifts, every cluster of the common
//! disagreement set reaches the sites next to the outer boundary.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{audited, box_sites, check_raise, ExperimentParams, ExperimentRecord};
use crate::disagreement::{common_disagreement, DisagreementSet, SolveOptions};
use crate::disorder::{sample_field, PerturbationSpec};
use crate::error::{Error, Invariant, Result};
use crate::lattice::{BoxRegion, Sites};

pub(super) struct Prep {
    sizes: Vec<(u32, Arc<Sites>)>,
}

/// Components of `c` on `Lambda_n` that contain no site of the outermost ring.
pub fn stranded_components(c: &DisagreementSet, n: u32) -> usize {
    c.components()
        .iter()
        .filter(|comp| !comp.iter().any(|v| v.x.unsigned_abs().max(v.y.unsigned_abs()) == n))
        .count()
}

impl Prep {
    pub(super) fn new(params: &ExperimentParams) -> Self {
        Self { sizes: params.n_list.iter().map(|&n| (n, box_sites(n))).collect() }
    }

    pub(super) fn sample(
        &self,
        params: &ExperimentParams,
        solve: SolveOptions,
        index: u64,
    ) -> Result<Vec<ExperimentRecord>> {
        let field = sample_field(&BoxRegion::centered(params.max_n()), params.epsilon, params.master_seed, index)?;
        let mut out = Vec::new();
        for (n, sites) in &self.sizes {
            let spec = PerturbationSpec::uniform(&BoxRegion::centered(*n), params.shift_max, params.master_seed, index);
            let shifted = field.perturb(&spec)?;
            let before = audited(&field, sites, solve)?;
            let after = audited(&shifted, sites, solve)?;
            check_raise(&before, &after)?;
            let c_star = common_disagreement(&before.c, &after.c)?;
            let stranded = stranded_components(&c_star, *n);
            if stranded > 0 {
                return Err(Error::violation(Invariant::Percolation, format!(
                    "sample {index}, N = {n}: {stranded} common disagreement clusters do not reach the boundary"
                )));
            }
            let mut r = ExperimentRecord::new(params, *n, index)
                .flag("c_star_nonempty", !c_star.is_empty())
                .scalar("c_star_size", c_star.len() as f64)
                .scalar("components", c_star.component_count() as f64)
                .scalar("stability_components", (before.components + after.components) as f64);
            r.tie = before.labeling.tie || after.labeling.tie;
            out.push(r);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub epsilon: f64,
    pub shift_max: f64,
    pub samples: u64,
    pub c_star_nonempty: u64,
    pub components_checked: u64,
    pub violations: u64,
}

pub(super) fn summarize<'a>(
    params: &ExperimentParams,
    n: u32,
    records: impl Iterator<Item = &'a ExperimentRecord>,
) -> StarReport {
    let mut rep = StarReport {
        n,
        epsilon: params.epsilon,
        shift_max: params.shift_max,
        samples: 0,
        c_star_nonempty: 0,
        components_checked: 0,
        violations: 0,
    };
    for r in records {
        rep.samples += 1;
        rep.c_star_nonempty += u64::from(r.is("c_star_nonempty"));
        rep.components_checked += r.get("components").unwrap_or(0.0) as u64;
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disagreement::{disagreement_set, LabelGrid, Label};
    use crate::experiments::{run, ExperimentKind, RunOptions, Summary};

    fn report(shift_max: f64, samples: u64) -> StarReport {
        let mut p = ExperimentParams::new(ExperimentKind::Star, vec![8], 1.0, samples, 23);
        p.shift_max = shift_max;
        match run(&p, RunOptions::default()).unwrap().summary {
            Summary::Star { mut per_n } => per_n.remove(0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn stranded_detection() {
        let b = BoxRegion::centered(3);
        let sites = Arc::new(Sites::new(&b));
        let labels = sites
            .vertices()
            .iter()
            .map(|v| if v.y == 0 && v.x <= 1 { Label::Zero } else { Label::Plus })
            .collect();
        let c = disagreement_set(&LabelGrid::from_labels(Arc::clone(&sites), labels).unwrap());
        assert_eq!(stranded_components(&c, 3), 0);
        let labels = sites.vertices().iter().map(|v| if v.x == 0 && v.y == 0 { Label::Zero } else { Label::Plus }).collect();
        let c = disagreement_set(&LabelGrid::from_labels(sites, labels).unwrap());
        assert_eq!(stranded_components(&c, 3), 1);
    }

    #[test]
    fn random_shifts_never_strand_clusters() {
        let r = report(1.0, 40);
        assert_eq!(r.violations, 0);
        assert!(r.c_star_nonempty > 0);
    }

    #[test]
    fn zero_shift_is_the_unperturbed_set() {
        let r = report(0.0, 40);
        assert!(r.components_checked > 0);
    }
}

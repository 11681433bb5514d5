//! Common disagreement under an upward shift on `Lambda_{N/4} \ Lambda_{N/8}`:
//! the origin event and the ring event at radius `3N/16` that contains it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{audited, box_sites, check_raise, ExperimentParams, ExperimentRecord, ProportionSummary};
use crate::disagreement::{common_disagreement, SolveOptions};
use crate::disorder::{annulus_delta, sample_field, PerturbationSpec};
use crate::error::{Error, Invariant, Result};
use crate::lattice::{AnnulusRegion, BoxRegion, Sites, VertexSet, ORIGIN};
use crate::stats::Proportion;

struct Size {
    n: u32,
    sites: Arc<Sites>,
    delta: f64,
    annulus: AnnulusRegion,
    ring: VertexSet,
}

fn shift_for(params: &ExperimentParams, n: u32) -> Result<f64> {
    match params.delta {
        Some(d) => Ok(d),
        None => annulus_delta(n, params.alpha, params.alpha_prime),
    }
}

pub(super) struct Prep {
    sizes: Vec<Size>,
}

impl Prep {
    pub(super) fn new(params: &ExperimentParams) -> Result<Self> {
        let mut sizes = Vec::new();
        for &n in &params.n_list {
            sizes.push(Size {
                n,
                sites: box_sites(n),
                delta: shift_for(params, n)?,
                annulus: AnnulusRegion::centered(n / 4, n / 8)?,
                ring: BoxRegion::centered(3 * n / 16).boundary_ring(),
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
            let before = audited(&field, &size.sites, solve)?;
            let mut tie = before.labeling.tie;
            let c_star = if size.delta > 0.0 {
                let shifted = field.perturb(&PerturbationSpec::AnnulusShift { delta: size.delta, annulus: size.annulus })?;
                let after = audited(&shifted, &size.sites, solve)?;
                check_raise(&before, &after)?;
                tie |= after.labeling.tie;
                common_disagreement(&before.c, &after.c)?
            } else {
                before.c.clone()
            };
            let origin = c_star.contains(ORIGIN);
            let ring = size.ring.iter().any(|v| c_star.contains(v));
            if origin && !ring {
                return Err(Error::violation(Invariant::RingContainment, format!(
                    "sample {index}, N = {}: the origin's common disagreement cluster stops inside radius {}",
                    size.n,
                    3 * size.n / 16 + 1
                )));
            }
            let mut r = ExperimentRecord::new(params, size.n, index)
                .flag("origin", origin)
                .flag("ring", ring)
                .scalar("c_star_size", c_star.len() as f64);
            r.tie = tie;
            out.push(r);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub origin: ProportionSummary,
    pub ring: ProportionSummary,
    /// `P(origin) <= P(ring)` for the estimates.
    pub contained: bool,
}

pub(super) fn summarize<'a>(
    params: &ExperimentParams,
    n: u32,
    records: impl Iterator<Item = &'a ExperimentRecord>,
) -> Result<AnnulusReport> {
    let (mut origin, mut ring) = (Proportion::default(), Proportion::default());
    for r in records {
        origin.record(r.is("origin"));
        ring.record(r.is("ring"));
    }
    Ok(AnnulusReport {
        n,
        epsilon: params.epsilon,
        delta: shift_for(params, n)?,
        origin: origin.into(),
        ring: ring.into(),
        contained: origin.successes <= ring.successes,
    })
}

//! Change of measure under a global shift: statistics of the shifted field,
//! reweighted by the Gaussian density ratio, must match direct estimates.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{audited, box_sites, check_raise, count_in, ExperimentParams, ExperimentRecord, DEFAULT_ISCHECK_DELTA};
use crate::disagreement::SolveOptions;
use crate::disorder::{log_rn_derivative, quantize, sample_field, PerturbationSpec};
use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, Sites, ORIGIN};
use crate::stats::{mean, mean_se};

/// Statistics compared, as `(name, direct scalar, shifted scalar)`.
const STATISTICS: [(&str, &str, &str); 2] =
    [("origin_zero", "direct_zero", "shifted_zero"), ("inner_size", "direct_size", "shifted_size")];

struct Size {
    n: u32,
    sites: Arc<Sites>,
    region: BoxRegion,
    inner: BoxRegion,
}

pub(super) struct Prep {
    sizes: Vec<Size>,
    delta: f64,
}

impl Prep {
    pub(super) fn new(params: &ExperimentParams) -> Self {
        let sizes = params
            .n_list
            .iter()
            .map(|&n| Size { n, sites: box_sites(n), region: BoxRegion::centered(n), inner: BoxRegion::centered(n / 4) })
            .collect();
        Self { sizes, delta: params.delta.unwrap_or(DEFAULT_ISCHECK_DELTA) }
    }

    pub(super) fn sample(
        &self,
        params: &ExperimentParams,
        solve: SolveOptions,
        index: u64,
    ) -> Result<Vec<ExperimentRecord>> {
        let field = sample_field(&BoxRegion::centered(params.max_n()), params.epsilon, params.master_seed, index)?;
        let shifted = field.perturb(&PerturbationSpec::GlobalShift { delta: self.delta })?;
        let mut out = Vec::new();
        for size in &self.sizes {
            let direct = audited(&field, &size.sites, solve)?;
            let moved = audited(&shifted, &size.sites, solve)?;
            check_raise(&direct, &moved)?;
            let log_weight = if quantize(self.delta) == 0 {
                0.0
            } else {
                log_rn_derivative(&shifted, self.delta, &size.region, params.epsilon)?
            };
            let zero = |c: &crate::disagreement::DisagreementSet| f64::from(u8::from(c.contains(ORIGIN)));
            let mut r = ExperimentRecord::new(params, size.n, index)
                .scalar("direct_zero", zero(&direct.c))
                .scalar("direct_size", count_in(&direct.c, &size.inner))
                .scalar("shifted_zero", zero(&moved.c))
                .scalar("shifted_size", count_in(&moved.c, &size.inner))
                .scalar("log_weight", log_weight)
                .scalar("weight", log_weight.exp());
            r.tie = direct.labeling.tie || moved.labeling.tie;
            out.push(r);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsStatistic {
    pub name: String,
    pub direct_mean: f64,
    pub direct_se: f64,
    pub reweighted_mean: f64,
    pub reweighted_se: f64,
    /// Mean and standard error of the per-sample difference `f(h) - f(h~) w`.
    pub diff_mean: f64,
    pub diff_se: f64,
    pub z: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub samples: u64,
    pub statistics: Vec<IsStatistic>,
    pub weight_mean: f64,
    pub weight_se: f64,
    pub weight_z: f64,
    pub weight_agree: bool,
    pub all_agree: bool,
}

/// `|z| <= 3`, with a zero standard error only accepting an exact match.
fn within_three(diff: f64, se: f64) -> (f64, bool) {
    if se > 0.0 {
        let z = diff / se;
        (z, z.abs() <= 3.0)
    } else {
        (0.0, diff == 0.0)
    }
}

pub(super) fn summarize<'a>(
    params: &ExperimentParams,
    n: u32,
    records: impl Iterator<Item = &'a ExperimentRecord>,
) -> Result<IsReport> {
    let rows: Vec<&ExperimentRecord> = records.collect();
    if rows.len() < 2 {
        return Err(Error::Precondition(format!("ischeck at N = {n} needs at least two samples")));
    }
    let column = |name: &str| -> Result<Vec<f64>> {
        rows.iter()
            .map(|r| {
                r.get(name)
                    .ok_or_else(|| Error::Precondition(format!("ischeck record {} lacks {name}", r.sample_index)))
            })
            .collect()
    };
    let weights = column("weight")?;
    let mut statistics = Vec::new();
    for (name, direct_key, shifted_key) in STATISTICS {
        let direct = column(direct_key)?;
        let reweighted: Vec<f64> = column(shifted_key)?.iter().zip(&weights).map(|(f, w)| f * w).collect();
        let diff: Vec<f64> = direct.iter().zip(&reweighted).map(|(a, b)| a - b).collect();
        let (diff_mean, diff_se) = (mean(&diff), mean_se(&diff));
        let (z, agree) = within_three(diff_mean, diff_se);
        statistics.push(IsStatistic {
            name: name.to_owned(),
            direct_mean: mean(&direct),
            direct_se: mean_se(&direct),
            reweighted_mean: mean(&reweighted),
            reweighted_se: mean_se(&reweighted),
            diff_mean,
            diff_se,
            z,
            agree,
        });
    }
    let (weight_mean, weight_se) = (mean(&weights), mean_se(&weights));
    let (weight_z, weight_agree) = within_three(weight_mean - 1.0, weight_se);
    let all_agree = weight_agree && statistics.iter().all(|s| s.agree);
    Ok(IsReport {
        n,
        epsilon: params.epsilon,
        delta: params.delta.unwrap_or(DEFAULT_ISCHECK_DELTA),
        samples: rows.len() as u64,
        statistics,
        weight_mean,
        weight_se,
        weight_z,
        weight_agree,
        all_agree,
    })
}

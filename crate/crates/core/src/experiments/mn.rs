//! `m_N = P(origin is zero-labeled on Lambda_N)` with an exponential decay fit.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{audited, box_sites, ExperimentParams, ExperimentRecord, ProportionSummary};
use crate::disagreement::SolveOptions;
use crate::disorder::sample_field;
use crate::error::{Error, Invariant, Result};
use crate::lattice::{BoxRegion, Region, Sites, ORIGIN};
use crate::stats::{weighted_fit, Bootstrap, LinearFit, Proportion, BOOTSTRAP_RESAMPLES};

/// Sizes with fewer zero-labeled origins than this are left out of the fit.
pub const MIN_POSITIVES: u64 = 5;

pub(super) struct Prep {
    sites: Vec<Arc<Sites>>,
}

impl Prep {
    pub(super) fn new(params: &ExperimentParams) -> Self {
        Self { sites: params.n_list.iter().map(|&n| box_sites(n)).collect() }
    }

    pub(super) fn sample(
        &self,
        params: &ExperimentParams,
        solve: SolveOptions,
        index: u64,
    ) -> Result<Vec<ExperimentRecord>> {
        let field = sample_field(&BoxRegion::centered(params.max_n()), params.epsilon, params.master_seed, index)?;
        let mut solved = Vec::with_capacity(self.sites.len());
        for sites in &self.sites {
            solved.push(audited(&field, sites, solve)?);
        }
        // Domain monotonicity: C on a larger box, seen inside a smaller one,
        // lies in C of the smaller box.
        for (k, small) in solved.iter().enumerate() {
            let inner = BoxRegion::centered(params.n_list[k]);
            for big in &solved[k + 1..] {
                for i in big.c.indices() {
                    let v = big.c.sites().vertex(i);
                    if inner.contains(v) && !small.c.contains(v) {
                        return Err(Error::violation(Invariant::DomainMonotonicity, format!(
                            "sample {index}: {v} disagrees on a larger box but not on Lambda_{}",
                            params.n_list[k]
                        )));
                    }
                }
            }
        }
        Ok(params
            .n_list
            .iter()
            .zip(&solved)
            .map(|(&n, s)| {
                let mut r = ExperimentRecord::new(params, n, index)
                    .flag("origin_zero", s.c.contains(ORIGIN))
                    .scalar("disagreement_size", s.c.len() as f64)
                    .scalar("stability_components", s.components as f64);
                r.tie = s.labeling.tie;
                r
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    #[serde(rename = "N")]
    pub n: u32,
    pub m_hat: ProportionSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Fitted rate in `m_N ~ exp(intercept - c N)`.
    pub c_hat: f64,
    pub intercept: f64,
    /// Standard error from the inverse-variance weights.
    pub c_se: f64,
    /// 95% bootstrap percentile interval, widened to contain `c_hat` if
    /// needed; absent when no resample admits a fit.
    pub c_low: Option<f64>,
    pub c_high: Option<f64>,
    pub included: Vec<u32>,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub epsilon: f64,
    pub points: Vec<DecayPoint>,
    /// `m_hat` strictly decreases along the sizes.
    pub strictly_decreasing: bool,
    /// In every sample, a zero origin on a larger box is zero on every smaller one.
    pub pointwise_monotone: bool,
    pub rate: Option<RateFit>,
}

/// Weighted fit of `ln m_hat` against `N` using the delta-method weights
/// `n m / (1 - m)`; sizes with too few positives, or none negative, are skipped.
fn fit_counts(ns: &[u32], counts: &[Proportion]) -> Option<(LinearFit, Vec<u32>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    let mut used = Vec::new();
    for (&n, p) in ns.iter().zip(counts) {
        if p.successes < MIN_POSITIVES || p.successes == p.trials {
            continue;
        }
        let m = p.estimate();
        xs.push(f64::from(n));
        ys.push(m.ln());
        ws.push(p.trials as f64 * m / (1.0 - m));
        used.push(n);
    }
    weighted_fit(&xs, &ys, &ws).ok().map(|f| (f, used))
}

pub(super) fn summarize(params: &ExperimentParams, records: &[ExperimentRecord]) -> Result<DecayFit> {
    let k = params.n_list.len();
    let mut rows: BTreeMap<u64, Vec<Option<bool>>> = BTreeMap::new();
    for r in records {
        let col = params.n_list.iter().position(|&n| n == r.n).expect("checked by caller");
        rows.entry(r.sample_index).or_insert_with(|| vec![None; k])[col] = Some(r.is("origin_zero"));
    }
    let rows: Vec<Vec<bool>> = rows
        .into_iter()
        .map(|(i, row)| {
            row.into_iter()
                .collect::<Option<Vec<bool>>>()
                .ok_or_else(|| Error::Precondition(format!("sample {i} is missing some N")))
        })
        .collect::<Result<_>>()?;

    let tally = |rows: &[&Vec<bool>]| -> Vec<Proportion> {
        let mut counts = vec![Proportion::default(); k];
        for row in rows {
            for (c, &hit) in counts.iter_mut().zip(row.iter()) {
                c.record(hit);
            }
        }
        counts
    };
    let all: Vec<&Vec<bool>> = rows.iter().collect();
    let counts = tally(&all);

    let points: Vec<DecayPoint> = params
        .n_list
        .iter()
        .zip(&counts)
        .map(|(&n, &p)| DecayPoint { n, m_hat: p.into() })
        .collect();
    let strictly_decreasing = counts.windows(2).all(|w| w[1].estimate() < w[0].estimate());
    let pointwise_monotone = rows.iter().all(|row| row.windows(2).all(|w| w[0] || !w[1]));

    let rate = fit_counts(&params.n_list, &counts).map(|(fit, included)| {
        let c_hat = -fit.slope;
        let mut boot = Bootstrap::new(params.bootstrap_seed());
        let mut reps: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
            .map(|_| {
                let resample = boot.resample(&all);
                fit_counts(&params.n_list, &tally(&resample)).map_or(f64::NAN, |(f, _)| -f.slope)
            })
            .collect();
        let (lo, hi) = Bootstrap::percentile_interval(&mut reps, 0.95);
        let (c_low, c_high) = if lo.is_nan() { (None, None) } else { (Some(lo.min(c_hat)), Some(hi.max(c_hat))) };
        RateFit {
            c_hat,
            intercept: fit.intercept,
            c_se: fit.slope_se,
            c_low,
            c_high,
            included,
            residuals: fit.residuals,
        }
    });

    Ok(DecayFit { epsilon: params.epsilon, points, strictly_decreasing, pointwise_monotone, rate })
}

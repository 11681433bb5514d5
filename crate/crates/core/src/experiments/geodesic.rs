//! Geodesic lengths `D_N` through the disagreement set and their growth exponent.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{audited, box_sites, ExperimentParams, ExperimentRecord};
use crate::disagreement::SolveOptions;
use crate::disorder::sample_field;
use crate::error::{Error, Invariant, Result};
use crate::lattice::{BoxRegion, Sites};
use crate::percolation::{dyadic_geodesic, ExponentEstimate, GeodesicSummary};
use crate::stats::{ols_fit, quantile_sorted, Bootstrap, BOOTSTRAP_RESAMPLES};

pub const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];
pub const POWER_GRID: [f64; 6] = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5];

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
        let field = (!params.diagnostic)
            .then(|| sample_field(&BoxRegion::centered(params.max_n()), params.epsilon, params.master_seed, index))
            .transpose()?;
        let mut out = Vec::with_capacity(self.sites.len());
        for (&n, sites) in params.n_list.iter().zip(&self.sites) {
            let mut r = ExperimentRecord::new(params, n, index);
            let d = match &field {
                None => dyadic_geodesic(&BoxRegion::centered(n), n),
                Some(field) => {
                    let s = audited(field, sites, solve)?;
                    r.tie = s.labeling.tie;
                    r = r
                        .scalar("disagreement_size", s.c.len() as f64)
                        .scalar("stability_components", s.components as f64);
                    dyadic_geodesic(&s.c, n)
                }
            };
            if let Some(d) = d {
                if d < n / 4 {
                    return Err(Error::violation(Invariant::GeodesicBound, format!(
                        "sample {index}: geodesic of length {d} on Lambda_{n} is below N/4"
                    )));
                }
                r = r.scalar("geodesic", f64::from(d));
            }
            out.push(r.flag("finite", d.is_some()));
        }
        Ok(out)
    }
}

/// `ln median` against `ln N` over the sizes that have finite lengths.
fn fit_alpha(ns: &[u32], rows: &[&Vec<Option<u32>>]) -> Option<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &n) in ns.iter().enumerate() {
        let mut finite: Vec<f64> = rows.iter().filter_map(|r| r[k]).map(f64::from).collect();
        if finite.is_empty() {
            continue;
        }
        finite.sort_by(f64::total_cmp);
        xs.push(f64::from(n).ln());
        ys.push(quantile_sorted(&finite, 0.5).ln());
    }
    ols_fit(&xs, &ys).ok().map(|f| f.slope)
}

pub(super) fn summarize(params: &ExperimentParams, records: &[ExperimentRecord]) -> Result<ExponentEstimate> {
    let k = params.n_list.len();
    let mut rows: BTreeMap<u64, Vec<Option<Option<u32>>>> = BTreeMap::new();
    for r in records {
        let col = params.n_list.iter().position(|&n| n == r.n).expect("checked by caller");
        let d = r.is("finite").then(|| r.get("geodesic").map(|d| d as u32)).flatten();
        rows.entry(r.sample_index).or_insert_with(|| vec![None; k])[col] = Some(d);
    }
    let rows: Vec<Vec<Option<u32>>> = rows
        .into_iter()
        .map(|(i, row)| {
            row.into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::Precondition(format!("sample {i} is missing some N")))
        })
        .collect::<Result<_>>()?;

    let mut per_n = Vec::with_capacity(k);
    let mut excluded = Vec::new();
    for (col, &n) in params.n_list.iter().enumerate() {
        let mut finite: Vec<f64> = rows.iter().filter_map(|r| r[col]).map(f64::from).collect();
        finite.sort_by(f64::total_cmp);
        if finite.is_empty() {
            excluded.push(n);
        }
        let total = rows.len();
        per_n.push(GeodesicSummary {
            n,
            samples: total,
            finite: finite.len(),
            min: rows.iter().filter_map(|r| r[col]).min(),
            median: (!finite.is_empty()).then(|| quantile_sorted(&finite, 0.5)),
            quantiles: if finite.is_empty() {
                Vec::new()
            } else {
                QUANTILES.iter().map(|&q| (q, quantile_sorted(&finite, q))).collect()
            },
            below_power: POWER_GRID
                .iter()
                .map(|&a| {
                    let bound = f64::from(n).powf(a);
                    (a, finite.iter().filter(|&&d| d <= bound).count() as f64 / total as f64)
                })
                .collect(),
        });
    }

    let all: Vec<&Vec<Option<u32>>> = rows.iter().collect();
    let alpha_hat = fit_alpha(&params.n_list, &all);
    let (confidence_low, confidence_high) = match alpha_hat {
        None => (None, None),
        Some(a) => {
            let mut boot = Bootstrap::new(params.bootstrap_seed());
            let mut reps: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
                .map(|_| fit_alpha(&params.n_list, &boot.resample(&all)).unwrap_or(f64::NAN))
                .collect();
            let (lo, hi) = Bootstrap::percentile_interval(&mut reps, 0.95);
            if lo.is_nan() {
                (None, None)
            } else {
                (Some(lo.min(a)), Some(hi.max(a)))
            }
        }
    };
    Ok(ExponentEstimate { alpha_hat, confidence_low, confidence_high, per_n, excluded })
}

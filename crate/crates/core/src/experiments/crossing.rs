//! Easy and hard crossings of `Lambda_{N/8} \ Lambda_{N/32}` and rectangle
//! crossings inside their companion boxes.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{audited, box_sites, ExperimentParams, ExperimentRecord, ProportionSummary};
use crate::disagreement::{DisagreementSet, SolveOptions};
use crate::disorder::{sample_field, FieldSample};
use crate::error::Result;
use crate::lattice::{scaled_box, AnnulusRegion, BoxRegion, Bounds, RectRegion, Region, Sites, Vertex, ORIGIN};
use crate::percolation::{cross, cross_easy, cross_hard};
use crate::stats::Proportion;

/// The full box in diagnostic mode, the disagreement set otherwise.
enum Cluster {
    Full(BoxRegion),
    Sampled(DisagreementSet),
}

impl Region for Cluster {
    fn contains(&self, v: Vertex) -> bool {
        match self {
            Cluster::Full(b) => b.contains(v),
            Cluster::Sampled(c) => Region::contains(c, v),
        }
    }

    fn bounds(&self) -> Option<Bounds> {
        match self {
            Cluster::Full(b) => b.bounds(),
            Cluster::Sampled(c) => c.bounds(),
        }
    }
}

struct Size {
    n: u32,
    sites: Arc<Sites>,
    annulus: AnnulusRegion,
    rects: [(RectRegion, BoxRegion, Arc<Sites>); 2],
}

pub(super) struct Prep {
    sizes: Vec<Size>,
    radius: u32,
}

/// Horizontal rectangle centered at the origin with long side `2N/factor`
/// and short side `long/aspect`, both at least one site.
pub fn crossing_rect(n: u32, aspect: u32, factor: u32) -> Result<RectRegion> {
    let long = (2 * n / factor).max(1);
    let short = (long / aspect).max(1);
    RectRegion::centered_at(ORIGIN, long, short)
}

impl Prep {
    pub(super) fn new(params: &ExperimentParams) -> Result<Self> {
        let mut sizes = Vec::new();
        let mut radius = 0;
        for &n in &params.n_list {
            let rect = crossing_rect(n, params.aspect, params.factor)?;
            let mut rects = Vec::new();
            for r in [rect, rect.rotated()] {
                let large = scaled_box(&r, params.factor)?;
                radius = radius.max(large.radius + large.center.linf(ORIGIN));
                rects.push((r, large, Arc::new(Sites::new(&large))));
            }
            radius = radius.max(n);
            sizes.push(Size {
                n,
                sites: box_sites(n),
                annulus: AnnulusRegion::centered(n / 8, n / 32)?,
                rects: rects.try_into().unwrap_or_else(|_| unreachable!()),
            });
        }
        Ok(Self { sizes, radius })
    }

    pub(super) fn sample(
        &self,
        params: &ExperimentParams,
        solve: SolveOptions,
        index: u64,
    ) -> Result<Vec<ExperimentRecord>> {
        let field = (!params.diagnostic)
            .then(|| sample_field(&BoxRegion::centered(self.radius), params.epsilon, params.master_seed, index))
            .transpose()?;
        let mut out = Vec::new();
        for size in &self.sizes {
            let mut r = ExperimentRecord::new(params, size.n, index);
            let mut solve_on = |region: BoxRegion, sites: &Arc<Sites>, field: &Option<FieldSample>| -> Result<Cluster> {
                Ok(match field {
                    None => Cluster::Full(region),
                    Some(f) => {
                        let s = audited(f, sites, solve)?;
                        r.tie |= s.labeling.tie;
                        Cluster::Sampled(s.c)
                    }
                })
            };
            let whole = BoxRegion::centered(size.n);
            let c = solve_on(whole, &size.sites, &field)?;
            let mut rect_hits = [false; 2];
            for (hit, (rect, large, sites)) in rect_hits.iter_mut().zip(&size.rects) {
                *hit = if *large == whole {
                    cross(rect, &c)
                } else {
                    cross(rect, &solve_on(*large, sites, &field)?)
                };
            }
            let (hard, easy) = (cross_hard(&size.annulus, &c), cross_easy(&size.annulus, &c));
            out.push(
                r.flag("hard", hard)
                    .flag("easy", easy)
                    .flag("rect", rect_hits[0])
                    .flag("rect_vertical", rect_hits[1])
                    .scalar("disagreement_size", c.len() as f64),
            );
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub epsilon: f64,
    pub aspect: u32,
    pub factor: u32,
    pub rect_long: u32,
    pub rect_short: u32,
    pub hard: ProportionSummary,
    pub easy: ProportionSummary,
    pub rect: ProportionSummary,
    pub rect_vertical: ProportionSummary,
    /// `min(p_hard, p_easy)`.
    pub min_p: f64,
    /// One minus the upper 95% bound of the smaller crossing probability.
    pub delta_low: f64,
}

pub(super) fn summarize<'a>(
    params: &ExperimentParams,
    n: u32,
    records: impl Iterator<Item = &'a ExperimentRecord>,
) -> CrossingReport {
    let mut p = [Proportion::default(); 4];
    for r in records {
        for (acc, name) in p.iter_mut().zip(["hard", "easy", "rect", "rect_vertical"]) {
            acc.record(r.is(name));
        }
    }
    let [hard, easy, rect, rect_vertical] = p.map(ProportionSummary::from);
    let smaller = if hard.estimate <= easy.estimate { hard } else { easy };
    let shape = crossing_rect(n, params.aspect, params.factor).expect("validated");
    CrossingReport {
        n,
        epsilon: params.epsilon,
        aspect: params.aspect,
        factor: params.factor,
        rect_long: shape.long_side(),
        rect_short: shape.short_side(),
        hard,
        easy,
        rect,
        rect_vertical,
        min_p: smaller.estimate,
        delta_low: 1.0 - smaller.ci_high,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run, ExperimentKind, RunOptions, Summary};

    fn report(eps: f64, samples: u64, diagnostic: bool) -> CrossingReport {
        let mut p = ExperimentParams::new(ExperimentKind::Crossing, vec![32], eps, samples, 5);
        p.diagnostic = diagnostic;
        match run(&p, RunOptions::default()).unwrap().summary {
            Summary::Crossing { mut per_n } => per_n.remove(0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn default_rectangle_shape() {
        let r = crossing_rect(32, 4, 8).unwrap();
        assert_eq!((r.width, r.height), (8, 2));
        assert_eq!(scaled_box(&r, 8).unwrap(), BoxRegion::centered(32));
        assert_eq!(crossing_rect(32, 100, 32).unwrap().short_side(), 1);
    }

    #[test]
    fn full_lattice_always_crosses() {
        let r = report(1.0, 3, true);
        for p in [r.hard, r.easy, r.rect, r.rect_vertical] {
            assert_eq!(p.estimate, 1.0);
        }
    }

    #[test]
    fn strong_disorder_rarely_crosses() {
        let r = report(100.0, 40, false);
        assert!(r.hard.estimate < 0.05 && r.easy.estimate < 0.05);
        assert!(r.delta_low > 0.0);
    }
}

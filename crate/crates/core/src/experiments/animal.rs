//! Coarse-grained percolation: a tile of side `2N'` is open when the
//! disagreement set of its doubled companion box meets it.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{audited, ExperimentParams, ExperimentRecord, ProportionSummary, ANIMAL_FACTOR};
use crate::disagreement::SolveOptions;
use crate::disorder::sample_field;
use crate::error::{Error, Result};
use crate::lattice::{scaled_box, BoxRegion, Region, Sites, ORIGIN};
use crate::percolation::{coarse_grid, max_open_animal, CoarseGrid};
use crate::stats::{correlation, Proportion};

/// Tiles this far apart (in tile units) have disjoint companion boxes.
pub const INDEPENDENT_TILE_DISTANCE: usize = 3;

struct Size {
    grid: CoarseGrid,
    companions: Vec<Arc<Sites>>,
}

pub(super) struct Prep {
    sizes: Vec<Size>,
    radius: u32,
}

impl Prep {
    pub(super) fn new(params: &ExperimentParams) -> Result<Self> {
        let mut sizes = Vec::new();
        let mut radius = 0;
        for &n in &params.n_list {
            let grid = coarse_grid(n, params.n_prime)?;
            let mut companions = Vec::with_capacity(grid.len());
            for tile in grid.tiles() {
                let large = scaled_box(tile, ANIMAL_FACTOR)?;
                radius = radius.max(large.radius + large.center.linf(ORIGIN));
                companions.push(Arc::new(Sites::new(&large)));
            }
            sizes.push(Size { grid, companions });
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
            let mut grid = size.grid.clone();
            let mut tie = false;
            for (i, sites) in size.companions.iter().enumerate() {
                let open = match &field {
                    None => true,
                    Some(f) => {
                        let s = audited(f, sites, solve)?;
                        tie |= s.labeling.tie;
                        let tile = grid.tile(i);
                        let hit = s.c.indices().any(|j| tile.contains(sites.vertex(j)));
                        hit
                    }
                };
                grid.set_open(i, open);
            }
            let mut r = ExperimentRecord::new(params, grid.n(), index)
                .scalar("animal", max_open_animal(&grid) as f64)
                .scalar("open_count", grid.open_count() as f64);
            for (i, &open) in grid.open_flags().iter().enumerate() {
                r = r.flag(&format!("open_{i}"), open);
            }
            r.tie = tie;
            out.push(r);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Independence {
    pub tile_a: usize,
    pub tile_b: usize,
    /// Tile-unit l-infinity distance.
    pub distance: usize,
    /// Sample correlation of the two open flags; absent when either is constant.
    pub correlation: Option<f64>,
    pub se: Option<f64>,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimalReport {
    #[serde(rename = "N")]
    pub n: u32,
    pub n_prime: u32,
    pub epsilon: f64,
    pub tiles: usize,
    pub samples: u64,
    /// Largest-animal size to sample count.
    pub histogram: BTreeMap<u64, u64>,
    pub mean_animal: f64,
    pub open_fraction: f64,
    /// `N / (16 N')`.
    pub threshold: f64,
    pub above_threshold: ProportionSummary,
    pub independence: Option<Independence>,
}

pub(super) fn summarize<'a>(
    params: &ExperimentParams,
    n: u32,
    records: impl Iterator<Item = &'a ExperimentRecord>,
) -> Result<AnimalReport> {
    let grid = coarse_grid(n, params.n_prime)?;
    let threshold = f64::from(n) / (16.0 * f64::from(params.n_prime));
    let last = grid.len() - 1;
    let pair = (grid.tile_distance(0, last) >= INDEPENDENT_TILE_DISTANCE).then_some((0, last));

    let mut histogram = BTreeMap::new();
    let mut above = Proportion::default();
    let (mut animal_sum, mut open_sum, mut samples) = (0.0, 0.0, 0u64);
    let mut pairs = Vec::new();
    for r in records {
        let animal = r
            .get("animal")
            .ok_or_else(|| Error::Precondition(format!("animal record {} lacks a size", r.sample_index)))?;
        samples += 1;
        *histogram.entry(animal as u64).or_insert(0) += 1;
        above.record(animal >= threshold);
        animal_sum += animal;
        open_sum += r.get("open_count").unwrap_or(0.0);
        if let Some((a, b)) = pair {
            let flag = |i: usize| f64::from(u8::from(r.is(&format!("open_{i}"))));
            pairs.push((flag(a), flag(b)));
        }
    }
    let independence = pair.map(|(a, b)| {
        let c = correlation(&pairs);
        Independence {
            tile_a: a,
            tile_b: b,
            distance: grid.tile_distance(a, b),
            correlation: c.map(|c| c.0),
            se: c.map(|c| c.1),
            within_3se: c.is_none_or(|(r, se)| r.abs() <= 3.0 * se),
        }
    });
    Ok(AnimalReport {
        n,
        n_prime: params.n_prime,
        epsilon: params.epsilon,
        tiles: grid.len(),
        samples,
        histogram,
        mean_animal: animal_sum / samples as f64,
        open_fraction: open_sum / (samples as f64 * grid.len() as f64),
        threshold,
        above_threshold: above.into(),
        independence,
    })
}

//! Percolation queries on vertex sets: induced geodesics, rectangle and
//! annulus crossings, and coarse-grained lattice animals.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{AnnulusRegion, BoxRegion, Bounds, RectRegion, Region, Vertex};

const UNSEEN: u32 = u32::MAX;

/// Membership bitmap of a region over its bounding box.
struct Mask {
    bounds: Bounds,
    bits: Vec<bool>,
}

impl Mask {
    fn new(region: &impl Region, keep: impl Fn(Vertex) -> bool) -> Option<Self> {
        let bounds = region.bounds()?;
        let mut bits = vec![false; bounds.area()];
        for v in region.vertices() {
            if keep(v) {
                bits[bounds.slot(v).expect("vertex inside its bounds")] = true;
            }
        }
        Some(Self { bounds, bits })
    }

    fn slot(&self, v: Vertex) -> Option<usize> {
        self.bounds.slot(v).filter(|&s| self.bits[s])
    }
}

/// Breadth-first search inside `mask` from every member satisfying `start`;
/// returns the step count to the first member satisfying `stop`.
fn bfs(mask: &Mask, steps: &[(i32, i32)], start: impl Fn(Vertex) -> bool, stop: impl Fn(Vertex) -> bool) -> Option<u32> {
    let mut dist = vec![UNSEEN; mask.bits.len()];
    let mut queue = VecDeque::new();
    for v in mask.bounds.iter() {
        if let Some(s) = mask.slot(v) {
            if start(v) {
                dist[s] = 0;
                queue.push_back(v);
            }
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[mask.slot(u).expect("queued vertices are members")];
        if stop(u) {
            return Some(d);
        }
        for &(dx, dy) in steps {
            let w = u.offset(dx, dy);
            if let Some(s) = mask.slot(w) {
                if dist[s] == UNSEEN {
                    dist[s] = d + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    None
}

/// Nearest-neighbour steps in E, N, W, S order, then the diagonals.
const STEPS8: [(i32, i32); 8] = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adjacency {
    Four,
    Eight,
}

impl Adjacency {
    fn steps(self) -> &'static [(i32, i32)] {
        match self {
            Adjacency::Four => &STEPS8[..4],
            Adjacency::Eight => &STEPS8,
        }
    }

    fn touches(self, v: Vertex, pred: impl Fn(Vertex) -> bool) -> bool {
        self.steps().iter().any(|&(dx, dy)| pred(v.offset(dx, dy)))
    }
}

/// Graph distance in the subgraph induced by `c` between `c ∩ src` and
/// `c ∩ dst`; `None` when no path exists.
pub fn induced_distance(c: &impl Region, src: &impl Region, dst: &impl Region) -> Option<u32> {
    let mask = Mask::new(c, |_| true)?;
    bfs(&mask, Adjacency::Four.steps(), |v| src.contains(v), |v| dst.contains(v))
}

/// `D_N`: distance through `c` from the boundary of `Lambda_{N/4}` to that of `Lambda_{N/2}`.
pub fn dyadic_geodesic(c: &impl Region, n: u32) -> Option<u32> {
    let inner = BoxRegion::centered(n / 4).boundary_ring();
    let outer = BoxRegion::centered(n / 2).boundary_ring();
    induced_distance(c, &inner, &outer)
}

/// Whether a 4-connected path of `c` inside `rect` joins its two shorter sides.
/// Squares count as horizontal and are crossed left to right.
pub fn cross(rect: &RectRegion, c: &impl Region) -> bool {
    let Some(mask) = Mask::new(rect, |v| c.contains(v)) else { return false };
    let (lo, hi) = (rect.corner, rect.corner.offset(rect.width as i32 - 1, rect.height as i32 - 1));
    let found = if rect.is_horizontal() {
        bfs(&mask, Adjacency::Four.steps(), |v| v.x == lo.x, |v| v.x == hi.x)
    } else {
        bfs(&mask, Adjacency::Four.steps(), |v| v.y == lo.y, |v| v.y == hi.y)
    };
    found.is_some()
}

/// Whether a path of `member` sites inside the annulus, with the given
/// adjacency, joins a site adjacent to the hole to one adjacent to the outside.
pub fn annulus_crossing(annulus: &AnnulusRegion, member: impl Fn(Vertex) -> bool, adjacency: Adjacency) -> bool {
    let Some(mask) = Mask::new(annulus, member) else { return false };
    let (inner, outer) = (annulus.inner(), annulus.outer());
    bfs(
        &mask,
        adjacency.steps(),
        |v| adjacency.touches(v, |w| inner.contains(w)),
        |v| adjacency.touches(v, |w| !outer.contains(w)),
    )
    .is_some()
}

/// 4-connected crossing of the annulus by `c`.
pub fn cross_easy(annulus: &AnnulusRegion, c: &impl Region) -> bool {
    annulus_crossing(annulus, |v| c.contains(v), Adjacency::Four)
}

/// `c` separates the hole from the outside: no 8-connected path of the
/// complement crosses the annulus.
pub fn cross_hard(annulus: &AnnulusRegion, c: &impl Region) -> bool {
    !annulus_crossing(annulus, |v| !c.contains(v), Adjacency::Eight)
}

/// Whether `c` restricted to the annulus contains a 4-connected cycle winding
/// around the hole. Works on the primal side only: each component gets a
/// winding potential that jumps by one across a ray leaving the hole, and an
/// inconsistent potential exhibits a non-contractible cycle.
pub fn has_winding_cycle(annulus: &AnnulusRegion, c: &impl Region) -> bool {
    let Some(mask) = Mask::new(annulus, |v| c.contains(v)) else { return false };
    let center = annulus.outer().center;
    // The ray runs from (cx, cy - 1/2) towards +x.
    let jump = |u: Vertex, w: Vertex| -> i32 {
        if u.x != w.x || u.x <= center.x {
            0
        } else if u.y == center.y - 1 && w.y == center.y {
            1
        } else if u.y == center.y && w.y == center.y - 1 {
            -1
        } else {
            0
        }
    };
    let mut potential: Vec<Option<i32>> = vec![None; mask.bits.len()];
    let mut queue = VecDeque::new();
    for root in mask.bounds.iter() {
        let Some(s) = mask.slot(root) else { continue };
        if potential[s].is_some() {
            continue;
        }
        potential[s] = Some(0);
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let pu = potential[mask.slot(u).expect("member")].expect("visited");
            for &(dx, dy) in Adjacency::Four.steps() {
                let w = u.offset(dx, dy);
                let Some(t) = mask.slot(w) else { continue };
                let pw = pu + jump(u, w);
                match potential[t] {
                    None => {
                        potential[t] = Some(pw);
                        queue.push_back(w);
                    }
                    Some(p) if p != pw => return true,
                    Some(_) => {}
                }
            }
        }
    }
    false
}

/// Tiling of `Lambda_N` by square blocks of `2N'` sites a side, with open flags.
/// The one leftover row and column of `Lambda_N` go to the last tiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseGrid {
    n: u32,
    n_prime: u32,
    per_side: usize,
    tiles: Vec<RectRegion>,
    open: Vec<bool>,
}

fn check_power_of_two(name: &str, x: u32) -> Result<()> {
    if x.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {x} must be a power of two")))
    }
}

/// Tiles are numbered row-major: increasing `y` row, then increasing `x`.
pub fn coarse_grid(n: u32, n_prime: u32) -> Result<CoarseGrid> {
    check_power_of_two("N", n)?;
    check_power_of_two("N'", n_prime)?;
    if n_prime > n {
        return Err(Error::Parameter(format!("N' = {n_prime} exceeds N = {n}")));
    }
    let per_side = (n / n_prime) as usize;
    let side = 2 * n_prime;
    let n = n as i32;
    let mut tiles = Vec::with_capacity(per_side * per_side);
    for row in 0..per_side {
        for col in 0..per_side {
            let corner = Vertex::new(-n + (col as u32 * side) as i32, -n + (row as u32 * side) as i32);
            let w = side + u32::from(col + 1 == per_side);
            let h = side + u32::from(row + 1 == per_side);
            tiles.push(RectRegion::new(corner, w, h)?);
        }
    }
    let open = vec![false; tiles.len()];
    Ok(CoarseGrid { n: n as u32, n_prime, per_side, tiles, open })
}

impl CoarseGrid {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn n_prime(&self) -> u32 {
        self.n_prime
    }

    /// Tiles along one side.
    pub fn per_side(&self) -> usize {
        self.per_side
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn tiles(&self) -> &[RectRegion] {
        &self.tiles
    }

    pub fn tile(&self, i: usize) -> &RectRegion {
        &self.tiles[i]
    }

    /// `(row, column)` of tile `i`.
    pub fn position(&self, i: usize) -> (usize, usize) {
        (i / self.per_side, i % self.per_side)
    }

    /// l-infinity distance between tiles in tile units.
    pub fn tile_distance(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.position(i), self.position(j));
        a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
    }

    pub fn is_open(&self, i: usize) -> bool {
        self.open[i]
    }

    pub fn set_open(&mut self, i: usize, open: bool) {
        self.open[i] = open;
    }

    pub fn open_flags(&self) -> &[bool] {
        &self.open
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }
}

/// Size of the largest set of open tiles connected under l-infinity adjacency.
pub fn max_open_animal(grid: &CoarseGrid) -> usize {
    let k = grid.per_side as i64;
    let mut seen = vec![false; grid.len()];
    let mut best = 0;
    let mut stack = Vec::new();
    for start in 0..grid.len() {
        if !grid.open[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let (r, c) = grid.position(i);
            for &(dx, dy) in &STEPS8 {
                let (rr, cc) = (r as i64 + dy as i64, c as i64 + dx as i64);
                if (0..k).contains(&rr) && (0..k).contains(&cc) {
                    let j = (rr * k + cc) as usize;
                    if grid.open[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        best = best.max(size);
    }
    best
}

/// Per-`N` summary of sampled geodesic lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSummary {
    pub n: u32,
    pub samples: usize,
    pub finite: usize,
    pub min: Option<u32>,
    pub median: Option<f64>,
    /// `(q, value)` empirical quantiles of the finite lengths.
    pub quantiles: Vec<(f64, f64)>,
    /// `(a, P(D_N <= N^a))` over all samples, infinite lengths included.
    pub below_power: Vec<(f64, f64)>,
}

/// Growth exponent of the median geodesic length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    /// Slope of `ln median(D_N)` against `ln N`; needs two sizes with finite lengths.
    pub alpha_hat: Option<f64>,
    /// 95% bootstrap interval, widened to contain `alpha_hat` if needed.
    pub confidence_low: Option<f64>,
    pub confidence_high: Option<f64>,
    pub per_n: Vec<GeodesicSummary>,
    /// `N` values dropped because every sample was infinite.
    pub excluded: Vec<u32>,
}

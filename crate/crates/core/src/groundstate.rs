//! Exact zero-temperature ground states of
//! `H(s) = -( sum_{u~v inside} s_u s_v  +/-  sum_{u inside, v on the boundary} s_u  +  sum_u s_u h_u )`
//! by reduction to an s-t minimum cut.
//!
//! Energies are evaluated on the fixed-point field (`2^20` units per unit
//! energy), the same values the cut sees, so the solver, the brute-force
//! oracle and [`hamiltonian`] agree exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::disorder::{FieldSample, FIXED_SCALE};
use crate::error::{Error, Invariant, Result};
use crate::lattice::{Region, Sites, Vertex, VertexSet};
use crate::maxflow::FlowNetwork;

/// One unit of coupling in fixed-point.
const UNIT: i64 = 1 << 20;

/// Largest region accepted by the exhaustive oracle.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Plus,
    Minus,
}

impl Boundary {
    pub fn sign(self) -> i64 {
        match self {
            Boundary::Plus => 1,
            Boundary::Minus => -1,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Boundary::Plus => Boundary::Minus,
            Boundary::Minus => Boundary::Plus,
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Plus => "plus",
            Boundary::Minus => "minus",
        })
    }
}

/// Which minimizer to return when several exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremality {
    /// Intersection of the plus-sets of all minimizers.
    MinimalPlus,
    /// Union of the plus-sets of all minimizers.
    MaximalPlus,
}

/// A `+-1` configuration on a region together with its boundary condition and energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfig {
    sites: Arc<Sites>,
    spins: Vec<i8>,
    boundary: Boundary,
    energy: f64,
}

impl SpinConfig {
    /// Build a configuration and evaluate its energy against `field`.
    pub fn new(
        sites: Arc<Sites>,
        spins: Vec<i8>,
        boundary: Boundary,
        field: &FieldSample,
    ) -> Result<Self> {
        if spins.len() != sites.len() || spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Precondition("spins must be +-1, one per site".into()));
        }
        let energy = to_energy(fixed_energy(&sites, &spins, boundary, field)?);
        Ok(Self { sites, spins, boundary, energy })
    }

    pub fn sites(&self) -> &Arc<Sites> {
        &self.sites
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn spin(&self, v: Vertex) -> Option<i8> {
        self.sites.index_of(v).map(|i| self.spins[i])
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn plus_set(&self) -> VertexSet {
        self.sites
            .vertices()
            .iter()
            .zip(&self.spins)
            .filter(|(_, &s)| s == 1)
            .map(|(&v, _)| v)
            .collect()
    }

    /// Flip one spin and re-evaluate the energy.
    pub fn flip(&mut self, i: usize, field: &FieldSample) -> Result<()> {
        self.spins[i] = -self.spins[i];
        self.energy = to_energy(fixed_energy(&self.sites, &self.spins, self.boundary, field)?);
        Ok(())
    }

    /// Text grid of `+`/`-`, one row per `y` in increasing order; `.` marks holes.
    pub fn dump(&self, out: impl Write) -> io::Result<()> {
        dump_grid(&self.sites, out, |i| if self.spins[i] == 1 { '+' } else { '-' })
    }
}

pub(crate) fn dump_grid(
    sites: &Sites,
    mut out: impl Write,
    glyph: impl Fn(usize) -> char,
) -> io::Result<()> {
    let Some(b) = sites.bounds() else { return Ok(()) };
    for y in b.min.y..=b.max.y {
        let row: String = (b.min.x..=b.max.x)
            .map(|x| sites.index_of(Vertex::new(x, y)).map_or('.', &glyph))
            .collect();
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn to_energy(fixed: i128) -> f64 {
    fixed as f64 / FIXED_SCALE
}

fn field_indices(field: &FieldSample, sites: &Sites) -> Result<Vec<usize>> {
    sites
        .vertices()
        .iter()
        .map(|&v| {
            field
                .sites()
                .index_of(v)
                .ok_or_else(|| Error::RegionMismatch(format!("field does not cover {v}")))
        })
        .collect()
}

/// Folded fixed-point field `h'_u = h_u +/- (#boundary neighbours of u)`.
fn effective_fixed(field: &FieldSample, sites: &Sites, boundary: Boundary) -> Result<Vec<i64>> {
    let idx = field_indices(field, sites)?;
    (0..sites.len())
        .map(|i| {
            let h = field.fixed_at(idx[i])?;
            Ok(h + boundary.sign() * UNIT * i64::from(sites.outside_degree(i)))
        })
        .collect()
}

/// Energy in fixed-point units. Interior edges are counted once.
fn fixed_energy(sites: &Sites, spins: &[i8], boundary: Boundary, field: &FieldSample) -> Result<i128> {
    let idx = field_indices(field, sites)?;
    let mut total = 0i128;
    for i in 0..sites.len() {
        let s = i128::from(spins[i]);
        let v = sites.vertex(i);
        for w in [v.offset(1, 0), v.offset(0, 1)] {
            if let Some(j) = sites.index_of(w) {
                total -= i128::from(UNIT) * s * i128::from(spins[j]);
            }
        }
        total -= i128::from(boundary.sign() * UNIT) * i128::from(sites.outside_degree(i)) * s;
        total -= i128::from(field.fixed_at(idx[i])?) * s;
    }
    Ok(total)
}

/// Evaluate the Hamiltonian of `spins` against `field`.
pub fn hamiltonian(spins: &SpinConfig, field: &FieldSample) -> Result<f64> {
    Ok(to_energy(fixed_energy(&spins.sites, &spins.spins, spins.boundary, field)?))
}

/// The field with the boundary term folded in: interior sites are unchanged,
/// a site with `k` neighbours on the outer boundary gets `+-k`.
pub fn effective_field(
    field: &FieldSample,
    region: &impl Region,
    boundary: Boundary,
) -> Result<BTreeMap<Vertex, f64>> {
    let sites = Sites::new(region);
    let idx = field_indices(field, &sites)?;
    Ok((0..sites.len())
        .map(|i| {
            let shift = boundary.sign() as f64 * f64::from(sites.outside_degree(i));
            (sites.vertex(i), field.value_at(idx[i]) + shift)
        })
        .collect())
}

/// Both extremal ground states for one boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub minimal: SpinConfig,
    pub maximal: SpinConfig,
}

impl Solution {
    /// More than one minimizer exists (a tie at fixed-point resolution).
    pub fn is_tie(&self) -> bool {
        self.minimal.spins != self.maximal.spins
    }

    pub fn pick(self, extremality: Extremality) -> SpinConfig {
        match extremality {
            Extremality::MinimalPlus => self.minimal,
            Extremality::MaximalPlus => self.maximal,
        }
    }
}

/// Solve one boundary condition on the region given by `sites`.
///
/// Sites map to nodes `0..n`; the source side of the cut is the plus phase.
/// Disagreeing neighbours cost 2 per edge, and `h'_u > 0` becomes a source arc
/// of capacity `2 h'_u` while `h'_u < 0` becomes a sink arc of `2 |h'_u|`, so
/// `H = -|E| - sum |h'| + cut`.
pub fn solve_sites(field: &FieldSample, sites: &Arc<Sites>, boundary: Boundary) -> Result<Solution> {
    if sites.is_empty() {
        return Err(Error::EmptyInput("ground state of an empty region"));
    }
    let n = sites.len();
    let folded = effective_fixed(field, sites, boundary)?;
    let (source, sink) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2, source, sink);
    let mut interior_edges = 0i128;
    let mut abs_sum = 0i128;
    for (i, &h) in folded.iter().enumerate() {
        match h {
            h if h > 0 => net.add_arc(source, i, 2 * h),
            h if h < 0 => net.add_arc(i, sink, -2 * h),
            _ => {}
        }
        abs_sum += i128::from(h.abs());
        let v = sites.vertex(i);
        for w in [v.offset(1, 0), v.offset(0, 1)] {
            if let Some(j) = sites.index_of(w) {
                net.add_edge(i, j, 2 * UNIT, 2 * UNIT);
                interior_edges += 1;
            }
        }
    }
    let cut = net.solve();
    let predicted = -interior_edges * i128::from(UNIT) - abs_sum + cut.flow;

    let spins_of = |side: &[bool]| -> Vec<i8> {
        side[..n].iter().map(|&plus| if plus { 1 } else { -1 }).collect()
    };
    let build = |spins: Vec<i8>| -> Result<SpinConfig> {
        let fixed = fixed_energy(sites, &spins, boundary, field)?;
        if fixed != predicted {
            return Err(Error::violation(Invariant::CutEnergy, format!(
                "cut energy {predicted} disagrees with Hamiltonian {fixed}"
            )));
        }
        Ok(SpinConfig { sites: Arc::clone(sites), spins, boundary, energy: to_energy(fixed) })
    };
    Ok(Solution {
        minimal: build(spins_of(&cut.min_source_side))?,
        maximal: build(spins_of(&cut.max_source_side))?,
    })
}

pub fn solve(field: &FieldSample, region: &impl Region, boundary: Boundary) -> Result<Solution> {
    solve_sites(field, &Arc::new(Sites::new(region)), boundary)
}

/// The extremal ground state of `region` under `boundary`.
pub fn ground_state(
    field: &FieldSample,
    region: &impl Region,
    boundary: Boundary,
    extremality: Extremality,
) -> Result<SpinConfig> {
    Ok(solve(field, region, boundary)?.pick(extremality))
}

/// Exhaustive minimization; ties go to the lexicographically largest spin
/// vector in row-major order, which is the maximal-plus minimizer.
pub fn ground_state_bruteforce(
    field: &FieldSample,
    region: &impl Region,
    boundary: Boundary,
) -> Result<SpinConfig> {
    let sites = Arc::new(Sites::new(region));
    let n = sites.len();
    if n == 0 {
        return Err(Error::EmptyInput("ground state of an empty region"));
    }
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::RegionTooLarge { size: n, limit: BRUTE_FORCE_LIMIT });
    }
    let folded = effective_fixed(field, &sites, boundary)?;
    let mut edges = Vec::new();
    for i in 0..n {
        edges.extend(sites.neighbor_indices(i).filter(|&j| j > i).map(|j| (i, j)));
    }
    // Site i is bit n-1-i, so numerically larger masks are lexicographically larger.
    let spin = |mask: u32, i: usize| -> i128 { if mask >> (n - 1 - i) & 1 == 1 { 1 } else { -1 } };
    let mut best: Option<(i128, u32)> = None;
    for mask in 0u32..(1 << n) {
        let mut e = 0i128;
        for &(i, j) in &edges {
            e -= i128::from(UNIT) * spin(mask, i) * spin(mask, j);
        }
        for (i, &h) in folded.iter().enumerate() {
            e -= i128::from(h) * spin(mask, i);
        }
        if best.is_none_or(|(be, bm)| e < be || (e == be && mask > bm)) {
            best = Some((e, mask));
        }
    }
    let (_, mask) = best.expect("at least one configuration");
    let spins = (0..n).map(|i| spin(mask, i) as i8).collect();
    SpinConfig::new(sites, spins, boundary, field)
}

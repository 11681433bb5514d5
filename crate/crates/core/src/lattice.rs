//! Integer-lattice geometry on Z^2.
//!
//! Every region enumerates its vertices in row-major order: increasing `y`,
//! and within a row increasing `x`. [`Vertex`] orders the same way, so
//! ordered collections of vertices iterate deterministically.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A site of Z^2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i32,
    pub y: i32,
}

pub const ORIGIN: Vertex = Vertex { x: 0, y: 0 };

impl Vertex {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub const fn offset(self, dx: i32, dy: i32) -> Self {
        Self { x: self.x + dx, y: self.y + dy }
    }

    /// Nearest neighbors in the fixed order east, north, west, south.
    pub const fn neighbors(self) -> [Vertex; 4] {
        [self.offset(1, 0), self.offset(0, 1), self.offset(-1, 0), self.offset(0, -1)]
    }

    /// The eight sites at sup-norm distance one.
    pub const fn neighbors8(self) -> [Vertex; 8] {
        [
            self.offset(1, 0),
            self.offset(1, 1),
            self.offset(0, 1),
            self.offset(-1, 1),
            self.offset(-1, 0),
            self.offset(-1, -1),
            self.offset(0, -1),
            self.offset(1, -1),
        ]
    }

    pub fn linf(self, other: Vertex) -> u32 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    pub fn l1(self, other: Vertex) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn is_adjacent(self, other: Vertex) -> bool {
        self.l1(other) == 1
    }
}

impl Ord for Vertex {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Vertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Inclusive axis-parallel bounding rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub min: Vertex,
    pub max: Vertex,
}

impl Bounds {
    pub fn new(min: Vertex, max: Vertex) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y);
        Self { min, max }
    }

    pub fn width(&self) -> usize {
        (self.max.x - self.min.x) as usize + 1
    }

    pub fn height(&self) -> usize {
        (self.max.y - self.min.y) as usize + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.x >= self.min.x && v.x <= self.max.x && v.y >= self.min.y && v.y <= self.max.y
    }

    pub fn grow(&self, by: i32) -> Self {
        Self::new(self.min.offset(-by, -by), self.max.offset(by, by))
    }

    pub fn union(&self, other: &Bounds) -> Self {
        Self::new(
            Vertex::new(self.min.x.min(other.min.x), self.min.y.min(other.min.y)),
            Vertex::new(self.max.x.max(other.max.x), self.max.y.max(other.max.y)),
        )
    }

    /// Dense row-major slot of `v`, if inside.
    pub fn slot(&self, v: Vertex) -> Option<usize> {
        self.contains(v).then(|| {
            (v.y - self.min.y) as usize * self.width() + (v.x - self.min.x) as usize
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        (self.min.y..=self.max.y)
            .flat_map(move |y| (self.min.x..=self.max.x).map(move |x| Vertex::new(x, y)))
    }
}

/// A finite set of lattice sites.
pub trait Region {
    fn contains(&self, v: Vertex) -> bool;

    /// Bounding rectangle; `None` for an empty region.
    fn bounds(&self) -> Option<Bounds>;

    /// Vertices in row-major order.
    fn vertices(&self) -> Vec<Vertex> {
        match self.bounds() {
            Some(b) => b.iter().filter(|&v| self.contains(v)).collect(),
            None => Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.vertices().len()
    }

    fn is_empty(&self) -> bool {
        self.bounds().is_none()
    }

    fn to_set(&self) -> VertexSet {
        self.vertices().into_iter().collect()
    }
}

/// Square box `{v : |v - center|_inf <= radius}`; its side length is `2 * radius`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub center: Vertex,
    pub radius: u32,
}

impl BoxRegion {
    pub const fn new(center: Vertex, radius: u32) -> Self {
        Self { center, radius }
    }

    /// `Lambda_N`, the box of radius `n` about the origin.
    pub const fn centered(n: u32) -> Self {
        Self { center: ORIGIN, radius: n }
    }

    pub fn side_length(&self) -> u32 {
        2 * self.radius
    }

    pub fn vertex_count(&self) -> usize {
        let w = 2 * self.radius as usize + 1;
        w * w
    }

    /// The sites at sup-distance exactly `radius + 1`, i.e. the outer boundary.
    pub fn boundary_ring(&self) -> VertexSet {
        ring(self.center, self.radius + 1)
    }

    /// The sites at sup-distance exactly `radius`: the ones with a neighbor outside.
    pub fn inner_ring(&self) -> VertexSet {
        ring(self.center, self.radius)
    }
}

/// Sites at sup-distance exactly `r` from `center`.
pub fn ring(center: Vertex, r: u32) -> VertexSet {
    let r = r as i32;
    let mut out = VertexSet::new();
    for y in -r..=r {
        for x in -r..=r {
            if x.abs() == r || y.abs() == r {
                out.insert(center.offset(x, y));
            }
        }
    }
    out
}

impl Region for BoxRegion {
    fn contains(&self, v: Vertex) -> bool {
        v.linf(self.center) <= self.radius
    }

    fn bounds(&self) -> Option<Bounds> {
        let r = self.radius as i32;
        Some(Bounds::new(self.center.offset(-r, -r), self.center.offset(r, r)))
    }

    fn len(&self) -> usize {
        self.vertex_count()
    }
}

/// Concentric difference `outer \ inner`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnulusRegion {
    outer: BoxRegion,
    inner: BoxRegion,
}

impl AnnulusRegion {
    pub fn new(outer: BoxRegion, inner: BoxRegion) -> Result<Self> {
        if outer.center != inner.center {
            return Err(Error::Parameter("annulus boxes must share a center".into()));
        }
        if inner.radius >= outer.radius {
            return Err(Error::Parameter(format!(
                "annulus inner radius {} must be below outer radius {}",
                inner.radius, outer.radius
            )));
        }
        Ok(Self { outer, inner })
    }

    /// `Lambda_outer \ Lambda_inner` about the origin.
    pub fn centered(outer: u32, inner: u32) -> Result<Self> {
        Self::new(BoxRegion::centered(outer), BoxRegion::centered(inner))
    }

    /// `A_N = Lambda_N \ Lambda_{N/2}`.
    pub fn dyadic(n: u32) -> Result<Self> {
        Self::centered(n, n / 2)
    }

    pub fn outer(&self) -> BoxRegion {
        self.outer
    }

    pub fn inner(&self) -> BoxRegion {
        self.inner
    }
}

impl Region for AnnulusRegion {
    fn contains(&self, v: Vertex) -> bool {
        self.outer.contains(v) && !self.inner.contains(v)
    }

    fn bounds(&self) -> Option<Bounds> {
        self.outer.bounds()
    }

    fn len(&self) -> usize {
        self.outer.vertex_count() - self.inner.vertex_count()
    }
}

/// Axis-parallel rectangle of `width` columns and `height` rows of sites,
/// with `corner` the site of smallest coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RectRegion {
    pub corner: Vertex,
    pub width: u32,
    pub height: u32,
}

impl RectRegion {
    pub fn new(corner: Vertex, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter("rectangle sides must be positive".into()));
        }
        Ok(Self { corner, width, height })
    }

    /// Rectangle of the given size whose center site is `center`.
    pub fn centered_at(center: Vertex, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Parameter("rectangle sides must be positive".into()));
        }
        let corner = center.offset(-(((width - 1) / 2) as i32), -(((height - 1) / 2) as i32));
        Self::new(corner, width, height)
    }

    pub fn long_side(&self) -> u32 {
        self.width.max(self.height)
    }

    pub fn short_side(&self) -> u32 {
        self.width.min(self.height)
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.long_side() as f64 / self.short_side() as f64
    }

    /// Wider than tall (squares count as horizontal).
    pub fn is_horizontal(&self) -> bool {
        self.width >= self.height
    }

    /// Center site, rounding toward the corner.
    pub fn center(&self) -> Vertex {
        self.corner
            .offset(((self.width - 1) / 2) as i32, ((self.height - 1) / 2) as i32)
    }

    /// The same rectangle turned by 90 degrees about its center site.
    pub fn rotated(&self) -> Self {
        Self::centered_at(self.center(), self.height, self.width)
            .expect("sides stay positive")
    }
}

impl Region for RectRegion {
    fn contains(&self, v: Vertex) -> bool {
        self.bounds().is_some_and(|b| b.contains(v))
    }

    fn bounds(&self) -> Option<Bounds> {
        Some(Bounds::new(
            self.corner,
            self.corner.offset(self.width as i32 - 1, self.height as i32 - 1),
        ))
    }

    fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Ordered set of sites.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct VertexSet(BTreeSet<Vertex>);

impl VertexSet {
    pub fn new() -> Self {
        Self(BTreeSet::new())
    }

    pub fn insert(&mut self, v: Vertex) -> bool {
        self.0.insert(v)
    }

    pub fn remove(&mut self, v: &Vertex) -> bool {
        self.0.remove(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        self.0.intersection(&other.0).copied().collect()
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        self.0.union(&other.0).copied().collect()
    }

    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        self.0.difference(&other.0).copied().collect()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Members inside `region`.
    pub fn restrict(&self, region: &impl Region) -> VertexSet {
        self.iter().filter(|&v| region.contains(v)).collect()
    }

    pub fn first(&self) -> Option<Vertex> {
        self.0.first().copied()
    }
}

impl Region for VertexSet {
    fn contains(&self, v: Vertex) -> bool {
        self.0.contains(&v)
    }

    fn bounds(&self) -> Option<Bounds> {
        let first = self.0.first()?;
        let last = self.0.last()?;
        let (lo, hi) = self
            .0
            .iter()
            .fold((first.x, first.x), |(lo, hi), v| (lo.min(v.x), hi.max(v.x)));
        Some(Bounds::new(Vertex::new(lo, first.y), Vertex::new(hi, last.y)))
    }

    fn vertices(&self) -> Vec<Vertex> {
        self.iter().collect()
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn to_set(&self) -> VertexSet {
        self.clone()
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a VertexSet {
    type Item = &'a Vertex;
    type IntoIter = std::collections::btree_set::Iter<'a, Vertex>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

const NO_SLOT: u32 = u32::MAX;

/// Dense index of a region: vertex `i` in row-major order maps to `i`.
///
/// Per-site data throughout the crate lives in `Vec`s aligned with a `Sites`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sites {
    vertices: Vec<Vertex>,
    bounds: Option<Bounds>,
    slots: Vec<u32>,
}

impl Sites {
    pub fn new(region: &impl Region) -> Self {
        Self::from_sorted(region.vertices(), region.bounds())
    }

    fn from_sorted(vertices: Vec<Vertex>, bounds: Option<Bounds>) -> Self {
        let mut slots = vec![NO_SLOT; bounds.map_or(0, |b| b.area())];
        if let Some(b) = bounds {
            for (i, &v) in vertices.iter().enumerate() {
                slots[b.slot(v).expect("vertex inside its bounds")] = i as u32;
            }
        }
        Self { vertices, bounds, slots }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vertex {
        self.vertices[i]
    }

    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        let slot = self.bounds?.slot(v)?;
        match self.slots[slot] {
            NO_SLOT => None,
            i => Some(i as usize),
        }
    }

    /// Indices of the in-region nearest neighbors of site `i`, in E, N, W, S order.
    pub fn neighbor_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.vertices[i]
            .neighbors()
            .into_iter()
            .filter_map(|w| self.index_of(w))
    }

    /// Number of nearest neighbors of site `i` outside the region.
    pub fn outside_degree(&self, i: usize) -> u32 {
        self.vertices[i]
            .neighbors()
            .into_iter()
            .filter(|&w| self.index_of(w).is_none())
            .count() as u32
    }

    pub fn is_subset_of(&self, other: &Sites) -> bool {
        self.vertices.iter().all(|&v| other.index_of(v).is_some())
    }
}

impl Region for Sites {
    fn contains(&self, v: Vertex) -> bool {
        self.index_of(v).is_some()
    }

    fn bounds(&self) -> Option<Bounds> {
        self.bounds
    }

    fn vertices(&self) -> Vec<Vertex> {
        self.vertices.clone()
    }

    fn len(&self) -> usize {
        self.vertices.len()
    }

    fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// `{v outside region : v ~ u for some u in region}`.
pub fn outer_boundary(region: &impl Region) -> Result<VertexSet> {
    if region.is_empty() {
        return Err(Error::EmptyInput("outer boundary of an empty region"));
    }
    let mut out = VertexSet::new();
    for u in region.vertices() {
        for w in u.neighbors() {
            if !region.contains(w) {
                out.insert(w);
            }
        }
    }
    Ok(out)
}

/// All ordered pairs `(u, v)` with `u` in `a`, `v` in `b` and `u ~ v`.
pub fn ordered_edges(a: &impl Region, b: &impl Region) -> Vec<(Vertex, Vertex)> {
    let mut out = Vec::new();
    for u in a.vertices() {
        for w in u.neighbors() {
            if b.contains(w) {
                out.push((u, w));
            }
        }
    }
    out
}

/// Shapes with a center and a longest side, for building companion boxes.
pub trait Shape {
    fn center(&self) -> Vertex;
    fn long_side(&self) -> u32;
}

impl Shape for BoxRegion {
    fn center(&self) -> Vertex {
        self.center
    }

    fn long_side(&self) -> u32 {
        self.side_length()
    }
}

impl Shape for RectRegion {
    fn center(&self) -> Vertex {
        RectRegion::center(self)
    }

    fn long_side(&self) -> u32 {
        RectRegion::long_side(self)
    }
}

/// Concentric square box of side `factor * l`, where `l` is the longest side.
/// The radius is `floor(factor * l / 2)`.
pub fn scaled_box(shape: &impl Shape, factor: u32) -> Result<BoxRegion> {
    if factor == 0 {
        return Err(Error::Parameter("scale factor must be positive".into()));
    }
    let side = u64::from(factor) * u64::from(shape.long_side());
    let radius = u32::try_from(side / 2)
        .map_err(|_| Error::Parameter(format!("scaled box side {side} overflows")))?;
    Ok(BoxRegion::new(shape.center(), radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: i32, y: i32) -> Vertex {
        Vertex::new(x, y)
    }

    #[test]
    fn boundary_of_single_site_is_its_neighbors() {
        let b = outer_boundary(&BoxRegion::centered(0)).unwrap();
        assert_eq!(b, ORIGIN.neighbors().into_iter().collect());
    }

    #[test]
    fn boundary_of_three_by_three_box_is_twelve_site_ring() {
        let b = outer_boundary(&BoxRegion::centered(1)).unwrap();
        assert_eq!(b.len(), 12);
        for c in [v(2, 2), v(-2, 2), v(2, -2), v(-2, -2)] {
            assert!(!b.contains(c));
        }
        assert!(b.iter().all(|w| w.linf(ORIGIN) == 2));
    }

    #[test]
    fn boundary_of_diagonal_pair_merges_shared_neighbors() {
        let set: VertexSet = [v(0, 0), v(1, 1)].into_iter().collect();
        assert_eq!(outer_boundary(&set).unwrap().len(), 6);
    }

    #[test]
    fn boundary_of_empty_region_is_an_error() {
        assert!(matches!(outer_boundary(&VertexSet::new()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn ordered_edge_examples() {
        let o = BoxRegion::centered(0);
        let bo = outer_boundary(&o).unwrap();
        assert_eq!(ordered_edges(&o, &bo).len(), 4);
        assert!(ordered_edges(&o, &o).is_empty());
        let l1 = BoxRegion::centered(1);
        assert_eq!(ordered_edges(&l1, &outer_boundary(&l1).unwrap()).len(), 12);
    }

    #[test]
    fn scaled_box_examples() {
        let b = scaled_box(&BoxRegion::centered(4), 2).unwrap();
        assert_eq!(b, BoxRegion::centered(8));

        let r = RectRegion::new(ORIGIN, 8, 2).unwrap();
        let big = scaled_box(&r, 4).unwrap();
        assert_eq!(big.radius, 16);
        assert_eq!(big.center, r.center());

        let thin = RectRegion::new(ORIGIN, 3, 1).unwrap();
        assert_eq!(scaled_box(&thin, 32).unwrap().radius, 48);
    }

    #[test]
    fn regions_enumerate_row_major() {
        let verts = BoxRegion::centered(1).vertices();
        assert_eq!(verts.first(), Some(&v(-1, -1)));
        assert_eq!(verts[1], v(0, -1));
        assert!(verts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn annulus_requires_nested_radii() {
        assert!(AnnulusRegion::centered(2, 2).is_err());
        assert!(AnnulusRegion::new(BoxRegion::centered(3), BoxRegion::new(v(1, 0), 1)).is_err());
        let a = AnnulusRegion::dyadic(8).unwrap();
        assert_eq!(a.inner().radius, 4);
        assert_eq!(a.len(), 17 * 17 - 9 * 9);
    }

    #[test]
    fn membership_agrees_with_enumeration() {
        for outer in 0..=8u32 {
            let b = BoxRegion::centered(outer);
            let explicit: Vec<Vertex> = (-(outer as i32)..=outer as i32)
                .flat_map(|y| (-(outer as i32)..=outer as i32).map(move |x| v(x, y)))
                .collect();
            assert_eq!(b.vertices(), explicit);
            assert_eq!(b.len(), (2 * outer as usize + 1).pow(2));
            for inner in 0..outer {
                let a = AnnulusRegion::centered(outer, inner).unwrap();
                let expect: Vec<Vertex> = explicit
                    .iter()
                    .copied()
                    .filter(|w| w.x.unsigned_abs().max(w.y.unsigned_abs()) > inner)
                    .collect();
                assert_eq!(a.vertices(), expect);
                assert_eq!(Region::len(&a), expect.len());
            }
        }
    }

    #[test]
    fn sites_index_round_trips() {
        let a = AnnulusRegion::centered(3, 1).unwrap();
        let sites = Sites::new(&a);
        assert_eq!(sites.len(), 40);
        for (i, &w) in sites.vertices().iter().enumerate() {
            assert_eq!(sites.index_of(w), Some(i));
        }
        assert_eq!(sites.index_of(ORIGIN), None);
        assert_eq!(sites.index_of(v(9, 9)), None);
    }

    #[test]
    fn rect_geometry() {
        let r = RectRegion::centered_at(ORIGIN, 9, 3).unwrap();
        assert_eq!(r.center(), ORIGIN);
        assert_eq!(r.corner, v(-4, -1));
        assert_eq!(r.aspect_ratio(), 3.0);
        let t = r.rotated();
        assert_eq!((t.width, t.height), (3, 9));
        assert_eq!(t.center(), ORIGIN);
        assert!(RectRegion::new(ORIGIN, 0, 2).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_set() -> impl Strategy<Value = VertexSet> {
            prop::collection::vec((-4i32..=4, -4i32..=4), 1..20)
                .prop_map(|pts| pts.into_iter().map(|(x, y)| Vertex::new(x, y)).collect())
        }

        proptest! {
            #[test]
            fn boundary_is_disjoint_and_adjacent(a in small_set()) {
                let b = outer_boundary(&a).unwrap();
                prop_assert!(b.intersection(&a).is_empty());
                for w in b.iter() {
                    prop_assert!(w.neighbors().iter().any(|n| a.contains(*n)));
                }
                for u in a.iter() {
                    for n in u.neighbors() {
                        prop_assert!(a.contains(n) || b.contains(n));
                    }
                }
            }

            #[test]
            fn ordered_edge_count_is_symmetric(a in small_set(), b in small_set()) {
                prop_assert_eq!(ordered_edges(&a, &b).len(), ordered_edges(&b, &a).len());
            }
        }
    }
}

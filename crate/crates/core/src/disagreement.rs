//! The labeling `xi` obtained by comparing plus- and minus-boundary ground
//! states, disagreement sets, and the edge bookkeeping behind the stability
//! inequality for flipping a disagreement cluster.

use std::collections::VecDeque;
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::disorder::{FieldSample, FIXED_SCALE};
use crate::error::{Error, Invariant, Result};
use crate::groundstate::{
    dump_grid, ground_state_bruteforce, solve_sites, Boundary, SpinConfig,
};
use crate::lattice::{Bounds, Region, Sites, Vertex, VertexSet};

/// Ordered `Minus < Zero < Plus`, matching the spin order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Minus,
    Zero,
    Plus,
}

impl Label {
    pub fn glyph(self) -> char {
        match self {
            Label::Plus => '+',
            Label::Minus => '-',
            Label::Zero => '0',
        }
    }

    /// Virtual label carried by outer-boundary sites.
    pub fn of_boundary(boundary: Boundary) -> Self {
        match boundary {
            Boundary::Plus => Label::Plus,
            Boundary::Minus => Label::Minus,
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    const ALL: [Label; 3] = [Label::Minus, Label::Zero, Label::Plus];
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.glyph())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    sites: Arc<Sites>,
    labels: Vec<Label>,
}

impl LabelGrid {
    /// Combine a plus-boundary and a minus-boundary configuration on the same region.
    pub fn from_pair(plus: &SpinConfig, minus: &SpinConfig) -> Result<Self> {
        if plus.sites() != minus.sites() {
            return Err(Error::RegionMismatch("ground states live on different regions".into()));
        }
        let mut labels = Vec::with_capacity(plus.spins().len());
        for (i, (&p, &m)) in plus.spins().iter().zip(minus.spins()).enumerate() {
            labels.push(match (p, m) {
                (1, 1) => Label::Plus,
                (-1, -1) => Label::Minus,
                (1, -1) => Label::Zero,
                _ => {
                    return Err(Error::violation(Invariant::Coupling, format!(
                        "plus-boundary spin -1 above minus-boundary spin +1 at {}",
                        plus.sites().vertex(i)
                    )))
                }
            });
        }
        Ok(Self { sites: Arc::clone(plus.sites()), labels })
    }

    pub fn from_labels(sites: Arc<Sites>, labels: Vec<Label>) -> Result<Self> {
        if sites.len() != labels.len() {
            return Err(Error::Precondition("one label per site".into()));
        }
        Ok(Self { sites, labels })
    }

    pub fn sites(&self) -> &Arc<Sites> {
        &self.sites
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, v: Vertex) -> Option<Label> {
        self.sites.index_of(v).map(|i| self.labels[i])
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Text grid of `+`, `-`, `0`, one row per `y` in increasing order.
    pub fn dump(&self, out: impl Write) -> io::Result<()> {
        dump_grid(&self.sites, out, |i| self.labels[i].glyph())
    }
}

/// How the two ground states are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    MinCut,
    /// Exhaustive enumeration; small regions only.
    BruteForce,
}

/// Test hook: corrupt one spin after solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Turn one site into the forbidden `(sigma+, sigma-) = (-1, +1)` pattern.
    FlipOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveOptions {
    pub backend: Backend,
    pub fault: Option<Fault>,
}

/// Both ground states, their labeling and whether either boundary condition had a tie.
#[derive(Debug, Clone)]
pub struct Labeling {
    pub grid: LabelGrid,
    pub plus: SpinConfig,
    pub minus: SpinConfig,
    pub tie: bool,
}

/// Solve both boundary conditions on `sites` (maximal-plus state for the plus
/// boundary, minimal-plus for the minus boundary) and label.
pub fn labeling(field: &FieldSample, sites: &Arc<Sites>, options: SolveOptions) -> Result<Labeling> {
    let (mut plus, mut minus, tie) = match options.backend {
        Backend::MinCut => {
            let p = solve_sites(field, sites, Boundary::Plus)?;
            let m = solve_sites(field, sites, Boundary::Minus)?;
            let tie = p.is_tie() || m.is_tie();
            (p.maximal, m.minimal, tie)
        }
        Backend::BruteForce => (
            ground_state_bruteforce(field, sites.as_ref(), Boundary::Plus)?,
            ground_state_bruteforce(field, sites.as_ref(), Boundary::Minus)?,
            false,
        ),
    };
    if let Some(Fault::FlipOne) = options.fault {
        let both = plus.spins().iter().zip(minus.spins());
        if let Some(i) = both.clone().position(|(&p, &m)| p == 1 && m == 1) {
            plus.flip(i, field)?;
        } else if let Some(i) = both.clone().position(|(&p, &m)| p == -1 && m == -1) {
            minus.flip(i, field)?;
        } else if !plus.spins().is_empty() {
            plus.flip(0, field)?;
            minus.flip(0, field)?;
        }
    }
    let grid = LabelGrid::from_pair(&plus, &minus)?;
    Ok(Labeling { grid, plus, minus, tie })
}

/// The labeling `xi` of `region`.
pub fn labels(field: &FieldSample, region: &impl Region) -> Result<LabelGrid> {
    Ok(labeling(field, &Arc::new(Sites::new(region)), SolveOptions::default())?.grid)
}

const NOT_MEMBER: u32 = u32::MAX;

/// Zero-labeled sites with their 4-connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisagreementSet {
    sites: Arc<Sites>,
    member: Vec<bool>,
    component: Vec<u32>,
    components: usize,
}

impl DisagreementSet {
    /// Components are numbered in row-major order of their first site.
    pub fn from_members(sites: Arc<Sites>, member: Vec<bool>) -> Self {
        assert_eq!(sites.len(), member.len());
        let mut component = vec![NOT_MEMBER; member.len()];
        let mut next = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..member.len() {
            if !member[start] || component[start] != NOT_MEMBER {
                continue;
            }
            component[start] = next;
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                for j in sites.neighbor_indices(i) {
                    if member[j] && component[j] == NOT_MEMBER {
                        component[j] = next;
                        queue.push_back(j);
                    }
                }
            }
            next += 1;
        }
        Self { sites, member, component, components: next as usize }
    }

    pub fn sites(&self) -> &Arc<Sites> {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|&m| m)
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.sites.index_of(v).is_some_and(|i| self.member[i])
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.member[i]
    }

    pub fn mask(&self) -> &[bool] {
        &self.member
    }

    pub fn members(&self) -> VertexSet {
        self.indices().map(|i| self.sites.vertex(i)).collect()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.member.len()).filter(|&i| self.member[i])
    }

    pub fn component_of(&self, v: Vertex) -> Option<usize> {
        let i = self.sites.index_of(v)?;
        (self.component[i] != NOT_MEMBER).then_some(self.component[i] as usize)
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    pub fn components(&self) -> Vec<VertexSet> {
        let mut out = vec![VertexSet::new(); self.components];
        for i in self.indices() {
            out[self.component[i] as usize].insert(self.sites.vertex(i));
        }
        out
    }

    /// Number of members inside `region`.
    pub fn count_in(&self, region: &impl Region) -> usize {
        self.indices().filter(|&i| region.contains(self.sites.vertex(i))).count()
    }
}

impl Region for DisagreementSet {
    fn contains(&self, v: Vertex) -> bool {
        DisagreementSet::contains(self, v)
    }

    fn bounds(&self) -> Option<Bounds> {
        let mut it = self.indices().map(|i| self.sites.vertex(i));
        let first = it.next()?;
        Some(it.fold(Bounds::new(first, first), |b, v| b.union(&Bounds::new(v, v))))
    }

    fn vertices(&self) -> Vec<Vertex> {
        self.indices().map(|i| self.sites.vertex(i)).collect()
    }

    fn len(&self) -> usize {
        DisagreementSet::len(self)
    }

    fn is_empty(&self) -> bool {
        DisagreementSet::is_empty(self)
    }
}

pub fn disagreement_set(lg: &LabelGrid) -> DisagreementSet {
    let member = lg.labels.iter().map(|&l| l == Label::Zero).collect();
    DisagreementSet::from_members(Arc::clone(&lg.sites), member)
}

/// `C ∩ C'` on a common region, with components recomputed.
pub fn common_disagreement(a: &DisagreementSet, b: &DisagreementSet) -> Result<DisagreementSet> {
    if a.sites != b.sites {
        return Err(Error::RegionMismatch("disagreement sets on different regions".into()));
    }
    let member = a.member.iter().zip(&b.member).map(|(&x, &y)| x && y).collect();
    Ok(DisagreementSet::from_members(Arc::clone(&a.sites), member))
}

/// Counts of ordered edges `<u, v>` leaving `S`, split by the label of `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgePartition {
    pub plus: u32,
    pub minus: u32,
    pub zero: u32,
}

impl EdgePartition {
    pub fn total(&self) -> u32 {
        self.plus + self.minus + self.zero
    }
}

/// Split `E(S, S^c)` by the label at the far end; sites of the outer boundary
/// carry the boundary condition's label.
pub fn boundary_edge_partition(
    set: &impl Region,
    lg: &LabelGrid,
    boundary: Boundary,
) -> Result<EdgePartition> {
    let mut out = EdgePartition::default();
    for u in set.vertices() {
        if !lg.sites.contains(u) {
            return Err(Error::RegionMismatch(format!("{u} is outside the labeled region")));
        }
        for w in u.neighbors() {
            if set.contains(w) {
                continue;
            }
            match lg.label(w).unwrap_or(Label::of_boundary(boundary)) {
                Label::Plus => out.plus += 1,
                Label::Minus => out.minus += 1,
                Label::Zero => out.zero += 1,
            }
        }
    }
    Ok(out)
}

/// Half the energy change from flipping the zero-labeled set `S` in the ground
/// state of `boundary`, in fixed-point units. Under the plus boundary this is
/// `h_S + n+ - n- + n0`; under the minus boundary `-h_S - n+ + n- + n0`.
/// Minimality of the ground state makes it nonnegative.
pub fn flip_energy_fixed(
    set: &impl Region,
    field: &FieldSample,
    lg: &LabelGrid,
    boundary: Boundary,
) -> Result<i128> {
    for v in set.vertices() {
        if lg.label(v) != Some(Label::Zero) {
            return Err(Error::Precondition(format!("{v} is not zero-labeled")));
        }
    }
    let n = boundary_edge_partition(set, lg, boundary)?;
    let h = field.fixed_sum(set)?;
    let unit = FIXED_SCALE as i128;
    let (plus, minus, zero) = (i128::from(n.plus), i128::from(n.minus), i128::from(n.zero));
    Ok(match boundary {
        Boundary::Plus => h + unit * (plus - minus + zero),
        Boundary::Minus => -h + unit * (-plus + minus + zero),
    })
}

pub fn flip_energy_delta(
    set: &impl Region,
    field: &FieldSample,
    lg: &LabelGrid,
    boundary: Boundary,
) -> Result<f64> {
    Ok(flip_energy_fixed(set, field, lg, boundary)? as f64 / FIXED_SCALE)
}

/// Check the stability inequality for every zero component under both boundaries.
/// Returns the number of components checked.
pub fn check_stability(field: &FieldSample, lg: &LabelGrid) -> Result<usize> {
    let c = disagreement_set(lg);
    for comp in c.components() {
        for bc in [Boundary::Plus, Boundary::Minus] {
            let delta = flip_energy_fixed(&comp, field, lg, bc)?;
            if delta < 0 {
                return Err(Error::violation(Invariant::Stability, format!(
                    "flipping the zero cluster at {} lowers the {bc}-boundary energy by {}",
                    comp.first().expect("components are nonempty"),
                    -(delta as f64) / FIXED_SCALE
                )));
            }
        }
    }
    Ok(c.component_count())
}

/// Label transition counts `before -> after`, indexed `[from][to]` in `Minus, Zero, Plus` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Transitions(pub [[u32; 3]; 3]);

impl Transitions {
    pub fn get(&self, from: Label, to: Label) -> u32 {
        self.0[from.index()][to.index()]
    }

    /// No site moved down (`plus -> zero/minus`, `zero -> minus`).
    pub fn is_monotone_up(&self) -> bool {
        Label::ALL.iter().all(|&from| {
            Label::ALL.iter().filter(|&&to| to < from).all(|&to| self.get(from, to) == 0)
        })
    }

    pub fn merge(&mut self, other: &Transitions) {
        for (row, o) in self.0.iter_mut().zip(other.0.iter()) {
            for (c, x) in row.iter_mut().zip(o) {
                *c += x;
            }
        }
    }
}

pub fn transitions(before: &LabelGrid, after: &LabelGrid) -> Result<Transitions> {
    if before.sites != after.sites {
        return Err(Error::RegionMismatch("label grids on different regions".into()));
    }
    let mut t = Transitions::default();
    for (a, b) in before.labels.iter().zip(&after.labels) {
        t.0[a.index()][b.index()] += 1;
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_field, PerturbationSpec};
    use crate::lattice::{BoxRegion, ORIGIN};

    fn v(x: i32, y: i32) -> Vertex {
        Vertex::new(x, y)
    }

    fn grid(region: &impl Region, f: impl Fn(Vertex) -> Label) -> LabelGrid {
        let sites = Arc::new(Sites::new(region));
        let labels = sites.vertices().iter().map(|&w| f(w)).collect();
        LabelGrid::from_labels(sites, labels).unwrap()
    }

    #[test]
    fn single_site_labels() {
        let o = BoxRegion::centered(0);
        for (h, expect) in [(0.0, Label::Zero), (5.0, Label::Plus), (-5.0, Label::Minus)] {
            let f = FieldSample::from_values(&o, |_| h);
            assert_eq!(labels(&f, &o).unwrap().label(ORIGIN), Some(expect));
        }
    }

    #[test]
    fn forbidden_pattern_is_an_invariant_violation() {
        let o = BoxRegion::centered(0);
        let f = FieldSample::from_values(&o, |_| 5.0);
        let sites = Arc::new(Sites::new(&o));
        let opts = SolveOptions { fault: Some(Fault::FlipOne), ..Default::default() };
        let err = labeling(&f, &sites, opts).unwrap_err();
        assert!(err.is_invariant_violation());
    }

    #[test]
    fn brute_force_backend_agrees() {
        let b = BoxRegion::centered(1);
        let sites = Arc::new(Sites::new(&b));
        for index in 0..50 {
            let f = sample_field(&b, 1.0, 4, index).unwrap();
            let a = labeling(&f, &sites, SolveOptions::default()).unwrap();
            let opts = SolveOptions { backend: Backend::BruteForce, fault: None };
            let c = labeling(&f, &sites, opts).unwrap();
            assert_eq!(a.grid, c.grid);
        }
    }

    #[test]
    fn disagreement_set_examples() {
        let b = BoxRegion::centered(2);
        let all_plus = grid(&b, |_| Label::Plus);
        assert!(disagreement_set(&all_plus).is_empty());

        let o = BoxRegion::centered(0);
        let c = disagreement_set(&grid(&o, |_| Label::Zero));
        assert_eq!((c.len(), c.component_count()), (1, 1));

        let checker = grid(&b, |w| if (w.x + w.y) % 2 == 0 { Label::Zero } else { Label::Minus });
        let c = disagreement_set(&checker);
        assert_eq!(c.len(), 13);
        assert_eq!(c.component_count(), 13);
    }

    #[test]
    fn common_disagreement_examples() {
        let b = BoxRegion::centered(3);
        let ell: VertexSet = [v(-2, 0), v(-1, 0), v(0, 0), v(1, 0), v(-2, 1), v(-2, 2)].into_iter().collect();
        let bar: VertexSet = [v(-2, 0), v(-2, 1), v(-2, 2), v(1, 0), v(1, 1)].into_iter().collect();
        let as_grid = |s: &VertexSet| grid(&b, |w| if s.contains(w) { Label::Zero } else { Label::Plus });
        let a = disagreement_set(&as_grid(&ell));
        let c = disagreement_set(&as_grid(&bar));
        assert_eq!(a.component_count(), 1);
        assert_eq!(c.component_count(), 2);

        assert_eq!(common_disagreement(&a, &a).unwrap(), a);
        let both = common_disagreement(&a, &c).unwrap();
        let expect: VertexSet = [v(-2, 0), v(-2, 1), v(-2, 2), v(1, 0)].into_iter().collect();
        assert_eq!(both.members(), expect);
        assert_eq!(both.component_count(), 2);

        let none: VertexSet = [v(3, 3)].into_iter().collect();
        assert!(common_disagreement(&a, &disagreement_set(&as_grid(&none))).unwrap().is_empty());

        let other = disagreement_set(&grid(&BoxRegion::centered(2), |_| Label::Zero));
        assert!(matches!(common_disagreement(&a, &other), Err(Error::RegionMismatch(_))));
    }

    #[test]
    fn edge_partition_examples() {
        let o: VertexSet = [ORIGIN].into_iter().collect();
        let plus_ring = grid(&BoxRegion::centered(1), |w| if w == ORIGIN { Label::Zero } else { Label::Plus });
        let p = boundary_edge_partition(&o, &plus_ring, Boundary::Minus).unwrap();
        assert_eq!((p.plus, p.minus, p.zero), (4, 0, 0));

        let lone = grid(&BoxRegion::centered(0), |_| Label::Zero);
        let p = boundary_edge_partition(&o, &lone, Boundary::Plus).unwrap();
        assert_eq!((p.plus, p.minus, p.zero), (4, 0, 0));

        // Domino {(0,0),(1,0)} in a 3x3 box anchored at (-1,-1): outside
        // neighbours are (-1,0)=minus, (0,1)=zero, (0,-1)=plus, (1,1)=plus,
        // (1,-1)=minus and (2,0) on the outer boundary.
        let b = BoxRegion::new(v(0, 0), 1);
        let lg = grid(&b, |w| match (w.x, w.y) {
            (0, 0) | (1, 0) | (0, 1) => Label::Zero,
            (-1, 0) | (1, -1) => Label::Minus,
            _ => Label::Plus,
        });
        let domino: VertexSet = [v(0, 0), v(1, 0)].into_iter().collect();
        let p = boundary_edge_partition(&domino, &lg, Boundary::Minus).unwrap();
        assert_eq!((p.plus, p.minus, p.zero), (2, 3, 1));
        assert_eq!(p.total(), 6);
        let p = boundary_edge_partition(&domino, &lg, Boundary::Plus).unwrap();
        assert_eq!((p.plus, p.minus, p.zero), (3, 2, 1));
    }

    #[test]
    fn flip_energy_of_a_lone_zero_site() {
        let o = BoxRegion::centered(0);
        let f = FieldSample::from_values(&o, |_| 0.0);
        let lg = labels(&f, &o).unwrap();
        let s: VertexSet = [ORIGIN].into_iter().collect();
        assert_eq!(flip_energy_delta(&s, &f, &lg, Boundary::Plus).unwrap(), 4.0);
        assert_eq!(flip_energy_delta(&s, &f, &lg, Boundary::Minus).unwrap(), 4.0);
    }

    #[test]
    fn flip_energy_requires_zero_labels() {
        let o = BoxRegion::centered(0);
        let f = FieldSample::from_values(&o, |_| 9.0);
        let lg = labels(&f, &o).unwrap();
        let s: VertexSet = [ORIGIN].into_iter().collect();
        assert!(matches!(
            flip_energy_delta(&s, &f, &lg, Boundary::Plus),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn negative_flip_energy_is_flagged() {
        // A hand-made labeling that is not a ground state: zero at the origin
        // with a strongly negative field.
        let o = BoxRegion::centered(0);
        let f = FieldSample::from_values(&o, |_| -10.0);
        let lg = grid(&o, |_| Label::Zero);
        assert!(check_stability(&f, &lg).unwrap_err().is_invariant_violation());
    }

    #[test]
    fn stability_holds_on_random_samples() {
        let b = BoxRegion::centered(2);
        for index in 0..100 {
            let f = sample_field(&b, 0.8, 21, index).unwrap();
            let lg = labels(&f, &b).unwrap();
            check_stability(&f, &lg).unwrap();
        }
    }

    #[test]
    fn global_shift_moves_labels_up() {
        let b = BoxRegion::centered(6);
        let mut total = Transitions::default();
        for index in 0..30 {
            let f = sample_field(&b, 1.0, 8, index).unwrap();
            let g = f.perturb(&PerturbationSpec::GlobalShift { delta: 0.3 }).unwrap();
            let t = transitions(&labels(&f, &b).unwrap(), &labels(&g, &b).unwrap()).unwrap();
            assert!(t.is_monotone_up());
            total.merge(&t);
        }
        assert!(total.get(Label::Zero, Label::Plus) > 0 || total.get(Label::Minus, Label::Zero) > 0);
    }

    #[test]
    fn nested_boxes_shrink_the_disagreement_set() {
        let outer = BoxRegion::centered(8);
        let inner = BoxRegion::centered(3);
        for index in 0..30 {
            let f = sample_field(&outer, 1.0, 13, index).unwrap();
            let big = disagreement_set(&labels(&f, &outer).unwrap()).members();
            let small = disagreement_set(&labels(&f, &inner).unwrap()).members();
            assert!(big.restrict(&inner).is_subset(&small));
        }
    }

    #[test]
    fn label_dump() {
        let b = BoxRegion::centered(1);
        let lg = grid(&b, |w| match w.y {
            -1 => Label::Minus,
            0 => Label::Zero,
            _ => Label::Plus,
        });
        let mut buf = Vec::new();
        lg.dump(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "---\n000\n+++\n");
    }
}

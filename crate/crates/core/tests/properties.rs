use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use rfim_core::disagreement::{
    common_disagreement, disagreement_set, labeling, labels, transitions, Label, SolveOptions,
};
use rfim_core::disorder::{sample_field, FieldSample, PerturbationSpec};
use rfim_core::groundstate::{ground_state_bruteforce, hamiltonian, solve, Boundary};
use rfim_core::lattice::{BoxRegion, Region, Sites, Vertex, VertexSet};

/// A subset of the 5x5 box picked by `mask`, capped so brute force stays cheap.
fn region_from(mask: &[bool]) -> VertexSet {
    let mut set = VertexSet::new();
    for (i, v) in BoxRegion::centered(2).vertices().into_iter().enumerate() {
        if mask[i] && set.len() < 14 {
            set.insert(v);
        }
    }
    if set.is_empty() {
        set.insert(Vertex::new(0, 0));
    }
    set
}

fn coarse_field(region: &VertexSet, steps: &[i8]) -> FieldSample {
    let vs = region.vertices();
    FieldSample::from_values(region, |v| {
        let i = vs.iter().position(|&w| w == v).unwrap();
        f64::from(steps[i % steps.len()]) * 0.5
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn min_cut_extremes_match_exhaustive_search(
        mask in prop::collection::vec(any::<bool>(), 25),
        steps in prop::collection::vec(-6i8..=6, 1..16),
    ) {
        let region = region_from(&mask);
        let field = coarse_field(&region, &steps);
        for boundary in [Boundary::Plus, Boundary::Minus] {
            let sol = solve(&field, &region, boundary).unwrap();
            let brute = ground_state_bruteforce(&field, &region, boundary).unwrap();
            let e = hamiltonian(&brute, &field).unwrap();
            prop_assert!((hamiltonian(&sol.minimal, &field).unwrap() - e).abs() < 1e-9);
            prop_assert!((hamiltonian(&sol.maximal, &field).unwrap() - e).abs() < 1e-9);
            prop_assert_eq!(sol.maximal.spins(), brute.spins());
            prop_assert!(sol.minimal.plus_set().is_subset(&sol.maximal.plus_set()));
        }
    }

    #[test]
    fn plus_boundary_state_dominates_minus_boundary_state(
        n in 1u32..7, eps in 0.2f64..5.0, seed in any::<u64>(), index in 0u64..1000,
    ) {
        let region = BoxRegion::centered(n);
        let field = sample_field(&region, eps, seed, index).unwrap();
        let l = labeling(&field, &Arc::new(Sites::new(&region)), SolveOptions::default()).unwrap();
        for (p, m) in l.plus.spins().iter().zip(l.minus.spins()) {
            prop_assert!(p >= m);
        }
        let zeros = l.grid.count(Label::Zero);
        prop_assert_eq!(zeros, disagreement_set(&l.grid).len());
    }

    #[test]
    fn raising_the_field_never_lowers_a_label(
        n in 1u32..7, eps in 0.2f64..5.0, seed in any::<u64>(), delta in 0.001f64..2.0,
        bumps in prop::collection::btree_map((-6i32..=6, -6i32..=6), 0.0f64..1.5, 0..12),
    ) {
        let region = BoxRegion::centered(n);
        let field = sample_field(&region, eps, seed, 0).unwrap();
        let before = labels(&field, &region).unwrap();

        let global = field.perturb(&PerturbationSpec::GlobalShift { delta }).unwrap();
        prop_assert!(transitions(&before, &labels(&global, &region).unwrap()).unwrap().is_monotone_up());

        let shifts: BTreeMap<Vertex, f64> = bumps
            .into_iter()
            .map(|((x, y), s)| (Vertex::new(x, y), s))
            .filter(|(v, _)| region.contains(*v))
            .collect();
        let local = field.perturb(&PerturbationSpec::Pointwise { shifts }).unwrap();
        prop_assert!(transitions(&before, &labels(&local, &region).unwrap()).unwrap().is_monotone_up());
    }

    #[test]
    fn disagreement_shrinks_as_the_domain_grows(
        inner in 0u32..5, extra in 1u32..5, eps in 0.2f64..5.0, seed in any::<u64>(),
    ) {
        let small = BoxRegion::centered(inner);
        let big = BoxRegion::centered(inner + extra);
        let field = sample_field(&big, eps, seed, 3).unwrap();
        let d_big = disagreement_set(&labels(&field, &big).unwrap()).members();
        let d_small = disagreement_set(&labels(&field, &small).unwrap()).members();
        prop_assert!(d_big.intersection(&small.vertices().into_iter().collect()).is_subset(&d_small));
    }

    #[test]
    fn common_disagreement_lies_in_both_sets(
        n in 1u32..7, eps in 0.2f64..5.0, seed in any::<u64>(), delta in 0.001f64..2.0,
    ) {
        let region = BoxRegion::centered(n);
        let field = sample_field(&region, eps, seed, 1).unwrap();
        let shifted = field.perturb(&PerturbationSpec::GlobalShift { delta }).unwrap();
        let a = disagreement_set(&labels(&field, &region).unwrap());
        let b = disagreement_set(&labels(&shifted, &region).unwrap());
        let c = common_disagreement(&a, &b).unwrap().members();
        prop_assert!(c.is_subset(&a.members()));
        prop_assert!(c.is_subset(&b.members()));
        prop_assert_eq!(c, a.members().intersection(&b.members()));
    }
}

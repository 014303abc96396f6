//! Property suites for the structural invariants: the cycle-space oracle for
//! rho, transversal closures, cut conservation laws, and classification
//! determinism.

use molecule::features::{is_transversal, x_closure};
use molecule::{classify_elementary, cut, CutMode, HistoryBuilder, Molecule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeSet;

fn random_molecule(seed: u64, max_lines: usize, max_atoms: usize) -> Molecule {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let lines = rng.random_range(2..=max_lines.max(2));
    let n = rng.random_range(1..=max_atoms.max(1));
    let mut b = HistoryBuilder::new(lines);
    for _ in 0..n {
        let a = rng.random_range(0..lines);
        let mut c = rng.random_range(0..lines);
        while c == a {
            c = rng.random_range(0..lines);
        }
        b.push(a, c, 1);
    }
    b.build()
}

/// Independent oracle for the cycle rank: count non-tree bonds discovered by
/// an explicit spanning-forest construction over the subgraph.
fn cycle_space_dimension(m: &Molecule, set: &BTreeSet<u32>) -> i64 {
    let mut uf: std::collections::BTreeMap<u32, u32> =
        set.iter().map(|&a| (a, a)).collect();
    fn find(uf: &mut std::collections::BTreeMap<u32, u32>, a: u32) -> u32 {
        let p = uf[&a];
        if p == a {
            return a;
        }
        let r = find(uf, p);
        uf.insert(a, r);
        r
    }
    let mut extra = 0i64;
    for e in m.internal_bonds(set) {
        if let molecule::Edge::Bond { parent, child, .. } = m.edge(e).unwrap() {
            let (ra, rb) = (find(&mut uf, *parent), find(&mut uf, *child));
            if ra == rb {
                extra += 1;
            } else {
                uf.insert(ra, rb);
            }
        }
    }
    extra
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_equals_cycle_space_dimension(seed in 0u64..100_000) {
        let m = random_molecule(seed, 6, 12);
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xabcd);
        let subset: BTreeSet<u32> = m
            .atom_ids()
            .filter(|_| rng.random::<f64>() < 0.7)
            .collect();
        if subset.is_empty() {
            return Ok(());
        }
        prop_assert_eq!(m.rho(&subset), cycle_space_dimension(&m, &subset));
    }

    #[test]
    fn x_closure_preserves_connected_transversality(seed in 0u64..100_000) {
        let m = random_molecule(seed, 6, 10);
        // grow from the earliest atom (childless by construction)
        let Some(order) = m.topological_order() else { return Ok(()) };
        let Some(&seed_atom) = order.first() else { return Ok(()) };
        let Some(a) = molecule::features::grow_transversal(&m, seed_atom, 4) else {
            return Ok(());
        };
        if !is_transversal(&m, &a) || m.components(&a).len() != 1 {
            return Ok(());
        }
        let x = x_closure(&m, &a);
        let union: BTreeSet<u32> = a.union(&x).copied().collect();
        prop_assert!(is_transversal(&m, &union), "X(A) ∪ A must stay transversal");
        prop_assert_eq!(m.components(&union).len(), 1, "X(A) ∪ A must stay connected");
        prop_assert!(molecule::features::x0(&m, &union).is_empty());
    }

    #[test]
    fn cut_conserves_atoms_and_edges(seed in 0u64..100_000) {
        let m = random_molecule(seed, 6, 12);
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x1234);
        let subset: BTreeSet<u32> = m
            .atom_ids()
            .filter(|_| rng.random::<f64>() < 0.5)
            .collect();
        if subset.is_empty() || subset.len() == m.atom_count() {
            return Ok(());
        }
        let out = cut(&m, &subset, CutMode::Free).unwrap();
        prop_assert_eq!(
            out.freed.atom_count() + out.rest.atom_count(),
            m.atom_count()
        );
        let before = m.internal_bonds(&m.all_atoms()).len();
        let after = out.freed.internal_bonds(&out.freed.all_atoms()).len()
            + out.rest.internal_bonds(&out.rest.all_atoms()).len();
        prop_assert_eq!(before, after + out.pairs.len());
        // both sides remain structurally valid
        prop_assert!(out.freed.validate().is_empty());
        prop_assert!(out.rest.validate().is_empty());
    }

    #[test]
    fn classification_is_total_and_stable(seed in 0u64..100_000) {
        let m = random_molecule(seed, 5, 3);
        // classification never panics and is deterministic
        let k1 = classify_elementary(&m);
        let k2 = classify_elementary(&m);
        prop_assert_eq!(k1, k2);
        // a no-op cut (everything as free) leaves classification unchanged
        let out = cut(&m, &m.all_atoms(), CutMode::Free).unwrap();
        prop_assert_eq!(classify_elementary(&out.freed), k1);
    }

    #[test]
    fn particle_line_count_equals_bottom_ends(seed in 0u64..100_000) {
        let m = random_molecule(seed, 7, 14);
        let lines = m.particle_lines().unwrap();
        let bottom_ends = m
            .edges_iter()
            .filter(|(_, e)| {
                matches!(
                    e,
                    molecule::Edge::End {
                        dir: molecule::EndDir::Bottom,
                        ..
                    }
                )
            })
            .count();
        prop_assert_eq!(lines.len(), bottom_ends);
    }
}

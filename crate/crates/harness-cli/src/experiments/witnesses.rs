//! Constructed witness molecules shared by the cutting campaigns and the
//! ledger-arithmetic suite.

use molecule::{HistoryBuilder, Molecule, Restriction};
use std::collections::BTreeSet;

/// The tents-over-a-path witness: a path of `4k + 4` atoms with `k` tent
/// atoms above it, each bonded to two path atoms. The path is a connected
/// transversal tree with `|X_0^+| = k`, so TRANSUP certifies at least
/// `k/2 - 1` {33A} components.
pub fn tents_witness(tents: usize) -> (Molecule, BTreeSet<u32>) {
    let path = 4 * tents + 4;
    let lines = path + 1;
    let mut b = HistoryBuilder::new(lines);
    for i in 0..path {
        b.push(i, i + 1, 1);
    }
    for j in 0..tents {
        b.push(4 * j, 4 * j + 2, 1);
    }
    let m = b.build();
    let a: BTreeSet<u32> = (0..path as u32).collect();
    (m, a)
}

/// The terminal six-line two-layer witness (two triangles per layer plus
/// the joining atoms), with the cross long bonds attached.
pub fn terminal_two_layer_witness() -> (Molecule, BTreeSet<u32>) {
    let mut b = HistoryBuilder::new(6);
    for &(x, y) in &[
        (3usize, 2usize),
        (0, 5),
        (3, 5),
        (0, 3),
        (2, 4),
        (1, 2),
        (1, 4),
    ] {
        b.push(x, y, 1);
    }
    for &(x, y) in &[(0usize, 1usize), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (0, 3)] {
        b.push(x, y, 2);
    }
    let mut m = b.build();
    let upper: BTreeSet<u32> = (7..=13).collect();
    cutting_algorithms::twolayer::insert_ud_long_bonds(&mut m, &upper);
    (m, upper)
}

/// Triangle with a long bond and no common child, over a five-cycle that
/// supplies the second gain.
pub fn triangle_witness() -> (Molecule, [u32; 3]) {
    let mut b = HistoryBuilder::new(5);
    for &(x, y) in &[
        (3usize, 4usize),
        (0, 3),
        (1, 4),
        (0, 2),
        (1, 2),
        (1, 3),
        (0, 1),
        (1, 2),
        (0, 2),
    ] {
        b.push(x, y, 1);
    }
    let mut m = b.build();
    m.restrictions.push(Restriction::LongBond { a: 7, b: 6 });
    (m, [6, 7, 8])
}

/// Triangle whose mid and bottom atoms share a child: the {334T} branches.
pub fn triangle_334t_witness() -> (Molecule, [u32; 3]) {
    let mut b = HistoryBuilder::new(5);
    for &(x, y) in &[
        (3usize, 4usize),
        (0, 3),
        (1, 4),
        (0, 2),
        (1, 2),
        (0, 1),
        (1, 2),
        (0, 2),
    ] {
        b.push(x, y, 1);
    }
    let mut m = b.build();
    m.restrictions.push(Restriction::LongBond { a: 6, b: 5 });
    (m, [5, 6, 7])
}

/// A double-bond molecule routed through the master's simple case 2.
pub fn double_bond_witness(seed: u64) -> Molecule {
    cutting_algorithms::random_molecule(
        &cutting_algorithms::GeneratorParams {
            atoms: 12,
            gamma: 4,
            layers: 1,
            force_double_bond: true,
            force_long_bond_triangle: false,
            forbid_double_bond: false,
        },
        seed,
    )
    .expect("double-bond witness")
}

/// A strongly degenerate primitive pair routed through simple case 1.
pub fn strong_degeneracy_witness(seed: u64) -> Molecule {
    let mut m = cutting_algorithms::random_molecule(
        &cutting_algorithms::GeneratorParams {
            atoms: 12,
            gamma: 4,
            layers: 1,
            force_double_bond: false,
            force_long_bond_triangle: false,
            forbid_double_bond: true,
        },
        seed,
    )
    .expect("witness molecule");
    let mut pair = None;
    'outer: for a in m.atom_ids() {
        for c in m.children(a).unwrap_or_default() {
            if molecule::features::is_primitive(&m, a, c) {
                pair = Some((a, c));
                break 'outer;
            }
        }
    }
    let (p, c) = pair.expect("primitive pair");
    cutting_algorithms::master::attach_strong_degeneracy(&mut m, p, c);
    m
}

//! Cutting: graph surgery replacing every bond across the boundary of an
//! atom set by a paired free end (on the freed side) and fixed end (on the
//! remainder), plus the recursive `≺_cut` ordering of the components
//! produced by a cutting sequence.

use crate::{
    AtomId, Edge, EdgeId, EndDir, EndStatus, Molecule, MoleculeError, Result,
};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutMode {
    Free,
    Fixed,
}

/// One bond replaced by a (free, fixed) end pair; downstream variable
/// identification flows through this record (the fixed end carries the value
/// of the paired free end).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndPairing {
    pub free_end: EdgeId,
    pub fixed_end: EdgeId,
    pub original_bond: EdgeId,
    pub free_at: AtomId,
    pub fixed_at: AtomId,
}

#[derive(Debug, Clone)]
pub struct CutOutput {
    /// The side cut as free (contains the free ends of every pairing).
    pub freed: Molecule,
    /// The remainder (fixed ends).
    pub rest: Molecule,
    pub pairs: Vec<EndPairing>,
}

/// Cuts `set` out of `m`. In `Free` mode the set itself is freed; cutting as
/// fixed is the same as cutting the complement as free.
pub fn cut(m: &Molecule, set: &BTreeSet<AtomId>, mode: CutMode) -> Result<CutOutput> {
    let all = m.all_atoms();
    if set.is_empty() || !set.is_subset(&all) {
        return Err(MoleculeError::BadCutSet);
    }
    let freed_set: BTreeSet<AtomId> = match mode {
        CutMode::Free => set.clone(),
        CutMode::Fixed => all.difference(set).copied().collect(),
    };
    if freed_set.is_empty() {
        // cutting everything as free leaves the molecule unchanged
        return Ok(CutOutput {
            freed: m.clone(),
            rest: Molecule::default(),
            pairs: Vec::new(),
        });
    }
    let mut work = m.clone();
    let pairs = sever_boundary(&mut work, &freed_set)?;
    let rest_set: BTreeSet<AtomId> = all.difference(&freed_set).copied().collect();
    let freed = work.restricted_to(&freed_set);
    let rest = work.restricted_to(&rest_set);
    Ok(CutOutput { freed, rest, pairs })
}

/// Replaces every bond between `freed` and its complement by a free end on
/// the `freed` side and a fixed end on the other, in place.
pub(crate) fn sever_boundary(
    m: &mut Molecule,
    freed: &BTreeSet<AtomId>,
) -> Result<Vec<EndPairing>> {
    // scan only the freed atoms' slots: every boundary bond touches one
    let mut boundary: Vec<(EdgeId, AtomId, u8, AtomId, u8, bool)> = Vec::new();
    let mut seen: BTreeSet<EdgeId> = BTreeSet::new();
    for &a in freed {
        for e in m.slots(a)? {
            if let Edge::Bond {
                parent,
                p_slot,
                child,
                c_slot,
            } = *m.edge(e)?
            {
                let pin = freed.contains(&parent);
                let cin = freed.contains(&child);
                if pin != cin && seen.insert(e) {
                    if pin {
                        boundary.push((e, parent, p_slot, child, c_slot, true));
                    } else {
                        boundary.push((e, child, c_slot, parent, p_slot, false));
                    }
                }
            }
        }
    }
    boundary.sort_unstable_by_key(|b| b.0);

    let mut pairs = Vec::with_capacity(boundary.len());
    for (bond, f_at, f_slot, x_at, x_slot, freed_is_parent) in boundary {
        // The bond sits in the parent's bottom slot and the child's top slot.
        let (f_dir, x_dir) = if freed_is_parent {
            (EndDir::Bottom, EndDir::Top)
        } else {
            (EndDir::Top, EndDir::Bottom)
        };
        let free_end = m.alloc_edge(Edge::End {
            at: f_at,
            slot: f_slot,
            dir: f_dir,
            status: EndStatus::Free,
        });
        let fixed_end = m.alloc_edge(Edge::End {
            at: x_at,
            slot: x_slot,
            dir: x_dir,
            status: EndStatus::Fixed,
        });
        // rewire slots
        {
            let fa = m.atoms.get_mut(&f_at).ok_or(MoleculeError::MissingAtom(f_at))?;
            match f_dir {
                EndDir::Top => fa.top[f_slot as usize] = free_end,
                EndDir::Bottom => fa.bot[f_slot as usize] = free_end,
            }
        }
        {
            let xa = m.atoms.get_mut(&x_at).ok_or(MoleculeError::MissingAtom(x_at))?;
            match x_dir {
                EndDir::Top => xa.top[x_slot as usize] = fixed_end,
                EndDir::Bottom => xa.bot[x_slot as usize] = fixed_end,
            }
        }
        m.edges.insert(
            bond,
            Edge::Replaced {
                by_free: free_end,
                by_fixed: fixed_end,
            },
        );
        pairs.push(EndPairing {
            free_end,
            fixed_end,
            original_bond: bond,
            free_at: f_at,
            fixed_at: x_at,
        });
    }
    Ok(pairs)
}

/// Extracts the sub-molecule on `set`: the atoms, every edge at their
/// slots, and the restrictions. Bonds leaving `set` must already be severed.
pub fn extract(m: &Molecule, set: &BTreeSet<AtomId>) -> Molecule {
    let mut out = Molecule::default();
    for &a in set {
        if let Ok(atom) = m.atom(a) {
            out.atoms.insert(a, atom.clone());
            for e in [atom.top[0], atom.top[1], atom.bot[0], atom.bot[1]] {
                if let Ok(edge) = m.edge(e) {
                    let keep = match edge {
                        Edge::Bond { parent, child, .. } => {
                            set.contains(parent) && set.contains(child)
                        }
                        Edge::End { at, .. } => set.contains(at),
                        Edge::Replaced { .. } => false,
                    };
                    if keep {
                        out.edges.insert(e, *edge);
                        out.next_edge = out.next_edge.max(e + 1);
                    }
                }
            }
        }
    }
    out.restrictions = m.restrictions.clone();
    out.time_order = if m.time_order.len() == m.atoms.len() {
        m.time_order
            .iter()
            .copied()
            .filter(|a| set.contains(a))
            .collect()
    } else {
        Vec::new()
    };
    out
}

/// A cutting sequence applied to one molecule, maintaining the `≺_cut`
/// ordering of the resulting components via a binary zone tree: each cut
/// splits the zone holding the cut set into (freed, rest), with the freed
/// side ordered first; the final order is the depth-first flattening.
#[derive(Debug, Clone)]
pub struct CutSequence {
    mol: Molecule,
    /// Zone tree nodes: children = Some((freed, rest)) after a split.
    nodes: Vec<ZoneNode>,
    /// Direct zone assignment; atoms not re-pointed live on the rest-branch
    /// of whatever node they point at.
    atom_node: BTreeMap<AtomId, usize>,
    pairings: Vec<EndPairing>,
    cuts: Vec<CutRecord>,
}

#[derive(Debug, Clone)]
struct ZoneNode {
    children: Option<(usize, usize)>,
    sealed: bool,
}

#[derive(Debug, Clone)]
pub struct CutRecord {
    pub atoms: BTreeSet<AtomId>,
    pub mode: CutMode,
}

impl CutSequence {
    pub fn new(m: Molecule) -> Self {
        let atom_node = m.atom_ids().map(|a| (a, 0)).collect();
        Self {
            mol: m,
            nodes: vec![ZoneNode {
                children: None,
                sealed: false,
            }],
            atom_node,
            pairings: Vec::new(),
            cuts: Vec::new(),
        }
    }

    pub fn molecule(&self) -> &Molecule {
        &self.mol
    }

    pub fn pairings(&self) -> &[EndPairing] {
        &self.pairings
    }

    pub fn cuts(&self) -> &[CutRecord] {
        &self.cuts
    }

    /// Current leaf zone of an atom (following rest-branches for atoms never
    /// re-pointed).
    fn leaf_of(&self, a: AtomId) -> usize {
        let mut n = self.atom_node[&a];
        while let Some((_, rest)) = self.nodes[n].children {
            n = rest;
        }
        n
    }

    /// Leaf lookup with path compression (used on the mutating path).
    fn leaf_of_mut(&mut self, a: AtomId) -> usize {
        let leaf = self.leaf_of(a);
        self.atom_node.insert(a, leaf);
        leaf
    }

    /// Cuts `atoms` as free out of the zone containing them. All atoms must
    /// share one unsealed leaf zone. Returns the freed zone id.
    pub fn cut_free(&mut self, atoms: &BTreeSet<AtomId>) -> Result<usize> {
        if atoms.is_empty() {
            return Err(MoleculeError::BadCutSet);
        }
        let mut leaf = None;
        for &a in atoms {
            let l = self.leaf_of_mut(a);
            if *leaf.get_or_insert(l) != l {
                return Err(MoleculeError::BadCutSet);
            }
        }
        let leaf = leaf.unwrap();
        if self.nodes[leaf].sealed {
            return Err(MoleculeError::BadCutSet);
        }
        let pairs = sever_boundary(&mut self.mol, atoms)?;
        self.pairings.extend(pairs);
        let freed_node = self.nodes.len();
        self.nodes.push(ZoneNode {
            children: None,
            sealed: false,
        });
        let rest_node = self.nodes.len();
        self.nodes.push(ZoneNode {
            children: None,
            sealed: false,
        });
        self.nodes[leaf].children = Some((freed_node, rest_node));
        for &a in atoms {
            self.atom_node.insert(a, freed_node);
        }
        self.cuts.push(CutRecord {
            atoms: atoms.clone(),
            mode: CutMode::Free,
        });
        Ok(freed_node)
    }

    /// Cuts `atoms` as fixed: the complement within their zone is cut as
    /// free. Returns the freed (complement) zone id.
    pub fn cut_fixed(&mut self, atoms: &BTreeSet<AtomId>) -> Result<usize> {
        if atoms.is_empty() {
            return Err(MoleculeError::BadCutSet);
        }
        let leaf = self.leaf_of(*atoms.iter().next().unwrap());
        let zone_atoms = self.zone_atoms(leaf);
        let complement: BTreeSet<AtomId> =
            zone_atoms.difference(atoms).copied().collect();
        if complement.is_empty() {
            return Err(MoleculeError::BadCutSet);
        }
        let id = self.cut_free(&complement)?;
        self.cuts.last_mut().unwrap().mode = CutMode::Fixed;
        Ok(id)
    }

    /// Marks a zone as a finished (protected) component.
    pub fn seal(&mut self, zone: usize) {
        self.nodes[zone].sealed = true;
    }

    /// Atoms currently in a leaf zone.
    pub fn zone_atoms(&self, zone: usize) -> BTreeSet<AtomId> {
        self.mol
            .atom_ids()
            .filter(|&a| self.leaf_of(a) == zone)
            .collect()
    }

    /// Leaf zones in `≺_cut` order together with their atom sets.
    pub fn ordered_components(&self) -> Vec<(usize, BTreeSet<AtomId>)> {
        // memoized rest-chain resolution (children have larger indices)
        let mut rest_leaf: Vec<usize> = (0..self.nodes.len()).collect();
        for n in (0..self.nodes.len()).rev() {
            if let Some((_, rest)) = self.nodes[n].children {
                rest_leaf[n] = rest_leaf[rest];
            }
        }
        let mut by_leaf: BTreeMap<usize, BTreeSet<AtomId>> = BTreeMap::new();
        for a in self.mol.atom_ids() {
            by_leaf
                .entry(rest_leaf[self.atom_node[&a]])
                .or_default()
                .insert(a);
        }
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            match self.nodes[n].children {
                Some((freed, rest)) => {
                    // depth-first, freed side first
                    stack.push(rest);
                    stack.push(freed);
                }
                None => {
                    if let Some(set) = by_leaf.get(&n) {
                        out.push((n, set.clone()));
                    }
                }
            }
        }
        out
    }

    /// The sub-molecule of a leaf zone (live edges only), extracted without
    /// cloning the full molecule.
    pub fn zone_molecule(&self, zone: usize) -> Molecule {
        extract(&self.mol, &self.zone_atoms(zone))
    }

    /// Resolves a fixed end to the free end it was paired with.
    pub fn paired_free_end(&self, fixed: EdgeId) -> Option<EdgeId> {
        self.pairings
            .iter()
            .find(|p| p.fixed_end == fixed)
            .map(|p| p.free_end)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::HistoryBuilder;
    use crate::{EndDir, EndStatus};

    fn two_atom_molecule() -> Molecule {
        // lines 0,1,2: collisions (0,1) then (1,2): single bond between
        // atoms 0 (child) and 1 (parent).
        HistoryBuilder::new(3).collide(0, 1).collide(1, 2).build()
    }

    #[test]
    fn cut_everything_as_free_is_identity() {
        let m = two_atom_molecule();
        let out = cut(&m, &m.all_atoms(), CutMode::Free).unwrap();
        assert!(out.pairs.is_empty());
        assert_eq!(out.freed.atom_count(), 2);
        assert_eq!(out.rest.atom_count(), 0);
    }

    #[test]
    fn single_bond_cut_creates_one_pairing() {
        let m = two_atom_molecule();
        let n1: BTreeSet<_> = [1].into();
        let out = cut(&m, &n1, CutMode::Free).unwrap();
        assert_eq!(out.pairs.len(), 1);
        let p = out.pairs[0];
        assert_eq!(p.free_at, 1);
        assert_eq!(p.fixed_at, 0);
        // atom 1 was the parent: its new free end is a bottom end
        match out.freed.edge(p.free_end).unwrap() {
            Edge::End { dir, status, .. } => {
                assert_eq!(*dir, EndDir::Bottom);
                assert_eq!(*status, EndStatus::Free);
            }
            _ => panic!("expected end"),
        }
        match out.rest.edge(p.fixed_end).unwrap() {
            Edge::End { dir, status, .. } => {
                assert_eq!(*dir, EndDir::Top);
                assert_eq!(*status, EndStatus::Fixed);
            }
            _ => panic!("expected end"),
        }
        // degrees: freed atom keeps deg 4, fixed side drops to 3
        assert_eq!(out.freed.degree(1).unwrap(), 4);
        assert_eq!(out.rest.degree(0).unwrap(), 3);
    }

    #[test]
    fn cut_as_fixed_equals_cutting_complement_as_free() {
        let m = two_atom_molecule();
        let n0: BTreeSet<_> = [0].into();
        let n1: BTreeSet<_> = [1].into();
        let a = cut(&m, &n0, CutMode::Fixed).unwrap();
        let b = cut(&m, &n1, CutMode::Free).unwrap();
        assert_eq!(a.freed.all_atoms(), b.freed.all_atoms());
        assert_eq!(a.pairs.len(), b.pairs.len());
        assert_eq!(a.pairs[0].free_at, b.pairs[0].free_at);
    }

    #[test]
    fn cut_preserves_atom_count_and_edge_multiset() {
        let m = HistoryBuilder::new(4)
            .collide(0, 1)
            .collide(1, 2)
            .collide(2, 3)
            .build();
        let set: BTreeSet<_> = [0, 2].into();
        let out = cut(&m, &set, CutMode::Free).unwrap();
        assert_eq!(
            out.freed.atom_count() + out.rest.atom_count(),
            m.atom_count()
        );
        // every original bond either survives whole or is accounted by a pairing
        let original_bonds = m.internal_bonds(&m.all_atoms()).len();
        let surviving = out.freed.internal_bonds(&out.freed.all_atoms()).len()
            + out.rest.internal_bonds(&out.rest.all_atoms()).len();
        assert_eq!(original_bonds, surviving + out.pairs.len());
    }

    #[test]
    fn ordering_single_cut_freed_precedes_rest() {
        let m = HistoryBuilder::new(4)
            .collide(0, 1)
            .collide(1, 2)
            .collide(2, 3)
            .build();
        let mut seq = CutSequence::new(m);
        let z = seq.cut_free(&[1].into()).unwrap();
        seq.seal(z);
        let comps = seq.ordered_components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].1, [1].into());
        assert_eq!(comps[1].1, [0, 2].into());
    }

    #[test]
    fn ordering_three_sequential_single_cuts_matches_cut_order() {
        let m = HistoryBuilder::new(5)
            .collide(0, 1)
            .collide(1, 2)
            .collide(2, 3)
            .collide(3, 4)
            .build();
        let mut seq = CutSequence::new(m);
        for a in [2u32, 0, 3] {
            let z = seq.cut_free(&[a].into()).unwrap();
            seq.seal(z);
        }
        let comps = seq.ordered_components();
        let order: Vec<BTreeSet<AtomId>> = comps.into_iter().map(|(_, s)| s).collect();
        assert_eq!(order[0], [2].into());
        assert_eq!(order[1], [0].into());
        assert_eq!(order[2], [3].into());
        assert_eq!(order[3], [1].into());
    }

    #[test]
    fn no_cuts_single_trivial_component() {
        let m = two_atom_molecule();
        let seq = CutSequence::new(m);
        let comps = seq.ordered_components();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].1.len(), 2);
    }
}
